"""Loop-based reference implementations used as test oracles."""
import math


def brute_tau(values, r, C):
    """Exhaustive scan over (interval, n) on a list-of-lists stack with horizon 1.

    Returns ``(hit, tau_hat, n_star)``.
    """
    depth = len(values) - 1
    steps = len(values[0]) - 1
    dt = 1.0 / steps
    for i in range(steps):
        t_right = (i + 1) * dt
        if not t_right > r + 1e-9 * dt:
            continue
        bar = C * math.sqrt(max(1.0 - t_right, 0.0))
        for n in range(1, depth + 1):
            a, b = values[n][i], values[n][i + 1]
            if a * b > 0:
                continue
            far = all(abs(values[k][i]) > bar and abs(values[k][i + 1]) > bar
                      for k in range(n))
            if far:
                return True, (1.0 if i + 1 == steps else t_right), n
    return False, 1.0, None
