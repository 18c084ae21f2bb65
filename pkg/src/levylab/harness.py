"""Config-driven experiment runs with byte-stable CSV output."""
from __future__ import annotations

import csv
import hashlib
import io
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path as FsPath
from typing import Dict, List, Optional, Tuple

import numpy as np

from .estimators import (estimate_sign_covariances, estimate_sup_tail, estimate_tau_scan,
                         ks_test, mixing_bound_check, sign_cov_closed_form,
                         sup_abs_tail_analytic, terminal_values)
from .grid_rng import SeedSpec, TimeGrid
from .parallel import DEFAULT_CHUNK
from .transform import default_eps

KINDS = ("validate", "tau-scan", "cov-decay", "sup-tail")
CSV_FIELDS = ("experiment", "label", "r", "C", "N", "n", "value", "std_error",
              "n_samples", "seed", "steps", "paths")

# validate thresholds
KS_ALPHA = 1e-3
QV_REL_TOL = 0.01


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "validate"
    horizon: float = 1.0
    steps: int = 4096
    paths: int = 10_000
    seed: int = 0
    depth: int = 5
    r: Tuple[float, ...] = (0.5,)
    C: Tuple[float, ...] = (2.0,)
    N: Tuple[int, ...] = ()
    n_max: int = 20
    eps: Optional[float] = None
    output: Optional[str] = None
    workers: int = 1
    chunk: int = DEFAULT_CHUNK

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    @property
    def seeds(self) -> SeedSpec:
        return SeedSpec(self.seed, self.kind)

    @property
    def resolved_eps(self) -> float:
        return default_eps(self.grid) if self.eps is None else self.eps

    @property
    def depths(self) -> Tuple[int, ...]:
        return self.N or (self.depth,)

    def echo(self) -> str:
        """Fully resolved config as key=value text. Scheduling knobs are omitted."""
        lines = []
        for f in fields(self):
            if f.name in ("workers", "output"):
                continue
            v = getattr(self, f.name)
            if f.name == "eps":
                v = self.resolved_eps
            if f.name == "N":
                v = self.depths
            lines.append(f"{f.name}={_fmt_value(v)}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.echo().encode("utf-8")).hexdigest()[:16]


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _parse_int(s):
    return int(s.replace("_", ""))


_PARSERS = {
    "kind": str,
    "horizon": _parse_float,
    "steps": _parse_int,
    "paths": _parse_int,
    "seed": _parse_int,
    "depth": _parse_int,
    "r": lambda s: tuple(_parse_float(x) for x in s.split(",")),
    "C": lambda s: tuple(_parse_float(x) for x in s.split(",")),
    "N": lambda s: tuple(_parse_int(x) for x in s.split(",")),
    "n_max": _parse_int,
    "eps": _parse_float,
    "output": str,
    "workers": _parse_int,
    "chunk": _parse_int,
}
_ALIASES = {"rs": "r", "Cs": "C", "Ns": "N"}


def parse_pairs(text: str, source: str = "<config>") -> Dict[str, object]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}; "
                              f"allowed: {', '.join(sorted(_PARSERS))}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: malformed value for {key!r}: {val!r}") from None
        values.setdefault("_lines", {})[key] = f"{source}:{lineno}"
    return values


def build_config(values: Dict[str, object]) -> ExperimentConfig:
    where = dict(values.pop("_lines", {}))
    cfg = ExperimentConfig(**values)

    def fail(key, msg):
        loc = where.get(key, "<config>")
        raise ConfigError(f"{loc}: {key}: {msg}")

    if cfg.kind not in KINDS:
        fail("kind", f"unknown kind {cfg.kind!r}; allowed: {', '.join(KINDS)}")
    if not cfg.horizon > 0:
        fail("horizon", "must be > 0")
    if cfg.steps < 1:
        fail("steps", "must be >= 1")
    if cfg.paths < 1:
        fail("paths", "must be >= 1")
    if not 0 <= cfg.seed < 2**64:
        fail("seed", "must be an unsigned 64-bit integer")
    if cfg.depth < 0:
        fail("depth", "must be >= 0")
    if cfg.n_max < 0:
        fail("n_max", "must be >= 0")
    if cfg.eps is not None and not cfg.eps > 0:
        fail("eps", "must be > 0")
    if cfg.workers < 1:
        fail("workers", "must be >= 1")
    if cfg.chunk < 1:
        fail("chunk", "must be >= 1")
    if any(n < 1 for n in cfg.N):
        fail("N", "every depth must be >= 1")
    if any(c <= 0 for c in cfg.C):
        fail("C", "every C must be > 0")
    if cfg.kind in ("tau-scan", "cov-decay"):
        if abs(cfg.horizon - 1.0) > 1e-12:
            fail("horizon", f"{cfg.kind} requires horizon = 1")
        if not cfg.r or any(not 0 < r < 1 for r in cfg.r):
            fail("r", "every r must lie in (0, 1)")
    if cfg.kind == "tau-scan" and min(cfg.depths) < 1:
        fail("depth", "tau-scan needs depth >= 1")
    if cfg.kind == "validate" and cfg.depth < 1:
        fail("depth", "validate needs depth >= 1")
    if cfg.kind == "sup-tail" and abs(cfg.horizon - 1.0) > 1e-12:
        fail("horizon", "sup-tail compares against the unit-horizon formula; use horizon = 1")
    return cfg


def load_config(text: str, overrides: Optional[List[str]] = None,
                source: str = "<config>") -> ExperimentConfig:
    """Parse flat ``key=value`` text; ``overrides`` (same syntax) win over the text."""
    values = parse_pairs(text, source)
    for i, item in enumerate(overrides or [], 1):
        extra = parse_pairs(item, f"--set#{i}")
        lines = {**values.get("_lines", {}), **extra.pop("_lines", {})}
        values.update(extra)
        values["_lines"] = lines
    return build_config(values)


@dataclass
class Row:
    experiment: str
    label: str
    value: float
    std_error: Optional[float] = None
    n_samples: Optional[int] = None
    r: Optional[float] = None
    C: Optional[float] = None
    N: Optional[int] = None
    n: Optional[int] = None

    def sort_key(self):
        def k(v):
            return (0, 0.0) if v is None else (1, v)
        return (self.label, k(self.r), k(self.C), k(self.N), k(self.n))


@dataclass
class ResultSet:
    config: ExperimentConfig
    rows: List[Row] = field(default_factory=list)
    wall_seconds: float = 0.0
    passed: Optional[bool] = None
    failures: List[str] = field(default_factory=list)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash

    def sorted_rows(self) -> List[Row]:
        return sorted(self.rows, key=Row.sort_key)

    def find(self, label, **params) -> List[Row]:
        return [row for row in self.rows if row.label == label
                and all(getattr(row, k) == v for k, v in params.items())]


def _est_row(kind, est, **params) -> Row:
    return Row(kind, est.label, est.value, est.std_error, est.n_samples, **params)


def _run_validate(cfg: ExperimentConfig, rs: ResultSet):
    terminal, qv = terminal_values(cfg.depth, cfg.paths, cfg.grid, cfg.seeds,
                                   cfg.workers, cfg.chunk)
    for n in range(1, cfg.depth + 1):
        d, p = ks_test(terminal[:, n], cfg.horizon)
        rs.rows.append(Row(cfg.kind, "ks_D", d, None, cfg.paths, n=n))
        rs.rows.append(Row(cfg.kind, "ks_p_value", p, None, cfg.paths, n=n))
        if not p > KS_ALPHA:
            rs.failures.append(f"ks_p_value n={n}: {p:.3g} <= {KS_ALPHA}")
    qv_mean = float(qv[:, 0].mean())
    qv_se = float(qv[:, 0].std(ddof=1) / math.sqrt(cfg.paths)) if cfg.paths > 1 else 0.0
    rs.rows.append(Row(cfg.kind, "qv_mean", qv_mean, qv_se, cfg.paths, n=0))
    if abs(qv_mean - cfg.horizon) > QV_REL_TOL * cfg.horizon:
        rs.failures.append(f"qv_mean: {qv_mean:.6g} outside horizon*(1 +- {QV_REL_TOL})")
    # increments of every iterate are +-1 multiples of the base increments
    qv_gap = float(abs(qv - qv[:, :1]).max() / cfg.horizon)
    rs.rows.append(Row(cfg.kind, "qv_iterate_max_rel_gap", qv_gap, None, cfg.paths))
    if qv_gap > 1e-9:
        rs.failures.append(f"qv_iterate_max_rel_gap: {qv_gap:.3g} > 1e-9")
    rs.passed = not rs.failures


def _run_tau_scan(cfg: ExperimentConfig, rs: ResultSet):
    scan = estimate_tau_scan(cfg.r, cfg.C, cfg.depths, cfg.paths, cfg.grid, cfg.seeds,
                             cfg.workers, cfg.chunk)
    for (r, C, N), est in scan.cells.items():
        rs.rows.append(_est_row(cfg.kind, est, r=r, C=C, N=N))
    for C in cfg.C:
        rs.rows.append(Row(cfg.kind, "sup_tail_analytic", sup_abs_tail_analytic(C), C=C))


def _run_cov_decay(cfg: ExperimentConfig, rs: ResultSet):
    Ns = cfg.N
    series = estimate_sign_covariances(cfg.r, cfg.n_max, cfg.paths, cfg.grid, cfg.seeds,
                                       cfg.workers, cfg.chunk)
    for cov in series:
        for n, est in cov.entries.items():
            rs.rows.append(_est_row(cfg.kind, est, r=cov.r, n=n))
        rs.rows.append(Row(cfg.kind, "cov_closed_form_n1", sign_cov_closed_form(cov.r),
                           r=cov.r, n=1))
        if not Ns or cfg.n_max < 1:
            continue
        # the bound pairs the covariance with tau cells at the same (snapped) r
        scan = estimate_tau_scan([cov.r], cfg.C, Ns, cfg.paths, cfg.grid, cfg.seeds,
                                 cfg.workers, cfg.chunk)
        for C in cfg.C:
            tail = sup_abs_tail_analytic(C)
            rs.rows.append(Row(cfg.kind, "sup_tail_analytic", tail, C=C))
            for N in Ns:
                tau = scan[(cov.r, C, N)]
                rs.rows.append(_est_row(cfg.kind, tau, r=cov.r, C=C, N=N))
                rep = mixing_bound_check(cov, tau, tail, cov.r, C, N)
                rs.rows.append(Row(cfg.kind, "mixing_bound_rhs", rep.rhs, rep.slack,
                                   cfg.paths, r=cov.r, C=C, N=N, n=rep.n))
                rs.rows.append(Row(cfg.kind, "mixing_bound_pass", float(rep.passed),
                                   r=cov.r, C=C, N=N, n=rep.n))
                if not rep.passed:
                    rs.failures.append(f"mixing bound r={cov.r} C={C} N={N} n={rep.n}")
    rs.passed = not rs.failures


def _run_sup_tail(cfg: ExperimentConfig, rs: ResultSet):
    mc = estimate_sup_tail(cfg.C, cfg.paths, cfg.grid, cfg.seeds, cfg.workers, cfg.chunk)
    for C, est in mc.items():
        rs.rows.append(_est_row(cfg.kind, est, C=C))
        rs.rows.append(Row(cfg.kind, "sup_tail_analytic", sup_abs_tail_analytic(C), C=C))


_RUNNERS = {
    "validate": _run_validate,
    "tau-scan": _run_tau_scan,
    "cov-decay": _run_cov_decay,
    "sup-tail": _run_sup_tail,
}


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ResultSet:
    if workers is not None:
        cfg = replace(cfg, workers=workers)
    rs = ResultSet(cfg)
    start = time.perf_counter()
    try:
        _RUNNERS[cfg.kind](cfg, rs)
    except ValueError as exc:
        raise ValueError(f"{cfg.kind} (r={cfg.r}, C={cfg.C}, N={cfg.depths}): {exc}") from exc
    rs.wall_seconds = time.perf_counter() - start
    return rs


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def results_csv(rs: ResultSet) -> str:
    cfg = rs.config
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rs.sorted_rows():
        writer.writerow([_cell(v) for v in (
            row.experiment, row.label, row.r, row.C, row.N, row.n, row.value,
            row.std_error, row.n_samples, cfg.seed, cfg.steps, cfg.paths)])
    return buf.getvalue()


def write_results(rs: ResultSet, path) -> None:
    """Write the results CSV and ``<path>.config.echo``."""
    path = FsPath(path)
    echo = rs.config.echo() + f"config_hash={rs.config_hash}\n"
    try:
        if path.parent:
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(results_csv(rs), encoding="utf-8", newline="")
        FsPath(str(path) + ".config.echo").write_text(echo, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
