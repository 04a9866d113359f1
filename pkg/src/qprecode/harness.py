"""Configuration, Monte Carlo SNR sweeps and result emission."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional
from xml.sax.saxutils import escape

import numpy as np

from .channel import ArrayGeometry, random_drop, sample_channel
from .errors import ConfigurationError, SweepError
from .ils import solve_quantized_subproblem
from .oracles import OracleBudget, exhaustive_p3
from .quantizer import build_codebook, codebook_for_power
from .schemes import SchemeId, infinite_res_precoder, run_scheme
from .wmmse import PrecoderConfig, run_wmmse, scale_to_power, scaled_sum_rate

log = logging.getLogger(__name__)

ALL_SCHEMES = [s.value for s in SchemeId]


@dataclass
class SystemSection:
    m_h: int = 4
    m_v: int = 4
    K: int = 4
    L: int = 8
    kappa: float = 5.0
    asd_deg: float = 10.0
    d_h: float = 0.5
    d_v: float = 0.5

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.m_h, self.m_v, self.d_h, self.d_v)

    @property
    def M(self) -> int:
        return self.m_h * self.m_v


@dataclass
class SweepSection:
    snr_db: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0])
    num_drops: int = 50
    seed: int = 0


@dataclass
class RunSection:
    iterations: int = 10
    schemes: list = field(default_factory=lambda: list(ALL_SCHEMES))
    sd_node_budget: Optional[int] = 200000
    lambda_tol: float = 1e-6
    power_tol: float = 1e-8
    fixed_delta: Optional[float] = None
    heuristic_passes: int = 1
    early_stop: bool = False


@dataclass
class OutputSection:
    directory: str = "results"
    emit_plot: bool = True


@dataclass
class SimConfig:
    system: SystemSection = field(default_factory=SystemSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    run: RunSection = field(default_factory=RunSection)
    output: OutputSection = field(default_factory=OutputSection)

    def validate(self) -> "SimConfig":
        if self.sweep.num_drops < 1:
            raise ConfigurationError("num_drops must be at least 1")
        if not self.sweep.snr_db:
            raise ConfigurationError("snr_db must not be empty")
        for name in self.run.schemes:
            SchemeId.parse(name)
        if self.run.iterations < 1:
            raise ConfigurationError("iterations must be at least 1")
        if self.system.K < 1 or self.system.M < 1:
            raise ConfigurationError("K and M must be positive")
        if self.system.asd_deg <= 0 or self.system.asd_deg >= 45:
            raise ConfigurationError("asd_deg must lie in (0, 45)")
        self.system.geometry  # spacing checks
        build_codebook(self.system.L, 1.0)  # level checks
        return self

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def precoder_config(self, q: float) -> PrecoderConfig:
        s, r = self.system, self.run
        if r.fixed_delta is not None:
            codebook = build_codebook(s.L, r.fixed_delta)
        else:
            codebook = codebook_for_power(s.L, q, s.K, s.M)
        return PrecoderConfig(q=q, n0=1.0, iterations=r.iterations, codebook=codebook,
                              sd_node_budget=r.sd_node_budget, lambda_tol=r.lambda_tol,
                              power_tol=r.power_tol, early_stop=r.early_stop,
                              heuristic_passes=r.heuristic_passes)


SECTIONS = {"system": SystemSection, "sweep": SweepSection, "run": RunSection,
            "output": OutputSection}


def fast_profile() -> SimConfig:
    """CI-sized variant: M = 8 (2 x 4) and 20 drops."""
    cfg = SimConfig()
    cfg.system.m_h = 2
    cfg.sweep.num_drops = 20
    return cfg


def _parse_value(ftype, raw: str):
    raw = raw.strip()
    text = str(ftype)
    if "Optional" in text or "None" in text:
        if raw.lower() in ("", "none"):
            return None
        text = text.replace("Optional[", "").rstrip("]")
    if "list" in text:
        items = [x.strip() for x in raw.split(",") if x.strip()]
        return items
    if "bool" in text:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"not a boolean: {raw!r}")
    if "int" in text:
        return int(raw)
    if "float" in text:
        return float(raw)
    return raw


def _key_index():
    index = {}
    for section, cls in SECTIONS.items():
        for f in dataclasses.fields(cls):
            index[f.name] = (section, f)
    return index


def apply_overrides(config: SimConfig, overrides: dict) -> SimConfig:
    """Set flat ``key -> raw string`` values; unknown keys are an error."""
    index = _key_index()
    for key, raw in overrides.items():
        if key not in index:
            raise ConfigurationError(f"unknown config key {key!r}")
        section, f = index[key]
        value = raw if not isinstance(raw, str) else _parse_value(f.type, raw)
        if key == "snr_db" and value is not None:
            value = [float(x) for x in value]
        setattr(getattr(config, section), key, value)
    return config


def load_config(path=None, overrides: Optional[dict] = None, base: Optional[SimConfig] = None) -> SimConfig:
    """Read an INI file with [system]/[sweep]/[run]/[output]; overrides win."""
    config = base if base is not None else SimConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keys such as K and L are case-sensitive
        if not parser.read(path):
            raise ConfigurationError(f"cannot read config file {path}")
        index = _key_index()
        flat = {}
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigurationError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in index or index[key][0] != section:
                    raise ConfigurationError(f"unknown key {key!r} in [{section}]")
                flat[key] = raw
        apply_overrides(config, flat)
    if overrides:
        apply_overrides(config, overrides)
    return config.validate()


def dump_config(config: SimConfig) -> str:
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        for key, value in asdict(getattr(config, section)).items():
            if isinstance(value, list):
                value = ", ".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


# --- sweeps ----------------------------------------------------------------

@dataclass
class SweepRow:
    snr_db: float
    scheme: str
    mean_sum_rate: float
    stderr: float
    num_drops: int


@dataclass
class SweepResult:
    rows: list
    metadata: dict
    per_drop: dict = field(default_factory=dict, repr=False)

    def row(self, snr_db, scheme) -> SweepRow:
        for r in self.rows:
            if r.snr_db == snr_db and r.scheme == scheme:
                return r
        raise KeyError((snr_db, scheme))

    def mean(self, snr_db, scheme) -> float:
        return self.row(snr_db, scheme).mean_sum_rate


def drop_channel(config: SimConfig, drop_index: int) -> np.ndarray:
    """Channel of drop ``drop_index``; its RNG stream is keyed by (seed, index)."""
    s = config.system
    rng = np.random.default_rng([config.sweep.seed, drop_index])
    drop = random_drop(rng, s.K)
    return sample_channel(rng, drop, s.kappa, s.geometry, np.deg2rad(s.asd_deg)).H


def evaluate_drop(config: SimConfig, drop_index: int, H=None) -> dict:
    """Every scheme at every SNR on one channel realization."""
    if H is None:
        H = drop_channel(config, drop_index)
    schemes = [SchemeId.parse(s) for s in config.run.schemes]
    needs_w = {SchemeId.INFINITE_RES, SchemeId.UNAWARE, SchemeId.HEURISTIC}
    rates, errors, times = {}, {}, {s.value: 0.0 for s in schemes}
    max_power_err = 0.0
    for snr in config.sweep.snr_db:
        q = 10.0 ** (snr / 10.0)
        cfg = config.precoder_config(q)
        W = None
        if needs_w & set(schemes):
            t0 = time.perf_counter()
            try:
                W = infinite_res_precoder(H, cfg)
            except Exception as exc:  # recorded per scheme below
                log.warning("drop %d snr %s: infinite-resolution run failed: %s", drop_index, snr, exc)
            times[SchemeId.INFINITE_RES.value] = times.get(SchemeId.INFINITE_RES.value, 0.0) + \
                time.perf_counter() - t0
        for scheme in schemes:
            key = (float(snr), scheme.value)
            t0 = time.perf_counter()
            try:
                if scheme in needs_w and W is None:
                    raise RuntimeError("infinite-resolution precoder unavailable")
                P = run_scheme(scheme, H, cfg, W)
                P_hat = scale_to_power(P, q)
                rates[key] = scaled_sum_rate(H, P, cfg.n0, q)
                err = abs(np.vdot(P_hat, P_hat).real - q) / q
                max_power_err = max(max_power_err, err)
            except Exception as exc:
                rates[key] = None
                errors[key] = f"{type(exc).__name__}: {exc}"
            if scheme is not SchemeId.INFINITE_RES:
                times[scheme.value] += time.perf_counter() - t0
    return {"index": drop_index, "rates": rates, "errors": errors, "times": times,
            "max_power_error": max_power_err}


def worker_count() -> int:
    env = os.environ.get("QPRECODE_THREADS")
    n = os.cpu_count() or 1
    if env:
        n = max(1, min(n, int(env)))
    return n


def run_sweep(config: SimConfig, channel_hook: Optional[Callable[[int], np.ndarray]] = None,
              workers: Optional[int] = None) -> SweepResult:
    """Paired Monte Carlo sweep: each drop's channel is shared by all schemes and SNRs.

    ``channel_hook(drop_index)`` replaces the random channel (test hook; it
    forces in-process evaluation).
    """
    config.validate()
    workers = worker_count() if workers is None else workers
    start = time.perf_counter()
    indices = range(config.sweep.num_drops)
    if channel_hook is not None:
        drops = [evaluate_drop(config, i, channel_hook(i)) for i in indices]
    elif workers > 1 and config.sweep.num_drops > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            drops = list(pool.map(partial(evaluate_drop, config), indices))
    else:
        drops = [evaluate_drop(config, i) for i in indices]
    drops.sort(key=lambda r: r["index"])

    rows, per_drop, exclusions, failures = [], {}, {}, []
    for snr in sorted(float(s) for s in config.sweep.snr_db):
        for scheme in config.run.schemes:
            key = (snr, scheme)
            vals = [d["rates"][key] for d in drops]
            ok = np.array([v for v in vals if v is not None], dtype=float)
            excluded = len(vals) - len(ok)
            if excluded:
                exclusions[f"{snr}:{scheme}"] = excluded
                failures.extend(d["errors"][key] for d in drops if key in d["errors"])
            if excluded > 0.05 * len(vals):
                raise SweepError(f"{scheme} at {snr} dB failed on {excluded}/{len(vals)} drops: "
                                 f"{failures[:3]}")
            per_drop[key] = ok
            mean = float(np.sum(ok) / len(ok))
            stderr = float(np.std(ok, ddof=1) / np.sqrt(len(ok))) if len(ok) > 1 else 0.0
            rows.append(SweepRow(snr, scheme, mean, stderr, len(ok)))

    wall = {s: float(sum(d["times"].get(s, 0.0) for d in drops)) for s in config.run.schemes}
    metadata = {
        "seed": config.sweep.seed,
        "config_hash": config.config_hash(),
        "wall_time_s": wall,
        "elapsed_s": time.perf_counter() - start,
        "workers": workers,
        "exclusions": exclusions,
        "max_power_error": max(d["max_power_error"] for d in drops),
        "versions": versions(),
    }
    return SweepResult(rows, metadata, per_drop)


def versions() -> dict:
    import numba
    import scipy

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "qprecode": __version__}


# --- emission --------------------------------------------------------------

CSV_HEADER = ["snr_db", "scheme", "mean_sum_rate", "stderr", "num_drops"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in result.rows:
                w.writerow([_fmt(r.snr_db), r.scheme, _fmt(r.mean_sum_rate), _fmt(r.stderr),
                            r.num_drops])
    except OSError as exc:
        raise OSError(f"cannot write sweep CSV to {path}: {exc}") from exc
    return path


def read_csv(path) -> list:
    with Path(path).open() as fh:
        return [SweepRow(float(r["snr_db"]), r["scheme"], float(r["mean_sum_rate"]),
                         float(r["stderr"]), int(r["num_drops"])) for r in csv.DictReader(fh)]


def emit_meta(result: SweepResult, config: SimConfig, path) -> Path:
    path = Path(path)
    meta = dict(result.metadata)
    meta["config"] = asdict(config)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return path


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def plot_series(result: SweepResult) -> dict:
    series = {}
    for r in result.rows:
        series.setdefault(r.scheme, []).append((r.snr_db, r.mean_sum_rate))
    return {k: sorted(v) for k, v in series.items()}


def emit_plot(result: SweepResult, path, width=640, height=440) -> Path:
    """Average sum rate versus SNR as a standalone SVG."""
    if not result.rows:
        raise ValueError("nothing to plot")
    series = plot_series(result)
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    y1 = max(max(ys) * 1.05, 1e-9)
    left, right, top, bottom = 70, 170, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - y / y1 * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in np.linspace(x0, x1, 8):
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in np.linspace(0, y1, 6):
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">SNR [dB]</text>')
    out.append(f'<text transform="translate(18,{top + ph / 2}) rotate(-90)" '
               f'text-anchor="middle">Average sum rate [bit/s/Hz]</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in pts)
        if len(pts) > 1:
            out.append(f'<polyline class="series" data-scheme="{escape(name)}" fill="none" '
                       f'stroke="{color}" stroke-width="2" points="{coords}"/>')
        for x, y in pts:
            out.append(f'<circle class="marker" data-scheme="{escape(name)}" cx="{sx(x):.3f}" '
                       f'cy="{sy(y):.3f}" r="3" fill="{color}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 32}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    return path


# --- convergence traces ------------------------------------------------------

def run_convergence_trace(config: SimConfig, snr_db: float, drop_seed: int, oracle: bool = False,
                          oracle_budget: OracleBudget = OracleBudget()) -> list:
    """Per-iteration sum rate and WMMSE objective of the SD-based run on one drop.

    With ``oracle`` the same loop is also run with the exhaustive subproblem
    solver (tiny systems only).
    """
    config.validate()
    H = drop_channel(config, drop_seed)
    q = 10.0 ** (snr_db / 10.0)
    cfg = config.precoder_config(q)
    solver = partial(solve_quantized_subproblem, codebook=cfg.codebook,
                     node_budget=cfg.sd_node_budget, lambda_tol=cfg.lambda_tol)
    state = run_wmmse(H, cfg, solver, quantized=True)
    rows = [{"iteration": n, "sum_rate": r, "objective": o}
            for n, (r, o) in enumerate(zip(state.sum_rate_trace, state.objective_trace))]
    if oracle:
        K, M = H.shape
        size = float(cfg.codebook.levels) ** (2 * M * K)
        if size > oracle_budget.max_points:
            raise ConfigurationError(
                f"exhaustive reference needs {size:.3g} matrices (budget "
                f"{oracle_budget.max_points}); use a system with M*K*log2(L) <= 10")
        exact = partial(exhaustive_p3, codebook=cfg.codebook, n0=cfg.n0, budget=oracle_budget)
        ref = run_wmmse(H, cfg, exact, quantized=True)
        for row, r, o in zip(rows, ref.sum_rate_trace, ref.objective_trace):
            row["oracle_sum_rate"] = r
            row["oracle_objective"] = o
    return rows


def emit_convergence_csv(rows: list, path) -> Path:
    path = Path(path)
    fields = list(rows[0].keys())
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([row[f] if f == "iteration" else _fmt(row[f]) for f in fields])
    return path
