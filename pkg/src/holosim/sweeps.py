"""Parameter sweeps over the figure families, result emission and INI
configuration.

Every error model is configured in dimensionless form: the error rate (or
detuning) is the unit of angular frequency, so the swept ratio directly
sets the pulse amplitude ``beta`` (non-adiabatic), the run time ``T``
(adiabatic with fixed coupling ``Omega0``) or the coupling ``Omega``
(adiabatic with fixed run time ``T0``).
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IntegrationFailure, InvalidArgument, InvalidSchedule, NumericalInstability
from .fidelity import FidelityStats, fidelity_stats
from .gates import PRESETS, compile_adiabatic, compile_nonadiabatic, gate_target
from .models import DephasingChannel, DecayChannel, FieldError, LambdaModel
from .propagate import IntegratorConfig
from .quantum_core import haar_qubit_amplitudes

log = logging.getLogger(__name__)

ERROR_MODELS = ("none", "decay", "dephasing", "mean-detuning", "relative-detuning", "field-error")
MODES = ("beta", "fixed-coupling", "fixed-time", "field-scale")
CSV_HEADER = ("sweep_value", "f_max", "f_avg", "f_min", "samples", "seed", "steps", "rejects")
DEFAULT_SEED = 20240
DEFAULT_SAMPLES = 4000


def log_grid(lo: float, hi: float, n: int, include: Iterable[float] = ()) -> tuple[float, ...]:
    pts = set(np.geomspace(lo, hi, n).tolist()) | {float(x) for x in include if lo <= x <= hi}
    return tuple(sorted(pts))


def linear_grid(lo: float, hi: float, n: int) -> tuple[float, ...]:
    return tuple(np.linspace(lo, hi, n).tolist())


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: scheme, gate, error model and the swept dimensionless ratio.

    ``constants`` keeps the dimensionless constants by name (``gamma_ts``,
    ``omega0_over_rate``, ``rate_T0`` ...); ``separation``, ``coupling0`` and
    ``time0`` are the same numbers in units of the error rate.
    """

    name: str
    scheme: str
    gate: str
    error: str
    mode: str
    grid: tuple[float, ...]
    constants: dict = field(default_factory=dict)
    separation: float = 0.0
    coupling0: float | None = None
    time0: float | None = None
    gap_policy: str = "evolve"
    field_direction: tuple[complex, complex, float] = (0.0, 0.0, 0.0)
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    per_loop_time: bool = False
    log_x: bool = False
    output: str = "results"
    description: str = ""

    def __post_init__(self):
        if self.scheme not in ("na", "a"):
            raise InvalidArgument(f"scheme must be 'na' or 'a', got {self.scheme!r}")
        if self.gate not in PRESETS:
            raise InvalidArgument(f"unknown gate {self.gate!r}")
        if self.error not in ERROR_MODELS:
            raise InvalidArgument(f"unknown error model {self.error!r}")
        if self.mode not in MODES:
            raise InvalidArgument(f"unknown sweep mode {self.mode!r}")
        grid = tuple(float(x) for x in self.grid)
        if not grid:
            raise InvalidArgument("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidArgument("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        if self.scheme == "na" and self.mode not in ("beta", "field-scale"):
            raise InvalidArgument("non-adiabatic sweeps use mode 'beta' or 'field-scale'")
        if self.scheme == "a" and self.mode not in ("fixed-coupling", "fixed-time"):
            raise InvalidArgument("adiabatic sweeps use mode 'fixed-coupling' or 'fixed-time'")
        if self.mode == "fixed-coupling" and not self.coupling0:
            raise InvalidArgument("fixed-coupling sweep needs coupling0")
        if self.mode == "fixed-time" and not self.time0:
            raise InvalidArgument("fixed-time sweep needs time0")
        if self.mode == "field-scale" and self.error != "field-error":
            raise InvalidArgument("field-scale sweeps need the field-error model")
        if self.scheme == "na" and self.gate == "phase-pi-2" and self.separation <= 0:
            raise InvalidArgument("two-pair gates need a positive separation")
        if self.samples < 1:
            raise InvalidArgument("samples must be >= 1")

    def replace(self, **changes) -> "SweepConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class ResultRow:
    sweep_value: float
    stats: FidelityStats | None
    steps: int = 0
    rejects: int = 0
    wall_time: float = 0.0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.stats is None

    def csv_fields(self, samples: int, seed: int) -> list[str]:
        s = self.stats
        vals = (math.nan,) * 3 if s is None else (s.max, s.avg, s.min)
        return [repr(self.sweep_value), *(repr(float(v)) for v in vals), str(samples), str(seed),
                str(self.steps), str(self.rejects)]

    def meta(self) -> dict:
        out = {"sweep_value": self.sweep_value, "wall_time": self.wall_time, "error": self.error}
        if self.stats is not None:
            s = self.stats
            out.update(sphere_max=s.sphere_max, sphere_min=s.sphere_min, haar_avg=s.haar_avg,
                       trace_drift=s.trace_drift, min_eigenvalue=s.min_eigenvalue,
                       evaluations=s.diagnostics.get("evaluations"),
                       isometry_defect=s.diagnostics.get("isometry_defect"))
        return out


def build_point(cfg: SweepConfig, x: float):
    """``(model, channels)`` for grid value ``x``."""
    if cfg.scheme == "na":
        beta = 1.0 if cfg.mode == "field-scale" else x
        field_error = None
        if cfg.error == "field-error":
            d0, d1, da = cfg.field_direction
            field_error = FieldError(x * complex(d0), x * complex(d1), math.pi + x * float(da))
        schedule = compile_nonadiabatic(cfg.gate, beta, cfg.separation if cfg.gate == "phase-pi-2" else 0.0,
                                        exact_area=cfg.error == "field-error")
        model = LambdaModel(schedule, _na_detunings(cfg.error), field_error, cfg.gap_policy)
    else:
        if cfg.mode == "fixed-coupling":
            omega, run_time = cfg.coupling0, x / cfg.coupling0
        else:
            omega, run_time = x / cfg.time0, cfg.time0
        if cfg.error == "none":
            # error-free sweeps use the coupling as the frequency unit
            omega, run_time = 1.0, x
        model = compile_adiabatic(cfg.gate, omega, run_time, _a_detunings(cfg.error), cfg.per_loop_time)
    return model, _channels(cfg.error, model)


def _na_detunings(error):
    return {"mean-detuning": (1.0, 1.0), "relative-detuning": (0.0, 1.0)}.get(error, (0.0, 0.0))


def _a_detunings(error):
    return {"mean-detuning": (1.0, 1.0, 1.0), "relative-detuning": (0.0, 1.0, 0.0)}.get(error, (0.0, 0.0, 0.0))


def _channels(error, model):
    if error == "decay":
        return [DecayChannel(1.0, model.excited, model.sink)]
    if error == "dephasing":
        return [DephasingChannel(1.0, model.excited)]
    return []


def run_point(cfg: SweepConfig, x: float) -> ResultRow:
    start = time.perf_counter()
    try:
        model, channels = build_point(cfg, x)
        amps = haar_qubit_amplitudes(cfg.samples, cfg.seed)
        icfg = IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
        stats = fidelity_stats(model, channels, gate_target(cfg.gate), amps, icfg, seed=cfg.seed)
    except (IntegrationFailure, NumericalInstability, InvalidArgument, InvalidSchedule) as exc:
        log.warning("sweep %s failed at %r: %s", cfg.name, x, exc)
        diag = getattr(exc, "diagnostics", {})
        return ResultRow(x, None, int(diag.get("steps", 0)), int(diag.get("rejects", 0)),
                         time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
    return ResultRow(x, stats, stats.diagnostics["steps"], stats.diagnostics["rejects"],
                     time.perf_counter() - start)


def _run_point_args(args):
    return run_point(*args)


def run_sweep(cfg: SweepConfig, workers: int = 1, sink=None) -> list[ResultRow]:
    """Evaluate every grid point; rows come back in grid order.

    ``sink``, if given, is called with each row in grid order as soon as it
    (and all rows before it) are done.  Failed points give rows with
    ``stats=None``; the sweep carries on.
    """
    jobs = [(cfg, x) for x in cfg.grid]
    rows = []
    if workers <= 1:
        for job in jobs:
            rows.append(run_point(*job))
            if sink:
                sink(rows[-1])
        return rows
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for row in pool.map(_run_point_args, jobs):
            rows.append(row)
            if sink:
                sink(row)
    return rows


# ---------------------------------------------------------------------------
# output


def csv_text(cfg: SweepConfig, rows: Sequence[ResultRow]) -> str:
    if not rows:
        raise InvalidArgument("no rows to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.csv_fields(cfg.samples, cfg.seed))
    return buf.getvalue()


class CsvSink:
    """Appends rows to ``path`` as they arrive so partial sweeps survive."""

    def __init__(self, cfg: SweepConfig, path):
        self.cfg = cfg
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(CSV_HEADER)

    def __call__(self, row: ResultRow):
        with self.path.open("a", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(row.csv_fields(self.cfg.samples, self.cfg.seed))


def write_plot(cfg: SweepConfig, rows: Sequence[ResultRow], path: Path) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = np.array([r.sweep_value for r in rows])
    series = np.array([[math.nan] * 3 if r.stats is None else [r.stats.max, r.stats.avg, r.stats.min]
                       for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k, (label, color) in enumerate((("max", "red"), ("avg", "black"), ("min", "blue"))):
        ax.plot(x, series[:, k], color=color, label=label, lw=1.2)
    if cfg.log_x:
        ax.set_xscale("log")
    ax.set_xlabel(_axis_label(cfg))
    ax.set_ylabel("fidelity")
    ax.set_title(cfg.name)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    plt.rcParams["svg.hashsalt"] = "holosim"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _axis_label(cfg):
    unit = {"decay": "gamma", "dephasing": "epsilon", "mean-detuning": "Delta",
            "relative-detuning": "delta"}.get(cfg.error, "")
    if cfg.mode == "beta":
        return f"beta / {unit}"
    if cfg.mode == "field-scale":
        return "perturbation scale"
    if cfg.mode == "fixed-coupling" and cfg.error != "none":
        return "Omega0 T"
    return "Omega T0" if cfg.mode == "fixed-time" else "Omega T"


def emit_results(cfg: SweepConfig, rows: Sequence[ResultRow], out_dir, fmt: str = "csv") -> list[Path]:
    """Write ``<name>.csv`` (plus ``<name>.svg`` for ``fmt="plot"``) and a
    ``<name>.meta.json`` sidecar with wall times and extra diagnostics."""
    if fmt not in ("csv", "plot"):
        raise InvalidArgument(f"unknown output format {fmt!r}")
    text = csv_text(cfg, rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{cfg.name}.csv"]
    paths[0].write_text(text)
    meta = {"config": config_dict(cfg), "rows": [r.meta() for r in rows]}
    meta_path = out / f"{cfg.name}.meta.json"
    meta_path.write_text(json.dumps(meta, indent=1, default=str))
    paths.append(meta_path)
    if fmt == "plot":
        paths.append(write_plot(cfg, rows, out / f"{cfg.name}.svg"))
    return paths


# ---------------------------------------------------------------------------
# presets

# Dimensionless constants per error model: (name of the rate, na separation
# t_s, adiabatic Omega0, adiabatic T0 for the phase gate, T0 for Hadamard).
FIGURE_CONSTANTS = {
    "decay": ("fig4", 8.0, 12.5, 8.0, 32.0),
    "dephasing": ("fig5", 0.128, 78.125, 0.16, 0.32),
    "mean-detuning": ("fig6", 80.0, 6.25, 16.0, 64.0),
    "relative-detuning": ("fig7", 16.0, 6.25, 2.0, 64.0),
}
RATE_SYMBOL = {"decay": "gamma", "dephasing": "epsilon", "mean-detuning": "Delta", "relative-detuning": "delta"}
# Lower edge of the beta/rate grid: the two pulses of the phase gate must not
# overlap, i.e. 2 arcsech(1e-3) / beta < t_s.
NA_GRID = {"decay": (2.0, 1000.0), "dephasing": (125.0, 1e5), "mean-detuning": (0.2, 1000.0),
           "relative-detuning": (1.0, 1000.0)}
# Field-free gaps between pulse pairs are skipped where fidelities converge
# to one only without them (dephasing and relative detuning).
NA_GAP_POLICY = {"decay": "evolve", "dephasing": "skip", "mean-detuning": "evolve",
                 "relative-detuning": "skip"}
GATE_TAG = {"phase-pi-2": "phase", "hadamard": "hadamard"}
KEY_POINTS = (100.0, 1000.0)
OMEGA_T_MAX = 400.0


def builtin_presets(fast: bool = False) -> dict[str, SweepConfig]:
    n_log, n_lin = (24, 40) if fast else (200, 400)
    presets = {}
    omega_t = linear_grid(OMEGA_T_MAX / n_lin, OMEGA_T_MAX, n_lin)
    for gate in PRESETS:
        tag = GATE_TAG[gate]
        name = f"fig3-a-{tag}"
        presets[name] = SweepConfig(name, "a", gate, "none", "fixed-coupling", omega_t, coupling0=1.0,
                                    description="error-free adiabatic gate versus Omega T")
        for error, (fig, ts, omega0, t0_phase, t0_h) in FIGURE_CONSTANTS.items():
            rate = RATE_SYMBOL[error]
            t0 = t0_phase if gate == "phase-pi-2" else t0_h
            lo, hi = NA_GRID[error]
            name = f"{fig}-na-{tag}"
            presets[name] = SweepConfig(
                name, "na", gate, error, "beta", log_grid(lo, hi, n_log, KEY_POINTS),
                constants={f"{rate}_ts": ts}, separation=ts, gap_policy=NA_GAP_POLICY[error],
                log_x=True, description=f"non-adiabatic gate versus beta/{rate}")
            name = f"{fig}-a-{tag}-fixed-coupling"
            presets[name] = SweepConfig(
                name, "a", gate, error, "fixed-coupling", omega_t,
                constants={f"omega0_over_{rate}": omega0}, coupling0=omega0,
                description=f"adiabatic gate versus Omega0 T at fixed Omega0/{rate}")
            name = f"{fig}-a-{tag}-fixed-time"
            presets[name] = SweepConfig(
                name, "a", gate, error, "fixed-time", omega_t,
                constants={f"{rate}_T0": t0}, time0=t0,
                description=f"adiabatic gate versus Omega T0 at fixed {rate} T0")
        name = f"field-error-na-{tag}"
        presets[name] = SweepConfig(
            name, "na", gate, "field-error", "field-scale", linear_grid(0.0, 0.05, n_log),
            separation=20.0, gap_policy="skip", field_direction=(0.6 + 0.3j, -0.4j, 1.0),
            description="pulse pairs with coupling and area errors scaled by the sweep value")
    return presets


# ---------------------------------------------------------------------------
# INI configuration

_SCALAR_FIELDS = {f.name: f.type for f in dataclasses.fields(SweepConfig)}


def config_dict(cfg: SweepConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["grid"] = list(cfg.grid)
    d["field_direction"] = [str(v) for v in cfg.field_direction]
    return d


def parse_grid(text: str) -> tuple[float, ...]:
    """``log:lo:hi:n``, ``linear:lo:hi:n`` or a comma-separated list."""
    text = text.strip()
    if text.startswith(("log:", "linear:")):
        kind, lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        return log_grid(lo, hi, n) if kind == "log" else linear_grid(lo, hi, n)
    return tuple(float(v) for v in text.replace(",", " ").split())


def _convert(key: str, value: str):
    if key == "grid":
        return parse_grid(value)
    if key == "constants":
        return {k.strip(): float(v) for k, v in (item.split("=") for item in value.split(",") if item.strip())}
    if key == "field_direction":
        parts = [complex(v.strip()) for v in value.split(",")]
        return (parts[0], parts[1], parts[2].real)
    if key in ("samples", "seed"):
        return int(value)
    if key in ("separation", "coupling0", "time0", "rel_tol", "abs_tol"):
        return float(value)
    if key in ("per_loop_time", "log_x"):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if key not in _SCALAR_FIELDS:
        raise InvalidArgument(f"unknown config key {key!r}")
    return value.strip()


def load_config(path, presets: dict[str, SweepConfig] | None = None) -> dict[str, SweepConfig]:
    """Read an INI file.  Each section is a sweep; a section named like a
    built-in preset (or with ``base = <preset>``) overrides only the keys it
    lists, other sections must give every required field."""
    presets = dict(presets if presets is not None else builtin_presets())
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    if not parser.read(path):
        raise FileNotFoundError(path)
    for section in parser.sections():
        items = dict(parser.items(section))
        base_name = items.pop("base", section if section in presets else None)
        values = {k: _convert(k, v) for k, v in items.items()}
        if base_name is not None:
            if base_name not in presets:
                raise InvalidArgument(f"section {section!r}: unknown base preset {base_name!r}")
            presets[section] = presets[base_name].replace(name=section, **values)
        else:
            presets[section] = SweepConfig(name=section, **values)
    return presets
