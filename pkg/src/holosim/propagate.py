"""Adaptive Runge-Kutta-Fehlberg 4(5) integration of Schroedinger and
Lindblad dynamics over the time segments of a model.

Segment boundaries (pulse-support edges, loop vertices) are hard
break-points: no step straddles one.  Field-free segments have a constant
generator and are propagated in closed form with a matrix exponential, or
skipped entirely when the model's gap policy is ``"skip"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import IntegrationFailure, InvalidArgument, NumericalInstability
from .models import jump_operators
from .quantum_core import DensityOperator

# Fehlberg's 4(5) tableau; the fourth-order solution is propagated.
RKF45_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
RKF45_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
RKF45_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
RKF45_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
RKF45_ERR = tuple(b5 - b4 for b4, b5 in zip(RKF45_B4, RKF45_B5))


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    min_step: float = 1e-14
    max_step: float = math.inf
    safety: float = 0.9
    max_steps: int = 1_000_000
    initial_step: float | None = None

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InvalidArgument("tolerances must be positive")
        if not 0 < self.min_step <= self.max_step:
            raise InvalidArgument("need 0 < min_step <= max_step")
        if not 0 < self.safety <= 1:
            raise InvalidArgument("safety factor must lie in (0, 1]")


@dataclass
class Diagnostics:
    steps: int = 0
    rejects: int = 0
    evaluations: int = 0
    isometry_defect: float = 0.0

    def merge(self, other: "Diagnostics") -> None:
        self.steps += other.steps
        self.rejects += other.rejects
        self.evaluations += other.evaluations

    def as_dict(self) -> dict:
        return {"steps": self.steps, "rejects": self.rejects, "evaluations": self.evaluations,
                "isometry_defect": self.isometry_defect}


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    states: list = field(default_factory=list)
    steps: int = 0
    rejects: int = 0

    def append(self, t, y):
        # segment boundaries are reported once
        if self.times and self.times[-1] == float(t):
            self.states[-1] = y
            return
        self.times.append(float(t))
        self.states.append(y)


def _max_abs(y) -> float:
    return float(np.max(np.abs(y))) if np.size(y) else 0.0


def _rkf45_trial(rhs, y, t, h, k1=None):
    """Fourth-order solution and embedded error estimate for one step."""
    k = [rhs(t, y) if k1 is None else k1]
    for i in range(1, 6):
        acc = y
        for a, kj in zip(RKF45_A[i], k):
            if a:
                acc = acc + (h * a) * kj
        k.append(rhs(t + RKF45_C[i] * h, acc))
    y4 = y
    err = 0
    for b, e, kj in zip(RKF45_B4, RKF45_ERR, k):
        if b:
            y4 = y4 + (h * b) * kj
        if e:
            err = err + (h * e) * kj
    return y4, err


def _judge(y, y4, err, h, cfg):
    tol = cfg.abs_tol + cfg.rel_tol * max(_max_abs(y), _max_abs(y4))
    ratio = _max_abs(err) / tol
    factor = 5.0 if ratio == 0 else min(5.0, max(0.2, cfg.safety * ratio ** -0.2))
    return ratio, min(h * factor, cfg.max_step)


def adaptive_step(rhs, y, t, h, cfg: IntegratorConfig):
    """One RKF45 trial step.

    Returns ``(y_next, h_next, accepted)``.  ``y_next`` is the fourth-order
    solution, or ``y`` itself when the step is rejected.  A step is accepted
    when the embedded error estimate (max norm) is at most
    ``abs_tol + rel_tol * max|y|``; the next step is
    ``h * safety * (tol/err)**(1/5)`` clamped to ``[0.2, 5] * h``.
    """
    if not cfg.min_step <= h <= cfg.max_step:
        raise InvalidArgument(f"step {h} outside [{cfg.min_step}, {cfg.max_step}]")
    y4, err = _rkf45_trial(rhs, y, t, h)
    ratio, h_next = _judge(y, y4, err, h, cfg)
    if ratio <= 1.0:
        return y4, h_next, True
    if h <= cfg.min_step:
        raise IntegrationFailure(f"step size underflow at t={t}", {"t": t, "h": h, "error_ratio": ratio})
    return y, max(h_next, cfg.min_step), False


def _initial_step(f0, y, span, cfg):
    if cfg.initial_step is not None:
        h = cfg.initial_step
    else:
        d0, d1 = _max_abs(y), _max_abs(f0)
        h = 1e-3 * span if d0 < 1e-10 or d1 < 1e-10 else 0.01 * d0 / d1
    return max(cfg.min_step, min(h, span, cfg.max_step))


def integrate(
    rhs: Callable,
    y0,
    t0: float,
    t1: float,
    cfg: IntegratorConfig,
    breakpoints: Sequence[float] = (),
    post_step: Callable | None = None,
    trajectory: Trajectory | None = None,
    diagnostics: Diagnostics | None = None,
):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``.

    Every breakpoint inside ``(t0, t1)`` is hit exactly and the step size is
    re-initialized after it.  Returns the final state; counters accumulate
    into ``diagnostics``.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    if t1 < t0:
        raise InvalidArgument("integration end precedes start")
    nodes = [t0] + sorted(b for b in breakpoints if t0 < b < t1) + [t1]
    y = y0
    if trajectory is not None:
        trajectory.append(t0, y)
    for a, b in zip(nodes, nodes[1:]):
        if b <= a:
            continue
        t = a
        k1 = rhs(t, y)
        diag.evaluations += 1
        h = _initial_step(k1, y, b - a, cfg)
        while t < b:
            if diag.steps + diag.rejects >= cfg.max_steps:
                raise IntegrationFailure(f"max_steps exceeded at t={t}", {"t": t, **diag.as_dict()})
            remaining = b - t
            last = h >= remaining * (1 - 1e-12)
            step = remaining if last else h
            y4, err = _rkf45_trial(rhs, y, t, step, k1)
            diag.evaluations += 5
            ratio, h_next = _judge(y, y4, err, step, cfg)
            if ratio <= 1.0:
                diag.steps += 1
                t = b if last else t + step
                y = y4 if post_step is None else post_step(y4)
                if trajectory is not None:
                    trajectory.append(t, y)
                if t < b:
                    k1 = rhs(t, y)
                    diag.evaluations += 1
                h = h_next
            else:
                diag.rejects += 1
                if step <= cfg.min_step:
                    raise IntegrationFailure(f"step size underflow at t={t}",
                                             {"t": t, "h": step, "error_ratio": ratio, **diag.as_dict()})
                h = max(h_next, cfg.min_step)
    if trajectory is not None:
        trajectory.steps, trajectory.rejects = diag.steps, diag.rejects
    return y


def liouvillian(h: np.ndarray, ops: Sequence[np.ndarray]) -> np.ndarray:
    """Superoperator acting on row-major ``rho.ravel()``."""
    d = h.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op in ops:
        lhl = op.conj().T @ op
        sup += 2 * np.kron(op, op.conj()) - np.kron(lhl, eye) - np.kron(eye, lhl.T)
    return sup


class _DensityRHS:
    def __init__(self, segment, ops):
        self.segment = segment
        self.ops = ops
        self.opds = [op.conj().T for op in ops]
        self.k = sum((opd @ op for op, opd in zip(ops, self.opds)),
                     np.zeros_like(segment.static))

    def __call__(self, t, rho):
        g = self.segment.at(t) - 1j * self.k
        out = -1j * (g @ rho) + 1j * (rho @ g.conj().T)
        for op, opd in zip(self.ops, self.opds):
            out = out + 2 * (op @ rho @ opd)
        return out


def _clip_segments(model, t0, t1):
    lo, hi = model.time_domain
    if t0 is None:
        t0 = lo
    if t1 is None:
        t1 = hi
    if t0 < lo - 1e-12 * max(1.0, abs(lo)) or t1 > hi + 1e-12 * max(1.0, abs(hi)) or t1 < t0:
        raise InvalidArgument(f"interval [{t0}, {t1}] outside model domain [{lo}, {hi}]")
    out = []
    for seg in model.segments():
        a, b = max(seg.start, t0), min(seg.stop, t1)
        if b > a:
            out.append((a, b, seg))
    return out


def _gap_skipped(model) -> bool:
    return getattr(model, "gap_policy", "evolve") == "skip"


def driven_time(model, t0=None, t1=None) -> float:
    """Elapsed time that counts for the co-rotating frame clock.

    Equals ``t1 - t0`` unless the model skips field-free gaps, in which case
    only driven segments count.
    """
    segs = _clip_segments(model, t0, t1)
    skip = _gap_skipped(model)
    return float(sum(b - a for a, b, seg in segs if seg.driven or not skip))


def evolve_density_batch(model, channels, rhos, t0=None, t1=None, cfg=None,
                         hermitian_mask=None, trajectory=None):
    """Evolve a stack ``(k, d, d)`` of operators under the master equation.

    ``hermitian_mask`` marks which members are re-symmetrized after every
    accepted step.  Returns ``(stack, Diagnostics)``.
    """
    cfg = cfg or IntegratorConfig()
    y = np.array(rhos, dtype=complex)
    if y.ndim == 2:
        y = y[None]
    d = model.dim
    if y.shape[1:] != (d, d):
        raise InvalidArgument(f"operator shape {y.shape[1:]} does not match model dim {d}")
    ops = jump_operators(channels, d)
    mask = np.ones(len(y), bool) if hermitian_mask is None else np.asarray(hermitian_mask, bool)

    def symmetrize(z):
        z = z.copy()
        z[mask] = 0.5 * (z[mask] + np.conj(np.swapaxes(z[mask], 1, 2)))
        return z

    diag = Diagnostics()
    skip = _gap_skipped(model)
    for a, b, seg in _clip_segments(model, t0, t1):
        if not seg.driven:
            if skip:
                continue
            prop = expm(liouvillian(seg.static, ops) * (b - a))
            y = (y.reshape(len(y), d * d) @ prop.T).reshape(y.shape)
            y = symmetrize(y)
            if trajectory is not None:
                trajectory.append(b, y)
            continue
        y = integrate(_DensityRHS(seg, ops), y, a, b, cfg, post_step=symmetrize,
                      trajectory=trajectory, diagnostics=diag)
    if trajectory is not None:
        trajectory.steps, trajectory.rejects = diag.steps, diag.rejects
    return y, diag


def evolve_density(model, channels, rho0, t0=None, t1=None, cfg=None,
                   trajectory: Trajectory | None = None,
                   positivity_floor: float = -1e-6) -> DensityOperator:
    """Integrate the master equation from ``rho0``.

    Raises :class:`NumericalInstability` if the final state has an
    eigenvalue below ``positivity_floor``.
    """
    m = np.asarray(getattr(rho0, "matrix", rho0), dtype=complex)
    y, _ = evolve_density_batch(model, channels, m[None], t0, t1, cfg, trajectory=trajectory)
    rho = y[0]
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam < positivity_floor:
        raise NumericalInstability(f"density operator lost positivity (min eigenvalue {lam:.3e})")
    return DensityOperator(rho)


class _StateRHS:
    def __init__(self, segment):
        self.segment = segment

    def __call__(self, t, psi):
        return -1j * (self.segment.at(t) @ psi)


def evolve_state_columns(model, columns, t0=None, t1=None, cfg=None, trajectory=None):
    """Schroedinger evolution of the columns of a ``(d, k)`` array.

    No renormalization; returns ``(array, Diagnostics)``.
    """
    cfg = cfg or IntegratorConfig()
    y = np.array(columns, dtype=complex)
    diag = Diagnostics()
    skip = _gap_skipped(model)
    for a, b, seg in _clip_segments(model, t0, t1):
        if not seg.driven:
            if skip:
                continue
            y = expm(-1j * seg.static * (b - a)) @ y
            if trajectory is not None:
                trajectory.append(b, y)
            continue
        y = integrate(_StateRHS(seg), y, a, b, cfg, trajectory=trajectory, diagnostics=diag)
    if trajectory is not None:
        trajectory.steps, trajectory.rejects = diag.steps, diag.rejects
    return y, diag


def evolve_state(model, psi0, t0=None, t1=None, cfg=None, trajectory=None) -> np.ndarray:
    """Solve ``i psi' = H(t) psi`` and return the renormalized final ket."""
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (model.dim,):
        raise InvalidArgument(f"state shape {psi.shape} does not match model dim {model.dim}")
    out, _ = evolve_state_columns(model, psi[:, None], t0, t1, cfg, trajectory)
    out = out[:, 0]
    return out / np.linalg.norm(out)


def propagator(model, t0=None, t1=None, cfg=None) -> np.ndarray:
    """Full ``d x d`` evolution operator ``U(t1, t0)`` of a closed model."""
    u, _ = evolve_state_columns(model, np.eye(model.dim), t0, t1, cfg)
    return u


def qubit_process(model, channels=(), t0=None, t1=None, cfg=None, method="auto"):
    """Images ``E[j, k] = Phi(|j><k|)`` of the qubit matrix units.

    Returns ``(E, Diagnostics)`` with ``E`` of shape ``(2, 2, d, d)``.  By
    linearity, the output for an input ``|chi><chi|`` is
    ``sum_jk c_j conj(c_k) E[j, k]``.

    ``method="ket"`` propagates the kets of ``|0>`` and ``|1>`` and then
    replaces the two columns by the nearest isometry (polar factor), the
    matrix version of renormalizing a ket; the size of that correction is
    recorded as ``isometry_defect``.  It needs a closed system.  With
    ``method="density"``, ``|0><0|``, ``|0><1|`` and ``|1><1|`` are
    integrated together under the master equation and
    ``E[1, 0] = E[0, 1]^+``; the Runge-Kutta update then conserves the trace
    exactly.  ``"auto"`` picks ``"ket"`` without channels.
    """
    d = model.dim
    ops = jump_operators(channels, d)
    if method == "auto":
        method = "density" if ops else "ket"
    if method == "ket":
        if ops:
            raise InvalidArgument("ket propagation cannot represent Lindblad channels")
        cols, diag = evolve_state_columns(model, np.eye(d)[:, :2], t0, t1, cfg)
        left, _, right = np.linalg.svd(cols, full_matrices=False)
        iso = left @ right
        diag.isometry_defect = float(np.max(np.abs(cols - iso)))
        e = np.einsum("aj,bk->jkab", iso, iso.conj())
        return e, diag
    if method != "density":
        raise InvalidArgument(f"unknown propagation method {method!r}")
    units = np.zeros((3, d, d), dtype=complex)
    units[0, 0, 0] = units[1, 0, 1] = units[2, 1, 1] = 1.0
    y, diag = evolve_density_batch(model, ops, units, t0, t1, cfg,
                                   hermitian_mask=[True, False, True])
    e = np.empty((2, 2, d, d), dtype=complex)
    e[0, 0], e[0, 1], e[1, 1] = y[0], y[1], y[2]
    e[1, 0] = y[1].conj().T
    return e, diag
