"""Hamiltonians of the Lambda and tripod schemes and their Lindblad channels.

Lindblad convention used throughout::

    drho/dt = -i[H, rho] + sum_L (2 L rho L^+ - L^+ L rho - rho L^+ L)

i.e. no factor 1/2, so a decay operator ``sqrt(gamma)|g><e|`` empties
``|e>`` at rate ``2 gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument
from .pulses import PulsePair, PulseSchedule
from .quantum_core import is_hermitian

LAMBDA_DIM = 4
LAMBDA_EXCITED = 2
LAMBDA_SINK = 3

TRIPOD_DIM = 5
TRIPOD_ANCILLA = 2
TRIPOD_EXCITED = 3
TRIPOD_SINK = 4

GAP_POLICIES = ("evolve", "skip")


def coupling_matrix(dim: int, excited: int, couplings: dict[int, complex]) -> np.ndarray:
    """``sum_j w_j |e><j| + h.c.``"""
    c = np.zeros((dim, dim), dtype=complex)
    for j, w in couplings.items():
        c[excited, j] = w
        c[j, excited] = np.conj(w)
    return c


@dataclass(frozen=True)
class Segment:
    """Time interval on which ``H(t) = static + hamiltonian(t)`` is smooth.

    Undriven segments have ``hamiltonian=None`` and a constant generator.
    """

    start: float
    stop: float
    static: np.ndarray
    hamiltonian: Callable[[float], np.ndarray] | None = None

    @property
    def driven(self) -> bool:
        return self.hamiltonian is not None

    def at(self, t: float) -> np.ndarray:
        if self.hamiltonian is None:
            return self.static
        return self.hamiltonian(t)


@dataclass(frozen=True)
class FieldError:
    """Deviation of the driving fields of every pulse pair.

    Couplings become ``normalize(omega + delta)``; if ``area`` is given, the
    envelope is rescaled so its integral equals ``area``.
    """

    delta0: complex = 0.0
    delta1: complex = 0.0
    area: float | None = None

    def apply(self, pair: PulsePair) -> PulsePair:
        w = np.array([pair.omega0 + self.delta0, pair.omega1 + self.delta1], dtype=complex)
        w = w / np.linalg.norm(w)
        env = pair.envelope if self.area is None else pair.envelope.with_area(self.area)
        return PulsePair(env, complex(w[0]), complex(w[1]))


@dataclass(frozen=True, eq=False)
class LambdaModel:
    """Lambda system ``(|0>, |1>, |e>, |g>)`` driven by a pulse schedule.

    ``gap_policy="evolve"`` propagates field-free intervals under the
    detunings and channels; ``"skip"`` treats them as idle-free (identity),
    and the co-rotating frame clock then only runs while fields are on.
    """

    schedule: PulseSchedule
    detunings: tuple[float, float] = (0.0, 0.0)
    field_error: FieldError | None = None
    gap_policy: str = "evolve"
    dim: int = field(default=LAMBDA_DIM, init=False)

    def __post_init__(self):
        if self.gap_policy not in GAP_POLICIES:
            raise InvalidArgument(f"unknown gap policy {self.gap_policy!r}")
        object.__setattr__(self, "detunings", tuple(float(d) for d in self.detunings))
        pairs = self.schedule.pairs
        if self.field_error is not None:
            pairs = tuple(self.field_error.apply(p) for p in pairs)
        object.__setattr__(self, "_pairs", pairs)
        object.__setattr__(self, "_couplings", [
            coupling_matrix(LAMBDA_DIM, LAMBDA_EXCITED, {0: p.omega0, 1: p.omega1}) for p in pairs])

    @property
    def excited(self) -> int:
        return LAMBDA_EXCITED

    @property
    def sink(self) -> int:
        return LAMBDA_SINK

    @property
    def pairs(self) -> tuple[PulsePair, ...]:
        """Pulse pairs actually applied (field error included)."""
        return self._pairs

    @property
    def time_domain(self) -> tuple[float, float]:
        return self.schedule.prep_time, self.schedule.readout_time

    def frame_generator(self) -> np.ndarray:
        s = np.zeros((LAMBDA_DIM, LAMBDA_DIM), dtype=complex)
        s[0, 0], s[1, 1] = self.detunings
        return s

    @property
    def has_detuning(self) -> bool:
        return any(d != 0 for d in self.detunings)

    def hamiltonian_at(self, t: float) -> np.ndarray:
        t0, t1 = self.time_domain
        if not t0 <= t <= t1:
            raise InvalidArgument(f"t={t} outside [{t0}, {t1}]")
        h = self.frame_generator()
        for pair, c in zip(self._pairs, self._couplings):
            a, b = pair.support
            if a <= t <= b:
                h = h + pair.envelope(t) * c
        return h

    def segments(self) -> list[Segment]:
        s = self.frame_generator()
        t0, t1 = self.time_domain
        out = []
        cursor = t0
        for pair, c in zip(self._pairs, self._couplings):
            a, b = pair.support
            if a > cursor:
                out.append(Segment(cursor, a, s))
            env = pair.envelope
            out.append(Segment(a, b, s, _pulse_hamiltonian(s, env, c)))
            cursor = b
        if t1 > cursor:
            out.append(Segment(cursor, t1, s))
        return out


def _pulse_hamiltonian(static, env, c):
    def h(t):
        return static + env(t) * c
    return h


@dataclass(frozen=True, eq=False)
class TripodModel:
    """Tripod system ``(|0>, |1>, |a>, |e>, |g>)`` with constant coupling
    strength ``coupling`` and a sequence of parameter loops run over
    ``run_time``.

    ``loop_times`` gives each loop's share of the run time; by default the
    run time is split in proportion to loop path length.
    """

    coupling: float
    run_time: float
    loops: tuple
    detunings: tuple[float, float, float] = (0.0, 0.0, 0.0)
    loop_times: tuple[float, ...] | None = None
    dim: int = field(default=TRIPOD_DIM, init=False)

    def __post_init__(self):
        if self.coupling <= 0 or self.run_time <= 0:
            raise InvalidArgument("coupling strength and run time must be positive")
        object.__setattr__(self, "loops", tuple(self.loops))
        object.__setattr__(self, "detunings", tuple(float(d) for d in self.detunings))
        if self.loop_times is None:
            lengths = np.array([lp.length for lp in self.loops], dtype=float)
            times = tuple(self.run_time * lengths / lengths.sum())
        else:
            times = tuple(float(x) for x in self.loop_times)
            if len(times) != len(self.loops) or any(x <= 0 for x in times):
                raise InvalidArgument("loop_times must give one positive time per loop")
            if abs(sum(times) - self.run_time) > 1e-12 * self.run_time:
                raise InvalidArgument("loop_times must sum to run_time")
        object.__setattr__(self, "loop_times", times)
        starts = np.concatenate([[0.0], np.cumsum(times)])
        starts[-1] = self.run_time
        object.__setattr__(self, "_starts", starts)

    @property
    def excited(self) -> int:
        return TRIPOD_EXCITED

    @property
    def sink(self) -> int:
        return TRIPOD_SINK

    @property
    def time_domain(self) -> tuple[float, float]:
        return 0.0, self.run_time

    @property
    def has_detuning(self) -> bool:
        return any(d != 0 for d in self.detunings)

    def frame_generator(self) -> np.ndarray:
        s = np.zeros((TRIPOD_DIM, TRIPOD_DIM), dtype=complex)
        s[0, 0], s[1, 1], s[TRIPOD_ANCILLA, TRIPOD_ANCILLA] = self.detunings
        return s

    def couplings_at(self, t: float) -> np.ndarray:
        """``(omega0, omega1, omega_a)`` at time ``t``."""
        k = int(np.searchsorted(self._starts, t, side="right") - 1)
        k = min(max(k, 0), len(self.loops) - 1)
        a, b = self._starts[k], self._starts[k + 1]
        return self.loops[k].couplings_at((t - a) / (b - a))

    def hamiltonian_at(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= self.run_time:
            raise InvalidArgument(f"t={t} outside [0, {self.run_time}]")
        return self._hamiltonian(t)

    def _hamiltonian(self, t: float) -> np.ndarray:
        w0, w1, wa = self.couplings_at(t)
        h = self.frame_generator()
        e = TRIPOD_EXCITED
        for j, w in ((0, w0), (1, w1), (TRIPOD_ANCILLA, wa)):
            h[e, j] += self.coupling * w
            h[j, e] += self.coupling * np.conj(w)
        return h

    def segments(self) -> list[Segment]:
        s = self.frame_generator()
        out = []
        for k, loop in enumerate(self.loops):
            a, b = self._starts[k], self._starts[k + 1]
            for u0, u1 in zip(loop.breakpoints, loop.breakpoints[1:]):
                out.append(Segment(a + u0 * (b - a), a + u1 * (b - a), s,
                                   _leg_hamiltonian(self, loop, a, b)))
        return out


def _leg_hamiltonian(model, loop, a, b):
    static = model.frame_generator()
    e = TRIPOD_EXCITED
    idx = np.array([0, 1, TRIPOD_ANCILLA])
    omega = model.coupling

    def h(t):
        w = loop.couplings_at((t - a) / (b - a))
        m = static.copy()
        m[e, idx] = omega * w
        m[idx, e] = omega * np.conj(w)
        return m
    return h


@dataclass(frozen=True)
class DecayChannel:
    """Decay ``|source> -> |sink>`` with operator ``sqrt(gamma)|sink><source|``."""

    gamma: float
    source: int
    sink: int

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidArgument("gamma must be >= 0")

    def operators(self, dim: int) -> list[np.ndarray]:
        if self.gamma == 0:
            return []
        op = np.zeros((dim, dim), dtype=complex)
        op[self.sink, self.source] = np.sqrt(self.gamma)
        return [op]


@dataclass(frozen=True)
class DephasingChannel:
    """Dephasing in the ``(|k>, |e>)`` bases with operators
    ``sqrt(epsilon)(|e><e| - |k><k|)`` for each ``k`` in ``grounds``."""

    epsilon: float
    excited: int
    grounds: tuple[int, ...] = (0, 1)

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidArgument("epsilon must be >= 0")

    def operators(self, dim: int) -> list[np.ndarray]:
        if self.epsilon == 0:
            return []
        ops = []
        for k in self.grounds:
            op = np.zeros((dim, dim), dtype=complex)
            op[self.excited, self.excited] = np.sqrt(self.epsilon)
            op[k, k] = -np.sqrt(self.epsilon)
            ops.append(op)
        return ops


def decay_channel(model, gamma: float) -> DecayChannel:
    return DecayChannel(gamma, model.excited, model.sink)


def dephasing_channel(model, epsilon: float) -> DephasingChannel:
    return DephasingChannel(epsilon, model.excited)


def jump_operators(channels: Sequence, dim: int) -> list[np.ndarray]:
    """Flatten channel objects (or raw operator matrices) into a list of matrices."""
    ops = []
    for ch in channels:
        if hasattr(ch, "operators"):
            ops.extend(ch.operators(dim))
        else:
            op = np.asarray(ch, dtype=complex)
            if op.shape != (dim, dim):
                raise InvalidArgument(f"jump operator shape {op.shape} does not match dim {dim}")
            ops.append(op)
    return ops


def lindblad_rhs(h, channels: Sequence, rho) -> np.ndarray:
    """Right-hand side of the master equation for one density matrix."""
    h = np.asarray(h, dtype=complex)
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    if h.shape != rho.shape:
        raise InvalidArgument(f"dimension mismatch: H {h.shape}, rho {rho.shape}")
    if not is_hermitian(h, 1e-12):
        raise InvalidArgument("Hamiltonian is not Hermitian")
    out = -1j * (h @ rho - rho @ h)
    for op in jump_operators(channels, h.shape[0]):
        opd = op.conj().T
        lhl = opd @ op
        out += 2 * op @ rho @ opd - lhl @ rho - rho @ lhl
    return out


def dark_state(pair: PulsePair) -> np.ndarray:
    """``-omega1|0> + omega0|1>`` in the Lambda space."""
    d = np.zeros(LAMBDA_DIM, dtype=complex)
    d[0] = -pair.omega1
    d[1] = pair.omega0
    return d


def bright_state(pair: PulsePair) -> np.ndarray:
    b = np.zeros(LAMBDA_DIM, dtype=complex)
    b[0] = np.conj(pair.omega0)
    b[1] = np.conj(pair.omega1)
    return b


def with_detunings(model, detunings):
    return replace(model, detunings=tuple(detunings))
