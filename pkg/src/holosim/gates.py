"""Holonomy algebra, test-gate presets and their compilation into pulse
schedules (Lambda scheme) or parameter loops (tripod scheme)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .models import TRIPOD_ANCILLA, TRIPOD_DIM, LambdaModel, TripodModel
from .pulses import DEFAULT_TRUNCATION, PulseSchedule
from .quantum_core import IDENTITY2, PAULI, SIGMA_Z, pauli_vector_operator

PRESETS = ("phase-pi-2", "hadamard")
SCHEMES = ("na", "a")

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PHASE_PI_2 = np.diag([1, 1j]).astype(complex)

_HADAMARD_NORM = math.sqrt(2 * (2 - math.sqrt(2)))
NA_COUPLINGS = {
    "phase-pi-2": [
        (-1 / math.sqrt(2), 1 / math.sqrt(2)),
        (-1 / math.sqrt(2), np.exp(-1j * math.pi / 4) / math.sqrt(2)),
    ],
    "hadamard": [(1 / _HADAMARD_NORM, (math.sqrt(2) - 1) / _HADAMARD_NORM)],
}


@dataclass(frozen=True)
class BlochAxis:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if abs(math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2) - 1) > 1e-12:
            raise InvalidArgument("Bloch axis must be a unit vector")

    @classmethod
    def from_vector(cls, v) -> "BlochAxis":
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        return cls(*map(float, v))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "BlochAxis":
        return cls(math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def theta(self) -> float:
        return math.atan2(math.hypot(self.x, self.y), self.z)

    @property
    def phi(self) -> float:
        return math.atan2(self.y, self.x) % (2 * math.pi)


@dataclass(frozen=True, eq=False)
class GateTarget:
    """2x2 unitary; compared to simulated outputs up to global phase."""

    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2) or not np.allclose(m.conj().T @ m, IDENTITY2, atol=1e-12, rtol=0):
            raise InvalidArgument("gate target must be a 2x2 unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def unitary_infidelity(u, v) -> float:
    """``1 - |tr(u^+ v)|^2 / d^2``; zero iff equal up to global phase."""
    u, v = np.asarray(u), np.asarray(v)
    d = u.shape[0]
    return float(1 - abs(np.trace(u.conj().T @ v)) ** 2 / d ** 2)


def axis_from_couplings(omega0: complex, omega1: complex) -> BlochAxis:
    """Axis ``n`` of the gate ``n . sigma`` produced by a pi pulse pair.

    ``n`` is the Bloch vector of the dark state ``-omega1|0> + omega0|1>``,
    i.e. ``omega0/omega1 = -tan(theta/2) exp(i phi)``.  ``omega1 = 0`` gives
    the south pole.
    """
    norm = abs(omega0) ** 2 + abs(omega1) ** 2
    if abs(norm - 1) > 1e-12:
        raise InvalidArgument("couplings must satisfy |w0|^2 + |w1|^2 = 1")
    transverse = -2 * omega0 * np.conj(omega1)
    return BlochAxis.from_vector([transverse.real, transverse.imag, abs(omega1) ** 2 - abs(omega0) ** 2])


def couplings_from_axis(n: BlochAxis) -> tuple[complex, complex]:
    """Couplings with ``omega1 = cos(theta/2) >= 0``."""
    th, ph = n.theta, n.phi
    return complex(-np.exp(1j * ph) * math.sin(th / 2)), complex(math.cos(th / 2))


def ideal_gate(n: BlochAxis) -> GateTarget:
    return GateTarget(pauli_vector_operator(n.vector), "n.sigma")


def compose(m: BlochAxis, n: BlochAxis) -> GateTarget:
    """Gate of pair ``n`` followed by pair ``m``: ``m.n + i sigma.(m x n)``."""
    mv, nv = m.vector, n.vector
    cross = np.cross(mv, nv)
    mat = np.dot(mv, nv) * IDENTITY2 + 1j * sum(c * s for c, s in zip(cross, PAULI))
    return GateTarget(mat, "composite")


def gate_target(preset: str) -> GateTarget:
    if preset == "phase-pi-2":
        return GateTarget(PHASE_PI_2, preset)
    if preset == "hadamard":
        return GateTarget(HADAMARD, preset)
    raise InvalidArgument(f"unknown gate preset {preset!r}; choose from {PRESETS}")


def compile_nonadiabatic(
    gate: str | Sequence,
    beta: float,
    separation: float = 0.0,
    prep_offset: float = 0.0,
    readout_offset: float = 0.0,
    truncation_ratio: float = DEFAULT_TRUNCATION,
    exact_area: bool = False,
) -> PulseSchedule:
    """Sech pi-pulse pairs for a preset name or a list of axes/couplings.

    List items may be :class:`BlochAxis` or ``(omega0, omega1)`` tuples;
    pairs are applied in list order.
    """
    if isinstance(gate, str):
        if gate not in NA_COUPLINGS:
            raise InvalidArgument(f"unknown gate preset {gate!r}; choose from {PRESETS}")
        couplings = NA_COUPLINGS[gate]
    else:
        couplings = [couplings_from_axis(g) if isinstance(g, BlochAxis) else tuple(g) for g in gate]
    return PulseSchedule.from_couplings(couplings, beta, separation, prep_offset, readout_offset,
                                        truncation_ratio, exact_area)


def lambda_model(gate, beta, separation=0.0, **kwargs) -> LambdaModel:
    model_keys = ("detunings", "field_error", "gap_policy")
    model_kw = {k: kwargs.pop(k) for k in model_keys if k in kwargs}
    return LambdaModel(compile_nonadiabatic(gate, beta, separation, **kwargs), **model_kw)


# ---------------------------------------------------------------------------
# adiabatic loops

LOOP_FAMILIES = ("U1", "U2")


def family_couplings(family: str, theta, phi):
    """``(omega0, omega1, omega_a)`` for one of the two loop families."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if family == "U1":
        w0 = np.zeros_like(theta, dtype=complex)
        w1 = -np.sin(theta / 2) * np.exp(1j * phi)
        wa = np.cos(theta / 2) + 0j
    elif family == "U2":
        w0 = np.sin(theta) * np.cos(phi) + 0j
        w1 = np.sin(theta) * np.sin(phi) + 0j
        wa = np.cos(theta) + 0j
    else:
        raise InvalidArgument(f"unknown loop family {family!r}")
    return np.stack([w0, w1, wa], axis=-1)


@dataclass(frozen=True)
class AdiabaticLoop:
    """Closed piecewise-linear path through ``(theta, phi)`` waypoints,
    traversed at constant speed in the ``(theta, phi)`` coordinates."""

    family: str
    vertices: tuple[tuple[float, float], ...]
    breakpoints: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.family not in LOOP_FAMILIES:
            raise InvalidArgument(f"unknown loop family {self.family!r}")
        verts = tuple((float(a), float(b)) for a, b in self.vertices)
        if len(verts) < 2:
            raise InvalidArgument("a loop needs at least two vertices")
        object.__setattr__(self, "vertices", verts)
        legs = np.array([math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(verts, verts[1:])])
        total = legs.sum()
        bp = np.concatenate([[0.0], np.cumsum(legs) / total]) if total > 0 else np.linspace(0, 1, len(verts))
        bp[-1] = 1.0
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in bp))
        object.__setattr__(self, "_length", float(total))

    @property
    def closed(self) -> bool:
        return np.allclose(self.vertices[0], self.vertices[-1], atol=1e-12, rtol=0)

    @property
    def length(self) -> float:
        return self._length

    def point(self, u: float) -> tuple[float, float]:
        """Waypoint-path position at fractional arc length ``u`` in [0, 1]."""
        u = min(max(float(u), 0.0), 1.0)
        bp = self.breakpoints
        k = min(int(np.searchsorted(bp, u, side="right")) - 1, len(bp) - 2)
        k = max(k, 0)
        span = bp[k + 1] - bp[k]
        s = 0.0 if span == 0 else (u - bp[k]) / span
        (t0, p0), (t1, p1) = self.vertices[k], self.vertices[k + 1]
        return t0 + s * (t1 - t0), p0 + s * (p1 - p0)

    def couplings_at(self, u: float) -> np.ndarray:
        theta, phi = self.point(u)
        return family_couplings(self.family, theta, phi)

    def reversed(self) -> "AdiabaticLoop":
        return AdiabaticLoop(self.family, tuple(reversed(self.vertices)))

    def solid_angle(self) -> float:
        return loop_solid_angle(self)


def loop_solid_angle(loop: AdiabaticLoop) -> float:
    """Signed ``oint (1 - cos theta) dphi`` along the waypoint path."""
    if not loop.closed:
        raise InvalidArgument("solid angle needs a closed loop")
    total = 0.0
    for (ta, pa), (tb, pb) in zip(loop.vertices, loop.vertices[1:]):
        dphi = pb - pa
        if dphi == 0:
            continue
        if abs(tb - ta) < 1e-15:
            mean_cos = math.cos(ta)
        else:
            mean_cos = (math.sin(tb) - math.sin(ta)) / (tb - ta)
        total += dphi * (1 - mean_cos)
    return total


# The pi/2 loop is traversed against the waypoint order (0,0) -> (pi/2,0) ->
# (pi/2,pi) -> (0,pi): with the couplings entering as |e><j|, that order
# yields diag(1, -i).  Both Hadamard loops run in waypoint order.  test_gates
# checks all three against the parallel-transport holonomy and the
# large-Omega*T simulation.
PHASE_LOOP = AdiabaticLoop("U1", ((0, 0), (0, math.pi), (math.pi / 2, math.pi),
                                  (math.pi / 2, 0), (0, 0)))
HADAMARD_LOOPS = (
    AdiabaticLoop("U2", ((0, 0), (math.pi / 2, 0), (math.pi / 2, -math.pi / 4),
                         (0, -math.pi / 4), (0, 0))),
    AdiabaticLoop("U1", ((0, 0), (math.pi / 2, 0), (math.pi / 2, 2 * math.pi),
                         (0, 2 * math.pi), (0, 0))),
)
ADIABATIC_LOOPS = {"phase-pi-2": (PHASE_LOOP,), "hadamard": HADAMARD_LOOPS}


def compile_adiabatic(
    gate: str | Sequence[AdiabaticLoop],
    coupling: float,
    run_time: float,
    detunings: tuple[float, float, float] = (0.0, 0.0, 0.0),
    per_loop_time: bool = False,
) -> TripodModel:
    """Tripod model running the preset's loops (or the given ones).

    ``run_time`` is the total time, split between loops by path length,
    unless ``per_loop_time`` is set, in which case every loop gets
    ``run_time``.
    """
    if coupling <= 0 or run_time <= 0:
        raise InvalidArgument("coupling strength and run time must be positive")
    if isinstance(gate, str):
        if gate not in ADIABATIC_LOOPS:
            raise InvalidArgument(f"unknown gate preset {gate!r}; choose from {PRESETS}")
        loops = ADIABATIC_LOOPS[gate]
    else:
        loops = tuple(gate)
    if per_loop_time:
        return TripodModel(coupling, run_time * len(loops), loops, detunings,
                           loop_times=(run_time,) * len(loops))
    return TripodModel(coupling, run_time, loops, detunings)


def dark_projector(couplings) -> np.ndarray:
    """Projector onto the ground states orthogonal to the bright state, as a
    3x3 matrix on ``(|0>, |1>, |a>)``."""
    b = np.conj(np.asarray(couplings, dtype=complex))
    b = b / np.linalg.norm(b)
    return np.eye(3) - np.outer(b, b.conj())


def adiabatic_holonomy(loops: Sequence[AdiabaticLoop], steps: int = 4000) -> np.ndarray:
    """Holonomy on ``(|0>, |1>)`` from ordered products of dark-space
    projectors along the loops (parallel transport), made unitary by polar
    decomposition.  Independent of any time integration."""
    w = np.eye(3, dtype=complex)
    for loop in loops:
        for u in np.linspace(0, 1, steps + 1)[1:]:
            w = dark_projector(loop.couplings_at(u)) @ w
    block = w[:2, :2]
    left, _, right = np.linalg.svd(block)
    return left @ right


def loop_phase_gate(gamma: float) -> np.ndarray:
    """``exp(i gamma/2 |1><1|)`` up to the sign convention of the loop."""
    return np.diag([1.0, np.exp(0.5j * gamma)])


__all__ = [
    "ADIABATIC_LOOPS", "AdiabaticLoop", "BlochAxis", "GateTarget", "HADAMARD", "NA_COUPLINGS",
    "PHASE_PI_2", "PRESETS", "SCHEMES", "SIGMA_Z", "TRIPOD_ANCILLA", "TRIPOD_DIM",
    "adiabatic_holonomy", "axis_from_couplings", "compile_adiabatic", "compile_nonadiabatic",
    "compose", "couplings_from_axis", "dark_projector", "family_couplings", "gate_target",
    "ideal_gate", "lambda_model", "loop_solid_angle", "unitary_infidelity",
]
