"""Gate fidelity against a target unitary, Haar statistics over input states
and closed-form fidelities for field errors of a single pulse pair."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .errors import IntegrationFailure, InvalidArgument
from .propagate import driven_time, qubit_process
from .quantum_core import PAULI, IDENTITY2, DensityOperator, QubitState, embed_qubit

_SIGMAS = (IDENTITY2, *PAULI)


def _target_matrix(target) -> np.ndarray:
    return np.asarray(getattr(target, "matrix", target), dtype=complex)


def _amplitudes(chi) -> np.ndarray:
    return chi.amplitudes if isinstance(chi, QubitState) else np.asarray(chi, dtype=complex)


def gate_fidelity(rho_out, target, chi) -> float:
    """``<chi| U^+ P rho_out P U |chi>`` with ``P`` the qubit projector.

    Population outside the qubit block simply does not count, so leakage
    lowers the fidelity.
    """
    rho = np.asarray(getattr(rho_out, "matrix", rho_out), dtype=complex)
    u = _target_matrix(target)
    if rho.ndim != 2 or rho.shape[0] < 2 or u.shape != (2, 2):
        raise InvalidArgument("need a density matrix of dim >= 2 and a 2x2 target")
    v = u @ _amplitudes(chi)
    return float(np.real(np.vdot(v, rho[:2, :2] @ v)))


@dataclass(frozen=True, eq=False)
class FrameRotation:
    """``rho -> exp(i S t) rho exp(-i S t)`` for a real diagonal ``S``."""

    generator: np.ndarray
    time: float

    def __post_init__(self):
        s = np.asarray(self.generator)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise InvalidArgument("frame generator must be square")
        if np.any(s - np.diag(np.diag(s))) or np.any(np.imag(np.diag(s))):
            raise InvalidArgument("frame generator must be real diagonal")
        object.__setattr__(self, "generator", np.real(np.diag(s)).astype(float))

    def phases(self) -> np.ndarray:
        """``exp(i (s_j - s_k) t)`` as a matrix to multiply elementwise."""
        p = np.exp(1j * self.generator * self.time)
        return np.outer(p, p.conj())

    def apply(self, rho):
        is_density = isinstance(rho, DensityOperator)
        m = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
        if m.shape[-2:] != (len(self.generator),) * 2:
            raise InvalidArgument("frame generator does not match operator dimension")
        out = m * self.phases()
        return DensityOperator(out) if is_density else out


def apply_frame_rotation(rho, s, t: float):
    return FrameRotation(np.asarray(s), t).apply(rho)


def model_frame(model, t0=None, t1=None) -> FrameRotation:
    """Co-rotating frame at readout; the clock starts at ``t0`` (default:
    preparation time) and counts the time the model actually evolves."""
    return FrameRotation(model.frame_generator(), driven_time(model, t0, t1))


# ---------------------------------------------------------------------------
# process-level evaluation


def output_blocks(e: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Full output states ``sum_jk c_j conj(c_k) E[j, k]`` for a stack of
    amplitude rows; shape ``(n, d, d)``."""
    return np.einsum("nj,nk,jkab->nab", amps, amps.conj(), e)


def sample_fidelities(e: np.ndarray, target, amps: np.ndarray) -> np.ndarray:
    """Fidelity of every input state given the matrix-unit images ``e``."""
    v = amps @ _target_matrix(target).T
    blocks = e[:, :, :2, :2]
    return np.real(np.einsum("na,nj,nk,jkab,nb->n", v.conj(), amps, amps.conj(), blocks, v))


def haar_average(e: np.ndarray, target) -> float:
    """Exact Haar average over pure inputs from the second moment
    ``E[c_j c_b conj(c_k c_a)] = (d_jk d_ab + d_ja d_bk) / 6``."""
    u = _target_matrix(target)
    m = np.einsum("ia,jkab,bl->jkil", u.conj().T, e[:, :, :2, :2], u)
    total = sum(np.trace(m[j, j]) for j in range(2)) + sum(m[j, k, j, k] for j in range(2) for k in range(2))
    return float(np.real(total) / 6)


def bloch_quadratic(e: np.ndarray, target):
    """Coefficients of ``F(r) = a + b.r + r.C.r`` on the Bloch ball."""
    u = _target_matrix(target)
    blocks = e[:, :, :2, :2]
    images = [blocks[0, 0] + blocks[1, 1],
              blocks[0, 1] + blocks[1, 0],
              -1j * blocks[0, 1] + 1j * blocks[1, 0],
              blocks[0, 0] - blocks[1, 1]]
    t = np.array([[np.trace(s @ a).real / 4 for a in images] for s in _SIGMAS])
    rot = np.array([[0.5 * np.trace(si @ u @ sj @ u.conj().T).real for sj in PAULI] for si in PAULI])
    a = t[0, 0]
    b = t[0, 1:] + rot.T @ t[1:, 0]
    c = rot.T @ t[1:, 1:]
    return a, b, 0.5 * (c + c.T)


def sphere_maximum(a: float, b: np.ndarray, c: np.ndarray) -> tuple[float, np.ndarray]:
    """Global maximum of ``a + b.r + r.C.r`` over unit vectors ``r``.

    Stationary points satisfy ``(C - lam) r = -b/2``; the maximum has the
    largest multiplier, ``lam >= mu_max``, found from the secular equation.
    """
    mu, vecs = np.linalg.eigh(c)
    bt = vecs.T @ b
    top = mu[-1]
    scale = max(1.0, np.max(np.abs(mu)), np.linalg.norm(b))
    degenerate = np.abs(mu - top) <= 1e-12 * scale
    def radius(lam):
        return np.sum(bt ** 2 / (4 * (mu - lam) ** 2)) - 1.0
    if np.all(np.abs(bt[degenerate]) <= 1e-14 * scale):
        rest = ~degenerate
        part = np.zeros(3)
        part[rest] = -bt[rest] / (2 * (mu[rest] - top))
        if part @ part <= 1.0:
            # hard case: fill the remaining length along the top eigenspace
            k = int(np.flatnonzero(degenerate)[0])
            part[k] = math.sqrt(1.0 - part @ part)
            r = vecs @ part
            return float(a + b @ r + r @ c @ r), r
    lo = top + max(0.999 * np.linalg.norm(bt[degenerate]) / 2, 1e-15 * scale)
    hi = top + np.linalg.norm(b) / 2 * 1.001 + 1e-300
    lam = brentq(radius, lo, hi, xtol=1e-16 * scale, rtol=1e-15, maxiter=500)
    r = vecs @ (-bt / (2 * (mu - lam)))
    r = r / np.linalg.norm(r)
    return float(a + b @ r + r @ c @ r), r


def sphere_extrema(e: np.ndarray, target) -> tuple[float, float]:
    """Exact ``(max, min)`` fidelity over all pure inputs."""
    a, b, c = bloch_quadratic(e, target)
    fmax, _ = sphere_maximum(a, b, c)
    neg, _ = sphere_maximum(-a, -b, -c)
    return fmax, -neg


@dataclass(frozen=True)
class FidelityStats:
    """Fidelity statistics over a Haar sample.

    ``max``/``avg``/``min`` are sample statistics.  ``sphere_max`` and
    ``sphere_min`` are the exact extremes over the whole Bloch sphere and
    ``haar_avg`` the exact Haar average; ``trace_drift`` and
    ``min_eigenvalue`` are worst cases over the sampled output states.
    """

    max: float
    avg: float
    min: float
    sample_count: int
    seed: int | None = None
    sphere_max: float = math.nan
    sphere_min: float = math.nan
    haar_avg: float = math.nan
    std: float = math.nan
    trace_drift: float = 0.0
    min_eigenvalue: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.min - 1e-12 <= self.avg <= self.max + 1e-12:
            raise InvalidArgument("fidelity stats must satisfy min <= avg <= max")

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.sample_count)


def stats_from_process(e: np.ndarray, target, amps: np.ndarray, seed=None, diagnostics=None,
                       frame: FrameRotation | None = None) -> FidelityStats:
    if frame is not None:
        e = e * frame.phases()
    f = sample_fidelities(e, target, amps)
    outs = output_blocks(e, amps)
    traces = np.real(np.einsum("naa->n", outs))
    herm = 0.5 * (outs + np.conj(np.swapaxes(outs, 1, 2)))
    lam = float(np.linalg.eigvalsh(herm)[:, 0].min())
    smax, smin = sphere_extrema(e, target)
    return FidelityStats(
        max=float(f.max()), avg=float(f.mean()), min=float(f.min()), sample_count=len(f), seed=seed,
        sphere_max=smax, sphere_min=smin, haar_avg=haar_average(e, target),
        std=float(f.std(ddof=1)) if len(f) > 1 else 0.0,
        trace_drift=float(np.max(np.abs(traces - 1))), min_eigenvalue=lam,
        diagnostics=dict(diagnostics or {}))


def fidelity_stats(model, channels, target, sample, cfg=None, seed=None,
                   frame_origin: float | None = None) -> FidelityStats:
    """Fidelity statistics of ``model`` (with Lindblad ``channels``) against
    ``target`` over the input ``sample`` (QubitStates or amplitude rows).

    The process is integrated once on the qubit matrix units and every input
    is obtained by linearity.  When the model has detunings, outputs are
    viewed in the co-rotating frame with its clock starting at
    ``frame_origin`` (default: preparation time).
    """
    if isinstance(sample, np.ndarray):
        amps = np.asarray(sample, dtype=complex)
    else:
        amps = np.array([_amplitudes(s) for s in sample], dtype=complex)
    if amps.ndim != 2 or amps.shape[1] != 2 or len(amps) == 0:
        raise InvalidArgument("sample must be a nonempty list of qubit states")
    try:
        e, diag = qubit_process(model, channels, cfg=cfg)
    except IntegrationFailure as exc:
        exc.diagnostics.setdefault("inputs", "qubit matrix units |0><0|, |0><1|, |1><1|")
        raise
    frame = model_frame(model, frame_origin) if model.has_detuning else None
    return stats_from_process(e, target, amps, seed, diag.as_dict(), frame)


# ---------------------------------------------------------------------------
# field errors of a single pulse pair


def _normalized(omega, d0, d1):
    w = np.asarray(omega, dtype=complex)
    wt = w + np.array([d0, d1], dtype=complex)
    wt = wt / np.linalg.norm(wt)
    return w, wt


def _coupling3(w) -> np.ndarray:
    """Qubit-plus-excited block of ``w0|e><0| + w1|e><1| + h.c.``."""
    h = np.zeros((3, 3), dtype=complex)
    h[2, :2] = w
    h[:2, 2] = np.conj(w)
    return h


@dataclass(frozen=True)
class PerturbativeFidelity:
    exact: float
    second_order: float


def perturbative_fidelity(chi, omega, d_omega0: complex, d_omega1: complex,
                          d_area: float) -> PerturbativeFidelity:
    """Fidelity of a pulse pair with couplings ``normalize(omega + d_omega)``
    and area ``pi + d_area`` against the ideal gate of ``omega``.

    ``exact`` uses the closed forms of ``exp(i pi H0)`` and
    ``exp(-i a H~0)``; ``second_order`` keeps terms up to second order in
    the deviations (with ``d_omega`` replaced by the deviation of the
    renormalized couplings).
    """
    w, wt = _normalized(omega, d_omega0, d_omega1)
    psi = np.zeros(3, dtype=complex)
    psi[:2] = _amplitudes(chi)
    h0, ht = _coupling3(w), _coupling3(wt)
    h02, ht2 = h0 @ h0, ht @ ht
    a = math.pi + d_area
    amp = np.vdot(psi, (np.eye(3) - 2 * h02 - (1 - math.cos(a)) * (ht2 - 2 * h02 @ ht2)) @ psi)
    exact = abs(amp) ** 2

    dw = wt - w
    bright_overlap = abs(np.vdot(np.conj(w), psi[:2])) ** 2
    n = _axis(w)
    dn = _axis_variation(w, dw)
    r = QubitState.from_amplitudes(psi[:2]).bloch_vector
    second = 1 - d_area ** 2 * bright_overlap - dn @ dn + float(r @ np.cross(n, dn)) ** 2
    return PerturbativeFidelity(float(exact), float(second))


def _axis(w) -> np.ndarray:
    t = -2 * w[0] * np.conj(w[1])
    return np.array([t.real, t.imag, abs(w[1]) ** 2 - abs(w[0]) ** 2])


def _axis_variation(w, dw) -> np.ndarray:
    """First-order change of the gate axis under ``w -> w + dw``."""
    t = -2 * (dw[0] * np.conj(w[1]) + w[0] * np.conj(dw[1]))
    dz = 2 * np.real(np.conj(w[1]) * dw[1]) - 2 * np.real(np.conj(w[0]) * dw[0])
    return np.array([t.real, t.imag, dz])


def pair_gate_error_exact(chi, omega, d_omega0, d_omega1, d_area) -> float:
    """Same quantity as ``perturbative_fidelity(...).exact`` via matrix
    exponentials, with no algebraic simplification."""
    w, wt = _normalized(omega, d_omega0, d_omega1)
    psi = np.zeros(3, dtype=complex)
    psi[:2] = _amplitudes(chi)
    u = expm(1j * math.pi * _coupling3(w)) @ expm(-1j * (math.pi + d_area) * _coupling3(wt))
    return float(abs(np.vdot(psi, u @ psi)) ** 2)


def perturbative_avg(omega0, omega1, d_omega0, d_omega1, d_area) -> float:
    """Haar-averaged second-order fidelity of a field-error pulse pair:
    ``1 - d_area^2/2 - (8/3)(|dw|^2 - |<w, dw>|^2)`` for the deviation
    ``dw`` of the renormalized couplings."""
    w, wt = _normalized((omega0, omega1), d_omega0, d_omega1)
    dw = wt - w
    overlap = np.vdot(w, dw)
    return float(1 - d_area ** 2 / 2 - (8 / 3) * (np.vdot(dw, dw).real - abs(overlap) ** 2))


def perturbative_avg_printed(omega0, omega1, d_omega0, d_omega1, d_area) -> float:
    """``1 - d_area^2/2 - 2|dw|^2 + 4|dw0 w0* + dw1 w1*|^2`` with the raw
    deviations.  Kept for comparison: it disagrees with the exact Haar
    average at second order (see tests)."""
    w = np.array([omega0, omega1], dtype=complex)
    dw = np.array([d_omega0, d_omega1], dtype=complex)
    return float(1 - d_area ** 2 / 2 - 2 * np.vdot(dw, dw).real + 4 * abs(np.vdot(w, dw)) ** 2)


def haar_average_pure(amplitude_map) -> float:
    """Haar average of ``|<psi|A|psi>|^2`` for a 2x2 ``A``:
    ``(|tr A|^2 + tr A A^+) / 6``."""
    a = np.asarray(amplitude_map, dtype=complex)
    return float((abs(np.trace(a)) ** 2 + np.trace(a @ a.conj().T).real) / 6)


def pair_gate_average_exact(omega, d_omega0, d_omega1, d_area) -> float:
    """Exact Haar average of the field-error fidelity."""
    w, wt = _normalized(omega, d_omega0, d_omega1)
    u = expm(1j * math.pi * _coupling3(w)) @ expm(-1j * (math.pi + d_area) * _coupling3(wt))
    return haar_average_pure(u[:2, :2])
