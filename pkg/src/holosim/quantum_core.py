"""Dense small-dimension linear algebra, qubit states and Haar sampling.

Basis orderings are fixed per scheme:

* Lambda system: ``(|0>, |1>, |e>, |g>)``, dimension 4.
* Tripod system: ``(|0>, |1>, |a>, |e>, |g>)``, dimension 5.

The qubit always lives on the first two basis vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

for _m in (IDENTITY2, *PAULI):
    _m.setflags(write=False)


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite square complex array of dimension 2..5."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {a.shape}")
    if not 2 <= a.shape[0] <= 5:
        raise InvalidArgument(f"matrix dimension {a.shape[0]} outside [2, 5]")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument("matrix has non-finite entries")
    return a


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise InvalidArgument(f"dimension mismatch: {a.shape} vs {b.shape}")


def add(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_shape(a, b)
    return a + b


def multiply(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_shape(a, b)
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_shape(a, b)
    return a @ b - b @ a


def expectation(m, psi) -> complex:
    """``<psi|m|psi>`` for a ket ``psi``."""
    m = as_matrix(m)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (m.shape[0],):
        raise InvalidArgument(f"state of shape {psi.shape} does not match {m.shape}")
    return complex(np.vdot(psi, m @ psi))


def is_hermitian(m, atol=1e-9) -> bool:
    m = np.asarray(m)
    return bool(np.allclose(m, m.conj().T, atol=atol, rtol=0))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(index: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def pauli_vector_operator(n) -> np.ndarray:
    """``n . sigma`` for a real 3-vector ``n``."""
    n = np.asarray(n, dtype=float)
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


@dataclass(frozen=True)
class QubitState:
    """Normalized pure qubit state ``c0|0> + c1|1>``."""

    c0: complex
    c1: complex

    def __post_init__(self):
        norm = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgument(f"qubit state not normalized (|c|^2 = {norm})")

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "QubitState":
        return cls(complex(np.cos(theta / 2)), complex(np.exp(1j * phi) * np.sin(theta / 2)))

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "QubitState":
        a = np.asarray(amplitudes, dtype=complex)
        a = a / np.linalg.norm(a)
        return cls(complex(a[0]), complex(a[1]))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.c0, self.c1], dtype=complex)

    @property
    def bloch_angles(self) -> tuple[float, float]:
        theta = 2 * np.arctan2(abs(self.c1), abs(self.c0))
        phi = float(np.angle(self.c1) - np.angle(self.c0)) % (2 * np.pi) if abs(self.c1) > 0 else 0.0
        return float(theta), phi

    @property
    def bloch_vector(self) -> np.ndarray:
        x = 2 * (np.conj(self.c0) * self.c1)
        return np.array([x.real, x.imag, abs(self.c0) ** 2 - abs(self.c1) ** 2])


def haar_qubit_amplitudes(count: int, seed: int) -> np.ndarray:
    """Array of shape ``(count, 2)`` with Haar-random qubit amplitudes.

    Uses numpy's PCG64 generator (``numpy.random.default_rng``): ``cos(theta)``
    is drawn uniform on [-1, 1], then ``phi`` uniform on [0, 2 pi).
    """
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    rng = np.random.default_rng(seed)
    cos_theta = rng.uniform(-1.0, 1.0, size=count)
    phi = rng.uniform(0.0, 2 * np.pi, size=count)
    c0 = np.sqrt((1 + cos_theta) / 2)
    c1 = np.sqrt((1 - cos_theta) / 2) * np.exp(1j * phi)
    amps = np.stack([c0, c1], axis=1).astype(complex)
    return amps / np.linalg.norm(amps, axis=1, keepdims=True)


def haar_qubit_sample(count: int, seed: int) -> list[QubitState]:
    return [QubitState(complex(a), complex(b)) for a, b in haar_qubit_amplitudes(count, seed)]


def embed_qubit(chi, dim: int) -> np.ndarray:
    """Ket ``(c0, c1, 0, ..., 0)`` in a ``dim``-level space."""
    if dim < 2:
        raise InvalidArgument("dim must be >= 2")
    amps = chi.amplitudes if isinstance(chi, QubitState) else np.asarray(chi, dtype=complex)
    out = np.zeros(dim, dtype=complex)
    out[:2] = amps
    return out


def project_qubit_block(m) -> np.ndarray:
    """Top-left 2x2 block in the ``(|0>, |1>)`` ordering."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise InvalidArgument(f"cannot project matrix of shape {m.shape}")
    return m[:2, :2].copy()


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray
    hermitian_tol: float = 1e-9
    trace_tol: float = 1e-8
    positivity_tol: float = 1e-7

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgument(f"density operator must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidArgument("density operator has non-finite entries")
        if not is_hermitian(m, self.hermitian_tol):
            raise InvalidArgument("density operator is not Hermitian")
        if abs(np.trace(m) - 1.0) > self.trace_tol:
            raise InvalidArgument(f"density operator trace {np.trace(m).real!r} != 1")
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m)[0] < -self.positivity_tol:
            raise InvalidArgument("density operator is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_ket(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def population(self, index: int) -> float:
        return float(self.matrix[index, index].real)
