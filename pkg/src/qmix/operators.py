"""Dense operator primitives: Hermitian/Jordan decompositions, the total-variation
norm and seeded random states.

Operators are plain ``(d, d)`` complex numpy arrays. Vectorization anywhere in
the package is column stacking: ``vec(A) = A.T.reshape(-1)``.
"""

from __future__ import annotations

from typing import NamedTuple, Union

import numpy as np

TOL_HERM = 1e-9
TOL_PSD = 1e-9
TOL_TRACE = 1e-9

Seed = Union[int, np.random.Generator]


class DecompositionError(np.linalg.LinAlgError):
    """Eigensolver failure, carrying a short condition report of the input."""

    def __init__(self, message: str, matrix: np.ndarray):
        cond = np.linalg.cond(matrix) if np.all(np.isfinite(matrix)) else np.inf
        report = (
            f"shape={matrix.shape}, finite={bool(np.all(np.isfinite(matrix)))}, "
            f"frobenius={np.linalg.norm(matrix) if np.all(np.isfinite(matrix)) else np.nan}, "
            f"cond={cond}"
        )
        super().__init__(f"{message} ({report})")
        self.report = report


class JordanParts(NamedTuple):
    positive: np.ndarray
    negative: np.ndarray


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def as_operator(a, dim: int | None = None) -> np.ndarray:
    """Coerce ``a`` to a square complex array, optionally checking its dimension."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"operator must be a non-empty square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} operator, got {a.shape[0]}x{a.shape[0]}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol: float = TOL_HERM) -> bool:
    a = as_operator(a)
    return bool(np.max(np.abs(a - dagger(a))) <= tol)


def is_density(rho, tol: float = TOL_PSD) -> bool:
    rho = as_operator(rho)
    if not is_hermitian(rho, tol):
        return False
    if abs(np.trace(rho) - 1.0) > TOL_TRACE:
        return False
    return bool(np.linalg.eigvalsh(_hermitize(rho))[0] >= -tol)


def is_unitary(u, tol: float = 1e-9) -> bool:
    u = as_operator(u)
    return bool(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol)


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


# ---------------------------------------------------------------------------
# decompositions and the TV norm
# ---------------------------------------------------------------------------

def hermitian_split(a) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Re(a), Im(a))`` with ``a = Re(a) + 1j * Im(a)``, both Hermitian."""
    a = as_operator(a)
    ad = dagger(a)
    return 0.5 * (a + ad), (a - ad) / 2j


def _eigh(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if not np.all(np.isfinite(b)):
        raise DecompositionError("non-finite entries in Hermitian operator", b)
    try:
        return np.linalg.eigh(b)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigendecomposition failed: {exc}", b) from exc


def jordan_decompose(b, tol: float = TOL_PSD) -> JordanParts:
    """Split a Hermitian operator into positive parts with disjoint supports.

    Eigenvalues in ``[-tol, 0]`` are treated as zero and belong to neither part,
    so ``positive @ negative`` vanishes up to rounding.

    Raises
    ------
    ValueError
        If ``b`` is not Hermitian within ``TOL_HERM``.
    DecompositionError
        If the eigensolver fails.
    """
    b = as_operator(b)
    if not np.all(np.isfinite(b)):
        raise DecompositionError("non-finite entries in Hermitian operator", b)
    if not is_hermitian(b):
        raise ValueError("jordan_decompose requires a Hermitian operator")
    w, v = _eigh(_hermitize(b))
    pos = np.where(w > 0.0, w, 0.0)
    neg = np.where(w < -tol, -w, 0.0)
    return JordanParts((v * pos) @ dagger(v), (v * neg) @ dagger(v))


def trace_norm_hermitian(b: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian operator (batched over leading axes)."""
    b = np.asarray(b, dtype=complex)
    if not np.all(np.isfinite(b)):
        raise DecompositionError("non-finite entries in Hermitian operator", b.reshape(-1, b.shape[-1]))
    return np.sum(np.abs(np.linalg.eigvalsh(_hermitize(b))), axis=-1)


def tv_norm(a) -> float:
    """Total-variation norm: trace norm of the real part plus that of the imaginary part."""
    re, im = hermitian_split(a)
    return float(trace_norm_hermitian(re) + trace_norm_hermitian(im))


def tv_distance(a, b) -> float:
    return tv_norm(as_operator(a) - as_operator(b))


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

def make_rng(seed: Seed, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator for ``seed``, optionally on a sub-stream.

    Sub-streams are keyed by integers, so ``make_rng(s, 3)`` is the same stream
    no matter how many other streams were drawn before it.
    """
    if isinstance(seed, np.random.Generator):
        if stream:
            raise ValueError("sub-streams require an integer seed")
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=stream)))


def _ginibre(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_density(dim: int, seed: Seed) -> np.ndarray:
    """Full-rank random state ``G G* / Tr(G G*)`` from a square Ginibre matrix."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    g = _ginibre(make_rng(seed), dim, dim)
    rho = g @ dagger(g)
    rho = _hermitize(rho)
    return rho / np.trace(rho).real


def random_pure_state(dim: int, seed: Seed) -> np.ndarray:
    """Haar-uniform unit vector in C^dim."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    psi = _ginibre(make_rng(seed), dim)
    return psi / np.linalg.norm(psi)


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def basis_state(dim: int, index: int) -> np.ndarray:
    """Density matrix ``|index><index|`` (0-based)."""
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for dim {dim}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).T.reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(dim, dim).T


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
