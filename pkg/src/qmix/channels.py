"""Quantum channels in Kraus form.

A :class:`KrausChannel` is an immutable list of Kraus operators ``K_i`` acting as
``M(a) = sum_i K_i a K_i^*``. Construction only checks shapes; CPTP checks live in
:func:`validate` so that a malformed channel can still be loaded and reported on.
The zoo constructors (:func:`omega`, :func:`qubit_depolarizing`, ...) validate
before returning.

Conventions: column-stacking ``vec``; the superoperator of ``M`` is
``sum_i conj(K_i) (x) K_i`` and the Choi matrix is unnormalized,
``sum_ij E_ij (x) M(E_ij)`` (trace ``d``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import unitary_group

from qmix.operators import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    TOL_PSD,
    Seed,
    as_operator,
    dagger,
    is_unitary,
    make_rng,
    unvec,
    vec,
)

TOL_TP = 1e-9
TOL_GROUP = 1e-9
TOL_PROB = 1e-12


class ChannelError(ValueError):
    """Structural problem with a channel or invalid constructor parameters."""


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Channel ``a -> sum_i K_i a K_i^*``.

    ``family`` and ``params`` optionally record which zoo constructor built the
    channel; they are carried through JSON so closed-form results can be looked up.
    """

    kraus: tuple
    family: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        ops = [np.array(k, dtype=complex) for k in self.kraus]
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        dims = {k.shape for k in ops}
        if len(dims) != 1:
            raise ChannelError(f"Kraus operators have mismatched shapes: {sorted(dims)}")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or shape[0] < 1:
            raise ChannelError(f"Kraus operators must be square, got shape {shape}")
        for k in ops:
            k.setflags(write=False)
        stacked = np.stack(ops)
        stacked.setflags(write=False)
        object.__setattr__(self, "kraus", tuple(ops))
        object.__setattr__(self, "_stack", stacked)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def dim(self) -> int:
        return self._stack.shape[1]

    @property
    def stack(self) -> np.ndarray:
        """Kraus operators as a read-only ``(n, d, d)`` array."""
        return self._stack

    def __call__(self, a) -> np.ndarray:
        return apply(self, a)

    def __len__(self) -> int:
        return len(self.kraus)


@dataclass(frozen=True)
class ValidationReport:
    tp_residual: float
    choi_min_eigenvalue: float
    trace_preserving: bool
    completely_positive: bool

    @property
    def passed(self) -> bool:
        return self.trace_preserving and self.completely_positive

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "trace_preserving": self.trace_preserving,
            "completely_positive": self.completely_positive,
            "tp_residual": self.tp_residual,
            "choi_min_eigenvalue": self.choi_min_eigenvalue,
        }


# ---------------------------------------------------------------------------
# action and representations
# ---------------------------------------------------------------------------

def apply(ch: KrausChannel, a) -> np.ndarray:
    """``sum_i K_i a K_i^*``; ``a`` may carry leading batch axes."""
    a = np.asarray(a, dtype=complex)
    if a.shape[-2:] != (ch.dim, ch.dim):
        raise ChannelError(f"operator shape {a.shape} does not match channel dim {ch.dim}")
    k = ch.stack
    return np.einsum("kij,...jl,kml->...im", k, a, k.conj(), optimize=True)


def apply_adjoint(ch: KrausChannel, a) -> np.ndarray:
    """Heisenberg-picture map ``sum_i K_i^* a K_i``."""
    a = np.asarray(a, dtype=complex)
    k = ch.stack
    return np.einsum("kji,...jl,klm->...im", k.conj(), a, k, optimize=True)


def compose(f: KrausChannel, g: KrausChannel) -> KrausChannel:
    """Channel ``f o g`` (apply ``g`` first) with Kraus set ``{F_i G_j}``."""
    if f.dim != g.dim:
        raise ChannelError(f"cannot compose channels of dims {f.dim} and {g.dim}")
    return KrausChannel(tuple(fi @ gj for fi in f.kraus for gj in g.kraus))


def power_apply(ch: KrausChannel, rho, n: int) -> np.ndarray:
    """``M^n(rho)`` by repeated application."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = as_operator(rho, ch.dim)
    for _ in range(n):
        out = apply(ch, out)
    return out


def to_superoperator(ch: KrausChannel) -> np.ndarray:
    """``d^2 x d^2`` matrix ``S`` with ``S @ vec(a) == vec(M(a))`` (column stacking)."""
    k = ch.stack
    d = ch.dim
    return np.einsum("kab,kij->aibj", k.conj(), k).reshape(d * d, d * d)


def to_choi(ch: KrausChannel) -> np.ndarray:
    """Unnormalized Choi matrix ``sum_ij E_ij (x) M(E_ij) = sum_k vec(K_k) vec(K_k)^*``."""
    vs = np.stack([vec(k) for k in ch.kraus])
    return vs.T @ vs.conj()


def choi_of_map(fn: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Choi matrix of an arbitrary linear map given as a callable."""
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            choi[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = fn(e)
    return choi


def map_from_superoperator(s: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    return lambda a: unvec(s @ vec(a))


def validate_choi(choi: np.ndarray, tol_tp: float = TOL_TP, tol_psd: float = TOL_PSD) -> ValidationReport:
    """CPTP check from a Choi matrix: PSD for CP, output partial trace = id for TP."""
    choi = np.asarray(choi, dtype=complex)
    dim = int(round(math.sqrt(choi.shape[0])))
    blocks = choi.reshape(dim, dim, dim, dim)
    # trace over the output factor: Tr M(E_ij) = delta_ij
    reduced = np.einsum("iaja->ij", blocks)
    residual = float(np.linalg.norm(reduced - np.eye(dim)))
    herm = 0.5 * (choi + dagger(choi))
    hermitian = np.max(np.abs(choi - herm)) <= tol_psd
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    return ValidationReport(
        tp_residual=residual,
        choi_min_eigenvalue=min_eig,
        trace_preserving=residual <= tol_tp,
        completely_positive=bool(hermitian and min_eig >= -tol_psd),
    )


def validate(ch: KrausChannel, tol_tp: float = TOL_TP, tol_psd: float = TOL_PSD) -> ValidationReport:
    """Trace-preservation residual ``||sum K^*K - id||_F`` and Choi positivity."""
    gram = np.einsum("kji,kjl->il", ch.stack.conj(), ch.stack)
    residual = float(np.linalg.norm(gram - np.eye(ch.dim)))
    min_eig = float(np.linalg.eigvalsh(to_choi(ch))[0])
    return ValidationReport(
        tp_residual=residual,
        choi_min_eigenvalue=min_eig,
        trace_preserving=residual <= tol_tp,
        completely_positive=min_eig >= -tol_psd,
    )


def _checked(ch: KrausChannel) -> KrausChannel:
    report = validate(ch)
    if not report.passed:
        raise ChannelError(f"constructed channel is not CPTP: {report.to_dict()}")
    return ch


# ---------------------------------------------------------------------------
# zoo
# ---------------------------------------------------------------------------

def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 1:
        raise ChannelError(f"dim must be a positive integer, got {dim!r}")
    return int(dim)


def _check_open_unit(alpha: float, name: str = "alpha") -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ChannelError(f"{name} must lie in the open interval (0, 1), got {alpha}")
    return alpha


def identity(dim: int) -> KrausChannel:
    dim = _check_dim(dim)
    return KrausChannel((np.eye(dim),), family="identity", params={"dim": dim})


def omega(dim: int) -> KrausChannel:
    """Completely depolarizing channel ``a -> Tr(a)/d id``, Kraus set ``E_ij/sqrt(d)``."""
    dim = _check_dim(dim)
    ops = []
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0 / math.sqrt(dim)
            ops.append(e)
    return _checked(KrausChannel(tuple(ops), family="omega", params={"dim": dim}))


def unistochastic(u) -> KrausChannel:
    u = as_operator(u)
    if not is_unitary(u):
        raise ChannelError("unistochastic channel requires a unitary operator")
    return _checked(KrausChannel((u,), family="unistochastic", params={"dim": u.shape[0]}))


def mixed_unitary(us: Sequence, p: Sequence[float]) -> KrausChannel:
    """``a -> sum_l p_l U_l a U_l^*``."""
    us = [as_operator(u) for u in us]
    p = np.asarray(p, dtype=float)
    if len(us) == 0 or p.shape != (len(us),):
        raise ChannelError(f"need one probability per unitary, got {len(us)} unitaries and shape {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > TOL_PROB:
        raise ChannelError(f"p must be a probability vector, got sum {p.sum()!r}")
    for u in us:
        if not is_unitary(u):
            raise ChannelError("mixed_unitary requires unitary operators")
    ops = tuple(math.sqrt(pl) * u for pl, u in zip(p, us))
    return _checked(KrausChannel(ops, family="mixed_unitary", params={"dim": us[0].shape[0]}))


def _phase_match(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """True if ``a = c b`` for a unit-modulus scalar ``c``."""
    overlap = np.vdot(b, a)
    if abs(overlap) < 1e-12:
        return False
    c = overlap / abs(overlap)
    return bool(np.max(np.abs(a - c * b)) <= tol)


def _index_up_to_phase(x: np.ndarray, gs: Sequence[np.ndarray], tol: float) -> int | None:
    for i, g in enumerate(gs):
        if _phase_match(x, g, tol):
            return i
    return None


def group_average(gs: Sequence, tol: float = TOL_GROUP) -> KrausChannel:
    """Uniform average ``a -> 1/|G| sum_U U a U^*`` over a finite unitary group.

    Closure under products and inverses is checked up to a global phase (the
    channel only sees ``U`` up to phase, which is what lets the Pauli matrices
    count as a group). Exact duplicates are rejected.
    """
    gs = [as_operator(g) for g in gs]
    if not gs:
        raise ChannelError("group must be nonempty")
    dim = gs[0].shape[0]
    for g in gs:
        if g.shape != (dim, dim):
            raise ChannelError("group elements must share one dimension")
        if not is_unitary(g, tol):
            raise ChannelError("group elements must be unitary")
    for i in range(len(gs)):
        for j in range(i + 1, len(gs)):
            if np.max(np.abs(gs[i] - gs[j])) <= tol:
                raise ChannelError(f"duplicate group elements at positions {i} and {j}")
    if _index_up_to_phase(np.eye(dim), gs, tol) is None:
        raise ChannelError("group must contain the identity (up to phase)")
    for g in gs:
        if _index_up_to_phase(dagger(g), gs, tol) is None:
            raise ChannelError("group is not closed under inverses")
        for h in gs:
            if _index_up_to_phase(g @ h, gs, tol) is None:
                raise ChannelError("group is not closed under products")
    w = 1.0 / math.sqrt(len(gs))
    return _checked(KrausChannel(tuple(w * g for g in gs), family="group_average",
                                 params={"dim": dim, "order": len(gs)}))


def dephasing() -> KrausChannel:
    """Qubit average over ``{id, sigma_z}``: kills off-diagonal entries."""
    return group_average([np.eye(2), SIGMA_Z])


def pauli_average() -> KrausChannel:
    return group_average([np.eye(2), SIGMA_X, SIGMA_Y, SIGMA_Z])


def qubit_depolarizing(alpha: float) -> KrausChannel:
    """Kraus set ``sqrt(1-alpha) I, sqrt(alpha/3) sigma_{x,y,z}``."""
    alpha = _check_open_unit(alpha)
    s = math.sqrt(alpha / 3.0)
    ops = (math.sqrt(1.0 - alpha) * np.eye(2), s * SIGMA_X, s * SIGMA_Y, s * SIGMA_Z)
    return _checked(KrausChannel(ops, family="qubit_depolarizing", params={"alpha": alpha}))


def convex_with_omega(ch: KrausChannel, alpha: float) -> KrausChannel:
    """``alpha M + (1 - alpha) Omega`` as one Kraus channel (scaled union of Kraus sets)."""
    alpha = _check_open_unit(alpha)
    om = omega(ch.dim)
    ops = tuple(math.sqrt(alpha) * k for k in ch.kraus) + tuple(math.sqrt(1.0 - alpha) * k for k in om.kraus)
    params = {"alpha": alpha, "dim": ch.dim}
    if ch.family is not None:
        params["base"] = ch.family
    return _checked(KrausChannel(ops, family="convex_with_omega", params=params))


def random_unitary(dim: int, seed: Seed) -> np.ndarray:
    """Haar-random unitary."""
    rng = make_rng(seed)
    if _check_dim(dim) == 1:
        return np.exp(2j * np.pi * rng.random()) * np.eye(1)
    return unitary_group.rvs(dim, random_state=rng)


def random_channel(dim: int, n_kraus: int, seed: Seed) -> KrausChannel:
    """Random CPTP map from a Haar-random isometry ``C^d -> C^d (x) C^n``."""
    dim = _check_dim(dim)
    if n_kraus < 1:
        raise ChannelError("n_kraus must be >= 1")
    rng = make_rng(seed)
    g = rng.standard_normal((n_kraus * dim, dim)) + 1j * rng.standard_normal((n_kraus * dim, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    ops = tuple(q[i * dim:(i + 1) * dim] for i in range(n_kraus))
    return _checked(KrausChannel(ops, family="random", params={"dim": dim, "n_kraus": n_kraus}))


def transpose_map(a: np.ndarray) -> np.ndarray:
    """Positive but not completely positive; handy negative control for Choi checks."""
    return np.asarray(a).T.copy()
