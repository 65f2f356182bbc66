"""Markov-Dobrushin constant estimates and the one-step TV contraction check.

The constant is the operator infimum of ``M(|xi><xi|)`` over unit vectors. We
estimate its best identity-proportional lower bound ``c* id`` with

    c* = min_{|xi|=1} lambda_min(M(|xi><xi|)) = min_{|xi|=|v|=1} sum_i |<v|K_i|xi>|^2 .

The right-hand form is minimized by alternating exact minimizations: for fixed
``xi`` the best ``v`` is the bottom eigenvector of ``M(|xi><xi|)``; for fixed ``v``
the best ``xi`` is the bottom eigenvector of ``M^*(|v><v|)``. Each sweep can only
lower the objective. Many random restarts (plus a Bloch-sphere grid for qubits)
guard against poor stationary points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qmix.channels import ChannelError, KrausChannel, apply, apply_adjoint, validate
from qmix.operators import Seed, make_rng, random_density, random_pure_state, tv_norm

TRACE_ONE_TOL = 1e-12
FEASIBILITY_TOL = 1e-8
CONTRACTION_TOL = 1e-9


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 32
    iterations: int = 200
    seed: int = 0
    grid: int = 64
    check_samples: int = 256


@dataclass(frozen=True)
class KappaBound:
    """Feasible lower bound ``0 <= b <= M(|xi><xi|)`` and the rate it implies.

    ``certificate`` holds the minimizing state, the final value of every restart
    and the smallest residual ``lambda_min(M(P) - b)`` seen on an independent
    validation sample of pure states.
    """

    lower_bound: np.ndarray
    trace_kappa: float
    theta: float
    method: str
    certificate: dict = field(default_factory=dict)
    flags: tuple = ()

    @property
    def c_star(self) -> float:
        return self.trace_kappa / self.lower_bound.shape[0]


@dataclass(frozen=True)
class ContractionReport:
    pairs_tested: int
    max_ratio: float
    bound: float
    max_output_distance: float
    violations: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.violations


def theta_from_trace(trace_kappa: float) -> float:
    """``-ln(1 - Tr kappa)``, with ``inf`` once the trace reaches 1."""
    tk = min(max(float(trace_kappa), 0.0), 1.0)
    if tk >= 1.0 - TRACE_ONE_TOL:
        return math.inf
    return -math.log1p(-tk)


def _scalar_bound(c: float, dim: int, method: str, certificate=None, flags=()) -> KappaBound:
    c = max(float(c), 0.0)
    trace = min(c * dim, 1.0)
    lower = (trace / dim) * np.eye(dim, dtype=complex)
    lower.setflags(write=False)
    return KappaBound(lower, trace, theta_from_trace(trace), method, certificate or {}, tuple(flags))


def min_output_eigenvalue(ch: KrausChannel, xi: np.ndarray) -> np.ndarray:
    """``lambda_min(M(|xi><xi|))`` for a batch of unit vectors ``xi`` of shape ``(n, d)``."""
    p = np.einsum("ni,nj->nij", xi, xi.conj())
    return np.linalg.eigvalsh(apply(ch, p))[:, 0]


def _bloch_grid(n: int) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, n)
    phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    t, f = np.meshgrid(theta, phi, indexing="ij")
    t, f = t.ravel(), f.ravel()
    return np.stack([np.cos(t / 2), np.exp(1j * f) * np.sin(t / 2)], axis=1)


def _alternate(ch: KrausChannel, xi: np.ndarray, iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """Run alternating bottom-eigenvector sweeps on a batch of starting vectors."""
    val = min_output_eigenvalue(ch, xi)
    for _ in range(iterations):
        _, vecs = np.linalg.eigh(apply(ch, np.einsum("ni,nj->nij", xi, xi.conj())))
        v = vecs[:, :, 0]
        _, vecs = np.linalg.eigh(apply_adjoint(ch, np.einsum("ni,nj->nij", v, v.conj())))
        new_xi = vecs[:, :, 0]
        new_val = min_output_eigenvalue(ch, new_xi)
        improved = new_val < val
        xi = np.where(improved[:, None], new_xi, xi)
        gain = np.where(improved, val - new_val, 0.0)
        val = np.where(improved, new_val, val)
        if np.all(gain <= 1e-15):
            break
    return xi, val


def _closed_form_flags(ch: KrausChannel, c_star: float) -> list[str]:
    flags = []
    if ch.family == "qubit_depolarizing" and "alpha" in ch.params:
        alpha = float(ch.params["alpha"])
        naive = 2 * alpha / 3
        if abs(c_star - naive) > 1e-6:
            flags.append(
                f"closed form 2*alpha/3 = {naive!r} disagrees with optimized c* = {c_star!r} "
                f"for alpha = {alpha!r}; 2*alpha/3 is not a lower bound of M(P) when alpha > 3/4"
            )
    return flags


def kappa_scalar(ch: KrausChannel, budget: SearchBudget = SearchBudget()) -> KappaBound:
    """Best ``c id`` lower bound on ``M(|xi><xi|)``, by multi-start alternating minimization.

    Parameters
    ----------
    ch : KrausChannel
        A CPTP channel.
    budget : SearchBudget
        Restarts, sweeps per restart and seed; ``grid`` is the per-axis Bloch grid
        size used for qubits, ``check_samples`` the size of an independent random
        sample on which feasibility of the result is re-checked.

    Returns
    -------
    KappaBound
        ``method == "scalar-optimized"``. Restart ``r`` uses sub-stream ``r`` of the
        seed, and the reduction is a min with lowest-index tie-break, so the result
        does not depend on evaluation order.

    Raises
    ------
    ChannelError
        If ``ch`` fails CPTP validation.
    """
    report = validate(ch)
    if not report.passed:
        raise ChannelError(f"kappa_scalar needs a CPTP channel: {report.to_dict()}")
    d = ch.dim
    starts = [random_pure_state(d, make_rng(budget.seed, 0, r)) for r in range(budget.restarts)]
    if d == 2 and budget.grid > 0:
        grid = _bloch_grid(budget.grid)
        starts.insert(0, grid[int(np.argmin(min_output_eigenvalue(ch, grid)))])
    if not starts:
        starts = [np.eye(d, dtype=complex)[0]]
    xi, vals = _alternate(ch, np.array(starts), budget.iterations)
    k = int(np.argmin(vals))
    c_star = float(vals[k])

    check = np.array([random_pure_state(d, make_rng(budget.seed, 1, i)) for i in range(budget.check_samples)])
    residual = float(np.min(min_output_eigenvalue(ch, check)) - c_star) if len(check) else math.inf
    flags = _closed_form_flags(ch, max(c_star, 0.0))
    if residual < -FEASIBILITY_TOL:
        flags.append(f"validation sample found lambda_min below c* by {-residual!r}; bound may be infeasible")
    certificate = {
        "c_star": c_star,
        "argmin_state": xi[k],
        "restart_values": vals,
        "validation_residual": residual,
    }
    return _scalar_bound(c_star, d, "scalar-optimized", certificate, flags)


def kappa_analytic(family: str, **params) -> KappaBound:
    """Closed-form identity-proportional bound for a recognized zoo family.

    Families: ``omega`` (``dim``), ``qubit_depolarizing`` (``alpha``),
    ``convex_with_omega`` (``alpha``, ``dim``), ``unistochastic`` and
    ``identity`` (``dim``). For the depolarizing qubit the exact value
    ``(1 - |1 - 4 alpha/3|)/2`` is returned; it equals ``2 alpha/3`` up to
    ``alpha = 3/4`` and is flagged beyond.
    """
    family = family.replace("-", "_")
    if family == "omega":
        d = int(params["dim"])
        return _scalar_bound(1.0 / d, d, "analytic")
    if family == "qubit_depolarizing":
        alpha = float(params["alpha"])
        c = (1.0 - abs(1.0 - 4.0 * alpha / 3.0)) / 2.0
        flags = []
        if alpha > 0.75:
            flags.append(f"alpha = {alpha!r} > 3/4: using (1 - |1 - 4 alpha/3|)/2 = {c!r} instead of 2*alpha/3")
        return _scalar_bound(c, 2, "analytic", flags=flags)
    if family == "convex_with_omega":
        alpha, d = float(params["alpha"]), int(params["dim"])
        return _scalar_bound((1.0 - alpha) / d, d, "analytic")
    if family in ("unistochastic", "identity"):
        return _scalar_bound(0.0, int(params["dim"]), "analytic")
    raise ValueError(f"no closed-form bound for family {family!r}")


def _random_pair_state(dim: int, rng: np.random.Generator, pure: bool) -> np.ndarray:
    if pure:
        psi = random_pure_state(dim, rng)
        return np.outer(psi, psi.conj())
    return random_density(dim, rng)


def contraction_check(ch: KrausChannel, kb: KappaBound, n_pairs: int = 1000, seed: Seed = 0) -> ContractionReport:
    """Check ``|M(rho) - M(sigma)|_TV <= (1 - Tr kappa) |rho - sigma|_TV`` on random pairs.

    Even-numbered pairs are pure states, odd-numbered pairs full-rank mixed states.
    """
    bound = 1.0 - kb.trace_kappa
    max_ratio = 0.0
    max_out = 0.0
    violations = []
    for i in range(n_pairs):
        rng = make_rng(seed, i) if not isinstance(seed, np.random.Generator) else seed
        pure = i % 2 == 0
        rho = _random_pair_state(ch.dim, rng, pure)
        sigma = _random_pair_state(ch.dim, rng, pure)
        d_in = tv_norm(rho - sigma)
        d_out = tv_norm(apply(ch, rho) - apply(ch, sigma))
        max_out = max(max_out, d_out)
        if d_in > 0:
            max_ratio = max(max_ratio, d_out / d_in)
        if d_out > bound * d_in + CONTRACTION_TOL:
            violations.append({"pair": i, "input_distance": d_in, "output_distance": d_out, "bound": bound * d_in})
    return ContractionReport(n_pairs, max_ratio, bound, max_out, tuple(violations))

