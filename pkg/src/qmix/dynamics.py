"""Long-run behaviour of channels: fixed points, spectra, mixing verdicts,
trajectories and the exponential convergence bound ``2 exp(-n theta)``.

The spectrum of the superoperator decides the verdict:

* ``mixing``: eigenvalue 1 is simple and is the only eigenvalue on the unit circle;
* ``ergodic_not_mixing``: eigenvalue 1 simple, other peripheral eigenvalues exist;
* ``non_ergodic``: the fixed space has dimension > 1.

Trajectories are recorded alongside as corroborating evidence only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qmix.channels import KrausChannel, apply, to_superoperator
from qmix.dobrushin import KappaBound
from qmix.operators import (
    Seed,
    as_operator,
    basis_state,
    dagger,
    jordan_decompose,
    make_rng,
    random_density,
    random_pure_state,
    tv_norm,
    unvec,
    vec,
)

TOL_SPEC = 1e-8
FIXED_POINT_TOL = 1e-8
BOUND_TOL = 1e-9
EVIDENCE_STEPS = 50

MIXING = "mixing"
ERGODIC_NOT_MIXING = "ergodic_not_mixing"
NON_ERGODIC = "non_ergodic"


class PreconditionError(ValueError):
    """Raised when an operation needs a mixing channel and did not get one."""

    def __init__(self, message: str, classification: "ChannelClassification"):
        super().__init__(message)
        self.classification = classification


@dataclass(frozen=True)
class SpectralProfile:
    eigenvalues: np.ndarray
    peripheral_count: int
    unit_multiplicity: int
    spectral_gap: float


@dataclass(frozen=True)
class ChannelClassification:
    verdict: str
    fixed_points: list
    profile: SpectralProfile
    evidence_distance: float
    diagnostics: tuple = ()


@dataclass(frozen=True)
class TrajectoryStep:
    n: int
    state: np.ndarray
    tv_to_reference: float


@dataclass(frozen=True)
class Trajectory:
    steps: list
    reference: np.ndarray

    @property
    def distances(self) -> np.ndarray:
        return np.array([s.tv_to_reference for s in self.steps])


@dataclass(frozen=True)
class BoundReport:
    trials: int
    steps: int
    trace_kappa: float
    theta: float
    tightest_margin: float
    max_distance_by_step: list
    violations: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# spectrum and fixed space
# ---------------------------------------------------------------------------

def _fixed_space_svd(ch: KrausChannel):
    """Right and left null bases of ``L - I`` from one SVD."""
    s = to_superoperator(ch)
    n = s.shape[0]
    u, sv, vh = np.linalg.svd(s - np.eye(n))
    null = sv <= 1e-8 * ch.dim ** 2
    return vh[null].conj().T, u[:, null]


def spectral_profile(ch: KrausChannel, tol_spec: float = TOL_SPEC) -> SpectralProfile:
    ev = np.linalg.eigvals(to_superoperator(ch))
    order = np.lexsort((-ev.imag, -ev.real, -np.abs(ev)))
    ev = ev[order]
    mod = np.abs(ev)
    peripheral = int(np.sum(mod >= 1.0 - tol_spec))
    right, _ = _fixed_space_svd(ch)
    inner = mod[mod < 1.0 - tol_spec]
    gap = 1.0 - float(inner.max()) if inner.size else 1.0
    return SpectralProfile(ev, peripheral, int(right.shape[1]), gap)


def _real_coords(h: np.ndarray) -> np.ndarray:
    return np.concatenate([h.real.ravel(), h.imag.ravel()])


def _numerical_rank(rho: np.ndarray) -> int:
    w = np.linalg.eigvalsh(rho)
    return int(np.sum(w > 1e-9 * max(w[-1], 1e-300)))


def fixed_points(ch: KrausChannel) -> list[np.ndarray]:
    """Density matrices spanning the fixed space of ``ch``.

    Eigenvalue-1 vectors are not states in general. We take a Hermitian basis of
    the fixed space and split each element (and, for small spaces, differences of
    the resulting states) into Jordan parts; for a trace-preserving positive map
    those parts are fixed too. Normalized parts are then picked greedily, lowest
    rank first, until they span the space. For a mixing or ergodic channel this
    is the single invariant state.
    """
    right, _ = _fixed_space_svd(ch)
    m = right.shape[1]
    herm = []
    for k in range(m):
        x = unvec(right[:, k])
        herm += [0.5 * (x + dagger(x)), (x - dagger(x)) / 2j]
    coords = np.array([_real_coords(h) for h in herm])
    _, _, vh = np.linalg.svd(coords, full_matrices=False)
    d = ch.dim
    basis = [vh[k, :d * d].reshape(d, d) + 1j * vh[k, d * d:].reshape(d, d) for k in range(m)]

    def parts(h):
        out = []
        scale = max(float(np.max(np.abs(h))), 1e-300)
        for p in jordan_decompose(0.5 * (h + dagger(h)), tol=1e-12 * scale):
            tr = np.trace(p).real
            if tr > 1e-8 * scale:
                out.append(p / tr)
        return out

    pool = [s for h in basis for s in parts(h)]
    if len(pool) <= 64:
        pool += [s for i in range(len(pool)) for j in range(i + 1, len(pool)) for s in parts(pool[i] - pool[j])]
    ranked = sorted(range(len(pool)), key=lambda i: (_numerical_rank(pool[i]), i))

    chosen, ortho = [], []
    for i in ranked:
        r = _real_coords(pool[i])
        res = r.copy()
        for q in ortho:
            res -= (q @ res) * q
        if np.linalg.norm(res) > 1e-6 * np.linalg.norm(r):
            ortho.append(res / np.linalg.norm(res))
            rho = 0.5 * (pool[i] + dagger(pool[i]))
            chosen.append(rho / np.trace(rho).real)
        if len(chosen) == m:
            break
    return chosen


def fixed_point_residual(ch: KrausChannel, rho) -> float:
    rho = as_operator(rho, ch.dim)
    return float(np.linalg.norm(apply(ch, rho) - rho))


def cesaro_limit(ch: KrausChannel, rho) -> np.ndarray:
    """Limit of the Cesaro averages of ``M^k(rho)``: projection onto the fixed space
    along the range of ``L - I``."""
    right, left = _fixed_space_svd(ch)
    proj = right @ np.linalg.solve(dagger(left) @ right, dagger(left))
    return unvec(proj @ vec(as_operator(rho, ch.dim)))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def classify(ch: KrausChannel, tol_spec: float = TOL_SPEC) -> ChannelClassification:
    profile = spectral_profile(ch, tol_spec)
    if profile.unit_multiplicity > 1:
        verdict = NON_ERGODIC
    elif profile.peripheral_count > 1:
        verdict = ERGODIC_NOT_MIXING
    else:
        verdict = MIXING

    d = ch.dim
    rho, sigma = basis_state(d, 0), basis_state(d, d - 1)
    for _ in range(EVIDENCE_STEPS):
        rho, sigma = apply(ch, rho), apply(ch, sigma)
    distance = tv_norm(rho - sigma)

    diagnostics = []
    if profile.unit_multiplicity < 1:
        diagnostics.append("no eigenvalue-1 eigenvector found; input is probably not CPTP")
    if verdict == MIXING and profile.spectral_gap >= 0.2 and distance > 1e-6:
        diagnostics.append(
            f"spectrum indicates mixing (gap {profile.spectral_gap!r}) but basis-state iterates "
            f"are still {distance!r} apart after {EVIDENCE_STEPS} steps"
        )
    fps = fixed_points(ch)
    for k, fp in enumerate(fps):
        r = fixed_point_residual(ch, fp)
        if r > FIXED_POINT_TOL:
            diagnostics.append(f"fixed point {k} has residual {r!r}")
    return ChannelClassification(verdict, fps, profile, distance, tuple(diagnostics))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def iterate_trajectory(ch: KrausChannel, rho0, n_max: int, reference) -> Trajectory:
    """Record ``M^n(rho0)`` and its TV distance to ``reference`` for ``n = 0..n_max``."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    reference = as_operator(reference, ch.dim)
    state = as_operator(rho0, ch.dim)
    steps = [TrajectoryStep(0, state, tv_norm(state - reference))]
    for n in range(1, n_max + 1):
        state = apply(ch, state)
        steps.append(TrajectoryStep(n, state, tv_norm(state - reference)))
    return Trajectory(steps, reference)


def cesaro_trajectory(ch: KrausChannel, rho0, n_max: int) -> Trajectory:
    """Running averages ``1/(n+1) sum_{k<=n} M^k(rho0)`` against their limit."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    state = as_operator(rho0, ch.dim)
    reference = cesaro_limit(ch, state)
    total = state.copy()
    steps = [TrajectoryStep(0, state.copy(), tv_norm(state - reference))]
    for n in range(1, n_max + 1):
        state = apply(ch, state)
        total = total + state
        avg = total / (n + 1)
        steps.append(TrajectoryStep(n, avg, tv_norm(avg - reference)))
    return Trajectory(steps, reference)


def bound_value(theta: float, n: int) -> float:
    """``2 exp(-n theta)``, reading ``inf * 0`` as 0 so that ``n = 0`` gives 2."""
    if n == 0:
        return 2.0
    return 2.0 * math.exp(-n * theta)


def verify_bound(ch: KrausChannel, kb: KappaBound, trials: int = 100, n_max: int = 50,
                 seed: Seed = 0, classification: ChannelClassification | None = None) -> BoundReport:
    """Check ``|M^n(rho) - rho_*|_TV <= 2 exp(-n theta)`` along random trajectories.

    Trial ``t`` starts from a pure state when ``t`` is even and a full-rank state
    otherwise, drawn from sub-stream ``t`` of ``seed``.

    Raises
    ------
    PreconditionError
        If ``ch`` does not classify as mixing.
    """
    classification = classification or classify(ch)
    if classification.verdict != MIXING:
        raise PreconditionError(f"verify_bound needs a mixing channel, got {classification.verdict}",
                                classification)
    rho_star = classification.fixed_points[0]
    bounds = [bound_value(kb.theta, n) for n in range(n_max + 1)]
    max_dist = [0.0] * (n_max + 1)
    margin = math.inf
    violations = []
    for t in range(trials):
        rng = make_rng(seed, t) if not isinstance(seed, np.random.Generator) else seed
        if t % 2 == 0:
            psi = random_pure_state(ch.dim, rng)
            rho0 = np.outer(psi, psi.conj())
        else:
            rho0 = random_density(ch.dim, rng)
        traj = iterate_trajectory(ch, rho0, n_max, rho_star)
        for step in traj.steps:
            dist, b = step.tv_to_reference, bounds[step.n]
            max_dist[step.n] = max(max_dist[step.n], dist)
            margin = min(margin, b - dist)
            if dist > b + BOUND_TOL:
                violations.append({"trial": t, "n": step.n, "distance": dist, "bound": b})
    return BoundReport(trials, n_max, kb.trace_kappa, kb.theta, margin, max_dist, tuple(violations))
