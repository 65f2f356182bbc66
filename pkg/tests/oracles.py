"""Independent reference computations used by several test modules.

Nothing here goes through the package's Kraus machinery or eigensolvers.
"""

import numpy as np


def depolarizing_action(a, alpha):
    """Explicit 2x2 action of the depolarizing qubit channel, entry by entry."""
    a11, a12, a21, a22 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 0], a[..., 1, 1]
    out = np.empty(a.shape, dtype=complex)
    out[..., 0, 0] = (1 - 2 * alpha / 3) * a11 + 2 * alpha / 3 * a22
    out[..., 0, 1] = (1 - 4 * alpha / 3) * a12
    out[..., 1, 0] = (1 - 4 * alpha / 3) * a21
    out[..., 1, 1] = (1 - 2 * alpha / 3) * a22 + 2 * alpha / 3 * a11
    return out


def hermitian_2x2_min_eig(m):
    """Closed-form smaller eigenvalue of a batch of Hermitian 2x2 matrices."""
    a, d = m[..., 0, 0].real, m[..., 1, 1].real
    b = m[..., 0, 1]
    return (a + d) / 2 - np.sqrt(((a - d) / 2) ** 2 + np.abs(b) ** 2)


def bloch_grid_states(n):
    theta = np.linspace(0, np.pi, n)
    phi = np.linspace(0, 2 * np.pi, n)
    t, f = np.meshgrid(theta, phi)
    xi = np.stack([np.cos(t / 2), np.exp(1j * f) * np.sin(t / 2)], axis=-1).reshape(-1, 2)
    return np.einsum("ni,nj->nij", xi, xi.conj())


def depolarizing_c_star_by_grid(alpha, n=100):
    """Brute-force min over an n x n Bloch grid of lambda_min(M(|xi><xi|))."""
    return float(np.min(hermitian_2x2_min_eig(depolarizing_action(bloch_grid_states(n), alpha))))


def qubit_map_c_star_by_grid(fn, n=100):
    """Same brute force for an arbitrary qubit map given as a callable on single matrices."""
    states = bloch_grid_states(n)
    return float(min(hermitian_2x2_min_eig(fn(p)) for p in states))
