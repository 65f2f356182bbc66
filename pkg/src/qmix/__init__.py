"""Ergodicity and exponential mixing of finite-dimensional quantum channels."""

from qmix.channels import (
    ChannelError,
    KrausChannel,
    apply,
    compose,
    convex_with_omega,
    group_average,
    identity,
    mixed_unitary,
    omega,
    power_apply,
    qubit_depolarizing,
    to_choi,
    to_superoperator,
    unistochastic,
    validate,
)
from qmix.dobrushin import KappaBound, SearchBudget, contraction_check, kappa_analytic, kappa_scalar
from qmix.dynamics import classify, fixed_points, iterate_trajectory, verify_bound
from qmix.operators import hermitian_split, jordan_decompose, random_density, random_pure_state, tv_norm

__version__ = "0.1.0"
