"""Sixth-order Magnus splittings for laser-driven Schrodinger equations."""

from .field import (
    LaserField,
    MagnusCoefficients,
    QuadratureRule,
    TabulatedField,
    bernoulli_rescaled,
    field_moments,
    gauss_legendre,
    magnus_coefficients,
    mu,
)
from .magnus import MagnusOperator, apply_theta4, commutator_matvec, lanczos_expm, theta4_lanczos_step
from .problems import Problem, build_problem, ground_and_excited_states, well_occupation
from .spectral import SpectralGrid, WaveFunction, exp_kinetic, exp_potential, make_grid
from .splitting import (
    BM4,
    OMF76,
    OMF85,
    SplitScheme,
    inner_apply,
    parse_scheme,
    step_MaStBM4,
    step_S1,
    step_S2,
    step_S3,
    step_time_ordered,
)

__version__ = "0.1.0"
