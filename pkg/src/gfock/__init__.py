"""Mollified free fields, truncated Fock spaces and regularised scattering operators.

Setting ``GFOCK_THREADS`` before the first import caps the BLAS thread pools.
"""

import os as _os

_threads = _os.environ.get("GFOCK_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError,
    ConfigError,
    ContractViolation,
    DomainError,
    GfockError,
    LadderError,
    ParameterError,
    ResolutionError,
    ShapeError,
)
from .moll import Damper, Mollifier, SpectralProfile, make_plateau_profile  # noqa: E402
from .genfunc import EpsilonLadder, SampleGrid, associate, heaviside_rep  # noqa: E402
from .fock import FockBasis, FockOperator, ModeSet, enumerate_basis  # noqa: E402
from .field import FieldConfig, make_field_config  # noqa: E402
from .hamiltonian import Interaction, QuadratureGrid, assemble_h, quadrature_for  # noqa: E402
from .dynamics import Model, Propagator, s_operator  # noqa: E402
from .average import cesaro_mean, sweep_transition  # noqa: E402

__all__ = [
    "__version__",
    "GfockError",
    "ParameterError",
    "DomainError",
    "ShapeError",
    "ResolutionError",
    "LadderError",
    "CapacityError",
    "ContractViolation",
    "ConfigError",
    "SpectralProfile",
    "Mollifier",
    "Damper",
    "make_plateau_profile",
    "SampleGrid",
    "EpsilonLadder",
    "heaviside_rep",
    "associate",
    "ModeSet",
    "FockBasis",
    "FockOperator",
    "enumerate_basis",
    "FieldConfig",
    "make_field_config",
    "Interaction",
    "QuadratureGrid",
    "assemble_h",
    "quadrature_for",
    "Model",
    "Propagator",
    "s_operator",
    "cesaro_mean",
    "sweep_transition",
]
