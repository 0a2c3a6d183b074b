"""Evolution under Boolean fitness functions: extensions, biased Fourier analysis,
population dynamics and checkers for the associated inequalities."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoolutionError,
    CapabilityError,
    ConfigError,
    DegenerateCoordinateError,
    ExtinctionError,
    PreconditionError,
)
from .functions import (  # noqa: E402
    BooleanFitnessFunction,
    CnfFormula,
    ExplicitTruthTable,
    Lethal,
    Parity,
    ProductPoint,
    SumEqualsK,
    Threshold,
    Tribes,
    WeakSelection,
    extension,
    satisfaction_probability,
)

__all__ = [
    "__version__",
    "BoolutionError",
    "CapabilityError",
    "ConfigError",
    "DegenerateCoordinateError",
    "ExtinctionError",
    "PreconditionError",
    "BooleanFitnessFunction",
    "CnfFormula",
    "ExplicitTruthTable",
    "Lethal",
    "Parity",
    "ProductPoint",
    "SumEqualsK",
    "Threshold",
    "Tribes",
    "WeakSelection",
    "extension",
    "satisfaction_probability",
]
