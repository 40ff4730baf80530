"""Semi-analytic Maxwell scattering by concentric layered spheres."""

from .errors import (
    AmbiguousRegionError,
    InvalidArgumentError,
    LayerMieError,
    NumericalFailure,
    NumericalResonanceError,
    PreconditionError,
    RangeError,
    SingularArgumentError,
    UnsupportedOrderError,
)
from .mie import ModalSolution, Mode, rotation_frame, solve_modes, truncation_order
from .scene import (
    VACUUM,
    AssumptionBounds,
    CoreKind,
    DeltaParams,
    IncidentWave,
    LayeredScene,
    Material,
    Shell,
    effective_material,
    realize_scene,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousRegionError",
    "AssumptionBounds",
    "CoreKind",
    "DeltaParams",
    "IncidentWave",
    "InvalidArgumentError",
    "LayerMieError",
    "LayeredScene",
    "Material",
    "ModalSolution",
    "Mode",
    "NumericalFailure",
    "NumericalResonanceError",
    "PreconditionError",
    "RangeError",
    "Shell",
    "SingularArgumentError",
    "UnsupportedOrderError",
    "VACUUM",
    "effective_material",
    "realize_scene",
    "rotation_frame",
    "solve_modes",
    "truncation_order",
]
