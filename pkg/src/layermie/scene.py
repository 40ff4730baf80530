"""Scene description: materials, concentric layers, incidence, effective cores.

Lengths are dimensionless and wavenumbers carry inverse length, so only the
products ``k * r`` matter.  The region outside the outermost shell is vacuum
(``mu_r = eps_r = 1``).
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError, PreconditionError, RangeError

#: Smallest contrast parameter accepted when building an effective core.
MIN_DELTA = 1e-8

_UNIT_TOL = 1e-12


class CoreKind(str, Enum):
    PEC = "PEC"
    PMC = "PMC"
    PENETRABLE = "penetrable"


def _finite_complex(value, name):
    try:
        value = complex(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name} must be a complex number") from exc
    if not (np.isfinite(value.real) and np.isfinite(value.imag)):
        raise InvalidArgumentError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class Material:
    """Isotropic relative permeability and permittivity of one region."""

    mu_r: complex = 1.0
    eps_r: complex = 1.0

    def __post_init__(self):
        mu = _finite_complex(self.mu_r, "mu_r")
        eps = _finite_complex(self.eps_r, "eps_r")
        if mu.real <= 0 or mu.imag < 0:
            raise InvalidArgumentError(f"mu_r needs Re > 0 and Im >= 0, got {mu}")
        if eps.real <= 0 or eps.imag < 0:
            raise InvalidArgumentError(f"eps_r needs Re > 0 and Im >= 0, got {eps}")
        object.__setattr__(self, "mu_r", mu)
        object.__setattr__(self, "eps_r", eps)

    def wavenumber(self, k):
        """``k * sqrt(mu_r * eps_r)`` on the branch with ``Im >= 0``."""
        return k * np.sqrt(self.mu_r * self.eps_r)

    @property
    def is_lossless(self):
        return self.mu_r.imag == 0 and self.eps_r.imag == 0


VACUUM = Material()


@dataclass(frozen=True)
class Shell:
    outer_radius: float
    material: Material


@dataclass(frozen=True)
class AssumptionBounds:
    """Scalar bounds ``gamma1 <= Re mu_r <= gamma2`` and ``Re eps_r >= gamma``."""

    gamma1: float
    gamma2: float
    gamma: float

    def __post_init__(self):
        if not (0 < self.gamma1 <= self.gamma2) or self.gamma <= 0:
            raise InvalidArgumentError(
                "bounds need 0 < gamma1 <= gamma2 and gamma > 0, got "
                f"({self.gamma1}, {self.gamma2}, {self.gamma})"
            )

    def admits(self, material):
        return (
            self.gamma1 <= material.mu_r.real <= self.gamma2
            and material.eps_r.real >= self.gamma
        )


Core = Union[str, CoreKind, Material]


@dataclass(frozen=True)
class LayeredScene:
    """A core ball wrapped in concentric shells, truncated at radius ``R``.

    ``core`` is ``"PEC"``, ``"PMC"`` or a :class:`Material` for a penetrable
    core.  ``shells`` are ordered inside-out; the last outer radius is the
    radius of the scatterer.  ``calderon_radius`` is the artificial boundary
    on which the exterior Calderon operator acts.
    """

    core_radius: float
    core: Core
    shells: Tuple[Shell, ...] = ()
    background_k: float = 1.0
    calderon_radius: Optional[float] = None
    bounds: Optional[AssumptionBounds] = None

    def __post_init__(self):
        core = self.core
        if isinstance(core, str) and not isinstance(core, CoreKind):
            try:
                core = CoreKind(core.upper() if core.upper() in ("PEC", "PMC") else core)
            except ValueError as exc:
                raise InvalidArgumentError(f"unknown core kind {self.core!r}") from exc
        if core is CoreKind.PENETRABLE:
            raise InvalidArgumentError("a penetrable core is given as a Material")
        if not isinstance(core, (CoreKind, Material)):
            raise InvalidArgumentError(f"unsupported core {core!r}")
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "shells", tuple(self.shells))
        for shell in self.shells:
            if not isinstance(shell, Shell) or not isinstance(shell.material, Material):
                raise InvalidArgumentError("shells must be Shell(radius, Material)")

        radii = [float(self.core_radius)] + [float(s.outer_radius) for s in self.shells]
        if not np.all(np.isfinite(radii)) or radii[0] <= 0:
            raise InvalidArgumentError(f"core_radius must be positive, got {self.core_radius}")
        for inner, outer in zip(radii, radii[1:]):
            if not outer > inner:
                name = "core_radius" if inner == radii[0] else "shell radius"
                raise InvalidArgumentError(
                    f"{name} {inner} must be smaller than the next radius {outer}"
                )
        k = float(self.background_k)
        if not (np.isfinite(k) and k > 0):
            raise InvalidArgumentError(f"background_k must be positive, got {self.background_k}")
        object.__setattr__(self, "background_k", k)
        R = 1.5 * radii[-1] if self.calderon_radius is None else float(self.calderon_radius)
        if not R > radii[-1]:
            raise InvalidArgumentError(
                f"calderon_radius {R} must exceed the outer radius {radii[-1]}"
            )
        object.__setattr__(self, "calderon_radius", R)
        if self.bounds is not None:
            for i, shell in enumerate(self.shells):
                if not self.bounds.admits(shell.material):
                    raise InvalidArgumentError(
                        f"shell {i} material {shell.material} violates {self.bounds}"
                    )

    @property
    def core_kind(self):
        return self.core if isinstance(self.core, CoreKind) else CoreKind.PENETRABLE

    @property
    def core_material(self):
        return self.core if isinstance(self.core, Material) else None

    @property
    def outer_radius(self):
        """Radius of the whole scatterer (the outer shell, or the core if bare)."""
        return self.shells[-1].outer_radius if self.shells else float(self.core_radius)

    @property
    def interface_radii(self):
        return (float(self.core_radius),) + tuple(s.outer_radius for s in self.shells)

    def assumption_bounds(self):
        """The bounds in force: explicit ones, or the tightest ones the shells admit."""
        if self.bounds is not None:
            return self.bounds
        if not self.shells:
            return AssumptionBounds(1.0, 1.0, 1.0)
        mus = [s.material.mu_r.real for s in self.shells]
        eps = [s.material.eps_r.real for s in self.shells]
        return AssumptionBounds(min(mus), max(mus), min(eps))


def _unit_vector(v, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"{name} must be a finite 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
        raise InvalidArgumentError(f"{name} must have unit length, |{name}| = {np.linalg.norm(v)}")
    return v


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave ``E = p exp(i k x.d)``, ``H = (d x p) exp(i k x.d)``."""

    direction: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    polarization: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    k: float = 1.0

    def __post_init__(self):
        d = _unit_vector(self.direction, "direction")
        p = _unit_vector(self.polarization, "polarization")
        if abs(d @ p) > _UNIT_TOL:
            raise InvalidArgumentError(f"polarization must be orthogonal to direction (d.p = {d @ p})")
        if not (np.isfinite(self.k) and self.k > 0):
            raise InvalidArgumentError(f"k must be positive, got {self.k}")
        object.__setattr__(self, "direction", tuple(d))
        object.__setattr__(self, "polarization", tuple(p))
        object.__setattr__(self, "k", float(self.k))

    def electric(self, x):
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * self.k * (x @ np.asarray(self.direction)))
        return phase[..., None] * np.asarray(self.polarization)

    def magnetic(self, x):
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * self.k * (x @ np.asarray(self.direction)))
        return phase[..., None] * np.cross(self.direction, self.polarization)


@dataclass(frozen=True)
class DeltaParams:
    delta: float
    eta0: float = 1.0
    tau0: float = 1.0

    def __post_init__(self):
        for name in ("delta", "eta0", "tau0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {value}")


def effective_material(kind, params):
    """Material that stands in for a PEC or PMC core at contrast ``params.delta``.

    PMC: ``mu = 1/delta``, ``eps = eta0 + i tau0``.
    PEC: ``mu = delta``, ``eps = eta0 + i tau0/delta``.
    """
    kind = CoreKind(kind) if not isinstance(kind, CoreKind) else kind
    d, eta0, tau0 = params.delta, params.eta0, params.tau0
    if kind is CoreKind.PMC:
        return Material(mu_r=1.0 / d, eps_r=complex(eta0, tau0))
    if kind is CoreKind.PEC:
        return Material(mu_r=d, eps_r=complex(eta0, tau0 / d))
    raise PreconditionError("effective material is defined for PEC or PMC cores only")


def realize_scene(scene, params):
    """Replace an impenetrable core by its effective medium; shells are untouched."""
    if scene.core_kind is CoreKind.PENETRABLE:
        raise PreconditionError("realize_scene needs a PEC or PMC core")
    if params.delta < MIN_DELTA:
        raise RangeError(f"delta={params.delta:g} is below the supported minimum {MIN_DELTA:g}")
    return replace(scene, core=effective_material(scene.core_kind, params))
