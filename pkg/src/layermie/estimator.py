"""Scikit-learn style front end: fit a scene, predict far-field values at directions."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import InvalidArgumentError
from .fields import farfield_at
from .mie import solve_modes, truncation_order
from .scene import DeltaParams, IncidentWave, LayeredScene, realize_scene


class FarFieldModel(BaseEstimator):
    """Far-field pattern of a layered sphere behind the ``fit``/``predict`` protocol.

    ``fit`` solves the modal problem (after replacing an obstacle core by its
    effective medium when ``delta`` is given); ``predict`` maps an
    ``(n_samples, 3)`` array of unit directions to the complex far field,
    also ``(n_samples, 3)``.  ``X`` and ``y`` passed to ``fit`` are ignored.
    """

    def __init__(
        self,
        scene=None,
        direction=(0.0, 0.0, 1.0),
        polarization=(1.0, 0.0, 0.0),
        n_max=None,
        delta=None,
        eta0=1.0,
        tau0=1.0,
    ):
        self.scene = scene
        self.direction = direction
        self.polarization = polarization
        self.n_max = n_max
        self.delta = delta
        self.eta0 = eta0
        self.tau0 = tau0

    def fit(self, X=None, y=None):
        if not isinstance(self.scene, LayeredScene):
            raise InvalidArgumentError("FarFieldModel needs a LayeredScene")
        scene = self.scene
        if self.delta is not None:
            scene = realize_scene(scene, DeltaParams(self.delta, self.eta0, self.tau0))
        incidence = IncidentWave(self.direction, self.polarization, scene.background_k)
        n_max = self.n_max
        if n_max is None:
            n_max = truncation_order(scene.background_k, scene.calderon_radius)
        self.solution_ = solve_modes(scene, incidence, n_max)
        self.n_max_ = n_max
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        d = np.atleast_2d(np.asarray(X, dtype=float))
        if d.shape[-1] != 3:
            raise InvalidArgumentError("X must have shape (n_samples, 3)")
        norms = np.linalg.norm(d, axis=1)
        if np.any(np.abs(norms - 1) > 1e-12):
            raise InvalidArgumentError("directions must be unit vectors")
        return farfield_at(self.solution_, d)

    def scattering_coefficients(self):
        """``(2, n_max)`` array ``[s_TE, s_TM]`` of the fitted scene."""
        check_is_fitted(self, "solution_")
        return self.solution_.scattering.copy()
