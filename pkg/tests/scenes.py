"""Scene builders shared by the test modules."""

import numpy as np

from layermie import IncidentWave, LayeredScene, Material, Shell, solve_modes, truncation_order

REFERENCE_SHELL = Shell(1.0, Material(1.0, 2 + 0.5j))


def reference_scene(core):
    """Core radius 0.5, lossy shell to 1, ``k = 2``, ``R = 1.5``."""
    return LayeredScene(0.5, core, (REFERENCE_SHELL,), background_k=2.0, calderon_radius=1.5)


def vacuum_scene(k=1.0):
    return LayeredScene(0.5, Material(), (Shell(1.0, Material()),), background_k=k)


def random_material(rng, lossy=True):
    im = rng.uniform(0, 1, 2) if lossy else np.zeros(2)
    mu, eps = rng.uniform(0.5, 4, 2) + 1j * im
    return Material(mu, eps)


def random_scene(rng, core=None, max_shells=3, lossy=True, k=None):
    """Up to ``max_shells`` shells, materials with ``Re`` in [0.5, 4] and ``Im`` in [0, 1]."""
    n_shells = int(rng.integers(0, max_shells + 1))
    if core is None:
        core = ["PEC", "PMC", None][int(rng.integers(0, 3))]
    if core is None:
        core = random_material(rng, lossy)
    radii = np.sort(rng.uniform(0.3, 1.2, n_shells + 1))
    radii = radii[0] + np.cumsum(np.concatenate([[0], np.diff(radii) + 0.05]))
    shells = tuple(Shell(float(r), random_material(rng, lossy)) for r in radii[1:])
    k = float(rng.uniform(0.5, 3)) if k is None else k
    return LayeredScene(float(radii[0]), core, shells, background_k=k)


def random_incidence(rng, k):
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    p = np.cross(d, rng.normal(size=3))
    p /= np.linalg.norm(p)
    return IncidentWave(tuple(d), tuple(p), k)


def solve(scene, incidence=None, n_max=None):
    incidence = incidence or IncidentWave((0, 0, 1), (1, 0, 0), scene.background_k)
    if n_max is None:
        n_max = truncation_order(scene.background_k, scene.calderon_radius)
    return solve_modes(scene, incidence, n_max)


def random_directions(rng, n):
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)
