import numpy as np
import pytest

from layermie import (
    DeltaParams,
    IncidentWave,
    LayeredScene,
    Material,
    Shell,
    realize_scene,
    rotation_frame,
    solve_modes,
    truncation_order,
)
from layermie.errors import InvalidArgumentError, NumericalResonanceError, PreconditionError
from layermie.fields import eval_in_region, farfield_series, l2_s2_norm, sphere_quadrature
from layermie.mie import TE, TM, plane_wave_prefactors
from oracles import dense_scattering, homogeneous_sphere
from scenes import random_directions, random_incidence, random_scene, solve, vacuum_scene

# Frozen from the 40-digit dense oracle before the solver was written.
PEC_KA1 = {
    "TE": [-0.04535128658715915 - 0.2080734182735712j, -0.00029602674446568155 - 0.01720288093989616j],
    "TM": [-0.2919265817264288 + 0.45464871341284085j, -0.0009224678011069256 + 0.030358143129362285j],
}


def max_rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.abs(b)))


class TestRotationFrame:
    def test_identity(self):
        assert np.array_equal(rotation_frame((0, 0, 1), (1, 0, 0)), np.eye(3))

    def test_x_to_z(self):
        R = rotation_frame(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
        assert np.allclose(R @ [1, 0, 0], [0, 0, 1], atol=1e-15)
        assert np.allclose(R @ [0, 1, 0], [1, 0, 0], atol=1e-15)

    def test_orthogonal(self, rng):
        for _ in range(20):
            inc = random_incidence(rng, 1.0)
            R = rotation_frame(np.array(inc.direction), np.array(inc.polarization))
            assert np.linalg.norm(R @ R.T - np.eye(3)) <= 1e-14
            assert np.linalg.det(R) == pytest.approx(1)


class TestTruncation:
    def test_example(self):
        assert truncation_order(2, 1, 8) == 16

    def test_small(self):
        assert truncation_order(1e-9, 1e-3, 8) == 9

    def test_monotone_in_safety(self):
        for kr in (0.1, 3.0, 40.0):
            assert truncation_order(kr, 1.0, 16) >= truncation_order(kr, 1.0, 8)

    def test_invalid(self):
        with pytest.raises(InvalidArgumentError):
            truncation_order(0, 1)


class TestOracles:
    def test_vacuum(self):
        sol = solve(vacuum_scene(2.0))
        assert np.max(np.abs(sol.scattering)) <= 1e-13

    def test_pec_frozen(self):
        sol = solve(LayeredScene(1.0, "PEC", background_k=1.0))
        assert max_rel(sol.s_te[:2], PEC_KA1["TE"]) <= 1e-12
        assert max_rel(sol.s_tm[:2], PEC_KA1["TM"]) <= 1e-12

    @pytest.mark.parametrize("ka", [0.5, 1.0, 5.0])
    @pytest.mark.parametrize("core", ["PEC", "PMC"])
    def test_obstacle_sphere(self, ka, core):
        sol = solve(LayeredScene(1.0, core, background_k=ka))
        n_check = min(sol.n_max, 12)
        for parity, name in ((TE, "TE"), (TM, "TM")):
            ref = [dense_scattering(n, name, ka, 1.0, core, []) for n in range(1, n_check + 1)]
            assert max_rel(sol.scattering[parity, :n_check], ref) <= 1e-10

    @pytest.mark.parametrize("x", [0.3, 1.0, 4.0])
    def test_dielectric_sphere(self, x):
        sol = solve(LayeredScene(1.0, Material(1.0, 2.25), background_k=x))
        for n in range(1, min(sol.n_max, 12) + 1):
            a, b = homogeneous_sphere(n, x, 1.5)
            assert abs(sol.s_tm[n - 1] + a) <= 1e-10 * abs(a)
            assert abs(sol.s_te[n - 1] + b) <= 1e-10 * abs(b)

    def test_layered_against_dense(self, rng):
        for _ in range(4):
            scene = random_scene(rng)
            sol = solve(scene)
            core = scene.core_kind.value if scene.core_material is None else (
                scene.core_material.mu_r, scene.core_material.eps_r)
            shells = [(s.outer_radius, s.material.mu_r, s.material.eps_r) for s in scene.shells]
            for n in (1, 2, 5):
                for parity, name in ((TE, "TE"), (TM, "TM")):
                    ref = dense_scattering(n, name, scene.background_k, scene.core_radius, core, shells)
                    assert abs(sol.scattering[parity, n - 1] - ref) <= 1e-10 * abs(ref)


def tangential(v, nu):
    return np.cross(nu, v)


class TestInterfaces:
    def test_continuity(self, rng):
        for _ in range(6):
            scene = random_scene(rng)
            sol = solve(scene, random_incidence(rng, scene.background_k))
            nu = random_directions(rng, 32)
            for i, a in enumerate(scene.interface_radii):
                x = a * nu
                if i == 0 and scene.core_material is None:
                    zero_field = "E" if scene.core_kind.value == "PEC" else "H"
                    v = tangential(eval_in_region(sol, 1, x, zero_field), nu)
                    scale = np.max(np.abs(eval_in_region(sol, 1, x, "E" if zero_field == "H" else "H")))
                    assert np.max(np.abs(v)) <= 1e-9 * scale
                    continue
                for field in ("E", "H"):
                    inner = tangential(eval_in_region(sol, i, x, field), nu)
                    outer = tangential(eval_in_region(sol, i + 1, x, field), nu)
                    scale = np.max(np.abs(outer))
                    assert np.max(np.abs(inner - outer)) <= 1e-9 * scale, (i, field)

    def test_lossless_unitarity(self, rng):
        for core in ("PEC", "PMC"):
            scene = random_scene(rng, core=core, lossy=False)
            sol = solve(scene)
            assert np.max(np.abs(np.abs(1 + 2 * sol.scattering) - 1)) <= 1e-9

    def test_truncation_stability(self, rng):
        scene = random_scene(rng)
        n = truncation_order(scene.background_k, scene.calderon_radius)
        quad = sphere_quadrature(2 * (n + 8) + 8)
        a = l2_s2_norm(farfield_series(solve(scene, n_max=n), quad))
        b = l2_s2_norm(farfield_series(solve(scene, n_max=n + 8), quad))
        assert abs(a - b) <= 1e-9 * b

    def test_low_contrast_homotopy(self):
        shell = Material(1.0, 2 + 0.5j)
        target = solve(LayeredScene(1.0, shell, background_k=2.0, calderon_radius=1.5)).scattering
        start = Material(3.0, 1 + 1j)
        errs = []
        for t in (0.9, 0.99, 0.999, 0.9999):
            core = Material(
                (1 - t) * start.mu_r + t * shell.mu_r, (1 - t) * start.eps_r + t * shell.eps_r
            )
            scene = LayeredScene(0.5, core, (Shell(1.0, shell),), 2.0, 1.5)
            errs.append(np.max(np.abs(solve(scene).scattering - target)))
        # first-order continuity: each tenfold step closer cuts the gap tenfold
        ratios = np.array(errs[1:]) / np.array(errs[:-1])
        assert np.all((ratios > 0.05) & (ratios < 0.2))


class TestStructure:
    def test_prefactors(self):
        p = plane_wave_prefactors(3)
        n = np.arange(1, 4)
        En = 1j**n * (2 * n + 1) / (n * (n + 1))
        assert np.allclose(p[TE], En) and np.allclose(p[TM], -1j * En)

    def test_rotation_invariance(self, rng):
        scene = random_scene(rng)
        a = solve(scene)
        b = solve(scene, random_incidence(rng, scene.background_k))
        assert np.allclose(a.scattering, b.scattering, rtol=0, atol=1e-15)

    def test_realized_core_large_contrast(self):
        scene = realize_scene(LayeredScene(0.5, "PMC", (Shell(1.0, Material(1, 2 + 0.5j)),), 2.0, 1.5),
                              DeltaParams(1e-8))
        sol = solve(scene)
        assert np.all(np.isfinite(sol.coeffs))
        assert sol.core_log_scale < 0

    def test_region_lookup(self):
        sol = solve(vacuum_scene())
        idx = sol.region_of_radius(np.array([0.2, 0.5, 0.7, 1.0, 3.0]))
        assert idx.tolist() == [0, -1, 1, -1, 2]


class TestErrors:
    def test_k_mismatch(self):
        scene = vacuum_scene(1.0)
        with pytest.raises(PreconditionError):
            solve_modes(scene, IncidentWave((0, 0, 1), (1, 0, 0), 2.0), 5)

    def test_bad_nmax(self):
        with pytest.raises(InvalidArgumentError):
            solve(vacuum_scene(), n_max=0)
        with pytest.raises(InvalidArgumentError):
            solve(vacuum_scene(), n_max=10_000)

    def test_resonance_detected(self):
        scene = LayeredScene(1.0, Material(1.0, 16.0), background_k=6.208922687001299)
        with pytest.raises(NumericalResonanceError) as info:
            solve(scene)
        assert info.value.n == 20 and info.value.parity == "TE"
        assert info.value.condition > 1e12
