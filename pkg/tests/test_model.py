import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import brute_defect, unit_vectors
from trapdyn import model, systems
from trapdyn.errors import (
    DimensionError,
    LosslessError,
    NotNegativeDefiniteError,
    SystemFormatError,
)
from trapdyn.model import LosslessQuadraticSystem, energy_rate, eval_rhs, lossless_defect, shift


def lorenz_flipped():
    # Q^(3)_12 flipped from +1/2 to -1/2
    return LosslessQuadraticSystem.from_triplets(
        [0, 0, 0], systems.lorenz().L, [(1, 0, 2, -0.5), (2, 0, 1, -0.5)], check=False
    )


class TestStorage:
    def test_triplets_are_canonical_and_symmetric(self):
        s = LosslessQuadraticSystem.from_triplets(
            [0, 1], np.eye(2), [(0, 1, 0, -0.5), (1, 0, 0, 1.0)]
        )
        assert s.q_index.tolist() == [[0, 0, 1], [1, 0, 0]]
        assert_allclose(s.Q[0], [[0, -0.5], [-0.5, 0]])
        assert np.array_equal(s.Q, s.Q.transpose(0, 2, 1))

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            LosslessQuadraticSystem.from_triplets([0, 0], np.eye(2), [(0, 0, 1, 1.0), (0, 1, 0, 1.0)], check=False)

    def test_non_lossless_rejected_unless_unchecked(self):
        with pytest.raises(LosslessError):
            LosslessQuadraticSystem.from_triplets(
                [0, 0, 0], np.eye(3), [(1, 0, 2, -0.5), (2, 0, 1, -0.5)]
            )
        assert lossless_defect(lorenz_flipped()) == 1.0

    def test_arrays_are_read_only(self, lor):
        with pytest.raises(ValueError):
            lor.c[0] = 1.0
        with pytest.raises(ValueError):
            lor.Q[0, 0, 0] = 1.0

    def test_dense_roundtrip(self, lor):
        again = LosslessQuadraticSystem.from_dense(lor.c, lor.L, lor.Q)
        assert np.array_equal(again.q_index, lor.q_index)
        assert np.array_equal(again.q_value, lor.q_value)


class TestLosslessDefect:
    def test_lorenz_zero(self, lor):
        assert lossless_defect(lor) == 0.0

    def test_zero_system(self):
        assert lossless_defect(systems.zero_system(4)) == 0.0

    def test_flipped_lorenz(self):
        assert lossless_defect(lorenz_flipped()) == pytest.approx(1.0, abs=0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_triple_loop(self, seed):
        rng = np.random.default_rng(seed)
        T = rng.standard_normal((4, 4, 4))
        s = LosslessQuadraticSystem.from_dense(np.zeros(4), np.eye(4), T, check=False)
        assert lossless_defect(s) == pytest.approx(brute_defect(s.Q), rel=1e-14)

    def test_random_unit_vectors_energy_free(self, lor):
        rng = np.random.default_rng(3)
        for x in unit_vectors(rng, 100, 3):
            assert abs(x @ lor.quadratic(x)) <= 1e-10 * lor.max_abs_q


class TestEvalRhs:
    def test_two_state_equilibrium(self, two):
        assert_allclose(eval_rhs(two, [0.0, 0.25]), [0.0, 0.0], atol=1e-15)

    def test_origin_gives_c(self, two, lor):
        assert_allclose(eval_rhs(two, [0, 0]), two.c)
        assert_allclose(eval_rhs(lor, [0, 0, 0]), lor.c)

    def test_lorenz_at_ones(self, lor):
        assert_allclose(eval_rhs(lor, [1, 1, 1]), [0.0, 26.0, -8 / 3 + 1], rtol=1e-15)

    def test_lorenz_formula(self, lor):
        rng = np.random.default_rng(0)
        s, r, b = 10.0, 28.0, 8.0 / 3.0
        for x1, x2, x3 in rng.standard_normal((20, 3)) * 10:
            expect = [s * (x2 - x1), x1 * (r - x3) - x2, x1 * x2 - b * x3]
            assert_allclose(eval_rhs(lor, [x1, x2, x3]), expect, rtol=1e-13, atol=1e-12)

    def test_dimension_mismatch(self, lor):
        with pytest.raises(DimensionError):
            eval_rhs(lor, [1.0, 2.0])


class TestShift:
    def test_lorenz_38(self, lor_sf):
        assert_allclose(lor_sf.A_s, np.diag([-10.0, -1.0, -8 / 3]), atol=1e-14)
        assert_allclose(lor_sf.d, [0.0, 0.0, -304 / 3], rtol=1e-15)
        assert_allclose(lor_sf.eigs, [-1.0, -8 / 3, -10.0], rtol=1e-14)

    def test_zero_shift(self, lor):
        sf = shift(lor, np.zeros(3))
        assert_allclose(sf.A_s, lor.L_s, atol=0)
        assert_allclose(sf.d, lor.c, atol=0)

    def test_two_state_zero_shift(self, two_sf):
        assert_allclose(two_sf.A_s, np.diag([-1.0, -4.0]))
        assert_allclose(two_sf.d, [0.0, 1.0])

    def test_symmetric_part_consistent(self, lor):
        sf = shift(lor, [1.5, -2.0, 7.0])
        assert_allclose(sf.A_s, 0.5 * (sf.A + sf.A.T), atol=1e-12)

    def test_eigs_sorted_descending(self, lor):
        sf = shift(lor, [3.0, 2.0, 1.0])
        assert np.all(np.diff(sf.eigs) <= 0)

    def test_dimension_mismatch(self, lor):
        with pytest.raises(DimensionError):
            shift(lor, [0.0, 1.0])


class TestEnergyRate:
    def test_origin(self, lor_sf):
        assert energy_rate(lor_sf, np.zeros(3)) == 0.0

    def test_two_state_center_is_peak(self, two_sf):
        assert energy_rate(two_sf, [0.0, 0.125]) == pytest.approx(1 / 16, rel=1e-15)

    def test_lorenz_critical_points_on_boundary(self, lor_sf):
        # y = (0, +-w, -30.4) with w^2 = R*^2 - 30.4^2, R*^2 = (304/3)^2 / 4 / (5/3)
        w = np.sqrt((304 / 3) ** 2 * 0.15 - 30.4 ** 2)
        for sgn in (1, -1):
            assert abs(energy_rate(lor_sf, [0.0, sgn * w, -30.4])) < 1e-9

    def test_matches_derivative_of_kinetic_energy(self, lor):
        # d/dt (|y|^2 / 2) along the shifted dynamics, computed from eval_rhs
        rng = np.random.default_rng(1)
        sf = shift(lor, [2.0, -1.0, 30.0])
        for y in rng.standard_normal((20, 3)) * 20:
            ydot = eval_rhs(lor, y + sf.m)
            assert energy_rate(sf, y) == pytest.approx(y @ ydot, rel=1e-9, abs=1e-9)

    def test_chain_rule_finite_difference(self, lor):
        # one RK4 step of size h approximates the flow; (K(x(h)) - K(x0)) / h -> rate
        sf = shift(lor, np.zeros(3))
        rng = np.random.default_rng(2)
        h = 1e-6
        for x0 in rng.standard_normal((10, 3)) * 5:
            f = lambda x: eval_rhs(lor, x)
            k1 = f(x0)
            k2 = f(x0 + h / 2 * k1)
            k3 = f(x0 + h / 2 * k2)
            k4 = f(x0 + h * k3)
            x1 = x0 + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            fd = (0.5 * x1 @ x1 - 0.5 * x0 @ x0) / h
            rate = energy_rate(sf, x0)
            assert fd == pytest.approx(rate, abs=1e-3 * (1 + abs(rate)))

    def test_batch(self, lor_sf):
        Y = np.arange(12.0).reshape(4, 3)
        assert_allclose(energy_rate(lor_sf, Y), [energy_rate(lor_sf, y) for y in Y])


class TestEllipsoid:
    def test_two_state(self, two_sf):
        ee = model.ellipsoid_E(two_sf)
        assert_allclose(ee.center, [0.0, 0.125], atol=1e-16)
        assert_allclose(sorted(ee.semi_axes), [0.125, 0.25])
        assert ee.peak_rate == pytest.approx(1 / 16)

    def test_semi_axes_follow_eigenvalues(self, two_sf):
        ee = model.ellipsoid_E(two_sf)
        # eigs descending (-1, -4): longer axis along x1
        assert_allclose(ee.semi_axes, [0.25, 0.125])
        assert_allclose(np.abs(ee.axes), np.eye(2))

    def test_lorenz(self, lor_sf):
        ee = model.ellipsoid_E(lor_sf)
        assert_allclose(ee.center, [0.0, 0.0, -19.0], atol=1e-12)
        q = -(304 / 3) ** 2 * 3 / 8
        assert_allclose(ee.semi_axes, 0.5 * np.sqrt(q / lor_sf.eigs), rtol=1e-14)

    def test_degenerate(self):
        s = LosslessQuadraticSystem.from_triplets(np.zeros(3), -np.eye(3), [])
        ee = model.ellipsoid_E(shift(s, np.zeros(3)))
        assert ee.degenerate
        assert_allclose(ee.center, 0)
        assert_allclose(ee.semi_axes, 0)

    def test_requires_negative_definite(self, lor):
        with pytest.raises(NotNegativeDefiniteError):
            model.ellipsoid_E(shift(lor, np.zeros(3)))

    @pytest.mark.parametrize("which", ["two", "lor"])
    def test_containment(self, which, two_sf, lor_sf):
        sf = two_sf if which == "two" else lor_sf
        ee = model.ellipsoid_E(sf)
        rng = np.random.default_rng(5)
        u = unit_vectors(rng, 500, sf.n)
        on = ee.boundary_point(u)
        scale = 1 + np.linalg.norm(sf.d) * np.linalg.norm(on, axis=1)
        assert np.all(np.abs(energy_rate(sf, on)) <= 1e-8 * scale)
        inside = ee.center + 0.99 * (on - ee.center)
        outside = ee.center + 1.01 * (on - ee.center)
        assert np.all(energy_rate(sf, inside) > 0)
        assert np.all(energy_rate(sf, outside) < 0)


class TestJson:
    def test_roundtrip_bytes(self, lor):
        text = model.system_to_json(lor)
        assert model.system_to_json(model.system_from_json(text)) == text

    def test_roundtrip_rotated(self):
        s, _ = systems.stacked_lorenz(2, 3)
        text = model.system_to_json(s)
        back = model.system_from_json(text)
        assert np.array_equal(back.q_value, s.q_value)
        assert np.array_equal(back.L, s.L)
        assert model.system_to_json(back) == text

    def test_one_based_indices(self, two):
        text = model.system_to_json(two)
        assert '"i": 1, "j": 1, "k": 2' in text
        assert '"i": 2, "j": 1, "k": 1' in text

    def test_truncated(self, lor):
        text = model.system_to_json(lor)[:60]
        with pytest.raises(SystemFormatError, match="line"):
            model.system_from_json(text)

    def test_j_greater_than_k(self):
        doc = '{"n": 1, "c": [0], "L": [[0]], "Q": [{"i": 1, "j": 1, "k": 1, "v": 0}]}'
        model.system_from_json(doc)
        bad = '{"n": 2, "c": [0, 0], "L": [[0, 0], [0, 0]], "Q": [{"i": 1, "j": 2, "k": 1, "v": 1}]}'
        with pytest.raises(SystemFormatError):
            model.system_from_json(bad)

    def test_missing_key(self):
        with pytest.raises(SystemFormatError, match="missing"):
            model.system_from_json('{"n": 1, "c": [0]}')
