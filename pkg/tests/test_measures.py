import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pofbounds.measures import (
    BoxDomain,
    DiscreteMeasure,
    MeasureError,
    dirac_membership,
    expectation,
    measure_from_csv,
    measure_to_csv,
    pof_under_measure,
    project_to_simplex,
)

st_weights = st.lists(
    st.floats(-3.0, 3.0, allow_nan=False), min_size=1, max_size=8
)


def random_measure(rng, q, m):
    w = rng.random(q)
    return DiscreteMeasure(rng.random((q, m)), w / w.sum())


class TestDiracMembership:
    def test_point_inside_one_sided_set(self):
        assert dirac_membership(0.5, 0.4) == 1

    def test_point_outside(self):
        assert dirac_membership(0.39, 0.4) == 0

    def test_boundary_belongs_to_set(self):
        # half-open convention: the threshold itself fails
        assert dirac_membership(0.4, 0.4) == 1

    def test_upper_endpoint_excluded(self):
        assert dirac_membership(0.7, 0.4, 0.7) == 0

    def test_bad_interval_rejected(self):
        with pytest.raises(ValueError):
            dirac_membership(0.5, 1.0, 0.0)


class TestExpectation:
    def test_point_mass(self):
        m = DiscreteMeasure([[0.3]], [1.0])
        assert expectation(m, lambda p: p[0]) == pytest.approx(0.3)

    def test_two_point_mean(self):
        m = DiscreteMeasure([[0.2], [0.8]], [0.5, 0.5])
        assert expectation(m, lambda p: p[0]) == pytest.approx(0.5)

    def test_two_point_second_moment(self):
        m = DiscreteMeasure([[0.2], [0.8]], [0.5, 0.5])
        assert expectation(m, lambda p: p[0] ** 2) == pytest.approx(0.34)

    def test_nan_rejected(self):
        m = DiscreteMeasure([[0.2], [0.8]], [0.5, 0.5])
        with pytest.raises(ValueError, match="NaN"):
            expectation(m, lambda p: float("nan"))

    @given(
        a=st.floats(-5, 5, allow_nan=False),
        b=st.floats(-5, 5, allow_nan=False),
        seed=st.integers(0, 2**20),
    )
    @settings(max_examples=40, deadline=None)
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        m = random_measure(rng, rng.integers(1, 6), 3)
        f = lambda p: float(p[0] ** 2)
        g = lambda p: float(np.sin(p[1]))
        combined = expectation(m, lambda p: a * f(p) + b * g(p))
        assert combined == pytest.approx(a * expectation(m, f) + b * expectation(m, g), abs=1e-10)


class TestPofUnderMeasure:
    def test_all_points_unsafe(self):
        m = DiscreteMeasure([[0.2], [0.8]], [0.5, 0.5])
        assert pof_under_measure(m, lambda p: 1) == 1.0

    def test_all_points_safe(self):
        m = DiscreteMeasure([[0.2], [0.8]], [0.5, 0.5])
        assert pof_under_measure(m, lambda p: 0) == 0.0

    def test_mixed(self):
        m = DiscreteMeasure([[0.6], [0.2]], [0.3, 0.7])
        assert pof_under_measure(m, lambda p: int(p[0] >= 0.5)) == pytest.approx(0.3)

    @given(seed=st.integers(0, 2**20))
    @settings(max_examples=40, deadline=None)
    def test_always_a_probability(self, seed):
        rng = np.random.default_rng(seed)
        m = random_measure(rng, rng.integers(1, 8), 2)
        p = pof_under_measure(m, lambda x: int(x[0] > 0.5))
        assert 0.0 <= p <= 1.0
        assert pof_under_measure(m, lambda x: 1) == pytest.approx(1.0, abs=1e-9)


def _projection_oracle(target, resolution=200_000):
    """Brute-force 2-d simplex projection: scan w1, take w2 = 1 - w1."""
    w1 = np.linspace(0.0, 1.0, resolution)
    cost = (w1 - target[0]) ** 2 + (1.0 - w1 - target[1]) ** 2
    best = w1[np.argmin(cost)]
    return np.array([best, 1.0 - best])


class TestProjectToSimplex:
    def test_already_feasible(self):
        assert np.allclose(project_to_simplex([0.5, 0.5]), [0.5, 0.5])

    def test_clamp_and_renormalize(self):
        assert np.allclose(project_to_simplex([2.0, 0.0]), [1.0, 0.0])

    def test_symmetric_excess_against_grid_oracle(self):
        target = [0.6, 0.6]
        expected = _projection_oracle(target)
        got = project_to_simplex(target)
        assert np.allclose(got, [0.5, 0.5], atol=1e-12)
        assert np.allclose(got, expected, atol=1e-4)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            project_to_simplex([np.nan, np.nan])
        with pytest.raises(ValueError):
            project_to_simplex([])

    @given(st_weights)
    @settings(max_examples=60, deadline=None)
    def test_projection_lands_on_simplex_and_is_idempotent(self, raw):
        w = project_to_simplex(raw)
        assert np.all(w >= 0)
        assert np.sum(w) == pytest.approx(1.0, abs=1e-12)
        again = project_to_simplex(w)
        assert np.allclose(w, again, atol=1e-12)

    @given(st.integers(1, 8), st.integers(0, 2**20))
    @settings(max_examples=40, deadline=None)
    def test_feasible_input_unchanged(self, q, seed):
        rng = np.random.default_rng(seed)
        w = rng.random(q)
        w = w / w.sum()
        assert np.allclose(project_to_simplex(w), w, atol=1e-12)


class TestDiscreteMeasure:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(MeasureError):
            DiscreteMeasure([[0.1], [0.2]], [0.6, 0.5])

    def test_points_must_stay_in_unit_box(self):
        with pytest.raises(MeasureError):
            DiscreteMeasure([[1.2]], [1.0])

    def test_negative_weight_rejected(self):
        with pytest.raises(MeasureError):
            DiscreteMeasure([[0.1], [0.2]], [-0.2, 1.2])

    def test_immutable_arrays(self):
        m = DiscreteMeasure([[0.1], [0.2]], [0.5, 0.5])
        with pytest.raises(ValueError):
            m.points[0, 0] = 0.9

    def test_csv_round_trip(self):
        m = DiscreteMeasure([[0.25, 0.75], [0.5, 0.125]], [0.375, 0.625])
        text = measure_to_csv(m)
        assert text.splitlines()[0] == "x1,x2,weight"
        back = measure_from_csv(text)
        assert np.array_equal(back.points, m.points)
        assert np.array_equal(back.weights, m.weights)


class TestBoxDomain:
    def test_unit_box(self):
        box = BoxDomain.unit(3)
        assert box.contains([0.0, 0.5, 1.0])
        assert not box.contains([0.0, 0.5, 1.1])

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            BoxDomain(2, [0.0, 0.8], [1.0, 0.2])
