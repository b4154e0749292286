import numpy as np
import pytest

from pofbounds.baselines import (
    ComBound,
    McEstimate,
    OscSearchConfig,
    estimate_oscillations,
    mcdiarmid_bound,
    monte_carlo_mean,
    monte_carlo_pof,
)
from pofbounds.distributions import ProductDistribution, UniformLaw
from pofbounds.measures import BoxDomain
from pofbounds.response import ThresholdIndicator


def first_coordinate(x):
    return float(np.atleast_1d(x)[0])


class TestMonteCarloPof:
    def test_constant_indicator(self):
        truth = ProductDistribution.iid(UniformLaw(), 2)
        est = monte_carlo_pof(truth, lambda x: 1, 500, seed=0)
        assert est.estimate == 1.0
        assert est.stderr == 0.0

    def test_half_space_probability(self):
        truth = ProductDistribution.iid(UniformLaw(), 1)
        indicator = ThresholdIndicator(0.5, first_coordinate)
        est = monte_carlo_pof(truth, indicator, 12_000, seed=1)
        assert abs(est.estimate - 0.5) <= max(3.0 * est.stderr, 1e-3)

    def test_deterministic(self):
        truth = ProductDistribution.iid(UniformLaw(), 3)
        indicator = ThresholdIndicator(0.7, first_coordinate)
        a = monte_carlo_pof(truth, indicator, 2000, seed=9)
        b = monte_carlo_pof(truth, indicator, 2000, seed=9)
        assert a.estimate == b.estimate

    def test_estimate_validation(self):
        with pytest.raises(ValueError):
            McEstimate(estimate=1.2, samples=10, stderr=0.0)


class TestOscillationSearch:
    def test_linear_response_has_analytic_oscillations(self):
        domain = BoxDomain.unit(5)
        osc = estimate_oscillations(first_coordinate, domain, OscSearchConfig(seed=2))
        assert osc[0] == pytest.approx(1.0)
        assert np.allclose(osc[1:], 0.0)

    def test_refinement_never_shrinks_estimates(self, deflection_model):
        domain = BoxDomain.unit(5)
        estimates = [
            estimate_oscillations(
                deflection_model, domain,
                OscSearchConfig(levels=levels, base_points=32, seed=3),
            )
            for levels in (8, 16, 32)
        ]
        assert np.all(estimates[1] >= estimates[0] - 1e-12)
        assert np.all(estimates[2] >= estimates[1] - 1e-12)


class TestMcdiarmidBound:
    def test_linear_response_closed_form(self):
        # osc = (1,0,0,0,0), E[Y]=0.25, Y_T=0.5: exp(-2 * 0.0625) = 0.8825
        domain = BoxDomain.unit(5)
        bound = mcdiarmid_bound(first_coordinate, domain, 0.25, 0.5, OscSearchConfig(seed=4))
        assert bound.diameter_sq == pytest.approx(1.0)
        assert bound.value == pytest.approx(np.exp(-0.125))
        assert bound.value == pytest.approx(0.8825, abs=1e-4)

    def test_vacuous_when_threshold_below_mean(self):
        domain = BoxDomain.unit(5)
        bound = mcdiarmid_bound(first_coordinate, domain, 0.6, 0.5, OscSearchConfig(seed=4))
        assert bound.value == 1.0

    def test_monotone_in_threshold(self):
        domain = BoxDomain.unit(5)
        osc = estimate_oscillations(first_coordinate, domain, OscSearchConfig(seed=4))
        values = [
            mcdiarmid_bound(first_coordinate, domain, 0.25, t, oscillations=osc).value
            for t in np.linspace(0.25, 0.9, 8)
        ]
        assert np.all(np.diff(values) <= 1e-12)

    def test_looser_than_markov_toy_optimum(self):
        # the mean-constrained optimum on the 1-d ramp is 0.5; the
        # concentration bound at the same threshold is 0.8825
        domain = BoxDomain.unit(5)
        bound = mcdiarmid_bound(first_coordinate, domain, 0.25, 0.5, OscSearchConfig(seed=4))
        assert bound.value >= 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            ComBound(0.5, np.array([-1.0]), 1.0, 0.6, 0.5)


class TestMonteCarloMean:
    def test_uniform_mean(self):
        truth = ProductDistribution.iid(UniformLaw(), 1)
        assert monte_carlo_mean(truth, first_coordinate, 10_000, seed=5) == pytest.approx(0.5, abs=0.01)
