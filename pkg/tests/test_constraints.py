import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pofbounds.constraints import (
    AdmissibleSet,
    CaseSpec,
    MomentConstraint,
    PenaltyWeights,
    box_membership,
    build_case_constraints,
    interval_subdomain,
    penalty_term,
    penalty_term_arrays,
    residual,
    residual_arrays,
    smooth_box_membership,
)
from pofbounds.distributions import ProductDistribution, UniformLaw
from pofbounds.measures import BoxDomain, DiscreteMeasure

DOMAIN1 = BoxDomain.unit(1)


def two_point_measure():
    return DiscreteMeasure([[0.2], [0.8]], [0.5, 0.5])


class TestResidual:
    def test_satisfied_mean_constraint(self):
        c = MomentConstraint(0, 1, 0.5)
        assert residual(c, two_point_measure()) == pytest.approx(0.0, abs=1e-15)

    def test_subdomain_moment(self):
        # only the point at 0.8 lies in [0.5, 1]: residual = 0.5*0.8 - 0
        sub = interval_subdomain(DOMAIN1, 0, 0.5, 1.0)
        c = MomentConstraint(0, 1, 0.0, subdomain=sub)
        assert residual(c, two_point_measure()) == pytest.approx(0.4)

    def test_subdomain_mass(self):
        sub = interval_subdomain(DOMAIN1, 0, 0.5, 1.0)
        c = MomentConstraint(0, 1, 0.5, kind="subdomain_mass", subdomain=sub)
        assert residual(c, two_point_measure()) == pytest.approx(0.0, abs=1e-15)

    def test_domain_boundary_point_counts_inside(self):
        # the face at the domain edge is closed: x=1 belongs to [0.5, 1]
        sub = interval_subdomain(DOMAIN1, 0, 0.5, 1.0)
        c = MomentConstraint(0, 1, 1.0, kind="subdomain_mass", subdomain=sub)
        point_mass_at_one = DiscreteMeasure([[1.0]], [1.0])
        assert residual(c, point_mass_at_one) == pytest.approx(0.0)

    @given(seed=st.integers(0, 2**16))
    @settings(max_examples=40, deadline=None)
    def test_smooth_residual_approaches_exact(self, seed):
        # points kept >= 0.05 away from the subdomain face; the per-point
        # membership error shrinks monotonically with sharpness (the signed
        # aggregate can transiently cancel, so monotonicity is asserted on
        # the dominating per-point error)
        rng = np.random.default_rng(seed)
        pts = np.concatenate([rng.uniform(0.0, 0.45, 3), rng.uniform(0.55, 1.0, 3)])[:, None]
        w = rng.random(6)
        w = w / w.sum()
        sub = interval_subdomain(DOMAIN1, 0, 0.5, 1.0)
        c = MomentConstraint(0, 1, 0.3, subdomain=sub)
        exact_membership = box_membership(pts, sub, DOMAIN1)
        point_errors = [
            np.max(np.abs(smooth_box_membership(pts, sub, DOMAIN1, sharpness=10.0 ** k)
                          - exact_membership))
            for k in (1, 2, 3)
        ]
        assert point_errors[2] < point_errors[1] < point_errors[0]
        exact = residual_arrays(c, pts, w, DOMAIN1, smooth=False)
        sharp = residual_arrays(c, pts, w, DOMAIN1, smooth=True, sharpness=1e3)
        assert abs(sharp - exact) < 1e-9


class TestPenaltyTerm:
    def test_feasible_measure_has_zero_penalty(self):
        aset = AdmissibleSet(DOMAIN1, (MomentConstraint(0, 1, 0.5),))
        weights = PenaltyWeights.uniform(1)
        assert penalty_term(aset, weights, two_point_measure()) == pytest.approx(0.0, abs=1e-12)

    def test_normalization_defect(self):
        # raw masses summing to 1.1 with no constraints: 1e3 * 0.01 = 10
        aset = AdmissibleSet(DOMAIN1, ())
        weights = PenaltyWeights.uniform(0)
        value = penalty_term_arrays(aset, weights, np.array([[0.2], [0.8]]), np.array([0.55, 0.55]))
        assert value == pytest.approx(10.0)

    def test_violated_mean_contribution(self):
        # residual 0.2 at lambda 1e3 contributes 40
        aset = AdmissibleSet(DOMAIN1, (MomentConstraint(0, 1, 0.3),))
        weights = PenaltyWeights.uniform(1)
        value = penalty_term(aset, weights, two_point_measure())
        assert value == pytest.approx(1e3 * 0.04)

    def test_zero_iff_feasible(self):
        aset = AdmissibleSet(DOMAIN1, (MomentConstraint(0, 1, 0.5),))
        weights = PenaltyWeights.uniform(1)
        assert penalty_term(aset, weights, two_point_measure()) < 1e-12
        off = DiscreteMeasure([[0.2], [0.7]], [0.5, 0.5])
        assert penalty_term(aset, weights, off) > 1e-12

    @given(seed=st.integers(0, 2**16))
    @settings(max_examples=30, deadline=None)
    def test_invariant_under_support_permutation(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.random((5, 2))
        w = rng.random(5)
        w = w / w.sum()
        domain = BoxDomain.unit(2)
        sub = interval_subdomain(domain, 1, 0.5, 1.0)
        aset = AdmissibleSet(
            domain,
            (MomentConstraint(0, 2, 0.4), MomentConstraint(1, 1, 0.2, kind="subdomain_mass", subdomain=sub)),
        )
        weights = PenaltyWeights.uniform(2)
        base = penalty_term_arrays(aset, weights, pts, w, smooth=True)
        perm = rng.permutation(5)
        permuted = penalty_term_arrays(aset, weights, pts[perm], w[perm], smooth=True)
        assert permuted == pytest.approx(base, rel=1e-12)

    def test_weight_count_must_match(self):
        aset = AdmissibleSet(DOMAIN1, (MomentConstraint(0, 1, 0.5),))
        with pytest.raises(ValueError):
            penalty_term(aset, PenaltyWeights.uniform(2), two_point_measure())


class TestBuildCaseConstraints:
    def test_mean_case_uniform_truth(self):
        truth = ProductDistribution.iid(UniformLaw(), 5)
        aset = build_case_constraints(CaseSpec("mean"), truth)
        assert aset.num_constraints == 5
        assert all(c.target == pytest.approx(0.5) for c in aset.constraints)

    def test_moments_case_counts_and_targets(self):
        truth = ProductDistribution.iid(UniformLaw(), 5)
        aset = build_case_constraints(CaseSpec("moments", max_order=2), truth)
        assert aset.num_constraints == 10
        by_dim = {}
        for c in aset.constraints:
            by_dim.setdefault(c.dim, []).append(c.target)
        for targets in by_dim.values():
            assert targets == [pytest.approx(0.5), pytest.approx(1.0 / 3.0)]

    def test_partial_case_adds_mass_and_moment_pair(self):
        truth = ProductDistribution.iid(UniformLaw(), 5)
        aset = build_case_constraints(CaseSpec("partial", dims=(0,)), truth)
        # 5 full means + (mass, partial moment) on dim 0
        assert aset.num_constraints == 7
        mass = [c for c in aset.constraints if c.kind == "subdomain_mass"]
        partial = [c for c in aset.constraints if c.kind == "moment" and c.subdomain is not None]
        assert len(mass) == 1 and mass[0].target == pytest.approx(0.5)
        assert len(partial) == 1 and partial[0].target == pytest.approx(0.375)

    def test_support_budget_follows_constraint_count(self):
        truth = ProductDistribution.iid(UniformLaw(), 3)
        aset = build_case_constraints(CaseSpec("moments", max_order=4), truth)
        assert aset.max_support_size == 13


class TestValidation:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            MomentConstraint(0, 1, 0.5, kind="variance")

    def test_unattainable_target_warns(self):
        with pytest.warns(UserWarning, match="attainable"):
            MomentConstraint(0, 1, 2.0)

    def test_constraint_dim_inside_domain(self):
        with pytest.raises(ValueError):
            AdmissibleSet(DOMAIN1, (MomentConstraint(3, 1, 0.5),))

    def test_penalties_positive(self):
        with pytest.raises(ValueError):
            PenaltyWeights(0.0, np.array([1.0]))


class TestBoxMembership:
    def test_smooth_gradient_matches_finite_differences(self):
        from pofbounds.optim import finite_difference_gradient

        domain = BoxDomain.unit(2)
        sub = interval_subdomain(domain, 0, 0.3, 0.8)
        x0 = np.array([0.35, 0.6])
        s, ds = smooth_box_membership(x0[None, :], sub, domain, sharpness=40.0, with_grad=True)
        fd = finite_difference_gradient(
            lambda v: float(smooth_box_membership(v[None, :], sub, domain, sharpness=40.0)[0]),
            x0,
            h=1e-6,
        )
        assert np.allclose(ds[0], fd, rtol=1e-5, atol=1e-8)

    def test_exact_membership_half_open_interior_face(self):
        domain = BoxDomain.unit(1)
        sub = interval_subdomain(domain, 0, 0.2, 0.6)
        values = box_membership(np.array([[0.2], [0.6], [0.59999]]), sub, domain)
        assert list(values) == [1.0, 0.0, 1.0]
