import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arsonproof.contracts import (
    Coinsurance,
    ConstantRetention,
    Contract,
    DisappearingDeductible,
    FullInsurance,
    Mixed,
    StraightDeductible,
    check_no_sabotage,
    construct,
    contract_from_dict,
    dumps,
    evaluate,
    family_from_dict,
    jumps,
    max_slope,
    retention,
)
from arsonproof.exceptions import DomainError, ValidationError

M = 4.0


def closed_form(spec, x):
    """Family formulas written out directly, independent of the segment builder."""
    if isinstance(spec, FullInsurance):
        return x
    if isinstance(spec, StraightDeductible):
        return np.maximum(0.0, x - spec.d)
    if isinstance(spec, Coinsurance):
        return spec.alpha * x
    if isinstance(spec, Mixed):
        return np.minimum(spec.delta, np.maximum(0.0, spec.alpha * x - spec.d))
    if isinstance(spec, DisappearingDeductible):
        return np.where(x < spec.d, 0.0, (x - spec.d) * M / (M - spec.d))
    if isinstance(spec, ConstantRetention):
        return np.where(x >= spec.t, x - spec.j, 0.0)
    raise TypeError(spec)


FAMILIES = [
    FullInsurance(),
    StraightDeductible(0.0),
    StraightDeductible(1.3),
    StraightDeductible(M),
    Coinsurance(0.35),
    Mixed(1.0, 0.5, 0.5),
    Mixed(2.5, 1.0, 0.2),
    Mixed(3.9, 0.9, 0.0),
    DisappearingDeductible(2.0),
    DisappearingDeductible(0.7),
    ConstantRetention(2.0, 1.0),
    ConstantRetention(3.1, 0.4),
    ConstantRetention(2.0, 2.0),
]


class TestEvaluate:
    def test_deductible_example(self):
        assert evaluate(construct(StraightDeductible(2.0), M), 3.0) == 1.0

    def test_retention_takes_right_value_at_jump(self):
        c = construct(ConstantRetention(2.0, 1.0), M)
        assert c(2.0) == 1.0
        assert c(np.nextafter(2.0, 0.0)) == 0.0

    def test_disappearing_deductible_example(self):
        assert construct(DisappearingDeductible(2.0), M)(3.0) == pytest.approx(2.0, abs=1e-15)

    @pytest.mark.parametrize("x", [-1e-9, M + 1e-9, np.nan])
    def test_outside_domain(self, x):
        with pytest.raises(DomainError):
            construct(FullInsurance(), M)(x)

    def test_array_and_scalar(self):
        c = construct(StraightDeductible(1.0), M)
        assert isinstance(c(2.0), float)
        np.testing.assert_array_equal(c(np.array([0.0, 1.0, 4.0])), [0.0, 0.0, 3.0])


@pytest.mark.parametrize("spec", FAMILIES, ids=repr)
def test_construct_matches_closed_form(spec):
    rng = np.random.default_rng(7)
    x = np.concatenate([rng.uniform(0.0, M, 1000), [0.0, M]])
    c = construct(spec, M)
    np.testing.assert_allclose(c(x), closed_form(spec, x), rtol=0, atol=1e-12)
    assert np.all(c(x) <= x + 1e-15)


class TestConstruct:
    def test_full_insurance_single_segment(self):
        c = construct(FullInsurance(), M)
        assert len(c.segments) == 1 and c.segments[0].slope == 1.0

    def test_mixed_shape(self):
        c = construct(Mixed(1.0, 0.5, 0.5), M)
        assert c(1.0) == 0.0 and c(3.0) == pytest.approx(1.0) and c(4.0) == 1.0
        assert [s.slope for s in c.segments] == [0.0, 0.5, 0.0]

    def test_retention_without_jump_is_deductible(self):
        a = construct(ConstantRetention(2.0, 2.0), M)
        b = construct(StraightDeductible(2.0), M)
        assert a == b

    @pytest.mark.parametrize(
        "spec",
        [
            ConstantRetention(1.0, 2.0),
            StraightDeductible(-0.1),
            StraightDeductible(M + 1),
            Coinsurance(1.0),
            Mixed(0.0, 0.5, 0.1),
            DisappearingDeductible(M),
            StraightDeductible(float("nan")),
        ],
        ids=repr,
    )
    def test_invalid_parameters(self, spec):
        with pytest.raises(ValidationError):
            construct(spec, M)

    @pytest.mark.parametrize(
        "segs",
        [
            [(0.0, 2.0, 0.0, 0.0)],  # does not reach M
            [(0.0, 2.0, 0.0, 0.0), (2.5, 4.0, 0.0, 1.0)],  # gap
            [(0.0, 4.0, 0.0, -0.1)],  # decreasing
            [(0.0, 4.0, 0.0, 1.5)],  # exceeds the loss
            [(0.0, 2.0, 0.0, 1.0), (2.0, 4.0, 1.0, 1.0)],  # drops at 2
            [(0.0, 4.0, 0.5, 0.0)],  # positive at 0
        ],
    )
    def test_invalid_contracts(self, segs):
        with pytest.raises(ValidationError):
            Contract(M, segs)


class TestMaxSlope:
    def test_examples(self):
        assert max_slope(construct(StraightDeductible(2.0), M)) == (1.0, False)
        assert max_slope(construct(DisappearingDeductible(2.0), M)) == (2.0, False)
        assert max_slope(construct(ConstantRetention(2.0, 1.0), M)) == (1.0, True)

    def test_jump_location_and_size(self):
        assert jumps(construct(ConstantRetention(2.0, 1.0), M)) == [(2.0, 1.0)]


class TestRetention:
    def test_examples(self):
        x = np.linspace(0.0, M, 401)
        np.testing.assert_array_equal(retention(construct(FullInsurance(), M))(x), 0.0)
        np.testing.assert_allclose(retention(construct(StraightDeductible(2.0), M))(x), np.minimum(x, 2.0))
        r = retention(construct(DisappearingDeductible(2.0), M))(x)
        np.testing.assert_allclose(r, np.where(x <= 2.0, x, 4.0 - x), atol=1e-14)

    @pytest.mark.parametrize("spec", FAMILIES, ids=repr)
    def test_adds_up_to_loss(self, spec):
        c = construct(spec, M)
        x = np.random.default_rng(1).uniform(0.0, M, 500)
        np.testing.assert_allclose(c(x) + retention(c)(x), x, atol=1e-13)


class TestNoSabotage:
    def test_deductible_passes(self):
        assert check_no_sabotage(construct(StraightDeductible(2.0), M)).ok

    def test_disappearing_deductible(self):
        rep = check_no_sabotage(construct(DisappearingDeductible(2.0), M))
        assert not rep.slope_ok and not rep.retention_monotone
        assert 2.0 < rep.retention_witness < 4.0

    def test_retention_jump(self):
        rep = check_no_sabotage(construct(ConstantRetention(2.0, 1.0), M))
        assert not rep.slope_ok and not rep.comonotone
        assert rep.slope_witness == 2.0 and rep.comonotone_witness == 2.0

    def test_slope_ok_implies_comonotone(self, corpus):
        n_ok = 0
        for c in corpus:
            rep = check_no_sabotage(c)
            if rep.slope_ok:
                n_ok += 1
                assert rep.comonotone and rep.retention_monotone
        assert n_ok > 10


class TestSerialization:
    @pytest.mark.parametrize("spec", FAMILIES, ids=repr)
    def test_family_round_trip(self, spec):
        text = dumps(spec)
        again = family_from_dict(json.loads(text))
        assert again == spec and dumps(again) == text

    def test_contract_round_trip_is_byte_identical(self, corpus):
        for c in corpus[:50]:
            text = dumps(c)
            again = contract_from_dict(json.loads(text))
            assert again == c and dumps(again) == text

    def test_unknown_family(self):
        with pytest.raises(ValidationError):
            family_from_dict({"type": "Nope", "params": {}})


@settings(max_examples=60, deadline=None)
@given(
    t=st.floats(0.0, M),
    frac=st.floats(0.0, 1.0),
    x=st.lists(st.floats(0.0, M), min_size=1, max_size=20),
)
def test_retention_family_properties(t, frac, x):
    j = t * frac
    c = construct(ConstantRetention(t, j), M)
    xs = np.array(x)
    y = c(xs)
    assert np.all(y >= 0.0) and np.all(y <= xs + 1e-12)
    np.testing.assert_allclose(y, closed_form(ConstantRetention(t, j), xs), atol=1e-12)
    order = np.argsort(xs)
    assert np.all(np.diff(y[order]) >= -1e-12)


@settings(max_examples=60, deadline=None)
@given(delta=st.floats(0.01, M), alpha=st.floats(0.01, 1.0), d=st.floats(0.0, M))
def test_mixed_family_matches_formula(delta, alpha, d):
    spec = Mixed(delta, alpha, d)
    x = np.linspace(0.0, M, 257)
    np.testing.assert_allclose(construct(spec, M)(x), closed_form(spec, x), atol=1e-12)
