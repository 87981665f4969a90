"""Evidence map and the uncertainty decomposition."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from evidact import (
    DirichletParams,
    EvidenceMapConfig,
    UncertaintyReport,
    data_uncertainty,
    distribution_uncertainty,
    logits_to_alpha,
    logits_to_alpha_batch,
    predict,
    predict_batch,
    total_entropy,
    uncertainty_batch,
    uncertainty_report,
    uncertainty_reports_batch,
)


class TestEvidenceMap:
    def test_exponential_map(self):
        alpha = logits_to_alpha_batch(np.array([[0.0, 1.0, -1.0]]))
        assert np.allclose(alpha, [[1.0, math.e, 1.0 / math.e]])

    def test_clamp_bounds_alpha(self):
        alpha = logits_to_alpha_batch(np.array([[15.0, -15.0]]))
        assert np.allclose(alpha, [[math.exp(10.0), math.exp(-10.0)]])
        narrow = logits_to_alpha_batch(np.array([[15.0, -15.0]]), EvidenceMapConfig(logit_clamp=2.0))
        assert np.allclose(narrow, [[math.exp(2.0), math.exp(-2.0)]])

    def test_single_vector_wrapper(self):
        params = logits_to_alpha(np.array([0.0, 0.0]))
        assert isinstance(params, DirichletParams)
        assert np.allclose(params.alpha, [1.0, 1.0])

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            logits_to_alpha_batch(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            logits_to_alpha_batch(np.array([[np.nan, 0.0]]))
        with pytest.raises(ValueError):
            EvidenceMapConfig(map_kind="linear")
        with pytest.raises(ValueError):
            EvidenceMapConfig(logit_clamp=0.0)


class TestDecomposition:
    def test_flat_two_class_values(self):
        p = DirichletParams(np.array([1.0, 1.0]))
        assert distribution_uncertainty(p) == pytest.approx(math.log(2.0) - 0.5, abs=1e-12)
        assert data_uncertainty(p) == pytest.approx(0.5, abs=1e-12)

    def test_frozen_reference_values(self):
        # evaluated once against the digamma closed forms and pinned
        cases = {
            (3.0, 1.0): (0.10400181128547503, 0.45833333333333326),
            (10.0, 10.0): (0.024375777384517572, 0.6687714031754277),
        }
        for alpha, (want_dis, want_data) in cases.items():
            p = DirichletParams(np.array(alpha))
            assert distribution_uncertainty(p) == pytest.approx(want_dis, abs=1e-12)
            assert data_uncertainty(p) == pytest.approx(want_data, abs=1e-12)

    def test_large_evidence_shrinks_u_dis(self):
        small = DirichletParams(np.array([1.0, 1.0]))
        large = DirichletParams(np.array([100.0, 100.0]))
        assert distribution_uncertainty(large) < distribution_uncertainty(small)
        # both stay maximally unsure in the data sense (rho = 1/2)
        assert data_uncertainty(large) == pytest.approx(math.log(2.0), abs=1e-2)

    def test_batch_empty(self):
        u_dis, u_data, entropy = uncertainty_batch(np.empty((0, 3)))
        assert u_dis.shape == u_data.shape == entropy.shape == (0,)

    def test_batch_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            uncertainty_batch(np.array([[1.0, -1.0]]))
        with pytest.raises(ValueError):
            uncertainty_batch(np.array([1.0, 2.0]))


class TestReports:
    def test_report_fields(self):
        rep = uncertainty_report(DirichletParams(np.array([2.0, 6.0])))
        assert rep.u_dis >= 0.0 and rep.u_data >= 0.0
        assert rep.u_dis + rep.u_data == pytest.approx(rep.entropy, abs=1e-9)
        assert np.allclose(rep.probs.rho, [0.25, 0.75])

    def test_reports_batch(self):
        reports = uncertainty_reports_batch(np.array([[1.0, 1.0], [9.0, 1.0]]))
        assert len(reports) == 2
        assert reports[0].entropy > reports[1].entropy

    def test_report_validates(self):
        probs = uncertainty_report(DirichletParams(np.array([1.0, 1.0]))).probs
        with pytest.raises(ValueError):
            UncertaintyReport(-0.1, 0.5, 0.4, probs)
        with pytest.raises(ValueError):
            UncertaintyReport(0.5, 0.5, 2.0, probs)  # identity violated

    def test_total_entropy(self):
        assert total_entropy(np.array([0.5, 0.5])) == pytest.approx(math.log(2.0))
        assert total_entropy(np.array([1.0, 0.0])) == 0.0  # 0 ln 0 = 0


class TestPredict:
    def test_argmax_and_probs(self):
        probs, label = predict(DirichletParams(np.array([1.0, 3.0])))
        assert label == 1
        assert np.allclose(probs.rho, [0.25, 0.75])

    def test_tie_goes_to_lowest_index(self):
        _, label = predict(DirichletParams(np.array([2.0, 2.0])))
        assert label == 0
        _, labels = predict_batch(np.array([[5.0, 5.0, 1.0], [1.0, 4.0, 4.0]]))
        assert labels.tolist() == [0, 1]


@settings(max_examples=150, deadline=None)
@given(
    hnp.arrays(
        np.float64,
        st.tuples(st.integers(1, 8), st.integers(2, 10)),
        elements=st.floats(min_value=-12.0, max_value=12.0),
    )
)
def test_decomposition_identity_property(logits):
    alpha = logits_to_alpha_batch(logits)
    u_dis, u_data, entropy = uncertainty_batch(alpha)
    assert (u_dis >= 0.0).all() and (u_data >= 0.0).all()
    assert np.abs(u_dis + u_data - entropy).max() < 1e-9
    # entropy of the expected probabilities is bounded by ln C
    assert (entropy <= math.log(logits.shape[1]) + 1e-12).all()
