import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import brute_force_auc
from laid.errors import ParameterError, UndefinedMetricError, UnsupportedMetricError
from laid.imgcore import Rng
from laid.metrics import (Domain, PredictionRecord, Records, Setting, accuracy, auc_roc,
                          efficiency_ratios, evaluate_protocol, f1_score, fusion_accuracy,
                          fusion_success)

# scores on a 1/1000 grid so monotone transforms keep distinct values distinct
scores = st.integers(0, 1000).map(lambda k: k / 1000)
record_tables = st.integers(1, 60).flatmap(lambda n: st.tuples(
    st.lists(scores, min_size=n, max_size=n),
    st.lists(scores, min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n)))


def test_accuracy_examples():
    g = [1, 1, 0, 0]
    assert accuracy(Records.from_labels(g, g, g)) == 100.0
    assert accuracy(Records.from_labels([1, 0, 0, 0], g, g), Domain.SPATIAL) == 75.0
    with pytest.raises(ParameterError):
        accuracy(Records.from_labels([], [], []))


def test_accuracy_random_predictions_near_half():
    rng = Rng(1)
    g = rng.integers(0, 1, 100_000)
    pred = rng.integers(0, 1, 100_000)
    assert abs(accuracy(Records.from_labels(pred, pred, g)) - 50) < 1


def test_f1_examples():
    g = np.array([1, 1, 0, 0])
    assert f1_score(Records.from_labels(g, g, g)) == 1.0
    # TP=1 FP=1 FN=1
    recs = Records.from_labels([1, 0, 1, 0], [0] * 4, [1, 1, 0, 0])
    assert f1_score(recs) == 0.5
    assert f1_score(Records.from_labels([0, 0, 0, 0], [0] * 4, g)) == 0.0


def test_auc_examples():
    s = [0.9, 0.8, 0.3, 0.1]
    assert auc_roc(Records(np.array(s), np.array(s), np.array([1, 1, 0, 0]))) == 1.0
    assert auc_roc(Records(np.array(s), np.array(s), np.array([1, 0, 1, 0]))) == 0.75
    with pytest.raises(UndefinedMetricError):
        auc_roc(Records(np.array(s), np.array(s), np.array([1, 1, 1, 1])))


def test_auc_matches_pairwise_oracle_with_ties():
    rng = Rng(5)
    s = np.round(rng.uniform(0, 1, 200), 1)  # heavy ties
    g = rng.integers(0, 1, 200)
    recs = Records(s, s, g)
    assert abs(auc_roc(recs) - brute_force_auc(s, g)) < 1e-12


def test_auc_uses_spectral_scores_for_spectral_domain():
    recs = Records(np.array([0.1, 0.9]), np.array([0.9, 0.1]), np.array([1, 0]))
    assert auc_roc(recs, Domain.SPATIAL) == 0.0
    assert auc_roc(recs, Domain.SPECTRAL) == 1.0


@settings(max_examples=60, deadline=None)
@given(record_tables)
def test_auc_invariant_under_monotone_transform(table):
    sp, sf, g = map(np.asarray, table)
    if g.min() == g.max():
        return
    a = auc_roc(Records(sp, sf, g))
    b = auc_roc(Records(np.exp(3 * sp) - 7, sf, g))
    assert a == pytest.approx(b, abs=1e-12)
    assert a == pytest.approx(brute_force_auc(sp, g), abs=1e-12)


def test_efficiency_ratio_examples():
    per_mparams, _ = efficiency_ratios(92.40, 0.3439e6, 1e6)
    assert per_mparams == pytest.approx(268.68, abs=0.01)
    assert abs(per_mparams - 268.72) / 268.72 < 1e-3
    assert efficiency_ratios(100, 1e6, 1e6) == (100.0, 100.0)
    assert efficiency_ratios(50, 2e6, 1e6)[0] == 25.0
    with pytest.raises(ParameterError):
        efficiency_ratios(50, 0, 1)


def test_fusion_success_cases():
    assert fusion_success(PredictionRecord(0.9, 0.1, 1))
    assert not fusion_success(PredictionRecord(0.1, 0.2, 1))
    assert fusion_success(PredictionRecord(0.8, 0.7, 1))


def test_threshold_is_inclusive():
    r = PredictionRecord(0.5, 0.4999, 1)
    assert (r.y_p, r.y_f) == (1, 0)


def test_disjoint_failures_fuse_to_perfect():
    g = np.array([1, 0, 1, 0, 1, 0])
    is_crop = np.array([True, True, True, False, False, False])
    y_p = np.where(is_crop, g, 1 - g)
    y_f = np.where(is_crop, 1 - g, g)
    recs = Records.from_labels(y_p, y_f, g)
    assert evaluate_protocol(recs, Setting.ADV_FUSION).accuracy == 100.0


@settings(max_examples=80, deadline=None)
@given(record_tables)
def test_fusion_dominance_and_row_enumeration(table):
    recs = Records(*map(np.asarray, table))
    fused = evaluate_protocol(recs, Setting.ADV_FUSION).accuracy
    rows = recs.rows()
    assert fused == pytest.approx(100.0 * sum(fusion_success(r) for r in rows) / len(rows), rel=1e-12)
    assert fused >= max(evaluate_protocol(recs, Setting.ADV_SPATIAL).accuracy,
                        evaluate_protocol(recs, Setting.ADV_SPECTRAL).accuracy)


@settings(max_examples=60, deadline=None)
@given(record_tables, st.integers(0, 2**32 - 1))
def test_f1_invariant_under_row_permutation(table, seed):
    recs = Records(*map(np.asarray, table))
    perm = Rng(seed).permutation(len(recs))
    shuffled = Records(recs.score_p[perm], recs.score_f[perm], recs.g[perm])
    assert f1_score(recs) == f1_score(shuffled)
    err = 100.0 * np.mean(recs.y_p != recs.g)
    assert accuracy(recs) + err == pytest.approx(100.0, abs=1e-9)


def test_fusion_reports_accuracy_only():
    recs = Records.from_labels([1, 0], [0, 0], [1, 0])
    rep = evaluate_protocol(recs, Setting.ADV_FUSION)
    assert rep.f1 is None and rep.auc_roc is None
    with pytest.raises(UnsupportedMetricError):
        evaluate_protocol(recs, Setting.ADV_FUSION, with_scores=True)
    with pytest.raises(UnsupportedMetricError):
        evaluate_protocol(recs, Setting.CLEAN_FUSION, domain=Domain.SPATIAL)
    assert fusion_accuracy(recs) == 100.0


def test_report_serialization_and_cost():
    class Cost:
        params, flops = 2e6, 4e6

    recs = Records(np.array([0.9, 0.2, 0.7, 0.4]), np.array([0.1] * 4), np.array([1, 0, 0, 1]))
    rep = evaluate_protocol(recs, Setting.CLEAN, Domain.SPATIAL, Cost())
    assert rep.setting == "clean_spatial" and rep.accuracy == 50.0
    assert rep.acc_per_mparams == 25.0 and rep.acc_per_mflops == 12.5
    data = json.loads(rep.to_json())
    assert data["auc_roc"] == rep.auc_roc and list(data) == sorted(data)
    assert "clean_spatial" in rep.to_text()


def test_records_validation():
    with pytest.raises(ParameterError):
        Records(np.zeros(2), np.zeros(3), np.zeros(2))
    with pytest.raises(ParameterError):
        Records(np.zeros(2), np.zeros(2), np.array([0, 2]))
    rows = [PredictionRecord(0.3, 0.6, 1), PredictionRecord(0.7, 0.1, 0)]
    assert Records.from_rows(rows).rows() == rows
