"""Fixed-point location, classification, lifting, closed forms."""

import math

import numpy as np
import pytest

from icafix.distributions import parse_distribution
from icafix.fixed_points import (
    NotAFixedPointError,
    PreconditionError,
    between_pair_fixed_point,
    classify,
    kurtosis_closed_form,
    lift_to_dimension,
    scan_circle,
)
from icafix.nonlinearity import builtin
from icafix.population import (
    AssumptionViolationError,
    ConfigurationError,
    MixingModel,
    make_engine,
)

import oracles


def iid_model(label, d=2):
    return MixingModel.identity([parse_distribution(label)] * d)


def classify_theta(model, engine, nl, theta):
    w = model.A @ np.array([math.cos(theta), math.sin(theta)])
    return classify(model, engine, nl, w)


def test_classify_demixing_vector():
    m = iid_model("laplace")
    eng = make_engine(m)
    rec = classify(m, eng, builtin("gauss"), np.array([1.0, 0.0]))
    assert rec.cls == "demixing"
    assert rec.residual <= 1e-10
    assert rec.theta == pytest.approx(0.0, abs=1e-12)
    assert rec.fprime_norm < 1.0


def test_classify_diagonal_point():
    m = iid_model("uniform")
    eng = make_engine(m)
    rec = classify_theta(m, eng, builtin("gauss"), math.pi / 4.0)
    assert rec.cls == "spurious_unattractive"
    # adaptive two-axis reference: oracles.diagonal_fprime("uniform", "gauss")
    assert rec.fprime_norm == pytest.approx(5.119582, abs=1e-5)
    assert rec.alpha == pytest.approx(_diag_alpha("uniform", "gauss"),
                                      abs=1e-9)


def _diag_alpha(label, nl_name):
    # alpha at the diagonal: e0 - c^T r assembled adaptively
    g, gp = oracles.nl_pair(nl_name)
    y = lambda a, b: (a + b) / math.sqrt(2.0)
    e0 = oracles.pair_expect(label, lambda a, b: gp(y(a, b)))
    r1 = oracles.pair_expect(label, lambda a, b: g(y(a, b)) * a)
    return e0 - math.sqrt(2.0) * r1


def test_classify_rejects_non_fixed_point():
    m = iid_model("uniform")
    eng = make_engine(m)
    with pytest.raises(NotAFixedPointError):
        classify_theta(m, eng, builtin("gauss"), 0.3)


def test_scan_finds_demixing_and_diagonal_angles():
    m = iid_model("laplace")
    eng = make_engine(m)
    recs = scan_circle(m, eng, builtin("gauss"), grid=720)
    thetas = [r.theta for r in recs]
    assert thetas == sorted(thetas)
    for want in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi):
        assert min(abs(t - want) for t in thetas) < 1e-7
    for rec in recs:
        assert rec.residual <= 1e-8
        assert rec.cls in ("demixing", "spurious_attractive",
                           "spurious_unattractive")
    nearest = lambda t: min(recs, key=lambda r: abs(r.theta - t))
    assert nearest(0.0).cls == "demixing"
    assert nearest(math.pi / 2).cls == "demixing"
    assert nearest(math.pi).cls == "demixing"


def test_scan_example_curve_has_seven_points():
    # iid Bimod(-0.4, 2) with g = x^5: two satellite roots besides the
    # demixing angles and the two diagonals
    m = iid_model("bimod:-0.4,2")
    eng = make_engine(m)
    recs = scan_circle(m, eng, builtin("pow5"), grid=1440)
    assert len(recs) == 7
    thetas = np.array([r.theta for r in recs])
    # satellite angles frozen from oracles.tangent_residual root-finding
    want = np.array([0.0, 0.0892227639, math.pi / 4, 1.4815735629,
                     math.pi / 2, 3 * math.pi / 4, math.pi])
    np.testing.assert_allclose(thetas, want, atol=1e-7)
    classes = [r.cls for r in recs]
    assert classes[0] == classes[4] == classes[6] == "demixing"
    assert classes[2] == "spurious_attractive"
    assert classes[1] == classes[3] == "spurious_unattractive"
    assert classes[5] == "spurious_unattractive"


def test_scan_guards():
    m3 = iid_model("uniform", 3)
    with pytest.raises(ConfigurationError):
        scan_circle(m3, make_engine(m3), builtin("gauss"))
    m2 = iid_model("uniform")
    with pytest.raises(ConfigurationError):
        scan_circle(m2, make_engine(m2), builtin("gauss"), grid=100)


def test_between_pair_iid_lands_on_diagonal():
    m = iid_model("laplace", 3)
    eng = make_engine(m)
    rec = between_pair_fixed_point(m, eng, builtin("kurtosis"), 0, 2)
    np.testing.assert_allclose(np.abs(rec.v),
                               [1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)],
                               atol=1e-9)
    assert rec.fprime_norm == pytest.approx(3.0, abs=1e-9)
    assert rec.cls == "spurious_unattractive"


def test_between_pair_mixed_kurtosis_support_equation():
    labels = ("uniform", "bpsk", "sinus")
    m = MixingModel.identity([parse_distribution(lb) for lb in labels])
    eng = make_engine(m)
    rec = between_pair_fixed_point(m, eng, builtin("kurtosis"), 0, 1)
    c = m.source_coordinates(rec.v)
    k_u, k_b = -1.2, -2.0
    # c_i^2 proportional to 1/kappa_i on the support
    assert c[0] ** 2 == pytest.approx((1 / k_u) / (1 / k_u + 1 / k_b),
                                      abs=1e-10)
    a, norm, demix = kurtosis_closed_form(m, rec.v)
    assert not demix
    assert norm == 3.0
    assert rec.fprime_norm == pytest.approx(3.0, abs=1e-9)
    assert rec.alpha == pytest.approx(a, abs=1e-9)


def test_between_pair_guards():
    m = iid_model("uniform", 3)
    eng = make_engine(m)
    with pytest.raises(PreconditionError):
        between_pair_fixed_point(m, eng, builtin("kurtosis"), 1, 1)
    mixed = MixingModel.identity([parse_distribution("uniform"),
                                  parse_distribution("laplace")])
    with pytest.raises(PreconditionError):
        # opposite kurtosis signs, opposite alpha signs: no guarantee
        between_pair_fixed_point(mixed, make_engine(mixed),
                                 builtin("kurtosis"), 0, 1)


def test_lift_preserves_norm_and_class():
    m2 = iid_model("bimod:-0.4,2")
    eng2 = make_engine(m2)
    rec2 = classify_theta(m2, eng2, builtin("gauss"), 3 * math.pi / 4)
    assert rec2.cls == "spurious_attractive"
    labels5 = ("uniform", "bimod:-0.4,2", "laplace", "bimod:-0.4,2", "sinus")
    m5 = MixingModel.identity([parse_distribution(lb) for lb in labels5])
    rec5 = lift_to_dimension(rec2, m5, 1, 3)
    assert rec5.cls == rec2.cls
    assert rec5.fprime_norm == pytest.approx(rec2.fprime_norm, abs=1e-8)
    assert np.linalg.norm(rec5.v) == pytest.approx(1.0, abs=1e-12)


def test_lift_under_random_mixing():
    m2 = iid_model("bimod:-0.4,2")
    rec2 = classify_theta(m2, make_engine(m2), builtin("gauss"),
                          3 * math.pi / 4)
    sources = [parse_distribution(lb) for lb in
               ("bimod:-0.4,2", "uniform", "bimod:-0.4,2")]
    m3 = MixingModel.random(sources, seed=21)
    rec3 = lift_to_dimension(rec2, m3, 0, 2)
    assert rec3.fprime_norm == pytest.approx(rec2.fprime_norm, abs=1e-8)


def test_lift_guards():
    m2 = iid_model("bimod:-0.4,2")
    eng2 = make_engine(m2)
    demix = classify(m2, eng2, builtin("gauss"), np.array([1.0, 0.0]))
    spur = classify_theta(m2, eng2, builtin("gauss"), 3 * math.pi / 4)
    m5 = iid_model("bimod:-0.4,2", 5)
    with pytest.raises(PreconditionError):
        lift_to_dimension(demix, m5, 0, 1)
    wrong = MixingModel.identity([parse_distribution("uniform")] * 5)
    with pytest.raises(PreconditionError):
        lift_to_dimension(spur, wrong, 0, 1)


def test_kurtosis_closed_form_demixing():
    m = iid_model("uniform", 3)
    a, norm, demix = kurtosis_closed_form(m, np.array([0.0, 1.0, 0.0]))
    assert demix
    assert norm == 0.0
    assert a == pytest.approx(1.2, abs=1e-12)


def test_kurtosis_closed_form_guards():
    m = iid_model("uniform", 3)
    with pytest.raises(NotAFixedPointError):
        kurtosis_closed_form(m, np.array([0.6, 0.8, 0.0]))
    mg = MixingModel.identity([parse_distribution("uniform"),
                               parse_distribution("gaussian")])
    with pytest.raises(AssumptionViolationError):
        kurtosis_closed_form(mg, np.array([0.0, 1.0]))


def test_csv_row_shape():
    m = iid_model("uniform")
    rec = classify(m, make_engine(m), builtin("gauss"), np.array([1.0, 0.0]))
    row = rec.csv_row()
    assert row["class"] == "demixing"
    assert set(row) == {"theta", "v1", "v2", "alpha", "fprime_norm", "class",
                        "residual"}
