import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core import graphs, matkit, riccati, synthesis
from app.core.errors import AllInfeasible, Disconnected, InfeasibleDesign, InvalidParameter, NormalizationFailed
from app.models.graph_models import WeightedGraph
from app.models.system_models import DesignParams
from tests.conftest import (
    EXPECTED_BOUND,
    EXPECTED_BOUND_EPS3,
    EXPECTED_F,
    EXPECTED_G,
    EXPECTED_G_EPS3,
    EXPECTED_P,
    EXPECTED_Q,
    EXPECTED_Q_EPS3,
)


def test_example_gains(example_design):
    certificate = example_design.certificate
    assert certificate.params.c == pytest.approx(2.0 / 21.0)
    assert certificate.params.case_select == "case_i"
    assert certificate.weight_ordering is None
    assert_allclose(certificate.P, EXPECTED_P, atol=1e-3)
    assert_allclose(certificate.Q, EXPECTED_Q_EPS3, atol=2e-4)
    assert_allclose(example_design.gains.F, EXPECTED_F, atol=1e-3)
    assert_allclose(example_design.gains.G, EXPECTED_G_EPS3, atol=2e-4)


def test_example_bound(example_design):
    certificate = example_design.certificate
    assert certificate.bound_total == pytest.approx(EXPECTED_BOUND_EPS3, abs=1e-3)
    assert certificate.bound_total < 17.0
    assert certificate.margin == pytest.approx(17.0 - certificate.bound_total)
    assert certificate.margin == pytest.approx(0.1531, abs=1e-3)
    assert certificate.feasible


def test_small_eps_limit(limit_design):
    certificate = limit_design.certificate
    assert_allclose(certificate.P, EXPECTED_P, atol=1e-3)
    assert_allclose(certificate.Q, EXPECTED_Q, atol=1e-3)
    assert_allclose(limit_design.gains.F, EXPECTED_F, atol=1e-3)
    assert_allclose(limit_design.gains.G, EXPECTED_G, atol=1e-3)
    assert certificate.bound_total == pytest.approx(EXPECTED_BOUND, abs=1e-3)


def test_bound_decreases_towards_limit(example_design, limit_design):
    assert limit_design.certificate.bound_total < example_design.certificate.bound_total
    assert matkit.is_psd(example_design.certificate.Q - limit_design.certificate.Q)


def test_example_certificate_checks(example_design):
    certificate = example_design.certificate
    assert all(certificate.modal_hurwitz)
    assert certificate.observer_hurwitz
    assert len(certificate.modal_inequality_max_eig) == 5
    assert max(certificate.modal_inequality_max_eig) < 0
    care_residual, observer_residual = certificate.riccati_residuals
    assert care_residual <= 1e-8 * (1.0 + matkit.frobenius(certificate.P) ** 2)
    assert observer_residual <= 1e-8 * (1.0 + matkit.frobenius(certificate.Q) ** 2)


def test_design_result_json(example_design):
    data = json.loads(json.dumps(example_design.to_json_dict()))
    assert set(data) == {"F", "G", "certificate"}
    assert data["certificate"]["bound_total"] == pytest.approx(EXPECTED_BOUND_EPS3, abs=1e-3)
    assert "margin" in data["certificate"]
    assert np.asarray(data["certificate"]["P"]).shape == (2, 2)


def test_infeasible_gamma(example_model, cycle6):
    params = DesignParams(gamma=16.0, eps=1e-3, sigma=1e-3, noise_form="EtE")
    with pytest.raises(InfeasibleDesign) as info:
        synthesis.synthesize(example_model, cycle6, params)
    assert info.value.bound == pytest.approx(EXPECTED_BOUND_EPS3, abs=1e-3)
    assert info.value.certificate is not None
    assert not info.value.certificate.feasible


def test_admissible_ranges():
    case_i = synthesis.admissible_c_range(1.0, 4.0, "case_i")
    assert case_i.lower == pytest.approx(2.0 / 21.0)
    assert case_i.upper == pytest.approx(0.125)
    assert case_i.contains(2.0 / 21.0)
    assert not case_i.contains(0.125)
    case_ii = synthesis.admissible_c_range(1.0, 4.0, "case_ii")
    assert not case_ii.contains(0.0)
    assert case_ii.contains(0.05)
    assert not case_ii.contains(2.0 / 21.0)


def test_equal_eigenvalues_range():
    case_i = synthesis.admissible_c_range(2.0, 2.0, "case_i")
    assert case_i.lower == pytest.approx(2.0 / 12.0)
    assert case_i.upper == pytest.approx(0.5)


def test_riccati_weight():
    assert synthesis.riccati_weight(2.0 / 21.0, 4.0) == pytest.approx(441.0 / 80.0)
    with pytest.raises(InvalidParameter):
        synthesis.riccati_weight(0.5, 4.0)


def test_resolve_params(cycle6):
    spec = graphs.spectrum(cycle6)
    resolved = synthesis.resolve_params(spec, DesignParams(gamma=1.0, c=0.05))
    assert resolved.case_select == "case_ii"
    resolved = synthesis.resolve_params(spec, DesignParams(gamma=1.0, c=0.1))
    assert resolved.case_select == "case_i"
    with pytest.raises(InvalidParameter):
        synthesis.resolve_params(spec, DesignParams(gamma=1.0, c=0.2))
    with pytest.raises(InvalidParameter):
        synthesis.resolve_params(spec, DesignParams(gamma=1.0, c=0.05, case_select="case_i"))
    with pytest.raises(InvalidParameter):
        synthesis.resolve_params(spec, DesignParams(gamma=1.0, case_select="case_ii"))


def test_case_ii_design(example_model, cycle6):
    params = DesignParams(gamma=1e6, c=0.05, case_select="case_ii", noise_form="EtE")
    result = synthesis.synthesize(example_model, cycle6, params)
    assert result.certificate.params.case_select == "case_ii"
    assert all(result.certificate.modal_hurwitz)
    assert max(result.certificate.modal_inequality_max_eig) < 0
    g2, gN = result.certificate.weight_ordering
    # g(1) = 0.0025 − 0.1, g(4) = 0.16 − 0.4
    assert g2 == pytest.approx(-0.0975)
    assert gN == pytest.approx(-0.24)
    assert gN < g2 < 0.0
    assert synthesis.riccati_weight(0.05, 1.0) == pytest.approx(-1.0 / g2)


def test_case_ii_ordering_holds_across_range(cycle6):
    spec = graphs.spectrum(cycle6)
    interval = synthesis.admissible_c_range(spec.lambda2, spec.lambdaN, "case_ii")
    for c in np.linspace(interval.lower, interval.upper, 52)[1:-1]:
        g2, gN = synthesis.check_case_ii_ordering(c, spec.lambda2, spec.lambdaN)
        assert gN < g2 < 0.0


def test_case_ii_ordering_rejects_large_c():
    # c = 0.2 时 g(4) = 2.56 − 1.6 > 0
    with pytest.raises(InvalidParameter):
        synthesis.check_case_ii_ordering(0.2, 1.0, 4.0)
    with pytest.raises(InvalidParameter):
        synthesis.check_case_ii_ordering(0.12, 1.0, 4.0)


def test_gains_independent_of_gamma(example_model, cycle6, example_design):
    loose = synthesis.synthesize(example_model, cycle6, DesignParams(gamma=1e6, eps=1e-3, sigma=1e-3, noise_form="EtE"))
    assert np.array_equal(loose.gains.F, example_design.gains.F)
    assert np.array_equal(loose.gains.G, example_design.gains.G)
    assert loose.certificate.bound_total == example_design.certificate.bound_total


def test_normalization_failure(example_model, cycle6):
    broken = example_model.model_copy(update={"D2": np.array([[0.0], [2.0]])})
    report = synthesis.check_normalization(broken)
    assert not report.all_ok
    assert report.failed() == ["D2^T D2 = I"]
    with pytest.raises(NormalizationFailed):
        synthesis.synthesize(broken, cycle6, DesignParams(gamma=17.0))


def test_disconnected_graph(example_model):
    graph = WeightedGraph(node_count=4, edges=[(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(Disconnected):
        synthesis.synthesize(example_model, graph, DesignParams(gamma=17.0))


def test_monotone_in_sigma(example_model, cycle6):
    low = synthesis.synthesize(example_model, cycle6, DesignParams(gamma=1e6, sigma=1e-3, noise_form="EtE"))
    high = synthesis.synthesize(example_model, cycle6, DesignParams(gamma=1e6, sigma=1e-2, noise_form="EtE"))
    assert matkit.is_psd(high.certificate.P - low.certificate.P)
    assert high.certificate.bound_total >= low.certificate.bound_total


def test_sweep_prefers_small_eps(example_model, cycle6):
    outcome = synthesis.sweep(
        example_model, cycle6, 17.0,
        c_grid=[None], eps_grid=[1e-2, 1e-3], sigma_grid=[1e-3], noise_form="EtE",
    )
    assert outcome.best.certificate.params.eps == pytest.approx(1e-3)
    assert outcome.evaluated == 2
    assert len(outcome.records) == 2


def test_sweep_parallel_matches_serial(example_model, cycle6):
    kwargs = dict(c_grid=[None, 0.1], eps_grid=[1e-3, 1e-2], sigma_grid=[1e-3], noise_form="EtE")
    serial = synthesis.sweep(example_model, cycle6, 17.0, workers=1, **kwargs)
    parallel = synthesis.sweep(example_model, cycle6, 17.0, workers=3, **kwargs)
    assert serial.best.certificate.bound_total == parallel.best.certificate.bound_total
    assert serial.best.certificate.params == parallel.best.certificate.params


def test_sweep_all_infeasible(example_model, cycle6):
    with pytest.raises(AllInfeasible) as info:
        synthesis.sweep(example_model, cycle6, 1.0, c_grid=[None], eps_grid=[1e-3], sigma_grid=[1e-3],
                        noise_form="EtE")
    assert info.value.best_bound == pytest.approx(EXPECTED_BOUND_EPS3, abs=1e-3)


def test_sweep_rejects_c_outside_range(example_model, cycle6):
    with pytest.raises(InvalidParameter):
        synthesis.sweep(example_model, cycle6, 17.0, c_grid=[0.5], eps_grid=[1e-3], sigma_grid=[1e-3])


def test_observer_gain_equals_qc1(example_design, example_model):
    Q = riccati.observer_riccati(example_model, 1e-3, "EtE")
    assert_allclose(example_design.gains.G, Q @ example_model.C1.T, atol=1e-12)
