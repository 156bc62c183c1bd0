import numpy as np
import pytest

from polygauge import (
    GaugeSpec,
    InfeasibleTarget,
    SolveOptions,
    active_set,
    check_accessibility,
    check_nrc_geometric,
    check_nrc_lasso,
    check_nrc_path,
    check_nrc_sup,
    check_uniform_uniqueness,
    generators,
    min_linf_representation,
    pen_eval,
    solve,
    zero_threshold,
)


# ---------------------------------------------------------------------------
# accessibility


def test_accessibility_zero_vector_always():
    rng = np.random.default_rng(0)
    for spec in [GaugeSpec.l1(4), GaugeSpec.sup(4), GaugeSpec.tv(4)]:
        x = rng.standard_normal((2, 4))
        rep = check_accessibility(spec, x, np.zeros(4))
        assert rep.verdict


def test_accessibility_fig2(sup_path_case):
    rep = check_accessibility(sup_path_case["spec"], sup_path_case["x"], sup_path_case["beta"])
    assert rep.verdict
    assert abs(rep.certificate["lp_value"] - 2.0) < 1e-8


def test_accessibility_single_row_l1():
    x = np.array([[1.0, 1.0]])
    spec = GaugeSpec.l1(2)
    assert check_accessibility(spec, x, [1.0, 1.0]).verdict
    rep = check_accessibility(spec, x, [3.0, -1.0])
    assert not rep.verdict
    assert abs(rep.certificate["lp_value"] - 2.0) < 1e-8  # fiber minimum


def test_accessibility_slope_epigraph_matches_generator_route():
    rng = np.random.default_rng(1)
    w = np.array([4.0, 3.0, 2.0, 1.0])
    slope = GaugeSpec.slope(w)
    expanded = GaugeSpec.custom(generators(slope))
    for _ in range(10):
        x = rng.standard_normal((2, 4))
        beta = rng.standard_normal(4)
        r1 = check_accessibility(slope, x, beta)
        r2 = check_accessibility(expanded, x, beta)
        assert abs(r1.certificate["lp_value"] - r2.certificate["lp_value"]) < 1e-7
        assert r1.verdict == r2.verdict


def test_accessibility_margin_reported():
    rep = check_accessibility(GaugeSpec.l1(2), np.array([[1.0, 1.0]]), [3.0, -1.0])
    assert rep.margin < -1.0  # value 2 vs pen 4
    assert rep.method == "accessibility-lp"


# ---------------------------------------------------------------------------
# noiseless recovery condition, analytic and geometric


def test_nrc_lasso_orthogonal_design():
    rep = check_nrc_lasso(np.eye(2), [1.0, 0.0])
    assert rep.verdict
    assert abs(rep.certificate["sup_norm"] - 1.0) < 1e-12


def test_nrc_lasso_correlated_column_fails():
    x = np.zeros((4, 3))
    x[0, 0] = 1.0
    x[1, 1] = 1.0
    x[:, 2] = 0.9 * (x[:, 0] + x[:, 1])
    rep = check_nrc_lasso(x, [1.0, 1.0, 0.0])
    assert not rep.verdict
    assert abs(rep.certificate["sup_norm"] - 1.8) < 1e-12


def test_nrc_lasso_zero_vector():
    assert check_nrc_lasso(np.eye(2), [0.0, 0.0]).verdict


def test_nrc_sup_fig2_certificate(sup_path_case):
    rep = check_nrc_sup(sup_path_case["x"], sup_path_case["beta"])
    assert rep.verdict
    assert np.max(np.abs(rep.certificate["vector"] - np.array([0.0, 0.5, 0.5]))) < 1e-9
    assert abs(rep.certificate["l1_norm"] - 1.0) < 1e-9


def test_nrc_sup_identity_all_maximal():
    p = 4
    rep = check_nrc_sup(np.eye(p), np.ones(p))
    assert rep.verdict
    assert abs(rep.certificate["l1_norm"] - 1.0) < 1e-9


def _random_instance(rng):
    n = int(rng.integers(2, 6))
    p = int(rng.integers(2, 6))
    x = rng.standard_normal((n, p))
    return n, p, x


def test_cross_oracle_lasso_vs_geometric():
    rng = np.random.default_rng(2)
    disagreements = 0
    for _ in range(200):
        n, p, x = _random_instance(rng)
        beta = rng.standard_normal(p) * rng.integers(0, 2, size=p)
        analytic = check_nrc_lasso(x, beta)
        geometric = check_nrc_geometric(GaugeSpec.l1(p), x, beta)
        disagreements += analytic.verdict != geometric.verdict
    assert disagreements == 0


def test_cross_oracle_sup_vs_geometric():
    rng = np.random.default_rng(3)
    disagreements = 0
    for _ in range(200):
        n, p, x = _random_instance(rng)
        beta = rng.standard_normal(p)
        if rng.random() < 0.5:  # force ties among maximal components
            m = np.max(np.abs(beta))
            ties = rng.integers(0, p)
            beta[:ties] = m * np.sign(beta[:ties] + 1e-12)
        analytic = check_nrc_sup(x, beta)
        geometric = check_nrc_geometric(GaugeSpec.sup(p), x, beta)
        disagreements += analytic.verdict != geometric.verdict
    assert disagreements == 0


def test_nrc_implies_accessibility_on_random_instances():
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(120):
        n, p, x = _random_instance(rng)
        beta = rng.standard_normal(p) * rng.integers(0, 2, size=p)
        spec = GaugeSpec.l1(p)
        if check_nrc_lasso(x, beta).verdict:
            checked += 1
            assert check_accessibility(spec, x, beta).verdict
    assert checked > 10


def test_nrc_path_fig2(sup_path_case):
    rep = check_nrc_path(sup_path_case["spec"], sup_path_case["x"], sup_path_case["beta"], unique_verified=True)
    assert rep.verdict
    assert rep.certificate["lambda_found"] < 8.0 / 3.0


def test_nrc_path_zero_vector(sup_path_case):
    rep = check_nrc_path(sup_path_case["spec"], sup_path_case["x"], np.zeros(3))
    assert rep.verdict


def test_nrc_path_agrees_with_geometric_negative():
    # correlated-column design: sign recovery impossible on the noiseless path
    x = np.zeros((4, 3))
    x[0, 0] = 1.0
    x[1, 1] = 1.0
    x[:, 2] = 0.9 * (x[:, 0] + x[:, 1])
    beta = np.array([1.0, 1.0, 0.0])
    assert not check_nrc_geometric(GaugeSpec.l1(3), x, beta).verdict
    rep = check_nrc_path(GaugeSpec.l1(3), x, beta, grid_size=100)
    assert not rep.verdict
    assert any("one-sided" in c for c in rep.caveats)


def test_zero_threshold_matches_path_zero_segment(sup_path_case):
    lam0 = zero_threshold(sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"])
    assert abs(lam0 - 20.0) < 1e-12
    res = solve(sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"], lam0 * 1.001)
    assert np.max(np.abs(res.beta)) < 1e-9


# ---------------------------------------------------------------------------
# min-linf representation


def test_min_linf_identity():
    assert abs(min_linf_representation(np.eye(2), [3.0, -1.0]) - 3.0) < 1e-9


def test_min_linf_fig2(sup_path_case):
    assert abs(min_linf_representation(sup_path_case["x"], sup_path_case["y"]) - 2.0) < 1e-9


def test_min_linf_infeasible_target():
    x = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(InfeasibleTarget):
        min_linf_representation(x, [0.0, 1.0])


# ---------------------------------------------------------------------------
# uniform uniqueness


def test_uniqueness_injective_design():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((5, 3))
    for spec in [GaugeSpec.l1(3), GaugeSpec.sup(3), GaugeSpec.tv(3)]:
        rep = check_uniform_uniqueness(spec, x)
        assert rep.verdict
        assert rep.certificate["deficiency"] == 0


def test_uniqueness_genlasso_counterexample(gen_lasso_nonunique):
    inst = gen_lasso_nonunique
    rep = check_uniform_uniqueness(inst["spec"], inst["x"])
    assert not rep.verdict
    rows = {tuple(np.round(v["generator_rows"][0], 9)) for v in rep.certificate["violating_faces"]}
    assert (4.0, 2.0, 2.0) in rows
    assert all(v["dimension"] == 0 for v in rep.certificate["violating_faces"])


def test_uniqueness_wide_l1_square():
    # row space passes through the cube vertices +-(1,1)
    rep = check_uniform_uniqueness(GaugeSpec.l1(2), np.array([[1.0, 1.0]]))
    assert not rep.verdict


def test_uniqueness_fig2_design_is_unique(sup_path_case):
    rep = check_uniform_uniqueness(sup_path_case["spec"], sup_path_case["x"])
    assert rep.verdict
    assert rep.margin > 1e-7


def test_unique_designs_give_identical_minimizers(sup_path_case):
    rng = np.random.default_rng(6)
    for _ in range(20):
        y = rng.standard_normal(2) * 3
        r1 = solve(sup_path_case["spec"], sup_path_case["x"], y, 0.8, SolveOptions(tol=1e-9))
        r2 = solve(
            sup_path_case["spec"], sup_path_case["x"], y, 0.8, SolveOptions(tol=1e-9),
            start=rng.standard_normal(3) * 2,
        )
        assert np.max(np.abs(r1.beta - r2.beta)) <= 1e-5


def test_attainability_positive_probability(sup_path_case):
    # unique + accessible: the pattern shows up for y in a set of positive
    # measure; count hits over Gaussian responses at a small lambda grid
    rng = np.random.default_rng(7)
    target = active_set(sup_path_case["spec"], sup_path_case["beta"])
    hits = 0
    draws = 500
    for _ in range(draws):
        y = sup_path_case["y"] + 0.3 * rng.standard_normal(2)
        for lam in (0.5, 1.0, 2.0):
            res = solve(sup_path_case["spec"], sup_path_case["x"], y, lam)
            if active_set(sup_path_case["spec"], res.beta, rel_tol=1e-6) == target:
                hits += 1
                break
    assert hits >= 1


def test_reports_serialize_to_json(sup_path_case):
    import json

    rep = check_nrc_sup(sup_path_case["x"], sup_path_case["beta"])
    text = json.dumps(rep.to_dict())
    assert "margin" in text
    rep2 = check_uniform_uniqueness(sup_path_case["spec"], sup_path_case["x"])
    json.dumps(rep2.to_dict())
