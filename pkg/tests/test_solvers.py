import numpy as np
import pytest

from polygauge import (
    GaugeSpec,
    NotConvergedError,
    SolveOptions,
    active_set,
    generators,
    named_pattern,
    pen_eval,
    solution_path,
    solve,
)


ALL_KINDS = [
    GaugeSpec.l1(3),
    GaugeSpec.sup(3),
    GaugeSpec.slope([3.0, 2.0, 1.0]),
    GaugeSpec.tv(3),
    GaugeSpec.custom([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [-1.0, -1.0, 0.0], [0.0, 1.0, 1.0], [0.0, -1.0, -1.0]]),
]


@pytest.mark.parametrize("spec", ALL_KINDS)
def test_zero_response_gives_zero(spec):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 3))
    res = solve(spec, x, np.zeros(4), 0.7)
    assert res.converged
    assert np.max(np.abs(res.beta)) < 1e-9


def test_sup_path_segment_patterns(sup_path_case):
    opts = SolveOptions(tol=1e-9)
    for lam, pattern in [(1.0, (0, 1, 1)), (10.0, (1, 1, 1)), (25.0, (0, 0, 0))]:
        res = solve(sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"], lam, opts)
        assert res.converged
        fp = active_set(sup_path_case["spec"], res.beta, rel_tol=1e-6)
        assert fp.named.values == pattern


def test_sup_path_breakpoints(sup_path_case):
    path = solution_path(
        sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"], 0.5, 30.0,
        grid_size=40, refine_tol=1e-4, opts=SolveOptions(tol=1e-9),
    )
    assert len(path.breakpoints) == 2
    assert abs(path.breakpoints[0] - 8.0 / 3.0) < 1e-3
    assert abs(path.breakpoints[1] - 20.0) < 1e-3
    patterns = [seg.fingerprint.named.values for seg in path.segments]
    assert patterns == [(0, 1, 1), (1, 1, 1), (0, 0, 0)]


def test_path_zero_response_single_segment():
    spec = GaugeSpec.l1(3)
    x = np.eye(3)
    path = solution_path(spec, x, np.zeros(3), 0.1, 5.0, grid_size=10)
    assert len(path.segments) == 1
    assert path.breakpoints == []
    assert path.segments[0].fingerprint.named.values == (0, 0, 0)


def test_path_orthogonal_design_breakpoints_at_abs_y():
    spec = GaugeSpec.l1(4)
    x = np.eye(4)
    y = np.array([3.0, 1.5, 0.7, 0.2])
    path = solution_path(spec, x, y, 0.05, 5.0, grid_size=60, refine_tol=1e-5)
    assert len(path.breakpoints) == 4
    for found, expected in zip(path.breakpoints, sorted(np.abs(y))):
        assert abs(found - expected) < 1e-3


def test_path_result_invariants(sup_path_case):
    path = solution_path(sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"], 0.5, 30.0, grid_size=25)
    assert all(b1 < b2 for b1, b2 in zip(path.breakpoints, path.breakpoints[1:]))
    for s1, s2 in zip(path.segments, path.segments[1:]):
        assert s1.fingerprint != s2.fingerprint
        assert s1.lam_hi <= s2.lam_lo


def test_genlasso_section6_fitted_values(gen_lasso_nonunique):
    inst = gen_lasso_nonunique
    res = solve(inst["spec"], inst["x"], inst["y"], 0.5, SolveOptions(tol=1e-8))
    assert res.converged
    ref = inst["x"] @ np.array([0.0, 0.5, 0.0])
    assert np.max(np.abs(res.fitted - ref)) < 1e-5
    ref_pen = pen_eval(inst["spec"], np.array([0.0, 0.5, 0.0]))
    assert abs(pen_eval(inst["spec"], res.beta) - ref_pen) < 1e-5


def test_custom_route_matches_genlasso_route():
    rng = np.random.default_rng(1)
    tv = GaugeSpec.tv(3)
    custom = GaugeSpec.custom(generators(tv))
    for _ in range(5):
        x = rng.standard_normal((4, 3))
        y = rng.standard_normal(4)
        r1 = solve(tv, x, y, 0.4)
        r2 = solve(custom, x, y, 0.4)
        assert r1.converged and r2.converged
        assert np.max(np.abs(r1.fitted - r2.fitted)) < 1e-5


@pytest.mark.parametrize("spec", ALL_KINDS)
def test_fitted_values_unique_across_starts(spec):
    # fitted values and penalty value agree for any two minimizers
    rng = np.random.default_rng(2)
    for trial in range(4):
        x = rng.standard_normal((3, 3)) if trial % 2 else rng.standard_normal((2, 3))
        y = rng.standard_normal(x.shape[0])
        starts = [None, rng.standard_normal(3) * 3]
        results = [solve(spec, x, y, 0.6, SolveOptions(tol=1e-9), start=s) for s in starts]
        assert all(r.converged for r in results)
        assert np.max(np.abs(results[0].fitted - results[1].fitted)) <= 1e-5
        pens = [pen_eval(spec, r.beta) for r in results]
        assert abs(pens[0] - pens[1]) <= 1e-5


def test_objective_trace_monotone_fista():
    rng = np.random.default_rng(3)
    for spec in [GaugeSpec.l1(5), GaugeSpec.sup(5), GaugeSpec.slope([5.0, 4.0, 3.0, 2.0, 1.0])]:
        x = rng.standard_normal((4, 5))
        y = rng.standard_normal(4)
        res = solve(spec, x, y, 0.3)
        trace = np.asarray(res.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)


@pytest.mark.parametrize("spec", [GaugeSpec.l1(2), GaugeSpec.sup(2), GaugeSpec.tv(2)])
def test_solver_beats_dense_grid(spec):
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 2))
    y = rng.standard_normal(3)
    lam = 0.4
    res = solve(spec, x, y, lam, SolveOptions(tol=1e-9))
    g = np.linspace(-3, 3, 401)
    bb = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    vals = 0.5 * np.sum((bb @ x.T - y) ** 2, axis=1) + lam * np.array(
        [pen_eval(spec, b) for b in bb]
    )
    assert res.objective <= vals.min() + 1e-4


def test_rescaled_signal_convergence(sup_path_case):
    # beta_hat(X(r beta) + eps) / r approaches beta as the signal grows
    rng = np.random.default_rng(5)
    eps = rng.standard_normal(2) * 0.5
    errors = []
    for r in (1.0, 10.0, 100.0):
        y = sup_path_case["x"] @ (r * sup_path_case["beta"]) + eps
        res = solve(sup_path_case["spec"], sup_path_case["x"], y, 1.0, SolveOptions(tol=1e-9))
        errors.append(np.max(np.abs(res.beta / r - sup_path_case["beta"])))
    assert errors[0] > errors[1] > errors[2]


def test_dual_certificate_contract(sup_path_case):
    res = solve(sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"], 3.0, SolveOptions(tol=1e-9))
    g = sup_path_case["x"].T @ (sup_path_case["y"] - sup_path_case["fitted"] if "fitted" in sup_path_case else sup_path_case["y"] - sup_path_case["x"] @ res.beta) / 3.0
    assert np.allclose(g, res.dual_certificate)
    assert res.kkt_residual <= 1e-9


def test_not_converged_propagates_in_path(sup_path_case):
    with pytest.raises(NotConvergedError):
        solution_path(
            sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"], 0.5, 30.0,
            grid_size=5, opts=SolveOptions(tol=1e-14, max_iter=3),
        )


def test_genlasso_kernel_overlap_warns():
    # X and D share the constant vector in their kernels
    x = np.array([[1.0, -1.0]])
    spec = GaugeSpec.tv(2)
    with pytest.warns(RuntimeWarning):
        solve(spec, x, np.array([0.5]), 0.5, SolveOptions(max_iter=200))


def test_solution_ties_are_exact_for_pattern_extraction(sup_path_case):
    res = solve(sup_path_case["spec"], sup_path_case["x"], sup_path_case["y"], 1.0, SolveOptions(tol=1e-9))
    assert res.beta[1] == res.beta[2]  # bitwise tie from the shared clip
    assert named_pattern("sup", res.beta).values == (0, 1, 1)
