"""Exact checkers for pattern accessibility, noiseless recovery and
uniform uniqueness.

Every verdict carries a numeric margin (documented per method below), so
borderline instances are transparent instead of flipping silently at a
boolean boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linprog
from .gauge import (
    GaugeSpec,
    GeneratorBlowup,
    active_indices,
    active_set,
    dual_feasibility,
    enumerate_faces,
    generators,
    pen_eval,
    pattern_subspace,
)
from .numerics import as_matrix, as_vector, in_row_space, pseudoinverse, rank
from .solvers import SolveOptions, solution_path


class InfeasibleTarget(ValueError):
    """The equality system of a representation problem has no solution."""


@dataclass
class ConditionReport:
    """verdict plus the margin and certificate that recompute to it.

    Margin conventions:
      accessibility-lp : lp_value - pen(beta); accessible iff >= -1e-7.
      geometric-lp     : minus the phase-1 infeasibility of the
                         intersection LP; condition holds iff >= -1e-7.
      analytic-l1      : 1 - ||X'(X_I')^+ sign(beta_I)||_inf, -inf when the
                         sign vector is outside row(X_I).
      analytic-sup     : 1 - ||X'(Xtilde')^+ e_1||_1, -inf when e_1 is
                         outside row(Xtilde).
      path-empirical   : +1.0 when a matching segment was found, else -1.0
                         (one-sided: a miss does not refute the condition).
      uniqueness-face-scan : smallest phase-1 residual over scanned faces
                         (how far row(X) stays from every low-dimensional
                         face); unique iff > 1e-7; +inf with nothing to scan.
    """

    verdict: bool
    margin: float
    method: str
    certificate: dict
    caveats: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": bool(self.verdict),
            "margin": _jsonable(self.margin),
            "method": self.method,
            "certificate": _jsonable(self.certificate),
            "caveats": list(self.caveats),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# accessibility


def check_accessibility(spec: GaugeSpec, x, beta) -> ConditionReport:
    """Accessibility of the pattern of beta: the gauge attains its minimum
    over the fiber {b : Xb = X beta} at beta itself.

    Solved as the epigraph LP min pen(b) s.t. Xb = X beta, with the
    closed-form encoding per kind (no generator expansion for l1/sup/
    genlasso; a cumulative-sum encoding for slope up to p = 10).
    """
    x = as_matrix(x)
    beta = as_vector(beta)
    pen_beta = pen_eval(spec, beta)
    target = x @ beta
    sol, extract = _fiber_min_lp(spec, x, target)
    if sol.status != linprog.OPTIMAL:
        raise RuntimeError(f"accessibility LP returned status {sol.status}")
    value = float(sol.value)
    margin = value - pen_beta
    witness = extract(sol.x)
    return ConditionReport(
        verdict=margin >= -1e-7,
        margin=margin,
        method="accessibility-lp",
        certificate={
            "lp_value": value,
            "pen_beta": pen_beta,
            "minimizer": witness,
        },
    )


def _fiber_min_lp(spec: GaugeSpec, x, target):
    """LP for min pen(b) s.t. Xb = target; returns (solution, b-extractor)."""
    n, p = x.shape
    if spec.kind == "l1":
        # vars [b, s]: min sum s, +-b <= s
        c = np.concatenate([np.zeros(p), np.ones(p)])
        a_eq = np.hstack([x, np.zeros((n, p))])
        a_le = np.vstack(
            [
                np.hstack([np.eye(p), -np.eye(p)]),
                np.hstack([-np.eye(p), -np.eye(p)]),
            ]
        )
        b_le = np.zeros(2 * p)
        bounds = [(None, None)] * p + [(0.0, None)] * p
    elif spec.kind == "sup":
        # vars [b, t]: min t, +-b <= t
        c = np.concatenate([np.zeros(p), [1.0]])
        a_eq = np.hstack([x, np.zeros((n, 1))])
        ones = np.ones((p, 1))
        a_le = np.vstack(
            [
                np.hstack([np.eye(p), -ones]),
                np.hstack([-np.eye(p), -ones]),
            ]
        )
        b_le = np.zeros(2 * p)
        bounds = [(None, None)] * p + [(0.0, None)]
    elif spec.kind == "genlasso":
        m = spec.d.shape[0]
        c = np.concatenate([np.zeros(p), np.ones(m)])
        a_eq = np.hstack([x, np.zeros((n, m))])
        a_le = np.vstack(
            [
                np.hstack([spec.d, -np.eye(m)]),
                np.hstack([-spec.d, -np.eye(m)]),
            ]
        )
        b_le = np.zeros(2 * m)
        bounds = [(None, None)] * p + [(0.0, None)] * m
    elif spec.kind == "slope":
        if p > 10:
            raise ValueError("slope accessibility epigraph supported for p <= 10")
        return _slope_fiber_lp(spec, x, target)
    else:
        u = generators(spec)
        k = u.shape[0]
        if k > 4096:
            raise GeneratorBlowup("custom accessibility LP capped at 4096 generators")
        c = np.concatenate([np.zeros(p), [1.0]])
        a_eq = np.hstack([x, np.zeros((n, 1))])
        a_le = np.hstack([u, -np.ones((k, 1))])
        b_le = np.zeros(k)
        bounds = [(None, None)] * p + [(None, None)]
    sol = linprog.lp_solve(
        linprog.LpProblem(c, a_eq=a_eq, b_eq=target, a_le=a_le, b_le=b_le, bounds=bounds)
    )
    return sol, (lambda z: z[:p].copy())


def _slope_fiber_lp(spec: GaugeSpec, x, target):
    """Sorted-l1 epigraph via top-k sums: r_k >= sum of k largest |b|,
    objective sum_k (w_k - w_{k+1}) r_k, each top-k sum encoded by its
    dual representation k*theta_k + sum_i max(a_i - theta_k, 0)."""
    n, p = x.shape
    w = np.asarray(spec.weights)
    # vars: b (p) | a (p) | theta (p) | v (p*p, v[k,i]) | r (p)
    nb, na, nt = p, p, p
    nv = p * p
    total = nb + na + nt + nv + p
    off_a = nb
    off_t = nb + na
    off_v = nb + na + nt
    off_r = nb + na + nt + nv
    c = np.zeros(total)
    wnext = np.concatenate([w[1:], [0.0]])
    c[off_r:] = w - wnext
    a_eq = np.zeros((n, total))
    a_eq[:, :p] = x
    rows = []
    rhs = []
    # |b_i| <= a_i
    for i in range(p):
        row = np.zeros(total)
        row[i] = 1.0
        row[off_a + i] = -1.0
        rows.append(row)
        rhs.append(0.0)
        row = np.zeros(total)
        row[i] = -1.0
        row[off_a + i] = -1.0
        rows.append(row)
        rhs.append(0.0)
    # a_i - theta_k <= v[k,i]
    for k in range(p):
        for i in range(p):
            row = np.zeros(total)
            row[off_a + i] = 1.0
            row[off_t + k] = -1.0
            row[off_v + k * p + i] = -1.0
            rows.append(row)
            rhs.append(0.0)
    # (k+1)*theta_k + sum_i v[k,i] <= r_k
    for k in range(p):
        row = np.zeros(total)
        row[off_t + k] = float(k + 1)
        row[off_v + k * p : off_v + (k + 1) * p] = 1.0
        row[off_r + k] = -1.0
        rows.append(row)
        rhs.append(0.0)
    bounds = (
        [(None, None)] * nb
        + [(0.0, None)] * na
        + [(None, None)] * nt
        + [(0.0, None)] * nv
        + [(None, None)] * p
    )
    sol = linprog.lp_solve(
        linprog.LpProblem(
            c,
            a_eq=a_eq,
            b_eq=target,
            a_le=np.asarray(rows),
            b_le=np.asarray(rhs),
            bounds=bounds,
        )
    )
    return sol, (lambda z: z[:p].copy())


# ---------------------------------------------------------------------------
# noiseless recovery


def check_nrc_geometric(spec: GaugeSpec, x, beta, rel_tol: float = 1e-8) -> ConditionReport:
    """Noiseless recovery via the geometric test: X'X applied to the span
    of the pattern class must meet the subdifferential face of beta."""
    x = as_matrix(x)
    beta = as_vector(beta)
    basis = pattern_subspace(spec, beta, rel_tol=rel_tol)
    u = generators(spec)
    idx = list(active_indices(spec, beta, rel_tol=rel_tol))
    xtxb = x.T @ (x @ basis.vectors)  # p x m
    m = basis.dim
    k = len(idx)
    p = spec.p
    # vars: c (m, free) | alpha (k, >= 0); X'X B c = sum alpha_l u_l, 1'alpha = 1
    a_eq = np.zeros((p + 1, m + k))
    a_eq[:p, :m] = xtxb
    a_eq[:p, m:] = -u[idx].T
    a_eq[p, m:] = 1.0
    b_eq = np.zeros(p + 1)
    b_eq[p] = 1.0
    bounds = [(None, None)] * m + [(0.0, None)] * k
    res = linprog.feasibility(linprog.LpProblem(np.zeros(m + k), a_eq=a_eq, b_eq=b_eq, bounds=bounds))
    cert: dict = {"active_set": idx, "pattern_subspace_dim": m}
    if res.feasible:
        cvec = res.witness[:m]
        alpha = res.witness[m:]
        cert["witness_point"] = basis.vectors @ cvec
        cert["witness_alpha"] = alpha
        cert["witness_subgradient"] = u[idx].T @ alpha
    return ConditionReport(
        verdict=res.feasible,
        margin=-res.phase1_value,
        method="geometric-lp",
        certificate=cert,
    )


def check_nrc_lasso(x, beta) -> ConditionReport:
    """The sign-vector irrepresentability shortcut for the l1 penalty."""
    x = as_matrix(x)
    beta = as_vector(beta)
    support = np.flatnonzero(beta != 0)
    if support.size == 0:
        return ConditionReport(
            verdict=True,
            margin=1.0,
            method="analytic-l1",
            certificate={"support": [], "note": "zero vector always recovers"},
        )
    xi = x[:, support]
    s = np.sign(beta[support])
    in_row = in_row_space(xi, s, tol=1e-8)
    cert_vec = x.T @ (pseudoinverse(xi.T) @ s)
    sup_norm = float(np.max(np.abs(cert_vec), initial=0.0))
    margin = 1.0 - sup_norm if in_row else -np.inf
    return ConditionReport(
        verdict=bool(in_row and sup_norm <= 1.0 + 1e-9),
        margin=margin,
        method="analytic-l1",
        certificate={
            "support": support.tolist(),
            "sign_in_row_space": bool(in_row),
            "vector": cert_vec,
            "sup_norm": sup_norm,
        },
    )


def check_nrc_sup(x, beta) -> ConditionReport:
    """Analytic noiseless-recovery test for the sup-norm penalty.

    Builds Xtilde = (X_{I^c} sign(beta_{I^c}) | X_I) over the non-maximal
    index set I and tests e_1 in row(Xtilde) plus an l1 bound on
    X'(Xtilde')^+ e_1.
    """
    x = as_matrix(x)
    beta = as_vector(beta)
    sup = float(np.max(np.abs(beta), initial=0.0))
    if sup == 0.0:
        return ConditionReport(
            verdict=True,
            margin=1.0,
            method="analytic-sup",
            certificate={"note": "zero vector always recovers"},
        )
    nonmax = np.flatnonzero(np.abs(beta) < sup)
    maximal = np.flatnonzero(np.abs(beta) >= sup)
    x1 = x[:, maximal] @ np.sign(beta[maximal])
    xt = np.column_stack([x1, x[:, nonmax]])
    e1 = np.zeros(xt.shape[1])
    e1[0] = 1.0
    in_row = in_row_space(xt, e1, tol=1e-8)
    cert_vec = x.T @ (pseudoinverse(xt.T) @ e1)
    l1 = float(np.sum(np.abs(cert_vec)))
    margin = 1.0 - l1 if in_row else -np.inf
    return ConditionReport(
        verdict=bool(in_row and l1 <= 1.0 + 1e-9),
        margin=margin,
        method="analytic-sup",
        certificate={
            "nonmaximal": nonmax.tolist(),
            "e1_in_row_space": bool(in_row),
            "vector": cert_vec,
            "l1_norm": l1,
            "xtilde": xt,
        },
    )


def zero_threshold(spec: GaugeSpec, x, y) -> float:
    """Smallest lambda at which 0 is a minimizer (dual gauge of X'y).

    Closed form for l1/sup/slope; bisection on the dual-ball margin for
    genlasso/custom (may be infinite when X'y never enters the scaled
    dual ball, e.g. outside col(D') for the generalized lasso).
    """
    v = as_matrix(x).T @ as_vector(y)
    if spec.kind == "l1":
        return float(np.max(np.abs(v), initial=0.0))
    if spec.kind == "sup":
        return float(np.sum(np.abs(v)))
    if spec.kind == "slope":
        a = np.sort(np.abs(v))[::-1]
        return float(np.max(np.cumsum(a) / np.cumsum(np.asarray(spec.weights))))
    norm_v = float(np.max(np.abs(v), initial=0.0))
    if norm_v == 0.0:
        return 0.0
    hi = max(norm_v, 1.0)
    for _ in range(80):
        if dual_feasibility(spec, v / hi) <= 0:
            break
        hi *= 2.0
    else:
        return float("inf")
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == 0.0 or dual_feasibility(spec, v / mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


def check_nrc_path(
    spec: GaugeSpec,
    x,
    beta,
    lam_min: float | None = None,
    lam_max: float | None = None,
    grid_size: int = 60,
    opts: SolveOptions | None = None,
    unique_verified: bool = False,
) -> ConditionReport:
    """Empirical noiseless-recovery check: solve the noiseless path at
    y = X beta and look for a segment with the fingerprint of beta.

    One-sided: a hit certifies the condition up to solver tolerance, a
    miss only means the grid did not find it.
    """
    x = as_matrix(x)
    beta = as_vector(beta)
    opts = opts or SolveOptions()
    y = x @ beta
    target = active_set(spec, beta)
    caveats = []
    if not unique_verified:
        caveats.append("uniqueness not verified; path fingerprints may depend on the solver")
    if np.allclose(y, 0.0):
        # fiber of 0: the zero estimate appears at every lambda
        match = pen_eval(spec, beta) == 0.0 or target == active_set(spec, np.zeros(spec.p))
        return ConditionReport(
            verdict=bool(match),
            margin=1.0 if match else -1.0,
            method="path-empirical",
            certificate={"note": "X beta = 0", "target_key": list(map(str, target.key))},
            caveats=caveats,
        )
    if lam_max is None:
        lam_zero = zero_threshold(spec, x, y)
        if not np.isfinite(lam_zero) or lam_zero <= 0:
            lam_max = 10.0 * (1.0 + float(np.max(np.abs(x.T @ y))))
        else:
            lam_max = 1.5 * lam_zero
    if lam_min is None:
        lam_min = 1e-3 * lam_max
    path = solution_path(spec, x, y, lam_min, lam_max, grid_size=grid_size, opts=opts)
    hit = None
    for lam, fp in zip(path.lambdas, path.fingerprints):
        if fp == target:
            hit = float(lam)
            break
    caveats.append("one-sided: a grid miss does not refute the condition")
    return ConditionReport(
        verdict=hit is not None,
        margin=1.0 if hit is not None else -1.0,
        method="path-empirical",
        certificate={"lambda_found": hit, "grid": [float(l) for l in path.lambdas]},
        caveats=caveats,
    )


# ---------------------------------------------------------------------------
# representation and uniqueness


def min_linf_representation(x, target) -> float:
    """min ||gamma||_inf subject to X gamma = target.

    Raises InfeasibleTarget when target is outside col(X).
    """
    x = as_matrix(x)
    target = as_vector(target)
    n, p = x.shape
    c = np.concatenate([np.zeros(p), [1.0]])
    a_eq = np.hstack([x, np.zeros((n, 1))])
    ones = np.ones((p, 1))
    a_le = np.vstack([np.hstack([np.eye(p), -ones]), np.hstack([-np.eye(p), -ones])])
    b_le = np.zeros(2 * p)
    bounds = [(None, None)] * p + [(0.0, None)]
    sol = linprog.lp_solve(
        linprog.LpProblem(c, a_eq=a_eq, b_eq=target, a_le=a_le, b_le=b_le, bounds=bounds)
    )
    if sol.status == linprog.INFEASIBLE:
        raise InfeasibleTarget("target vector is outside the column space of X")
    if sol.status != linprog.OPTIMAL:
        raise RuntimeError(f"representation LP returned status {sol.status}")
    return float(sol.value)


def check_uniform_uniqueness(
    spec: GaugeSpec, x, max_generators: int = 16
) -> ConditionReport:
    """Uniform uniqueness of the penalized minimizer over all (y, lambda):
    row(X) must avoid every face of B* of dimension below def(X).

    Scans the enumerated faces and LP-tests row(X) against each low-
    dimensional one; the report lists every violating face.
    """
    x = as_matrix(x)
    n, p = x.shape
    if p != spec.p:
        raise ValueError("X column count must match the gauge dimension")
    deficiency = p - rank(x)
    if deficiency == 0:
        return ConditionReport(
            verdict=True,
            margin=float("inf"),
            method="uniqueness-face-scan",
            certificate={"deficiency": 0, "note": "injective design"},
        )
    faces = enumerate_faces(spec, max_generators=max_generators)
    u = generators(spec)
    violating = []
    min_resid = float("inf")
    scanned = 0
    for face in faces:
        if face.dimension >= deficiency:
            continue
        scanned += 1
        idx = list(face.vertices)
        k = len(idx)
        # vars: z (n, free) | alpha (k, >= 0); X'z = sum alpha_l u_l, 1'alpha = 1
        a_eq = np.zeros((p + 1, n + k))
        a_eq[:p, :n] = x.T
        a_eq[:p, n:] = -u[idx].T
        a_eq[p, n:] = 1.0
        b_eq = np.zeros(p + 1)
        b_eq[p] = 1.0
        bounds = [(None, None)] * n + [(0.0, None)] * k
        res = linprog.feasibility(
            linprog.LpProblem(np.zeros(n + k), a_eq=a_eq, b_eq=b_eq, bounds=bounds)
        )
        min_resid = min(min_resid, res.phase1_value)
        if res.feasible:
            violating.append(
                {
                    "vertices": idx,
                    "dimension": face.dimension,
                    "generator_rows": u[idx],
                    "witness_z": res.witness[:n],
                    "witness_alpha": res.witness[n:],
                }
            )
    return ConditionReport(
        verdict=len(violating) == 0,
        margin=min_resid if scanned else float("inf"),
        method="uniqueness-face-scan",
        certificate={
            "deficiency": deficiency,
            "faces_scanned": scanned,
            "violating_faces": violating,
        },
    )
