"""Polyhedral gauges, their generators, subdifferential faces and patterns.

A gauge here is pen(b) = max(u_1'b, ..., u_k'b) with u_1 = 0.  The polytope
B* = conv(u_1, ..., u_k) is the subdifferential at zero; the subdifferential
at any point is the face of B* spanned by the generators attaining the max,
and two points share a pattern exactly when those faces coincide.  The
pattern complexity is the codimension of that face.

Fingerprint canonicalization (the bijection backing equality tests):

* l1      -- the sign vector in {-1,0,1}^p; the active generators are
             exactly the sign vectors of the cube agreeing with it on its
             support.
* slope   -- the signed-rank vector (zero for zero entries, equal ranks for
             equal magnitudes, order-preserving); it determines the set of
             active signed permutations of the weight vector.
* sup     -- the vector with +-1 on maximal-magnitude entries; the active
             generators are the matching signed unit vectors (all of them
             at zero).
* genlasso / custom -- the sorted index set of active generators over the
             materialized generator matrix (cap 2^20 rows).

Named patterns themselves use exact component equality; tolerances live in
``active_set`` only.  Callers feeding solver output into exact extractors
should pre-round (``round_sig``) first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import linprog
from .numerics import as_matrix, as_vector, null_space_basis, rank, SubspaceBasis

GENERATOR_CAP = 2**20
CANON_DIGITS = 12


class GeneratorBlowup(RuntimeError):
    """Generator expansion would exceed the cap; use an analytic shortcut."""


class DimensionTooSmall(ValueError):
    """Difference-based pattern asked for on a too-short vector."""


def round_sig(v, digits: int = CANON_DIGITS) -> np.ndarray:
    """Round to `digits` significant digits componentwise; -0.0 becomes 0.0."""
    v = np.asarray(v, dtype=float)
    out = v.copy()
    nz = out != 0.0
    if np.any(nz):
        mag = np.floor(np.log10(np.abs(out[nz])))
        scale = 10.0 ** (digits - 1 - mag)
        out[nz] = np.round(out[nz] * scale) / scale
    return out + 0.0


def tv_matrix(p: int) -> np.ndarray:
    """First-order difference matrix, shape (p-1, p)."""
    if p < 2:
        raise DimensionTooSmall("first-order differences need p >= 2")
    d = np.zeros((p - 1, p))
    for i in range(p - 1):
        d[i, i] = -1.0
        d[i, i + 1] = 1.0
    return d


def tf_matrix(p: int) -> np.ndarray:
    """Second-order difference matrix, shape (p-2, p)."""
    if p < 3:
        raise DimensionTooSmall("second-order differences need p >= 3")
    d = np.zeros((p - 2, p))
    for i in range(p - 2):
        d[i, i] = 1.0
        d[i, i + 1] = -2.0
        d[i, i + 2] = 1.0
    return d


def _dedup_rows(u: np.ndarray) -> np.ndarray:
    """Deduplicate rows by byte equality after canonical 12-digit rounding,
    preserving first-occurrence order."""
    if u.shape[0] == 0:
        return u
    canon = round_sig(u)
    _, first = np.unique(canon, axis=0, return_index=True)
    keep = np.sort(first)
    return np.asarray(u[keep], dtype=float)


@dataclass(frozen=True, eq=False)
class GaugeSpec:
    """A polyhedral gauge: named family or explicit generator matrix.

    kind is one of "l1", "slope", "sup", "genlasso", "custom".  Instances
    are immutable and safe to share across threads.
    """

    kind: str
    p: int
    weights: tuple | None = None
    d: np.ndarray | None = None
    d_name: str | None = None  # "tv"/"tf" when built by those factories
    u: np.ndarray | None = None

    @classmethod
    def l1(cls, p: int) -> "GaugeSpec":
        if p < 1:
            raise ValueError("p must be positive")
        return cls(kind="l1", p=p)

    @classmethod
    def sup(cls, p: int) -> "GaugeSpec":
        if p < 1:
            raise ValueError("p must be positive")
        return cls(kind="sup", p=p)

    @classmethod
    def slope(cls, weights) -> "GaugeSpec":
        w = as_vector(weights)
        if w.size < 1:
            raise ValueError("empty weight vector")
        if np.any(w <= 0) or np.any(np.diff(w) >= 0):
            raise ValueError("slope weights must be strictly decreasing and positive")
        return cls(kind="slope", p=w.size, weights=tuple(float(x) for x in w))

    @classmethod
    def genlasso(cls, d, d_name: str | None = None) -> "GaugeSpec":
        d = as_matrix(d).copy()
        if d.shape[0] < 1:
            raise ValueError("D must have at least one row")
        d.setflags(write=False)
        return cls(kind="genlasso", p=d.shape[1], d=d, d_name=d_name)

    @classmethod
    def tv(cls, p: int) -> "GaugeSpec":
        return cls.genlasso(tv_matrix(p), d_name="tv")

    @classmethod
    def tf(cls, p: int) -> "GaugeSpec":
        return cls.genlasso(tf_matrix(p), d_name="tf")

    @classmethod
    def custom(cls, u) -> "GaugeSpec":
        u = _dedup_rows(as_matrix(u))
        p = u.shape[1]
        zero_at = [i for i in range(u.shape[0]) if np.all(round_sig(u[i]) == 0.0)]
        if zero_at:
            order = zero_at + [i for i in range(u.shape[0]) if i not in zero_at]
            u = u[order]
        else:
            u = np.vstack([np.zeros((1, p)), u])
        u.setflags(write=False)
        return cls(kind="custom", p=p, u=u)

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


def generator_count(spec: GaugeSpec) -> int:
    """Expanded generator count, zero row included (before dedup)."""
    if spec.kind == "l1":
        return 2**spec.p + 1
    if spec.kind == "slope":
        return 2**spec.p * math.factorial(spec.p) + 1
    if spec.kind == "sup":
        return 2 * spec.p + 1
    if spec.kind == "genlasso":
        return 2 ** spec.d.shape[0] + 1
    return spec.u.shape[0]


def generators(spec: GaugeSpec) -> np.ndarray:
    """Materialize the generator matrix U with u_1 = 0, rows distinct.

    Raises GeneratorBlowup when the expanded count exceeds the 2^20 cap.
    The result is cached on the spec (immutable derived data).
    """
    cached = getattr(spec, "_generator_cache", None)
    if cached is not None:
        return cached
    count = generator_count(spec)
    if count > GENERATOR_CAP:
        raise GeneratorBlowup(
            f"{spec.kind} gauge would expand to {count} generators (cap {GENERATOR_CAP})"
        )
    p = spec.p
    if spec.kind == "custom":
        u = np.asarray(spec.u, dtype=float)
    else:
        if spec.kind == "l1":
            rows = np.array(list(itertools.product((-1.0, 1.0), repeat=p)))
        elif spec.kind == "sup":
            rows = np.vstack([np.eye(p), -np.eye(p)])
        elif spec.kind == "slope":
            w = np.asarray(spec.weights)
            perms = list(itertools.permutations(range(p)))
            signs = np.array(list(itertools.product((-1.0, 1.0), repeat=p)))
            blocks = [w[list(perm)] * signs for perm in perms]
            rows = np.vstack(blocks)
        elif spec.kind == "genlasso":
            m = spec.d.shape[0]
            sigma = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
            rows = sigma @ spec.d
        else:
            raise ValueError(f"unknown gauge kind {spec.kind!r}")
        u = _dedup_rows(np.vstack([np.zeros((1, p)), rows]))
    u.setflags(write=False)
    object.__setattr__(spec, "_generator_cache", u)
    return u


def pen_eval(spec: GaugeSpec, b) -> float:
    """Gauge value; closed form for named kinds, generator max otherwise."""
    b = as_vector(b)
    if b.shape[0] != spec.p:
        raise ValueError(f"vector length {b.shape[0]} != ambient dimension {spec.p}")
    if spec.kind == "l1":
        return float(np.sum(np.abs(b)))
    if spec.kind == "sup":
        return float(np.max(np.abs(b), initial=0.0))
    if spec.kind == "slope":
        a = np.sort(np.abs(b))[::-1]
        return float(a @ np.asarray(spec.weights))
    if spec.kind == "genlasso":
        return float(np.sum(np.abs(spec.d @ b)))
    return float(np.max(spec.u @ b, initial=0.0))


def dual_feasibility(spec: GaugeSpec, s) -> float:
    """Membership margin for s in B*: margin <= 0 iff s is a member.

    Closed forms for l1/sup/slope are signed; genlasso/custom return the
    sup-norm distance to B* via an LP (0 inside, positive outside).
    """
    s = as_vector(s)
    if s.shape[0] != spec.p:
        raise ValueError("dimension mismatch")
    if spec.kind == "l1":
        return float(np.max(np.abs(s), initial=0.0) - 1.0)
    if spec.kind == "sup":
        return float(np.sum(np.abs(s)) - 1.0)
    if spec.kind == "slope":
        a = np.sort(np.abs(s))[::-1]
        num = np.cumsum(a)
        den = np.cumsum(np.asarray(spec.weights))
        return float(np.max(num / den) - 1.0)
    if spec.kind == "genlasso":
        m = spec.d.shape[0]
        p = spec.p
        # vars (z, t): min t  s.t.  -t <= s - D'z <= t, -1 <= z <= 1
        c = np.zeros(m + 1)
        c[-1] = 1.0
        dt = spec.d.T
        a_le = np.vstack(
            [
                np.hstack([dt, -np.ones((p, 1))]),
                np.hstack([-dt, -np.ones((p, 1))]),
            ]
        )
        b_le = np.concatenate([s, -s])
        bounds = [(-1.0, 1.0)] * m + [(0.0, None)]
        sol = linprog.lp_solve(linprog.LpProblem(c, a_le=a_le, b_le=b_le, bounds=bounds))
        return float(sol.value)
    # custom: sup-norm distance to conv(U); the zero row absorbs slack mass
    u = spec.u
    k, p = u.shape
    c = np.zeros(k + 1)
    c[-1] = 1.0
    ut = u.T
    a_le = np.vstack(
        [
            np.hstack([ut, -np.ones((p, 1))]),
            np.hstack([-ut, -np.ones((p, 1))]),
            np.hstack([np.ones((1, k)), np.zeros((1, 1))]),
        ]
    )
    b_le = np.concatenate([s, -s, [1.0]])
    bounds = [(0.0, None)] * (k + 1)
    sol = linprog.lp_solve(linprog.LpProblem(c, a_le=a_le, b_le=b_le, bounds=bounds))
    return float(sol.value)


@dataclass(frozen=True)
class NamedPattern:
    """Canonical combinatorial pattern for one of the named families."""

    variant: str  # sign | slope_rank | sup | tv_sign | tf_sign
    values: tuple

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=int)


def named_pattern(kind: str, beta) -> NamedPattern:
    """Exact pattern extractor; kind in {sign, slope, sup, tv, tf}."""
    b = as_vector(beta)
    if kind == "sign":
        return NamedPattern("sign", tuple(int(x) for x in np.sign(b)))
    if kind == "slope":
        return NamedPattern("slope_rank", tuple(_signed_ranks(b)))
    if kind == "sup":
        m = np.max(np.abs(b), initial=0.0)
        if m == 0.0:
            vals = (0,) * b.size
        else:
            vals = tuple(int(x == m) - int(x == -m) for x in b)
        return NamedPattern("sup", vals)
    if kind == "tv":
        if b.size < 2:
            raise DimensionTooSmall("tv pattern needs p >= 2")
        return NamedPattern("tv_sign", tuple(int(x) for x in np.sign(np.diff(b))))
    if kind == "tf":
        if b.size < 3:
            raise DimensionTooSmall("tf pattern needs p >= 3")
        second = b[:-2] - 2.0 * b[1:-1] + b[2:]
        return NamedPattern("tf_sign", tuple(int(x) for x in np.sign(second)))
    raise ValueError(f"unknown pattern kind {kind!r}")


def _signed_ranks(b: np.ndarray, tol: float = 0.0) -> list:
    """Signed magnitude ranks: 0 for (near-)zeros, ascending cluster ranks.

    With tol > 0, magnitudes are chain-merged: consecutive sorted values
    closer than tol share a rank, and values <= tol count as zero.
    """
    a = np.abs(b)
    rank_of = {}
    r = 0
    prev = None
    for v in np.sort(np.unique(a)):
        if v <= tol:
            rank_of[v] = 0
            continue
        if prev is None or v - prev > tol:
            r += 1
        rank_of[v] = r
        prev = v
    return [int(np.sign(x)) * rank_of[abs(x)] for x in b]


def spec_pattern_kind(spec: GaugeSpec) -> str | None:
    """Named-pattern kind matching the spec, None when there is none."""
    if spec.kind == "l1":
        return "sign"
    if spec.kind in ("slope", "sup"):
        return spec.kind
    if spec.kind == "genlasso" and spec.d_name in ("tv", "tf"):
        return spec.d_name
    return None


@dataclass(frozen=True, eq=False)
class PatternFingerprint:
    """Canonical identifier of a pattern equivalence class.

    Two fingerprints are equal exactly when the identified subdifferential
    faces coincide.  ``active`` holds generator indices when computed from
    a materialized generator matrix, None on the named shortcut route.
    """

    key: tuple
    pen_value: float
    named: NamedPattern | None = None
    active: tuple | None = None

    def __eq__(self, other):
        if not isinstance(other, PatternFingerprint):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"PatternFingerprint(key={self.key!r})"


def active_set(spec: GaugeSpec, beta, rel_tol: float = 1e-8) -> PatternFingerprint:
    """Fingerprint of the pattern of beta.

    Named kinds use the snapped named pattern, with tolerance
    rel_tol * max(1, pen(beta)) on the pattern-defining comparisons;
    genlasso/custom apply the tolerance rule to materialized generators:
    I = {l : u_l'beta >= pen(beta) - rel_tol * max(1, pen(beta))}.
    """
    b = as_vector(beta)
    pen = pen_eval(spec, b)
    tol = rel_tol * max(1.0, pen)
    if spec.kind == "l1":
        s = np.sign(b) * (np.abs(b) > tol)
        vals = tuple(int(x) for x in s)
        return PatternFingerprint(("l1", vals), pen, named=NamedPattern("sign", vals))
    if spec.kind == "sup":
        m = np.max(np.abs(b), initial=0.0)
        if m <= tol:
            vals = (0,) * spec.p
        else:
            vals = tuple(int(np.sign(x)) if abs(x) >= m - tol else 0 for x in b)
        return PatternFingerprint(("sup", vals), pen, named=NamedPattern("sup", vals))
    if spec.kind == "slope":
        vals = tuple(_signed_ranks(b, tol=tol))
        return PatternFingerprint(
            ("slope", vals), pen, named=NamedPattern("slope_rank", vals)
        )
    u = generators(spec)
    idx = _active_from_matrix(u, b, rel_tol)
    named = None
    if spec.d_name in ("tv", "tf"):
        diffs = spec.d @ b
        snapped = np.sign(diffs) * (np.abs(diffs) > tol)
        named = NamedPattern(f"{spec.d_name}_sign", tuple(int(x) for x in snapped))
    return PatternFingerprint(("active", u.shape[0], idx), pen, named=named, active=idx)


def _active_from_matrix(u: np.ndarray, b: np.ndarray, rel_tol: float) -> tuple:
    vals = u @ b
    pen = float(np.max(vals, initial=0.0))
    tol = rel_tol * max(1.0, pen)
    return tuple(int(i) for i in np.flatnonzero(vals >= pen - tol))


def active_indices(spec: GaugeSpec, beta, rel_tol: float = 1e-8) -> tuple:
    """Active generator indices over the materialized generator matrix."""
    return _active_from_matrix(generators(spec), as_vector(beta), rel_tol)


@dataclass(frozen=True)
class Face:
    """A face of B*: active vertex-index subset plus its dimension."""

    vertices: tuple
    dimension: int
    codimension: int


def _face_from_indices(u: np.ndarray, idx) -> Face:
    p = u.shape[1]
    idx = tuple(int(i) for i in idx)
    pts = u[list(idx)]
    diffs = pts[1:] - pts[0] if len(idx) > 1 else np.zeros((0, p))
    dim = rank(diffs)
    return Face(vertices=idx, dimension=dim, codimension=p - dim)


def subdifferential_face(spec: GaugeSpec, beta, rel_tol: float = 1e-8) -> Face:
    """The face of B* equal to the subdifferential at beta."""
    u = generators(spec)
    idx = active_indices(spec, beta, rel_tol=rel_tol)
    return _face_from_indices(u, idx)


def _inactive_d_rows(spec: GaugeSpec, b: np.ndarray, rel_tol: float) -> np.ndarray:
    pen = pen_eval(spec, b)
    tol = rel_tol * max(1.0, pen)
    diffs = spec.d @ b
    return spec.d[np.abs(diffs) <= tol]


def complexity(spec: GaugeSpec, beta, rel_tol: float = 1e-8) -> int:
    """Pattern complexity = codimension of the subdifferential face.

    Closed forms: number of non-nulls (l1); number of non-null clusters
    (slope); non-maximal count plus one (sup, zero at the origin);
    p - rank of the inactive difference rows (genlasso).  Custom gauges
    use the rank of the materialized face.
    """
    b = as_vector(beta)
    if spec.kind in ("l1", "slope", "sup"):
        arr = active_set(spec, b, rel_tol).named.as_array()
        if spec.kind == "l1":
            return int(np.sum(np.abs(arr)))
        if spec.kind == "slope":
            return int(np.max(np.abs(arr), initial=0))
        if np.all(arr == 0):
            return 0
        return int(np.sum(arr == 0)) + 1
    if spec.kind == "genlasso":
        return spec.p - rank(_inactive_d_rows(spec, b, rel_tol))
    return subdifferential_face(spec, b, rel_tol).codimension


def pattern_subspace(spec: GaugeSpec, beta, rel_tol: float = 1e-8) -> SubspaceBasis:
    """Orthonormal basis of the linear span of the pattern class of beta,
    the orthogonal complement of the subdifferential-face directions.

    Closed forms for the named kinds avoid generator expansion; the basis
    size always equals complexity(spec, beta).
    """
    b = as_vector(beta)
    p = spec.p
    if spec.kind == "l1":
        arr = active_set(spec, b, rel_tol).named.as_array()
        cols = [_unit(p, j) for j in np.flatnonzero(arr != 0)]
        return _basis_from_columns(p, cols)
    if spec.kind == "sup":
        arr = active_set(spec, b, rel_tol).named.as_array()
        if np.all(arr == 0):
            return _basis_from_columns(p, [])
        cols = [_unit(p, j) for j in np.flatnonzero(arr == 0)]
        v = arr.astype(float)
        cols.append(v / np.linalg.norm(v))
        return _basis_from_columns(p, cols)
    if spec.kind == "slope":
        arr = active_set(spec, b, rel_tol).named.as_array()
        cols = []
        for r in range(1, int(np.max(np.abs(arr), initial=0)) + 1):
            v = np.where(np.abs(arr) == r, np.sign(arr), 0).astype(float)
            cols.append(v / np.linalg.norm(v))
        return _basis_from_columns(p, cols)
    if spec.kind == "genlasso":
        return null_space_basis(_inactive_d_rows(spec, b, rel_tol))
    u = generators(spec)
    idx = active_indices(spec, b, rel_tol=rel_tol)
    pts = u[list(idx)]
    diffs = pts[1:] - pts[0] if len(idx) > 1 else np.zeros((0, p))
    return null_space_basis(diffs)


def _unit(p: int, j: int) -> np.ndarray:
    e = np.zeros(p)
    e[j] = 1.0
    return e


def _basis_from_columns(p: int, cols) -> SubspaceBasis:
    if not cols:
        return SubspaceBasis(p, np.zeros((p, 0)))
    return SubspaceBasis(p, np.column_stack(cols))


def enumerate_faces(spec: GaugeSpec, max_generators: int = 16) -> list:
    """All nonempty faces of B*, each certified by an exposure LP.

    A subset S is accepted when some a with ||a||_inf <= 1 satisfies
    u_l'a = c on S and u_m'a <= c - delta off S with margin delta > 1e-9;
    each face then appears exactly once, keyed by its full vertex set.
    """
    if max_generators > 16:
        raise ValueError("face enumeration cap is 16 generators")
    u = generators(spec)
    k, _ = u.shape
    if k > max_generators:
        raise GeneratorBlowup(f"{k} generators exceed the enumeration cap {max_generators}")
    faces = []
    for mask in range(1, 2**k):
        in_set = [l for l in range(k) if mask >> l & 1]
        out_set = [l for l in range(k) if not mask >> l & 1]
        if _exposure_margin(u, in_set, out_set) > 1e-9:
            faces.append(_face_from_indices(u, in_set))
    faces.sort(key=lambda f: (f.dimension, f.vertices))
    return faces


def _exposure_margin(u: np.ndarray, in_set, out_set) -> float:
    """Max margin delta (capped at 1) certifying S as an exact active set."""
    k, p = u.shape
    # vars: a (p), c (1), delta (1); maximize delta
    c_obj = np.zeros(p + 2)
    c_obj[-1] = -1.0
    a_eq = np.hstack([u[in_set], -np.ones((len(in_set), 1)), np.zeros((len(in_set), 1))])
    b_eq = np.zeros(len(in_set))
    if out_set:
        a_le = np.hstack([u[out_set], -np.ones((len(out_set), 1)), np.ones((len(out_set), 1))])
        b_le = np.zeros(len(out_set))
    else:
        a_le, b_le = None, None
    bounds = [(-1.0, 1.0)] * p + [(None, None), (None, 1.0)]
    sol = linprog.lp_solve(
        linprog.LpProblem(c_obj, a_eq=a_eq, b_eq=b_eq, a_le=a_le, b_le=b_le, bounds=bounds)
    )
    if sol.status != linprog.OPTIMAL:
        return -np.inf
    return -float(sol.value)


def subdiff_includes(spec: GaugeSpec, b_inner, b_outer, rel_tol: float = 0.0) -> bool:
    """Whether the subdifferential at b_inner is contained in the one at
    b_outer (vertex inclusion of active sets).

    Exact closed forms for l1/sup; materialized index inclusion otherwise
    (rel_tol then acts on the active-set rule, floored at 1e-12).
    """
    b1 = as_vector(b_inner)
    b2 = as_vector(b_outer)
    if spec.kind == "l1":
        # inclusion iff supp(b2) subset of supp(b1) with matching signs
        s1, s2 = np.sign(b1), np.sign(b2)
        return bool(np.all((s2 == 0) | (s2 == s1)))
    if spec.kind == "sup":
        if np.max(np.abs(b2), initial=0.0) == 0.0:
            return True
        if np.max(np.abs(b1), initial=0.0) == 0.0:
            return False
        p1 = named_pattern("sup", b1).as_array()
        p2 = named_pattern("sup", b2).as_array()
        return bool(np.all((p1 == 0) | (p1 == p2)))
    tol = max(rel_tol, 1e-12)
    i1 = set(active_indices(spec, b1, rel_tol=tol))
    i2 = set(active_indices(spec, b2, rel_tol=tol))
    return i1.issubset(i2)
