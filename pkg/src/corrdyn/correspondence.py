"""Holomorphic correspondences: construction, fibers, composition.

A Correspondence is either *direct* (a weighted list of graph polynomials)
or *chained* (a composition of factors, the last factor applied first, in
line with (F1 o F2)(z) = union of F1(w) over w in F2(z)).  Bidegrees d1/d2
count images/preimages of a generic point with multiplicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegreeBoundExceeded,
    DegreeTooLow,
    DiscriminantDegenerate,
    InexactDivision,
    InterpolationIllConditioned,
)
from .graphpoly import MERGE_TOL, GraphPolynomial, identity_graph, mobius_graph
from .polynomials import ComplexPolynomial
from .rational import MobiusMap, RationalMap
from .roots import roots_with_clusters
from .sphere import INF, SpherePoint, chordal_distance


# ---------------------------------------------------------------------------
# deleted covering graph
# ---------------------------------------------------------------------------

def divide_by_z_minus_w(N: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Exact quotient of a bivariate coefficient matrix by (z - w).

    N[i, j] is the coefficient of z^i w^j.  Synthetic division runs along
    the z-direction; the remainder must vanish below rel_tol relative to the
    matrix scale or InexactDivision is raised.
    """
    N = np.asarray(N, dtype=complex)
    scale = np.max(np.abs(N))
    if scale == 0:
        raise DegreeTooLow("zero matrix cannot be divided")
    d = N.shape[0] - 1
    Np = np.zeros((d + 1, N.shape[1] + 1), dtype=complex)
    Np[:, : N.shape[1]] = N
    B = np.zeros((max(d, 1), N.shape[1] + 1), dtype=complex)
    B[d - 1] = Np[d]
    for i in range(d - 1, 0, -1):
        shifted = np.zeros(Np.shape[1], dtype=complex)
        shifted[1:] = B[i][:-1]
        B[i - 1] = Np[i] + shifted
    shifted = np.zeros(Np.shape[1], dtype=complex)
    shifted[1:] = B[0][:-1]
    remainder = Np[0] + shifted
    if np.max(np.abs(remainder)) > rel_tol * scale:
        raise InexactDivision(
            f"(z - w) division left remainder of relative size "
            f"{np.max(np.abs(remainder)) / scale:.3e}"
        )
    return B


def cov_graph(R: RationalMap) -> GraphPolynomial:
    """Graph polynomial of the deleted covering correspondence of R.

    The exact quotient of p(z)q(w) - p(w)q(z) by (z - w); antisymmetry of
    the numerator makes the division exact, and the quotient symmetric.
    """
    if R.degree < 2:
        raise DegreeTooLow("deleted covering correspondence requires degree >= 2")
    d = R.degree
    p = np.zeros(d + 1, dtype=complex)
    q = np.zeros(d + 1, dtype=complex)
    p[: R.numerator.coefficients.size] = R.numerator.coefficients
    q[: R.denominator.coefficients.size] = R.denominator.coefficients
    # N[i, j] = p_i q_j - p_j q_i  (antisymmetric)
    N = np.outer(p, q) - np.outer(q, p)
    if np.max(np.abs(N)) == 0:
        raise DegreeTooLow("map is constant; covering graph undefined")
    return GraphPolynomial(divide_by_z_minus_w(N))


# ---------------------------------------------------------------------------
# fibers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberResult:
    """Multiset of fiber points with per-point residuals."""

    points: tuple  # tuple[(SpherePoint, int multiplicity), ...]
    residuals: tuple  # tuple[float, ...] aligned with points

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.points)

    def support(self) -> list[SpherePoint]:
        return [p for p, _ in self.points]

    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def _merge_weighted(items: list[tuple[SpherePoint, int, float]]) -> FiberResult:
    """Merge points within MERGE_TOL chordal; multiplicities add."""
    items = sorted(items, key=lambda t: t[0].sort_key())
    merged: list[list] = []
    for p, m, r in items:
        for slot in merged:
            if chordal_distance(p, slot[0]) <= MERGE_TOL:
                slot[1] += m
                slot[2] = max(slot[2], r)
                break
        else:
            merged.append([p, m, r])
    return FiberResult(
        tuple((p, m) for p, m, _ in merged), tuple(r for _, _, r in merged)
    )


@dataclass(frozen=True)
class Correspondence:
    """Holomorphic correspondence on the sphere.

    components : tuple of (GraphPolynomial, multiplicity), direct strategy
    chain      : tuple of Correspondence factors; chain[-1] applied first
    """

    components: tuple = ()
    chain: tuple = ()
    name: str = ""

    def __post_init__(self):
        if bool(self.components) == bool(self.chain):
            raise ValueError("exactly one of components/chain must be set")
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "chain", tuple(self.chain))

    # -- structure ----------------------------------------------------------

    @property
    def is_direct(self) -> bool:
        return bool(self.components)

    @property
    def d1(self) -> int:
        if self.is_direct:
            return sum(n * gp.deg_w for gp, n in self.components)
        out = 1
        for c in self.chain:
            out *= c.d1
        return out

    @property
    def d2(self) -> int:
        if self.is_direct:
            return sum(n * gp.deg_z for gp, n in self.components)
        out = 1
        for c in self.chain:
            out *= c.d2
        return out

    def transpose(self) -> "Correspondence":
        """The inverse correspondence (graph reflected in the diagonal)."""
        if self.is_direct:
            return Correspondence(
                components=tuple((gp.transpose(), n) for gp, n in self.components),
                name=self.name + "^-1" if self.name else "",
            )
        return Correspondence(
            chain=tuple(c.transpose() for c in reversed(self.chain)),
            name=self.name + "^-1" if self.name else "",
        )

    def single_graph(self) -> GraphPolynomial:
        if not (self.is_direct and len(self.components) == 1):
            raise ValueError("expected a direct single-component correspondence")
        return self.components[0][0]

    # -- evaluation ---------------------------------------------------------

    def forward(self, z: SpherePoint, cluster_radius: float = 1e-6) -> FiberResult:
        """Multivalued image of z, total multiplicity d1 at generic points."""
        if self.is_direct:
            items = []
            for gp, n in self.components:
                for w, m in gp.fiber(z, cluster_radius):
                    items.append((w, n * m, gp.residual(z, w)))
            return _merge_weighted(items)
        frontier = [(z, 1, 0.0)]
        for c in reversed(self.chain):
            nxt = []
            for p, mult, res in frontier:
                fr = c.forward(p, cluster_radius)
                for (w, m), r in zip(fr.points, fr.residuals):
                    nxt.append((w, mult * m, max(res, r)))
            frontier = nxt
        return _merge_weighted(frontier)

    def backward(self, w: SpherePoint, cluster_radius: float = 1e-6) -> FiberResult:
        """Multivalued preimage of w, total multiplicity d2 generically."""
        return self.transpose().forward(w, cluster_radius)

    def forward_batch(self, Z1: np.ndarray, Z2: np.ndarray):
        """Vectorized fibers: (W1, W2, labels), each of shape (N, d1).

        Children of a direct correspondence carry their component index as
        label; chained correspondences have a single composite component, so
        labels are zero.  Requires stage fibers of degree <= 2.
        """
        if self.is_direct:
            parts1, parts2, labs = [], [], []
            for idx, (gp, n) in enumerate(self.components):
                w1, w2 = gp.fiber_batch(Z1, Z2)
                for _ in range(n):
                    parts1.append(w1)
                    parts2.append(w2)
                    labs.append(np.full(w1.shape, idx, dtype=np.int16))
            W1 = np.concatenate(parts1, axis=-1)
            W2 = np.concatenate(parts2, axis=-1)
            L = np.concatenate(labs, axis=-1)
            return W1, W2, L
        shape = np.asarray(Z1).shape
        cur1 = np.asarray(Z1, dtype=complex).ravel()
        cur2 = np.asarray(Z2, dtype=complex).ravel()
        for c in reversed(self.chain):
            w1, w2, _ = c.forward_batch(cur1, cur2)
            cur1, cur2 = w1.ravel(), w2.ravel()
        n = self.d1
        W1 = cur1.reshape(shape + (n,))
        W2 = cur2.reshape(shape + (n,))
        return W1, W2, np.zeros(W1.shape, dtype=np.int16)

    # -- membership ---------------------------------------------------------

    def graph_residual(self, z: SpherePoint, w: SpherePoint) -> float:
        """Best scaled residual of (z, w) against the graph (witness path)."""
        if self.is_direct:
            return min(gp.residual(z, w) for gp, _ in self.components)
        head, rest = self.chain[0], self.chain[1:]
        if not rest:
            return head.graph_residual(z, w)
        mid = Correspondence(chain=rest) if len(rest) > 1 else rest[0]
        best = np.inf
        for u in mid.forward(z).support():
            best = min(best, head.graph_residual(u, w))
        return float(best)

    def to_json(self) -> dict:
        data = {"d1": self.d1, "d2": self.d2}
        if self.is_direct:
            data["components"] = [
                {"poly": gp.to_json(), "multiplicity": n} for gp, n in self.components
            ]
        else:
            data["chain"] = [c.to_json() for c in self.chain]
        return data

    @staticmethod
    def from_json(data) -> "Correspondence":
        if "components" in data and data["components"]:
            comps = tuple(
                (GraphPolynomial.from_json(c["poly"]), int(c["multiplicity"]))
                for c in data["components"]
            )
            return Correspondence(components=comps)
        return Correspondence(
            chain=tuple(Correspondence.from_json(c) for c in data["chain"])
        )


def is_on_graph(C: Correspondence, z: SpherePoint, w: SpherePoint, tol: float = 1e-8):
    """(membership, residual): True iff some component / witness path has
    scaled residual below tol."""
    res = C.graph_residual(z, w)
    return res < tol, res


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def deleted_covering(R: RationalMap, name: str = "") -> Correspondence:
    return Correspondence(components=((cov_graph(R), 1),), name=name or "cov")


def mobius_correspondence(M: MobiusMap, name: str = "") -> Correspondence:
    return Correspondence(components=((mobius_graph(M), 1),), name=name or "mobius")


def identity_correspondence() -> Correspondence:
    return Correspondence(components=((identity_graph(), 1),), name="identity")


def map_graph(R: RationalMap, backward: bool = False, name: str = "") -> Correspondence:
    """Graph-of-map correspondence of R.

    Forward orientation has bidegree (1 : deg R); the backward orientation
    (z related to the preimages of z under R) has bidegree (deg R : 1).
    """
    p = R.numerator.coefficients
    q = R.denominator.coefficients
    d = R.degree
    c = np.zeros((d + 1, 2), dtype=complex)
    c[: p.size, 0] = -p
    c[: q.size, 1] = q
    gp = GraphPolynomial(c)  # q(z) w - p(z)
    if backward:
        gp = gp.transpose()
    return Correspondence(components=((gp, 1),), name=name or "graph")


def compose(C1: Correspondence, C2: Correspondence) -> Correspondence:
    """Composition with C2 applied first: (C1 o C2)(z) = U_{w in C2(z)} C1(w)."""
    f1 = C1.chain if not C1.is_direct else (C1,)
    f2 = C2.chain if not C2.is_direct else (C2,)
    return Correspondence(chain=tuple(f1) + tuple(f2))


# ---------------------------------------------------------------------------
# resultant composition
# ---------------------------------------------------------------------------

def _sylvester(a: np.ndarray, b: np.ndarray, da: int, db: int) -> np.ndarray:
    """Sylvester matrix for polynomials of nominal degrees da, db (ascending)."""
    n = da + db
    S = np.zeros((n, n), dtype=complex)
    for r in range(db):
        S[r, r : r + da + 1] = a[::-1]
    for r in range(da):
        S[db + r, r : r + db + 1] = b[::-1]
    return S


def _resultant_nodes(nn: int) -> np.ndarray:
    # roots of unity rotated off the real axis for determinism and to dodge
    # special points of the test families
    k = np.arange(nn)
    return np.exp(2j * np.pi * k / nn) * np.exp(0.37j)


def compose_graph_poly(
    C1: Correspondence, C2: Correspondence, degree_bound: int = 16
) -> GraphPolynomial:
    """Explicit graph polynomial of C1 o C2 (C2 first) via a resultant.

    Res_u(B2(z, u), B1(u, w)) is computed on a tensor grid of rotated roots
    of unity and interpolated back to a dense coefficient matrix.
    """
    B1 = C1.single_graph()
    B2 = C2.single_graph()
    du2, du1 = B2.deg_w, B1.deg_z
    dz = B2.deg_z * du1
    dw = B1.deg_w * du2
    if (dz + 1) * (dw + 1) > degree_bound * degree_bound:
        raise DegreeBoundExceeded(
            f"product bidegree ({dz}, {dw}) exceeds bound {degree_bound}"
        )
    zs = _resultant_nodes(dz + 1)
    ws = _resultant_nodes(dw + 1) * np.exp(0.11j)
    V = np.zeros((dz + 1, dw + 1), dtype=complex)
    pow_z = np.vander(zs, B2.deg_z + 1, increasing=True)  # (Nz, mz+1)
    pow_w = np.vander(ws, B1.deg_w + 1, increasing=True)
    a_all = pow_z @ B2.coeffs  # (Nz, du2+1): B2(z_k, u) coefficients in u
    b_all = pow_w @ B1.coeffs.T  # (Nw, du1+1): B1(u, w_l) coefficients in u
    for k in range(dz + 1):
        for l in range(dw + 1):
            S = _sylvester(a_all[k], b_all[l], du2, du1)
            V[k, l] = np.linalg.det(S)
    Vz = np.vander(zs, dz + 1, increasing=True)
    Vw = np.vander(ws, dw + 1, increasing=True)
    cond = max(np.linalg.cond(Vz), np.linalg.cond(Vw))
    if cond > 1e8:
        raise InterpolationIllConditioned(
            f"interpolation condition estimate {cond:.3e}", condition=cond
        )
    Cz = np.linalg.solve(Vz, V)
    coeffs = np.linalg.solve(Vw, Cz.T).T
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        raise DiscriminantDegenerate("resultant vanished identically")
    coeffs[np.abs(coeffs) < 1e-10 * scale] = 0
    return GraphPolynomial(coeffs)


# ---------------------------------------------------------------------------
# ramification
# ---------------------------------------------------------------------------

def _branch_base_candidates(gp: GraphPolynomial) -> list[SpherePoint]:
    """z-values where the w-fiber of gp may contain a multiple point.

    Zeros of Res_w(B, dB/dw)(z) computed by node evaluation/interpolation,
    plus infinity, which is checked directly by the caller.
    """
    m, n = gp.deg_z, gp.deg_w
    if n < 2:
        return [INF]
    dcoeffs = gp.coeffs[:, 1:] * np.arange(1, n + 1)
    deg = m * (n - 1) + m * n  # generous bound on deg_z of the resultant
    zs = _resultant_nodes(deg + 1)
    pow_z = np.vander(zs, m + 1, increasing=True)
    a_all = pow_z @ gp.coeffs
    b_all = pow_z @ dcoeffs
    vals = np.array(
        [
            np.linalg.det(_sylvester(a_all[k], b_all[k], n, n - 1))
            for k in range(deg + 1)
        ]
    )
    scale = np.max(np.abs(vals))
    if scale == 0:
        raise DiscriminantDegenerate("w-discriminant vanishes identically")
    Vz = np.vander(zs, deg + 1, increasing=True)
    coeffs = np.linalg.solve(Vz, vals)
    poly = ComplexPolynomial(coeffs).trimmed(1e-9)
    cands: list[SpherePoint] = [INF]
    if not poly.is_zero and poly.degree >= 1:
        for r, _ in roots_with_clusters(poly.coefficients, cluster_radius=1e-5):
            cands.append(SpherePoint.from_complex(r))
    return cands


def _charted(coeffs: np.ndarray, rec_z: bool, rec_w: bool) -> np.ndarray:
    c = coeffs
    if rec_z:
        c = c[::-1, :]
    if rec_w:
        c = c[:, ::-1]
    return c


def _bivar_eval(c: np.ndarray, z: complex, w: complex) -> complex:
    acc = 0j
    for row in c[::-1]:
        inner = 0j
        for coef in row[::-1]:
            inner = inner * w + coef
        acc = acc * z + inner
    return acc


def _polish_branch_pair(gp: GraphPolynomial, z0: SpherePoint, w0: SpherePoint):
    """Newton refinement of (z, w) on the system B = dB/dw = 0.

    Runs in the reciprocal chart for coordinates starting outside the unit
    disk, so branch pairs at or near infinity converge as well.  Returns the
    polished pair or None when the iteration does not converge.
    """
    rec_z = z0.chart == "reciprocal"
    rec_w = w0.chart == "reciprocal"
    c = _charted(gp.coeffs, rec_z, rec_w)
    m, n = c.shape[0] - 1, c.shape[1] - 1
    cz = c[1:, :] * np.arange(1, m + 1)[:, None] if m >= 1 else np.zeros((1, n + 1))
    cw = c[:, 1:] * np.arange(1, n + 1)[None, :] if n >= 1 else np.zeros((m + 1, 1))
    czw = cw[1:, :] * np.arange(1, m + 1)[:, None] if m >= 1 else np.zeros((1, 1))
    cww = cw[:, 1:] * np.arange(1, n + 1 - 1)[None, :] if n >= 2 else np.zeros((m + 1, 1))
    u, v = z0.value, w0.value
    scale = gp.scale
    for _ in range(25):
        f1 = _bivar_eval(c, u, v)
        f2 = _bivar_eval(cw, u, v)
        j11 = _bivar_eval(cz, u, v)
        j12 = _bivar_eval(cw, u, v)
        j21 = _bivar_eval(czw, u, v)
        j22 = _bivar_eval(cww, u, v)
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-14 * scale * scale:
            break
        du = (f1 * j22 - f2 * j12) / det
        dv = (j11 * f2 - j21 * f1) / det
        u, v = u - du, v - dv
        if abs(u) > 3 or abs(v) > 3:
            return None
        if abs(du) + abs(dv) < 1e-15 * (1 + abs(u) + abs(v)):
            break
    if abs(_bivar_eval(c, u, v)) > 1e-9 * scale or abs(_bivar_eval(cw, u, v)) > 1e-8 * scale:
        return None
    z = SpherePoint.from_projective(1.0, u) if rec_z else SpherePoint.from_projective(u, 1.0)
    w = SpherePoint.from_projective(1.0, v) if rec_w else SpherePoint.from_projective(v, 1.0)
    return z, w


def _confirmed_pairs(gp: GraphPolynomial, cluster_radius: float = 1e-5):
    """A1-type pairs (z0, w0): w0 a multiple point of the fiber over z0.

    Candidates come from the discriminant; since their base coordinates are
    only approximate, near-double fiber points are polished by Newton on
    (B, dB/dw) before being accepted.
    """
    pairs = []
    seen: list[SpherePoint] = []

    def push(z0, w0, mult):
        for (pz, pw), _m in pairs:
            if chordal_distance(pz, z0) <= 1e-7 and chordal_distance(pw, w0) <= 1e-7:
                return
        pairs.append(((z0, w0), mult))

    for z0 in _branch_base_candidates(gp):
        if any(chordal_distance(z0, s) <= 1e-9 for s in seen):
            continue
        seen.append(z0)
        try:
            fib = gp.fiber(z0, cluster_radius)
        except Exception:
            continue
        for idx, (w0, mult) in enumerate(fib):
            if mult >= 2:
                polished = _polish_branch_pair(gp, z0, w0)
                if polished is not None:
                    push(polished[0], polished[1], mult)
                else:
                    push(z0, w0, mult)
                continue
            # near-double split by candidate error: polish and confirm
            for w1, m1 in fib[idx + 1 :]:
                if m1 == 1 and chordal_distance(w0, w1) < 5e-3:
                    mid = _midpoint(w0, w1)
                    polished = _polish_branch_pair(gp, z0, mid)
                    if polished is not None:
                        push(polished[0], polished[1], 2)
    return pairs


def _midpoint(p: SpherePoint, q: SpherePoint) -> SpherePoint:
    if p.chart == q.chart:
        return SpherePoint.from_projective((p.value + q.value) / 2.0, 1.0) if p.chart == "standard" else SpherePoint.from_projective(1.0, (p.value + q.value) / 2.0)
    return p


def ramification_pairs(C: Correspondence, side: int, degree_bound: int = 16):
    """Ramification pairs on the graph.

    side=1: pairs where the first projection is locally non-injective (the
    ramification points of the inverse); side=2: of the correspondence
    itself.  Chained correspondences are first flattened to an explicit
    graph polynomial through resultants.
    """
    if side not in (1, 2):
        raise ValueError("side must be 1 or 2")
    gps = _flatten_components(C, degree_bound)
    out = []
    for gp in gps:
        work = gp if side == 1 else gp.transpose()
        for (z0, w0), mult in _confirmed_pairs(work):
            pair = (z0, w0) if side == 1 else (w0, z0)
            out.append((pair, mult))
    return out


def _flatten_components(C: Correspondence, degree_bound: int) -> list[GraphPolynomial]:
    if C.is_direct:
        return [gp for gp, _ in C.components]
    acc = C.chain[-1]
    if not acc.is_direct or len(acc.components) != 1:
        raise DegreeBoundExceeded("chained ramification needs single-component stages")
    for nxt in reversed(C.chain[:-1]):
        acc = Correspondence(
            components=((compose_graph_poly(nxt, acc, degree_bound), 1),)
        )
    return [acc.single_graph()]


def ramification_points(C: Correspondence, degree_bound: int = 16):
    """Pairs (z, w) on the graph where the correspondence is ramified (A2)."""
    return [pair for pair, _ in ramification_pairs(C, side=2, degree_bound=degree_bound)]


def critical_values(C: Correspondence, side: int, degree_bound: int = 16):
    """Critical values: side=1 those of the inverse (pi_1 of A1), side=2 of
    the correspondence (pi_2 of A2).  Returns [(SpherePoint, count)]."""
    pairs = ramification_pairs(C, side=side, degree_bound=degree_bound)
    values: list[list] = []
    for (z0, w0), mult in pairs:
        v = z0 if side == 1 else w0
        for slot in values:
            if chordal_distance(v, slot[0]) <= 1e-7:
                slot[1] += 1
                break
        else:
            values.append([v, 1])
    return [(v, c) for v, c in values]
