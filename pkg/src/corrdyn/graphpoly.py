"""Bivariate graph polynomials B(z, w) and their fiber extraction.

Coefficients are stored densely as a matrix coeffs[i, j] of z^i w^j.  Fibers
are computed chart-aware: substituting a reciprocal-chart base point uses the
z-homogenized coefficients, and degree drops of the specialized w-polynomial
are compensated by roots at infinity, matching the closure of the affine
graph in the product of two spheres.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FiberDegenerate
from .polynomials import ComplexPolynomial
from .roots import roots_with_clusters
from .sphere import INF, SpherePoint

MERGE_TOL = 1e-9


def _tight(coeffs: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        raise ValueError("graph polynomial must be nonzero")
    m = np.abs(coeffs) > rel_tol * scale
    rows = np.nonzero(m.any(axis=1))[0]
    cols = np.nonzero(m.any(axis=0))[0]
    out = coeffs[: rows[-1] + 1, : cols[-1] + 1].copy()
    small = np.abs(out) <= rel_tol * scale
    out[small] = 0
    return out


@dataclass(frozen=True)
class GraphPolynomial:
    """One irreducible-component polynomial of a correspondence graph."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        object.__setattr__(self, "coeffs", _tight(arr))

    @property
    def deg_z(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def deg_w(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def transpose(self) -> "GraphPolynomial":
        return GraphPolynomial(self.coeffs.T)

    def is_symmetric(self, tol: float = 1e-10) -> bool:
        c = self.coeffs
        if c.shape[0] != c.shape[1]:
            return False
        return bool(np.max(np.abs(c - c.T)) <= tol * self.scale)

    # -- evaluation ---------------------------------------------------------

    def eval_homogeneous(self, z1, z2, w1, w2):
        """B evaluated on homogeneous pairs: sum c_ij z1^i z2^(m-i) w1^j w2^(n-j).

        With unit-normalized pairs this is a bounded, chart-free residual.
        """
        m, n = self.deg_z, self.deg_w
        z1 = np.asarray(z1, dtype=complex)
        zp = np.stack([z1 ** i * np.asarray(z2, dtype=complex) ** (m - i) for i in range(m + 1)])
        wp = np.stack([np.asarray(w1, dtype=complex) ** j * np.asarray(w2, dtype=complex) ** (n - j) for j in range(n + 1)])
        return np.einsum("ij,i...,j...->...", self.coeffs, zp, wp)

    def residual(self, p: SpherePoint, q: SpherePoint) -> float:
        """Scaled homogeneous residual |B(p, q)| / max|coeff| in [0, large)."""
        z1, z2 = p.projective()
        w1, w2 = q.projective()
        nz = np.sqrt(abs(z1) ** 2 + abs(z2) ** 2)
        nw = np.sqrt(abs(w1) ** 2 + abs(w2) ** 2)
        v = self.eval_homogeneous(z1 / nz, z2 / nz, w1 / nw, w2 / nw)
        return float(abs(v)) / self.scale

    def w_polynomial_at(self, p: SpherePoint) -> ComplexPolynomial:
        """Specialized polynomial in w over the base point p (z-homogenized)."""
        z1, z2 = p.projective()
        m = self.deg_z
        zp = np.array([z1 ** i * z2 ** (m - i) for i in range(m + 1)])
        return ComplexPolynomial(zp @ self.coeffs)

    def fiber(self, p: SpherePoint, cluster_radius: float = 1e-6) -> list[tuple[SpherePoint, int]]:
        """w-roots over p with multiplicity; degree drops become roots at inf.

        Raises FiberDegenerate when the specialized polynomial vanishes
        identically (a vertical line over p).
        """
        poly = self.w_polynomial_at(p).trimmed(1e-11)
        n = self.deg_w
        if poly.is_zero:
            raise FiberDegenerate(f"graph polynomial vanishes identically over {p}")
        clusters = roots_with_clusters(poly.coefficients, cluster_radius)
        out = [(SpherePoint.from_complex(r), mult) for r, mult in clusters]
        drop = n - int(poly.degree) if poly.degree != float("-inf") else n
        if drop > 0:
            out.append((INF, drop))
        return out

    # -- vectorized lane ----------------------------------------------------

    def fiber_batch(self, Z1: np.ndarray, Z2: np.ndarray):
        """Fibers of many base points given as homogeneous pairs.

        Returns (W1, W2) arrays of shape (N, deg_w): projective w-roots per
        base point, multiplicities implicit in repetition.  Only implemented
        for deg_w <= 2, which covers every family in the acceptance runs.
        Entries where the specialized polynomial vanishes identically are
        returned as NaN pairs for the caller to prune.
        """
        m, n = self.deg_z, self.deg_w
        Z1 = np.asarray(Z1, dtype=complex)
        Z2 = np.asarray(Z2, dtype=complex)
        zp = np.stack([Z1 ** i * Z2 ** (m - i) for i in range(m + 1)], axis=-1)
        cw = zp @ self.coeffs  # (N, n+1) specialized w-coefficients
        scale = np.max(np.abs(cw), axis=-1)
        dead = scale < 1e-250
        scale = np.where(dead, 1.0, scale)
        cw = cw / scale[..., None]
        if n == 1:
            W1 = -cw[..., 0][..., None]
            W2 = cw[..., 1][..., None]
        elif n == 2:
            a, b, c = cw[..., 2], cw[..., 1], cw[..., 0]
            disc = b * b - 4 * a * c
            sq = np.sqrt(disc)
            # align sqrt sign with b to avoid cancellation
            flip = (b.real * sq.real + b.imag * sq.imag) < 0
            sq = np.where(flip, -sq, sq)
            qq = -(b + sq) / 2.0
            W1 = np.stack([qq, c], axis=-1)
            W2 = np.stack([a, qq], axis=-1)
            # both components ~0 (double degree drop): root at infinity
            tiny = (np.abs(W1) < 1e-14) & (np.abs(W2) < 1e-14)
            W1 = np.where(tiny, 1.0, W1)
            W2 = np.where(tiny, 0.0, W2)
        else:
            raise NotImplementedError("fiber_batch supports deg_w <= 2")
        if np.any(dead):
            W1 = np.where(dead[..., None], np.nan, W1)
            W2 = np.where(dead[..., None], np.nan, W2)
        # normalize pairs to max-modulus 1 for stability
        mag = np.maximum(np.abs(W1), np.abs(W2))
        mag = np.where(mag == 0, 1.0, mag)
        return W1 / mag, W2 / mag

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        flat = [[c.real, c.imag] for c in self.coeffs.ravel()]
        return {"deg_z": self.deg_z, "deg_w": self.deg_w, "coeffs": flat}

    @staticmethod
    def from_json(data) -> "GraphPolynomial":
        m, n = data["deg_z"], data["deg_w"]
        flat = np.array([complex(re, im) for re, im in data["coeffs"]])
        return GraphPolynomial(flat.reshape(m + 1, n + 1))


def diagonal_vanishing_fraction(gp: GraphPolynomial, n_samples: int = 200, seed: int = 7) -> float:
    """Fraction of random diagonal points (t, t) where B nearly vanishes.

    Diagnostic for the "diagonal deleted" invariant: a genuinely deleted
    graph evaluates to non-small values at most diagonal points.
    """
    rng = np.random.default_rng(seed)
    t = rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples)
    t = t / np.maximum(1.0, np.abs(t))  # keep in the unit disk
    vals = np.abs(gp.eval_homogeneous(t, np.ones_like(t), t, np.ones_like(t))) / gp.scale
    return float(np.mean(vals < 1e-10))


def mobius_graph(M) -> GraphPolynomial:
    """Graph polynomial (c z + d) w - (a z + b) of a Moebius map."""
    c = np.zeros((2, 2), dtype=complex)
    c[0, 0] = -M.b
    c[1, 0] = -M.a
    c[0, 1] = M.d
    c[1, 1] = M.c
    return GraphPolynomial(c)


def identity_graph() -> GraphPolynomial:
    """Graph polynomial w - z of the identity map."""
    c = np.zeros((2, 2), dtype=complex)
    c[1, 0] = -1.0
    c[0, 1] = 1.0
    return GraphPolynomial(c)
