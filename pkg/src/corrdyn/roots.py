"""Polynomial root extraction with multiplicity clustering.

Simultaneous Aberth-Ehrlich iteration, falling back to the companion matrix
(numpy.roots) when the iteration stalls.  Roots closer than cluster_radius
are merged into a single root at their centroid with summed multiplicity.
"""

from __future__ import annotations

import numpy as np

from .errors import NonConvergence, ZeroPolynomial
from .polynomials import ComplexPolynomial
from .sphere import SpherePoint, chordal_from_complex

DEFAULT_CLUSTER_RADIUS = 1e-6


def _projective_residuals(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """|p(z)| / max(1, |z|)^deg, bounded for arbitrarily large roots."""
    inside = np.abs(z) <= 1.0
    out = np.empty(z.shape, dtype=float)
    out[inside] = np.abs(np.polyval(coeffs[::-1], z[inside]))
    zo = z[~inside]
    if zo.size:
        out[~inside] = np.abs(np.polyval(coeffs, 1.0 / zo))
    return out


def _aberth(coeffs: np.ndarray, max_iter: int = 80, tol: float = 1e-14) -> np.ndarray | None:
    """Aberth-Ehrlich on a max-normalized coefficient array (ascending)."""
    n = coeffs.size - 1
    if n == 1:
        return np.array([-coeffs[0] / coeffs[1]])
    c = coeffs / coeffs[-1]
    # Cauchy bound for the initial circle
    bound = 1.0 + float(np.max(np.abs(c[:-1])))
    if not np.isfinite(bound) or bound > 1e8:
        return None  # huge dynamic range: leave it to the companion matrix
    k = np.arange(n)
    z = bound * np.exp(2j * np.pi * (k + 0.25) / n) * (0.7 + 0.3 * (k % 2))
    dp = np.arange(1, n + 1) * c[1:]
    converged = False
    for _ in range(max_iter):
        pv = np.polyval(c[::-1], z)
        dv = np.polyval(dp[::-1], z)
        with np.errstate(all="ignore"):
            newton = np.where(dv != 0, pv / np.where(dv == 0, 1, dv), 0.0)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            denom = 1.0 - newton * s
            step = np.where(np.abs(denom) > 1e-30, newton / np.where(denom == 0, 1, denom), newton)
        if not np.all(np.isfinite(step)):
            return None
        z = z - step
        if np.max(np.abs(step)) < tol * (1.0 + np.max(np.abs(z))):
            converged = True
            break
    if not converged:
        return None
    # validate: scale-free residual on the original (max-normalized) input
    if np.max(_projective_residuals(coeffs, z)) > 1e-8:
        return None
    return z


def _polish(coeffs: np.ndarray, roots: np.ndarray, sweeps: int = 2) -> np.ndarray:
    dp = (np.arange(1, coeffs.size) * coeffs[1:])[::-1]
    p = coeffs[::-1]
    z = roots.copy()
    for _ in range(sweeps):
        pv = np.polyval(p, z)
        dv = np.polyval(dp, z)
        with np.errstate(all="ignore"):
            step = np.where(np.abs(dv) > 1e-300, pv / np.where(dv == 0, 1, dv), 0.0)
        step = np.where(np.abs(step) < 1.0, step, 0.0)  # reject wild Newton steps
        z = z - step
    return z


def roots_with_clusters(
    coefficients, cluster_radius: float = DEFAULT_CLUSTER_RADIUS
) -> list[tuple[complex, int]]:
    """All complex roots grouped into (centroid, multiplicity) clusters.

    Clustering is chordal so near-infinite roots merge sensibly too.
    """
    coeffs = np.atleast_1d(np.asarray(coefficients, dtype=complex))
    k = coeffs.size - 1
    while k > 0 and coeffs[k] == 0:
        k -= 1
    coeffs = coeffs[: k + 1]
    if coeffs.size == 1:
        if coeffs[0] == 0:
            raise ZeroPolynomial("cannot extract roots of the zero polynomial")
        return []
    coeffs = coeffs / np.max(np.abs(coeffs))  # scale-free iteration
    raw = _aberth(coeffs)
    if raw is None:
        try:
            raw = np.roots(coeffs[::-1])
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise NonConvergence("companion-matrix fallback failed", partial=[]) from exc
    raw = _polish(coeffs, raw)
    # greedy chordal clustering in a deterministic order
    order = np.lexsort((raw.imag, raw.real))
    raw = raw[order]
    clusters: list[list[complex]] = []
    for r in raw:
        placed = False
        for cl in clusters:
            if chordal_from_complex(r, cl[0]) <= cluster_radius:
                cl.append(r)
                placed = True
                break
        if not placed:
            clusters.append([complex(r)])
    out = []
    for cl in clusters:
        centroid = complex(np.mean(cl))
        if len(cl) == 1:
            centroid = complex(cl[0])
        out.append((centroid, len(cl)))
    return out


def poly_roots(
    p: ComplexPolynomial, cluster_radius: float = DEFAULT_CLUSTER_RADIUS
) -> list[tuple[SpherePoint, int]]:
    """Roots of p with multiplicity, as sphere points.

    Raises ZeroPolynomial for p identically zero and NonConvergence when
    neither the simultaneous iteration nor the companion matrix produced
    roots with acceptable residuals.
    """
    if p.is_zero:
        raise ZeroPolynomial("cannot extract roots of the zero polynomial")
    clusters = roots_with_clusters(p.coefficients, cluster_radius)
    # residual contract for simple roots; evaluated scale-free (coefficients
    # max-normalized, the reversed polynomial used beyond the unit disk) so
    # far roots are not penalized by |z|^deg roundoff amplification
    cn = p.coefficients / np.max(np.abs(p.coefficients))
    bad = []
    for root, mult in clusters:
        if mult != 1:
            continue
        # nearly-multiple roots (just outside the cluster radius) get slack
        near_other = any(
            o_root != root and chordal_from_complex(root, o_root) < 10 * cluster_radius
            for o_root, _ in clusters
        )
        res = float(_projective_residuals(cn, np.array([root]))[0]) / (1.0 + abs(cn[-1]))
        if not np.isfinite(res) or res > (1e-6 if near_other else 1e-8):
            bad.append((root, res))
    result = [(SpherePoint.from_complex(r), m) for r, m in clusters]
    if bad:
        raise NonConvergence(
            f"{len(bad)} root(s) failed the residual check", partial=result
        )
    return result
