"""Rational maps and Moebius transformations on the Riemann sphere."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegreeTooLow, Indeterminate
from .polynomials import ComplexPolynomial
from .roots import poly_roots, roots_with_clusters
from .sphere import INF, SpherePoint, chordal_from_complex


@dataclass(frozen=True)
class RationalMap:
    """R = numerator / denominator, with no common roots.

    The common-root check is numerical: construction fails if some root of
    the numerator lies within 1e-10 (chordal) of a root of the denominator.
    """

    numerator: ComplexPolynomial
    denominator: ComplexPolynomial

    def __post_init__(self):
        num, den = self.numerator, self.denominator
        if not isinstance(num, ComplexPolynomial):
            object.__setattr__(self, "numerator", ComplexPolynomial(num))
            num = self.numerator
        if not isinstance(den, ComplexPolynomial):
            object.__setattr__(self, "denominator", ComplexPolynomial(den))
            den = self.denominator
        if num.is_zero or den.is_zero:
            raise DegreeTooLow("numerator and denominator must be nonzero")
        if self.degree < 1:
            raise DegreeTooLow("rational map must have degree >= 1")
        if num.degree >= 1 and den.degree >= 1:
            rn = [r for r, _ in roots_with_clusters(num.coefficients)]
            rd = [r for r, _ in roots_with_clusters(den.coefficients)]
            for a in rn:
                for b in rd:
                    if chordal_from_complex(a, b) < 1e-10:
                        raise Indeterminate(
                            f"numerator and denominator share a root near {a:.6g}"
                        )

    @property
    def degree(self) -> int:
        return int(max(self.numerator.degree, self.denominator.degree))

    def derivative_wronskian(self) -> ComplexPolynomial:
        """p'q - pq', the numerator of R'."""
        p, q = self.numerator, self.denominator
        return p.derivative() * q - p * q.derivative()

    def to_json(self) -> dict:
        return {"num": self.numerator.to_json(), "den": self.denominator.to_json()}

    @staticmethod
    def from_json(data) -> "RationalMap":
        return RationalMap(
            ComplexPolynomial.from_json(data["num"]),
            ComplexPolynomial.from_json(data["den"]),
        )


def polynomial_map(coefficients) -> RationalMap:
    return RationalMap(ComplexPolynomial(coefficients), ComplexPolynomial([1]))


def rational_eval(R: RationalMap, p: SpherePoint) -> SpherePoint:
    """Evaluate R at a sphere point.

    Poles return infinity; at infinity the reciprocal-chart conjugate map is
    evaluated, so the result is exact whenever the chart coordinate is.
    Raises Indeterminate when numerator and denominator both vanish at p
    within 1e-12, which signals an unreduced map.
    """
    num, den = R.numerator, R.denominator
    d = max(int(num.degree), int(den.degree))
    if p.chart == "standard":
        z = p.value
        nv, dv = num(z), den(z)
        scale = max(1.0, abs(z)) ** d
    else:
        # z = 1/u: evaluate u^d num(1/u) and u^d den(1/u)
        u = p.value
        nv = num.reversed(d)(u)
        dv = den.reversed(d)(u)
        scale = 1.0
    nmag, dmag = abs(nv), abs(dv)
    coeff_scale = max(
        np.max(np.abs(num.coefficients)), np.max(np.abs(den.coefficients))
    )
    if nmag <= 1e-12 * coeff_scale * scale and dmag <= 1e-12 * coeff_scale * scale:
        raise Indeterminate("numerator and denominator vanish together")
    if dmag == 0.0:
        return INF
    return SpherePoint.from_projective(nv, dv)


def rational_preimages(
    R: RationalMap, w: SpherePoint, cluster_radius: float = 1e-6
) -> list[tuple[SpherePoint, int]]:
    """Solutions of R(z) = w with multiplicity, deg(R) in total."""
    num, den = R.numerator, R.denominator
    d = R.degree
    w1, w2 = w.projective()
    # w2*num(z) - w1*den(z) = 0, padded to degree d
    c = np.zeros(d + 1, dtype=complex)
    c[: num.coefficients.size] = w2 * num.coefficients
    c[: den.coefficients.size] -= w1 * den.coefficients
    poly = ComplexPolynomial(c).trimmed(1e-14)
    if poly.is_zero:
        raise Indeterminate("preimage polynomial vanished identically")
    finite = poly_roots(poly, cluster_radius)
    drop = d - int(poly.degree)
    if drop > 0:
        finite = finite + [(INF, drop)]
    return finite


def critical_points(R: RationalMap, cluster_radius: float = 1e-6) -> list[tuple[SpherePoint, int]]:
    """Critical points of R with multiplicity; total count 2 deg(R) - 2.

    Finite critical points are the roots of the Wronskian p'q - pq'; the
    remaining multiplicity is assigned to infinity (reciprocal chart count).
    """
    if R.degree < 2:
        raise DegreeTooLow("critical points require degree >= 2")
    w = R.derivative_wronskian().trimmed(1e-13)
    total = 2 * R.degree - 2
    if w.is_zero:
        raise DegreeTooLow("Wronskian vanished identically; map is degenerate")
    finite = poly_roots(w, cluster_radius)
    mult_inf = total - int(w.degree)
    out = list(finite)
    if mult_inf > 0:
        out.append((INF, mult_inf))
    return out


@dataclass(frozen=True)
class MobiusMap:
    """z -> (a z + b)/(c z + d), normalized to determinant 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det) <= 1e-12 * max(1.0, max(abs(self.a), abs(self.b), abs(self.c), abs(self.d)) ** 2):
            raise DegreeTooLow("Moebius map must have nonzero determinant")
        s = cmath.sqrt(det)
        object.__setattr__(self, "a", complex(self.a / s))
        object.__setattr__(self, "b", complex(self.b / s))
        object.__setattr__(self, "c", complex(self.c / s))
        object.__setattr__(self, "d", complex(self.d / s))

    @staticmethod
    def identity() -> "MobiusMap":
        return MobiusMap(1, 0, 0, 1)

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self after other."""
        m = self.matrix() @ other.matrix()
        return MobiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def to_rational(self) -> RationalMap:
        return RationalMap(
            ComplexPolynomial([self.b, self.a]), ComplexPolynomial([self.d, self.c])
        )


def mobius_apply(M: MobiusMap, p: SpherePoint) -> SpherePoint:
    """Projective action of M on a sphere point; total on the sphere."""
    z1, z2 = p.projective()
    return SpherePoint.from_projective(M.a * z1 + M.b * z2, M.c * z1 + M.d * z2)


def mobius_is_involution(M: MobiusMap, tol: float = 1e-10) -> bool:
    """True iff M is an involution other than the identity (zero trace)."""
    return abs(M.a + M.d) <= tol


def mobius_is_identity(M: MobiusMap, tol: float = 1e-12) -> bool:
    m = M.matrix()
    return bool(
        min(
            np.max(np.abs(m - np.eye(2))),
            np.max(np.abs(m + np.eye(2))),
        )
        <= tol
    )


def mobius_projectively_equal(M1: MobiusMap, M2: MobiusMap, tol: float = 1e-9) -> bool:
    """Equality of normalized matrices up to overall sign."""
    m1, m2 = M1.matrix(), M2.matrix()
    return bool(min(np.max(np.abs(m1 - m2)), np.max(np.abs(m1 + m2))) <= tol)
