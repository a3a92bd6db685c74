"""Points of the Riemann sphere in a two-chart representation.

A point is stored as (value, chart).  In the "standard" chart the stored
value is z itself, in the "reciprocal" chart it is 1/z, and points are always
re-charted so the stored coordinate lies in the closed unit disk.  Infinity
is exactly (0, "reciprocal").  The chordal metric (sphere of diameter 2,
maximum distance 2) is the only metric used in the package.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

STANDARD = "standard"
RECIPROCAL = "reciprocal"

#: invariant slack for the |value| <= 1 normalization
CHART_SLACK = 1e-9


@dataclass(frozen=True)
class SpherePoint:
    """Immutable point of the Riemann sphere.

    value : complex
        Chart coordinate, |value| <= 1 + slack after normalization.
    chart : str
        "standard" (value is z) or "reciprocal" (value is 1/z).
    """

    value: complex
    chart: str = STANDARD

    def __post_init__(self):
        if type(self.value) is not complex:
            object.__setattr__(self, "value", complex(self.value))

    @staticmethod
    def from_complex(z: complex) -> "SpherePoint":
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return INF
        if abs(z) <= 1.0:
            return SpherePoint(z, STANDARD)
        return SpherePoint(1.0 / z, RECIPROCAL)

    @staticmethod
    def from_projective(z1: complex, z2: complex) -> "SpherePoint":
        """Point z = z1/z2 from homogeneous coordinates, (0,0) rejected."""
        a1, a2 = abs(z1), abs(z2)
        if a1 == 0.0 and a2 == 0.0:
            raise ValueError("projective pair (0, 0) does not define a point")
        if a1 <= a2:
            return SpherePoint(z1 / z2, STANDARD)
        return SpherePoint(z2 / z1, RECIPROCAL)

    @staticmethod
    def infinity() -> "SpherePoint":
        return INF

    @property
    def is_infinity(self) -> bool:
        return self.chart == RECIPROCAL and self.value == 0

    def to_complex(self) -> complex:
        """Plane coordinate; raises on the point at infinity."""
        if self.chart == STANDARD:
            return self.value
        if self.value == 0:
            raise ValueError("point at infinity has no plane coordinate")
        return 1.0 / self.value

    def projective(self) -> tuple[complex, complex]:
        """Homogeneous pair (z1, z2) with z = z1/z2, max-norm 1."""
        if self.chart == STANDARD:
            return (self.value, 1.0 + 0.0j)
        return (1.0 + 0.0j, self.value)

    def other_chart(self) -> "SpherePoint":
        """Same point expressed in the opposite chart (may leave the disk)."""
        if self.value == 0:
            if self.chart == STANDARD:
                return SpherePoint(complex(math.inf), RECIPROCAL)  # marker; 1/0
            return SpherePoint(complex(math.inf), STANDARD)
        return SpherePoint(
            1.0 / self.value,
            RECIPROCAL if self.chart == STANDARD else STANDARD,
        )

    def antipode(self) -> "SpherePoint":
        """Diametrically opposite point, z -> -1/conj(z)."""
        v = -self.value.conjugate()
        if self.chart == STANDARD:
            return SpherePoint(v, STANDARD) if abs(v) <= 1 else SpherePoint(1 / v, RECIPROCAL)
        return SpherePoint(v, RECIPROCAL) if abs(v) <= 1 else SpherePoint(1 / v, STANDARD)

    def embed_r3(self) -> tuple[float, float, float]:
        """Stereographic embedding onto the unit sphere in R^3.

        Chordal distance between two points equals the Euclidean distance of
        their embeddings.
        """
        z1, z2 = self.projective()
        n = abs(z1) ** 2 + abs(z2) ** 2
        w = 2.0 * z1 * z2.conjugate() / n
        return (w.real, w.imag, (abs(z1) ** 2 - abs(z2) ** 2) / n)

    def sort_key(self) -> tuple[float, float, float]:
        """Canonical total order key (used for deterministic enumeration)."""
        return self.embed_r3()

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.is_infinity:
            return "SpherePoint(inf)"
        return f"SpherePoint({self.to_complex():.12g}, {self.chart})"


INF = SpherePoint(0j, RECIPROCAL)
ZERO = SpherePoint(0j, STANDARD)
ONE = SpherePoint(1 + 0j, STANDARD)


def chordal_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Chordal distance 2|p - q| / sqrt((1+|p|^2)(1+|q|^2)), diameter 2.

    Computed projectively so poles and infinity need no special casing:
    dist = 2 |z1 w2 - z2 w1| / (|(z1,z2)| |(w1,w2)|).
    """
    z1, z2 = p.projective()
    w1, w2 = q.projective()
    zs = max(abs(z1), abs(z2))
    ws = max(abs(w1), abs(w2))
    z1, z2 = z1 / zs, z2 / zs
    w1, w2 = w1 / ws, w2 / ws
    num = 2.0 * abs(z1 * w2 - z2 * w1)
    den = math.sqrt(abs(z1) ** 2 + abs(z2) ** 2) * math.sqrt(abs(w1) ** 2 + abs(w2) ** 2)
    return num / den


def chordal_from_complex(z: complex, w: complex) -> float:
    return chordal_distance(SpherePoint.from_complex(z), SpherePoint.from_complex(w))


def sphere_points_equal(p: SpherePoint, q: SpherePoint, tol: float = 1e-12) -> bool:
    return chordal_distance(p, q) <= tol


def uniform_sphere_points(n: int, rng) -> list[SpherePoint]:
    """n points drawn uniformly from the sphere (normalized 3D Gaussians)."""
    out = []
    while len(out) < n:
        x, y, u = rng.normal(size=3)
        r = math.sqrt(x * x + y * y + u * u)
        if r < 1e-12:
            continue
        x, y, u = x / r, y / r, u / r
        # invert the stereographic embedding: z = (x + i y)/(1 - u)
        if u > 1 - 1e-12:
            out.append(INF)
        else:
            out.append(SpherePoint.from_complex(complex(x, y) / (1 - u)))
    return out


def fibonacci_sphere_points(n: int) -> list[SpherePoint]:
    """Deterministic quasi-uniform net of n sphere points (Fibonacci lattice)."""
    ga = math.pi * (3.0 - math.sqrt(5.0))
    pts = []
    for k in range(n):
        u = 1.0 - 2.0 * (k + 0.5) / n
        r = math.sqrt(max(0.0, 1.0 - u * u))
        th = ga * k
        x, y = r * math.cos(th), r * math.sin(th)
        if u > 1 - 1e-12:
            pts.append(INF)
        else:
            pts.append(SpherePoint.from_complex(complex(x, y) / (1 - u)))
    return pts
