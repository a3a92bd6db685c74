"""The concrete families studied by the package.

* the one-parameter family: the involution j_a(z) = ((a+1)z - 2a)/(2z - (a+1))
  composed with the deleted covering correspondence of Q(z) = z^3 - 3z
  (covering factor applied first), a (2:2) correspondence fixing z = 1;
* compositions of two deleted covering correspondences of rational maps;
* the dictionary between involutions and quadratic rational maps;
* Monte-Carlo checking of Klein combination pair candidates;
* Taylor data of the single-valued branch through the fixed point (1, 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .correspondence import Correspondence, compose, deleted_covering, mobius_correspondence
from .errors import BadParameter, BranchAmbiguity, DegreeMismatch, NotAnInvolution
from .polynomials import ComplexPolynomial
from .rational import MobiusMap, RationalMap, mobius_apply, mobius_is_involution, polynomial_map
from .sphere import SpherePoint, chordal_distance, uniform_sphere_points

CUBIC_CHEBYSHEV = polynomial_map([0, -3, 0, 1])  # z^3 - 3z


@dataclass(frozen=True)
class FamilyParameterA:
    """Parameter of the one-parameter family; a = 1 is excluded.

    in_K_hint may be set to "known_in_K" only for real a in (1, 4], the range
    where a Klein combination pair is known to exist.
    """

    a: complex
    in_K_hint: str = "unknown"

    def __post_init__(self):
        a = complex(self.a)
        object.__setattr__(self, "a", a)
        if abs(a - 1) <= 1e-12:
            raise BadParameter("parameter a = 1 is excluded")
        if self.in_K_hint not in ("known_in_K", "unknown"):
            raise BadParameter(f"bad hint {self.in_K_hint!r}")
        if self.in_K_hint == "known_in_K":
            if abs(a.imag) > 1e-12 or not (1 < a.real <= 4):
                raise BadParameter("known_in_K requires real a in (1, 4]")

    @staticmethod
    def of(a) -> "FamilyParameterA":
        a = complex(a)
        hint = "known_in_K" if abs(a.imag) <= 1e-12 and 1 < a.real <= 4 else "unknown"
        return FamilyParameterA(a, hint)


def _param(a) -> complex:
    if isinstance(a, FamilyParameterA):
        return a.a
    a = complex(a)
    if abs(a - 1) <= 1e-12:
        raise BadParameter("parameter a = 1 is excluded")
    return a


def family_involution(a) -> MobiusMap:
    """The involution j_a(z) = ((a+1)z - 2a)/(2z - (a+1)); fixes 1 and a."""
    av = _param(a)
    return MobiusMap(av + 1, -2 * av, 2, -(av + 1))


def family_correspondence(a) -> Correspondence:
    """The (2:2) correspondence j_a after the deleted covering of z^3 - 3z."""
    av = _param(a)
    return compose(
        mobius_correspondence(family_involution(av), name=f"j[{av:g}]"),
        deleted_covering(CUBIC_CHEBYSHEV, name="cov3"),
    )


def composed_covering_pair(R: RationalMap, S: RationalMap) -> Correspondence:
    """Composition cov(R) o cov(S), the covering factor of S applied first."""
    return compose(deleted_covering(R, name="covR"), deleted_covering(S, name="covS"))


def exceptional_seeds(a) -> list[complex]:
    """Seeds excluded from equidistribution runs: {-1, 2} at a = 5, else none."""
    av = _param(a)
    if abs(av - 5) <= 1e-12:
        return [-1 + 0j, 2 + 0j]
    return []


# ---------------------------------------------------------------------------
# involution <-> quadratic dictionary
# ---------------------------------------------------------------------------

def quadratic_to_involution(R: RationalMap) -> MobiusMap:
    """Covering involution of a degree-2 rational map.

    For R = (a z^2 + b z + c)/(d z^2 + e z + f) the deleted covering relation
    is linear in each variable and the induced map is
    z -> ((cd - af) z + (ce - bf)) / ((ae - bd) z - (cd - af)).
    """
    if R.degree != 2:
        raise DegreeMismatch("quadratic_to_involution requires degree 2")
    pc = np.zeros(3, dtype=complex)
    qc = np.zeros(3, dtype=complex)
    pc[: R.numerator.coefficients.size] = R.numerator.coefficients
    qc[: R.denominator.coefficients.size] = R.denominator.coefficients
    c, b, a = pc
    f, e, d = qc
    A = c * d - a * f
    B = c * e - b * f
    Cc = a * e - b * d
    return MobiusMap(A, B, Cc, -A)


def involution_to_quadratic(J: MobiusMap) -> RationalMap:
    """A degree-2 rational map whose covering involution is J.

    The linear system cd - af = A, ce - bf = B, ae - bd = C is
    underdetermined; a normalization is chosen per branch so that all three
    equations hold exactly.  Correctness is the round trip, not coefficients.
    """
    if not mobius_is_involution(J):
        raise NotAnInvolution("input map has nonzero trace")
    A, B, Cc = J.a, J.b, J.c
    scale = max(abs(A), abs(B), abs(Cc))
    A, B, Cc = A / scale, B / scale, Cc / scale
    if abs(A) > 1e-8:
        if abs(Cc) > 1e-8:
            coeffs = (-A, 0, -B * A / Cc, 0, -Cc / A, 1)
        else:
            coeffs = (-A, -B, 0, 0, 0, 1)
    else:
        # J fixes no finite normalization with a = -A; use a denominator of
        # the form A z^2 + B z (B != 0 since the determinant is nonzero)
        coeffs = (Cc / B, 0, 1, A, B, 0)
    a, b, c, d, e, f = coeffs
    return RationalMap(ComplexPolynomial([c, b, a]), ComplexPolynomial([f, e, d]))


# ---------------------------------------------------------------------------
# branch expansion at the fixed point
# ---------------------------------------------------------------------------

def fixed_point_branch_coefficients(
    a, fit_radius: float = 0.05, n_samples: int = 64
):
    """Quadratic and quartic Taylor coefficients of the branch through (1, 1).

    The family correspondence has a single-valued branch through its fixed
    point z = 1.  The branch is tracked by continuity around a circle of
    radius fit_radius and fitted by a degree-5 polynomial in (z - 1); returns
    (c2, c4, fit_residual).
    """
    av = _param(a)
    C = family_correspondence(av)
    thetas = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    zs = 1.0 + fit_radius * np.exp(1j * thetas)
    prev = 1.0 + 0j
    ws = np.empty(n_samples, dtype=complex)
    for k, z in enumerate(zs):
        fib = C.forward(SpherePoint.from_complex(z))
        cands = []
        for p, mult in fib.points:
            if p.is_infinity:
                continue
            cands.extend([p.to_complex()] * mult)
        if not cands:
            raise BranchAmbiguity("fiber escaped to infinity during tracking")
        dists = sorted((abs(c - prev), c) for c in cands)
        if len(dists) > 1 and dists[1][0] < 4.0 * max(dists[0][0], fit_radius / 4):
            raise BranchAmbiguity(
                f"fiber points {dists[0][1]:.6g} and {dists[1][1]:.6g} too close "
                f"to disambiguate at z = {z:.6g} (fit_radius too large)"
            )
        prev = dists[0][1]
        ws[k] = prev
    V = np.vander(zs - 1.0, 6, increasing=True)
    coeffs, *_ = np.linalg.lstsq(V, ws - 1.0, rcond=None)
    fit = V @ coeffs
    residual = float(np.max(np.abs(fit - (ws - 1.0))))
    return complex(coeffs[2]), complex(coeffs[4]), residual


# ---------------------------------------------------------------------------
# regions and Klein pair checking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    """Disk, half-plane or complement region on the sphere.

    disk:       {"center": complex, "radius": r > 0}
    half_plane: {"point": complex, "normal": complex != 0}, the side
                Re((z - point) * conj(normal)) > 0
    complement: {"of": RegionSpec}
    """

    kind: str
    center: complex = 0j
    radius: float = 0.0
    point: complex = 0j
    normal: complex = 0j
    of: "RegionSpec | None" = None

    def __post_init__(self):
        if self.kind == "disk":
            if not self.radius > 0:
                raise BadParameter("disk radius must be positive")
        elif self.kind == "half_plane":
            if abs(self.normal) == 0:
                raise BadParameter("half-plane normal must be nonzero")
        elif self.kind == "complement":
            if self.of is None:
                raise BadParameter("complement needs an inner region")
        else:
            raise BadParameter(f"unknown region kind {self.kind!r}")

    def contains(self, p: SpherePoint) -> bool:
        if self.kind == "complement":
            return not self.of.contains(p)
        if p.is_infinity:
            return False
        z = p.to_complex()
        if self.kind == "disk":
            return abs(z - self.center) < self.radius
        return ((z - self.point) * np.conj(self.normal)).real > 0

    def to_json(self) -> dict:
        if self.kind == "disk":
            return {
                "kind": "disk",
                "center": [self.center.real, self.center.imag],
                "radius": self.radius,
            }
        if self.kind == "half_plane":
            return {
                "kind": "half_plane",
                "point": [self.point.real, self.point.imag],
                "normal": [self.normal.real, self.normal.imag],
            }
        return {"kind": "complement", "of": self.of.to_json()}

    @staticmethod
    def from_json(data) -> "RegionSpec":
        kind = data["kind"]
        if kind == "disk":
            return RegionSpec(
                "disk", center=complex(*data["center"]), radius=float(data["radius"])
            )
        if kind == "half_plane":
            return RegionSpec(
                "half_plane",
                point=complex(*data["point"]),
                normal=complex(*data["normal"]),
            )
        return RegionSpec("complement", of=RegionSpec.from_json(data["of"]))


def _apply_object(obj, p: SpherePoint) -> list[SpherePoint]:
    if isinstance(obj, MobiusMap):
        return [mobius_apply(obj, p)]
    if isinstance(obj, Correspondence):
        return obj.forward(p).support()
    raise BadParameter("expected a Moebius map or a correspondence")


def klein_pair_check(
    factor1,
    factor2,
    delta1: RegionSpec,
    delta2: RegionSpec,
    n_samples: int = 10_000,
    rng_seed: int = 0,
    punctures: tuple = (),
    puncture_radius: float = 1e-3,
) -> dict:
    """Monte-Carlo verdict on a Klein combination pair candidate.

    Checks that factor1 moves delta1 off itself, factor2 moves delta2 off
    itself, and that sphere-uniform samples (outside small disks around the
    declared punctures) are covered by the union.  Report only: returns a
    JSON-ready dict with witnesses, never raises on failure.
    """
    rng = np.random.default_rng(rng_seed)
    report = {
        "rng_seed": rng_seed,
        "n_samples": n_samples,
        "factor1_violations": [],
        "factor2_violations": [],
        "covering_misses": [],
    }

    def check_factor(obj, region, key):
        pts = uniform_sphere_points(n_samples, rng)
        pts = [p for p in pts if region.contains(p)]
        for p in pts:
            for img in _apply_object(obj, p):
                if region.contains(img):
                    if len(report[key]) < 16:
                        report[key].append(
                            {
                                "point": p.embed_r3(),
                                "image": img.embed_r3(),
                            }
                        )
                    else:
                        return

    check_factor(factor1, delta1, "factor1_violations")
    check_factor(factor2, delta2, "factor2_violations")

    punct = [SpherePoint.from_complex(q) if not isinstance(q, SpherePoint) else q for q in punctures]
    for p in uniform_sphere_points(n_samples, rng):
        if any(chordal_distance(p, q) < puncture_radius for q in punct):
            continue
        if not (delta1.contains(p) or delta2.contains(p)):
            if len(report["covering_misses"]) < 16:
                report["covering_misses"].append({"point": p.embed_r3()})
    report["passed"] = not (
        report["factor1_violations"]
        or report["factor2_violations"]
        or report["covering_misses"]
    )
    return report
