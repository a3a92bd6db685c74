"""Limit-set rasterization and PPM output.

A pixel is marked when some branch of the forward multivalued orbit of its
center stays inside the user-supplied region for the requested number of
steps (branches leaving the region are pruned).  Escape depth is encoded in
gray levels, survivors in black, like a classical escape-time renderer.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field

import numpy as np

from .correspondence import Correspondence
from .families import RegionSpec
from .sphere import SpherePoint


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB image with viewport metadata."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("raster dimensions must be positive")
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError("pixel grid shape mismatch")
        object.__setattr__(self, "pixels", px)

    def to_ppm(self) -> bytes:
        header = f"P6\n{self.width} {self.height}\n255\n".encode()
        return header + self.pixels.tobytes()

    @staticmethod
    def from_ppm(data: bytes) -> "RasterImage":
        parts = data.split(b"\n", 3)
        if parts[0] != b"P6":
            raise ValueError("not a binary PPM")
        w, h = (int(t) for t in parts[1].split())
        px = np.frombuffer(parts[3], dtype=np.uint8)[: w * h * 3].reshape(h, w, 3)
        return RasterImage(w, h, px.copy())


@dataclass(frozen=True)
class Viewport:
    """Axis-aligned window in standard-chart coordinates."""

    re_min: float = -2.0
    re_max: float = 2.0
    im_min: float = -2.0
    im_max: float = 2.0

    def to_json(self) -> dict:
        return {
            "re_min": self.re_min,
            "re_max": self.re_max,
            "im_min": self.im_min,
            "im_max": self.im_max,
        }

    @staticmethod
    def from_json(d) -> "Viewport":
        return Viewport(**d)


def _region_mask(region: RegionSpec, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Vectorized membership; the point at infinity is only in complements."""
    if region.kind == "complement":
        return ~_region_mask(region.of, z1, z2)
    finite = np.abs(z2) > 1e-15 * np.abs(z1)
    w = np.where(finite, z1 / np.where(finite, z2, 1.0), 0.0)
    if region.kind == "disk":
        inside = np.abs(w - region.center) < region.radius
    else:
        inside = ((w - region.point) * np.conj(region.normal)).real > 0
    return inside & finite


def render_survival_set(
    C: Correspondence,
    region: RegionSpec,
    viewport: Viewport,
    width: int,
    height: int,
    depth: int = 18,
    frontier_cap: int = 64,
    threads: int = 1,
) -> RasterImage:
    """Mark pixels whose forward orbit admits a branch staying in the region.

    Branches are pruned on leaving the region and deduplicated on a quarter
    pixel grid; at most frontier_cap branches per pixel are kept (canonical
    order), so the render cost is linear in depth.  Deterministic for fixed
    arguments regardless of the thread count.
    """
    xs = viewport.re_min + (np.arange(width) + 0.5) * (viewport.re_max - viewport.re_min) / width
    ys = viewport.im_min + (np.arange(height) + 0.5) * (viewport.im_max - viewport.im_min) / height
    quantum = max(
        (viewport.re_max - viewport.re_min) / width,
        (viewport.im_max - viewport.im_min) / height,
    ) / 4.0

    def do_rows(row_block):
        depths = np.zeros((len(row_block), width), dtype=np.int32)
        for i, row in enumerate(row_block):
            z = xs + 1j * ys[row]
            pix = np.arange(width)
            z1 = z.astype(complex)
            z2 = np.ones_like(z1)
            alive = _region_mask(region, z1, z2)
            pix, z1, z2 = pix[alive], z1[alive], z2[alive]
            depths[i, :] = 0
            reached = np.zeros(width, dtype=np.int32)
            reached[pix] = 0
            for step in range(1, depth + 1):
                if pix.size == 0:
                    break
                W1, W2, _ = C.forward_batch(z1, z2)
                d1 = W1.shape[-1]
                npix = np.repeat(pix, d1)
                c1, c2 = W1.ravel(), W2.ravel()
                good = np.isfinite(c1.real) & np.isfinite(c2.real)
                inside = np.zeros_like(good)
                inside[good] = _region_mask(region, c1[good], c2[good])
                keep = good & inside
                npix, c1, c2 = npix[keep], c1[keep], c2[keep]
                if npix.size:
                    # dedupe per pixel on a quarter-pixel grid, canonical order
                    finite = np.abs(c2) > 1e-15 * np.abs(c1)
                    w = np.where(finite, c1 / np.where(finite, c2, 1.0), np.inf)
                    qx = np.where(finite, np.round(w.real / quantum), 2 ** 31).astype(np.int64)
                    qy = np.where(finite, np.round(w.imag / quantum), 2 ** 31).astype(np.int64)
                    order = np.lexsort((qy, qx, npix))
                    npix, c1, c2, qx, qy = (
                        npix[order], c1[order], c2[order], qx[order], qy[order]
                    )
                    first = np.ones(npix.size, dtype=bool)
                    first[1:] = (
                        (npix[1:] != npix[:-1])
                        | (qx[1:] != qx[:-1])
                        | (qy[1:] != qy[:-1])
                    )
                    npix, c1, c2 = npix[first], c1[first], c2[first]
                    # cap branches per pixel (running index within each group)
                    idx = np.arange(npix.size)
                    start = np.ones(npix.size, dtype=bool)
                    start[1:] = npix[1:] != npix[:-1]
                    group_start = np.maximum.accumulate(np.where(start, idx, 0))
                    under = (idx - group_start) < frontier_cap
                    npix, c1, c2 = npix[under], c1[under], c2[under]
                survivors = np.unique(npix)
                reached[survivors] = step
                pix, z1, z2 = npix, c1, c2
            depths[i, :] = reached
        return depths

    blocks = [list(range(r, min(r + 16, height))) for r in range(0, height, 16)]
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(do_rows, blocks))
    else:
        results = [do_rows(b) for b in blocks]
    depth_map = np.vstack(results)

    # grayscale: survivors black, immediate escapes white
    frac = np.clip(depth_map.astype(float) / depth, 0.0, 1.0)
    gray = np.round(255.0 * (1.0 - frac)).astype(np.uint8)
    pixels = np.stack([gray, gray, gray], axis=-1)
    meta = {
        "chart": "standard",
        "viewport": viewport.to_json(),
        "depth": depth,
        "frontier_cap": frontier_cap,
    }
    return RasterImage(width, height, pixels, meta)
