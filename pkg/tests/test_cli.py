import json
import os
from pathlib import Path

import numpy as np
import pytest

from corrdyn.cli import main
from corrdyn.graphpoly import GraphPolynomial
from corrdyn.measures import WeightedCloud
from corrdyn.raster import RasterImage

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(args, capsys=None):
    code = main(args)
    return code


def test_cov_command(tmp_path, capsys):
    cfg = tmp_path / "cov.json"
    cfg.write_text(
        json.dumps(
            {
                "map": {"num": [[0, 0], [-3, 0], [0, 0], [1, 0]], "den": [[1, 0]]},
                "out": str(tmp_path / "cov_out.json"),
            }
        )
    )
    assert main(["cov", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "deg_z=2 deg_w=2" in out
    gp = GraphPolynomial.from_json(json.loads((tmp_path / "cov_out.json").read_text()))
    want = np.array([[-3, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)
    assert np.allclose(gp.coeffs, want)


def test_cov_quadratic_pattern_gives_mobius_graph(tmp_path):
    # (az^2+bz+c)/(dz^2+ez+f) produces a bilinear (Moebius) graph
    cfg = tmp_path / "cov2.json"
    cfg.write_text(
        json.dumps(
            {
                "map": {
                    "num": [[-4, 0], [0, 0], [1, 0]],
                    "den": [[1, 0], [-2, 0], [1, 0]],
                },
                "out": str(tmp_path / "cov2_out.json"),
            }
        )
    )
    assert main(["cov", "--config", str(cfg)]) == 0
    gp = GraphPolynomial.from_json(json.loads((tmp_path / "cov2_out.json").read_text()))
    assert gp.deg_z == 1 and gp.deg_w == 1


def test_cov_degree_too_low_exits_one(tmp_path, capsys):
    cfg = tmp_path / "cov1.json"
    cfg.write_text(
        json.dumps({"map": {"num": [[0, 0], [1, 0]], "den": [[1, 0]]}, "out": "x.json"})
    )
    assert main(["cov", "--config", str(cfg)]) == 1


def test_parse_error_exits_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["cov", "--config", str(bad)]) == 2
    assert main(["cov", "--config", str(tmp_path / "missing.json")]) == 2


def test_orbit_command(tmp_path):
    cfg = tmp_path / "orbit.json"
    cfg.write_text(
        json.dumps(
            {
                "correspondence": {"kind": "family_a", "a": 4},
                "seeds": [[1, 0]],
                "n": 2,
                "out": str(tmp_path / "orbits.json"),
            }
        )
    )
    assert main(["orbit", "--config", str(cfg)]) == 0
    data = json.loads((tmp_path / "orbits.json").read_text())
    assert data["count"] == 3


def test_override_flag(tmp_path, capsys):
    cfg = tmp_path / "orbit.json"
    cfg.write_text(
        json.dumps(
            {
                "correspondence": {"kind": "family_a", "a": 4},
                "seeds": [[1, 0]],
                "n": 2,
                "out": str(tmp_path / "a.json"),
            }
        )
    )
    assert main(["orbit", "--config", str(cfg), "--set", "n=1"]) == 0
    data = json.loads((tmp_path / "a.json").read_text())
    assert data["n"] == 1 and data["count"] == 2


def test_equidist_rejects_exceptional_seed(tmp_path, capsys):
    cfg = tmp_path / "eq.json"
    cfg.write_text(
        json.dumps(
            {
                "correspondence": {"kind": "family_a", "a": 5},
                "seeds": [[-1, 0]],
                "generations": [3],
                "method": "full_tree",
                "out_prefix": str(tmp_path / "eq"),
            }
        )
    )
    assert main(["equidist", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "exceptional set" in err and "-1, 2" in err


def test_equidist_writes_clouds_and_distances(tmp_path):
    cfg = tmp_path / "eq.json"
    cfg.write_text(
        json.dumps(
            {
                "correspondence": {"kind": "family_a", "a": 4},
                "seeds": [[0.3, 0.2], [-3, 0]],
                "generations": [4],
                "method": "full_tree",
                "out_prefix": str(tmp_path / "eq"),
            }
        )
    )
    assert main(["equidist", "--config", str(cfg)]) == 0
    csv_text = (tmp_path / "eq_seed0_n4.csv").read_text()
    cloud = WeightedCloud.from_csv(csv_text)
    assert cloud.total_mass == pytest.approx(1.0, abs=1e-12)
    sidecar = json.loads((tmp_path / "eq_seed0_n4.json").read_text())
    assert sidecar["method"] == "full_tree"
    dist = json.loads((tmp_path / "eq_distances.json").read_text())
    assert len(dist) == 1 and dist[0]["n"] == 4


def test_limitset_unit_circle(tmp_path):
    cfg = tmp_path / "ls.json"
    out = tmp_path / "ls.ppm"
    width = height = 160
    cfg.write_text(
        json.dumps(
            {
                "correspondence": {
                    "kind": "map_graph",
                    "map": {"num": [[0, 0], [0, 0], [1, 0]], "den": [[1, 0]]},
                    "orientation": "forward",
                },
                "region": {"kind": "disk", "center": [0, 0], "radius": 1.0000001},
                "viewport": {"re_min": -1.6, "re_max": 1.6, "im_min": -1.6, "im_max": 1.6},
                "width": width,
                "height": height,
                "depth": 14,
                "out": str(out),
            }
        )
    )
    assert main(["limitset", "--config", str(cfg)]) == 0
    img = RasterImage.from_ppm(out.read_bytes())
    marked = img.pixels[:, :, 0] == 0
    ys, xs = np.nonzero(marked)
    re = -1.6 + (xs + 0.5) * 3.2 / width
    im = -1.6 + (ys + 0.5) * 3.2 / height
    r = np.hypot(re, im)
    px = 3.2 / width
    # every marked boundary pixel lies within 2 pixels of the unit circle
    boundary = marked & ~(
        np.roll(marked, 1, 0) & np.roll(marked, -1, 0) & np.roll(marked, 1, 1) & np.roll(marked, -1, 1)
    )
    by, bx = np.nonzero(boundary)
    bre = -1.6 + (bx + 0.5) * px
    bim = -1.6 + (by + 0.5) * px
    assert np.max(np.abs(np.hypot(bre, bim) - 1.0)) < 2 * px
    # and the circle is fully covered by marked pixels
    th = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    d = np.min(
        np.hypot(bre[None, :] - np.cos(th)[:, None], bim[None, :] - np.sin(th)[:, None]),
        axis=1,
    )
    assert d.max() < 2 * px


def test_verify_command_small(tmp_path, capsys):
    cfg = tmp_path / "verify.json"
    cfg.write_text(
        json.dumps(
            {
                "suites": ["chordal_metric", "involution_square", "family_fixed_fiber"],
                "rng_seed": 0,
                "out": str(tmp_path / "verify.json.out"),
            }
        )
    )
    assert main(["verify", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "verify.json.out").read_text())
    assert report["passed"] is True
    assert {r["name"] for r in report["results"]} == {
        "chordal_metric",
        "involution_square",
        "family_fixed_fiber",
    }


def test_ppm_round_trip(tmp_path):
    px = np.zeros((3, 5, 3), dtype=np.uint8)
    px[1, 2] = (7, 8, 9)
    img = RasterImage(5, 3, px)
    back = RasterImage.from_ppm(img.to_ppm())
    assert np.array_equal(img.pixels, back.pixels)


def test_unknown_command_usage():
    assert main(["frobnicate"]) == 2
