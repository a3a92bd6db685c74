"""Command-line front end.

    corrdyn <cov|orbit|entropy|equidist|limitset|verify> --config FILE [--set k=v ...]

Exit codes: 0 success, 1 math/runtime error, 2 usage or parse error.  The
CORRDYN_THREADS environment variable caps parallelism; outputs are byte
identical for identical configs regardless of the thread count.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import verify as verify_mod
from .config import (
    build_correspondence,
    load_config,
    require,
    thread_count,
    write_bytes,
    write_json,
    write_text,
)
from .correspondence import cov_graph
from .entropy import EntropyProtocol, entropy_estimate, enumerate_orbits
from .errors import CorrdynError, SeedRejected, UsageError
from .families import RegionSpec, exceptional_seeds
from .measures import (
    WeightedCloud,
    energy_distance,
    pullback_dirac_mc,
    pullback_dirac_tree_levels,
)
from .rational import RationalMap
from .raster import Viewport, render_survival_set
from .sphere import SpherePoint, chordal_distance


def cmd_cov(cfg: dict) -> int:
    """Write the deleted-covering graph polynomial of a rational map."""
    R = RationalMap.from_json(require(cfg, "map"))
    gp = cov_graph(R)
    out = require(cfg, "out")
    write_json(out, gp.to_json())
    print(f"deg_z={gp.deg_z} deg_w={gp.deg_w} (bidegree {gp.deg_w}:{gp.deg_z})")
    return 0


def cmd_orbit(cfg: dict) -> int:
    """Enumerate forward orbit tuples from explicit seeds."""
    C = build_correspondence(require(cfg, "correspondence"))
    seeds = [_parse_point(p) for p in require(cfg, "seeds")]
    n = int(require(cfg, "n"))
    budget = int(cfg.get("budget", 2 ** 20))
    orbits = enumerate_orbits(C, seeds, n, budget)
    data = {
        "n": n,
        "count": len(orbits),
        "orbits": [
            {
                "points": [[p.value.real, p.value.imag, p.chart] for p in o.points],
                "labels": list(o.labels) if o.labels is not None else None,
            }
            for o in orbits
        ],
    }
    write_json(require(cfg, "out"), data)
    print(f"orbits={len(orbits)} depth={n}")
    return 0


def cmd_entropy(cfg: dict) -> int:
    """Separated-orbit entropy report (both counting variants).

    An optional "metric" section adds a preimage-refined partition-entropy
    estimate computed on a pullback cloud of the same correspondence.
    """
    C = build_correspondence(require(cfg, "correspondence"))
    protocol = EntropyProtocol.from_json(cfg.get("protocol", {}))
    reports = entropy_estimate(C, protocol)
    payload = {v: r.to_json() for v, r in reports.items()}
    if cfg.get("estimate_inverse", False):
        inv = entropy_estimate(C.transpose(), protocol)
        payload.update({f"{v}_inverse": r.to_json() for v, r in inv.items()})
    if "metric" in cfg:
        m = cfg["metric"]
        from .measures import GridPartition, metric_entropy_estimate, pullback_dirac_tree

        cloud = pullback_dirac_tree(
            C, _parse_point(require(m, "cloud_seed")), int(require(m, "cloud_generation"))
        )
        part = GridPartition(*[int(x) for x in m.get("partition", [4, 4])])
        per_n, slope = metric_entropy_estimate(
            C, cloud, part, int(m.get("N_max", 6)), int(m.get("budget", 2 ** 18))
        )
        payload["metric_entropy"] = {
            "per_N": [[n, h] for n, h in per_n],
            "estimate": slope,
            "partition": [part.n_lat, part.n_lon],
        }
    if "report_notes" in cfg:
        payload["notes"] = cfg["report_notes"]
    write_json(require(cfg, "out"), payload)
    flags = sorted({f.split("@")[0] for r in reports.values() for f in r.flags})
    print(
        f"estimate KT={reports['KT'].estimate:.6f} DS={reports['DS'].estimate:.6f} "
        f"cap={reports['KT'].cap:.6f} flags={','.join(flags) if flags else 'none'}"
    )
    return 0


def cmd_equidist(cfg: dict) -> int:
    """Pullback clouds from one or more seeds, plus an energy-distance table."""
    spec = require(cfg, "correspondence")
    C = build_correspondence(spec)
    seeds = [_parse_point(p) for p in require(cfg, "seeds")]
    generations = [int(n) for n in require(cfg, "generations")]
    method = cfg.get("method", "full_tree")
    out_prefix = require(cfg, "out_prefix")
    if spec.get("kind") == "family_a":
        a = spec["a"]
        a = complex(a) if isinstance(a, (int, float)) else complex(a[0], a[1])
        for bad in exceptional_seeds(a):
            for s in seeds:
                if chordal_distance(s, SpherePoint.from_complex(bad)) < 1e-9:
                    raise SeedRejected(
                        f"seed {bad} lies in the exceptional set "
                        f"{{-1, 2}} of the parameter a = {a.real:g}; "
                        "pullbacks from it do not equidistribute"
                    )
    clouds: dict = {}
    for si, seed in enumerate(seeds):
        if method == "full_tree":
            levels = pullback_dirac_tree_levels(
                C, seed, generations, budget=int(cfg.get("budget", 2 ** 20))
            )
        elif method == "monte_carlo":
            if "rng_seed" not in cfg:
                raise UsageError("rng_seed is mandatory for monte_carlo runs")
            levels = {
                n: pullback_dirac_mc(
                    C, seed, n, int(cfg.get("n_paths", 10000)), int(cfg["rng_seed"])
                )
                for n in generations
            }
        else:
            raise UsageError(f"unknown method {method!r}")
        for n, cloud in levels.items():
            base = f"{out_prefix}_seed{si}_n{n}"
            write_text(base + ".csv", cloud.to_csv())
            write_json(base + ".json", {**cloud.provenance, "generation": n})
            clouds[(si, n)] = cloud
    table = []
    for n in generations:
        for i in range(len(seeds)):
            for j in range(i + 1, len(seeds)):
                table.append(
                    {
                        "n": n,
                        "seed_i": i,
                        "seed_j": j,
                        "energy_distance": energy_distance(clouds[(i, n)], clouds[(j, n)]),
                    }
                )
    write_json(out_prefix + "_distances.json", table)
    for row in table:
        print(
            f"n={row['n']} seeds ({row['seed_i']},{row['seed_j']}): "
            f"energy_distance={row['energy_distance']:.6f}"
        )
    return 0


def cmd_limitset(cfg: dict) -> int:
    """Render the region-survival set of the forward multivalued orbit."""
    C = build_correspondence(require(cfg, "correspondence"))
    region = RegionSpec.from_json(require(cfg, "region"))
    viewport = Viewport.from_json(cfg.get("viewport", {}))
    img = render_survival_set(
        C,
        region,
        viewport,
        width=int(cfg.get("width", 256)),
        height=int(cfg.get("height", 256)),
        depth=int(cfg.get("depth", 18)),
        frontier_cap=int(cfg.get("frontier_cap", 64)),
        threads=thread_count(),
    )
    out = require(cfg, "out")
    write_bytes(out, img.to_ppm())
    print(f"raster {img.width}x{img.height} depth={img.metadata['depth']} -> {out}")
    return 0


def cmd_verify(cfg: dict) -> int:
    """Run the module invariant suites; exit 1 when any suite fails."""
    names = cfg.get("suites", "all")
    rng_seed = int(cfg.get("rng_seed", 0))
    report = verify_mod.run_suites(names, rng_seed)
    if "out" in cfg:
        write_json(cfg["out"], report)
    for r in report["results"]:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}")
    print("overall:", "PASS" if report["passed"] else "FAIL")
    return 0 if report["passed"] else 1


def _parse_point(p) -> SpherePoint:
    if isinstance(p, (int, float)):
        return SpherePoint.from_complex(complex(p))
    if isinstance(p, str) and p in ("inf", "infinity"):
        return SpherePoint.infinity()
    if isinstance(p, (list, tuple)) and len(p) == 2:
        return SpherePoint.from_complex(complex(p[0], p[1]))
    raise UsageError(f"cannot parse point {p!r}")


COMMANDS = {
    "cov": cmd_cov,
    "orbit": cmd_orbit,
    "entropy": cmd_entropy,
    "equidist": cmd_equidist,
    "limitset": cmd_limitset,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="corrdyn",
        description="dynamics of deleted covering correspondences on the sphere",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field (dot-separated keys, JSON values)",
    )
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, args.overrides)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CorrdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
