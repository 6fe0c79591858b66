"""Command line driver for the probes and figures, with JSON reports.

Exit codes: 0 every verdict passed, 1 some verdict failed, 2 bad usage or
configuration, 3 a runtime or I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import tempfile
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (accessibility, completeness_probe, degree_of_inaccessibility, derive_reeb_graph,
                       encoded_graph, frame_completeness_probe, get_flow, hyperbolicity_probe,
                       prolongational_limit, quasi_parallel_obstruction, reachable_sets, whisker_lower_bound)
from .domains import DomainError, WhiskerSpec, WhiskerSpecError, default_whisker
from .foliations import (band_u_structure, frame_structure, hyperbola_v_structure, standard_structure,
                         whisker_structure)
from .plane_core import Point
from .render import emit_svg, render_reachability, render_structure

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULTS = {
    "schema": 1,
    "structure": "band-u",
    "lambda": 0.5,
    "translation": 1.0,
    "humps": 3,
    "whisker": None,
    "window": None,
    "seeds": None,
    "resolution": 400,
    "n_max": 16,
    "pairs": 1000,
    "epsilons": [1e-2, 1e-3, 1e-4, 1e-5],
    "fiber_x": 1.0,
    "tau_start": None,
    "reaches": [1.0, 2.0, 4.0, 8.0],
    "hyper_n_max": None,
    "hyper_samples": 1000,
    "rtol": 1e-9,
    "length_tol": 1e-10,
    "seed": 0,
    "width_px": 600,
    "out": None,
    "report": None,
    "reach": False,
    "from": None,
    "to": None,
    "degree": False,
    "flow": "reeb1",
    "obstruction": False,
    "derive": False,
    "expect": None,
    "jplus": None,
    "jminus": None,
    "deltas": None,
    "t_max": None,
    "grid_tol": 0.05,
}

RENDER_WINDOWS = {
    "band-u": (-0.5, 4.0, -0.5, 3.5),
    "hyperbola-v": (-3.0, 3.0, -3.0, 3.0),
    "standard-plane": (-2.0, 2.0, -2.0, 2.0),
    "frame": (-0.25, 1.25, -1.0, 2.0),
}
ACCESS_WINDOWS = {
    "band-u": (0.5, 4.0, 0.25, 4.0),
    "hyperbola-v": (-4.0, 4.0, -4.0, 4.0),
    "standard-plane": (-2.0, 2.0, -2.0, 2.0),
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


def _schema(name: str) -> dict:
    return json.loads(resources.files("anosov_plane").joinpath("schemas", name).read_text(encoding="utf-8"))


def validate_config(cfg: dict) -> dict:
    import jsonschema

    validator = jsonschema.Draft202012Validator(_schema("config.schema.json"))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        e = errors[0]
        where = ".".join(["config"] + [str(p) for p in e.absolute_path])
        raise ConfigError(f"{where}: {e.message}")
    w = cfg.get("window")
    if w is not None and not (w[0] < w[1] and w[2] < w[3]):
        raise ConfigError("config.window: need xmin < xmax and ymin < ymax")
    if cfg.get("whisker") is not None:
        try:
            WhiskerSpec.from_dict(cfg["whisker"])
        except (WhiskerSpecError, TypeError) as exc:
            raise ConfigError(f"config.whisker: {exc}") from None
    return cfg


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {path} is not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
        if "schema" not in data:
            raise ConfigError("config.schema: required field missing (use 1)")
        cfg.update(data)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(cfg)


def _whisker_spec(cfg: dict) -> WhiskerSpec:
    if cfg["whisker"] is not None:
        return WhiskerSpec.from_dict(cfg["whisker"])
    return default_whisker(cfg["humps"])


def build_structure(cfg: dict):
    name = cfg["structure"]
    if name == "band-u":
        return band_u_structure()
    if name == "hyperbola-v":
        return hyperbola_v_structure()
    if name == "standard-plane":
        return standard_structure()
    if name == "frame":
        return frame_structure(cfg["lambda"], cfg["translation"])
    return whisker_structure(_whisker_spec(cfg))


def _parse_point(text: str, cfg: dict, field: str) -> Point:
    text = text.strip()
    if text[:1] in ("p", "P") and text[1:].isdigit():
        if cfg["structure"] != "whisker":
            raise ConfigError(f"config.{field}: marked points p<k> exist only for the whisker structure")
        pts = _whisker_spec(cfg).marked_points()
        k = int(text[1:])
        if k >= len(pts):
            raise ConfigError(f"config.{field}: p{k} does not exist (have p0..p{len(pts) - 1})")
        return pts[k]
    try:
        x, y = (float(v) for v in text.split(","))
        return Point(x, y)
    except ValueError:
        raise ConfigError(f"config.{field}: expected 'x,y' or 'p<k>', got {text!r}") from None


def _window(cfg: dict, table: dict) -> tuple:
    if cfg["window"] is not None:
        return tuple(cfg["window"])
    name = cfg["structure"]
    if name == "whisker":
        spec = _whisker_spec(cfg)
        top = max(spec.extrema_y) + 0.2
        return (1.0, 2.0, 0.5, top) if table is ACCESS_WINDOWS else (0.5, 3.0, 0.0, top + 0.1)
    if name not in table:
        raise ConfigError(f"config.structure: {name} is not supported by this command")
    return table[name]


def _default_seeds(cfg: dict) -> list[Point]:
    name = cfg["structure"]
    if name == "band-u":
        return [Point(x, 1.5 / x) for x in (1.0, 1.25, 1.5, 2.0)]
    if name == "hyperbola-v":
        return [Point(0.0, 0.0)] + [Point(s * x, 0.5 / x) for s in (1, -1) for x in (0.5, 1.0, 2.0)]
    if name == "standard-plane":
        return [Point(x, y) for x in (-1.0, 0.0, 1.0) for y in (-1.0, 0.0, 1.0)]
    if name == "frame":
        return [Point(x, y) for x in np.linspace(0.05, 0.95, 10) for y in (0.0, 1.0)]
    return [Point(1.5, 1.2)] + _whisker_spec(cfg).marked_points()


def _versions() -> dict:
    import scipy
    import shapely

    return {"anosov_plane": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "shapely": shapely.__version__}


def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, Point):
        return [obj.x, obj.y]
    return obj


def _write_atomic(path: Path, text: str) -> None:
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent if str(path.parent) else ".")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report: {exc.strerror}", str(path)) from exc


# commands ------------------------------------------------------------------

def cmd_render(cfg: dict, results: dict, verdicts: dict, timings: dict) -> None:
    if not cfg["out"]:
        raise ConfigError("config.out: render needs an output path (--out)")
    s = build_structure(cfg)
    t0 = time.perf_counter()
    if cfg["reach"]:
        if not s.line_based:
            raise ConfigError("config.reach: reachability needs a line-based structure")
        window = _window(cfg, ACCESS_WINDOWS)
        p = _parse_point(cfg["from"] or ("p0" if cfg["structure"] == "whisker" else "0,0"), cfg, "from")
        grid = reachable_sets(s, p, window, cfg["resolution"], cfg["n_max"])
        scene = render_reachability(grid, cfg["width_px"])
        results["levels"] = len(grid.levels) - 1
    else:
        window = _window(cfg, RENDER_WINDOWS)
        seeds = [Point(*v) for v in cfg["seeds"]] if cfg["seeds"] is not None else _default_seeds(cfg)
        try:
            scene = render_structure(s, window, seeds, cfg["width_px"])
        except DomainError as exc:
            raise ConfigError(f"config.seeds: {exc}") from None
        results["seeds"] = len(seeds)
    emit_svg(scene, cfg["out"])
    timings["render"] = time.perf_counter() - t0
    results.update({"out": str(cfg["out"]), "window": list(window),
                    "paths": scene.count("curves"), "rects": scene.count("rects")})
    verdicts["render"] = "pass"


def cmd_verify(cfg: dict, results: dict, verdicts: dict, timings: dict) -> None:
    name = cfg["structure"]
    if name == "whisker":
        raise ConfigError("config.structure: the whisker metric is not constructed, so verify does not apply")
    s = build_structure(cfg)
    rng = np.random.default_rng(cfg["seed"])
    t0 = time.perf_counter()
    if name in ("band-u", "hyperbola-v"):
        for side in ("upper", "lower"):
            try:
                rep = completeness_probe(s.metric, cfg["fiber_x"], cfg["epsilons"], side=side,
                                         tau_start=cfg["tau_start"], tol=cfg["length_tol"])
            except DomainError as exc:
                raise ConfigError(f"config.fiber_x: {exc}") from None
            results[f"completeness_{side}"] = rep.to_dict()
            verdicts[f"completeness_{side}"] = "pass" if rep.verdict == "diverges" else "fail"
    elif name == "frame":
        for side, rep in frame_completeness_probe(s.metric, cfg["reaches"], tol=cfg["length_tol"]).items():
            results[f"completeness_{side}"] = rep.to_dict()
            verdicts[f"completeness_{side}"] = "pass" if rep.verdict == "diverges" else "fail"
    else:
        results["completeness"] = {"note": "euclidean metric, complete"}
    timings["completeness"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    n_max = cfg["hyper_n_max"] or (20 if s.line_based else 10)
    rep = hyperbolicity_probe(s, n_max, cfg["hyper_samples"], rng, cfg["rtol"])
    results["hyperbolicity"] = rep.to_dict()
    verdicts["hyperbolicity"] = rep.verdict
    timings["hyperbolicity"] = time.perf_counter() - t0


def cmd_access(cfg: dict, results: dict, verdicts: dict, timings: dict) -> None:
    s = build_structure(cfg)
    if not s.line_based:
        raise ConfigError("config.structure: accessibility search needs line-based charts")
    window = _window(cfg, ACCESS_WINDOWS)
    results["window"] = list(window)
    results["resolution"] = cfg["resolution"]
    if not cfg["degree"] and not (cfg["from"] and cfg["to"]):
        raise ConfigError("config.from: access needs --from and --to, or --degree")
    if cfg["from"] and cfg["to"]:
        p, q = _parse_point(cfg["from"], cfg, "from"), _parse_point(cfg["to"], cfg, "to")
        t0 = time.perf_counter()
        try:
            chain = accessibility(s, p, q, window, cfg["resolution"], cfg["n_max"])
        except DomainError as exc:
            raise ConfigError(f"config.from: {exc}") from None
        timings["access"] = time.perf_counter() - t0
        res = {"from": [p.x, p.y], "to": [q.x, q.y], "found": chain is not None,
               "upper_bound": chain.length if chain else None,
               "chain": [[c.x, c.y] for c in chain.points] if chain else None,
               "arc_types": chain.arc_types if chain else None}
        ok = chain is not None
        names = [cfg["from"].strip().lower(), cfg["to"].strip().lower()]
        if cfg["structure"] == "whisker" and all(n.startswith("p") and n[1:].isdigit() for n in names):
            i, k = sorted(int(n[1:]) for n in names)
            if i == 0 and k >= 1:
                lb = whisker_lower_bound(_whisker_spec(cfg), k)
                res["lower_bound"] = lb
                ok = ok and chain.length == lb
        results["access"] = res
        verdicts["access"] = "pass" if ok else "fail"
    if cfg["degree"]:
        extra = _whisker_spec(cfg).marked_points() if cfg["structure"] == "whisker" else ()
        t0 = time.perf_counter()
        est = degree_of_inaccessibility(s, window, cfg["resolution"], cfg["pairs"], cfg["n_max"],
                                        np.random.default_rng(cfg["seed"]), extra_points=extra)
        timings["degree"] = time.perf_counter() - t0
        results["degree"] = {"max_observed": est.max_observed, "saturated": est.saturated,
                             "n_pairs": est.n_pairs, "histogram": est.histogram}
        verdicts["degree"] = "fail" if est.saturated else "pass"


def cmd_topology(cfg: dict, results: dict, verdicts: dict, timings: dict) -> None:
    flow = get_flow(cfg["flow"])
    results["flow"] = flow.name
    kw = {"grid_tol": cfg["grid_tol"]}
    if cfg["deltas"] is not None:
        kw["deltas"] = cfg["deltas"]
    if cfg["t_max"] is not None:
        kw["t_max"] = cfg["t_max"]
    if cfg["window"] is not None:
        kw["window"] = tuple(cfg["window"])
    did = False
    if cfg["obstruction"]:
        did = True
        t0 = time.perf_counter()
        g = encoded_graph(flow.name)
        value = quasi_parallel_obstruction(g)
        res = {"graph": g.to_dict(), "value": value}
        if cfg["derive"]:
            dg = derive_reeb_graph(flow, **kw)
            res["derived_graph"] = dg.to_dict()
            res["derived_value"] = quasi_parallel_obstruction(dg)
            res["derived_agrees"] = set(dg.limit_relations) == set(g.limit_relations)
        timings["obstruction"] = time.perf_counter() - t0
        results["obstruction"] = res
        ok = res.get("derived_agrees", True)
        if cfg["expect"] is not None:
            ok = ok and value == (cfg["expect"] == "true")
        verdicts["obstruction"] = "pass" if ok else "fail"
    for key, direction in (("jplus", "forward"), ("jminus", "backward")):
        if cfg[key] is None:
            continue
        did = True
        p = _parse_point(cfg[key], cfg, key)
        t0 = time.perf_counter()
        J = prolongational_limit(flow, p, direction, **kw)
        timings[key] = time.perf_counter() - t0
        tol = J.grid_tol
        clusters = [sx.name for sx in flow.separatrices if int(J.near_line(sx.x, tol).sum()) > 0]
        off = int(len(J.samples) - sum(int(J.near_line(sx.x, tol).sum()) for sx in flow.separatrices))
        d = J.to_dict()
        d.pop("samples")
        d.update({"clusters": clusters, "off_separatrix_samples": off,
                  "x_range": [float(J.samples[:, 0].min()), float(J.samples[:, 0].max())] if len(J.samples) else None})
        results[key] = d
        verdicts[key] = "pass"
    if not did:
        raise ConfigError("config.obstruction: topology needs --obstruction, --jplus or --jminus")


COMMANDS = {"render": cmd_render, "verify": cmd_verify, "access": cmd_access, "topology": cmd_topology}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anosov-plane", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--structure", choices=["band-u", "hyperbola-v", "whisker", "frame", "standard-plane"])
        p.add_argument("--lambda", dest="lambda", type=float, help="frame contraction rate, 0 < lambda < 1")
        p.add_argument("--translation", type=float, help="frame translation distance d")
        p.add_argument("--humps", type=int, help="whisker extrema count N")
        p.add_argument("--window", type=_floats(4), help="xmin,xmax,ymin,ymax")
        p.add_argument("--resolution", type=int, help="grid cells per axis")
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--seed", type=int, help="sampling RNG seed")
        p.add_argument("--report", help="write the JSON report here (default: stdout)")

    p = sub.add_parser("render", help="write an SVG portrait")
    common(p)
    p.add_argument("--out")
    p.add_argument("--seeds", type=_points, help="x,y;x,y;... leaf seeds")
    p.add_argument("--reach", action="store_true", default=None, help="draw reachability levels instead")
    p.add_argument("--from", dest="from")
    p.add_argument("--width", dest="width_px", type=int)

    p = sub.add_parser("verify", help="completeness and hyperbolicity probes")
    common(p)
    p.add_argument("--epsilons", type=_floats(None))
    p.add_argument("--fiber-x", dest="fiber_x", type=float)
    p.add_argument("--tau-start", dest="tau_start", type=float)
    p.add_argument("--reaches", type=_floats(None))
    p.add_argument("--hyper-n-max", dest="hyper_n_max", type=int)
    p.add_argument("--samples", dest="hyper_samples", type=int)
    p.add_argument("--rtol", type=float)

    p = sub.add_parser("access", help="leaf-chain accessibility")
    common(p)
    p.add_argument("--from", dest="from")
    p.add_argument("--to")
    p.add_argument("--degree", action="store_true", default=None)
    p.add_argument("--pairs", type=int)

    p = sub.add_parser("topology", help="prolongational limits and the quasi-parallel obstruction")
    p.add_argument("--config")
    p.add_argument("--flow", choices=["reeb1", "reeb2-same-orientation", "reeb2-opposite", "frame-unstable"])
    p.add_argument("--obstruction", action="store_true", default=None)
    p.add_argument("--derive", action="store_true", default=None, help="also derive the graph numerically")
    p.add_argument("--expect", choices=["true", "false"])
    p.add_argument("--jplus")
    p.add_argument("--jminus")
    p.add_argument("--deltas", type=_floats(None))
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--grid-tol", dest="grid_tol", type=float)
    p.add_argument("--window", type=_floats(4))
    p.add_argument("--report")
    return ap


def _floats(n):
    def parse(text):
        try:
            vals = [float(v) for v in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
        if n is not None and len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} numbers, got {len(vals)}")
        return vals
    return parse


def _points(text):
    out = []
    for part in filter(None, text.split(";")):
        out.append(_floats(2)(part))
    return out


_VALUE_FLAGS = {"--window", "--seeds", "--from", "--to", "--jplus", "--jminus", "--epsilons", "--deltas",
                "--reaches", "--tau-start", "--fiber-x"}


def _glue_negative_values(argv: list[str]) -> list[str]:
    # argparse reads "-0.5,4,..." as an option; glue such values to their flag
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1][:1] == "-" and argv[i + 1][1:2].isdigit():
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def run(argv=None) -> tuple[int, dict | None]:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    raw = vars(args)
    command = raw.pop("command")
    cfg_path = raw.pop("config", None)
    try:
        cfg = load_config(cfg_path, raw)
    except ConfigError as exc:
        print(f"anosov-plane {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    results, verdicts, timings = {}, {}, {}
    t0 = time.perf_counter()
    try:
        COMMANDS[command](cfg, results, verdicts, timings)
    except (ConfigError, WhiskerSpecError) as exc:
        print(f"anosov-plane {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    except OSError as exc:
        print(f"anosov-plane {command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME, None
    timings["total"] = time.perf_counter() - t0
    ok = bool(verdicts) and all(v == "pass" for v in verdicts.values())
    report = _clean({"schema": 1, "command": command, "config": cfg, "results": results,
                     "verdicts": verdicts, "ok": ok, "versions": _versions(), "timings": timings})
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    try:
        if cfg["report"]:
            _write_atomic(Path(cfg["report"]), text)
            for k, v in verdicts.items():
                print(f"{k}: {v}")
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"anosov-plane {command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME, report
    return (EXIT_OK if ok else EXIT_FAIL), report


def main(argv=None) -> int:
    return run(argv)[0]


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
