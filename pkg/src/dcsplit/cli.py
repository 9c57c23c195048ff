"""Command-line front end.

Every run writes ``manifest.json`` (inputs, versions, seed, tolerances),
``report.json`` (validated by ``schemas/report.schema.json``) and
``report.csv`` into the output directory.  Exit status: 0 on success, 2
when a diagnostic verdict is ``divergent``, 1 on error.
"""

from __future__ import annotations

import argparse
import logging
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .builtins import BUILTIN_KEYS, Builtin, get_builtin
from .decompose import aleksandrov_decompose
from .dctest import (
    DEFAULT_SCHEDULE,
    CurveFamily,
    dc_decompose_general,
    dc_diagnose,
    dc_diagnose_nd,
    qd_sequence_test,
    unit_square,
)
from .errors import ConfigInvalid, DCSplitError, ParseError, SchemaError
from .geometry import (
    Curve,
    Polygon,
    circle_curve,
    convex_hull_2d,
    convex_polygon_curve,
    natural_parametrize,
    sphere_section_curve,
)
from .homogeneous import dc_decompose_ph, ph_from_function, qd_point_test
from .io import csv_text, dumps, input_hash, load_fan, load_mesh, read_json, save_dcpair, sha256_bytes
from .pwl import SectorFanPH, TriangulatedPWL, lipschitz_constant, uniform_angles
from .variation import (
    curve_turn,
    derivative_variation,
    tangent_variation,
    trace,
    trace_from_values,
    turn_constants,
    variation_report,
)

log = logging.getLogger("dcsplit")

COMMANDS = ("decompose", "variation", "turn", "diagnose", "diagnose3d", "qdpoint", "qdseq")
DIAGNOSTIC_COMMANDS = ("variation", "turn", "diagnose", "diagnose3d", "qdpoint")
REPORT_FORMAT = 1
CURVE_COLUMNS = ("curve_id", "level", "n_samples", "variation", "turn", "verdict")
TOLERANCE_KEYS = ("bounded_tol", "divergent_tol", "atol", "uniform_tol")

DEFAULTS = {
    "decompose": (16, 64, 256),
    "variation": (1024, 2048, 4096, 8192, 16384),
    "turn": (1024, 2048, 4096, 8192, 16384),
    "diagnose": DEFAULT_SCHEDULE,
    "diagnose3d": DEFAULT_SCHEDULE,
    "qdpoint": (256,),
    "qdseq": (1024,),
}


# --------------------------------------------------------------------------
# function specs


@dataclass
class LoadedFunction:
    """An evaluable together with provenance for the manifest."""

    spec: str
    func: Callable
    kind: str  # builtin | mesh | fan
    obj: Any = None
    digest: str = ""

    def __call__(self, x):
        return self.func(x)


def parse_function_spec(spec: str) -> LoadedFunction:
    """``builtin:key[:params]``, ``mesh:path``, ``fan:path`` or a bare key."""
    if not isinstance(spec, str) or not spec.strip():
        raise ParseError("empty function spec")
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    if head in ("mesh", "fan"):
        if not rest:
            raise ParseError(f"{head}: spec needs a file path")
        path = Path(rest)
        if not path.is_file():
            raise FileNotFoundError(f"no such file: {path}")
        obj = load_mesh(path) if head == "mesh" else load_fan(path)
        return LoadedFunction(spec, obj, head, obj, sha256_bytes(path.read_bytes()))
    if head == "builtin":
        key, _, params = rest.partition(":")
    else:
        key, _, params = spec.partition(":")
    b = get_builtin(key, params or None)
    return LoadedFunction(spec, b, "builtin", b, sha256_bytes(b.spec.encode()))


def _floats(text: str, what: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParseError(f"{what}: bad number list {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ParseError(f"{what}: expected {n} numbers, got {len(vals)}")
    return vals


def parse_curve_spec(spec: str, samples: int) -> Curve:
    """``circle[:r[:cx,cy]]``, ``polygon:x,y;x,y;...``, ``segment:x,y;x,y``
    or ``section:nx,ny,nz,offset``."""
    head, _, rest = spec.partition(":")
    if head == "circle":
        r_txt, _, c_txt = rest.partition(":")
        r = float(r_txt) if r_txt else 1.0
        c = _floats(c_txt, "circle centre", 2) if c_txt else [0.0, 0.0]
        return circle_curve(r, samples, c)
    if head in ("polygon", "segment"):
        pts = [_floats(p, head, 2) for p in rest.split(";") if p.strip()]
        if head == "segment":
            return natural_parametrize(pts)
        return convex_polygon_curve(convex_hull_2d(pts).vertices)
    if head == "section":
        v = _floats(rest, "section", 4)
        return sphere_section_curve(v[:3], v[3], samples)
    raise ParseError(f"unknown curve spec {spec!r}")


def parse_domain(text: str | None) -> Polygon:
    if not text:
        return unit_square()
    x0, y0, x1, y1 = _floats(text, "domain", 4)
    if not (x1 > x0 and y1 > y0):
        raise ParseError("domain box needs x0 < x1 and y0 < y1")
    return Polygon(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]))


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    function_spec: str
    schedule: list = field(default_factory=list)
    seed: int = 0
    output_dir: str = "dcsplit-out"
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigInvalid(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if not self.schedule:
            self.schedule = list(DEFAULTS[self.command])
        try:
            self.schedule = [int(x) for x in self.schedule]
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid("schedule must be a list of integers") from exc
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ConfigInvalid("schedule must be strictly increasing")
        if self.command != "decompose" or self.options.get("route") != "mesh":
            if any(x < 1 for x in self.schedule):
                raise ConfigInvalid("schedule entries must be positive")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigInvalid("seed must be an integer")
        unknown = set(self.tolerances) - set(TOLERANCE_KEYS)
        if unknown:
            raise ConfigInvalid(f"unknown tolerance keys {sorted(unknown)}")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigInvalid(f"tolerance {k} must be a positive number")
        head, _, rest = self.function_spec.partition(":")
        if head not in ("mesh", "fan"):
            key = rest.partition(":")[0] if head == "builtin" else head
            if key not in BUILTIN_KEYS:
                from .errors import UnknownBuiltin

                raise UnknownBuiltin(f"unknown builtin {key!r}; known: {', '.join(BUILTIN_KEYS)}")
        return self

    @classmethod
    def from_dict(cls, d: Any) -> "RunConfig":
        if not isinstance(d, dict):
            raise SchemaError("config must be a JSON object")
        allowed = set(cls.__dataclass_fields__)
        extra = set(d) - allowed
        if extra:
            raise SchemaError(f"unknown config keys {sorted(extra)}")
        for key in ("command", "function_spec"):
            if not isinstance(d.get(key), str):
                raise SchemaError(f"config.{key} must be a string")
        for key, typ in (("schedule", list), ("tolerances", dict), ("options", dict)):
            if key in d and not isinstance(d[key], typ):
                raise SchemaError(f"config.{key} must be a {typ.__name__}")
        return cls(**d).validate()


def _verdict_tols(cfg: RunConfig) -> dict:
    return {k: v for k, v in cfg.tolerances.items() if k in ("bounded_tol", "divergent_tol", "atol")}


# --------------------------------------------------------------------------
# commands; each returns (verdict, data, csv_header, csv_rows)


def _curve_rows(reports) -> list:
    rows = []
    for r in reports:
        for lvl, (n, v, o) in enumerate(r.levels):
            rows.append((r.curve_id, lvl, n, v, o, r.verdict))
    return rows


def _cmd_decompose(cfg: RunConfig, fn: LoadedFunction, out: Path):
    route = cfg.options.get("route") or ("fan" if fn.kind == "fan" else "mesh" if fn.kind == "mesh" else "ph")
    levels = []
    header = ("level", "size", "sup_error", "lipschitz_f1", "lipschitz_f2", "normalization", "ridges", "shift")
    if fn.kind in ("mesh", "fan"):
        pair = aleksandrov_decompose(fn.obj)
        sub = out / "level-0"
        manifest = save_dcpair(pair, sub, input_hash(fn.obj))
        size = fn.obj.m if isinstance(fn.obj, SectorFanPH) else len(fn.obj.triangles)
        levels.append(
            {
                "size": size,
                "sup_error": 0.0,
                "lipschitz_f1": lipschitz_constant(pair.f1),
                "lipschitz_f2": lipschitz_constant(pair.f2),
                "normalization": pair.normalization,
                "edge_counts": manifest["edge_counts"],
                "shift": 0.0,
                "directory": sub.name,
            }
        )
    elif route == "ph":
        degree = int(cfg.options.get("degree", 1))
        phi = ph_from_function(fn.func, degree)
        for lv in dc_decompose_ph(phi, cfg.schedule):
            sub = out / f"fan-{lv.m_fan}"
            manifest = save_dcpair(lv.pair, sub, input_hash(lv.pair.base))
            levels.append(
                {
                    "size": lv.m_fan,
                    "sup_error": lv.sup_error,
                    "lipschitz_f1": lv.lipschitz_f1,
                    "lipschitz_f2": lv.lipschitz_f2,
                    "normalization": 0.0,
                    "edge_counts": manifest["edge_counts"],
                    "shift": lv.shift,
                    "directory": sub.name,
                }
            )
    elif route == "mesh":
        domain = parse_domain(cfg.options.get("domain"))
        for lv in dc_decompose_general(fn.func, domain, cfg.schedule):
            sub = out / f"mesh-{lv.level}"
            manifest = save_dcpair(lv.pair, sub, input_hash(lv.pair.base))
            levels.append(
                {
                    "size": int(len(lv.pair.base.triangles)),
                    "level": lv.level,
                    "sup_error": lv.sup_error,
                    "lipschitz_f1": lv.lipschitz_f1,
                    "lipschitz_f2": lv.lipschitz_f2,
                    "normalization": lv.pair.normalization,
                    "edge_counts": manifest["edge_counts"],
                    "shift": 0.0,
                    "directory": sub.name,
                }
            )
    else:
        raise ConfigInvalid(f"unknown decompose route {route!r}")
    rows = [
        (i, d["size"], d["sup_error"], d["lipschitz_f1"], d["lipschitz_f2"], d["normalization"],
         d["edge_counts"]["ridges"], d["shift"])
        for i, d in enumerate(levels)
    ]
    return None, {"route": route if fn.kind == "builtin" else fn.kind, "levels": levels}, header, rows


def _cmd_variation(cfg: RunConfig, fn: LoadedFunction, out: Path, with_sandwich: bool = False):
    spec = cfg.options.get("curve", "circle")
    curve = parse_curve_spec(spec, max(cfg.schedule))
    rep = variation_report(fn.func, curve, cfg.schedule, curve_id=spec, tolerances=_verdict_tols(cfg))
    data = {"curve": spec, "report": rep.to_dict()}
    if with_sandwich:
        L = fn.obj.lipschitz if isinstance(fn.obj, Builtin) else lipschitz_constant(fn.obj)
        c5, c6 = turn_constants(L)
        rows = []
        for n, v, o in rep.levels:
            rv = tangent_variation(curve, n)
            rows.append({"n_samples": n, "lower": c6 * v, "turn": o, "upper": c5 * (rv + v),
                         "holds": bool(c6 * v <= o * (1 + 1e-12) and o <= c5 * (rv + v) * (1 + 1e-12))})
        data["sandwich"] = {"lipschitz": L, "c5": c5, "c6": c6, "levels": rows}
    return rep.verdict, data, CURVE_COLUMNS, _curve_rows([rep])


def _family(cfg: RunConfig, default_kind: str) -> CurveFamily:
    kind = {
        "polygon": "convex_boundary_family",
        "circle": "circle_family",
        "sections": "sphere_sections",
        "coordconvex": "coord_convex_family",
    }.get(cfg.options.get("family", ""), default_kind)
    return CurveFamily(kind=kind, count=int(cfg.options.get("curves", 20)), seed=cfg.seed,
                       samples=max(cfg.schedule))


def _cmd_diagnose(cfg: RunConfig, fn: LoadedFunction, out: Path):
    domain = fn.obj.domain_hull if isinstance(fn.obj, TriangulatedPWL) else parse_domain(cfg.options.get("domain"))
    res = dc_diagnose(
        fn.func, domain, _family(cfg, "convex_boundary_family"), cfg.schedule,
        hot_spots=not cfg.options.get("no_hotspots", False), tolerances=_verdict_tols(cfg),
    )
    verdict = res.verdict
    return verdict, res.to_dict(), CURVE_COLUMNS, _curve_rows(res.reports)


def _cmd_diagnose3d(cfg: RunConfig, fn: LoadedFunction, out: Path):
    if not (isinstance(fn.obj, Builtin) and fn.obj.nd):
        raise ConfigInvalid("diagnose3d needs a builtin defined in R^n (norm2, norm1, norminf, linear:a,b,c)")
    res = dc_diagnose_nd(fn.func, _family(cfg, "sphere_sections"), cfg.schedule, tolerances=_verdict_tols(cfg))
    return res.verdict, res.to_dict(), CURVE_COLUMNS, _curve_rows(res.reports)


def _cmd_qdpoint(cfg: RunConfig, fn: LoadedFunction, out: Path):
    at = _floats(cfg.options.get("at", "0,0"), "at", 2)
    alpha = float(cfg.options.get("alpha", 1e-4))
    m_fan = int(cfg.schedule[-1])
    res = qd_point_test(fn.func, at, alpha, m_fan)
    data = {
        "at": at,
        "alpha": alpha,
        "m_fan": m_fan,
        "sub": res.sub.vertices,
        "super": res.super.vertices,
        "sub_perimeter": res.sub.perimeter,
        "super_diameter": res.super.diameter,
        "estimates": [{"n_samples": n, "variation": v} for n, v in res.estimates],
    }
    rows = [("unit-circle", i, n, v, None, res.verdict) for i, (n, v) in enumerate(res.estimates)]
    return res.verdict, data, CURVE_COLUMNS, rows


def _cmd_qdseq(cfg: RunConfig, fn: LoadedFunction, out: Path):
    n = int(cfg.schedule[-1])
    traces_file = cfg.options.get("traces")
    limit = None
    if traces_file:
        d = read_json(traces_file)
        if not isinstance(d, dict) or "t" not in d or "traces" not in d:
            raise SchemaError("traces file needs keys 't' and 'traces'")
        closed = bool(d.get("closed", False))
        period = d.get("period")
        traces = [trace_from_values(d["t"], p, closed, period) for p in d["traces"]]
        if d.get("limit") is not None:
            limit = trace_from_values(d["t"], d["limit"], closed, period)
        alphas = None
    else:
        at = np.asarray(_floats(cfg.options.get("at", "0,0"), "at", 2))
        alphas = _floats(cfg.options.get("alphas", "0.1,0.05,0.025,0.0125,0.00625"), "alphas")
        t = uniform_angles(n)
        dirs = np.column_stack([np.cos(t), np.sin(t)])
        fx = float(np.asarray(fn.func(at[None, :])).ravel()[0])
        traces = [
            trace_from_values(t, (np.asarray(fn.func(at + a * dirs)) - fx) / a, True, 2 * np.pi)
            for a in alphas
        ]
    res = qd_sequence_test(traces, cfg.tolerances.get("uniform_tol"), limit)
    data = res.to_dict()
    data["alphas"] = alphas
    verdict = "conditions_hold" if res.conditions_hold else "conditions_fail"
    header = ("k", "alpha", "distance", "gap", "variation")
    rows = []
    for k in range(len(traces)):
        rows.append((
            k,
            None if alphas is None else alphas[k],
            res.distances[k] if k < len(res.distances) else None,
            res.gaps[k - 1] if k >= 1 else None,
            res.variations[k],
        ))
    return verdict, data, header, rows


HANDLERS = {
    "decompose": _cmd_decompose,
    "variation": _cmd_variation,
    "turn": lambda cfg, fn, out: _cmd_variation(cfg, fn, out, with_sandwich=True),
    "diagnose": _cmd_diagnose,
    "diagnose3d": _cmd_diagnose3d,
    "qdpoint": _cmd_qdpoint,
    "qdseq": _cmd_qdseq,
}


def manifest_for(cfg: RunConfig, fn: LoadedFunction) -> dict:
    return {
        "tool": "dcsplit",
        "version": __version__,
        "command": cfg.command,
        "function_spec": cfg.function_spec,
        "input_kind": fn.kind,
        "input_hash": fn.digest,
        "schedule": cfg.schedule,
        "seed": cfg.seed,
        "tolerances": dict(sorted(cfg.tolerances.items())),
        "options": dict(sorted(cfg.options.items())),
        "versions": {"python": platform.python_version(), "numpy": np.__version__},
        "outputs": ["report.json", "report.csv"],
    }


def run(config: RunConfig) -> int:
    """Execute one command and write its manifest and reports.

    Returns the exit status (0 ok, 2 divergent verdict).  Errors propagate
    as exceptions; :func:`main` maps them to status 1.
    """
    cfg = config.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fn = parse_function_spec(cfg.function_spec)
    verdict, data, header, rows = HANDLERS[cfg.command](cfg, fn, out)
    report = {
        "format_version": REPORT_FORMAT,
        "command": cfg.command,
        "function": cfg.function_spec,
        "verdict": verdict,
        "data": data,
    }
    (out / "manifest.json").write_text(dumps(manifest_for(cfg, fn)), encoding="utf-8")
    (out / "report.json").write_text(dumps(report), encoding="utf-8")
    (out / "report.csv").write_text(csv_text(header, rows), encoding="utf-8")
    log.info("%s: verdict %s, reports in %s", cfg.command, verdict, out)
    return 2 if verdict == "divergent" and cfg.command in DIAGNOSTIC_COMMANDS else 0


# --------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcsplit", description="DC decomposition and diagnostics toolkit.")
    p.add_argument("--version", action="version", version=f"dcsplit {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--config", help="JSON run configuration (replaces the subcommand)")
    sub = p.add_subparsers(dest="command")

    def common(sp, schedule_flag="--schedule", help_sched="refinement schedule"):
        sp.add_argument("--fn", required=True, help="builtin:key[:params], mesh:path, fan:path or a bare key")
        sp.add_argument(schedule_flag, dest="schedule", type=_int_list, default=None, help=help_sched)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="dcsplit-out", help="output directory")
        sp.add_argument("--bounded-tol", type=float)
        sp.add_argument("--divergent-tol", type=float)
        sp.add_argument("--atol", type=float)

    sp = sub.add_parser("decompose", help="Aleksandrov DC decomposition")
    common(sp, "--fans", "fan sizes (p.h. route) or mesh levels (with --levels)")
    sp.add_argument("--levels", type=_int_list, help="mesh refinement levels (general route)")
    sp.add_argument("--degree", type=int, default=1, help="homogeneity degree for the p.h. route")
    sp.add_argument("--domain", help="x0,y0,x1,y1 box for the mesh route")

    for name, helptext in (("variation", "derivative variation along a curve"), ("turn", "turn of the lifted curve")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--curve", default="circle", help="circle[:r[:cx,cy]] | polygon:x,y;... | segment:x,y;x,y")

    sp = sub.add_parser("diagnose", help="planar curve-family DC diagnosis")
    common(sp)
    sp.add_argument("--curves", type=int, default=20)
    sp.add_argument("--family", choices=("polygon", "circle"), default="polygon")
    sp.add_argument("--domain", help="x0,y0,x1,y1 box (default [-1,1]^2)")
    sp.add_argument("--no-hotspots", action="store_true")

    sp = sub.add_parser("diagnose3d", help="curve diagnosis in R^3")
    common(sp)
    sp.add_argument("--curves", type=int, default=20)
    sp.add_argument("--family", choices=("sections", "coordconvex"), default="sections")

    sp = sub.add_parser("qdpoint", help="quasidifferential at a point")
    common(sp, "--m-fan", "fan size (a single integer)")
    sp.add_argument("--at", default="0,0")
    sp.add_argument("--alpha", type=float, default=1e-4)

    sp = sub.add_parser("qdseq", help="QD-sequence convergence test")
    common(sp, "--samples", "circle samples per trace (a single integer)")
    sp.add_argument("--at", default="0,0")
    sp.add_argument("--alphas", default="0.1,0.05,0.025,0.0125,0.00625")
    sp.add_argument("--traces", help="JSON file {t, traces, limit?, closed?, period?}")
    sp.add_argument("--uniform-tol", type=float)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        return RunConfig.from_dict(read_json(args.config))
    if not args.command:
        raise ConfigInvalid("a subcommand or --config is required")
    tol = {}
    for key in ("bounded_tol", "divergent_tol", "atol", "uniform_tol"):
        v = getattr(args, key, None)
        if v is not None:
            tol[key] = v
    opts: dict = {}
    schedule = args.schedule
    if args.command == "decompose":
        if args.levels is not None:
            if schedule is not None:
                raise ConfigInvalid("use either --fans or --levels")
            opts["route"], schedule = "mesh", args.levels
        if args.degree != 1:
            opts["degree"] = args.degree
        if args.domain:
            opts["domain"] = args.domain
    for key in ("curve", "curves", "family", "domain", "at", "alpha", "alphas", "traces"):
        v = getattr(args, key, None)
        if v is not None and key not in opts:
            opts[key] = v
    if getattr(args, "no_hotspots", False):
        opts["no_hotspots"] = True
    return RunConfig(args.command, args.fn, list(schedule or []), args.seed, args.out, tol, opts)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return run(config_from_args(args))
    except (DCSplitError, FileNotFoundError, OSError) as exc:
        print(f"dcsplit: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
