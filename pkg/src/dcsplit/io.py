"""File formats: mesh / fan JSON, DC pairs, reports.

Mesh file: ``{"vertices": [[x, y], ...], "triangles": [[i, j, k], ...],
"values": [v, ...]}`` with an optional ``"gradients"`` list (written for
refined meshes, whose thin cells make gradients from values ill-conditioned).
Fan file: ``{"angles": [...], "values": [...]}``.

JSON output is canonical (sorted keys, shortest round-trip float repr,
non-finite numbers as ``null``); CSV floats use 17 significant digits.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .decompose import DCPair
from .errors import DCSplitError, SchemaError
from .pwl import SectorFanPH, TriangulatedPWL, build_sector_fan, build_triangulated

FLOAT_FMT = "%.17g"


# --------------------------------------------------------------------------
# canonical JSON / CSV


def to_jsonable(obj: Any) -> Any:
    """Convert numpy containers/scalars to plain Python; non-finite -> None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path | str, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path: Path | str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v) if math.isfinite(float(v)) else ""
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    Path(path).write_text(csv_text(header, rows), encoding="utf-8")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# --------------------------------------------------------------------------
# mesh and fan files


def _require(d: Any, keys: Sequence[str], what: str) -> None:
    if not isinstance(d, dict):
        raise SchemaError(f"{what}: expected a JSON object")
    missing = [k for k in keys if k not in d]
    if missing:
        raise SchemaError(f"{what}: missing keys {missing}")


def _array(x: Any, shape_tail: tuple, what: str, dtype=float) -> np.ndarray:
    try:
        a = np.asarray(x, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{what}: not a numeric array") from exc
    if a.ndim != 1 + len(shape_tail) or tuple(a.shape[1:]) != shape_tail:
        raise SchemaError(f"{what}: expected shape (n, {', '.join(map(str, shape_tail))})".replace(", )", ")"))
    return a


def mesh_to_dict(f: TriangulatedPWL, with_gradients: bool = True) -> dict:
    d = {"vertices": f.vertices, "triangles": f.triangles, "values": f.values}
    if with_gradients:
        d["gradients"] = f.gradients
    return d


def mesh_from_dict(d: Any, what: str = "mesh") -> TriangulatedPWL:
    _require(d, ("vertices", "triangles", "values"), what)
    v = _array(d["vertices"], (2,), f"{what}.vertices")
    t = _array(d["triangles"], (3,), f"{what}.triangles", dtype=np.int64)
    vals = _array(d["values"], (), f"{what}.values")
    if len(vals) != len(v):
        raise SchemaError(f"{what}: {len(vals)} values for {len(v)} vertices")
    if len(t) and (t.min() < 0 or t.max() >= len(v)):
        raise SchemaError(f"{what}: triangle index out of range")
    if "gradients" in d:
        g = _array(d["gradients"], (2,), f"{what}.gradients")
        if len(g) != len(t):
            raise SchemaError(f"{what}: {len(g)} gradients for {len(t)} triangles")
        return build_triangulated(v, t, vals, gradients=g, area_eps=1e-24)
    return build_triangulated(v, t, vals)


def fan_to_dict(f: SectorFanPH) -> dict:
    return {"angles": f.angles, "values": f.ray_values}


def fan_from_dict(d: Any, what: str = "fan") -> SectorFanPH:
    _require(d, ("angles", "values"), what)
    a = _array(d["angles"], (), f"{what}.angles")
    vals = _array(d["values"], (), f"{what}.values")
    return build_sector_fan(vals, a)


def load_mesh(path: Path | str) -> TriangulatedPWL:
    return mesh_from_dict(read_json(path), str(path))


def load_fan(path: Path | str) -> SectorFanPH:
    return fan_from_dict(read_json(path), str(path))


def save_mesh(f: TriangulatedPWL, path: Path | str) -> None:
    write_json(path, mesh_to_dict(f))


def save_fan(f: SectorFanPH, path: Path | str) -> None:
    write_json(path, fan_to_dict(f))


def pwl_to_dict(f) -> dict:
    if isinstance(f, SectorFanPH):
        return fan_to_dict(f)
    if isinstance(f, TriangulatedPWL):
        return mesh_to_dict(f)
    raise DCSplitError(f"cannot serialize {type(f).__name__}")


def input_hash(f) -> str:
    """Hash of the canonical serialization of a mesh or fan."""
    return sha256_bytes(dumps(pwl_to_dict(f)).encode())


# --------------------------------------------------------------------------
# DC pairs


def save_dcpair(pair: DCPair, directory: Path | str, source_hash: str | None = None) -> dict:
    """Write ``f1.json``, ``f2.json`` and ``manifest.json``; returns the manifest."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    kind = "fan" if isinstance(pair.f1, SectorFanPH) else "mesh"
    write_json(d / "f1.json", pwl_to_dict(pair.f1))
    write_json(d / "f2.json", pwl_to_dict(pair.f2))
    manifest = {
        "kind": kind,
        "input_hash": source_hash if source_hash is not None else input_hash(pair.base),
        "normalization": pair.normalization,
        "edge_counts": dict(sorted(pair.edge_counts.items())),
        "files": ["f1.json", "f2.json"],
    }
    write_json(d / "manifest.json", manifest)
    return manifest


def load_dcpair(directory: Path | str) -> tuple:
    """``(f1, f2, manifest)`` from a directory written by :func:`save_dcpair`."""
    d = Path(directory)
    manifest = read_json(d / "manifest.json")
    _require(manifest, ("kind", "input_hash", "normalization", "edge_counts"), "manifest")
    loader = fan_from_dict if manifest["kind"] == "fan" else mesh_from_dict
    return loader(read_json(d / "f1.json"), "f1"), loader(read_json(d / "f2.json"), "f2"), manifest
