"""Text formats: body files, flat config files, JSON/CSV/DAT reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .geometry import ConvexBody, direction_grid, from_support, make_ball, make_polytope

BODY_KEYS = {"type", "dim", "center", "radius", "vertices", "directions", "values"}
BODY_TYPES = ("ball", "polytope", "support")


class FormatError(ValueError):
    """Malformed input file; the message names the file, line and field."""


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def read_pairs(path) -> list[tuple[int, str, str]]:
    """(line number, key, value) for each non-blank `key = value` line."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"{path}: file not found")
    out, seen = [], {}
    for no, raw in enumerate(path.read_text().splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError(f"{path}:{no}: empty key")
        if key in seen:
            raise FormatError(f"{path}:{no}: duplicate key '{key}' (first on line {seen[key]})")
        seen[key] = no
        out.append((no, key, value))
    return out


def _floats(text: str, where: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise FormatError(f"{where}: expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise FormatError(f"{where}: values must be finite")
    return vals


def parse_body(path) -> ConvexBody:
    """Read a body file.

    Lines are `key = value`; `#` starts a comment.  Keys: type (ball,
    polytope or support), dim (2 or 3, default 2), center and radius for
    balls, vertices as `x,y; x,y; ...` for polytopes, values (one per grid
    direction) for support bodies, and directions (grid size, default 256
    in 2D and 512 in 3D).
    """
    pairs = read_pairs(path)
    fields = {}
    for no, key, value in pairs:
        where = f"{path}:{no}: field '{key}'"
        if key not in BODY_KEYS:
            raise FormatError(f"{path}:{no}: unknown field '{key}' (allowed: {', '.join(sorted(BODY_KEYS))})")
        fields[key] = (where, value)

    def need(key):
        if key not in fields:
            raise FormatError(f"{path}: missing field '{key}' for type {kind}")
        return fields[key]

    if "type" not in fields:
        raise FormatError(f"{path}: missing field 'type' (one of {', '.join(BODY_TYPES)})")
    where, kind = fields["type"]
    if kind not in BODY_TYPES:
        raise FormatError(f"{where}: expected one of {', '.join(BODY_TYPES)}, got {kind!r}")
    dim = 2
    if "dim" in fields:
        where, v = fields["dim"]
        if v not in ("2", "3"):
            raise FormatError(f"{where}: expected 2 or 3, got {v!r}")
        dim = int(v)
    count = None
    if "directions" in fields:
        where, v = fields["directions"]
        try:
            count = int(v)
        except ValueError:
            raise FormatError(f"{where}: expected an integer direction count, got {v!r}") from None
        if dim == 2 and (count < 64 or count % 2):
            raise FormatError(f"{where}: 2D grids need an even count >= 64, got {count}")
        if dim == 3 and (count < 32 or count % 2):
            raise FormatError(f"{where}: 3D grids need an even count >= 32, got {count}")
    grid = direction_grid(dim, count)
    allowed = {"ball": {"center", "radius"}, "polytope": {"vertices"}, "support": {"values"}}[kind]
    for key in fields.keys() - allowed - {"type", "dim", "directions"}:
        raise FormatError(f"{fields[key][0]}: not used by type {kind}")
    try:
        if kind == "ball":
            where, v = need("center")
            center = _floats(v, where)
            if len(center) != dim:
                raise FormatError(f"{where}: expected {dim} coordinates, got {len(center)}")
            where, v = need("radius")
            radius = _floats(v, where)
            if len(radius) != 1 or radius[0] <= 0:
                raise FormatError(f"{where}: expected one positive number, got {v!r}")
            return make_ball(center, radius[0], grid)
        if kind == "polytope":
            where, v = need("vertices")
            verts = [_floats(p, where) for p in v.split(";") if p.strip()]
            if any(len(p) != dim for p in verts):
                raise FormatError(f"{where}: every vertex needs {dim} coordinates")
            return make_polytope(verts, grid)
        where, v = need("values")
        vals = _floats(v, where)
        if len(vals) != grid.count:
            raise FormatError(f"{where}: expected {grid.count} values (one per direction), got {len(vals)}")
        return from_support(vals, grid)
    except FormatError:
        raise
    except ValueError as e:
        raise FormatError(f"{path}: invalid {kind} body: {e}") from None


def parse_number_list(text: str) -> list[float]:
    """`a,b,c` or inclusive range `start:stop:step`."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ValueError(f"range {text!r} needs step > 0 and stop >= start")
        k = int(math.floor((b - a) / step + 1e-9))
        return [round(a + i * step, 12) for i in range(k + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------- reports


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return '"nan"' if math.isnan(x) else ('"inf"' if x > 0 else '"-inf"')
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    return _fmt(obj)


def write_csv(path, schema: str, columns, rows):
    lines = [f"# schema: {schema}", ",".join(columns)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in r))
    Path(path).write_text("\n".join(lines) + "\n")


def write_dat(path, header: str, rows):
    lines = [f"# {header}"]
    for r in rows:
        lines.append(" ".join(_fmt(v) for v in r))
    Path(path).write_text("\n".join(lines) + "\n")
