"""Loading, saving and preprocessing of demonstration files.

Canonical CSV grammar (one demonstration per file):

    t,x1,...,xn[,v1,...,vn]
    0.0,0.1,0.2,...

Velocity columns are optional; when absent they are estimated by central
finite differences on the actual (possibly non-uniform) time grid, with
one-sided differences at the endpoints. The JSON form carries the same
fields: {"name": ..., "t": [...], "positions": [[...]],
"velocities": [[...]] | null}.

A motion is a directory of demonstration files plus a `motion.json`
metadata file: {"name": ..., "goal": [...]}; demonstration files are read
in lexical order.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .reshaper import Demonstration


class ParseError(ValueError):
    """Malformed demonstration file; message names the offending line."""


def estimate_velocities(t, pos) -> np.ndarray:
    """Finite-difference velocities on a possibly non-uniform time grid.

    Interior samples use the three-point central formula with the actual
    spacings (exact for quadratics); endpoints fall back to one-sided
    differences (exact for affine data).
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    T = t.size
    vel = np.zeros_like(pos)
    if T == 1:
        return vel
    vel[0] = (pos[1] - pos[0]) / (t[1] - t[0])
    vel[-1] = (pos[-1] - pos[-2]) / (t[-1] - t[-2])
    if T > 2:
        h1 = (t[1:-1] - t[:-2])[:, None]
        h2 = (t[2:] - t[1:-1])[:, None]
        vel[1:-1] = (-h2 / (h1 * (h1 + h2)) * pos[:-2]
                     + (h2 - h1) / (h1 * h2) * pos[1:-1]
                     + h1 / (h2 * (h1 + h2)) * pos[2:])
    return vel


def _parse_float(token: str, path, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: not a number: {token!r}") from None
    if not np.isfinite(value):
        raise ParseError(f"{path}:{lineno}: non-finite value {token!r}")
    return value


def _load_csv(lines, path) -> Demonstration:
    lines = [ln.strip() for ln in lines]
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [c.strip() for c in rows[0][1].split(",")]
    if header[0] != "t":
        raise ParseError(f"{path}:1: header must start with 't', got {header[0]!r}")
    x_cols = [c for c in header[1:] if c.startswith("x")]
    v_cols = [c for c in header[1:] if c.startswith("v")]
    n = len(x_cols)
    if n == 0 or header[1:] != [f"x{i+1}" for i in range(n)] + [f"v{i+1}" for i in range(len(v_cols))]:
        raise ParseError(f"{path}:1: header must be t,x1..xn[,v1..vn], got {','.join(header)}")
    has_vel = len(v_cols) > 0
    if has_vel and len(v_cols) != n:
        raise ParseError(f"{path}:1: {len(v_cols)} velocity columns for {n} position columns")

    want = 1 + n + (n if has_vel else 0)
    ts, xs, vs = [], [], []
    prev_t, prev_line = None, None
    for lineno, ln in rows[1:]:
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) != want:
            raise ParseError(f"{path}:{lineno}: expected {want} columns, got {len(cells)}")
        values = [_parse_float(c, path, lineno) for c in cells]
        if prev_t is not None and values[0] <= prev_t:
            raise ParseError(
                f"{path}:{lineno}: timestamp {values[0]} does not increase past "
                f"{prev_t} (line {prev_line})"
            )
        prev_t, prev_line = values[0], lineno
        ts.append(values[0])
        xs.append(values[1:1 + n])
        vs.append(values[1 + n:] if has_vel else None)
    if not ts:
        raise ParseError(f"{path}: no data rows")
    pos = np.array(xs)
    vel = np.array(vs) if has_vel else estimate_velocities(ts, pos)
    return Demonstration(np.array(ts), pos, vel, name=Path(str(path)).stem)


def _load_json(text, path) -> Demonstration:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    for key in ("t", "positions"):
        if key not in doc:
            raise ParseError(f"{path}: missing required key {key!r}")
    t = np.asarray(doc["t"], dtype=float)
    pos = np.atleast_2d(np.asarray(doc["positions"], dtype=float))
    if doc.get("velocities") is not None:
        vel = np.atleast_2d(np.asarray(doc["velocities"], dtype=float))
    else:
        vel = estimate_velocities(t, pos)
    name = doc.get("name") or Path(str(path)).stem
    try:
        return Demonstration(t, pos, vel, name=name)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_demonstration(source, format: str | None = None) -> Demonstration:
    """Load a demonstration from a path (format inferred from suffix) or
    from an open text stream (format required)."""
    if hasattr(source, "read"):
        if format not in ("csv", "json"):
            raise ValueError("format must be 'csv' or 'json' when reading a stream")
        text = source.read()
        name = getattr(source, "name", "<stream>")
        return _load_csv(text.splitlines(), name) if format == "csv" else _load_json(text, name)
    path = Path(source)
    fmt = format or path.suffix.lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"unsupported demonstration format {fmt!r}")
    text = path.read_text()
    return _load_csv(text.splitlines(), path) if fmt == "csv" else _load_json(text, path)


def save_demonstration(demo: Demonstration, path, format: str | None = None):
    """Write a demonstration; floats use repr so a reload is exact."""
    path = Path(path)
    fmt = format or path.suffix.lstrip(".").lower()
    if fmt == "csv":
        n = demo.dimension
        lines = ["t," + ",".join(f"x{i+1}" for i in range(n)) + ","
                 + ",".join(f"v{i+1}" for i in range(n))]
        for k in range(len(demo)):
            cells = [repr(float(demo.t[k]))]
            cells += [repr(float(v)) for v in demo.pos[k]]
            cells += [repr(float(v)) for v in demo.vel[k]]
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        path.write_text(json.dumps(demo.to_dict()) + "\n")
    else:
        raise ValueError(f"unsupported demonstration format {fmt!r}")


def subsample(demo: Demonstration, target_count: int) -> Demonstration:
    """Uniform index-stride selection keeping the first and last samples."""
    T = len(demo)
    if not 2 <= target_count <= T:
        raise ValueError(f"target_count must be in [2, {T}], got {target_count}")
    idx = np.floor(np.linspace(0, T - 1, target_count) + 0.5).astype(int)
    return Demonstration(demo.t[idx], demo.pos[idx], demo.vel[idx], name=demo.name)


def truncate_near_goal(demo: Demonstration, k: int) -> Demonstration:
    """Drop the final k samples, leaving a training-free neighborhood of
    the goal so the learned control vanishes there."""
    T = len(demo)
    if k < 0 or k >= T:
        raise ValueError(f"k must be in [0, {T - 1}], got {k}")
    if k == 0:
        return demo
    if T - k == 1:
        warnings.warn(f"truncation leaves a single-sample demonstration ({demo.name})")
    return Demonstration(demo.t[:T - k], demo.pos[:T - k], demo.vel[:T - k],
                         name=demo.name)


@dataclass
class Motion:
    """One motion: metadata plus its demonstration files in lexical order."""

    name: str
    goal: np.ndarray
    demos: list = field(default_factory=list)


def load_motion(directory) -> Motion:
    directory = Path(directory)
    meta_path = directory / "motion.json"
    if not meta_path.exists():
        raise ParseError(f"{directory}: missing motion.json")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{meta_path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if "goal" not in meta:
        raise ParseError(f"{meta_path}: missing required key 'goal'")
    goal = np.asarray(meta["goal"], dtype=float)
    name = meta.get("name", directory.name)
    files = sorted(p for p in directory.iterdir()
                   if p.suffix in (".csv", ".json") and p.name != "motion.json")
    demos = [load_demonstration(p) for p in files]
    if not demos:
        raise ParseError(f"{directory}: no demonstration files")
    for d in demos:
        if d.dimension != goal.size:
            raise ParseError(
                f"{directory}: demo {d.name!r} has dimension {d.dimension}, "
                f"goal has {goal.size}"
            )
    return Motion(name=name, goal=goal, demos=demos)


def load_dataset(directory) -> list:
    """All motions below `directory` (any subdirectory with a motion.json)."""
    directory = Path(directory)
    motion_dirs = sorted(p.parent for p in directory.rglob("motion.json"))
    return [load_motion(p) for p in motion_dirs]
