"""Text formats: edge lists, embedding CSVs with metadata sidecars, role CSVs.

All writers are deterministic: floats use the shortest round-trip repr and
metadata keys are sorted, so equal inputs give equal bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .embedding import EmbeddingSet, column_names
from .graph import Graph, GraphError, build_graph


class ParseError(GraphError):
    """Malformed input file; the message carries the file and line."""


def _num(x: float) -> str:
    return repr(float(x))


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def parse_edge_list(text: str, source: str = "<string>") -> Graph:
    """``src dst [weight]`` per line; ``#`` starts a comment line."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"{source}:{lineno}: expected 'src dst [weight]', got {raw!r}")
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(f"{source}:{lineno}: bad weight {parts[2]!r}") from None
            rows.append((parts[0], parts[1], w))
        else:
            rows.append((parts[0], parts[1]))
    try:
        return build_graph(rows)
    except GraphError as exc:
        raise ParseError(f"{source}: {exc}") from exc


def read_edge_list(path) -> Graph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    return parse_edge_list(text, str(path))


def format_edge_list(g: Graph, comments: Sequence[str] = ()) -> str:
    out = [f"# {c}" for c in comments]
    for u, v, w in g.edges:
        a, b = g.node_labels[u], g.node_labels[v]
        out.append(f"{a} {b}" if w == 1.0 else f"{a} {b} {_num(w)}")
    return "\n".join(out) + "\n"


def write_edge_list(g: Graph, path, comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_edge_list(g, comments), encoding="utf-8")


def format_metadata(meta: Mapping) -> str:
    """One ``key: value`` line per entry, values JSON encoded."""
    return "".join(f"{k}: {json.dumps(meta[k], sort_keys=True)}\n" for k in sorted(meta))


def parse_metadata(text: str) -> dict:
    meta = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        key, sep, value = line.partition(": ")
        if not sep:
            raise ParseError(f"metadata line {lineno}: expected 'key: value'")
        try:
            meta[key] = json.loads(value)
        except json.JSONDecodeError:
            raise ParseError(f"metadata line {lineno}: bad value {value!r}") from None
    return meta


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta")


def embedding_metadata(emb: EmbeddingSet) -> dict:
    cfg = emb.config
    return {
        "scales": [float(s) for s in emb.scales],
        "d": cfg.d,
        "t_max": cfg.t_max,
        "eta": cfg.eta,
        "gamma": cfg.gamma,
        "J": len(emb.scales),
        "K": emb.order,
        "mode": emb.mode,
        "graph_hash": emb.graph_hash,
        "nodes": len(emb),
    }


def format_embedding_csv(emb: EmbeddingSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node"] + column_names(len(emb.scales), emb.config.d))
    for label, row in zip(emb.labels, emb.matrix):
        w.writerow([label] + [_num(x) for x in row])
    return buf.getvalue()


def write_embedding_csv(emb: EmbeddingSet, path, extra_meta: Optional[Mapping] = None) -> None:
    meta = embedding_metadata(emb)
    meta.update(extra_meta or {})
    Path(path).write_text(format_embedding_csv(emb), encoding="utf-8")
    sidecar_path(path).write_text(format_metadata(meta), encoding="utf-8")


def read_embedding_csv(path) -> tuple[list[str], np.ndarray, dict]:
    """Labels, matrix and sidecar metadata (empty if there is no sidecar)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "node":
        raise ParseError(f"{path}: missing 'node,...' header")
    width = len(rows[0])
    labels, values = [], []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != width:
            raise ParseError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        labels.append(row[0])
        try:
            values.append([float(x) for x in row[1:]])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric coordinate") from None
    side = sidecar_path(path)
    meta = parse_metadata(side.read_text(encoding="utf-8")) if side.exists() else {}
    return labels, np.array(values, dtype=float).reshape(len(labels), width - 1), meta


def format_roles_csv(labels: Sequence[str], roles: Iterable[int],
                     role_names: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "role_id", "role_name"])
    for label, r in zip(labels, roles):
        w.writerow([label, int(r), role_names[int(r)]])
    return buf.getvalue()


def read_roles_csv(path) -> tuple[list[str], np.ndarray, dict[int, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["node", "role_id", "role_name"]:
        raise ParseError(f"{path}: missing 'node,role_id,role_name' header")
    labels, roles, names = [], [], {}
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 fields")
        try:
            r = int(row[1])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: role_id must be an integer") from None
        labels.append(row[0])
        roles.append(r)
        names[r] = row[2]
    return labels, np.array(roles, dtype=np.int64), names
