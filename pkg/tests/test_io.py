import numpy as np
import pytest

from gravelet.embedding import EmbeddingConfig, embed_all
from gravelet.graph import build_graph
from gravelet.io import (
    ParseError,
    format_edge_list,
    format_metadata,
    format_roles_csv,
    parse_edge_list,
    parse_metadata,
    read_edge_list,
    read_embedding_csv,
    read_roles_csv,
    sidecar_path,
    write_edge_list,
    write_embedding_csv,
)
from gravelet.synthgen import generate


def test_parse_comments_blanks_and_weights():
    g = parse_edge_list("# header\n\na b\nb c 2.5\n  # indented\nc a\n")
    assert g.node_labels == ("a", "b", "c")
    assert g.num_edges == 3
    assert sorted(w for _, _, w in g.edges) == [1.0, 1.0, 2.5]


@pytest.mark.parametrize("text,where", [
    ("a b\nc\n", ":2:"),
    ("a b c d\n", ":1:"),
    ("a b\nb c heavy\n", ":2:"),
])
def test_parse_errors_carry_line(text, where):
    with pytest.raises(ParseError, match=where):
        parse_edge_list(text, "g.edges")


def test_parse_rejects_bad_weight_value():
    with pytest.raises(ParseError):
        parse_edge_list("a b -1\n")


def test_read_rejects_non_utf8(tmp_path):
    p = tmp_path / "g.edges"
    p.write_bytes(b"a b\n\xff\xfe c\n")
    with pytest.raises(ParseError, match="UTF-8"):
        read_edge_list(p)


def test_edge_list_round_trip(tmp_path):
    g = build_graph([("x", "y"), ("y", "z", 0.25), ("z", "x")])
    p = tmp_path / "g.edges"
    write_edge_list(g, p, ["made in a test"])
    text = p.read_text()
    assert text.startswith("# made in a test\n")
    assert "y z 0.25" in text and "x y\n" in text
    h = read_edge_list(p)
    assert h.content_hash() == g.content_hash()
    assert format_edge_list(h) == format_edge_list(g)


def test_metadata_round_trip_sorted():
    meta = {"b": [1, 2.5], "a": {"z": 1, "y": None}, "c": "text"}
    text = format_metadata(meta)
    assert [line.split(":")[0] for line in text.splitlines()] == ["a", "b", "c"]
    assert parse_metadata(text) == meta
    with pytest.raises(ParseError):
        parse_metadata("no separator here")
    with pytest.raises(ParseError):
        parse_metadata("k: {bad json")


def test_embedding_csv_round_trip(tmp_path):
    b = generate("barbell", clique_size=4, chain_length=3)
    emb = embed_all(b.graph, EmbeddingConfig(d=4))
    p = tmp_path / "e.csv"
    write_embedding_csv(emb, p, {"note": "x"})
    labels, X, meta = read_embedding_csv(p)
    assert labels == list(emb.labels)
    assert np.array_equal(X, emb.matrix)
    assert meta["d"] == 4 and meta["J"] == 2 and meta["note"] == "x"
    assert meta["scales"] == [float(s) for s in emb.scales]
    assert meta["graph_hash"] == b.graph.content_hash()
    header = p.read_text().splitlines()[0].split(",")
    assert header[0] == "node" and len(header) == 1 + 16


def test_embedding_csv_without_sidecar(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("node,c0\nq,1.5\n")
    labels, X, meta = read_embedding_csv(p)
    assert labels == ["q"] and X.tolist() == [[1.5]] and meta == {}
    assert sidecar_path(p).name == "e.csv.meta"


@pytest.mark.parametrize("body", ["", "x,1\n", "node,c0\nq,1,2\n", "node,c0\nq,abc\n"])
def test_embedding_csv_errors(tmp_path, body):
    p = tmp_path / "e.csv"
    p.write_text(body)
    with pytest.raises(ParseError):
        read_embedding_csv(p)


def test_roles_csv_round_trip(tmp_path):
    b = generate("house", 0)
    p = tmp_path / "r.csv"
    p.write_text(format_roles_csv(b.graph.node_labels, b.roles, b.role_names))
    labels, roles, names = read_roles_csv(p)
    assert labels == list(b.graph.node_labels)
    assert np.array_equal(roles, b.roles)
    assert [names[i] for i in range(b.num_roles)] == list(b.role_names)
    p.write_text("node,role\n")
    with pytest.raises(ParseError):
        read_roles_csv(p)
