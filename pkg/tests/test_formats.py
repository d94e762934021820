import pytest

from conftest import FORK_JOIN, build_net
from pn2sc.bench import generate_sp
from pn2sc.formats import (
    ArcTypeError, DanglingArc, DuplicateLabel, NetDocument, ParseError,
    format_net, format_statechart, format_trace, load_models, load_net, net_document,
    parse_net, parse_net_text, parse_statechart_text, serialize_outputs, statechart_document,
)
from pn2sc.graph import GraphStore
from pn2sc.models import StatechartView, model_size, validate_statechart, validate_trace
from pn2sc.transform import transform

FORK_JOIN_TEXT = """\
# fork-join
place p0 Start
place p1
place p2
place p3
transition tf
transition tj
arc p0 tf
arc tf p1
arc tf p2
arc p1 tj
arc p2 tj
arc tj p3
"""


def test_minimal_document():
    store, labels = parse_net("place p\n")
    assert model_size(store) == 1 and set(labels) == {"p"}


def test_fork_join_document():
    store, labels = parse_net(FORK_JOIN_TEXT)
    assert model_size(store) == 12
    assert store.attr(labels["p0"], "name") == "Start"
    assert store.attr(labels["p1"], "name") == "p1"


@pytest.mark.parametrize(
    "text,error",
    [
        ("place a\nplace b\narc a b\n", ArcTypeError),
        ("place a\narc a t\n", DanglingArc),
        ("place a\ntransition a\n", DuplicateLabel),
        ("node a\n", ParseError),
        ("place\n", ParseError),
    ],
)
def test_bad_nets(text, error):
    with pytest.raises(error):
        parse_net_text(text)


def test_parse_error_reports_the_line():
    with pytest.raises(ParseError) as info:
        parse_net_text("place a\n\nbogus\n")
    assert info.value.line == 3


def test_net_round_trip():
    doc = generate_sp(3)
    assert parse_net_text(format_net(doc)) == doc
    store = GraphStore()
    load_net(doc, store)
    back = net_document(store)
    for field in ("places", "transitions", "arcs"):
        assert sorted(getattr(back, field)) == sorted(getattr(doc, field))


def test_serialize_twice_is_identical(tmp_path):
    result = transform(FORK_JOIN_TEXT)
    a = [p.read_bytes() for p in serialize_outputs(result, tmp_path / "a")]
    b = [p.read_bytes() for p in serialize_outputs(result, tmp_path / "b")]
    assert a == b and len(a) == 3


def test_reduced_net_round_trip(tmp_path):
    result = transform(FORK_JOIN_TEXT)
    serialize_outputs(result, tmp_path)
    text = (tmp_path / "reduced.net").read_text()
    assert text == "place p0 Start\n"
    assert format_net(parse_net_text(text)) == text


def test_fork_join_root_children(tmp_path):
    result = transform(FORK_JOIN_TEXT)
    doc = statechart_document(result.store, result.root)
    assert doc.root is not None
    root = doc.find(doc.root)
    assert root.kind == "OR"
    assert sorted(c.kind for c in root.children) == ["AND", "Basic", "Basic"]


def test_statechart_round_trip(tmp_path):
    result = transform(generate_sp(4))
    serialize_outputs(result, tmp_path)
    loaded = load_models(tmp_path)
    assert validate_statechart(loaded.store, loaded.root) == []
    assert validate_trace(loaded.store) == []
    assert StatechartView(loaded.store, loaded.root).canonical() == result.statechart.canonical()
    text = (tmp_path / "statechart.sc").read_text()
    assert format_statechart(parse_statechart_text(text)) == text
    assert format_trace(loaded.store) == (tmp_path / "trace.map").read_text()


def test_non_reducible_output_has_no_root(tmp_path):
    from conftest import NON_REDUCIBLE

    store, _ = build_net(*NON_REDUCIBLE)
    result = transform(store)
    serialize_outputs(result, tmp_path)
    text = (tmp_path / "statechart.sc").read_text()
    assert "root" not in text
    assert len([l for l in text.splitlines() if l.startswith("top ")][0].split()) == 3


def test_empty_document():
    assert parse_net_text("# nothing\n\n") == NetDocument([], [], [])
