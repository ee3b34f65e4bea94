import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import message, write_jsonl
from geoemotion import fixtures
from geoemotion.errors import IngestError
from geoemotion.ingest import (
    load_messages,
    load_sentiment_lexicon,
    load_tracts,
    load_vad_lexicon,
    write_messages,
    write_tracts,
)


def square(x0, y0, size=1.0):
    return [[x0, y0], [x0 + size, y0], [x0 + size, y0 + size], [x0, y0 + size], [x0, y0]]


def feature(tract_id, ring, geom_type="Polygon", **props):
    coords = [ring] if geom_type == "Polygon" else [[ring]]
    return {
        "type": "Feature",
        "properties": {"tract_id": tract_id, **props},
        "geometry": {"type": geom_type, "coordinates": coords},
    }


def write_fc(path, features):
    path.write_text(json.dumps({"type": "FeatureCollection", "features": features}))
    return path


# -------------------------------------------------------------- messages


def test_three_valid_lines(tmp_path):
    path = write_jsonl(tmp_path / "m.jsonl", [message(f"m{i}") for i in range(3)])
    msgs, stats = load_messages(path)
    assert [m.message_id for m in msgs] == ["m0", "m1", "m2"]
    assert (stats.accepted, stats.rejected, stats.duplicates) == (3, 0, 0)


def test_missing_lat_is_skipped_and_counted(tmp_path):
    bad = message("m2")
    del bad["lat"]
    path = write_jsonl(tmp_path / "m.jsonl", [message("m0"), message("m1"), bad])
    msgs, stats = load_messages(path)
    assert len(msgs) == 2
    assert stats.rejected == 1
    assert stats.errors[0][0] == 3


def test_strict_mode_reports_line_number(tmp_path):
    path = write_jsonl(tmp_path / "m.jsonl", [message("m0"), "{not json", message("m2")])
    with pytest.raises(IngestError, match=r":2: "):
        load_messages(path, strict=True)


def test_unreadable_file_is_fatal(tmp_path):
    with pytest.raises(IngestError):
        load_messages(tmp_path / "missing.jsonl")


def test_corrupted_fixture_accepts_963(tmp_path):
    truth = fixtures.write_corrupted(tmp_path)
    msgs, stats = load_messages(tmp_path / "messages.jsonl")
    assert truth["rejected"] == 37
    assert stats.accepted == 963 == len(msgs)
    assert stats.rejected == 37


def test_duplicate_id_keeps_first(tmp_path):
    path = write_jsonl(tmp_path / "m.jsonl", [message("a", text="first"), message("a", text="second"), message("b")])
    msgs, stats = load_messages(path)
    assert [m.text for m in msgs] == ["first", "hello"]
    assert stats.duplicates == 1
    assert stats.accepted + stats.rejected + stats.duplicates == stats.total


@pytest.mark.parametrize(
    "mutate",
    [
        lambda r: r.update(lat=91),
        lambda r: r.update(lon=-180.5),
        lambda r: r.update(lat=True),
        lambda r: r.update(lat="34.0"),
        lambda r: r.update(timestamp="2014-07-01 10:00:00"),
        lambda r: r.update(user_id=5),
        lambda r: r.update(extra="x"),
        lambda r: r.update(lat=float("nan")),
    ],
)
def test_invalid_records_rejected(tmp_path, mutate):
    rec = message()
    mutate(rec)
    path = tmp_path / "m.jsonl"
    path.write_text(json.dumps(rec) + "\n")
    msgs, stats = load_messages(path)
    assert msgs == [] and stats.rejected == 1


def test_timestamp_normalized_to_utc(tmp_path):
    path = write_jsonl(tmp_path / "m.jsonl", [message(ts="2014-07-01T03:00:00-07:00")])
    (msg,), _ = load_messages(path)
    assert msg.timestamp.isoformat() == "2014-07-01T10:00:00+00:00"


def test_text_kept_byte_exact(tmp_path):
    text = "  Café ☕ ​ soooo   “quoted”\t"
    path = write_jsonl(tmp_path / "m.jsonl", [message(text=text)])
    (msg,), _ = load_messages(path)
    assert msg.text == text


_texts = st.text(st.characters(blacklist_categories=("Cs",)), max_size=40)
_records = st.lists(
    st.tuples(
        _texts,
        st.floats(-90, 90, allow_nan=False),
        st.floats(-180, 180, allow_nan=False),
    ),
    max_size=15,
)


@settings(max_examples=60, deadline=None)
@given(_records)
def test_write_then_load_round_trips(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("rt")
    src = write_jsonl(d / "a.jsonl", [message(f"m{i}", lat=lat, lon=lon, text=t) for i, (t, lat, lon) in enumerate(rows)])
    first, _ = load_messages(src)
    write_messages(d / "b.jsonl", first)
    second, stats = load_messages(d / "b.jsonl")
    assert first == second
    assert stats.rejected == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.one_of(st.binary(max_size=30), st.just(b'{"message_id": "x"}')), max_size=20))
def test_counts_always_add_up(tmp_path_factory, chunks):
    d = tmp_path_factory.mktemp("cnt")
    line = json.dumps(message("dup")).encode()
    body = b"\n".join(c.replace(b"\n", b" ") for c in chunks + [line, line])
    (d / "m.jsonl").write_bytes(body + b"\n")
    _, stats = load_messages(d / "m.jsonl")
    assert stats.accepted + stats.rejected + stats.duplicates == stats.total


# -------------------------------------------------------------- tracts


def test_four_unit_squares(tmp_path):
    feats = [feature(f"T{i}", square(i, 0)) for i in range(4)]
    tracts = load_tracts(write_fc(tmp_path / "t.json", feats))
    assert [t.tract_id for t in tracts] == ["T0", "T1", "T2", "T3"]


def test_unclosed_ring_is_closed(tmp_path, caplog):
    ring = [[0, 0], [1, 0], [1, 1], [0, 1]]
    (tract,) = load_tracts(write_fc(tmp_path / "t.json", [feature("T", ring)]))
    closed = tract.polygons[0][0]
    assert len(closed) == 5 and closed[0] == closed[-1]
    assert "unclosed" in caplog.text


def test_short_ring_is_fatal(tmp_path):
    with pytest.raises(IngestError):
        load_tracts(write_fc(tmp_path / "t.json", [feature("T", [[0, 0], [1, 0], [0, 0]])]))


def test_duplicate_tract_id_fatal(tmp_path):
    with pytest.raises(IngestError, match="duplicate"):
        load_tracts(write_fc(tmp_path / "t.json", [feature("T", square(0, 0)), feature("T", square(1, 0))]))


def test_non_polygon_skipped(tmp_path, caplog):
    point = {"type": "Feature", "properties": {"tract_id": "P"}, "geometry": {"type": "Point", "coordinates": [0, 0]}}
    tracts = load_tracts(write_fc(tmp_path / "t.json", [point, feature("T", square(0, 0))]))
    assert [t.tract_id for t in tracts] == ["T"]
    assert "skipped" in caplog.text


def test_demographics_null_is_missing(tmp_path):
    feats = [feature("T", square(0, 0), median_age=None, pct_employed=55.5)]
    (tract,) = load_tracts(write_fc(tmp_path / "t.json", feats))
    assert tract.demographics.median_age is None
    assert tract.demographics.pct_employed == 55.5


def test_percent_out_of_range_fatal(tmp_path):
    with pytest.raises(IngestError):
        load_tracts(write_fc(tmp_path / "t.json", [feature("T", square(0, 0), pct_bachelors=120)]))


def test_multipolygon_with_hole(tmp_path):
    hole = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.75], [0.75, 0.25], [0.25, 0.25]]
    geom = {"type": "MultiPolygon", "coordinates": [[square(0, 0), hole], [square(5, 5)]]}
    feat = {"type": "Feature", "properties": {"tract_id": "M"}, "geometry": geom}
    (tract,) = load_tracts(write_fc(tmp_path / "t.json", [feat]))
    assert len(tract.polygons) == 2 and len(tract.polygons[0]) == 2
    assert tract.bbox == (0.0, 0.0, 6.0, 6.0)


def test_grid_fixture_has_2000_closed_tracts(tmp_path, grid_tracts):
    write_tracts(tmp_path / "grid.geojson", grid_tracts)
    loaded = load_tracts(tmp_path / "grid.geojson")
    assert len(loaded) == 2000
    assert len({t.tract_id for t in loaded}) == 2000
    for t in loaded:
        for ring in t.rings():
            assert ring[0] == ring[-1] and len(ring) >= 4
    assert loaded == grid_tracts


# -------------------------------------------------------------- lexicons


def write_lex(path, body):
    path.write_text(body, encoding="utf-8")
    return path


def test_sentiment_lexicon_sections(tmp_path):
    lex = load_sentiment_lexicon(
        write_lex(
            tmp_path / "s.tsv",
            "# comment\n[terms]\nlove\t3\nhate\t-4\n[boosters]\nvery\t1\n[negators]\nnot\n"
            "[emoticons]\n:)\t2\n[idioms]\nover the moon\t4\n",
        )
    )
    assert lex.term_strengths["love"] == 3
    assert lex.boosters == {"very": 1}
    assert lex.negators == frozenset({"not"})
    assert lex.emoticons == {":)": 2}
    assert lex.idioms == {("over", "the", "moon"): 4}


@pytest.mark.parametrize("row", ["love\t7", "love\t0", "love\t-6", "love\tlots"])
def test_sentiment_strength_out_of_range(tmp_path, row):
    with pytest.raises(IngestError, match=r"s.tsv:3"):
        load_sentiment_lexicon(write_lex(tmp_path / "s.tsv", f"[terms]\nok\t1\n{row}\n"))


def test_term_and_emoticon_clash(tmp_path):
    with pytest.raises(IngestError, match="both"):
        load_sentiment_lexicon(write_lex(tmp_path / "s.tsv", "[terms]\nxd\t2\n[emoticons]\nxd\t2\n"))


def test_vad_line(tmp_path):
    lex = load_vad_lexicon(write_lex(tmp_path / "v.tsv", "happy\t8.21\t6.49\t7.21\n"))
    assert lex.entries["happy"] == (8.21, 6.49, 7.21)


@pytest.mark.parametrize("row", ["sad\t0.5\t3\t3", "sad\t2\t9.5\t3", "sad\t2\t3", "sad\tx\t3\t3"])
def test_vad_invalid_rows(tmp_path, row):
    with pytest.raises(IngestError, match=r"v.tsv:2"):
        load_vad_lexicon(write_lex(tmp_path / "v.tsv", f"calm\t6\t2\t6\n{row}\n"))


def test_bundled_lexicons(sentiment_lexicon, vad_lexicon):
    assert vad_lexicon.entries["happy"] == (8.21, 6.49, 7.21)
    assert sentiment_lexicon.term_strengths["love"] == 3
    assert sentiment_lexicon.term_strengths["hate"] == -4
    assert sentiment_lexicon.boosters["very"] == 1
    assert "not" in sentiment_lexicon.negators
    for v in vad_lexicon.entries.values():
        assert all(1 <= x <= 9 for x in v)
