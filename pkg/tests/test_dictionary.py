import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialaug.corpus import Corpus, make_example, normalize_text
from dialaug.dictionary import (
    DictEntry,
    DomainDictionary,
    dictionary_stats,
    dump_dictionary,
    emit_extraction_prompts,
    ingest_terms,
    load_dictionary,
    merge_dictionaries,
    prompt_records,
    save_dictionary,
)


def _dict(domain, terms, prov="llm"):
    return DomainDictionary.from_entries(domain, [DictEntry(t, prov) for t in terms])


def _corpus(*responses):
    return Corpus("film", "train", tuple(make_example(["hi"], r) for r in responses))


def test_prompts():
    assert emit_extraction_prompts(_corpus(), "Film") == []
    [p] = emit_extraction_prompts(_corpus("do you like avatar"), "Film", language="en")
    assert "do you like avatar" in p and "Film" in p
    assert "hi" in p
    ps = emit_extraction_prompts(_corpus("one", "two", "three"), "Film")
    assert len(ps) == 3 and "one" in ps[0] and "three" in ps[2]
    with pytest.raises(ValueError):
        emit_extraction_prompts(_corpus("x"), "")


def test_prompt_records_fields():
    assert prompt_records(["p0", "p1"]).splitlines()[1] == '{"example_id": 1, "prompt": "p1"}'


def test_ingest_examples():
    assert ingest_terms(["Avatar", "avatar", ""]) == [DictEntry("avatar", "llm")]
    assert ingest_terms(["$P"]) == []
    assert ingest_terms(["  Star  Wars "], "termbank") == [DictEntry("star wars", "termbank")]


@settings(max_examples=1000)
@given(st.lists(st.text(alphabet="aAbB $P好\t", max_size=6), max_size=10))
def test_ingest_matches_naive_oracle(lines):
    expected = set()
    for raw in lines:
        t = normalize_text(raw)
        if t and "$P" not in t:
            expected.add(t)
    got = ingest_terms(lines)
    assert {e.term for e in got} == expected
    assert len(got) == len(expected)


def test_entry_invariants():
    for bad in ("", "$P", "a\nb", " a"):
        with pytest.raises(ValueError):
            DictEntry(bad)
    with pytest.raises(ValueError):
        DictEntry("x", "web")


def test_merge_examples():
    a = _dict("film", ["a", "b"])
    assert merge_dictionaries([a]) == a
    merged = merge_dictionaries([a, _dict("film", ["b", "c"])])
    assert merged.terms == {"a", "b", "c"}
    prov = merge_dictionaries([_dict("film", ["x"], "llm"), _dict("film", ["x"], "termbank")])
    assert prov.entries["x"].provenance == "termbank"
    top = merge_dictionaries([_dict("film", ["x"], "manual"), _dict("film", ["x"], "termbank")])
    assert top.entries["x"].provenance == "manual"


def test_merge_domain_mismatch_names_both():
    with pytest.raises(ValueError, match="film.*music"):
        merge_dictionaries([_dict("film", ["a"]), _dict("music", ["a"])])


PROV = st.sampled_from(["llm", "termbank", "manual"])
DICTS = st.lists(st.lists(st.tuples(st.sampled_from("abcd"), PROV), max_size=5), min_size=1,
                 max_size=4).map(lambda ds: [DomainDictionary.from_entries(
                     "d", [DictEntry(t, p) for t, p in d]) for d in ds])


@given(DICTS, st.randoms())
def test_merge_order_independent(dicts, rnd):
    shuffled = list(dicts)
    rnd.shuffle(shuffled)
    assert merge_dictionaries(dicts) == merge_dictionaries(shuffled)
    nested = merge_dictionaries([merge_dictionaries(dicts[:1]), merge_dictionaries(dicts)])
    assert nested == merge_dictionaries(dicts)


def test_stats_examples():
    c = _corpus("i saw avatar", "nothing", "avatar again")
    assert dictionary_stats(c, DomainDictionary("film")).to_json() == {
        "keyword_count": 0, "coverage": 0.0, "replaced_tokens": 0, "match_events": 0}
    s = dictionary_stats(c, _dict("film", ["avatar"]))
    assert (s.keyword_count, s.coverage, s.replaced_tokens) == (1, 2 / 3, 2)
    with pytest.raises(ValueError):
        dictionary_stats(Corpus("film", "train", ()), _dict("film", ["a"]))


def test_full_coverage_is_exactly_one():
    c = _corpus("a x", "y a", "a")
    assert dictionary_stats(c, _dict("film", ["a"])).coverage == 1.0


WORDS = st.sampled_from(["a", "b", "c", "a b", "b c", "c a"])
SENTS = st.lists(st.lists(st.sampled_from("abc"), min_size=1, max_size=6).map(" ".join),
                 min_size=1, max_size=5)


@given(SENTS, st.sets(WORDS), st.sets(WORDS))
def test_coverage_monotone(sents, base, extra):
    c = _corpus(*sents)
    small = dictionary_stats(c, _dict("film", base))
    big = dictionary_stats(c, _dict("film", base | extra))
    assert big.coverage >= small.coverage


def test_replaced_tokens_can_drop_under_leftmost_longest():
    # A new short term that starts earlier pre-empts a longer one.
    c = _corpus("a b c d")
    before = dictionary_stats(c, _dict("film", ["b c d"]))
    after = dictionary_stats(c, _dict("film", ["b c d", "a b"]))
    assert (before.replaced_tokens, after.replaced_tokens) == (3, 2)


def test_file_round_trip(tmp_path):
    d = merge_dictionaries([_dict("film", ["star wars", "avatar"], "manual"),
                            _dict("film", ["导演"], "llm")])
    p = tmp_path / "film.dict"
    save_dictionary(d, p)
    assert load_dictionary(p) == d
    assert dump_dictionary(load_dictionary(p)) == p.read_text(encoding="utf-8")


def test_load_plain_file(tmp_path):
    p = tmp_path / "music.txt"
    p.write_text("# comment\nJay Chou\n\njay chou\t manual\n$P\n", encoding="utf-8")
    d = load_dictionary(p)
    assert d.domain == "music"
    assert d.entries == {"jay chou": DictEntry("jay chou", "manual")}
