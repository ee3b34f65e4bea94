import math
import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoemotion import fixtures
from geoemotion.ingest import GeoMessage, SentimentLexicon, VadLexicon
from geoemotion.sentiment import lexicon_coverage, score_messages, score_sentistrength, score_vad
from geoemotion.tokenize import tokenize

TEST_LEXICON = SentimentLexicon(
    term_strengths={"love": 3, "hate": -4, "sad": -3, "awesome": 4, "enjoy*": 2, "bad": -2},
    boosters={"very": 1, "extremely": 2, "slightly": -1},
    negators=frozenset({"not", "never", "don't"}),
    emoticons={":)": 2, ":(": -2, "<3": 3},
    idioms={("over", "the", "moon"): 4, ("not", "bad"): 2, ("sick", "of"): -3},
)


def senti(text, lexicon=TEST_LEXICON):
    s = score_sentistrength(tokenize(text), lexicon)
    return s.positive, s.negative


@pytest.mark.parametrize(
    "text, expected",
    [
        ("", (1, -1)),
        ("nothing to see here", (1, -1)),
        ("very love", (4, -1)),
        ("hate", (1, -4)),
        ("not love", (1, -1)),
        ("LOVE", (3, -1)),
        ("#love", (3, -1)),
        ("@love http://love.com", (1, -1)),
        ("enjoying it", (2, -1)),
        ("extremely awesome", (5, -1)),  # 4 + 2 clamped
        ("slightly sad", (1, -2)),
        ("not hate", (1, -2)),  # 4 halved
        ("not sad", (1, -1)),  # 3 // 2 = 1
        ("not very hate", (1, -2)),  # boost to 5, then halve
        ("never so love", (1, -1)),  # "so" is no lexicon token here: negator is adjacent
        ("not :) ", (1, -1)),
        ("loooove", (4, -1)),  # elongation bonus
        ("haaate", (1, -5)),
        ("not loooove", (1, -1)),  # neutralized units get no bonus
        ("over the moon", (4, -1)),
        ("over the moon :(", (4, -2)),
        ("not bad", (2, -1)),  # idiom wins over negation
        ("bad", (1, -2)),
        ("sick of it", (1, -3)),
        ("love and hate", (3, -4)),
        (":) <3", (3, -1)),
        ("love :( sad", (3, -3)),
        ("very", (1, -1)),
        ("not", (1, -1)),
    ],
)
def test_rule_traces(text, expected):
    assert senti(text) == expected


def test_bundled_lexicon_examples(sentiment_lexicon):
    assert senti("very love", sentiment_lexicon) == (4, -1)
    assert senti("hate", sentiment_lexicon) == (1, -4)
    assert senti("not love", sentiment_lexicon) == (1, -1)
    assert senti("soooo happy :)", sentiment_lexicon) == (4, -1)
    assert senti("happpyyy", sentiment_lexicon) == (4, -1)


@settings(max_examples=500)
@given(st.text(max_size=80))
def test_bounds_on_arbitrary_text(sentiment_lexicon, text):
    p, n = senti(text, sentiment_lexicon)
    assert 1 <= p <= 5 and -5 <= n <= -1


_base_words = st.sampled_from(
    ["love", "hate", "very", "not", "never", "over", "the", "moon", "sick", "of", ":)", ":(", "bad", "loooove", "enjoying"]
)
_noise = st.from_regex(r"[a-z]{1,8}|[0-9]{1,4}|@[a-z]{2,6}|https?://x\.co/[a-z]{3}", fullmatch=True)


def _is_noise(word):
    toks = tokenize(word)
    if len(toks) != 1:
        return False
    tok = toks[0]
    if tok.kind in ("word", "hashtag-word"):
        return not any(TEST_LEXICON.knows_word(v) for v in tok.variants())
    return tok.kind in ("url", "mention")


@settings(max_examples=500)
@given(st.lists(_base_words, max_size=8), _noise.filter(_is_noise), st.integers(0, 8))
def test_non_lexicon_token_never_changes_score(words, noise, position):
    before = senti(" ".join(words))
    position = min(position, len(words))
    after = senti(" ".join(words[:position] + [noise] + words[position:]))
    assert before == after


# -------------------------------------------------------------- VAD


VAD = VadLexicon(
    {
        "happy": (8.21, 6.49, 7.21),
        "low": (2.0, 3.0, 4.0),
        "high": (6.0, 5.0, 4.0),
        "smile": (7.5, 5.0, 6.0),
        "party": (7.0, 7.2, 6.1),
        "child": (7.1, 4.6, 5.0),
        "go": (5.5, 4.0, 5.9),
    }
)


def vad(text, lemmatizer=None):
    return score_vad(tokenize(text), VAD, lemmatizer)


def test_no_match_is_none():
    assert vad("nothing here") is None
    assert vad("") is None


def test_single_lemma_exact():
    res = vad("so happy today")
    assert (res.valence, res.arousal, res.dominance, res.matched_terms) == (8.21, 6.49, 7.21, 1)


def test_mean_of_two():
    res = vad("low then high")
    assert (res.valence, res.arousal, res.dominance, res.matched_terms) == (4.0, 4.0, 4.0, 2)


def test_repeats_are_counted():
    res = vad("low low high")
    assert res.matched_terms == 3
    assert res.valence == pytest.approx((2 + 2 + 6) / 3)


def test_inflections_and_exceptions(lemmatizer):
    res = vad("smiles parties children went", lemmatizer)
    assert res.matched_terms == 4
    assert res.valence == pytest.approx((7.5 + 7.0 + 7.1 + 5.5) / 4)


def test_urls_mentions_never_match():
    assert vad("@happy http://happy.com") is None
    assert vad("#happy").matched_terms == 1


def test_messages_match_bruteforce_mean(vad_lexicon, lemmatizer):
    """1,000 generated messages against a direct mean over the planted lemmas."""
    rng = random.Random(21)
    _, vad_words, _, _, _ = fixtures.city_pools()
    for _ in range(1000):
        planted = [rng.choice(vad_words) for _ in range(rng.randint(0, 4))]
        words = rng.sample(fixtures.FILLER_WORDS, 3) + planted
        rng.shuffle(words)
        res = score_vad(tokenize(" ".join(words)), vad_lexicon, lemmatizer)
        if not planted:
            assert res is None
            continue
        triples = [vad_lexicon.entries[w] for w in planted]
        assert res.matched_terms == len(planted)
        for dim in range(3):
            expected = math.fsum(t[dim] for t in triples) / len(triples)
            got = (res.valence, res.arousal, res.dominance)[dim]
            assert got == expected
            assert min(t[dim] for t in triples) <= got <= max(t[dim] for t in triples)


@settings(max_examples=300)
@given(st.lists(st.sampled_from(sorted(VAD.entries) + ["fill", "word", "x"]), max_size=10))
def test_vad_within_matched_range(words):
    res = vad(" ".join(words))
    matched = [VAD.entries[w] for w in words if w in VAD.entries]
    if not matched:
        assert res is None
        return
    for dim, value in enumerate((res.valence, res.arousal, res.dominance)):
        assert min(t[dim] for t in matched) - 1e-12 <= value <= max(t[dim] for t in matched) + 1e-12


# -------------------------------------------------------------- coverage and corpus scoring


def test_coverage_extremes(vad_lexicon):
    assert lexicon_coverage(["happy"] * 10, vad_lexicon) == 1.0
    assert lexicon_coverage(["zzz qqq"] * 10, vad_lexicon) == 0.0
    with pytest.raises(ValueError):
        lexicon_coverage([], vad_lexicon)


def test_coverage_fixture_is_exact(vad_lexicon, lemmatizer):
    texts, flags = fixtures.coverage_corpus()
    assert lexicon_coverage(texts, vad_lexicon, lemmatizer) == sum(flags) / len(flags) == 0.82


def _msgs(texts):
    ts = datetime(2014, 7, 1, tzinfo=timezone.utc)
    return [GeoMessage(f"m{i:05d}", "u", ts, 34.0, -118.0, t) for i, t in enumerate(texts)]


def test_corpus_scoring_independent_of_workers(scorer):
    texts, _ = fixtures.coverage_corpus(n=400, seed=3)
    msgs = _msgs(texts)
    rng = random.Random(0)
    shuffled = msgs[:]
    rng.shuffle(shuffled)
    one = score_messages(msgs, scorer, workers=1)
    assert score_messages(shuffled, scorer, workers=3) == one
    assert [s.message_id for s in one] == sorted(m.message_id for m in msgs)


def test_scorer_matches_components(scorer, sentiment_lexicon, vad_lexicon, lemmatizer):
    text = "sooo happy at the beach :) not bad"
    senti_score, vad_score = scorer.score_text(text)
    assert senti_score == score_sentistrength(tokenize(text), sentiment_lexicon)
    assert vad_score == score_vad(tokenize(text), vad_lexicon, lemmatizer)
