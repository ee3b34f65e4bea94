import json

import pytest

from geoemotion import fixtures
from geoemotion.ingest import (
    BUNDLED_LEMMA_EXCEPTIONS,
    BUNDLED_SENTIMENT_LEXICON,
    BUNDLED_VAD_LEXICON,
    bundled_path,
    load_lemma_exceptions,
    load_sentiment_lexicon,
    load_vad_lexicon,
)
from geoemotion.sentiment import Scorer
from geoemotion.tokenize import Lemmatizer


@pytest.fixture(scope="session")
def sentiment_lexicon():
    return load_sentiment_lexicon(bundled_path(BUNDLED_SENTIMENT_LEXICON))


@pytest.fixture(scope="session")
def vad_lexicon():
    return load_vad_lexicon(bundled_path(BUNDLED_VAD_LEXICON))


@pytest.fixture(scope="session")
def lemmatizer():
    return Lemmatizer(load_lemma_exceptions(bundled_path(BUNDLED_LEMMA_EXCEPTIONS)))


@pytest.fixture(scope="session")
def scorer(sentiment_lexicon, vad_lexicon, lemmatizer):
    return Scorer(sentiment_lexicon, vad_lexicon, lemmatizer)


@pytest.fixture(scope="session")
def grid_spec():
    return fixtures.GridSpec()


@pytest.fixture(scope="session")
def grid_tracts(grid_spec):
    return fixtures.grid_tracts(grid_spec)


@pytest.fixture(scope="session")
def city_dir(tmp_path_factory):
    """Synthetic city written once per session."""
    out = tmp_path_factory.mktemp("city")
    fixtures.write_city(out)
    return out


@pytest.fixture(scope="session")
def city_truth(city_dir):
    return json.loads((city_dir / "ground_truth.json").read_text())


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r if isinstance(r, str) else json.dumps(r))
            fh.write("\n")
    return path


def message(mid="m1", user="u1", lat=34.0, lon=-118.0, text="hello", ts="2014-07-01T10:00:00Z"):
    return {"message_id": mid, "user_id": user, "timestamp": ts, "lat": lat, "lon": lon, "text": text}


@pytest.fixture(scope="session")
def city_run(city_dir):
    """Single-worker pipeline run over the city; (status, manifest, out_dir, seconds)."""
    import time

    from geoemotion.pipeline import PipelineConfig, run_pipeline

    cfg = PipelineConfig.from_file(city_dir / "config.json", {"workers": 1})
    t0 = time.perf_counter()
    status, manifest = run_pipeline(cfg)
    return status, manifest, city_dir / "out", time.perf_counter() - t0
