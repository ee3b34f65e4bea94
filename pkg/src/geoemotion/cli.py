"""Command-line entry point.

Each stage subcommand reads and writes the TSV interchange tables; ``run``
chains all stages in memory from a JSON config file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .checkin import find_checkins
from .errors import IngestError, InvariantError
from .geo import build_index, localize
from .ingest import (
    BUNDLED_LEMMA_EXCEPTIONS,
    BUNDLED_SENTIMENT_LEXICON,
    BUNDLED_STOPWORDS,
    BUNDLED_VAD_LEXICON,
    bundled_path,
    load_lemma_exceptions,
    load_messages,
    load_sentiment_lexicon,
    load_stopwords,
    load_tracts,
    load_vad_lexicon,
    write_messages,
)
from .interchange import (
    read_checkins,
    read_localized,
    read_scores,
    read_tract_mobility,
    write_checkins,
    write_localized,
    write_scores,
    write_tract_mobility,
    write_user_mobility,
)
from .mobility import tract_mobility, user_mobilities
from .pipeline import PipelineConfig, run_pipeline
from .report import (
    COHORT_KEYS,
    METRIC_FIELDS,
    aggregate_tracts,
    build_cohorts,
    compare,
    correlation_matrix,
    metric_overlay,
    read_aggregates,
    tract_term_frequencies,
    write_aggregates,
    write_correlations_csv,
    write_overlay,
    write_summary_csv,
)
from .sentiment import Scorer, score_messages
from .tokenize import Lemmatizer

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2
ALPHA = 0.05

logger = logging.getLogger("geoemotion")


@contextmanager
def _output(path):
    """Text handle on ``path``, or stdout for None / "-"."""
    if path in (None, "-"):
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _read(path, reader):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return reader(fh)
    except OSError as exc:
        raise IngestError(f"cannot read: {exc.strerror}", path) from None


def _messages(args):
    messages, stats = load_messages(args.messages, strict=getattr(args, "strict", False))
    if not messages:
        raise IngestError("no valid messages", args.messages)
    return messages


# --------------------------------------------------------------------------
# stage commands
# --------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    messages, stats = load_messages(args.messages, strict=args.strict)
    if args.out:
        write_messages(args.out, messages)
    summary = stats.as_dict()
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if stats.accepted else EXIT_INPUT


def cmd_localize(args) -> int:
    messages = _messages(args)
    index = build_index(load_tracts(args.tracts))
    located = localize(index, [(m.lat, m.lon) for m in messages], args.workers)
    with _output(args.out) as fh:
        write_localized(fh, {m.message_id: t for m, t in zip(messages, located)})
    return EXIT_OK


def cmd_checkins(args) -> int:
    messages = _messages(args)
    if args.localized:
        assignments = _read(args.localized, read_localized)
    elif args.tracts:
        index = build_index(load_tracts(args.tracts))
        located = localize(index, [(m.lat, m.lon) for m in messages], args.workers)
        assignments = {m.message_id: t for m, t in zip(messages, located)}
    else:
        assignments = {}
    with _output(args.out) as fh:
        write_checkins(fh, find_checkins(messages, args.workers), assignments)
    return EXIT_OK


def _scorer(args) -> Scorer:
    senti = load_sentiment_lexicon(args.sentiment_lexicon or bundled_path(BUNDLED_SENTIMENT_LEXICON))
    vad = load_vad_lexicon(args.vad_lexicon or bundled_path(BUNDLED_VAD_LEXICON))
    exceptions = load_lemma_exceptions(args.lemma_exceptions or bundled_path(BUNDLED_LEMMA_EXCEPTIONS))
    return Scorer(senti, vad, Lemmatizer(exceptions))


def cmd_score(args) -> int:
    messages = _messages(args)
    scores = score_messages(messages, _scorer(args), args.workers)
    with _output(args.out) as fh:
        write_scores(fh, scores)
    return EXIT_OK


def cmd_mobility(args) -> int:
    messages = _messages(args)
    assignments = _read(args.localized, read_localized)
    restrict = None
    if args.scope == "checkins":
        if not args.checkins:
            raise IngestError("--scope checkins needs --checkins")
        restrict = {c.message_id for c, _ in _read(args.checkins, read_checkins)}
    users = user_mobilities(messages, restrict_to=restrict, workers=args.workers)
    pairs = {
        m.message_id: (m.user_id, assignments.get(m.message_id))
        for m in messages
        if restrict is None or m.message_id in restrict
    }
    with _output(args.users_out) as fh:
        write_user_mobility(fh, users.values())
    with _output(args.tracts_out) as fh:
        write_tract_mobility(fh, tract_mobility(users, pairs).values())
    return EXIT_OK


def cmd_test(args) -> int:
    aggregates = _read(args.aggregates, read_aggregates)
    if args.metric not in METRIC_FIELDS:
        raise IngestError(f"unknown metric {args.metric!r}")
    cohorts = build_cohorts(aggregates, args.k)
    res = compare(cohorts, aggregates, args.metric, args.cohort_a, args.cohort_b, args.method, args.alternative)
    if res.p_value is None:
        print(f"{args.metric}: not enough tracts to compare {args.cohort_a} ({res.n_a}) and {args.cohort_b} ({res.n_b})")
        return EXIT_INPUT
    stat_name = "U" if args.method == "rank-sum" else "t"
    z = "NA" if res.z_value is None else f"{res.z_value:.4f}"
    verdict = "significant" if res.significant(ALPHA) else "not significant"
    print(f"metric\t{args.metric}")
    print(f"cohorts\t{args.cohort_a} (n={res.n_a}) vs {args.cohort_b} (n={res.n_b})")
    print(f"means\t{_fmt(res.mean_a)}\t{_fmt(res.mean_b)}")
    print(f"{stat_name}\t{res.statistic:.4f}")
    print(f"z\t{z}")
    print(f"p\t{res.p_value:.6g}")
    print(f"method\t{res.method}")
    print(f"verdict\t{verdict} at alpha={ALPHA}")
    return EXIT_OK


def _fmt(value):
    return "NA" if value is None else f"{value:.4f}"


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


def cmd_report_aggregate(args) -> int:
    messages = _messages(args)
    assignments = _read(args.localized, read_localized)
    scores = _read(args.scores, read_scores)
    checkin_ids = {c.message_id for c, _ in _read(args.checkins, read_checkins)}
    mobility = _read(args.tracts_mobility, read_tract_mobility) if args.tracts_mobility else {}
    tracts = load_tracts(args.tracts) if args.tracts else []
    aggregates = aggregate_tracts(
        messages, assignments, scores, checkin_ids, mobility, tracts, args.include_checkin_emotion
    )
    with _output(args.out) as fh:
        write_aggregates(fh, aggregates)
    return EXIT_OK


def cmd_report_summary(args) -> int:
    aggregates = _read(args.aggregates, read_aggregates)
    cohorts = build_cohorts(aggregates, args.k, args.region)
    with _output(args.out) as fh:
        write_summary_csv(fh, cohorts, aggregates, args.pooling)
    return EXIT_OK


def cmd_report_geojson(args) -> int:
    aggregates = _read(args.aggregates, read_aggregates)
    if args.metric not in METRIC_FIELDS:
        raise IngestError(f"unknown metric {args.metric!r}")
    overlay = metric_overlay(load_tracts(args.tracts), aggregates, args.metric)
    with _output(args.out) as fh:
        write_overlay(fh, overlay)
    return EXIT_OK


def cmd_report_terms(args) -> int:
    messages = _messages(args)
    assignments = _read(args.localized, read_localized)
    stopwords = load_stopwords(args.stopwords or bundled_path(BUNDLED_STOPWORDS))
    try:
        ranked = tract_term_frequencies(args.tract, messages, assignments, stopwords)
    except KeyError as exc:
        raise IngestError(exc.args[0]) from None
    if args.top is not None:
        ranked = ranked[: args.top]
    with _output(args.out) as fh:
        fh.write("term\tcount\n")
        for term, count in ranked:
            fh.write(f"{term}\t{count}\n")
    return EXIT_OK


def cmd_report_correlations(args) -> int:
    aggregates = _read(args.aggregates, read_aggregates)
    metrics = [f.strip() for f in args.fields.split(",") if f.strip()]
    if not metrics:
        raise IngestError("--fields lists no fields")
    try:
        matrix = correlation_matrix(aggregates, metrics)
    except ValueError as exc:
        raise IngestError(str(exc)) from None
    with _output(args.out) as fh:
        write_correlations_csv(fh, matrix, metrics)
    return EXIT_OK


# --------------------------------------------------------------------------
# run and fixtures
# --------------------------------------------------------------------------


def cmd_run(args) -> int:
    overrides = {
        "k": args.k,
        "workers": args.workers,
        "output_dir": None if args.output_dir is None else str(Path(args.output_dir).resolve()),
        "rg_scope": args.rg_scope,
        "region": args.region,
        "test_method": args.method,
        "pooling": args.pooling,
    }
    if args.strict:
        overrides["strict"] = True
    if args.include_checkin_emotion:
        overrides["include_checkin_emotion"] = True
    config = PipelineConfig.from_file(args.config, overrides)
    status, manifest = run_pipeline(config)
    if status:
        print(f"geoemotion: {manifest.get('error')}", file=sys.stderr)
    else:
        c = manifest["counts"]
        print(
            f"{c['messages_accepted']} messages, {c['messages_localized']} localized, "
            f"{c['checkins_found']} check-ins; outputs in {config.output_dir}"
        )
    return status


def cmd_fixtures(args) -> int:
    from . import fixtures

    if args.kind == "city":
        spec = fixtures.CitySpec(
            **{k: v for k, v in (("n_messages", args.messages), ("n_users", args.users), ("seed", args.seed)) if v is not None}
        )
        truth = fixtures.write_city(args.out, spec)
        print(f"city fixture: {truth['accepted']} messages, {truth['tracts_total']} tracts -> {args.out}")
    elif args.kind == "grid":
        truth = fixtures.write_grid(args.out)
        print(f"grid fixture: {truth['tracts']} tracts -> {args.out}")
    else:
        truth = fixtures.write_corrupted(args.out)
        print(f"corrupted corpus: {truth['total']} lines, {truth['rejected']} malformed -> {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoemotion", description="Tract-level emotion, check-in and mobility analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, messages=True, workers=True):
        if messages:
            p.add_argument("--messages", required=True, help="JSONL message corpus")
            p.add_argument("--strict", action="store_true", help="fail on the first malformed line")
        if workers:
            p.add_argument("--workers", type=_positive_int, default=1)
        p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("ingest", help="validate a message corpus and report counts")
    p.add_argument("messages")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", help="write the accepted messages as JSONL")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("localize", help="assign messages to tracts")
    common(p)
    p.add_argument("--tracts", required=True)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("checkins", help="extract check-ins")
    common(p)
    p.add_argument("--localized", help="localized table from 'localize'")
    p.add_argument("--tracts", help="localize on the fly instead")
    p.set_defaults(func=cmd_checkins)

    p = sub.add_parser("score", help="sentiment and VAD scores per message")
    common(p)
    p.add_argument("--sentiment-lexicon")
    p.add_argument("--vad-lexicon")
    p.add_argument("--lemma-exceptions")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("mobility", help="per-user r_g and per-tract R_g")
    common(p)
    p.add_argument("--localized", required=True)
    p.add_argument("--checkins", help="check-in table, for --scope checkins")
    p.add_argument("--scope", choices=("all", "checkins"), default="all")
    p.add_argument("--users-out", required=True)
    p.add_argument("--tracts-out", required=True)
    p.set_defaults(func=cmd_mobility)

    p = sub.add_parser("test", help="compare a tract metric between two cohorts")
    p.add_argument("--aggregates", required=True)
    p.add_argument("--metric", required=True, choices=METRIC_FIELDS)
    p.add_argument("--cohort-a", required=True, choices=COHORT_KEYS)
    p.add_argument("--cohort-b", required=True, choices=COHORT_KEYS)
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--method", choices=("rank-sum", "t"), default="rank-sum")
    p.add_argument("--alternative", choices=("two-sided", "less", "greater"), default="two-sided")
    p.set_defaults(func=cmd_test)

    report = sub.add_parser("report", help="aggregate tables and reports")
    rsub = report.add_subparsers(dest="report_command", required=True)

    p = rsub.add_parser("aggregate", help="per-tract aggregates from stage tables")
    common(p, workers=False)
    p.add_argument("--localized", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--checkins", required=True)
    p.add_argument("--tracts-mobility")
    p.add_argument("--tracts", help="tract file, for demographics")
    p.add_argument("--include-checkin-emotion", action="store_true")
    p.set_defaults(func=cmd_report_aggregate)

    p = rsub.add_parser("summary", help="cohort summary table (CSV)")
    p.add_argument("--aggregates", required=True)
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--region", default="", help="label for the all-tracts row, e.g. LA")
    p.add_argument("--pooling", choices=("tract", "message"), default="tract")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report_summary)

    p = rsub.add_parser("geojson", help="tract polygons annotated with a metric")
    p.add_argument("--aggregates", required=True)
    p.add_argument("--tracts", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report_geojson)

    p = rsub.add_parser("terms", help="term frequencies for one tract")
    common(p, workers=False)
    p.add_argument("--localized", required=True)
    p.add_argument("--tract", required=True)
    p.add_argument("--top", type=_positive_int)
    p.add_argument("--stopwords")
    p.set_defaults(func=cmd_report_terms)

    p = rsub.add_parser("correlations", help="Pearson correlations between tract fields")
    p.add_argument("--aggregates", required=True)
    p.add_argument("--fields", required=True, help="comma-separated field names")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report_correlations)

    p = sub.add_parser("run", help="run the whole pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=_positive_int)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--output-dir")
    p.add_argument("--rg-scope", choices=("all", "checkins"))
    p.add_argument("--region")
    p.add_argument("--method", choices=("rank-sum", "t"))
    p.add_argument("--pooling", choices=("tract", "message"))
    p.add_argument("--strict", action="store_true")
    p.add_argument("--include-checkin-emotion", action="store_true")
    p.set_defaults(func=cmd_run)

    fx = sub.add_parser("fixtures", help="synthetic datasets with ground truth")
    fsub = fx.add_subparsers(dest="fixtures_command", required=True)
    p = fsub.add_parser("generate")
    p.add_argument("--kind", choices=("city", "grid", "corrupted"), default="city")
    p.add_argument("--out", required=True)
    p.add_argument("--messages", type=_positive_int)
    p.add_argument("--users", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are input errors; 2 is reserved for failed invariants
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except IngestError as exc:
        print(f"geoemotion: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"geoemotion: internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"geoemotion: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
