"""Command-line interface: one binary, subcommand style.

Exit codes: 0 success, 1 usage/configuration error, 2 data error. Randomized
subcommands take --seed and otherwise default to a generated seed that is
printed and embedded in output metadata. An optional TOML config file supplies
defaults per subcommand; explicit flags override file values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .corpus import (
    build_index,
    eval_hashtags,
    iter_tweets,
    load_embeddings,
    parse_tweets,
    training_hashtags,
)
from .distances import (
    DistanceMatrix,
    TopicSlice,
    aggregate_topics,
    average_baseline,
    twin_matrix,
)
from .errors import ConfigError, DataError, PartylineError
from .experiments import (
    DEFAULT_FRACTIONS,
    export_centroids,
    run_full,
    run_groups,
    run_subsample,
    run_temporal,
    year_pool,
)
from .groundtruth import build_cmp_vectors, cmp_distance_matrix, load_codebook
from .mantel import Tail, mantel_test
from .pairgen import PairConfig, sample_pairs, write_pairs
from ._parallel import default_threads

# Options left at None by argparse may be filled from the TOML config file;
# anything still unset afterwards falls back to these.
_HARD_DEFAULTS = {
    "perms": 10_000,
    "tail": "greater",
    "exhaustive": "auto",
    "max_examples": 2_500_000,
    "min_parties": 3,
    "min_total": 50,
    "mode": "windows",
    "method": "topics",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


def _load_tweets(path: str):
    with open(path, "r", encoding="utf-8") as f:
        return parse_tweets(f)


def _resolve_seed(args) -> int:
    if args.seed is None:
        seed = int.from_bytes(os.urandom(4), "little")
        print(f"seed={seed} (generated; pass --seed to reproduce)", file=sys.stderr)
        return seed
    return args.seed


def _tail(value: str) -> Tail:
    try:
        return Tail(value)
    except ValueError:
        raise ConfigError(f"unknown tail {value!r}; use greater, less or two-sided") from None


def _load_reference(path: str) -> DistanceMatrix:
    """Accept either a distance-matrix CSV or a CMP counts CSV."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
    if [c.strip() for c in header.split(",")] == ["party", "category", "count"]:
        return cmp_distance_matrix(build_cmp_vectors(path))
    return DistanceMatrix.from_csv(path)


# -- subcommands ---------------------------------------------------------------

def _cmd_validate(args) -> int:
    checks = []
    tweets = None
    store = None

    def record(ok: bool, path: str, detail: str) -> None:
        checks.append({"path": path, "ok": ok, "detail": detail})
        if not args.json:
            stream = sys.stdout if ok else sys.stderr
            print(f"{'OK' if ok else 'FAIL'} {path}: {detail}", file=stream)

    for path in args.paths:
        suffix = Path(path).suffix.lower()
        try:
            if suffix == ".jsonl":
                # streamed: only ids are kept for the embedding cross-check
                tweets = set()
                with open(path, "r", encoding="utf-8") as f:
                    for rec in iter_tweets(f):
                        tweets.add(rec.id)
                record(True, path, f"tweets: {len(tweets)} records")
            elif suffix == ".plemb":
                store = load_embeddings(path, normalize=args.normalize)
                record(True, path, f"embeddings: {len(store)} rows, dim {store.dim}")
            elif suffix == ".csv":
                with open(path, "r", encoding="utf-8") as f:
                    header = f.readline().strip()
                if [c.strip() for c in header.split(",")] == ["party", "category", "count"]:
                    vectors = build_cmp_vectors(path)
                    record(True, path, f"cmp counts: {len(vectors)} parties")
                else:
                    matrix = DistanceMatrix.from_csv(path)
                    record(True, path, f"matrix: {matrix.n} x {matrix.n}")
            else:
                raise ConfigError(f"cannot infer file type of {path!r} (use .jsonl/.plemb/.csv)")
        except (DataError, OSError) as exc:
            record(False, path, str(exc))
    if tweets is not None and store is not None:
        missing = sorted(i for i in tweets if i not in store)
        if missing:
            shown = ", ".join(str(i) for i in missing[:5])
            record(
                False,
                "cross-check",
                f"{len(missing)} tweets without embedding rows (first: {shown})",
            )
        else:
            record(True, "cross-check", "every tweet has an embedding row")
    problems = sum(1 for c in checks if not c["ok"])
    if args.json:
        print(json.dumps({"checks": checks, "problems": problems}, indent=2))
    return 2 if problems else 0


def _cmd_index(args) -> int:
    tweets = _load_tweets(args.tweets)
    index = build_index(tweets, args.year)
    parties = (
        [p.strip() for p in args.parties.split(",")]
        if args.parties
        else sorted(index.parties())
    )
    stats = {
        "year": args.year,
        "tweets_indexed": len(index.party_of),
        "hashtags": len(index.postings),
        "parties": parties,
        "eval_hashtags": len(eval_hashtags(index, set(parties))) if parties else 0,
        "training_hashtags": len(training_hashtags(index)),
    }
    out = json.dumps(stats, indent=2)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    print(out)
    return 0


def _cmd_pairs(args) -> int:
    seed = _resolve_seed(args)
    tweets = _load_tweets(args.tweets)
    index = build_index(tweets, args.year)
    if args.window_start is not None or args.window_end is not None:
        if args.window_start is None or args.window_end is None:
            raise ConfigError("--window-start and --window-end must be given together")
        window = (args.window_start, args.window_end)
    else:
        # training data comes from the four years before the analysis year,
        # keeping the analysis year itself unseen
        window = (args.year - 4, args.year - 1)
    cfg = PairConfig(max_examples=args.max_examples, seed=seed, window_years=window)
    hashtags = training_hashtags(
        index, min_parties=args.min_parties, min_total=args.min_total
    )
    if not hashtags:
        raise DataError("no hashtag meets the training thresholds")
    pairs = sample_pairs(tweets, index, hashtags, cfg)
    write_pairs(pairs, {t.id: t.text for t in tweets}, args.out)
    meta = {
        "seed": seed,
        "year": args.year,
        "window_years": list(window) if window else None,
        "max_examples": args.max_examples,
        "n_pairs": len(pairs),
        "n_hashtags": len(hashtags),
        "generated": datetime.now(timezone.utc).isoformat(),
    }
    Path(str(args.out) + ".meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(pairs)} pairs to {args.out}")
    return 0


def _topic_matrix(pool, store, year, parties, bruteforce, threads):
    index = build_index(pool, year)
    use = parties or sorted(index.parties())
    shared = eval_hashtags(index, set(use))
    if not shared:
        raise DataError("no hashtag present across all parties")
    slices = []
    for h in sorted(shared):
        per_party: dict[str, list[int]] = {p: [] for p in use}
        for tweet_id in index.postings[h]:
            party = index.party_of[tweet_id]
            if party in per_party:
                per_party[party].append(store.row_of(tweet_id))
        slices.append(TopicSlice(hashtag=h, per_party=per_party))
    return aggregate_topics(slices, use, store, bruteforce=bruteforce, threads=threads)


def _cmd_distances(args) -> int:
    if args.method not in ("topics", "average", "twin"):
        raise ConfigError(f"method must be topics, average or twin, got {args.method!r}")
    tweets = _load_tweets(args.tweets)
    store = load_embeddings(args.embeddings, normalize=args.normalize)
    pool = year_pool(tweets, args.year)
    if not pool:
        raise DataError(f"no tweets for candidates of {args.year}")
    parties = [p.strip() for p in args.parties.split(",")] if args.parties else None

    if args.method == "topics":
        matrix = _topic_matrix(pool, store, args.year, parties, args.brute_force, args.threads)
    else:
        index = build_index(pool, args.year)
        sets: dict[str, list[int]] = {}
        for tweet_id, party in index.party_of.items():
            sets.setdefault(party, []).append(store.row_of(tweet_id))
        use = parties or sorted(sets)
        missing = [p for p in use if not sets.get(p)]
        if missing:
            raise DataError(f"no tweets for parties: {', '.join(missing)}")
        if args.method == "average":
            matrix = average_baseline(sets, store, parties=use)
        else:  # twin
            matrix = twin_matrix(sets, store, parties=use)
    matrix.to_csv(args.out)
    print(f"wrote {matrix.n} x {matrix.n} matrix to {args.out}")
    return 0


def _cmd_groundtruth(args) -> int:
    if args.codebook:
        vectors = build_cmp_vectors(args.counts, codebook=load_codebook(args.codebook))
    else:
        vectors = build_cmp_vectors(args.counts)
    matrix = cmp_distance_matrix(vectors)
    matrix.to_csv(args.out)
    print(f"wrote {matrix.n} x {matrix.n} ground-truth matrix to {args.out}")
    return 0


def _cmd_mantel(args) -> int:
    seed = _resolve_seed(args)
    a = DistanceMatrix.from_csv(args.a)
    b = DistanceMatrix.from_csv(args.b)
    if a.labels != b.labels and set(a.labels) == set(b.labels):
        b = b.reorder(a.labels)
    modes = {"auto": None, "on": True, "off": False}
    if args.exhaustive not in modes:
        raise ConfigError(f"exhaustive must be auto, on or off, got {args.exhaustive!r}")
    exhaustive = modes[args.exhaustive]
    result = mantel_test(
        a,
        b,
        permutations=args.perms,
        seed=seed,
        tail=_tail(args.tail),
        exhaustive=exhaustive,
        threads=args.threads,
    )
    if args.json:
        print(json.dumps(result.to_dict(), indent=2))
    else:
        print(
            f"r={result.r:.9g} p={result.p_value:.9g} n_perm={result.permutations} "
            f"tail={result.tail.value} seed={result.seed}"
        )
    return 0


def _emit_report(report, args) -> None:
    for run in report.runs:
        if run.ok:
            print(
                f"{report.name}: {run.config_summary}: r={run.mantel.r:.9g} "
                f"p={run.mantel.p_value:.9g} tweets={run.n_tweets} "
                f"hashtags={run.n_hashtags}"
            )
        else:
            print(f"{report.name}: {run.config_summary}: FAILED: {run.error}")
    if args.out_json:
        report.to_json(args.out_json)
    if args.out_csv:
        report.to_csv(args.out_csv)


def _cmd_experiment(args) -> int:
    seed = _resolve_seed(args)
    tweets = _load_tweets(args.tweets)
    store = load_embeddings(args.embeddings, normalize=args.normalize)
    reference = _load_reference(args.cmp)
    tail = _tail(args.tail)
    if args.kind == "full":
        report = run_full(
            tweets, store, reference, args.year,
            permutations=args.perms, seed=seed, tail=tail,
            bruteforce=args.brute_force,
        )
    elif args.kind == "subsample":
        fractions = (
            [float(v) for v in args.fractions.split(",")]
            if args.fractions
            else list(DEFAULT_FRACTIONS)
        )
        seeds = (
            [int(v) for v in args.seeds.split(",")]
            if args.seeds
            else [seed + i for i in range(5)]
        )
        report = run_subsample(
            tweets, store, reference, args.year,
            fractions=fractions, seeds=seeds,
            permutations=args.perms, tail=tail, threads=args.threads,
        )
    elif args.kind == "temporal":
        report = run_temporal(
            tweets, store, reference, args.year,
            mode=args.mode, permutations=args.perms, seed=seed, tail=tail,
        )
    else:
        report = run_groups(
            tweets, store, reference, args.year,
            permutations=args.perms, seed=seed, tail=tail,
        )
    _emit_report(report, args)
    return 0


def _cmd_centroids(args) -> int:
    tweets = _load_tweets(args.tweets)
    store = load_embeddings(args.embeddings, normalize=args.normalize)
    n = export_centroids(tweets, store, args.year, args.out)
    print(f"wrote {n} politician centroids to {args.out}")
    return 0


# -- wiring ----------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="partyline", description=__doc__)
    parser.add_argument("--version", action="version", version=f"partyline {__version__}")
    parser.add_argument("--config", help="TOML file with per-subcommand defaults")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker parallelism cap (default: PARTYLINE_THREADS or cpu count)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check tweet/embedding/CMP files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("index", help="build the hashtag index and print stats")
    p.add_argument("--tweets", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--parties", default=None, help="comma-separated party list")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("pairs", help="generate contrastive training pairs")
    p.add_argument("--tweets", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-examples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--window-start", type=int, default=None,
        help="first tweet year sampled (default: year-4)",
    )
    p.add_argument(
        "--window-end", type=int, default=None,
        help="last tweet year sampled, inclusive (default: year-1)",
    )
    p.add_argument("--min-parties", type=int, default=None)
    p.add_argument("--min-total", type=int, default=None)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("distances", help="compute an inter-party distance matrix")
    p.add_argument("--method", choices=["topics", "average", "twin"], default=None)
    p.add_argument("--tweets", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--parties", default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--brute-force", action="store_true")
    p.set_defaults(func=_cmd_distances)

    p = sub.add_parser("groundtruth", help="CMP counts CSV to distance matrix")
    p.add_argument("--counts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--codebook", default=None)
    p.set_defaults(func=_cmd_groundtruth)

    p = sub.add_parser("mantel", help="Mantel test between two matrix CSVs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--perms", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tail", default=None)
    p.add_argument("--exhaustive", choices=["auto", "on", "off"], default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_mantel)

    p = sub.add_parser("experiment", help="run an evaluation experiment")
    p.add_argument("kind", choices=["full", "subsample", "temporal", "groups"])
    p.add_argument("--tweets", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--cmp", required=True, help="counts CSV or matrix CSV")
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--perms", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tail", default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--brute-force", action="store_true")
    p.add_argument("--fractions", default=None, help="comma-separated, subsample only")
    p.add_argument("--seeds", default=None, help="comma-separated, subsample only")
    p.add_argument("--mode", choices=["windows", "months"], default=None)
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("centroids", help="export per-politician tweet centroids")
    p.add_argument("--tweets", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=_cmd_centroids)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    """Fill options still at None from the TOML config file, then apply the
    hard defaults. Explicit flags always win because they are non-None;
    boolean flags default to False and may be switched on by the file."""
    if args.config:
        with open(args.config, "rb") as f:
            config = tomllib.load(f)
        section = config.get(args.command, {})
        merged = {**{k: v for k, v in config.items() if not isinstance(v, dict)}, **section}
        for key, value in merged.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                continue
            current = getattr(args, attr)
            if current is None or (current is False and isinstance(value, bool)):
                setattr(args, attr, value)
    for attr, value in _HARD_DEFAULTS.items():
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if args.threads is None:
        args.threads = default_threads()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PartylineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
