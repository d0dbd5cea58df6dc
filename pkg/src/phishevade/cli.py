"""Command-line entry point.

Exit codes: 0 success (for attack: evaded), 2 usage or configuration error,
3 attack finished its budget without evading, 4 oracle transport/contract
error. stdout carries only machine-readable payloads; diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dom, evaluation, manipulations
from .detectors import (ForestConfig, LogisticConfig, ModelDetector, OracleError,
                        RemoteDetector, calibrate_threshold, load_model,
                        save_model, train_lr, train_rf)
from .features import FeatureVector, extract_all
from .optimizer import AttackConfig, AttackConfigError, attack

log = logging.getLogger("phishevade")


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _read_config(path: str) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"config line {lineno}: expected KEY=VALUE, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _apply_config(args: argparse.Namespace, parser_actions) -> None:
    """Fill unset flags from the config file; flags always win."""
    if not args.config:
        return
    values = _read_config(args.config)
    by_dest = {a.dest: a for a in parser_actions}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in by_dest or getattr(args, dest, None) is not None:
            continue
        action = by_dest[dest]
        try:
            if action.type is not None:
                setattr(args, dest, action.type(raw))
            elif isinstance(action, argparse._StoreTrueAction):
                setattr(args, dest, raw.lower() in ("1", "true", "yes"))
            else:
                setattr(args, dest, raw)
        except (TypeError, ValueError) as exc:
            raise CliError(f"config key {key}: {exc}")


def _load_page(path: str, url: str) -> dom.HtmlPage:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read page file: {exc}")
    try:
        return dom.parse_html(data, url)
    except ValueError as exc:
        raise CliError(str(exc))


def _page_url(args) -> str:
    if args.url:
        return args.url
    return evaluation._synthetic_origin(Path(args.file).name)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_extract(args) -> int:
    page = _load_page(args.file, _page_url(args))
    vector = extract_all(page)
    if args.format == "csv":
        print(FeatureVector.csv_header())
        print(vector.to_csv_row())
    else:
        print(vector.to_json())
    return 0


def _load_pool(args):
    if not getattr(args, "link_pool", None):
        return None
    try:
        return manipulations.ExternalLinkPool.from_file(args.link_pool)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load link pool: {exc}")


def cmd_manipulate(args) -> int:
    page = _load_page(args.file, _page_url(args))
    manip = manipulations.manipulation(args.manipulation, rng_seed=args.seed,
                                       pool=_load_pool(args))
    result = manipulations.apply(page, manip)
    html = dom.serialize(result)
    if args.out:
        Path(args.out).write_text(html, encoding="utf-8")
        log.info("wrote %s", args.out)
    else:
        print(html)
    return 0


def _split_features(args):
    corpus = evaluation.ingest_corpus(args.corpus)
    train, _ = evaluation.stratified_split(corpus, args.split_ratio, args.seed)
    return evaluation.feature_matrix(train.items)


def cmd_train(args) -> int:
    try:
        x, y = _split_features(args)
    except ValueError as exc:
        raise CliError(str(exc))
    log.info("training %s on %d pages", args.model, len(y))
    if args.model == "lr":
        model = train_lr(x, y, LogisticConfig(
            learning_rate=args.learning_rate, epochs=args.epochs, l2=args.l2))
    else:
        model = train_rf(x, y, ForestConfig(
            n_trees=args.trees, max_depth=args.max_depth, seed=args.seed))
        log.info("out-of-bag accuracy: %s", model.oob_score)
    save_model(model, args.out)
    print(json.dumps({"model": args.model, "path": args.out, "trained_on": len(y)}))
    return 0


def cmd_calibrate(args) -> int:
    model, _ = load_model(args.model)
    try:
        x, y = _split_features(args)
        benign_scores = model.predict_proba(x[y == 0])
        threshold = calibrate_threshold(benign_scores, args.target_fpr)
    except ValueError as exc:
        raise CliError(str(exc))
    out = args.out or args.model
    save_model(model, out, threshold=threshold)
    print(json.dumps({"threshold": threshold, "target_fpr": args.target_fpr, "path": out}))
    return 0


def cmd_attack(args) -> int:
    if bool(args.model) == bool(args.oracle_url):
        raise CliError("exactly one of --model or --oracle-url is required")
    page = _load_page(args.file, _page_url(args))
    if args.model:
        model, threshold = load_model(args.model)
        if threshold is None:
            threshold = args.threshold
        detector = ModelDetector(model, threshold)
    else:
        detector = RemoteDetector(args.oracle_url, threshold=args.threshold)
    try:
        cfg = AttackConfig(
            query_budget=args.budget,
            sr_set=manipulations.default_sr_set(args.seed),
            mr_set=manipulations.default_mr_set(args.seed, pool=_load_pool(args)),
            rng_seed=args.seed,
            early_exit=args.early_exit,
        )
    except AttackConfigError as exc:
        raise CliError(str(exc))
    result = attack(page, detector, cfg)
    if args.out_html:
        Path(args.out_html).write_text(dom.serialize(result.page), encoding="utf-8")
    if args.out_trace:
        Path(args.out_trace).write_text(result.trace.to_json(), encoding="utf-8")
    print(json.dumps({
        "evaded": result.evaded,
        "score": result.score,
        "initial_score": result.trace.initial_score,
        "oracle_calls": result.trace.oracle_calls,
        "error": result.error,
    }))
    if result.error:
        raise CliError(result.error, code=4)
    return 0 if result.evaded else 3


def cmd_evaluate(args) -> int:
    corpus_dir = Path(args.corpus)
    if args.make_synthetic_corpus:
        try:
            n_benign, _, n_phish = args.make_synthetic_corpus.partition(":")
            counts = (int(n_benign), int(n_phish))
        except ValueError:
            raise CliError("--make-synthetic-corpus expects N_BENIGN:N_PHISHING")
        if not (corpus_dir / "benign").exists():
            log.info("generating synthetic corpus at %s", corpus_dir)
            evaluation.generate_synthetic_corpus(corpus_dir, *counts, seed=args.seed)
    cfg = evaluation.ExperimentConfig(
        corpus_root=str(corpus_dir),
        split_ratio=args.split_ratio,
        sample_size=args.sample_size,
        target_fpr=args.target_fpr,
        query_budget=args.budget,
        seed=args.seed,
    )
    try:
        report = evaluation.run_experiment(cfg, progress=log.info)
    except (ValueError, AttackConfigError) as exc:
        raise CliError(str(exc))
    paths = evaluation.emit_curves(report, args.out)
    print(json.dumps({name: str(p) for name, p in paths.items()}))
    return 0


def cmd_serve_oracle_stub(args) -> int:
    from .oracle_stub import serve_forever

    model, threshold = load_model(args.model)
    detector = ModelDetector(model, threshold if threshold is not None else 0.5)
    log.info("serving oracle stub on %s:%d", args.host, args.port)
    serve_forever(detector, args.host, args.port)
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phishevade",
        description="Extract phishing-page features, rewrite pages, and run "
                    "black-box evasion attacks and evaluations.",
    )
    parser.add_argument("--config", help="flat KEY=VALUE config file; flags override it")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=None, help="run RNG seed (default 0)")
        # The global flags are accepted after the subcommand too.
        p.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        p.add_argument("--log-level", default=argparse.SUPPRESS, help=argparse.SUPPRESS,
                       choices=["DEBUG", "INFO", "WARNING", "ERROR"])
        return p

    p = add("extract", cmd_extract, help="print the feature vector of a page")
    p.add_argument("file")
    p.add_argument("--url", default=None, help="page origin URL (absolute)")
    p.add_argument("--format", choices=["json", "csv"], default=None)

    p = add("manipulate", cmd_manipulate, help="apply one manipulation to a page")
    p.add_argument("file")
    p.add_argument("--url", default=None)
    p.add_argument("--manipulation", required=True,
                   choices=list(manipulations.MANIPULATION_NAMES))
    p.add_argument("--link-pool", default=None,
                   help="newline-delimited URL file for external injections")
    p.add_argument("--out", default=None, help="output file (default stdout)")

    p = add("train", cmd_train, help="train a reference detector on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", choices=["lr", "rf"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split-ratio", type=float, default=None)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)

    p = add("calibrate", cmd_calibrate, help="set a model's threshold at a target FPR")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--target-fpr", type=float, default=None)
    p.add_argument("--split-ratio", type=float, default=None)
    p.add_argument("--out", default=None, help="output model file (default: in place)")

    p = add("attack", cmd_attack, help="generate an adversarial page")
    p.add_argument("file")
    p.add_argument("--url", default=None)
    p.add_argument("--model", default=None, help="local model JSON file")
    p.add_argument("--oracle-url", default=None, help="remote score oracle endpoint")
    p.add_argument("--threshold", type=float, default=None,
                   help="decision threshold when the model file has none")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--early-exit", action="store_true", default=None,
                   help="stop as soon as the score drops below the threshold")
    p.add_argument("--link-pool", default=None,
                   help="newline-delimited URL file for external injections")
    p.add_argument("--out-html", default=None)
    p.add_argument("--out-trace", default=None)

    p = add("evaluate", cmd_evaluate, help="run the full evaluation protocol")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--sample-size", type=int, default=None)
    p.add_argument("--target-fpr", type=float, default=None)
    p.add_argument("--split-ratio", type=float, default=None)
    p.add_argument("--make-synthetic-corpus", default=None, metavar="N_BENIGN:N_PHISHING",
                   help="generate a synthetic corpus first if the directory is empty")

    p = add("serve-oracle-stub", cmd_serve_oracle_stub,
            help="serve a saved model over the oracle wire format")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)

    return parser


_DEFAULTS = {
    "seed": 0,
    "split_ratio": 0.8,
    "target_fpr": 0.01,
    "budget": 36,
    "sample_size": 100,
    "trees": 100,
    "epochs": 500,
    "learning_rate": 0.1,
    "l2": 1e-4,
    "threshold": 0.5,
    "port": 8731,
    "early_exit": False,
    "format": "json",
    "host": "127.0.0.1",
}


def _fill_defaults(args):
    for key, value in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=args.log_level,
                        format="%(levelname)s %(message)s")
    try:
        actions = []
        for action in parser._subparsers._group_actions:
            if hasattr(action, "choices") and args.command in (action.choices or {}):
                actions = action.choices[args.command]._actions
        _apply_config(args, actions)
        _fill_defaults(args)
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 4


def console_main():  # pragma: no cover - thin script wrapper
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
