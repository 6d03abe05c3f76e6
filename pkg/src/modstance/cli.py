"""Command-line entrypoint tying the pipeline together.

Subcommands: ingest, build, stats, align, train, predict, eval, salient,
lint. Exit codes: 0 success, 2 config error, 3 data error, 4 network error.
Failures print one machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import align as align_mod
from . import corpus as corpus_mod
from . import evaluation, ingest, labels, policies, textmodels, wikitext
from .errors import (ConfigError, ModstanceError, NetworkUnavailable,
                     RateLimited, SchemaViolation)

DEFAULT_MIN_COUNTS = {"en": 100, "de": 10, "tr": 2}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NETWORK = 4


def _parse_config_value(raw: str):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def load_config(path) -> dict:
    """Flat TOML-style key/value file: ``key = value``, ``#`` comments."""
    config = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = line.split("=", 1)
        config[key.strip()] = _parse_config_value(raw)
    return config


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file (flags win)")
    parser.add_argument("--offline", action="store_true",
                        help="never touch the network; fail instead of fetching")
    parser.add_argument("--cache", default=None, help="page cache root directory")
    parser.add_argument("--fixtures", default=None,
                        help="recorded fixture-wiki directory replacing the network")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modstance",
        description="Deletion-discussion corpus builder and stance/policy baselines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch archive pages into the cache")
    _add_common(p)
    p.add_argument("--lang", required=True, help="language code or comma list")
    p.add_argument("--from", dest="from_year", type=int, default=2005)
    p.add_argument("--to", dest="to_year", type=int, default=2022)
    p.add_argument("--manifest", default=None, help="write snapshot manifest here")

    p = sub.add_parser("build", help="construct corpus JSONL from archives")
    _add_common(p)
    p.add_argument("--lang", required=True, help="language code or comma list")
    p.add_argument("--from", dest="from_year", type=int, default=2005)
    p.add_argument("--to", dest="to_year", type=int, default=2022)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--curation", required=True, help="directory of <lang>.curation files")
    p.add_argument("--lexicon", default=None, help="override stance lexicon file")
    p.add_argument("--topic-overrides", default=None,
                   help="JSON file mapping article titles to topic strings")
    p.add_argument("--min-count", type=int, default=None,
                   help="frequency threshold override for all languages")
    p.add_argument("--tr-min-test", type=int, default=200)
    p.add_argument("--unperturbed", action="store_true",
                   help="also emit the variant with policy mentions intact")
    p.add_argument("--report-unknown", action="store_true",
                   help="tally unmatched vote tokens for lexicon curation")

    p = sub.add_parser("stats", help="dataset statistics for a corpus JSONL")
    _add_common(p)
    p.add_argument("--lang", required=True)
    p.add_argument("--data", required=True, help="corpus JSONL path")
    p.add_argument("--parsed-counts", default=None,
                   help="JSON file of per-language parsed comment counts")
    p.add_argument("--out", default=None, help="write stats JSON here")
    p.add_argument("--chart", default=None, help="write top-policy bar chart here")

    p = sub.add_parser("align", help="build the cross-language policy superset")
    _add_common(p)
    p.add_argument("--registries", required=True, nargs="+",
                   help="registry JSON files from build")
    p.add_argument("--out", required=True, help="alignment JSON output")

    p = sub.add_parser("train", help="train a stance/policy classifier")
    _add_common(p)
    p.add_argument("--data", required=True, help="corpus JSONL path")
    p.add_argument("--task", choices=("stance", "policy", "joint"), default="stance")
    p.add_argument("--multilingual", action="store_true",
                   help="use superset ids as policy labels")
    p.add_argument("--out", required=True, help="model JSON output")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--min-df", type=int, default=2)

    p = sub.add_parser("predict", help="predict labels for a corpus JSONL")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task", choices=("stance", "policy"), default="stance")
    p.add_argument("--out", required=True, help="predictions JSONL output")

    p = sub.add_parser("eval", help="score predictions or validate a report")
    _add_common(p)
    p.add_argument("--gold", default=None, help="gold corpus JSONL")
    p.add_argument("--pred", default=None, help="predictions JSONL")
    p.add_argument("--report", default=None, help="validate an existing report JSON")
    p.add_argument("--task", choices=("stance", "policy"), default="stance")
    p.add_argument("--setup", choices=evaluation.SETUPS, default="single")
    p.add_argument("--multilingual", action="store_true")
    p.add_argument("--model-id", default="external")
    p.add_argument("--out", default=None, help="write the report JSON here")

    p = sub.add_parser("salient", help="top weighted n-grams per label")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--k", type=int, default=10)

    p = sub.add_parser("lint", help="report suspicious residues in a corpus")
    _add_common(p)
    p.add_argument("--data", required=True)

    return parser


def _langs(raw: str) -> list:
    out = [part.strip() for part in raw.split(",") if part.strip()]
    for lang in out:
        if lang not in ingest.LANGUAGES:
            raise ConfigError(f"unsupported language {lang!r}")
    return out


def _client(lang: str, args) -> ingest.WikiClient:
    transport = None
    if args.fixtures:
        transport = ingest.FixtureTransport(args.fixtures)
    cache = ingest.PageCache(args.cache) if args.cache else ingest.PageCache()
    return ingest.WikiClient(ingest.wiki_source(lang), cache=cache,
                             transport=transport, offline=args.offline)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def cmd_ingest(args) -> int:
    summary = {}
    for lang in _langs(args.lang):
        client = _client(lang, args)
        pages = client.fetch_archive_pages((args.from_year, args.to_year))
        if args.manifest:
            client.write_manifest(args.manifest)
        summary[lang] = {"pages": len(pages), "requests": client.request_count}
    _emit({"ingest": summary})
    return EXIT_OK


def _build_language(lang, args, registries, all_edges, discussions_by_lang, counters_out):
    client = _client(lang, args)
    pages = client.fetch_archive_pages((args.from_year, args.to_year))
    discussions = []
    for page in pages:
        discussions.extend(wikitext.parse_archive(page))
    discussions_by_lang[lang] = discussions

    raw_targets = []
    for discussion in discussions:
        for comment in discussion.comments:
            raw_targets.append(list(comment.policy_targets))
    unique_targets = sorted({t for targets in raw_targets for t in targets})
    resolutions = {
        r.raw_target: r.resolved_title
        for r in client.resolve_titles(unique_targets)
    } if unique_targets else {}

    policy_pages = []
    for title in sorted({t for t in resolutions.values() if t}):
        try:
            page = client.fetch_page(title)
        except ModstanceError:
            continue
        policy_pages.append(policies.PolicyPage(
            title=title, language=lang, full_text=page.wikitext, is_policy=False))

    curation = policies.load_curation(Path(args.curation) / f"{lang}.curation")
    min_count = args.min_count if args.min_count else DEFAULT_MIN_COUNTS[lang]
    registry = policies.build_registry(
        lang, resolutions, policy_pages, curation, raw_targets, min_count)
    registries[lang] = registry

    if registry.canonical:
        interwiki = client.fetch_interwiki(sorted(registry.canonical))
        all_edges.update(align_mod.interwiki_edges(lang, interwiki))
    counters_out[lang] = {"archive_pages": len(pages), "requests": client.request_count}
    return registry


def cmd_build(args) -> int:
    langs = _langs(args.lang)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    registries: dict = {}
    all_edges: set = set()
    discussions_by_lang: dict = {}
    counters: dict = {}
    for lang in langs:
        _build_language(lang, args, registries, all_edges, discussions_by_lang, counters)

    alignment = align_mod.align(list(registries.values()), all_edges)
    alignment.save(out_dir / "alignment.json")

    topic_overrides = None
    if args.topic_overrides:
        topic_overrides = json.loads(Path(args.topic_overrides).read_text(encoding="utf-8"))

    plan = corpus_mod.SplitPlan(seed=args.seed, tr_min_test=args.tr_min_test)
    summary = {}
    for lang in langs:
        lexicon = labels.load_lexicon(lang, args.lexicon)
        records, build_counters = corpus_mod.build_records(
            discussions_by_lang[lang], lang, registries[lang], alignment,
            lexicon, wikitext.policy_prefixes(lang), topic_overrides,
            report_unknown=args.report_unknown,
        )
        records = corpus_mod.assign_splits(records, plan)
        corpus_mod.emit_jsonl(records, out_dir / f"{lang}.jsonl", include_raw=False)
        if args.unperturbed:
            corpus_mod.emit_jsonl(records, out_dir / f"{lang}.unperturbed.jsonl",
                                  include_raw=True)
        registries[lang].save(out_dir / f"registry_{lang}.json")
        summary[lang] = {
            "records": build_counters.records,
            "parsed_comments": build_counters.parsed_comments,
            "discarded": build_counters.discarded,
            "no_policy": build_counters.no_policy,
            "registry_size": len(registries[lang].canonical),
        }
        if args.report_unknown:
            summary[lang]["unknown_tokens"] = dict(
                sorted(build_counters.unknown_tokens.items()))
        summary[lang].update(counters[lang])
    (out_dir / "build_report.json").write_text(
        json.dumps(summary, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    _emit({"build": summary, "out": str(out_dir)})
    return EXIT_OK


def cmd_stats(args) -> int:
    records = [r for r in corpus_mod.load_jsonl(args.data) if r.lang == args.lang]
    parsed = {}
    if args.parsed_counts:
        parsed = json.loads(Path(args.parsed_counts).read_text(encoding="utf-8"))
    stats = corpus_mod.compute_stats(records, parsed)
    if args.out:
        stats.save(args.out)
    if args.chart:
        corpus_mod.save_policy_chart(stats, args.lang, args.chart)
    _emit(stats.export())
    return EXIT_OK


def cmd_align(args) -> int:
    registries = [policies.load_registry(path) for path in args.registries]
    edges: set = set()
    for registry in registries:
        client = _client(registry.language, args)
        interwiki = client.fetch_interwiki(sorted(registry.canonical))
        edges.update(align_mod.interwiki_edges(registry.language, interwiki))
    alignment = align_mod.align(registries, edges)
    alignment.save(args.out)
    _emit({"superset_size": len(alignment.entries), "out": args.out})
    return EXIT_OK


def _policy_label(record, multilingual: bool) -> str:
    return str(record.policy_superset_id) if multilingual else record.policy


def cmd_train(args) -> int:
    records = corpus_mod.load_jsonl(args.data)
    train = [r for r in records if r.split == "train"]
    if not train:
        raise SchemaViolation("no train-split records in input")
    texts = [textmodels.combine_topic_comment(r.topic, r.comment) for r in train]
    language = train[0].lang
    vocab = textmodels.fit_vocabulary(texts, min_df=args.min_df, language=language)
    features = textmodels.featurize_all(texts, vocab)
    if args.task == "joint":
        config = textmodels.MTLConfig(
            hidden=args.hidden, l2=args.l2, lr=args.lr, epochs=args.epochs,
            batch=args.batch, seed=args.seed)
        model = textmodels.train_multitask(
            features,
            [r.stance for r in train],
            [_policy_label(r, args.multilingual) for r in train],
            config,
            stance_order=list(labels.STANCE_LABELS),
        )
    else:
        config = textmodels.TrainConfig(
            l2=args.l2, lr=args.lr, epochs=args.epochs, batch=args.batch, seed=args.seed)
        if args.task == "stance":
            train_labels = [r.stance for r in train]
            order = list(labels.STANCE_LABELS)
        else:
            train_labels = [_policy_label(r, args.multilingual) for r in train]
            order = sorted(set(train_labels))
        model = textmodels.train_softmax(features, train_labels, config, label_order=order)
    textmodels.save_model((model, vocab), args.out)
    last_loss = model.loss_history[-1] if model.loss_history else None
    _emit({"trained": args.task, "records": len(train), "vocab": vocab.size,
           "final_loss": last_loss, "out": args.out})
    return EXIT_OK


def cmd_predict(args) -> int:
    model, vocab = textmodels.load_model(args.model)
    records = corpus_mod.load_jsonl(args.data)
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for record in records:
            vec = textmodels.featurize(
                textmodels.combine_topic_comment(record.topic, record.comment), vocab)
            label = textmodels.predict(model, vec, task=args.task)
            fh.write(json.dumps({"id": record.id, "label": label}, ensure_ascii=False) + "\n")
    _emit({"predictions": len(records), "out": args.out})
    return EXIT_OK


def _load_predictions(path) -> dict:
    preds = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"invalid JSON: {exc}", line=lineno) from exc
            if "id" not in obj or "label" not in obj:
                raise SchemaViolation("prediction needs id and label", line=lineno)
            preds[obj["id"]] = str(obj["label"])
    return preds


def cmd_eval(args) -> int:
    if args.report:
        report = evaluation.load_report(args.report)
        _emit({"valid": True, "task": report.task, "lang": report.lang,
               "accuracy": report.accuracy, "macro_f1": report.macro_f1})
        return EXIT_OK
    if not args.gold or not args.pred:
        raise ConfigError("eval needs either --report or both --gold and --pred")
    records = corpus_mod.load_jsonl(args.gold)
    preds = _load_predictions(args.pred)
    gold, predicted = [], []
    for record in records:
        if record.id not in preds:
            raise SchemaViolation(f"no prediction for record {record.id}")
        if args.task == "stance":
            gold.append(record.stance)
        else:
            gold.append(_policy_label(record, args.multilingual))
        predicted.append(preds[record.id])
    if args.task == "stance":
        registry = list(labels.STANCE_LABELS)
    else:
        registry = sorted(set(gold) | set(predicted))
    lang = records[0].lang if records else "en"
    report = evaluation.make_report(
        args.task, lang, args.setup, gold, predicted, registry,
        model_id=args.model_id, seed=args.seed)
    if args.out:
        report.save(args.out)
    _emit({"accuracy": report.accuracy, "macro_f1": report.macro_f1,
           "per_label_f1": report.per_label_f1})
    return EXIT_OK


def cmd_salient(args) -> int:
    model, vocab = textmodels.load_model(args.model)
    if not isinstance(model, textmodels.SoftmaxHead):
        raise ConfigError("salient requires a softmax model")
    positive, negative = textmodels.salient_features(model, vocab, args.label, args.k)
    _emit({
        "label": args.label,
        "positive": [{"term": t, "weight": w} for t, w in positive],
        "negative": [{"term": t, "weight": w} for t, w in negative],
    })
    return EXIT_OK


_RESIDUE_PATTERNS = {
    "user_link": r"\[\[\s*(?:User|Benutzer|Kullanıcı)[^\]]*\]\]",
    "timestamp": r"\d{1,2}:\d{2},? \d{1,2}\.? \w+ \d{4} \((?:UTC|CET|CEST|MEZ|MESZ|TSİ)\)",
    "policy_token": r"\b(?:WP|Wikipedia|VP|Vikipedi)\s*:",
    "double_dash_tail": r"--\s*$",
}


def cmd_lint(args) -> int:
    import re as _re

    records = corpus_mod.load_jsonl(args.data)
    findings: dict = {name: [] for name in _RESIDUE_PATTERNS}
    for record in records:
        for name, pattern in _RESIDUE_PATTERNS.items():
            if _re.search(pattern, record.comment, _re.IGNORECASE):
                findings[name].append(record.id)
    report = {
        name: {"count": len(ids), "sample": ids[:5]}
        for name, ids in findings.items()
    }
    _emit({"records": len(records), "residues": report})
    return EXIT_OK


_HANDLERS = {
    "ingest": cmd_ingest,
    "build": cmd_build,
    "stats": cmd_stats,
    "align": cmd_align,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "salient": cmd_salient,
    "lint": cmd_lint,
}


def _apply_config(parser: argparse.ArgumentParser, argv: list) -> list:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ConfigError("--config needs a path")
    config = load_config(argv[idx + 1])
    known = {action.dest for action in parser._actions}
    for sub_action in parser._subparsers._group_actions:
        for sub in sub_action.choices.values():
            known.update(action.dest for action in sub._actions)
    unknown = set(config) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for sub_action in parser._subparsers._group_actions:
        for sub in sub_action.choices.values():
            dests = {a.dest for a in sub._actions}
            sub.set_defaults(**{k: v for k, v in config.items() if k in dests})
            for action in sub._actions:
                if action.dest in config and action.required:
                    action.required = False
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        _error(exc)
        return EXIT_CONFIG
    except (NetworkUnavailable, RateLimited) as exc:
        _error(exc)
        return EXIT_NETWORK
    except ModstanceError as exc:
        _error(exc)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        _error(exc)
        return EXIT_DATA


def _error(exc: Exception) -> None:
    sys.stderr.write(json.dumps(
        {"error": type(exc).__name__, "message": str(exc)}, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    sys.exit(main())
