"""`lawlens` command line: every pipeline behind one executable.

Exit codes are a scripting contract: 0 success, 1 runtime error,
2 validation/contract error, 3 backend unreachable. All file outputs are
atomic (temp file + rename) so a crashed run never leaves partial output.
"""

from __future__ import annotations

import argparse
import datetime
import importlib.resources
import json
import math
import os
import sys
import tempfile

import requests

from . import backend as backend_mod
from . import corpus as corpus_mod
from . import derivation, lawlayer, matcher, monitor, retrieval, scenario
from . import taxonomy as taxonomy_mod
from . import textmetrics
from .errors import (BackendError, LawlensError, ParseError, TagLookupError,
                     ValidationError)
from .plots import violin_svg
from .taxonomy import TagPath, TagSet

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2
EXIT_BACKEND = 3


def _atomic_write(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lawlens-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _fixture_path(name: str) -> str:
    return str(importlib.resources.files("lawlens.fixtures") / name)


class _Log:
    def __init__(self, quiet: bool, json_logs: bool):
        self.quiet = quiet
        self.json_logs = json_logs

    def info(self, message: str, **fields) -> None:
        if self.quiet:
            return
        if self.json_logs:
            print(json.dumps({"level": "info", "msg": message, **fields}))
        else:
            print(message)

    def error(self, message: str) -> None:
        if self.json_logs:
            print(json.dumps({"level": "error", "msg": message}),
                  file=sys.stderr)
        else:
            print(f"error: {message}", file=sys.stderr)


def _load_taxonomy(args):
    path = args.taxonomy or _fixture_path("taxonomy.json")
    return taxonomy_mod.parse_taxonomy(_read(path))


def _load_corpus(args, taxonomy):
    path = args.corpus or _fixture_path("corpus.jsonl")
    return corpus_mod.load_corpus(_read(path), taxonomy)


def _parse_tags(raw: str) -> TagSet:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValidationError("no tags given")
    return TagSet.of(parts)


def _parse_date(raw: str | None) -> datetime.date | None:
    if raw is None:
        return None
    try:
        return datetime.date.fromisoformat(raw)
    except ValueError as e:
        raise ValidationError(f"bad date {raw!r}: expected YYYY-MM-DD") from e


def _make_backend(url: str | None):
    config = backend_mod.BackendConfig.from_env(url)
    return backend_mod.BackendClient(config)


class SimpleEmbeddingBackend:
    """Adapter for the plain embedding endpoint used by eval-derive:
    POST {"tokens": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(self, url: str, timeout_s: float = 30.0):
        self.url = url
        self.timeout_s = timeout_s
        self._session = requests.Session()

    def embed(self, tokens: list[str]) -> list[list[float]]:
        if not tokens:
            raise ValidationError("embed requires a non-empty token list")
        try:
            resp = self._session.post(self.url, json={"tokens": list(tokens)},
                                      timeout=self.timeout_s)
        except requests.Timeout as e:
            raise BackendError(f"embedding request to {self.url} timed out") from e
        except requests.ConnectionError as e:
            raise BackendError(f"connection to {self.url} failed: {e}") from e
        if resp.status_code != 200:
            raise BackendError(f"{self.url} returned {resp.status_code}")
        vectors = resp.json().get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(tokens):
            raise BackendError("embedding reply shape mismatch")
        out = []
        for v in vectors:
            norm = math.sqrt(sum(x * x for x in v))
            out.append([x / norm for x in v] if norm > 0 else list(v))
        return out


# -- subcommand implementations ----------------------------------------


def cmd_taxonomy_validate(args, log) -> int:
    try:
        taxonomy = taxonomy_mod.parse_taxonomy(_read(args.file))
    except (ParseError, ValidationError, TagLookupError) as e:
        for line in str(e).splitlines():
            print(line, file=sys.stderr)
        return EXIT_VALIDATION
    for warning in taxonomy.warnings:
        log.info(warning)
    print(f"{len(taxonomy.nodes)} nodes, {len(taxonomy.roots)} roots")
    return EXIT_OK


def cmd_corpus_validate(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    try:
        corpus = corpus_mod.load_corpus(_read(args.file), taxonomy)
    except (ParseError, ValidationError, TagLookupError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_VALIDATION
    for warning in corpus.warnings:
        log.info(warning)
    print(f"{len(list(corpus))} provisions")
    return EXIT_OK


def _annotations(args, corpus, taxonomy):
    if args.annotations:
        return corpus_mod.load_annotations(_read(args.annotations), corpus,
                                           taxonomy)
    nodes = sorted({t for p in corpus for t in p.key_tags}, key=str)
    return corpus_mod.annotations_from_corpus(corpus, nodes)


def _train_config(args) -> matcher.TrainConfig:
    return matcher.TrainConfig(
        budget=args.budget,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        mode=args.mode,
        threshold=args.threshold,
    )


def cmd_match_train(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    corpus = _load_corpus(args, taxonomy)
    annotations = _annotations(args, corpus, taxonomy)
    model = matcher.train_anchors(corpus, annotations, taxonomy,
                                  _train_config(args))
    model.save(args.out)
    log.info(f"trained {len(model.anchors)} anchors -> {args.out}",
             mode=args.mode, budget=args.budget)
    if model.untrained_nodes:
        log.info(f"{len(model.untrained_nodes)} nodes had no annotations "
                 "(prior-only anchors)")
    return EXIT_OK


def cmd_match_predict(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    corpus = _load_corpus(args, taxonomy)
    model = matcher.AnchorModel.load(args.model)
    pids = [args.provision] if args.provision else sorted(p.id for p in corpus)
    out = {}
    for pid in pids:
        if pid not in corpus:
            raise ValidationError(f"unknown provision id {pid!r}")
        out[pid] = model.predict_tags(corpus[pid], taxonomy).as_strings()
    payload = json.dumps(out, indent=1, ensure_ascii=False) + "\n"
    if args.out:
        _atomic_write(args.out, payload)
    else:
        print(payload, end="")
    return EXIT_OK


def cmd_match_eval(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    corpus = _load_corpus(args, taxonomy)
    annotations = _annotations(args, corpus, taxonomy)
    config = _train_config(args)

    if args.folds and args.folds > 1:
        assignment = corpus_mod.make_folds(annotations, args.folds, args.seed)
        reports = []
        for fold in range(args.folds):
            train_pairs = {k: v for k, v in annotations.pairs.items()
                           if assignment[k[0]] != fold}
            test_ids = sorted({pid for pid, f in assignment.items()
                               if f == fold})
            train_ann = corpus_mod.AnnotationSet(train_pairs)
            model = matcher.train_anchors(corpus, train_ann, taxonomy, config)
            predictions = {pid: model.predict_tags(corpus[pid], taxonomy)
                           for pid in test_ids}
            test_pairs = {k: v for k, v in annotations.pairs.items()
                          if assignment[k[0]] == fold}
            report = matcher.evaluate_matching(
                predictions, corpus_mod.AnnotationSet(test_pairs),
                averaging=args.averaging)
            reports.append(report)
        n = len(reports)
        result = {
            "folds": args.folds,
            "precision": sum(r.precision for r in reports) / n,
            "recall": sum(r.recall for r in reports) / n,
            "f1": sum(r.f1 for r in reports) / n,
        }
    else:
        model = matcher.train_anchors(corpus, annotations, taxonomy, config)
        predictions = {pid: model.predict_tags(corpus[pid], taxonomy)
                       for pid in annotations.provision_ids()}
        report = matcher.evaluate_matching(predictions, annotations,
                                           averaging=args.averaging)
        result = {"folds": 0, "precision": report.precision,
                  "recall": report.recall, "f1": report.f1}
    result["mode"] = args.mode
    result["budget"] = args.budget
    print(json.dumps(result, indent=1))
    return EXIT_OK


def cmd_retrieve(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    corpus = _load_corpus(args, taxonomy)
    tags = _parse_tags(args.tags)
    for tag in tags:
        taxonomy.require(tag)
    query = retrieval.Query.build(taxonomy, tags, date=_parse_date(args.date))
    index = retrieval.build_index(corpus)
    rows = []
    for pid in retrieval.retrieve(index, query):
        report = retrieval.explain(index, query, pid)
        rows.append({
            "id": pid,
            "article_ref": corpus[pid].article_ref,
            "matched_via": [
                {"tag": str(t.tag), "via_ancestor": t.via_ancestor}
                for t in report.tags
            ],
        })
    print(json.dumps(rows, indent=1, ensure_ascii=False))
    return EXIT_OK


def cmd_derive(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    corpus = _load_corpus(args, taxonomy)
    tags = _parse_tags(args.tags)
    for tag in tags:
        taxonomy.require(tag)
    engine = "rule-based" if args.engine == "rule" else "remote"
    client = None
    if engine == "remote":
        try:
            client = _make_backend(args.backend)
        except ValidationError as e:
            raise BackendError(str(e)) from e
    index = retrieval.build_index(corpus)
    result = derivation.derive_for_scenario(
        index, corpus, taxonomy, tags, engine=engine, backend=client,
        date=_parse_date(args.date))
    payload = json.dumps(result.to_json(), indent=1, ensure_ascii=False) + "\n"
    if args.out:
        _atomic_write(args.out, payload)
    else:
        print(payload, end="")
    return EXIT_OK


def _requirement_set_from_record(rec: dict) -> derivation.RequirementSet:
    rs = derivation.RequirementSet(provenance=list(rec.get("provenance", [])))
    for category in ("mandatory", "prohibitive"):
        for item in rec.get(category, []):
            if isinstance(item, str):
                behavior, pid = item, ""
            else:
                behavior = item.get("behavior", "")
                pid = item.get("provision_id", "")
            rs.add(derivation.DrivingRequirement(
                category=category, behavior=behavior, provision_id=pid))
    return rs


def _load_requirement_sets(path: str) -> dict[str, derivation.RequirementSet]:
    out = {}
    for lineno, raw in enumerate(_read(path).splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
        sid = rec.get("scenario_id")
        if not sid:
            raise ValidationError(f"{path} line {lineno}: missing scenario_id")
        out[sid] = _requirement_set_from_record(rec)
    return out


def cmd_eval_derive(args, log) -> int:
    derived = _load_requirement_sets(args.derived)
    truth = _load_requirement_sets(args.truth)
    missing = sorted(set(truth) - set(derived))
    if missing:
        raise ValidationError(f"derived file missing scenarios: {missing}")
    embedder = None
    if args.embeddings:
        embedder = SimpleEmbeddingBackend(args.embeddings)
    mandatory_records = []
    prohibitive_records = []
    for sid in sorted(truth):
        m_rec, p_rec = textmetrics.score_requirement_sets(
            derived[sid], truth[sid], scenario_id=sid, backend=embedder)
        mandatory_records.append(m_rec)
        prohibitive_records.append(p_rec)
    report = {
        "scenarios": len(truth),
        "mandatory": textmetrics.aggregate(mandatory_records),
        "prohibitive": textmetrics.aggregate(prohibitive_records),
        "per_scenario": {
            "mandatory": [r.to_json() for r in mandatory_records],
            "prohibitive": [r.to_json() for r in prohibitive_records],
        },
    }
    _atomic_write(args.out, json.dumps(report, indent=1) + "\n")
    log.info(f"wrote {args.out}")
    if args.svg:
        _atomic_write(args.svg, violin_svg(report["mandatory"]))
        log.info(f"wrote {args.svg}")
    mand = report["mandatory"]["metrics"]["onegram_f1"]["mean"]
    proh = report["prohibitive"]["metrics"]["onegram_f1"]["mean"]
    print(f"mean 1-gram F1: mandatory {mand:.3f}, prohibitive {proh:.3f}")
    return EXIT_OK


def cmd_scenario_segment(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    timelines = scenario.load_timelines(_read(args.file))
    units = []
    for timeline in timelines:
        timeline.validate(taxonomy)
        units.extend(scenario.segment(timeline))
    _atomic_write(args.out, scenario.units_to_jsonl(units) + "\n")
    print(f"{len(timelines)} timelines -> {len(units)} units")
    return EXIT_OK


def cmd_scenario_dedup(args, log) -> int:
    units = scenario.load_units(_read(args.file))
    combos = scenario.dedup(units)
    lines = "\n".join(json.dumps(c.to_json(), ensure_ascii=False)
                      for c in combos)
    _atomic_write(args.out, lines + "\n")
    print(f"{len(units)} units, {len(combos)} combinations")
    return EXIT_OK


def cmd_layer_build(args, log) -> int:
    taxonomy = _load_taxonomy(args)
    corpus = _load_corpus(args, taxonomy)
    network = lawlayer.load_network(_read(args.network))
    mapping = lawlayer.load_mapping(_read(args.mapping), taxonomy)
    index = retrieval.build_index(corpus)
    layer = lawlayer.build_layer(network, mapping, corpus, index, taxonomy)
    _atomic_write(args.out,
                  json.dumps(layer, indent=1, ensure_ascii=False) + "\n")
    print(f"{len(layer['features'])} features -> {args.out}")
    return EXIT_OK


def cmd_monitor_replay(args, log) -> int:
    lane_map = monitor.load_lane_map(_read(args.map))
    if args.requirements:
        extra = json.loads(_read(args.requirements))
        for rec in extra:
            lane_map.requirements.append(monitor.BoundPredicate(
                predicate=monitor.MachinePredicate.from_json(rec["predicate"]),
                provision_id=rec.get("provision_id", ""),
                element=rec.get("element", "*"),
            ))
    records = monitor.load_trajectories(_read(args.traj))
    events, summary = monitor.replay(records, lane_map)
    _atomic_write(args.out, monitor.events_to_jsonl(events) + "\n")
    if args.summary:
        _atomic_write(args.summary, json.dumps(summary, indent=1) + "\n")
    print(f"{summary['records']} records, {summary['events']} events")
    return EXIT_OK


# -- parser ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lawlens",
        description="Traffic-law compliance engine: taxonomy, retrieval, "
                    "requirement derivation, map layers, and monitoring.",
    )
    parser.add_argument("--taxonomy", help="taxonomy JSON (default: bundled)")
    parser.add_argument("--corpus", help="corpus JSONL (default: bundled)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--json-logs", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("taxonomy", help="taxonomy operations")
    tsub = p.add_subparsers(dest="action", required=True)
    v = tsub.add_parser("validate", help="validate a taxonomy file")
    v.add_argument("file")
    v.set_defaults(func=cmd_taxonomy_validate)

    p = sub.add_parser("corpus", help="corpus operations")
    csub = p.add_subparsers(dest="action", required=True)
    v = csub.add_parser("validate", help="validate a corpus file")
    v.add_argument("file")
    v.set_defaults(func=cmd_corpus_validate)

    p = sub.add_parser("match", help="anchor matcher")
    msub = p.add_subparsers(dest="action", required=True)

    def add_train_flags(sp):
        sp.add_argument("--mode", choices=("node-wise", "universal"),
                        default="node-wise")
        sp.add_argument("--budget", type=int, default=20,
                        help="anchor length L")
        sp.add_argument("--threshold", type=float, default=0.5)
        sp.add_argument("--lr", type=float, default=0.003)
        sp.add_argument("--epochs", type=int, default=200)
        sp.add_argument("--annotations",
                        help="annotation JSONL (default: derived from key sets)")

    t = msub.add_parser("train", help="train anchors, write a checkpoint")
    add_train_flags(t)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_match_train)

    t = msub.add_parser("predict", help="predict tags with a checkpoint")
    t.add_argument("--model", required=True)
    t.add_argument("--provision", help="single provision id (default: all)")
    t.add_argument("--out")
    t.set_defaults(func=cmd_match_predict)

    t = msub.add_parser("eval", help="train + evaluate (optionally k-fold)")
    add_train_flags(t)
    t.add_argument("--folds", type=int, default=0)
    t.add_argument("--averaging", choices=("per-sample", "micro"),
                   default="per-sample")
    t.add_argument("--backend", help="remote scoring backend URL (unused "
                   "by local training; reserved)")
    t.set_defaults(func=cmd_match_eval)

    p = sub.add_parser("retrieve", help="subset-condition retrieval")
    p.add_argument("--tags", required=True,
                   help="comma-separated taxonomy paths")
    p.add_argument("--date", help="effective date YYYY-MM-DD")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("derive", help="derive driving requirements")
    p.add_argument("--tags", required=True)
    p.add_argument("--engine", choices=("rule", "remote"), default="rule")
    p.add_argument("--backend", help="chat backend URL (remote engine)")
    p.add_argument("--date")
    p.add_argument("--out")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("eval-derive", help="score derived requirements")
    p.add_argument("--derived", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--embeddings", help="embedding endpoint URL")
    p.add_argument("--out", required=True)
    p.add_argument("--svg", help="also write a violin plot SVG")
    p.set_defaults(func=cmd_eval_derive)

    p = sub.add_parser("scenario", help="timeline segmentation")
    ssub = p.add_subparsers(dest="action", required=True)
    s = ssub.add_parser("segment", help="segment snapshot timelines")
    s.add_argument("file")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scenario_segment)
    s = ssub.add_parser("dedup", help="deduplicate units into combinations")
    s.add_argument("file")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scenario_dedup)

    p = sub.add_parser("layer", help="law-compliance map layer")
    lsub = p.add_subparsers(dest="action", required=True)
    b = lsub.add_parser("build", help="build a GeoJSON compliance layer")
    b.add_argument("--network", required=True)
    b.add_argument("--mapping", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_layer_build)

    p = sub.add_parser("monitor", help="trajectory compliance monitoring")
    osub = p.add_subparsers(dest="action", required=True)
    r = osub.add_parser("replay", help="replay a trajectory against a map")
    r.add_argument("--map", required=True)
    r.add_argument("--traj", required=True)
    r.add_argument("--requirements", help="extra bound predicates JSON")
    r.add_argument("--out", required=True)
    r.add_argument("--summary", help="also write a summary JSON")
    r.set_defaults(func=cmd_monitor_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors already; normalize 0 for --help
        return int(e.code or 0)
    log = _Log(quiet=args.quiet, json_logs=args.json_logs)
    try:
        return args.func(args, log)
    except (ParseError, ValidationError, TagLookupError) as e:
        log.error(str(e))
        return EXIT_VALIDATION
    except BackendError as e:
        log.error(str(e))
        return EXIT_BACKEND
    except LawlensError as e:
        log.error(str(e))
        return EXIT_RUNTIME
    except OSError as e:
        log.error(str(e))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
