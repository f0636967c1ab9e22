"""Command-line surface for the pipeline.

Stages write JSON-Lines artifacts plus a run manifest (config hash, input
hashes, versions) so each stage is resumable and reruns with identical
inputs are byte-identical except for the manifest timestamp. Exit codes:
0 success, 1 data error, 2 configuration error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import click
import yaml

from . import __version__
from .augment import (
    AugKind,
    AugmentationPlan,
    augment_dataset,
    mix_dataset,
    render_pair_dump,
)
from .cluster import ClusterSet, ScoredEdge, cluster_within_topics
from .corpus import Corpus, SplitStats, gold_clustering, load_corpus, validate_split_stats
from .errors import ConfigError, EcrError
from .llm import CachingClient, HttpChatClient, MockClient
from .metrics import (
    DocMention,
    conll,
    doc_template_cluster_sets,
    merge_cluster_sets,
    pairwise_report,
    parse_doc_template,
    parse_pairwise_cot,
)
from .pairing import PairDataset, build_pair_dataset
from .scorer import ScoreRequest, external_score_batch, lemma_baseline_score
from .triggersim import bias_histogram

DEFAULT_CONFIG = {
    "w": 2,
    "k_train": 15,
    "k_infer": 5,
    "threshold": 0.5,
    "scope": "topic",
    "seed": 0,
    "scorer": "lemma",
    "cache_dir": ".ecrkit-cache",
    "augmentation": {"per_original": 2, "top_n": 5},
    "llm": {},
}


@dataclass
class RunConfig:
    w: int = 2
    k_train: int = 15
    k_infer: int = 5
    threshold: float = 0.5
    scope: str = "topic"
    seed: int = 0
    scorer: str = "lemma"
    cache_dir: str = ".ecrkit-cache"
    augmentation: dict = field(default_factory=lambda: {"per_original": 2, "top_n": 5})
    llm: dict = field(default_factory=dict)
    corpus: dict = field(default_factory=dict)

    @classmethod
    def load(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULT_CONFIG.items()}
        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise ConfigError(f"config file not found: {config_path}")
            with open(path, encoding="utf-8") as handle:
                loaded = yaml.safe_load(handle) or {}
            if not isinstance(loaded, dict):
                raise ConfigError("config file must hold a mapping")
            for key, value in loaded.items():
                if isinstance(value, dict) and isinstance(data.get(key), dict):
                    data[key].update(value)
                else:
                    data[key] = value
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def plan(self) -> AugmentationPlan:
        aug = self.augmentation or {}
        return AugmentationPlan(
            per_original=int(aug.get("per_original", 2)),
            top_n=int(aug.get("top_n", 5)),
            seed=self.seed,
        )

    def hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, stage: str, config: RunConfig,
                    inputs: list[Path], outputs: list[str]) -> None:
    manifest = {
        "stage": stage,
        "version": __version__,
        "seed": config.seed,
        "config_hash": config.hash(),
        "inputs": {str(p): _sha256_file(p) for p in sorted(inputs)},
        "outputs": sorted(outputs),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    _write_text(out_dir / f"manifest.{stage}.json",
                json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def _json_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"


def _load_pairs(path: Path) -> PairDataset:
    return PairDataset.from_jsonl(path.read_text(encoding="utf-8"))


def _make_llm(config: RunConfig):
    llm_conf = config.llm or {}
    transcript = llm_conf.get("mock_transcript")
    if transcript:
        client = MockClient.from_transcript(transcript)
    elif llm_conf.get("endpoint"):
        client = HttpChatClient(
            endpoint=llm_conf["endpoint"],
            model=llm_conf.get("model", "gpt-3.5-turbo"),
            temperature=float(llm_conf.get("temperature", 0.0)),
            max_tokens=int(llm_conf.get("max_tokens", 1024)),
        )
    else:
        raise ConfigError("no LLM configured: set llm.endpoint or llm.mock_transcript")
    return CachingClient(client, config.cache_dir)


def _score_pairs(dataset: PairDataset, scorer_spec: str) -> list[dict]:
    if scorer_spec == "lemma":
        return [
            {"pair_id": r.pair_id, "score": r.score}
            for r in (lemma_baseline_score(p) for p in dataset.pairs)
        ]
    results, failures = external_score_batch(
        [ScoreRequest.from_pair(p) for p in dataset.pairs], scorer_spec)
    for item in failures:
        click.echo(f"warning: scoring failed for {item.pair_id}: {item.reason}", err=True)
    return [{"pair_id": r.pair_id, "score": r.score} for r in results]


def _cluster_sets(corpus: Corpus, dataset: PairDataset,
                  scores: dict[str, float], threshold: float) -> tuple[ClusterSet, ClusterSet]:
    """Key and response clusterings over the corpus mention universe."""
    universe_by_topic: dict[str, set[str]] = {}
    for mid, mention in corpus.mentions.items():
        topic = corpus.documents[mention.doc_id].topic_id
        universe_by_topic.setdefault(topic, set()).add(mid)
    edges_by_topic: dict[str, list[ScoredEdge]] = {}
    for pair in dataset.pairs:
        if pair.pair_id not in scores:
            continue
        topic = corpus.topic_of(pair.first.mention_id)
        edges_by_topic.setdefault(topic, []).append(ScoredEdge(
            pair_id=pair.pair_id,
            first=pair.first.mention_id,
            second=pair.second.mention_id,
            score=scores[pair.pair_id],
        ))
    response = cluster_within_topics(edges_by_topic, threshold, universe_by_topic)
    key = gold_clustering(corpus)
    return key, response


def _fail(exc: Exception, as_json: bool, code: int) -> None:
    if as_json:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        click.echo(json.dumps(payload, ensure_ascii=False, sort_keys=True), err=True)
    else:
        click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _run(ctx, fn) -> None:
    """Run a stage body under the exit-code contract (1 data, 2 config)."""
    try:
        fn()
    except ConfigError as exc:
        _fail(exc, ctx.obj["json"], 2)
    except (EcrError, ValueError, KeyError, OSError) as exc:
        _fail(exc, ctx.obj["json"], 1)


@click.group()
@click.option("--config", "config_path", type=str, default=None, help="YAML config file.")
@click.option("--seed", type=int, default=None, help="Override the run seed.")
@click.option("--json", "as_json", is_flag=True, help="Emit errors as JSON on stderr.")
@click.option("--cache-dir", type=str, default=None, help="LLM exchange cache directory.")
@click.pass_context
def main(ctx, config_path, seed, as_json, cache_dir):
    """Event coreference toolkit: ingest, augment, score, cluster, evaluate."""
    ctx.ensure_object(dict)
    overrides = {"seed": seed, "cache_dir": cache_dir}
    try:
        config = RunConfig.load(config_path, overrides)
    except ConfigError as exc:
        _fail(exc, as_json, 2)
        return
    ctx.obj["config"] = config
    ctx.obj["json"] = as_json


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--split", required=True, type=click.Choice(["train", "dev", "test"]))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def ingest(ctx, corpus_path, split, out_dir):
    """Load, validate and normalize a corpus file."""
    def body():
        config = ctx.obj["config"]
        corpus = load_corpus(corpus_path, split)
        out = Path(out_dir)
        lines = []
        for doc_id in sorted(corpus.documents):
            doc = corpus.documents[doc_id]
            lines.append(_json_line({
                "kind": "doc", "doc_id": doc.doc_id, "topic_id": doc.topic_id,
                "subtopic_id": doc.subtopic_id,
                "sentences": [list(s.tokens) for s in doc.sentences],
            }))
        for mid in sorted(corpus.mentions):
            m = corpus.mentions[mid]
            lines.append(_json_line({
                "kind": "mention", "mention_id": m.mention_id, "doc_id": m.doc_id,
                "sent_idx": m.sent_idx, "span": list(m.trigger_span),
                "head_lemma": m.head_lemma, "gold_cluster_id": m.gold_cluster_id,
            }))
        name = f"corpus.{split}.jsonl"
        _write_text(out / name, "".join(lines))
        _write_manifest(out, "ingest", config, [Path(corpus_path)], [name])
        click.echo(f"ingested {len(corpus.documents)} docs, "
                   f"{len(corpus.mentions)} mentions -> {out / name}")
    _run(ctx, body)


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--split", required=True, type=click.Choice(["train", "dev", "test"]))
@click.option("--docs", required=True, type=int)
@click.option("--sentences", required=True, type=int)
@click.option("--mentions", required=True, type=int)
@click.option("--out", "out_dir", default=None, type=click.Path())
@click.pass_context
def validate(ctx, corpus_path, split, docs, sentences, mentions, out_dir):
    """Check corpus statistics against expected split counts.

    A mismatch is reported, not an error: the exit code stays 0."""
    def body():
        config = ctx.obj["config"]
        corpus = load_corpus(corpus_path, split)
        report = validate_split_stats(corpus, SplitStats(docs, sentences, mentions))
        click.echo(json.dumps(report.as_dict(), indent=2, sort_keys=True))
        if out_dir:
            out = Path(out_dir)
            _write_text(out / "validation.json",
                        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
            _write_manifest(out, "validate", config, [Path(corpus_path)],
                            ["validation.json"])
    _run(ctx, body)


@main.command("build-pairs")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--split", required=True, type=click.Choice(["train", "dev", "test"]))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def build_pairs(ctx, corpus_path, split, out_dir):
    """Build the K-nearest mention-pair dataset."""
    def body():
        config = ctx.obj["config"]
        corpus = load_corpus(corpus_path, split)
        dataset = build_pair_dataset(
            corpus, config.k_train, config.k_infer, config.w, scope=config.scope)
        out = Path(out_dir)
        name = f"pairs.{split}.jsonl"
        _write_text(out / name, dataset.to_jsonl())
        _write_manifest(out, "build-pairs", config, [Path(corpus_path)], [name])
        click.echo(f"built {len(dataset.pairs)} pairs -> {out / name}")
    _run(ctx, body)


@main.command("analyze-bias")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def analyze_bias(ctx, pairs_path, out_dir):
    """Trigger-similarity histogram of a pair dataset (CSV + JSON summary)."""
    def body():
        config = ctx.obj["config"]
        dataset = _load_pairs(Path(pairs_path))
        histogram = bias_histogram(dataset.pairs)
        out = Path(out_dir)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["label", "class", "count"])
        writer.writerows(histogram.as_csv_rows())
        _write_text(out / "bias.csv", buffer.getvalue())
        _write_text(out / "bias.json",
                    json.dumps(histogram.as_dict(), indent=2, sort_keys=True) + "\n")
        _write_manifest(out, "analyze-bias", config, [Path(pairs_path)],
                        ["bias.csv", "bias.json"])
        click.echo(json.dumps(histogram.as_dict(), sort_keys=True))
    _run(ctx, body)


@main.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--kind", required=True, type=click.Choice(["cad", "tia", "cia", "tad"]))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--dump", is_flag=True, help="Also write a human-readable dump.")
@click.pass_context
def augment(ctx, pairs_path, kind, out_dir, dump):
    """Generate label-flipped augmentations and a mixed dataset."""
    def body():
        config = ctx.obj["config"]
        dataset = _load_pairs(Path(pairs_path))
        llm = _make_llm(config)
        plan = config.plan()
        augs = augment_dataset(dataset, AugKind(kind.upper()), llm, plan)
        mixed = mix_dataset(dataset, augs, plan)
        out = Path(out_dir)
        aug_name = f"augmented.{kind}.jsonl"
        mix_name = f"mixed.{kind}.jsonl"
        _write_text(out / aug_name, "".join(_json_line(a.as_dict()) for a in augs))
        _write_text(out / mix_name, mixed.to_jsonl())
        outputs = [aug_name, mix_name]
        if dump:
            dump_name = f"augmented.{kind}.txt"
            blocks = [f"# {a.pair_id}\n{render_pair_dump(a)}\n" for a in augs]
            _write_text(out / dump_name, "\n".join(blocks))
            outputs.append(dump_name)
        _write_manifest(out, f"augment-{kind}", config, [Path(pairs_path)], outputs)
        click.echo(f"generated {len(augs)} augmented pairs -> {out / aug_name}")
    _run(ctx, body)


@main.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--scorer", "scorer_spec", default=None,
              help='"lemma" or an external scorer base URL.')
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def score(ctx, pairs_path, scorer_spec, out_dir):
    """Score pairs with the lemma baseline or an external scorer."""
    def body():
        config = ctx.obj["config"]
        spec = scorer_spec or config.scorer
        dataset = _load_pairs(Path(pairs_path))
        rows = _score_pairs(dataset, spec)
        out = Path(out_dir)
        _write_text(out / "scores.jsonl", "".join(_json_line(r) for r in rows))
        _write_manifest(out, "score", config, [Path(pairs_path)], ["scores.jsonl"])
        click.echo(f"scored {len(rows)} pairs -> {out / 'scores.jsonl'}")
    _run(ctx, body)


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--split", required=True, type=click.Choice(["train", "dev", "test"]))
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def cluster(ctx, corpus_path, split, pairs_path, scores_path, out_dir):
    """Merge scored pairs into system clusters; also emit the gold clustering."""
    def body():
        config = ctx.obj["config"]
        corpus = load_corpus(corpus_path, split)
        dataset = _load_pairs(Path(pairs_path))
        scores = {}
        for line in Path(scores_path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                scores[rec["pair_id"]] = float(rec["score"])
        key, response = _cluster_sets(corpus, dataset, scores, config.threshold)
        out = Path(out_dir)
        _write_text(out / "key.clusters.json", key.to_json() + "\n")
        _write_text(out / "response.clusters.json", response.to_json() + "\n")
        _write_manifest(out, "cluster", config,
                        [Path(corpus_path), Path(pairs_path), Path(scores_path)],
                        ["key.clusters.json", "response.clusters.json"])
        click.echo(f"{len(response.clusters)} system clusters -> {out}")
    _run(ctx, body)


@main.command()
@click.option("--key", "key_path", required=True, type=click.Path(exists=True))
@click.option("--response", "response_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path())
@click.pass_context
def evaluate(ctx, key_path, response_path, out_dir):
    """Full metric report for a key/response clustering pair."""
    def body():
        config = ctx.obj["config"]
        key = ClusterSet.from_json(Path(key_path).read_text(encoding="utf-8"))
        response = ClusterSet.from_json(Path(response_path).read_text(encoding="utf-8"))
        report = conll(key, response)
        click.echo(report.as_table())
        click.echo(json.dumps(report.as_dict(), indent=2, sort_keys=True))
        if out_dir:
            out = Path(out_dir)
            _write_text(out / "report.json",
                        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
            _write_text(out / "report.txt", report.as_table() + "\n")
            _write_manifest(out, "evaluate", config,
                            [Path(key_path), Path(response_path)],
                            ["report.json", "report.txt"])
    _run(ctx, body)


@main.command("llm-eval-parse")
@click.option("--mode", required=True, type=click.Choice(["pairwise", "doc-template"]))
@click.option("--transcripts", "transcript_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--pairs", "pairs_path", default=None, type=click.Path(exists=True),
              help="Gold pairs (pairwise mode).")
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True),
              help="Gold corpus (doc-template mode).")
@click.option("--split", default="test", type=click.Choice(["train", "dev", "test"]))
@click.option("--unit", default="topic", type=click.Choice(["topic", "doc"]),
              help="Doc-template transcript granularity (golden topic or single doc).")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def llm_eval_parse(ctx, mode, transcript_dir, pairs_path, corpus_path, split,
                   unit, out_dir):
    """Parse a directory of raw LLM responses and score them.

    Pairwise mode expects one <pair_id>.txt per response. Doc-template mode
    expects one <topic_id>.txt per golden topic (each response annotates the
    topic's concatenated documents), or <doc_id>.txt with --unit doc.
    """
    def body():
        config = ctx.obj["config"]
        out = Path(out_dir)
        transcripts = Path(transcript_dir)
        if mode == "pairwise":
            if not pairs_path:
                raise ConfigError("pairwise mode requires --pairs")
            dataset = _load_pairs(Path(pairs_path))
            gold = {p.pair_id: p.label for p in dataset.pairs}
            predictions = {}
            for path in sorted(transcripts.glob("*.txt")):
                predictions[path.stem] = parse_pairwise_cot(
                    path.read_text(encoding="utf-8"))
            report = pairwise_report(gold, predictions)
            _write_text(out / "pairwise_report.json",
                        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
            _write_manifest(out, "llm-eval-parse", config, [Path(pairs_path)],
                            ["pairwise_report.json"])
            click.echo(json.dumps(report.as_dict(), sort_keys=True))
        else:
            if not corpus_path:
                raise ConfigError("doc-template mode requires --corpus")
            corpus = load_corpus(corpus_path, split)
            keys, responses = [], []
            taxonomy_total = {"missing_type1": 0, "missing_type2": 0,
                              "redundant": 0, "wrong_prediction": 0}
            ordered = sorted(corpus.mentions.values(),
                             key=lambda m: (m.doc_id, m.sent_idx, m.trigger_span))
            for path in sorted(transcripts.glob("*.txt")):
                if unit == "doc":
                    in_scope = [m for m in ordered if m.doc_id == path.stem]
                else:
                    in_scope = [m for m in ordered
                                if corpus.documents[m.doc_id].topic_id == path.stem]
                mentions = [
                    DocMention(m.mention_id, m.trigger_text, m.gold_cluster_id)
                    for m in in_scope
                ]
                if not mentions:
                    continue
                annotation, taxonomy = parse_doc_template(
                    mentions, path.read_text(encoding="utf-8"))
                for name, value in taxonomy.as_dict().items():
                    taxonomy_total[name] += value
                key, response = doc_template_cluster_sets(mentions, annotation)
                keys.append(key)
                responses.append(response)
            if not keys:
                raise ConfigError("no transcript matched a document with mentions")
            report = conll(merge_cluster_sets(keys), merge_cluster_sets(responses))
            payload = {"metrics": report.as_dict(), "taxonomy": taxonomy_total}
            _write_text(out / "doc_template_report.json",
                        json.dumps(payload, indent=2, sort_keys=True) + "\n")
            _write_manifest(out, "llm-eval-parse", config, [Path(corpus_path)],
                            ["doc_template_report.json"])
            click.echo(json.dumps(payload, sort_keys=True))
    _run(ctx, body)


@main.command()
@click.option("--corpus", "corpus_path", default=None, type=click.Path(),
              help="Corpus file; defaults to the config's corpus.<split> path.")
@click.option("--split", required=True, type=click.Choice(["train", "dev", "test"]))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--augment-kind", default="none",
              type=click.Choice(["none", "cad", "tia", "cia", "tad"]))
@click.pass_context
def pipeline(ctx, corpus_path, split, out_dir, augment_kind):
    """Run ingest, build-pairs, analyze-bias, augment, score, cluster, evaluate."""
    def body():
        config = ctx.obj["config"]
        resolved = corpus_path or (config.corpus or {}).get(split)
        if not resolved:
            raise ConfigError(f"no corpus path for split {split!r}: "
                              f"pass --corpus or set corpus.{split}")
        if not Path(resolved).exists():
            raise ConfigError(f"corpus file not found: {resolved}")
        out = Path(out_dir)
        corpus = load_corpus(resolved, split)
        dataset = build_pair_dataset(
            corpus, config.k_train, config.k_infer, config.w, scope=config.scope)
        pairs_name = f"pairs.{split}.jsonl"
        _write_text(out / pairs_name, dataset.to_jsonl())
        histogram = bias_histogram(dataset.pairs)
        _write_text(out / "bias.json",
                    json.dumps(histogram.as_dict(), indent=2, sort_keys=True) + "\n")
        outputs = [pairs_name, "bias.json"]
        if augment_kind != "none":
            llm = _make_llm(config)
            plan = config.plan()
            augs = augment_dataset(dataset, AugKind(augment_kind.upper()), llm, plan)
            mixed = mix_dataset(dataset, augs, plan)
            _write_text(out / f"augmented.{augment_kind}.jsonl",
                        "".join(_json_line(a.as_dict()) for a in augs))
            _write_text(out / f"mixed.{augment_kind}.jsonl", mixed.to_jsonl())
            outputs += [f"augmented.{augment_kind}.jsonl", f"mixed.{augment_kind}.jsonl"]
        rows = _score_pairs(dataset, config.scorer)
        _write_text(out / "scores.jsonl", "".join(_json_line(r) for r in rows))
        scores = {r["pair_id"]: r["score"] for r in rows}
        key, response = _cluster_sets(corpus, dataset, scores, config.threshold)
        _write_text(out / "key.clusters.json", key.to_json() + "\n")
        _write_text(out / "response.clusters.json", response.to_json() + "\n")
        report = conll(key, response)
        _write_text(out / "report.json",
                    json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
        _write_text(out / "report.txt", report.as_table() + "\n")
        outputs += ["scores.jsonl", "key.clusters.json", "response.clusters.json",
                    "report.json", "report.txt"]
        _write_manifest(out, "pipeline", config, [Path(resolved)], outputs)
        click.echo(report.as_table())
    _run(ctx, body)


if __name__ == "__main__":
    main()
