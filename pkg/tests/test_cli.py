import json
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from ecrkit.cli import main
from tests_paths import CORPUS_PATH


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, args, **kwargs):
    return runner.invoke(main, args, catch_exceptions=False, **kwargs)


def write_config(tmp_path, transcript=None, **extra):
    config = {"k_train": 15, "k_infer": 5, "w": 2, "threshold": 0.5,
              "scorer": "lemma", "seed": 0,
              "cache_dir": str(tmp_path / "cache")}
    if transcript is not None:
        config["llm"] = {"mock_transcript": str(transcript)}
    config.update(extra)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path


def test_missing_config_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["--config", str(tmp_path / "nope.yaml"),
                                  "validate", "--corpus", str(CORPUS_PATH),
                                  "--split", "test", "--docs", "20",
                                  "--sentences", "70", "--mentions", "20"])
    assert result.exit_code == 2
    assert "config" in result.output


def test_unknown_config_key_exits_2(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("mystery_knob: 3\n", encoding="utf-8")
    result = runner.invoke(main, ["--config", str(path), "validate",
                                  "--corpus", str(CORPUS_PATH), "--split", "test",
                                  "--docs", "20", "--sentences", "70",
                                  "--mentions", "20"])
    assert result.exit_code == 2


def test_json_error_output(runner, tmp_path):
    bad_corpus = tmp_path / "bad.jsonl"
    bad_corpus.write_text("{not json\n", encoding="utf-8")
    result = runner.invoke(main, ["--json", "ingest", "--corpus", str(bad_corpus),
                                  "--split", "test", "--out", str(tmp_path / "o")])
    assert result.exit_code == 1
    payload = json.loads(result.stderr.strip().splitlines()[-1])
    assert payload["error"] == "CorpusParseError"


def test_validate_reports_stats(runner):
    result = invoke(runner, ["validate", "--corpus", str(CORPUS_PATH),
                             "--split", "test", "--docs", "20",
                             "--sentences", "70", "--mentions", "20"])
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["passed"] is True


def test_validate_mismatch_still_exits_0(runner):
    result = invoke(runner, ["validate", "--corpus", str(CORPUS_PATH),
                             "--split", "test", "--docs", "1",
                             "--sentences", "1", "--mentions", "1"])
    assert result.exit_code == 0
    assert json.loads(result.output)["passed"] is False


def test_ingest_writes_normalized_corpus_and_manifest(runner, tmp_path):
    out = tmp_path / "out"
    result = invoke(runner, ["ingest", "--corpus", str(CORPUS_PATH),
                             "--split", "test", "--out", str(out)])
    assert result.exit_code == 0
    assert (out / "corpus.test.jsonl").exists()
    manifest = json.loads((out / "manifest.ingest.json").read_text())
    assert manifest["stage"] == "ingest"
    assert str(CORPUS_PATH) in manifest["inputs"]


def test_evaluate_identical_files_all_ones(runner, tmp_path):
    clusters = {"clusters": [["a", "b"], ["c"]]}
    key = tmp_path / "k.json"
    response = tmp_path / "r.json"
    key.write_text(json.dumps(clusters), encoding="utf-8")
    response.write_text(json.dumps(clusters), encoding="utf-8")
    result = invoke(runner, ["evaluate", "--key", str(key),
                             "--response", str(response)])
    assert result.exit_code == 0
    report = json.loads(result.output[result.output.index("{"):])
    assert report["conll_f1"] == 1.0
    assert report["muc"]["f1"] == 1.0


def test_build_pairs_score_cluster_evaluate_chain(runner, tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path)
    for args in (
        ["--config", str(config), "build-pairs", "--corpus", str(CORPUS_PATH),
         "--split", "test", "--out", str(out)],
        ["--config", str(config), "analyze-bias",
         "--pairs", str(out / "pairs.test.jsonl"), "--out", str(out)],
        ["--config", str(config), "score", "--pairs", str(out / "pairs.test.jsonl"),
         "--scorer", "lemma", "--out", str(out)],
        ["--config", str(config), "cluster", "--corpus", str(CORPUS_PATH),
         "--split", "test", "--pairs", str(out / "pairs.test.jsonl"),
         "--scores", str(out / "scores.jsonl"), "--out", str(out)],
        ["--config", str(config), "evaluate", "--key", str(out / "key.clusters.json"),
         "--response", str(out / "response.clusters.json"), "--out", str(out)],
    ):
        result = invoke(runner, args)
        assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["muc"]["f1"] == pytest.approx(2 / 3, abs=1e-9)
    bias = json.loads((out / "bias.json").read_text())
    assert bias["total"] == 100  # 20 anchors x 5 neighbors
    csv_text = (out / "bias.csv").read_text().splitlines()
    assert csv_text[0] == "label,class,count"
    assert len(csv_text) == 5


def test_augment_cli_with_mock(runner, tmp_path, full_transcript_file):
    out = tmp_path / "out"
    config = write_config(tmp_path, transcript=full_transcript_file)
    invoke(runner, ["--config", str(config), "build-pairs", "--corpus",
                    str(CORPUS_PATH), "--split", "test", "--out", str(out)])
    result = invoke(runner, ["--config", str(config), "augment",
                             "--pairs", str(out / "pairs.test.jsonl"),
                             "--kind", "cad", "--out", str(out), "--dump"])
    assert result.exit_code == 0, result.output
    aug_lines = (out / "augmented.cad.jsonl").read_text().splitlines()
    assert aug_lines
    first = json.loads(aug_lines[0])
    assert first["kind"] == "CAD"
    dump = (out / "augmented.cad.txt").read_text()
    assert "<s>" in dump and "</s>" in dump
    mixed = (out / "mixed.cad.jsonl").read_text().splitlines()
    assert len(mixed) > 100  # originals plus appended augmentations


def test_llm_eval_parse_pairwise(runner, tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path)
    invoke(runner, ["--config", str(config), "build-pairs", "--corpus",
                    str(CORPUS_PATH), "--split", "test", "--out", str(out)])
    pairs_path = out / "pairs.test.jsonl"
    pairs = [json.loads(line) for line in pairs_path.read_text().splitlines()]
    transcripts = tmp_path / "transcripts"
    transcripts.mkdir()
    for rec in pairs[:4]:
        verdict = "Coreferential" if rec["label"] == "coref" else "Non-Coreferential"
        (transcripts / f"{rec['pair_id']}.txt").write_text(
            f"Coreferential results: {verdict}\nCoreferential score: 0.9\n",
            encoding="utf-8")
    result = invoke(runner, ["--config", str(config), "llm-eval-parse",
                             "--mode", "pairwise", "--transcripts", str(transcripts),
                             "--pairs", str(pairs_path), "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "pairwise_report.json").read_text())
    assert report["n_complete"] == 4
    assert report["tcomp"] == pytest.approx(4 / len(pairs))


def test_llm_eval_parse_doc_template_topic_unit(runner, tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path)
    transcripts = tmp_path / "doc_transcripts"
    transcripts.mkdir()
    # a perfect annotation of topic t1: tags in (doc, sentence) order,
    # cluster names consistent with the gold partition
    (transcripts / "t1.txt").write_text(
        "Two freight trains [crashed](#x1) near the bridge. "
        "The trains [collided](#x1) there. "
        "Esther Williams has [died](#d) at 91. "
        "Williams [died](#d) early Thursday. "
        "She [passed away](#d) in her sleep. "
        "The pop star [married](#w) her partner. "
        "On Saturday the star [married](#w) in Malibu. "
        "The couple [wed](#w) before close friends.",
        encoding="utf-8")
    result = invoke(runner, ["--config", str(config), "llm-eval-parse",
                             "--mode", "doc-template", "--transcripts",
                             str(transcripts), "--corpus", str(CORPUS_PATH),
                             "--split", "test", "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads((out / "doc_template_report.json").read_text())
    assert payload["taxonomy"]["missing_type2"] == 0
    assert payload["metrics"]["conll_f1"] == 1.0


def test_llm_eval_parse_doc_template_doc_unit_singleton(runner, tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path)
    transcripts = tmp_path / "doc_transcripts"
    transcripts.mkdir()
    (transcripts / "amd1.txt").write_text(
        "AMD will [pay](#c1) $334 million for SeaMicro.", encoding="utf-8")
    result = invoke(runner, ["--config", str(config), "llm-eval-parse",
                             "--mode", "doc-template", "--unit", "doc",
                             "--transcripts", str(transcripts),
                             "--corpus", str(CORPUS_PATH),
                             "--split", "test", "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads((out / "doc_template_report.json").read_text())
    # single-mention universe: B3 and CEAF_e are 1, MUC hits the
    # zero-denominator convention, so CoNLL lands on 2/3
    assert payload["metrics"]["conll_f1"] == pytest.approx(2 / 3)


def _tree(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


def test_pipeline_is_deterministic(runner, tmp_path, full_transcript_file):
    config = write_config(tmp_path, transcript=full_transcript_file)
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        result = invoke(runner, ["--config", str(config), "pipeline",
                                 "--corpus", str(CORPUS_PATH), "--split", "test",
                                 "--out", str(out), "--augment-kind", "cad"])
        assert result.exit_code == 0, result.output
        outs.append(_tree(out))
    first, second = outs
    assert set(first) == set(second)
    for name in first:
        if name.startswith("manifest."):
            a = json.loads(first[name])
            b = json.loads(second[name])
            a.pop("created_at"), b.pop("created_at")
            assert a == b, name
        else:
            assert first[name] == second[name], name


def test_pipeline_report_matches_expectation(runner, tmp_path, full_transcript_file):
    config = write_config(tmp_path, transcript=full_transcript_file)
    out = tmp_path / "run"
    result = invoke(runner, ["--config", str(config), "pipeline",
                             "--corpus", str(CORPUS_PATH), "--split", "test",
                             "--out", str(out), "--augment-kind", "cad"])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["conll_f1"] == pytest.approx(0.6787054215625644, abs=1e-9)


def test_pipeline_reads_corpus_path_from_config(runner, tmp_path, full_transcript_file):
    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump({
        "k_infer": 5, "scorer": "lemma",
        "cache_dir": str(tmp_path / "cache"),
        "corpus": {"test": str(CORPUS_PATH)},
        "llm": {"mock_transcript": str(full_transcript_file)},
    }), encoding="utf-8")
    out = tmp_path / "run"
    result = invoke(runner, ["--config", str(config_path), "pipeline",
                             "--split", "test", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "report.json").exists()


def test_pipeline_without_corpus_path_exits_2(runner, tmp_path):
    config = write_config(tmp_path)
    result = runner.invoke(main, ["--config", str(config), "pipeline",
                                  "--split", "test", "--out", str(tmp_path / "x")])
    assert result.exit_code == 2


def test_validate_writes_artifact_when_out_given(runner, tmp_path):
    out = tmp_path / "out"
    result = invoke(runner, ["validate", "--corpus", str(CORPUS_PATH),
                             "--split", "test", "--docs", "20",
                             "--sentences", "70", "--mentions", "20",
                             "--out", str(out)])
    assert result.exit_code == 0
    report = json.loads((out / "validation.json").read_text())
    assert report["passed"] is True
    assert (out / "manifest.validate.json").exists()
