"""Command line: serve the scorer or train the logistic model."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .app import create_app
from .config import ServerConfig
from .model import FeatureLogisticScorer


@click.group()
def main():
    """Reference pairwise-coreference scoring server."""


@main.command()
@click.option("--config", "config_path", type=str, default=None, help="YAML config.")
@click.option("--host", type=str, default=None)
@click.option("--port", type=int, default=None)
@click.option("--model", "model_spec", default=None,
              type=click.Choice(["feature-logistic", "cross-encoder"]))
@click.option("--checkpoint", type=str, default=None)
@click.option("--batch-cap", type=int, default=None)
@click.option("--device", type=str, default=None)
def serve(config_path, host, port, model_spec, checkpoint, batch_cap, device):
    """Run the HTTP endpoint (POST /score, GET /healthz)."""
    import uvicorn

    try:
        config = ServerConfig.load(
            config_path, host=host, port=port, model=model_spec,
            checkpoint=checkpoint, batch_cap=batch_cap, device=device)
        app = create_app(config)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


def _window_text_and_span(window: dict) -> tuple[str, list[int]]:
    """Flatten a structured discourse window to wire text + character span."""
    parts = [*window["prefix"], window["center"], *window["suffix"]]
    text = " ".join(parts)
    offset = sum(len(p) + 1 for p in window["prefix"])
    start, end = window["trigger_span"]
    return text, [offset + start, offset + end]


@main.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="Labeled pair dataset (JSON-Lines, structured windows).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--regularization", type=float, default=1.0)
def train(pairs_path, out_path, regularization):
    """Fit the feature-logistic model on a labeled pair dataset."""
    wire_pairs = []
    labels = []
    for line in Path(pairs_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        first_text, first_span = _window_text_and_span(rec["first"])
        second_text, second_span = _window_text_and_span(rec["second"])
        wire_pairs.append({
            "pair_id": rec["pair_id"],
            "first": {"text": first_text, "span": first_span},
            "second": {"text": second_text, "span": second_span},
        })
        labels.append(1 if rec["label"] == "coref" else 0)
    if len(set(labels)) < 2:
        click.echo("error: training data needs both labels", err=True)
        sys.exit(2)
    model = FeatureLogisticScorer.fit(wire_pairs, labels,
                                      regularization=regularization)
    model.save(out_path)
    click.echo(f"trained on {len(labels)} pairs -> {out_path}")


if __name__ == "__main__":
    main()
