"""Command-line interface: encode, repair, evaluate, categorize, mine, split,
predict-trust."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import mining
from .engine import (
    FixtureBackend,
    GenerationRequest,
    HttpBackend,
    ReplayExecutor,
    generate_candidates,
    plausibility,
)
from .errors import TargenError, TruncationError
from .hunks import build_context_sets
from .metrics import (
    InstanceResult,
    aggregate,
    codebleu,
    exact_match,
    select_best,
)
from .model import CandidateRepair, HunkLevel, load_dataset, save_dataset
from .metrics import bleu4, canonical_tokens
from .mining import repaired_breakage_lines
from .prioritize import Strategy, compute_priorities, prioritize
from .prompt import IOConfig, IOFormat, OutputKind, build_input, expected_code_sequence
from .editseq import encode_edit_sequence, serialize_edit_sequence
from .taxonomy import categorize
from .tokenization import tokenize_lines
from .trust import (
    FEATURE_NAMES,
    ForestConfig,
    cross_validate,
    extract_features,
    permutation_importance,
    train_forest,
)


@click.group()
def main():
    """Test-repair pipeline tools."""


def _encode_instance(instance, config: IOConfig):
    """Shared encode path: prioritized context -> model input + expected output."""
    hunks = list(instance.sut_hunks)
    method_hunks = [h for h in hunks if h.level == HunkLevel.METHOD]
    class_hunks = [h for h in hunks if h.level == HunkLevel.CLASS]
    sets = build_context_sets(
        method_hunks, class_hunks, instance.call_graph_method, instance.call_graph_class
    )
    if config.strategy == Strategy.HP1:
        eligible = list(sets.covered)
    else:
        eligible = list(sets.all)
    priorities = compute_priorities(
        eligible,
        instance.breakage_lines(),
        list(instance.broken_test.source),
        graph_method=instance.call_graph_method,
        graph_class=instance.call_graph_class,
        covered_method_ids={h.hunk_id for h in sets.covered_method},
        covered_class_ids={h.hunk_id for h in sets.covered_class},
    )
    order = prioritize(eligible, config.strategy, priorities)
    by_id = {h.hunk_id: h for h in eligible}
    encoded = build_input(
        instance.broken_test, instance.breakage, [by_id[i] for i in order], config
    )
    repaired = repaired_breakage_lines(instance)
    if config.output_kind == OutputKind.EDIT_SEQUENCE:
        seq = encode_edit_sequence(
            tokenize_lines(instance.breakage_lines()), tokenize_lines(repaired)
        )
        expected = serialize_edit_sequence(seq)
    else:
        expected = expected_code_sequence(repaired)
    return encoded, expected


@main.command()
@click.option("--io", "io_name", type=click.Choice(["io1", "io2", "io3", "io4"]), required=True)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def encode(io_name, in_path, out_path):
    """Render model inputs/outputs for a dataset."""
    config = IOConfig(IOFormat(io_name))
    instances = load_dataset(in_path)
    skipped = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for instance in instances:
            try:
                encoded, expected = _encode_instance(instance, config)
            except TruncationError:
                skipped += 1
                continue
            fh.write(
                json.dumps(
                    {
                        "id": instance.id,
                        "input": encoded.text,
                        "expected_output": expected,
                        "included_hunks": list(encoded.included_hunk_ids),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    click.echo(f"encoded {len(instances) - skipped} instances ({skipped} over budget)")


@main.command()
@click.option("--io", "io_name", type=click.Choice(["io1", "io2", "io3", "io4"]), required=True)
@click.option("--backend", "backend_url", default=None, help="Generation service URL")
@click.option("--fixtures", "fixtures_path", type=click.Path(exists=True), default=None,
              help="Recorded /generate responses to replay instead of a live backend")
@click.option("--beam", default=40, show_default=True)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def repair(io_name, backend_url, fixtures_path, beam, in_path, out_path):
    """Generate repair candidates for every instance in a dataset."""
    if backend_url is None and fixtures_path is None:
        raise click.UsageError("need --backend or --fixtures")
    config = IOConfig(IOFormat(io_name))
    backend = (
        FixtureBackend(fixtures_path) if fixtures_path else HttpBackend(backend_url)
    )
    instances = load_dataset(in_path)
    written = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for instance in instances:
            try:
                encoded, _ = _encode_instance(instance, config)
            except TruncationError:
                continue
            request = GenerationRequest(
                input=encoded.text, beam_size=beam,
                max_output_tokens=config.max_output_tokens,
            )
            candidates = generate_candidates(request, backend, config)
            fh.write(
                json.dumps(
                    {
                        "id": instance.id,
                        "io": io_name,
                        "candidates": [
                            {"text": c.text, "score": c.beam_score, "rank": c.rank}
                            for c in candidates
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            written += 1
    click.echo(f"generated candidates for {written} instances")


@main.command()
@click.option("--predictions", type=click.Path(exists=True), required=True)
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--replay", "replay_path", type=click.Path(exists=True), default=None,
              help="JSON map of patched-file sha256 -> execution log for PR")
def evaluate(predictions, dataset, out_path, replay_path):
    """Score predictions against ground truth (EM/PR/BLEU/CodeBLEU)."""
    instances = {i.id: i for i in load_dataset(dataset)}
    replay = None
    if replay_path:
        replay = ReplayExecutor(json.loads(Path(replay_path).read_text()))
    rows = []
    with open(predictions, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            pred = json.loads(line)
            instance = instances.get(pred["id"])
            if instance is None:
                raise TargenError(f"prediction for unknown instance {pred['id']}")
            config = IOConfig(IOFormat(pred["io"]))
            candidates = [
                CandidateRepair(c["text"], c["score"], c["rank"])
                for c in pred["candidates"]
            ]
            if config.output_kind == OutputKind.EDIT_SEQUENCE:
                _, gt = _encode_instance(instance, config)
            else:
                gt = expected_code_sequence(repaired_breakage_lines(instance))
            em = exact_match(candidates, gt)
            best = select_best(candidates, gt)
            breakdown = codebleu(best.text, gt)
            plausible = False
            if replay is not None:
                result = plausibility(
                    candidates,
                    list(instance.broken_test.source),
                    instance.breakage,
                    config,
                    replay,
                    instance.broken_test.fully_qualified_name,
                    instance.broken_test.file_path,
                )
                plausible = result.any_plausible
            rows.append(
                InstanceResult(
                    instance_id=instance.id,
                    exact=em,
                    plausible=plausible,
                    best_bleu=bleu4(canonical_tokens(best.text), canonical_tokens(gt)),
                    best_codebleu=breakdown.total,
                )
            )
    report = aggregate(rows)
    Path(out_path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    click.echo(
        f"EM {report.em:.1f}  PR {report.pr:.1f}  "
        f"BLEU {report.bleu:.1f}  CodeBLEU {report.codebleu:.1f}  (n={report.n})"
    )


@main.command("categorize")
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def categorize_cmd(dataset, out_path):
    """Write ARG/INV/ORC categories and AST edit counts as CSV."""
    instances = load_dataset(dataset)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "categories", "ast_edits", "breakage_kind"])
        for instance in instances:
            category = categorize(
                list(instance.broken_test.source), list(instance.repaired_test.source)
            )
            writer.writerow(
                [
                    instance.id,
                    category.label(),
                    category.ast_edit_count,
                    instance.breakage.kind.value,
                ]
            )
    click.echo(f"categorized {len(instances)} instances")


@main.command()
@click.option("--repo", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--project", default=None)
@click.option("--exclusions", type=click.Path(), default=None,
              help="Optional CSV of excluded candidates with reasons")
def mine(repo, out_path, project, exclusions):
    """Mine single-hunk test repairs from a local repository."""
    candidates = mining.mine_repo(repo, project=project)
    report = mining.apply_exclusion_filters(candidates)
    instances = [c.to_instance() for c in report.kept]
    save_dataset(instances, out_path)
    if exclusions:
        with open(exclusions, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["candidate_id", "reason"])
            for record in report.excluded:
                writer.writerow([record.candidate_id, record.reason.value])
    counts = report.counts()
    click.echo(
        f"mined {len(candidates)}; kept {counts.pop('kept')}; "
        + "; ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    )


@main.command("split")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--ratios", default="80,5,15", show_default=True)
@click.option("--out-prefix", default=None, help="Prefix for train/val/test files")
def split_cmd(in_path, ratios, out_prefix):
    """Commit-date split into train/val/test."""
    parts = tuple(float(x) for x in ratios.split(","))
    if len(parts) != 3:
        raise click.UsageError("--ratios needs three comma-separated numbers")
    instances = load_dataset(in_path)
    result = mining.split(instances, parts)
    prefix = out_prefix or str(Path(in_path).with_suffix(""))
    for name, rows in (("train", result.train), ("val", result.val), ("test", result.test)):
        save_dataset(rows, f"{prefix}.{name}.jsonl")
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(
        f"train {len(result.train)} / val {len(result.val)} / test {len(result.test)}"
    )


@main.command("predict-trust")
@click.option("--train", "train_path", type=click.Path(exists=True), required=True,
              help="CSV with the 7 feature columns and a label column")
@click.option("--labels", type=click.Choice(["em", "plausible"]), default="em",
              show_default=True)
@click.option("--cv", default=5, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--model-out", type=click.Path(), default=None)
def predict_trust(train_path, labels, cv, seed, model_out):
    """Cross-validate the trust model and optionally persist it."""
    rows = []
    y = []
    with open(train_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for record in reader:
            rows.append([float(record[name]) for name in FEATURE_NAMES])
            y.append(int(record[labels]))
    x = np.array(rows)
    y = np.array(y)
    report = cross_validate(x, y, k=cv, seed=seed)
    for cls in (1, 0):
        metrics = report.per_label[cls]
        click.echo(
            f"label={cls}: P {metrics.precision:.0f}  R {metrics.recall:.0f}  "
            f"F1 {metrics.f1:.0f}"
        )
    model = train_forest(x, y, ForestConfig(seed=seed))
    ranked = permutation_importance(model, x, y, seed=seed)
    click.echo("feature importance: " + ", ".join(f"{n}={v:.3f}" for n, v in ranked))
    if model_out:
        model.save(model_out)
        click.echo(f"model written to {model_out}")


@main.command("extract-features")
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def extract_features_cmd(dataset, out_path):
    """Write the 7-feature trust vectors for a dataset as CSV."""
    instances = load_dataset(dataset)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *FEATURE_NAMES])
        for instance in instances:
            features = extract_features(instance)
            writer.writerow([instance.id, *features.as_vector()])
    click.echo(f"extracted features for {len(instances)} instances")


if __name__ == "__main__":
    sys.exit(main())
