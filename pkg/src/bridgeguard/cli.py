"""Command-line surface: ingest, synth, train, evaluate, detect, bench.

Exit codes: 0 success, 1 fatal configuration/IO error, 2 partial input
failure (bad inputs listed on stderr, good ones still processed). All
artifacts embed the resolved configuration and its hash.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import __version__
from .bench import format_bench_table, run_bench
from .config import RunConfig, resolve_config
from .errors import BridgeGuardError
from .ingest import (
    DatasetManifest,
    TxRecord,
    flatten_frames,
    load_manifest,
    load_trace_file,
    save_trace_file,
)
from .pipeline import (
    detect,
    load_bundle,
    prepare,
    repeated_pipeline_eval,
    save_bundle,
    train_detector,
)
from .rpc import RpcClient
from .synthgen import GenConfig, gen_config_hash, gen_dataset, write_corpus
from .xteg import dump_xteg


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return click.exceptions.Exit(1)


def _config(config_file, **flags) -> RunConfig:
    try:
        return resolve_config(config_file, **flags)
    except BridgeGuardError as exc:
        raise _fail(str(exc))


def _emit(payload: dict, fmt: str, table: str | None = None) -> None:
    if fmt == "json":
        click.echo(json.dumps(payload, sort_keys=True, indent=1))
    else:
        click.echo(table if table is not None else json.dumps(payload, sort_keys=True, indent=1))


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")


def _load_corpus(manifest_path: Path, manifest: DatasetManifest):
    records, labels = [], []
    base = manifest_path.parent
    for entry in manifest.entries:
        source = Path(entry.source)
        if not source.is_absolute():
            source = base / source
        records.append(load_trace_file(source, chain_id=entry.chain_id))
        labels.append(entry.label)
    return records, labels


def _resolve_inputs(inputs, cfg: RunConfig):
    """Paths load from disk; 0x hashes fetch over RPC. Failures collected."""
    records: list[TxRecord] = []
    failures: list[tuple[str, str]] = []
    client = None
    for item in inputs:
        try:
            if item.startswith("0x") and not Path(item).exists():
                if not cfg.rpc_url:
                    raise BridgeGuardError("tx-hash input requires --rpc-url "
                                           "or BRIDGEGUARD_RPC_URL")
                if client is None:
                    client = RpcClient(cfg.rpc_url, cache_dir=cfg.cache_dir)
                records.append(client.fetch_tx_record(item))
            else:
                records.append(load_trace_file(item))
        except (BridgeGuardError, OSError) as exc:
            failures.append((item, str(exc)))
    return records, failures


@click.group()
@click.version_option(version=__version__, prog_name="bridgeguard")
def main() -> None:
    """Cross-chain bridge attack transaction detection toolkit."""


@main.command()
@click.argument("inputs", nargs=-1, required=False)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--rpc-url", default=None, help="Ethereum-style RPC endpoint.")
@click.option("--cache-dir", default=None, help="RPC response cache directory.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Write normalized trace documents here.")
@click.option("--dump-graph", is_flag=True, help="Print the execution graph dump.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def ingest(inputs, config_file, rpc_url, cache_dir, out_dir, dump_graph, fmt):
    """Normalize traces from files or tx hashes; optionally dump graphs."""
    cfg = _config(config_file, rpc_url=rpc_url, cache_dir=cache_dir)
    records, failures = _resolve_inputs(inputs, cfg)
    rows = []
    for record in records:
        graph = prepare(record, cfg).graph
        rows.append({
            "tx_hash": record.tx_hash,
            "chain_id": record.chain_id,
            "frames": len(flatten_frames(record)),
            "logs": len(record.logs),
            "vertices": len(graph.vertices),
            "edges": len(graph.edges),
        })
        if out_dir:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            save_trace_file(record, out / f"{record.tx_hash}.json")
        if dump_graph:
            click.echo(dump_xteg(graph))
    table = "\n".join(
        f"{r['tx_hash']}  frames={r['frames']} logs={r['logs']} "
        f"vertices={r['vertices']} edges={r['edges']}" for r in rows)
    _emit({"rows": rows, "failures": [list(f) for f in failures],
           "config_hash": cfg.config_hash()}, fmt, table)
    for item, message in failures:
        click.echo(f"failed: {item}: {message}", err=True)
    if failures:
        raise click.exceptions.Exit(2)


@main.command()
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--n-normal", type=int, default=4000, show_default=True)
@click.option("--attack-rate", type=float, default=0.005, show_default=True)
@click.option("--src-tgt-ratio", type=float, default=0.5, show_default=True)
@click.option("--noise-prob", type=float, default=0.5, show_default=True)
@click.option("--depth-jitter", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def synth(out_dir, n_normal, attack_rate, src_tgt_ratio, noise_prob,
          depth_jitter, seed, fmt):
    """Generate a labeled synthetic corpus on disk."""
    gen_cfg = GenConfig(n_normal=n_normal, attack_rate=attack_rate,
                        src_tgt_ratio=src_tgt_ratio,
                        noise=(noise_prob, depth_jitter), seed=seed)
    try:
        samples, manifest = gen_dataset(gen_cfg)
        manifest_path = write_corpus(samples, manifest, out_dir, gen_cfg)
    except BridgeGuardError as exc:
        raise _fail(str(exc))
    counts: dict[str, int] = {}
    for tx in samples:
        counts[tx.label] = counts.get(tx.label, 0) + 1
    payload = {"manifest": str(manifest_path), "total": len(samples),
               "counts": counts, "config_hash": gen_config_hash(gen_cfg)}
    _emit(payload, fmt,
          f"wrote {len(samples)} transactions ({counts}) -> {manifest_path}")


def _corpus_from_options(manifest_file) -> tuple[list[TxRecord], list[str]]:
    manifest_path = Path(manifest_file)
    manifest = load_manifest(manifest_path)
    return _load_corpus(manifest_path, manifest)


@main.command()
@click.option("--manifest", "manifest_file", type=click.Path(exists=True), required=True)
@click.option("--model-dir", type=click.Path(), required=True)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--classifier", type=click.Choice(["knn", "dtree"]), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def train(manifest_file, model_dir, config_file, classifier, seed, fmt):
    """Split, featurize, fit a detector; write the model bundle + metrics."""
    cfg = _config(config_file, classifier=classifier, seed=seed)
    try:
        records, labels = _corpus_from_options(manifest_file)
        bundle, metrics = train_detector(records, labels, cfg)
        save_bundle(bundle, model_dir)
    except (BridgeGuardError, OSError) as exc:
        raise _fail(str(exc))
    payload = {"metrics": metrics, "config": cfg.to_dict(),
               "config_hash": cfg.config_hash(), "model_dir": str(model_dir)}
    _write_json(Path(model_dir) / "metrics.json", payload)
    _emit(payload, fmt, _metrics_table(metrics["three_class"])
          + f"\nmodel bundle -> {model_dir}")


def _metrics_table(report: dict) -> str:
    lines = [f"{'class':<10} {'precision':>9} {'recall':>9} {'f1':>9} {'support':>8}"]
    for cls in report["classes"]:
        m = report["per_class"][cls]
        lines.append(f"{cls:<10} {m['precision']:>9.4f} {m['recall']:>9.4f} "
                     f"{m['f1']:>9.4f} {m['support']:>8.0f}")
    lines.append(f"accuracy {report['accuracy']:.4f}  macro-F1 {report['macro_f1']:.4f}")
    return "\n".join(lines)


@main.command()
@click.option("--manifest", "manifest_file", type=click.Path(exists=True), required=True)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--classifier", "classifiers", type=click.Choice(["knn", "dtree"]),
              multiple=True, help="Repeatable; defaults to the configured classifier.")
@click.option("--runs", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_file", type=click.Path(), default=None,
              help="Write the metrics JSON here.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def evaluate(manifest_file, config_file, classifiers, runs, seed, out_file, fmt):
    """Repeated split/train/eval protocol; mean and std of all metrics."""
    cfg = _config(config_file, runs=runs, seed=seed)
    kinds = tuple(classifiers) or (cfg.classifier,)
    try:
        records, labels = _corpus_from_options(manifest_file)
        report = repeated_pipeline_eval(records, labels, cfg, classifiers=kinds)
    except (BridgeGuardError, OSError) as exc:
        raise _fail(str(exc))
    payload = {"report": report, "config": cfg.to_dict(),
               "config_hash": cfg.config_hash()}
    if out_file:
        _write_json(Path(out_file), payload)
    tables = []
    for kind in kinds:
        mean = report[kind]["mean"]
        tables.append(f"[{kind}] mean over {report['runs']} runs\n"
                      + _metrics_table(mean))
        binary = mean["binary"]["per_class"]["Attack"]
        tables.append(f"[{kind}] attack (binary): precision {binary['precision']:.4f} "
                      f"recall {binary['recall']:.4f} f1 {binary['f1']:.4f}")
    _emit(payload, fmt, "\n".join(tables))


@main.command()
@click.argument("inputs", nargs=-1, required=False)
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--rpc-url", default=None)
@click.option("--cache-dir", default=None)
@click.option("--out", "out_file", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def detect_cmd(inputs, model_dir, config_file, rpc_url, cache_dir, out_file, fmt):
    """Label transactions with a trained detector."""
    cfg = _config(config_file, rpc_url=rpc_url, cache_dir=cache_dir)
    try:
        bundle = load_bundle(model_dir)
    except BridgeGuardError as exc:
        raise _fail(str(exc))
    records, failures = _resolve_inputs(inputs, cfg)
    rows = detect(bundle, records)
    payload = {"rows": rows, "failures": [list(f) for f in failures],
               "config_hash": bundle.config.config_hash()}
    if out_file:
        _write_json(Path(out_file), payload)
    table = "\n".join(f"{row['tx_hash']}  {row['label']}  {json.dumps(row['scores'])}"
                      for row in rows) or "(no inputs)"
    _emit(payload, fmt, table)
    for item, message in failures:
        click.echo(f"failed: {item}: {message}", err=True)
    if failures:
        raise click.exceptions.Exit(2)


@main.command()
@click.option("--manifest", "manifest_file", type=click.Path(exists=True), required=True)
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--limit", type=int, default=None, help="Bench only the first N transactions.")
@click.option("--out", "out_file", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def bench(manifest_file, model_dir, limit, out_file, fmt):
    """Per-stage timing and TPS over a corpus (single worker)."""
    try:
        bundle = load_bundle(model_dir)
        records, _ = _corpus_from_options(manifest_file)
        if limit:
            records = records[:limit]
        report = run_bench(records, bundle)
    except BridgeGuardError as exc:
        raise _fail(str(exc))
    payload = report.to_dict()
    if out_file:
        _write_json(Path(out_file), payload)
    _emit(payload, fmt, format_bench_table(report))


main.add_command(detect_cmd, name="detect")

if __name__ == "__main__":
    main()
