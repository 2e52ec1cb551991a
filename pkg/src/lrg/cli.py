"""Command-line entry point.

Subcommands: generate-sbm, analyze, renormalize, train, compare,
random-control.  Dataset paths resolve against $LRG_DATA_DIR when they
do not exist as given.  Every run writes one manifest.json recording the
resolved configuration, input hashes, and output paths; data artifacts
are byte-reproducible for fixed arguments and seed.

Exit codes: 0 ok, 2 dataset/I/O failure, 3 analysis failure, 64 usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

EXIT_OK = 0
EXIT_DATA = 2
EXIT_ANALYSIS = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; this remaps them to 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _parse_seeds(text):
    if "," in text:
        return tuple(int(tok) for tok in text.split(",") if tok)
    return tuple(range(int(text)))


def _parse_floats(text):
    return tuple(float(tok) for tok in text.split(",") if tok)


def _parse_range(text):
    parts = _parse_floats(text)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return parts


def resolve_dataset(path_str):
    """Literal path when it exists, else relative to $LRG_DATA_DIR."""
    p = Path(path_str)
    if p.exists():
        return p
    root = os.environ.get("LRG_DATA_DIR")
    if root:
        candidate = Path(root) / path_str
        if candidate.exists():
            return candidate
    return p


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_hashes(paths):
    hashes = {}
    for p in paths:
        p = Path(p)
        files = sorted(q for q in p.iterdir() if q.is_file()) if p.is_dir() else [p]
        for q in files:
            hashes[str(q)] = _sha256(q)
    return hashes


def write_manifest(out_dir, command, config, inputs, outputs, started, t0):
    from . import __version__

    manifest = {
        "command": command,
        "config": config,
        "inputs": _input_hashes(inputs),
        "outputs": [str(p) for p in outputs],
        "started_at": started,
        "wall_clock_seconds": round(time.monotonic() - t0, 3),
        "tool_version": __version__,
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_config_file(args, parser):
    """TOML config supplies defaults; explicit flags win."""
    if not getattr(args, "config", None):
        return
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config file {args.config}: {exc}") from exc
    for key, value in data.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ValueError(f"config file sets unknown option {key!r}")
        if getattr(args, dest) == parser.get_default(dest):
            if dest == "seeds" and not isinstance(value, str):
                value = _parse_seeds(str(value))
            elif dest == "taus" and isinstance(value, list):
                value = tuple(float(v) for v in value)
            setattr(args, dest, value)


def _add_common(parser):
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--config", default=None, help="TOML config file; flags override")
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="cap for BLAS thread pools (applied before numpy loads)",
    )


def _add_train_like(parser):
    parser.add_argument("--dataset", required=True, help="dataset dir (or name under $LRG_DATA_DIR)")
    parser.add_argument("--encoder", choices=("gcn", "gat"), default="gcn")
    parser.add_argument("--encoders", type=int, default=0, help="encoder slots (0 = from variant)")
    parser.add_argument("--taus", type=_parse_floats, default=(), help="comma-separated scales")
    parser.add_argument("--seeds", type=_parse_seeds, default=tuple(range(10)),
                        help="count (e.g. 10) or comma list (e.g. 0,3,7)")
    parser.add_argument("--split", choices=("stratified", "provided"), default="stratified")
    parser.add_argument("--split-seed", type=int, default=0)
    parser.add_argument("--hidden", type=int, default=64)
    parser.add_argument("--heads", type=int, default=1, help="GAT attention heads")
    parser.add_argument("--epochs", type=int, default=1000)
    parser.add_argument("--lr", type=float, default=1e-4)


def build_parser():
    parser = _Parser(prog="lrg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True, metavar="COMMAND")

    p = sub.add_parser("generate-sbm", help="write a synthetic SBM dataset")
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--p-in", type=float, default=0.5)
    p.add_argument("--p-out", type=float, default=0.02)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--feature-shift", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(handler=cmd_generate_sbm, out_default="sbm", _parser=p)

    p = sub.add_parser("analyze", help="entropy scan and characteristic scales")
    p.add_argument("--graph", required=True, help="dataset dir (or name under $LRG_DATA_DIR)")
    p.add_argument("--tau-min", type=float, default=None)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    _add_common(p)
    p.set_defaults(handler=cmd_analyze, out_default="analysis", _parser=p)

    p = sub.add_parser("renormalize", help="rewire a dataset at one scale")
    p.add_argument("--graph", required=True, help="dataset dir (or name under $LRG_DATA_DIR)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tau", type=float, default=None, help="diffusion time > 0")
    group.add_argument("--auto", action="store_true", help="use the detected top scale")
    _add_common(p)
    p.set_defaults(handler=cmd_renormalize, out_default="renormalized", _parser=p)

    p = sub.add_parser("train", help="train one variant across seeds")
    _add_train_like(p)
    p.add_argument("--variant", choices=("SB", "SR", "MB", "MR"), default="SB")
    _add_common(p)
    p.set_defaults(handler=cmd_train, out_default="run", _parser=p)

    p = sub.add_parser("compare", help="Wilcoxon comparison of two score tables")
    p.add_argument("--a", required=True, help="run dir or scores.csv")
    p.add_argument("--b", required=True, help="run dir or scores.csv")
    p.add_argument("--alt", choices=("greater", "less"), default="greater")
    _add_common(p)
    p.set_defaults(handler=cmd_compare, out_default="comparison", _parser=p)

    p = sub.add_parser("random-control", help="random-scale control study")
    _add_train_like(p)
    p.add_argument("--range", dest="ranges", type=_parse_range, action="append",
                   default=None, help="lo,hi (repeatable; default all three study ranges)")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--control-seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(handler=cmd_random_control, out_default="control", _parser=p)
    return parser


def _load_lcc(path_str):
    from .experiment import prepare_dataset

    return prepare_dataset(resolve_dataset(path_str))


def cmd_generate_sbm(args):
    from .generate import generate_sbm
    from .graph import save_graph

    g = generate_sbm(
        n_nodes=args.nodes,
        n_blocks=args.blocks,
        p_in=args.p_in,
        p_out=args.p_out,
        n_features=args.features,
        seed=args.seed,
        feature_shift=args.feature_shift,
    )
    out = _out_dir(args)
    save_graph(g, out)
    print(f"wrote SBM dataset ({g.n_nodes} nodes, {g.n_edges} edges) to {out}")
    return [out / name for name in ("edges.tsv", "features.csv", "labels.csv")], []


def cmd_analyze(args):
    from . import spectral

    g = _load_lcc(args.graph)
    kwargs = {}
    if args.tau_min is not None:
        kwargs["tau_min"] = args.tau_min
    if args.tau_max is not None:
        kwargs["tau_max"] = args.tau_max
    if args.points is not None:
        kwargs["points"] = args.points
    scan = spectral.scan_graph(g, assume_connected=True, **kwargs)
    peaks = spectral.detect_peaks(scan)
    out = _out_dir(args)
    scan_path = out / "scan.csv"
    peaks_path = out / "peaks.csv"
    spectral.write_scan_csv(scan, scan_path)
    spectral.write_peaks_csv(scan, peaks_path)
    print(f"tau* = {peaks[0][0]:.6g}")
    print(f"wrote {scan_path} and {peaks_path}")
    return [scan_path, peaks_path], [resolve_dataset(args.graph)]


def cmd_renormalize(args):
    from . import spectral
    from .graph import save_graph
    from .renorm import renormalize_at

    g = _load_lcc(args.graph)
    if args.auto:
        tau = spectral.detect_peaks(spectral.scan_graph(g, assume_connected=True))[0][0]
    else:
        tau = args.tau
    rg = renormalize_at(g, tau)
    out = _out_dir(args)
    save_graph(rg, out)
    part_path = out / "partition.csv"
    with open(part_path, "w", encoding="utf-8") as fh:
        fh.write("node_id,macro_id\n")
        for nid, macro in zip(rg.node_ids, rg.partition.assignment):
            fh.write(f"{nid},{macro}\n")
    print(
        f"tau = {tau:.6g}: {rg.partition.n_macro} macro-nodes over {g.n_nodes} nodes, "
        f"{g.n_edges} -> {rg.n_edges} edges; wrote {out}"
    )
    args._manifest_extra = {"tau": tau, "n_macro": rg.partition.n_macro}
    outputs = [out / n for n in ("edges.tsv", "features.csv", "labels.csv")]
    return outputs + [part_path], [resolve_dataset(args.graph)]


def _experiment_config(args, variant):
    from .experiment import ExperimentConfig

    return ExperimentConfig(
        dataset=str(resolve_dataset(args.dataset)),
        encoder_kind=args.encoder,
        variant=variant,
        n_encoders=args.encoders,
        taus=args.taus,
        seeds=args.seeds,
        split=args.split,
        split_seed=args.split_seed,
        hidden_dim=args.hidden,
        gat_heads=args.heads,
        epochs=args.epochs,
        lr=args.lr,
    )


def cmd_train(args):
    from . import experiment
    from .training import write_epochs_csv, write_history_jsonl

    cfg = _experiment_config(args, args.variant)
    run = experiment.run_variant(cfg)
    out = _out_dir(args)
    dataset_name = Path(cfg.dataset).name
    paths = {
        "results": out / "results.csv",
        "scores": out / "scores.csv",
        "epochs": out / "epochs.csv",
        "history": out / "history.jsonl",
    }
    experiment.write_results_csv(
        paths["results"], experiment.results_rows(run, dataset_name)
    )
    experiment.save_scores_csv(paths["scores"], run.score_table)
    named = [(f"seed{s}", rec) for s, rec in zip(cfg.seeds, run.records)]
    write_epochs_csv(paths["epochs"], named)
    write_history_jsonl(paths["history"], named)
    accs = [rec.test_acc for rec in run.records]
    mean_acc = sum(accs) / len(accs)
    print(f"{cfg.variant} ({cfg.encoder_kind}): mean test accuracy {mean_acc:.4f} "
          f"over {len(cfg.seeds)} seeds" + (f", taus {list(run.taus)}" if run.taus else ""))
    for p in paths.values():
        print(f"wrote {p}")
    args._manifest_extra = {"taus_used": list(run.taus), "mean_test_accuracy": mean_acc}
    return list(paths.values()), [Path(cfg.dataset)]


def _load_table(path_str):
    from .errors import MissingFile
    from .experiment import load_scores_csv

    p = resolve_dataset(path_str)
    target = p / "scores.csv" if p.is_dir() else p
    variant = p.name if p.is_dir() else p.stem
    if not target.is_file():
        raise MissingFile(target)
    return load_scores_csv(target, variant=variant), target


def cmd_compare(args):
    from .experiment import compare, write_comparisons_csv

    table_a, path_a = _load_table(args.a)
    table_b, path_b = _load_table(args.b)
    result = compare(table_a, table_b, alternative=args.alt)
    out = _out_dir(args)
    comp_path = out / "comparisons.csv"
    write_comparisons_csv(comp_path, [result])
    print(f"{result.variant_a} vs {result.variant_b}: {result.verdict} "
          f"(p = {result.p_value:.6g}, alternative = {result.alternative}, "
          f"n_effective = {result.n_effective})")
    print(f"wrote {comp_path}")
    return [comp_path], [path_a, path_b]


def cmd_random_control(args):
    from . import experiment

    cfg = _experiment_config(args, "MR")
    ranges = tuple(args.ranges) if args.ranges else experiment.CONTROL_RANGES
    report = experiment.random_scale_control(
        cfg,
        ranges=ranges,
        n_samples=args.samples,
        control_seed=args.control_seed,
    )
    out = _out_dir(args)
    report_path = out / "control_report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    print(f"tau* = {report.tau_char:.6g}, mean score {report.char_mean_score:.4f}")
    print(f"{report.n_significant} of {len(report.samples)} random scales significant "
          f"at Bonferroni alpha {report.alpha_corrected:.6g}")
    print(f"best random tau {report.best_tau:.6g} (mean score {report.best_mean_score:.4f})")
    print(f"wrote {report_path}")
    return [report_path], [Path(cfg.dataset)]


def _set_thread_cap(argv):
    """Apply --threads to BLAS pools before numpy is imported."""
    cap = None
    for i, tok in enumerate(argv):
        if tok == "--threads" and i + 1 < len(argv):
            cap = argv[i + 1]
        elif tok.startswith("--threads="):
            cap = tok.split("=", 1)[1]
    if cap is not None and cap.isdigit():
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    _set_thread_cap(argv)
    parser = build_parser()
    args = parser.parse_args(argv)

    from .errors import AnalysisError, DatasetError, LrgError

    try:
        _apply_config_file(args, args._parser)
        if args.out is None:
            args.out = args.out_default
        started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        t0 = time.monotonic()
        outputs, inputs = args.handler(args)
        config = {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in vars(args).items()
            if not k.startswith("_") and k not in ("handler", "out_default", "cmd")
            and not callable(v)
        }
        config.update(getattr(args, "_manifest_extra", {}))
        manifest = write_manifest(
            args.out, args.cmd, config, inputs, outputs, started, t0
        )
        print(f"wrote {manifest}")
        return EXIT_OK
    except DatasetError as exc:
        print(f"lrg: dataset error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AnalysisError as exc:
        print(f"lrg: analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (LrgError, ValueError) as exc:
        print(f"lrg: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
