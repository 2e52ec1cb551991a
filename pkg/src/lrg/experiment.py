"""Experiment harness: variant runs, score tables, comparisons, and the
random-scale control study.

Variants combine encoder multiplicity with the graph each slot sees:

  SB  single encoder, base graph
  SR  single encoder, renormalized graph at one scale
  MB  n_encoders encoders, every slot the base graph
  MR  slot 0 the base graph, slots 1.. renormalized at successive scales

One stratified split is drawn per experiment and shared by every seed;
seeds only vary weight initialization.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, MisalignedTables, NoPeak
from .graph import TEST, largest_connected_component, load_graph
from .nn import EncoderConfig, MultiScaleModel
from .renorm import renormalize_at
from .rng import stream_rng
from .spectral import DEFAULT_TAU_MIN, scan_graph
from .stats import wilcoxon_signed_rank
from .training import train

log = logging.getLogger(__name__)

VARIANTS = ("SB", "SR", "MB", "MR")
ENCODER_KINDS = ("gcn", "gat")
ALPHA = 0.05
CONTROL_RANGES = ((0.0, 1.0), (0.0, 10.0), (0.0, 100.0))
DEFAULT_SEEDS = tuple(range(10))
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    encoder_kind: str = "gcn"
    variant: str = "SB"
    n_encoders: int = 0  # 0 resolves from the variant: S -> 1, M -> 2
    taus: tuple = ()
    seeds: tuple = DEFAULT_SEEDS
    split: str = "stratified"  # "stratified" or "provided"
    split_seed: int = 0
    hidden_dim: int = 64
    gat_heads: int = 1
    epochs: int = 1000
    lr: float = 1e-4

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.encoder_kind not in ENCODER_KINDS:
            raise ValueError(f"encoder_kind must be one of {ENCODER_KINDS}")
        if self.split not in ("stratified", "provided"):
            raise ValueError("split must be 'stratified' or 'provided'")
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        n_enc = self.n_encoders
        if n_enc == 0:
            n_enc = 1 if self.variant.startswith("S") else 2
            object.__setattr__(self, "n_encoders", n_enc)
        if self.variant.startswith("S") and n_enc != 1:
            raise ValueError("S* variants use exactly one encoder")
        if self.variant.startswith("M") and n_enc < 2:
            raise ValueError("M* variants need at least two encoders")

    @property
    def n_taus_needed(self):
        if self.variant == "SR":
            return 1
        if self.variant == "MR":
            return self.n_encoders - 1
        return 0


@dataclass
class ScoreTable:
    """Binary per-node correctness, one column per seed, rows test nodes."""

    variant: str
    scores: np.ndarray  # [n_test_nodes, n_seeds] of {0,1}
    node_ids: np.ndarray
    seeds: tuple

    def validate(self):
        if self.scores.shape != (self.node_ids.shape[0], len(self.seeds)):
            raise MisalignedTables("score matrix shape does not match ids/seeds")
        if not np.isin(self.scores, (0, 1)).all():
            raise MisalignedTables("scores must be binary")
        return self

    @property
    def flat(self):
        """Row-major (node, seed) flattening; the Wilcoxon pairing unit."""
        return self.scores.ravel()

    @property
    def mean_score(self):
        return float(self.scores.mean())


def assert_aligned(a, b):
    if a.seeds != b.seeds:
        raise MisalignedTables(f"seed lists differ: {a.seeds} vs {b.seeds}")
    if a.node_ids.shape != b.node_ids.shape or not np.array_equal(
        a.node_ids, b.node_ids
    ):
        raise MisalignedTables("node orderings differ between tables")


def save_scores_csv(path, table):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id"] + [f"seed_{s}" for s in table.seeds])
        for i, nid in enumerate(table.node_ids):
            writer.writerow([int(nid)] + [int(v) for v in table.scores[i]])


def load_scores_csv(path, variant=""):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        seeds = tuple(int(col[len("seed_"):]) for col in header[1:])
        node_ids, rows = [], []
        for row in reader:
            node_ids.append(int(row[0]))
            rows.append([int(v) for v in row[1:]])
    return ScoreTable(
        variant=variant,
        scores=np.array(rows, dtype=np.int8).reshape(len(rows), len(seeds)),
        node_ids=np.array(node_ids, dtype=np.int64),
        seeds=seeds,
    ).validate()


def stratified_split(labels, rng, fractions=SPLIT_FRACTIONS):
    """Per-class largest-remainder split into train/val/test masks.

    Within every class the assigned counts are within one node of the
    exact fractional targets.
    """
    labels = np.asarray(labels)
    masks = np.empty(labels.shape[0], dtype=np.int8)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n = idx.shape[0]
        targets = np.array(fractions) * n
        counts = np.floor(targets).astype(np.int64)
        remainder = targets - counts
        for slot in np.argsort(-remainder, kind="stable")[: n - counts.sum()]:
            counts[slot] += 1
        bounds = np.cumsum(counts)
        masks[idx[: bounds[0]]] = 0
        masks[idx[bounds[0]:bounds[1]]] = 1
        masks[idx[bounds[1]:]] = 2
    return masks


def prepare_dataset(path):
    """Load a dataset directory and reduce it to its largest component."""
    return largest_connected_component(load_graph(path).validate())


def resolve_split(cfg, graph):
    if cfg.split == "provided":
        if graph.masks is None:
            raise EmptyMask("config requests provided masks but dataset has none")
        return graph.masks
    return stratified_split(graph.labels, stream_rng(cfg.split_seed, "split"))


def resolve_taus(cfg, graph):
    """Scales for the renormalized slots; auto-detected when none are given."""
    needed = cfg.n_taus_needed
    if needed == 0:
        return ()
    if cfg.taus:
        if len(cfg.taus) < needed:
            raise ValueError(
                f"variant {cfg.variant} needs {needed} scale(s), got {len(cfg.taus)}"
            )
        return cfg.taus[:needed]
    scales = scan_graph(graph).characteristic_scales
    if len(scales) < needed:
        raise NoPeak(
            f"auto scale selection found {len(scales)} peak(s), "
            f"variant {cfg.variant} needs {needed}"
        )
    return tuple(float(tau) for tau, _ in scales[:needed])


def build_slot_graphs(graph, variant, taus, n_encoders):
    """Graphs seen by each encoder slot for the given variant."""
    if variant == "SB":
        return [graph]
    if variant == "MB":
        return [graph] * n_encoders
    if variant == "SR":
        return [renormalize_at(graph, taus[0])]
    return [graph] + [renormalize_at(graph, tau) for tau in taus[: n_encoders - 1]]


@dataclass
class VariantRun:
    config: ExperimentConfig
    score_table: ScoreTable
    records: list  # TrainRecord per seed
    taus: tuple
    masks: np.ndarray


def run_variant(cfg, graph=None):
    """Train the configured variant across seeds and collect test scores."""
    if graph is None:
        graph = prepare_dataset(cfg.dataset)
    masks = resolve_split(cfg, graph)
    taus = resolve_taus(cfg, graph)
    slot_graphs = build_slot_graphs(graph, cfg.variant, taus, cfg.n_encoders)

    labels = graph.labels
    n_classes = int(labels.max()) + 1
    features = graph.features
    enc_cfg = EncoderConfig(
        kind=cfg.encoder_kind,
        in_dim=features.shape[1],
        hidden_dim=cfg.hidden_dim,
        out_dim=cfg.hidden_dim,
        gat_heads=cfg.gat_heads,
    )
    test_idx = np.flatnonzero(masks == TEST)

    records = []
    columns = []
    for seed in cfg.seeds:
        model = MultiScaleModel([enc_cfg] * cfg.n_encoders, n_classes)
        record = train(
            model,
            slot_graphs,
            features,
            labels,
            masks,
            stream_rng(seed, "init"),
            epochs=cfg.epochs,
            lr=cfg.lr,
        )
        records.append(record)
        eval_ctxs = model.prepare(slot_graphs, features)
        logits, _ = model.forward(eval_ctxs, record.params)
        correct = (np.argmax(logits[test_idx], axis=1) == labels[test_idx])
        columns.append(correct.astype(np.int8))
        log.info(
            "variant %s seed %d: test acc %.4f (checkpoint epoch %d)",
            cfg.variant, seed, record.test_acc, record.best_epoch,
        )

    table = ScoreTable(
        variant=cfg.variant,
        scores=np.stack(columns, axis=1),
        node_ids=graph.node_ids[test_idx],
        seeds=cfg.seeds,
    ).validate()
    return VariantRun(
        config=cfg, score_table=table, records=records, taus=taus, masks=masks
    )


@dataclass(frozen=True)
class Comparison:
    variant_a: str
    variant_b: str
    alternative: str
    p_value: float
    verdict: str  # '+', '-', or '='
    statistic: float
    n_effective: int


def compare(table_a, table_b, alternative="greater"):
    """Verdict at the 5% level: '+' when a beats b, '-' when b beats a."""
    assert_aligned(table_a, table_b)
    res = wilcoxon_signed_rank(table_a.flat, table_b.flat, alternative)
    greater = (
        res
        if alternative == "greater"
        else wilcoxon_signed_rank(table_a.flat, table_b.flat, "greater")
    )
    less = (
        res
        if alternative == "less"
        else wilcoxon_signed_rank(table_a.flat, table_b.flat, "less")
    )
    if greater.p_value < ALPHA:
        verdict = "+"
    elif less.p_value < ALPHA:
        verdict = "-"
    else:
        verdict = "="
    return Comparison(
        variant_a=table_a.variant,
        variant_b=table_b.variant,
        alternative=alternative,
        p_value=res.p_value,
        verdict=verdict,
        statistic=res.statistic,
        n_effective=res.n_effective,
    )


@dataclass
class ControlSample:
    range_low: float
    range_high: float
    tau: float
    p_value: float
    n_effective: int
    mean_score: float
    significant: bool


@dataclass
class ControlReport:
    tau_char: float
    char_mean_score: float
    alpha_corrected: float
    n_significant: int
    samples: list
    best_tau: float
    best_mean_score: float
    worst_tau: float
    worst_mean_score: float

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def random_scale_control(
    cfg,
    graph=None,
    ranges=CONTROL_RANGES,
    n_samples=10,
    control_seed=0,
    tau_floor=DEFAULT_TAU_MIN,
):
    """Pit MR models at random scales against the characteristic-scale MR.

    Scales are drawn uniformly per range, resampling anything at or
    below the scan grid floor.  The Bonferroni threshold divides 5% by
    the total number of comparisons.
    """
    base_cfg = dataclasses.replace(cfg, variant="MR", n_encoders=max(cfg.n_encoders, 2))
    if graph is None:
        graph = prepare_dataset(base_cfg.dataset)

    char_taus = resolve_taus(dataclasses.replace(base_cfg, taus=()), graph)
    char_run = run_variant(dataclasses.replace(base_cfg, taus=char_taus), graph)
    char_table = char_run.score_table

    rng = stream_rng(control_seed, "sampler")
    # The correction always reflects the full three-range study design so
    # partial runs report the same threshold as the complete control.
    alpha_corrected = ALPHA / (len(CONTROL_RANGES) * n_samples)
    samples = []
    for lo, hi in ranges:
        for _ in range(n_samples):
            tau = rng.uniform(lo, hi)
            while tau <= tau_floor:
                tau = rng.uniform(lo, hi)
            rand_taus = (tau,) + char_taus[1:]
            rand_run = run_variant(
                dataclasses.replace(base_cfg, taus=rand_taus), graph
            )
            res = wilcoxon_signed_rank(
                rand_run.score_table.flat, char_table.flat, "greater"
            )
            samples.append(
                ControlSample(
                    range_low=lo,
                    range_high=hi,
                    tau=float(tau),
                    p_value=res.p_value,
                    n_effective=res.n_effective,
                    mean_score=rand_run.score_table.mean_score,
                    significant=res.p_value < alpha_corrected,
                )
            )
    best = max(samples, key=lambda s: s.mean_score)
    worst = min(samples, key=lambda s: s.mean_score)
    return ControlReport(
        tau_char=float(char_taus[0]),
        char_mean_score=char_table.mean_score,
        alpha_corrected=alpha_corrected,
        n_significant=sum(s.significant for s in samples),
        samples=samples,
        best_tau=best.tau,
        best_mean_score=best.mean_score,
        worst_tau=worst.tau,
        worst_mean_score=worst.mean_score,
    )


def write_results_csv(path, rows):
    """rows: (variant, dataset, seed, test_accuracy, checkpoint_epoch)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["variant", "dataset", "seed", "test_accuracy", "checkpoint_epoch"]
        )
        for variant, dataset, seed, acc, epoch in rows:
            writer.writerow([variant, dataset, seed, f"{acc:.10g}", epoch])


def results_rows(run, dataset_name):
    return [
        (run.config.variant, dataset_name, seed, rec.test_acc, rec.best_epoch)
        for seed, rec in zip(run.config.seeds, run.records)
    ]


def write_comparisons_csv(path, comparisons):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["variant_a", "variant_b", "alternative", "p_value", "verdict"]
        )
        for c in comparisons:
            writer.writerow(
                [c.variant_a, c.variant_b, c.alternative, f"{c.p_value:.10g}", c.verdict]
            )
