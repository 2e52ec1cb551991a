"""Training loop for the multi-encoder model.

Policy: full-batch Adam on the training-node cross-entropy; during
training every slot graph is reduced to edges whose endpoints are both
training nodes, while evaluation always runs on the full slot graphs.
The returned record carries the whole epoch history plus the parameters
from the epoch with the best validation accuracy (first epoch wins ties).
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMask
from .graph import TEST, TRAIN, VAL, canonical_edges
from .nn import accuracy, softmax_cross_entropy


@dataclass
class AdamState:
    """Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params, grads):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[name] -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float
    test_acc: float


@dataclass
class TrainRecord:
    """Outcome of one training run."""

    epochs: list
    best_epoch: int
    best_val_acc: float
    test_acc: float  # test accuracy at the checkpointed epoch
    params: dict

    @property
    def final_test_acc(self):
        return self.epochs[-1].test_acc


def masked_training_graph(graph, train_idx):
    """Copy of ``graph`` keeping only edges internal to the training set."""
    is_train = np.zeros(graph.n_nodes, dtype=bool)
    is_train[train_idx] = True
    keep = is_train[graph.edges[:, 0]] & is_train[graph.edges[:, 1]]
    return dataclasses.replace(graph, edges=canonical_edges(graph.edges[keep]))


def train(
    model,
    graphs,
    features,
    labels,
    masks,
    rng,
    epochs=1000,
    lr=1e-4,
    params=None,
):
    """Train ``model`` over slot ``graphs`` and return a TrainRecord.

    ``masks`` is the per-node split array from Graph.masks; all three
    splits must be non-empty.  ``rng`` drives weight init when ``params``
    is not supplied.
    """
    train_idx = np.flatnonzero(masks == TRAIN)
    val_idx = np.flatnonzero(masks == VAL)
    test_idx = np.flatnonzero(masks == TEST)
    for name, idx in (("train", train_idx), ("val", val_idx), ("test", test_idx)):
        if idx.shape[0] == 0:
            raise EmptyMask(f"{name} split is empty")

    if params is None:
        params = model.init_params(rng)
    masked = [masked_training_graph(g, train_idx) for g in graphs]
    train_ctxs = model.prepare(masked, features)
    eval_ctxs = model.prepare(list(graphs), features)

    adam = AdamState(lr=lr)
    history = []
    best_val = -1.0
    best_epoch = -1
    best_params = None
    best_test = 0.0

    for epoch in range(epochs):
        logits, cache = model.forward(train_ctxs, params)
        loss, d_logits = softmax_cross_entropy(logits, labels, train_idx)
        grads = model.backward(train_ctxs, params, cache, d_logits)
        adam.step(params, grads)

        eval_logits, _ = model.forward(eval_ctxs, params)
        metrics = EpochMetrics(
            epoch=epoch,
            loss=loss,
            train_acc=accuracy(eval_logits, labels, train_idx),
            val_acc=accuracy(eval_logits, labels, val_idx),
            test_acc=accuracy(eval_logits, labels, test_idx),
        )
        history.append(metrics)
        if metrics.val_acc > best_val:
            best_val = metrics.val_acc
            best_epoch = epoch
            best_test = metrics.test_acc
            best_params = {k: v.copy() for k, v in params.items()}

    return TrainRecord(
        epochs=history,
        best_epoch=best_epoch,
        best_val_acc=best_val,
        test_acc=best_test,
        params=best_params,
    )


def write_epochs_csv(path, records):
    """Epoch curves for one or more named runs: (name, TrainRecord) pairs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "epoch", "loss", "train_acc", "val_acc", "test_acc"])
        for name, rec in records:
            for m in rec.epochs:
                writer.writerow(
                    [
                        name,
                        m.epoch,
                        f"{m.loss:.10g}",
                        f"{m.train_acc:.10g}",
                        f"{m.val_acc:.10g}",
                        f"{m.test_acc:.10g}",
                    ]
                )


def write_history_jsonl(path, records):
    with open(path, "w") as fh:
        for name, rec in records:
            row = {
                "run": name,
                "best_epoch": rec.best_epoch,
                "best_val_acc": rec.best_val_acc,
                "test_acc": rec.test_acc,
                "final_test_acc": rec.final_test_acc,
            }
            fh.write(json.dumps(row) + "\n")


def gradient_check(model, ctxs, params, labels, idx, n_checks=5, step=1e-5, rng=None):
    """Max relative error between analytic and central-difference gradients.

    Probes ``n_checks`` entries of every tensor (all entries when the
    tensor is smaller).  Entries are chosen with ``rng`` when given,
    otherwise the first ``n_checks`` flat positions.
    """
    logits, cache = model.forward(ctxs, params)
    _, d_logits = softmax_cross_entropy(logits, labels, idx)
    grads = model.backward(ctxs, params, cache, d_logits)

    worst = 0.0
    for name in sorted(params):
        flat = params[name].reshape(-1)
        size = flat.shape[0]
        if size <= n_checks:
            positions = np.arange(size)
        elif rng is not None:
            positions = rng.choice(size, size=n_checks, replace=False)
        else:
            positions = np.arange(n_checks)
        for pos in positions:
            orig = flat[pos]
            flat[pos] = orig + step
            lo_p, _ = softmax_cross_entropy(
                model.forward(ctxs, params)[0], labels, idx
            )
            flat[pos] = orig - step
            lo_m, _ = softmax_cross_entropy(
                model.forward(ctxs, params)[0], labels, idx
            )
            flat[pos] = orig
            numeric = (lo_p - lo_m) / (2.0 * step)
            analytic = grads[name].reshape(-1)[pos]
            denom = max(abs(numeric), abs(analytic), 1e-8)
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst
