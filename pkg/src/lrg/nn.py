"""Dense neural-network stack: two-layer GCN and GAT encoders with manual
backpropagation, and the multi-encoder concatenation model.

Encoders are stateless descriptions; parameters live in flat dicts of
float64 arrays keyed like ``enc0.W1`` so the optimizer and the gradient
checker can treat every tensor uniformly.  All forward passes are
deterministic functions of (structure, features, params).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DimMismatch, SlotCountMismatch

LEAKY_SLOPE = 0.2

# Features and propagated features switch to CSR below this density;
# layer-1 products dominate the epoch cost on bag-of-words datasets.
SPARSE_DENSITY_CUTOFF = 0.25


def glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _relu(x):
    return np.maximum(x, 0.0)


def _elu(x):
    return np.where(x > 0.0, x, np.expm1(x))


def _elu_grad(x):
    return np.where(x > 0.0, 1.0, np.exp(x))


def _leaky(x):
    return np.where(x > 0.0, x, LEAKY_SLOPE * x)


def _leaky_grad(x):
    return np.where(x > 0.0, 1.0, LEAKY_SLOPE)


def _maybe_sparse(x):
    if x.size and np.count_nonzero(x) / x.size < SPARSE_DENSITY_CUTOFF:
        return sp.csr_matrix(x)
    return x


def _densify(x):
    return np.asarray(x.todense()) if sp.issparse(x) else x


def normalized_adjacency(graph):
    """Symmetric-normalized adjacency with self-loops, as CSR.

    A_hat = D^{-1/2} (A + I) D^{-1/2} with D the degree of A + I.
    """
    n = graph.n_nodes
    e = graph.edges
    rows = np.concatenate([e[:, 0], e[:, 1], np.arange(n, dtype=np.int64)])
    cols = np.concatenate([e[:, 1], e[:, 0], np.arange(n, dtype=np.int64)])
    vals = np.ones(rows.shape[0])
    a = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    return sp.csr_matrix(a.multiply(np.outer(inv_sqrt, inv_sqrt)))


def attention_structure(graph):
    """CSR layout of each node's in-neighborhood plus self, columns sorted."""
    n = graph.n_nodes
    e = graph.edges
    rows = np.concatenate([e[:, 0], e[:, 1], np.arange(n, dtype=np.int64)])
    cols = np.concatenate([e[:, 1], e[:, 0], np.arange(n, dtype=np.int64)])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    counts = np.bincount(rows, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, cols.astype(np.int64), rows.astype(np.int64)


@dataclass(frozen=True)
class EncoderConfig:
    """Two-layer encoder description; dims fixed, layer count fixed at 2."""

    kind: str  # "gcn" or "gat"
    in_dim: int
    hidden_dim: int
    out_dim: int
    gat_heads: int = 1

    def __post_init__(self):
        if self.kind not in ("gcn", "gat"):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if min(self.in_dim, self.hidden_dim, self.out_dim) < 1:
            raise ValueError("encoder dims must be >= 1")
        if self.gat_heads < 1:
            raise ValueError("gat_heads must be >= 1")


def make_encoder(config):
    if config.kind == "gcn":
        return GCNEncoder(config)
    return GATEncoder(config)


class GCNEncoder:
    """Two ReLU-separated graph convolutions: A_hat (H W) + b per layer."""

    def __init__(self, config):
        self.config = config
        self.out_dim = config.out_dim

    def init_params(self, rng):
        c = self.config
        return {
            "W1": glorot(rng, (c.in_dim, c.hidden_dim), c.in_dim, c.hidden_dim),
            "b1": np.zeros(c.hidden_dim),
            "W2": glorot(rng, (c.hidden_dim, c.out_dim), c.hidden_dim, c.out_dim),
            "b2": np.zeros(c.out_dim),
        }

    def prepare(self, graph, features):
        if features.shape[1] != self.config.in_dim:
            raise DimMismatch(
                f"features have {features.shape[1]} columns, encoder expects "
                f"{self.config.in_dim}"
            )
        a_hat = normalized_adjacency(graph)
        ax = a_hat @ sp.csr_matrix(features)
        ax = _maybe_sparse(_densify(ax))
        return {"A": a_hat, "AX": ax}

    def forward(self, ctx, params):
        z1 = _densify(ctx["AX"] @ params["W1"]) + params["b1"]
        h1 = _relu(z1)
        out = ctx["A"] @ (h1 @ params["W2"]) + params["b2"]
        return out, {"z1": z1, "h1": h1}

    def backward(self, ctx, params, cache, d_out):
        # A_hat is symmetric, so A^T d = A d
        g2 = ctx["A"] @ d_out
        grads = {
            "b2": d_out.sum(axis=0),
            "W2": cache["h1"].T @ g2,
        }
        dh1 = g2 @ params["W2"].T
        dz1 = dh1 * (cache["z1"] > 0.0)
        grads["W1"] = _densify(ctx["AX"].T @ dz1)
        grads["b1"] = dz1.sum(axis=0)
        return grads


class GATEncoder:
    """Two additive-attention layers; softmax over neighborhood plus self.

    Heads are concatenated after layer 1 (ELU on features) and averaged
    after layer 2.  Attention logits pass through LeakyReLU(0.2).
    """

    def __init__(self, config):
        self.config = config
        self.out_dim = config.out_dim

    def init_params(self, rng):
        c = self.config
        h = c.gat_heads
        params = {
            "W1": glorot(rng, (h, c.in_dim, c.hidden_dim), c.in_dim, c.hidden_dim),
            "as1": glorot(rng, (h, c.hidden_dim), c.hidden_dim, 1),
            "ad1": glorot(rng, (h, c.hidden_dim), c.hidden_dim, 1),
            "b1": np.zeros((h, c.hidden_dim)),
            "W2": glorot(
                rng, (h, h * c.hidden_dim, c.out_dim), h * c.hidden_dim, c.out_dim
            ),
            "as2": glorot(rng, (h, c.out_dim), c.out_dim, 1),
            "ad2": glorot(rng, (h, c.out_dim), c.out_dim, 1),
            "b2": np.zeros(c.out_dim),
        }
        return params

    def prepare(self, graph, features):
        if features.shape[1] != self.config.in_dim:
            raise DimMismatch(
                f"features have {features.shape[1]} columns, encoder expects "
                f"{self.config.in_dim}"
            )
        indptr, indices, rows = attention_structure(graph)
        return {
            "X": _maybe_sparse(features),
            "indptr": indptr,
            "indices": indices,
            "rows": rows,
            "n": graph.n_nodes,
        }

    def _alpha_matrix(self, ctx, alpha):
        return sp.csr_matrix(
            (alpha, ctx["indices"], ctx["indptr"]), shape=(ctx["n"], ctx["n"])
        )

    def _attend(self, ctx, x, w, a_src, a_dst):
        z = _densify(x @ w)
        s_src = z @ a_src
        s_dst = z @ a_dst
        raw = s_dst[ctx["rows"]] + s_src[ctx["indices"]]
        alpha = _kernels.row_softmax(ctx["indptr"], _leaky(raw))
        agg = self._alpha_matrix(ctx, alpha) @ z
        return agg, {"z": z, "raw": raw, "alpha": alpha}

    def _attend_backward(self, ctx, x, w, a_src, a_dst, head_cache, d_agg):
        z, raw, alpha = head_cache["z"], head_cache["raw"], head_cache["alpha"]
        mat = self._alpha_matrix(ctx, alpha)
        dz = mat.T @ d_agg
        d_alpha = np.einsum("ij,ij->i", d_agg[ctx["rows"]], z[ctx["indices"]])
        d_act = _kernels.row_softmax_grad(ctx["indptr"], alpha, d_alpha)
        d_raw = d_act * _leaky_grad(raw)
        ds_dst = np.bincount(ctx["rows"], weights=d_raw, minlength=ctx["n"])
        ds_src = np.bincount(ctx["indices"], weights=d_raw, minlength=ctx["n"])
        dz += np.outer(ds_dst, a_dst) + np.outer(ds_src, a_src)
        return {
            "W": _densify(x.T @ dz),
            "a_src": z.T @ ds_src,
            "a_dst": z.T @ ds_dst,
        }, dz

    def forward(self, ctx, params):
        heads = self.config.gat_heads
        cache = {"layer1": [], "layer2": []}
        pre1 = []
        for h in range(heads):
            agg, hc = self._attend(
                ctx, ctx["X"], params["W1"][h], params["as1"][h], params["ad1"][h]
            )
            pre = agg + params["b1"][h]
            hc["pre"] = pre
            cache["layer1"].append(hc)
            pre1.append(_elu(pre))
        h1 = np.concatenate(pre1, axis=1)
        cache["h1"] = h1

        out = np.zeros((ctx["n"], self.config.out_dim))
        for h in range(heads):
            agg, hc = self._attend(
                ctx, h1, params["W2"][h], params["as2"][h], params["ad2"][h]
            )
            cache["layer2"].append(hc)
            out += agg
        out /= heads
        return out + params["b2"], cache

    def backward(self, ctx, params, cache, d_out):
        heads = self.config.gat_heads
        c = self.config
        grads = {
            "W1": np.zeros_like(params["W1"]),
            "as1": np.zeros_like(params["as1"]),
            "ad1": np.zeros_like(params["ad1"]),
            "b1": np.zeros_like(params["b1"]),
            "W2": np.zeros_like(params["W2"]),
            "as2": np.zeros_like(params["as2"]),
            "ad2": np.zeros_like(params["ad2"]),
            "b2": d_out.sum(axis=0),
        }
        h1 = cache["h1"]
        d_h1 = np.zeros_like(h1)
        d_avg = d_out / heads
        for h in range(heads):
            hg, dz = self._attend_backward(
                ctx, h1, params["W2"][h], params["as2"][h], params["ad2"][h],
                cache["layer2"][h], d_avg,
            )
            grads["W2"][h] = hg["W"]
            grads["as2"][h] = hg["a_src"]
            grads["ad2"][h] = hg["a_dst"]
            d_h1 += dz @ params["W2"][h].T

        for h in range(heads):
            sl = slice(h * c.hidden_dim, (h + 1) * c.hidden_dim)
            d_pre = d_h1[:, sl] * _elu_grad(cache["layer1"][h]["pre"])
            grads["b1"][h] = d_pre.sum(axis=0)
            hg, _ = self._attend_backward(
                ctx, ctx["X"], params["W1"][h], params["as1"][h], params["ad1"][h],
                cache["layer1"][h], d_pre,
            )
            grads["W1"][h] = hg["W"]
            grads["as1"][h] = hg["a_src"]
            grads["ad1"][h] = hg["a_dst"]
        return grads


class MultiScaleModel:
    """Parallel encoders over per-slot graphs, concatenated into a linear head."""

    def __init__(self, encoder_configs, n_classes):
        if not encoder_configs:
            raise SlotCountMismatch("need at least one encoder")
        self.encoders = [make_encoder(c) for c in encoder_configs]
        self.n_classes = n_classes
        self.concat_dim = sum(e.out_dim for e in self.encoders)

    def init_params(self, rng):
        params = {}
        for k, enc in enumerate(self.encoders):
            for name, val in enc.init_params(rng).items():
                params[f"enc{k}.{name}"] = val
        params["clf.W"] = glorot(
            rng, (self.concat_dim, self.n_classes), self.concat_dim, self.n_classes
        )
        params["clf.b"] = np.zeros(self.n_classes)
        return params

    def prepare(self, graphs, features):
        if len(graphs) != len(self.encoders):
            raise SlotCountMismatch(
                f"{len(graphs)} graphs for {len(self.encoders)} encoder slots"
            )
        n = graphs[0].n_nodes
        for g in graphs:
            if g.n_nodes != n:
                raise DimMismatch("all slot graphs must share the node count")
        return [enc.prepare(g, features) for enc, g in zip(self.encoders, graphs)]

    def _slot_params(self, params, k):
        prefix = f"enc{k}."
        return {
            name[len(prefix):]: val
            for name, val in params.items()
            if name.startswith(prefix)
        }

    def forward(self, ctxs, params):
        outs, caches = [], []
        for k, (enc, ctx) in enumerate(zip(self.encoders, ctxs)):
            out, cache = enc.forward(ctx, self._slot_params(params, k))
            outs.append(out)
            caches.append(cache)
        concat = np.concatenate(outs, axis=1)
        logits = concat @ params["clf.W"] + params["clf.b"]
        return logits, {"concat": concat, "encoders": caches}

    def backward(self, ctxs, params, cache, d_logits):
        grads = {
            "clf.W": cache["concat"].T @ d_logits,
            "clf.b": d_logits.sum(axis=0),
        }
        d_concat = d_logits @ params["clf.W"].T
        offset = 0
        for k, (enc, ctx) in enumerate(zip(self.encoders, ctxs)):
            d_out = d_concat[:, offset:offset + enc.out_dim]
            offset += enc.out_dim
            enc_grads = enc.backward(
                ctx, self._slot_params(params, k), cache["encoders"][k], d_out
            )
            for name, val in enc_grads.items():
                grads[f"enc{k}.{name}"] = val
        return grads


def softmax_cross_entropy(logits, labels, idx):
    """Mean CE over the rows in ``idx``; returns (loss, d_logits full-shape)."""
    sel = logits[idx]
    shifted = sel - sel.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    picked = probs[np.arange(idx.shape[0]), labels[idx]]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    d_sel = probs.copy()
    d_sel[np.arange(idx.shape[0]), labels[idx]] -= 1.0
    d_logits = np.zeros_like(logits)
    d_logits[idx] = d_sel / idx.shape[0]
    return loss, d_logits


def accuracy(logits, labels, idx):
    if idx.shape[0] == 0:
        return 0.0
    return float(np.mean(np.argmax(logits[idx], axis=1) == labels[idx]))
