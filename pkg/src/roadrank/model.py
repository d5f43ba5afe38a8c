"""End-to-end pairwise scoring pipeline shared by training, evaluation,
and the CLI, including the three ablation variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import encoder
from .encoder import EmbedParams, minmax_scale_columns, vertex_features, zero_grads
from .graph import RoadNetwork, ValidationError
from .ranker import EPS, RankerParams, _branch_forward, pair_backward, pair_forward
from .walks import SampleSet

ABLATIONS = ("full", "NoMG", "NoBiLSTM", "NoEmb")


@dataclass(frozen=True)
class PipelineVariant:
    """What an ablation mode changes: the forced sampling bias (NoMG walks
    are plain random walks), whether sequences are encoded at all, and
    whether the recurrent layer runs."""

    name: str
    sample_alpha: float | None
    use_embedding: bool
    use_bilstm: bool


def apply_ablation(mode: str) -> PipelineVariant:
    """Resolve an ablation mode name to its pipeline variant."""
    if mode == "full":
        return PipelineVariant("full", None, True, True)
    if mode == "NoMG":
        return PipelineVariant("NoMG", 1.0, True, True)
    if mode == "NoBiLSTM":
        return PipelineVariant("NoBiLSTM", None, True, False)
    if mode == "NoEmb":
        return PipelineVariant("NoEmb", None, False, False)
    raise ValidationError(f"unknown ablation mode {mode!r}; expected one of {ABLATIONS}")


def embedding_width(variant: PipelineVariant, m: int, x: int, dim: int) -> int:
    """Ranker branch input width for a variant."""
    if not variant.use_embedding:
        return m
    if not variant.use_bilstm:
        return 2 * x
    return 4 * dim


class PairScorer:
    """Forward and backward passes from sampled sequences (or raw
    attributes) through pooled embeddings to pairwise ratings.

    Parameters are referenced, not copied, so optimizer updates through
    ``tensors()`` are visible immediately.
    """

    def __init__(self, net: RoadNetwork, samples: SampleSet | None,
                 embed: EmbedParams | None, ranker: RankerParams,
                 variant: PipelineVariant):
        self.variant = variant
        self.embed = embed
        self.ranker = ranker
        self.n = net.n
        a_scaled = minmax_scale_columns(net.A)
        if variant.use_embedding:
            if embed is None:
                raise ValidationError(f"variant {variant.name} needs encoder parameters")
            if samples is None:
                raise ValidationError(f"variant {variant.name} needs sampled sequences")
            if embed.m != net.m:
                raise ValidationError(f"encoder expects m={embed.m}, network has m={net.m}")
            if samples.sequences.shape[0] != net.n:
                raise ValidationError("sample set does not cover the network's nodes")
            self.ids = samples.sequences
            self.feats = vertex_features(a_scaled)
            width = embedding_width(variant, net.m, embed.x, embed.dim)
        else:
            self.ids = None
            self.feats = None
            self.h0 = a_scaled
            width = net.m
        if ranker.input_dim != width:
            raise ValidationError(
                f"ranker input width {ranker.input_dim} does not match "
                f"embedding width {width} for variant {variant.name}"
            )
        self.width = width

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        if self.embed is not None and self.variant.use_embedding:
            out.update({f"embed.{k}": v for k, v in self.embed.tensors().items()})
        out.update({f"ranker.{k}": v for k, v in self.ranker.tensors().items()})
        return out

    # -- embeddings --------------------------------------------------------

    def node_embeddings(self, nodes: np.ndarray, with_cache: bool = False):
        nodes = np.asarray(nodes, dtype=np.int64)
        if not self.variant.use_embedding:
            return self.h0[nodes], None
        g = nodes.size
        _, num, l = self.ids.shape
        flat_ids = self.ids[nodes].reshape(g * num, l)
        x, enc_cache = encoder._encode_batch(flat_ids, self.feats, self.embed)
        if self.variant.use_bilstm:
            h, lstm_cache = encoder._bilstm_batch(x, self.embed)
        else:
            h, lstm_cache = x, None
        pooled = encoder._pool_batch(h.reshape(g, num, l, h.shape[-1]))
        if not with_cache:
            return pooled, None
        return pooled, (enc_cache, lstm_cache, num, l)

    def _embed_backward(self, dpooled: np.ndarray, cache, grads: dict[str, np.ndarray]):
        enc_cache, lstm_cache, num, l = cache
        dh = encoder._pool_backward(dpooled, num, l)
        dh = dh.reshape(-1, l, dh.shape[-1])
        if self.variant.use_bilstm:
            dx = encoder._bilstm_backward(dh, lstm_cache, self.embed, grads)
        else:
            dx = dh
        encoder._encode_backward(dx, enc_cache, self.embed, grads)

    # -- pairwise scoring ---------------------------------------------------

    def _locate(self, pi: np.ndarray, pj: np.ndarray):
        nodes = np.unique(np.concatenate([pi, pj]))
        return nodes, np.searchsorted(nodes, pi), np.searchsorted(nodes, pj)

    def rate_pairs(self, pi, pj) -> np.ndarray:
        """Ratings for ordered pairs (no dropout)."""
        pi = np.asarray(pi, dtype=np.int64)
        pj = np.asarray(pj, dtype=np.int64)
        nodes, li, lj = self._locate(pi, pj)
        h, _ = self.node_embeddings(nodes)
        ratings, _ = pair_forward(h[li], h[lj], self.ranker)
        return ratings

    def rating_matrix(self, nodes) -> np.ndarray:
        """All-pairs rating matrix over ``nodes`` (diagonal meaningless).

        Uses the split form of the output projection so no pairwise stack
        is materialized.
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        h, _ = self.node_embeddings(nodes)
        # branch codes once, then logit(a, b) = u[a] + v[b] + bias
        codes, _ = _branch_forward(h, self.ranker)
        r = self.ranker.rdim
        u = codes @ self.ranker.w_out[:r]
        v = codes @ self.ranker.w_out[r:]
        return encoder.sigmoid(u[:, None] + v[None, :] + self.ranker.b_out[0])

    def loss_and_grads(self, pi, pj, labels, dropout_rate: float = 0.0,
                       dropout_rng: np.random.Generator | None = None):
        """Mean BCE over a pair batch plus gradients for every tensor.

        Returns ``(loss, grads, ratings)`` with grads keyed like
        :meth:`tensors`.  Dropout (inverted scaling) applies to the pooled
        embeddings only when a rate and generator are given.
        """
        pi = np.asarray(pi, dtype=np.int64)
        pj = np.asarray(pj, dtype=np.int64)
        y = np.asarray(labels, dtype=np.float64)
        if pi.size == 0 or pi.shape != pj.shape or pi.shape != y.shape:
            raise ValidationError("pair batch arrays must be equal-length and non-empty")
        nodes, li, lj = self._locate(pi, pj)
        h, cache = self.node_embeddings(nodes, with_cache=True)

        mask = None
        if dropout_rate > 0.0:
            if dropout_rng is None:
                raise ValidationError("dropout needs a generator")
            mask = (dropout_rng.random(h.shape) >= dropout_rate) / (1.0 - dropout_rate)
            h = h * mask

        ratings, rcache = pair_forward(h[li], h[lj], self.ranker)
        clipped = np.clip(ratings, EPS, 1.0 - EPS)
        loss = float(-np.mean(y * np.log(clipped) + (1.0 - y) * np.log(1.0 - clipped)))

        rgrads = zero_grads(self.ranker.tensors())
        dlogit = (ratings - y) / y.size
        dhi, dhj = pair_backward(dlogit, rcache, self.ranker, rgrads)
        dh = np.zeros_like(h)
        np.add.at(dh, li, dhi)
        np.add.at(dh, lj, dhj)
        if mask is not None:
            dh = dh * mask

        grads = {f"ranker.{k}": v for k, v in rgrads.items()}
        if self.variant.use_embedding:
            egrads = zero_grads(self.embed.tensors())
            self._embed_backward(dh, cache, egrads)
            grads.update({f"embed.{k}": v for k, v in egrads.items()})
        return loss, grads, ratings
