"""
Cosine-similarity contrastive losses: the intra-class diverging loss over noise triplets
and the inter-class structure preserving loss over a hybrid feature pool.
"""

import logging
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from region_synth.data import BACKGROUND, FeatureBatch, Origin
from region_synth.errors import ContractError, NormalizationError

_logger = logging.getLogger(__name__)

POSITIVE_POLICIES = ("prefer_real", "any")


def normalize_rows(x: torch.Tensor) -> torch.Tensor:
    norms = torch.linalg.vector_norm(x, dim=-1, keepdim=True)
    if bool((norms == 0).any()):
        raise NormalizationError("cannot take the cosine similarity of a zero-norm feature")
    return x / norms


def intra_sd_loss(
    f_query: torch.Tensor, f_pos: torch.Tensor, f_negs: torch.Tensor, tau: float
) -> torch.Tensor:
    """
    ``-log(exp(s(q,p)/tau) / (exp(s(q,p)/tau) + sum_i exp(s(q,n_i)/tau)))`` averaged over
    the batch. Shapes: query/positive ``(B, D)``, negatives ``(B, N, D)``; a single
    query ``(D,)`` with negatives ``(N, D)`` is also accepted.
    """
    if tau <= 0:
        raise ContractError(f"tau must be > 0, got {tau}")
    if f_query.dim() == 1:
        f_query, f_pos, f_negs = f_query.unsqueeze(0), f_pos.unsqueeze(0), f_negs.unsqueeze(0)
    q = normalize_rows(f_query)
    p = normalize_rows(f_pos)
    n = normalize_rows(f_negs)
    pos = (q * p).sum(dim=-1, keepdim=True)
    neg = torch.einsum("bd,bnd->bn", q, n)
    logits = torch.cat([pos, neg], dim=1) / tau
    return (torch.logsumexp(logits, dim=1) - logits[:, 0]).mean()


@dataclass
class HybridPool:
    features: torch.Tensor
    labels: torch.Tensor
    origins: list[Origin]

    def __len__(self) -> int:
        return self.features.shape[0]

    def phi_mask(self, label: int) -> torch.Tensor:
        """Entries of a different class than ``label``, background included."""
        return self.labels != label

    def origin_mask(self, origin: Origin) -> torch.Tensor:
        return torch.tensor([o is origin for o in self.origins], dtype=torch.bool)

    def positive_mask(self, label: int, origin: Origin | None = None) -> torch.Tensor:
        mask = self.labels == label
        if origin is not None:
            mask &= self.origin_mask(origin)
        return mask


def build_hybrid_pool(
    f_synth: torch.Tensor,
    labels_synth: torch.Tensor,
    real_proposals: FeatureBatch | None = None,
    backgrounds: torch.Tensor | None = None,
) -> HybridPool:
    """Synthesized rows first (row ``i`` is query ``i``), then proposals, then background."""
    features = [f_synth]
    labels = [labels_synth.to(torch.long)]
    origins = [Origin.SYNTH] * f_synth.shape[0]
    if real_proposals is not None and len(real_proposals):
        if real_proposals.labels is None:
            raise ContractError("real proposals need labels")
        features.append(real_proposals.features)
        labels.append(real_proposals.labels.to(torch.long))
        origins += [Origin.REAL_PROPOSAL] * len(real_proposals)
    if backgrounds is not None and backgrounds.shape[0]:
        features.append(backgrounds)
        labels.append(torch.full((backgrounds.shape[0],), BACKGROUND, dtype=torch.long))
        origins += [Origin.BACKGROUND] * backgrounds.shape[0]
    if not origins:
        raise ContractError("hybrid pool is empty")
    return HybridPool(features=torch.cat(features), labels=torch.cat(labels), origins=origins)


def inter_sp_loss(
    f_query: torch.Tensor,
    query_labels: torch.Tensor,
    pool: HybridPool,
    tau: float,
    positive_policy: str = "prefer_real",
    rng: torch.Generator | None = None,
    query_indices: list[int] | None = None,
    logger: logging.Logger | None = None,
) -> torch.Tensor:
    """
    ``-log(exp(s(q,g+)/tau) / (exp(s(q,g+)/tau) + sum_{j in Phi} exp(s(q,g_j)/tau)))``
    averaged over the queries that have a positive.

    ``query_indices[i]`` is the pool row holding query ``i`` itself, which is never its own
    positive. Without ``query_indices`` the queries are taken to be outside the pool.
    Queries without any positive are skipped with a warning.
    """
    if tau <= 0:
        raise ContractError(f"tau must be > 0, got {tau}")
    if positive_policy not in POSITIVE_POLICIES:
        raise ContractError(f"unknown positive policy {positive_policy!r}")
    if f_query.dim() == 1:
        f_query, query_labels = f_query.unsqueeze(0), query_labels.reshape(1)
    labels = query_labels.to(torch.long)
    count = f_query.shape[0]
    if query_indices is not None and len(query_indices) != count:
        raise ContractError(f"got {len(query_indices)} query indices for {count} queries")

    same = labels[:, None] == pool.labels[None, :]
    phi = ~same
    lonely = ~phi.any(dim=1)
    if bool(lonely.any()):
        label = int(labels[lonely.nonzero()[0, 0]])
        raise ContractError(f"no different-class entries in the pool for class {label}")

    own = torch.zeros_like(same)
    if query_indices is not None:
        rows = torch.arange(count)
        cols = torch.tensor(query_indices, dtype=torch.long)
        valid = (cols >= 0) & (cols < len(pool))
        own[rows[valid], cols[valid]] = True
    if positive_policy == "prefer_real":
        real = same & pool.origin_mask(Origin.REAL_PROPOSAL)[None, :]
        synth = same & pool.origin_mask(Origin.SYNTH)[None, :] & ~own
        candidates = torch.where(real.any(dim=1, keepdim=True), real, synth)
    else:
        candidates = same & ~own

    has_positive = candidates.any(dim=1)
    for label in labels[~has_positive].tolist():
        (logger or _logger).warning("no positive for a class-%s query; skipping it", label)
    if not bool(has_positive.any()):
        return f_query.new_zeros(())

    # uniform pick among the candidates of each row
    scores = torch.rand(same.shape, generator=rng, dtype=torch.float64).masked_fill(~candidates, -1.0)
    positive = scores.argmax(dim=1)

    sims = normalize_rows(f_query) @ normalize_rows(pool.features).T / tau
    pos = sims.gather(1, positive[:, None]).squeeze(1)
    neg = torch.logsumexp(sims.masked_fill(~phi, float("-inf")), dim=1)
    return F.softplus(neg - pos)[has_positive].mean()
