"""Likelihood-based layer-label refinement.

Block probabilities/intensities are estimated from initial labels and
memberships by pooled upper-triangle averages; each layer is then
re-assigned to the component maximizing its exact log-likelihood, either
once on shared estimates (practical single pass) or with exact
leave-one-out semantics plus the consensus alignment loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateClusteringError, DomainError
from .init_cluster import InitResult, m3_spectral, rspec, split_init, _node_memberships
from .models import edge_matrix

__all__ = [
    "BlockEstimate",
    "RefineResult",
    "estimate_blocks",
    "oracle_label_bernoulli",
    "oracle_label_poisson",
    "refine_label",
    "two_stage_practical",
    "two_stage_loo",
]

BLOCK_EPS = 1e-6  # clamp for estimated blocks before logs


@dataclass
class BlockEstimate:
    """Symmetric per-type block estimates with the raw counts behind them."""

    B_hat_1: np.ndarray
    B_hat_2: np.ndarray
    counts: dict
    flags: list = field(default_factory=list)

    def block(self, m):
        return self.B_hat_1 if m == 1 else self.B_hat_2


@dataclass
class RefineResult:
    labels: np.ndarray
    loglik_margins: np.ndarray
    init_used: InitResult | None
    diagnostics: dict = field(default_factory=dict)


def _upper_mask(d, include_diagonal):
    return np.triu_indices(d, k=0 if include_diagonal else 1)


def _pooled_block_sums(S, sigma, K, include_diagonal):
    """Upper-triangle sums and slot counts pooled over unordered block pairs.

    S is a symmetric aggregated matrix; returns (sums, slots) as K x K arrays
    where entry (k, l) covers all slots {j1 <= j2} with {sigma(j1), sigma(j2)}
    = {k+1, l+1}.
    """
    d = S.shape[0]
    Z = np.zeros((d, K))
    Z[np.arange(d), sigma - 1] = 1.0
    T = Z.T @ S @ Z
    diag_vals = Z.T @ np.diag(S)
    counts = Z.sum(axis=0)
    sums = T.copy()
    slots = np.outer(counts, counts)
    if include_diagonal:
        di = (T.diagonal() + diag_vals) / 2.0
        np.fill_diagonal(sums, di)
        np.fill_diagonal(slots, counts * (counts + 1) / 2.0)
    else:
        di = (T.diagonal() - diag_vals) / 2.0
        np.fill_diagonal(sums, di)
        np.fill_diagonal(slots, counts * (counts - 1) / 2.0)
    return sums, slots


def estimate_blocks(layers, labels, sigma1, sigma2, K, family="bernoulli", include_diagonal=True):
    """Ratio estimator B_hat_m(k,l) = (edge mass in block slots) / (#slots x #layers).

    Blocks with no slots are filled with the layer cluster's global mean; an
    entirely empty layer cluster is filled with the overall mean, both flagged.
    Bernoulli entries are clamped to [eps, 1-eps], Poisson to [eps, inf).
    """
    layers = np.asarray(layers, dtype=float)
    labels = np.asarray(labels, dtype=int)
    d, n = layers.shape[0], layers.shape[2]
    if labels.size != n:
        raise ValueError(f"got {labels.size} labels for {n} layers")
    iu = _upper_mask(d, include_diagonal)
    n_slots = len(iu[0])
    flags = []
    blocks = {}
    counts = {}
    overall = float(layers[iu[0], iu[1], :].sum()) / max(n * n_slots, 1)
    for m, sigma in ((1, np.asarray(sigma1, dtype=int)), (2, np.asarray(sigma2, dtype=int))):
        mask = labels == m
        n_m = int(mask.sum())
        if n_m == 0:
            flags.append(f"empty_layer_cluster_{m}")
            blocks[m] = np.full((K, K), overall)
            counts[m] = {"edge_sums": np.zeros((K, K)), "slot_counts": np.zeros((K, K))}
            continue
        S = layers[:, :, mask].sum(axis=2)
        sums, slots = _pooled_block_sums(S, sigma, K, include_diagonal)
        den = slots * n_m
        cluster_mean = float(sums.sum()) / max(n_m * n_slots, 1)
        B = np.full((K, K), cluster_mean)
        ok = den > 0
        B[ok] = sums[ok] / den[ok]
        if not np.all(ok):
            flags.append(f"empty_blocks_type_{m}")
        blocks[m] = B
        counts[m] = {"edge_sums": sums, "slot_counts": den}
    for m in (1, 2):
        if family == "bernoulli":
            blocks[m] = np.clip(blocks[m], BLOCK_EPS, 1.0 - BLOCK_EPS)
        else:
            blocks[m] = np.clip(blocks[m], BLOCK_EPS, None)
    return BlockEstimate(B_hat_1=blocks[1], B_hat_2=blocks[2], counts=counts, flags=flags)


def _bernoulli_loglik(x_u, p_u):
    return float(np.sum(x_u * np.log(p_u) + (1.0 - x_u) * np.log1p(-p_u)))


def _poisson_loglik(x_u, p_u):
    # 0*log 0 := 0; positive count at zero intensity gives -inf
    out = -p_u.sum()
    pos = x_u > 0
    if np.any(pos):
        with np.errstate(divide="ignore"):
            logs = np.log(p_u[pos])
        out += float(np.sum(x_u[pos] * logs))
    return float(out)


def _pair_logliks(x, P1, P2, family, include_diagonal):
    x = np.asarray(x, dtype=float)
    iu = _upper_mask(x.shape[0], include_diagonal)
    x_u = x[iu]
    lls = []
    for P in (P1, P2):
        p_u = np.asarray(P, dtype=float)[iu]
        if family == "bernoulli":
            lls.append(_bernoulli_loglik(x_u, p_u))
        else:
            lls.append(_poisson_loglik(x_u, p_u))
    return lls[0], lls[1]


def oracle_label_bernoulli(x, P1, P2, include_diagonal=True):
    """Likelihood-based Lloyd label under known edge probability matrices."""
    for P in (P1, P2):
        p = np.asarray(P, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise DomainError("oracle requires probabilities strictly inside (0, 1)")
    l1, l2 = _pair_logliks(x, P1, P2, "bernoulli", include_diagonal)
    return 1 if l1 >= l2 else 2


def oracle_label_poisson(x, P1, P2, include_diagonal=True):
    """Likelihood-based Lloyd label under known edge intensity matrices."""
    for P in (P1, P2):
        if np.any(np.asarray(P, dtype=float) < 0):
            raise DomainError("intensities must be nonnegative")
    l1, l2 = _pair_logliks(x, P1, P2, "poisson", include_diagonal)
    return 1 if l1 >= l2 else 2


def _refine_one(x, blocks, sigma1, sigma2, family, include_diagonal):
    P1 = edge_matrix(blocks.B_hat_1, sigma1)
    P2 = edge_matrix(blocks.B_hat_2, sigma2)
    l1, l2 = _pair_logliks(x, P1, P2, family, include_diagonal)
    label = 1 if l1 >= l2 else 2
    return label, abs(l1 - l2)


def refine_label(x, blocks, sigma1, sigma2, family="bernoulli", include_diagonal=True):
    """MLE label of a single layer against estimated (clamped) blocks."""
    label, _ = _refine_one(x, blocks, np.asarray(sigma1, dtype=int),
                           np.asarray(sigma2, dtype=int), family, include_diagonal)
    return label


def _run_init(layers, K, init_kind, r, delta1, seed, restarts):
    if isinstance(init_kind, InitResult):
        return init_kind
    if init_kind == "rspec":
        return rspec(layers, K, r=r, delta1=delta1, seed=seed, restarts=restarts)
    if init_kind == "split":
        return split_init(layers, K, r=r, delta1=delta1, seed=seed, restarts=restarts)
    if init_kind == "m3sc":
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        s_layer, s_node = ss.spawn(2)
        labels = m3_spectral(layers, seed=s_layer)
        sigma1, sigma2, flags = _node_memberships(np.asarray(layers, dtype=float), labels, K, s_node)
        return InitResult(labels, sigma1, sigma2, {"flags": flags})
    raise ValueError(f"unknown init_kind {init_kind!r}")


def two_stage_practical(layers, K, init_kind="rspec", family="bernoulli", seed=0,
                        r=None, delta1=None, include_diagonal=True, restarts=10):
    """One initialization on all data, one block estimate, one refinement pass."""
    layers = np.asarray(layers, dtype=float)
    n = layers.shape[2]
    if n < 2:
        raise ValueError(f"need at least 2 layers, got {n}")
    init = _run_init(layers, K, init_kind, r, delta1, seed, restarts)
    blocks = estimate_blocks(layers, init.layer_labels, init.sigma_hat_1,
                             init.sigma_hat_2, K, family, include_diagonal)
    labels = np.zeros(n, dtype=int)
    margins = np.zeros(n)
    for i in range(n):
        labels[i], margins[i] = _refine_one(
            layers[:, :, i], blocks, init.sigma_hat_1, init.sigma_hat_2,
            family, include_diagonal)
    diagnostics = {"blocks": blocks, "flags": list(blocks.flags)}
    return RefineResult(labels, margins, init, diagnostics)


def _drop_layer(init: InitResult, i):
    labels = np.delete(init.layer_labels, i)
    return InitResult(labels, init.sigma_hat_1, init.sigma_hat_2, dict(init.diagnostics))


def two_stage_loo(layers, K, family="bernoulli", seed=0, init_kind="rspec",
                  r=None, delta1=None, include_diagonal=True, restarts=10):
    """Exact leave-one-out two-stage clustering with consensus alignment.

    For every layer i the initializer, the block estimates and hence the
    classifier never see layer i.  Per-layer labels are then merged by the
    overlap-argmax loop keyed on the i=1 run.  A per-i init degeneracy makes
    that i fall back to the practical-path label (flagged).
    """
    layers = np.asarray(layers, dtype=float)
    n = layers.shape[2]
    if n < 3:
        raise ValueError(f"leave-one-out needs at least 3 layers, got {n}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_full, s_loo = ss.spawn(2)
    per_i_seeds = s_loo.spawn(n)

    practical = two_stage_practical(
        layers, K, init_kind=init_kind, family=family, seed=s_full,
        r=r, delta1=delta1, include_diagonal=include_diagonal, restarts=restarts)
    full_init = practical.init_used

    z_hat = np.zeros((n, n), dtype=int)  # row i holds the vector z_hat^(-i)
    margins = np.zeros(n)
    fallback = []
    for i in range(n):
        rest = np.delete(layers, i, axis=2)
        if isinstance(init_kind, InitResult):
            init_i = _drop_layer(init_kind, i)
        else:
            try:
                init_i = _run_init(rest, K, init_kind, r, delta1, per_i_seeds[i], restarts)
            except DegenerateClusteringError:
                # fall back to the practical-path label for this layer
                fallback.append(i)
                z_hat[i] = practical.labels
                margins[i] = practical.loglik_margins[i]
                continue
        blocks_i = estimate_blocks(rest, init_i.layer_labels, init_i.sigma_hat_1,
                                   init_i.sigma_hat_2, K, family, include_diagonal)
        zi, margins[i] = _refine_one(layers[:, :, i], blocks_i, init_i.sigma_hat_1,
                                     init_i.sigma_hat_2, family, include_diagonal)
        z_hat[i] = np.insert(init_i.layer_labels, i, zi)

    def _consensus_map(cand):
        # per-cluster overlap argmax against z_hat^(-1), ties toward label 1
        out = {}
        for c in (1, 2):
            in_c = cand == c
            o = [int(np.sum(z_hat[0][in_c] == m)) for m in (1, 2)]
            out[c] = 1 if o[0] >= o[1] else 2
        return out

    labels = np.zeros(n, dtype=int)
    labels[0] = z_hat[0, 0]
    alignments = [(1, 2)]
    for i in range(1, n):
        mapping = _consensus_map(z_hat[i])
        labels[i] = mapping[z_hat[i, i]]
        alignments.append((mapping[1], mapping[2]))

    diagnostics = {"alignments": alignments, "fallback_layers": fallback,
                   "practical_labels": practical.labels}
    return RefineResult(labels, margins, full_init, diagnostics)
