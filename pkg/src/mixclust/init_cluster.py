"""Initial layer clustering and node community detection.

Provides K-means (the workhorse), the regularized spectral initializer,
the node/sample-splitting initializer with cross spectral estimates, the
mode-3 spectral baseline, and overlap-based label alignment.

All labels are 1-based ({1, 2} for layers, {1..K} for communities).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateClusteringError
from .tensor_core import (
    is_slice_symmetric,
    matricize,
    multilinear_product,
    regularize,
    top_left_singular_vectors,
)

__all__ = [
    "InitResult",
    "SplitPlan",
    "make_split_plan",
    "kmeans",
    "default_delta1",
    "rspec",
    "split_init",
    "m3_spectral",
    "align_labels",
]

DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6
DELTA1_C0 = 2.0  # tuning constant in delta_1 = C0 * sqrt(r / n)


@dataclass
class InitResult:
    """Layer labels in {1,2}, per-type node memberships in {1..K}, diagnostics."""

    layer_labels: np.ndarray
    sigma_hat_1: np.ndarray
    sigma_hat_2: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def sigma(self, m):
        return self.sigma_hat_1 if m == 1 else self.sigma_hat_2


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint covering halves of the layer set [n] and node set [d]."""

    layer_halves: tuple
    node_halves: tuple
    seed: int

    def __post_init__(self):
        for name, halves in (("layer", self.layer_halves), ("node", self.node_halves)):
            a, b = halves
            total = np.concatenate([a, b])
            if np.unique(total).size != total.size or abs(len(a) - len(b)) > 1:
                raise ValueError(f"{name} halves must be disjoint and near-equal")


def make_split_plan(n, d, seed):
    """Seeded uniform partition of layers and nodes into near-equal halves."""
    rng = np.random.default_rng(seed)
    lperm = rng.permutation(n)
    nperm = rng.permutation(d)
    lh = (np.sort(lperm[: (n + 1) // 2]), np.sort(lperm[(n + 1) // 2 :]))
    nh = (np.sort(nperm[: (d + 1) // 2]), np.sort(nperm[(d + 1) // 2 :]))
    return SplitPlan(layer_halves=lh, node_halves=nh, seed=seed)


def default_delta1(r, n, c0=DELTA1_C0):
    return c0 * np.sqrt(r / n)


def _kmeans_pp_seed(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _assign(x, centers):
    d2 = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)  # ties go to the lowest center index
    return labels, d2


def _lloyd(x, k, rng, max_iter, tol):
    centers = _kmeans_pp_seed(x, k, rng)
    labels, d2 = _assign(x, centers)
    obj = float(d2[np.arange(x.shape[0]), labels].sum())
    history = [obj]
    for _ in range(max_iter):
        # re-seed empty clusters from the farthest point, once per sweep
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(d2[np.arange(x.shape[0]), labels]))
                centers[c] = x[far]
                labels, d2 = _assign(x, centers)
        for c in range(k):
            mask = labels == c
            if np.any(mask):
                centers[c] = x[mask].mean(axis=0)
        new_labels, d2 = _assign(x, centers)
        new_obj = float(d2[np.arange(x.shape[0]), new_labels].sum())
        history.append(new_obj)
        done = np.array_equal(new_labels, labels) or (
            obj > 0 and (obj - new_obj) / obj < tol
        )
        labels, obj = new_labels, new_obj
        if done:
            break
    return labels, centers, obj, history


def kmeans(rows, k, restarts=DEFAULT_RESTARTS, seed=0, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Lloyd iterations from k-means++ seeding, best of `restarts` runs by WCSS.

    Returns (labels, centers) with labels in 1..k.  Deterministic given seed.
    """
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds number of rows {n}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    best = None
    for child in ss.spawn(restarts):
        labels, centers, obj, _ = _lloyd(x, k, np.random.default_rng(child), max_iter, tol)
        if best is None or obj < best[2]:
            best = (labels, centers, obj)
    labels, centers, _ = best
    return labels + 1, centers


def align_labels(reference, candidate):
    """Overlap-maximizing permutation of {1,2} mapping candidate onto reference.

    Ties break toward the identity.  Composing the returned permutation with
    the candidate attains the min-permutation Hamming distance.
    """
    ref = np.asarray(reference, dtype=int)
    cand = np.asarray(candidate, dtype=int)
    if ref.size == 0 or ref.shape != cand.shape:
        raise ValueError("reference and candidate must overlap on a nonempty index set")
    identity = int(np.sum(ref == cand))
    swapped = int(np.sum(ref == (3 - cand)))
    return (2, 1) if swapped > identity else (1, 2)


def _argmax_align_map(reference, candidate, k):
    """Per-cluster argmax map candidate labels -> reference labels (tie: identity)."""
    ref = np.asarray(reference, dtype=int)
    cand = np.asarray(candidate, dtype=int)
    mapping = np.arange(k + 1)
    for l in range(1, k + 1):
        in_l = cand == l
        if not np.any(in_l):
            continue
        overlaps = np.array([np.sum(ref[in_l] == m) for m in range(1, k + 1)])
        best = int(overlaps.max())
        if overlaps[l - 1] == best:
            mapping[l] = l
        else:
            mapping[l] = int(np.argmax(overlaps)) + 1
    return mapping


def _node_memberships(layers, labels, K, seed):
    """K-means on the top-K singular rows of the per-cluster aggregated matrix."""
    d = layers.shape[0]
    sigmas, flags = [], []
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(2)
    for m in (1, 2):
        mask = labels == m
        if not np.any(mask):
            sigmas.append(np.ones(d, dtype=int))
            flags.append(f"empty_layer_cluster_{m}")
            continue
        agg = layers[:, :, mask].sum(axis=2)
        um = top_left_singular_vectors(agg, K)
        sig, _ = kmeans(um, K, seed=children[m - 1])
        sigmas.append(sig)
    return sigmas[0], sigmas[1], flags


def rspec(x, K, r=None, delta1=None, seed=0, restarts=DEFAULT_RESTARTS):
    """Regularized spectral initial clustering.

    U_hat = top-r singular vectors of the aggregated adjacency matrix; rows of
    the mode-3 matricization of the tensor contracted with the row-clipped
    U_hat give the layer embedding; per-cluster aggregation then recovers the
    node memberships.
    """
    x = np.asarray(x, dtype=float)
    d, n = x.shape[0], x.shape[2]
    if not is_slice_symmetric(x, tol=1e-12):
        raise ValueError("adjacency tensor must have symmetric mode-3 slices")
    if r is None:
        r = 2 * K
    if r > d:
        raise ValueError(f"rank r={r} exceeds node count {d}")
    if r * r < 2 or n < 2:
        raise ValueError("need r^2 >= 2 and n >= 2 for the layer factor")
    if delta1 is None:
        delta1 = default_delta1(r, n)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_layer, s_node = ss.spawn(2)

    agg = x.sum(axis=2)
    u_hat = top_left_singular_vectors(agg, r)
    svals = np.linalg.svd(agg, compute_uv=False)
    u_reg = regularize(u_hat, delta1)
    core = multilinear_product(x, u_reg, u_reg, None)
    w_hat = top_left_singular_vectors(matricize(core, 3), 2)
    labels, _ = kmeans(w_hat, 2, restarts=restarts, seed=s_layer)
    sigma1, sigma2, flags = _node_memberships(x, labels, K, s_node)
    diagnostics = {
        "delta1": float(delta1),
        "rank_r": int(r),
        "singular_gaps": svals[: r + 1].tolist(),
        "max_row_norm": float(np.linalg.norm(u_hat, axis=1).max()),
        "flags": flags,
    }
    return InitResult(labels, sigma1, sigma2, diagnostics)


def m3_spectral(x, seed=0):
    """Spectral baseline: K-means (k=2) on the top-2 rows of the mode-3 unfolding."""
    x = np.asarray(x, dtype=float)
    w = top_left_singular_vectors(matricize(x, 3), 2)
    labels, _ = kmeans(w, 2, seed=seed)
    return labels


def split_init(x, K, r=None, delta1=None, seed=0, plan=None, restarts=DEFAULT_RESTARTS):
    """Initializer with node and layer splitting and cross spectral estimates.

    Layers and nodes are split into halves N^[0], N^[1] and V^[0], V^[1].
    For half k the node factor is estimated from the *other* layer half
    restricted to V^[k] (keeping it independent of the layers being
    labeled), the layer embedding comes from the half-k layers on V^[k],
    and half-k' memberships come from aggregating the half-k layers on
    V^[k'].  Half outputs are aligned to a whole-data reference.
    """
    x = np.asarray(x, dtype=float)
    d, n = x.shape[0], x.shape[2]
    if r is None:
        r = 2 * K
    if n < 4:
        raise ValueError(f"need at least 4 layers to split, got {n}")
    if d < 4 * K:
        raise ValueError(f"need at least 4K={4 * K} nodes to split, got {d}")
    if delta1 is None:
        delta1 = default_delta1(r, n)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_ref, s_plan, s_half = ss.spawn(3)

    reference = rspec(x, K, r=r, delta1=delta1, seed=s_ref, restarts=restarts)
    if plan is None:
        plan = make_split_plan(n, d, int(s_plan.generate_state(1)[0]))

    half_labels = {}
    half_sigma = {1: {}, 2: {}}
    half_seeds = s_half.spawn(2)
    for k in (0, 1):
        kp = 1 - k
        layers_k = plan.layer_halves[k]
        layers_kp = plan.layer_halves[kp]
        nodes_k = plan.node_halves[k]
        nodes_kp = plan.node_halves[kp]
        if r > nodes_k.size:
            raise ValueError(f"rank r={r} exceeds half-{k} node count {nodes_k.size}")
        s_w, s_sig = half_seeds[k].spawn(2)

        # cross estimate of the node factor on V^[k] from the other layer half
        cross = x[np.ix_(nodes_k, nodes_k, layers_kp)].sum(axis=2)
        u_hat = top_left_singular_vectors(cross, r)
        u_reg = regularize(u_hat, delta1)

        own = x[np.ix_(nodes_k, nodes_k, layers_k)]
        core = multilinear_product(own, u_reg, u_reg, None)
        w_hat = top_left_singular_vectors(matricize(core, 3), 2)
        zk, _ = kmeans(w_hat, 2, restarts=restarts, seed=s_w)
        if np.unique(zk).size < 2:
            raise DegenerateClusteringError(
                f"layer half {k} collapsed to a single cluster"
            )
        half_labels[k] = zk

        # memberships for the opposite node half from X^[-] aggregations
        sig_seeds = s_sig.spawn(2)
        for m in (1, 2):
            sel = layers_k[zk == m]
            agg = x[np.ix_(nodes_kp, nodes_kp, sel)].sum(axis=2)
            um = top_left_singular_vectors(agg, K)
            sig, _ = kmeans(um, K, seed=sig_seeds[m - 1])
            if np.unique(sig).size < K:
                raise DegenerateClusteringError(
                    f"node half {kp} lost a community (type {m})"
                )
            half_sigma[m][kp] = sig

    labels = np.zeros(n, dtype=int)
    for k in (0, 1):
        idx = plan.layer_halves[k]
        mapping = _argmax_align_map(reference.layer_labels[idx], half_labels[k], 2)
        labels[idx] = mapping[half_labels[k]]

    sigmas = {}
    for m in (1, 2):
        sig_full = np.zeros(d, dtype=int)
        for k in (0, 1):
            idx = plan.node_halves[k]
            ref_sig = reference.sigma(m)[idx]
            mapping = _argmax_align_map(ref_sig, half_sigma[m][k], K)
            sig_full[idx] = mapping[half_sigma[m][k]]
        sigmas[m] = sig_full

    diagnostics = dict(reference.diagnostics)
    diagnostics.update({"plan": plan, "reference_labels": reference.layer_labels})
    return InitResult(labels, sigmas[1], sigmas[2], diagnostics)
