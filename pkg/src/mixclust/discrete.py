"""Scalar two-component mixture clustering: Binomial and Poisson counts.

Initialization is either 1-d K-means or method of moments; refinement is a
per-sample MLE relabel, with exact leave-one-out parameter estimates in
"loo" mode and a single shared pass in "practical" mode.

Known limitation: the Poisson moment inversion treats the empirical half
moment mean(sqrt(X)) as (sqrt(t1)+sqrt(t2))/2, whose bias is O(t^{-1/2});
the estimator is used as stated, without a bias correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .init_cluster import kmeans
from .refine import RefineResult

__all__ = [
    "MomEstimate",
    "binomial_mom",
    "poisson_mom",
    "scalar_mle_label",
    "cluster_scalar_mixture",
]

SCALAR_EPS = 1e-9  # clamp for estimated probabilities/intensities before logs


@dataclass(frozen=True)
class MomEstimate:
    """Method-of-moments estimates, ordered param1_hat >= param2_hat."""

    m1_hat: float
    m2_hat: float  # second moment (Binomial) or half moment (Poisson)
    param1_hat: float
    param2_hat: float
    discriminant: float
    fallback_used: bool


def binomial_mom(x, d):
    """Moment estimates for (1/2) Bin(d, p1) + (1/2) Bin(d, p2).

    M1 = sum(x)/(n d), M2 = sum(x^2 - x)/(n d (d-1)); the probabilities are
    M1 +- sqrt(M2 - M1^2).  A negative discriminant (sampling noise)
    collapses both estimates to M1 with the fallback flag set.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if d < 2:
        raise ValueError(f"binomial trials d={d} must be at least 2")
    if x.min() < 0 or x.max() > d:
        raise ValueError(f"counts must lie in [0, {d}]")
    n = x.size
    m1 = float(x.sum() / (n * d))
    m2 = float(np.sum(x * x - x) / (n * d * (d - 1)))
    disc = m2 - m1 * m1
    if disc < 0:
        p1 = p2 = m1
        fallback = True
    else:
        root = math.sqrt(disc)
        p1, p2 = m1 + root, m1 - root
        fallback = False
    p1 = min(max(p1, SCALAR_EPS), 1.0 - SCALAR_EPS)
    p2 = min(max(p2, SCALAR_EPS), 1.0 - SCALAR_EPS)
    return MomEstimate(m1, m2, p1, p2, disc, fallback)


def poisson_mom(x):
    """Moment estimates for (1/2) Poisson(t1) + (1/2) Poisson(t2).

    M1 = mean(x), M_half = mean(sqrt(x)); the intensities are
    M1 +- 2 M_half sqrt(M1 - M_half^2).
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if x.min() < 0:
        raise ValueError("counts must be nonnegative")
    m1 = float(x.mean())
    mh = float(np.sqrt(x).mean())
    disc = m1 - mh * mh
    if disc < 0:
        t1 = t2 = m1
        fallback = True
    else:
        shift = 2.0 * mh * math.sqrt(disc)
        t1, t2 = m1 + shift, m1 - shift
        fallback = False
    t1, t2 = max(t1, 0.0), max(t2, 0.0)
    return MomEstimate(m1, mh, t1, t2, disc, fallback)


def scalar_mle_label(x, family, param1, param2, d=None):
    """MLE label of a single count under known/estimated parameters; tie -> 1."""
    if family == "binomial":
        if d is None:
            raise ValueError("binomial labeling needs the trial count d")
        for p in (param1, param2):
            if not 0 < p < 1:
                raise DomainError(f"probability {p} must lie strictly in (0, 1)")
        l1 = x * math.log(param1) + (d - x) * math.log1p(-param1)
        l2 = x * math.log(param2) + (d - x) * math.log1p(-param2)
    elif family == "poisson":
        for t in (param1, param2):
            if t <= 0:
                raise DomainError(f"intensity {t} must be positive")
        l1 = -param1 + x * math.log(param1)
        l2 = -param2 + x * math.log(param2)
    else:
        raise ValueError(f"unknown scalar family {family!r}")
    return 1 if l1 >= l2 else 2


def _clamp_pair(a, b, family):
    if family == "binomial":
        a = min(max(a, SCALAR_EPS), 1.0 - SCALAR_EPS)
        b = min(max(b, SCALAR_EPS), 1.0 - SCALAR_EPS)
    else:
        a, b = max(a, SCALAR_EPS), max(b, SCALAR_EPS)
    return a, b


def _params_from_labels(x, labels, family, d):
    """Cluster-mean parameters, ordered so cluster 1 carries the larger one.

    Returns (param1, param2, relabeled, ok); ok is False when a cluster is
    empty.
    """
    sums = np.array([x[labels == k].sum() for k in (1, 2)], dtype=float)
    cnts = np.array([(labels == k).sum() for k in (1, 2)], dtype=float)
    if np.any(cnts == 0):
        return None, None, labels, False
    denom = cnts * d if family == "binomial" else cnts
    params = sums / denom
    if params[0] >= params[1]:
        return params[0], params[1], labels, True
    return params[1], params[0], (3 - labels), True


def _mom_init(x, family, d):
    est = binomial_mom(x, d) if family == "binomial" else poisson_mom(x)
    p1, p2 = _clamp_pair(est.param1_hat, est.param2_hat, family)
    labels = np.array([scalar_mle_label(v, family, p1, p2, d) for v in x], dtype=int)
    return p1, p2, labels, est


def _init_scalar(x, family, init_kind, d, seed):
    """Returns (param1, param2, labels, fallback_flag)."""
    if init_kind == "mom":
        p1, p2, labels, est = _mom_init(x, family, d)
        return p1, p2, labels, est.fallback_used
    if init_kind == "kmeans":
        labels, _ = kmeans(x.astype(float), 2, seed=seed)
        p1, p2, labels, ok = _params_from_labels(x, labels, family, d)
        if not ok:
            p1, p2, labels, est = _mom_init(x, family, d)
            return p1, p2, labels, True
        p1, p2 = _clamp_pair(p1, p2, family)
        return p1, p2, labels, False
    raise ValueError(f"unknown init_kind {init_kind!r}")


def _label_margin(x, family, p1, p2, d):
    if family == "binomial":
        l1 = x * math.log(p1) + (d - x) * math.log1p(-p1)
        l2 = x * math.log(p2) + (d - x) * math.log1p(-p2)
    else:
        l1 = -p1 + x * math.log(p1)
        l2 = -p2 + x * math.log(p2)
    return (1 if l1 >= l2 else 2), abs(l1 - l2)


def cluster_scalar_mixture(x, family, init_kind="mom", d=None, mode="loo", seed=0):
    """Cluster a count vector into two components.

    mode="practical": one init on all data, then one MLE relabel pass.
    mode="loo": for each i the parameters are estimated on x without entry
    i, entry i is relabeled by MLE, and labels are merged by the consensus
    alignment keyed on the i=1 run.  An empty estimated cluster at some i
    falls back to MoM global estimates for that i (flagged).
    """
    x = np.asarray(x)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a nonempty vector of counts")
    if family == "binomial" and (d is None or d < 2):
        raise ValueError("binomial clustering needs trials d >= 2")
    n = x.size
    flags = []

    if mode == "practical":
        p1, p2, _, fb = _init_scalar(x, family, init_kind, d, seed)
        if fb:
            flags.append("init_fallback")
        labels = np.zeros(n, dtype=int)
        margins = np.zeros(n)
        for i in range(n):
            labels[i], margins[i] = _label_margin(x[i], family, p1, p2, d)
        return RefineResult(labels, margins, None,
                            {"params": (p1, p2), "flags": flags, "mode": mode})

    if mode != "loo":
        raise ValueError(f"unknown mode {mode!r}")
    if n < 3:
        raise ValueError(f"leave-one-out needs at least 3 samples, got {n}")

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    per_i_seeds = ss.spawn(n)
    z_hat = np.zeros((n, n), dtype=int)
    margins = np.zeros(n)
    for i in range(n):
        rest = np.delete(x, i)
        if init_kind == "kmeans":
            lab_rest, _ = kmeans(rest.astype(float), 2, seed=per_i_seeds[i])
            p1, p2, lab_rest, ok = _params_from_labels(rest, lab_rest, family, d)
            if not ok:
                p1, p2, lab_rest, _ = _mom_init(rest, family, d)
                flags.append(f"mom_fallback_at_{i}")
            else:
                p1, p2 = _clamp_pair(p1, p2, family)
        else:
            p1, p2, lab_rest, fb = _init_scalar(rest, family, "mom", d, per_i_seeds[i])
            if fb:
                flags.append(f"degenerate_mom_at_{i}")
        zi, margins[i] = _label_margin(x[i], family, p1, p2, d)
        z_hat[i] = np.insert(lab_rest, i, zi)

    labels = np.zeros(n, dtype=int)
    labels[0] = z_hat[0, 0]
    for i in range(1, n):
        own = z_hat[i, i]
        in_own = z_hat[i] == own
        o = [int(np.sum(z_hat[0][in_own] == m)) for m in (1, 2)]
        labels[i] = 1 if o[0] >= o[1] else 2
    return RefineResult(labels, margins, None, {"flags": flags, "mode": mode})
