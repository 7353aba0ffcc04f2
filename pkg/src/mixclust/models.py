"""Ground-truth parameterizations, synthetic samplers and Renyi-1/2 divergences.

Layer labels live in {1, 2}; node memberships in {1, ..., K}.  Networks are
undirected with self-loops: only the upper triangle (diagonal included) is
sampled, then mirrored, so slices are exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "MixtureBlockParams",
    "ScalarMixtureParams",
    "edge_matrix",
    "sample_mixture_network",
    "sample_scalar_mixture",
    "renyi_half_bernoulli",
    "renyi_half_poisson",
    "renyi_half_binomial",
    "renyi_half_poisson_scalar",
    "simulation_block_matrix",
    "validate_parameter_space",
]


def _as_labels(z, name, k):
    z = np.asarray(z, dtype=int)
    if z.ndim != 1:
        raise ShapeError(f"{name} must be a vector")
    if z.size and (z.min() < 1 or z.max() > k):
        raise ValueError(f"{name} entries must lie in 1..{k}")
    return z


def _check_block(B, family, name):
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {B.shape}")
    if not np.allclose(B, B.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if family == "bernoulli":
        if B.min() < 0 or B.max() > 1:
            raise ValueError(f"{name} Bernoulli entries must lie in [0, 1]")
    elif family == "poisson":
        if B.min() < 0:
            raise ValueError(f"{name} Poisson intensities must be nonnegative")
    else:
        raise ValueError(f"unknown family {family!r}")
    return B


@dataclass(frozen=True)
class MixtureBlockParams:
    """Parameters of a two-component mixture of block models.

    family is "bernoulli" (binary edges) or "poisson" (count weights).
    """

    z_star: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    family: str = "bernoulli"

    def __post_init__(self):
        B1 = _check_block(self.B1, self.family, "B1")
        B2 = _check_block(self.B2, self.family, "B2")
        if B1.shape != B2.shape:
            raise ShapeError("B1 and B2 must share their shape")
        K = B1.shape[0]
        z = _as_labels(self.z_star, "z_star", 2)
        s1 = _as_labels(self.sigma1, "sigma1", K)
        s2 = _as_labels(self.sigma2, "sigma2", K)
        if s1.size != s2.size:
            raise ShapeError("sigma1 and sigma2 must have the same length")
        for m, zm in ((1, z), (2, z)):
            if not np.any(zm == m):
                raise ValueError(f"layer cluster {m} is empty in z_star")
        for name, s in (("sigma1", s1), ("sigma2", s2)):
            present = np.unique(s)
            if present.size != K:
                raise ValueError(f"{name} leaves a community empty (needs all of 1..{K})")
        object.__setattr__(self, "z_star", z)
        object.__setattr__(self, "B1", B1)
        object.__setattr__(self, "B2", B2)
        object.__setattr__(self, "sigma1", s1)
        object.__setattr__(self, "sigma2", s2)

    @property
    def n(self):
        return self.z_star.size

    @property
    def d(self):
        return self.sigma1.size

    @property
    def K(self):
        return self.B1.shape[0]

    def edge_matrices(self):
        return edge_matrix(self.B1, self.sigma1), edge_matrix(self.B2, self.sigma2)


@dataclass(frozen=True)
class ScalarMixtureParams:
    """Two-component scalar mixture: Binomial(trials_d, p) or Poisson(theta)."""

    family: str
    z_star: np.ndarray
    param1: float
    param2: float
    trials_d: int | None = None

    def __post_init__(self):
        if self.family not in ("binomial", "poisson"):
            raise ValueError(f"unknown scalar family {self.family!r}")
        z = _as_labels(self.z_star, "z_star", 2)
        object.__setattr__(self, "z_star", z)
        if self.family == "binomial":
            if self.trials_d is None or self.trials_d < 1:
                raise ValueError("binomial mixture needs trials_d >= 1")
            for p in (self.param1, self.param2):
                if not 0 < p < 1:
                    raise ValueError(f"binomial probability {p} must lie in (0, 1)")
        else:
            for t in (self.param1, self.param2):
                if t < 0:
                    raise ValueError(f"poisson intensity {t} must be nonnegative")

    @property
    def n(self):
        return self.z_star.size


def edge_matrix(B, sigma):
    """Edge probability/intensity matrix P(j1, j2) = B(sigma(j1), sigma(j2))."""
    B = np.asarray(B, dtype=float)
    sigma = np.asarray(sigma, dtype=int)
    K = B.shape[0]
    if sigma.min() < 1 or sigma.max() > K:
        raise ValueError(f"membership values must lie in 1..{K}")
    idx = sigma - 1
    return B[np.ix_(idx, idx)]


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def sample_mixture_network(params: MixtureBlockParams, seed=0):
    """Sample the (d, d, n) adjacency/weight tensor, one substream per layer."""
    P1, P2 = params.edge_matrices()
    d, n = params.d, params.n
    iu = np.triu_indices(d)
    out = np.zeros((d, d, n))
    children = _seed_sequence(seed).spawn(n)
    for i in range(n):
        rng = np.random.default_rng(children[i])
        P = P1 if params.z_star[i] == 1 else P2
        vals = P[iu]
        if params.family == "bernoulli":
            upper = (rng.random(vals.size) < vals).astype(float)
        else:
            upper = rng.poisson(vals).astype(float)
        X = np.zeros((d, d))
        X[iu] = upper
        X = X + X.T
        X[np.diag_indices(d)] /= 2.0
        out[:, :, i] = X
    return out


def sample_scalar_mixture(params: ScalarMixtureParams, seed=0):
    """Sample the count vector X with X_i ~ Bin(d, p_{z_i}) or Poisson(theta_{z_i})."""
    rng = np.random.default_rng(_seed_sequence(seed))
    z = params.z_star
    pair = np.array([params.param1, params.param2])
    means = pair[z - 1]
    if params.family == "binomial":
        return rng.binomial(params.trials_d, means).astype(int)
    return rng.poisson(means).astype(int)


def _upper(P, include_diagonal=True):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {P.shape}")
    iu = np.triu_indices(P.shape[0], k=0 if include_diagonal else 1)
    return P[iu]


def renyi_half_bernoulli(P1, P2, include_diagonal=True):
    """Separation strength between two Bernoulli edge-probability matrices.

    I* = -2 sum over the upper triangle of
         log( sqrt(P1 P2) + sqrt((1-P1)(1-P2)) ).
    """
    a = _upper(P1, include_diagonal)
    b = _upper(P2, include_diagonal)
    if a.shape != b.shape:
        raise ShapeError("matrices must have matching dimensions")
    if np.any((a <= 0) | (a >= 1)) or np.any((b <= 0) | (b >= 1)):
        raise DomainError("Bernoulli probabilities must lie strictly in (0, 1)")
    s = np.sqrt(a * b) + np.sqrt((1 - a) * (1 - b))
    return float(-2.0 * np.sum(np.log(s)))


def renyi_half_poisson(P1, P2, include_diagonal=True):
    """I* = sum over the upper triangle of (sqrt(P1) - sqrt(P2))^2."""
    a = _upper(P1, include_diagonal)
    b = _upper(P2, include_diagonal)
    if a.shape != b.shape:
        raise ShapeError("matrices must have matching dimensions")
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("Poisson intensities must be nonnegative")
    return float(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2))


def renyi_half_binomial(d, p1, p2):
    """I* between Bin(d, p1) and Bin(d, p2): -2d log(sqrt((1-p1)(1-p2)) + sqrt(p1 p2))."""
    if d < 1:
        raise ValueError(f"d must be a positive count, got {d}")
    for p in (p1, p2):
        if not 0 < p < 1:
            raise DomainError(f"probability {p} must lie strictly in (0, 1)")
    return float(-2.0 * d * np.log(np.sqrt((1 - p1) * (1 - p2)) + np.sqrt(p1 * p2)))


def renyi_half_poisson_scalar(theta1, theta2):
    """I* between Poisson(theta1) and Poisson(theta2): (sqrt(t1) - sqrt(t2))^2."""
    if theta1 < 0 or theta2 < 0:
        raise DomainError("Poisson intensities must be nonnegative")
    return float((np.sqrt(theta1) - np.sqrt(theta2)) ** 2)


def simulation_block_matrix(K, p, alpha):
    """B = p I_K + q (11^T - I_K) with out-in ratio alpha = q/p."""
    if not 0 < p < 1:
        raise ValueError(f"p={p} must lie in (0, 1)")
    if alpha < 0:
        raise ValueError(f"alpha={alpha} must be nonnegative")
    q = alpha * p
    if q >= 1:
        raise ValueError(f"off-diagonal probability q=alpha*p={q} must stay below 1")
    return p * np.eye(K) + q * (np.ones((K, K)) - np.eye(K))


def validate_parameter_space(params: MixtureBlockParams, alpha=None, beta=None, gamma=None):
    """Optional balance/homogeneity checks from the theoretical parameter space.

    Returns a list of violated conditions (empty when all supplied checks hold);
    nothing here is enforced at sampling time.
    """
    issues = []
    n, d, K = params.n, params.d, params.K
    if alpha is not None:
        for m in (1, 2):
            nm = int(np.sum(params.z_star == m))
            if not n / (2 * alpha) <= nm <= alpha * n / 2:
                issues.append(f"layer cluster {m} size {nm} outside [n/(2a), a n/2]")
    if beta is not None:
        for name, s in (("sigma1", params.sigma1), ("sigma2", params.sigma2)):
            counts = np.bincount(s, minlength=K + 1)[1:]
            if counts.min() < d / (beta * K) or counts.max() > beta * d / K:
                issues.append(f"{name} community sizes outside [d/(bK), bd/K]")
    if gamma is not None:
        for name, B in (("B1", params.B1), ("B2", params.B2)):
            diag = np.diag(B)
            if diag.min() > 0 and diag.max() / diag.min() > gamma:
                issues.append(f"{name} diagonal heterogeneity exceeds gamma")
    return issues
