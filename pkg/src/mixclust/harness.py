"""Benchmark engine: seeded Monte-Carlo sweeps, edge-list ingestion, CSV output.

A scenario sweeps one parameter (edge probability p, out-in ratio alpha,
layer count, or node count) over a grid; every (grid value, replication)
cell draws fresh layer labels (multinomial, 1/2 each) and memberships
(uniform over communities), samples the tensor, runs each requested
method on the same draw and emits one CSV row per method.

Rows print floats with 9 significant digits; with timing disabled
(the default) the ms column is 0 so repeated runs are byte-identical.
"""

from __future__ import annotations

import configparser
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateClusteringError, EdgeListParseError, NumericError
from .init_cluster import m3_spectral, rspec
from .metrics import hamming
from .models import (
    MixtureBlockParams,
    renyi_half_bernoulli,
    renyi_half_poisson,
    sample_mixture_network,
    simulation_block_matrix,
)
from .refine import two_stage_practical

__all__ = [
    "METHODS",
    "PRESETS",
    "ScenarioConfig",
    "ResultRow",
    "EdgeListData",
    "preset_scenario",
    "run_scenario",
    "rows_to_csv",
    "load_multilayer_edge_list",
    "load_scenario_config",
]

METHODS = ("refine-rspec", "refine-split", "rspec", "m3sc")
CSV_HEADER = "scenario,method,param,value,rep,seed,hamming,i_star,ms"
GRID_PARAMS = ("p", "alpha", "layers", "nodes")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    family: str = "bernoulli"
    layers: int = 40
    nodes: int = 40
    communities: int = 2
    grid_param: str = "p"
    grid_values: tuple = ()
    p: float = 0.4
    alpha: float = 0.75
    replications: int = 50
    methods: tuple = METHODS
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.grid_param not in GRID_PARAMS:
            raise ConfigError(f"grid parameter must be one of {GRID_PARAMS}")
        if not self.grid_values:
            raise ConfigError("grid_values must be nonempty")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; pick from {METHODS}")


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    method: str
    param: str
    value: float
    rep: int
    seed: int
    hamming: float
    i_star: float
    ms: int


@dataclass(frozen=True)
class EdgeListData:
    tensor: np.ndarray
    node_ids: list
    has_self_loops: bool


def preset_scenario(name, replications=50, seed=0, methods=METHODS, output=None):
    """Desk-scale versions of the four simulation sweeps."""
    common = dict(replications=replications, seed=seed, methods=tuple(methods), output=output)
    if name == "sim1":
        return ScenarioConfig(name="sim1", grid_param="p",
                              grid_values=tuple(np.round(np.arange(0.1, 0.81, 0.1), 10)),
                              alpha=0.75, **common)
    if name == "sim2":
        return ScenarioConfig(name="sim2", grid_param="alpha",
                              grid_values=tuple(np.round(np.arange(0.1, 0.91, 0.1), 10)),
                              p=0.4, **common)
    if name == "sim3":
        return ScenarioConfig(name="sim3", grid_param="layers",
                              grid_values=tuple(range(20, 81, 10)),
                              p=0.4, alpha=0.75, **common)
    if name == "sim4":
        return ScenarioConfig(name="sim4", grid_param="nodes",
                              grid_values=tuple(range(10, 101, 10)),
                              p=0.4, alpha=0.75, **common)
    raise ConfigError(f"unknown preset {name!r}; expected sim1..sim4")


PRESETS = ("sim1", "sim2", "sim3", "sim4")


def _cell_dims(cfg, value):
    n, d, p, alpha = cfg.layers, cfg.nodes, cfg.p, cfg.alpha
    if cfg.grid_param == "p":
        p = float(value)
    elif cfg.grid_param == "alpha":
        alpha = float(value)
    elif cfg.grid_param == "layers":
        n = int(value)
    else:
        d = int(value)
    return n, d, p, alpha


def _draw_params(cfg, n, d, p, alpha, rng):
    """Multinomial layer labels, uniform memberships; redraw degenerate draws."""
    K = cfg.communities
    if cfg.family == "bernoulli":
        B = simulation_block_matrix(K, p, alpha)
    else:
        # Poisson intensities are not bounded by 1
        B = p * np.eye(K) + alpha * p * (np.ones((K, K)) - np.eye(K))
    for _ in range(1000):
        z = rng.integers(1, 3, size=n)
        s1 = rng.integers(1, K + 1, size=d)
        s2 = rng.integers(1, K + 1, size=d)
        if (np.unique(z).size == 2 and np.unique(s1).size == K
                and np.unique(s2).size == K):
            return MixtureBlockParams(z, B, B, s1, s2, family=cfg.family)
    raise NumericError("could not draw non-degenerate simulation parameters")


def _run_method(method, x, K, family, seed):
    if method == "refine-rspec":
        return two_stage_practical(x, K, init_kind="rspec", family=family, seed=seed).labels
    if method == "refine-split":
        return two_stage_practical(x, K, init_kind="split", family=family, seed=seed).labels
    if method == "rspec":
        return rspec(x, K, seed=seed).layer_labels
    if method == "m3sc":
        return m3_spectral(x, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def _run_cell(cfg, gi, value, rep, timing):
    cell_ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(gi, rep))
    cell_seed = int(cell_ss.generate_state(1)[0])
    s_params, s_sample, s_methods = cell_ss.spawn(3)
    n, d, p, alpha = _cell_dims(cfg, value)
    params = _draw_params(cfg, n, d, p, alpha, np.random.default_rng(s_params))
    x = sample_mixture_network(params, s_sample)
    P1, P2 = params.edge_matrices()
    if cfg.family == "bernoulli":
        i_star = renyi_half_bernoulli(P1, P2)
    else:
        i_star = renyi_half_poisson(P1, P2)
    rows = []
    method_seeds = s_methods.spawn(len(cfg.methods))
    for mi, method in enumerate(cfg.methods):
        t0 = time.perf_counter()
        try:
            labels = _run_method(method, x, cfg.communities, method_seeds[mi])
        except DegenerateClusteringError:
            labels = np.ones(n, dtype=int)  # degraded fallback, still measured
        ms = int(round((time.perf_counter() - t0) * 1000)) if timing else 0
        ham = hamming(labels, params.z_star, 2).rate
        rows.append(ResultRow(cfg.name, method, cfg.grid_param, float(value),
                              rep, cell_seed, ham, i_star, ms))
    return rows


def run_scenario(cfg: ScenarioConfig, threads=1, timing=False):
    """All rows for the sweep, ordered by (grid value, replication, method)."""
    cells = [(gi, value, rep)
             for gi, value in enumerate(cfg.grid_values)
             for rep in range(cfg.replications)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(
                lambda c: _run_cell(cfg, c[0], c[1], c[2], timing), cells))
    else:
        chunks = [_run_cell(cfg, gi, value, rep, timing) for gi, value, rep in cells]
    return [row for chunk in chunks for row in chunk]


def _fmt(v):
    return f"{v:.9g}"


def rows_to_csv(rows):
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r.scenario, r.method, r.param, _fmt(r.value), str(r.rep),
            str(r.seed), _fmt(r.hamming), _fmt(r.i_star), str(r.ms),
        ]))
    return "\n".join(lines) + "\n"


def mean_hamming_by_value(rows, method):
    """Mean Hamming rate per grid value for one method (sorted by value)."""
    acc = {}
    for r in rows:
        if r.method == method:
            acc.setdefault(r.value, []).append(r.hamming)
    return {v: float(np.mean(h)) for v, h in sorted(acc.items())}


def load_multilayer_edge_list(path, family="bernoulli"):
    """Parse whitespace-separated `layer src dst [weight]` lines.

    Layer and node ids may be 0- or 1-based (auto-detected from the minimum
    id, separately for layers and nodes).  Edges are mirrored; duplicate
    lines overwrite.  Bernoulli data is binarized; Poisson weights must be
    integer-valued.
    """
    records = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (3, 4):
                raise EdgeListParseError(
                    f"{path}:{lineno}: expected `layer src dst [weight]`, got {len(parts)} fields")
            try:
                layer, src, dst = (int(parts[0]), int(parts[1]), int(parts[2]))
            except ValueError:
                raise EdgeListParseError(
                    f"{path}:{lineno}: layer and node ids must be integers") from None
            weight = 1.0
            if len(parts) == 4:
                try:
                    weight = float(parts[3])
                except ValueError:
                    raise EdgeListParseError(
                        f"{path}:{lineno}: weight must be numeric") from None
            if weight < 0:
                raise EdgeListParseError(f"{path}:{lineno}: negative weight {weight}")
            if layer < 0 or src < 0 or dst < 0:
                raise EdgeListParseError(f"{path}:{lineno}: negative id")
            if family == "poisson" and weight != int(weight):
                raise EdgeListParseError(
                    f"{path}:{lineno}: Poisson family needs integer weights, got {weight}")
            records.append((layer, src, dst, weight, lineno))
    if not records:
        raise EdgeListParseError(f"{path}: no edges found")
    layer_base = min(r[0] for r in records)
    node_base = min(min(r[1], r[2]) for r in records)
    layer_base = 0 if layer_base == 0 else 1
    node_base = 0 if node_base == 0 else 1
    n = max(r[0] for r in records) - layer_base + 1
    d = max(max(r[1], r[2]) for r in records) - node_base + 1
    x = np.zeros((d, d, n))
    has_self_loops = False
    for layer, src, dst, weight, _ in records:
        li, si, di = layer - layer_base, src - node_base, dst - node_base
        val = 1.0 if family == "bernoulli" and weight > 0 else float(weight)
        x[si, di, li] = val
        x[di, si, li] = val
        if si == di:
            has_self_loops = True
    node_ids = list(range(node_base, node_base + d))
    return EdgeListData(tensor=x, node_ids=node_ids, has_self_loops=has_self_loops)


def load_scenario_config(path):
    """Scenario from a flat key/value file with [scenario], [grid], [fixed] sections."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        sc = parser["scenario"]
        grid = parser["grid"]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing section {exc}") from None
    fixed = parser["fixed"] if parser.has_section("fixed") else {}
    try:
        values = tuple(float(v) for v in grid["values"].split(","))
        cfg = ScenarioConfig(
            name=sc.get("name", "scenario"),
            family=sc.get("family", "bernoulli"),
            layers=int(sc.get("layers", 40)),
            nodes=int(sc.get("nodes", 40)),
            communities=int(sc.get("communities", 2)),
            grid_param=grid["param"],
            grid_values=values,
            p=float(fixed.get("p", 0.4)),
            alpha=float(fixed.get("alpha", 0.75)),
            replications=int(sc.get("replications", 50)),
            methods=tuple(m.strip() for m in sc.get("methods", ",".join(METHODS)).split(",")),
            seed=int(sc.get("seed", 0)),
            output=sc.get("output", None),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg
