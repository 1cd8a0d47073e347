"""Parameter fitting from complete data and BIC-guided structure search.

Discrete tables use Dirichlet smoothing: ``(count + alpha) / (total +
alpha * n_states)``.  CLG rows are fitted per discrete-parent configuration
by least squares over the continuous parents, with the residual variance
floored at 1e-9.  Structure search is greedy hill climbing over
add/delete/reverse arc moves against the BIC score, with seeded random
restarts; parameters are fitted automatically on the winning structure.
"""

from __future__ import annotations

import itertools
import math
import warnings as _warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    BayesianNetwork,
    ClgRow,
    ClgSpec,
    Cpd,
    DiscreteTable,
    Variable,
    build_network,
    normal_logpdf,
)
from .errors import DataDomainError, EmptyDataset, LearnError
from .inference import Dataset

VARIANCE_FLOOR = 1e-9


class LearningWarning(UserWarning):
    pass


@dataclass
class LearnOptions:
    dirichlet_alpha: float = 1.0
    max_parents: int = 3
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.dirichlet_alpha < 0:
            raise LearnError("dirichlet_alpha must be >= 0")


# --------------------------------------------------------------------------
# Parameter learning


def _column_codes(data: Dataset, name: str, states: tuple[str, ...]) -> np.ndarray:
    column = data.cells[name]
    if column.dtype.kind == "f":
        raise DataDomainError(f"column '{name}' is numeric but the variable is discrete")
    index = {s: i for i, s in enumerate(states)}
    codes = np.empty(len(column), dtype=np.int64)
    for i, value in enumerate(column):
        if value not in index:
            raise DataDomainError(f"column '{name}' contains unknown state {value!r}")
        codes[i] = index[value]
    return codes


def fit_parameters(
    variables: Sequence[Variable],
    parents: Mapping[str, Sequence[str]],
    data: Dataset,
    alpha: float = 1.0,
) -> BayesianNetwork:
    """Fit every CPD for the given structure from complete data."""
    if data.n_rows == 0:
        raise EmptyDataset("no rows to learn from")
    by_name = {v.name: v for v in variables}
    for v in variables:
        if v.name not in data.columns:
            raise DataDomainError(f"dataset has no column for variable '{v.name}'")

    codes: dict[str, np.ndarray] = {}
    for v in variables:
        if v.is_discrete:
            codes[v.name] = _column_codes(data, v.name, v.states)
        elif data.cells[v.name].dtype.kind != "f":
            raise DataDomainError(f"column '{v.name}' is not numeric")

    n = data.n_rows
    cpds: dict[str, Cpd] = {}
    for v in variables:
        var_parents = tuple(parents.get(v.name, ()))
        disc_parents = tuple(p for p in var_parents if by_name[p].is_discrete)
        cont_parents = tuple(p for p in var_parents if not by_name[p].is_discrete)
        domains = [by_name[p].states for p in disc_parents]
        n_cfg = int(np.prod([len(d) for d in domains])) if domains else 1
        cfg_idx = np.zeros(n, dtype=np.int64)
        for p, dom in zip(disc_parents, domains):
            cfg_idx = cfg_idx * len(dom) + codes[p]

        if v.is_discrete:
            if cont_parents:
                raise DataDomainError(
                    f"discrete '{v.name}' cannot condition on continuous parents"
                )
            k = len(v.states)
            counts = np.zeros((n_cfg, k))
            np.add.at(counts, (cfg_idx, codes[v.name]), 1.0)
            rows = {}
            for flat, cfg in enumerate(itertools.product(*domains)):
                row_counts = counts[flat]
                total = row_counts.sum()
                if total == 0 and alpha == 0:
                    _warnings.warn(
                        f"no data for '{v.name}' at configuration {cfg!r}; using a uniform row",
                        LearningWarning,
                        stacklevel=2,
                    )
                    rows[cfg] = tuple(1.0 / k for _ in range(k))
                else:
                    denom = total + alpha * k
                    rows[cfg] = tuple(float((c + alpha) / denom) for c in row_counts)
            cpds[v.name] = DiscreteTable(disc_parents, rows)
        else:
            x = data.cells[v.name].astype(float)
            design_cols = [np.ones(n)] + [data.cells[p].astype(float) for p in cont_parents]
            design = np.column_stack(design_cols)
            rows = {}
            for flat, cfg in enumerate(itertools.product(*domains)):
                mask = cfg_idx == flat
                count = int(mask.sum())
                if count == 0:
                    _warnings.warn(
                        f"no data for '{v.name}' at configuration {cfg!r}; using a unit Gaussian",
                        LearningWarning,
                        stacklevel=2,
                    )
                    rows[cfg] = ClgRow(0.0, tuple(0.0 for _ in cont_parents), 1.0)
                    continue
                beta, *_rest = np.linalg.lstsq(design[mask], x[mask], rcond=None)
                residuals = x[mask] - design[mask] @ beta
                variance = max(float(np.mean(residuals**2)), VARIANCE_FLOOR)
                rows[cfg] = ClgRow(float(beta[0]), tuple(float(b) for b in beta[1:]), variance)
            cpds[v.name] = ClgSpec(disc_parents, cont_parents, rows)
    return build_network(tuple(variables), cpds)


def learn_parameters(
    structure: BayesianNetwork, data: Dataset, opts: LearnOptions | None = None
) -> BayesianNetwork:
    """Refit the CPDs of an existing structure from data."""
    opts = opts or LearnOptions()
    parents = {v.name: structure.parents(v.name) for v in structure.variables}
    return fit_parameters(structure.variables, parents, data, opts.dirichlet_alpha)


# --------------------------------------------------------------------------
# BIC scoring


def family_scores(net: BayesianNetwork, data: Dataset) -> dict[str, float]:
    """Per-variable BIC terms under the network's own parameters.

    ``bic_score`` is their sum; the decomposition is also what the structure
    search optimizes.
    """
    if data.n_rows == 0:
        raise EmptyDataset("no rows to score")
    n = data.n_rows
    log_n = math.log(n)
    by_name = {v.name: v for v in net.variables}
    codes = {
        v.name: _column_codes(data, v.name, v.states)
        for v in net.variables
        if v.is_discrete
    }
    scores: dict[str, float] = {}
    for v in net.variables:
        cpd = net.cpds[v.name]
        if isinstance(cpd, DiscreteTable):
            domains = [by_name[p].states for p in cpd.parents]
            n_cfg = int(np.prod([len(d) for d in domains])) if domains else 1
            k = len(v.states)
            cfg_idx = np.zeros(n, dtype=np.int64)
            for p, dom in zip(cpd.parents, domains):
                cfg_idx = cfg_idx * len(dom) + codes[p]
            counts = np.zeros((n_cfg, k))
            np.add.at(counts, (cfg_idx, codes[v.name]), 1.0)
            ll = 0.0
            for flat, cfg in enumerate(itertools.product(*domains)):
                row = cpd.rows[cfg]
                for c, p in zip(counts[flat], row):
                    if c > 0:
                        ll += c * (math.log(p) if p > 0 else -math.inf)
            params = (k - 1) * n_cfg
        else:
            domains = [by_name[p].states for p in cpd.discrete_parents]
            n_cfg = int(np.prod([len(d) for d in domains])) if domains else 1
            cfg_idx = np.zeros(n, dtype=np.int64)
            for p, dom in zip(cpd.discrete_parents, domains):
                cfg_idx = cfg_idx * len(dom) + codes[p]
            x = data.cells[v.name].astype(float)
            ll = 0.0
            for flat, cfg in enumerate(itertools.product(*domains)):
                mask = cfg_idx == flat
                if not mask.any():
                    continue
                row = cpd.rows[cfg]
                mean = np.full(int(mask.sum()), row.intercept)
                for p, coef in zip(cpd.continuous_parents, row.coefficients):
                    mean += coef * data.cells[p].astype(float)[mask]
                resid = x[mask] - mean
                ll += float(
                    np.sum(-0.5 * (resid**2 / row.variance + math.log(row.variance) + math.log(2 * math.pi)))
                )
            params = (2 + len(cpd.continuous_parents)) * n_cfg
        scores[v.name] = ll - 0.5 * params * log_n
    return scores


def bic_score(net: BayesianNetwork, data: Dataset) -> float:
    """Log-likelihood minus ``(parameter count / 2) * ln(rows)``."""
    return math.fsum(family_scores(net, data).values())


# --------------------------------------------------------------------------
# Structure learning


class _FamilyScoreCache:
    """Maximum-likelihood family BIC terms, memoized by (child, parents)."""

    def __init__(self, data: Dataset, states: dict[str, tuple[str, ...]]):
        self.n = data.n_rows
        self.log_n = math.log(self.n)
        self.states = states
        self.codes = {
            name: _column_codes(data, name, states[name]) for name in states
        }
        self.cache: dict[tuple[str, tuple[str, ...]], float] = {}

    def score(self, child: str, parents: tuple[str, ...]) -> float:
        key = (child, tuple(sorted(parents)))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        k = len(self.states[child])
        n_cfg = 1
        cfg_idx = np.zeros(self.n, dtype=np.int64)
        for p in key[1]:
            size = len(self.states[p])
            cfg_idx = cfg_idx * size + self.codes[p]
            n_cfg *= size
        counts = np.zeros((n_cfg, k))
        np.add.at(counts, (cfg_idx, self.codes[child]), 1.0)
        totals = counts.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_p = np.log(counts / totals)
        ll = float(np.sum(np.where(counts > 0, counts * log_p, 0.0)))
        value = ll - 0.5 * (k - 1) * n_cfg * self.log_n
        self.cache[key] = value
        return value


def _would_cycle(parents: dict[str, set[str]], x: str, y: str) -> bool:
    """Would adding x -> y create a directed cycle? (is x reachable from y)"""
    stack = [y]
    seen = set()
    while stack:
        node = stack.pop()
        if node == x:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(child for child, ps in parents.items() if node in ps)
    return False


def _hill_climb(columns, cache: _FamilyScoreCache, start: dict[str, set[str]], max_parents: int):
    parents = {c: set(ps) for c, ps in start.items()}
    scores = {c: cache.score(c, tuple(parents[c])) for c in columns}
    while True:
        best_delta = 0.0
        best_move = None  # (kind, x, y, new scores affected)
        for x in columns:
            for y in columns:
                if x == y:
                    continue
                if x not in parents[y] and len(parents[y]) < max_parents:
                    if not _would_cycle(parents, x, y):
                        new_y = cache.score(y, tuple(parents[y] | {x}))
                        delta = new_y - scores[y]
                        move = ("add", x, y)
                        if _better(delta, move, best_delta, best_move):
                            best_delta, best_move = delta, move
                if x in parents[y]:
                    new_y = cache.score(y, tuple(parents[y] - {x}))
                    delta = new_y - scores[y]
                    move = ("delete", x, y)
                    if _better(delta, move, best_delta, best_move):
                        best_delta, best_move = delta, move
                    # reverse x -> y into y -> x
                    if len(parents[x]) < max_parents:
                        parents[y].discard(x)
                        cycles = _would_cycle(parents, y, x)
                        parents[y].add(x)
                        if not cycles:
                            new_x = cache.score(x, tuple(parents[x] | {y}))
                            delta = (new_y - scores[y]) + (new_x - scores[x])
                            move = ("reverse", x, y)
                            if _better(delta, move, best_delta, best_move):
                                best_delta, best_move = delta, move
        if best_move is None or best_delta <= 1e-12:
            break
        kind, x, y = best_move
        if kind == "add":
            parents[y].add(x)
        elif kind == "delete":
            parents[y].discard(x)
        else:
            parents[y].discard(x)
            parents[x].add(y)
            scores[x] = cache.score(x, tuple(parents[x]))
        scores[y] = cache.score(y, tuple(parents[y]))
    return parents, math.fsum(scores.values())


def _better(delta, move, best_delta, best_move) -> bool:
    """Strictly larger gain wins; exact ties go to the lexicographically
    smallest (kind, x, y) so runs are reproducible."""
    if delta <= 1e-12:
        return False
    if best_move is None or delta > best_delta:
        return True
    return delta == best_delta and move < best_move


def _random_start(columns, rng: np.random.Generator, max_parents: int) -> dict[str, set[str]]:
    order = [columns[i] for i in rng.permutation(len(columns))]
    parents: dict[str, set[str]] = {c: set() for c in columns}
    for i, child in enumerate(order):
        earlier = order[:i]
        if not earlier:
            continue
        count = int(rng.integers(0, min(max_parents, len(earlier)) + 1))
        if count:
            picks = rng.choice(len(earlier), size=count, replace=False)
            parents[child] = {earlier[j] for j in picks}
    return parents


def learn_structure(data: Dataset, opts: LearnOptions | None = None) -> BayesianNetwork:
    """Hill-climb BIC over all-discrete data; parameters are fitted on the
    winning structure before returning."""
    opts = opts or LearnOptions()
    if data.n_rows == 0:
        raise EmptyDataset("no rows to learn from")
    if len(data.columns) < 2:
        raise LearnError("structure learning needs at least 2 columns")
    for name in data.columns:
        if data.is_continuous(name):
            raise LearnError(f"column '{name}' is continuous; structure learning is all-discrete")

    columns = list(data.columns)
    states = {
        name: tuple(sorted({str(v) for v in data.cells[name]})) for name in columns
    }
    for name, domain in states.items():
        if len(domain) < 2:
            raise LearnError(f"column '{name}' never varies; it cannot form a discrete variable")
    cache = _FamilyScoreCache(data, states)

    best_parents = None
    best_score = -math.inf
    empty = {c: set() for c in columns}
    for restart in range(max(1, opts.restarts)):
        if restart == 0:
            start = empty
        else:
            rng = np.random.default_rng([opts.seed, restart])
            start = _random_start(columns, rng, opts.max_parents)
        parents, score = _hill_climb(columns, cache, start, opts.max_parents)
        if score > best_score:
            best_score = score
            best_parents = parents

    variables = tuple(Variable(name, states[name]) for name in columns)
    parent_map = {c: tuple(p for p in columns if p in best_parents[c]) for c in columns}
    return fit_parameters(variables, parent_map, data, opts.dirichlet_alpha)
