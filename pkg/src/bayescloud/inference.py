"""Posterior queries: exact elimination, CLG-leaf hybrid inference, forward
sampling, and Gibbs sampling.

Exact inference uses variable elimination with a min-degree ordering and
lexicographic tie-breaking.  Hybrid networks whose continuous variables are
all leaves are handled exactly: an observed continuous leaf contributes its
Gaussian density, per discrete-parent configuration, as a soft factor on its
parents; an unobserved continuous query is returned as a Gaussian mixture
weighted by the joint posterior of its discrete parents.  Everything else is
served by Gibbs sampling, which draws discrete variables from their
normalized full conditionals and continuous variables from the closed-form
Gaussian full conditional available in the CLG family.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .bnscript import Evidence
from .core import (
    BayesianNetwork,
    ClgSpec,
    DiscreteTable,
    Variable,
    clg_mean,
    log_joint_probability,
    normal_logpdf,
    normal_pdf,
)
from .errors import (
    ContinuousVariablesPresent,
    DataDomainError,
    NonLeafContinuousEvidence,
    UnknownState,
    UnknownVariable,
    ZeroProbabilityEvidence,
)

ZERO_EVIDENCE_MASS = 1e-300


# --------------------------------------------------------------------------
# Posterior containers


@dataclass(frozen=True)
class Categorical:
    states: tuple[str, ...]
    probabilities: tuple[float, ...]

    def probability(self, state: str) -> float:
        return self.probabilities[self.states.index(state)]


@dataclass(frozen=True)
class GaussianMixture:
    components: tuple[tuple[float, float, float], ...]  # (weight, mean, variance)

    @property
    def mean(self) -> float:
        return sum(w * m for w, m, _v in self.components)


Posterior = Union[Categorical, GaussianMixture]
Marginals = dict[str, Posterior]


def marginals_to_json(marginals: Marginals) -> dict:
    """Wire representation shared by the CLI and the HTTP service."""
    out: dict = {}
    for name, post in marginals.items():
        if isinstance(post, Categorical):
            out[name] = {
                "type": "categorical",
                "states": list(post.states),
                "probabilities": list(post.probabilities),
            }
        else:
            out[name] = {
                "type": "mixture",
                "components": [
                    {"weight": w, "mean": m, "variance": v}
                    for w, m, v in post.components
                ],
            }
    return out


def _as_assignments(evidence) -> dict[str, Union[str, float]]:
    if evidence is None:
        return {}
    if isinstance(evidence, Evidence):
        return evidence.as_dict()
    return dict(evidence)


def _check_evidence(net: BayesianNetwork, assignments: Mapping[str, Union[str, float]]):
    for name, value in assignments.items():
        if not net.has_variable(name):
            raise UnknownVariable(name)
        var = net.variable(name)
        if var.is_discrete:
            if not isinstance(value, str) or value not in var.states:
                raise UnknownState(name, value)
        else:
            if isinstance(value, str) or not math.isfinite(float(value)):
                raise UnknownState(name, value)


def _check_query(net: BayesianNetwork, query: Sequence[str]):
    for name in query:
        if not net.has_variable(name):
            raise UnknownVariable(name)


# --------------------------------------------------------------------------
# Factors


class Factor:
    """A nonnegative table over a tuple of discrete variables."""

    __slots__ = ("vars", "values")

    def __init__(self, vars: tuple[str, ...], values: np.ndarray):
        self.vars = vars
        self.values = values

    def __mul__(self, other: "Factor") -> "Factor":
        uvars = self.vars + tuple(v for v in other.vars if v not in self.vars)
        return Factor(uvars, _aligned(self, uvars) * _aligned(other, uvars))

    def sum_out(self, var: str) -> "Factor":
        axis = self.vars.index(var)
        return Factor(
            self.vars[:axis] + self.vars[axis + 1 :], self.values.sum(axis=axis)
        )

    def total(self) -> float:
        return float(self.values.sum())


def _aligned(factor: Factor, uvars: tuple[str, ...]) -> np.ndarray:
    """View of the factor broadcastable over the union variable order."""
    missing = len(uvars) - factor.values.ndim
    arr = factor.values.reshape(factor.values.shape + (1,) * missing)
    dest = [uvars.index(v) for v in factor.vars]
    return np.moveaxis(arr, range(len(factor.vars)), dest)


def _cpt_factor(net: BayesianNetwork, name: str) -> Factor:
    cpd = net.cpds[name]
    assert isinstance(cpd, DiscreteTable)
    vars = cpd.parents + (name,)
    shape = tuple(len(net.states(v)) for v in vars)
    values = np.empty(shape)
    domains = [net.states(p) for p in cpd.parents]
    for cfg, row in cpd.rows.items():
        idx = tuple(domains[i].index(s) for i, s in enumerate(cfg))
        values[idx] = row
    return Factor(vars, values)


def _reduce_factor(factor: Factor, var: str, state_idx: int) -> Factor:
    axis = factor.vars.index(var)
    return Factor(
        factor.vars[:axis] + factor.vars[axis + 1 :],
        np.take(factor.values, state_idx, axis=axis),
    )


def _min_degree_order(factors: list[Factor], eliminate: set[str]) -> list[str]:
    """Min-degree elimination order with lexicographic tie-breaking."""
    neighbors: dict[str, set[str]] = {v: set() for v in eliminate}
    cliques = [set(f.vars) for f in factors]
    order = []
    remaining = set(eliminate)
    while remaining:
        for clique in cliques:
            for v in clique & remaining:
                neighbors[v] |= clique - {v}
        best = min(remaining, key=lambda v: (len(neighbors[v] & remaining), v))
        order.append(best)
        merged = neighbors[best] | {best}
        cliques = [c for c in cliques if best not in c] + [merged - {best}]
        remaining.discard(best)
        neighbors = {v: set() for v in remaining}
    return order


def _run_elimination(factors: list[Factor], order: Iterable[str]) -> list[Factor]:
    factors = list(factors)
    for var in order:
        touching = [f for f in factors if var in f.vars]
        if not touching:
            continue
        product = touching[0]
        for f in touching[1:]:
            product = product * f
        factors = [f for f in factors if var not in f.vars]
        factors.append(product.sum_out(var))
    return factors


def _multiply_all(factors: list[Factor]) -> Factor:
    product = Factor((), np.array(1.0))
    for f in factors:
        product = product * f
    return product


def _evidence_reduced_factors(
    net: BayesianNetwork, assignments: Mapping[str, Union[str, float]]
) -> list[Factor]:
    factors = []
    for var in net.variables:
        if not var.is_discrete:
            continue
        factor = _cpt_factor(net, var.name)
        for ev_name, ev_value in assignments.items():
            if ev_name in factor.vars and isinstance(ev_value, str):
                idx = net.states(ev_name).index(ev_value)
                factor = _reduce_factor(factor, ev_name, idx)
        factors.append(factor)
    return factors


def _joint_factor(
    factors: list[Factor],
    keep: tuple[str, ...],
    elimination_order: Sequence[str] | None = None,
) -> Factor:
    """Unnormalized joint factor over ``keep`` after eliminating the rest."""
    eliminate = {v for f in factors for v in f.vars} - set(keep)
    if elimination_order is not None:
        order = [v for v in elimination_order if v in eliminate]
        if set(order) != eliminate:
            raise ValueError("elimination order must cover the eliminable variables")
    else:
        order = _min_degree_order(factors, eliminate)
    remaining = _run_elimination(factors, order)
    product = _multiply_all(remaining)
    # every kept variable appears in its own CPT factor, so the product's
    # variables are exactly `keep`, possibly permuted
    dest = tuple(keep)
    return Factor(dest, np.asarray(_aligned(product, dest)))


def eliminate(
    net: BayesianNetwork,
    evidence,
    query: Sequence[str],
    *,
    elimination_order: Sequence[str] | None = None,
) -> Marginals:
    """Exact posterior marginals on an all-discrete network.

    Evidence on a queried variable yields the expected point-mass posterior.
    """
    if not net.is_discrete_network():
        raise ContinuousVariablesPresent(
            "eliminate needs an all-discrete network; use infer_clg_leaf or gibbs_query"
        )
    assignments = _as_assignments(evidence)
    _check_evidence(net, assignments)
    _check_query(net, query)
    factors = _evidence_reduced_factors(net, assignments)
    return _posteriors_from_factors(net, factors, assignments, query, elimination_order)


def _posteriors_from_factors(
    net, factors, assignments, query, elimination_order=None
) -> Marginals:
    scalar = _joint_factor(factors, (), elimination_order)
    mass = scalar.total()
    if not mass > ZERO_EVIDENCE_MASS:
        raise ZeroProbabilityEvidence(f"evidence has probability {mass!r}")
    result: Marginals = {}
    for name in query:
        states = net.states(name)
        if name in assignments:
            probs = tuple(1.0 if s == assignments[name] else 0.0 for s in states)
            result[name] = Categorical(states, probs)
            continue
        marginal = _joint_factor(factors, (name,), elimination_order)
        vec = np.asarray(marginal.values, dtype=float)
        total = vec.sum()
        if not total > ZERO_EVIDENCE_MASS:
            raise ZeroProbabilityEvidence(f"evidence has probability {total!r}")
        vec = vec / total
        result[name] = Categorical(states, tuple(float(p) for p in vec))
    return result


def joint_query(
    net: BayesianNetwork, evidence, names: Sequence[str]
) -> tuple[tuple[str, ...], np.ndarray]:
    """Normalized joint posterior table over ``names`` (all discrete)."""
    assignments = _as_assignments(evidence)
    _check_evidence(net, assignments)
    _check_query(net, names)
    factors = _evidence_reduced_factors(net, assignments)
    return _soft_joint_query(net, factors, assignments, names)


def _soft_joint_query(net, factors, assignments, names):
    keep = tuple(n for n in names if n not in assignments)
    joint = _joint_factor(factors, keep)
    values = np.asarray(joint.values, dtype=float)
    mass = values.sum()
    if not mass > ZERO_EVIDENCE_MASS:
        raise ZeroProbabilityEvidence(f"evidence has probability {mass!r}")
    values = values / mass
    # reinstate evidence variables as point-mass axes, in requested order
    full_shape = []
    index_parts = []
    for n in names:
        states = net.states(n)
        full_shape.append(len(states))
        if n in assignments:
            index_parts.append(states.index(assignments[n]))
        else:
            index_parts.append(None)
    out = np.zeros(full_shape)
    moving = [i for i, part in enumerate(index_parts) if part is None]
    src = values
    if moving:
        dest_idx = [slice(None)] * len(names)
        for i, part in enumerate(index_parts):
            if part is not None:
                dest_idx[i] = part
        # src axes follow `keep`, which is names-order filtered; same order
        out[tuple(dest_idx)] = src
    else:
        idx = tuple(index_parts)
        out[idx] = float(src)
    return tuple(names), out


# --------------------------------------------------------------------------
# Exact hybrid inference when continuous variables are leaves


def infer_clg_leaf(net: BayesianNetwork, evidence, query: Sequence[str]) -> Marginals:
    """Exact posteriors on a hybrid network whose continuous variables are
    all leaves.

    Observed leaves act as Gaussian-density soft factors on their discrete
    parents; unobserved continuous queries come back as Gaussian mixtures.
    """
    assignments = _as_assignments(evidence)
    _check_evidence(net, assignments)
    _check_query(net, query)
    continuous = [v.name for v in net.variables if not v.is_discrete]
    for name in continuous:
        if net.children(name):
            raise NonLeafContinuousEvidence(
                f"continuous variable '{name}' has children; use gibbs_query"
            )

    factors = _evidence_reduced_factors(net, assignments)
    for name in continuous:
        if name not in assignments:
            continue
        x = float(assignments[name])
        cpd = net.cpds[name]
        factors.append(_soft_gaussian_factor(net, cpd, x, assignments))

    discrete_query = [q for q in query if net.variable(q).is_discrete]
    result = _posteriors_from_factors(net, factors, assignments, discrete_query)

    for q in query:
        if net.variable(q).is_discrete:
            continue
        if q in assignments:
            result[q] = GaussianMixture(((1.0, float(assignments[q]), 0.0),))
            continue
        cpd = net.cpds[q]
        parents = cpd.discrete_parents
        _names, table = _soft_joint_query(net, factors, assignments, parents)
        components = []
        domains = [net.states(p) for p in parents]
        for cfg in itertools.product(*domains):
            weight = float(table[tuple(domains[i].index(s) for i, s in enumerate(cfg))])
            if weight <= 0.0:
                continue
            row = cpd.rows[cfg]
            components.append((weight, row.intercept, row.variance))
        total = math.fsum(w for w, _m, _v in components)
        components = [(w / total, m, v) for w, m, v in components]
        result[q] = GaussianMixture(tuple(components))
    return {q: result[q] for q in query}


def _soft_gaussian_factor(net, cpd: ClgSpec, x: float, assignments) -> Factor:
    """Density of an observed CLG leaf as a factor over its discrete parents.

    Leaves have no continuous parents unless those are also observed; any
    observed continuous parent folds into the mean.
    """
    for p in cpd.continuous_parents:
        if p not in assignments:
            raise NonLeafContinuousEvidence(
                f"continuous parent '{p}' of an observed leaf is unobserved"
            )
    parents = cpd.discrete_parents
    domains = [net.states(p) for p in parents]
    shape = tuple(len(d) for d in domains)
    values = np.empty(shape)
    for cfg in itertools.product(*domains):
        mean = clg_mean(cpd, cfg, assignments)
        idx = tuple(domains[i].index(s) for i, s in enumerate(cfg))
        values[idx] = normal_pdf(x, mean, cpd.rows[cfg].variance)
    factor = Factor(parents, values)
    for ev_name, ev_value in assignments.items():
        if ev_name in factor.vars and isinstance(ev_value, str):
            factor = _reduce_factor(factor, ev_name, net.states(ev_name).index(ev_value))
    return factor


def posterior(net: BayesianNetwork, evidence, query: Sequence[str]) -> Marginals:
    """Exact posterior by the cheapest applicable method.

    Raises :class:`NonLeafContinuousEvidence` when no exact method applies
    (continuous variables with children); use :func:`gibbs_query` there.
    """
    if net.is_discrete_network():
        return eliminate(net, evidence, query)
    return infer_clg_leaf(net, evidence, query)


# --------------------------------------------------------------------------
# Datasets and forward sampling


@dataclass
class Dataset:
    """Complete-case data: one column per variable, no missing cells."""

    columns: tuple[str, ...]
    cells: dict[str, np.ndarray] = field(repr=False)

    @property
    def n_rows(self) -> int:
        if not self.columns:
            return 0
        return len(self.cells[self.columns[0]])

    def is_continuous(self, column: str) -> bool:
        return self.cells[column].dtype.kind == "f"

    def row(self, i: int) -> dict[str, Union[str, float]]:
        return {
            c: (float(self.cells[c][i]) if self.is_continuous(c) else str(self.cells[c][i]))
            for c in self.columns
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            self.write_csv(handle)

    def write_csv(self, handle) -> None:
        writer = csv.writer(handle)
        writer.writerow(self.columns)
        cols = [self.cells[c] for c in self.columns]
        continuous = [self.is_continuous(c) for c in self.columns]
        for i in range(self.n_rows):
            writer.writerow(
                [repr(float(col[i])) if cont else str(col[i]) for col, cont in zip(cols, continuous)]
            )

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        if hasattr(path, "read"):
            return cls._read_csv(path)
        with open(path, "r", newline="", encoding="utf-8") as handle:
            return cls._read_csv(handle)

    @classmethod
    def from_csv_text(cls, text: str) -> "Dataset":
        return cls._read_csv(io.StringIO(text))

    @classmethod
    def _read_csv(cls, handle) -> "Dataset":
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataDomainError("CSV file has no header row")
        columns = tuple(h.strip() for h in header)
        raw: list[list[str]] = [[] for _ in columns]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise DataDomainError(f"row {lineno} has {len(row)} cells, expected {len(columns)}")
            for i, cell in enumerate(row):
                cell = cell.strip()
                if not cell:
                    raise DataDomainError(f"row {lineno} has an empty cell (no missing data allowed)")
                raw[i].append(cell)
        cells: dict[str, np.ndarray] = {}
        for name, values in zip(columns, raw):
            numeric = all(_is_number(v) for v in values) and values
            if numeric:
                cells[name] = np.array([float(v) for v in values], dtype=float)
            else:
                cells[name] = np.array(values, dtype=object)
        return cls(columns, cells)


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def sample_forward(net: BayesianNetwork, n: int, seed: int | None = 0) -> Dataset:
    """Draw ``n`` i.i.d. rows from the joint by ancestral sampling."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return _sample_with_clamps(net, n, rng, {})[0]


def _sample_with_clamps(
    net: BayesianNetwork,
    n: int,
    rng: np.random.Generator,
    clamps: Mapping[str, np.ndarray],
) -> tuple[Dataset, np.ndarray]:
    """Ancestral sampling with some columns pinned to given values.

    Returns the dataset plus, per row, the log-probability contribution of
    the clamped discrete variables (``-inf`` marks rows whose clamped values
    are impossible).  Clamped variables must form an ancestral set for the
    result to be a draw from the conditional distribution.
    """
    cells: dict[str, np.ndarray] = {}
    codes: dict[str, np.ndarray] = {}
    clamp_logp = np.zeros(n)
    for name in net.topological_order():
        var = net.variable(name)
        cpd = net.cpds[name]
        if var.is_discrete:
            assert isinstance(cpd, DiscreteTable)
            domains = [net.states(p) for p in cpd.parents]
            n_states = len(var.states)
            rows = np.empty(tuple(len(d) for d in domains) + (n_states,))
            for cfg, row in cpd.rows.items():
                rows[tuple(domains[i].index(s) for i, s in enumerate(cfg))] = row
            rows = rows.reshape(-1, n_states)
            cfg_idx = np.zeros(n, dtype=np.int64)
            for p, dom in zip(cpd.parents, domains):
                cfg_idx = cfg_idx * len(dom) + codes[p]
            probs = rows[cfg_idx]
            if name in clamps:
                state_index = {s: i for i, s in enumerate(var.states)}
                code = np.array([state_index[s] for s in clamps[name]], dtype=np.int64)
                p_here = probs[np.arange(n), code]
                with np.errstate(divide="ignore"):
                    clamp_logp += np.where(p_here > 0.0, np.log(np.maximum(p_here, 1e-300)), -np.inf)
            else:
                u = rng.random(n)
                code = np.minimum(
                    (probs.cumsum(axis=1) < u[:, None]).sum(axis=1), n_states - 1
                )
            codes[name] = code
            cells[name] = np.array(var.states, dtype=object)[code]
        else:
            assert isinstance(cpd, ClgSpec)
            domains = [net.states(p) for p in cpd.discrete_parents]
            n_cfg = int(np.prod([len(d) for d in domains])) if domains else 1
            means = np.empty(n_cfg)
            sds = np.empty(n_cfg)
            coefs = np.empty((n_cfg, len(cpd.continuous_parents)))
            for cfg, row in cpd.rows.items():
                flat = 0
                for i, s in enumerate(cfg):
                    flat = flat * len(domains[i]) + domains[i].index(s)
                means[flat] = row.intercept
                sds[flat] = math.sqrt(row.variance)
                coefs[flat] = row.coefficients
            cfg_idx = np.zeros(n, dtype=np.int64)
            for p, dom in zip(cpd.discrete_parents, domains):
                cfg_idx = cfg_idx * len(dom) + codes[p]
            mean = means[cfg_idx]
            for j, p in enumerate(cpd.continuous_parents):
                mean = mean + coefs[cfg_idx, j] * cells[p].astype(float)
            if name in clamps:
                values = np.asarray(clamps[name], dtype=float)
            else:
                values = rng.normal(mean, sds[cfg_idx])
            cells[name] = values
    columns = tuple(net.names())
    ordered = {c: cells[c] for c in columns}
    return Dataset(columns, ordered), clamp_logp


# --------------------------------------------------------------------------
# Gibbs sampling

_INIT_RESTARTS = 100


class _GibbsState:
    """Mutable chain state plus the per-variable machinery for full
    conditionals."""

    def __init__(self, net: BayesianNetwork, assignments: Mapping[str, Union[str, float]]):
        self.net = net
        self.assignments = dict(assignments)
        self.free = [n for n in net.topological_order() if n not in assignments]
        self.children = {n: net.children(n) for n in net.names()}
        self.value: dict[str, Union[str, float]] = {}
        # conditional cache for variables whose Markov blanket is discrete or
        # evidence-pinned; keys are blanket value tuples
        self.blanket: dict[str, list[str]] = {}
        self.cacheable: dict[str, bool] = {}
        self.cache: dict[str, dict[tuple, np.ndarray]] = {}
        for name in self.free:
            blanket: list[str] = []
            for p in net.parents(name):
                blanket.append(p)
            for c in self.children[name]:
                blanket.append(c)
                for p in net.parents(c):
                    if p != name and p not in blanket:
                        blanket.append(p)
            self.blanket[name] = blanket
            self.cacheable[name] = net.variable(name).is_discrete and all(
                self.net.variable(b).is_discrete or b in assignments for b in blanket
            )
            self.cache[name] = {}

    def initialize(self, rng: np.random.Generator) -> bool:
        data, _ = _sample_with_clamps(
            self.net,
            1,
            rng,
            {k: np.array([v], dtype=object if isinstance(v, str) else float) for k, v in self.assignments.items()},
        )
        self.value = data.row(0)
        for k, v in self.assignments.items():
            self.value[k] = v
        return log_joint_probability(self.net, self.value) > -math.inf

    def sweep(self, rng: np.random.Generator):
        for name in self.free:
            var = self.net.variable(name)
            if var.is_discrete:
                probs = self._discrete_conditional(name)
                u = rng.random()
                code = int(np.minimum((np.cumsum(probs) < u).sum(), len(var.states) - 1))
                self.value[name] = var.states[code]
            else:
                mean, variance = self._gaussian_conditional(name)
                self.value[name] = float(rng.normal(mean, math.sqrt(variance)))

    def _discrete_conditional(self, name: str) -> np.ndarray:
        if self.cacheable[name]:
            key = tuple(self.value[b] for b in self.blanket[name])
            cached = self.cache[name].get(key)
            if cached is not None:
                return cached
        var = self.net.variable(name)
        states = var.states
        cpd = self.net.cpds[name]
        cfg = tuple(str(self.value[p]) for p in cpd.parents)
        weights = np.array(cpd.rows[cfg], dtype=float)
        for child in self.children[name]:
            ccpd = self.net.cpds[child]
            cval = self.value[child]
            if isinstance(ccpd, DiscreteTable):
                cstates = self.net.states(child)
                c_idx = cstates.index(cval)
                for i, s in enumerate(states):
                    ccfg = tuple(
                        s if p == name else str(self.value[p]) for p in ccpd.parents
                    )
                    weights[i] *= ccpd.rows[ccfg][c_idx]
            else:
                x = float(cval)
                for i, s in enumerate(states):
                    ccfg = tuple(
                        s if p == name else str(self.value[p])
                        for p in ccpd.discrete_parents
                    )
                    row = ccpd.rows[ccfg]
                    mean = row.intercept
                    for p, coef in zip(ccpd.continuous_parents, row.coefficients):
                        mean += coef * float(self.value[p])
                    weights[i] *= normal_pdf(x, mean, row.variance)
        total = weights.sum()
        if total <= 0.0:
            # current state has positive probability, so this is numeric
            # underflow; keep the chain where it is
            weights = np.zeros(len(states))
            weights[states.index(self.value[name])] = 1.0
        else:
            weights = weights / total
        if self.cacheable[name] and len(self.cache[name]) < 4096:
            self.cache[name][key] = weights
        return weights

    def _gaussian_conditional(self, name: str) -> tuple[float, float]:
        cpd = self.net.cpds[name]
        cfg = tuple(str(self.value[p]) for p in cpd.discrete_parents)
        row = cpd.rows[cfg]
        prior_mean = row.intercept
        for p, coef in zip(cpd.continuous_parents, row.coefficients):
            prior_mean += coef * float(self.value[p])
        precision = 1.0 / row.variance
        weighted = prior_mean / row.variance
        for child in self.children[name]:
            ccpd = self.net.cpds[child]
            # discrete children of continuous parents are rejected at compile
            assert isinstance(ccpd, ClgSpec)
            ccfg = tuple(str(self.value[p]) for p in ccpd.discrete_parents)
            crow = ccpd.rows[ccfg]
            b = crow.coefficients[ccpd.continuous_parents.index(name)]
            if b == 0.0:
                continue
            rest = crow.intercept
            for p, coef in zip(ccpd.continuous_parents, crow.coefficients):
                if p != name:
                    rest += coef * float(self.value[p])
            residual = float(self.value[child]) - rest
            precision += b * b / crow.variance
            weighted += b * residual / crow.variance
        return weighted / precision, 1.0 / precision


def gibbs_query(
    net: BayesianNetwork,
    evidence,
    query: Sequence[str],
    n: int = 50000,
    burn_in: int = 5000,
    seed: int | None = 0,
) -> Marginals:
    """Approximate posteriors from ``n - burn_in`` post-burn-in sweeps.

    Deterministic given the seed.  Continuous marginals are summarized as a
    single moment-matched Gaussian component.
    """
    if n <= burn_in:
        raise ValueError("n must exceed burn_in")
    assignments = _as_assignments(evidence)
    _check_evidence(net, assignments)
    _check_query(net, query)
    rng = np.random.default_rng(seed)

    free = [v for v in net.names() if v not in assignments]
    if not free:
        if log_joint_probability(net, assignments) == -math.inf:
            raise ZeroProbabilityEvidence("evidence assigns a zero-probability state")
        return _point_marginals(net, assignments, query)

    state = _GibbsState(net, assignments)
    for _attempt in range(_INIT_RESTARTS):
        if state.initialize(rng):
            break
    else:
        raise ZeroProbabilityEvidence(
            f"no consistent initialization found in {_INIT_RESTARTS} restarts"
        )

    counts: dict[str, np.ndarray] = {}
    sums: dict[str, list[float]] = {}
    for q in query:
        if net.variable(q).is_discrete:
            counts[q] = np.zeros(len(net.states(q)))
        else:
            sums[q] = [0.0, 0.0]  # running sum, sum of squares
    kept = 0
    for sweep in range(n):
        state.sweep(rng)
        if sweep < burn_in:
            continue
        kept += 1
        for q in counts:
            counts[q][net.states(q).index(state.value[q])] += 1.0
        for q in sums:
            x = float(state.value[q])
            sums[q][0] += x
            sums[q][1] += x * x

    result: Marginals = {}
    for q in query:
        if q in assignments:
            result[q] = _point_marginals(net, assignments, [q])[q]
        elif q in counts:
            probs = counts[q] / kept
            result[q] = Categorical(net.states(q), tuple(float(p) for p in probs))
        else:
            mean = sums[q][0] / kept
            var = max(sums[q][1] / kept - mean * mean, 0.0)
            result[q] = GaussianMixture(((1.0, mean, var),))
    return result


def _point_marginals(net, assignments, query) -> Marginals:
    result: Marginals = {}
    for q in query:
        var = net.variable(q)
        if var.is_discrete:
            probs = tuple(1.0 if s == assignments[q] else 0.0 for s in var.states)
            result[q] = Categorical(var.states, probs)
        else:
            result[q] = GaussianMixture(((1.0, float(assignments[q]), 0.0),))
    return result


# --------------------------------------------------------------------------
# Brute-force oracle (kept simple and independent of the factor machinery)


def enumerate_assignments(net: BayesianNetwork) -> Iterable[dict[str, str]]:
    names = net.names()
    domains = [net.states(n) for n in names]
    for combo in itertools.product(*domains):
        yield dict(zip(names, combo))
