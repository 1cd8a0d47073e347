"""Merging two networks into one joint model.

Three methods:

* ``disjoint`` — no shared variables: the union is kept as one model whose
  two subnets are explicitly independent.
* ``optimize`` — all-discrete networks sharing variables: find the joint
  ``q`` over the union product space minimizing
  ``D(q|V1 || P1) + D(q|V2 || P2)`` subject to the probability simplex,
  where ``q|Vi`` is ``q`` marginalized onto source ``i``'s variables.  The
  optimizer is exponentiated gradient (mirror descent on the simplex) with a
  best-of-candidates step search, so iterates are feasible by construction.
  The result is re-expressed as CPDs on the union-of-arcs structure.
* ``simulate`` — works for hybrid models too: repeatedly pick a source
  network at random, sample it fully, sample the other network conditioned
  on the realized shared values, and fit the union-of-arcs structure to the
  pooled sample sets by parameter learning.

In every successful merge the variable set and the arc set of the result are
the unions of the sources'.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import (
    BayesianNetwork,
    ClgSpec,
    Cpd,
    DiscreteTable,
    Variable,
    build_network,
    _find_cycle,
)
from .errors import (
    ContinuousVariablesPresent,
    CycleInUnion,
    DomainMismatch,
    EmptySharedSet,
    EmptySupport,
    NotConverged,
    SharedVariablesPresent,
    StateSpaceTooLarge,
    ZeroProbabilityEvidence,
)
from .inference import Dataset, _GibbsState, _sample_with_clamps
from .learning import fit_parameters

_TINY = 1e-300
_GIBBS_SWEEPS = 30
_GIBBS_INIT_RESTARTS = 20


@dataclass
class MergeRequest:
    bn1: BayesianNetwork
    bn2: BayesianNetwork
    method: str = "optimize"  # disjoint | optimize | simulate
    tolerance: float = 1e-6
    max_iterations: int = 10000
    sample_count: int = 50000
    seed: int = 0
    max_states: int = 2**22


@dataclass
class MergeReport:
    shared: tuple[str, ...]
    method: str
    objective: float | None = None
    iterations: int | None = None
    sample_count: int | None = None
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "shared": list(self.shared),
            "method": self.method,
            "objective": self.objective,
            "iterations": self.iterations,
            "sample_count": self.sample_count,
            "warnings": list(self.warnings),
        }


# --------------------------------------------------------------------------
# Shared structure helpers


def shared_variables(bn1: BayesianNetwork, bn2: BayesianNetwork) -> set[str]:
    """Names present in both networks; domains must be compatible."""
    names2 = {v.name: v for v in bn2.variables}
    shared = set()
    for v in bn1.variables:
        other = names2.get(v.name)
        if other is None:
            continue
        if v.is_discrete != other.is_discrete:
            raise DomainMismatch(v.name)
        if v.is_discrete and set(v.states) != set(other.states):
            raise DomainMismatch(v.name)
        shared.add(v.name)
    return shared


def _union_variables(bn1, bn2) -> tuple[Variable, ...]:
    seen = {v.name for v in bn1.variables}
    return bn1.variables + tuple(v for v in bn2.variables if v.name not in seen)


def _union_parent_map(bn1, bn2, union_names: Sequence[str]) -> dict[str, tuple[str, ...]]:
    arcs = set(bn1.arcs) | set(bn2.arcs)
    parent_map = {}
    for name in union_names:
        firsts: list[str] = []
        for net in (bn1, bn2):
            if net.has_variable(name):
                for p in net.parents(name):
                    if p not in firsts:
                        firsts.append(p)
        assert set(firsts) == {p for (p, c) in arcs if c == name}
        parent_map[name] = tuple(firsts)
    return parent_map


def _check_union_acyclic(parent_map: Mapping[str, Sequence[str]]):
    cycle = _find_cycle(parent_map)
    if cycle:
        raise CycleInUnion(cycle)


# --------------------------------------------------------------------------
# Disjoint merge


def merge_disjoint(bn1: BayesianNetwork, bn2: BayesianNetwork) -> tuple[BayesianNetwork, MergeReport]:
    """Union of two networks with no variables in common."""
    shared = shared_variables(bn1, bn2)
    if shared:
        raise SharedVariablesPresent(
            "networks share variables: " + ", ".join(sorted(shared))
        )
    variables = _union_variables(bn1, bn2)
    cpds: dict[str, Cpd] = dict(bn1.cpds)
    cpds.update(bn2.cpds)
    net = build_network(variables, cpds)
    report = MergeReport(
        shared=(),
        method="disjoint",
        warnings=[
            "no shared variables: the merged model keeps both subnets, marking them mutually independent"
        ],
    )
    return net, report


# --------------------------------------------------------------------------
# Optimization merge


def _dense_joint(net: BayesianNetwork, state_order: Mapping[str, tuple[str, ...]]) -> np.ndarray:
    """Joint array over ``net``'s variables (in ``net`` order) whose axes use
    the given state orderings."""
    names = net.names()
    axis = {n: i for i, n in enumerate(names)}
    shape = tuple(len(state_order[n]) for n in names)
    joint = np.ones(shape)
    for name in names:
        cpd = net.cpds[name]
        assert isinstance(cpd, DiscreteTable)
        fvars = cpd.parents + (name,)
        fshape = tuple(len(state_order[v]) for v in fvars)
        values = np.empty(fshape)
        for cfg, row in cpd.rows.items():
            idx = tuple(state_order[p].index(s) for p, s in zip(cpd.parents, cfg))
            row_order = [net.states(name).index(s) for s in state_order[name]]
            values[idx] = np.array(row)[row_order]
        arr = values.reshape(fshape + (1,) * (len(names) - len(fvars)))
        arr = np.moveaxis(arr, range(len(fvars)), [axis[v] for v in fvars])
        joint = joint * arr
    return joint


def _marginal_keepdims(q: np.ndarray, keep_axes: set[int]) -> np.ndarray:
    drop = tuple(i for i in range(q.ndim) if i not in keep_axes)
    return q.sum(axis=drop, keepdims=True) if drop else q


def _kl(qm: np.ndarray, pk: np.ndarray) -> float:
    """``sum qm * log(qm / pk)`` with ``0 log 0 = 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(
            qm > 0.0,
            qm * (np.log(np.maximum(qm, _TINY)) - np.log(np.maximum(pk, _TINY))),
            0.0,
        )
    return float(terms.sum())


def merge_optimize(
    req: MergeRequest,
    on_iterate: Callable[[np.ndarray], None] | None = None,
) -> tuple[BayesianNetwork, MergeReport]:
    """KL-optimal joint over the union product space, re-factorized onto the
    union-of-arcs structure."""
    bn1, bn2 = req.bn1, req.bn2
    shared = shared_variables(bn1, bn2)
    if not shared:
        raise EmptySharedSet("optimize needs shared variables; use merge_disjoint")
    if not (bn1.is_discrete_network() and bn2.is_discrete_network()):
        raise ContinuousVariablesPresent(
            "optimize works on all-discrete networks; use merge_simulate"
        )
    variables = _union_variables(bn1, bn2)
    names = [v.name for v in variables]
    parent_map = _union_parent_map(bn1, bn2, names)
    _check_union_acyclic(parent_map)

    total_states = 1
    for v in variables:
        total_states *= len(v.states)
    if total_states > req.max_states:
        raise StateSpaceTooLarge(total_states, req.max_states)

    state_order = {v.name: v.states for v in variables}
    axis = {n: i for i, n in enumerate(names)}
    ndim = len(names)

    def embed(net: BayesianNetwork) -> np.ndarray:
        dense = _dense_joint(net, state_order)
        src_axes = [axis[n] for n in net.names()]
        order = np.argsort(src_axes)
        dense = np.transpose(dense, order)
        out_shape = [1] * ndim
        for i, pos in enumerate(sorted(src_axes)):
            out_shape[pos] = dense.shape[i]
        return dense.reshape(out_shape)

    p1k = embed(bn1)
    p2k = embed(bn2)
    axes1 = {axis[n] for n in bn1.names()}
    axes2 = {axis[n] for n in bn2.names()}

    support = np.broadcast_to(p1k > 0.0, tuple(len(v.states) for v in variables)) & np.broadcast_to(
        p2k > 0.0, tuple(len(v.states) for v in variables)
    )
    if not support.any():
        raise EmptySupport("the sources give zero probability to every joint state")

    q = support.astype(float)
    q /= q.sum()

    def objective(q_arr: np.ndarray) -> float:
        return _kl(_marginal_keepdims(q_arr, axes1), p1k) + _kl(
            _marginal_keepdims(q_arr, axes2), p2k
        )

    current = objective(q)
    if on_iterate is not None:
        on_iterate(q.copy())

    eta = 1.0
    iterations = 0
    improvement = math.inf
    converged = False
    for _ in range(req.max_iterations):
        qm1 = _marginal_keepdims(q, axes1)
        qm2 = _marginal_keepdims(q, axes2)
        with np.errstate(divide="ignore"):
            g = (
                np.log(np.maximum(qm1, _TINY))
                - np.log(np.maximum(p1k, _TINY))
                + np.log(np.maximum(qm2, _TINY))
                - np.log(np.maximum(p2k, _TINY))
            )
        g = np.broadcast_to(g, q.shape)
        center = float((q * g).sum())

        best_q = None
        best_f = current
        best_eta = eta
        for scale in (4.0, 2.0, 1.0, 0.5, 0.25):
            e = min(max(eta * scale, 1e-9), 1e3)
            exponent = np.clip(-e * (g - center), -600.0, 600.0)
            cand = np.where(support, q * np.exp(exponent), 0.0)
            total = cand.sum()
            if not total > 0.0:
                continue
            cand = cand / total
            f = objective(cand)
            if f < best_f:
                best_f = f
                best_q = cand
                best_eta = e
        if best_q is None:
            converged = True
            improvement = 0.0
            break
        improvement = current - best_f
        q = best_q
        current = best_f
        eta = best_eta
        iterations += 1
        if on_iterate is not None:
            on_iterate(q.copy())
        if improvement < req.tolerance:
            converged = True
            break
    if not converged:
        raise NotConverged(iterations, improvement, req.tolerance)

    cpds, warnings = rebuild_cpds(q, variables, parent_map)
    net = build_network(variables, cpds)
    report = MergeReport(
        shared=tuple(sorted(shared)),
        method="optimize",
        objective=current,
        iterations=iterations,
        warnings=warnings,
    )
    return net, report


def rebuild_cpds(
    joint: np.ndarray,
    variables: Sequence[Variable],
    parents: Mapping[str, Sequence[str]],
) -> tuple[dict[str, Cpd], list[str]]:
    """Condition a dense joint onto a DAG: ``CPD(X) = q(X | Pa(X))``.

    ``joint`` axes follow ``variables`` order.  Parent configurations with
    zero mass get uniform rows, reported in the warnings.
    """
    names = [v.name for v in variables]
    axis = {n: i for i, n in enumerate(names)}
    by_name = {v.name: v for v in variables}
    warnings: list[str] = []
    cpds: dict[str, Cpd] = {}
    for v in variables:
        ps = tuple(parents.get(v.name, ()))
        keep = [axis[p] for p in ps] + [axis[v.name]]
        drop = tuple(i for i in range(joint.ndim) if i not in keep)
        table = joint.sum(axis=drop) if drop else joint
        # table axes are in ascending union order; rearrange to (ps..., var)
        current = sorted(keep)
        table = np.moveaxis(table, [current.index(a) for a in keep], range(len(keep)))
        denom = table.sum(axis=-1, keepdims=True)
        k = len(v.states)
        with np.errstate(divide="ignore", invalid="ignore"):
            rows_arr = np.where(denom > 0.0, table / np.maximum(denom, _TINY), 1.0 / k)
        rows: dict[tuple[str, ...], tuple[float, ...]] = {}
        domains = [by_name[p].states for p in ps]
        for idx in itertools.product(*(range(len(d)) for d in domains)):
            cfg = tuple(domains[i][j] for i, j in enumerate(idx))
            row = rows_arr[idx]
            total = row.sum()
            if not denom[idx + (0,)] > 0.0:
                warnings.append(
                    f"zero-mass parent configuration {cfg!r} for '{v.name}': using a uniform row"
                )
            rows[cfg] = tuple(float(p) for p in (row / total))
        cpds[v.name] = DiscreteTable(ps, rows)
    return cpds, warnings


# --------------------------------------------------------------------------
# Simulation merge


def _is_ancestral(net: BayesianNetwork, names: set[str]) -> bool:
    return all(p in names for n in names for p in net.parents(n))


def _conditional_sample(
    target: BayesianNetwork,
    shared_cells: dict[str, np.ndarray],
    rng: np.random.Generator,
    shared: set[str],
) -> tuple[dict[str, np.ndarray] | None, np.ndarray]:
    """Sample the target network conditioned on shared values, row by row.

    Returns (cells for target-only variables, accept mask).  Forward
    sampling with clamps is exact when the shared set is ancestral in the
    target; otherwise each row runs a short Gibbs chain.
    """
    n = len(next(iter(shared_cells.values())))
    target_only = [v.name for v in target.variables if v.name not in shared]
    if _is_ancestral(target, shared):
        data, clamp_logp = _sample_with_clamps(target, n, rng, shared_cells)
        ok = clamp_logp > -math.inf
        return {name: data.cells[name] for name in target_only}, ok

    cells = {
        name: (
            np.empty(n, dtype=object)
            if target.variable(name).is_discrete
            else np.empty(n, dtype=float)
        )
        for name in target_only
    }
    ok = np.ones(n, dtype=bool)
    for i in range(n):
        evidence = {
            name: (col[i] if col.dtype == object else float(col[i]))
            for name, col in shared_cells.items()
        }
        state = _GibbsState(target, evidence)
        initialized = False
        for _attempt in range(_GIBBS_INIT_RESTARTS):
            if state.initialize(rng):
                initialized = True
                break
        if not initialized:
            ok[i] = False
            continue
        for _sweep in range(_GIBBS_SWEEPS):
            state.sweep(rng)
        for name in target_only:
            cells[name][i] = state.value[name]
    return cells, ok


def merge_simulate(req: MergeRequest) -> tuple[BayesianNetwork, MergeReport]:
    """Pool paired samples from both networks and refit the union structure."""
    bn1, bn2 = req.bn1, req.bn2
    shared = shared_variables(bn1, bn2)
    if not shared:
        raise EmptySharedSet("simulate needs shared variables; use merge_disjoint")
    variables = _union_variables(bn1, bn2)
    names = [v.name for v in variables]
    parent_map = _union_parent_map(bn1, bn2, names)
    _check_union_acyclic(parent_map)
    if req.sample_count < 1:
        raise ValueError("sample_count must be >= 1")

    rng = np.random.default_rng(req.seed)
    picks = rng.integers(0, 2, size=req.sample_count)
    quotas = [int((picks == 0).sum()), int((picks == 1).sum())]

    pooled: dict[str, list[np.ndarray]] = {name: [] for name in names}
    total_rejected = 0
    total_attempted = 0
    for which, (source, target) in enumerate(((bn1, bn2), (bn2, bn1))):
        remaining = quotas[which]
        while remaining > 0:
            total_attempted += remaining
            src_data, _ = _sample_with_clamps(source, remaining, rng, {})
            shared_cells = {s: src_data.cells[s] for s in shared}
            target_cells, ok = _conditional_sample(target, shared_cells, rng, shared)
            rejected = int((~ok).sum())
            total_rejected += rejected
            if total_rejected > 0 and total_attempted and (
                total_rejected / total_attempted > 0.5 and total_attempted >= 2 * req.sample_count
            ):
                raise ZeroProbabilityEvidence(
                    "more than half of the sampled shared values are impossible under the other network"
                )
            for name in names:
                column = src_data.cells[name] if name in src_data.cells else target_cells[name]
                pooled[name].append(column[ok])
            remaining = rejected

    cells = {name: np.concatenate(chunks) for name, chunks in pooled.items()}
    data = Dataset(tuple(names), cells)
    net = fit_parameters(variables, parent_map, data, alpha=1.0)
    warnings = []
    if total_rejected:
        warnings.append(
            f"{total_rejected} sample row(s) rejected for zero-probability shared values and redrawn"
        )
    report = MergeReport(
        shared=tuple(sorted(shared)),
        method="simulate",
        sample_count=req.sample_count,
        warnings=warnings,
    )
    return net, report


# --------------------------------------------------------------------------
# Dispatcher


def merge(req: MergeRequest) -> tuple[BayesianNetwork, MergeReport]:
    """Run the requested method, falling back to a disjoint union (with a
    warning) when optimize/simulate is asked for but nothing is shared."""
    method = req.method.lower()
    if method == "disjoint":
        return merge_disjoint(req.bn1, req.bn2)
    if method not in ("optimize", "simulate"):
        raise ValueError(f"unknown merge method {req.method!r}")
    shared = shared_variables(req.bn1, req.bn2)
    if not shared:
        net, report = merge_disjoint(req.bn1, req.bn2)
        report.warnings.append(
            f"method '{method}' requested but the networks share no variables; fell back to a disjoint union"
        )
        return net, report
    if method == "optimize":
        return merge_optimize(req)
    return merge_simulate(req)
