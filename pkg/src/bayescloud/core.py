"""Compiled network representation and the joint factorization.

A :class:`BayesianNetwork` is an immutable DAG of variables with one local
distribution per variable: a :class:`DiscreteTable` keyed by parent
configuration, or a :class:`ClgSpec` whose rows are conditional linear
Gaussians (intercept, coefficients over continuous parents, variance) keyed
by the configuration of the discrete parents.

The joint over a total assignment is the product of local factors:
probabilities for discrete variables, Gaussian densities for continuous
ones.  ``log_joint_probability`` is the log-space variant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from . import bnscript
from .bnscript import (
    CONTINUOUS,
    Conditional,
    Discrete,
    GaussianLiteral,
    Guard,
    ModelAst,
    TableLiteral,
)
from .errors import (
    CompileError,
    CycleError,
    DuplicateNode,
    IncompleteAssignment,
    IncompleteTable,
    InvalidDistribution,
    InvalidDomain,
    ProbabilityOutOfRange,
    RowNotNormalized,
    UnknownParent,
    UnknownParentState,
    UnknownState,
)

ROW_SUM_TOLERANCE = 1e-9

Config = tuple[str, ...]


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...] | None = None  # None means continuous

    @property
    def is_discrete(self) -> bool:
        return self.states is not None


class ClgRow(NamedTuple):
    intercept: float
    coefficients: tuple[float, ...]  # aligned with ClgSpec.continuous_parents
    variance: float


@dataclass(frozen=True)
class DiscreteTable:
    parents: tuple[str, ...]
    rows: Mapping[Config, tuple[float, ...]]


@dataclass(frozen=True)
class ClgSpec:
    discrete_parents: tuple[str, ...]
    continuous_parents: tuple[str, ...]
    rows: Mapping[Config, ClgRow]


Cpd = Union[DiscreteTable, ClgSpec]


def cpd_parents(cpd: Cpd) -> tuple[str, ...]:
    if isinstance(cpd, DiscreteTable):
        return cpd.parents
    return cpd.discrete_parents + cpd.continuous_parents


@dataclass(frozen=True)
class BayesianNetwork:
    variables: tuple[Variable, ...]
    arcs: frozenset[tuple[str, str]]
    cpds: Mapping[str, Cpd]

    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def has_variable(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)

    def states(self, name: str) -> tuple[str, ...]:
        states = self.variable(name).states
        if states is None:
            raise KeyError(f"{name} is continuous")
        return states

    def parents(self, name: str) -> tuple[str, ...]:
        return cpd_parents(self.cpds[name])

    def children(self, name: str) -> list[str]:
        return [v.name for v in self.variables if name in self.parents(v.name)]

    def is_discrete_network(self) -> bool:
        return all(v.is_discrete for v in self.variables)

    def topological_order(self) -> list[str]:
        """Declaration-order-stable topological order."""
        placed: set[str] = set()
        order: list[str] = []
        names = self.names()
        while len(order) < len(names):
            progressed = False
            for name in names:
                if name in placed:
                    continue
                if all(p in placed for p in self.parents(name)):
                    placed.add(name)
                    order.append(name)
                    progressed = True
            if not progressed:
                raise CycleError(_find_cycle({n: self.parents(n) for n in names}))
        return order


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Finding:
    code: str
    variable: str | None
    message: str
    data: object = None


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(f"[{f.code}] {f.message}" for f in self.findings)


def _find_cycle(parent_map: Mapping[str, Sequence[str]]) -> list[str]:
    """Return one directed cycle (as a list of names, child->...->child)."""
    visiting: list[str] = []
    done: set[str] = set()

    def visit(node: str) -> list[str] | None:
        if node in visiting:
            i = visiting.index(node)
            return visiting[i:]
        if node in done:
            return None
        visiting.append(node)
        for parent in parent_map.get(node, ()):
            found = visit(parent)
            if found is not None:
                return found
        visiting.pop()
        done.add(node)
        return None

    for name in parent_map:
        found = visit(name)
        if found is not None:
            return list(reversed(found))
    return []


def _enumerate_configs(parent_domains: Sequence[Sequence[str]]) -> Iterable[Config]:
    return itertools.product(*parent_domains)


def validate(net: BayesianNetwork) -> ValidationReport:
    """Audit a network against every structural invariant; never raises."""
    report = ValidationReport()
    add = report.findings.append

    seen: set[str] = set()
    by_name: dict[str, Variable] = {}
    for v in net.variables:
        if v.name in seen:
            add(Finding("duplicate_variable", v.name, f"variable '{v.name}' appears twice"))
        seen.add(v.name)
        by_name[v.name] = v
        if v.is_discrete:
            if len(v.states) < 2:
                add(Finding("invalid_domain", v.name, f"'{v.name}' needs at least 2 states"))
            if len(set(v.states)) != len(v.states):
                add(Finding("invalid_domain", v.name, f"'{v.name}' has duplicate states"))

    for name in by_name:
        if name not in net.cpds:
            add(Finding("missing_cpd", name, f"'{name}' has no distribution"))
    for name in net.cpds:
        if name not in by_name:
            add(Finding("extra_cpd", name, f"distribution for undeclared variable '{name}'"))

    parent_map: dict[str, tuple[str, ...]] = {}
    for name, cpd in net.cpds.items():
        if name not in by_name:
            continue
        var = by_name[name]
        parents = cpd_parents(cpd)
        parent_map[name] = parents
        ok_parents = True
        for p in parents:
            if p not in by_name:
                add(Finding("unknown_parent", name, f"'{name}' references undefined '{p}'", p))
                ok_parents = False
        if not ok_parents:
            continue

        if isinstance(cpd, DiscreteTable):
            if not var.is_discrete:
                add(Finding("invalid_distribution", name, f"continuous '{name}' has a probability table"))
                continue
            bad_kind = False
            for p in cpd.parents:
                if not by_name[p].is_discrete:
                    add(
                        Finding(
                            "parent_kind",
                            name,
                            f"discrete '{name}' cannot condition on continuous '{p}'",
                            p,
                        )
                    )
                    bad_kind = True
            if bad_kind:
                continue
            _check_table(net, name, cpd, report)
        else:
            if var.is_discrete:
                add(Finding("invalid_distribution", name, f"discrete '{name}' has a Gaussian distribution"))
                continue
            bad_kind = False
            for p in cpd.discrete_parents:
                if not by_name[p].is_discrete:
                    add(Finding("parent_kind", name, f"'{name}' guards on continuous '{p}'", p))
                    bad_kind = True
            for p in cpd.continuous_parents:
                if by_name[p].is_discrete:
                    add(
                        Finding(
                            "parent_kind",
                            name,
                            f"linear term of '{name}' references discrete '{p}'",
                            p,
                        )
                    )
                    bad_kind = True
            if bad_kind:
                continue
            _check_clg(net, name, cpd, report)

    derived_arcs = frozenset(
        (p, child) for child, parents in parent_map.items() for p in parents
    )
    if derived_arcs != net.arcs:
        add(
            Finding(
                "arc_mismatch",
                None,
                "arc set does not equal the set of parents referenced by distributions",
                (sorted(net.arcs - derived_arcs), sorted(derived_arcs - net.arcs)),
            )
        )

    cycle = _find_cycle(parent_map)
    if cycle:
        add(Finding("cycle", None, "directed cycle: " + " -> ".join(cycle), cycle))
    return report


def _check_table(net, name, cpd: DiscreteTable, report):
    add = report.findings.append
    states = net.variable(name).states
    domains = [net.variable(p).states for p in cpd.parents]
    expected = set(_enumerate_configs(domains))
    for cfg in expected:
        if cfg not in cpd.rows:
            add(Finding("incomplete_table", name, f"'{name}' missing configuration {cfg!r}", cfg))
    for cfg, row in cpd.rows.items():
        if cfg not in expected:
            add(Finding("unknown_parent_state", name, f"'{name}' has a row for invalid configuration {cfg!r}", cfg))
            continue
        if len(row) != len(states):
            add(Finding("row_length", name, f"'{name}' row {cfg!r} has {len(row)} entries for {len(states)} states", cfg))
            continue
        bad = [p for p in row if p < 0.0 or p > 1.0]
        if bad:
            add(Finding("probability_out_of_range", name, f"'{name}' row {cfg!r} has probabilities outside [0, 1]", bad[0]))
            continue
        total = math.fsum(row)
        if abs(total - 1.0) > ROW_SUM_TOLERANCE:
            add(Finding("row_not_normalized", name, f"'{name}' row {cfg!r} sums to {total!r}", (cfg, total)))


def _check_clg(net, name, cpd: ClgSpec, report):
    add = report.findings.append
    domains = [net.variable(p).states for p in cpd.discrete_parents]
    expected = set(_enumerate_configs(domains))
    for cfg in expected:
        if cfg not in cpd.rows:
            add(Finding("incomplete_table", name, f"'{name}' missing configuration {cfg!r}", cfg))
    for cfg, row in cpd.rows.items():
        if cfg not in expected:
            add(Finding("unknown_parent_state", name, f"'{name}' has a row for invalid configuration {cfg!r}", cfg))
            continue
        if len(row.coefficients) != len(cpd.continuous_parents):
            add(Finding("coefficient_mismatch", name, f"'{name}' row {cfg!r} has a bad coefficient count", cfg))
        if not row.variance > 0.0:
            add(Finding("variance_not_positive", name, f"'{name}' row {cfg!r} has variance {row.variance!r}", (cfg, row.variance)))


_RAISERS = {
    "duplicate_variable": lambda f: DuplicateNode(f.variable),
    "invalid_domain": lambda f: InvalidDomain(f.message),
    "missing_cpd": lambda f: InvalidDistribution(f.message),
    "extra_cpd": lambda f: InvalidDistribution(f.message),
    "unknown_parent": lambda f: UnknownParent(f.variable, f.data),
    "parent_kind": lambda f: UnknownParentState(f.variable, f.data, None),
    "invalid_distribution": lambda f: InvalidDistribution(f.message),
    "incomplete_table": lambda f: IncompleteTable(f.variable, f.data),
    "unknown_parent_state": lambda f: UnknownParentState(f.variable, "?", str(f.data)),
    "row_length": lambda f: InvalidDistribution(f.message),
    "probability_out_of_range": lambda f: ProbabilityOutOfRange(f.data),
    "row_not_normalized": lambda f: RowNotNormalized(f.variable, f.data[0], f.data[1]),
    "coefficient_mismatch": lambda f: InvalidDistribution(f.message),
    "variance_not_positive": lambda f: InvalidDistribution(f.message),
    "arc_mismatch": lambda f: InvalidDistribution(f.message),
    "cycle": lambda f: CycleError(f.data),
}


def build_network(variables: Sequence[Variable], cpds: Mapping[str, Cpd]) -> BayesianNetwork:
    """Checked constructor: derives arcs from the distributions, renormalizes
    rows within tolerance, and raises a typed error on the first violation."""
    normalized: dict[str, Cpd] = {}
    for name, cpd in cpds.items():
        if isinstance(cpd, DiscreteTable):
            rows = {}
            for cfg, row in cpd.rows.items():
                total = math.fsum(row)
                if row and abs(total - 1.0) <= ROW_SUM_TOLERANCE and total > 0 and total != 1.0:
                    row = tuple(p / total for p in row)
                rows[cfg] = tuple(float(p) for p in row)
            normalized[name] = DiscreteTable(cpd.parents, rows)
        else:
            normalized[name] = cpd
    arcs = frozenset(
        (p, child) for child, cpd in normalized.items() for p in cpd_parents(cpd)
    )
    net = BayesianNetwork(tuple(variables), arcs, normalized)
    report = validate(net)
    for finding in report.findings:
        # cycles are reported last by validate but take precedence as the
        # most actionable diagnostic
        if finding.code == "cycle":
            raise _RAISERS["cycle"](finding)
    if report.findings:
        f = report.findings[0]
        raise _RAISERS.get(f.code, lambda f: CompileError(f.message))(f)
    return net


# --------------------------------------------------------------------------
# Compilation from an AST


def compile_model(ast: ModelAst) -> BayesianNetwork:
    """Compile a parsed script into a validated network.

    Arcs are derived from guard references and CLG linear terms.  Every
    discrete parent configuration must be covered by exactly one branch
    (first match wins; a final guard-less branch is a catch-all).
    """
    names = [n.name for n in ast.nodes]
    for i, name in enumerate(names):
        if name in names[:i]:
            raise DuplicateNode(name)
    defs = {n.name: n for n in ast.nodes}

    variables: list[Variable] = []
    for node in ast.nodes:
        if isinstance(node.domain, Discrete):
            if len(node.domain.states) < 2:
                raise InvalidDomain(f"'{node.name}' needs at least 2 states")
            if len(set(node.domain.states)) != len(node.domain.states):
                raise InvalidDomain(f"'{node.name}' has duplicate states")
            variables.append(Variable(node.name, tuple(node.domain.states)))
        else:
            variables.append(Variable(node.name))

    cpds: dict[str, Cpd] = {}
    for node in ast.nodes:
        cpds[node.name] = _compile_distribution(node, defs)
    return build_network(variables, cpds)


def _branches(dist) -> tuple[tuple[Guard | None, bnscript.Leaf], ...]:
    if isinstance(dist, Conditional):
        for _guard, leaf in dist.branches:
            if isinstance(leaf, Conditional):
                raise InvalidDistribution("nested conditionals are not supported")
        return dist.branches
    return ((None, dist),)


def _compile_distribution(node: bnscript.NodeDef, defs) -> Cpd:
    name = node.name
    branches = _branches(node.distribution)

    discrete_parents: list[str] = []
    continuous_parents: list[str] = []
    for guard, leaf in branches:
        if guard is not None:
            for parent, state in guard.tests:
                if parent not in defs:
                    raise UnknownParent(name, parent)
                pdomain = defs[parent].domain
                if not isinstance(pdomain, Discrete):
                    raise UnknownParentState(name, parent, state)
                if state not in pdomain.states:
                    raise UnknownParentState(name, parent, state)
                if parent not in discrete_parents:
                    discrete_parents.append(parent)
        if isinstance(leaf, GaussianLiteral):
            if isinstance(node.domain, Discrete):
                raise InvalidDistribution(f"discrete '{name}' has a Gaussian branch")
            for parent, _coef in leaf.terms:
                if parent not in defs:
                    raise UnknownParent(name, parent)
                if isinstance(defs[parent].domain, Discrete):
                    raise UnknownParentState(name, parent, None)
                if parent not in continuous_parents:
                    continuous_parents.append(parent)
        else:
            if not isinstance(node.domain, Discrete):
                raise InvalidDistribution(f"continuous '{name}' has a probability table")

    domains = [defs[p].domain.states for p in discrete_parents]
    rows_table: dict[Config, tuple[float, ...]] = {}
    rows_clg: dict[Config, ClgRow] = {}
    for cfg in _enumerate_configs(domains):
        bound = dict(zip(discrete_parents, cfg))
        leaf = _first_match(branches, bound)
        if leaf is None:
            raise IncompleteTable(name, cfg)
        if isinstance(leaf, TableLiteral):
            row = {s: p for s, p in leaf.rows}
            states = node.domain.states
            missing = [s for s in states if s not in row]
            if missing:
                raise InvalidDistribution(
                    f"'{name}' table is missing probabilities for: " + ", ".join(missing)
                )
            for p in row.values():
                if p < 0.0 or p > 1.0:
                    raise ProbabilityOutOfRange(p)
            rows_table[cfg] = tuple(row[s] for s in states)
        else:
            if leaf.variance <= 0.0:
                raise InvalidDistribution(
                    f"'{name}' has non-positive variance {leaf.variance!r}"
                )
            coef = {p: c for p, c in leaf.terms}
            rows_clg[cfg] = ClgRow(
                float(leaf.mean),
                tuple(float(coef.get(p, 0.0)) for p in continuous_parents),
                float(leaf.variance),
            )

    if isinstance(node.domain, Discrete):
        return DiscreteTable(tuple(discrete_parents), rows_table)
    return ClgSpec(tuple(discrete_parents), tuple(continuous_parents), rows_clg)


def _first_match(branches, bound: Mapping[str, str]):
    for guard, leaf in branches:
        if guard is None:
            return leaf
        if all(bound.get(parent) == state for parent, state in guard.tests):
            return leaf
    return None


def compile_script(text: str) -> BayesianNetwork:
    """Parse then compile in one step."""
    return compile_model(bnscript.parse_model(text))


# --------------------------------------------------------------------------
# Joint factorization

LOG_2PI = math.log(2.0 * math.pi)


def normal_pdf(x: float, mean: float, variance: float) -> float:
    return math.exp(-0.5 * (x - mean) ** 2 / variance) / math.sqrt(2.0 * math.pi * variance)


def normal_logpdf(x: float, mean: float, variance: float) -> float:
    return -0.5 * ((x - mean) ** 2 / variance + math.log(variance) + LOG_2PI)


Assignment = Mapping[str, Union[str, float]]


def _check_total(net: BayesianNetwork, assignment: Assignment):
    missing = [v.name for v in net.variables if v.name not in assignment]
    if missing:
        raise IncompleteAssignment(missing)


def clg_mean(cpd: ClgSpec, cfg: Config, assignment: Assignment) -> float:
    row = cpd.rows[cfg]
    mean = row.intercept
    for parent, coef in zip(cpd.continuous_parents, row.coefficients):
        mean += coef * float(assignment[parent])
    return mean


def log_joint_probability(net: BayesianNetwork, assignment: Assignment) -> float:
    """Log of the product of local factors; ``-inf`` for zero-mass rows."""
    _check_total(net, assignment)
    total = 0.0
    for var in net.variables:
        cpd = net.cpds[var.name]
        value = assignment[var.name]
        if isinstance(cpd, DiscreteTable):
            if not isinstance(value, str) or value not in var.states:
                raise UnknownState(var.name, value)
            cfg = tuple(str(assignment[p]) for p in cpd.parents)
            for p, s in zip(cpd.parents, cfg):
                if s not in net.states(p):
                    raise UnknownState(p, s)
            p = cpd.rows[cfg][var.states.index(value)]
            if p <= 0.0:
                return -math.inf
            total += math.log(p)
        else:
            if isinstance(value, str) or not math.isfinite(float(value)):
                raise UnknownState(var.name, value)
            cfg = tuple(str(assignment[p]) for p in cpd.discrete_parents)
            row = cpd.rows[cfg]
            total += normal_logpdf(float(value), clg_mean(cpd, cfg, assignment), row.variance)
    return total


def joint_probability(net: BayesianNetwork, assignment: Assignment) -> float:
    """Probability mass times density of a total assignment."""
    return math.exp(log_joint_probability(net, assignment))


# --------------------------------------------------------------------------
# Network -> AST (round trip for constructed networks)


def network_to_ast(net: BayesianNetwork) -> ModelAst:
    """Express a network as a script AST; compiling it reproduces the net."""
    nodes = []
    for var in net.variables:
        cpd = net.cpds[var.name]
        if isinstance(cpd, DiscreteTable):
            domain = Discrete(var.states)
            leaf_for = lambda cfg: TableLiteral(tuple(zip(var.states, cpd.rows[cfg])))
            parent_names = cpd.parents
        else:
            domain = CONTINUOUS
            leaf_for = lambda cfg: GaussianLiteral(
                cpd.rows[cfg].intercept,
                cpd.rows[cfg].variance,
                tuple(zip(cpd.continuous_parents, cpd.rows[cfg].coefficients)),
            )
            parent_names = cpd.discrete_parents
        if parent_names:
            domains = [net.states(p) for p in parent_names]
            branches = []
            for cfg in _enumerate_configs(domains):
                guard = Guard(tuple(zip(parent_names, cfg)))
                branches.append((guard, leaf_for(cfg)))
            dist = Conditional(tuple(branches))
        else:
            dist = leaf_for(())
        nodes.append(bnscript.NodeDef(var.name, None, domain, dist))
    return ModelAst(tuple(nodes))


def network_to_script(net: BayesianNetwork) -> str:
    return bnscript.serialize_model(network_to_ast(net))
