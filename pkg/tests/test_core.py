"""Network compilation, the joint factorization, and validation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayescloud import bnscript as bs
from bayescloud import core
from bayescloud.errors import (
    CycleError,
    IncompleteAssignment,
    IncompleteTable,
    InvalidDomain,
    RowNotNormalized,
    UnknownParentState,
)
from bayescloud.inference import enumerate_assignments
from tests.conftest import DIAGNOSIS_SCRIPT, FEVER_SCRIPT


class TestCompile:
    def test_diagnosis_arc(self, diagnosis_net):
        assert diagnosis_net.arcs == frozenset({("EbolaVirusDisease", "Haemorrhage")})
        cpd = diagnosis_net.cpds["Haemorrhage"]
        assert cpd.parents == ("EbolaVirusDisease",)
        assert cpd.rows[("has",)] == (0.9, 0.1)
        assert cpd.rows[("not",)] == (0.01, 0.99)

    def test_one_state_domain_rejected(self):
        ast = bs.ModelAst(
            (
                bs.NodeDef(
                    "A", None, bs.Discrete(("only",)), bs.TableLiteral((("only", 1.0),))
                ),
            )
        )
        with pytest.raises(InvalidDomain):
            core.compile_model(ast)

    def test_cyclic_guards_raise_cycle_error(self):
        text = """
        defineNode(A);
        { defineState(Discrete, a1, a2);
          p(A | B) = if (B == b1) {a1: 0.5; a2: 0.5;} else {a1: 0.2; a2: 0.8;} }
        defineNode(B);
        { defineState(Discrete, b1, b2);
          p(B | A) = if (A == a1) {b1: 0.5; b2: 0.5;} else {b1: 0.2; b2: 0.8;} }
        """
        with pytest.raises(CycleError) as err:
            core.compile_script(text)
        assert set(err.value.cycle) == {"A", "B"}

    def test_missing_configuration(self):
        text = """
        defineNode(A);
        { defineState(Discrete, a1, a2); p(A) = {a1: 0.5; a2: 0.5;} }
        defineNode(B);
        { defineState(Discrete, b1, b2);
          p(B | A) = if (A == a1) {b1: 0.5; b2: 0.5;} }
        """
        with pytest.raises(IncompleteTable) as err:
            core.compile_script(text)
        assert err.value.configuration == ("a2",)

    def test_unknown_parent_state_in_guard(self):
        text = """
        defineNode(A);
        { defineState(Discrete, a1, a2); p(A) = {a1: 0.5; a2: 0.5;} }
        defineNode(B);
        { defineState(Discrete, b1, b2);
          p(B | A) = if (A == nope) {b1: 0.5; b2: 0.5;} else {b1: 0.5; b2: 0.5;} }
        """
        with pytest.raises(UnknownParentState):
            core.compile_script(text)

    def test_row_not_normalized(self):
        text = """
        defineNode(A);
        { defineState(Discrete, a1, a2); p(A) = {a1: 0.5; a2: 0.45;} }
        """
        with pytest.raises(RowNotNormalized) as err:
            core.compile_script(text)
        assert err.value.total == pytest.approx(0.95)

    def test_row_within_tolerance_renormalized(self):
        ast = bs.ModelAst(
            (
                bs.NodeDef(
                    "A",
                    None,
                    bs.Discrete(("a1", "a2")),
                    bs.TableLiteral((("a1", 0.5 + 2e-10), ("a2", 0.5))),
                ),
            )
        )
        net = core.compile_model(ast)
        assert math.fsum(net.cpds["A"].rows[()]) == pytest.approx(1.0, abs=1e-15)

    def test_compile_is_deterministic(self):
        ast = bs.parse_model(DIAGNOSIS_SCRIPT)
        assert core.compile_model(ast) == core.compile_model(ast)

    def test_no_phantom_arcs_for_unreferenced_declared_parent(self):
        text = """
        defineNode(A);
        { defineState(Discrete, a1, a2); p(A) = {a1: 0.5; a2: 0.5;} }
        defineNode(B);
        { defineState(Discrete, b1, b2); p(B | A) = {b1: 0.4; b2: 0.6;} }
        """
        net = core.compile_script(text)
        assert net.arcs == frozenset()

    def test_discrete_child_of_continuous_parent_rejected(self):
        text = """
        defineNode(X);
        { defineState(Continuous); p(X) = { NormalDist(0, 1) } }
        defineNode(B);
        { defineState(Discrete, b1, b2);
          p(B | X) = if (X == high) {b1: 1.0; b2: 0.0;} else {b1: 0.0; b2: 1.0;} }
        """
        with pytest.raises(UnknownParentState):
            core.compile_script(text)

    def test_clg_linear_term_parents_become_arcs(self):
        text = """
        defineNode(Rate);
        { defineState(Continuous); p(Rate) = { NormalDist(2, 1) } }
        defineNode(Load);
        { defineState(Continuous); p(Load | Rate) = { NormalDist(0.5 + 2*Rate, 1.5) } }
        """
        net = core.compile_script(text)
        assert net.arcs == frozenset({("Rate", "Load")})
        row = net.cpds["Load"].rows[()]
        assert row == core.ClgRow(0.5, (2.0,), 1.5)


class TestJointProbability:
    def test_diagnosis_values(self, diagnosis_net):
        assert core.joint_probability(
            diagnosis_net, {"EbolaVirusDisease": "has", "Haemorrhage": "yes"}
        ) == pytest.approx(0.09, abs=1e-12)
        assert core.joint_probability(
            diagnosis_net, {"EbolaVirusDisease": "not", "Haemorrhage": "no"}
        ) == pytest.approx(0.891, abs=1e-12)

    def test_hybrid_density_at_mode(self, fever_net):
        value = core.joint_probability(
            fever_net, {"EbolaVirusDisease": "has", "Fever": 103.0}
        )
        assert value == pytest.approx(0.1 / math.sqrt(2 * math.pi), rel=1e-12)

    def test_log_variant_matches(self, diagnosis_net):
        a = {"EbolaVirusDisease": "has", "Haemorrhage": "no"}
        assert core.log_joint_probability(diagnosis_net, a) == pytest.approx(
            math.log(core.joint_probability(diagnosis_net, a))
        )

    def test_incomplete_assignment(self, diagnosis_net):
        with pytest.raises(IncompleteAssignment):
            core.joint_probability(diagnosis_net, {"EbolaVirusDisease": "has"})

    def test_zero_probability_row_gives_minus_inf_log(self):
        net = core.build_network(
            (core.Variable("A", ("a1", "a2")),),
            {"A": core.DiscreteTable((), {(): (1.0, 0.0)})},
        )
        assert core.log_joint_probability(net, {"A": "a2"}) == -math.inf

    def test_joint_sums_to_one(self, diagnosis_net):
        total = math.fsum(
            core.joint_probability(diagnosis_net, a)
            for a in enumerate_assignments(diagnosis_net)
        )
        assert total == pytest.approx(1.0, abs=1e-9)


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    n_vars=st.integers(min_value=1, max_value=4),
)
@settings(max_examples=40, deadline=None)
def test_random_discrete_networks_sum_to_one(seed, n_vars):
    net = _random_discrete_net(seed, n_vars)
    total = math.fsum(
        core.joint_probability(net, a) for a in enumerate_assignments(net)
    )
    assert abs(total - 1.0) < 1e-9


def _random_discrete_net(seed: int, n_vars: int) -> core.BayesianNetwork:
    rng = np.random.default_rng(seed)
    names = [f"V{i}" for i in range(n_vars)]
    variables = []
    cpds = {}
    for i, name in enumerate(names):
        k = int(rng.integers(2, 4))
        variables.append(core.Variable(name, tuple(f"s{j}" for j in range(k))))
        parents = tuple(p for p in names[:i] if rng.random() < 0.5)
        domains = [variables[names.index(p)].states for p in parents]
        rows = {}
        import itertools

        for cfg in itertools.product(*domains):
            probs = rng.dirichlet(np.ones(k))
            rows[cfg] = tuple(float(p) for p in probs)
        cpds[name] = core.DiscreteTable(parents, rows)
    return core.build_network(tuple(variables), cpds)


class TestValidate:
    def test_compiled_network_is_clean(self, diagnosis_net):
        assert core.validate(diagnosis_net).ok

    def test_unnormalized_row_finding(self):
        net = core.BayesianNetwork(
            (core.Variable("A", ("a1", "a2")),),
            frozenset(),
            {"A": core.DiscreteTable((), {(): (0.5, 0.45)})},
        )
        report = core.validate(net)
        assert [f.code for f in report.findings] == ["row_not_normalized"]

    def test_variance_not_positive_finding(self):
        net = core.BayesianNetwork(
            (core.Variable("X"),),
            frozenset(),
            {"X": core.ClgSpec((), (), {(): core.ClgRow(0.0, (), 0.0)})},
        )
        report = core.validate(net)
        assert [f.code for f in report.findings] == ["variance_not_positive"]

    def test_validate_never_raises_on_garbage(self):
        net = core.BayesianNetwork(
            (core.Variable("A", ("a1",)), core.Variable("A", ("a1", "a2"))),
            frozenset({("ghost", "A")}),
            {},
        )
        report = core.validate(net)
        assert not report.ok


class TestNetworkToAst:
    def test_compile_round_trip_discrete(self, diagnosis_net):
        assert core.compile_model(core.network_to_ast(diagnosis_net)) == diagnosis_net

    def test_compile_round_trip_hybrid(self, fever_net):
        assert core.compile_model(core.network_to_ast(fever_net)) == fever_net

    def test_script_round_trip(self, fever_net):
        assert core.compile_script(core.network_to_script(fever_net)) == fever_net
