"""Posterior queries against independent oracles.

The enumeration oracle computes posteriors straight from
``joint_probability`` over all full assignments, deliberately bypassing the
factor machinery that variable elimination uses.
"""

import itertools
import math

import numpy as np
import pytest

from bayescloud import core
from bayescloud import inference as inf
from bayescloud.errors import (
    ContinuousVariablesPresent,
    NonLeafContinuousEvidence,
    UnknownState,
    UnknownVariable,
    ZeroProbabilityEvidence,
)
from tests.test_core import _random_discrete_net


def brute_force_marginal(net, evidence, query_var):
    """Enumerate the full joint; filter rows consistent with evidence."""
    states = net.states(query_var)
    mass = {s: 0.0 for s in states}
    for assignment in inf.enumerate_assignments(net):
        if any(assignment[k] != v for k, v in evidence.items()):
            continue
        mass[assignment[query_var]] += core.joint_probability(net, assignment)
    total = math.fsum(mass.values())
    return {s: mass[s] / total for s in states}


class TestEliminate:
    def test_diagnosis_posterior(self, diagnosis_net):
        # oracle over the 4 joint states: 0.09 / (0.09 + 0.009) = 10/11
        oracle = brute_force_marginal(
            diagnosis_net, {"Haemorrhage": "yes"}, "EbolaVirusDisease"
        )
        assert oracle["has"] == pytest.approx(0.09 / 0.099, abs=1e-15)
        result = inf.eliminate(
            diagnosis_net, {"Haemorrhage": "yes"}, ["EbolaVirusDisease"]
        )
        assert result["EbolaVirusDisease"].probability("has") == pytest.approx(
            oracle["has"], abs=1e-9
        )

    def test_prior_without_evidence(self, diagnosis_net):
        result = inf.eliminate(diagnosis_net, None, ["EbolaVirusDisease"])
        assert result["EbolaVirusDisease"].probabilities == pytest.approx((0.1, 0.9))

    def test_evidence_on_queried_node(self, diagnosis_net):
        result = inf.eliminate(
            diagnosis_net, {"EbolaVirusDisease": "has"}, ["EbolaVirusDisease"]
        )
        assert result["EbolaVirusDisease"].probabilities == (1.0, 0.0)

    def test_zero_probability_evidence(self):
        net = core.build_network(
            (core.Variable("A", ("a1", "a2")),),
            {"A": core.DiscreteTable((), {(): (1.0, 0.0)})},
        )
        with pytest.raises(ZeroProbabilityEvidence):
            inf.eliminate(net, {"A": "a2"}, ["A"])

    def test_unknown_variable_and_state(self, diagnosis_net):
        with pytest.raises(UnknownVariable):
            inf.eliminate(diagnosis_net, {"Nope": "yes"}, ["EbolaVirusDisease"])
        with pytest.raises(UnknownVariable):
            inf.eliminate(diagnosis_net, None, ["Nope"])
        with pytest.raises(UnknownState):
            inf.eliminate(diagnosis_net, {"Haemorrhage": "nope"}, ["EbolaVirusDisease"])

    def test_rejects_hybrid_networks(self, fever_net):
        with pytest.raises(ContinuousVariablesPresent):
            inf.eliminate(fever_net, None, ["EbolaVirusDisease"])

    def test_matches_enumeration_on_random_networks(self):
        rng = np.random.default_rng(171)
        for trial in range(25):
            net = _random_discrete_net(int(rng.integers(1e6)), int(rng.integers(1, 6)))
            names = net.names()
            n_evidence = int(rng.integers(0, len(names)))
            ev_names = list(rng.choice(names, size=n_evidence, replace=False))
            evidence = {
                name: net.states(name)[int(rng.integers(len(net.states(name))))]
                for name in ev_names
            }
            queries = [n for n in names if n not in evidence] or names
            try:
                result = inf.eliminate(net, evidence, queries)
            except ZeroProbabilityEvidence:
                continue
            for q in queries:
                oracle = brute_force_marginal(net, evidence, q)
                for state, p in zip(result[q].states, result[q].probabilities):
                    assert abs(p - oracle[state]) < 1e-9

    def test_elimination_order_independence(self, diagnosis_net):
        base = inf.eliminate(diagnosis_net, {"Haemorrhage": "yes"}, ["EbolaVirusDisease"])
        net = _random_discrete_net(98, 5)
        names = net.names()
        reference = inf.eliminate(net, {names[0]: net.states(names[0])[0]}, names[1:])
        for perm in itertools.permutations(names):
            result = inf.eliminate(
                net,
                {names[0]: net.states(names[0])[0]},
                names[1:],
                elimination_order=list(perm),
            )
            for q in names[1:]:
                assert result[q].probabilities == pytest.approx(
                    reference[q].probabilities, abs=1e-9
                )
        del base

    def test_marginals_sum_to_one(self, diagnosis_net):
        result = inf.eliminate(diagnosis_net, {"Haemorrhage": "no"}, ["EbolaVirusDisease"])
        assert math.fsum(result["EbolaVirusDisease"].probabilities) == pytest.approx(
            1.0, abs=1e-9
        )


class TestClgLeaf:
    def test_fever_posterior_closed_form(self, fever_net):
        # two-hypothesis Bayes with Gaussian densities
        num = 0.1 * core.normal_pdf(100.0, 103.0, 1.0)
        den = num + 0.9 * core.normal_pdf(100.0, 98.6, 1.0)
        result = inf.infer_clg_leaf(fever_net, {"Fever": 100.0}, ["EbolaVirusDisease"])
        assert result["EbolaVirusDisease"].probability("has") == pytest.approx(
            num / den, abs=1e-12
        )
        assert num / den == pytest.approx(0.00328, abs=5e-6)

    def test_fever_prior_mixture(self, fever_net):
        result = inf.infer_clg_leaf(fever_net, None, ["Fever"])
        assert result["Fever"].components == ((0.1, 103.0, 1.0), (0.9, 98.6, 1.0))

    def test_discrete_evidence_selects_single_component(self, fever_net):
        result = inf.infer_clg_leaf(fever_net, {"EbolaVirusDisease": "not"}, ["Fever"])
        assert result["Fever"].components == ((1.0, 98.6, 1.0),)

    def test_mixture_weights_sum_to_one(self, fever_net):
        result = inf.infer_clg_leaf(fever_net, {"Fever": 101.0}, ["Fever"])
        weights = [w for w, _m, _v in result["Fever"].components]
        assert math.fsum(weights) == pytest.approx(1.0, abs=1e-9)

    def test_non_leaf_continuous_rejected(self):
        text = """
        defineNode(Rate);
        { defineState(Continuous); p(Rate) = { NormalDist(2, 1) } }
        defineNode(Load);
        { defineState(Continuous); p(Load | Rate) = { NormalDist(1 + 2*Rate, 1) } }
        """
        net = core.compile_script(text)
        with pytest.raises(NonLeafContinuousEvidence):
            inf.infer_clg_leaf(net, {"Load": 3.0}, ["Rate"])

    def test_soft_evidence_transform_equivalence(self, fever_net):
        """A continuous observation must equal eliminate() on the transformed
        network where the leaf becomes a binary soft-evidence child whose
        rows are the (scaled) Gaussian densities."""
        x = 100.0
        cpd = fever_net.cpds["Fever"]
        densities = {
            cfg: core.normal_pdf(x, row.intercept, row.variance)
            for cfg, row in cpd.rows.items()
        }
        scale = max(densities.values())
        variables = tuple(v for v in fever_net.variables if v.name != "Fever") + (
            core.Variable("FeverSeen", ("seen", "unseen")),
        )
        cpds = {k: v for k, v in fever_net.cpds.items() if k != "Fever"}
        cpds["FeverSeen"] = core.DiscreteTable(
            cpd.discrete_parents,
            {
                cfg: (densities[cfg] / scale, 1.0 - densities[cfg] / scale)
                for cfg in densities
            },
        )
        transformed = core.build_network(variables, cpds)
        by_transform = inf.eliminate(
            transformed, {"FeverSeen": "seen"}, ["EbolaVirusDisease"]
        )
        direct = inf.infer_clg_leaf(fever_net, {"Fever": x}, ["EbolaVirusDisease"])
        assert direct["EbolaVirusDisease"].probabilities == pytest.approx(
            by_transform["EbolaVirusDisease"].probabilities, abs=1e-9
        )

    def test_posterior_router(self, diagnosis_net, fever_net):
        assert inf.posterior(diagnosis_net, None, ["EbolaVirusDisease"])
        assert inf.posterior(fever_net, {"Fever": 99.0}, ["EbolaVirusDisease"])


class TestSampleForward:
    def test_law_of_large_numbers(self, diagnosis_net):
        data = inf.sample_forward(diagnosis_net, 100000, seed=1)
        p_has = float(np.mean(data.cells["EbolaVirusDisease"] == "has"))
        assert abs(p_has - 0.1) < 0.01

    def test_single_row_is_complete(self, fever_net):
        data = inf.sample_forward(fever_net, 1, seed=0)
        row = data.row(0)
        assert set(row) == {"EbolaVirusDisease", "Fever"}
        assert isinstance(row["Fever"], float)

    def test_mixture_mean(self, fever_net):
        data = inf.sample_forward(fever_net, 100000, seed=5)
        assert abs(float(data.cells["Fever"].mean()) - 99.04) < 0.05

    def test_deterministic_given_seed(self, diagnosis_net):
        a = inf.sample_forward(diagnosis_net, 50, seed=9)
        b = inf.sample_forward(diagnosis_net, 50, seed=9)
        assert list(a.cells["Haemorrhage"]) == list(b.cells["Haemorrhage"])

    def test_n_below_one_rejected(self, diagnosis_net):
        with pytest.raises(ValueError):
            inf.sample_forward(diagnosis_net, 0)


class TestGibbs:
    def test_matches_exact_posterior(self, diagnosis_net):
        g = inf.gibbs_query(
            diagnosis_net, {"Haemorrhage": "yes"}, ["EbolaVirusDisease"],
            n=50000, burn_in=5000, seed=7,
        )
        assert abs(g["EbolaVirusDisease"].probability("has") - 10 / 11) < 0.01

    def test_no_evidence_matches_forward_marginals(self, diagnosis_net):
        g = inf.gibbs_query(diagnosis_net, None, ["Haemorrhage"], n=30000, burn_in=3000, seed=3)
        data = inf.sample_forward(diagnosis_net, 100000, seed=3)
        p_fwd = float(np.mean(data.cells["Haemorrhage"] == "yes"))
        assert abs(g["Haemorrhage"].probability("yes") - p_fwd) < 0.01

    def test_hybrid_posterior(self, fever_net):
        num = 0.1 * core.normal_pdf(100.0, 103.0, 1.0)
        den = num + 0.9 * core.normal_pdf(100.0, 98.6, 1.0)
        g = inf.gibbs_query(
            fever_net, {"Fever": 100.0}, ["EbolaVirusDisease"], n=50000, burn_in=5000, seed=21
        )
        assert abs(g["EbolaVirusDisease"].probability("has") - num / den) < 0.01

    def test_continuous_chain_with_non_leaf(self):
        text = """
        defineNode(Rate);
        { defineState(Continuous); p(Rate) = { NormalDist(2, 1) } }
        defineNode(Load);
        { defineState(Continuous); p(Load | Rate) = { NormalDist(1 + 2*Rate, 1) } }
        """
        net = core.compile_script(text)
        g = inf.gibbs_query(net, {"Load": 9.0}, ["Rate"], n=20000, burn_in=2000, seed=2)
        # conjugate posterior: precision 1 + 4, mean (2*1 + 2*(9-1)) / 5 = 3.6
        (_w, mean, var) = g["Rate"].components[0]
        assert abs(mean - 3.6) < 0.05
        assert abs(var - 0.2) < 0.05

    def test_all_evidence_degenerate(self, diagnosis_net):
        g = inf.gibbs_query(
            diagnosis_net,
            {"EbolaVirusDisease": "has", "Haemorrhage": "yes"},
            ["EbolaVirusDisease", "Haemorrhage"],
            n=100,
            burn_in=10,
        )
        assert g["EbolaVirusDisease"].probabilities == (1.0, 0.0)
        assert g["Haemorrhage"].probabilities == (1.0, 0.0)

    def test_impossible_evidence_detected(self):
        net = core.build_network(
            (core.Variable("A", ("a1", "a2")),),
            {"A": core.DiscreteTable((), {(): (1.0, 0.0)})},
        )
        with pytest.raises(ZeroProbabilityEvidence):
            inf.gibbs_query(net, {"A": "a2"}, ["A"], n=100, burn_in=10)

    def test_deterministic_given_seed(self, diagnosis_net):
        a = inf.gibbs_query(diagnosis_net, {"Haemorrhage": "yes"}, ["EbolaVirusDisease"], n=2000, burn_in=200, seed=5)
        b = inf.gibbs_query(diagnosis_net, {"Haemorrhage": "yes"}, ["EbolaVirusDisease"], n=2000, burn_in=200, seed=5)
        assert a["EbolaVirusDisease"].probabilities == b["EbolaVirusDisease"].probabilities

    def test_n_must_exceed_burn_in(self, diagnosis_net):
        with pytest.raises(ValueError):
            inf.gibbs_query(diagnosis_net, None, ["Haemorrhage"], n=10, burn_in=10)


class TestDataset:
    def test_csv_round_trip(self, fever_net, tmp_path):
        data = inf.sample_forward(fever_net, 20, seed=4)
        path = tmp_path / "rows.csv"
        data.to_csv(path)
        loaded = inf.Dataset.from_csv(path)
        assert loaded.columns == data.columns
        assert np.allclose(loaded.cells["Fever"], data.cells["Fever"])
        assert list(loaded.cells["EbolaVirusDisease"]) == list(
            data.cells["EbolaVirusDisease"]
        )

    def test_missing_cells_rejected(self):
        with pytest.raises(Exception, match="empty cell"):
            inf.Dataset.from_csv_text("A,B\na1,\n")

    def test_ragged_rows_rejected(self):
        with pytest.raises(Exception, match="cells"):
            inf.Dataset.from_csv_text("A,B\na1\n")
