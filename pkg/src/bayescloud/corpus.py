"""The epidemic-risk model corpus: a quadtree zone-dangerousness pyramid,
regional spread, virus mutation, and patient models, plus their integrated
composition.

The pyramid has one node per region, named ``DZ_<depth>_<x>_<y>``, each
binary over ``hot_zone``/``cold_zone``.  A hot parent propagates hotness to
each child with probability ``k`` (0.5 < k < 1); a cold parent propagates
coldness symmetrically, so parent and child are positively correlated.

All corpus CPT numbers are illustrative placeholders; tests assert only the
directional and structural properties, never the numbers themselves.  The
parts are authored mutually consistent on their shared variables so that
the integrated model is exactly the merge-pipeline composition of the four.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .bnscript import serialize_model
from .core import (
    BayesianNetwork,
    Cpd,
    DiscreteTable,
    Variable,
    build_network,
    cpd_parents,
    network_to_ast,
)
from .errors import InvalidParams, UnknownRegion
from .inference import eliminate, posterior

HOT = "hot_zone"
COLD = "cold_zone"

_POP_STATES = ("low", "medium", "high")
_COUNT_STATES = ("none", "low", "high")


@dataclass(frozen=True)
class GeoParams:
    depth: int = 3
    k: float = 0.9
    root_hot_prior: float = 0.05

    def __post_init__(self):
        if self.depth < 1:
            raise InvalidParams(f"depth must be >= 1, got {self.depth}")
        if not 0.5 < self.k < 1.0:
            raise InvalidParams(f"k must be strictly between 0.5 and 1, got {self.k}")
        if not 0.0 < self.root_hot_prior < 1.0:
            raise InvalidParams(
                f"root_hot_prior must be strictly between 0 and 1, got {self.root_hot_prior}"
            )


def region_name(depth: int, x: int, y: int) -> str:
    return f"DZ_{depth}_{x}_{y}"


def generate_geospatial(params: GeoParams) -> BayesianNetwork:
    """Quadtree dangerousness pyramid.

    Depth ``d`` holds a ``2^(d-1) x 2^(d-1)`` grid; the children of region
    ``(d, x, y)`` are the four regions ``(d+1, 2x-1..2x, 2y-1..2y)``.
    """
    k, p0 = params.k, params.root_hot_prior
    variables: list[Variable] = []
    cpds: dict[str, Cpd] = {}
    for depth in range(1, params.depth + 1):
        side = 2 ** (depth - 1)
        for x in range(1, side + 1):
            for y in range(1, side + 1):
                name = region_name(depth, x, y)
                variables.append(Variable(name, (HOT, COLD)))
                if depth == 1:
                    cpds[name] = DiscreteTable((), {(): (p0, 1.0 - p0)})
                else:
                    parent = region_name(depth - 1, (x + 1) // 2, (y + 1) // 2)
                    cpds[name] = DiscreteTable(
                        (parent,),
                        {(HOT,): (k, 1.0 - k), (COLD,): (1.0 - k, k)},
                    )
    return build_network(tuple(variables), cpds)


def _rename_variable(net: BayesianNetwork, old: str, new: str) -> BayesianNetwork:
    def fix(name: str) -> str:
        return new if name == old else name

    variables = tuple(
        Variable(fix(v.name), v.states) for v in net.variables
    )
    cpds: dict[str, Cpd] = {}
    for name, cpd in net.cpds.items():
        assert isinstance(cpd, DiscreteTable)
        cpds[fix(name)] = DiscreteTable(
            tuple(fix(p) for p in cpd.parents), dict(cpd.rows)
        )
    return build_network(variables, cpds)


# --------------------------------------------------------------------------
# Part models


def regional_spread_model(p0: float = 0.05) -> BayesianNetwork:
    """Warning systems damp the spread rate, which drives zone dangerousness.

    The marginal P(DangerousnessOfZone = hot_zone) equals ``p0`` so the model
    composes consistently with a pyramid whose root prior is ``p0``.
    """
    h_high = min(1.6 * p0, 1.0)
    h_low = 2.0 * p0 - h_high
    variables = (
        Variable("HasWarningSystems", ("yes", "no")),
        Variable("RegionalSpreadRate", ("high", "low")),
        Variable("DangerousnessOfZone", (HOT, COLD)),
    )
    cpds: dict[str, Cpd] = {
        "HasWarningSystems": DiscreteTable((), {(): (0.5, 0.5)}),
        "RegionalSpreadRate": DiscreteTable(
            ("HasWarningSystems",),
            {("yes",): (0.2, 0.8), ("no",): (0.8, 0.2)},
        ),
        "DangerousnessOfZone": DiscreteTable(
            ("RegionalSpreadRate",),
            {("high",): (h_high, 1.0 - h_high), ("low",): (h_low, 1.0 - h_low)},
        ),
    }
    return build_network(variables, cpds)


def virus_mutation_model() -> BayesianNetwork:
    """Mutation chance rises with either the animal or the human population."""
    variables = (
        Variable("AnimalPopulation", _POP_STATES),
        Variable("HumanPopulation", _POP_STATES),
        Variable("IsMutatedVirus", ("yes", "no")),
    )
    rows = {}
    for i, ap in enumerate(_POP_STATES):
        for j, hp in enumerate(_POP_STATES):
            p_yes = 0.05 + 0.15 * (i + j)
            rows[(ap, hp)] = (p_yes, 1.0 - p_yes)
    cpds: dict[str, Cpd] = {
        "AnimalPopulation": DiscreteTable((), {(): (0.5, 0.3, 0.2)}),
        "HumanPopulation": DiscreteTable((), {(): (0.3, 0.4, 0.3)}),
        "IsMutatedVirus": DiscreteTable(("AnimalPopulation", "HumanPopulation"), rows),
    }
    return build_network(variables, cpds)


def _case_row(rps_i: int, hp_i: int, mutated: bool, base: float, vt_lift: float, mid: float) -> tuple[float, float, float]:
    weight = 0.10 * rps_i + 0.15 * hp_i + (vt_lift if mutated else 0.0)
    p_high = base + 0.6 * weight
    p_none = 1.0 - mid - p_high
    return (p_none, mid, p_high)


def patient_model(mutation: BayesianNetwork) -> BayesianNetwork:
    """Case-count model: reservoir size, human population, and virus type
    drive the confirmed/probable/suspected/fatality bins.

    The human-population prior and the ``IsMutatedVirus | HumanPopulation``
    conditional are derived from the mutation model so the two parts agree
    on their shared variables; the virus type is determined by mutation.
    """
    hp_prior = mutation.cpds["HumanPopulation"].rows[()]
    imv_rows = {}
    for hp in _POP_STATES:
        post = eliminate(mutation, {"HumanPopulation": hp}, ["IsMutatedVirus"])
        imv_rows[(hp,)] = post["IsMutatedVirus"].probabilities

    variables = (
        Variable("ReservoirPopulationSize", _POP_STATES),
        Variable("HumanPopulation", _POP_STATES),
        Variable("IsMutatedVirus", ("yes", "no")),
        Variable("VirusType", ("original", "mutated")),
        Variable("Confirmed", _COUNT_STATES),
        Variable("Probable", _COUNT_STATES),
        Variable("Suspected", _COUNT_STATES),
        Variable("Fatality", _COUNT_STATES),
    )
    case_parents = ("ReservoirPopulationSize", "HumanPopulation", "VirusType")
    specs = {
        "Confirmed": (0.05, 0.25, 0.40),
        "Probable": (0.05, 0.20, 0.45),
        "Suspected": (0.10, 0.20, 0.45),
        "Fatality": (0.03, 0.30, 0.42),
    }
    cpds: dict[str, Cpd] = {
        "ReservoirPopulationSize": DiscreteTable((), {(): (0.4, 0.35, 0.25)}),
        "HumanPopulation": DiscreteTable((), {(): tuple(hp_prior)}),
        "IsMutatedVirus": DiscreteTable(("HumanPopulation",), imv_rows),
        "VirusType": DiscreteTable(
            ("IsMutatedVirus",),
            {("yes",): (0.1, 0.9), ("no",): (0.95, 0.05)},
        ),
    }
    for node, (base, vt_lift, mid) in specs.items():
        rows = {}
        for i, rps in enumerate(_POP_STATES):
            for j, hp in enumerate(_POP_STATES):
                for vt in ("original", "mutated"):
                    rows[(rps, hp, vt)] = _case_row(i, j, vt == "mutated", base, vt_lift, mid)
        cpds[node] = DiscreteTable(case_parents, rows)
    return build_network(variables, cpds)


def geospatial_part(depth: int = 3, k: float = 0.9, p0: float = 0.05) -> BayesianNetwork:
    """Pyramid whose root is the shared DangerousnessOfZone junction node."""
    pyramid = generate_geospatial(GeoParams(depth=depth, k=k, root_hot_prior=p0))
    return _rename_variable(pyramid, region_name(1, 1, 1), "DangerousnessOfZone")


def integrated_model(parts: list[BayesianNetwork]) -> BayesianNetwork:
    """Deterministic composition of the parts on their shared variables.

    For every variable the most-conditioned CPD wins (the parts are authored
    so the discarded CPDs are marginally consistent with the kept ones);
    the variable set and arc set are the unions of the parts'.  This equals
    running the pairwise merge pipeline over the parts.
    """
    variables: list[Variable] = []
    seen: set[str] = set()
    chosen: dict[str, Cpd] = {}
    for part in parts:
        for v in part.variables:
            if v.name not in seen:
                seen.add(v.name)
                variables.append(v)
            cpd = part.cpds[v.name]
            held = chosen.get(v.name)
            if held is None or len(cpd_parents(cpd)) > len(cpd_parents(held)):
                chosen[v.name] = cpd
    return build_network(tuple(variables), chosen)


def build_corpus_models(
    depth: int = 3, k: float = 0.9, p0: float = 0.05
) -> dict[str, BayesianNetwork]:
    geo = geospatial_part(depth=depth, k=k, p0=p0)
    regional = regional_spread_model(p0=p0)
    mutation = virus_mutation_model()
    patient = patient_model(mutation)
    integrated = integrated_model([geo, regional, mutation, patient])
    return {
        "geospatial": geo,
        "regional_spread": regional,
        "virus_mutation": mutation,
        "patient": patient,
        "integrated": integrated,
    }


def build_corpus(
    out_dir, depth: int = 3, k: float = 0.9, p0: float = 0.05
) -> list[Path]:
    """Write the five corpus scripts plus a manifest; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    models = build_corpus_models(depth=depth, k=k, p0=p0)
    written: list[Path] = []
    manifest: dict = {
        "parameters": {"depth": depth, "k": k, "root_hot_prior": p0},
        "shared": {
            "geospatial~regional_spread": ["DangerousnessOfZone"],
            "virus_mutation~patient": ["HumanPopulation", "IsMutatedVirus"],
        },
        "files": [],
    }
    for name, net in models.items():
        path = out / f"{name}.bns"
        path.write_text(serialize_model(network_to_ast(net)), encoding="utf-8")
        written.append(path)
        manifest["files"].append(
            {"name": path.name, "nodes": len(net.variables), "arcs": len(net.arcs)}
        )
    manifest_path = out / "corpus-manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(manifest_path)
    return written


# --------------------------------------------------------------------------
# Scenario reasoning


def run_scenario(net: BayesianNetwork, reports) -> list[tuple[str, float]]:
    """Posterior hot-zone probability for every dangerousness node, sorted
    from most to least at risk."""
    if hasattr(reports, "as_dict"):
        assignments = reports.as_dict()
    else:
        assignments = dict(reports or {})
    for name in assignments:
        if not net.has_variable(name):
            raise UnknownRegion(name)
    zone_vars = [
        v.name
        for v in net.variables
        if v.states is not None and set(v.states) == {HOT, COLD}
    ]
    marginals = posterior(net, assignments, zone_vars)
    table = [
        (name, float(marginals[name].probability(HOT))) for name in zone_vars
    ]
    table.sort(key=lambda item: (-item[1], item[0]))
    return table


def pyramid_node_count(depth: int) -> int:
    return (4**depth - 1) // 3


def pyramid_arc_count(depth: int) -> int:
    return (4**depth - 4) // 3
