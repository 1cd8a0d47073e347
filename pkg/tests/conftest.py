import pytest

from bayescloud import core

DIAGNOSIS_SCRIPT = """\
defineNode(EbolaVirusDisease, Description);
{
    defineState(Discrete, has, not);
    p(EbolaVirusDisease) =
        {has: 0.1; not: 0.9;}
}

defineNode(Haemorrhage, Description);
{
    defineState(Discrete, yes, no);
    p(Haemorrhage | EbolaVirusDisease) =
        if (EbolaVirusDisease == has)
            {yes: 0.9; no: 0.1;}
        else if (EbolaVirusDisease == not)
            {yes: 0.01; no: 0.99;}
}
"""

FEVER_SCRIPT = """\
defineNode(EbolaVirusDisease, Description);
{
    defineState(Discrete, has, not);
    p(EbolaVirusDisease) =
        {has: 0.1; not: 0.9;}
}

defineNode(Fever, Description);
{
    defineState(Continuous);
    p(Fever | EbolaVirusDisease) =
        if (EbolaVirusDisease == has)
            { NormalDist(103, 1.0) }
        else if (EbolaVirusDisease == not)
            { NormalDist(98.6, 1.0) }
}
"""


@pytest.fixture(scope="session")
def diagnosis_net():
    return core.compile_script(DIAGNOSIS_SCRIPT)


@pytest.fixture(scope="session")
def fever_net():
    return core.compile_script(FEVER_SCRIPT)


def single_node_net(name: str, p: float, states=("a1", "a2")) -> core.BayesianNetwork:
    return core.build_network(
        (core.Variable(name, tuple(states)),),
        {name: core.DiscreteTable((), {(): (p, 1.0 - p)})},
    )
