import math
import os

import numpy as np
import pytest

from dcgp.cgp import CgpParams, Chromosome

# the worked-example program: sig(yz + 1) / x
WORKED_GENES = [2, 1, 1, 0, 2, 0, 1, 2, 2, 1, 2, 1, 3, 1, 2, 3, 6, 3, 3, 4, 2, 2, 8, 0, 2, 7,
                  2, 2, 3, 10, 10]
WORKED_KERNELS = ["+", "*", "/", "sig"]

# published expansions at (1, 1, 1): in the inputs to order 2, and in the
# weights w3_1 (denominator of y/y) and w10_1 (denominator of the output) to order 3
WORKED_POLY = {
    (): 0.881, ("x",): -0.881, ("y",): 0.105, ("z",): 0.105, ("x", "x"): 0.881,
    ("y", "y"): -0.040, ("z", "z"): -0.040, ("x", "z"): -0.105, ("y", "z"): 0.025,
    ("x", "y"): -0.105,
}
WORKED_WEIGHT_POLY = {
    (0, 0): 0.881, (1, 0): -0.104, (0, 1): -0.881, (1, 1): 0.104, (2, 0): 0.0650,
    (0, 2): 0.881, (3, 0): -0.0315, (0, 3): -0.881, (1, 2): -0.104, (2, 1): -0.0650,
}

# acceptance verdict lines, echoed again in the terminal summary
ACCEPTANCE: list = []


def digits3(value, printed) -> bool:
    """``printed`` agrees with ``value`` to one unit of its third significant digit."""
    unit = 10.0 ** (math.floor(math.log10(abs(printed))) - 2)
    return abs(value - printed) <= unit


def worked_params(levels_back: int = 10) -> CgpParams:
    return CgpParams(3, 1, 1, 10, levels_back, 2, WORKED_KERNELS)


def program(n_in: int, kernels, nodes, out: int = -1):
    """Chromosome from ``nodes = [(kernel, a, b), ...]`` in a single row.

    ``out`` defaults to the last node.
    """
    kernels = list(kernels)
    p = CgpParams(n_in, 1, 1, len(nodes), len(nodes), 2, kernels)
    genes = []
    for k, a, b in nodes:
        genes += [kernels.index(k), a, b]
    genes.append(n_in + len(nodes) - 1 if out < 0 else out)
    return Chromosome.unweighted(genes, p), p


@pytest.fixture
def worked():
    p = worked_params()
    return Chromosome.unweighted(WORKED_GENES, p), p


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("DCGP_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="long experiment; set DCGP_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
