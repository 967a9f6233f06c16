from fractions import Fraction

import pytest

from qlower import ActivationKind, Network, WeightMatrix


def mat(rows):
    return WeightMatrix.from_rows(rows)


def relu_net(input_dim, *row_lists, scale=1):
    return Network(input_dim, tuple(mat(r) for r in row_lists),
                   ActivationKind.RELU, Fraction(scale))


@pytest.fixture
def example_net():
    # d=1, depth 1: relu(x - 1/2) - relu(x)/2; 5 nonzero weights.
    # Hand value at x=4/5: relu(3/10) - (1/2)(4/5) = 3/10 - 2/5 = -1/10.
    return relu_net(1, [["-1/2", 1], [0, 1]], [[1, "-1/2"]])


@pytest.fixture
def identity_net():
    # d=1, depth 0: x -> x.
    return relu_net(1, [[0, 1]])
