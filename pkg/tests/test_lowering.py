import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlower import (
    DomainError,
    Network,
    TheoremBoundParams,
    WeightSet,
    binarize,
    binary_prefix,
    decompose_binary,
    decompose_ternary,
    evaluate,
    random_network,
    sparsity,
    ternarize,
    ternary_prefix,
    theorem_bounds,
    to_unit_weights,
    validate,
)
from qlower.network import ActivationKind
from conftest import mat, relu_net

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)

BASE_A = sorted(WeightSet.BASE_A.members())
TERNARY = sorted(WeightSet.TERNARY_HALF.members())

GRID_1D = [Fraction(i, 4) for i in range(5)]


def dyadic_points(rng, d, n, denominator=256):
    return [tuple(Fraction(rng.randrange(denominator + 1), denominator)
                  for _ in range(d)) for _ in range(n)]


class TestDecompositions:
    @pytest.mark.parametrize("w, expected", [
        (Fraction(2), (HALF, HALF, HALF, HALF)),
        (Fraction(-1), (-HALF, -HALF, 0, 0)),
        (Fraction(1), (HALF, HALF, 0, 0)),
        (HALF, (HALF, 0, 0, 0)),
        (-HALF, (-HALF, 0, 0, 0)),
        (Fraction(0), (0, 0, 0, 0)),
    ])
    def test_ternary_canonical_splits(self, w, expected):
        assert decompose_ternary(w) == expected

    @pytest.mark.parametrize("w", [Fraction(3, 2), Fraction(1, 4), Fraction(-2)])
    def test_ternary_rejects_outside_alphabet(self, w):
        with pytest.raises(DomainError):
            decompose_ternary(w)

    def test_ternary_sums_and_membership(self):
        for w in BASE_A:
            parts = decompose_ternary(w)
            assert sum(parts) == w
            assert all(p in (0, HALF, -HALF) for p in parts)

    @pytest.mark.parametrize("w, expected", [
        (HALF, (QUARTER, QUARTER)),
        (Fraction(0), (QUARTER, -QUARTER)),
        (-HALF, (-QUARTER, -QUARTER)),
    ])
    def test_binary_canonical_splits(self, w, expected):
        assert decompose_binary(w) == expected

    def test_binary_rejects_outside_alphabet(self):
        with pytest.raises(DomainError):
            decompose_binary(Fraction(1))

    def test_binary_sums_and_membership(self):
        for w in TERNARY:
            parts = decompose_binary(w)
            assert sum(parts) == w
            assert all(p in (QUARTER, -QUARTER) for p in parts)


class TestTernaryPrefix:
    def test_quadruplicates_the_coordinates(self):
        out = evaluate(ternary_prefix(1), [Fraction(1, 4)])
        assert out == (1, 1, 1, 1, QUARTER, QUARTER, QUARTER, QUARTER)

    def test_endpoint_inputs(self):
        out = evaluate(ternary_prefix(2), [0, 1])
        assert out == (1,) * 4 + (0,) * 4 + (1,) * 4

    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
    def test_sparsity_is_twenty_per_coordinate(self, d):
        assert sparsity(ternary_prefix(d)).total_nonzero == 20 * (d + 1)

    def test_weights_stay_in_the_half_alphabet(self):
        prefix = ternary_prefix(3)
        assert validate(prefix, WeightSet.TERNARY_HALF).passed
        assert all(e in (0, HALF) for m in prefix.matrices for e in m.entries)

    def test_random_points_reproduced_exactly(self):
        rng = random.Random(401)
        for d in (1, 2, 3):
            prefix = ternary_prefix(d)
            for x in dyadic_points(rng, d, 25):
                assert evaluate(prefix, x) == (1,) * 4 + tuple(
                    v for v in x for _ in range(4))


class TestBinaryPrefix:
    @pytest.mark.parametrize("x, expected", [
        ([0], (1, 1, 0, 0)),
        ([1], (1, 1, 1, 1)),
    ])
    def test_one_dimensional_outputs(self, x, expected):
        assert evaluate(binary_prefix(1), x) == expected

    def test_two_dimensional_output(self):
        assert evaluate(binary_prefix(2), [HALF, HALF]) == \
            (1, 1, HALF, HALF, HALF, HALF)

    def test_every_entry_is_quarter_magnitude(self):
        prefix = binary_prefix(2)
        assert validate(prefix, WeightSet.BINARY_QUARTER).passed
        total = sum(m.rows * m.cols for m in prefix.matrices)
        assert sparsity(prefix).total_nonzero == total

    def test_random_points_reproduced_exactly(self):
        rng = random.Random(402)
        for d in (1, 2, 3):
            prefix = binary_prefix(d)
            for x in dyadic_points(rng, d, 25):
                assert evaluate(prefix, x) == (1, 1) + tuple(
                    v for v in x for _ in range(2))


class TestTernarize:
    def test_worked_example_accounting(self, example_net):
        lowered, cert = ternarize(example_net)
        assert lowered.depth == example_net.depth + 2 == 3
        assert validate(lowered, WeightSet.TERNARY_HALF).passed
        assert cert.passed
        assert cert.target_sparsity_bound == 16 * 5 + 20 * 2 == 120
        assert cert.target_width_bound == 4 * example_net.width_max == 8
        assert lowered.width_max <= 8
        assert sparsity(lowered).total_nonzero <= 120

    def test_worked_example_values_preserved(self, example_net):
        lowered, _ = ternarize(example_net)
        for x in GRID_1D:
            assert evaluate(lowered, [x]) == evaluate(example_net, [x])

    def test_depth_zero_source_padded_with_identity(self, identity_net):
        lowered, cert = ternarize(identity_net)
        for x in GRID_1D:
            assert evaluate(lowered, [x]) == x
        # The certificate reports the padded (depth-1) source.
        assert cert.source_depth == 1
        assert lowered.depth == 3

    def test_random_base_nets_equivalent(self):
        rng = random.Random(403)
        for _ in range(10):
            net = random_network(rng, 2, 3, 6)
            lowered, cert = ternarize(net)
            assert cert.passed
            for x in dyadic_points(rng, 2, 5):
                assert evaluate(lowered, x) == evaluate(net, x)

    def test_rejects_unsupported_inputs(self, example_net):
        with pytest.raises(DomainError):
            ternarize(relu_net(1, [["3/2", 1]]))
        with pytest.raises(DomainError):
            ternarize(Network(1, example_net.matrices,
                              ActivationKind.INDICATOR01))
        with pytest.raises(DomainError):
            ternarize(Network(1, example_net.matrices, ActivationKind.RELU,
                              Fraction(1, 2)))

    def test_offending_weight_named(self):
        with pytest.raises(DomainError) as err:
            ternarize(relu_net(1, [[0, 1], ["1/4", 0]], [[1, 1]]))
        assert "(1,0)" in str(err.value) and "1/4" in str(err.value)


class TestBinarize:
    def test_total_depth_after_both_passes(self, example_net):
        middle, _ = ternarize(example_net)
        lowered, cert = binarize(middle)
        assert lowered.depth == example_net.depth + 5 == 6
        assert cert.target_depth == middle.depth + 3
        assert cert.target_width_bound == 8 * middle.width_max

    def test_result_has_no_zero_entries(self, example_net):
        middle, _ = ternarize(example_net)
        lowered, _ = binarize(middle)
        assert validate(lowered, WeightSet.BINARY_QUARTER).passed
        total = sum(m.rows * m.cols for m in lowered.matrices)
        assert sparsity(lowered).total_nonzero == total

    def test_random_ternary_nets_equivalent(self):
        rng = random.Random(404)
        for _ in range(10):
            net = random_network(rng, 2, 2, 5, alphabet=WeightSet.TERNARY_HALF)
            lowered, cert = binarize(net)
            assert cert.passed
            for x in dyadic_points(rng, 2, 5):
                assert evaluate(lowered, x) == evaluate(net, x)

    def test_rejects_base_alphabet_input(self, example_net):
        with pytest.raises(DomainError):
            binarize(example_net)  # weight 1 is not ternary

    def test_end_to_end_from_base(self, example_net):
        middle, _ = ternarize(example_net)
        lowered, _ = binarize(middle)
        for x in GRID_1D:
            assert evaluate(lowered, [x]) == evaluate(example_net, [x])


class TestToUnitWeights:
    def test_ternary_scale_is_two_to_minus_matrix_count(self):
        net = relu_net(1, [[0, "1/2"]], [["1/2"]], [["-1/2"]], [["1/2"]])
        unit = to_unit_weights(net)
        assert unit.output_scale == Fraction(1, 16)
        assert validate(unit, WeightSet.TERNARY_UNIT).passed

    def test_binary_scale_is_four_to_minus_matrix_count(self, example_net):
        middle, _ = ternarize(example_net)
        lowered, _ = binarize(middle)
        unit = to_unit_weights(lowered)
        assert len(lowered.matrices) == 7
        assert unit.output_scale == Fraction(1, 4**7)
        assert validate(unit, WeightSet.BINARY_UNIT).passed

    def test_function_unchanged(self, example_net):
        middle, _ = ternarize(example_net)
        unit = to_unit_weights(middle)
        x = [HALF]
        assert evaluate(unit, x) == evaluate(middle, x) == evaluate(example_net, x)

    def test_rejects_other_alphabets(self, example_net):
        with pytest.raises(DomainError):
            to_unit_weights(example_net)  # baseA, not half/quarter

    def test_rejects_non_relu(self):
        net = Network(1, (mat([[0, "1/2"]]), mat([["1/2"]])),
                      ActivationKind.INDICATOR01)
        with pytest.raises(DomainError):
            to_unit_weights(net)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_lowering_pipeline_property(seed):
    rng = random.Random(seed)
    net = random_network(rng, rng.randint(1, 3), rng.randint(0, 2), 4)
    t, cert_t = ternarize(net)
    b, cert_b = binarize(t)
    assert cert_t.passed and cert_b.passed
    x = tuple(Fraction(rng.randrange(33), 32) for _ in range(net.input_dim))
    want = evaluate(net, x)
    assert evaluate(t, x) == want
    assert evaluate(b, x) == want
    assert evaluate(to_unit_weights(t), x) == want
    assert evaluate(to_unit_weights(b), x) == want


class TestTheoremBounds:
    # Frozen against an independent evaluation of the printed formulas
    # (whole-term ceiling on the 8*log2 term, ceiling on the width,
    # floor on the sparsity product).
    CASES = [
        ((1, 1.0, 1.0, 6, 1),
         dict(L=81, p_inf=144, s_max=133214544,
              tern=(83, 576, 2131432744), binr=(86, 4608))),
        ((2, 1.0, 1.0, 15, 2),
         dict(L=161, p_inf=1080, s_max=25105489920,
              tern=(163, 4320, 401687838780), binr=(166, 34560))),
        ((1, 0.5, 1.0, 6, 3),
         dict(L=75, p_inf=144, s_max=59484375,
              tern=(77, 576, 951750040), binr=(80, 4608))),
        ((3, 1.0, 2.0, 64, 1),
         dict(L=287, p_inf=12288, s_max=7769664000000,
              tern=(289, 49152, 124314624000080), binr=(292, 393216))),
        ((2, 0.5, 0.5, 12, 4),
         dict(L=139, p_inf=864, s_max=8893810611,
              tern=(141, 3456, 142300969836), binr=(144, 27648))),
    ]

    @pytest.mark.parametrize("params, expected", CASES)
    def test_frozen_parameter_sets(self, params, expected):
        d, beta, K, N, m = params
        report = theorem_bounds(TheoremBoundParams(m=m, N=N, beta=beta, d=d, K=K))
        assert report.L == expected["L"]
        assert report.p_inf == expected["p_inf"]
        assert report.s_max == expected["s_max"]
        assert report.lowered_ternary == expected["tern"]
        assert report.lowered_binary == expected["binr"]

    @pytest.mark.parametrize("params, err", [
        ((1, 1.0, 1.0, 5, 1), 3.1666666666666665),
        ((3, 1.0, 2.0, 64, 1), 32.25),
    ])
    def test_error_factor(self, params, err):
        d, beta, K, N, m = params
        if N < 6:
            return  # handled by the precondition test below
        report = theorem_bounds(TheoremBoundParams(m=m, N=N, beta=beta, d=d, K=K))
        assert report.error_factor == pytest.approx(err, rel=1e-12)

    def test_binary_width_is_thirty_two_fold(self):
        report = theorem_bounds(TheoremBoundParams(m=2, N=20, beta=1.0, d=2, K=1.0))
        assert report.lowered_binary[1] == 32 * report.p_inf

    @pytest.mark.parametrize("d, N", [(1, 5), (2, 14)])
    def test_rejects_resolution_below_precondition(self, d, N):
        with pytest.raises(DomainError) as err:
            theorem_bounds(TheoremBoundParams(m=1, N=N, beta=1.0, d=d, K=1.0))
        assert "N" in str(err.value)
