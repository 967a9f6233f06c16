import math
import random
from fractions import Fraction

import pytest

from qlower import (
    DimensionError,
    DomainError,
    HolderFunctionSpec,
    WeightSet,
    build_approximator,
    build_selector_matrix,
    builtin_targets,
    check_holder,
    equivalence_check,
    random_network,
    report_rows,
    sup_error,
    ternarize,
    binarize,
    validate,
    write_report_csv,
)
from qlower.approx import GridSpec
from qlower.harness import CSV_COLUMNS, bundle_stats

F = Fraction


class TestBuiltinTargets:
    def test_registry_contents(self):
        targets = builtin_targets(2)
        assert set(targets) == {"const", "mean", "maxcoord", "root"}
        assert targets["root"].beta == 0.5
        assert targets["const"].F == 0.5
        assert all(spec.d == 2 for spec in targets.values())

    def test_known_values(self):
        targets = builtin_targets(2)
        x = (F(1, 2), F(1, 4))
        assert targets["const"].evaluator(x) == F(1, 2)
        assert targets["mean"].evaluator(x) == F(3, 8)
        assert targets["maxcoord"].evaluator(x) == F(1, 2)
        assert targets["root"].evaluator(x) == math.sqrt(0.5)

    def test_dimension_validated(self):
        with pytest.raises(DomainError):
            builtin_targets(0)

    def test_registry_is_memoized(self):
        assert builtin_targets(1)["mean"] is builtin_targets(1)["mean"]


class TestCheckHolder:
    def test_correct_claim_passes(self):
        check_holder(HolderFunctionSpec(lambda x: x[0], 1, 1.0, 1.0, 1.0),
                     pairs=500, name="identity")

    def test_understated_constant_caught(self):
        doubled = HolderFunctionSpec(lambda x: 2 * x[0], 1, 1.0, 1.0, 2.0)
        with pytest.raises(DomainError):
            check_holder(doubled, pairs=500, name="doubled")

    def test_overstated_exponent_caught(self):
        sqrt_spec = HolderFunctionSpec(lambda x: math.sqrt(float(x[0])),
                                       1, 1.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            check_holder(sqrt_spec, pairs=500, name="sqrt-as-lipschitz")


class TestSupError:
    def test_constant_approximator_is_exact(self):
        spec = builtin_targets(1)["const"]
        bundle = build_approximator(spec, F(1, 10))
        report = sup_error(bundle, spec, n_per_axis=51, bound=bundle.error_bound)
        assert report.sup_error == 0.0 and report.passed

    def test_linear_frozen_maximum(self):
        spec = builtin_targets(1)["mean"]
        bundle = build_approximator(spec, F(1, 5))
        report = sup_error(bundle, spec, n_per_axis=1001, bound=bundle.error_bound)
        # worst scanned point is x = 1: cell 5, representative 5/6
        assert report.sup_error == pytest.approx(1 / 6)
        assert report.argmax_point == (F(1),)
        assert report.passed
        assert report.holder_slack == pytest.approx(1 / 6)
        assert report.sup_upper_bound == pytest.approx(1 / 3)

    def test_maxcoord_two_dimensional(self):
        spec = builtin_targets(2)["maxcoord"]
        bundle = build_approximator(spec, F(1, 4))
        report = sup_error(bundle, spec, n_per_axis=51, bound=bundle.error_bound)
        assert report.passed

    def test_without_bound_pass_is_undetermined(self):
        spec = builtin_targets(1)["mean"]
        bundle = build_approximator(spec, F(1, 5))
        report = sup_error(bundle, spec.evaluator, n_per_axis=11)
        assert report.passed is None and report.theoretical_bound is None
        assert report.holder_slack is None  # bare evaluator carries no constants

    def test_needs_two_points_per_axis(self):
        spec = builtin_targets(1)["mean"]
        bundle = build_approximator(spec, F(1, 2))
        with pytest.raises(DomainError):
            sup_error(bundle, spec, n_per_axis=1)


class TestEquivalenceCheck:
    def test_network_equals_itself(self):
        net = random_network(random.Random(1), 2, 2, 4)
        report = equivalence_check(net, net)
        assert report.equivalent and report.max_abs_diff == 0.0
        assert report.first_divergence is None

    def test_lowering_outputs_equivalent(self):
        rng = random.Random(2)
        net = random_network(rng, 2, 2, 4)
        tern, _ = ternarize(net)
        binr, _ = binarize(tern)
        assert equivalence_check(net, tern, n_samples=50).equivalent
        assert equivalence_check(tern, binr, n_samples=50).equivalent

    def test_divergence_reported_and_symmetric(self):
        rng = random.Random(3)
        a = random_network(rng, 1, 1, 3)
        while True:
            b = random_network(rng, 1, 1, 3)
            if equivalence_check(a, b, n_samples=20).equivalent is False:
                break
        fwd = equivalence_check(a, b, n_samples=100, seed=9)
        rev = equivalence_check(b, a, n_samples=100, seed=9)
        assert fwd.max_abs_diff == rev.max_abs_diff
        assert fwd.first_divergence is not None
        assert fwd.first_divergence["point"] == rev.first_divergence["point"]

    def test_determinism(self):
        rng = random.Random(4)
        a = random_network(rng, 2, 1, 3)
        b = random_network(rng, 2, 1, 3)
        assert equivalence_check(a, b, seed=7) == equivalence_check(a, b, seed=7)

    def test_dimension_mismatch_rejected(self):
        a = random_network(random.Random(5), 1, 1, 3)
        b = random_network(random.Random(5), 2, 1, 3)
        with pytest.raises(DimensionError):
            equivalence_check(a, b)

    def test_float_mode_with_tolerance(self):
        net = random_network(random.Random(6), 2, 2, 4)
        report = equivalence_check(net, net, mode="float", tolerance=1e-9)
        assert report.equivalent


class TestRandomNetwork:
    def test_deterministic_given_seed(self):
        assert random_network(random.Random(8), 2, 3, 5) == \
            random_network(random.Random(8), 2, 3, 5)

    def test_respects_alphabet_and_shape(self):
        rng = random.Random(9)
        net = random_network(rng, 3, 2, 6, alphabet=WeightSet.TERNARY_HALF)
        assert validate(net, WeightSet.TERNARY_HALF).passed
        assert net.depth == 2
        assert net.input_dim == 3
        assert net.output_dim == 1
        assert all(1 <= w <= 6 for w in net.width_vector[1:-1])

    def test_density_zero_gives_all_zeros(self):
        net = random_network(random.Random(10), 2, 1, 3, density=0.0)
        assert all(e == 0 for m in net.matrices for e in m.entries)

    def test_unrestricted_alphabet_rejected(self):
        with pytest.raises(DomainError):
            random_network(random.Random(11), 1, 1, 2,
                           alphabet=WeightSet.UNRESTRICTED)


class TestBundleStatsAndReport:
    def test_stats_match_materialized_counts(self):
        spec = builtin_targets(2)["mean"]
        bundle = build_approximator(spec, F(1, 3))
        stats = bundle_stats(bundle)
        d, M = 2, bundle.grid.M
        assert stats["depth"] == 2
        assert stats["widths"] == (d + 1, d * M + 1, (M + 1) ** d, 1)
        nnz = (bundle.thresholds.nonzero_count()
               + bundle.selector.nonzero_count()
               + sum(1 for v in bundle.readout if v))
        assert stats["sparsity"] == nnz

    def test_implicit_selector_count_matches_formula(self):
        grid = GridSpec(2, 3)
        materialized = build_selector_matrix(grid).nonzero_count()
        cells = grid.cell_count
        assert materialized == (cells - 1) + cells * 2 * 3

    def test_rows_and_columns(self):
        rows = report_rows([1], ["1/4", "1/8", "1/16"], ["mean"], n_per_axis=101)
        assert len(rows) == 3
        assert all(tuple(r) == CSV_COLUMNS for r in rows)
        assert [r["M"] for r in rows] == [4, 8, 16]
        assert rows[0]["widths"] == "2x5x5x1"
        assert all(r["pass"] for r in rows)
        sups = [float(r["sup_error"]) for r in rows]
        assert sups == sorted(sups, reverse=True)

    def test_unknown_target_rejected(self):
        with pytest.raises(DomainError):
            report_rows([1], ["1/4"], ["nope"])

    def test_csv_layout_and_determinism(self, tmp_path):
        rows = report_rows([1], ["1/4"], ["mean", "maxcoord"], n_per_axis=51)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_report_csv(p1, rows)
        write_report_csv(p2, report_rows([1], ["1/4"], ["mean", "maxcoord"],
                                         n_per_axis=51))
        data = p1.read_bytes()
        assert data == p2.read_bytes()
        lines = data.decode().splitlines()
        assert lines[0] == "target,d,beta,K,eps,M,depth,widths,sparsity,sup_error,bound,pass"
        assert len(lines) == 3
        assert b"\r" not in data

    def test_empty_rows_give_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_report_csv(path, [])
        assert path.read_text() == \
            "target,d,beta,K,eps,M,depth,widths,sparsity,sup_error,bound,pass\n"
