import math
from datetime import date

import numpy as np
import pytest
import scipy.cluster.hierarchy as sch

from conftest import two_block_returns
from oracles import brute_force_ward, closed_form_ivp, ward_centroid_heights
from portlab.errors import MalformedTree, ZeroVarianceAsset
from portlab.hrp import (
    DistanceMatrix,
    LinkageTree,
    Merge,
    SeriationOrder,
    build_hrp_portfolio,
    cluster_variance,
    correlation_distance,
    dendrogram_dict,
    inverse_variance_weights,
    quasi_diagonalize,
    recursive_bisection,
    ward_linkage,
)
from portlab.returns_stats import (
    CorrelationMatrix,
    CovarianceMatrix,
    ReturnsMatrix,
    correlation,
    sample_covariance,
)


def tickers_for(n):
    return tuple(f"T{i:02d}" for i in range(n))


def returns_matrix(values):
    values = np.asarray(values, dtype=float)
    dates = tuple(
        date.fromordinal(date(2019, 1, 1).toordinal() + t) for t in range(values.shape[0])
    )
    return ReturnsMatrix(tickers=tickers_for(values.shape[1]), dates=dates, values=values)


def distance_from(values, labels=None):
    values = np.asarray(values, dtype=float)
    return DistanceMatrix(tickers=labels or tickers_for(values.shape[0]), values=values)


def correlated_returns(rng, n_obs=260, n_assets=8):
    base = rng.normal(0, 0.012, size=(n_obs, n_assets))
    base[:, 1] += 0.8 * base[:, 0]
    base[:, 4] += 0.6 * base[:, 3]
    return returns_matrix(base)


def linkage_as_scipy(tree):
    return np.array([[r.left_id, r.right_id, r.height, r.size] for r in tree.rows], dtype=float)


class TestCorrelationDistance:
    def corr(self, rho):
        values = np.array([[1.0, rho], [rho, 1.0]])
        return CorrelationMatrix(tickers=("A", "B"), values=values)

    def test_perfect_correlation_is_zero_distance(self):
        assert correlation_distance(self.corr(1.0)).values[0, 1] == 0.0

    def test_perfect_anticorrelation_is_unit_distance(self):
        assert correlation_distance(self.corr(-1.0)).values[0, 1] == 1.0

    def test_half_correlation(self):
        assert correlation_distance(self.corr(0.5)).values[0, 1] == pytest.approx(0.5)

    def test_euclidean_mode_proportional_to_sqrt_half(self, rng):
        returns = correlated_returns(rng)
        corr = correlation(sample_covariance(returns))
        sqrt_half = correlation_distance(corr, "sqrt_half")
        euclid = correlation_distance(corr, "euclidean_returns", returns=returns)
        factor = 2.0 * math.sqrt(returns.n_obs - 1)
        assert euclid.values == pytest.approx(factor * sqrt_half.values, abs=1e-9)

    def test_euclidean_mode_requires_returns(self):
        with pytest.raises(ValueError):
            correlation_distance(self.corr(0.5), "euclidean_returns")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            correlation_distance(self.corr(0.5), "chebyshev")


class TestWardLinkage:
    def test_two_assets_single_row(self):
        tree = ward_linkage(distance_from([[0.0, 0.3], [0.3, 0.0]]))
        assert tree.rows == (Merge(0, 1, 0.3, 2),)

    def test_three_asset_hand_computation(self):
        # closest pair (0,2) at 1; then d(merged,1) = sqrt((2*25 + 2*16 - 1)/3) = sqrt(27)
        values = np.array([[0.0, 5.0, 1.0], [5.0, 0.0, 4.0], [1.0, 4.0, 0.0]])
        tree = ward_linkage(distance_from(values))
        assert tree.rows[0] == Merge(0, 2, 1.0, 2)
        assert tree.rows[1].left_id == 1 and tree.rows[1].right_id == 3
        assert tree.rows[1].height == pytest.approx(math.sqrt(27.0), abs=1e-12)
        assert tree.rows[1].size == 3

    def test_all_zero_distances_tie_break_deterministic(self):
        tree = ward_linkage(distance_from(np.zeros((4, 4))))
        assert [(r.left_id, r.right_id, r.height) for r in tree.rows] == [
            (0, 1, 0.0),
            (2, 3, 0.0),
            (4, 5, 0.0),
        ]

    def test_heights_nondecreasing(self, rng):
        for _ in range(10):
            values = rng.uniform(0.1, 2.0, size=(7, 7))
            values = (values + values.T) / 2.0
            np.fill_diagonal(values, 0.0)
            tree = ward_linkage(distance_from(values))
            heights = [r.height for r in tree.rows]
            assert all(b >= a - 1e-12 for a, b in zip(heights, heights[1:]))

    def test_matches_brute_force_recomputation(self, rng):
        for _ in range(8):
            values = rng.uniform(0.05, 1.5, size=(6, 6))
            values = (values + values.T) / 2.0
            np.fill_diagonal(values, 0.0)
            mine = ward_linkage(distance_from(values))
            reference = brute_force_ward(values)
            assert [(r.left_id, r.right_id, r.size) for r in mine.rows] == [
                (a, b, s) for a, b, _, s in reference
            ]
            for row, (_, _, height, _) in zip(mine.rows, reference):
                assert row.height == pytest.approx(height, abs=1e-10)

    def test_matches_scipy_on_euclidean_points(self, rng):
        for _ in range(5):
            points = rng.normal(size=(9, 4))
            diffs = points[:, None, :] - points[None, :, :]
            distances = np.sqrt((diffs**2).sum(axis=2))
            np.fill_diagonal(distances, 0.0)
            distances = (distances + distances.T) / 2.0
            mine = ward_linkage(distance_from(distances))
            theirs = sch.linkage(
                distances[np.triu_indices(9, 1)], method="ward"
            )
            assert np.allclose(linkage_as_scipy(mine), theirs, atol=1e-10)

    def test_heights_match_centroid_formula(self, rng):
        points = rng.normal(size=(8, 3))
        diffs = points[:, None, :] - points[None, :, :]
        distances = np.sqrt((diffs**2).sum(axis=2))
        np.fill_diagonal(distances, 0.0)
        distances = (distances + distances.T) / 2.0
        tree = ward_linkage(distance_from(distances))
        rows = [(r.left_id, r.right_id, r.height, r.size) for r in tree.rows]
        expected = ward_centroid_heights(points, rows)
        assert [r.height for r in tree.rows] == pytest.approx(expected, abs=1e-8)

    def test_alternative_methods_monotone(self, rng):
        values = rng.uniform(0.1, 1.0, size=(6, 6))
        values = (values + values.T) / 2.0
        np.fill_diagonal(values, 0.0)
        for method in ("single", "complete", "average"):
            tree = ward_linkage(distance_from(values), method=method)
            heights = [r.height for r in tree.rows]
            assert all(b >= a - 1e-12 for a, b in zip(heights, heights[1:]))

    @pytest.mark.parametrize("method", ["single", "complete", "average"])
    def test_alternative_methods_match_scipy(self, rng, method):
        values = rng.uniform(0.1, 2.0, size=(8, 8))
        values = (values + values.T) / 2.0
        np.fill_diagonal(values, 0.0)
        mine = ward_linkage(distance_from(values), method=method)
        theirs = sch.linkage(values[np.triu_indices(8, 1)], method=method)
        assert np.allclose(linkage_as_scipy(mine), theirs, atol=1e-10)

    def test_single_linkage_two_points(self):
        tree = ward_linkage(distance_from([[0.0, 0.7], [0.7, 0.0]]), method="single")
        assert tree.rows[0].height == 0.7


class TestQuasiDiagonalize:
    def test_two_leaves(self):
        tree = LinkageTree(n_leaves=2, rows=(Merge(0, 1, 0.5, 2),))
        assert quasi_diagonalize(tree).order == (0, 1)

    def test_three_leaf_expansion(self):
        tree = LinkageTree(n_leaves=3, rows=(Merge(0, 2, 0.1, 2), Merge(1, 3, 0.4, 3)))
        assert quasi_diagonalize(tree).order == (1, 0, 2)

    def test_always_a_permutation(self, rng):
        for n in (2, 5, 9, 16):
            values = rng.uniform(0.1, 1.0, size=(n, n))
            values = (values + values.T) / 2.0
            np.fill_diagonal(values, 0.0)
            order = quasi_diagonalize(ward_linkage(distance_from(values)))
            assert sorted(order.order) == list(range(n))

    def test_matches_scipy_leaf_order(self, rng):
        values = rng.uniform(0.1, 1.0, size=(10, 10))
        values = (values + values.T) / 2.0
        np.fill_diagonal(values, 0.0)
        tree = ward_linkage(distance_from(values))
        mine = quasi_diagonalize(tree).order
        theirs = sch.leaves_list(linkage_as_scipy(tree))
        assert list(mine) == theirs.tolist()

    def test_malformed_tree_rejected_at_construction(self):
        with pytest.raises(MalformedTree):
            LinkageTree(n_leaves=3, rows=(Merge(0, 5, 0.1, 2), Merge(1, 3, 0.2, 3)))
        with pytest.raises(MalformedTree):  # leaf 0 consumed twice
            LinkageTree(n_leaves=3, rows=(Merge(0, 1, 0.1, 2), Merge(0, 3, 0.2, 3)))
        with pytest.raises(MalformedTree):  # wrong size bookkeeping
            LinkageTree(n_leaves=3, rows=(Merge(0, 1, 0.1, 2), Merge(2, 3, 0.2, 2)))


class TestInverseVarianceWeights:
    def test_two_assets(self):
        cov = CovarianceMatrix(tickers=("A", "B"), values=np.diag([1.0, 4.0]))
        assert inverse_variance_weights(cov, [0, 1]) == pytest.approx([0.8, 0.2])

    def test_equal_variances(self):
        cov = CovarianceMatrix(tickers=tickers_for(3), values=np.diag([2.0, 2.0, 2.0]))
        assert inverse_variance_weights(cov, [0, 1, 2]) == pytest.approx([1 / 3] * 3)

    def test_singleton(self):
        cov = CovarianceMatrix(tickers=("A", "B"), values=np.diag([1.0, 4.0]))
        assert inverse_variance_weights(cov, [1]).tolist() == [1.0]

    def test_zero_variance_rejected(self):
        cov = CovarianceMatrix(tickers=("A", "B"), values=np.diag([1.0, 0.0]))
        with pytest.raises(ZeroVarianceAsset) as caught:
            inverse_variance_weights(cov, [0, 1])
        assert caught.value.tickers == ["B"]


class TestClusterVariance:
    def test_two_asset_diagonal(self):
        cov = CovarianceMatrix(tickers=("A", "B"), values=np.diag([1.0, 4.0]))
        assert cluster_variance(cov, [0, 1]) == pytest.approx(0.8)

    def test_singleton_is_own_variance(self):
        cov = CovarianceMatrix(tickers=("A", "B"), values=np.diag([1.0, 4.0]))
        assert cluster_variance(cov, [1]) == pytest.approx(4.0)

    def test_identity_three(self):
        cov = CovarianceMatrix(tickers=tickers_for(3), values=np.eye(3))
        assert cluster_variance(cov, [0, 1, 2]) == pytest.approx(1 / 3)


class TestRecursiveBisection:
    def test_identity_covariance_equal_weights(self):
        cov = CovarianceMatrix(tickers=tickers_for(4), values=np.eye(4))
        weights = recursive_bisection(cov, SeriationOrder((2, 0, 3, 1)))
        assert weights.weights == pytest.approx([0.25] * 4)

    def test_power_scaled_diagonal(self):
        cov = CovarianceMatrix(tickers=tickers_for(4), values=np.diag([1.0, 2.0, 4.0, 8.0]))
        weights = recursive_bisection(cov, SeriationOrder((0, 1, 2, 3)))
        assert weights.weights == pytest.approx([0.533333, 0.266667, 0.133333, 0.066667], abs=1e-6)

    def test_two_assets(self):
        cov = CovarianceMatrix(tickers=("A", "B"), values=np.diag([1.0, 4.0]))
        weights = recursive_bisection(cov, SeriationOrder((0, 1)))
        assert weights.weights == pytest.approx([0.8, 0.2])

    def test_diagonal_covariance_equals_closed_form_ivp(self, rng):
        for n in range(2, 11):
            variances = rng.uniform(0.2, 9.0, size=n)
            cov = CovarianceMatrix(tickers=tickers_for(n), values=np.diag(variances))
            order = SeriationOrder(tuple(rng.permutation(n).tolist()))
            weights = recursive_bisection(cov, order)
            assert np.abs(weights.weights - closed_form_ivp(variances)).max() < 1e-10

    def test_weights_positive_and_normalized(self, rng):
        returns = correlated_returns(rng)
        cov = sample_covariance(returns)
        order = quasi_diagonalize(ward_linkage(correlation_distance(correlation(cov))))
        weights = recursive_bisection(cov, order)
        assert (weights.weights > 0).all()
        assert abs(weights.weights.sum() - 1.0) <= 1e-9

    def test_order_must_cover_assets(self):
        cov = CovarianceMatrix(tickers=tickers_for(3), values=np.eye(3))
        with pytest.raises(ValueError):
            recursive_bisection(cov, SeriationOrder((0, 1)))


class TestBuildHrpPortfolio:
    def test_two_perfectly_correlated_assets(self):
        base = np.array([0.01, -0.02, 0.015, -0.005, 0.02, -0.01])
        returns = returns_matrix(np.column_stack([base, 2.0 * base]))
        result = build_hrp_portfolio(returns)
        assert result.weights.as_dict()["T00"] == pytest.approx(0.8, abs=1e-12)
        assert result.weights.as_dict()["T01"] == pytest.approx(0.2, abs=1e-12)

    def test_ten_asset_structural_contract(self, rng):
        returns = returns_matrix(rng.normal(0, 0.01, size=(120, 10)))
        result = build_hrp_portfolio(returns)
        assert len(result.tree.rows) == 9
        assert (result.weights.weights > 0).all()
        assert abs(result.weights.weights.sum() - 1.0) <= 1e-9
        assert result.weights.method == "HRP"
        assert result.weights.built_on == returns.dates[-1]

    def test_duplicated_column_singular_covariance(self, rng):
        base = rng.normal(0, 0.01, size=(100, 7))
        doubled = np.hstack([base, base[:, 2:3]])
        result = build_hrp_portfolio(returns_matrix(doubled))
        assert (result.weights.weights > 0).all()
        assert abs(result.weights.weights.sum() - 1.0) <= 1e-9

    def test_block_structure_seriates_contiguously(self):
        values, block_of_position = two_block_returns(seed=42)
        result = build_hrp_portfolio(returns_matrix(values))
        blocks_in_order = block_of_position[list(result.order.order)]
        assert len(set(blocks_in_order[:5])) == 1
        assert len(set(blocks_in_order[5:])) == 1

    def test_euclidean_distance_mode_same_tree_shape(self, rng):
        returns = correlated_returns(rng)
        sqrt_half = build_hrp_portfolio(returns, distance_mode="sqrt_half")
        euclid = build_hrp_portfolio(returns, distance_mode="euclidean_returns")
        assert euclid.order.order == sqrt_half.order.order
        assert euclid.weights.weights == pytest.approx(sqrt_half.weights.weights, abs=1e-12)

    def test_metadata_records_configuration(self, rng):
        result = build_hrp_portfolio(correlated_returns(rng), linkage_method="average")
        assert result.weights.metadata["linkage"] == "average"
        assert result.weights.metadata["distance"] == "sqrt_half"
        assert result.weights.metadata["degenerate_splits"] == 0


class TestPermutationBehavior:
    @staticmethod
    def permuted(returns, positions):
        return ReturnsMatrix(
            tickers=tuple(returns.tickers[p] for p in positions),
            dates=returns.dates,
            values=returns.values[:, positions],
        )

    def test_linkage_tree_equivariant_as_ticker_sets(self, rng):
        returns = correlated_returns(rng)
        base = build_hrp_portfolio(returns)
        for _ in range(6):
            positions = rng.permutation(len(returns.tickers))
            other = build_hrp_portfolio(self.permuted(returns, positions))
            for mine, theirs in zip(
                self.merge_ticker_sets(base.tree, base.weights.tickers),
                self.merge_ticker_sets(other.tree, other.weights.tickers),
            ):
                assert mine[0] == theirs[0]
                assert mine[1] == pytest.approx(theirs[1], abs=1e-10)

    @staticmethod
    def merge_ticker_sets(tree, tickers):
        members = {i: frozenset([tickers[i]]) for i in range(tree.n_leaves)}
        out = []
        for k, row in enumerate(tree.rows):
            merged = members[row.left_id] | members[row.right_id]
            members[tree.n_leaves + k] = merged
            out.append((merged, row.height))
        return out

    def test_weight_map_invariant_when_leaf_pair_order_preserved(self, rng):
        # relabeling can flip the stored order of two leaves merged together,
        # which legitimately moves a midpoint split; restrict to permutations
        # that keep every bottom-level pair's relative order
        returns = correlated_returns(rng)
        base = build_hrp_portfolio(returns)
        leaf_pairs = [
            (row.left_id, row.right_id)
            for row in base.tree.rows
            if row.left_id < len(returns.tickers) and row.right_id < len(returns.tickers)
        ]
        base_map = base.weights.as_dict()
        checked = 0
        for _ in range(40):
            positions = rng.permutation(len(returns.tickers))
            new_position = np.argsort(positions)
            if any(new_position[a] > new_position[b] for a, b in leaf_pairs):
                continue
            checked += 1
            other = build_hrp_portfolio(self.permuted(returns, positions))
            other_map = other.weights.as_dict()
            for ticker, weight in base_map.items():
                assert other_map[ticker] == pytest.approx(weight, abs=1e-12)
        assert checked >= 3


class TestDendrogramExport:
    def test_nested_structure(self):
        tree = LinkageTree(n_leaves=3, rows=(Merge(0, 2, 0.1, 2), Merge(1, 3, 0.4, 3)))
        root = dendrogram_dict(tree, ("AAA", "BBB", "CCC"))
        assert root["id"] == 4 and root["height"] == 0.4
        left, right = root["children"]
        assert left == {"id": 1, "ticker": "BBB", "height": 0.0}
        assert [child["ticker"] for child in right["children"]] == ["AAA", "CCC"]

    def test_label_count_checked(self):
        tree = LinkageTree(n_leaves=2, rows=(Merge(0, 1, 0.2, 2),))
        with pytest.raises(ValueError):
            dendrogram_dict(tree, ("only",))
