import numpy as np
import pytest

from divsel.catalogs import (
    FeatureCatalog,
    GenreCatalog,
    read_features,
    read_genres,
    write_features,
    write_genres,
)
from divsel.datagen import gen_two_circles
from divsel.distance import DistanceOracle, diameter
from divsel.util import DataError, rng_for


def line_oracle(values, cache="none"):
    cat = FeatureCatalog(np.asarray(values, dtype=float)[:, None])
    return DistanceOracle.from_features(cat, "euclidean", cache=cache)


def test_euclidean_identity_and_345():
    cat = FeatureCatalog(np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 0.0]]))
    o = DistanceOracle.from_features(cat, "euclidean")
    assert o.distance(0, 1) == 5.0
    assert o.distance(0, 2) == 0.0  # identical vectors
    assert o.distance(1, 1) == 0.0


def test_jaccard_from_definition():
    cat = GenreCatalog((frozenset({"a", "b"}), frozenset({"b", "c"})))
    o = DistanceOracle.from_genres(cat)
    assert o.distance(0, 1) == pytest.approx(1.0 - 1.0 / 3.0, abs=1e-15)


def test_jaccard_pseudometric_zero_for_identical_sets():
    cat = GenreCatalog((frozenset({"a"}), frozenset({"a"}), frozenset({"b"})))
    o = DistanceOracle.from_genres(cat)
    assert o.distance(0, 1) == 0.0
    assert o.distance(0, 2) == 1.0


def test_diameter_line_and_pairs():
    o = line_oracle([0.0, 1.0, 5.0])
    assert o.diameter() == 5.0
    assert o.diameter(items=[0, 1]) == o.distance(0, 1)
    with pytest.raises(ValueError):
        o.diameter(items=[2])


def test_two_circles_diameter_bounds():
    cat = gen_two_circles(400, seed=3)
    o = DistanceOracle.from_features(cat, "euclidean")
    assert 1.0 <= o.diameter() <= 2.0


def test_symmetry_bitwise_all_metrics():
    rng = rng_for(5, "sym-test")
    feat = FeatureCatalog(rng.random((30, 4)) + 0.1)
    sets = tuple(
        frozenset(f"g{t}" for t in rng.choice(6, size=rng.integers(1, 4), replace=False))
        for _ in range(30)
    )
    oracles = [
        DistanceOracle.from_features(feat, "euclidean"),
        DistanceOracle.from_features(feat, "cosine"),
        DistanceOracle.from_genres(GenreCatalog(sets)),
    ]
    for o in oracles:
        for i in range(0, 30, 7):
            for j in range(30):
                assert o.distance(i, j) == o.distance(j, i)
                assert o.distance(i, j) >= 0.0


def test_triangle_inequality_euclidean_and_jaccard():
    rng = rng_for(6, "tri-test")
    feat = FeatureCatalog(rng.random((20, 3)))
    sets = tuple(
        frozenset(f"g{t}" for t in rng.choice(8, size=rng.integers(1, 5), replace=False))
        for _ in range(20)
    )
    for o in (DistanceOracle.from_features(feat, "euclidean"),
              DistanceOracle.from_genres(GenreCatalog(sets))):
        for _ in range(300):
            i, j, k = rng.choice(20, size=3, replace=False)
            assert o.distance(i, j) + o.distance(j, k) >= o.distance(i, k) - 1e-12


def test_cache_bitwise_identical_to_uncached():
    rng = rng_for(7, "cache-test")
    feat = FeatureCatalog(rng.random((25, 3)) + 0.05)
    for metric in ("euclidean", "cosine"):
        plain = DistanceOracle.from_features(feat, metric)
        cached = DistanceOracle.from_features(feat, metric, cache="full")
        for i in range(25):
            js = np.arange(25)
            assert np.array_equal(plain.pair_distances(i, js), cached.pair_distances(i, js))
    assert cached.cached and not plain.cached


def test_cosine_range_and_zero_norm_rejection():
    cat = FeatureCatalog(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]))
    o = DistanceOracle.from_features(cat, "cosine")
    assert o.distance(0, 1) == pytest.approx(2.0)  # raw 1 - cos, not clamped to [0,1]
    assert o.distance(0, 2) == pytest.approx(1.0)
    with pytest.raises(DataError):
        DistanceOracle.from_features(
            FeatureCatalog(np.array([[0.0, 0.0], [1.0, 0.0]])), "cosine")


def test_index_out_of_range():
    o = line_oracle([0.0, 1.0])
    with pytest.raises(IndexError):
        o.distance(0, 2)
    with pytest.raises(IndexError):
        o.pair_distances(2, [0])


def test_submatrix_and_pairwise_agree():
    o = line_oracle([0.0, 1.0, 3.0, 7.0], cache="full")
    items = np.array([0, 2, 3])
    sub = o.submatrix(items)
    assert sub[0, 1] == o.distance(0, 2)
    assert sub[0, 2] == o.distance(0, 3)
    pair = o.pairwise(items)
    assert sorted(pair.tolist()) == sorted([3.0, 7.0, 4.0])


def test_feature_csv_roundtrip(tmp_path):
    rng = rng_for(8, "csv-test")
    cat = FeatureCatalog(rng.random((12, 3)))
    path = tmp_path / "features.csv"
    write_features(cat, path)
    loaded = read_features(path)
    assert np.array_equal(loaded.vectors, cat.vectors)  # repr round-trips exactly


def test_genre_csv_roundtrip_and_empty_rejection(tmp_path):
    cat = GenreCatalog((frozenset({"a", "b"}), frozenset({"c"})))
    path = tmp_path / "genres.csv"
    write_genres(cat, path)
    assert read_genres(path).sets == cat.sets
    bad = tmp_path / "bad.csv"
    bad.write_text("id,genres\n0,a\n1,\n")
    with pytest.raises(DataError):
        read_genres(bad)


def test_feature_csv_rejects_unordered_ids(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("id,f0\n1,0.0\n0,1.0\n")
    with pytest.raises(DataError):
        read_features(path)
