import math

import numpy as np
import pytest

from divsel.catalogs import FeatureCatalog, GenreCatalog
from divsel.datagen import gen_claim33
from divsel.distance import DistanceOracle
from divsel.objectives import (
    DISP_SPEC,
    ILD_SPEC,
    SQRT2,
    ObjectiveSpec,
    adjusted_sigma,
    dispersion,
    evaluate,
    gild,
    ild,
    kernel_distance,
    kernel_distance_arr,
)
from divsel.optimize import brute_force
from divsel.util import rng_for


def line_oracle(values):
    cat = FeatureCatalog(np.asarray(values, dtype=float)[:, None])
    return DistanceOracle.from_features(cat, "euclidean", cache="full")


def random_oracle(n, seed, dim=2):
    pts = rng_for(seed, "obj-test").random((n, dim))
    return DistanceOracle.from_features(FeatureCatalog(pts), "euclidean", cache="full")


# --- ILD ---------------------------------------------------------------

def test_ild_pair_is_distance():
    o = line_oracle([0.0, 2.5])
    assert ild(o, [0, 1]).value == 2.5


def test_ild_three_on_line():
    o = line_oracle([0.0, 1.0, 2.0])
    assert ild(o, [0, 1, 2]).value == pytest.approx(4.0 / 3.0, abs=1e-15)


def test_ild_undefined_below_two():
    o = line_oracle([0.0, 1.0])
    assert not ild(o, [0]).defined
    assert ild(o, [0]).or_zero() == 0.0


def test_claim33_endpoint_set_maximizes_ild():
    # brute force over all size-4 subsets confirms the duplicated endpoints win
    o = DistanceOracle.from_features(gen_claim33(4), "euclidean", cache="full")
    best = brute_force(o, ILD_SPEC, 4)
    assert best.one_optimal_set == (0, 1, 2, 3)  # two copies of 1, two of n
    assert best.optimum_value == pytest.approx(2.0, abs=1e-12)
    assert ild(o, (0, 1, 2, 3)).value == pytest.approx(2.0, abs=1e-12)


# --- dispersion --------------------------------------------------------

def test_dispersion_examples():
    o = line_oracle([0.0, 1.0, 3.0])
    assert dispersion(o, [0, 1]).value == 1.0
    assert dispersion(o, [0, 1, 2]).value == 1.0
    assert not dispersion(o, [1]).defined


def test_dispersion_zero_for_identical_genre_sets():
    cat = GenreCatalog((frozenset({"x"}), frozenset({"x"}), frozenset({"y"})))
    o = DistanceOracle.from_genres(cat)
    assert dispersion(o, [0, 1, 2]).value == 0.0


# --- kernel distance ---------------------------------------------------

def test_kernel_distance_anchors():
    assert kernel_distance(0.0, 1.0) == 0.0
    assert kernel_distance(1e9, 1.0) == SQRT2  # exponent underflows, clamps
    assert kernel_distance(math.sqrt(2.0 * math.log(2.0)), 1.0) == pytest.approx(1.0, abs=1e-15)


def test_kernel_distance_monotone_in_d_and_inv_sigma():
    # strict until the value saturates at sqrt(2) in float
    ds = np.linspace(0.0, 3.0, 50)
    vals = kernel_distance_arr(ds, 0.7)
    assert np.all(np.diff(vals) > 0)
    sigmas = np.geomspace(0.25, 10, 30)
    vals_s = np.array([kernel_distance(1.3, s) for s in sigmas])
    assert np.all(np.diff(vals_s) < 0)  # increasing in 1/sigma
    wide = np.array([kernel_distance(1.3, s) for s in np.geomspace(0.01, 10, 40)])
    assert np.all(np.diff(wide) <= 0)


def test_kernel_distance_bounds():
    vals = kernel_distance_arr(np.linspace(0, 100, 1000), 0.3)
    assert np.all(vals >= 0.0) and np.all(vals <= SQRT2)


# --- GILD --------------------------------------------------------------

def test_gild_pair_and_constant_distances():
    o = line_oracle([0.0, 1.5])
    assert gild(o, [0, 1], 0.8).value == kernel_distance(1.5, 0.8)
    # equilateral: all pairwise distances equal -> exactly the kernel value
    tri = FeatureCatalog(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]))
    ot = DistanceOracle.from_features(tri, "euclidean")
    v = gild(ot, [0, 1, 2], 0.5).value
    assert v == pytest.approx(kernel_distance(ot.distance(0, 1), 0.5), abs=1e-12)


def test_gild_large_sigma_approaches_ild():
    o = random_oracle(12, seed=1)
    items = range(12)
    sigma = 1e6 * o.diameter()
    g = gild(o, items, sigma).value
    i = ild(o, items).value
    assert abs(g * sigma - i) / i <= 1e-6


def test_gild_bounds():
    o = random_oracle(15, seed=2)
    for sigma in (1e-3, 0.1, 10.0):
        v = gild(o, range(15), sigma).value
        assert 0.0 <= v <= SQRT2


# --- adjusted bandwidth ------------------------------------------------

def test_adjusted_sigma_equidistant_triple():
    tri = FeatureCatalog(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]))
    o = DistanceOracle.from_features(tri, "euclidean")
    expected = 1.0 / math.sqrt(2.0 * math.log(2.0))
    assert adjusted_sigma(o, [0, 1, 2], "adjusted_min") == pytest.approx(expected, abs=1e-12)
    assert adjusted_sigma(o, [0, 1, 2], "adjusted_med") == pytest.approx(expected, abs=1e-12)


def test_adjusted_sigma_four_collinear_median_convention():
    # pair distances {1,1,1,2,2,3}: median = mean of the central two = 1.5
    o = line_oracle([0.0, 1.0, 2.0, 3.0])
    expected = 1.5 / math.sqrt(2.0 * math.log(5.0))
    assert adjusted_sigma(o, [0, 1, 2, 3], "adjusted_med") == pytest.approx(expected, abs=1e-14)


def test_adjusted_min_le_adjusted_med():
    for seed in range(6):
        o = random_oracle(10, seed=100 + seed)
        items = rng_for(seed, "subset").choice(10, size=6, replace=False)
        lo = adjusted_sigma(o, items, "adjusted_min")
        hi = adjusted_sigma(o, items, "adjusted_med")
        assert lo <= hi


def test_adjusted_sigma_undefined_below_three():
    o = line_oracle([0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        adjusted_sigma(o, [0, 1], "adjusted_min")


# --- spec / evaluate ----------------------------------------------------

def test_objective_spec_parse_and_label():
    assert ObjectiveSpec.parse("ild") == ILD_SPEC
    assert ObjectiveSpec.parse("disp") == DISP_SPEC
    s = ObjectiveSpec.parse("gild:fixed=0.5")
    assert s.kind == "gild" and s.sigma == 0.5
    assert ObjectiveSpec.parse("gild:adjusted_med").scheme == "adjusted_med"
    assert ObjectiveSpec.parse(ObjectiveSpec.parse("gild:fixed=0.5").label()) == s
    with pytest.raises(ValueError):
        ObjectiveSpec.parse("gild")
    with pytest.raises(ValueError):
        ObjectiveSpec("gild", scheme="fixed", sigma=-1.0)
    with pytest.raises(ValueError):
        ObjectiveSpec("ild", sigma=2.0)


def test_evaluate_dispatch_and_adjusted_two_items_undefined():
    o = line_oracle([0.0, 1.0, 3.0])
    assert evaluate(o, ILD_SPEC, [0, 2]).value == 3.0
    assert evaluate(o, DISP_SPEC, [0, 1, 2]).value == 1.0
    adj = ObjectiveSpec("gild", scheme="adjusted_med")
    assert not evaluate(o, adj, [0, 1]).defined
    assert evaluate(o, adj, [0, 1, 2]).defined


# --- invariants ---------------------------------------------------------

def test_permutation_invariance_bitwise():
    o = random_oracle(9, seed=3)
    orders = ([0, 3, 5, 7], [7, 3, 0, 5], [5, 7, 3, 0])
    for fn in (ild, dispersion):
        vals = {fn(o, order).value for order in orders}
        assert len(vals) == 1
    vals = {gild(o, order, 0.4).value for order in orders}
    assert len(vals) == 1


def test_scale_covariance_power_of_two_exact():
    pts = rng_for(4, "scale-test").random((8, 3))
    o1 = DistanceOracle.from_features(FeatureCatalog(pts), "euclidean")
    o2 = DistanceOracle.from_features(FeatureCatalog(pts * 4.0), "euclidean")
    items = range(8)
    assert ild(o2, items).value == 4.0 * ild(o1, items).value
    assert dispersion(o2, items).value == 4.0 * dispersion(o1, items).value
    # GILD invariant when sigma scales along
    assert gild(o2, items, 4.0 * 0.5).value == gild(o1, items, 0.5).value


def test_duplicate_sensitivity():
    # adding an exact duplicate kills dispersion but moves ILD continuously
    base = np.array([[0.0], [1.0], [3.0]])
    dup = np.vstack([base, [[1.0]]])
    o_base = DistanceOracle.from_features(FeatureCatalog(base), "euclidean")
    o_dup = DistanceOracle.from_features(FeatureCatalog(dup), "euclidean")
    before = ild(o_base, [0, 1, 2]).value
    after = ild(o_dup, [0, 1, 2, 3]).value
    assert dispersion(o_dup, [0, 1, 2, 3]).value == 0.0
    assert abs(after - before) < before  # same order of magnitude, no collapse
    assert after > 0.0
