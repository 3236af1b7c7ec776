import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from runcount import outliers, stats
from runcount.errors import RuncountError

ALL_METHODS = [outliers.iqr_method(), outliers.percentile_method(), outliers.modified_z_method()]


def test_iqr_flags_only_the_extreme_value():
    mask = outliers.detect([1, 2, 3, 4, 100], outliers.iqr_method())
    assert mask.flags == (False, False, False, False, True)
    assert mask.kept_count == 4


def test_modified_z_flags_only_the_extreme_value():
    assert outliers.detect([1, 2, 3, 4, 100], outliers.modified_z_method()).flags == (False,) * 4 + (True,)


@pytest.mark.parametrize("method", ALL_METHODS, ids=lambda m: m.kind.value)
def test_constant_sample_has_no_outliers(method):
    assert not any(outliers.detect([3.3] * 12, method).flags)


def test_percentile_full_range_flags_nothing():
    xs = np.random.default_rng(0).lognormal(0, 2, 40)
    assert not any(outliers.detect(xs, outliers.percentile_method(0, 100)).flags)


def test_fence_values_are_kept():
    # q25 = 2, q75 = 4, upper fence = 7 exactly
    assert outliers.detect([1, 2, 3, 4, 5, 7], outliers.iqr_method()).flags[-1] is False


def test_modified_z_zero_mad_flags_nothing():
    assert not any(outliers.detect([1, 1, 1, 1, 50], outliers.modified_z_method()).flags)


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind=outliers.OutlierKind.IQR, k=0), dict(kind=outliers.OutlierKind.PERCENTILE, lower=50, upper=10),
     dict(kind=outliers.OutlierKind.MODIFIED_Z, t=-1)],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(RuncountError):
        outliers.OutlierMethod(**kwargs)


@pytest.mark.parametrize("code, kind", [(1, "IQR"), ("2", "Percentile"), (3, "ModifiedZ")])
def test_method_codes(code, kind):
    m = outliers.method_from_code(code)
    assert m.kind.value == kind and m.code == int(code)
    with pytest.raises(RuncountError):
        outliers.method_from_code(4)


def test_filter_examples():
    xs = [1, 2, 3, 4, 100]
    mask = outliers.detect(xs, outliers.iqr_method())
    assert outliers.filter_sample(xs, mask).tolist() == [1, 2, 3, 4]
    assert outliers.filter_sample(xs, outliers.OutlierMask((False,) * 5)).tolist() == xs
    assert outliers.filter_sample([5, 1, 9], outliers.OutlierMask((False, True, False))).tolist() == [5, 9]


def test_filter_errors():
    with pytest.raises(RuncountError):
        outliers.filter_sample([1, 2], outliers.OutlierMask((False,)))
    with pytest.raises(RuncountError, match="empty after filtering"):
        outliers.filter_sample([1, 2], outliers.OutlierMask((True, True)))


sample_lists = st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=50)


@settings(max_examples=200, deadline=None)
@given(sample_lists)
def test_matches_oracle_rules(xs):
    for code, oracle in oracles.FLAGGERS.items():
        assert list(outliers.detect(xs, outliers.method_from_code(code)).flags) == oracle(xs)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=51).filter(lambda xs: len(xs) % 2 == 1))
def test_median_element_never_flagged(xs):
    med = stats.median(xs)
    for method in (outliers.iqr_method(), outliers.modified_z_method()):
        flags = outliers.detect(xs, method).flags
        assert not any(f for x, f in zip(xs, flags) if x == med)


@settings(max_examples=200, deadline=None)
@given(sample_lists)
def test_filtered_sample_excludes_flagged(xs):
    for method in ALL_METHODS:
        mask = outliers.detect(xs, method)
        if mask.kept_count == 0:
            continue
        kept = outliers.filter_sample(xs, mask).tolist()
        assert len(kept) == mask.kept_count
        flagged_positions = [i for i, f in enumerate(mask.flags) if f]
        kept_positions = [i for i, f in enumerate(mask.flags) if not f]
        assert kept == [xs[i] for i in kept_positions]
        assert not set(flagged_positions) & set(kept_positions)


@settings(max_examples=200)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=5, max_size=50),
    st.sampled_from([0.5, 2.0, 4.0]),
    st.sampled_from([0.0, 8.0, -16.0]),
)
def test_flags_invariant_under_exact_affine_maps(xs, a, b):
    # power-of-two scales and small integer shifts keep the transform exact on the fences
    moved = [a * x + b for x in xs]
    if any((y - b) / a != x for x, y in zip(xs, moved)):
        return
    for method in (outliers.iqr_method(), outliers.modified_z_method()):
        assert outliers.detect(xs, method).flags == outliers.detect(moved, method).flags
