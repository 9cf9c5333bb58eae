"""Rank tests against hand enumerations and the reference implementations:
midranks, exact and normal-approximation U, tie-corrected H, chi-square
tail, and the family-wise correction."""

import numpy as np
import pytest
import scipy.stats as ss

import pedcross.stats as st


def test_rankdata_midranks():
    x = [3.0, 1.0, 4.0, 1.0, 5.0]
    assert np.array_equal(st.rankdata(x), [3.0, 1.5, 4.0, 1.5, 5.0])
    rng = np.random.default_rng(0)
    y = rng.integers(0, 6, size=40).astype(float)
    assert np.allclose(st.rankdata(y), ss.rankdata(y), rtol=0, atol=0)


def test_u_complete_separation_exact():
    a = [1.0, 2.0, 3.0]
    b = [4.0, 5.0, 6.0]
    res = st.mann_whitney_u(a, b, alternative="less")
    assert res.method == "exact"
    assert res.statistic == 0.0
    # 1 of C(6,3) = 20 assignments has U <= 0
    assert abs(res.p_value - 0.05) < 1e-12
    two = st.mann_whitney_u(a, b)
    assert abs(two.p_value - 0.10) < 1e-12
    assert st.mann_whitney_u(a, b, alternative="greater").p_value == 1.0


def test_u_statistics_mirror():
    rng = np.random.default_rng(1)
    a = rng.normal(size=15)
    b = rng.normal(size=11)
    ua = st.mann_whitney_u(a, b).statistic
    ub = st.mann_whitney_u(b, a).statistic
    assert ua + ub == 15 * 11


def test_u_exact_matches_reference_without_ties():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a = rng.normal(size=int(rng.integers(2, 8)))
        b = rng.normal(size=int(rng.integers(2, 8)))
        for alt in ("two-sided", "less", "greater"):
            ours = st.mann_whitney_u(a, b, alternative=alt)
            ref = ss.mannwhitneyu(a, b, alternative=alt, method="exact")
            assert ours.statistic == ref.statistic
            assert abs(ours.p_value - ref.pvalue) < 1e-12


def test_u_normal_matches_reference_with_ties():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = rng.integers(0, 8, size=int(rng.integers(12, 30))).astype(float)
        b = rng.integers(0, 8, size=int(rng.integers(12, 30))).astype(float)
        for alt in ("two-sided", "less", "greater"):
            ours = st.mann_whitney_u(a, b, alternative=alt)
            assert ours.method == "normal"
            ref = ss.mannwhitneyu(a, b, alternative=alt, method="asymptotic")
            assert ours.statistic == ref.statistic
            assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_u_all_values_identical():
    res = st.mann_whitney_u(np.ones(20), np.ones(15))
    assert res.p_value == 1.0


def test_h_identical_groups():
    g = [np.full(6, 2.0), np.full(5, 2.0), np.full(7, 2.0)]
    res = st.kruskal_wallis_h(g)
    assert res.statistic == 0.0
    assert res.p_value == 1.0
    assert res.group_sizes == (6, 5, 7)


def test_h_matches_reference():
    rng = np.random.default_rng(4)
    for ngroups in (2, 3, 5):
        for tie in (False, True):
            groups = []
            for _ in range(ngroups):
                n = int(rng.integers(5, 20))
                if tie:
                    groups.append(rng.integers(0, 6, size=n).astype(float))
                else:
                    groups.append(rng.normal(size=n))
            ours = st.kruskal_wallis_h(groups)
            ref = ss.kruskal(*groups)
            assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
            assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_chi2_sf_against_reference():
    for df in (1, 2, 3, 7, 10):
        for x in (0.0, 0.5, 1.0, 2.3, 5.0, 10.0, 30.0):
            assert st.chi2_sf(x, df) == pytest.approx(
                ss.chi2.sf(x, df), rel=1e-10, abs=1e-300)


def test_normal_sf_against_reference():
    for z in (-3.0, -1.0, 0.0, 0.5, 2.0, 5.0):
        assert st.normal_sf(z) == pytest.approx(ss.norm.sf(z), rel=1e-12)


def test_bonferroni_scales_and_caps():
    base = st.TestResult(statistic=1.0, p_value=0.02, group_sizes=(5, 5),
                         statistic_name="U", method="exact")
    adj = st.bonferroni(base, 3)
    assert adj.p_value == pytest.approx(0.06)
    assert adj.correction == "bonferroni(3)"
    assert st.bonferroni(base, 1).p_value == base.p_value
    assert st.bonferroni(base, 100).p_value == 1.0
    with pytest.raises(ValueError):
        st.bonferroni(base, 0)


def test_input_validation():
    with pytest.raises(ValueError):
        st.mann_whitney_u([], [1.0])
    with pytest.raises(ValueError):
        st.kruskal_wallis_h([[1.0, 2.0]])
    with pytest.raises(ValueError):
        st.kruskal_wallis_h([[1.0], []])
