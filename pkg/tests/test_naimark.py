import numpy as np
import pytest
from scipy.stats import chi2

from povmremap.errors import IndexOutOfRange, InvalidParamsError
from povmremap.estimation import IntensityModel
from povmremap.image_core import Histogram, compute_histogram, ramp_image
from povmremap.naimark import (ancilla_distribution, dilate, kraus_from_povm, sample_from, sample_outcomes,
                               total_variation)
from povmremap.povm import INF, PovmTable, build_povm, measure_probabilities
from povmremap.pipeline import dilation_verify

from test_povm import row_table


def random_povm(rng, k):
    mus = np.sort(rng.choice(np.arange(256), size=k, replace=False)).astype(float)
    model = IntensityModel.from_means(mus, rng.uniform(1, 60))
    return build_povm(model, rng.choice([0.5, 1.0, 2.0, 7.0, INF]))


def test_kraus_examples():
    k = kraus_from_povm(row_table(*[(0.25, 0.75)] * 256))
    assert k.diag[:, 0] == pytest.approx([0.5, 0.8660254], abs=1e-7)
    one = kraus_from_povm(build_povm(IntensityModel.from_means([100.0], 8.0)))
    assert np.all(one.diag == 1.0)


def test_dilate_examples():
    k = kraus_from_povm(row_table(*[(0.5, 0.5)] * 256))
    s = dilate(k, 17)
    assert s.is_pure
    assert s.as_dict() == pytest.approx({(17, 0): 0.7071068, (17, 1): 0.7071068}, abs=1e-7)
    single = dilate(kraus_from_povm(build_povm(IntensityModel.from_means([100.0], 8.0))), 3)
    assert single.as_dict() == {(3, 0): 1.0}
    with pytest.raises(IndexOutOfRange):
        dilate(k, 256)


def test_exact_equivalence_all_intensities(rng):
    for k in range(1, 9):
        for _ in range(3):
            povm = random_povm(rng, k)
            kraus = kraus_from_povm(povm)
            assert kraus.completeness_error() <= 1e-10
            for i in range(256):
                s = dilate(kraus, i)
                assert abs(s.norm() - 1.0) <= 1e-12
                assert set(s.as_dict()) <= {(i, j) for j in range(k)}
                np.testing.assert_allclose(ancilla_distribution(s), measure_probabilities(povm, i), rtol=0, atol=1e-12)


def test_mixed_states():
    sym = build_povm(IntensityModel.from_means([63.75, 191.25], 30.0))
    p = ancilla_distribution(dilate(kraus_from_povm(sym), compute_histogram(ramp_image())))
    assert p == pytest.approx([0.5, 0.5], abs=1e-12)

    c = np.zeros(256, dtype=np.int64)
    c[[0, 255]] = 5
    hard = build_povm(IntensityModel.from_means([0.0, 255.0], 20.0), INF)
    state = dilate(kraus_from_povm(hard), Histogram.from_counts(c))
    assert not state.is_pure and state.norm() == pytest.approx(1.0, abs=1e-12)
    assert ancilla_distribution(state) == pytest.approx([0.5, 0.5], abs=1e-12)
    with pytest.raises(InvalidParamsError):
        state.as_dict()


def test_mixed_matches_weighted_columns(rng):
    povm = random_povm(rng, 5)
    hist = Histogram.from_counts(rng.integers(0, 20, 256))
    expect = povm.coeffs @ hist.probs
    got = ancilla_distribution(dilate(kraus_from_povm(povm), hist))
    np.testing.assert_allclose(got, expect, atol=1e-12)


def test_sampler_pinned_regression():
    counts = sample_from([0.5, 0.5], 100000, 7)
    assert counts.tolist() == [50027, 49973]
    assert total_variation(counts / 1e5, [0.5, 0.5]) <= 0.01


def test_sampler_basics():
    assert sample_from([1.0, 0.0, 0.0], 1234, 3).tolist() == [1234, 0, 0]
    assert sample_from([0.0, 0.0, 1.0], 10, 3).tolist() == [0, 0, 10]
    with pytest.raises(InvalidParamsError):
        sample_from([1.0], 0, 1)
    a = sample_from([0.2, 0.3, 0.5], 999, 11)
    assert a.sum() == 999 and np.array_equal(a, sample_from([0.2, 0.3, 0.5], 999, 11))


def test_sampler_chi_square(rng):
    n = 100000
    for k in (2, 4, 8):
        povm = random_povm(rng, k)
        for i in (0, 77, 128, 255):
            state = dilate(kraus_from_povm(povm), i)
            p = ancilla_distribution(state)
            obs = sample_outcomes(state, n, seed=1000 + i)
            assert obs.sum() == n
            live = p * n > 5
            if live.sum() < 2:
                continue
            q = p[live] / p[live].sum()
            o = obs[live]
            stat = float(np.sum((o - o.sum() * q) ** 2 / (o.sum() * q)))
            assert stat < chi2.ppf(0.999, live.sum() - 1)


def test_dilation_verify_table():
    povm = build_povm(IntensityModel.from_means([40.0, 120.0, 200.0], 30.0), 2.0)
    check = dilation_verify(povm, 2000, 5, intensities=range(0, 256, 51))
    lines = check.csv.splitlines()
    assert lines[0] == "intensity,k,p_exact,p_empirical,n,seed"
    assert len(lines) == 1 + 6 * 3
    assert lines[1].split(",")[-1] == "5" and lines[-1].split(",")[-1] == "260"
    assert check.max_exact_error <= 1e-12
    assert dilation_verify(povm, 2000, 5, intensities=range(0, 256, 51)).csv == check.csv
