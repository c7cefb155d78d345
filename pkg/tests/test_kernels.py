import os
import subprocess
import sys

import numpy as np
import pytest

from povmremap import _accel, kernels


@pytest.mark.parametrize("dtype", [np.uint8, np.float64])
@pytest.mark.parametrize("threads", [1, 3])
def test_apply_lut_backends_identical(rng, dtype, threads):
    px = rng.integers(0, 256, (37, 53)).astype(np.uint8)
    lut = (rng.random(256) * 255).astype(dtype)
    ref = lut[px]
    for b in kernels.BACKENDS:
        out = kernels.apply_lut(px, lut, threads=threads, backend=b)
        assert out.dtype == lut.dtype
        assert np.array_equal(out, ref)


def test_apply_lut_rejects_short_table():
    with pytest.raises(ValueError):
        kernels.apply_lut(np.zeros((2, 2), np.uint8), np.zeros(10))
    with pytest.raises(ValueError):
        kernels.apply_lut(np.zeros((2, 2), np.uint8), np.zeros(256), backend="cuda")


def test_otsu_table_backends_identical(rng):
    for n in (2, 5, 40, 256):
        w = rng.integers(1, 100, n).astype(float)
        x = np.sort(rng.choice(256, n, replace=False)).astype(float)
        W = np.concatenate(([0.0], np.cumsum(w)))
        S = np.concatenate(([0.0], np.cumsum(w * x)))
        k = min(8, n)
        a = kernels.otsu_table(W, S, k, backend="numba")
        b = kernels.otsu_table(W, S, k, backend="numpy")
        assert np.array_equal(a, b)


def test_env_flag_selects_numpy():
    code = "from povmremap import _accel; print(_accel.default_backend())"
    env = dict(os.environ, **{_accel.ENV_FLAG: "1"})
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env[_accel.ENV_FLAG] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if _accel.HAVE_NUMBA else "numpy")
