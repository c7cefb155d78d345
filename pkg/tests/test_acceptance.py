"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL/SKIP line that is printed in pytest's terminal
summary. Criterion 8 needs real photographs: point ``POVMREMAP_STANDARD_IMAGES``
at a directory holding 8-bit ``peppers`` and ``barbara`` images (PGM or PNG).
"""

import contextlib
import filecmp
import math
import os
from pathlib import Path

import numpy as np
import pytest

from povmremap import _accel
from povmremap.baselines import between_class_variance, multi_otsu
from povmremap.cli import main
from povmremap.estimation import Component, IntensityModel
from povmremap.image_core import GrayImage, Histogram, four_mode_fixture, load_image, ramp_image, save_image
from povmremap.metrics import C1, psnr, shannon_entropy, ssim_global
from povmremap.naimark import ancilla_distribution, dilate, kraus_from_povm, sample_outcomes, total_variation
from povmremap.pipeline import compare_methods
from povmremap.povm import INF, build_povm, gaussian_responses, measure_probabilities, normalize, sharpen
from povmremap.remap import remap_image

from otsu_oracle import exhaustive_best, random_histograms

STANDARD_IMAGES_ENV = "POVMREMAP_STANDARD_IMAGES"


@pytest.fixture
def criterion(request):
    @contextlib.contextmanager
    def record(num, desc):
        detail = {}
        try:
            yield detail
        except pytest.skip.Exception as exc:
            request.config._criteria[num] = ("SKIP", desc, str(exc))
            print(f"criterion {num}: SKIP - {desc}")
            raise
        except BaseException:
            request.config._criteria[num] = ("FAIL", desc, detail.get("info", ""))
            print(f"criterion {num}: FAIL - {desc}")
            raise
        request.config._criteria[num] = ("PASS", desc, detail.get("info", ""))
        print(f"criterion {num}: PASS - {desc}")

    return record


def random_model(rng):
    k = int(rng.integers(1, 9))
    mus = np.sort(rng.choice(np.arange(256), size=k, replace=False) + rng.uniform(-0.49, 0.49, k)).clip(0, 255)
    if rng.random() < 0.5:
        return IntensityModel.from_means(mus, rng.uniform(0.5, 80))
    sig = rng.uniform(0.5, 80, k)
    w = rng.uniform(0.01, 1, k)
    w /= w.sum()
    return IntensityModel(tuple(Component(float(m), float(s), float(x)) for m, s, x in zip(mus, sig, w)), "gmm")


def test_c1_povm_validity(criterion):
    rng = np.random.default_rng(1)
    with criterion(1, "POVM columns sum to 1 within 1e-9, entries in [0,1], 1000 configs") as d:
        worst = 0.0
        for _ in range(1000):
            povm = build_povm(random_model(rng), rng.uniform(0.1, 64))
            c = povm.coeffs
            assert np.all(c >= 0) and np.all(c <= 1)
            worst = max(worst, float(np.max(np.abs(c.sum(axis=0) - 1))))
        d["info"] = f"max column error {worst:.2e}"
        assert worst <= 1e-9


def test_c2_sharpness(criterion):
    rng = np.random.default_rng(2)
    with criterion(2, "gamma=400 concentrates >= 1-1e-6 on argmax; monotone concentration") as d:
        checked = 0
        for _ in range(200):
            base = normalize(gaussian_responses(random_model(rng)))
            c = base.coeffs
            if c.shape[0] < 2:
                continue
            top2 = np.sort(c, axis=0)[-2:]
            eligible = top2[0] <= 0.9 * top2[1]
            hard = sharpen(base, 400).coeffs
            arg = np.argmax(c, axis=0)
            mass = hard[arg, np.arange(256)]
            assert np.all(mass[eligible] >= 1 - 1e-6)
            checked += int(eligible.sum())
            peaks = [sharpen(base, g).coeffs.max(axis=0) for g in (1, 2, 4, 8, 16)]
            for lo, hi in zip(peaks, peaks[1:]):
                assert np.all(hi >= lo - 1e-12)
        d["info"] = f"{checked} eligible columns"
        assert checked > 1000


def test_c3_consistency(criterion):
    img = ramp_image()
    with criterion(3, "ramp error non-increasing over K=4..32; K=256, gamma=inf exact") as d:
        errs = []
        for k in (4, 8, 16, 32):
            spacing = 255 / (k - 1)
            model = IntensityModel.from_means(np.linspace(0, 255, k), spacing / 2)
            res = remap_image(img, build_povm(model, 1.0))
            errs.append(int(np.max(np.abs(res.quantized.pixels.astype(int) - img.pixels))))
        d["info"] = f"max errors {errs}"
        assert all(b <= a for a, b in zip(errs, errs[1:]))
        ident = IntensityModel.from_means(np.arange(256), 0.5)
        assert remap_image(img, build_povm(ident, INF)).quantized == img


def test_c4_naimark(criterion):
    rng = np.random.default_rng(4)
    with criterion(4, "dilation matches POVM within 1e-12; completeness 1e-10; TV <= 0.01 at n=1e5") as d:
        worst_tv = 0.0
        for k in range(1, 9):
            povm = build_povm(random_model_k(rng, k), rng.choice([0.5, 1.0, 2.0, 16.0, INF]))
            kraus = kraus_from_povm(povm)
            assert kraus.completeness_error() <= 1e-10
            for i in range(256):
                p = ancilla_distribution(dilate(kraus, i))
                assert np.max(np.abs(p - measure_probabilities(povm, i))) <= 1e-12
            for i in (0, 100, 255):
                state = dilate(kraus, i)
                emp = sample_outcomes(state, 100000, seed=7 + i) / 100000
                worst_tv = max(worst_tv, total_variation(emp, ancilla_distribution(state)))
        d["info"] = f"max TV {worst_tv:.4g}"
        assert worst_tv <= 0.01


def random_model_k(rng, k):
    mus = np.sort(rng.choice(np.arange(256), size=k, replace=False)).astype(float)
    return IntensityModel.from_means(mus, rng.uniform(1, 60))


def test_c5_metric_analytics(criterion):
    with criterion(5, "entropy 8 and 1 bit; PSNR 30 dB at MSE 65.025; SSIM(0,255) = C1/(65025+C1)"):
        assert shannon_entropy(ramp_image()) == 8.0
        assert shannon_entropy(GrayImage(np.array([[0, 255]]))) == 1.0
        a = np.zeros(40 * 25)
        b = np.zeros_like(a)
        b[:254] = 16
        b[254] = 1  # 254 * 256 + 1 = 65025 squared error over 1000 pixels
        assert np.mean((a - b) ** 2) == pytest.approx(65.025)
        assert psnr(a.reshape(40, 25), b.reshape(40, 25)) == pytest.approx(30.0, abs=0.01)
        zero, full = GrayImage(np.zeros((8, 8))), GrayImage(np.full((8, 8), 255))
        assert ssim_global(zero, full) == pytest.approx(C1 / (65025 + C1), abs=1e-9)


def test_c6_otsu_oracle(criterion):
    hists = random_histograms(200, seed=6)
    with criterion(6, "multi-Otsu DP equals exhaustive search, k<=4, 200 histograms") as d:
        mismatches = 0
        for counts in hists:
            h = Histogram.from_counts(counts)
            for k in (2, 3, 4):
                got = between_class_variance(h, multi_otsu(h, k).thresholds)
                if not math.isclose(got, exhaustive_best(counts, k), rel_tol=1e-10, abs_tol=1e-9):
                    mismatches += 1
        d["info"] = f"{mismatches} mismatches"
        assert mismatches == 0


def test_c7_trend(criterion):
    img = four_mode_fixture()
    with criterion(7, "4-mode fixture: kmeans > gmm > multi-otsu PSNR by >= 1 dB; |dH| kmeans < otsu") as d:
        rows = {m: rep for m, rep, err in compare_methods(img, "fm", 4, 2.0)}
        km, gm, ot = rows["proposed-kmeans"], rows["proposed-gmm"], rows["multi-otsu"]
        d["info"] = (f"PSNR {km.psnr_db:.2f} / {gm.psnr_db:.2f} / {ot.psnr_db:.2f} dB; "
                     f"dH {km.delta_entropy_pct:.1f}% vs {ot.delta_entropy_pct:.1f}%")
        assert km.psnr_db - gm.psnr_db >= 1.0
        assert gm.psnr_db - ot.psnr_db >= 1.0
        assert abs(km.delta_entropy_pct) < abs(ot.delta_entropy_pct)


def _find_standard(directory, name):
    for ext in (".pgm", ".png", ".PGM", ".PNG"):
        for cand in (name, name.capitalize()):
            p = Path(directory) / (cand + ext)
            if p.exists():
                return p
    return None


def test_c8_entropy_band(criterion):
    with criterion(8, "Peppers/Barbara kmeans k=4 gamma=2 dH in [-20%, 0%]") as d:
        directory = os.environ.get(STANDARD_IMAGES_ENV)
        paths = [_find_standard(directory, n) for n in ("peppers", "barbara")] if directory else []
        if not paths or None in paths:
            pytest.skip(f"standard images not supplied (set {STANDARD_IMAGES_ENV})")
        vals = []
        for p in paths:
            rows = {m: rep for m, rep, err in compare_methods(load_image(p), p.stem, 4, 2.0)}
            vals.append(rows["proposed-kmeans"].delta_entropy_pct)
        d["info"] = ", ".join(f"{v:.2f}%" for v in vals)
        assert all(-20.0 <= v <= 0.0 for v in vals)


def _run_all(src, out, threads):
    common = ["--input", str(src), "--out-dir", str(out), "--no-timing", "--threads", str(threads)]
    assert main(["compare", "--k", "4", "--gamma", "2"] + common) == 0
    for est in ("kmeans", "gmm"):
        assert main(["remap", "--estimator", est, "--k", "4", "--dump-float"] + common) == 0
    assert main(["sweep", "--ks", "2,4", "--gammas", "1,inf"] + common) == 0
    assert main(["dilate-verify", "--samples", "2000"] + common) == 0


def test_c9_determinism(criterion, tmp_path, capsys, monkeypatch):
    src = tmp_path / "fm.pgm"
    save_image(four_mode_fixture(), src)
    with criterion(9, "byte-identical CSV/PGM across runs and 1 vs 4 threads") as d:
        dirs = [tmp_path / n for n in ("a", "b", "c", "d")]
        for dd, t in zip(dirs[:3], (1, 1, 4)):
            _run_all(src, dd, t)
        with monkeypatch.context() as m:
            m.setattr(_accel, "USE_NUMBA", False)  # thread-pool path of the numpy kernels
            _run_all(src, dirs[3], 4)
        names = sorted(p.name for p in dirs[0].iterdir())
        assert any(n.endswith(".pgm") for n in names) and any(n.endswith(".csv") for n in names)
        for other in dirs[1:]:
            assert sorted(p.name for p in other.iterdir()) == names
            _, mismatch, errors = filecmp.cmpfiles(dirs[0], other, names, shallow=False)
            assert not mismatch and not errors
        d["info"] = f"{len(names)} files compared"
    capsys.readouterr()
