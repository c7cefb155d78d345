"""Adaptive Gaussian-POVM intensity remapping for grayscale images."""

from .baselines import ThresholdSet, apply_thresholds, multi_otsu, recursive_statistical
from .estimation import Component, IntensityModel, em_log_likelihood, estimate_gmm, estimate_kmeans
from .image_core import GrayImage, Histogram, compute_histogram, load_image, save_image, synth_mixture_image
from .metrics import delta_entropy_pct, psnr, shannon_entropy, ssim_global, ssim_windowed
from .naimark import ancilla_distribution, dilate, kraus_from_povm, sample_outcomes
from .povm import (INF, PovmTable, ResponseTable, build_povm, gaussian_responses, measure_probabilities,
                   normalize, observable_lut, sharpen)
from .remap import RemapResult, probability_map, remap_image

__version__ = "0.1.0"
