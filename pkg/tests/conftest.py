import numpy as np
import pytest

from beeseg import GaussianClass, GrayImage, MixtureModel, SynthSpec, synth_histogram


def make_model(weights, means, stddevs) -> MixtureModel:
    return MixtureModel([
        GaussianClass(weight=w, mean=m, stddev=s)
        for w, m, s in zip(weights, means, stddevs)
    ])


def random_model(rng, k=None) -> MixtureModel:
    k = k or int(rng.integers(2, 6))
    return make_model(
        rng.uniform(0.0, 1.0, k),
        rng.uniform(0.0, 255.0, k),
        rng.uniform(0.5, 80.0, k),
    )


def sample_image(model: MixtureModel, width, height, seed):
    """Draw pixels from the mixture; returns (GrayImage, component indices)."""
    rng = np.random.default_rng(seed)
    w, m, s = model.arrays()
    comp = rng.choice(model.k, size=width * height, p=w / w.sum())
    values = np.clip(np.round(rng.normal(m[comp], s[comp])), 0, 255).astype(int)
    return GrayImage(width, height, values), comp


@pytest.fixture
def camera_like_hist():
    """Three-mode histogram shaped like a dark-subject photo."""
    truth = make_model([0.30, 0.45, 0.25], [25.0, 120.0, 180.0], [14.0, 16.0, 12.0])
    return synth_histogram(SynthSpec(truth, pixel_count=65536))


@pytest.fixture
def three_class_truth():
    return make_model([0.30, 0.45, 0.25], [60.0, 110.0, 170.0], [10.0, 16.0, 12.0])
