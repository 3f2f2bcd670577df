import numpy as np
import pytest

from loclc.model import LocalModel, ModelConfig, random_weights


def make_model(h=1, channels=1, hidden=4, n_resblocks=1, n_mixtures=2, seed=0):
    config = ModelConfig(h=h, channels=channels, hidden=hidden,
                         n_resblocks=n_resblocks, n_mixtures=n_mixtures)
    return LocalModel(config, random_weights(config, seed=seed))


@pytest.fixture
def tiny_model():
    return make_model()


def smooth_field(rng, H, W, coarse=6):
    """Bilinearly upsampled coarse noise: the smooth backbone of a test image."""
    g = rng.uniform(0, 1, (coarse, coarse))
    ys = np.linspace(0, coarse - 1, H)
    xs = np.linspace(0, coarse - 1, W)
    y0 = np.clip(ys.astype(int), 0, coarse - 2)
    x0 = np.clip(xs.astype(int), 0, coarse - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    a = g[np.ix_(y0, x0)]
    b = g[np.ix_(y0, x0 + 1)]
    c = g[np.ix_(y0 + 1, x0)]
    d = g[np.ix_(y0 + 1, x0 + 1)]
    return a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx + c * fy * (1 - fx) + d * fy * fx


def natural_image(seed, H=24, W=32):
    """Photograph-like RGB test content: smooth shading, an edge, fine grain."""
    rng = np.random.default_rng(seed)
    base = smooth_field(rng, H, W)
    img = np.zeros((H, W, 3))
    tint = rng.uniform(0.6, 1.0, 3)
    for ch in range(3):
        img[:, :, ch] = base * tint[ch]
    yy, xx = np.mgrid[0:H, 0:W]
    edge = (xx + yy * rng.uniform(-0.8, 0.8)) > W * rng.uniform(0.3, 0.7)
    img[edge] *= rng.uniform(0.4, 0.8)
    img += rng.normal(0, 0.02, img.shape)
    return np.clip(img * 255, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def natural_images():
    return [natural_image(seed) for seed in (11, 22, 33)]
