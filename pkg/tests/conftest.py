import numpy as np
import pytest

from depthbench import DepthRaster, EvalConfig
from depthbench.synthetic import write_challenge


@pytest.fixture
def cfg():
    return EvalConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_raster(rng, h, w, lo=0.5, hi=50.0, hole_p=0.0):
    vals = rng.uniform(lo, hi, (h, w))
    valid = rng.random((h, w)) >= hole_p
    return DepthRaster(np.where(valid, vals, 0.0), valid)


@pytest.fixture(scope="session")
def small_challenge(tmp_path_factory):
    """A tiny on-disk challenge shared by dataset/evaluation/CLI tests."""
    out = tmp_path_factory.mktemp("challenge")
    manifest_path, submission_dir = write_challenge(
        out, n_frames=4, width=48, height=36, seed=11)
    return manifest_path, submission_dir
