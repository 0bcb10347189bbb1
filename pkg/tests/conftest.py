import numpy as np
import pytest

from sparse_minimax.design import gen_design, make_signal, synthesize
from sparse_minimax.rng import SeedSpec


@pytest.fixture
def make_instance():
    """Small synthetic instance factory with the true coefficient vector."""

    def build(n=80, p=24, k=3, sigma=1.0, amplitude=2.5, master_seed=7, rep=0):
        spec = SeedSpec(master_seed, rep)
        design = gen_design(n, p, spec)
        signal = make_signal(p, k, amplitude)
        inst = synthesize(design, signal, sigma, spec)
        return inst, signal.dense()

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
