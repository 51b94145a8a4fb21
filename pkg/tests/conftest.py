import numpy as np
import pytest

from burstfit import BernoulliSegmentSpec, FixedGapIntervalSpec, generate_bernoulli, generate_fixed_gap

# fixed-gap step streams of ~20,000 gaps; consecutive gaps differ by >= 50%
ASCENDING = [(2000, 16.0), (3000, 8.0), (4000, 4.0), (5000, 2.0), (6000, 1.0)]
UP_DOWN = [(3000, 8.0), (4000, 2.0), (3000, 6.0), (4000, 1.0), (2000, 4.0), (4000, 1.5)]
MIXED = [(3000, 4.0), (300, 1.0), (5000, 4.0), (2000, 2.0), (150, 0.6), (4000, 8.0), (5550, 2.0)]

# random-gap step stream, ~21,000 documents over 40,000 time units
NOISY_FREQS = [0.3, 0.9, 0.15, 0.6, 0.95, 0.2, 0.5, 0.9, 0.1, 0.7]


def noisy_step_spec(freqs=NOISY_FREQS, width=4000):
    return BernoulliSegmentSpec([(i * width, (i + 1) * width - 1, f) for i, f in enumerate(freqs)])


@pytest.fixture(scope="session")
def step_streams():
    return {
        name: generate_fixed_gap(FixedGapIntervalSpec(spec))
        for name, spec in (("ascending", ASCENDING), ("up_down", UP_DOWN), ("mixed", MIXED))
    }


@pytest.fixture(scope="session")
def noisy_step_stream():
    return generate_bernoulli(noisy_step_spec(), 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
