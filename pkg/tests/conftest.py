import math

import numpy as np
import pytest

from freqadapt.corpus import load_corpus
from freqadapt.kernels import DegradationConfig, KernelParams, degrade


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def iso1_source(corpus):
    """Mini-corpus degraded with the sigma^2 = 1 kernel at scale 2 (256px planes)."""
    cfg = DegradationConfig(2, 19, KernelParams(1.0, 1.0, 0.0))
    return [degrade(x, cfg) for x in corpus]


@pytest.fixture(scope="session")
def iso3_source(corpus):
    r = math.sqrt(3.0)
    cfg = DegradationConfig(2, 19, KernelParams(r, r, 0.0))
    return [degrade(x, cfg) for x in corpus]


@pytest.fixture(scope="session")
def natural_patches(corpus):
    """32 non-overlapping 64px patches, two per corpus image."""
    out = []
    for img in corpus:
        out.append(img[64:128, 64:128])
        out.append(img[300:364, 200:264])
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def trained_fdc(iso1_source):
    """Comparator (log1p profiles) trained for 2000 curriculum steps on 12 blurred planes; 4 held out."""
    from freqadapt.fdc import train_comparator
    state = train_comparator(iso1_source[:12], iterations=2000, batch=8, lr=1e-3, norm="log1p", seed=0)
    return state.model, iso1_source[12:]


@pytest.fixture(scope="session")
def direct_iso1(iso1_source):
    from freqadapt.estimator import estimate_direct
    return estimate_direct(iso1_source)


@pytest.fixture(scope="session")
def direct_iso3(iso3_source):
    from freqadapt.estimator import estimate_direct
    return estimate_direct(iso3_source)


_VERDICTS = []


@pytest.fixture(scope="session")
def verdicts():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return _VERDICTS


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
