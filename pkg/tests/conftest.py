"""Shared fixtures and the acceptance summary hook."""

import numpy as np
import pytest

from uwsounder.channel_sim import ChannelSpec, PathSpec, RicianFading, apply_channel
from uwsounder.estimator import filterbank_estimate, tvir_from_tvfr
from uwsounder.signal_gen import SoundingConfig, synthesize_multitone

# criterion number -> (title, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        title, ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} C{n:<2} {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def short_config():
    return SoundingConfig(duration=0.5)


@pytest.fixture(scope="session")
def two_path_spec():
    return ChannelSpec(paths=(PathSpec(delay=100e-6, gain=1.0),
                              PathSpec(delay=400e-6, gain=0.5)))


@pytest.fixture(scope="session")
def fading_run():
    """Two slowly fading Rician paths through the default sounding, 5 s at 1 MHz.

    Returns ``(config, spec, y, H, h)``.
    """
    cfg = SoundingConfig(duration=5.0)
    spec = ChannelSpec(paths=(PathSpec(20e-6, 1.0, RicianFading(4, 2.0, seed=11)),
                              PathSpec(250e-6, 0.5, RicianFading(4, 2.0, seed=12))), seed=7)
    y = apply_channel(synthesize_multitone(cfg), spec)
    H = filterbank_estimate(y, cfg)
    return cfg, spec, y, H, tvir_from_tvfr(H)
