import numpy as np
import pytest

from sigauth.config import RunConfig
from sigauth.sigdata import SampleKind, make_prototype, synth_sample


@pytest.fixture(scope="session")
def tiny_cfg():
    """Small roster used by most integration-flavoured tests."""
    return RunConfig(
        users=6,
        enroll_genuine=12,
        enroll_skilled=5,
        enroll_random=3,
        probe_genuine=4,
        probe_skilled=2,
        probe_random=2,
        workers=1,
        locals_per_user=2,
        hidden=8,
        max_epochs=80,
    )


@pytest.fixture(scope="session")
def proto():
    return make_prototype(42, "u001")


@pytest.fixture(scope="session")
def genuine_sample(proto):
    return synth_sample(proto, SampleKind.GENUINE, 0.05, 7)


def make_handmade_sample(n_points=200, rate=100.0, fill=None, user="hand", kind=SampleKind.GENUINE):
    """A directly constructed sample: channel i is sin(2*pi*(i+1)*t) unless overridden."""
    t = np.arange(n_points) / rate
    ch = np.stack([np.sin(2 * np.pi * (i + 1) * t) for i in range(12)], axis=1)
    if fill is not None:
        for col, values in fill.items():
            ch[:, col] = values
    from sigauth.sigdata import SignatureSample

    return SignatureSample(user_id=user, kind=kind, timestamps=t, channels=ch)
