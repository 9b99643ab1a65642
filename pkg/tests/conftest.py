import pytest

from claimrate.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def small_synth():
    """A modest planted portfolio shared by read-only tests."""
    portfolio, expected = generate(SynthConfig(n=600, seed=11))
    return portfolio, expected
