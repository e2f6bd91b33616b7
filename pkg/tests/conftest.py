import pytest

from condsynth import experiments


@pytest.fixture(scope="session")
def overfit_model():
    """Single-pitch (E4) model, shared by A4 and A7."""
    return experiments._train_model([0], seed=0,
                                    steps=experiments.OVERFIT_STEPS,
                                    noise_fraction=0.0)


@pytest.fixture(scope="session")
def endpoint_model():
    """Two-endpoint (E4, E5) model, shared by A5 and A10."""
    return experiments._train_model([0, 12], seed=0,
                                    steps=experiments.INTERPOLATION_STEPS)
