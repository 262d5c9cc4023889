import numpy as np
import pytest

from levyergo.drift import DriftSpec
from levyergo.spectral_model import PowerLawSpec, build_model, explicit_model


@pytest.fixture(scope="session")
def heat_spec():
    return PowerLawSpec(alpha=1.5, gamma=0.3, delta=0.5, a_rule=-1.0,
                        drift=DriftSpec.saturating(1.0))


@pytest.fixture(scope="session")
def heat_model(heat_spec):
    return build_model(heat_spec, 5)


@pytest.fixture(scope="session")
def ou_model():
    """Single-mode Gaussian OU: lambda = 1, q = 1, stationary variance 1/2."""
    return explicit_model(2.0, [1.0], q=[1.0])


@pytest.fixture(scope="session")
def saturating3():
    """Three modes, bounded tanh drift with L / lambda_1 = 0.5."""
    drift = DriftSpec.saturating(c_f=np.sqrt(3) * 0.5, slope=1.0)
    return explicit_model(1.5, [1.0, 4.0, 9.0], b=[0.5, 0.5, 0.5], q=[0.5, 0.5, 0.5],
                          a=[0.2, 0.0, -0.1], drift=drift)
