import numpy as np
import pytest

from multistrain import EpidemicState, StrainParams

# Single-strain baseline parameters shared by many tests.
BETA = 2.41e-9
SIGMA = 1.0 / 7.0
GAMMA = 1.0 / 21.0
DELTA = 1.0 / 90.0
MU = 1.152e-5
S0 = 217e6
E0, I0, R0_ = 252.0, 2.0, 1.0
P0 = S0 + E0 + I0 + R0_


@pytest.fixture
def baseline_params():
    return [StrainParams(beta=BETA, sigma=SIGMA, gamma=GAMMA, delta=DELTA, mu=MU)]


@pytest.fixture
def baseline_initial():
    return EpidemicState(t=0.0, P=P0, E=[E0], I=[I0], R=[R0_])


def random_params(rng: np.random.Generator, n: int, activation=0.0) -> list[StrainParams]:
    """Positive rates in physically plausible ranges."""
    out = []
    for _ in range(n):
        out.append(
            StrainParams(
                beta=float(rng.uniform(1e-9, 1e-6)),
                sigma=float(rng.uniform(0.05, 0.5)),
                gamma=float(rng.uniform(0.02, 0.3)),
                delta=float(rng.uniform(0.005, 0.1)),
                mu=float(rng.uniform(1e-6, 1e-3)),
                activation_time=activation,
            )
        )
    return out


def random_state(rng: np.random.Generator, n: int, t=0.0) -> EpidemicState:
    """Valid state with comfortably positive susceptible pools."""
    P = float(rng.uniform(1e6, 1e8))
    E = rng.uniform(0.0, 0.05 * P, size=n)
    I = rng.uniform(0.0, 0.05 * P, size=n)
    R = rng.uniform(0.0, 0.05 * P, size=n)
    return EpidemicState(t=t, P=P, E=E, I=I, R=R)
