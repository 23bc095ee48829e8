import numpy as np
import pytest

from cavcool.params import SystemParams


def random_draws(n: int, seed: int = 20240607) -> list[SystemParams]:
    """Parameter draws over the acceptance ranges, with eta*g within the validity margin."""
    rng = np.random.default_rng(seed)
    draws = []
    while len(draws) < n:
        nu, kappa = rng.uniform(0.2, 20.0, size=2)
        omega = rng.uniform(0.5, 50.0)
        span = 2.0 * (nu + omega)
        delta = rng.uniform(-span, span)
        eta = rng.uniform(0.005, 0.1)
        eg_max = 0.1 * max(abs(delta), kappa, nu)
        g = rng.uniform(0.0, eg_max) / eta
        draws.append(SystemParams(nu=nu, delta=delta, omega=omega, kappa=kappa, eta=eta, g=g))
    return draws


@pytest.fixture(scope="session")
def draws():
    return random_draws(1000)


@pytest.fixture
def reference_point():
    return SystemParams(nu=1.0, delta=6.0, omega=5.0, kappa=1.0, eta=0.05, g=1.0)
