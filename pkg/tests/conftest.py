import numpy as np
import pytest

from centerfield.forms import hamiltonian_form, reversible_form

P = 29


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hamiltonian(rng, p=P):
    return hamiltonian_form(rng.integers(0, p, 4), rng.integers(0, p, 5), p)


def random_reversible(rng, p=P):
    return reversible_form(rng.integers(0, p, 7), p)
