import random

import numpy as np
import pytest

from app.paillier import keygen, keypair_from_primes
from app.speaker import derive_hyperparameters, synthesize_corpus, train_two_cov

TEST_BITS = 512


@pytest.fixture(scope="session")
def keypair():
    return keygen(TEST_BITS, seed=1234)


@pytest.fixture(scope="session")
def vendor_keypair():
    return keygen(TEST_BITS, seed=5678)


@pytest.fixture(scope="session")
def toy_keypair():
    # n = 35, lambda = 12, mu = 3
    return keypair_from_primes(5, 7)


@pytest.fixture
def rng():
    return random.Random(42)


@pytest.fixture(scope="session")
def corpus():
    return synthesize_corpus(4, 8, 10, within_cov=0.5 * np.eye(4), seed=7)


@pytest.fixture(scope="session")
def model(corpus):
    return train_two_cov(corpus)


@pytest.fixture(scope="session")
def identity_model():
    return derive_hyperparameters(np.eye(2), np.eye(2), np.zeros(2))
