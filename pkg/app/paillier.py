"""Paillier cryptosystem over arbitrary-precision integers.

Keys and ciphertexts are immutable values. The only mutable state is the
random source, which callers pass in explicitly (``rng``) so that a seeded
``random.Random`` gives reproducible keys and ciphertexts; without one a
``random.SystemRandom`` is used.
"""

import hashlib
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Tuple

import gmpy2

from .exceptions import (
    CiphertextArithmeticError,
    KeyGenerationError,
    KeyMismatchError,
    ParameterError,
    PlaintextRangeError,
)
from .util import INSECURE_KEY_BITS, MIN_KEY_BITS, PRIMALITY_ROUNDS, PRIME_RETRIES


def key_fingerprint(n: int) -> str:
    return hashlib.sha256(format(n, "x").encode()).hexdigest()[:16]


@dataclass(frozen=True, slots=True)
class PaillierPublicKey:
    n: int
    g: int
    n_squared: int = field(init=False)
    bit_length: int = field(init=False)
    key_id: str = field(init=False)

    def __post_init__(self):
        n_squared = self.n * self.n
        if math.gcd(self.g, n_squared) != 1:
            raise ParameterError("generator g must be invertible modulo n^2")
        object.__setattr__(self, "n_squared", n_squared)
        object.__setattr__(self, "bit_length", self.n.bit_length())
        object.__setattr__(self, "key_id", key_fingerprint(self.n))

    @property
    def insecure(self) -> bool:
        return self.bit_length < INSECURE_KEY_BITS

    @property
    def ciphertext_bytes(self) -> int:
        """Channel size of one ciphertext: 2n bits."""
        return 2 * self.bit_length // 8

    def __repr__(self):
        return f"<PaillierPublicKey(key_id={self.key_id}, bits={self.bit_length})>"


@dataclass(frozen=True, slots=True)
class PaillierSecretKey:
    lam: int
    mu: int
    p: int
    q: int
    key_id: str

    def __repr__(self):
        # never print the factors
        return f"<PaillierSecretKey(key_id={self.key_id})>"


@dataclass(frozen=True, slots=True)
class Ciphertext:
    value: int
    key_id: str
    obfuscated: bool = True


def _l_function(x: int, n: int) -> int:
    return (x - 1) // n


def keypair_from_primes(p: int, q: int, g: Optional[int] = None) -> Tuple[PaillierPublicKey, PaillierSecretKey]:
    """Build a key pair from known primes. Also the test hook for tiny keys."""
    n = p * q
    if math.gcd(n, (p - 1) * (q - 1)) != 1:
        raise ParameterError(f"gcd(pq, (p-1)(q-1)) != 1 for p={p}, q={q}")
    pk = PaillierPublicKey(n=n, g=n + 1 if g is None else g)
    lam = math.lcm(p - 1, q - 1)
    u = _l_function(int(gmpy2.powmod(pk.g, lam, pk.n_squared)), n)
    try:
        mu = int(gmpy2.invert(u, n))
    except ZeroDivisionError as exc:
        raise ParameterError("L(g^lambda mod n^2) is not invertible modulo n") from exc
    if mu == 0:
        raise ParameterError("L(g^lambda mod n^2) is not invertible modulo n")
    return pk, PaillierSecretKey(lam=lam, mu=mu, p=p, q=q, key_id=pk.key_id)


def _random_prime(bits: int, rng: random.Random) -> int:
    for _ in range(PRIME_RETRIES):
        # top two bits set so that the product of two such primes has 2*bits bits
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2))
        prime = int(gmpy2.next_prime(candidate))
        if prime.bit_length() == bits and gmpy2.is_prime(prime, PRIMALITY_ROUNDS):
            return prime
    raise KeyGenerationError(f"no {bits}-bit prime found after {PRIME_RETRIES} attempts")


def keygen(bit_length: int, seed: Optional[int] = None,
           rng: Optional[random.Random] = None) -> Tuple[PaillierPublicKey, PaillierSecretKey]:
    if bit_length < MIN_KEY_BITS:
        raise ParameterError(f"bit_length must be >= {MIN_KEY_BITS}, got {bit_length}")
    if rng is None:
        rng = random.Random(seed) if seed is not None else random.SystemRandom()
    p_bits = bit_length // 2
    q_bits = bit_length - p_bits
    for _ in range(PRIME_RETRIES):
        p = _random_prime(p_bits, rng)
        q = _random_prime(q_bits, rng)
        n = p * q
        if p == q or n.bit_length() != bit_length:
            continue
        if math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        pk, sk = keypair_from_primes(p, q)
        if pk.insecure:
            logging.warning(f"generated insecure {bit_length}-bit Paillier key {pk.key_id}")
        else:
            logging.info(f"generated {bit_length}-bit Paillier key {pk.key_id}")
        return pk, sk
    raise KeyGenerationError(f"could not generate a {bit_length}-bit modulus")


def _check_key(pk: PaillierPublicKey, *ciphertexts: Ciphertext) -> None:
    for c in ciphertexts:
        if c.key_id != pk.key_id:
            raise KeyMismatchError(f"ciphertext under key {c.key_id} used with key {pk.key_id}")


def random_unit(pk: PaillierPublicKey, rng: Optional[random.Random] = None) -> int:
    """Draw s uniformly from Z*_n, resampling when gcd(s, n) != 1."""
    rng = rng or random.SystemRandom()
    while True:
        s = rng.randrange(1, pk.n)
        if math.gcd(s, pk.n) == 1:
            return s


def encrypt(pk: PaillierPublicKey, m: int, s: Optional[int] = None,
            rng: Optional[random.Random] = None) -> Ciphertext:
    if not 0 <= m < pk.n:
        raise PlaintextRangeError(f"plaintext must lie in [0, n), got {m}")
    if s is None:
        s = random_unit(pk, rng)
    elif math.gcd(s, pk.n) != 1:
        raise ParameterError("randomizer s must be coprime to n")
    if pk.g == pk.n + 1:
        # (n+1)^m = 1 + m*n mod n^2
        g_m = (1 + m * pk.n) % pk.n_squared
    else:
        g_m = int(gmpy2.powmod(pk.g, m, pk.n_squared))
    value = g_m * int(gmpy2.powmod(s, pk.n, pk.n_squared)) % pk.n_squared
    return Ciphertext(value=value, key_id=pk.key_id, obfuscated=s != 1)


def decrypt(sk: PaillierSecretKey, pk: PaillierPublicKey, c: Ciphertext) -> int:
    if sk.key_id != pk.key_id:
        raise KeyMismatchError(f"secret key {sk.key_id} does not belong to public key {pk.key_id}")
    _check_key(pk, c)
    if not 0 <= c.value < pk.n_squared:
        raise PlaintextRangeError("ciphertext value outside [0, n^2)")
    x = int(gmpy2.powmod(c.value, sk.lam, pk.n_squared))
    return _l_function(x, pk.n) * sk.mu % pk.n


def add_cipher(pk: PaillierPublicKey, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    _check_key(pk, c1, c2)
    return Ciphertext(value=c1.value * c2.value % pk.n_squared, key_id=pk.key_id,
                      obfuscated=c1.obfuscated or c2.obfuscated)


def mul_const(pk: PaillierPublicKey, c: Ciphertext, l: int) -> Ciphertext:
    _check_key(pk, c)
    base = c.value
    if l < 0:
        try:
            base = int(gmpy2.invert(base, pk.n_squared))
        except ZeroDivisionError as exc:
            raise CiphertextArithmeticError("ciphertext is not invertible modulo n^2") from exc
        if base == 0:
            raise CiphertextArithmeticError("ciphertext is not invertible modulo n^2")
        l = -l
    value = int(gmpy2.powmod(base, l, pk.n_squared))
    return Ciphertext(value=value, key_id=pk.key_id, obfuscated=c.obfuscated and l != 0)


def rerandomize(pk: PaillierPublicKey, c: Ciphertext, rng: Optional[random.Random] = None) -> Ciphertext:
    _check_key(pk, c)
    zero = encrypt(pk, 0, rng=rng)
    return Ciphertext(value=c.value * zero.value % pk.n_squared, key_id=pk.key_id, obfuscated=True)
