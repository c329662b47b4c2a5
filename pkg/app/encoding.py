"""Signed real numbers in the Paillier plaintext domain.

A real value is stored as ``mantissa * 16**exponent``. The mantissa lives in
[0, n), split into three bands by ``third = n // 3``:

    [0, third)            positive values
    [third, n - third)    overflow (never produced by ``encode``)
    [n - third, n)        negative values, mantissa - n

The exponent stays in plaintext next to the ciphertext. Additions first
align both operands to the smaller exponent.
"""

import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Real
from typing import Optional, Tuple

from .exceptions import (
    EncodingDomainError,
    EncodingMagnitudeError,
    PlaintextOverflowError,
    PrecisionOverflowError,
)
from .paillier import (
    Ciphertext,
    PaillierPublicKey,
    PaillierSecretKey,
    add_cipher,
    decrypt,
    encrypt,
    mul_const,
)
from .schemas import OpCounter
from .util import ENCODING_BASE, MAX_ALIGNMENT, PRECISION_FLOOR


@dataclass(frozen=True, slots=True)
class EncodedNumber:
    mantissa: int
    exponent: int
    key_id: str

    def signed_mantissa(self, pk: PaillierPublicKey) -> int:
        return _signed(self.mantissa, pk)


@dataclass(frozen=True, slots=True)
class EncryptedNumber:
    ciphertext: Ciphertext
    exponent: int

    @property
    def key_id(self) -> str:
        return self.ciphertext.key_id


def _third(pk: PaillierPublicKey) -> int:
    return pk.n // 3


def _signed(mantissa: int, pk: PaillierPublicKey) -> int:
    third = _third(pk)
    if mantissa < third:
        return mantissa
    if mantissa >= pk.n - third:
        return mantissa - pk.n
    raise PlaintextOverflowError("mantissa in the overflow band: homomorphic result out of range")


def _as_fraction(x) -> Fraction:
    if isinstance(x, bool):
        raise EncodingDomainError("booleans are not encodable")
    if isinstance(x, Integral):
        return Fraction(int(x))
    if isinstance(x, Real):
        xf = float(x)
        if not math.isfinite(xf):
            raise EncodingDomainError(f"non-finite value {xf!r} cannot be encoded")
        return Fraction(xf)
    raise EncodingDomainError(f"unsupported value type {type(x).__name__}")


def encode(x, pk: PaillierPublicKey, precision_floor: int = PRECISION_FLOOR) -> EncodedNumber:
    """Encode ``x`` with the largest exponent <= 0 that keeps the mantissa integral.

    Values that stay fractional at ``precision_floor`` are rounded half-to-even.
    """
    scaled = _as_fraction(x)
    exponent = 0
    while scaled.denominator != 1 and exponent > precision_floor:
        scaled *= ENCODING_BASE
        exponent -= 1
    if scaled.denominator != 1:
        logging.debug(f"rounding non-dyadic value at exponent {exponent}")
    mantissa = round(scaled)
    if mantissa == 0:
        exponent = 0
    if abs(mantissa) >= _third(pk):
        raise EncodingMagnitudeError(f"value {float(x)!r} exceeds the mantissa band of a {pk.bit_length}-bit key")
    return EncodedNumber(mantissa=mantissa % pk.n, exponent=exponent, key_id=pk.key_id)


def decode_exact(e: EncodedNumber, pk: PaillierPublicKey) -> Fraction:
    return _signed(e.mantissa, pk) * Fraction(ENCODING_BASE) ** e.exponent


def decode(e: EncodedNumber, pk: PaillierPublicKey) -> float:
    return float(decode_exact(e, pk))


# ─────────────── encrypted numbers ───────────────
def _tally(counter: Optional[OpCounter], **amounts: int) -> None:
    if counter is not None:
        counter.tally(**amounts)


def encrypt_encoded(pk: PaillierPublicKey, e: EncodedNumber, rng: Optional[random.Random] = None,
                    counter: Optional[OpCounter] = None) -> EncryptedNumber:
    _tally(counter, encryptions=1)
    return EncryptedNumber(ciphertext=encrypt(pk, e.mantissa, rng=rng), exponent=e.exponent)


def encrypt_number(pk: PaillierPublicKey, x, rng: Optional[random.Random] = None,
                   counter: Optional[OpCounter] = None) -> EncryptedNumber:
    return encrypt_encoded(pk, encode(x, pk), rng=rng, counter=counter)


def decrypt_encoded(sk: PaillierSecretKey, pk: PaillierPublicKey, a: EncryptedNumber,
                    counter: Optional[OpCounter] = None) -> EncodedNumber:
    _tally(counter, decryptions=1)
    return EncodedNumber(mantissa=decrypt(sk, pk, a.ciphertext), exponent=a.exponent, key_id=pk.key_id)


def decrypt_number(sk: PaillierSecretKey, pk: PaillierPublicKey, a: EncryptedNumber,
                   counter: Optional[OpCounter] = None) -> float:
    return decode(decrypt_encoded(sk, pk, a, counter=counter), pk)


def rescale(a: EncryptedNumber, new_exponent: int, pk: PaillierPublicKey,
            max_shift: int = MAX_ALIGNMENT, counter: Optional[OpCounter] = None) -> EncryptedNumber:
    """Lower the exponent of ``a`` by multiplying the mantissa by 16^shift."""
    shift = a.exponent - new_exponent
    if shift < 0:
        raise PrecisionOverflowError("cannot raise an exponent without losing digits")
    if shift == 0:
        return a
    if shift > max_shift:
        raise PrecisionOverflowError(f"alignment by {shift} base-16 digits exceeds the cap of {max_shift}")
    _tally(counter, rescalings=1)
    return EncryptedNumber(ciphertext=mul_const(pk, a.ciphertext, ENCODING_BASE ** shift), exponent=new_exponent)


def align_exponents(a: EncryptedNumber, b: EncryptedNumber, pk: PaillierPublicKey,
                    max_shift: int = MAX_ALIGNMENT,
                    counter: Optional[OpCounter] = None) -> Tuple[EncryptedNumber, EncryptedNumber]:
    target = min(a.exponent, b.exponent)
    return (rescale(a, target, pk, max_shift, counter),
            rescale(b, target, pk, max_shift, counter))


def add_encrypted(a: EncryptedNumber, b: EncryptedNumber, pk: PaillierPublicKey,
                  counter: Optional[OpCounter] = None) -> EncryptedNumber:
    a, b = align_exponents(a, b, pk, counter=counter)
    _tally(counter, ciphertext_products=1)
    return EncryptedNumber(ciphertext=add_cipher(pk, a.ciphertext, b.ciphertext), exponent=a.exponent)


def mul_plain(a: EncryptedNumber, k, pk: PaillierPublicKey,
              counter: Optional[OpCounter] = None) -> EncryptedNumber:
    """Scale an encrypted number by a plaintext real ``k``.

    Negative factors go through the modular-inverse path of ``mul_const``
    with the signed mantissa, so the exponent stays small.
    """
    factor = encode(k, pk)
    _tally(counter, exponentiations=1)
    ciphertext = mul_const(pk, a.ciphertext, factor.signed_mantissa(pk))
    return EncryptedNumber(ciphertext=ciphertext, exponent=a.exponent + factor.exponent)
