"""Vectors and matrices of encrypted numbers.

Folds run pairwise left to right so transcripts are reproducible. Plain-side
operands stay real-valued and are encoded per operation.
"""

import random
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Literal, Optional, Sequence, Tuple

import numpy as np

from .encoding import (
    EncryptedNumber,
    add_encrypted,
    decrypt_number,
    encrypt_number,
    mul_plain,
)
from .exceptions import EncodingDomainError, HESpeakerError, KeyMismatchError, ShapeError
from .paillier import PaillierPublicKey, PaillierSecretKey
from .schemas import OpCounter


def as_plain_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise EncodingDomainError(f"{name} has non-finite entries")
    return arr


def as_plain_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.size == 0:
        raise ShapeError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise EncodingDomainError(f"{name} has non-finite entries")
    return arr


def _uniform_key(numbers: Sequence[EncryptedNumber]) -> str:
    key_ids = {x.key_id for x in numbers}
    if len(key_ids) != 1:
        raise KeyMismatchError(f"mixed keys in one container: {sorted(key_ids)}")
    return key_ids.pop()


@dataclass(frozen=True)
class EncryptedVector:
    elements: Tuple[EncryptedNumber, ...]
    orientation: Literal["column", "row"] = "column"

    def __post_init__(self):
        if not self.elements:
            raise ShapeError("encrypted vector needs at least one element")
        _uniform_key(self.elements)

    @property
    def key_id(self) -> str:
        return self.elements[0].key_id

    @property
    def T(self) -> "EncryptedVector":
        """Transpose view sharing the same ciphertexts."""
        return EncryptedVector(self.elements, "row" if self.orientation == "column" else "column")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[EncryptedNumber]:
        return iter(self.elements)

    def __getitem__(self, i: int) -> EncryptedNumber:
        return self.elements[i]


@dataclass(frozen=True)
class EncryptedMatrix:
    rows: Tuple[Tuple[EncryptedNumber, ...], ...]

    def __post_init__(self):
        size = len(self.rows)
        if size == 0 or any(len(row) != size for row in self.rows):
            raise ShapeError("encrypted matrix must be square and non-empty")
        _uniform_key([x for row in self.rows for x in row])

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.size, self.size

    @property
    def key_id(self) -> str:
        return self.rows[0][0].key_id

    @property
    def T(self) -> "EncryptedMatrix":
        return EncryptedMatrix(tuple(zip(*self.rows)))

    def __getitem__(self, index: Tuple[int, int]) -> EncryptedNumber:
        i, j = index
        return self.rows[i][j]

    def __iter__(self) -> Iterator[EncryptedNumber]:
        for row in self.rows:
            yield from row

    def vec(self) -> EncryptedVector:
        """Column-stacking vectorisation."""
        return EncryptedVector(tuple(self.rows[i][j] for j in range(self.size) for i in range(self.size)))


def _check_length(expected: int, got: int, what: str) -> None:
    if expected != got:
        raise ShapeError(f"{what}: encrypted side has {expected} entries, plain side has {got}")


# ─────────────── encryption / decryption ───────────────
def encrypt_vector(pk: PaillierPublicKey, v, rng: Optional[random.Random] = None,
                   counter: Optional[OpCounter] = None) -> EncryptedVector:
    arr = as_plain_vector(v)
    elements = []
    for f, value in enumerate(arr):
        try:
            elements.append(encrypt_number(pk, value, rng=rng, counter=counter))
        except HESpeakerError as exc:
            raise type(exc)(f"entry {f}: {exc}") from exc
    return EncryptedVector(tuple(elements))


def encrypt_matrix(pk: PaillierPublicKey, a, rng: Optional[random.Random] = None,
                   counter: Optional[OpCounter] = None) -> EncryptedMatrix:
    arr = as_plain_matrix(a)
    return EncryptedMatrix(tuple(
        tuple(encrypt_number(pk, value, rng=rng, counter=counter) for value in row) for row in arr
    ))


def decrypt_vector(sk: PaillierSecretKey, pk: PaillierPublicKey, v: EncryptedVector,
                   counter: Optional[OpCounter] = None) -> np.ndarray:
    return np.array([decrypt_number(sk, pk, x, counter=counter) for x in v])


def decrypt_matrix(sk: PaillierSecretKey, pk: PaillierPublicKey, a: EncryptedMatrix,
                   counter: Optional[OpCounter] = None) -> np.ndarray:
    return np.array([[decrypt_number(sk, pk, x, counter=counter) for x in row] for row in a.rows])


# ─────────────── homomorphic operations ───────────────
def dot_exponentiate(enc_y: EncryptedVector, x, pk: PaillierPublicKey,
                     counter: Optional[OpCounter] = None) -> EncryptedNumber:
    """prod_f enc(y_f)^{x_f}, i.e. enc(X'Y)."""
    x = as_plain_vector(x, "plain operand")
    _check_length(len(enc_y), x.size, "dot product")
    terms = [mul_plain(y, xf, pk, counter=counter) for y, xf in zip(enc_y, x)]
    return reduce(lambda acc, term: add_encrypted(acc, term, pk, counter=counter), terms)


def outer_exponentiate(enc_y: EncryptedVector, x, pk: PaillierPublicKey,
                       counter: Optional[OpCounter] = None) -> EncryptedMatrix:
    """Entry (i, j) = enc(y_i)^{x_j}, decrypting to Y X'.

    For a row view (``enc_y.T``) the roles swap: entry (i, j) = enc(y_j)^{x_i},
    decrypting to X Y'.
    """
    x = as_plain_vector(x, "plain operand")
    _check_length(len(enc_y), x.size, "outer product")
    size = x.size
    if enc_y.orientation == "column":
        rows = tuple(tuple(mul_plain(enc_y[i], x[j], pk, counter=counter) for j in range(size))
                     for i in range(size))
    else:
        rows = tuple(tuple(mul_plain(enc_y[j], x[i], pk, counter=counter) for j in range(size))
                     for i in range(size))
    return EncryptedMatrix(rows)


def hadamard(enc_a: EncryptedMatrix, enc_b: EncryptedMatrix, pk: PaillierPublicKey,
             counter: Optional[OpCounter] = None) -> EncryptedMatrix:
    """Entrywise ciphertext product, which decrypts to the plaintext sum A + B."""
    if enc_a.shape != enc_b.shape:
        raise ShapeError(f"hadamard: shapes {enc_a.shape} and {enc_b.shape} differ")
    if enc_a.key_id != enc_b.key_id:
        raise KeyMismatchError(f"hadamard: keys {enc_a.key_id} and {enc_b.key_id} differ")
    return EncryptedMatrix(tuple(
        tuple(add_encrypted(a, b, pk, counter=counter) for a, b in zip(row_a, row_b))
        for row_a, row_b in zip(enc_a.rows, enc_b.rows)
    ))


def frobenius_exponentiate(enc_a: EncryptedMatrix, b, pk: PaillierPublicKey,
                           counter: Optional[OpCounter] = None) -> EncryptedNumber:
    """enc(<A, B>) via the dot product of column-stacked matrices."""
    b = as_plain_matrix(b, "plain operand")
    if b.shape != enc_a.shape:
        raise ShapeError(f"frobenius product: encrypted side {enc_a.shape}, plain side {b.shape}")
    return dot_exponentiate(enc_a.vec(), b.flatten(order="F"), pk, counter=counter)
