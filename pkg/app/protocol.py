"""In-process simulation of the verification architectures.

Entities exchange messages through a single FIFO queue. Every message is
written to the transcript and booked on its channel ledger; operation
counts cover the verification phase only (enrolment happens beforehand).

    cosine / euclidean   Client <-> DBController, Client -> ASOperator
    2cov-subject         same entities, the client holds plaintext Lambda, Gamma
    2cov-vendor          two key pairs; DBVendor and ASVendor join
"""

import hashlib
import logging
import random
from collections import deque
from dataclasses import dataclass, field, fields, is_dataclass
from enum import Enum
from typing import Any, Deque, Dict, Iterator, List, Mapping, NamedTuple, Optional, Set, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .comparators import (
    EncryptedModel,
    ProtectedReference2CovSubject,
    ProtectedReference2CovVendor,
    ProtectedReferenceCosine,
    ProtectedReferenceEuclidean,
    add_calibration_offset,
    client_compute_vendor,
    operator_combine_vendor,
    score_2cov_subject_encrypted,
    score_cosine_encrypted,
    score_euclidean_encrypted,
)
from .encoding import EncryptedNumber, decrypt_number
from .exceptions import ConfigurationError, KeyHygieneError, KeyMismatchError, ReferenceNotFoundError, UsageError
from .linalg import EncryptedMatrix, EncryptedVector
from .models import ComparatorKind
from .paillier import PaillierPublicKey, PaillierSecretKey
from .schemas import ComplexityReport, OpCounter, PreloadReport, TranscriptEntry
from .speaker import TwoCovModel
from .util import EXPONENT_METADATA_BYTES

KIB = 1024
MIB = 1024 * 1024


class Role(str, Enum):
    CLIENT = "Client"
    DB_CONTROLLER = "DBController"
    AS_OPERATOR = "ASOperator"
    DB_VENDOR = "DBVendor"
    AS_VENDOR = "ASVendor"


# ─────────────── entities and messages ───────────────
@dataclass(eq=False)
class Entity:
    role: Role
    public_keys: Dict[str, PaillierPublicKey] = field(default_factory=dict)
    secret_keys: Dict[str, PaillierSecretKey] = field(default_factory=dict)
    local_store: Dict[str, Any] = field(default_factory=dict)
    inbox: List["Message"] = field(default_factory=list)

    def __post_init__(self):
        if self.role == Role.CLIENT and self.secret_keys:
            raise ConfigurationError(f"the client must not hold secret keys, got {sorted(self.secret_keys)}")

    @property
    def held_keys(self) -> Set[str]:
        return set(self.public_keys) | set(self.secret_keys)

    def public(self, label: str) -> PaillierPublicKey:
        if label not in self.public_keys:
            raise ConfigurationError(f"{self.role.value} does not hold {label}")
        return self.public_keys[label]

    def secret(self, label: str) -> PaillierSecretKey:
        if label not in self.secret_keys:
            raise ConfigurationError(f"{self.role.value} does not hold {label}")
        return self.secret_keys[label]


@dataclass(frozen=True, eq=False)
class Message:
    step: str
    sender: Role
    receiver: Role
    payload: Dict[str, Any]
    ciphertext_count: int


def _leaves(obj) -> Iterator[Any]:
    if isinstance(obj, EncryptedNumber):
        yield obj
    elif isinstance(obj, EncryptedVector):
        yield from obj.elements
    elif isinstance(obj, EncryptedMatrix):
        yield from obj
    elif isinstance(obj, Mapping):
        for key in sorted(obj):
            yield from _leaves(obj[key])
    elif isinstance(obj, (list, tuple)):
        for item in obj:
            yield from _leaves(item)
    elif is_dataclass(obj) and not isinstance(obj, type) and not isinstance(obj, (PaillierPublicKey, PaillierSecretKey)):
        for f in fields(obj):
            yield from _leaves(getattr(obj, f.name))
    else:
        yield obj


def count_ciphertexts(payload) -> int:
    return sum(1 for leaf in _leaves(payload) if isinstance(leaf, EncryptedNumber))


def _canonical(leaf) -> str:
    if isinstance(leaf, EncryptedNumber):
        return f"c:{leaf.ciphertext.value:x}:{leaf.exponent}:{leaf.key_id}"
    if isinstance(leaf, PaillierPublicKey):
        return f"pk:{leaf.n:x}:{leaf.g:x}"
    if isinstance(leaf, np.ndarray):
        return f"a:{leaf.tobytes().hex()}"
    return f"v:{leaf!r}"


def payload_hash(payload) -> str:
    digest = hashlib.sha256()
    for leaf in _leaves(payload):
        digest.update(_canonical(leaf).encode())
        digest.update(b"\n")
    return digest.hexdigest()


# ─────────────── ledgers, decisions, transcripts ───────────────
class ChannelTotals(BaseModel):
    ciphertexts: int = Field(0, ge=0)
    protected_bytes: int = Field(0, ge=0, description="ciphertexts * nu")
    metadata_bytes: int = Field(0, ge=0, description="Plaintext exponents, booked separately")


def channel_name(sender: Role, receiver: Role) -> str:
    return f"{sender.value}->{receiver.value}"


class ChannelLedger(BaseModel):
    channels: Dict[str, ChannelTotals] = Field(default_factory=dict)

    def record(self, sender: Role, receiver: Role, ciphertexts: int, nu_bytes: int) -> None:
        totals = self.channels.setdefault(channel_name(sender, receiver), ChannelTotals())
        totals.ciphertexts += ciphertexts
        totals.protected_bytes += ciphertexts * nu_bytes
        totals.metadata_bytes += ciphertexts * EXPONENT_METADATA_BYTES

    def ciphertext_counts(self) -> Dict[str, int]:
        """Channels that carried at least one ciphertext."""
        return {name: t.ciphertexts for name, t in self.channels.items() if t.ciphertexts}

    @property
    def total_ciphertexts(self) -> int:
        return sum(t.ciphertexts for t in self.channels.values())

    @property
    def total_protected_bytes(self) -> int:
        return sum(t.protected_bytes for t in self.channels.values())

    @property
    def total_metadata_bytes(self) -> int:
        return sum(t.metadata_bytes for t in self.channels.values())


class Decision(BaseModel):
    score: float
    threshold: float
    accepted: bool

    @model_validator(mode="after")
    def _accepted_matches_threshold(self):
        if self.accepted != (self.threshold <= self.score):
            raise ValueError("accepted must equal (threshold <= score)")
        return self

    @classmethod
    def decide(cls, score: float, threshold: float) -> "Decision":
        return cls(score=score, threshold=threshold, accepted=threshold <= score)


@dataclass(eq=False)
class Transcript:
    messages: List[Message] = field(default_factory=list)
    entries: List[TranscriptEntry] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(entry.model_dump_json() + "\n" for entry in self.entries)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()


class RunResult(NamedTuple):
    decision: Decision
    ledger: ChannelLedger
    counter: OpCounter
    transcript: Transcript


class _Network:
    """FIFO message queue between entities of one run."""

    def __init__(self, entities: Dict[Role, Entity]):
        self.entities = entities
        self.queue: Deque[Message] = deque()
        self.ledger = ChannelLedger()
        self.transcript = Transcript()

    def send(self, step: str, sender: Role, receiver: Role, payload: Dict[str, Any],
             pk: Optional[PaillierPublicKey] = None) -> None:
        count = count_ciphertexts(payload)
        if count and pk is None:
            raise UsageError(f"step {step}: ciphertext payload sent without its key size")
        nu_bytes = pk.ciphertext_bytes if pk is not None else 0
        message = Message(step=step, sender=sender, receiver=receiver, payload=payload, ciphertext_count=count)
        self.queue.append(message)
        self.ledger.record(sender, receiver, count, nu_bytes)
        self.transcript.messages.append(message)
        self.transcript.entries.append(TranscriptEntry(
            step=step,
            sender=sender.value,
            receiver=receiver.value,
            ciphertext_count=count,
            protected_bytes=count * nu_bytes,
            metadata_bytes=count * EXPONENT_METADATA_BYTES,
            payload_hash=payload_hash(payload),
        ))

    def receive(self, receiver: Role, step: str) -> Dict[str, Any]:
        message = self.queue.popleft()
        if message.receiver != receiver or message.step != step:
            raise UsageError(f"expected step {step} for {receiver.value}, queue holds {message.step} "
                             f"for {message.receiver.value}")
        self.entities[receiver].inbox.append(message)
        logging.debug(f"step {step}: {message.sender.value} -> {receiver.value}, "
                      f"{message.ciphertext_count} ciphertexts")
        return message.payload


def _make_rng(rng: Optional[random.Random], seed: Optional[int]) -> random.Random:
    if rng is not None:
        return rng
    return random.Random(seed) if seed is not None else random.SystemRandom()


References = Union[Mapping[str, Any], Any]
VendorModelSource = Union[EncryptedModel, Any]


def _lookup(references: References, subject_id: str, kind: ComparatorKind, expected_type: type):
    if isinstance(references, Mapping):
        if subject_id not in references:
            raise ReferenceNotFoundError(f"no reference enrolled for subject {subject_id!r}")
        ref = references[subject_id]
    else:
        ref = references.get_reference(subject_id, kind)
    if not isinstance(ref, expected_type):
        raise UsageError(f"reference for {subject_id!r} is a {type(ref).__name__}, {kind.value} needs "
                         f"{expected_type.__name__}")
    return ref


def _check_pair(pk: PaillierPublicKey, sk: PaillierSecretKey, label: str) -> None:
    if sk.key_id != pk.key_id:
        raise KeyMismatchError(f"{label}: secret key {sk.key_id} does not belong to public key {pk.key_id}")


def _single_key_entities(pk: PaillierPublicKey, sk: PaillierSecretKey, references) -> Dict[Role, Entity]:
    _check_pair(pk, sk, "key pair")
    return {
        Role.CLIENT: Entity(Role.CLIENT, public_keys={"pk": pk}),
        Role.DB_CONTROLLER: Entity(Role.DB_CONTROLLER, public_keys={"pk": pk},
                                   local_store={"references": references}),
        Role.AS_OPERATOR: Entity(Role.AS_OPERATOR, public_keys={"pk": pk}, secret_keys={"sk": sk}),
    }


def _finish(net: _Network, decider: Role, score: float, eta: float, counter: OpCounter) -> RunResult:
    decision = Decision.decide(score, eta)
    logging.info(f"{decider.value} decision: accepted={decision.accepted}")
    logging.debug(f"score {score!r} against threshold {eta!r}")
    net.send("decision", decider, Role.CLIENT, {"accepted": decision.accepted})
    net.receive(Role.CLIENT, "decision")
    audit_key_hygiene(net.transcript)
    return RunResult(decision, net.ledger, counter, net.transcript)


# ─────────────── single-key architectures ───────────────
def _run_single_key(kind: ComparatorKind, pk, sk, references, subject_id, probe, eta, score_fn,
                    expected_type, rng=None, seed=None, offset_fn=None) -> RunResult:
    rng = _make_rng(rng, seed)
    counter = OpCounter()
    entities = _single_key_entities(pk, sk, references)
    net = _Network(entities)
    client = entities[Role.CLIENT]
    operator = entities[Role.AS_OPERATOR]

    net.send("1", Role.CLIENT, Role.DB_CONTROLLER, {"subject_id": subject_id})
    claim = net.receive(Role.DB_CONTROLLER, "1")
    ref = _lookup(entities[Role.DB_CONTROLLER].local_store["references"], claim["subject_id"], kind, expected_type)

    net.send("2a", Role.DB_CONTROLLER, Role.CLIENT, {"reference": ref}, pk=pk)
    ref = net.receive(Role.CLIENT, "2a")["reference"]

    enc_score = score_fn(client.public("pk"), ref, probe, rng, counter)

    net.send("4", Role.CLIENT, Role.AS_OPERATOR, {"score": enc_score}, pk=pk)
    enc_score = net.receive(Role.AS_OPERATOR, "4")["score"]
    score = decrypt_number(operator.secret("sk"), operator.public("pk"), enc_score, counter=counter)
    if offset_fn is not None:
        score = offset_fn(score)
    return _finish(net, Role.AS_OPERATOR, score, eta, counter)


def run_cosine(pk: PaillierPublicKey, sk: PaillierSecretKey, references: References, subject_id: str, probe,
               eta: float, rng: Optional[random.Random] = None, seed: Optional[int] = None) -> RunResult:
    return _run_single_key(
        ComparatorKind.COSINE, pk, sk, references, subject_id, probe, eta,
        lambda key, ref, x, _rng, counter: score_cosine_encrypted(key, ref, x, counter=counter),
        ProtectedReferenceCosine, rng=rng, seed=seed,
    )


def run_euclidean(pk: PaillierPublicKey, sk: PaillierSecretKey, references: References, subject_id: str, probe,
                  eta: float, rng: Optional[random.Random] = None, seed: Optional[int] = None) -> RunResult:
    """Same architecture as cosine; the decided score is the negated squared distance."""
    return _run_single_key(
        ComparatorKind.EUCLIDEAN, pk, sk, references, subject_id, probe, eta,
        lambda key, ref, x, _rng, counter: score_euclidean_encrypted(key, ref, x, rng=_rng, counter=counter),
        ProtectedReferenceEuclidean, rng=rng, seed=seed, offset_fn=lambda distance: -distance,
    )


def run_2cov_subject(pk: PaillierPublicKey, sk: PaillierSecretKey, model: TwoCovModel, references: References,
                     subject_id: str, probe, eta: float, apply_offset: bool = False,
                     rng: Optional[random.Random] = None, seed: Optional[int] = None) -> RunResult:
    def score_fn(key, ref, x, _rng, counter):
        return score_2cov_subject_encrypted(key, ref, x, model.Lambda, model.Gamma, rng=_rng, counter=counter)

    offset_fn = (lambda score: add_calibration_offset(score, model)) if apply_offset else None
    return _run_single_key(ComparatorKind.TWO_COV_SUBJECT, pk, sk, references, subject_id, probe, eta,
                           score_fn, ProtectedReference2CovSubject, rng=rng, seed=seed, offset_fn=offset_fn)


# ─────────────── two-key architecture ───────────────
def _vendor_model(source: VendorModelSource) -> EncryptedModel:
    # newest stored model; its key is checked against pk2 at the operator
    return source if isinstance(source, EncryptedModel) else source.get_vendor_model()


def default_vendor_placement(pk1, sk1, pk2, sk2) -> Dict[Role, Dict[str, Any]]:
    return {
        Role.CLIENT: {"pk1": pk1},
        Role.DB_CONTROLLER: {"pk1": pk1},
        Role.AS_OPERATOR: {"pk1": pk1, "sk1": sk1, "pk2": pk2},
        Role.DB_VENDOR: {"pk2": pk2},
        Role.AS_VENDOR: {"pk2": pk2, "sk2": sk2},
    }


def _vendor_entities(placement: Dict[Role, Dict[str, Any]]) -> Dict[Role, Entity]:
    entities = {}
    for role in Role:
        keys = placement.get(role, {})
        public = {k: v for k, v in keys.items() if isinstance(v, PaillierPublicKey)}
        secret = {k: v for k, v in keys.items() if isinstance(v, PaillierSecretKey)}
        entities[role] = Entity(role, public_keys=public, secret_keys=secret)
    if "sk2" in entities[Role.AS_OPERATOR].secret_keys:
        raise ConfigurationError("ASOperator must not hold sk2: it would decrypt the vendor model")
    if "sk1" in entities[Role.AS_VENDOR].secret_keys:
        raise ConfigurationError("ASVendor must not hold sk1: it would decrypt subject data")
    entities[Role.AS_OPERATOR].secret("sk1")
    entities[Role.AS_OPERATOR].public("pk2")
    entities[Role.AS_VENDOR].secret("sk2")
    return entities


def run_2cov_vendor(pk1: PaillierPublicKey, sk1: PaillierSecretKey, pk2: PaillierPublicKey,
                    sk2: PaillierSecretKey, enc_model: VendorModelSource, references: References, subject_id: str,
                    probe, eta: float, placement: Optional[Dict[Role, Dict[str, Any]]] = None,
                    model: Optional[TwoCovModel] = None, apply_offset: bool = False,
                    rng: Optional[random.Random] = None, seed: Optional[int] = None) -> RunResult:
    _check_pair(pk1, sk1, "key pair 1")
    _check_pair(pk2, sk2, "key pair 2")
    if pk1.key_id == pk2.key_id:
        raise ConfigurationError("the vendor architecture needs two distinct key pairs")
    if apply_offset and model is None:
        raise UsageError("apply_offset needs the plaintext model at the vendor")
    rng = _make_rng(rng, seed)
    counter = OpCounter()
    entities = _vendor_entities(placement or default_vendor_placement(pk1, sk1, pk2, sk2))
    entities[Role.DB_CONTROLLER].local_store["references"] = references
    entities[Role.DB_VENDOR].local_store["model"] = enc_model
    net = _Network(entities)
    client = entities[Role.CLIENT]
    operator = entities[Role.AS_OPERATOR]
    vendor = entities[Role.AS_VENDOR]

    net.send("1a", Role.CLIENT, Role.DB_CONTROLLER, {"subject_id": subject_id})
    claim = net.receive(Role.DB_CONTROLLER, "1a")
    ref = _lookup(entities[Role.DB_CONTROLLER].local_store["references"], claim["subject_id"],
                  ComparatorKind.TWO_COV_VENDOR, ProtectedReference2CovVendor)

    net.send("2", Role.DB_CONTROLLER, Role.CLIENT, {"reference": ref}, pk=pk1)
    ref = net.receive(Role.CLIENT, "2")["reference"]

    c1, c23 = client_compute_vendor(client.public("pk1"), ref, probe, rng=rng, counter=counter)

    net.send("5a", Role.CLIENT, Role.AS_OPERATOR, {"c1": c1}, pk=pk1)
    net.send("5b", Role.CLIENT, Role.AS_OPERATOR, {"c23": c23}, pk=pk1)
    c1 = net.receive(Role.AS_OPERATOR, "5a")["c1"]
    c23 = net.receive(Role.AS_OPERATOR, "5b")["c23"]

    stored = _vendor_model(entities[Role.DB_VENDOR].local_store["model"])
    net.send("6a", Role.DB_VENDOR, Role.AS_OPERATOR, {"lambda": stored.Lambda_enc}, pk=pk2)
    net.send("6b", Role.DB_VENDOR, Role.AS_OPERATOR, {"gamma": stored.Gamma_enc}, pk=pk2)
    received_model = EncryptedModel(
        Lambda_enc=net.receive(Role.AS_OPERATOR, "6a")["lambda"],
        Gamma_enc=net.receive(Role.AS_OPERATOR, "6b")["gamma"],
    )

    enc_score = operator_combine_vendor(operator.secret("sk1"), operator.public("pk1"), operator.public("pk2"),
                                        received_model, c1, c23, counter=counter)

    net.send("10", Role.AS_OPERATOR, Role.AS_VENDOR, {"score": enc_score}, pk=pk2)
    enc_score = net.receive(Role.AS_VENDOR, "10")["score"]
    score = decrypt_number(vendor.secret("sk2"), vendor.public("pk2"), enc_score, counter=counter)
    if apply_offset:
        score = add_calibration_offset(score, model)
    return _finish(net, Role.AS_VENDOR, score, eta, counter)


# ─────────────── audits ───────────────
_ALLOWED_LEAVES = (EncryptedNumber, PaillierPublicKey, str, bool)


def audit_key_hygiene(transcript: Transcript) -> None:
    """Every message carries ciphertexts or identifiers only."""
    for message in transcript.messages:
        for leaf in _leaves(message.payload):
            if isinstance(leaf, PaillierSecretKey):
                raise KeyHygieneError(f"step {message.step}: secret key sent to {message.receiver.value}")
            if not isinstance(leaf, _ALLOWED_LEAVES):
                raise KeyHygieneError(f"step {message.step}: plaintext {type(leaf).__name__} sent to "
                                      f"{message.receiver.value}")


def expected_channel_counts(kind: ComparatorKind, F: int) -> Dict[str, int]:
    kind = ComparatorKind(kind)
    to_client = channel_name(Role.DB_CONTROLLER, Role.CLIENT)
    to_operator = channel_name(Role.CLIENT, Role.AS_OPERATOR)
    if kind == ComparatorKind.COSINE:
        return {to_client: F, to_operator: 1}
    if kind in (ComparatorKind.EUCLIDEAN, ComparatorKind.TWO_COV_SUBJECT):
        return {to_client: F + 1, to_operator: 1}
    return {
        to_client: F * F + F,
        to_operator: 2 * F * F,
        channel_name(Role.DB_VENDOR, Role.AS_OPERATOR): 2 * F * F,
        channel_name(Role.AS_OPERATOR, Role.AS_VENDOR): 1,
    }


# ─────────────── closed-form complexity ───────────────
def format_size(num_bytes: float) -> str:
    if num_bytes >= MIB / 2:
        return f"{num_bytes / MIB:.1f} MiB"
    return f"{num_bytes / KIB:.1f} KiB"


# (encryptions, decryptions, additions, products, exponentiations,
#  protected template ciphertexts, plain model entries, protected model ciphertexts, channel ciphertexts)
_FORMULAS = {
    ComparatorKind.COSINE: ("0", "1", "0", "F-1", "F", "F", "0", "0", "F+1"),
    ComparatorKind.EUCLIDEAN: ("F", "1", "F-1", "2F+4", "2F", "F+1", "0", "0", "F+2"),
    ComparatorKind.TWO_COV_SUBJECT: ("1", "1", "4F(F-1)", "4F^2+2F+1", "2F", "F+1", "2F^2", "0", "F+2"),
    ComparatorKind.TWO_COV_VENDOR: ("F^2", "2F^2+1", "0", "5F^2-1", "4F^2", "F^2+F", "2F^2", "2F^2",
                                    "5F^2+F+1"),
}


def _closed_form(kind: ComparatorKind, F: int) -> tuple:
    if kind == ComparatorKind.COSINE:
        return 0, 1, 0, F - 1, F, F, 0, 0, F + 1
    if kind == ComparatorKind.EUCLIDEAN:
        return F, 1, F - 1, 2 * F + 4, 2 * F, F + 1, 0, 0, F + 2
    if kind == ComparatorKind.TWO_COV_SUBJECT:
        return 1, 1, 4 * F * (F - 1), 4 * F * F + 2 * F + 1, 2 * F, F + 1, 2 * F * F, 0, F + 2
    return F * F, 2 * F * F + 1, 0, 5 * F * F - 1, 4 * F * F, F * F + F, 2 * F * F, 2 * F * F, 5 * F * F + F + 1


def complexity_report(kind: ComparatorKind, F: int, nu_bytes: float = 512, p_bits: int = 64) -> ComplexityReport:
    """Closed-form operation counts and sizes for one verification."""
    kind = ComparatorKind(kind)
    if F < 1 or nu_bytes <= 0 or p_bits < 1:
        raise UsageError(f"need F >= 1, nu > 0 and p >= 1, got F={F}, nu={nu_bytes}, p={p_bits}")
    enc, dec, adds, prods, exps, template_ct, plain_model, model_ct, channel_ct = _closed_form(kind, F)
    names = ("encryptions", "decryptions", "additions", "products", "exponentiations",
             "protected_template", "plain_model", "protected_model", "channel")
    sizes = {
        "plain_template_bytes": p_bits * F / 8,
        "protected_template_bytes": template_ct * nu_bytes,
        "plain_model_bytes": p_bits * plain_model / 8,
        "protected_model_bytes": model_ct * nu_bytes,
        "channel_bytes": channel_ct * nu_bytes,
    }
    return ComplexityReport(
        comparator=kind,
        feature_dim=F,
        nu_bytes=nu_bytes,
        p_bits=p_bits,
        encryptions=enc,
        decryptions=dec,
        additions=adds,
        products=prods,
        exponentiations=exps,
        channel_ciphertexts=channel_ct,
        formulas=dict(zip(names, _FORMULAS[kind])),
        display={name: format_size(value) for name, value in sizes.items()},
        **sizes,
    )


def preload_analysis(F: int, nu_bytes: float = 512) -> PreloadReport:
    """Vendor-architecture channel totals when the model (and templates) are preloaded at the operator."""
    if F < 0 or nu_bytes <= 0:
        raise UsageError(f"need F >= 0 and nu > 0, got F={F}, nu={nu_bytes}")
    model_preloaded = nu_bytes * (3 * F * F + F + 1)
    both_preloaded = nu_bytes * (2 * F * F + 1)
    return PreloadReport(
        feature_dim=F,
        nu_bytes=nu_bytes,
        model_preloaded_bytes=model_preloaded,
        model_and_templates_preloaded_bytes=both_preloaded,
        display={
            "model_preloaded": format_size(model_preloaded),
            "model_and_templates_preloaded": format_size(both_preloaded),
        },
    )
