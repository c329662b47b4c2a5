import math
import random

import numpy as np
import pytest
from pydantic import ValidationError

from app.comparators import (
    enroll_2cov_subject,
    enroll_2cov_vendor,
    enroll_cosine,
    enroll_euclidean,
    enroll_model,
)
from app.crud import TemplateStore
from app.exceptions import (
    ConfigurationError,
    KeyHygieneError,
    KeyMismatchError,
    ReferenceNotFoundError,
    UsageError,
)
from app.models import ComparatorKind
from app.protocol import (
    Decision,
    Entity,
    Message,
    Role,
    Transcript,
    audit_key_hygiene,
    complexity_report,
    default_vendor_placement,
    expected_channel_counts,
    format_size,
    preload_analysis,
    run_2cov_subject,
    run_2cov_vendor,
    run_cosine,
    run_euclidean,
)
from app.speaker import derive_hyperparameters, score_discriminative


def _identity_model(F):
    return derive_hyperparameters(np.eye(F), np.eye(F), np.zeros(F))


def _run(kind, F, keypair, vendor_keypair, seed=0, eta=0.0):
    pk, sk = keypair
    gen = np.random.default_rng(F)
    x, y = gen.normal(size=(2, F))
    rng = random.Random(seed)
    if kind == ComparatorKind.COSINE:
        return run_cosine(pk, sk, {"alice": enroll_cosine(pk, y, rng=rng)}, "alice", x, eta, seed=seed)
    if kind == ComparatorKind.EUCLIDEAN:
        return run_euclidean(pk, sk, {"alice": enroll_euclidean(pk, y, rng=rng)}, "alice", x, eta, seed=seed)
    model = _identity_model(F)
    if kind == ComparatorKind.TWO_COV_SUBJECT:
        refs = {"alice": enroll_2cov_subject(pk, model.Gamma, y, rng=rng)}
        return run_2cov_subject(pk, sk, model, refs, "alice", x, eta, seed=seed)
    pk2, sk2 = vendor_keypair
    refs = {"alice": enroll_2cov_vendor(pk, y, rng=rng)}
    return run_2cov_vendor(pk, sk, pk2, sk2, enroll_model(pk2, model, rng=rng), refs, "alice", x, eta, seed=seed)


@pytest.mark.parametrize("F", [2, 4, 16])
@pytest.mark.parametrize("kind", list(ComparatorKind))
def test_ledger_matches_closed_form(kind, F, keypair, vendor_keypair):
    result = _run(kind, F, keypair, vendor_keypair)
    assert result.ledger.ciphertext_counts() == expected_channel_counts(kind, F)
    nu = keypair[0].ciphertext_bytes
    assert result.ledger.total_metadata_bytes == 4 * result.ledger.total_ciphertexts
    if kind == ComparatorKind.TWO_COV_VENDOR:
        assert result.ledger.total_protected_bytes == nu * (5 * F * F + F + 1)
    else:
        assert result.ledger.total_protected_bytes == nu * complexity_report(kind, F, nu_bytes=nu).channel_ciphertexts


@pytest.mark.parametrize("kind", [ComparatorKind.COSINE, ComparatorKind.EUCLIDEAN, ComparatorKind.TWO_COV_SUBJECT])
def test_ledger_at_full_dimension(kind, keypair, vendor_keypair):
    result = _run(kind, 250, keypair, vendor_keypair)
    assert result.ledger.ciphertext_counts() == expected_channel_counts(kind, 250)


@pytest.mark.slow
def test_vendor_ledger_at_full_dimension(keypair, vendor_keypair):
    result = _run(ComparatorKind.TWO_COV_VENDOR, 250, keypair, vendor_keypair)
    assert result.ledger.ciphertext_counts() == {
        "DBController->Client": 62750,
        "Client->ASOperator": 125000,
        "DBVendor->ASOperator": 125000,
        "ASOperator->ASVendor": 1,
    }


def test_subject_run_counts_and_score(keypair, vendor_keypair):
    F = 4
    result = _run(ComparatorKind.TWO_COV_SUBJECT, F, keypair, vendor_keypair, eta=-math.inf)
    assert result.counter.encryptions == 1
    assert result.counter.decryptions == 1
    assert result.counter.exponentiations == 2 * F
    assert result.counter.ciphertext_products == 2 * F + 1
    x, y = np.random.default_rng(F).normal(size=(2, F))
    assert result.decision.score == pytest.approx(score_discriminative(_identity_model(F), x, y), abs=1e-9)
    assert result.decision.accepted


def test_vendor_run_counts(keypair, vendor_keypair):
    F = 3
    result = _run(ComparatorKind.TWO_COV_VENDOR, F, keypair, vendor_keypair)
    assert result.counter.encryptions == F * F
    assert result.counter.decryptions == 2 * F * F + 1
    assert result.counter.exponentiations == 4 * F * F
    assert result.counter.ciphertext_products == 4 * F * F - 1
    assert result.ledger.total_ciphertexts == 5 * F * F + F + 1


def test_euclidean_decides_on_negated_distance(keypair, vendor_keypair):
    result = _run(ComparatorKind.EUCLIDEAN, 4, keypair, vendor_keypair, eta=0.0)
    assert result.decision.score <= 0
    assert result.decision.accepted == (result.decision.score >= 0)


def test_transcript_steps_in_order(keypair, vendor_keypair):
    single = _run(ComparatorKind.COSINE, 2, keypair, vendor_keypair)
    assert [e.step for e in single.transcript.entries] == ["1", "2a", "4", "decision"]
    vendor = _run(ComparatorKind.TWO_COV_VENDOR, 2, keypair, vendor_keypair)
    assert [e.step for e in vendor.transcript.entries] == ["1a", "2", "5a", "5b", "6a", "6b", "10", "decision"]
    assert vendor.transcript.entries[-1].ciphertext_count == 0


def test_seeded_runs_are_reproducible(keypair, vendor_keypair):
    for kind in ComparatorKind:
        a = _run(kind, 3, keypair, vendor_keypair, seed=5)
        b = _run(kind, 3, keypair, vendor_keypair, seed=5)
        assert a.transcript.to_jsonl() == b.transcript.to_jsonl()
        assert a.transcript.sha256() == b.transcript.sha256()


def test_vendor_run_needs_distinct_keys(keypair, identity_model, rng):
    pk, sk = keypair
    refs = {"alice": enroll_2cov_vendor(pk, [1.0, 0.0], rng=rng)}
    enc_model = enroll_model(pk, identity_model, rng=rng)
    with pytest.raises(ConfigurationError):
        run_2cov_vendor(pk, sk, pk, sk, enc_model, refs, "alice", [1.0, 0.0], 0.0)


def test_vendor_placement_rules(keypair, vendor_keypair, identity_model, rng):
    pk1, sk1 = keypair
    pk2, sk2 = vendor_keypair
    refs = {"alice": enroll_2cov_vendor(pk1, [1.0, 0.0], rng=rng)}
    enc_model = enroll_model(pk2, identity_model, rng=rng)

    leaky = default_vendor_placement(pk1, sk1, pk2, sk2)
    leaky[Role.AS_OPERATOR]["sk2"] = sk2
    with pytest.raises(ConfigurationError, match="sk2"):
        run_2cov_vendor(pk1, sk1, pk2, sk2, enc_model, refs, "alice", [1.0, 0.0], 0.0, placement=leaky)

    leaky = default_vendor_placement(pk1, sk1, pk2, sk2)
    leaky[Role.AS_VENDOR]["sk1"] = sk1
    with pytest.raises(ConfigurationError, match="sk1"):
        run_2cov_vendor(pk1, sk1, pk2, sk2, enc_model, refs, "alice", [1.0, 0.0], 0.0, placement=leaky)

    missing = default_vendor_placement(pk1, sk1, pk2, sk2)
    del missing[Role.AS_OPERATOR]["pk2"]
    with pytest.raises(ConfigurationError):
        run_2cov_vendor(pk1, sk1, pk2, sk2, enc_model, refs, "alice", [1.0, 0.0], 0.0, placement=missing)


def test_client_cannot_hold_secret_key(keypair):
    with pytest.raises(ConfigurationError):
        Entity(Role.CLIENT, secret_keys={"sk": keypair[1]})


def test_vendor_offset_needs_model(keypair, vendor_keypair, identity_model, rng):
    pk1, sk1 = keypair
    pk2, sk2 = vendor_keypair
    refs = {"alice": enroll_2cov_vendor(pk1, [1.0, 0.0], rng=rng)}
    with pytest.raises(UsageError):
        run_2cov_vendor(pk1, sk1, pk2, sk2, enroll_model(pk2, identity_model, rng=rng), refs, "alice",
                        [1.0, 0.0], 0.0, apply_offset=True)


def test_unknown_subject(keypair, rng):
    pk, sk = keypair
    with pytest.raises(ReferenceNotFoundError):
        run_cosine(pk, sk, {"alice": enroll_cosine(pk, [1.0, 0.0], rng=rng)}, "bob", [1.0, 0.0], 0.0)
    store = TemplateStore("sqlite://")
    store.add_reference("alice", enroll_cosine(pk, [1.0, 0.0], rng=rng))
    with pytest.raises(ReferenceNotFoundError):
        run_cosine(pk, sk, store, "bob", [1.0, 0.0], 0.0)


def test_run_against_template_store(keypair, rng):
    pk, sk = keypair
    store = TemplateStore("sqlite://")
    store.add_reference("alice", enroll_cosine(pk, [3.0, 4.0], rng=rng))
    result = run_cosine(pk, sk, store, "alice", [3.0, 4.0], 0.99)
    assert result.decision.score == pytest.approx(1.0, abs=1e-9)
    assert result.decision.accepted


def test_revoked_key_cannot_score_renewed_templates(keypair, vendor_keypair, identity_model, rng):
    old_pk, old_sk = keypair
    new_pk, _ = vendor_keypair
    store = TemplateStore("sqlite://")
    store.add_reference("alice", enroll_cosine(new_pk, [1.0, 0.0], rng=rng))
    result = None
    with pytest.raises(KeyMismatchError):
        result = run_cosine(old_pk, old_sk, store, "alice", [1.0, 0.0], 0.0)
    assert result is None
    refs = {"alice": enroll_2cov_subject(new_pk, identity_model.Gamma, [1.0, 0.0], rng=rng)}
    with pytest.raises(KeyMismatchError):
        result = run_2cov_subject(old_pk, old_sk, identity_model, refs, "alice", [1.0, 0.0], 0.0)
    assert result is None


def test_vendor_run_reads_model_from_store(keypair, vendor_keypair, identity_model, rng):
    pk1, sk1 = keypair
    pk2, sk2 = vendor_keypair
    store = TemplateStore("sqlite://")
    e1 = [1.0, 0.0]
    store.add_reference("alice", enroll_2cov_vendor(pk1, e1, rng=rng))
    store.add_vendor_model(enroll_model(pk2, identity_model, rng=rng))
    result = run_2cov_vendor(pk1, sk1, pk2, sk2, store, store, "alice", e1, 0.0, seed=1)
    assert result.decision.score == pytest.approx(1 / 6, abs=1e-12)
    store.add_vendor_model(enroll_model(pk1, identity_model, rng=rng))
    with pytest.raises(KeyMismatchError):
        run_2cov_vendor(pk1, sk1, pk2, sk2, store, store, "alice", e1, 0.0, seed=1)

def test_hygiene_audit_rejects_plaintext_and_secrets(keypair):
    _, sk = keypair
    transcript = Transcript()
    transcript.messages.append(Message("4", Role.CLIENT, Role.AS_OPERATOR, {"probe": np.ones(2)}, 0))
    with pytest.raises(KeyHygieneError, match="ndarray"):
        audit_key_hygiene(transcript)
    transcript = Transcript()
    transcript.messages.append(Message("4", Role.CLIENT, Role.AS_OPERATOR, {"key": sk}, 0))
    with pytest.raises(KeyHygieneError, match="secret key"):
        audit_key_hygiene(transcript)


def test_decision_rule():
    assert Decision.decide(0.5, 0.5).accepted
    assert not Decision.decide(0.49, 0.5).accepted
    with pytest.raises(ValidationError):
        Decision(score=0.0, threshold=1.0, accepted=True)


def test_complexity_at_full_dimension():
    F = 250
    assert complexity_report(ComparatorKind.COSINE, F).display["channel_bytes"] == "125.5 KiB"
    assert complexity_report(ComparatorKind.EUCLIDEAN, F).display["channel_bytes"] == "126.0 KiB"
    vendor = complexity_report(ComparatorKind.TWO_COV_VENDOR, F)
    assert vendor.display["channel_bytes"] == "152.7 MiB"
    assert vendor.display["protected_template_bytes"] == "30.6 MiB"
    assert vendor.display["protected_model_bytes"] == "61.0 MiB"
    assert vendor.display["plain_template_bytes"] == "2.0 KiB"
    assert vendor.display["plain_model_bytes"] == "1.0 MiB"
    assert (vendor.encryptions, vendor.decryptions, vendor.exponentiations) == (62500, 125001, 250000)
    assert complexity_report(ComparatorKind.TWO_COV_SUBJECT, F).products == 250501


def test_complexity_edge_dimensions():
    subject = complexity_report(ComparatorKind.TWO_COV_SUBJECT, 1)
    assert subject.channel_bytes == 3 * 512
    assert subject.additions == 0
    with pytest.raises(UsageError):
        complexity_report(ComparatorKind.COSINE, 0)


def test_preload_analysis():
    report = preload_analysis(250)
    assert report.display == {"model_preloaded": "91.7 MiB", "model_and_templates_preloaded": "61.0 MiB"}
    empty = preload_analysis(0)
    assert empty.model_preloaded_bytes == 512
    assert empty.model_and_templates_preloaded_bytes == 512


def test_format_size_boundary():
    assert format_size(512 * 1024) == "0.5 MiB"
    assert format_size(512 * 1024 - 1) == "512.0 KiB"
