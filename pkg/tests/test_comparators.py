import numpy as np
import pytest

from app.comparators import (
    add_calibration_offset,
    client_compute_vendor,
    enroll_2cov_subject,
    enroll_2cov_vendor,
    enroll_cosine,
    enroll_euclidean,
    enroll_model,
    operator_combine_vendor,
    score_2cov_subject_encrypted,
    score_cosine_encrypted,
    score_euclidean_encrypted,
)
from app.encoding import decrypt_number
from app.exceptions import KeyMismatchError, ShapeError
from app.linalg import decrypt_matrix
from app.metrics import ScoreSet, cllr, min_dcf, rocch_eer
from app.models import ComparatorKind
from app.schemas import OpCounter
from app.speaker import (
    enrolment_mean,
    length_normalize,
    score_discriminative,
    score_full,
    synthesize_corpus,
    train_two_cov,
)

TRIALS = 10


def _pairs(feature_dim, seed=0):
    gen = np.random.default_rng(seed)
    return [gen.normal(size=(2, feature_dim)) for _ in range(TRIALS)]


def test_euclidean_exact_fixture(keypair, rng):
    pk, sk = keypair
    ref = enroll_euclidean(pk, [0.5, -1.0], rng=rng)
    score = score_euclidean_encrypted(pk, ref, [1.0, 2.0], rng=rng)
    assert decrypt_number(sk, pk, score) == 9.25


def test_euclidean_matches_plaintext(keypair, rng):
    pk, sk = keypair
    for x, y in _pairs(16):
        ref = enroll_euclidean(pk, y, rng=rng)
        got = decrypt_number(sk, pk, score_euclidean_encrypted(pk, ref, x, rng=rng))
        assert got == pytest.approx(float((x - y) @ (x - y)), rel=1e-6)


def test_euclidean_counts(keypair, rng):
    pk, _ = keypair
    counter = OpCounter()
    ref = enroll_euclidean(pk, np.ones(8), rng=rng)
    score_euclidean_encrypted(pk, ref, np.arange(8.0), rng=rng, counter=counter)
    assert counter.encryptions == 1
    assert counter.exponentiations == 8
    assert counter.ciphertext_products == 7 + 2


def test_cosine_matches_plaintext(keypair, rng):
    pk, sk = keypair
    for x, y in _pairs(16, seed=1):
        ref = enroll_cosine(pk, y, rng=rng)
        got = decrypt_number(sk, pk, score_cosine_encrypted(pk, ref, x))
        expected = float(length_normalize(x) @ length_normalize(y))
        assert got == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_cosine_needs_no_probe_encryption(keypair, rng):
    pk, _ = keypair
    counter = OpCounter()
    ref = enroll_cosine(pk, [1.0, 0.0, 0.0], rng=rng)
    score_cosine_encrypted(pk, ref, [0.0, 1.0, 0.0], counter=counter)
    assert counter.encryptions == 0
    assert counter.exponentiations == 3


def test_2cov_subject_matches_plaintext(keypair, model, rng):
    pk, sk = keypair
    for x, y in _pairs(model.feature_dim, seed=2):
        ref = enroll_2cov_subject(pk, model.Gamma, y, rng=rng)
        enc = score_2cov_subject_encrypted(pk, ref, x, model.Lambda, model.Gamma, rng=rng)
        expected = score_discriminative(model, x, y)
        assert decrypt_number(sk, pk, enc) == pytest.approx(expected, rel=1e-6, abs=1e-9)


def test_2cov_subject_counts(keypair, model, rng):
    pk, _ = keypair
    F = model.feature_dim
    x, y = _pairs(F)[0]
    ref = enroll_2cov_subject(pk, model.Gamma, y, rng=rng)
    counter = OpCounter()
    score_2cov_subject_encrypted(pk, ref, x, model.Lambda, model.Gamma, rng=rng, counter=counter)
    assert counter.encryptions == 1
    assert counter.exponentiations == 2 * F
    assert counter.ciphertext_products == 2 * F + 1
    assert counter.plain_products == 3 * F * F + F


def test_identity_model_exact_score(keypair, identity_model, rng):
    pk, sk = keypair
    e1 = np.array([1.0, 0.0])
    ref = enroll_2cov_subject(pk, identity_model.Gamma, e1, rng=rng)
    enc = score_2cov_subject_encrypted(pk, ref, e1, identity_model.Lambda, identity_model.Gamma, rng=rng)
    assert decrypt_number(sk, pk, enc) == pytest.approx(1 / 6, abs=1e-12)


def test_vendor_auxiliary_matrices(keypair, rng):
    pk, sk = keypair
    x = np.array([1.0, -0.5])
    y = np.array([2.0, 0.25])
    c1, c23 = client_compute_vendor(pk, enroll_2cov_vendor(pk, y, rng=rng), x, rng=rng)
    np.testing.assert_array_equal(decrypt_matrix(sk, pk, c1), np.outer(x, y) + np.outer(y, x))
    np.testing.assert_array_equal(decrypt_matrix(sk, pk, c23), np.outer(x, x) + np.outer(y, y))


def test_vendor_matches_plaintext_and_counts(keypair, vendor_keypair, model, rng):
    pk1, sk1 = keypair
    pk2, sk2 = vendor_keypair
    F = model.feature_dim
    enc_model = enroll_model(pk2, model, rng=rng)
    for x, y in _pairs(F, seed=3)[:3]:
        ref = enroll_2cov_vendor(pk1, y, rng=rng)
        counter = OpCounter()
        c1, c23 = client_compute_vendor(pk1, ref, x, rng=rng, counter=counter)
        enc = operator_combine_vendor(sk1, pk1, pk2, enc_model, c1, c23, counter=counter)
        assert enc.key_id == pk2.key_id
        expected = score_discriminative(model, x, y)
        assert decrypt_number(sk2, pk2, enc) == pytest.approx(expected, rel=1e-6, abs=1e-9)
        assert counter.encryptions == F * F
        assert counter.decryptions == 2 * F * F
        assert counter.exponentiations == 4 * F * F
        assert counter.ciphertext_products == 4 * F * F - 1


def test_vendor_rejects_swapped_keys(keypair, vendor_keypair, model, rng):
    pk1, sk1 = keypair
    pk2, _ = vendor_keypair
    enc_model = enroll_model(pk1, model, rng=rng)
    ref = enroll_2cov_vendor(pk1, np.ones(model.feature_dim), rng=rng)
    c1, c23 = client_compute_vendor(pk1, ref, np.ones(model.feature_dim), rng=rng)
    with pytest.raises(KeyMismatchError):
        operator_combine_vendor(sk1, pk1, pk2, enc_model, c1, c23)


def test_key_and_dimension_checks(keypair, vendor_keypair, rng):
    pk, _ = keypair
    pk2, _ = vendor_keypair
    ref = enroll_cosine(pk, [1.0, 0.0], rng=rng)
    with pytest.raises(KeyMismatchError):
        score_cosine_encrypted(pk2, ref, [1.0, 0.0])
    with pytest.raises(ShapeError, match="F=2"):
        score_cosine_encrypted(pk, ref, [1.0, 0.0, 0.0])


def test_calibration_offset_restores_full_score(model):
    x = np.array([0.5, -1.0, 0.25, 2.0])
    y = np.array([1.0, 0.0, -0.5, 0.5])
    partial = score_discriminative(model, x, y)
    assert add_calibration_offset(partial, model, x + y) == pytest.approx(score_full(model, x, y), abs=1e-12)
    assert add_calibration_offset(partial, model) == pytest.approx(partial + model.k, abs=1e-12)


def _check_routes_agree(keypair, vendor_keypair, rng, trials):
    pk1, sk1 = keypair
    pk2, sk2 = vendor_keypair
    gen = np.random.default_rng(8)
    corpus = synthesize_corpus(8, 12, 5, seed=8)
    model = train_two_cov(corpus)
    enc_model = enroll_model(pk2, model, rng=rng)
    for _ in range(trials):
        x, y = gen.normal(size=(2, 8))
        subject = score_2cov_subject_encrypted(pk1, enroll_2cov_subject(pk1, model.Gamma, y, rng=rng), x,
                                               model.Lambda, model.Gamma, rng=rng)
        c1, c23 = client_compute_vendor(pk1, enroll_2cov_vendor(pk1, y, rng=rng), x, rng=rng)
        vendor = operator_combine_vendor(sk1, pk1, pk2, enc_model, c1, c23)
        assert decrypt_number(sk1, pk1, subject) == pytest.approx(decrypt_number(sk2, pk2, vendor), rel=1e-6, abs=1e-9)


def test_subject_and_vendor_routes_agree(keypair, vendor_keypair, rng):
    _check_routes_agree(keypair, vendor_keypair, rng, trials=2)


@pytest.mark.slow
def test_subject_and_vendor_routes_agree_on_many_trials(keypair, vendor_keypair, rng):
    _check_routes_agree(keypair, vendor_keypair, rng, trials=100)


def test_repeated_enrolment_is_unlinkable(keypair, rng):
    pk, _ = keypair
    y = np.array([0.25, -1.5, 3.0])
    seen = set()
    for _ in range(100):
        values = {x.ciphertext.value for x in enroll_cosine(pk, y, rng=rng).elements}
        assert not values & seen
        seen |= values


def test_encrypted_scores_preserve_metrics(keypair, model, rng):
    pk, sk = keypair
    gen = np.random.default_rng(4)
    plain, encrypted = {True: [], False: []}, {True: [], False: []}
    for t in range(40):
        x, y = gen.normal(size=(2, model.feature_dim))
        genuine = t % 2 == 0
        if genuine:
            x = y + 0.3 * gen.normal(size=model.feature_dim)
        ref = enroll_2cov_subject(pk, model.Gamma, y, rng=rng)
        enc = score_2cov_subject_encrypted(pk, ref, x, model.Lambda, model.Gamma, rng=rng)
        plain[genuine].append(score_discriminative(model, x, y))
        encrypted[genuine].append(decrypt_number(sk, pk, enc))
    a = ScoreSet(plain[True], plain[False])
    b = ScoreSet(encrypted[True], encrypted[False])
    assert rocch_eer(a) == pytest.approx(rocch_eer(b), abs=1e-6)
    assert min_dcf(a) == pytest.approx(min_dcf(b), abs=1e-6)
    assert cllr(a) == pytest.approx(cllr(b), abs=1e-6)


def test_calibration_identity_on_decrypted_scores(keypair, model, rng):
    pk, sk = keypair
    gen = np.random.default_rng(9)
    for _ in range(100):
        x, y = gen.normal(size=(2, model.feature_dim))
        ref = enroll_2cov_subject(pk, model.Gamma, y, rng=rng)
        partial = decrypt_number(sk, pk, score_2cov_subject_encrypted(pk, ref, x, model.Lambda, model.Gamma, rng=rng))
        assert add_calibration_offset(partial, model, x + y) == pytest.approx(score_full(model, x, y), abs=1e-9)


def _plain_and_encrypted(kind, keypair, vendor_keypair, model, enc_model, x, y, rng):
    pk, sk = keypair
    if kind == ComparatorKind.EUCLIDEAN:
        enc = score_euclidean_encrypted(pk, enroll_euclidean(pk, y, rng=rng), x, rng=rng)
        return float((x - y) @ (x - y)), decrypt_number(sk, pk, enc)
    if kind == ComparatorKind.COSINE:
        enc = score_cosine_encrypted(pk, enroll_cosine(pk, y, rng=rng), x)
        return float(length_normalize(x) @ length_normalize(y)), decrypt_number(sk, pk, enc)
    expected = score_discriminative(model, x, y)
    if kind == ComparatorKind.TWO_COV_SUBJECT:
        ref = enroll_2cov_subject(pk, model.Gamma, y, rng=rng)
        enc = score_2cov_subject_encrypted(pk, ref, x, model.Lambda, model.Gamma, rng=rng)
        return expected, decrypt_number(sk, pk, enc)
    pk2, sk2 = vendor_keypair
    c1, c23 = client_compute_vendor(pk, enroll_2cov_vendor(pk, y, rng=rng), x, rng=rng)
    return expected, decrypt_number(sk2, pk2, operator_combine_vendor(sk, pk, pk2, enc_model, c1, c23))


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(ComparatorKind))
def test_scores_preserved_over_random_models(kind, keypair, vendor_keypair, rng):
    F = 16
    gen = np.random.default_rng(16)
    for m in range(10):
        model = train_two_cov(synthesize_corpus(F, 2 * F, 6, seed=100 + m))
        enc_model = enroll_model(vendor_keypair[0], model, rng=rng) if kind == ComparatorKind.TWO_COV_VENDOR else None
        for _ in range(20):
            x, y = gen.normal(size=(2, F))
            expected, got = _plain_and_encrypted(kind, keypair, vendor_keypair, model, enc_model, x, y, rng)
            assert got == pytest.approx(expected, rel=1e-6, abs=1e-9)


@pytest.mark.slow
def test_synthetic_evaluation_is_preserved_under_encryption(keypair, rng):
    pk, sk = keypair
    F = 16
    corpus = synthesize_corpus(F, 50, 10, within_cov=0.5 * np.eye(F), seed=50)
    model = train_two_cov(corpus)
    groups = corpus.by_speaker()
    speakers = sorted(groups)
    means = {s: enrolment_mean(groups[s][:5]) for s in speakers}
    refs = {s: enroll_2cov_subject(pk, model.Gamma, means[s], rng=rng) for s in speakers}
    gen = np.random.default_rng(50)
    plain, encrypted = {True: [], False: []}, {True: [], False: []}
    for t in range(2000):
        claimed = speakers[t % len(speakers)]
        genuine = t % 2 == 0
        source = claimed if genuine else speakers[(t + 1 + gen.integers(len(speakers) - 1)) % len(speakers)]
        x = groups[source][5 + gen.integers(5)]
        enc = score_2cov_subject_encrypted(pk, refs[claimed], x, model.Lambda, model.Gamma, rng=rng)
        plain[genuine].append(score_discriminative(model, x, means[claimed]))
        encrypted[genuine].append(decrypt_number(sk, pk, enc))
    a = ScoreSet(plain[True], plain[False])
    b = ScoreSet(encrypted[True], encrypted[False])
    assert rocch_eer(a) == pytest.approx(rocch_eer(b), abs=1e-6)
    assert min_dcf(a) == pytest.approx(min_dcf(b), abs=1e-6)
    assert cllr(a) == pytest.approx(cllr(b), abs=1e-6)
