import json

import numpy as np
import pytest

from app.comparators import enroll_2cov_vendor, enroll_euclidean, enroll_model
from app.encoding import decrypt_number
from app.exceptions import FileFormatError, FormatVersionError, KeyMismatchError, UsageError
from app.linalg import decrypt_matrix, decrypt_vector
from app.schemas import CorpusFile, EncryptedModelFile, ModelFile, TemplateFile
from app.service import (
    corpus_from_file,
    corpus_to_file,
    encrypted_model_from_file,
    encrypted_model_to_file,
    key_paths,
    load_keypair,
    model_from_file,
    model_to_file,
    read_model,
    read_scores,
    reference_from_file,
    reference_to_file,
    save_keypair,
    write_model,
    write_scores,
)
from app.speaker import whiten_fit


def test_keypair_files(tmp_path, keypair):
    pk, sk = keypair
    pub_path, sec_path = save_keypair(pk, sk, tmp_path, "operator")
    assert (pub_path, sec_path) == key_paths(tmp_path, "operator")
    stored = json.loads(sec_path.read_text())
    assert "lambda" in stored
    assert {"p", "q"} <= set(stored)
    loaded_pk, loaded_sk = load_keypair(tmp_path, "operator")
    assert loaded_pk.n == pk.n
    assert loaded_sk.lam == sk.lam
    assert loaded_sk.mu == sk.mu


def test_keypair_files_must_match(tmp_path, keypair, vendor_keypair):
    save_keypair(*keypair, tmp_path, "a")
    save_keypair(*vendor_keypair, tmp_path, "b")
    key_paths(tmp_path, "b")[1].replace(key_paths(tmp_path, "a")[1])
    with pytest.raises(KeyMismatchError):
        load_keypair(tmp_path, "a")


def test_tampered_public_key_file(tmp_path, keypair):
    pub_path, _ = save_keypair(*keypair, tmp_path, "operator")
    data = json.loads(pub_path.read_text())
    data["key_id"] = "0" * 16
    pub_path.write_text(json.dumps(data))
    with pytest.raises(KeyMismatchError):
        load_keypair(tmp_path, "operator")


def test_missing_file_is_a_usage_error(tmp_path):
    with pytest.raises(UsageError):
        read_model(tmp_path / "absent.json", TemplateFile)


def test_format_version_checks(tmp_path, corpus):
    path = write_model(tmp_path / "corpus.json", corpus_to_file(corpus))
    data = json.loads(path.read_text())
    data["format_version"] = "1.7"
    path.write_text(json.dumps(data))
    assert read_model(path, CorpusFile).format_version == "1.7"
    data["format_version"] = "2.0"
    path.write_text(json.dumps(data))
    with pytest.raises(FormatVersionError):
        read_model(path, CorpusFile)


def test_malformed_files(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(FileFormatError):
        read_model(path, CorpusFile)
    path.write_text(json.dumps({"format_version": "1.0", "feature_dim": 0}))
    with pytest.raises(FileFormatError):
        read_model(path, CorpusFile)


def test_template_file_keeps_ciphertexts(tmp_path, keypair, rng):
    pk, sk = keypair
    ref = enroll_euclidean(pk, [0.5, -1.0, 2.0], rng=rng)
    path = write_model(tmp_path / "t.json", reference_to_file(ref, "alice"))
    f = read_model(path, TemplateFile)
    assert f.subject_id == "alice"
    loaded = reference_from_file(f)
    assert [x.ciphertext.value for x in loaded.elements] == [x.ciphertext.value for x in ref.elements]
    np.testing.assert_array_equal(decrypt_vector(sk, pk, loaded.elements), [0.5, -1.0, 2.0])
    assert decrypt_number(sk, pk, loaded.sum_sq) == 5.25


def test_template_missing_comparator_field(keypair, rng):
    pk, _ = keypair
    f = reference_to_file(enroll_euclidean(pk, [1.0], rng=rng), "alice")
    with pytest.raises(FileFormatError):
        reference_from_file(f.model_copy(update={"sum_sq": None}))
    with pytest.raises(FileFormatError):
        reference_from_file(f.model_copy(update={"feature_dim": 2}))


def test_vendor_files(tmp_path, keypair, vendor_keypair, identity_model, rng):
    pk1, sk1 = keypair
    pk2, sk2 = vendor_keypair
    ref = reference_from_file(reference_to_file(enroll_2cov_vendor(pk1, [1.0, 2.0], rng=rng), "bob"))
    np.testing.assert_array_equal(decrypt_matrix(sk1, pk1, ref.gram), [[1.0, 2.0], [2.0, 4.0]])
    path = write_model(tmp_path / "vendor_model.json",
                       encrypted_model_to_file(enroll_model(pk2, identity_model, rng=rng)))
    enc_model = encrypted_model_from_file(read_model(path, EncryptedModelFile))
    assert enc_model.key_id == pk2.key_id
    np.testing.assert_allclose(decrypt_matrix(sk2, pk2, enc_model.Gamma_enc), -np.eye(2) / 12, atol=1e-12)


def test_model_file_recomputes_derived_fields(tmp_path, model, corpus):
    whitening = whiten_fit(corpus)
    path = write_model(tmp_path / "model.json", model_to_file(model, whitening=whitening, length_normalize=True))
    loaded, loaded_whitening, length_norm = model_from_file(read_model(path, ModelFile))
    np.testing.assert_allclose(loaded.Lambda, model.Lambda, atol=1e-12)
    assert loaded.k == pytest.approx(model.k, abs=1e-12)
    np.testing.assert_allclose(loaded_whitening.matrix, whitening.matrix)
    assert length_norm

    data = json.loads(path.read_text())
    for derived in ("Lambda", "Gamma", "c", "k", "k_tilde", "Lambda_tilde", "Gamma_tilde"):
        data.pop(derived)
    bare, _, _ = model_from_file(ModelFile.model_validate(data))
    np.testing.assert_allclose(bare.Gamma, model.Gamma, atol=1e-12)


def test_corpus_file(corpus):
    loaded = corpus_from_file(corpus_to_file(corpus))
    np.testing.assert_array_equal(loaded.vectors, corpus.vectors)
    assert tuple(loaded.speaker_ids) == tuple(corpus.speaker_ids)
    bad = corpus_to_file(corpus).model_copy(update={"feature_dim": corpus.feature_dim + 1})
    with pytest.raises(FileFormatError):
        corpus_from_file(bad)


def test_score_csv(tmp_path):
    path = write_scores(tmp_path / "scores.csv", [("t0", "target", 1.5), ("t1", "nontarget", -0.25)])
    assert path.read_text().splitlines()[0] == "trial_id,label,score"
    scores = read_scores(path)
    assert scores.target_scores.tolist() == [1.5]
    assert scores.nontarget_scores.tolist() == [-0.25]


@pytest.mark.parametrize("body", [
    "trial_id,label,score\nt0,target,abc\n",
    "trial_id,label,score\nt0,maybe,1.0\n",
    "trial,verdict\nt0,target\n",
])
def test_score_csv_errors(tmp_path, body):
    path = tmp_path / "scores.csv"
    path.write_text(body)
    with pytest.raises(FileFormatError):
        read_scores(path)
