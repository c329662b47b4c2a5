import logging
import random
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .comparators import (
    enroll_2cov_subject,
    enroll_2cov_vendor,
    enroll_cosine,
    enroll_euclidean,
    enroll_model,
)
from .crud import TemplateStore
from .exceptions import ShapeError, UsageError
from .metrics import ScoreSet, det_points, evaluate
from .models import ComparatorKind
from .paillier import PaillierPublicKey, keygen
from .protocol import (
    RunResult,
    complexity_report,
    expected_channel_counts,
    preload_analysis,
    run_2cov_subject,
    run_2cov_vendor,
    run_cosine,
    run_euclidean,
)
from .schemas import (
    CorpusFile,
    EncryptedModelFile,
    ModelFile,
    OpCounter,
    RunConfig,
    RunSummary,
    TemplateFile,
)
from .service import (
    corpus_from_file,
    corpus_to_file,
    encrypted_model_from_file,
    encrypted_model_to_file,
    load_keypair,
    load_public_key,
    model_from_file,
    model_to_file,
    read_model,
    read_scores,
    reference_from_file,
    reference_to_file,
    save_keypair,
    write_det,
    write_model,
    write_scores,
)
from .speaker import (
    LabeledCorpus,
    TwoCovModel,
    WhiteningTransform,
    enrolment_mean,
    length_normalize,
    score_discriminative,
    synthesize_corpus,
    train_two_cov,
    whiten_fit,
)

TWO_COV = (ComparatorKind.TWO_COV_SUBJECT, ComparatorKind.TWO_COV_VENDOR)


def _rng(config: RunConfig, salt: int = 0) -> random.Random:
    if config.seed is None:
        return random.SystemRandom()
    return random.Random(config.seed * 1_000_003 + salt)


def _require(value: Optional[str], flag: str, command: str) -> str:
    if not value:
        raise UsageError(f"{command} needs {flag}")
    return value


def _preprocess(vectors: np.ndarray, whitening: Optional[WhiteningTransform], length_norm: bool) -> np.ndarray:
    out = np.asarray(vectors, dtype=float)
    if whitening is not None:
        out = np.array([whitening.apply(v) for v in out])
    if length_norm:
        out = np.array([length_normalize(v) for v in out])
    return out


def _load_model(config: RunConfig, command: str) -> Tuple[TwoCovModel, Optional[WhiteningTransform], bool]:
    return model_from_file(read_model(_require(config.model, "--model", command), ModelFile))


def _subject_vectors(corpus: LabeledCorpus, subject: str) -> np.ndarray:
    groups = corpus.by_speaker()
    if subject not in groups:
        raise UsageError(f"subject {subject!r} not in corpus ({len(groups)} speakers)")
    return groups[subject]


def _read_template(path: str):
    f = read_model(path, TemplateFile)
    return f.comparator, f.subject_id, reference_from_file(f)


def _check_dim(side_a: str, dim_a: int, side_b: str, dim_b: int) -> None:
    if dim_a != dim_b:
        raise ShapeError(f"dimension mismatch: {side_a} has F={dim_a}, {side_b} has F={dim_b}")


def _enroll(kind: ComparatorKind, pk: PaillierPublicKey, y: np.ndarray, model: Optional[TwoCovModel],
            rng: random.Random):
    if kind == ComparatorKind.EUCLIDEAN:
        return enroll_euclidean(pk, y, rng=rng)
    if kind == ComparatorKind.COSINE:
        return enroll_cosine(pk, y, rng=rng)
    if kind == ComparatorKind.TWO_COV_SUBJECT:
        return enroll_2cov_subject(pk, model.Gamma, y, rng=rng)
    return enroll_2cov_vendor(pk, y, rng=rng)


def _plain_score(kind: ComparatorKind, x: np.ndarray, y: np.ndarray, model: Optional[TwoCovModel],
                 apply_offset: bool) -> float:
    if kind == ComparatorKind.EUCLIDEAN:
        return -float((x - y) @ (x - y))
    if kind == ComparatorKind.COSINE:
        return float(length_normalize(x) @ length_normalize(y))
    score = score_discriminative(model, x, y)
    return score + model.k if apply_offset else score


def _summary(kind: ComparatorKind, feature_dim: int, result: RunResult, nu_bytes: int) -> RunSummary:
    return RunSummary(
        comparator=kind,
        feature_dim=feature_dim,
        score=result.decision.score,
        threshold=result.decision.threshold,
        accepted=result.decision.accepted,
        channels={name: totals.model_dump() for name, totals in result.ledger.channels.items()},
        total_ciphertexts=result.ledger.total_ciphertexts,
        total_protected_bytes=result.ledger.total_protected_bytes,
        counters=result.counter,
        closed_form=complexity_report(kind, feature_dim, nu_bytes=nu_bytes),
        transcript_sha256=result.transcript.sha256(),
    )


def _write_run(out_dir: Path, stem: str, result: RunResult, summary: RunSummary) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.transcript.jsonl").write_text(result.transcript.to_jsonl())
    write_model(out_dir / f"{stem}.summary.json", summary)


# ─────────────── commands ───────────────
def keygen_command(config: RunConfig) -> dict:
    pk, sk = keygen(config.bits, seed=config.seed)
    pub_path, sec_path = save_keypair(pk, sk, config.key_dir, config.key_name)
    logging.info(f"✅ key pair {config.key_name} ({pk.key_id}) written to {config.key_dir}")
    return {"key_id": pk.key_id, "bit_length": pk.bit_length, "insecure": pk.insecure,
            "public_key": str(pub_path), "secret_key": str(sec_path)}


def synth_command(config: RunConfig) -> dict:
    eye = np.eye(config.feature_dim)
    corpus = synthesize_corpus(config.feature_dim, config.speakers, config.per_speaker,
                               within_cov=config.within_var * eye, between_cov=config.between_var * eye,
                               seed=config.seed)
    path = write_model(Path(config.out_dir) / "corpus.json", corpus_to_file(corpus))
    return {"corpus": str(path), "speakers": len(corpus.speakers()), "vectors": len(corpus.speaker_ids),
            "feature_dim": corpus.feature_dim}


def train_command(config: RunConfig) -> dict:
    # 1. Load and preprocess the training corpus
    corpus = corpus_from_file(read_model(_require(config.corpus, "--corpus", "train"), CorpusFile))
    whitening = whiten_fit(corpus) if config.whiten else None
    corpus = LabeledCorpus(_preprocess(corpus.vectors, whitening, config.length_norm), corpus.speaker_ids)

    # 2. Fit W, B, mu and derive the scoring hyper-parameters
    model = train_two_cov(corpus)
    path = write_model(Path(config.out_dir) / "model.json",
                       model_to_file(model, whitening=whitening, length_normalize=config.length_norm))
    return {"model": str(path), "feature_dim": model.feature_dim, "k": model.k}


def enroll_command(config: RunConfig) -> dict:
    kind = config.comparator
    corpus = corpus_from_file(read_model(_require(config.corpus, "--corpus", "enroll"), CorpusFile))
    subject = _require(config.subject, "--subject", "enroll")

    # 1. Preprocess the enrolment vectors the way the model was trained
    model, whitening, length_norm = (None, None, False)
    if config.model:
        model, whitening, length_norm = _load_model(config, "enroll")
        _check_dim("model", model.feature_dim, "corpus", corpus.feature_dim)
    elif kind in TWO_COV:
        raise UsageError(f"enroll --comparator {kind.value} needs --model")
    vectors = _preprocess(_subject_vectors(corpus, subject)[:config.enroll_count], whitening, length_norm)
    y = enrolment_mean(vectors)

    # 2. Encrypt the reference under the operator key (pk1 in the vendor setting)
    rng = _rng(config)
    pk = load_public_key(config.key_dir, config.key_name)
    ref = _enroll(kind, pk, y, model, rng)
    out_dir = Path(config.out_dir)
    template_path = write_model(out_dir / f"{subject}.{kind.value}.template.json", reference_to_file(ref, subject))
    result = {"template": str(template_path), "subject_id": subject, "key_id": pk.key_id,
              "ciphertexts": ref.ciphertext_count}

    # 3. The vendor protects its model under pk2
    if kind == ComparatorKind.TWO_COV_VENDOR:
        pk2 = load_public_key(config.key_dir, config.vendor_key_name)
        enc_model = enroll_model(pk2, model, rng=rng)
        result["vendor_model"] = str(write_model(out_dir / "vendor_model.json", encrypted_model_to_file(enc_model)))
    return result


def _verify_once(config: RunConfig, kind: ComparatorKind, store, subject: str, probe: np.ndarray,
                 model: Optional[TwoCovModel], rng: random.Random, keys: Dict[str, tuple]) -> RunResult:
    if kind == ComparatorKind.TWO_COV_VENDOR:
        (pk1, sk1), (pk2, sk2) = keys["operator"], keys["vendor"]
        # the store serves both databases: references for DB_controller, the model for DB_vendor
        return run_2cov_vendor(pk1, sk1, pk2, sk2, store, store, subject, probe, config.eta,
                               model=model, apply_offset=config.apply_offset, rng=rng)
    pk, sk = keys["operator"]
    if kind == ComparatorKind.TWO_COV_SUBJECT:
        return run_2cov_subject(pk, sk, model, store, subject, probe, config.eta,
                                apply_offset=config.apply_offset, rng=rng)
    if kind == ComparatorKind.COSINE:
        return run_cosine(pk, sk, store, subject, probe, config.eta, rng=rng)
    return run_euclidean(pk, sk, store, subject, probe, config.eta, rng=rng)


def verify_command(config: RunConfig) -> dict:
    # 1. Load the protected reference into the controller database
    kind, subject, ref = _read_template(_require(config.template, "--template", "verify"))
    if kind != config.comparator:
        raise UsageError(f"template is a {kind.value} reference, --comparator is {config.comparator.value}")
    store = TemplateStore()
    store.add_reference(subject, ref)

    # 2. Build the probe from the corpus
    corpus = corpus_from_file(read_model(_require(config.corpus, "--corpus", "verify"), CorpusFile))
    probe_subject = config.subject or subject
    probes = _subject_vectors(corpus, probe_subject)
    if not 0 <= config.probe_index < len(probes):
        raise UsageError(f"--probe-index {config.probe_index} outside [0, {len(probes)})")
    model, whitening, length_norm = (None, None, False)
    if config.model:
        model, whitening, length_norm = _load_model(config, "verify")
    elif kind in TWO_COV:
        raise UsageError(f"verify --comparator {kind.value} needs --model")
    probe = _preprocess(probes[config.probe_index:config.probe_index + 1], whitening, length_norm)[0]
    _check_dim("template", len(ref.elements), "probe", probe.size)

    # 3. Run the protocol
    keys = {"operator": load_keypair(config.key_dir, config.key_name)}
    if kind == ComparatorKind.TWO_COV_VENDOR:
        keys["vendor"] = load_keypair(config.key_dir, config.vendor_key_name)
        store.add_vendor_model(encrypted_model_from_file(
            read_model(_require(config.vendor_model, "--vendor-model", "verify"), EncryptedModelFile)))
    result = _verify_once(config, kind, store, subject, probe, model, _rng(config), keys)

    summary = _summary(kind, probe.size, result, keys["operator"][0].ciphertext_bytes)
    _write_run(Path(config.out_dir), f"verify.{subject}", result, summary)
    return summary.model_dump(mode="json")


def simulate_command(config: RunConfig) -> dict:
    """Synthetic end-to-end run: corpus, model, keys, enrolment, then genuine and impostor trials."""
    kind = config.comparator
    out_dir = Path(config.out_dir)
    F = config.feature_dim

    # 1. Corpus and model
    eye = np.eye(F)
    corpus = synthesize_corpus(F, config.speakers, config.per_speaker, within_cov=config.within_var * eye,
                               between_cov=config.between_var * eye, seed=config.seed)
    model = train_two_cov(corpus)

    # 2. Keys (seeded) and enrolment
    keys = {"operator": keygen(config.bits, rng=_rng(config, 1))}
    store = TemplateStore()
    if kind == ComparatorKind.TWO_COV_VENDOR:
        keys["vendor"] = keygen(config.bits, rng=_rng(config, 2))
        store.add_vendor_model(enroll_model(keys["vendor"][0], model, rng=_rng(config, 3)))
    enrol_rng = _rng(config, 4)
    groups = corpus.by_speaker()
    references = {}
    for speaker, rows in groups.items():
        references[speaker] = enrolment_mean(rows[:min(config.enroll_count, len(rows) - 1)])
        store.add_reference(speaker, _enroll(kind, keys["operator"][0], references[speaker], model, enrol_rng))
    speakers = store.subjects(kind)

    # 3. Trials alternate genuine and impostor claims; per-trial seeds derive from the master seed
    score_rows: List[Tuple[str, str, float]] = []
    max_error = 0.0
    first: Optional[RunResult] = None
    totals = OpCounter()
    for t in range(config.trials):
        claimed = speakers[t % len(speakers)]
        genuine = t % 2 == 0
        source = claimed if genuine else speakers[(t + 1) % len(speakers)]
        probe = groups[source][-1]
        result = _verify_once(config, kind, store, claimed, probe, model, _rng(config, 100 + t), keys)
        plain = _plain_score(kind, probe, references[claimed], model, config.apply_offset)
        max_error = max(max_error, abs(result.decision.score - plain))
        totals.tally(**result.counter.model_dump())
        score_rows.append((f"trial{t:05d}", "target" if genuine else "nontarget", result.decision.score))
        if first is None:
            first = result

    # 4. Reports
    nu_bytes = keys["operator"][0].ciphertext_bytes
    summary = _summary(kind, F, first, nu_bytes)
    _write_run(out_dir, "simulate", first, summary)
    scores_path = write_scores(out_dir / "scores.csv", score_rows)
    ledger_ok = first.ledger.ciphertext_counts() == expected_channel_counts(kind, F)
    logging.info(f"simulated {config.trials} {kind.value} trials, max |encrypted - plaintext| = {max_error:.3g}")
    return {
        "summary": summary.model_dump(mode="json"),
        "trials": config.trials,
        "scores": str(scores_path),
        "max_abs_error": max_error,
        "ledger_matches_closed_form": ledger_ok,
        "counters_all_trials": totals.model_dump(),
    }


def complexity_command(config: RunConfig) -> dict:
    nu_bytes = config.nu_kib * 1024
    report = complexity_report(config.comparator, config.feature_dim, nu_bytes=nu_bytes, p_bits=config.p_bits)
    result = {"complexity": report.model_dump(mode="json")}
    if config.comparator == ComparatorKind.TWO_COV_VENDOR:
        result["preload"] = preload_analysis(config.feature_dim, nu_bytes).model_dump(mode="json")
    return result


def metrics_command(config: RunConfig) -> dict:
    scores: ScoreSet = read_scores(_require(config.scores, "--scores", "metrics"))
    dev = read_scores(config.dev_scores) if config.dev_scores else None
    report = evaluate(scores, config.p_target, config.c_miss, config.c_fa, dev=dev)
    out_dir = Path(config.out_dir)
    write_model(out_dir / "metrics.json", report)
    write_det(out_dir / "det.csv", det_points(scores))
    return report.model_dump(mode="json")


COMMANDS: Dict[str, Callable[[RunConfig], dict]] = {
    "keygen": keygen_command,
    "synth": synth_command,
    "train": train_command,
    "enroll": enroll_command,
    "verify": verify_command,
    "simulate": simulate_command,
    "complexity": complexity_command,
    "metrics": metrics_command,
}


def run_command(config: RunConfig) -> dict:
    if config.command not in COMMANDS:
        raise UsageError(f"unknown command {config.command!r}")
    return COMMANDS[config.command](config)

