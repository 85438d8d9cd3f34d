from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from metasecure.errors import NoTemplateError, ValidationError
from metasecure.face_identity import (
    EMBEDDING_DIM,
    ConfusionMatrix,
    FaceStore,
    FaceVerifier,
    LabeledSample,
    PadClass,
    PadClassifier,
    evaluate_pad,
    load_labeled_dataset,
    match_template,
    pad_classify,
    planted_pad_dataset,
    render_confusion_report,
    save_labeled_dataset,
)

RNG = np.random.default_rng(1234)

embedding_strategy = arrays(
    dtype=np.float64,
    shape=EMBEDDING_DIM,
    elements=st.floats(min_value=-10, max_value=10, allow_nan=False),
).filter(lambda v: np.linalg.norm(v) > 1e-6)


@pytest.fixture
def store():
    return FaceStore()


@pytest.fixture
def verifier(store):
    return FaceVerifier(store)


class TestEnrollment:
    def test_normalizes_to_unit_norm(self, store):
        template = store.enroll_template("u1", np.full(EMBEDDING_DIM, 2.0))
        assert np.linalg.norm(template.vector) == pytest.approx(1.0, abs=1e-9)

    def test_zero_vector_rejected(self, store):
        with pytest.raises(ValidationError):
            store.enroll_template("u1", np.zeros(EMBEDDING_DIM))

    def test_nan_vector_rejected(self, store):
        vector = np.ones(EMBEDDING_DIM)
        vector[3] = np.nan
        with pytest.raises(ValidationError):
            store.enroll_template("u1", vector)

    def test_wrong_dimension_rejected(self, store):
        with pytest.raises(ValidationError):
            store.enroll_template("u1", np.ones(64))

    def test_reenrollment_replaces(self, store, verifier):
        first = RNG.normal(size=EMBEDDING_DIM)
        second = RNG.normal(size=EMBEDDING_DIM)
        store.enroll_template("u1", first)
        store.enroll_template("u1", second)
        # matching the second vector must now be the identity case
        assert match_template(second, store.get("u1")) == pytest.approx(1.0, abs=1e-9)
        assert match_template(first, store.get("u1")) != pytest.approx(1.0, abs=1e-6)


class TestMatching:
    def test_identity_antipodal_orthogonal(self, store):
        template = store.enroll_template("u1", RNG.normal(size=EMBEDDING_DIM))
        assert match_template(template.vector, template) == pytest.approx(1.0, abs=1e-12)
        assert match_template(-template.vector, template) == pytest.approx(0.0, abs=1e-12)
        seed = RNG.normal(size=EMBEDDING_DIM)
        orthogonal = seed - np.dot(seed, template.vector) * template.vector
        assert match_template(orthogonal, template) == pytest.approx(0.5, abs=1e-9)

    def test_matches_independent_cosine(self, store):
        # Oracle: recompute via the raw cosine formula on unnormalized inputs.
        probe = RNG.normal(size=EMBEDDING_DIM) * 3.7
        template = store.enroll_template("u1", RNG.normal(size=EMBEDDING_DIM))
        cosine = float(
            np.dot(probe, template.vector) / (np.linalg.norm(probe) * np.linalg.norm(template.vector))
        )
        assert match_template(probe, template) == pytest.approx((1 + cosine) / 2, abs=1e-12)

    @given(a=embedding_strategy, b=embedding_strategy)
    @settings(max_examples=50, deadline=None)
    def test_symmetry(self, a, b):
        store = FaceStore()
        template_a = store.enroll_template("a", a)
        template_b = store.enroll_template("b", b)
        assert match_template(b, template_a) == pytest.approx(
            match_template(a, template_b), abs=1e-12
        )

    @given(probe=embedding_strategy, scale=st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, probe, scale):
        store = FaceStore()
        template = store.enroll_template("u", np.ones(EMBEDDING_DIM))
        assert match_template(probe * scale, template) == pytest.approx(
            match_template(probe, template), abs=1e-9
        )

    def test_dimension_mismatch(self, store):
        template = store.enroll_template("u1", np.ones(EMBEDDING_DIM))
        with pytest.raises(ValidationError):
            match_template(np.ones(100), template)


class TestPadClassifier:
    def test_live_point(self):
        verdict = pad_classify([0.1])
        assert verdict.pad_class is PadClass.NOT_SPOOF
        assert verdict.spoof_score == pytest.approx(0.1)

    def test_replay_point(self):
        assert pad_classify([0.9]).pad_class is PadClass.SPOOF

    def test_boundary_point_uncertain(self):
        assert pad_classify([0.5]).pad_class is PadClass.UNCERTAIN

    def test_band_edges(self):
        assert pad_classify([0.3]).pad_class is PadClass.NOT_SPOOF
        assert pad_classify([0.7]).pad_class is PadClass.SPOOF
        assert pad_classify([0.31]).pad_class is PadClass.UNCERTAIN
        assert pad_classify([0.69]).pad_class is PadClass.UNCERTAIN

    def test_score_is_clamped(self):
        assert pad_classify([5.0, 5.0]).spoof_score == 1.0
        assert pad_classify([-3.0]).spoof_score == 0.0

    def test_malformed_features(self):
        with pytest.raises(ValidationError):
            pad_classify([])
        with pytest.raises(ValidationError):
            pad_classify([np.nan])

    def test_pluggable_scorer(self):
        classifier = PadClassifier(scorer=lambda _features: 0.99)
        assert classifier.classify([0.0]).pad_class is PadClass.SPOOF


class TestVerifyFace:
    def test_live_identical_probe_accepted(self, store, verifier):
        template = store.enroll_template("u1", RNG.normal(size=EMBEDDING_DIM))
        decision = verifier.verify_face("u1", template.vector, [0.1])
        assert decision.accepted is True
        assert decision.confidence == pytest.approx(1.0, abs=1e-12)

    def test_spoof_gate_dominates_perfect_match(self, store, verifier):
        template = store.enroll_template("u1", RNG.normal(size=EMBEDDING_DIM))
        decision = verifier.verify_face("u1", template.vector, [0.9])
        assert decision.accepted is False
        assert decision.pad.pad_class is PadClass.SPOOF
        assert decision.confidence == 0.0  # matching skipped, nothing leaks

    def test_uncertain_also_rejected(self, store, verifier):
        template = store.enroll_template("u1", RNG.normal(size=EMBEDDING_DIM))
        decision = verifier.verify_face("u1", template.vector, [0.5])
        assert decision.accepted is False
        assert decision.pad.pad_class is PadClass.UNCERTAIN

    @staticmethod
    def probe_at_confidence(template_vector: np.ndarray, confidence: float) -> np.ndarray:
        # Gram-Schmidt construction: probe = cos*t + sin*u with u ⟂ t gives
        # cosine(probe, t) = cos exactly, hence confidence (1+cos)/2.
        cosine = 2 * confidence - 1
        seed = np.random.default_rng(99).normal(size=EMBEDDING_DIM)
        u = seed - np.dot(seed, template_vector) * template_vector
        u /= np.linalg.norm(u)
        return cosine * template_vector + np.sqrt(1 - cosine**2) * u

    def test_confidence_just_below_threshold_rejected(self, store, verifier):
        template = store.enroll_template("u1", RNG.normal(size=EMBEDDING_DIM))
        probe = self.probe_at_confidence(template.vector, 0.79)
        decision = verifier.verify_face("u1", probe, [0.1])
        assert decision.confidence == pytest.approx(0.79, abs=1e-9)
        assert decision.accepted is False

    def test_confidence_above_threshold_accepted(self, store, verifier):
        template = store.enroll_template("u1", RNG.normal(size=EMBEDDING_DIM))
        probe = self.probe_at_confidence(template.vector, 0.82)
        decision = verifier.verify_face("u1", probe, [0.1])
        assert decision.confidence == pytest.approx(0.82, abs=1e-9)
        assert decision.accepted is True

    def test_no_template(self, verifier):
        with pytest.raises(NoTemplateError):
            verifier.verify_face("ghost", np.ones(EMBEDDING_DIM), [0.1])

    @given(score=st.floats(min_value=0.7, max_value=1.0))
    @settings(max_examples=30, deadline=None)
    def test_gate_dominance_property(self, score):
        store = FaceStore()
        verifier = FaceVerifier(store)
        template = store.enroll_template("u1", np.ones(EMBEDDING_DIM))
        decision = verifier.verify_face("u1", template.vector, [score])
        assert decision.accepted is False


class TestEvaluatePad:
    def test_perfect_classifier_dataset(self):
        samples = [
            LabeledSample(vector=(0.0,) * EMBEDDING_DIM, features=(0.1,), label=PadClass.NOT_SPOOF)
            for _ in range(10)
        ] + [
            LabeledSample(vector=(0.0,) * EMBEDDING_DIM, features=(0.9,), label=PadClass.SPOOF)
            for _ in range(10)
        ]
        matrix = evaluate_pad(samples)
        assert matrix.accuracy == 1.0
        assert matrix.counts[PadClass.NOT_SPOOF][PadClass.SPOOF] == 0
        assert matrix.counts[PadClass.SPOOF][PadClass.NOT_SPOOF] == 0
        assert matrix.counts[PadClass.NOT_SPOOF][PadClass.UNCERTAIN] == 0

    def test_planted_rates_measured_within_one_percent(self):
        rng = np.random.default_rng(5)
        samples = planted_pad_dataset(
            rng, 500, 500,
            not_spoof_confusion=(0.98, 0.02, 0.0),
            spoof_confusion=(0.03, 0.97, 0.0),
        )
        matrix = evaluate_pad(samples)
        rates_not_spoof = matrix.rates(PadClass.NOT_SPOOF)
        rates_spoof = matrix.rates(PadClass.SPOOF)
        assert rates_not_spoof[PadClass.NOT_SPOOF] == pytest.approx(0.98, abs=0.01)
        assert rates_not_spoof[PadClass.SPOOF] == pytest.approx(0.02, abs=0.01)
        assert rates_spoof[PadClass.SPOOF] == pytest.approx(0.97, abs=0.01)
        assert rates_spoof[PadClass.NOT_SPOOF] == pytest.approx(0.03, abs=0.01)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValidationError):
            evaluate_pad([])

    def test_bad_label_rejected(self):
        sample = LabeledSample(
            vector=(0.0,) * EMBEDDING_DIM, features=(0.5,), label=PadClass.UNCERTAIN
        )
        with pytest.raises(ValidationError):
            evaluate_pad([sample])

    def test_row_rates_sum_to_one(self):
        rng = np.random.default_rng(6)
        matrix = evaluate_pad(planted_pad_dataset(rng, 100, 100))
        for true_class in (PadClass.NOT_SPOOF, PadClass.SPOOF):
            assert sum(matrix.rates(true_class).values()) == pytest.approx(1.0, abs=1e-9)

    def test_arithmetic_against_independent_recompute(self):
        # Oracle: accuracy and F1 recomputed by scikit-learn from the raw
        # prediction stream.
        from sklearn.metrics import accuracy_score, f1_score

        rng = np.random.default_rng(7)
        samples = planted_pad_dataset(
            rng, 300, 300,
            not_spoof_confusion=(0.9, 0.06, 0.04),
            spoof_confusion=(0.05, 0.9, 0.05),
        )
        classifier = PadClassifier()
        truths = [s.label.value for s in samples]
        predictions = [classifier.classify(s.features).pad_class.value for s in samples]
        matrix = evaluate_pad(samples)
        assert matrix.accuracy == pytest.approx(accuracy_score(truths, predictions), abs=1e-12)
        for pad_class in (PadClass.NOT_SPOOF, PadClass.SPOOF):
            expected = f1_score(
                truths, predictions, labels=[pad_class.value], average="macro", zero_division=0
            )
            assert matrix.f1(pad_class) == pytest.approx(expected, abs=1e-12)

    def test_accuracy_is_trace_over_total(self):
        rng = np.random.default_rng(8)
        matrix = evaluate_pad(planted_pad_dataset(rng, 50, 70))
        trace = (
            matrix.counts[PadClass.NOT_SPOOF][PadClass.NOT_SPOOF]
            + matrix.counts[PadClass.SPOOF][PadClass.SPOOF]
        )
        assert matrix.accuracy == trace / 120


class TestReportRendering:
    def test_report_contains_required_rows(self):
        rng = np.random.default_rng(9)
        matrix = evaluate_pad(planted_pad_dataset(rng, 100, 100))
        report = render_confusion_report(matrix)
        assert "Accuracy=" in report
        assert "Not spoof" in report
        assert "Spoof" in report
        assert "Uncertain" in report
        assert "F1 Score" in report

    def test_report_is_deterministic(self):
        rng = np.random.default_rng(10)
        matrix = evaluate_pad(planted_pad_dataset(rng, 40, 40))
        assert render_confusion_report(matrix) == render_confusion_report(matrix)


class TestDatasetFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        samples = planted_pad_dataset(rng, 20, 20)
        path = tmp_path / "dataset.csv"
        save_labeled_dataset(samples, path)
        loaded = load_labeled_dataset(path)
        assert loaded == samples

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0,not_spoof\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            load_labeled_dataset(path)

    def test_unknown_label_rejected(self, tmp_path):
        fields = ",".join(["0.5"] * EMBEDDING_DIM) + ",0.1,maybe"
        path = tmp_path / "bad.csv"
        path.write_text(fields + "\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            load_labeled_dataset(path)
