"""Face verification layer: template matching gated by presentation-attack detection.

Faces are abstracted as 128-dimensional unit embeddings rather than images;
matching returns a confidence in [0, 1] derived from cosine similarity. A
pluggable PAD classifier runs before any matching and yields a three-way
verdict (not-spoof / spoof / uncertain). The evaluator counts predicted vs.
true classes into a confusion matrix and renders it as an aligned text table.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clock import Clock, SystemClock
from .errors import NoTemplateError, ValidationError

EMBEDDING_DIM = 128
MATCH_THRESHOLD = 0.80

# PAD verdict bands over spoof_score: <= NOT_SPOOF_MAX is not-spoof,
# >= SPOOF_MIN is spoof, anything between is uncertain.
NOT_SPOOF_MAX = 0.3
SPOOF_MIN = 0.7


class PadClass(str, Enum):
    NOT_SPOOF = "not_spoof"
    SPOOF = "spoof"
    UNCERTAIN = "uncertain"


PAD_PREDICTED_CLASSES: Tuple[PadClass, ...] = (
    PadClass.NOT_SPOOF,
    PadClass.SPOOF,
    PadClass.UNCERTAIN,
)
PAD_TRUE_CLASSES: Tuple[PadClass, ...] = (PadClass.NOT_SPOOF, PadClass.SPOOF)


@dataclass(frozen=True)
class PadVerdict:
    pad_class: PadClass
    spoof_score: float


@dataclass(frozen=True)
class FaceTemplate:
    """Enrolled reference embedding, stored at unit L2 norm."""

    vector: np.ndarray
    user_id: str
    enrolled_at: int

    def __post_init__(self) -> None:
        norm = float(np.linalg.norm(self.vector))
        if abs(norm - 1.0) > 1e-6:
            raise ValidationError(f"template vector must be unit norm, got {norm}")


@dataclass(frozen=True)
class FaceDecision:
    accepted: bool
    confidence: float
    pad: PadVerdict


def _as_embedding(vector: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(vector, dtype=np.float64)
    if arr.shape != (EMBEDDING_DIM,):
        raise ValidationError(f"{name} must have exactly {EMBEDDING_DIM} components")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    return arr


def match_template(probe_vector: Sequence[float], template: FaceTemplate) -> float:
    """Confidence (1 + cos) / 2 between probe and template; symmetric, scale-free."""
    probe = _as_embedding(probe_vector, "probe vector")
    norm = float(np.linalg.norm(probe))
    if norm == 0.0:
        raise ValidationError("probe vector must be nonzero")
    cosine = float(np.dot(probe / norm, template.vector))
    return float(np.clip((1.0 + cosine) / 2.0, 0.0, 1.0))


def reference_spoof_score(features: Sequence[float]) -> float:
    """Reference PAD scoring rule: the feature mean, clamped into [0, 1].

    Deterministic by construction; stands in for a trained classifier while
    keeping the verdict bands exercisable from synthetic feature points.
    """
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("PAD features must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("PAD features must be finite")
    return float(np.clip(arr.mean(), 0.0, 1.0))


class PadClassifier:
    """Three-way PAD verdicts from a pluggable scoring function."""

    def __init__(self, scorer: Callable[[Sequence[float]], float] = reference_spoof_score):
        self._scorer = scorer

    def classify(self, features: Sequence[float]) -> PadVerdict:
        score = float(self._scorer(features))
        if score >= SPOOF_MIN:
            pad_class = PadClass.SPOOF
        elif score <= NOT_SPOOF_MAX:
            pad_class = PadClass.NOT_SPOOF
        else:
            pad_class = PadClass.UNCERTAIN
        return PadVerdict(pad_class=pad_class, spoof_score=score)


def pad_classify(features: Sequence[float]) -> PadVerdict:
    """Classify with the reference scorer (module-level convenience)."""
    return PadClassifier().classify(features)


class FaceStore:
    """Per-user template store; re-enrollment replaces the prior template."""

    def __init__(self, clock: Optional[Clock] = None):
        self._clock = clock or SystemClock()
        self._lock = threading.Lock()
        self._templates: Dict[str, FaceTemplate] = {}

    def enroll_template(self, user_id: str, vector: Sequence[float]) -> FaceTemplate:
        arr = _as_embedding(vector, "enrollment vector")
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise ValidationError("enrollment vector must be nonzero")
        template = FaceTemplate(
            vector=arr / norm, user_id=user_id, enrolled_at=self._clock.now_ms()
        )
        with self._lock:
            self._templates[user_id] = template
        return template

    def get(self, user_id: str) -> Optional[FaceTemplate]:
        with self._lock:
            return self._templates.get(user_id)

    def has_template(self, user_id: str) -> bool:
        return self.get(user_id) is not None

    def save(self, path: str | Path) -> None:
        with self._lock:
            payload = {
                user_id: {
                    "vector": [float(v) for v in template.vector],
                    "enrolled_at": template.enrolled_at,
                }
                for user_id, template in self._templates.items()
            }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    def load(self, path: str | Path) -> None:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        templates = {
            user_id: FaceTemplate(
                vector=np.asarray(record["vector"], dtype=np.float64),
                user_id=user_id,
                enrolled_at=record["enrolled_at"],
            )
            for user_id, record in payload.items()
        }
        with self._lock:
            self._templates = templates


class FaceVerifier:
    """PAD-first verification: matching runs only for a not-spoof verdict."""

    def __init__(
        self,
        store: FaceStore,
        classifier: Optional[PadClassifier] = None,
        match_threshold: float = MATCH_THRESHOLD,
    ):
        self.store = store
        self.classifier = classifier or PadClassifier()
        self.match_threshold = match_threshold

    def verify_face(
        self,
        user_id: str,
        probe_vector: Sequence[float],
        probe_features: Sequence[float],
    ) -> FaceDecision:
        template = self.store.get(user_id)
        if template is None:
            raise NoTemplateError(user_id)
        pad = self.classifier.classify(probe_features)
        if pad.pad_class is not PadClass.NOT_SPOOF:
            # Gate dominates: no match confidence leaks for rejected probes.
            return FaceDecision(accepted=False, confidence=0.0, pad=pad)
        confidence = match_template(probe_vector, template)
        return FaceDecision(
            accepted=confidence >= self.match_threshold, confidence=confidence, pad=pad
        )


# -- PAD evaluation harness -------------------------------------------------


@dataclass(frozen=True)
class LabeledSample:
    vector: Tuple[float, ...]
    features: Tuple[float, ...]
    label: PadClass


@dataclass
class ConfusionMatrix:
    """Raw counts of true class (rows) vs predicted class (columns)."""

    counts: Dict[PadClass, Dict[PadClass, int]] = field(
        default_factory=lambda: {
            t: {p: 0 for p in PAD_PREDICTED_CLASSES} for t in PAD_TRUE_CLASSES
        }
    )

    def add(self, true_class: PadClass, predicted: PadClass) -> None:
        self.counts[true_class][predicted] += 1

    @property
    def total(self) -> int:
        return sum(sum(row.values()) for row in self.counts.values())

    def row_total(self, true_class: PadClass) -> int:
        return sum(self.counts[true_class].values())

    def rates(self, true_class: PadClass) -> Dict[PadClass, float]:
        total = self.row_total(true_class)
        if total == 0:
            raise ValidationError(f"no samples with true class {true_class.value}")
        return {p: self.counts[true_class][p] / total for p in PAD_PREDICTED_CLASSES}

    @property
    def accuracy(self) -> float:
        trace = sum(self.counts[c][c] for c in PAD_TRUE_CLASSES)
        return trace / self.total

    def f1(self, pad_class: PadClass) -> float:
        tp = self.counts[pad_class][pad_class]
        fp = sum(
            self.counts[t][pad_class] for t in PAD_TRUE_CLASSES if t is not pad_class
        )
        fn = sum(
            self.counts[pad_class][p] for p in PAD_PREDICTED_CLASSES if p is not pad_class
        )
        if tp == 0:
            return 0.0
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        return 2 * precision * recall / (precision + recall)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "counts": {
                t.value: {p.value: self.counts[t][p] for p in PAD_PREDICTED_CLASSES}
                for t in PAD_TRUE_CLASSES
            },
            "rates": {
                t.value: {p.value: self.rates(t)[p] for p in PAD_PREDICTED_CLASSES}
                for t in PAD_TRUE_CLASSES
            },
            "f1": {c.value: self.f1(c) for c in PAD_TRUE_CLASSES},
        }


def evaluate_pad(
    samples: Sequence[LabeledSample], classifier: Optional[PadClassifier] = None
) -> ConfusionMatrix:
    """Classify every sample and tally predicted vs true classes."""
    if not samples:
        raise ValidationError("dataset must be nonempty")
    clf = classifier or PadClassifier()
    matrix = ConfusionMatrix()
    for sample in samples:
        if sample.label not in PAD_TRUE_CLASSES:
            raise ValidationError(f"labels must be not_spoof or spoof, got {sample.label}")
        verdict = clf.classify(sample.features)
        matrix.add(sample.label, verdict.pad_class)
    return matrix


_CLASS_HEADINGS = {
    PadClass.NOT_SPOOF: "Not spoof",
    PadClass.SPOOF: "Spoof",
    PadClass.UNCERTAIN: "Uncertain",
}


def render_confusion_report(matrix: ConfusionMatrix) -> str:
    """Aligned text table: accuracy header, per-true-class rate rows, F1 row."""
    header = [f"Accuracy={matrix.accuracy * 100:.2f}%"] + [
        _CLASS_HEADINGS[p] for p in PAD_PREDICTED_CLASSES
    ]
    rows = [header]
    for true_class in PAD_TRUE_CLASSES:
        rates = matrix.rates(true_class)
        rows.append(
            [_CLASS_HEADINGS[true_class]]
            + [f"{rates[p] * 100:.1f}%" for p in PAD_PREDICTED_CLASSES]
        )
    rows.append(
        ["F1 Score"]
        + [f"{matrix.f1(c):.2f}" for c in PAD_TRUE_CLASSES]
        + [""]
    )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    divider = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    lines = [divider]
    for row in rows:
        cells = [f" {cell.ljust(widths[i])} " for i, cell in enumerate(row)]
        lines.append("|" + "|".join(cells) + "|")
        lines.append(divider)
    return "\n".join(lines) + "\n"


# -- labeled dataset file format ---------------------------------------------
#
# One sample per line: 128 comma-separated embedding components, then the PAD
# feature block joined by ';', then the label (not_spoof | spoof).

_LABEL_ALIASES = {
    "not_spoof": PadClass.NOT_SPOOF,
    "spoof": PadClass.SPOOF,
}


def save_labeled_dataset(samples: Sequence[LabeledSample], path: str | Path) -> None:
    lines = []
    for sample in samples:
        if len(sample.vector) != EMBEDDING_DIM:
            raise ValidationError(f"sample vectors must have {EMBEDDING_DIM} components")
        vector = ",".join(repr(float(v)) for v in sample.vector)
        features = ";".join(repr(float(f)) for f in sample.features)
        lines.append(f"{vector},{features},{sample.label.value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def planted_pad_dataset(
    rng: np.random.Generator,
    n_not_spoof: int,
    n_spoof: int,
    not_spoof_confusion: Tuple[float, float, float] = (0.98, 0.02, 0.0),
    spoof_confusion: Tuple[float, float, float] = (0.03, 0.97, 0.0),
) -> List[LabeledSample]:
    """Synthetic labeled set whose reference-classifier confusion is known exactly.

    Confusion tuples give the fraction of each true class predicted as
    (not_spoof, spoof, uncertain); feature points 0.1 / 0.9 / 0.5 land the
    reference scorer deterministically in those bands. Counts are exact, with
    rounding slack absorbed by the intended (diagonal) prediction.
    """
    feature_for_prediction = {
        PadClass.NOT_SPOOF: 0.1,
        PadClass.SPOOF: 0.9,
        PadClass.UNCERTAIN: 0.5,
    }
    samples: List[LabeledSample] = []
    for label, total, confusion in (
        (PadClass.NOT_SPOOF, n_not_spoof, not_spoof_confusion),
        (PadClass.SPOOF, n_spoof, spoof_confusion),
    ):
        if abs(sum(confusion) - 1.0) > 1e-9:
            raise ValidationError("confusion rates must sum to 1")
        counts = [round(rate * total) for rate in confusion]
        diagonal = PAD_PREDICTED_CLASSES.index(label)
        counts[diagonal] += total - sum(counts)
        for prediction, count in zip(PAD_PREDICTED_CLASSES, counts):
            for _ in range(count):
                vector = rng.normal(size=EMBEDDING_DIM)
                samples.append(
                    LabeledSample(
                        vector=tuple(float(v) for v in vector),
                        features=(feature_for_prediction[prediction],),
                        label=label,
                    )
                )
    return [samples[i] for i in rng.permutation(len(samples))]


def load_labeled_dataset(path: str | Path) -> List[LabeledSample]:
    samples: List[LabeledSample] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != EMBEDDING_DIM + 2:
            raise ValidationError(
                f"line {lineno}: expected {EMBEDDING_DIM + 2} comma-separated fields, got {len(parts)}"
            )
        try:
            vector = tuple(float(v) for v in parts[:EMBEDDING_DIM])
            features = tuple(float(f) for f in parts[EMBEDDING_DIM].split(";"))
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
        label = _LABEL_ALIASES.get(parts[-1].strip().lower())
        if label is None:
            raise ValidationError(f"line {lineno}: unknown label {parts[-1]!r}")
        samples.append(LabeledSample(vector=vector, features=features, label=label))
    if not samples:
        raise ValidationError("dataset file is empty")
    return samples
