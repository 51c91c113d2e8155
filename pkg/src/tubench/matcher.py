"""Reference verifier: a per-user gallery scored by scaled-Manhattan distance.

Scores are dissimilarities (lower = more similar). Acceptance and update
rules therefore read "score <= threshold". Each reference carries
centering constants frozen at enrollment that place scores on a scale
where 0 means "as close as a typical enrollment self-comparison" and
negative values mean closer than that, which is what makes negative
update thresholds meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .core import Sample
from .errors import ConfigError, EnrollmentError, ValidationError

EPSILON = 1e-6


class Origin(str, Enum):
    ENROLLMENT = "enrollment"
    GENUINE_UPDATE = "genuine_update"
    IMPOSTOR_UPDATE = "impostor_update"


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    """One vector in a reference gallery, tagged with its provenance.

    source_user / source_session are ground-truth bookkeeping used only
    for measurement; update decisions never read them.
    """

    features: np.ndarray
    origin: Origin
    source_user: str
    source_session: int

    def __post_init__(self):
        arr = np.array(self.features, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "features", arr)


@dataclass(eq=False)
class ReferenceModel:
    """A user's adaptable biometric reference.

    The gallery is mutated by exactly one evaluation loop at a time;
    mu / mad always mirror the current gallery, while center_m /
    center_s stay fixed at their enrollment values.
    """

    target_user: str
    gallery: list[GalleryEntry]
    mu: np.ndarray
    mad: np.ndarray
    center_m: float
    center_s: float
    eps: float = EPSILON
    capacity: int | None = None
    _inv_mad: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        problems = []
        if not self.gallery:
            problems.append(f"reference for {self.target_user}: gallery must be non-empty")
        else:
            dim = self.gallery[0].features.size
            if any(e.features.size != dim for e in self.gallery):
                problems.append(f"reference for {self.target_user}: mixed gallery dimensions")
            if self.mu.shape != (dim,) or self.mad.shape != (dim,):
                problems.append(f"reference for {self.target_user}: statistics shape mismatch")
        if self.eps <= 0:
            problems.append("eps must be > 0")
        elif self.gallery and not np.all(self.mad >= self.eps):
            problems.append("mad entries must be floored at eps")
        if self.center_s < self.eps:
            problems.append("center_s must be floored at eps")
        if problems:
            raise ValidationError(problems)
        self._inv_mad = 1.0 / self.mad

    @property
    def dimension(self) -> int:
        return int(self.gallery[0].features.size)

    @property
    def enrollment_size(self) -> int:
        return sum(1 for e in self.gallery if e.origin is Origin.ENROLLMENT)


def gallery_statistics(vectors: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and mean absolute deviation, mad floored at eps."""
    mu = vectors.mean(axis=0)
    mad = np.maximum(np.abs(vectors - mu).mean(axis=0), eps)
    return mu, mad


def _score_against(query: np.ndarray, mu: np.ndarray, mad: np.ndarray) -> float:
    return float(np.mean(np.abs(query - mu) / mad))


def enroll(
    target_user: str,
    enrollment_samples: Sequence[Sample],
    *,
    eps: float = EPSILON,
    capacity: int | None = None,
) -> ReferenceModel:
    """Build a reference from enrollment samples.

    The centering constants come from leave-one-out self-scores: each
    enrollment vector is scored against the statistics of the remaining
    ones; center_m is the mean of those scores and center_s their
    population standard deviation (floored at eps). They never change
    afterwards, so the centered scale keeps its meaning while the
    gallery evolves.
    """
    samples = list(enrollment_samples)
    if len(samples) < 2:
        raise EnrollmentError(
            f"user {target_user}: enrollment needs at least 2 samples, got {len(samples)}"
        )
    wrong = [s.user_id for s in samples if s.user_id != target_user]
    if wrong:
        raise ValidationError(
            f"enrollment for {target_user} contains samples from other users: {sorted(set(map(str, wrong)))}"
        )
    vectors = np.stack([s.features for s in samples])
    if capacity is not None and capacity < len(samples):
        raise ConfigError(
            f"gallery capacity {capacity} is below the enrollment size {len(samples)}"
        )

    loo_scores = []
    for k in range(len(samples)):
        rest = np.delete(vectors, k, axis=0)
        mu_k, mad_k = gallery_statistics(rest, eps)
        loo_scores.append(_score_against(vectors[k], mu_k, mad_k))
    center_m = float(np.mean(loo_scores))
    center_s = max(float(np.std(loo_scores)), eps)

    mu, mad = gallery_statistics(vectors, eps)
    gallery = [
        GalleryEntry(s.features, Origin.ENROLLMENT, s.user_id, s.session) for s in samples
    ]
    return ReferenceModel(
        target_user=target_user,
        gallery=gallery,
        mu=mu,
        mad=mad,
        center_m=center_m,
        center_s=center_s,
        eps=eps,
        capacity=capacity,
    )


def raw_score(ref: ReferenceModel, query) -> float:
    """Scaled-Manhattan dissimilarity of a query vector to the gallery mean."""
    arr = np.asarray(query, dtype=float)
    if arr.shape != ref.mu.shape:
        raise ValidationError(
            f"query dimension {arr.size} != reference dimension {ref.mu.size}"
        )
    return float(np.mean(np.abs(arr - ref.mu) * ref._inv_mad))


def center(ref: ReferenceModel, raw: float) -> float:
    """Map a raw score onto the reference's frozen centered scale."""
    return (raw - ref.center_m) / ref.center_s


def centered_score(ref: ReferenceModel, query) -> float:
    return center(ref, raw_score(ref, query))


def refresh_statistics(ref: ReferenceModel) -> ReferenceModel:
    """Recompute mu / mad from the current gallery; centering untouched."""
    vectors = np.stack([e.features for e in ref.gallery])
    ref.mu, ref.mad = gallery_statistics(vectors, ref.eps)
    ref._inv_mad = 1.0 / ref.mad
    return ref
