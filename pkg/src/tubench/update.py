"""Template-update strategies and the impostor-inclusion measurement.

Supervised and self-threshold updating share one threshold gate; they
differ only in whether the ground-truth label is consulted, which is
exactly the variable the bench isolates. Self-threshold updating never
reads the label, so impostor vectors that score below the threshold do
get absorbed into the reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core import Label, QueryEvent
from .errors import ConfigError, ValidationError
from .matcher import GalleryEntry, Origin, ReferenceModel, refresh_statistics


class StrategyKind(str, Enum):
    NONE = "none"
    SUPERVISED = "supervised"
    SELF_THRESHOLD = "self_threshold"


@dataclass(frozen=True)
class UpdateStrategy:
    """How (and whether) accepted queries enter the gallery.

    capacity None means the gallery grows without bound; an integer
    switches to FIFO eviction among non-enrollment entries. The capacity
    must cover the enrollment gallery, which is checked once the
    enrollment size is known.
    """

    kind: StrategyKind
    update_threshold: float = math.inf
    capacity: int | None = None

    def __post_init__(self):
        problems = []
        if math.isnan(self.update_threshold):
            problems.append("update_threshold must not be NaN")
        if self.capacity is not None and self.capacity < 1:
            problems.append(f"capacity must be >= 1, got {self.capacity}")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class UpdateOutcome:
    """What one query did to the reference."""

    applied: bool
    evicted: GalleryEntry | None
    was_impostor: bool

    def __post_init__(self):
        if not self.applied and self.evicted is not None:
            raise ValidationError("an update that was not applied cannot evict")


def maybe_update(
    ref: ReferenceModel,
    query: QueryEvent,
    centered: float,
    strategy: UpdateStrategy,
) -> UpdateOutcome:
    """Apply the strategy's decision rule to one already-scored query.

    The caller passes the centered score it computed for the query, so
    scoring happens exactly once per query in an online loop. Ground
    truth is consulted only by the supervised strategy; the provenance
    tag on an inserted entry is measurement bookkeeping.
    """
    is_impostor = query.true_label is Label.IMPOSTOR
    if strategy.kind is StrategyKind.NONE:
        return UpdateOutcome(False, None, is_impostor)
    if strategy.kind is StrategyKind.SELF_THRESHOLD:
        apply = centered <= strategy.update_threshold
    else:
        apply = (not is_impostor) and centered <= strategy.update_threshold
    if not apply:
        return UpdateOutcome(False, None, is_impostor)

    sample = query.sample
    if sample.dimension != ref.dimension:
        raise ValidationError(
            f"query dimension {sample.dimension} != reference dimension {ref.dimension}"
        )
    origin = Origin.IMPOSTOR_UPDATE if is_impostor else Origin.GENUINE_UPDATE
    ref.gallery.append(GalleryEntry(sample.features, origin, sample.user_id, sample.session))

    evicted = None
    if strategy.capacity is not None:
        if strategy.capacity < ref.enrollment_size:
            raise ConfigError(
                f"gallery capacity {strategy.capacity} is below the enrollment size "
                f"{ref.enrollment_size}"
            )
        if len(ref.gallery) > strategy.capacity:
            for idx, entry in enumerate(ref.gallery):
                if entry.origin is not Origin.ENROLLMENT:
                    evicted = ref.gallery.pop(idx)
                    break
    refresh_statistics(ref)
    return UpdateOutcome(True, evicted, is_impostor)


def impostor_inclusion(ref: ReferenceModel) -> float:
    """Fraction of the gallery that originated from impostor queries."""
    if not ref.gallery:
        raise ValidationError("impostor_inclusion needs a non-empty gallery")
    impostors = sum(1 for e in ref.gallery if e.origin is Origin.IMPOSTOR_UPDATE)
    return impostors / len(ref.gallery)
