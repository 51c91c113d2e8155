"""Seeded generator of session-structured datasets with linear ageing.

Each user gets a fixed base vector and a fixed per-user drift vector;
session i samples scatter around base + (i - 1) * drift. Linear drift is
the simplest ageing model that makes a frozen reference degrade across
sessions. Generation is fully determined by the seed via per-user
SplitMix64 streams, independent of iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Provenance, Sample
from .errors import ValidationError
from .rng import SplitMix64, mix64


@dataclass(frozen=True)
class SynthConfig:
    """Shape and noise structure of a generated dataset."""

    num_users: int
    num_sessions: int
    samples_per_session: int
    dimension: int
    base_spread: float = 1.0
    drift_scale: float = 0.0
    noise_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.num_users < 1:
            problems.append(f"num_users must be >= 1, got {self.num_users}")
        if self.num_sessions < 2:
            problems.append(f"num_sessions must be >= 2, got {self.num_sessions}")
        if self.samples_per_session < 1:
            problems.append(
                f"samples_per_session must be >= 1, got {self.samples_per_session}"
            )
        if self.dimension < 1:
            problems.append(f"dimension must be >= 1, got {self.dimension}")
        if not self.base_spread > 0:
            problems.append(f"base_spread must be > 0, got {self.base_spread}")
        if self.drift_scale < 0:
            problems.append(f"drift_scale must be >= 0, got {self.drift_scale}")
        if not self.noise_scale > 0:
            problems.append(f"noise_scale must be > 0, got {self.noise_scale}")
        if problems:
            raise ValidationError(problems)


def generate(config: SynthConfig) -> Dataset:
    """Materialize the configured dataset; same config -> identical output."""
    d = config.dimension
    per_session = config.samples_per_session
    samples = []
    for user_index in range(config.num_users):
        stream = SplitMix64(mix64(config.seed, user_index))
        base = config.base_spread * np.array(stream.normals(d))
        drift = config.drift_scale * np.array(stream.normals(d))
        user_id = f"u{user_index:03d}"
        for session in range(1, config.num_sessions + 1):
            ageing = base + (session - 1) * drift
            for k in range(per_session):
                noise = config.noise_scale * np.array(stream.normals(d))
                samples.append(
                    Sample(
                        user_id=user_id,
                        session=session,
                        order_index=(session - 1) * per_session + k,
                        features=ageing + noise,
                        provenance=Provenance.SYNTHETIC,
                    )
                )
    return Dataset(dimension=d, num_sessions=config.num_sessions, samples=tuple(samples))
