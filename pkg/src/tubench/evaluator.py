"""Session-loop orchestration: online and offline evaluation runs.

Online: every query's centered score is logged as a metric sample and
immediately drives the update decision, so one comparison serves both
purposes. Offline: a session is first scored in full against frozen
references (those are the metric samples), and only then replayed
through the update rule; the final session is consumed for update only,
which is why offline runs yield one fewer per-session measure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .core import Dataset, Mode, QueryEvent, Sample, ScoreLog, ScoreRecord
from .errors import ConfigError, PartitionError, ValidationError
from .matcher import EPSILON, ReferenceModel, center, centered_score, enroll, raw_score
from .rng import mix64
from .stream import StreamConfig, next_query, plan_session
from .update import UpdateStrategy, impostor_inclusion, maybe_update


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one evaluation run depends on."""

    mode: Mode
    stream: StreamConfig
    strategy: UpdateStrategy
    repeats: int = 1
    base_seed: int = 0
    eps: float = EPSILON

    def __post_init__(self):
        if self.repeats < 1:
            raise ValidationError(f"repeats must be >= 1, got {self.repeats}")


@dataclass(frozen=True)
class InclusionSnapshot:
    """Impostor-inclusion ratio of one reference at a session boundary."""

    repeat_id: int
    target_user: str
    session: int
    inclusion: float


@dataclass(frozen=True, eq=False)
class RunResult:
    """A run's score log plus the gallery-side measurements.

    The snapshots record impostor inclusion at the end of every session
    in which updates could occur; final_models keeps each (repeat, user)
    reference for provenance checks.
    """

    log: ScoreLog
    snapshots: tuple[InclusionSnapshot, ...]
    final_models: Mapping[tuple[int, str], ReferenceModel]


def derive_seed(base_seed: int, repeat: int, user_index: int, session: int) -> int:
    """Per-(repeat, user, session) stream seed; order-independent execution."""
    return mix64(base_seed, repeat, user_index, session)


def _enroll_user(dataset: Dataset, user: str, config: ExperimentConfig) -> ReferenceModel:
    return enroll(
        user,
        dataset.samples_for(user, 1),
        eps=config.eps,
        capacity=config.strategy.capacity,
    )


def _session_stream(dataset, user, user_index, session, repeat, config):
    seed = derive_seed(config.base_seed, repeat, user_index, session)
    return plan_session(dataset, user, session, replace(config.stream, seed=seed))


def run_online(dataset: Dataset, config: ExperimentConfig) -> RunResult:
    """Score-and-update loop: each query is scored once, logged, and the
    same score immediately feeds the update decision."""
    if config.mode is not Mode.ONLINE:
        raise ConfigError(f"run_online called with mode {config.mode.value}")
    records: list[ScoreRecord] = []
    snapshots: list[InclusionSnapshot] = []
    final_models: dict[tuple[int, str], ReferenceModel] = {}
    users = dataset.users
    for repeat in range(config.repeats):
        for user_index, user in enumerate(users):
            model = _enroll_user(dataset, user, config)
            for session in range(2, dataset.num_sessions + 1):
                state = _session_stream(dataset, user, user_index, session, repeat, config)
                while (query := next_query(state, model)) is not None:
                    raw = raw_score(model, query.sample.features)
                    centered = center(model, raw)
                    outcome = maybe_update(model, query, centered, config.strategy)
                    records.append(
                        ScoreRecord(
                            repeat_id=repeat,
                            session=session,
                            target_user=user,
                            source_user=query.sample.user_id,
                            true_label=query.true_label,
                            raw_score=raw,
                            centered_score=centered,
                            update_applied=outcome.applied,
                        )
                    )
                snapshots.append(
                    InclusionSnapshot(repeat, user, session, impostor_inclusion(model))
                )
            final_models[(repeat, user)] = model
    log = ScoreLog(tuple(records), dataset.num_sessions, Mode.ONLINE)
    return RunResult(log, tuple(snapshots), final_models)


def run_offline(dataset: Dataset, config: ExperimentConfig) -> RunResult:
    """Frozen-reference scoring followed by an update replay per session.

    Session 2 is consumed for update only. For each later session the
    realized query order is fixed while scoring against the frozen
    references, then the same queries are replayed through the update
    rule (scored anew against the evolving reference).
    """
    if config.mode is not Mode.OFFLINE:
        raise ConfigError(f"run_offline called with mode {config.mode.value}")
    if dataset.num_sessions < 3:
        raise ConfigError(
            f"offline evaluation needs at least 3 sessions, dataset has {dataset.num_sessions}"
        )
    records: list[ScoreRecord] = []
    snapshots: list[InclusionSnapshot] = []
    final_models: dict[tuple[int, str], ReferenceModel] = {}
    users = dataset.users
    for repeat in range(config.repeats):
        for user_index, user in enumerate(users):
            model = _enroll_user(dataset, user, config)

            state = _session_stream(dataset, user, user_index, 2, repeat, config)
            while (query := next_query(state, model)) is not None:
                maybe_update(model, query, centered_score(model, query.sample.features), config.strategy)
            snapshots.append(InclusionSnapshot(repeat, user, 2, impostor_inclusion(model)))

            for session in range(3, dataset.num_sessions + 1):
                state = _session_stream(dataset, user, user_index, session, repeat, config)
                staged: list[tuple[QueryEvent, float, float]] = []
                while (query := next_query(state, model)) is not None:
                    raw = raw_score(model, query.sample.features)
                    staged.append((query, raw, center(model, raw)))
                applied_flags = []
                for query, _, _ in staged:
                    outcome = maybe_update(
                        model, query, centered_score(model, query.sample.features), config.strategy
                    )
                    applied_flags.append(outcome.applied)
                for (query, raw, centered), applied in zip(staged, applied_flags):
                    records.append(
                        ScoreRecord(
                            repeat_id=repeat,
                            session=session,
                            target_user=user,
                            source_user=query.sample.user_id,
                            true_label=query.true_label,
                            raw_score=raw,
                            centered_score=centered,
                            update_applied=applied,
                        )
                    )
                snapshots.append(
                    InclusionSnapshot(repeat, user, session, impostor_inclusion(model))
                )
            final_models[(repeat, user)] = model
    log = ScoreLog(tuple(records), dataset.num_sessions, Mode.OFFLINE)
    return RunResult(log, tuple(snapshots), final_models)


def run_experiment(dataset: Dataset, config: ExperimentConfig) -> RunResult:
    if config.mode is Mode.ONLINE:
        return run_online(dataset, config)
    return run_offline(dataset, config)


def partition_sessionless(samples, k: int) -> Dataset:
    """Split a sessionless sample collection into k pseudo-sessions.

    Per user, samples are cut into k contiguous chronological blocks of
    near-equal size (earlier blocks take the remainder); block b becomes
    session b + 1.
    """
    if k < 2:
        raise ConfigError(f"partition needs k >= 2, got {k}")
    samples = list(samples)
    if not samples:
        raise PartitionError("no samples to partition")
    by_user: dict[str, list[Sample]] = {}
    for sample in samples:
        if sample.session != 1:
            raise PartitionError(
                f"user {sample.user_id}: sample in session {sample.session}; "
                "partition expects sessionless input (all session 1)"
            )
        by_user.setdefault(sample.user_id, []).append(sample)

    rebuilt: list[Sample] = []
    for user in sorted(by_user, key=str):
        chronological = sorted(by_user[user], key=lambda s: s.order_index)
        n = len(chronological)
        if n < k:
            raise PartitionError(f"user {user}: {n} samples cannot fill {k} sessions")
        base, extra = divmod(n, k)
        start = 0
        for block in range(k):
            size = base + (1 if block < extra else 0)
            for sample in chronological[start : start + size]:
                rebuilt.append(replace(sample, session=block + 1))
            start += size
    dimension = rebuilt[0].dimension
    return Dataset(dimension=dimension, num_sessions=k, samples=tuple(rebuilt))
