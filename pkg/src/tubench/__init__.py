"""Deterministic evaluation bench for template-updating biometric verifiers.

The bench simulates a verification system whose per-user references
adapt while being used, replays configurable query streams against
them, and computes the equal error rate under several result
presentations so that evaluation-protocol choices can be compared on
identical score sets.
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    Label,
    Mode,
    Provenance,
    QueryEvent,
    Sample,
    ScoreLog,
    ScoreRecord,
    dataset_violations,
    validate_dataset,
)
from .errors import (
    BenchError,
    ConfigError,
    EnrollmentError,
    FormatError,
    MetricError,
    PartitionError,
    StreamError,
    ValidationError,
)
from .evaluator import (
    ExperimentConfig,
    InclusionSnapshot,
    RunResult,
    partition_sessionless,
    run_experiment,
    run_offline,
    run_online,
)
from .ingest import CMU_KEYSTROKE, ColumnMapping, read_dataset, write_dataset
from .matcher import (
    EPSILON,
    GalleryEntry,
    Origin,
    ReferenceModel,
    center,
    centered_score,
    enroll,
    raw_score,
    refresh_statistics,
)
from .metrics import (
    EvaluationReport,
    Scheme,
    aggregate,
    compute_scheme,
    cumulative_mean_eer,
    eer,
    far_frr,
    inclusion_per_session,
    per_session_eer,
    pooled_eer,
    report_for,
)
from .stream import (
    GlobalOrder,
    LocalOrder,
    SessionPolicy,
    StreamConfig,
    StreamState,
    impostor_count,
    next_query,
    plan_session,
)
from .synthdata import SynthConfig, generate
from .update import (
    StrategyKind,
    UpdateOutcome,
    UpdateStrategy,
    impostor_inclusion,
    maybe_update,
)
