import bisect
import math

import numpy as np
import pytest

from tubench import Dataset, Provenance, Sample


def fast_oracle_eer(genuine, impostor):
    """Independent exhaustive-threshold EER oracle.

    Enumerates every candidate threshold (distinct scores, midpoints of
    consecutive distinct scores, +-infinity) and counts error rates with
    bisection over sorted copies; selection mirrors the documented
    tie-breaking: smallest |far - frr|, then far + frr, then threshold.
    """
    gen = sorted(genuine)
    imp = sorted(impostor)
    distinct = sorted(set(gen) | set(imp))
    candidates = [-math.inf]
    for i, value in enumerate(distinct):
        candidates.append(value)
        if i + 1 < len(distinct):
            candidates.append((value + distinct[i + 1]) / 2.0)
    candidates.append(math.inf)
    best_key = None
    best_eer = None
    for threshold in candidates:
        far = bisect.bisect_right(imp, threshold) / len(imp)
        frr = (len(gen) - bisect.bisect_right(gen, threshold)) / len(gen)
        key = (abs(far - frr), far + frr, threshold)
        if best_key is None or key < best_key:
            best_key = key
            best_eer = (far + frr) / 2.0
    return best_eer


def make_sample(user, session, order, feats, provenance=Provenance.DATASET):
    return Sample(user, session, order, np.asarray(feats, dtype=float), provenance)


def two_user_1d_dataset():
    """Two symmetric 1-d users over 3 sessions, small enough to trace by hand.

    Per user: three enrollment values spaced by 2, then one sample in
    each of sessions 2 and 3 near the enrollment mean.
    """
    samples = []
    for user, offset in (("A", 0.0), ("B", 10.0)):
        for order, value in enumerate((0.0, 2.0, 4.0)):
            samples.append(make_sample(user, 1, order, [offset + value]))
        samples.append(make_sample(user, 2, 3, [offset + 2.2]))
        samples.append(make_sample(user, 3, 4, [offset + 2.6]))
    return Dataset(dimension=1, num_sessions=3, samples=tuple(samples))


@pytest.fixture
def trace_dataset():
    return two_user_1d_dataset()
