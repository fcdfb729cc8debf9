# ensemble_math.py
"""
Error analysis of the two-model And-strategy.

Two independent orientation estimators err with probabilities p1 and p2. A sample
is kept only when they agree, so it is valid when both are right or both are
wrong; the kept sample is wrong only in the second case:

    validity = (1 - p1)(1 - p2) + p1 p2
    error    = p1 p2 / validity

error(p1, p2) <= min(p1, p2) whenever both rates are at most 0.5.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from errors import InvalidParameterError

SHARD_TRIALS = 250_000


@dataclass(frozen=True)
class ErrorRates:
    p1: float
    p2: float

    def __post_init__(self):
        for name, p in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 < p <= 0.5:
                raise InvalidParameterError(f"{name} must be in (0, 0.5], got {p!r}")


def validity_rate(r: ErrorRates) -> float:
    return (1.0 - r.p1) * (1.0 - r.p2) + r.p1 * r.p2


def ensemble_error(r: ErrorRates) -> float:
    return r.p1 * r.p2 / validity_rate(r)


def _shard(r: ErrorRates, n: int, seed: np.random.SeedSequence) -> Tuple[int, int]:
    rng = np.random.default_rng(seed)
    err1 = rng.random(n) < r.p1
    err2 = rng.random(n) < r.p2
    valid = err1 == err2
    return int(np.count_nonzero(valid)), int(np.count_nonzero(valid & err1))


def monte_carlo_ensemble(
    r: ErrorRates,
    trials: int,
    seed: int = 0,
    max_workers: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Empirical (error given valid, validity) over `trials` simulated samples.

    Trials are split into shards with independent child seeds; tallies are summed,
    so the result depends only on (rates, trials, seed). With no valid trial the
    error frequency is reported as 0.0.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidParameterError(f"trials must be a positive integer, got {trials!r}")
    sizes = [SHARD_TRIALS] * (trials // SHARD_TRIALS)
    if trials % SHARD_TRIALS:
        sizes.append(trials % SHARD_TRIALS)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    if max_workers and max_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            tallies = list(pool.map(lambda a: _shard(r, *a), zip(sizes, seeds)))
    else:
        tallies = [_shard(r, n, s) for n, s in zip(sizes, seeds)]

    valid = sum(v for v, _ in tallies)
    wrong = sum(w for _, w in tallies)
    error = wrong / valid if valid else 0.0
    return error, valid / trials
