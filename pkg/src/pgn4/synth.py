"""Synthetic behavioral datasets with a planted, correlation-controlled signal.

The real flagged-gambler datasets sit behind a data-access application, so
this generator produces stand-ins with the same shapes and a known ground
truth: a latent per-user risk score drives both the flag and a handful of
signal features, each calibrated to a target |correlation| with the flag.
Everything downstream (selection, arrangement, training, evaluation) can
then be exercised against a ranking we know.

Construction, in fixed draw order for a given seed:

1. latent risk ``r`` ~ N(0, 1) per row; rows with the top
   ``round(n * positive_rate)`` risks are flagged,
2. one N(0, 1) noise column per feature,
3. each correlated-noise clique replaces its members with
   ``sqrt(rho) * shared + sqrt(1 - rho) * own``,
4. signal columns are scattered to deterministic random positions and
   rewritten as ``a * r + noise`` with ``a`` found by bisection so the
   empirical |corr(feature, flag)| hits the requested strength,
5. flagged rows optionally draw a reason code from the flag-reason
   taxonomy below.

Features are Gaussian by construction; real behavioral aggregates are
heavy-tailed, so treat difficulty comparisons with the real data as
qualitative only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import DatasetTable, round_half_up
from .features import pearson
from .rng import Rng

# Why an account gets flagged by a responsible-gambling unit, with interval
# midpoints renormalized to sum to 1 (the raw midpoints sum to 0.99).
_REASON_MIDPOINTS = {
    "account_closure_reopening": 0.425,
    "self_reported_problem": 0.15,
    "limit_change_request": 0.185,
    "partial_game_block": 0.14,
    "deposit_limit_increase": 0.045,
    "fair_play_complaint": 0.02,
    "third_party_block": 0.005,
    "out_payment_cancelled": 0.005,
    "in_payment_block": 0.005,
    "underage": 0.005,
    "other": 0.005,
}
_TOTAL = sum(_REASON_MIDPOINTS.values())
REASON_DISTRIBUTION: dict[str, float] = {
    k: v / _TOTAL for k, v in _REASON_MIDPOINTS.items()
}

REASON_COLUMN = "rg_reason"


class InfeasibleSignalError(ValueError):
    """Requested |correlation| exceeds what the flag's class balance allows."""


@dataclass
class SynthSpec:
    """Recipe for one synthetic dataset."""

    n_rows: int
    n_features: int
    n_signal: int
    signal_strengths: tuple[float, ...]
    noise_corr_cliques: tuple[tuple[tuple[int, ...], float], ...] = ()
    positive_rate: float = 0.5
    seed: int = 0
    emit_reason_codes: bool = False

    def __post_init__(self):
        self.signal_strengths = tuple(float(s) for s in self.signal_strengths)
        if self.n_rows < 2 or self.n_features < 1:
            raise ValueError("need at least 2 rows and 1 feature")
        if not 0 <= self.n_signal <= self.n_features:
            raise ValueError("n_signal must be in [0, n_features]")
        if len(self.signal_strengths) != self.n_signal:
            raise ValueError(
                f"{len(self.signal_strengths)} strengths for {self.n_signal} signal features"
            )
        if any(not 0.0 < s < 1.0 for s in self.signal_strengths):
            raise ValueError("signal strengths must lie in (0, 1)")
        if not 0.0 < self.positive_rate < 1.0:
            raise ValueError("positive_rate must be in (0, 1)")
        members = [i for group, _ in self.noise_corr_cliques for i in group]
        if len(members) != len(set(members)):
            raise ValueError("clique memberships overlap")
        if any(not 0.0 < rho < 1.0 for _, rho in self.noise_corr_cliques):
            raise ValueError("clique correlations must lie in (0, 1)")


def a_like_spec(seed: int = 0, emit_reason_codes: bool = False) -> SynthSpec:
    """Shape of the larger benchmark: 4,056 users x 102 features, 5 signals."""
    return SynthSpec(
        n_rows=4056,
        n_features=102,
        n_signal=5,
        signal_strengths=(0.45, 0.40, 0.35, 0.30, 0.25),
        seed=seed,
        emit_reason_codes=emit_reason_codes,
    )


def b_like_spec(seed: int = 0, emit_reason_codes: bool = False) -> SynthSpec:
    """Shape of the smaller benchmark: 4,132 users x 27 features, 5 signals."""
    return SynthSpec(
        n_rows=4132,
        n_features=27,
        n_signal=5,
        signal_strengths=(0.48, 0.47, 0.42, 0.41, 0.37),
        seed=seed,
        emit_reason_codes=emit_reason_codes,
    )


PRESETS = {"a-like": a_like_spec, "b-like": b_like_spec}


@dataclass
class SynthResult:
    table: DatasetTable
    reason_codes: list[str] | None
    signal_features: list[str]  # names of the planted columns, strongest first


def _calibrate(r: np.ndarray, noise: np.ndarray, flag: np.ndarray, target: float,
               bound: float) -> float:
    """Bisect the mixing coefficient a so |corr(a*r + noise, flag)| = target."""
    if target >= bound:
        raise InfeasibleSignalError(
            f"target |correlation| {target} is unreachable; the flag at this "
            f"class balance caps it at {bound:.4f}"
        )

    def emp(a: float) -> float:
        return abs(pearson(a * r + noise, flag))

    if emp(0.0) >= target:
        return 0.0  # the noise column already meets the target
    hi = 1.0
    while emp(hi) < target and hi < 1e6:
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-6:
        mid = (lo + hi) / 2.0
        if emp(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def sample_reasons(n: int, rng: Rng) -> list[str]:
    """Draw n reason codes from the taxonomy by inverse-CDF walk."""
    labels = list(REASON_DISTRIBUTION)
    cdf = np.cumsum([REASON_DISTRIBUTION[k] for k in labels])
    cdf[-1] = 1.0
    draws = rng.uniform(n)
    out = []
    for u in draws:
        out.append(labels[int(np.searchsorted(cdf, u, side="right"))])
    return out


def reason_histogram(codes: Sequence[str]) -> dict[str, float]:
    """Empirical frequency of each taxonomy label among the given codes."""
    if len(codes) == 0:
        raise ValueError("empty code list")
    counts = dict.fromkeys(REASON_DISTRIBUTION, 0)
    for c in codes:
        if c not in counts:
            raise ValueError(f"unknown reason code {c!r}")
        counts[c] += 1
    n = len(codes)
    return {k: v / n for k, v in counts.items()}


def generate(spec: SynthSpec) -> SynthResult:
    """Build the dataset described by ``spec``; pure function of the spec."""
    rng = Rng(spec.seed)
    n, F = spec.n_rows, spec.n_features

    risk = rng.normal(n)
    n_pos = round_half_up(n * spec.positive_rate)
    n_pos = min(max(n_pos, 1), n - 1)  # keep both classes present
    order = np.argsort(-risk, kind="stable")
    flag = np.zeros(n, dtype=np.int64)
    flag[order[:n_pos]] = 1

    X = np.empty((n, F), dtype=np.float64)
    for j in range(F):
        X[:, j] = rng.normal(n)
    for group, rho in spec.noise_corr_cliques:
        shared = rng.normal(n)
        for j in group:
            X[:, j] = np.sqrt(rho) * shared + np.sqrt(1.0 - rho) * X[:, j]

    signal_positions = [int(i) for i in rng.partial_permutation(F, spec.n_signal)]
    bound = abs(pearson(risk, flag.astype(np.float64))) if spec.n_signal else 1.0
    flag_f = flag.astype(np.float64)
    for k, j in enumerate(signal_positions):
        a = _calibrate(risk, X[:, j], flag_f, spec.signal_strengths[k], bound)
        X[:, j] = a * risk + X[:, j]

    reasons = None
    if spec.emit_reason_codes:
        flagged = np.nonzero(flag == 1)[0]
        drawn = sample_reasons(len(flagged), rng)
        reasons = [""] * n
        for i, code in zip(flagged, drawn):
            reasons[i] = code

    width = len(str(F - 1))
    names = [f"f{j:0{width}d}" for j in range(F)]
    table = DatasetTable(feature_names=names, features=X, labels=flag)
    return SynthResult(
        table=table,
        reason_codes=reasons,
        signal_features=[names[j] for j in signal_positions],
    )
