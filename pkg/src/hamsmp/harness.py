"""Monte Carlo error estimation, cost sweeps and closed-form bounds."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .bucket_reduce import collision_prob_bound
from .core import (
    STREAM_INSTANCE,
    CoinStream,
    gen_instance,
    ham_predicate,
    trial_seed,
)
from .gap_test import (
    DEFAULT_GAMMA,
    alpha,
    amplified_gap_test,
    gap_messages,
    make_params,
    z_coins,
)
from .protocol import ProtocolConfig, Setup, run_p1, run_protocol

CSV_VERSION = 1
ESTIMATE_COLUMNS = ("n", "d", "k", "trials", "errors", "rate", "wilson_lo", "wilson_hi", "seed", "variant")
SWEEP_COLUMNS = ("d", "n", "variant", "bits_per_party", "normalized")
SUBPROTOCOLS = ("gap", "p1", "full")
SCALING_CONSTANT = 12

_Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    if trials < 1 or not 0 <= errors <= trials:
        raise ValueError("need 0 <= errors <= trials, trials >= 1")
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


# ---------------------------------------------------------------------------
# Closed forms


@dataclass(frozen=True)
class TheoryRow:
    k: int
    alpha: float
    expected: float
    sigma_bound: float


@dataclass(frozen=True)
class TheoryReport:
    d: int
    gamma: int
    d_eff: int
    d_hi: int
    rows: tuple[TheoryRow, ...]
    m: float
    separation: float
    separation_closed_form: float | None
    chebyshev_le: float
    chebyshev_gt: float
    chebyshev_total: float
    ten_sigma: bool
    meets_49_50: bool
    collision_bound: float
    composed_le: float
    composed_gt: float
    notes: tuple[str, ...] = field(default=())

    def table(self) -> str:
        lines = [f"d={self.d} gamma={self.gamma} d_eff={self.d_eff}"]
        lines.append(f"{'k':>6} {'alpha_k':>10} {'E(N_k)':>12} {'sigma<=':>10}")
        for r in self.rows:
            lines.append(f"{r.k:>6} {r.alpha:>10.6f} {r.expected:>12.3f} {r.sigma_bound:>10.3f}")
        lines += [
            f"cutoff m                 {self.m:.4f}",
            f"separation E(N_hi)-E(N_d) {self.separation:.4f}",
            f"chebyshev per side       {self.chebyshev_le:.6f} / {self.chebyshev_gt:.6f}",
            f"chebyshev total          {self.chebyshev_total:.6f}  (49/50 met: {self.meets_49_50})",
            f"half-separation >= 10 sd {self.ten_sigma}",
            f"collision bound          {self.collision_bound:.6f}",
            f"composed error <=        {self.composed_le:.6f} (k<=d), {self.composed_gt:.6f} (k>d)",
        ]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# hamsmp theory v{CSV_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["d", "gamma", "k", "alpha", "expected", "sigma_bound", "m", "chebyshev_total"])
        for r in self.rows:
            w.writerow([self.d, self.gamma, r.k, repr(r.alpha), repr(r.expected),
                        repr(r.sigma_bound), repr(self.m), repr(self.chebyshev_total)])
        return buf.getvalue()


def theory_report(d: int, gamma: int = DEFAULT_GAMMA) -> TheoryReport:
    params = make_params(d, gamma)
    d_eff, d_hi = params.d_eff, params.d_hi
    ks = sorted({0, d, 2 * d, 2 * d + 1, d_hi})
    rows = []
    for k in ks:
        a = alpha(k, d_eff)
        rows.append(TheoryRow(k, a, a * gamma, math.sqrt(a * gamma)))
    e_lo, e_hi = alpha(d, d_eff) * gamma, alpha(d_hi, d_eff) * gamma
    cheb_le = min(1.0, e_lo / (params.m - e_lo) ** 2)
    cheb_gt = min(1.0, e_hi / (e_hi - params.m) ** 2)
    total = min(1.0, cheb_le + cheb_gt)
    closed = None
    notes = []
    if d >= 2:
        t = (1 - 1 / d) ** d
        closed = 0.5 * gamma * t * (1 - t)
    else:
        notes.append("d=1 uses d_eff=2 bias; cutoff midway between distances 1 and 3")
    collision = float(collision_prob_bound(d))
    p2 = max(total, 1 / 8)
    return TheoryReport(
        d=d, gamma=gamma, d_eff=d_eff, d_hi=d_hi, rows=tuple(rows), m=params.m,
        separation=e_hi - e_lo, separation_closed_form=closed,
        chebyshev_le=cheb_le, chebyshev_gt=cheb_gt, chebyshev_total=total,
        ten_sigma=(e_hi - e_lo) / 2 >= 10 * math.sqrt(max(e_lo, e_hi)),
        meets_49_50=total <= 1 / 50,
        collision_bound=collision,
        composed_le=min(1.0, collision + p2),
        composed_gt=max(collision, p2),
        notes=tuple(notes),
    )


def claimed_bound(subprotocol: str, d: int, k: int, gamma: int = DEFAULT_GAMMA) -> float | None:
    """Error bound the analysis promises for this cell, or None off-promise.

    At the default gamma these are 1/50 (gap), 1/8 (P1) and 1/4 or 1/8
    (full protocol); smaller gamma substitutes the Chebyshev bound.
    """
    gap = max(1 / 50, theory_report(d, gamma).chebyshev_total)
    d_hi = make_params(d, gamma).d_hi
    if subprotocol == "gap":
        return gap if (k <= d or k >= d_hi) else None
    if subprotocol == "p1":
        return 1 / 8 if k <= 2 * d else None
    if subprotocol == "full":
        p2 = max(gap, 1 / 8)
        return min(1.0, 1 / 8 + p2) if k <= d else p2
    raise ValueError(f"unknown subprotocol {subprotocol!r}")


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class ErrorReport:
    n: int
    d: int
    k: int
    trials: int
    errors: int
    rate: float
    wilson_lo: float
    wilson_hi: float
    seed: int
    variant: str
    bound: float | None = None

    @property
    def within_bound(self) -> bool:
        """Measured rate is consistent with the bound at 95% (or no bound applies)."""
        return self.bound is None or self.wilson_lo <= self.bound

    def csv_row(self) -> list:
        return [self.n, self.d, self.k, self.trials, self.errors, repr(self.rate),
                repr(self.wilson_lo), repr(self.wilson_hi), self.seed, self.variant]


def _count_errors(args) -> int:
    n, d, k, base_seed, config, subprotocol, start, stop = args
    setup = Setup(n, d, config)
    errors = 0
    for t in range(start, stop):
        seed = trial_seed(base_seed, t)
        inst = gen_instance(n, k, CoinStream(seed, STREAM_INSTANCE), d)
        if subprotocol == "gap":
            verdict, _ = amplified_gap_test(inst.x, inst.y, setup.gap, seed)
        elif subprotocol == "p1":
            verdict = run_p1(inst.x, inst.y, d, config, seed)
        else:
            verdict = run_protocol(inst.x, inst.y, d, config, seed).final
        errors += int(verdict) != ham_predicate(inst.x, inst.y, d)
    return errors


def estimate_error(
    n: int,
    d: int,
    k: int,
    trials: int,
    base_seed: int,
    config: ProtocolConfig | None = None,
    subprotocol: str = "full",
    workers: int = 1,
) -> ErrorReport:
    """Error rate over fresh distance-``k`` instances, scored against the exact predicate."""
    config = config or ProtocolConfig()
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    if subprotocol not in SUBPROTOCOLS:
        raise ValueError(f"subprotocol must be one of {SUBPROTOCOLS}")
    if workers <= 1:
        errors = _count_errors((n, d, k, base_seed, config, subprotocol, 0, trials))
    else:
        edges = np.linspace(0, trials, workers + 1).astype(int)
        jobs = [(n, d, k, base_seed, config, subprotocol, a, b) for a, b in zip(edges, edges[1:])]
        with ProcessPoolExecutor(workers) as pool:
            errors = sum(pool.map(_count_errors, jobs))
    lo, hi = wilson_interval(errors, trials)
    variant = subprotocol if subprotocol == "gap" else f"{subprotocol}-{config.inner}"
    return ErrorReport(
        n=n, d=d, k=k, trials=trials, errors=errors, rate=errors / trials,
        wilson_lo=lo, wilson_hi=hi, seed=base_seed, variant=variant,
        bound=claimed_bound(subprotocol, d, k, config.gamma),
    )


def estimate_csv(reports) -> str:
    buf = io.StringIO()
    buf.write(f"# hamsmp estimate v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ESTIMATE_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Communication cost


@dataclass(frozen=True)
class CostRow:
    d: int
    n: int
    variant: str
    bits_per_party: int
    inner_bits: int
    constant_bits: int

    @property
    def normalized(self) -> float:
        return self.inner_bits / (self.d * math.log2(max(self.d, 2)))


def sweep_cost(d_list, n: int, config: ProtocolConfig | None = None, seed: int = 0) -> list[CostRow]:
    """Per-party bits measured from real transcripts, one run per ``d``."""
    config = config or ProtocolConfig()
    rows = []
    for d in d_list:
        inst = gen_instance(n, 0, CoinStream(trial_seed(seed, d), STREAM_INSTANCE), d)
        tr = run_protocol(inst.x, inst.y, d, config, seed)
        gap_bits = config.reps * config.gamma
        rows.append(CostRow(d, n, config.inner, tr.alice_bits, tr.alice_bits - gap_bits, gap_bits))
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(f"# hamsmp sweep-cost v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([r.d, r.n, r.variant, r.bits_per_party, f"{r.normalized:.6f}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Distribution of the disagreement bits


@dataclass(frozen=True)
class DistributionCheck:
    d: int
    k: int
    gamma: int
    trials: int
    mean: float
    alpha: float
    sigma: float
    lag1: float
    lag1_tol: float
    ones: int

    @property
    def mean_ok(self) -> bool:
        if self.k == 0:
            return self.ones == 0
        return abs(self.mean - self.alpha) <= 4 * self.sigma

    @property
    def independence_ok(self) -> bool:
        return self.k == 0 or abs(self.lag1) <= self.lag1_tol

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.independence_ok


def disagreement_bits(x, y, params, seed: int) -> np.ndarray:
    a, b = gap_messages([x, y], params, z_coins(seed))
    return (a.bits ^ b.bits).bits()


def verify_distribution(
    d: int, k: int, gamma: int = DEFAULT_GAMMA, trials: int = 100, seed: int = 0, n: int = 4096
) -> DistributionCheck:
    """Mean of the disagreement bits against alpha_k, plus a lag-1 correlation check."""
    if d < 2:
        raise ValueError("distribution check needs d >= 2")
    params = make_params(d, gamma)
    ones = 0
    lag_num = 0.0
    lag_den = 0.0
    chunks = []
    for t in range(trials):
        s = trial_seed(seed, t)
        inst = gen_instance(n, k, CoinStream(s, STREAM_INSTANCE), d)
        chunks.append(disagreement_bits(inst.x, inst.y, params, s))
    c = np.concatenate(chunks).astype(np.float64)
    ones = int(c.sum())
    total = c.size
    mean = ones / total
    a = alpha(k, params.d_eff)
    sigma = math.sqrt(a * (1 - a) / total)
    lag1 = 0.0
    if 0 < ones < total:
        centred = c.reshape(trials, gamma) - mean
        lag_num = float((centred[:, 1:] * centred[:, :-1]).sum())
        lag_den = float((centred * centred).sum())
        lag1 = lag_num / lag_den
    return DistributionCheck(
        d=d, k=k, gamma=gamma, trials=trials, mean=mean, alpha=a, sigma=sigma,
        lag1=lag1, lag1_tol=4 / math.sqrt(total), ones=ones,
    )


__all__ = [
    "CostRow", "DistributionCheck", "ErrorReport", "TheoryReport", "TheoryRow",
    "claimed_bound", "estimate_csv", "estimate_error", "sweep_cost", "sweep_csv",
    "theory_report", "verify_distribution", "wilson_interval",
]
