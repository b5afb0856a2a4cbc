"""Model-first vs data-first communication, and the distortion-rate bounds.

Scheme 1 sends the learned belief itself through the rate-constrained
channel. Scheme 2 compresses the dataset with a deterministic map, lets the
receiver rerun the learning rule on the compressed observation, and so
spends part of its information flow on residual data detail the receiver's
model no longer uses. Both sit behind the same bottleneck: the information
the pair (compressed data, refit model) carries about the raw dataset splits
by the chain rule into the model part plus a nonnegative residual, which is
the whole comparison in one identity.

The bound side converts a rate deficit into a distortion ceiling via
Pinsker and Bretagnolle-Huber: L_max * min(sqrt(d/2), sqrt(1 - exp(-d)))
with the deficit d in nats. Solvers report rates in bits, so the public
functions take bits and convert inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundViolationError, InvariantViolationError
from .learning import (
    LearningRule,
    Posterior,
    d_sem,
    dataset_scores,
    effective_distortion_matrix,
)
from .rate_distortion import solve_rd, solve_rd_with_prior
from .spaces import (
    Distribution,
    ProblemInstance,
    mutual_information,
    problem_instance_to_json,
)

LOG2 = math.log(2.0)
CHAIN_RULE_TOL = 1e-8


def distortion_rate_bound(delta_r_bits: float, l_max: float = 1.0) -> float:
    """Distortion ceiling for a rate deficit, deficit given in bits."""
    if delta_r_bits < -1e-9:
        raise ValueError(f"rate deficit must be >= 0, got {delta_r_bits}")
    d = max(delta_r_bits, 0.0) * LOG2
    return l_max * min(math.sqrt(d / 2.0), math.sqrt(1.0 - math.exp(-d)))


def distortion_rate_bound_scheme2(delta_r_bits: float, residual_bits: float,
                                  l_max: float = 1.0) -> float:
    """Data-first ceiling: the residual flow is lost to the model too."""
    if residual_bits < -1e-9:
        raise ValueError(f"residual must be >= 0, got {residual_bits}")
    return distortion_rate_bound(delta_r_bits + max(residual_bits, 0.0), l_max)


@dataclass(frozen=True)
class SchemeReport:
    """Side-by-side accounting for one compressor.

    mi_model is the bottleneck information I(S; (S2, H2)) computed from the
    scheme-2 joint, which is what scheme 1 carries when its solution sits on
    the rate boundary; scheme1_rate is the rate scheme 1 actually achieved at
    the budget and boundary_gap = rate_budget - scheme1_rate measures how far
    the boundary premise is from holding.
    """

    compressor: tuple[int, ...]
    mi_model: float
    mi_model2: float
    mi_residual: float
    delta_r: float
    bound1: float
    bound2: float
    measured_distortion: float
    rate_budget: float
    scheme1_rate: float
    boundary_gap: float
    distortion_scheme2: float
    infeasible: bool

    def __post_init__(self):
        if self.mi_residual < -CHAIN_RULE_TOL:
            raise InvariantViolationError(
                f"negative residual information {self.mi_residual}"
            )
        gap = abs(self.mi_model - self.mi_model2 - self.mi_residual)
        if gap > CHAIN_RULE_TOL:
            raise InvariantViolationError(
                f"chain rule off by {gap}: {self.mi_model} vs "
                f"{self.mi_model2} + {self.mi_residual}"
            )


def canonical_partition(labels) -> tuple[int, ...]:
    """Relabel a dataset->cell map by first appearance."""
    seen = {}
    out = []
    for x in labels:
        if x not in seen:
            seen[x] = len(seen)
        out.append(seen[x])
    return tuple(out)


def enumerate_compressors(n_datasets: int):
    """All set partitions of the dataset alphabet as canonical label tuples."""

    def grow(prefix, n_cells):
        if len(prefix) == n_datasets:
            yield tuple(prefix)
            return
        for cell in range(n_cells + 1):
            yield from grow(prefix + [cell], max(n_cells, cell + 1))

    yield from grow([0], 1)


def refit_on_compressed(instance: ProblemInstance, rule: LearningRule,
                        rho) -> np.ndarray:
    """Rows over compressed cells from rerunning the rule on merged data.

    The per-dataset ranking scores aggregate with in-cell weights P(s|cell),
    which is exactly what the rule sees when only the cell is observed.
    Lookup-table rules have no induced rule on merged cells and are refused.
    """
    if rule.kind == "map_table":
        raise ValueError("map_table rules cannot be refit on compressed data")
    labels = canonical_partition(rho)
    if len(labels) != instance.n_datasets:
        raise ValueError("compressor must label every dataset")
    n_cells = max(labels) + 1
    scores = dataset_scores(instance)
    p_s = instance.p_s
    m = instance.dataset_space.m
    rows = np.empty((n_cells, instance.n_hypotheses))
    for cell in range(n_cells):
        members = [s for s, c in enumerate(labels) if c == cell]
        w = p_s[members]
        if w.sum() > 0:
            cell_score = w @ scores[members] / w.sum()
        else:
            cell_score = scores[members].mean(axis=0)
        if rule.kind == "gibbs":
            logits = -rule.beta * m * cell_score
            logits -= logits.max()
            e = np.exp(logits)
            rows[cell] = e / e.sum()
        else:  # erm
            mins = cell_score.min()
            ties = cell_score <= mins + 1e-12
            rows[cell] = ties / ties.sum()
    return rows


def _conditional_mi_given_h(joint3: np.ndarray) -> float:
    """I(S; S2 | H2) from the full three-way joint, summed over h slices."""
    total = 0.0
    p_h = joint3.sum(axis=(0, 1))
    for h in range(joint3.shape[2]):
        if p_h[h] > 0:
            total += p_h[h] * mutual_information(joint3[:, :, h] / p_h[h])
    return float(total)


def _inverse_rate_lookup(instance, q_alice, budget, rate_tol):
    """Smallest budgeted distortion: min eps with rate(eps) <= budget."""
    p0 = solve_rd(instance, q_alice, 0.0, rate_tol=rate_tol)
    if p0.rate <= budget:
        return p0
    dmat, baseline = effective_distortion_matrix(instance, q_alice)
    p_s = instance.p_s
    keep = p_s > 0
    eps_hi = float((p_s[keep] @ dmat[keep]).min()) - baseline  # rate hits 0 here
    lo, hi = 0.0, max(eps_hi, 1e-12)
    pt_hi = solve_rd(instance, q_alice, hi, rate_tol=rate_tol)
    for _ in range(60):
        if hi - lo < 1e-12 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        pt = solve_rd(instance, q_alice, mid, rate_tol=rate_tol)
        if pt.rate <= budget:
            hi, pt_hi = mid, pt
        else:
            lo = mid
    return pt_hi


def compare_schemes(instance: ProblemInstance, q_alice: Posterior,
                    rule: LearningRule, rho, rate_budget: float | None = None,
                    rate_tol: float = 1e-6) -> SchemeReport:
    """Account both schemes through one compressor at a matched bottleneck.

    With no explicit budget, the bottleneck is what scheme 2 actually
    carries, I(S; (S2, H2)), so the two schemes are compared at equal flow.
    """
    labels = canonical_partition(rho)
    if len(labels) != instance.n_datasets:
        raise ValueError("compressor must label every dataset")
    rows2 = refit_on_compressed(instance, rule, labels)
    n_cells = rows2.shape[0]
    p_s = instance.p_s
    n_h = instance.n_hypotheses

    joint3 = np.zeros((instance.n_datasets, n_cells, n_h))
    for s in range(instance.n_datasets):
        joint3[s, labels[s], :] = p_s[s] * rows2[labels[s]]

    mi_pair = mutual_information(joint3.reshape(instance.n_datasets, -1))
    mi_model2 = mutual_information(joint3.sum(axis=1))
    mi_residual = _conditional_mi_given_h(joint3)

    budget = mi_pair if rate_budget is None else float(rate_budget)
    infeasible = budget < -1e-12
    if infeasible:
        point = solve_rd(instance, q_alice, 0.0, rate_tol=rate_tol)
    else:
        point = _inverse_rate_lookup(instance, q_alice, budget, rate_tol)

    q_bob2 = Posterior.from_rows(rows2[list(labels)], instance)
    dist2 = d_sem(q_alice, q_bob2, instance)

    r_star = solve_rd(instance, q_alice, 0.0, rate_tol=rate_tol).rate
    delta_r = max(r_star - budget, 0.0)
    return SchemeReport(
        compressor=labels,
        mi_model=mi_pair,
        mi_model2=mi_model2,
        mi_residual=mi_residual,
        delta_r=delta_r,
        bound1=distortion_rate_bound(delta_r, instance.hypotheses.l_max),
        bound2=distortion_rate_bound_scheme2(delta_r, mi_residual,
                                             instance.hypotheses.l_max),
        measured_distortion=point.distortion,
        rate_budget=budget,
        scheme1_rate=point.rate,
        boundary_gap=budget - point.rate,
        distortion_scheme2=dist2,
        infeasible=infeasible,
    )


@dataclass(frozen=True)
class BoundCheckRow:
    epsilon: float
    rate: float
    r_star: float
    delta_r: float
    bound: float
    measured: float

    @property
    def margin(self) -> float:
        return self.bound - self.measured

    @property
    def ok(self) -> bool:
        return self.measured <= self.bound + 1e-9


def verify_bound(instance: ProblemInstance, q_alice: Posterior,
                 prior: Distribution, epsilon_grid, tol: float = 1e-9,
                 rate_tol: float = 1e-8) -> list[BoundCheckRow]:
    """Check measured distortion against the rate-deficit ceiling, per budget.

    The reference rate is the budget-zero optimum under the given prior.
    Measured distortion is recomputed from the distortion definition, not
    read off the solver, so the check crosses two code paths. Any violation
    beyond tol raises with the serialized instance attached.
    """
    r_star = solve_rd_with_prior(instance, q_alice, 0.0, prior,
                                 rate_tol=rate_tol).rate
    rows = []
    for eps in epsilon_grid:
        point = solve_rd_with_prior(instance, q_alice, float(eps), prior,
                                    rate_tol=rate_tol)
        delta_r = max(r_star - point.rate, 0.0)
        bound = distortion_rate_bound(delta_r, instance.hypotheses.l_max)
        measured = d_sem(q_alice, point.q_tilde, instance)
        row = BoundCheckRow(
            epsilon=float(eps), rate=point.rate, r_star=r_star,
            delta_r=delta_r, bound=bound, measured=measured,
        )
        if measured > bound + tol:
            raise BoundViolationError(
                f"distortion {measured} exceeds ceiling {bound} + {tol} at "
                f"eps={eps} (rate {point.rate}, reference {r_star})",
                instance_json=problem_instance_to_json(instance),
            )
        rows.append(row)
    return rows
