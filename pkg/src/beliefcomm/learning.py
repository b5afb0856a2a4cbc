"""Learning rules, posteriors over hypotheses, and semantic distortion.

A learner maps each dataset to a belief over hypotheses. Semantic distortion
between two such maps is the expected extra true loss the receiver's belief
pays over the sender's, averaged over concepts and datasets jointly. The key
computational fact, used everywhere downstream, is that this distortion is
affine in the receiver's rows: it equals an inner product against an
effective per-dataset loss matrix minus a constant baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import AlphabetMismatchError, ConfigError
from .spaces import Distribution, ProblemInstance, _clean_probs

ERM_TIE_TOL = 1e-12


@dataclass(frozen=True)
class Posterior:
    """Belief rows, one distribution over hypotheses per dataset.

    marginal is the dataset-weighted average row, the distribution of the
    hypothesis when the dataset is drawn from its marginal law.
    """

    rows: np.ndarray
    marginal: Distribution

    @staticmethod
    def from_rows(rows, instance: ProblemInstance) -> "Posterior":
        r = np.asarray(rows, dtype=float)
        if r.shape != (instance.n_datasets, instance.n_hypotheses):
            raise AlphabetMismatchError(
                f"Posterior rows shape {r.shape}, expected "
                f"({instance.n_datasets}, {instance.n_hypotheses})"
            )
        r = np.stack([_clean_probs(row, f"posterior row {s}") for s, row in enumerate(r)])
        r.setflags(write=False)
        return Posterior(rows=r, marginal=Distribution(instance.p_s @ r))


@dataclass(frozen=True)
class LearningRule:
    """gibbs(beta), erm, or an explicit lookup table of rows."""

    kind: str
    beta: float | None = None
    table: np.ndarray | None = None

    @staticmethod
    def gibbs(beta: float) -> "LearningRule":
        if beta < 0:
            raise ValueError("gibbs beta must be >= 0")
        return LearningRule(kind="gibbs", beta=float(beta))

    @staticmethod
    def erm() -> "LearningRule":
        return LearningRule(kind="erm")

    @staticmethod
    def map_table(rows) -> "LearningRule":
        return LearningRule(kind="map_table", table=np.asarray(rows, dtype=float))

    @staticmethod
    def from_json(obj: dict, pointer: str = "/rule") -> "LearningRule":
        if not isinstance(obj, dict) or "rule" not in obj:
            raise ConfigError(pointer, 'need an object with a "rule" key')
        kind = obj["rule"]
        if kind == "gibbs":
            if "beta" not in obj:
                raise ConfigError(f"{pointer}/beta", "gibbs needs beta")
            beta = float(obj["beta"])
            if beta < 0:
                raise ConfigError(f"{pointer}/beta", "beta must be >= 0")
            return LearningRule.gibbs(beta)
        if kind == "erm":
            return LearningRule.erm()
        if kind == "map_table":
            if "rows" not in obj:
                raise ConfigError(f"{pointer}/rows", "map_table needs rows")
            return LearningRule.map_table(obj["rows"])
        raise ConfigError(f"{pointer}/rule", f"unknown rule {kind!r}")


def empirical_loss(belief, dataset: tuple[int, ...], concept: int,
                   instance: ProblemInstance) -> float:
    """Average per-sample loss of a belief on one dataset under one concept."""
    b = np.asarray(belief.probs if isinstance(belief, Distribution) else belief, dtype=float)
    loss = instance.hypotheses.loss[concept]  # (h, z)
    cols = loss[:, list(dataset)]  # (h, m)
    return float(b @ cols.mean(axis=1))


def true_loss(belief, concept: int, instance: ProblemInstance) -> float:
    """Population risk of a belief under one concept."""
    b = np.asarray(belief.probs if isinstance(belief, Distribution) else belief, dtype=float)
    return float(b @ instance.true_loss_table[concept])


def dataset_scores(instance: ProblemInstance) -> np.ndarray:
    """scores[s, h]: posterior-averaged empirical loss of pure h on dataset s.

    This is the quantity both gibbs and erm rank hypotheses by.
    """
    ds = instance.dataset_space
    n_s, n_h = instance.n_datasets, instance.n_hypotheses
    idx = np.array(ds.datasets, dtype=int)  # (n_s, m)
    # emp[c, s, h] = mean_j loss[c, h, z_j]
    emp = instance.hypotheses.loss[:, :, idx].mean(axis=3)  # (c, h, s) after fancy index
    emp = np.moveaxis(emp, 2, 1)  # (c, s, h)
    scores = np.einsum("sc,csh->sh", ds.posterior, emp)
    assert scores.shape == (n_s, n_h)
    return scores


def fit(rule: LearningRule, instance: ProblemInstance) -> Posterior:
    """Run a learning rule on every dataset at once."""
    n_s, n_h = instance.n_datasets, instance.n_hypotheses
    if rule.kind == "map_table":
        return Posterior.from_rows(rule.table, instance)
    scores = dataset_scores(instance)
    m = instance.dataset_space.m
    if rule.kind == "gibbs":
        logits = -rule.beta * m * scores
        rows = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
        return Posterior.from_rows(rows, instance)
    if rule.kind == "erm":
        rows = np.zeros((n_s, n_h))
        mins = scores.min(axis=1, keepdims=True)
        ties = scores <= mins + ERM_TIE_TOL
        rows[ties] = 1.0
        rows /= rows.sum(axis=1, keepdims=True)
        return Posterior.from_rows(rows, instance)
    raise ValueError(f"unknown rule kind {rule.kind!r}")


def d_sem(q_sender: Posterior, q_receiver: Posterior, instance: ProblemInstance) -> float:
    """Semantic distortion: expected extra population risk of the receiver.

    Signed on purpose; a receiver that happens to beat the sender comes out
    negative.
    """
    _check_rows(q_sender, instance)
    _check_rows(q_receiver, instance)
    ds = instance.dataset_space
    # joint weight over (c, s) = P_C(c) P(s|c); contract against the
    # per-concept population risks of each row.
    w = instance.concepts.prior.probs[:, None] * ds.conditional  # (c, s)
    diff = q_receiver.rows - q_sender.rows  # (s, h)
    return float(np.einsum("cs,sh,ch->", w, diff, instance.true_loss_table))


def effective_distortion_matrix(instance: ProblemInstance,
                                q_sender: Posterior) -> tuple[np.ndarray, float]:
    """Reduce semantic distortion to a linear functional of receiver rows.

    Returns (D, baseline) with D[s, h] the posterior-mixed population risk of
    pure h given dataset s, so that for any receiver rows q:

        d_sem(q_sender, q) = sum_s P_S(s) <q[s], D[s]> - baseline

    and baseline is the same contraction evaluated at the sender's own rows.
    """
    _check_rows(q_sender, instance)
    ds = instance.dataset_space
    dmat = ds.posterior @ instance.true_loss_table  # (s, h)
    baseline = float(np.einsum("s,sh,sh->", ds.marginal.probs, q_sender.rows, dmat))
    return dmat, baseline


def d_sem_rows(row_sender, row_receiver, instance: ProblemInstance) -> float:
    """Semantic distortion between two dataset-independent belief rows.

    Both rows are treated as constant learning rules, so the concept
    expectation collapses onto the concept prior.
    """
    a = np.asarray(row_sender, dtype=float)
    b = np.asarray(row_receiver, dtype=float)
    lbar = instance.concepts.prior.probs @ instance.true_loss_table  # (h,)
    return float((b - a) @ lbar)


def _check_rows(q: Posterior, instance: ProblemInstance):
    if q.rows.shape != (instance.n_datasets, instance.n_hypotheses):
        raise AlphabetMismatchError(
            f"posterior rows {q.rows.shape} do not fit instance "
            f"({instance.n_datasets}, {instance.n_hypotheses})"
        )
