"""Finite alphabets, distributions, and the basic information quantities.

Everything downstream works over three coupled finite alphabets: concepts
(latent tasks), datasets (tuples of observed samples), and hypotheses
(models a learner can output). This module owns the immutable containers
for those alphabets plus total variation, KL divergence, and mutual
information, all in bits.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import rel_entr, xlogy

from .errors import (
    AlphabetMismatchError,
    ConfigError,
    EnumerationCapError,
    NormalizationError,
    SupportViolationError,
)

LOG2 = math.log(2.0)

# Sum-to-one is enforced to 1e-12 after construction; anything drifted by less
# than 1e-9 is renormalized, anything worse is an error.
NORM_TOL = 1e-12
RENORM_LIMIT = 1e-9

DEFAULT_ENUMERATION_CAP = 10**6


def _clean_probs(values, what: str) -> np.ndarray:
    p = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise NormalizationError(f"{what}: need a non-empty 1-d probability vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise NormalizationError(f"{what}: entries must be finite and >= 0")
    total = float(p.sum())
    if abs(total - 1.0) >= RENORM_LIMIT:
        raise NormalizationError(
            f"{what}: sums to {total!r}, off by more than {RENORM_LIMIT}"
        )
    if abs(total - 1.0) > 0.0:
        p = p / total
    p = p.copy()
    p.setflags(write=False)
    return p


@dataclass(frozen=True)
class Distribution:
    """A probability vector over an implicit finite alphabet."""

    probs: np.ndarray

    def __init__(self, probs):
        object.__setattr__(self, "probs", _clean_probs(probs, "Distribution"))

    def __len__(self) -> int:
        return self.probs.size

    @property
    def support(self) -> np.ndarray:
        """Indices with strictly positive mass."""
        return np.flatnonzero(self.probs > 0)

    @staticmethod
    def point_mass(index: int, size: int) -> "Distribution":
        p = np.zeros(size)
        p[index] = 1.0
        return Distribution(p)

    @staticmethod
    def uniform(size: int) -> "Distribution":
        return Distribution(np.full(size, 1.0 / size))


def _as_probs(p) -> np.ndarray:
    return p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=float)


def total_variation(p, q) -> float:
    """Total variation distance, half the L1 gap."""
    pa, qa = _as_probs(p), _as_probs(q)
    if pa.shape != qa.shape:
        raise AlphabetMismatchError(
            f"total_variation: alphabets of size {pa.shape} vs {qa.shape}"
        )
    return 0.5 * float(np.abs(pa - qa).sum())


def kl_divergence(p, q) -> float:
    """Relative entropy D(p || q) in bits.

    Raises SupportViolationError when p puts mass outside q's support, the
    infinite-divergence case; no +inf is ever returned.
    """
    pa, qa = _as_probs(p), _as_probs(q)
    if pa.shape != qa.shape:
        raise AlphabetMismatchError(
            f"kl_divergence: alphabets of size {pa.shape} vs {qa.shape}"
        )
    bad = (pa > 0) & (qa == 0)
    if np.any(bad):
        raise SupportViolationError(
            f"kl_divergence is infinite: mass at indices {np.flatnonzero(bad).tolist()} "
            "outside the support of the second argument"
        )
    return float(rel_entr(pa, qa).sum()) / LOG2


def mutual_information(joint) -> float:
    """Mutual information of a joint probability matrix, in bits.

    Accepts any 2-d nonnegative matrix summing to one (0 log 0 = 0).
    """
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2:
        raise AlphabetMismatchError("mutual_information: need a 2-d joint matrix")
    if np.any(j < 0):
        raise NormalizationError("mutual_information: negative joint entries")
    total = j.sum()
    if abs(total - 1.0) >= RENORM_LIMIT:
        raise NormalizationError(f"mutual_information: joint sums to {total!r}")
    j = j / total
    row = j.sum(axis=1)
    col = j.sum(axis=0)
    outer = np.outer(row, col)
    mask = j > 0
    val = float(np.sum(j[mask] * (np.log(j[mask]) - np.log(outer[mask]))))
    return val / LOG2


def entropy_bits(p) -> float:
    pa = _as_probs(p)
    return -float(xlogy(pa, pa).sum()) / LOG2


@dataclass(frozen=True)
class ConceptSpace:
    """Concept alphabet with its prior and per-concept sampling law.

    data_law[c, z] is the chance that concept c emits sample symbol z; the
    sample alphabet is flat (already indexed 0..|Z|-1).
    """

    concept_names: tuple[str, ...]
    sample_names: tuple[str, ...]
    prior: Distribution
    data_law: np.ndarray

    def __post_init__(self):
        law = np.asarray(self.data_law, dtype=float)
        if law.shape != (len(self.concept_names), len(self.sample_names)):
            raise AlphabetMismatchError(
                f"data_law shape {law.shape} does not match "
                f"{len(self.concept_names)} concepts x {len(self.sample_names)} samples"
            )
        rows = np.stack([_clean_probs(r, f"data_law row {i}") for i, r in enumerate(law)])
        rows.setflags(write=False)
        object.__setattr__(self, "data_law", rows)
        if len(self.prior) != len(self.concept_names):
            raise AlphabetMismatchError("prior length does not match concept count")

    @property
    def n_concepts(self) -> int:
        return len(self.concept_names)

    @property
    def n_symbols(self) -> int:
        return len(self.sample_names)


def enumerate_datasets(n_symbols: int, m: int, cap: int = DEFAULT_ENUMERATION_CAP):
    """All length-m sample tuples in lexicographic order.

    The count is n_symbols**m and is refused above ``cap``.
    """
    count = n_symbols**m
    if count > cap:
        raise EnumerationCapError(
            f"enumerate_datasets: |Z|^m = {n_symbols}^{m} = {count} exceeds cap {cap}"
        )
    return list(itertools.product(range(n_symbols), repeat=m))


@dataclass(frozen=True)
class DatasetSpace:
    """Enumerated dataset alphabet S = Z^m with its exact distributions.

    conditional[c, s] = P(dataset s | concept c), a product of data-law
    entries; marginal is P_S; posterior[s, c] = P(concept c | dataset s) by
    Bayes. Datasets with zero marginal mass keep the concept prior as their
    posterior row, which never matters because they carry no weight.
    """

    m: int
    datasets: tuple[tuple[int, ...], ...]
    conditional: np.ndarray
    marginal: Distribution
    posterior: np.ndarray

    @staticmethod
    def build(concepts: ConceptSpace, m: int, cap: int = DEFAULT_ENUMERATION_CAP) -> "DatasetSpace":
        datasets = enumerate_datasets(concepts.n_symbols, m, cap=cap)
        idx = np.array(datasets, dtype=int)  # (n_s, m)
        # log-free product; entries can be exactly zero
        cond = np.ones((concepts.n_concepts, len(datasets)))
        for j in range(m):
            cond *= concepts.data_law[:, idx[:, j]]
        marg = concepts.prior.probs @ cond
        post = np.empty((len(datasets), concepts.n_concepts))
        for s in range(len(datasets)):
            if marg[s] > 0:
                post[s] = concepts.prior.probs * cond[:, s] / marg[s]
            else:
                post[s] = concepts.prior.probs
        cond.setflags(write=False)
        post.setflags(write=False)
        return DatasetSpace(
            m=m,
            datasets=tuple(datasets),
            conditional=cond,
            marginal=Distribution(marg),
            posterior=post,
        )

    @property
    def n_datasets(self) -> int:
        return len(self.datasets)

    def check_bayes_consistency(self, concepts: ConceptSpace, tol: float = 1e-12) -> float:
        """Max abs gap of P_C(c) P(s|c) vs P_S(s) P(c|s); raises beyond tol."""
        lhs = concepts.prior.probs[:, None] * self.conditional
        rhs = (self.marginal.probs[:, None] * self.posterior).T
        gap = float(np.max(np.abs(lhs - rhs)))
        if gap > tol:
            raise NormalizationError(f"Bayes consistency off by {gap}")
        return gap


@dataclass(frozen=True)
class HypothesisSpace:
    """Hypothesis alphabet and the loss tensor loss[c, h, z] in [0, l_max]."""

    hypothesis_names: tuple[str, ...]
    loss: np.ndarray
    l_max: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.loss, dtype=float).copy()
        if t.ndim != 3 or t.shape[1] != len(self.hypothesis_names):
            raise AlphabetMismatchError(
                f"loss tensor shape {t.shape} does not match hypothesis count "
                f"{len(self.hypothesis_names)}"
            )
        if np.any(t < 0) or np.any(t > self.l_max + 1e-12) or not np.all(np.isfinite(t)):
            raise NormalizationError(
                f"loss entries must lie in [0, l_max={self.l_max}]"
            )
        t.setflags(write=False)
        object.__setattr__(self, "loss", t)

    @property
    def n_hypotheses(self) -> int:
        return len(self.hypothesis_names)


@dataclass(frozen=True)
class ProblemInstance:
    """Concept space + dataset space + hypothesis space, checked for fit."""

    concepts: ConceptSpace
    dataset_space: DatasetSpace
    hypotheses: HypothesisSpace
    true_loss_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.hypotheses.loss.shape[0] != self.concepts.n_concepts:
            raise AlphabetMismatchError("loss tensor concept axis mismatch")
        if self.hypotheses.loss.shape[2] != self.concepts.n_symbols:
            raise AlphabetMismatchError("loss tensor sample axis mismatch")
        self.dataset_space.check_bayes_consistency(self.concepts)
        # true_loss_table[c, h] = E_{z ~ p_c} loss[c, h, z], the population risk
        # of the pure hypothesis h under concept c.
        tl = np.einsum("cz,chz->ch", self.concepts.data_law, self.hypotheses.loss)
        tl.setflags(write=False)
        object.__setattr__(self, "true_loss_table", tl)

    @staticmethod
    def build(concepts: ConceptSpace, hypotheses: HypothesisSpace, m: int,
              cap: int = DEFAULT_ENUMERATION_CAP) -> "ProblemInstance":
        return ProblemInstance(concepts, DatasetSpace.build(concepts, m, cap=cap), hypotheses)

    @property
    def n_datasets(self) -> int:
        return self.dataset_space.n_datasets

    @property
    def n_hypotheses(self) -> int:
        return self.hypotheses.n_hypotheses

    @property
    def p_s(self) -> np.ndarray:
        return self.dataset_space.marginal.probs


# ---------------------------------------------------------------------------
# JSON interchange


def _need(obj: dict, key: str, pointer: str):
    if key not in obj:
        raise ConfigError(f"{pointer}/{key}", "missing required key")
    return obj[key]


def problem_instance_from_json(obj: dict, pointer: str = "") -> ProblemInstance:
    """Build an instance from a plain dict (the on-disk JSON layout).

    Layout: concepts (list of {name, prior}), samples (list of names),
    data_law ([concept][sample]), hypotheses (list of names),
    loss ([concept][hypothesis][sample]), m, optional l_max.
    """
    if not isinstance(obj, dict):
        raise ConfigError(pointer or "/", "instance must be a JSON object")
    concepts = _need(obj, "concepts", pointer)
    if not isinstance(concepts, list) or not concepts:
        raise ConfigError(f"{pointer}/concepts", "need a non-empty list")
    names, prior = [], []
    for i, c in enumerate(concepts):
        if not isinstance(c, dict) or "name" not in c or "prior" not in c:
            raise ConfigError(f"{pointer}/concepts/{i}", "need {{name, prior}}")
        names.append(str(c["name"]))
        prior.append(float(c["prior"]))
    samples = [str(s) for s in _need(obj, "samples", pointer)]
    try:
        cs = ConceptSpace(
            concept_names=tuple(names),
            sample_names=tuple(samples),
            prior=Distribution(prior),
            data_law=np.asarray(_need(obj, "data_law", pointer), dtype=float),
        )
    except (NormalizationError, AlphabetMismatchError, ValueError) as e:
        raise ConfigError(f"{pointer}/data_law", str(e)) from e
    m = _need(obj, "m", pointer)
    if not isinstance(m, int) or m < 1:
        raise ConfigError(f"{pointer}/m", "m must be a positive integer")
    hyp_names = [str(h) for h in _need(obj, "hypotheses", pointer)]
    try:
        hs = HypothesisSpace(
            hypothesis_names=tuple(hyp_names),
            loss=np.asarray(_need(obj, "loss", pointer), dtype=float),
            l_max=float(obj.get("l_max", 1.0)),
        )
    except (NormalizationError, AlphabetMismatchError, ValueError) as e:
        raise ConfigError(f"{pointer}/loss", str(e)) from e
    try:
        return ProblemInstance.build(cs, hs, m)
    except (NormalizationError, AlphabetMismatchError, EnumerationCapError) as e:
        raise ConfigError(pointer or "/", str(e)) from e


def problem_instance_to_json(instance: ProblemInstance) -> dict:
    """Inverse of problem_instance_from_json, for repro dumps."""
    cs = instance.concepts
    return {
        "concepts": [
            {"name": n, "prior": float(p)}
            for n, p in zip(cs.concept_names, cs.prior.probs)
        ],
        "samples": list(cs.sample_names),
        "data_law": cs.data_law.tolist(),
        "hypotheses": list(instance.hypotheses.hypothesis_names),
        "loss": instance.hypotheses.loss.tolist(),
        "m": instance.dataset_space.m,
        "l_max": instance.hypotheses.l_max,
    }


def load_problem_instance(path) -> ProblemInstance:
    with open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError("/", f"not valid JSON: {e}") from e
    return problem_instance_from_json(obj)
