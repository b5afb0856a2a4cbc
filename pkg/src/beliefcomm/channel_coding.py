"""One-shot channel simulation with shared randomness.

The coder communicates a sample from a target distribution q using a prior p
both ends agree on: shared randomness proposes K candidates i.i.d. from p,
the encoder picks one with probability proportional to the importance ratio
q/p and sends only its index. The decoder replays the proposal stream and
reads off the chosen candidate, so the cost is log2(K) bits regardless of
the alphabet.

Common randomness is a named counter-style construction: a Philox bit
generator keyed through numpy's SeedSequence with an explicit
(domain, *path) spawn key, and all sampling done by inverse CDF on the
stream's uniform doubles. Equal seeds and paths give byte-identical draws;
encoder and decoder never need to share mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationCapError
from .learning import Posterior
from .spaces import Distribution, kl_divergence

GENERATOR_ID = "philox4x64/seedseq-invcdf-v1"

# spawn-key domains; keep these stable, they are part of the stream contract
_DOMAIN_CANDIDATES = 0
_DOMAIN_SELECTION = 1
_DOMAIN_DATA = 2
_DOMAIN_AUX = 3

DEFAULT_SLACK = 4.0
DEFAULT_CANDIDATE_CAP = 2**22
DEFAULT_BLOCK_CAP = 2**16


class CommonRandomness:
    """Deterministic shared randomness, addressed by integer stream paths.

    bits_consumed is a nominal display-only counter: 64 bits per uniform
    double expanded from the seed, summed over every stream ever opened.
    """

    def __init__(self, seed: int, generator_id: str = GENERATOR_ID):
        if generator_id != GENERATOR_ID:
            raise ValueError(f"unknown generator_id {generator_id!r}")
        self.seed = int(seed)
        self.generator_id = generator_id
        self.bits_consumed = 0

    def _stream(self, domain: int, path: tuple[int, ...]) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(domain, *path))
        return np.random.Generator(np.random.Philox(ss))

    def candidate_stream(self, *path: int) -> np.random.Generator:
        return self._stream(_DOMAIN_CANDIDATES, path)

    def selection_stream(self, *path: int) -> np.random.Generator:
        return self._stream(_DOMAIN_SELECTION, path)

    def data_stream(self, *path: int) -> np.random.Generator:
        return self._stream(_DOMAIN_DATA, path)

    def aux_stream(self, *path: int) -> np.random.Generator:
        return self._stream(_DOMAIN_AUX, path)

    def tally(self, n_draws: int):
        self.bits_consumed += 64 * int(n_draws)


def inverse_cdf_sample(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Map uniform doubles to indices through the right-continuous CDF."""
    cum = np.cumsum(probs)
    idx = np.searchsorted(cum, uniforms, side="right")
    return np.minimum(idx, len(probs) - 1)


@dataclass(frozen=True)
class CodeRecord:
    """What the encoder produced for one target: the index plus bookkeeping.

    sample is the chosen hypothesis index (or an index tuple in block mode);
    fallback marks the all-zero-importance-weight case where the encoder
    degraded to a uniform index choice.
    """

    index: int
    index_bits: float
    sample: object
    target_kl: float
    n_candidates: int
    fallback: bool = False

    def __post_init__(self):
        if not (0 <= self.index < self.n_candidates):
            raise ValueError(
                f"index {self.index} outside [0, {self.n_candidates})"
            )


def encode_mrc(q: Distribution, p: Distribution, cr: CommonRandomness,
               n_candidates: int, stream: tuple[int, ...] = ()) -> CodeRecord:
    """Select one of n_candidates proposals from p in proportion to q/p.

    The target must be absolutely continuous w.r.t. the prior (checked via
    the KL computation). When every drawn candidate has zero target mass the
    encoder falls back to a uniform index and flags the record.
    """
    if n_candidates < 1:
        raise ValueError("need at least one candidate")
    target_kl = kl_divergence(q, p)
    gen = cr.candidate_stream(*stream)
    u = gen.random(n_candidates)
    cr.tally(n_candidates)
    cands = inverse_cdf_sample(p.probs, u)
    weights = q.probs[cands] / p.probs[cands]
    total = weights.sum()
    sel = cr.selection_stream(*stream)
    u_sel = sel.random()
    cr.tally(1)
    if total > 0:
        sel_probs = weights / total
        index = int(inverse_cdf_sample(sel_probs, np.array([u_sel]))[0])
        fallback = False
    else:
        index = min(int(u_sel * n_candidates), n_candidates - 1)
        fallback = True
    return CodeRecord(
        index=index,
        index_bits=math.log2(n_candidates),
        sample=int(cands[index]),
        target_kl=target_kl,
        n_candidates=n_candidates,
        fallback=fallback,
    )


def decode_mrc(record, p: Distribution, cr: CommonRandomness,
               n_candidates: int | None = None,
               stream: tuple[int, ...] = ()) -> int:
    """Replay the proposal stream and return the indexed candidate.

    Accepts either a CodeRecord or a bare index. A candidate count that
    disagrees with the record's is an error: the replayed proposals would
    not be the ones the encoder saw.
    """
    if isinstance(record, CodeRecord):
        if n_candidates is not None and n_candidates != record.n_candidates:
            raise ValueError(
                f"decoder candidate count {n_candidates} does not match "
                f"the record's {record.n_candidates}"
            )
        n_candidates = record.n_candidates
        index = record.index
    else:
        index = int(record)
        if n_candidates is None:
            raise ValueError("decoding a bare index needs n_candidates")
    if not (0 <= index < n_candidates):
        raise ValueError(f"index {index} outside [0, {n_candidates})")
    gen = cr.candidate_stream(*stream)
    u = gen.random(n_candidates)
    cr.tally(n_candidates)
    cands = inverse_cdf_sample(p.probs, u)
    return int(cands[index])


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def induced_distribution_exact(q: Distribution, p: Distribution, n_candidates: int,
                               cap: int = 10**6) -> Distribution:
    """Exact output law of the coder, by enumerating candidate multisets.

    Orderings collapse into multinomial counts, so the sum runs over
    compositions of K rather than all |H|^K tuples; the cap still guards the
    nominal tuple count. Matches the tuple-recursion oracle to float
    precision.
    """
    n = len(p)
    if n**n_candidates > cap:
        raise EnumerationCapError(
            f"|H|^K = {n}^{n_candidates} exceeds cap {cap}; "
            "use a sampled estimate instead"
        )
    ratio = np.where(p.probs > 0, q.probs / np.where(p.probs > 0, p.probs, 1.0), 0.0)
    out = np.zeros(n)
    for counts in _compositions(n_candidates, n):
        c = np.array(counts)
        if np.any((c > 0) & (p.probs == 0)):
            continue
        coeff = math.factorial(n_candidates)
        for k in counts:
            coeff //= math.factorial(k)
        prob = coeff * float(np.prod(p.probs**c))
        pool = c * ratio
        total = pool.sum()
        if total > 0:
            out += prob * pool / total
        else:
            out += prob * c / n_candidates
    return Distribution(out)


@dataclass(frozen=True)
class SingleShotBounds:
    """Index-cost bounds for one-shot simulation at a given divergence."""

    kl_bits: float
    harsha_bits: float
    theis_bits: float


def single_shot_bounds(kl_bits: float, c_harsha: float = 0.0) -> SingleShotBounds:
    """Classic one-shot rate bounds as a function of the target divergence.

    Lower bound is the divergence itself; the two upper forms are
    kl + 2 log2(kl + 1) + c and kl + log2(kl + 1) + 4.
    """
    if kl_bits < 0:
        raise ValueError("divergence must be >= 0")
    return SingleShotBounds(
        kl_bits=kl_bits,
        harsha_bits=kl_bits + 2.0 * math.log2(kl_bits + 1.0) + c_harsha,
        theis_bits=kl_bits + math.log2(kl_bits + 1.0) + 4.0,
    )


def candidate_count(kl_bits: float, slack: float = DEFAULT_SLACK,
                    cap: int = DEFAULT_CANDIDATE_CAP) -> int:
    """Default proposal count ceil(2^(kl + slack))."""
    k = math.ceil(2.0 ** (kl_bits + slack))
    if k > cap:
        raise EnumerationCapError(
            f"candidate count {k} exceeds cap {cap} at kl={kl_bits} bits"
        )
    return max(k, 1)


@dataclass(frozen=True)
class CodedSequence:
    records: tuple[CodeRecord, ...]
    total_bits: float
    reconstruction: np.ndarray
    mode: str


def _block_candidates(gen, prior: Distribution, k: int, n: int) -> np.ndarray:
    u = gen.random((k, n))
    return inverse_cdf_sample(prior.probs, u.ravel()).reshape(k, n)


def code_sequence(posterior: Posterior, prior: Distribution, dataset_seq,
                  cr: CommonRandomness, mode: str = "per_symbol",
                  slack: float = DEFAULT_SLACK, trial: int = 0,
                  candidate_cap: int = DEFAULT_CANDIDATE_CAP,
                  block_cap: int = DEFAULT_BLOCK_CAP) -> CodedSequence:
    """Code the belief for each dataset in the sequence.

    per_symbol codes each position alone with K_i = ceil(2^(kl_i + slack));
    block draws whole candidate tuples against the product prior and sends a
    single index. Position i uses stream path (trial, i); block mode uses
    (trial, 0), which makes a length-1 block coincide exactly with
    per_symbol coding.
    """
    seq = [int(s) for s in dataset_seq]
    rows = [Distribution(posterior.rows[s]) for s in seq]
    if mode == "per_symbol":
        records = []
        recon = np.empty(len(seq), dtype=int)
        total = 0.0
        for i, row in enumerate(rows):
            kl = kl_divergence(row, prior)
            k = candidate_count(kl, slack, candidate_cap)
            rec = encode_mrc(row, prior, cr, k, stream=(trial, i))
            recon[i] = decode_mrc(rec, prior, cr, stream=(trial, i))
            records.append(rec)
            total += rec.index_bits
        return CodedSequence(tuple(records), total, recon, mode)
    if mode == "block":
        kls = [kl_divergence(row, prior) for row in rows]
        total_kl = float(sum(kls))
        k = math.ceil(2.0 ** (total_kl + slack))
        if k > block_cap:
            raise EnumerationCapError(
                f"block candidate count {k} exceeds cap {block_cap}"
            )
        k = max(k, 1)
        gen = cr.candidate_stream(trial, 0)
        cands = _block_candidates(gen, prior, k, len(seq))
        cr.tally(k * len(seq))
        row_mat = np.stack([r.probs for r in rows])  # (n, H)
        num = np.prod(row_mat[np.arange(len(seq))[None, :], cands], axis=1)
        den = np.prod(prior.probs[cands], axis=1)
        weights = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        sel = cr.selection_stream(trial, 0)
        u_sel = sel.random()
        cr.tally(1)
        total_w = weights.sum()
        if total_w > 0:
            index = int(inverse_cdf_sample(weights / total_w, np.array([u_sel]))[0])
            fallback = False
        else:
            index = min(int(u_sel * k), k - 1)
            fallback = True
        sample = cands[index].copy()
        rec = CodeRecord(
            index=index, index_bits=math.log2(k),
            sample=sample if len(seq) > 1 else int(sample[0]),
            target_kl=total_kl, n_candidates=k, fallback=fallback,
        )
        # decoder replay, same stream
        gen2 = cr.candidate_stream(trial, 0)
        cands2 = _block_candidates(gen2, prior, k, len(seq))
        cr.tally(k * len(seq))
        recon = cands2[index].copy()
        return CodedSequence((rec,), math.log2(k), recon, mode)
    raise ValueError(f"unknown mode {mode!r}")
