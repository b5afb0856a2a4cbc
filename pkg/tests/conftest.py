"""Shared helpers: seeded generators and senders worth compressing."""

import numpy as np

from beliefcomm import (
    LearningRule,
    effective_distortion_matrix,
    fit,
    random_instance,
)


def philox_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sharp_sender(seed, n_symbols=2, n_hypotheses=2, min_span=0.02,
                 attempts=80):
    """Instance plus an erm sender whose belief actually tracks the data.

    Soft senders on diffuse worlds are dominated by a constant reply, so
    their rate is zero at any nonnegative budget. Peaked concept laws with an
    erm learner give a positive span (the distortion of the best constant
    reply), which is where the rate-distortion tradeoff is alive. Rejection
    sampling keeps the first draw that clears min_span.
    """
    rng = philox_rng(seed)
    for _ in range(attempts):
        inst = random_instance(rng, n_concepts=3, n_symbols=n_symbols,
                               n_hypotheses=n_hypotheses, m=1,
                               concentration=0.2)
        q = fit(LearningRule.erm(), inst)
        dmat, base = effective_distortion_matrix(inst, q)
        span = float((inst.p_s @ dmat).min()) - base
        if span > min_span:
            return inst, q, span
    raise RuntimeError("no positive-span draw; widen the search")
