"""Shared test utilities: the finite-difference gradient oracle, plus a
re-export of the synthetic corpus generator."""

import numpy as np

from ctmneg.synthetic import make_topic_corpus  # noqa: F401 (test-suite re-export)


def max_gradient_mismatch(loss_fn, params, h: float = 1e-5) -> float:
    """Central finite differences against the tape's analytic gradients.

    Returns the largest relative error over all parameter entries, where
    entries whose |fd - analytic| gap is below the finite-difference noise
    floor (~1e-8 for unit-scale losses) count as zero."""
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    grads = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
        for p in params
    ]
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.data.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = float(loss_fn().data)
            flat[i] = orig - h
            lm = float(loss_fn().data)
            flat[i] = orig
            fd = (lp - lm) / (2 * h)
            gap = abs(fd - gf[i])
            if gap < 1e-8:
                continue
            worst = max(worst, gap / max(abs(fd), abs(gf[i])))
    return worst
