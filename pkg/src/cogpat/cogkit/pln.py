"""Truth-value calculus: strength/confidence inference formulas under the
independence assumption, and the confidence-weighted information gain (KL
divergence between the beta fits of two truth values)."""

from __future__ import annotations

import math

from ..metagraph import TruthValue


class PlnError(Exception):
    pass


class SingularityError(PlnError):
    """A formula denominator vanished (certain or impossible middle term)."""


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def deduction(ab: TruthValue, bc: TruthValue, b_prior: float, c_prior: float,
              k: float = 1.0) -> TruthValue:
    """Chain A->B and B->C into A->C.

    Strength follows the independence formula; evidence count is the weaker
    premise's count.
    """
    if b_prior >= 1.0:
        raise SingularityError("middle-term prior strength must be < 1")
    s = ab.s * bc.s + (1.0 - ab.s) * (c_prior - b_prior * bc.s) / (1.0 - b_prior)
    n = min(ab.n, bc.n)
    return TruthValue.from_count(_clamp01(s), n, k=k)


def inversion(ab: TruthValue, a_prior: float, b_prior: float,
              k: float = 1.0) -> TruthValue:
    """Flip A->B into B->A by Bayes' rule on the strengths."""
    if b_prior <= 0.0:
        raise SingularityError("consequent prior strength must be > 0")
    s = ab.s * a_prior / b_prior
    return TruthValue.from_count(_clamp01(s), ab.n, k=k)


def induction(ba: TruthValue, bc: TruthValue, a_prior: float, b_prior: float,
              c_prior: float, k: float = 1.0) -> TruthValue:
    """From B->A and B->C infer A->C: invert the first premise, then chain."""
    ab = inversion(ba, b_prior, a_prior, k=k)
    return deduction(ab, bc, b_prior, c_prior, k=k)


def _log_beta_pdf(x: float, a: float, b: float) -> float:
    if x <= 0.0 or x >= 1.0:
        raise ValueError("x must be interior")
    return (
        (a - 1.0) * math.log(x)
        + (b - 1.0) * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )


def cwig(before: TruthValue, after: TruthValue, panels: int = 20_000) -> float:
    """Information gained moving from one truth value to another: the KL
    divergence of the after-beta from the before-beta, in nats, by composite
    Simpson quadrature on the open interval."""
    a1, b1 = after.beta_params
    a0, b0 = before.beta_params
    if (a1, b1) == (a0, b0):
        return 0.0
    eps = 1e-9
    lo, hi = eps, 1.0 - eps
    h = (hi - lo) / panels

    def integrand(x: float) -> float:
        lp_after = _log_beta_pdf(x, a1, b1)
        if lp_after < -700.0:
            return 0.0
        return math.exp(lp_after) * (lp_after - _log_beta_pdf(x, a0, b0))

    total = integrand(lo) + integrand(hi)
    for i in range(1, panels):
        total += (4.0 if i % 2 else 2.0) * integrand(lo + i * h)
    return max(0.0, total * h / 3.0)
