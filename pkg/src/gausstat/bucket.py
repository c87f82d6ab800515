"""Mode-insensitive (bucket) correlation functions, bounds, and mode-count estimation.

A bucket detector sees only totals, so the correlations collapse to trace
invariants of the coherence matrix G, the covariance matrix, and the
displacement vector.  Bucket data alone can never reconstruct a state; every
verdict here is conditional on a Gaussian-state assumption and says so.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, UndefinedCorrelationError
from .states import MomentSummary

GAUSSIAN_CAVEAT = "under Gaussian-state assumption"


@dataclass(frozen=True)
class BucketObservables:
    g2_b: float
    g3_b: float
    total_nbar: float


def bucket_correlations(moments: MomentSummary) -> BucketObservables:
    """Second- and third-order bucket correlations from first/second moments.

    With T = Tr G, centered covariance matrix ``cov`` and displacement vector
    ``alpha``:

        g2_B = 1 + Tr G^2 / T^2 + [Tr(cov† cov) - |alpha|^4
               + 2 Re(alpha† cov alpha*)] / T^2,

        g3_B = 1 + 3 Tr G^2 / T^2 + 2 Tr G^3 / T^3
               + 3 [Tr(cov† cov) - |alpha|^4] / T^2
               + 6 (1 - 2 |alpha|^2 / T) Re(alpha† cov alpha*) / T^2
               + 4 |alpha|^6 / T^3 + 6 Tr(cov G cov†) / T^3
               - 6 |alpha|^2 (alpha^T G alpha*) / T^3
               + 12 Re(alpha^T G cov† alpha) / T^3.

    Both follow by summing the fourth- and sixth-order moment decompositions
    over all mode indices.
    """
    g = moments.coherence_matrix()
    t1 = float(np.trace(g).real)
    if t1 <= 0:
        raise UndefinedCorrelationError("bucket correlations undefined: Tr G = 0")
    cov = moments.cov
    al = moments.alpha
    t2 = float(np.trace(g @ g).real)
    t3 = float(np.trace(g @ g @ g).real)
    trcc = float(np.trace(cov.conj().T @ cov).real)
    trccg = float(np.trace(cov @ g @ cov.conj().T).real)
    a2 = float((np.abs(al) ** 2).sum())
    rc = float((al.conj() @ cov @ al.conj()).real)
    aga = float((al @ g @ al.conj()).real)
    agcov = float((al @ g @ cov.conj().T @ al).real)
    g2_b = 1.0 + t2 / t1**2 + (trcc - a2**2 + 2.0 * rc) / t1**2
    g3_b = (1.0 + 3.0 * t2 / t1**2 + 2.0 * t3 / t1**3
            + 3.0 * (trcc - a2**2) / t1**2
            + 6.0 * (1.0 - 2.0 * a2 / t1) * rc / t1**2
            + 4.0 * a2**3 / t1**3 + 6.0 * trccg / t1**3
            - 6.0 * a2 * aga / t1**3 + 12.0 * agcov / t1**3)
    return BucketObservables(float(g2_b), float(g3_b), t1)


CONSISTENT_NONSQUEEZED = "consistent-nonsqueezed"
CERTIFIES_SQUEEZING = "certifies-squeezing"
REQUIRES_DISPLACEMENT_AND_SQUEEZING = "requires-displacement-and-squeezing"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class BucketVerdict:
    verdict: str
    caveat: str = GAUSSIAN_CAVEAT


def bucket_bounds_check(obs: BucketObservables, tol: float = 1e-9) -> BucketVerdict:
    """Locate g2_B relative to the non-squeezed window 1 <= g2_B <= 2.

    Exceeding 2 certifies a nontrivial squeezing parameter; falling below 1
    requires both squeezing and displacement.  Values within ``tol`` of a
    boundary are inconclusive.  All verdicts assume a Gaussian state.
    """
    g2_b = obs.g2_b
    if abs(g2_b - 2.0) <= tol or abs(g2_b - 1.0) <= tol:
        return BucketVerdict(INCONCLUSIVE)
    if g2_b > 2.0:
        return BucketVerdict(CERTIFIES_SQUEEZING)
    if g2_b < 1.0:
        return BucketVerdict(REQUIRES_DISPLACEMENT_AND_SQUEEZING)
    return BucketVerdict(CONSISTENT_NONSQUEEZED)


@dataclass(frozen=True)
class ModeCountEstimate:
    mode_count: float
    sinh2_per_mode: float
    total_nbar: float
    residual: float
    assumptions: str = ("pure uncorrelated equal single-beam squeezers with "
                        "loss affecting all modes equally")


def equal_squeezer_bucket(k: int | float, sinh2: float) -> tuple[float, float]:
    """(g2_B, g3_B) of K identical pure single-beam squeezers with sinh^2|z| each."""
    t1 = k * sinh2
    u = 1.0 / t1
    v = 1.0 / k
    g2_b = 1.0 + u + 2.0 * v
    g3_b = 1.0 + 3.0 * u + 6.0 * v + 6.0 * u * v + 8.0 * v**2
    return g2_b, g3_b


def pure_squeezer_mode_estimate(g2_b: float, g3_b: float,
                                tol: float = 1e-9) -> ModeCountEstimate:
    """Estimate the squeezer count K from bucket correlations.

    Under the equal-squeezer model, with u = 1/Tr G and v = 1/K,
    g2_B = 1 + u + 2v and g3_B = 1 + 3u + 6v + 6uv + 8v^2; eliminating u
    leaves 4v^2 - 6(g2_B - 1) v + (g3_B - 3 g2_B + 2) = 0, solved for the
    admissible root (v in (0, 1], u > 0).
    """
    disc = 9.0 * (g2_b - 1.0) ** 2 - 4.0 * (g3_b - 3.0 * g2_b + 2.0)
    if disc < 0:
        raise InfeasibleError("bucket pair incompatible with the equal-squeezer model")
    root = np.sqrt(disc)
    admissible = []
    for v in ((3.0 * (g2_b - 1.0) + root) / 4.0, (3.0 * (g2_b - 1.0) - root) / 4.0):
        if not tol < v <= 1.0 + 1e-9:
            continue
        u = g2_b - 1.0 - 2.0 * v
        if u <= tol:
            continue
        k = 1.0 / v
        sinh2 = v / u
        model_g2, model_g3 = equal_squeezer_bucket(k, sinh2)
        residual = max(abs(model_g2 - g2_b), abs(model_g3 - g3_b))
        admissible.append((residual, k, sinh2, 1.0 / u))
    if not admissible:
        raise InfeasibleError(
            "no admissible (K, sinh^2) solves the equal-squeezer model")
    admissible.sort()
    residual, k, sinh2, t1 = admissible[0]
    return ModeCountEstimate(float(k), float(sinh2), float(t1), float(residual))
