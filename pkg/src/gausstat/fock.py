"""Brute-force verification backend on a truncated Fock space.

The density operator is built literally as D S R rho_th R† S† D† with the
unitaries obtained by exponentiating truncated ladder-operator generators.
Truncated generators of D and S are still anti-hermitian, so those factors
remain exactly unitary and the trace deficit alone cannot detect their
truncation error; the builder therefore also records the occupancy of the top
Fock levels of every mode, which is what actually controls convergence.

Dense matrices only; this is an oracle, not a production path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from .errors import TruncationError, ValidationError
from .states import GaussianParams
from .words import LadderWord

DEFAULT_CUTOFFS = {1: 25, 2: 12, 3: 8}
MAX_MODES = 3
MAX_DIMENSION = 16384
_TAIL_LEVELS = 2


@lru_cache(maxsize=8)
def _sparse_annihilators(modes: int, cutoff: int):
    a = sparse.diags(np.sqrt(np.arange(1, cutoff)), 1, dtype=complex, format="csr")
    eye = sparse.identity(cutoff, dtype=complex, format="csr")
    out = []
    for k in range(modes):
        op = None
        for m in range(modes):
            factor = a if m == k else eye
            op = factor if op is None else sparse.kron(op, factor, format="csr")
        out.append(op.tocsr())
    return tuple(out)


@lru_cache(maxsize=8)
def _mode_annihilators(modes: int, cutoff: int) -> tuple[np.ndarray, ...]:
    return tuple(op.toarray() for op in _sparse_annihilators(modes, cutoff))


@dataclass(frozen=True)
class TruncatedDensity:
    """Dense truncated density matrix with its measured truncation indicators."""

    matrix: np.ndarray
    dim: int
    modes: int
    deficit: float
    tail_mass: float

    def validate(self, tol: float = 1e-10) -> None:
        h = np.abs(self.matrix - self.matrix.conj().T).max()
        if h > tol:
            raise ValidationError(f"density not hermitian: asymmetry {h:.2e}")
        evals = np.linalg.eigvalsh(self.matrix)
        if evals.min() < -1e-10:
            raise ValidationError(f"density not positive semidefinite: min eig {evals.min():.2e}")


def _thermal_density(occupations: np.ndarray, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    rho = None
    for occ in occupations:
        if occ > 0:
            p = (occ / (occ + 1.0)) ** n / (occ + 1.0)
        else:
            p = np.zeros(cutoff)
            p[0] = 1.0
        block = np.diag(p.astype(complex))
        rho = block if rho is None else np.kron(rho, block)
    return rho


def build_density(params: GaussianParams, cutoff: int | None = None,
                  tail_tol: float = 1e-3, check: bool = True) -> TruncatedDensity:
    """Construct the truncated density operator of a Gaussian state.

    Args:
        params: state parameters; at most three modes.
        cutoff: Fock levels per mode (defaults per mode count: 25/12/8).
        tail_tol: raise TruncationError when deficit or top-level occupancy
            exceeds this; pass a larger value to inspect marginal states.
        check: validate hermiticity/positivity of the result.
    """
    m = params.modes
    if m > MAX_MODES:
        raise ValidationError(f"oracle supports at most {MAX_MODES} modes, got {m}")
    d = DEFAULT_CUTOFFS[m] if cutoff is None else int(cutoff)
    if d < 2:
        raise ValidationError("cutoff must be at least 2")
    if d**m > MAX_DIMENSION:
        raise ValidationError(f"requested dimension {d**m} exceeds limit {MAX_DIMENSION}")

    ladders = _sparse_annihilators(m, d)
    dim = d**m
    gen_d = sparse.csr_matrix((dim, dim), dtype=complex)
    gen_s = sparse.csr_matrix((dim, dim), dtype=complex)
    gen_r = sparse.csr_matrix((dim, dim), dtype=complex)
    for i in range(m):
        ai = ladders[i]
        gen_d = gen_d + params.alpha[i] * ai.conj().T - np.conj(params.alpha[i]) * ai
        for j in range(m):
            aj = ladders[j]
            zij = params.squeeze[i, j]
            if zij != 0:
                gen_s = gen_s + 0.5 * np.conj(zij) * (ai @ aj) \
                    - 0.5 * zij * (ai.conj().T @ aj.conj().T)
            pij = params.rotation[i, j]
            if pij != 0:
                gen_r = gen_r + 1j * pij * (ai.conj().T @ aj)

    rho = _thermal_density(params.thermal, d)
    for gen in (gen_r, gen_s, gen_d):
        if gen.count_nonzero() == 0:
            continue
        u = expm(gen.toarray())
        rho = u @ rho @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)

    deficit = float(abs(1.0 - np.trace(rho).real))
    tail = 0.0
    for i in range(m):
        marg = mode_number_distribution_matrix(rho, i, m, d)
        tail = max(tail, float(marg[-_TAIL_LEVELS:].sum()))
    if deficit > tail_tol or tail > tail_tol:
        raise TruncationError(
            f"cutoff {d} too small: trace deficit {deficit:.3e}, "
            f"top-level occupancy {tail:.3e}",
            deficit=deficit, tail_mass=tail,
        )
    density = TruncatedDensity(rho, d, m, deficit, tail)
    if check:
        density.validate()
    return density


def moment_bruteforce(rho: TruncatedDensity, word: LadderWord) -> complex:
    """Tr[rho · (operator product)] with truncated matrix ladder operators."""
    if word.max_mode() >= rho.modes:
        raise ValidationError("word references a mode outside the density")
    ladders = _sparse_annihilators(rho.modes, rho.dim)
    op = None
    for lop in word.ops:
        mat = ladders[lop.mode]
        mat = mat.conj().T.tocsr() if lop.creation else mat
        op = mat if op is None else op @ mat
    if op is None:
        return complex(np.trace(rho.matrix))
    return complex(op.multiply(rho.matrix.T).sum())


def vacuum_overlap(rho: TruncatedDensity) -> float:
    """<0..0| rho |0..0>."""
    return float(rho.matrix[0, 0].real)


def mode_number_distribution_matrix(matrix: np.ndarray, mode: int, modes: int,
                                    cutoff: int) -> np.ndarray:
    """Marginal photon-number distribution of one mode from a raw matrix."""
    shaped = matrix.reshape((cutoff,) * modes * 2)
    out = shaped
    # trace out every other mode, highest axis first to keep indices stable
    for ax in reversed(range(modes)):
        if ax == mode:
            continue
        out = np.trace(out, axis1=ax, axis2=out.ndim // 2 + ax)
    return np.diag(out).real.copy()


def photon_number_distribution(rho: TruncatedDensity, mode: int) -> np.ndarray:
    """Marginal photon-number distribution of ``mode``."""
    if not 0 <= mode < rho.modes:
        raise ValidationError(f"mode {mode} out of range")
    return mode_number_distribution_matrix(rho.matrix, mode, rho.modes, rho.dim)


def total_number_factorial_moment(rho: TruncatedDensity, order: int) -> float:
    """<n_tot (n_tot - 1) ... (n_tot - order + 1)> for the summed number operator.

    Equals the fully mode-summed normally ordered moment entering bucket
    correlations; cheap because n_tot is diagonal in the Fock basis.
    """
    d, m = rho.dim, rho.modes
    digits = np.indices((d,) * m).reshape(m, -1).sum(axis=0).astype(float)
    weight = np.ones_like(digits)
    for k in range(order):
        weight *= digits - k
    return float((np.diag(rho.matrix).real * weight).sum())


def oracle_moments(rho: TruncatedDensity):
    """(alpha, <a_i a_j>, <a_i† a_j>) measured directly from the density."""
    m, d = rho.modes, rho.dim
    ladders = _mode_annihilators(m, d)
    alpha = np.array([complex((rho.matrix * ladders[i].T).sum()) for i in range(m)])
    aa = np.zeros((m, m), dtype=complex)
    adag_a = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            aa[i, j] = (rho.matrix * (ladders[i] @ ladders[j]).T).sum()
            adag_a[i, j] = (rho.matrix * (ladders[i].conj().T @ ladders[j]).T).sum()
    return alpha, aa, adag_a
