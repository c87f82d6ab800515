"""Multimode reconstruction: spectral route for displaced thermal states,
Williamson route for squeezed thermal states, beam-splitter reduction for the
general displaced squeezed case.

Quadrature convention: x = (a + a†)/sqrt(2), p = (a - a†)/(i sqrt(2)),
ordering (x_1..x_M, p_1..p_M), vacuum variance 1/2, symplectic form
Omega = [[0, I], [-I, 0]].  Symplectic eigenvalues are D_i = N_i + 1/2.

Reconstructed parameters are meaningful up to gauge: a global phase, local
phases inside degenerate thermal eigenspaces (Q rotations), and discrete
leftovers in two-mode systems.  The universal acceptance check is therefore
to push reconstructed parameters through the forward model and compare
observables, not raw parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, schur, sqrtm

from .classify import (
    NON_DISPLACED,
    MeasurementSet,
    classify_multimode,
    _extract_nd_cosines,
    _extract_ns_cosines,
)
from .errors import (
    InconsistentDataError,
    NumericalError,
    SectorMismatchError,
    ValidationError,
)
from .phases import (
    COVARIANCE,
    DISPLACEMENT,
    PhaseSystem,
    solve_covariance_phases,
    solve_displacement_phases,
    wrap_angle,
)
from .recon_single import Ambiguity, ReconstructedState
from .states import (
    GaussianParams,
    MomentSummary,
    derive_moments,
    g2_tensor,
    g3_tensor,
    rotation_from_unitary,
)


def symplectic_form(m: int) -> np.ndarray:
    """Omega in (x.., p..) ordering."""
    omega = np.zeros((2 * m, 2 * m))
    omega[:m, m:] = np.eye(m)
    omega[m:, :m] = -np.eye(m)
    return omega


@dataclass(frozen=True)
class ComplexCovariance:
    """Blocks of the ladder-operator covariance matrix [[A, B], [B*, A*]]."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        B = np.asarray(self.B, dtype=complex)
        if np.abs(A - A.conj().T).max() > 1e-8 * (1 + np.abs(A).max()):
            raise ValidationError("A block must be hermitian")
        if np.abs(B - B.T).max() > 1e-8 * (1 + np.abs(B).max()):
            raise ValidationError("B block must be symmetric")
        object.__setattr__(self, "A", 0.5 * (A + A.conj().T))
        object.__setattr__(self, "B", 0.5 * (B + B.T))

    @property
    def modes(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_moments(cls, moments: MomentSummary) -> "ComplexCovariance":
        g_c = moments.centered_coherence()
        a_block = g_c.conj() + 0.5 * np.eye(moments.modes)
        return cls(a_block, moments.cov)


def _ladder_to_quadrature(m: int) -> np.ndarray:
    """Unitary Lambda with (x, p) = Lambda (a, a†)."""
    eye = np.eye(m)
    return np.block([[eye, eye], [-1j * eye, 1j * eye]]) / np.sqrt(2.0)


def complex_to_real_cov(cov: ComplexCovariance) -> np.ndarray:
    """Real quadrature covariance matrix V of the same state."""
    m = cov.modes
    vc = np.block([[cov.A, cov.B], [cov.B.conj(), cov.A.conj()]])
    lam = _ladder_to_quadrature(m)
    vr = lam @ vc @ lam.conj().T
    if np.abs(vr.imag).max() > 1e-8 * (1 + np.abs(vr.real).max()):
        raise ValidationError("complex covariance blocks are inconsistent")
    return 0.5 * (vr.real + vr.real.T)


def real_to_complex_cov(v: np.ndarray) -> ComplexCovariance:
    """Inverse of :func:`complex_to_real_cov`."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
        raise ValidationError("V must be square with even dimension")
    m = v.shape[0] // 2
    lam = _ladder_to_quadrature(m)
    vc = lam.conj().T @ v @ lam
    return ComplexCovariance(vc[:m, :m], vc[:m, m:])


@dataclass(frozen=True)
class WilliamsonResult:
    """V = S diag(D, D) S^T with S symplectic and D_i = N_i + 1/2."""

    D: np.ndarray
    S: np.ndarray
    degenerate: bool


def williamson(v: np.ndarray, tol: float = 1e-8) -> WilliamsonResult:
    """Williamson normal form of a positive-definite real symmetric matrix.

    Built from the real Schur form of V^(-1/2) Omega V^(-1/2), whose
    antisymmetric 2x2 blocks carry 1/D_i; the assembled congruence is
    symplectic by construction up to rounding, which is verified.
    """
    v = np.asarray(v, dtype=float)
    v = 0.5 * (v + v.T)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
        raise ValidationError("V must be square with even dimension")
    m = v.shape[0] // 2
    evals = np.linalg.eigvalsh(v)
    if evals.min() <= 0:
        raise ValidationError(f"V not positive definite: min eigenvalue {evals.min():.3e}")
    omega = symplectic_form(m)
    v_mhalf = np.real(sqrtm(np.linalg.inv(v)))
    kernel = v_mhalf @ omega @ v_mhalf
    kernel = 0.5 * (kernel - kernel.T)
    t, q = schur(kernel, output="real")
    # normalize every 2x2 block to have a positive upper-right entry
    flip = []
    mu = []
    for k in range(m):
        val = t[2 * k, 2 * k + 1]
        flip.append(np.array([[0.0, 1.0], [1.0, 0.0]]) if val < 0 else np.eye(2))
        mu.append(abs(val))
    q = q @ block_diag(*flip)
    d = 1.0 / np.array(mu)
    # interleaved (x1, p1, ...) -> grouped (x.., p..) permutation
    perm = np.zeros((2 * m, 2 * m))
    for k in range(m):
        perm[k, 2 * k] = 1.0
        perm[m + k, 2 * k + 1] = 1.0
    dhalf = block_diag(*[np.eye(2) * np.sqrt(dk) for dk in d])
    r_inv = perm @ dhalf @ q.T @ v_mhalf
    s = np.linalg.inv(r_inv)
    order = np.argsort(d)[::-1]
    reorder = np.zeros((2 * m, 2 * m))
    for new, old in enumerate(order):
        reorder[old, new] = 1.0
        reorder[m + old, m + new] = 1.0
    s = s @ reorder
    d = d[order]
    resid_sym = np.abs(s @ omega @ s.T - omega).max()
    resid_rec = np.abs(s @ np.diag(np.concatenate([d, d])) @ s.T - v).max()
    if resid_sym > tol or resid_rec > max(tol, 1e-8 * np.abs(v).max()):
        raise NumericalError(
            f"williamson failed: symplectic residual {resid_sym:.2e}, "
            f"reconstruction residual {resid_rec:.2e}")
    degenerate = bool(np.any(np.abs(np.diff(d)) < 1e-7 * (1 + d.max())))
    return WilliamsonResult(d, s, degenerate)


def symplectic_spectrum(v: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues via |eig(Omega V)|, sorted descending."""
    m = v.shape[0] // 2
    ev = np.linalg.eigvals(symplectic_form(m) @ v)
    d = np.sort(np.abs(ev))[::-1]
    return d[::2]


def check_physicality(v: np.ndarray, tol: float = 1e-9) -> float:
    """Smallest symplectic eigenvalue; raises if below the vacuum limit 1/2."""
    dmin = float(symplectic_spectrum(v).min())
    if dmin < 0.5 - tol:
        raise ValidationError(
            f"covariance violates the uncertainty bound: min symplectic "
            f"eigenvalue {dmin:.6f} < 1/2")
    return dmin


def takagi(sym: np.ndarray, tol: float = 1e-12):
    """Autonne-Takagi factorization sym = U diag(s) U^T of a complex symmetric matrix."""
    sym = np.asarray(sym, dtype=complex)
    if np.abs(sym - sym.T).max() > 1e-8 * (1 + np.abs(sym).max()):
        raise ValidationError("takagi needs a symmetric matrix")
    n = sym.shape[0]
    if np.abs(sym).max() < tol:
        return np.zeros(n), np.eye(n, dtype=complex)
    u, s, vh = np.linalg.svd(sym)
    w = vh.conj().T
    # group (nearly) degenerate singular values and fix phases per block
    groups = []
    start = 0
    for k in range(1, n + 1):
        if k == n or abs(s[k] - s[start]) > 1e-8 * (1 + s[0]):
            groups.append(list(range(start, k)))
            start = k
    blocks = []
    for grp in groups:
        sub = u[:, grp].T @ w[:, grp]
        blocks.append(sqrtm(sub.astype(complex)))
    qb = block_diag(*blocks)
    uu = u @ qb.conj()
    return s.copy(), uu


def squeeze_from_blocks(e_block: np.ndarray, f_block: np.ndarray):
    """(z, phi) with E = cosh(r) e^{i phi}, F = -sinh(r) e^{i theta} e^{-i phi^T}."""
    p2 = e_block @ e_block.conj().T
    vals, vecs = np.linalg.eigh(0.5 * (p2 + p2.conj().T))
    vals = np.clip(vals, 1.0, None)
    cosh_r = (vecs * np.sqrt(vals)) @ vecs.conj().T
    cosh_inv = (vecs / np.sqrt(vals)) @ vecs.conj().T
    expiphi = cosh_inv @ e_block
    y = -f_block @ expiphi.T  # sinh(r) e^{i theta}, symmetric
    y = 0.5 * (y + y.T)
    sv, uu = takagi(y)
    z = (uu * np.arcsinh(sv)) @ uu.T
    phi = rotation_from_unitary(expiphi)
    return z, phi


def params_from_covariance(cov: ComplexCovariance, alpha: np.ndarray,
                           tol: float = 1e-8) -> GaussianParams:
    """Gaussian parameters (up to gauge) reproducing a physical covariance."""
    v = complex_to_real_cov(cov)
    check_physicality(v)
    res = williamson(v, tol=max(tol, 1e-8))
    m = cov.modes
    occupations = np.clip(res.D - 0.5, 0.0, None)
    lam = _ladder_to_quadrature(m)
    l_complex = lam.conj().T @ res.S @ lam
    e_block = l_complex[:m, :m]
    f_block = l_complex[:m, m:]
    z, phi = squeeze_from_blocks(e_block, f_block)
    return GaussianParams(np.asarray(alpha, dtype=complex), z, phi, occupations)


def measurement_residual(params: GaussianParams, m: MeasurementSet) -> float:
    """Worst absolute disagreement of a parameter set with measured observables."""
    mom = derive_moments(params)
    worst = 0.0
    if m.nbar is not None:
        worst = max(worst, float(np.abs(mom.nbar - m.nbar).max()))
    if m.g2 is not None:
        worst = max(worst, float(np.abs(g2_tensor(mom) - m.g2).max()))
    if m.g1_abs is not None:
        worst = max(worst, float(np.abs(np.abs(mom.g1) - m.g1_abs).max()))
    if m.g1_phase is not None:
        dphi = wrap_angle(np.angle(mom.g1) - m.g1_phase)
        mask = m.g1_abs > 1e-9 if m.g1_abs is not None else np.ones_like(dphi, bool)
        np.fill_diagonal(mask, False)
        if mask.any():
            worst = max(worst, float(np.abs(dphi[mask]).max()))
    if m.g3:
        g3 = g3_tensor(mom, list(m.g3.keys()))
        worst = max(worst, max(abs(g3[k] - v) for k, v in m.g3.items()))
    return worst


def recon_displaced_thermal_multi(m: MeasurementSet, tol: float = 1e-7) -> ReconstructedState:
    """Displacements, thermal occupations and mode rotation of a non-squeezed state.

    Moduli from the diagonal g2, phases from the two-matching-index g3 system,
    then the hermitian matrix sqrt(nbar_i nbar_j) g1_ij - alpha_i* alpha_j is
    diagonalized: eigenvalues are the occupations, eigenvectors the rotation.
    """
    if m.nbar is None or m.g2 is None or m.g1_abs is None:
        raise ValidationError("need nbar, g2 and g1 for reconstruction")
    mm = m.modes
    alpha_abs = np.sqrt(m.nbar) * np.clip(2.0 - np.diag(m.g2), 0.0, None) ** 0.25
    if np.abs(np.diag(m.g2) - 1.0).max() <= max(10 * tol, 1e-8):
        # displaced vacuum: the cosine system is degenerate (c = 1 identically)
        # but g1 carries the phases directly, g1_ij = e^{i(phi_j - phi_i)}
        phases = m.g1_phase[0, :].copy()
        alpha = alpha_abs * np.exp(1j * phases)
        params = GaussianParams(alpha, np.zeros((mm, mm)), np.zeros((mm, mm)),
                                np.zeros(mm))
        ambiguity = Ambiguity(notes=("displaced vacuum: phases read off g1, "
                                     "global displacement phase fixed by phi_1 = 0",))
        return ReconstructedState(params, ambiguity,
                                  residual=float(measurement_residual(params, m)))
    c = _extract_ns_cosines(m)
    solutions = solve_displacement_phases(
        PhaseSystem(DISPLACEMENT, m.g1_phase, c), tol=max(100 * tol, 1e-8))
    if not solutions:
        raise SectorMismatchError("displacement-phase system unsolvable: "
                                  "data incompatible with a non-squeezed state")
    candidates = []
    g1 = m.g1_complex()
    root = np.sqrt(np.outer(m.nbar, m.nbar))
    for sol in solutions:
        alpha = alpha_abs * np.exp(1j * sol.phases)
        h = (root * g1 - np.outer(alpha.conj(), alpha)).T  # K_ji = G_ij - conj(a_i) a_j
        h = 0.5 * (h + h.conj().T)
        occupations, vecs = np.linalg.eigh(h)
        if occupations.min() < -100 * tol:
            continue
        occupations = np.clip(occupations, 0.0, None)
        phi = rotation_from_unitary(vecs)
        params = GaussianParams(alpha, np.zeros((mm, mm)), phi, occupations)
        candidates.append((measurement_residual(params, m), params))
    if not candidates:
        raise InconsistentDataError(
            "thermal matrix not positive semidefinite for any phase solution")
    candidates.sort(key=lambda t: t[0])
    keep = [c for c in candidates if c[0] <= max(100 * tol, 10 * candidates[0][0])]
    notes = ["global displacement phase fixed by gauge phi_1 = 0",
             "local phases of the rotation in degenerate thermal eigenspaces are free"]
    if len(keep) > 1:
        notes.append(f"{len(keep)} discrete phase solutions reproduce the data")
    ambiguity = Ambiguity(z2_reflection=len(keep) > 1,
                          discrete_solutions=tuple(p for _, p in keep[1:]),
                          notes=tuple(notes))
    return ReconstructedState(keep[0][1], ambiguity, residual=float(keep[0][0]))


def recon_squeezed_thermal_multi(m: MeasurementSet, tol: float = 1e-7) -> ReconstructedState:
    """Squeeze matrix, rotation and occupations of a non-displaced state.

    Covariance moduli from g2/g1, phases from the covariance phase system,
    then Williamson on the assembled covariance matrix.
    """
    if m.nbar is None or m.g2 is None or m.g1_abs is None:
        raise ValidationError("need nbar, g2 and g1 for reconstruction")
    mm = m.modes
    root = np.sqrt(np.outer(m.nbar, m.nbar))
    q = m.g2 - m.g1_abs**2 - 1.0
    np.fill_diagonal(q, np.diag(m.g2) - 2.0)
    if q.min() < -100 * tol:
        raise InconsistentDataError(
            f"g2_ij - |g1_ij|^2 - 1 = {q.min():.3e} < 0: covariance moduli undefined")
    cov_abs = root * np.sqrt(np.clip(q, 0.0, None))
    if mm == 1:
        solutions = [None]
    else:
        c = _extract_nd_cosines(m)
        solutions = solve_covariance_phases(
            PhaseSystem(COVARIANCE, m.g1_phase, c), tol=max(100 * tol, 1e-8))
        if not solutions:
            raise SectorMismatchError("covariance-phase system unsolvable: "
                                      "data incompatible with a non-displaced state")
    g1 = m.g1_complex()
    candidates = []
    for sol in solutions:
        theta = sol.theta if sol is not None else np.full((1, 1), np.pi)
        cov = cov_abs * np.exp(1j * theta)
        coherence = root * g1
        a_block = coherence.conj() + 0.5 * np.eye(mm)
        try:
            params = params_from_covariance(ComplexCovariance(a_block, cov),
                                            np.zeros(mm, dtype=complex))
        except (ValidationError, NumericalError):
            continue
        candidates.append((measurement_residual(params, m), params))
    if not candidates:
        raise InconsistentDataError("no covariance-phase solution yields a physical state")
    candidates.sort(key=lambda t: t[0])
    keep = [c for c in candidates if c[0] <= max(100 * tol, 10 * candidates[0][0])]
    notes = ["global squeeze phase fixed by gauge Theta_11 = 0",
             "degenerate-occupation rotations are free"]
    if len(keep) > 1:
        notes.append(f"{len(keep)} discrete covariance-phase solutions reproduce the data")
    ambiguity = Ambiguity(z2_reflection=len(keep) > 1,
                          discrete_solutions=tuple(p for _, p in keep[1:]),
                          notes=tuple(notes))
    return ReconstructedState(keep[0][1], ambiguity, residual=float(keep[0][0]))


def recon_displaced_squeezed_multi(m_minus: MeasurementSet, m_ref: MeasurementSet,
                                   ref_port: str = "orig",
                                   tol: float = 1e-7) -> ReconstructedState:
    """Reconstruct a displaced squeezed thermal state from two-port beam-splitter data.

    ``m_minus`` is the zero-mean output (must classify NonDisplaced); ``m_ref``
    the original state (``ref_port="orig"``) or the bright port
    (``ref_port="plus"``).  Displacement moduli come from nbar differences,
    phases from the diagonal g2 of the reference state with their cosine
    ambiguities pruned by off-diagonal g2 and g1 entries.
    """
    if ref_port not in ("orig", "plus"):
        raise ValidationError("ref_port must be 'orig' or 'plus'")
    verdict = classify_multimode(m_minus, tol=max(tol, 1e-7)) if m_minus.modes > 1 else None
    if verdict is not None and verdict.sector != NON_DISPLACED:
        raise SectorMismatchError(
            f"zero-mean port classifies as {verdict.sector}, not NonDisplaced")
    base = recon_squeezed_thermal_multi(m_minus, tol=tol)
    cov_solutions = (base.params,) + base.ambiguity.discrete_solutions
    if m_ref.nbar is None or m_ref.g2 is None:
        raise ValidationError("reference port needs nbar and g2")
    scale = 1.0 if ref_port == "orig" else 2.0
    alpha2 = (m_ref.nbar - m_minus.nbar) / scale
    if alpha2.min() < -100 * tol:
        raise InconsistentDataError("negative inferred |alpha_i|^2 from nbar difference")
    alpha2 = np.clip(alpha2, 0.0, None)
    alpha_abs = np.sqrt(alpha2)
    mm = m_minus.modes
    results = []
    for params_cov in cov_solutions:
        mom_cov = derive_moments(params_cov)
        candidates_per_mode = []
        for i in range(mm):
            cov_ii = mom_cov.cov[i, i]
            ai_ref = alpha_abs[i] * np.sqrt(scale)
            if alpha2[i] < 1e-12:
                candidates_per_mode.append([0.0])
                continue
            if abs(cov_ii) < 1e-12:
                # diagonal g2 carries no phase information for this mode
                candidates_per_mode.append([None])
                continue
            nbar_ref_i = m_ref.nbar[i]
            val = (nbar_ref_i**2 * (m_ref.g2[i, i] - 2.0) - abs(cov_ii) ** 2
                   + ai_ref**4) / (2.0 * ai_ref**2 * abs(cov_ii))
            if abs(val) > 1.0 + max(100 * tol, 1e-9):
                continue
            w = np.arccos(np.clip(val, -1.0, 1.0))
            theta_ii = np.angle(cov_ii)
            base_phi = [0.5 * (theta_ii - w), 0.5 * (theta_ii + w)]
            cands = []
            for b in base_phi:
                for shift in (0.0, np.pi):
                    cands.append(wrap_angle(b + shift))
            candidates_per_mode.append(sorted(set(np.round(cands, 12))))
        if len(candidates_per_mode) != mm:
            continue
        results.extend(_assemble_displaced(m_ref, params_cov, alpha_abs,
                                           candidates_per_mode, scale, tol))
    if not results:
        raise InconsistentDataError("no displacement-phase assignment reproduces both ports")
    results.sort(key=lambda t: t[0])
    keep = [rp for rp in results if rp[0] <= max(100 * tol, 10 * results[0][0])]
    notes = ["displacement phases carry residual cosine ambiguities where "
             "off-diagonal data cannot prune them"]
    ambiguity = Ambiguity(z2_reflection=len(keep) > 1,
                          discrete_solutions=tuple(p for _, p in keep[1:]),
                          notes=tuple(notes))
    return ReconstructedState(keep[0][1], ambiguity, residual=float(keep[0][0]))


def _assemble_displaced(m_ref, params_cov, alpha_abs, candidates_per_mode, scale, tol):
    """Try all per-mode phase candidates against the reference-port data."""
    from itertools import product as iproduct

    mm = params_cov.modes
    expanded = []
    for cands in candidates_per_mode:
        expanded.append([0.0] if cands == [None] else cands)
    results = []
    for combo in iproduct(*expanded):
        alpha = alpha_abs * np.exp(1j * np.asarray(combo, dtype=float))
        params = GaussianParams(np.sqrt(scale) * alpha, params_cov.squeeze,
                                params_cov.rotation, params_cov.thermal)
        res = measurement_residual(params, m_ref)
        if res <= max(1000 * tol, 1e-5):
            stored = GaussianParams(alpha, params_cov.squeeze, params_cov.rotation,
                                    params_cov.thermal)
            results.append((res, stored))
    return results
