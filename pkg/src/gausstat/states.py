"""Gaussian state parameters, Bogoliubov data, derived moments and correlation tensors.

A state is parametrized as displacement, squeezing, rotation applied to an
uncorrelated thermal state: D(alpha) S(z) R(phi) rho_th R† S† D†, with z a
complex symmetric matrix (left polar z = r e^{i theta}), phi hermitian and
per-mode thermal occupations N_k >= 0.  The induced map on the stacked ladder
vector b = (a, a†) is affine, b -> L b + A, with

    E = cosh(r) e^{i phi},   F = -sinh(r) e^{i theta} e^{-i phi^T},
    L = [[E, F], [F*, E*]],  A = (alpha, alpha*).

All second moments follow from L acting on the thermal second moments, which
is how ``derive_moments`` populates mean photon numbers, first-order
coherences g1, and the annihilation covariances cov_ij.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import logm

from .errors import UndefinedCorrelationError, ValidationError
from .words import MomentTable

_HERM_TOL = 1e-10


def _as_complex_matrix(x, m: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    if arr.shape != (m, m):
        raise ValidationError(f"{name} must be {m}x{m}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class GaussianParams:
    """Full parameter set (alpha, z, phi, N) of a multimode Gaussian state.

    Degree-of-freedom count is 2M^2 + 3M: M thermal occupations, 2M real
    displacement parameters, M^2 + M from the symmetric squeeze matrix and
    M^2 - M physically relevant rotation parameters (the diagonal of phi is a
    global phase on each mode of the thermal seed and drops out).
    """

    alpha: np.ndarray
    squeeze: np.ndarray
    rotation: np.ndarray
    thermal: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=complex))
        m = alpha.shape[0]
        if m < 1:
            raise ValidationError("need at least one mode")
        squeeze = _as_complex_matrix(self.squeeze, m, "squeeze")
        rotation = _as_complex_matrix(self.rotation, m, "rotation")
        thermal = np.atleast_1d(np.asarray(self.thermal, dtype=float))
        if thermal.shape != (m,):
            raise ValidationError(f"thermal must have length {m}")
        scale = 1.0 + np.abs(squeeze).max()
        if np.abs(squeeze - squeeze.T).max() > _HERM_TOL * scale:
            raise ValidationError("squeeze matrix z must be symmetric")
        scale = 1.0 + np.abs(rotation).max()
        if np.abs(rotation - rotation.conj().T).max() > _HERM_TOL * scale:
            raise ValidationError("rotation matrix phi must be hermitian")
        if thermal.min() < -1e-12:
            raise ValidationError("thermal occupations must be nonnegative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "squeeze", 0.5 * (squeeze + squeeze.T))
        object.__setattr__(self, "rotation", 0.5 * (rotation + rotation.conj().T))
        object.__setattr__(self, "thermal", np.clip(thermal, 0.0, None))

    @property
    def modes(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def vacuum(cls, modes: int) -> "GaussianParams":
        z = np.zeros((modes, modes), dtype=complex)
        return cls(np.zeros(modes, dtype=complex), z, z.copy(), np.zeros(modes))

    @classmethod
    def single_mode(cls, alpha=0.0, r=0.0, theta=0.0, occupation=0.0) -> "GaussianParams":
        z = np.array([[r * np.exp(1j * theta)]], dtype=complex)
        return cls(
            np.array([alpha], dtype=complex),
            z,
            np.zeros((1, 1), dtype=complex),
            np.array([occupation], dtype=float),
        )


def polar_squeeze(z: np.ndarray):
    """Left polar decomposition z = r e^{i theta} of a symmetric matrix.

    Returns (r, e^{i theta}) with r hermitian positive semidefinite.  Columns
    of the phase factor belonging to zero singular values carry no physics and
    are fixed by the SVD convention.
    """
    w, sv, vh = np.linalg.svd(z)
    r = (w * sv) @ w.conj().T
    return 0.5 * (r + r.conj().T), w @ vh


def _unitary_from_hermitian(phi: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (phi + phi.conj().T))
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


@dataclass(frozen=True)
class BogoliubovMap:
    """Blocks E, F of the linear part and the stacked displacement (alpha, alpha*)."""

    E: np.ndarray
    F: np.ndarray
    disp: np.ndarray

    @property
    def modes(self) -> int:
        return self.E.shape[0]

    @property
    def L(self) -> np.ndarray:
        return np.block([[self.E, self.F], [self.F.conj(), self.E.conj()]])

    def symplectic_defect(self) -> float:
        """max(|E E† - F F† - 1|, |E F^T - F E^T|); zero for a valid map."""
        m = self.modes
        d1 = self.E @ self.E.conj().T - self.F @ self.F.conj().T - np.eye(m)
        d2 = self.E @ self.F.T - self.F @ self.E.T
        return max(np.abs(d1).max(), np.abs(d2).max())


def bogoliubov_map(params: GaussianParams) -> BogoliubovMap:
    """Bogoliubov blocks of the unitary D(alpha) S(z) R(phi)."""
    r, expith = polar_squeeze(params.squeeze)
    rvals, rvecs = np.linalg.eigh(r)
    rvals = np.clip(rvals, 0.0, None)
    cosh_r = (rvecs * np.cosh(rvals)) @ rvecs.conj().T
    sinh_r = (rvecs * np.sinh(rvals)) @ rvecs.conj().T
    expiphi = _unitary_from_hermitian(params.rotation)
    E = cosh_r @ expiphi
    F = -sinh_r @ expith @ expiphi.conj()  # e^{-i phi^T} = conj(e^{i phi})
    disp = np.concatenate([params.alpha, params.alpha.conj()])
    return BogoliubovMap(E, F, disp)


@dataclass(frozen=True)
class MomentSummary:
    """Derived first/second moments: mean photon numbers, g1, cov, displacements.

    ``g1`` is hermitian with unit diagonal where defined; entries touching a
    mode with nbar = 0 are NaN (undefined, never infinite).  ``cov`` is the
    symmetric matrix of centered <a_i a_j> covariances.
    """

    nbar: np.ndarray
    g1: np.ndarray
    cov: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nbar", np.atleast_1d(np.asarray(self.nbar, dtype=float)))
        object.__setattr__(self, "g1", np.asarray(self.g1, dtype=complex))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=complex))
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, dtype=complex)))

    @property
    def modes(self) -> int:
        return self.nbar.shape[0]

    def coherence_matrix(self) -> np.ndarray:
        """Unnormalized hermitian G with G_ij = <a_i† a_j> and G_ii = nbar_i."""
        root = np.sqrt(np.outer(self.nbar, self.nbar))
        g = self.g1 * root
        return np.where(np.isfinite(g), g, 0.0)

    def centered_coherence(self) -> np.ndarray:
        """<a_i† a_j> - alpha_i* alpha_j."""
        return self.coherence_matrix() - np.outer(self.alpha.conj(), self.alpha)

    def to_moment_table(self) -> MomentTable:
        """Uncentered first/second moments for the moment kernel."""
        aa = self.cov + np.outer(self.alpha, self.alpha)
        return MomentTable(self.alpha, aa, self.coherence_matrix())

    @classmethod
    def from_unnormalized(cls, coherence: np.ndarray, cov: np.ndarray,
                          alpha: np.ndarray) -> "MomentSummary":
        coherence = np.asarray(coherence, dtype=complex)
        nbar = np.diag(coherence).real.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = coherence / np.sqrt(np.outer(nbar, nbar))
        g1[~np.isfinite(g1)] = np.nan
        return cls(nbar, g1, np.asarray(cov, dtype=complex), np.asarray(alpha, dtype=complex))


def _thermal_second_moments(occupations: np.ndarray) -> np.ndarray:
    """<b_mu b_nu> of the thermal seed in the stacked (a, a†) basis."""
    m = occupations.shape[0]
    t = np.zeros((2 * m, 2 * m), dtype=complex)
    t[:m, m:] = np.diag(occupations + 1.0)
    t[m:, :m] = np.diag(occupations)
    return t


def derive_moments(params: GaussianParams) -> MomentSummary:
    """Mean photon numbers, g1, covariances and displacements of the state."""
    m = params.modes
    bog = bogoliubov_map(params)
    second = bog.L @ _thermal_second_moments(params.thermal) @ bog.L.T
    cov = second[:m, :m]
    centered_g = second[m:, :m]  # <δa_i† δa_j> at row i, column j
    coherence = centered_g + np.outer(params.alpha.conj(), params.alpha)
    return MomentSummary.from_unnormalized(coherence, 0.5 * (cov + cov.T), params.alpha)


def _require_occupied(moments: MomentSummary, modes) -> None:
    for i in modes:
        if not (moments.nbar[i] > 0):
            raise UndefinedCorrelationError(
                f"normalized correlations undefined: mode {i} has nbar = 0"
            )


def g2_tensor(moments: MomentSummary) -> np.ndarray:
    """Second-order correlation matrix.

    g2_ij = 1 + |g1_ij|^2 + (|cov_ij + alpha_i alpha_j|^2
            - 2 |alpha_i|^2 |alpha_j|^2) / (nbar_i nbar_j).
    """
    m = moments.modes
    _require_occupied(moments, range(m))
    al = moments.alpha
    denom = np.outer(moments.nbar, moments.nbar)
    mixed = np.abs(moments.cov + np.outer(al, al)) ** 2
    disp = 2.0 * np.outer(np.abs(al) ** 2, np.abs(al) ** 2)
    g2 = 1.0 + np.abs(moments.g1) ** 2 + (mixed - disp) / denom
    return 0.5 * (g2 + g2.T).real


def g3_value(moments: MomentSummary, i: int, j: int, k: int) -> float:
    """Third-order correlation g3_ijk from at most second-order moments.

    Direct evaluation of the sixth-order decomposition specialised to the
    g3 word; the triple is sorted first so permutation symmetry is exact.
    """
    i, j, k = sorted((i, j, k))
    _require_occupied(moments, (i, j, k))
    n = moments.nbar
    g1 = moments.g1
    cov = moments.cov
    al = moments.alpha

    def re(x):
        return float(np.real(x))

    aa = np.abs(al) ** 2
    val = (
        1.0
        + abs(g1[i, j]) ** 2 + abs(g1[j, k]) ** 2 + abs(g1[i, k]) ** 2
        + 2.0 * re(g1[i, j] * g1[j, k] * g1[k, i])
        + (abs(cov[i, j]) ** 2 - aa[i] * aa[j]) / (n[i] * n[j])
        + (abs(cov[j, k]) ** 2 - aa[j] * aa[k]) / (n[j] * n[k])
        + (abs(cov[i, k]) ** 2 - aa[i] * aa[k]) / (n[i] * n[k])
        + (2.0 - 4.0 * aa[k] / n[k]) * re(cov[i, j] * np.conj(al[i] * al[j])) / (n[i] * n[j])
        + (2.0 - 4.0 * aa[j] / n[j]) * re(cov[i, k] * np.conj(al[i] * al[k])) / (n[i] * n[k])
        + (2.0 - 4.0 * aa[i] / n[i]) * re(cov[j, k] * np.conj(al[j] * al[k])) / (n[j] * n[k])
        + 4.0 * aa[i] * aa[j] * aa[k] / (n[i] * n[j] * n[k])
        + 2.0 * re(g1[i, j] * np.conj(cov[j, k]) * cov[i, k]) / (n[k] * np.sqrt(n[i] * n[j]))
        + 2.0 * re(g1[j, k] * np.conj(cov[i, k]) * cov[i, j]) / (n[i] * np.sqrt(n[j] * n[k]))
        + 2.0 * re(g1[k, i] * np.conj(cov[i, j]) * cov[j, k]) / (n[j] * np.sqrt(n[i] * n[k]))
        - 2.0 * aa[k] / n[k] * re(g1[i, j] * al[i] * np.conj(al[j])) / np.sqrt(n[i] * n[j])
        - 2.0 * aa[i] / n[i] * re(g1[j, k] * al[j] * np.conj(al[k])) / np.sqrt(n[j] * n[k])
        - 2.0 * aa[j] / n[j] * re(g1[k, i] * al[k] * np.conj(al[i])) / np.sqrt(n[i] * n[k])
        + 2.0 * (re(g1[i, j] * al[i] * al[k] * np.conj(cov[j, k]))
                 + re(g1[i, j] * np.conj(al[j] * al[k]) * cov[i, k])) / (n[k] * np.sqrt(n[i] * n[j]))
        + 2.0 * (re(g1[j, k] * al[i] * al[j] * np.conj(cov[i, k]))
                 + re(g1[j, k] * np.conj(al[i] * al[k]) * cov[i, j])) / (n[i] * np.sqrt(n[j] * n[k]))
        + 2.0 * (re(g1[k, i] * al[j] * al[k] * np.conj(cov[i, j]))
                 + re(g1[k, i] * np.conj(al[i] * al[j]) * cov[j, k])) / (n[j] * np.sqrt(n[i] * n[k]))
    )
    return float(val)


def g3_tensor(moments: MomentSummary, triples=None) -> dict[tuple[int, int, int], float]:
    """g3 for the requested triples (default: all i <= j <= k)."""
    m = moments.modes
    if triples is None:
        triples = [(i, j, k) for i in range(m) for j in range(i, m) for k in range(j, m)]
    return {tuple(t): g3_value(moments, *t) for t in triples}


def single_mode_g2_g3(params: GaussianParams) -> tuple[float, float]:
    """Convenience: (g2, g3) of a single-mode state."""
    if params.modes != 1:
        raise ValidationError("single_mode_g2_g3 needs a single-mode state")
    mom = derive_moments(params)
    return float(g2_tensor(mom)[0, 0]), g3_value(mom, 0, 0, 0)


def no_click_probability_single(params: GaussianParams) -> float:
    """Vacuum overlap of a single-mode Gaussian state (closed form).

    p0 = exp(-[1 + (2N+1)cosh 2r + (2N+1)sinh 2r cos(2 phi_d - theta)] |alpha|^2
         / [2N^2 + 2(2N+1)cosh^2 r]) / sqrt(N^2 + (2N+1)cosh^2 r),
    with phi_d the displacement phase and theta the squeeze phase.  Multimode
    states are delegated to the Fock oracle.
    """
    if params.modes != 1:
        raise ValidationError("closed-form no-click probability is single-mode only")
    z = complex(params.squeeze[0, 0])
    r, theta = abs(z), float(np.angle(z))
    occ = float(params.thermal[0])
    alpha = complex(params.alpha[0])
    phi_d = float(np.angle(alpha)) if alpha != 0 else 0.0
    tp1 = 2.0 * occ + 1.0
    denom = np.sqrt(occ**2 + tp1 * np.cosh(r) ** 2)
    expo = (1.0 + tp1 * np.cosh(2 * r) + tp1 * np.sinh(2 * r) * np.cos(2 * phi_d - theta))
    expo *= abs(alpha) ** 2 / (2.0 * occ**2 + 2.0 * tp1 * np.cosh(r) ** 2)
    return float(np.exp(-expo) / denom)


def mode_vacuum_probability(moments: MomentSummary, mode: int) -> float:
    """Vacuum probability of one mode of a multimode state from its reduced moments.

    The single-mode marginal of a Gaussian state is Gaussian; its effective
    (r, N) follow from |cov| and the centered occupation exactly as in the
    squeezed-thermal inversion, after which the closed form above applies.
    """
    i = mode
    alpha = complex(moments.alpha[i])
    cov = complex(moments.cov[i, i])
    m_c = float(moments.nbar[i] - abs(alpha) ** 2)
    disc = (2 * m_c + 1.0) ** 2 - 4.0 * abs(cov) ** 2
    if disc < -1e-12:
        raise ValidationError("reduced mode violates single-mode physicality")
    root = np.sqrt(max(disc, 0.0))
    occ = 0.5 * root - 0.5
    sinh2 = (2 * m_c + 1.0) / (2.0 * root) - 0.5 if root > 0 else 0.0
    r = float(np.arcsinh(np.sqrt(max(sinh2, 0.0))))
    theta = float(np.angle(-cov)) if abs(cov) > 0 else 0.0
    # only the relative phase 2 phi_d - theta matters; rotate theta away
    phi_rel = float(np.angle(alpha)) - 0.5 * theta if alpha != 0 else 0.0
    eff = GaussianParams.single_mode(abs(alpha) * np.exp(1j * phi_rel), r, 0.0, max(occ, 0.0))
    return no_click_probability_single(eff)


def balanced_beamsplitter_duplicate(params: GaussianParams):
    """Interfere the state with an identical copy on a balanced beam splitter.

    The joint Bogoliubov block L ⊕ L commutes with the 50:50 transformation,
    so both outputs keep the input covariance structure and are uncorrelated;
    the displacement concentrates as sqrt(2) alpha in one port and vanishes in
    the other.  Returns (plus_port, minus_port).
    """
    plus = GaussianParams(np.sqrt(2.0) * params.alpha, params.squeeze,
                          params.rotation, params.thermal)
    minus = GaussianParams(np.zeros_like(params.alpha), params.squeeze,
                           params.rotation, params.thermal)
    return plus, minus


def apply_uniform_loss(moments: MomentSummary, eta: float) -> MomentSummary:
    """Uniform linear loss at the moment level: alpha -> sqrt(eta) alpha, cov -> eta cov.

    Invented plumbing for invariance tests; normalized g(n) are untouched by
    construction while every loss-sensitive observable scales.
    """
    if not 0.0 < eta <= 1.0:
        raise ValidationError("loss transmission eta must lie in (0, 1]")
    return MomentSummary(eta * moments.nbar, moments.g1, eta * moments.cov,
                         np.sqrt(eta) * moments.alpha)


# --- reordering identities for the fundamental unitaries -----------------

def rotate_displacement(phi: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """R†(phi) D(alpha) R(phi) = D(e^{-i phi} alpha)."""
    u = _unitary_from_hermitian(np.asarray(phi, dtype=complex))
    return u.conj().T @ np.asarray(alpha, dtype=complex)


def rotate_squeeze(phi: np.ndarray, z: np.ndarray) -> np.ndarray:
    """R†(phi) S(z) R(phi) = S(e^{-i phi} z e^{-i phi^T})."""
    u = _unitary_from_hermitian(np.asarray(phi, dtype=complex))
    zz = np.asarray(z, dtype=complex)
    return u.conj().T @ zz @ u.conj()


def squeeze_displacement(z: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """S†(z) D(alpha) S(z) = D(cosh(r) alpha + sinh(r) e^{i theta} alpha*)."""
    r, expith = polar_squeeze(np.asarray(z, dtype=complex))
    vals, vecs = np.linalg.eigh(r)
    cosh_r = (vecs * np.cosh(vals)) @ vecs.conj().T
    sinh_r = (vecs * np.sinh(vals)) @ vecs.conj().T
    alpha = np.asarray(alpha, dtype=complex)
    return cosh_r @ alpha + sinh_r @ expith @ alpha.conj()


def _elementary_bogoliubov(kind: str, value, modes: int) -> BogoliubovMap:
    eye = np.eye(modes, dtype=complex)
    zero = np.zeros((modes, modes), dtype=complex)
    if kind == "D":
        alpha = np.atleast_1d(np.asarray(value, dtype=complex))
        return BogoliubovMap(eye, zero, np.concatenate([alpha, alpha.conj()]))
    if kind == "R":
        u = _unitary_from_hermitian(np.asarray(value, dtype=complex))
        return BogoliubovMap(u, zero, np.zeros(2 * modes, dtype=complex))
    if kind == "S":
        z = np.asarray(value, dtype=complex)
        r, expith = polar_squeeze(z)
        vals, vecs = np.linalg.eigh(r)
        cosh_r = (vecs * np.cosh(vals)) @ vecs.conj().T
        sinh_r = (vecs * np.sinh(vals)) @ vecs.conj().T
        return BogoliubovMap(cosh_r, -sinh_r @ expith, np.zeros(2 * modes, dtype=complex))
    raise ValidationError(f"unknown unitary kind {kind!r}")


def compose_bogoliubov(maps) -> BogoliubovMap:
    """Bogoliubov data of a product U_1 U_2 ... (applied right to left to states)."""
    maps = list(maps)
    m = maps[0].modes
    L = np.eye(2 * m, dtype=complex)
    A = np.zeros(2 * m, dtype=complex)
    for bm in maps:
        A = L @ bm.disp + A
        L = L @ bm.L
    return BogoliubovMap(L[:m, :m], L[:m, m:], A)


def canonical_order(ops: list[tuple[str, np.ndarray]], modes: int,
                    thermal=None) -> GaussianParams:
    """Rewrite a product of D/S/R factors (each at most once) in canonical D·S·R order.

    ``ops`` lists (kind, value) pairs left to right as the operators multiply.
    Uses the three commutation identities: rotations pass through displacements
    and squeezings by phase conjugation, and squeezings map displacements to
    cosh(r) alpha - sinh(r) e^{i theta} alpha* when moved to the right.
    """
    kinds = [k for k, _ in ops]
    if len(set(kinds)) != len(kinds):
        raise ValidationError("canonical_order expects each of D, S, R at most once")
    alpha = np.zeros(modes, dtype=complex)
    z = np.zeros((modes, modes), dtype=complex)
    phi = np.zeros((modes, modes), dtype=complex)
    seen: list[tuple[str, np.ndarray]] = []
    for kind, value in ops:
        value = np.asarray(value, dtype=complex)
        if kind == "D":
            beta = np.atleast_1d(value)
            # push the new displacement left through what has been placed
            for prev_kind, prev_val in reversed(seen):
                if prev_kind == "R":
                    u = _unitary_from_hermitian(prev_val)
                    beta = u @ beta
                elif prev_kind == "S":
                    r, expith = polar_squeeze(prev_val)
                    vals, vecs = np.linalg.eigh(r)
                    cosh_r = (vecs * np.cosh(vals)) @ vecs.conj().T
                    sinh_r = (vecs * np.sinh(vals)) @ vecs.conj().T
                    beta = cosh_r @ beta - sinh_r @ expith @ beta.conj()
            alpha = alpha + beta
        elif kind == "S":
            znew = value
            for prev_kind, prev_val in reversed(seen):
                if prev_kind == "R":
                    u = _unitary_from_hermitian(prev_val)
                    znew = u @ znew @ u.T
            z = znew
        elif kind == "R":
            phi = value
        else:
            raise ValidationError(f"unknown unitary kind {kind!r}")
        seen.append((kind, value))
    if thermal is None:
        thermal = np.zeros(modes)
    return GaussianParams(alpha, z, phi, thermal)


def rotation_from_unitary(u: np.ndarray) -> np.ndarray:
    """Hermitian phi with e^{i phi} = u (principal branch)."""
    h = -1j * logm(np.asarray(u, dtype=complex))
    return 0.5 * (h + h.conj().T)
