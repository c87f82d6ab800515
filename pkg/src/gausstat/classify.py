"""Hypothesis tests sorting correlation data into Gaussian sectors.

Satisfying a relation is evidence, never certification: the Fock mixture
(5/8)|0><0| + (3/8)|2><2| has g2 = 4/3 and g3 = 0 and sits exactly on the
non-displaced line, so every verdict carries an explicit evidence-only caveat.

Residuals are normalized by first-order propagated uncertainties when the
measurement set carries sigmas (acceptance at 3 sigma); exact synthetic data
falls back to a flat tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import InsufficientDataError, ValidationError
from .phases import (
    COVARIANCE,
    DISPLACEMENT,
    PhaseSystem,
    solve_covariance_phases,
    solve_displacement_phases,
)
from .states import MomentSummary, g2_tensor, g3_tensor, mode_vacuum_probability

NON_DISPLACED = "NonDisplaced"
NON_SQUEEZED = "NonSqueezed"
DISPLACED_SQUEEZED = "DisplacedSqueezedConsistent"
COHERENT_LIKE = "CoherentLike"
THERMAL_LIKE = "ThermalLike"
INCONSISTENT = "Inconsistent"

EVIDENCE_CAVEAT = ("relation satisfied - evidence only; correlation data can never "
                   "certify a Gaussian state (non-Gaussian counterexamples exist)")


@dataclass(frozen=True)
class MeasurementSet:
    """Observed correlation data with optional loss-sensitive observables.

    ``g3`` maps sorted mode triples (i, j, k) to values.  ``sigma`` holds
    per-observable standard uncertainties keyed by "nbar", "g1_abs",
    "g1_phase", "g2", "g3", "p0".
    """

    modes: int
    nbar: np.ndarray | None = None
    g1_abs: np.ndarray | None = None
    g1_phase: np.ndarray | None = None
    g2: np.ndarray | None = None
    g3: dict = field(default_factory=dict)
    p0: np.ndarray | None = None
    sigma: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.modes
        for name in ("nbar", "p0"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float).reshape(m))
        for name in ("g1_abs", "g1_phase", "g2"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (m, m):
                    raise ValidationError(f"{name} must be {m}x{m}")
                object.__setattr__(self, name, v)
        if self.g1_abs is not None:
            if np.nanmin(self.g1_abs) < -1e-12 or np.nanmax(self.g1_abs) > 1 + 1e-6:
                raise ValidationError("|g1| entries must lie in [0, 1]")
        if self.g1_phase is not None and np.abs(self.g1_phase + self.g1_phase.T).max() > 1e-8:
            raise ValidationError("g1 phases must be antisymmetric")
        if self.g2 is not None and np.nanmin(self.g2) < 0:
            raise ValidationError("g2 entries must be nonnegative")
        cleaned = {}
        for key, val in self.g3.items():
            if val < 0:
                raise ValidationError("g3 entries must be nonnegative")
            cleaned[tuple(sorted(key))] = float(val)
        object.__setattr__(self, "g3", cleaned)

    def g1_complex(self) -> np.ndarray:
        if self.g1_abs is None:
            raise InsufficientDataError("g1 magnitudes missing")
        phase = self.g1_phase if self.g1_phase is not None else np.zeros_like(self.g1_abs)
        return self.g1_abs * np.exp(1j * phase)

    def g3_entry(self, i, j, k):
        key = tuple(sorted((i, j, k)))
        if key not in self.g3:
            raise InsufficientDataError(f"g3 entry {key} required but not measured")
        return self.g3[key]

    def sigma_for(self, name: str) -> float:
        return float(self.sigma.get(name, 0.0))


def synthesize_measurements(moments: MomentSummary, include_p0: bool = False,
                            rng=None, sigma: dict | None = None) -> MeasurementSet:
    """Exact observables of a state, optionally perturbed by Gaussian noise."""
    m = moments.modes
    g2 = g2_tensor(moments)
    g3 = g3_tensor(moments)
    g1 = moments.g1.copy()
    nbar = moments.nbar.copy()
    p0 = None
    if include_p0:
        p0 = np.array([mode_vacuum_probability(moments, i) for i in range(m)])
    sigma = dict(sigma or {})
    if rng is not None and sigma:
        def jitter(x, s):
            return x + rng.normal(0.0, s, np.shape(x)) if s > 0 else x

        nbar = jitter(nbar, sigma.get("nbar", 0.0))
        g2 = jitter(g2, sigma.get("g2", 0.0))
        g2 = 0.5 * (g2 + g2.T)
        g3 = {k: float(jitter(v, sigma.get("g3", 0.0))) for k, v in g3.items()}
        mag = np.clip(jitter(np.abs(g1), sigma.get("g1_abs", 0.0)), 0.0, 1.0)
        np.fill_diagonal(mag, 1.0)
        ph = jitter(np.angle(g1), sigma.get("g1_phase", 0.0))
        ph = np.triu(ph, 1) - np.triu(ph, 1).T
        g1 = mag * np.exp(1j * ph)
        if p0 is not None:
            p0 = np.clip(jitter(p0, sigma.get("p0", 0.0)), 1e-12, 1.0)
    phase = np.angle(g1)
    phase = np.triu(phase, 1) - np.triu(phase, 1).T
    return MeasurementSet(m, nbar=nbar, g1_abs=np.abs(g1), g1_phase=phase,
                          g2=np.asarray(g2, dtype=float), g3=g3, p0=p0, sigma=sigma)


@dataclass(frozen=True)
class RelationResidual:
    relation: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


@dataclass(frozen=True)
class Classification:
    sector: str
    residuals: tuple[RelationResidual, ...]
    notes: tuple[str, ...]
    witness: dict | None = None

    def residual(self, relation: str) -> float:
        for r in self.residuals:
            if r.relation == relation:
                return r.residual
        raise KeyError(relation)


def _tolerance(m: MeasurementSet, flat_tol: float, dg2: float = 0.0, dg3: float = 0.0,
               extra: float = 0.0) -> float:
    """3-sigma acceptance from first-order propagation, else the flat tolerance."""
    s2, s3 = m.sigma_for("g2"), m.sigma_for("g3")
    propagated = np.sqrt((dg2 * s2) ** 2 + (dg3 * s3) ** 2 + extra**2)
    return max(flat_tol, 3.0 * propagated)


def displaced_squeezed_feasibility(g2: float, g3: float, tol: float = 1e-6,
                                   nbar: float | None = None, grid: int = 201):
    """Search the physical (a, c, x) region for a witness of the (g2, g3) pair.

    a = |alpha|^2/nbar, c = |cov|/nbar, x = cos(2 phi_d - theta) with theta the
    squeeze phase, so that

        g2 = 2 + c^2 - 2 a c x - a^2,
        g3 = 6 + 9 (c^2 - 2 a c x - a^2) + 4 a^3 + 12 a^2 c x.

    With nbar known the covariance ratio obeys the physicality bound
    c^2 <= (1-a)(1-a+1/nbar), with equality exactly at N = 0.  Without nbar no
    finite bound exists (the nbar -> 0 limit allows any c; every squeezed
    vacuum already has c > 1), so only c >= 0 is enforced.  Returns
    (feasible, witness dict, residual).
    """
    u = g2 - 2.0

    def c_max(a):
        if nbar is None:
            return np.inf
        return np.sqrt(np.clip((1.0 - a) * (1.0 - a + 1.0 / nbar), 0.0, None))

    def candidates(a, x):
        # c^2 - 2 a x c - (a^2 + u) = 0 for fixed (a, x)
        disc = (a * x) ** 2 + a**2 + u
        if disc < 0:
            return ()
        root = np.sqrt(disc)
        return tuple(c for c in (a * x + root, a * x - root) if 0.0 <= c <= c_max(a) + 1e-12)

    def g3_residual(a, x):
        best = 1e6  # finite penalty keeps the local optimizer differentiable
        for c in candidates(a, x):
            val = 6.0 + 9.0 * (c**2 - 2 * a * c * x - a**2) + 4 * a**3 + 12 * a**2 * c * x
            best = min(best, abs(val - g3))
        return best

    avals = np.linspace(0.0, 1.0, grid)
    xvals = np.linspace(-1.0, 1.0, grid)
    coarse = [(g3_residual(a, x), a, x) for a in avals for x in xvals]
    coarse.sort(key=lambda t: t[0])
    best = (np.inf, None)
    for res0, a0, x0 in coarse[:5]:
        if res0 >= 1e6:
            continue
        opt = minimize(lambda v: g3_residual(v[0], v[1]), x0=[a0, x0],
                       bounds=[(0.0, 1.0), (-1.0, 1.0)], method="L-BFGS-B")
        if opt.fun < best[0]:
            cands = candidates(*opt.x)
            cbest = None
            for c in cands:
                val = 6.0 + 9.0 * (c**2 - 2 * opt.x[0] * c * opt.x[1] - opt.x[0] ** 2) \
                    + 4 * opt.x[0] ** 3 + 12 * opt.x[0] ** 2 * c * opt.x[1]
                if abs(val - g3) == opt.fun or cbest is None:
                    cbest = c
            best = (opt.fun, {"a": float(opt.x[0]), "c": float(cbest) if cbest is not None else None,
                              "x": float(opt.x[1])})
    feasible = best[0] <= tol
    return feasible, best[1], float(best[0])


def classify_single_mode(m: MeasurementSet, tol: float = 1e-6) -> Classification:
    """Sort single-mode (g2, g3) data into the Gaussian sectors."""
    if m.modes != 1:
        raise ValidationError("classify_single_mode needs single-mode data")
    if m.g2 is None or (0, 0, 0) not in m.g3:
        raise InsufficientDataError("single-mode classification needs g2 and g3")
    g2 = float(m.g2[0, 0])
    g3 = m.g3[(0, 0, 0)]
    notes = [EVIDENCE_CAVEAT]
    residuals = []

    tol_r1 = _tolerance(m, tol, dg2=9.0, dg3=1.0)
    r1 = abs(g3 - (9.0 * g2 - 12.0))
    residuals.append(RelationResidual("non-displaced: g3 = 9 g2 - 12", r1, tol_r1))

    r2 = np.inf
    tol_r2 = tol
    if g2 <= 2.0 + tol:
        slope = 9.0 + 6.0 * np.sqrt(max(2.0 - g2, 0.0))
        tol_r2 = _tolerance(m, tol, dg2=slope, dg3=1.0)
        r2 = abs(g3 - (9.0 * g2 - 12.0 + 4.0 * max(2.0 - g2, 0.0) ** 1.5))
        residuals.append(RelationResidual("non-squeezed: g3 = 9 g2 - 12 + 4 (2 - g2)^(3/2)",
                                          r2, tol_r2))

    tol_pt = _tolerance(m, tol, dg2=1.0, dg3=1.0)
    r_coh = max(abs(g2 - 1.0), abs(g3 - 1.0))
    r_th = max(abs(g2 - 2.0), abs(g3 - 6.0))
    residuals.append(RelationResidual("coherent point g2 = g3 = 1", r_coh, tol_pt))
    residuals.append(RelationResidual("thermal point g2 = 2, g3 = 6", r_th, tol_pt))

    if r_coh <= tol_pt:
        sector = COHERENT_LIKE
        notes.append("coherent point satisfies the non-squeezed relation as well")
        witness = None
    elif r_th <= tol_pt:
        sector = THERMAL_LIKE
        notes.append("thermal point satisfies both sector relations (r = 0 and alpha = 0)")
        witness = None
    elif r1 <= tol_r1 or r2 <= tol_r2:
        if r1 <= tol_r1 and r2 <= tol_r2:
            notes.append("both sector relations pass; reporting the smaller residual")
            sector = NON_DISPLACED if r1 <= r2 else NON_SQUEEZED
        else:
            sector = NON_DISPLACED if r1 <= tol_r1 else NON_SQUEEZED
        witness = None
    else:
        nbar = float(m.nbar[0]) if m.nbar is not None else None
        feas_tol = _tolerance(m, max(tol, 1e-6), dg2=9.0, dg3=1.0)
        feasible, witness, res = displaced_squeezed_feasibility(g2, g3, feas_tol, nbar=nbar)
        residuals.append(RelationResidual("displaced-squeezed feasibility witness",
                                          res, feas_tol))
        sector = DISPLACED_SQUEEZED if feasible else INCONSISTENT
        if not feasible:
            notes.append("no physical (a, c, x) witness reproduces (g2, g3)")
    return Classification(sector, tuple(residuals), tuple(notes), witness)


def _sqrt_clip(x):
    return np.sqrt(np.clip(x, 0.0, None))


def _cosine_excess(c: np.ndarray) -> float:
    """How far extracted cosines leave [-1, 1]; > 0 falsifies the hypothesis."""
    finite = c[np.isfinite(c)]
    if finite.size == 0:
        return 0.0
    return float(max(np.abs(finite).max() - 1.0, 0.0))


def _extract_ns_cosines(m: MeasurementSet):
    """cos(Phi_ij + phi_i - phi_j) from g3_iij under the non-squeezed hypothesis.

    Uses g3_iij = 2 + 4|g1_ij|^2 - a_i^2 - 4 a_i a_j + 4 a_i^2 a_j
    - 4|g1_ij| a_i^(3/2) a_j^(1/2) cos(Phi_ij + phi_i - phi_j) with
    a_i = sqrt(2 - g2_ii), obtained by specialising the general
    displaced-thermal g3 to two matching indices.
    """
    mm = m.modes
    g2, g1a = m.g2, m.g1_abs
    a = _sqrt_clip(2.0 - np.diag(g2))
    c = np.full((mm, mm), np.nan)
    missing = []
    for i in range(mm):
        for j in range(mm):
            if i == j:
                continue
            denom = 4.0 * g1a[i, j] * a[i] ** 1.5 * a[j] ** 0.5
            if abs(denom) < 1e-12:
                continue  # no phase information in this entry
            key = tuple(sorted((i, i, j)))
            if key not in m.g3:
                missing.append((i, i, j))
                continue
            base = (2.0 + 4.0 * g1a[i, j] ** 2 - a[i] ** 2 - 4.0 * a[i] * a[j]
                    + 4.0 * a[i] ** 2 * a[j])
            val = (base - m.g3[key]) / denom
            cij = val if np.isnan(c[i, j]) else 0.5 * (c[i, j] + val)
            c[i, j] = c[j, i] = cij
    if missing:
        raise InsufficientDataError(
            "non-squeezed phase extraction needs g3 entries: "
            + ", ".join(map(str, sorted(set(missing)))))
    return c


def _extract_nd_cosines(m: MeasurementSet):
    """cos(Phi_ij - Theta_ij + Theta_ii) from g3_iij under the non-displaced hypothesis."""
    mm = m.modes
    g2, g1a = m.g2, m.g1_abs
    c = np.full((mm, mm), np.nan)
    missing = []
    for i in range(mm):
        for j in range(mm):
            if i == j:
                continue
            q_ij = g2[i, j] - g1a[i, j] ** 2 - 1.0
            q_ii = g2[i, i] - 2.0
            denom = 4.0 * g1a[i, j] * _sqrt_clip(q_ij * q_ii)
            if abs(denom) < 1e-12:
                continue
            key = tuple(sorted((i, i, j)))
            if key not in m.g3:
                missing.append((i, i, j))
                continue
            c[i, j] = (m.g3[key] - g2[i, i] - 4.0 * g2[i, j] + 4.0) / denom
    if missing:
        raise InsufficientDataError(
            "non-displaced phase extraction needs g3 entries: "
            + ", ".join(map(str, sorted(set(missing)))))
    return c


def _ns_predicted_g3(m: MeasurementSet, phases, i, j, k):
    """g3_ijk of a displaced thermal state from g2, g1 and displacement phases."""
    g2, g1a = m.g2, m.g1_abs
    phi = m.g1_phase
    a = {t: _sqrt_clip(2.0 - g2[t, t]) for t in (i, j, k)}
    val = (g2[i, j] + g2[j, k] + g2[i, k] - 2.0
           + 2.0 * g1a[i, j] * g1a[j, k] * g1a[i, k]
           * np.cos(phi[i, j] + phi[j, k] - phi[i, k])
           + 4.0 * a[i] * a[j] * a[k]
           - 2.0 * (g1a[i, j] * np.sqrt(a[i] * a[j]) * a[k]
                    * np.cos(phi[i, j] + phases[i] - phases[j])
                    + g1a[j, k] * np.sqrt(a[j] * a[k]) * a[i]
                    * np.cos(phi[j, k] + phases[j] - phases[k])
                    + g1a[i, k] * np.sqrt(a[i] * a[k]) * a[j]
                    * np.cos(phi[i, k] + phases[i] - phases[k])))
    return val


def _nd_predicted_g3(m: MeasurementSet, theta, i, j, k):
    """g3_ijk of a squeezed thermal state from g2, g1 and covariance phases."""
    g2, g1a = m.g2, m.g1_abs
    phi = m.g1_phase

    def q(x, y):
        return g2[x, y] - g1a[x, y] ** 2 - 1.0

    val = (g2[i, j] + g2[j, k] + g2[i, k] - 2.0
           + 2.0 * g1a[i, j] * g1a[j, k] * g1a[i, k]
           * np.cos(phi[i, j] + phi[j, k] - phi[i, k])
           + 2.0 * g1a[i, j] * _sqrt_clip(q(j, k) * q(i, k))
           * np.cos(phi[i, j] - theta[j, k] + theta[i, k])
           + 2.0 * g1a[j, k] * _sqrt_clip(q(i, k) * q(i, j))
           * np.cos(phi[j, k] - theta[i, k] + theta[i, j])
           + 2.0 * g1a[i, k] * _sqrt_clip(q(i, j) * q(j, k))
           * np.cos(-phi[i, k] - theta[i, j] + theta[j, k]))
    return val


def classify_multimode(m: MeasurementSet, tol: float = 1e-6) -> Classification:
    """Test multimode data against the non-squeezed and non-displaced sectors."""
    if m.modes < 2:
        raise ValidationError("classify_multimode needs at least two modes")
    if m.g2 is None or m.g1_abs is None:
        raise InsufficientDataError("multimode classification needs g2 and |g1|")
    mm = m.modes
    g2, g1a = m.g2, m.g1_abs
    residuals = []
    notes = [EVIDENCE_CAVEAT]
    tol_rel = _tolerance(m, tol, dg2=3.0, dg3=1.0)

    # --- non-squeezed hypothesis
    ns_ok = True
    ns_res = 0.0
    if np.nanmax(np.diag(g2)) > 2.0 + tol_rel:
        ns_ok = False
        ns_res = float(np.nanmax(np.diag(g2)) - 2.0)
        notes.append("a diagonal g2 exceeds 2: incompatible with zero squeezing")
    else:
        for i in range(mm):
            for j in range(i + 1, mm):
                pred = 1.0 + g1a[i, j] ** 2 - _sqrt_clip((2 - g2[i, i]) * (2 - g2[j, j]))
                ns_res = max(ns_res, abs(g2[i, j] - pred))
        ns_ok = ns_res <= tol_rel
    residuals.append(RelationResidual("non-squeezed g2/g1 relation (all pairs)",
                                      ns_res, tol_rel))
    ns_solutions = []
    ns_blocked = None
    if ns_ok:
        try:
            c = _extract_ns_cosines(m)
            excess = _cosine_excess(c)
            if excess > tol_rel:
                ns_ok = False
                notes.append(f"extracted displacement cosine exceeds 1 by {excess:.3e}")
                residuals.append(RelationResidual("non-squeezed cosine range",
                                                  excess, tol_rel))
            else:
                system = PhaseSystem(DISPLACEMENT, m.g1_phase, np.clip(c, -1, 1))
                ns_solutions = solve_displacement_phases(system,
                                                         tol=max(10 * tol_rel, 1e-8))
        except InsufficientDataError as err:
            ns_blocked = err
            ns_ok = False
            notes.append(f"non-squeezed test blocked: {err}")
        if ns_ok and not ns_solutions:
            ns_ok = False
            notes.append("displacement-phase system has no solution")
        elif ns_ok:
            def ns_worst(sol):
                worst = 0.0
                for (i, j, k), val in m.g3.items():
                    if i == j == k:
                        d = 2.0 - g2[i, i]
                        pred = 9.0 * g2[i, i] - 12.0 + 4.0 * np.clip(d, 0, None) ** 1.5
                        worst = max(worst, abs(val - pred))
                    elif len({i, j, k}) == 3:
                        worst = max(worst, abs(val - _ns_predicted_g3(m, sol.phases, i, j, k)))
                return worst

            worsts = [ns_worst(s) for s in ns_solutions]
            order = int(np.argmin(worsts))
            ns_solutions = [ns_solutions[order]] + [s for t, s in enumerate(ns_solutions)
                                                    if t != order]
            residuals.append(RelationResidual("non-squeezed g3 consistency",
                                              worsts[order], tol_rel))
            ns_ok = worsts[order] <= tol_rel

    # --- non-displaced hypothesis
    nd_ok = True
    nd_res = 0.0
    qmin = np.inf
    for i in range(mm):
        for j in range(i, mm):
            q = g2[i, j] - (1.0 if i != j else 0.0) * g1a[i, j] ** 2 - (1.0 if i != j else 2.0)
            qmin = min(qmin, q)
    if qmin < -tol_rel:
        nd_ok = False
        nd_res = -qmin
        notes.append("covariance moduli would be imaginary: incompatible with zero displacement")
    residuals.append(RelationResidual("non-displaced modulus positivity", max(nd_res, 0.0),
                                      tol_rel))
    nd_solutions = []
    nd_blocked = None
    if nd_ok:
        try:
            c = _extract_nd_cosines(m)
            excess = _cosine_excess(c)
            if excess > tol_rel:
                nd_ok = False
                notes.append(f"extracted covariance cosine exceeds 1 by {excess:.3e}")
                residuals.append(RelationResidual("non-displaced cosine range",
                                                  excess, tol_rel))
            else:
                system = PhaseSystem(COVARIANCE, m.g1_phase, np.clip(c, -1, 1))
                nd_solutions = solve_covariance_phases(system,
                                                       tol=max(10 * tol_rel, 1e-8))
        except InsufficientDataError as err:
            nd_blocked = err
            nd_ok = False
            notes.append(f"non-displaced test blocked: {err}")
        if nd_ok and not nd_solutions:
            nd_ok = False
            notes.append("covariance-phase system has no solution")
        elif nd_ok:
            def nd_worst(sol):
                worst = 0.0
                for (i, j, k), val in m.g3.items():
                    if i == j == k:
                        worst = max(worst, abs(val - (9.0 * g2[i, i] - 12.0)))
                    elif len({i, j, k}) == 3:
                        worst = max(worst, abs(val - _nd_predicted_g3(m, sol.theta, i, j, k)))
                return worst

            worsts = [nd_worst(s) for s in nd_solutions]
            order = int(np.argmin(worsts))
            nd_solutions = [nd_solutions[order]] + [s for t, s in enumerate(nd_solutions)
                                                    if t != order]
            residuals.append(RelationResidual("non-displaced g3 consistency",
                                              worsts[order], tol_rel))
            nd_ok = worsts[order] <= tol_rel

    if ns_ok and nd_ok:
        notes.append("both sectors consistent (state close to thermal); "
                     "preferring the smaller residual")
        sector = NON_SQUEEZED if ns_res <= nd_res else NON_DISPLACED
    elif ns_ok:
        sector = NON_SQUEEZED
    elif nd_ok:
        sector = NON_DISPLACED
    else:
        # a verdict of inconsistency must rest on data, not on missing entries
        if ns_blocked is not None:
            raise ns_blocked
        if nd_blocked is not None:
            raise nd_blocked
        sector = INCONSISTENT
        notes.append("zero-displacement and zero-squeezing hypotheses both fail; "
                     "a displaced squeezed Gaussian state is not excluded "
                     "(reconstructing that sector needs two-port beam-splitter data)")
    witness = None
    if sector == NON_SQUEEZED and ns_solutions:
        witness = {"displacement_phases": ns_solutions[0].phases.tolist(),
                   "n_phase_solutions": len(ns_solutions)}
    if sector == NON_DISPLACED and nd_solutions:
        witness = {"covariance_phases": nd_solutions[0].theta.tolist(),
                   "n_phase_solutions": len(nd_solutions)}
    return Classification(sector, tuple(residuals), tuple(notes), witness)


def classify(m: MeasurementSet, tol: float = 1e-6) -> Classification:
    return classify_single_mode(m, tol) if m.modes == 1 else classify_multimode(m, tol)
