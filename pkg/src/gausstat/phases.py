"""Spanning-tree solver for cosine phase-constraint systems on a complete graph.

Displacement phases phi_i obey c_ij = cos(Phi_ij + phi_i - phi_j) with
symmetric c; covariance phases Theta_ij obey the pair of equations
c_ij = cos(Phi_ij + Theta_ii - Theta_ij) and c_ji = cos(-Phi_ij + Theta_jj
- Theta_ij) whose combination eliminates the off-diagonal unknown at the cost
of a binary branch per edge.

Solving fixes the gauge (phi_1 = 0, respectively Theta_11 = 0), enumerates the
arccos sign signature on the star spanning tree rooted at mode 1, and keeps a
signature only if every off-tree equation is satisfied within tolerance.  The
enumeration is exhaustive (2^(M-1) signatures, doubled per tree edge for the
covariance kind), so cost grows exponentially with the mode count; fine for
the intended M of order ten or less.

NaN entries of c mark unconstrained edges (e.g. a correlation whose phase
sensitivity vanishes); they are skipped in checks and, on tree edges, leave
the corresponding phase free only through the remaining constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import ValidationError

DISPLACEMENT = "displacement"
COVARIANCE = "covariance"


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    out = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out) if np.ndim(out) else (
        np.pi if out == -np.pi else float(out))


def _angles_close(a, b, tol):
    return abs(wrap_angle(a - b)) <= tol


@dataclass(frozen=True)
class PhaseSystem:
    """Known fringe phases Phi (antisymmetric) and cosine data c for one kind."""

    kind: str
    big_phi: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if self.kind not in (DISPLACEMENT, COVARIANCE):
            raise ValidationError(f"unknown phase-system kind {self.kind!r}")
        phi = np.asarray(self.big_phi, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if phi.shape != c.shape or phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ValidationError("Phi and c must be square matrices of equal size")
        if np.abs(phi + phi.T).max() > 1e-9:
            raise ValidationError("Phi must be antisymmetric")
        if self.kind == DISPLACEMENT:
            asym = np.nanmax(np.abs(c - c.T)) if np.isfinite(c).any() else 0.0
            if asym > 1e-9:
                raise ValidationError("displacement-kind c must be symmetric")
        object.__setattr__(self, "big_phi", phi)
        object.__setattr__(self, "c", c)

    @property
    def modes(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class PhaseSolution:
    """One consistent assignment of phases, with the signature that produced it."""

    phases: np.ndarray
    signature: tuple[int, ...]
    epsilon: tuple[int, ...] | None = None
    theta: np.ndarray | None = None
    residual: float = 0.0
    degeneracy_notes: tuple[str, ...] = field(default_factory=tuple)


def _clamped(c: np.ndarray, tol: float) -> np.ndarray:
    """Clamp |c| in (1, 1+tol] to +-1; larger excursions are invalid input."""
    out = c.copy()
    mask = np.isfinite(out)
    over = mask & (np.abs(out) > 1.0 + tol)
    if over.any():
        worst = np.abs(out[over]).max()
        raise ValidationError(f"|c| = {worst:.6f} exceeds 1 + tol")
    out[mask] = np.clip(out[mask], -1.0, 1.0)
    return out


def _signature_choices(ctilde: np.ndarray, tol: float):
    """Per-edge sign alternatives; degenerate arccos values collapse the branch."""
    choices = []
    for ct in ctilde:
        if not np.isfinite(ct):
            choices.append((1,))
        elif min(abs(ct), abs(np.pi - ct)) <= tol:
            choices.append((1,))
        else:
            choices.append((1, -1))
    return choices


def solve_displacement_phases(system: PhaseSystem, tol: float = 1e-8) -> list[PhaseSolution]:
    """All phase vectors consistent with a displacement-kind system.

    Gauge phi_1 = 0.  An empty list means the data is inconsistent with the
    sector hypothesis; several entries list genuinely distinct solutions.
    """
    if system.kind != DISPLACEMENT:
        raise ValidationError("system kind must be displacement")
    m = system.modes
    if m == 1:
        return [PhaseSolution(np.zeros(1), ())]
    c = _clamped(system.c, tol)
    phi = system.big_phi
    ctilde = np.array([np.arccos(c[0, i]) if np.isfinite(c[0, i]) else np.nan
                       for i in range(1, m)])
    solutions: list[PhaseSolution] = []
    for sig in product(*_signature_choices(ctilde, tol)):
        ph = np.zeros(m)
        ok = True
        for idx, i in enumerate(range(1, m)):
            if np.isfinite(ctilde[idx]):
                ph[i] = phi[0, i] + sig[idx] * ctilde[idx]
            else:
                ph[i] = 0.0  # unconstrained tree edge: pick the gauge value
        worst = 0.0
        for i in range(1, m):
            for j in range(i + 1, m):
                if not np.isfinite(c[i, j]):
                    continue
                res = abs(np.cos(phi[i, j] + ph[i] - ph[j]) - c[i, j])
                worst = max(worst, res)
                if res > tol:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            solutions.append(PhaseSolution(wrap_angle(ph), tuple(sig), residual=worst))
    return _dedupe(solutions, 10 * tol)


def _dedupe(solutions: list[PhaseSolution], tol: float) -> list[PhaseSolution]:
    kept: list[PhaseSolution] = []
    for sol in solutions:
        duplicate = False
        for other in kept:
            diff = np.abs(wrap_angle(sol.phases - other.phases)).max()
            if sol.theta is not None and other.theta is not None:
                diff = max(diff, np.abs(wrap_angle(sol.theta - other.theta)).max())
            if diff <= tol:
                duplicate = True
                break
        if not duplicate:
            kept.append(sol)
    return kept


def solve_covariance_phases(system: PhaseSystem, tol: float = 1e-8) -> list[PhaseSolution]:
    """All covariance-phase matrices Theta consistent with the system.

    Gauge Theta_11 = 0.  Returns solutions carrying the full symmetric Theta.
    The two-mode case generically yields four discrete solutions (one sigma and
    one epsilon branch with nothing to constrain them).
    """
    if system.kind != COVARIANCE:
        raise ValidationError("system kind must be covariance")
    m = system.modes
    if m == 1:
        return [PhaseSolution(np.zeros(1), (), epsilon=(), theta=np.zeros((1, 1)))]
    c = _clamped(system.c, tol)
    phi = system.big_phi

    # tree-edge combinations C_{1i}(eps) = cos(2 Phi_{1i} - Theta_ii)
    def comb(i, j, eps):
        if not (np.isfinite(c[i, j]) and np.isfinite(c[j, i])):
            return np.nan
        s = (1.0 - c[i, j] ** 2) * (1.0 - c[j, i] ** 2)
        return c[i, j] * c[j, i] + eps * np.sqrt(max(s, 0.0))

    eps_choices = []
    for i in range(1, m):
        if not (np.isfinite(c[0, i]) and np.isfinite(c[i, 0])):
            eps_choices.append((1,))
        elif min(1.0 - abs(c[0, i]), 1.0 - abs(c[i, 0])) <= tol:
            eps_choices.append((1,))  # sqrt factor vanishes: eps collapsed
        else:
            eps_choices.append((1, -1))
    solutions: list[PhaseSolution] = []
    for eps in product(*eps_choices):
        cvals = np.array([comb(0, i, eps[i - 1]) for i in range(1, m)])
        cvals = np.where(np.isfinite(cvals), np.clip(cvals, -1.0, 1.0), np.nan)
        ctilde = np.arccos(cvals)
        for sig in product(*_signature_choices(ctilde, tol)):
            diag = np.zeros(m)
            for idx, i in enumerate(range(1, m)):
                diag[i] = (2 * phi[0, i] + sig[idx] * ctilde[idx]) if np.isfinite(ctilde[idx]) else 0.0
            branches = _offdiag_candidates(c, phi, diag, tol)
            if branches is None:
                continue
            for theta, worst in branches:
                solutions.append(PhaseSolution(
                    wrap_angle(diag.copy()), tuple(sig), epsilon=tuple(eps),
                    theta=wrap_angle(theta), residual=worst))
    return _dedupe(solutions, 10 * tol)


def _offdiag_candidates(c, phi, diag, tol):
    """Fix every Theta_ij from the two edge equations, or report inconsistency.

    For each pair the (i,j) equation offers two arccos branches; a branch
    survives only if it also satisfies the (j,i) equation.  Degenerate data can
    leave both branches alive, in which case all combinations are returned.
    """
    m = diag.shape[0]
    per_pair: list[list[tuple[int, int, float, float]]] = []
    for i in range(m):
        for j in range(i + 1, m):
            cij, cji = c[i, j], c[j, i]
            if not (np.isfinite(cij) and np.isfinite(cji)):
                per_pair.append([(i, j, 0.0, 0.0)])  # unconstrained phase, value arbitrary
                continue
            candidates = []
            tilde = np.arccos(cij)
            for s in (1, -1):
                theta_ij = phi[i, j] + diag[i] - s * tilde
                res = abs(np.cos(-phi[i, j] + diag[j] - theta_ij) - cji)
                if res <= tol:
                    candidates.append((i, j, theta_ij, res))
            if not candidates:
                return None
            if len(candidates) == 2 and _angles_close(candidates[0][2], candidates[1][2], 10 * tol):
                candidates = candidates[:1]
            per_pair.append(candidates)
    results = []
    for combo in product(*per_pair):
        theta = np.diag(diag).astype(float).copy()
        worst = 0.0
        for i, j, val, res in combo:
            theta[i, j] = theta[j, i] = val
            worst = max(worst, res)
        results.append((theta, worst))
    return results


def solution_residual(system: PhaseSystem, solution: PhaseSolution) -> float:
    """Largest |c_ij - cos(...)| over all constrained ordered pairs."""
    m = system.modes
    c, phi = system.c, system.big_phi
    worst = 0.0
    for i in range(m):
        for j in range(m):
            if i == j or not np.isfinite(c[i, j]):
                continue
            if system.kind == DISPLACEMENT:
                model = np.cos(phi[i, j] + solution.phases[i] - solution.phases[j])
            else:
                theta = solution.theta
                model = np.cos(phi[i, j] + theta[i, i] - theta[i, j])
            worst = max(worst, abs(model - c[i, j]))
    return worst


def degeneracy_report(system: PhaseSystem, solutions: list[PhaseSolution]) -> list[str]:
    """Explain solution multiplicity in terms of the edge-case conditions.

    A +-sigma pair requires, on every off-tree edge, Gamma_ij = 0 mod pi or
    Delta_ij(sigma) = 0 mod pi; other coincidences need, per locally flipped
    pair, either c_1i = +-1 or (c_1j = c_ij and c_1i = cos Gamma_ij).
    """
    if len(solutions) <= 1:
        return []
    m = system.modes
    c = _clamped(system.c, 1e-6)
    phi = system.big_phi
    if system.kind == COVARIANCE:
        return [f"{len(solutions)} covariance solutions: sigma/epsilon branches "
                "left unconstrained by the available pair equations"]
    ctilde = {i: np.arccos(c[0, i]) for i in range(1, m) if np.isfinite(c[0, i])}
    notes = []
    tagged = set()
    for a in range(len(solutions)):
        for b in range(a + 1, len(solutions)):
            sa, sb = solutions[a].signature, solutions[b].signature
            if len(sa) != len(sb) or not sa:
                continue
            if all(x == -y for x, y in zip(sa, sb)):
                conds = []
                for i in range(1, m):
                    for j in range(i + 1, m):
                        gamma = phi[i, j] + phi[0, i] - phi[0, j]
                        delta = sa[i - 1] * ctilde.get(i, 0.0) - sa[j - 1] * ctilde.get(j, 0.0)
                        if min(abs(wrap_angle(gamma)), abs(wrap_angle(gamma - np.pi))) < 1e-6:
                            conds.append(f"Gamma_{i + 1}{j + 1} = 0 mod pi")
                        elif min(abs(wrap_angle(delta)), abs(wrap_angle(delta - np.pi))) < 1e-6:
                            conds.append(f"Delta_{i + 1}{j + 1} = 0 mod pi")
                key = ("pm-sigma", tuple(conds))
                if key not in tagged:
                    tagged.add(key)
                    notes.append("+-sigma degeneracy: " + ("; ".join(conds) if conds
                                                           else "no off-tree edges"))
            else:
                conds = []
                for i in range(1, m):
                    for j in range(1, m):
                        if i == j:
                            continue
                        if sa[i - 1] == sb[i - 1] and sa[j - 1] == -sb[j - 1]:
                            gamma = phi[i, j] + phi[0, i] - phi[0, j]
                            if 1.0 - abs(c[0, i]) < 1e-6:
                                conds.append(f"c_1{i + 1} = +-1")
                            elif (abs(c[0, j] - c[i, j]) < 1e-6
                                  and abs(c[0, i] - np.cos(gamma)) < 1e-6):
                                conds.append(f"G-condition on pair ({i + 1},{j + 1})")
                key = ("general", tuple(sorted(set(conds))))
                if key not in tagged:
                    tagged.add(key)
                    notes.append("general signature degeneracy: "
                                 + ("; ".join(sorted(set(conds))) if conds else "unclassified"))
    return notes
