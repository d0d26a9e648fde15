"""Pseudo-arclength continuation of periodic orbits in a potential family.

The unknowns are the Galerkin coefficients (minus the pinned sine
coefficient) together with the parameter lam.  Steps use a secant
predictor and a chord corrector on the bordered system

    [ G(c, lam)              ]
    [ tau . (z - z_pred)     ] = 0,

with the bordered Jacobian refreshed whenever the chord iteration stalls.
A branch stops when it leaves the box |lam| <= lam_max, sup|u| <= R
(UNBOUNDED), when the loop collapses onto a stationary point
(HIT_STATIONARY), or when the step size falls below its minimum
(STEP_FAILURE, which truncates the branch without a verdict).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .galerkin import (
    STATIONARY_TOL,
    FourierLoop,
    GalerkinProblem,
    OrbitResult,
    minimal_period_of,
    stationary_distance,
)

UNBOUNDED = "UNBOUNDED"
HIT_STATIONARY = "HIT_STATIONARY"
STEP_FAILURE = "STEP_FAILURE"
MAX_STEPS = "MAX_STEPS"

SO2_FIXED = 0  # isotropy-log marker for a constant loop

CORRECTOR_TOL = 1e-9
CHORD_ITERS = 6
REFRESH_EVERY = 25


@dataclass
class BranchPoint:
    lam: float
    sup_norm: float
    isotropy_k: int
    distance_to_stationary: float
    ds: float

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "sup_norm": self.sup_norm,
            "isotropy_k": self.isotropy_k,
            "distance_to_stationary": self.distance_to_stationary,
            "ds": self.ds,
        }


@dataclass
class BranchRecord:
    verdict: str
    direction: int
    points: list[BranchPoint]
    final_loop: FourierLoop
    final_lam: float
    bounds: dict
    message: str = ""
    isotropy_changes: list[dict] = field(default_factory=list)

    @property
    def isotropy_log(self) -> list[int]:
        return [p.isotropy_k for p in self.points]

    @property
    def symmetry_breaking(self) -> bool:
        return len(set(self.isotropy_log)) > 1

    def to_dict(self, max_points: int | None = 200) -> dict:
        pts = self.points
        if max_points is not None and len(pts) > max_points:
            idx = np.unique(np.linspace(0, len(pts) - 1, max_points).round().astype(int))
            pts = [pts[i] for i in idx]
        return {
            "verdict": self.verdict,
            "direction": self.direction,
            "steps": len(self.points) - 1,
            "final_lam": self.final_lam,
            "symmetry_breaking": self.symmetry_breaking,
            "isotropy_values": sorted(set(self.isotropy_log)),
            "isotropy_changes": list(self.isotropy_changes),
            "bounds": dict(self.bounds),
            "message": self.message,
            "points": [p.to_dict() for p in pts],
            "final_loop": self.final_loop.to_dict(),
        }


class _FamilyProblem:
    """Galerkin residual of a family member, with the pinned coordinate removed."""

    def __init__(self, family, T: float, N: int, pin: tuple[int, int], A_ref):
        self.family = family
        self.n = family.n
        self.prob = GalerkinProblem(None, None, self.n, T, N, A_ref)
        self.shape = (2 * N + 1, self.n)
        flat_pin = pin[0] * self.n + pin[1]
        self.keep = np.array([i for i in range(self.prob.size) if i != flat_pin])

    def _set(self, lam: float):
        self.prob.grad_fn = lambda x: self.family.grad(x, lam)
        self.prob.hess_fn = lambda x: self.family.hess(x, lam)

    def coeffs(self, z: np.ndarray) -> np.ndarray:
        c = np.zeros(self.prob.size)
        c[self.keep] = z[:-1]
        return c.reshape(self.shape)

    def residual(self, z: np.ndarray) -> tuple[np.ndarray, float]:
        lam = float(z[-1])
        self._set(lam)
        g = self.prob.gradient(self.coeffs(z))
        return g.reshape(-1)[self.keep], self.prob.h1_norm(g)

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """``(m-1) x m`` derivative of the reduced residual in (coefficients, lam)."""
        lam = float(z[-1])
        self._set(lam)
        c = self.coeffs(z)
        Jc = self.prob.jacobian(c)[np.ix_(self.keep, self.keep)]
        u = self.prob.points(c)
        dg = -self.prob.scale[:, None] * (self.prob.P @ self.family.dgrad_dlam(u, lam))
        return np.hstack([Jc, dg.reshape(-1)[self.keep][:, None]])


def _segment_crossing(fp, z0, z1, p0: BranchPoint, p1: BranchPoint, samples: int = 33):
    """Stationary crossing strictly inside the step from z0 to z1, if any."""
    if min(p0.distance_to_stationary, p1.distance_to_stationary) > 2.0 * np.linalg.norm(z1 - z0):
        return None
    best = None
    for s in np.linspace(0.0, 1.0, samples)[1:-1]:
        z = (1.0 - s) * z0 + s * z1
        lam = float(z[-1])
        u = fp.prob.points(fp.coeffs(z))
        dist = min(float(np.max(np.linalg.norm(u - np.atleast_1d(p), axis=1)))
                   for p in fp.family.stationary_points(lam))
        if best is None or dist < best[0]:
            best = (dist, lam, float(np.max(np.linalg.norm(u, axis=1))))
    if best is None or best[0] >= STATIONARY_TOL * 10 or best[0] >= min(p0.distance_to_stationary,
                                                                          p1.distance_to_stationary):
        return None
    return BranchPoint(best[1], best[2], SO2_FIXED, best[0], 0.0)


def _tangent(J: np.ndarray, orient: np.ndarray) -> np.ndarray:
    """Unit null vector of the ``(m-1) x m`` matrix J, oriented along ``orient``."""
    _, _, vt = np.linalg.svd(J)
    tau = vt[-1]
    if float(tau @ orient) < 0:
        tau = -tau
    return tau


def trace_branch(
    family,
    start: OrbitResult,
    direction: int = 1,
    length_scale: float = 1.0,
    ds0: float = 1e-2,
    ds_min: float = 1e-4,
    ds_max: float = 0.1,
    lam_max: float = 1e3,
    radius_factor: float = 1e3,
    max_steps: int = 100_000,
    lam0: float = 0.0,
) -> BranchRecord:
    """Follow the branch of ``family`` through ``start`` in the given lam direction."""
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if not start.accepted:
        raise ValueError("continuation needs an accepted starting orbit")
    loop = start.loop
    A_ref = getattr(family.base, "v_inf", np.zeros((family.n, family.n)))
    fp = _FamilyProblem(family, loop.T, loop.N, start.pin, A_ref)
    R = radius_factor * length_scale
    bounds = {"lam_max": lam_max, "sup_norm_max": R, "ds_min": ds_min, "ds_max": ds_max,
              "stationary_tol": STATIONARY_TOL}

    z = np.concatenate([loop.coeffs().reshape(-1)[fp.keep], [lam0]])
    orient = np.zeros_like(z)
    orient[-1] = direction
    J = fp.jacobian(z)
    tau = _tangent(J, orient)

    def bordered_inverse(J, tau):
        return np.linalg.inv(np.vstack([J, tau[None, :]]))

    Binv = bordered_inverse(J, tau)
    since_refresh = 0

    def observe(z, ds) -> BranchPoint:
        c = fp.coeffs(z)
        lp = FourierLoop.from_coeffs(loop.T, c)
        lam = float(z[-1])
        u = fp.prob.points(c)
        dist = stationary_distance(lp, fp.family.stationary_points(lam), values=u)
        try:
            _, iso = minimal_period_of(lp)
        except ValueError:
            iso = SO2_FIXED
        if dist < STATIONARY_TOL:
            iso = SO2_FIXED
        sup = float(np.max(np.linalg.norm(u, axis=1)))
        return BranchPoint(lam, sup, iso, dist, ds)

    points = [observe(z, 0.0)]
    changes: list[dict] = []
    prev_z = None
    ds = ds0
    verdict, message = MAX_STEPS, f"stopped after {max_steps} steps"

    for step in range(1, max_steps + 1):
        if prev_z is not None:
            sec = z - prev_z
            tau = sec / np.linalg.norm(sec)
        accepted = False
        while not accepted:
            z_pred = z + ds * tau
            zc = z_pred.copy()
            refreshed = False
            for attempt in range(2):
                ok = False
                for _ in range(CHORD_ITERS + 1):
                    try:
                        G, gnorm = fp.residual(zc)
                    except FloatingPointError:
                        break
                    if gnorm <= CORRECTOR_TOL and np.all(np.isfinite(zc)):
                        ok = True
                        break
                    rhs = np.concatenate([G, [float(tau @ (zc - z_pred))]])
                    zc = zc - Binv @ rhs
                if ok:
                    break
                if refreshed:
                    break
                # stale chord matrix: rebuild it at the predictor and retry once
                try:
                    J = fp.jacobian(z_pred)
                    Binv = bordered_inverse(J, tau)
                except (np.linalg.LinAlgError, FloatingPointError):
                    break
                since_refresh = 0
                refreshed = True
                zc = z_pred.copy()
            if ok:
                accepted = True
            else:
                ds *= 0.5
                if ds < ds_min:
                    verdict = STEP_FAILURE
                    message = f"corrector failed at lam = {z[-1]:.6g} with minimal step"
                    break
        if not accepted:
            break
        prev_z, z = z, zc
        since_refresh += 1
        if since_refresh >= REFRESH_EVERY:
            J = fp.jacobian(z)
            Binv = bordered_inverse(J, (z - prev_z) / np.linalg.norm(z - prev_z))
            since_refresh = 0
        point = observe(z, ds)
        if point.isotropy_k != points[-1].isotropy_k:
            changes.append({"step": step, "lam": point.lam, "from": points[-1].isotropy_k, "to": point.isotropy_k})
        points.append(point)
        if not refreshed:
            ds = min(ds * 1.5, ds_max)
        if point.distance_to_stationary < STATIONARY_TOL:
            verdict, message = HIT_STATIONARY, f"loop collapsed onto a stationary point at lam = {point.lam:.6g}"
            break
        crossing = _segment_crossing(fp, prev_z, z, points[-2], point)
        if crossing is not None:
            # the step jumped across a collapse (typically a pitchfork in the amplitude)
            points.append(crossing)
            changes.append({"step": step, "lam": crossing.lam, "from": point.isotropy_k, "to": SO2_FIXED})
            verdict = HIT_STATIONARY
            message = f"loop passed through a stationary point near lam = {crossing.lam:.6g}"
            break
        if abs(point.lam) > lam_max or point.sup_norm > R:
            verdict, message = UNBOUNDED, f"left the box at lam = {point.lam:.6g}, sup|u| = {point.sup_norm:.6g}"
            break

    return BranchRecord(
        verdict=verdict,
        direction=direction,
        points=points,
        final_loop=FourierLoop.from_coeffs(loop.T, fp.coeffs(z)),
        final_lam=float(z[-1]),
        bounds=bounds,
        message=message,
        isotropy_changes=changes,
    )
