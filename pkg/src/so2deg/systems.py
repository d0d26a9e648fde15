"""System specifications and the softened-Coulomb model potential.

The model potential on R^n is

    V(x) = 1/2 <B x, x> - 1 / sqrt(|x|^2 + a),     a > 0,

with B = V''(inf) symmetric.  Its gradient is (B + (|x|^2 + a)^(-3/2) Id) x,
so the critical points sit on eigen-directions of B whose eigenvalue lies
in [-a^(-3/2), 0).  With n = 1, B = 0 and a = 1/4 this is the circular
Sitnikov problem.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ModelHypothesisError, SpecError
from .spectral import as_sym_matrix, eigen_sym

GRADIENT_TOL = 1e-8


@dataclass(frozen=True)
class ModelPotential:
    v_inf: np.ndarray
    a: float

    def __post_init__(self):
        object.__setattr__(self, "v_inf", as_sym_matrix(self.v_inf))
        if not self.a > 0:
            raise ModelHypothesisError(f"softening parameter a must be positive, got {self.a}")

    @property
    def n(self) -> int:
        return self.v_inf.shape[0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        quad = 0.5 * np.einsum("...i,ij,...j->...", x, self.v_inf, x)
        return quad - 1.0 / np.sqrt(r2 + self.a)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        return x @ self.v_inf + x / (r2 + self.a) ** 1.5

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)[..., None, None]
        outer = x[..., :, None] * x[..., None, :]
        eye = np.eye(self.n)
        return self.v_inf + eye / (r2 + self.a) ** 1.5 - 3.0 * outer / (r2 + self.a) ** 2.5

    @property
    def length_scale(self) -> float:
        return max(1.0, math.sqrt(self.a))


def model_gradient(m: ModelPotential, x) -> np.ndarray:
    return m.grad(np.asarray(x, dtype=float))


def model_hessian(m: ModelPotential, x) -> np.ndarray:
    return m.hess(np.asarray(x, dtype=float))


def model_critical_points(m: ModelPotential) -> list[np.ndarray]:
    """All zeros of the model gradient: the origin and +-amp * eigenvector.

    An eigenvalue lam in [-a^(-3/2), 0) produces the pair +-amp q with
    amp = sqrt(lam^(-2/3) - a); such eigenvalues must be simple.  At the
    boundary lam = -a^(-3/2) the amplitude is zero and the pair merges into
    the origin.
    """
    spec = eigen_sym(m.v_inf)
    bound = m.a ** -1.5
    tol = spec.cluster_tol
    points = [np.zeros(m.n)]
    start = 0
    for lam, mult in zip(spec.eigenvalues, spec.multiplicities):
        cols = spec.eigenbasis[:, start:start + mult]
        start += mult
        if not (-bound - tol <= lam < -tol):
            continue
        if mult > 1:
            raise ModelHypothesisError(
                f"eigenvalue {lam:.6g} of V''(inf) in [-a^(-3/2), 0) has multiplicity {mult}"
            )
        amp2 = abs(lam) ** (-2.0 / 3.0) - m.a
        if amp2 <= tol:
            continue
        q = cols[:, 0]
        # deterministic orientation: largest component positive
        q = q * np.sign(q[np.argmax(np.abs(q))])
        amp = math.sqrt(amp2)
        points.append(amp * q)
        points.append(-amp * q)
    return points


@dataclass(frozen=True)
class CriticalPoint:
    id: str
    x: np.ndarray
    hessian: np.ndarray
    brouwer: int | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "x": self.x.tolist(), "hessian": self.hessian.tolist()}
        if self.brouwer is not None:
            d["brouwer"] = self.brouwer
        return d


@dataclass(frozen=True)
class SystemSpec:
    """Input to the degree pipeline.

    ``potential`` is optional; it carries vectorised ``value``, ``grad`` and
    ``hess`` callables over arrays of shape ``(..., n)`` and enables the
    orbit verifier.  ``brouwer_inf`` overrides ind(-V', inf).
    """

    n: int
    T: float
    v_inf: np.ndarray
    critical_points: tuple[CriticalPoint, ...]
    potential: object | None = None
    brouwer_inf: int | None = None
    brouwer_inf_source: str | None = None
    name: str = ""
    model: ModelPotential | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.T > 0:
            raise SpecError(f"period T must be positive, got {self.T}")
        v_inf = as_sym_matrix(self.v_inf)
        if v_inf.shape != (self.n, self.n):
            raise SpecError(f"v_inf has shape {v_inf.shape}, expected ({self.n}, {self.n})")
        object.__setattr__(self, "v_inf", v_inf)
        pts = []
        for cp in self.critical_points:
            x = np.asarray(cp.x, dtype=float).reshape(-1)
            if x.size != self.n:
                raise SpecError(f"critical point {cp.id!r} has dimension {x.size}, expected {self.n}")
            H = as_sym_matrix(cp.hessian)
            if H.shape != (self.n, self.n):
                raise SpecError(f"Hessian of {cp.id!r} has shape {H.shape}")
            pts.append(CriticalPoint(str(cp.id), x, H, cp.brouwer))
        ids = [cp.id for cp in pts]
        if len(set(ids)) != len(ids):
            raise SpecError("critical point ids must be unique")
        for i in range(len(pts)):
            for j in range(i):
                if np.linalg.norm(pts[i].x - pts[j].x) <= 1e-10:
                    raise SpecError(f"critical points {pts[j].id!r} and {pts[i].id!r} coincide")
        if self.potential is not None:
            scale = 1.0 + np.linalg.norm(v_inf)
            for cp in pts:
                g = np.linalg.norm(self.potential.grad(cp.x))
                if g > GRADIENT_TOL * scale:
                    raise SpecError(f"|V'| = {g:.3g} at listed critical point {cp.id!r}")
        object.__setattr__(self, "critical_points", tuple(pts))

    @property
    def has_potential(self) -> bool:
        return self.potential is not None

    @property
    def length_scale(self) -> float:
        scale = max([1.0] + [float(np.linalg.norm(cp.x)) for cp in self.critical_points])
        if self.model is not None:
            scale = max(scale, self.model.length_scale)
        return scale

    def with_period(self, T: float) -> "SystemSpec":
        return SystemSpec(
            self.n, T, self.v_inf, self.critical_points, self.potential,
            self.brouwer_inf, self.brouwer_inf_source, self.name, self.model, dict(self.extra),
        )

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "T": self.T,
            "v_inf": self.v_inf.tolist(),
            "critical_points": [cp.to_dict() for cp in self.critical_points],
        }
        if self.model is not None:
            d["a"] = self.model.a
        if self.brouwer_inf is not None:
            d["brouwer_inf"] = self.brouwer_inf
        if self.name:
            d["name"] = self.name
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def build_system(m: ModelPotential, T: float, name: str = "") -> SystemSpec:
    """Assemble the pipeline input for the model potential at period T."""
    from .eqdeg import index_at_infinity_sign

    points = model_critical_points(m)
    cps = []
    for i, x in enumerate(points):
        cid = "origin" if i == 0 else f"c{(i + 1) // 2}{'+' if i % 2 else '-'}"
        cps.append(CriticalPoint(cid, x, model_hessian(m, x)))
    return SystemSpec(
        n=m.n,
        T=float(T),
        v_inf=m.v_inf,
        critical_points=tuple(cps),
        potential=m,
        brouwer_inf=index_at_infinity_sign(m.v_inf, m.n),
        brouwer_inf_source="eqdeg.index_at_infinity_sign (model family)",
        name=name,
        model=m,
    )


@dataclass(frozen=True)
class PotentialFamily:
    """V_lam = V_0 + lam/2 <D x, x>; ``D = 0`` gives the constant family."""

    base: object
    direction: np.ndarray

    @property
    def n(self) -> int:
        return self.direction.shape[0]

    def grad(self, x, lam: float):
        return self.base.grad(x) + lam * (np.asarray(x, dtype=float) @ self.direction)

    def hess(self, x, lam: float):
        return self.base.hess(x) + lam * self.direction

    def dgrad_dlam(self, x, lam: float):
        return np.asarray(x, dtype=float) @ self.direction

    def stationary_points(self, lam: float) -> list[np.ndarray]:
        """Critical points of V_lam when the base is a model potential."""
        if isinstance(self.base, ModelPotential):
            return model_critical_points(ModelPotential(self.base.v_inf + lam * self.direction, self.base.a))
        return [np.zeros(self.n)]

    def at(self, lam: float):
        return _FrozenFamily(self, lam)


@dataclass(frozen=True)
class _FrozenFamily:
    family: PotentialFamily
    lam: float

    def grad(self, x):
        return self.family.grad(x, self.lam)

    def hess(self, x):
        return self.family.hess(x, self.lam)


def constant_family(potential, n: int) -> PotentialFamily:
    return PotentialFamily(potential, np.zeros((n, n)))


def stiffness_family(m: ModelPotential, direction=None) -> PotentialFamily:
    """Model potential with V''(inf) shifted by lam * direction (identity by default)."""
    D = np.eye(m.n) if direction is None else as_sym_matrix(direction)
    return PotentialFamily(m, D)
