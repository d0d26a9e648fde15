"""Fourier-Galerkin search for non-stationary T-periodic orbits.

A loop is truncated to

    u(t) = a_0 + sum_{k=1}^{N} a_k cos(w_k t) + b_k sin(w_k t),   w_k = 2 pi k / T,

and the action Phi(u) = int_0^T |u'|^2 / 2 - V(u) dt is differentiated in
the H^1_T inner product.  On mode k the gradient is

    g_k = Lambda(k) a_k - T^2 / (4 k^2 pi^2 + T^2) * N_k,

where Lambda(k) is the linear block for a reference Hessian A and N_k is the
k-th Fourier coefficient of V'(u) - A u, computed by the trapezoidal rule on
4N + 4 nodes.  Zeros of g are found by damped Newton iteration on a slice
that pins one sine coefficient, which removes the time-shift degeneracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from .errors import OrbitNotFound, VerificationUnavailable
from .spectral import eigen_sym, lambda_block, threshold

DEFAULT_MODES = 64
MAX_MODES = 512
NEWTON_TOL = 1e-10
ODE_TOL = 1e-7
MAX_NEWTON = 50
STATIONARY_TOL = 1e-4
ACTIVE_REL = 1e-6
SEED_FACTORS = (0.1, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class FourierLoop:
    """Truncated Fourier series of a T-periodic loop in R^n."""

    T: float
    a0: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def N(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a0.shape[0]

    @classmethod
    def from_coeffs(cls, T: float, c: np.ndarray) -> "FourierLoop":
        c = np.asarray(c, dtype=float)
        N = (c.shape[0] - 1) // 2
        return cls(T, c[0].copy(), c[1:N + 1].copy(), c[N + 1:].copy())

    @classmethod
    def constant(cls, T: float, x, N: int) -> "FourierLoop":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(T, x.copy(), np.zeros((N, x.size)), np.zeros((N, x.size)))

    def coeffs(self) -> np.ndarray:
        return np.vstack([self.a0[None, :], self.a, self.b])

    def frequencies(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(1, self.N + 1) / self.T

    def evaluate(self, t, derivative: int = 0) -> np.ndarray:
        """Values (or time derivatives) at times ``t``, shape ``(len(t), n)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self.frequencies()
        ph = np.outer(t, w)
        cos, sin = np.cos(ph), np.sin(ph)
        d = derivative % 4
        # d^m/dt^m of (cos, sin) cycles through (cos, sin), (-sin, cos), (-cos, -sin), (sin, -cos)
        cc, cs = [(cos, sin), (-sin, cos), (-cos, -sin), (sin, -cos)][d]
        scale = w**derivative
        out = (cc * scale) @ self.a + (cs * scale) @ self.b
        if derivative == 0:
            out = out + self.a0
        return out

    def mode_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.a**2, axis=1) + np.sum(self.b**2, axis=1))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs()))

    def shift(self, tau: float) -> "FourierLoop":
        """The loop t -> u(t + tau)."""
        ph = self.frequencies() * tau
        c, s = np.cos(ph)[:, None], np.sin(ph)[:, None]
        return FourierLoop(self.T, self.a0.copy(), self.a * c + self.b * s, self.b * c - self.a * s)

    def resample(self, N: int) -> "FourierLoop":
        n = self.n
        a = np.zeros((N, n))
        b = np.zeros((N, n))
        m = min(N, self.N)
        a[:m], b[:m] = self.a[:m], self.b[:m]
        return FourierLoop(self.T, self.a0.copy(), a, b)

    def to_dict(self) -> dict:
        return {"T": self.T, "a0": self.a0.tolist(), "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FourierLoop":
        return cls(float(d["T"]), np.asarray(d["a0"], float), np.asarray(d["a"], float), np.asarray(d["b"], float))

    def to_csv(self, samples: int = 512) -> str:
        t = np.linspace(0.0, self.T, samples, endpoint=False)
        u = self.evaluate(t)
        header = "t," + ",".join(f"u{i}" for i in range(self.n))
        rows = [f"{ti:.12g}," + ",".join(f"{v:.12g}" for v in ui) for ti, ui in zip(t, u)]
        return "\n".join([header, *rows]) + "\n"


def minimal_period_of(loop: FourierLoop, rel_tol: float = ACTIVE_REL) -> tuple[float, int]:
    """``(T / g, g)`` with g the gcd of the harmonics carrying weight."""
    norms = loop.mode_norms()
    cut = rel_tol * loop.norm()
    active = [k + 1 for k, v in enumerate(norms) if v > cut]
    if not active:
        raise ValueError("constant loop has no minimal period")
    g = reduce(math.gcd, active)
    return loop.T / g, g


class GalerkinProblem:
    """Truncated gradient of the action for a potential with gradient ``grad``.

    ``grad`` and ``hess`` act on arrays of points of shape ``(M, n)``.
    """

    def __init__(self, grad, hess, n: int, T: float, N: int = DEFAULT_MODES, A_ref=None, value=None):
        self.grad_fn, self.hess_fn, self.value_fn = grad, hess, value
        self.n, self.T, self.N = n, float(T), N
        self.M = 4 * N + 4
        self.A_ref = np.zeros((n, n)) if A_ref is None else np.asarray(A_ref, dtype=float)
        self.t = np.arange(self.M) * self.T / self.M
        w = 2.0 * math.pi * np.arange(1, N + 1) / self.T
        ph = np.outer(self.t, w)
        self.E = np.hstack([np.ones((self.M, 1)), np.cos(ph), np.sin(ph)])
        self.P = self.E.T * (2.0 / self.M)
        self.P[0] /= 2.0
        self.w = np.concatenate([[0.0], w, w])
        self.scale = 1.0 / (self.w**2 + 1.0)
        blocks = [-self.A_ref] + [lambda_block(self.A_ref, self.T, k) for k in range(1, N + 1)]
        self.blocks = np.array(blocks + blocks[1:])
        self.weights = np.concatenate([[self.T], 0.5 * self.T * (1.0 + w**2), 0.5 * self.T * (1.0 + w**2)])

    @property
    def size(self) -> int:
        return (2 * self.N + 1) * self.n

    def points(self, c: np.ndarray) -> np.ndarray:
        return self.E @ c

    def gradient(self, c: np.ndarray) -> np.ndarray:
        """H^1 gradient coefficients, same layout ``(2N+1, n)`` as ``c``."""
        u = self.points(c)
        nonlin = self.grad_fn(u) - u @ self.A_ref
        if not np.all(np.isfinite(nonlin)):
            raise FloatingPointError("potential gradient is not finite along the loop")
        linear = np.einsum("rij,rj->ri", self.blocks, c)
        return linear - self.scale[:, None] * (self.P @ nonlin)

    def jacobian(self, c: np.ndarray) -> np.ndarray:
        """Derivative of :meth:`gradient`, flattened to ``(size, size)``."""
        u = self.points(c)
        H = self.hess_fn(u) - self.A_ref
        R = 2 * self.N + 1
        n = self.n
        J = np.zeros((R, n, R, n))
        for i in range(n):
            for l in range(n):
                J[:, i, :, l] = -(self.P * H[:, i, l][None, :]) @ self.E
        J *= self.scale[:, None, None, None]
        for r in range(R):
            J[r, :, r, :] += self.blocks[r]
        return J.reshape(R * n, R * n)

    def action(self, c: np.ndarray) -> float:
        if self.value_fn is None:
            raise ValueError("action needs the potential value")
        kinetic = 0.25 * self.T * np.sum((self.w[:, None] * c) ** 2)
        return kinetic - self.T / self.M * float(np.sum(self.value_fn(self.points(c))))

    def inner(self, g: np.ndarray, v: np.ndarray) -> float:
        """H^1_T inner product of two coefficient arrays."""
        return float(np.sum(self.weights[:, None] * g * v))

    def h1_norm(self, g: np.ndarray) -> float:
        return math.sqrt(max(self.inner(g, g), 0.0))


def galerkin_gradient(spec, loop: FourierLoop) -> FourierLoop:
    """H^1 gradient of the truncated action at ``loop``."""
    pot = _potential(spec)
    prob = GalerkinProblem(pot.grad, pot.hess, spec.n, loop.T, loop.N, spec.v_inf, getattr(pot, "value", None))
    return FourierLoop.from_coeffs(loop.T, prob.gradient(loop.coeffs()))


def _potential(spec):
    if getattr(spec, "potential", None) is None:
        raise VerificationUnavailable("hessian-only spec, verification unavailable")
    return spec.potential


@dataclass
class OrbitResult:
    loop: FourierLoop
    ode_residual: float
    minimal_period: float | None
    isotropy_k: int | None
    distance_to_stationary: float
    gradient_norm: float
    iterations: int
    pin: tuple[int, int]
    seed: dict = field(default_factory=dict)
    energy_tail: float = 0.0
    accepted: bool = False
    checks: dict = field(default_factory=dict)

    @property
    def non_stationary(self) -> bool:
        return self.distance_to_stationary > STATIONARY_TOL and self.isotropy_k is not None

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "minimal_period": self.minimal_period,
            "isotropy_k": self.isotropy_k,
            "ode_residual": self.ode_residual,
            "gradient_norm": self.gradient_norm,
            "distance_to_stationary": self.distance_to_stationary,
            "energy_tail": self.energy_tail,
            "iterations": self.iterations,
            "pin": list(self.pin),
            "seed": dict(self.seed),
            "checks": dict(self.checks),
            "loop": self.loop.to_dict(),
        }


def ode_residual(grad, loop: FourierLoop, samples: int | None = None) -> float:
    """sup_t |u'' + V'(u)| on a uniform grid finer than the quadrature grid."""
    if samples is None:
        samples = max(2048, 16 * (2 * loop.N + 1))
    t = np.linspace(0.0, loop.T, samples, endpoint=False)
    r = loop.evaluate(t, 2) + grad(loop.evaluate(t))
    return float(np.max(np.linalg.norm(r, axis=1)))


def stationary_distance(loop: FourierLoop, stationary_points, samples: int = 512, values=None) -> float:
    """Sup-distance from the loop to the nearest stationary point.

    ``values`` may carry precomputed samples of the loop.
    """
    if values is None:
        values = loop.evaluate(np.linspace(0.0, loop.T, samples, endpoint=False))
    u = values
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in stationary_points]
    if not pts:
        pts = [loop.a0]
    return float(min(np.max(np.linalg.norm(u - p, axis=1)) for p in pts))


def newton_solve(prob: GalerkinProblem, c0: np.ndarray, pin: tuple[int, int], tol: float = NEWTON_TOL,
                 max_iter: int = MAX_NEWTON):
    """Damped Newton on the slice ``c[pin] = 0``; returns ``(c, |g|_H1, iterations)``."""
    c = np.array(c0, dtype=float)
    c[pin] = 0.0
    flat_pin = pin[0] * prob.n + pin[1]
    keep = np.array([i for i in range(prob.size) if i != flat_pin])
    g = prob.gradient(c)
    res = prob.h1_norm(g)
    for it in range(1, max_iter + 1):
        if res <= tol:
            return c, res, it - 1
        J = prob.jacobian(c)[np.ix_(keep, keep)]
        try:
            step = np.linalg.solve(J, -g.reshape(-1)[keep])
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -g.reshape(-1)[keep], rcond=None)[0]
        t = 1.0
        while True:
            trial = c.copy().reshape(-1)
            trial[keep] += t * step
            trial = trial.reshape(c.shape)
            try:
                g_trial = prob.gradient(trial)
                res_trial = prob.h1_norm(g_trial)
            except FloatingPointError:
                res_trial = math.inf
            if res_trial < res or t < 1e-3:
                break
            t *= 0.5
        if not math.isfinite(res_trial):
            break
        c, g, res = trial, g_trial, res_trial
    if res <= tol:
        return c, res, max_iter
    raise OrbitNotFound(f"Newton did not converge in {max_iter} iterations (|g| = {res:.3e})")


def _stationary_points(spec):
    return [cp.x for cp in spec.critical_points]


def assess(prob: GalerkinProblem, c: np.ndarray, grad, stationary_points, pin, res, iters, seed) -> OrbitResult:
    loop = FourierLoop.from_coeffs(prob.T, c)
    dist = stationary_distance(loop, stationary_points)
    try:
        period, iso = minimal_period_of(loop)
    except ValueError:
        period, iso = None, None
    norm = max(loop.norm(), 1e-300)
    tail = float(np.max(loop.mode_norms()[-max(1, loop.N // 4):]) / norm)
    result = OrbitResult(
        loop=loop,
        ode_residual=ode_residual(grad, loop),
        minimal_period=period,
        isotropy_k=iso,
        distance_to_stationary=dist,
        gradient_norm=res,
        iterations=iters,
        pin=tuple(pin),
        seed=seed,
        energy_tail=tail,
    )
    result.accepted = (
        result.non_stationary and res <= NEWTON_TOL and result.ode_residual <= ODE_TOL and tail <= 1e-3
    )
    return result


def find_orbit(
    spec,
    seed_mode: int,
    seed_amplitude: float,
    direction=None,
    center=None,
    N: int = DEFAULT_MODES,
    tol: float = NEWTON_TOL,
    refine: bool = True,
) -> OrbitResult:
    """Newton search from the seed center + amplitude * direction * cos(w_k t).

    With ``refine`` the truncation is doubled (up to ``MAX_MODES``) while
    the converged loop misses the ODE residual tolerance.  Raises
    :class:`OrbitNotFound` when Newton diverges or lands on a stationary
    point.
    """
    pot = _potential(spec)
    if seed_mode < 1 or seed_mode > N:
        raise ValueError(f"seed mode must lie in [1, {N}]")
    n = spec.n
    q = np.zeros(n) if direction is None else np.asarray(direction, dtype=float).reshape(-1)
    if direction is None:
        q[0] = 1.0
    q = q / np.linalg.norm(q)
    x0 = np.zeros(n) if center is None else np.asarray(center, dtype=float).reshape(-1)

    prob = GalerkinProblem(pot.grad, pot.hess, n, spec.T, N, spec.v_inf, getattr(pot, "value", None))
    c0 = np.zeros((2 * N + 1, n))
    c0[0] = x0
    c0[seed_mode] = seed_amplitude * q
    pin = (N + seed_mode, int(np.argmax(np.abs(q))))
    seed = {"mode": seed_mode, "amplitude": float(seed_amplitude), "direction": q.tolist(), "center": x0.tolist()}
    c, res, iters = newton_solve(prob, c0, pin, tol)
    result = assess(prob, c, pot.grad, _stationary_points(spec), pin, res, iters, seed)
    if not result.non_stationary:
        raise OrbitNotFound(f"Newton converged to a stationary solution from seed {seed}")
    while refine and result.ode_residual > ODE_TOL and prob.N < MAX_MODES:
        loop = result.loop.resample(2 * prob.N)
        prob = GalerkinProblem(pot.grad, pot.hess, n, spec.T, loop.N, spec.v_inf, getattr(pot, "value", None))
        pin = (loop.N + seed_mode, pin[1])
        c, res, more = newton_solve(prob, loop.coeffs(), pin, tol)
        iters += more
        result = assess(prob, c, pot.grad, _stationary_points(spec), pin, res, iters, seed)
    result.checks["modes"] = prob.N
    return result


def seed_directions(spec, k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Candidate ``(center, direction)`` pairs for exciting mode k.

    Resonant eigenvectors come first, then eigenvectors whose eigenvalue
    exceeds the mode-k threshold, at each stationary point.
    """
    theta = threshold(k, spec.T)
    resonant, unstable = [], []
    for cp in spec.critical_points:
        sd = eigen_sym(cp.hessian)
        tol = 1e-8 * (1.0 + sd.norm)
        for lam, q in zip(sd.values, sd.eigenbasis.T):
            if abs(lam - theta) <= tol:
                resonant.append((cp.x, q))
            elif lam > theta:
                unstable.append((cp.x, q))
    out = resonant + unstable
    if not out:
        out = [(cp.x, np.eye(spec.n)[0]) for cp in spec.critical_points[:1]] or [(np.zeros(spec.n), np.eye(spec.n)[0])]
    return out


def search_orbits(spec, modes, N: int = DEFAULT_MODES, factors=SEED_FACTORS, stop_at_first: bool = True):
    """Try the seed schedule for each mode; returns ``(accepted, attempts)``."""
    accepted, attempts = [], []
    scale = spec.length_scale
    for k in modes:
        for center, q in seed_directions(spec, k):
            for f in factors:
                seed = {"mode": k, "amplitude": f * scale, "direction": np.asarray(q).tolist()}
                try:
                    r = find_orbit(spec, k, f * scale, q, center, N)
                except (OrbitNotFound, FloatingPointError) as exc:
                    attempts.append({**seed, "outcome": str(exc)})
                    continue
                attempts.append({**seed, "outcome": "accepted" if r.accepted else "rejected"})
                if r.accepted:
                    accepted.append(r)
                    if stop_at_first:
                        return accepted, attempts
    return accepted, attempts


def rk4_check(grad, loop: FourierLoop, steps: int = 10_000) -> dict:
    """Integrate u'' = -V'(u) with classical RK4 from the loop's initial state."""
    n = loop.n
    h = loop.T / steps
    y = np.concatenate([loop.evaluate(0.0)[0], loop.evaluate(0.0, 1)[0]])

    def f(y):
        return np.concatenate([y[n:], -grad(y[:n][None, :])[0]])

    y0 = y.copy()
    deviation = 0.0
    for i in range(1, steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % 10 == 0 or i == steps:
            deviation = max(deviation, float(np.linalg.norm(y[:n] - loop.evaluate(i * h)[0])))
    periodicity = float(np.linalg.norm(y[:n] - y0[:n]) + np.linalg.norm(y[n:] - y0[n:]))
    return {"steps": steps, "periodicity_defect": periodicity, "max_deviation": deviation}
