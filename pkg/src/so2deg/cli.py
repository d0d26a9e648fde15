"""Command-line front end: ``so2deg {analyze,verify,trace,reproduce,selftest}``.

Exit codes: 0 proven (or every check passed), 2 not decided, 1 error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import catalog
from .certify import (
    NotProvenError,
    analyze,
    continuation_certificate,
    validate_certificate_dict,
)
from .continuation import HIT_STATIONARY, UNBOUNDED, trace_branch
from .errors import So2DegError, VerificationUnavailable
from .galerkin import DEFAULT_MODES, rk4_check, search_orbits
from .io import dumps, load_spec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNDECIDED = 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    path: str | None = None
    T: float | None = None
    tol_res: float | None = None
    modes: int = DEFAULT_MODES
    kmax: int | None = None
    fmt: str = "text"
    seed: int = 0

    def __post_init__(self):
        if self.T is not None and not self.T > 0:
            raise ValueError("--T must be positive")
        if self.tol_res is not None and not self.tol_res > 0:
            raise ValueError("--tol-res must be positive")
        if self.modes < 1:
            raise ValueError("--modes must be at least 1")
        if self.kmax is not None and self.kmax < 1:
            raise ValueError("--kmax must be at least 1")


def _emit(cfg: RunConfig, payload: dict, text: str) -> None:
    sys.stdout.write(dumps(payload) if cfg.fmt == "json" else text.rstrip("\n") + "\n")


def cmd_analyze(cfg: RunConfig) -> int:
    spec = load_spec(cfg.path, cfg.T)
    cert = analyze(spec, cfg.tol_res, cfg.kmax)
    _emit(cfg, cert.to_dict(), cert.to_text())
    return EXIT_OK if cert.proven else EXIT_UNDECIDED


def _witness_modes(cert) -> list[int]:
    return [r.k for r in cert.comparisons if r.differs]


def cmd_verify(cfg: RunConfig) -> int:
    spec = load_spec(cfg.path, cfg.T)
    if not spec.has_potential:
        raise VerificationUnavailable("hessian-only spec, verification unavailable")
    cert = analyze(spec, cfg.tol_res, cfg.kmax)
    if not cert.proven:
        _emit(cfg, {"certificate": cert.to_dict(), "orbits": [], "attempts": []},
              cert.to_text() + "\nno witness, nothing to verify")
        return EXIT_UNDECIDED
    accepted, attempts = search_orbits(spec, _witness_modes(cert), N=cfg.modes)
    for r in accepted:
        r.checks["rk4"] = rk4_check(spec.potential.grad, r.loop)
    payload = {
        "certificate": {"verdict": cert.verdict, "witness_k": cert.witness_k, "input_sha256": cert.input_digest},
        "orbits": [r.to_dict() for r in accepted],
        "attempts": attempts,
    }
    lines = [f"witness k={cert.witness_k}; searched modes {_witness_modes(cert)}"]
    for a in attempts:
        lines.append(f"  seed mode {a['mode']} amplitude {a['amplitude']:.4g}: {a['outcome']}")
    for r in accepted:
        rk = r.checks["rk4"]
        lines.append(
            f"orbit: minimal period {r.minimal_period:.12g} (isotropy Z_{r.isotropy_k}), "
            f"ODE residual {r.ode_residual:.3e}, |grad| {r.gradient_norm:.3e}, "
            f"distance to stationary {r.distance_to_stationary:.4g}, modes {r.checks['modes']}"
        )
        lines.append(
            f"  RK4 ({rk['steps']} steps): periodicity defect {rk['periodicity_defect']:.3e}, "
            f"max deviation {rk['max_deviation']:.3e}"
        )
    if not accepted:
        lines.append("no non-stationary orbit accepted")
    _emit(cfg, payload, "\n".join(lines))
    return EXIT_OK if accepted else EXIT_ERROR


def _family_for(spec, kind: str):
    from .systems import constant_family, stiffness_family

    if kind == "constant":
        return constant_family(spec.potential, spec.n)
    if spec.model is None:
        raise VerificationUnavailable("the stiffness family needs a model potential")
    return stiffness_family(spec.model)


def cmd_trace(cfg: RunConfig, family: str = "stiffness", directions=(1, -1), max_steps: int = 20000) -> int:
    spec = load_spec(cfg.path, cfg.T)
    if not spec.has_potential:
        raise VerificationUnavailable("hessian-only spec, verification unavailable")
    cont = continuation_certificate(spec, cfg.tol_res)
    accepted, _ = search_orbits(spec, _witness_modes(cont.base), N=cfg.modes)
    if not accepted:
        raise So2DegError("no starting orbit accepted; cannot trace")
    fam = _family_for(spec, family)
    branches = [
        trace_branch(fam, accepted[0], d, length_scale=spec.length_scale, max_steps=max_steps) for d in directions
    ]
    payload = {
        "certificate": cont.to_dict(),
        "family": family,
        "start": accepted[0].to_dict(),
        "branches": [b.to_dict() for b in branches],
    }
    lines = [cont.to_text(), f"family: {family}; start orbit minimal period {accepted[0].minimal_period:.12g}"]
    for b in branches:
        lines.append(
            f"  direction {b.direction:+d}: {b.verdict} after {len(b.points) - 1} steps; {b.message}; "
            f"isotropy values {sorted(set(b.isotropy_log))}; symmetry breaking: {b.symmetry_breaking}"
        )
    _emit(cfg, payload, "\n".join(lines))
    return EXIT_OK if all(b.verdict in (UNBOUNDED, HIT_STATIONARY) for b in branches) else EXIT_UNDECIDED


def _diff_existence(example: str, cert) -> list[str]:
    exp = catalog.EXPECTED[example]
    out = []
    by_x = {}
    for ind, cp in zip(cert.indices, list(catalog.build(example).critical_points)):
        by_x[tuple(np.round(cp.x, 12))] = (ind, cp)
    for label, e in exp["points"].items():
        key = tuple(np.round(np.asarray(e["x"], float), 12))
        if key not in by_x:
            out.append(f"{label}: stationary point {e['x']} not found")
            continue
        ind, cp = by_x[key]
        if ind.brouwer != e["brouwer"]:
            out.append(f"{label}: ind = {ind.brouwer}, expected {e['brouwer']}")
        for k, v in e["jk"].items():
            if ind.jk_table.get(k, 0) != v:
                out.append(f"{label}: j_{k} = {ind.jk_table.get(k, 0)}, expected {v}")
        if sorted(ind.resonant_modes) != e["resonant"]:
            out.append(f"{label}: resonant modes {sorted(ind.resonant_modes)}, expected {e['resonant']}")
        if not np.allclose(cp.hessian, e["hessian"], atol=1e-12):
            out.append(f"{label}: Hessian differs from the expected matrix")
        if e.get("singular") and "residual" not in ind.provenance["brouwer"]:
            out.append(f"{label}: Brouwer index not obtained through the sum-formula residual")
    extra = len(cert.indices) - 1 - len(exp["points"])
    if extra:
        out.append(f"{extra:+d} stationary points relative to the expected list")
    inf = cert.index("infinity")
    if inf.brouwer != exp["infinity"]["brouwer"]:
        out.append(f"infinity: ind = {inf.brouwer}, expected {exp['infinity']['brouwer']}")
    for k, v in exp["infinity"]["jk"].items():
        if inf.jk_table.get(k, 0) != v:
            out.append(f"infinity: j_{k} = {inf.jk_table.get(k, 0)}, expected {v}")
    if sorted(cert.global_K) != exp["global_K"]:
        out.append(f"exclusion set {sorted(cert.global_K)}, expected {exp['global_K']}")
    if cert.verdict != exp["verdict"]:
        out.append(f"verdict {cert.verdict}, expected {exp['verdict']}")
    if (cert.witness_k, cert.lhs, cert.rhs) != exp["witness"]:
        out.append(f"witness {(cert.witness_k, cert.lhs, cert.rhs)}, expected {exp['witness']}")
    return out


def reproduce(example: str) -> tuple[list[str], dict, str]:
    """Mismatch list, JSON payload and text report for one worked example."""
    if example in ("6.5", "6.6", "6.7"):
        cert = analyze(catalog.build(example))
        mismatches = _diff_existence(example, cert)
        return mismatches, cert.to_dict(), cert.to_text()
    if example == "6.8":
        cont = continuation_certificate(catalog.build("6.5"))
        mismatches = _diff_existence("6.5", cont.base)
        if cont.witness_k != 2:
            mismatches.append(f"continuation witness {cont.witness_k}, expected 2")
        return mismatches, cont.to_dict(), cont.to_text()
    if example == "6.9":
        mismatches = []
        cont = continuation_certificate(catalog.build("6.7"))
        if cont.witness_k != 1:
            mismatches.append(f"continuation witness {cont.witness_k}, expected 1")
        if cont.infinite_sequence_possible:
            mismatches.append("the origin is not resonant at T = 2 pi, yet the accumulation alternative was kept")
        edge = math.pi / math.sqrt(2.0)
        for T, proven in ((0.99 * edge, False), (1.01 * edge, True)):
            got = analyze(catalog.build("6.7", T)).proven
            if got != proven:
                mismatches.append(f"T = {T:.6g}: proven = {got}, expected {proven}")
        return mismatches, cont.to_dict(), cont.to_text()
    raise KeyError(f"unknown example {example!r}")


def cmd_reproduce(cfg: RunConfig, example: str) -> int:
    mismatches, payload, text = reproduce(example)
    payload = {"example": example, "match": not mismatches, "mismatches": mismatches, "report": payload}
    summary = "all values match" if not mismatches else "MISMATCH:\n" + "\n".join(f"  {m}" for m in mismatches)
    _emit(cfg, payload, f"{text}\n{example}: {summary}")
    return EXIT_OK if not mismatches else EXIT_ERROR


def selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Quick internal consistency checks; returns (name, passed, detail) rows."""
    from .brouwer import brouwer_degree
    from .eqdeg import brouwer_index_nondegenerate, linear_degree, linear_degree_via_product
    from .errors import ResonanceError
    from .ring import RingElement

    rng = np.random.default_rng(seed)
    rows = []

    def rand_elem():
        return RingElement(int(rng.integers(-9, 10)), {k: int(rng.integers(-9, 10)) for k in range(1, 5)}, 4)

    bad = 0
    for _ in range(300):
        a, b, c = rand_elem(), rand_elem(), rand_elem()
        ok = (a * b == b * a and (a * b) * c == a * (b * c) and a * (b + c) == a * b + a * c
              and a * RingElement.unit(4) == a)
        bad += not ok
    rows.append(("ring laws", bad == 0, f"{bad} failures in 300 triples"))

    bad = done = 0
    while done < 50:
        n = int(rng.integers(1, 5))
        M = rng.normal(size=(n, n)) * 4
        A, T = (M + M.T) / 2, float(rng.uniform(0.5, 8.0))
        try:
            bad += linear_degree(A, T) != linear_degree_via_product(A, T)
        except ResonanceError:
            continue
        done += 1
    rows.append(("two-path linear degree", bad == 0, f"{bad} disagreements in 50 matrices"))

    bad = 0
    for _ in range(10):
        n = int(rng.integers(1, 4))
        M = rng.normal(size=(n, n))
        H = (M + M.T) / 2 + np.diag(rng.choice([-1.5, 1.5], size=n))
        deg = brouwer_degree(lambda x: -(H @ x), np.zeros(n), 1.0)
        bad += deg != brouwer_index_nondegenerate(H)
    rows.append(("Brouwer oracle", bad == 0, f"{bad} disagreements in 10 Hessians"))

    for ex in ("6.5", "6.6", "6.7"):
        mism, _, _ = reproduce(ex)
        rows.append((f"example {ex}", not mism, "; ".join(mism) or "match"))
    cert = analyze(catalog.build("6.5"))
    try:
        validate_certificate_dict(cert.to_dict())
        rows.append(("certificate round trip", True, "re-validated"))
    except ValueError as exc:
        rows.append(("certificate round trip", False, str(exc)))
    return rows


def cmd_selftest(cfg: RunConfig) -> int:
    rows = selftest(cfg.seed)
    payload = {"seed": cfg.seed, "checks": [{"name": n, "passed": p, "detail": d} for n, p, d in rows]}
    text = "\n".join(f"[{'PASS' if p else 'FAIL'}] {n}: {d}" for n, p, d in rows)
    _emit(cfg, payload, text)
    return EXIT_OK if all(p for _, p, _ in rows) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--T", type=float, default=None, help="override the period")
    common.add_argument("--tol-res", type=float, default=None, help="resonance tolerance (default 1e-8 (1 + |A|_F))")
    common.add_argument("--modes", type=int, default=DEFAULT_MODES, help="Fourier modes N for the Galerkin solver")
    common.add_argument("--kmax", type=int, default=None, help="largest mode k to compare")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")

    parser = argparse.ArgumentParser(prog="so2deg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("analyze", "decide existence of non-stationary T-periodic solutions"),
        ("verify", "search for an orbit at the certificate's witness modes"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("path", help="system JSON file")
    p = sub.add_parser("trace", parents=[common], help="continue an orbit through a potential family")
    p.add_argument("path")
    p.add_argument("--family", choices=("stiffness", "constant"), default="stiffness")
    p.add_argument("--direction", choices=("+1", "-1", "both"), default="both")
    p.add_argument("--max-steps", type=int, default=20000)
    p = sub.add_parser("reproduce", parents=[common], help="recompute a worked example and diff it")
    p.add_argument("example", choices=("6.5", "6.6", "6.7", "6.8", "6.9"))
    sub.add_parser("selftest", parents=[common], help="quick internal consistency checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            path=getattr(args, "path", None),
            T=args.T,
            tol_res=args.tol_res,
            modes=args.modes,
            kmax=args.kmax,
            fmt=args.format,
            seed=args.seed,
        )
        if cfg.command == "analyze":
            return cmd_analyze(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg)
        if cfg.command == "trace":
            dirs = {"+1": (1,), "-1": (-1,), "both": (1, -1)}[args.direction]
            return cmd_trace(cfg, args.family, dirs, args.max_steps)
        if cfg.command == "reproduce":
            return cmd_reproduce(cfg, args.example)
        return cmd_selftest(cfg)
    except NotProvenError as exc:
        print(f"error: not proven: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    except OSError as exc:
        print(f"error: I/O: {exc}", file=sys.stderr)
    except So2DegError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
