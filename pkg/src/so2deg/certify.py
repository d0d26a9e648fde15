"""Existence and continuation certificates built from equivariant indices.

A system with stationary points p_1, ..., p_q and linearisation V''(inf) at
infinity has a non-stationary T-periodic solution whenever, for some mode
k >= 1 at which every index is defined,

    I(inf, T)_k  !=  sum_i I(p_i, T)_k .

The SO(2) coordinates always balance (that is the sum formula for Brouwer
indices), so witnesses are found among the Z_k coordinates only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .eqdeg import (
    EquivariantIndex,
    brouwer_index_degenerate,
    brouwer_index_nondegenerate,
    exclusion_set,
    index_IV,
)
from .errors import BrouwerIndexError, CriterionSilentError, NotProvenError
from .spectral import default_tol_res, k_cutoff, morse_index, spectrum
from .systems import SystemSpec

PROVEN = "proven"
NOT_DECIDED = "not-decided"


def _resolve_brouwer(spec: SystemSpec, allow_residual: bool = True) -> dict[str, tuple[int, str]]:
    """Brouwer index and its source for every critical point and for infinity."""
    known: dict[str, tuple[int, str]] = {}
    unknown: list[str] = []

    for i, cp in enumerate(spec.critical_points):
        if cp.brouwer is not None:
            known[cp.id] = (int(cp.brouwer), "supplied")
        elif not morse_index(cp.hessian).degenerate:
            known[cp.id] = (brouwer_index_nondegenerate(cp.hessian), "eqdeg.brouwer_index_nondegenerate")
        elif spec.potential is not None and spec.n <= 3:
            others = [np.linalg.norm(cp.x - o.x) for j, o in enumerate(spec.critical_points) if j != i]
            radius = 0.5 * min(others) if others else 0.1 * spec.length_scale
            known[cp.id] = (
                brouwer_index_degenerate(spec.potential.grad, cp.x, radius),
                f"eqdeg.brouwer_index_degenerate (radius {radius:.6g})",
            )
        else:
            unknown.append(cp.id)

    if spec.brouwer_inf is not None:
        known["infinity"] = (int(spec.brouwer_inf), spec.brouwer_inf_source or "supplied")
    elif not morse_index(spec.v_inf).degenerate:
        known["infinity"] = (brouwer_index_nondegenerate(spec.v_inf), "eqdeg.brouwer_index_nondegenerate")
    else:
        unknown.append("infinity")

    if not unknown:
        return known
    if not allow_residual:
        raise BrouwerIndexError(f"Brouwer index unavailable for {unknown}")
    if len(unknown) > 1:
        raise BrouwerIndexError(
            f"Brouwer index unavailable for {unknown}; the sum formula can recover only one"
        )
    missing = unknown[0]
    total = sum(v for key, (v, _) in known.items() if key != "infinity")
    if missing == "infinity":
        known[missing] = (total, "certify.sum_formula residual")
    else:
        known[missing] = (known["infinity"][0] - total, "certify.sum_formula residual")
    return known


def sum_formula_check(spec: SystemSpec) -> tuple[int, int, int]:
    """``(ind(-V', inf), sum of ind(-V', p_i), residual)``."""
    known = _resolve_brouwer(spec, allow_residual=False)
    lhs = known["infinity"][0]
    rhs = sum(v for key, (v, _) in known.items() if key != "infinity")
    return lhs, rhs, lhs - rhs


def minimal_period_menu(resonant_modes, T: float) -> set[float]:
    """Periods T / g for every gcd g of a nonempty subset of the modes."""
    modes = set(resonant_modes)
    if not modes:
        raise ValueError("minimal period menu needs at least one resonant mode")
    return {T / g for g in exclusion_set(modes)}


@dataclass(frozen=True)
class ComparisonRow:
    k: int
    lhs: int
    rhs: int

    @property
    def differs(self) -> bool:
        return self.lhs != self.rhs


@dataclass(frozen=True)
class ExistenceCertificate:
    verdict: str
    witness_k: int | None
    lhs: int | None
    rhs: int | None
    global_K: frozenset[int]
    indices: tuple[EquivariantIndex, ...]
    comparisons: tuple[ComparisonRow, ...]
    checked_range: tuple[int, int]
    minimal_period_notes: tuple[dict, ...]
    sum_formula: tuple[int, int, int]
    T: float
    tolerances: dict
    input_digest: str
    name: str = ""
    warnings: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict)

    @property
    def proven(self) -> bool:
        return self.verdict == PROVEN

    def index(self, owner: str) -> EquivariantIndex:
        for ind in self.indices:
            if ind.owner == owner:
                return ind
        raise KeyError(owner)

    def to_dict(self) -> dict:
        return {
            "kind": "existence-certificate",
            "name": self.name,
            "verdict": self.verdict,
            "witness_k": self.witness_k,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "T": self.T,
            "global_K": sorted(self.global_K),
            "checked_range": list(self.checked_range),
            "comparisons": [{"k": r.k, "lhs": r.lhs, "rhs": r.rhs} for r in self.comparisons],
            "indices": [ind.to_dict() for ind in self.indices],
            "minimal_period_notes": list(self.minimal_period_notes),
            "sum_formula": {
                "ind_infinity": self.sum_formula[0],
                "sum_ind_points": self.sum_formula[1],
                "residual": self.sum_formula[2],
            },
            "tolerances": dict(self.tolerances),
            "input_sha256": self.input_digest,
            "warnings": list(self.warnings),
            "provenance": dict(self.provenance),
        }

    def to_text(self) -> str:
        lines = [f"system: {self.name or '(unnamed)'}   T = {self.T:.12g}"]
        lines.append("stationary points (ring zero means the zero of U(SO(2)); origin means 0 in R^n):")
        for ind in self.indices:
            jk = ", ".join(f"j_{k}={v}" for k, v in sorted(ind.jk_table.items()))
            und = sorted(ind.value.undefined)
            lines.append(
                f"  {ind.owner:>10}: ind = {ind.brouwer:+d} [{ind.provenance.get('brouwer')}]  {jk}"
                + (f"  resonant modes {sorted(ind.resonant_modes)}, undefined Z_k for k in {und}" if und else "")
            )
        lines.append(f"exclusion set K = {sorted(self.global_K) or '{}'}")
        lines.append(f"checked k in [{self.checked_range[0]}, {self.checked_range[1]}] minus K:")
        for r in self.comparisons:
            mark = "  <-- differs" if r.differs else ""
            lines.append(f"  k={r.k}: I(inf)_k = {r.lhs}   sum I(p)_k = {r.rhs}{mark}")
        if self.proven:
            lines.append(
                f"verdict: PROVEN, a non-stationary T-periodic solution exists "
                f"(witness k={self.witness_k}: {self.lhs} != {self.rhs})"
            )
        else:
            lines.append("verdict: NOT DECIDED, every compared coordinate balances")
        for note in self.minimal_period_notes:
            periods = ", ".join(f"{p:.12g}" for p in note["periods"])
            lines.append(
                f"  near {note['point']}: resonant modes {note['modes']}; "
                f"minimal periods of nearby solutions among {{{periods}}}"
            )
        for w in self.warnings:
            lines.append(f"warning: {w}")
        lines.append(f"tolerances: {self.tolerances}")
        lines.append(f"input sha256: {self.input_digest}")
        return "\n".join(lines)


def analyze(spec: SystemSpec, tol_res: float | None = None, k_max: int | None = None) -> ExistenceCertificate:
    """Scan Z_k coordinates of the index balance for a witness of existence."""
    brouwer = _resolve_brouwer(spec)
    owners = [(cp.id, cp.hessian) for cp in spec.critical_points] + [("infinity", spec.v_inf)]

    indices = []
    tol_used = {}
    for owner, H in owners:
        spec_H = spectrum(H)
        tol = tol_res if tol_res is not None else default_tol_res(spec_H.matrix)
        tol_used[owner] = tol
        value, source = brouwer[owner]
        indices.append(index_IV(owner, spec_H, spec.T, value, tol, source))
    ind_inf = indices[-1]
    points = indices[:-1]

    global_K = frozenset().union(*(ind.exclusion_contrib for ind in indices))
    auto_kmax = max(k_cutoff(H, spec.T) for _, H in owners) + 1
    K_max = auto_kmax if k_max is None else int(k_max)
    ks = [k for k in range(1, K_max + 1) if k not in global_K]
    if not ks:
        raise CriterionSilentError(
            f"every mode in [1, {K_max}] lies in the exclusion set {sorted(global_K)}"
        )

    rows = []
    witness = None
    for k in ks:
        lhs = ind_inf.value.coordinate(k)
        rhs = sum(ind.value.coordinate(k) for ind in points)
        rows.append(ComparisonRow(k, lhs, rhs))
        if witness is None and lhs != rhs:
            witness = rows[-1]

    lhs0 = ind_inf.brouwer
    rhs0 = sum(ind.brouwer for ind in points)
    warnings = []
    if lhs0 != rhs0:
        warnings.append(
            f"sum formula fails: ind(inf) = {lhs0} but the listed points sum to {rhs0}; "
            "critical points are probably missing"
        )

    notes = tuple(
        {
            "point": ind.owner,
            "modes": sorted(ind.resonant_modes),
            "periods": sorted(minimal_period_menu(ind.resonant_modes, spec.T), reverse=True),
        }
        for ind in indices
        if ind.resonant_modes
    )
    return ExistenceCertificate(
        verdict=PROVEN if witness else NOT_DECIDED,
        witness_k=witness.k if witness else None,
        lhs=witness.lhs if witness else None,
        rhs=witness.rhs if witness else None,
        global_K=global_K,
        indices=tuple(indices),
        comparisons=tuple(rows),
        checked_range=(1, K_max),
        minimal_period_notes=notes,
        sum_formula=(lhs0, rhs0, lhs0 - rhs0),
        T=spec.T,
        tolerances={"tol_res": {k: float(v) for k, v in tol_used.items()}, "k_max": K_max},
        input_digest=spec.digest(),
        name=spec.name,
        warnings=tuple(warnings),
        provenance={
            "indices": "eqdeg.index_IV",
            "global_K": "eqdeg.exclusion_set (union over points)",
            "checked_range": "spectral.k_cutoff + 1" if k_max is None else "user override",
            "comparisons": "certify.analyze",
            "minimal_period_notes": "certify.minimal_period_menu",
            "potential": "callbacks available" if spec.has_potential else "hessian-only",
        },
    )


@dataclass(frozen=True)
class ContinuationCertificate:
    base: ExistenceCertificate
    witness_k: int
    infinite_sequence_possible: bool
    symmetry_breaking_possible: bool
    statement: str
    branch_properties: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "kind": "continuation-certificate",
            "base": self.base.to_dict(),
            "witness_k": self.witness_k,
            "infinite_sequence_possible": self.infinite_sequence_possible,
            "symmetry_breaking_possible": self.symmetry_breaking_possible,
            "statement": self.statement,
            "branch_properties": list(self.branch_properties),
        }

    def to_text(self) -> str:
        return "\n".join([self.statement, *(f"  {p}" for p in self.branch_properties)])


def continuation_certificate(spec0: SystemSpec, tol_res: float | None = None) -> ContinuationCertificate:
    """Global continuation alternative for a family V_lam with V_0 described by ``spec0``."""
    base = analyze(spec0, tol_res)
    if not base.proven:
        raise NotProvenError("base system at lam = 0 has no existence witness")
    resonant = [ind for ind in base.indices if ind.resonant_modes]
    infinite_possible = bool(resonant)
    points = [ind.owner for ind in base.indices if ind.owner != "infinity"]
    symmetry_breaking = bool(points)

    if infinite_possible:
        near = ", ".join(
            f"{ind.owner} (minimal periods in "
            f"{sorted(minimal_period_menu(ind.resonant_modes, spec0.T), reverse=True)})"
            for ind in resonant
        )
        head = (
            f"Either the lam = 0 system has infinitely many non-stationary T-periodic solutions "
            f"accumulating at a resonant stationary point [{near}], or there are closed connected "
            f"branches C- in lam <= 0 and C+ in lam >= 0 of solutions (u, lam) such that:"
        )
    else:
        head = (
            "No stationary point is resonant, so the accumulation alternative is excluded: "
            "there are closed connected branches C- in lam <= 0 and C+ in lam >= 0 of "
            "solutions (u, lam) such that:"
        )
    props = (
        "(C1) each branch meets the set of non-stationary solutions at lam = 0 lying between "
        "the small balls around the stationary points and the large ball at infinity;",
        f"(C2) each branch is unbounded or contains one of the stationary points {points};",
        "a bounded branch joins a solution with Z_k isotropy (minimal period T/k) to a "
        "stationary solution (isotropy SO(2)), so it exhibits symmetry breaking.",
    )
    return ContinuationCertificate(
        base=base,
        witness_k=base.witness_k,
        infinite_sequence_possible=infinite_possible,
        symmetry_breaking_possible=symmetry_breaking,
        statement=f"Continuation from witness k={base.witness_k}. " + head,
        branch_properties=props,
    )


def validate_certificate_dict(d: dict) -> None:
    """Re-check an emitted existence certificate from its JSON form alone.

    The comparison rows are recomputed from the serialized indices; the
    exclusion set, witness and verdict must agree with them.
    """
    from .ring import RingElement

    if d.get("kind") != "existence-certificate":
        raise ValueError("not an existence certificate")
    values = {ind["owner"]: RingElement.from_dict(ind["value"]) for ind in d["indices"]}
    if "infinity" not in values:
        raise ValueError("certificate lacks the index at infinity")
    K = set()
    for ind in d["indices"]:
        K |= exclusion_set(ind["resonant_modes"])
        if set(ind["undefined"]) != set(ind["exclusion_contrib"]):
            raise ValueError(f"undefined coordinates of {ind['owner']} disagree with its exclusion set")
    if sorted(K) != list(d["global_K"]):
        raise ValueError("global exclusion set does not match the indices")
    lo, hi = d["checked_range"]
    ks = [k for k in range(lo, hi + 1) if k not in K]
    rows = d["comparisons"]
    if [r["k"] for r in rows] != ks:
        raise ValueError("comparison rows do not cover the checked range")
    witness = None
    for r in rows:
        lhs = values["infinity"].coordinate(r["k"])
        rhs = sum(v.coordinate(r["k"]) for owner, v in values.items() if owner != "infinity")
        if (lhs, rhs) != (r["lhs"], r["rhs"]):
            raise ValueError(f"row k={r['k']} does not match the indices")
        if witness is None and lhs != rhs:
            witness = r["k"]
    expected = PROVEN if witness is not None else NOT_DECIDED
    if d["verdict"] != expected or d["witness_k"] != witness:
        raise ValueError("verdict or witness inconsistent with the comparison rows")
