"""Equivariant degree of linearised period maps and the indices I_V(p, T).

The degree of Id - L_A, where L_A is the compact operator attached to the
linear system u'' = -A u on T-periodic loops, is computed two ways:

* directly from the counts j_k(A, T) (:func:`linear_degree`);
* as a ring product over the eigenspaces of L_A with eigenvalue above one,
  each contributing the degree of -Id on a representation sum of
  R[j, k] pieces (:func:`linear_degree_via_product`).

The index of a stationary point p is its Brouwer index times the
vector (1, j_1, j_2, ...) of its Hessian.  When the Hessian resonates with
some modes, the coordinates at all gcds of those modes are left undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .brouwer import brouwer_degree
from .errors import BrouwerIndexError, ResonanceError, SingularHessianError
from .ring import RingElement, product_many
from .spectral import (
    default_tol_res,
    jk_table,
    k_cutoff,
    morse_index,
    resonance_report,
    spectrum,
)


@dataclass(frozen=True)
class RepresentationDescriptor:
    """Orthogonal SO(2)-representation R[j_1, k_1] + ... + R[j_r, k_r]."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        ks = [k for _, k in self.pairs]
        if any(j < 1 for j, _ in self.pairs) or any(k < 0 for k in ks):
            raise ValueError(f"invalid representation pairs {self.pairs}")
        if ks != sorted(set(ks)):
            raise ValueError("modes must be strictly increasing")

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> "RepresentationDescriptor":
        return cls(tuple((j, k) for k, j in sorted(counts.items()) if j > 0))

    @property
    def trivial_dim(self) -> int:
        return sum(j for j, k in self.pairs if k == 0)

    def neg_identity_degree(self) -> RingElement:
        """Degree of -Id on a ball in this representation."""
        sign = (-1) ** self.trivial_dim
        zk = {k: sign * j for j, k in self.pairs if k > 0}
        return RingElement(sign, zk, max(zk, default=1))


def _require_nonresonant(A, T, tol_res):
    report = resonance_report(A, T, tol_res)
    if report.resonant_ks:
        raise ResonanceError(
            f"resonant modes {sorted(report.resonant_ks)}; linear degree undefined",
            k=min(report.resonant_ks),
        )
    return report


def linear_degree(A, T: float, tol_res: float | None = None) -> RingElement:
    """Degree of Id - L_A: SO(2) part (-1)^j_0, Z_k part (-1)^j_0 * j_k."""
    spec = spectrum(A)
    report = _require_nonresonant(spec, T, tol_res)
    table = jk_table(spec, T, tol_res)
    sign = (-1) ** table[0]
    zk = {k: sign * j for k, j in table.items() if k >= 1}
    return RingElement(sign, zk, max(report.k_cutoff, 1))


def operator_eigenspaces(A, T: float, rel_tol: float = 1e-12) -> list[tuple[float, RepresentationDescriptor]]:
    """Eigenvalues of L_A above one with their eigenspaces as representations.

    Mode 0 carries eigenvalue 1 + alpha on V_A(alpha); mode k >= 1 carries
    T^2 (1 + alpha) / (4 k^2 pi^2 + T^2) on the cos/sin pairs in V_A(alpha).
    """
    spec = spectrum(A)
    K = k_cutoff(spec, T)
    pieces = []
    for k in range(K + 1):
        w = 4.0 * k * k * math.pi**2
        for alpha, mult in zip(spec.eigenvalues, spec.multiplicities):
            lam = T * T * (1.0 + alpha) / (w + T * T)
            if lam > 1.0:
                pieces.append((lam, k, mult))
    pieces.sort()
    spaces: list[tuple[float, dict[int, int]]] = []
    for lam, k, mult in pieces:
        if spaces and abs(lam - spaces[-1][0]) <= rel_tol * max(1.0, abs(lam)):
            counts = spaces[-1][1]
            counts[k] = counts.get(k, 0) + mult
        else:
            spaces.append((lam, {k: mult}))
    return [(lam, RepresentationDescriptor.from_counts(c)) for lam, c in spaces]


def linear_degree_via_product(A, T: float, tol_res: float | None = None) -> RingElement:
    """Same degree as :func:`linear_degree`, as a product over eigenspaces of L_A."""
    spec = spectrum(A)
    report = _require_nonresonant(spec, T, tol_res)
    factors = [rep.neg_identity_degree() for _, rep in operator_eigenspaces(spec, T)]
    result = product_many(factors)
    return RingElement(result.so2, result.zk, max(report.k_cutoff, 1, result.K))


def brouwer_index_nondegenerate(H) -> int:
    """Local index of -grad V at a nondegenerate critical point: sign det(-H)."""
    spec = spectrum(H)
    if morse_index(spec).degenerate:
        raise SingularHessianError("Hessian is singular; use the degenerate index path")
    positive = sum(1 for v in spec.values if v > 0)
    return (-1) ** positive


def brouwer_index_degenerate(
    gradient: Callable[[np.ndarray], np.ndarray], p, radius: float, samples: int | None = None
) -> int:
    """Brouwer degree of -gradient on the ball B(p, radius), n <= 3."""
    return brouwer_degree(lambda x: -np.asarray(gradient(x), dtype=float), p, radius, samples)


def index_at_infinity_sign(v_inf, n: int | None = None) -> int:
    """(-1)^(n - m^-(V''(inf))), valid for the softened-Coulomb model family."""
    spec = spectrum(v_inf)
    if n is None:
        n = spec.n
    return (-1) ** (n - morse_index(spec).count)


def exclusion_set(modes) -> frozenset[int]:
    """All gcds of nonempty subsets of ``modes``."""
    closure: set[int] = set()
    for m in sorted(set(modes)):
        closure |= {math.gcd(m, g) for g in closure}
        closure.add(m)
    return frozenset(closure)


@dataclass(frozen=True)
class EquivariantIndex:
    owner: str
    value: RingElement
    brouwer: int
    jk_table: dict[int, int]
    resonant: bool
    resonant_modes: frozenset[int] = frozenset()
    exclusion_contrib: frozenset[int] = frozenset()
    provenance: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "value": self.value.to_dict(),
            "brouwer": self.brouwer,
            "jk_table": {str(k): v for k, v in sorted(self.jk_table.items())},
            "resonant": self.resonant,
            "resonant_modes": sorted(self.resonant_modes),
            "exclusion_contrib": sorted(self.exclusion_contrib),
            "undefined": sorted(self.value.undefined),
            "provenance": dict(self.provenance),
        }


def index_IV(
    owner: str,
    H,
    T: float,
    brouwer: int | None = None,
    tol_res: float | None = None,
    brouwer_source: str | None = None,
) -> EquivariantIndex:
    """Equivariant index I_V(p, T) of a stationary point (or of infinity).

    ``brouwer`` is ind(-V', p); when omitted it is read off a nonsingular
    ``H``.  Coordinates at gcds of resonant modes are marked undefined.
    """
    spec = spectrum(H)
    if tol_res is None:
        tol_res = default_tol_res(spec.matrix)
    report = resonance_report(spec, T, tol_res)
    provenance = {"jk_table": "spectral.jk_table", "resonance": "spectral.resonance_report"}
    if brouwer is None:
        if report.singular:
            raise BrouwerIndexError(
                f"Hessian at {owner} is singular and no Brouwer index was supplied"
            )
        brouwer = brouwer_index_nondegenerate(spec)
        brouwer_source = brouwer_source or "eqdeg.brouwer_index_nondegenerate"
    provenance["brouwer"] = brouwer_source or "supplied"

    table = jk_table(spec, T, tol_res)
    modes = report.resonant_modes
    excluded = exclusion_set(modes)
    zk = {k: brouwer * j for k, j in table.items() if k >= 1 and k not in excluded}
    K = max([report.k_cutoff, 1, *excluded])
    value = RingElement(brouwer, zk, K, excluded)
    return EquivariantIndex(
        owner=owner,
        value=value,
        brouwer=int(brouwer),
        jk_table=table,
        resonant=bool(modes),
        resonant_modes=modes,
        exclusion_contrib=excluded,
        provenance=provenance,
    )
