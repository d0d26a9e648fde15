"""Reading system specifications from JSON.

Two layouts are accepted.  The explicit one lists the data the degree
pipeline needs::

    {"n": 1, "T": "2*pi", "v_inf": [[0]],
     "critical_points": [{"id": "origin", "x": [0], "hessian": [[8]]}]}

The model layout synthesises everything from the softened-Coulomb potential::

    {"model": {"v_inf": [["7/2", 0], [0, -2]], "a": 1, "T": "2*pi"}}

Any numeric entry may be a string such as ``"7/2"`` or ``"1/(2*sqrt(2))"``;
these are evaluated by a small arithmetic parser, never by ``eval``.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from pathlib import Path

import numpy as np

from .errors import SpecError
from .systems import CriticalPoint, ModelPotential, SystemSpec, build_system

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sqrt": math.sqrt, "cbrt": lambda x: math.copysign(abs(x) ** (1.0 / 3.0), x)}
_CONSTS = {"pi": math.pi, "e": math.e}


def parse_number(token) -> float:
    """Float value of a JSON number or an arithmetic string like ``"1/(2*sqrt(2))"``."""
    if isinstance(token, bool):
        raise SpecError(f"boolean {token!r} is not a number")
    if isinstance(token, (int, float)):
        return float(token)
    if not isinstance(token, str):
        raise SpecError(f"cannot read a number from {token!r}")
    try:
        tree = ast.parse(token.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"malformed numeric token {token!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise SpecError(f"unsupported syntax in numeric token {token!r}")

    try:
        value = ev(tree)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise SpecError(f"cannot evaluate numeric token {token!r}: {exc}") from exc
    if not math.isfinite(value):
        raise SpecError(f"numeric token {token!r} is not finite")
    return value


def parse_vector(data) -> np.ndarray:
    if not isinstance(data, list):
        raise SpecError(f"expected a list, got {type(data).__name__}")
    return np.array([parse_number(v) for v in data], dtype=float)


def parse_matrix(data) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise SpecError("matrix must be a non-empty list of rows")
    if len({len(r) for r in data}) != 1:
        raise SpecError("matrix rows have different lengths")
    return np.array([[parse_number(v) for v in row] for row in data], dtype=float)


def spec_from_dict(data: dict, T: float | None = None, name: str = "") -> SystemSpec:
    """Build a :class:`SystemSpec`; ``T`` overrides the file's period."""
    if not isinstance(data, dict):
        raise SpecError("top level of a system file must be an object")
    name = str(data.get("name", name))
    if "model" in data:
        m = data["model"]
        if not isinstance(m, dict) or "v_inf" not in m or "a" not in m:
            raise SpecError('"model" needs fields "v_inf" and "a"')
        v_inf = parse_matrix(m["v_inf"])
        if "n" in m and int(m["n"]) != v_inf.shape[0]:
            raise SpecError(f"model n = {m['n']} does not match v_inf of size {v_inf.shape[0]}")
        period = T if T is not None else m.get("T", data.get("T"))
        if period is None:
            raise SpecError("no period T given (file or --T)")
        return build_system(ModelPotential(v_inf, parse_number(m["a"])), parse_number(period), name=name)

    for key in ("n", "v_inf", "critical_points"):
        if key not in data:
            raise SpecError(f"missing field {key!r}")
    period = T if T is not None else data.get("T")
    if period is None:
        raise SpecError("no period T given (file or --T)")
    n = int(data["n"])
    v_inf = parse_matrix(data["v_inf"])
    potential = None
    model = None
    if "a" in data:
        model = ModelPotential(v_inf, parse_number(data["a"]))
        potential = model
    cps = []
    for i, cp in enumerate(data["critical_points"]):
        if not isinstance(cp, dict) or "x" not in cp or "hessian" not in cp:
            raise SpecError(f"critical point #{i} needs fields 'x' and 'hessian'")
        brouwer = cp.get("brouwer")
        cps.append(
            CriticalPoint(
                str(cp.get("id", f"p{i}")),
                parse_vector(cp["x"]),
                parse_matrix(cp["hessian"]),
                None if brouwer is None else int(brouwer),
            )
        )
    brouwer_inf = data.get("brouwer_inf")
    source = None
    if brouwer_inf is not None:
        source = "supplied"
    elif model is not None:
        from .eqdeg import index_at_infinity_sign

        brouwer_inf = index_at_infinity_sign(v_inf, n)
        source = "eqdeg.index_at_infinity_sign (model family)"
    return SystemSpec(
        n=n,
        T=parse_number(period),
        v_inf=v_inf,
        critical_points=tuple(cps),
        potential=potential,
        brouwer_inf=None if brouwer_inf is None else int(brouwer_inf),
        brouwer_inf_source=source,
        name=name,
        model=model,
    )


def load_spec(path, T: float | None = None) -> SystemSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise OSError(f"cannot read system file {str(p)!r}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{p}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return spec_from_dict(data, T, name=p.stem)


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
