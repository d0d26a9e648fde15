"""Worked model systems and their published index data.

Each entry builds the model potential, and records the integers that the
pipeline must reproduce: Brouwer indices, j_k tables, resonant modes and
the witness inequality.
"""

from __future__ import annotations

import math

import numpy as np

from .systems import ModelPotential, build_system, constant_family, stiffness_family

S = 1.0 / (2.0 * math.sqrt(2.0))
TWO_PI = 2.0 * math.pi


def ex65_model() -> ModelPotential:
    return ModelPotential(np.diag([3.5, -2.0, 0.0, -S]), 1.0)


def ex66_model() -> ModelPotential:
    return ModelPotential(np.diag([3.5, -1.0, 0.0, -S]), 1.0)


def sitnikov_model() -> ModelPotential:
    return ModelPotential(np.zeros((1, 1)), 0.25)


def _j(ones, K=3):
    return {k: (1 if k in ones else 0) for k in range(1, K + 1)}


EXPECTED = {
    "6.5": {
        "T": TWO_PI,
        "points": {
            "origin": {"x": [0, 0, 0, 0], "brouwer": -1, "jk": _j({1, 2}), "resonant": [1],
                       "hessian": np.diag([4.5, -1.0, 1.0, 1.0 - S])},
            "+e4": {"x": [0, 0, 0, 1], "brouwer": 1, "jk": _j({1}), "resonant": [],
                    "hessian": np.diag([3.5 + S, -2.0 + S, S, -3.0 / (4.0 * math.sqrt(2.0))])},
            "-e4": {"x": [0, 0, 0, -1], "brouwer": 1, "jk": _j({1}), "resonant": [],
                    "hessian": np.diag([3.5 + S, -2.0 + S, S, -3.0 / (4.0 * math.sqrt(2.0))])},
        },
        "infinity": {"brouwer": 1, "jk": _j({1}), "resonant": []},
        "global_K": [1],
        "verdict": "proven",
        "witness": (2, 0, -1),
    },
    "6.6": {
        "T": TWO_PI,
        "points": {
            "origin": {"x": [0, 0, 0, 0], "brouwer": -1, "jk": _j({1, 2}), "resonant": [1],
                       "hessian": np.diag([4.5, 0.0, 1.0, 1.0 - S]), "singular": True},
            "+e4": {"x": [0, 0, 0, 1], "brouwer": 1, "jk": _j({1}), "resonant": [],
                    "hessian": np.diag([3.5 + S, -1.0 + S, S, -3.0 / (4.0 * math.sqrt(2.0))])},
            "-e4": {"x": [0, 0, 0, -1], "brouwer": 1, "jk": _j({1}), "resonant": [],
                    "hessian": np.diag([3.5 + S, -1.0 + S, S, -3.0 / (4.0 * math.sqrt(2.0))])},
        },
        "infinity": {"brouwer": 1, "jk": _j({1}), "resonant": []},
        "global_K": [1],
        "verdict": "proven",
        "witness": (2, 0, -1),
    },
    "6.7": {
        "T": TWO_PI,
        "points": {
            "origin": {"x": [0], "brouwer": -1, "jk": _j({1, 2}), "resonant": [],
                       "hessian": np.array([[8.0]])},
        },
        "infinity": {"brouwer": -1, "jk": _j(set()), "resonant": []},
        "global_K": [],
        "verdict": "proven",
        "witness": (1, 0, -1),
    },
}


def build(example: str, T: float | None = None):
    """SystemSpec for example ``"6.5"``, ``"6.6"`` or ``"6.7"``."""
    models = {"6.5": ex65_model, "6.6": ex66_model, "6.7": sitnikov_model}
    if example not in models:
        raise KeyError(f"unknown example {example!r}; choose from {sorted(models)}")
    return build_system(models[example](), TWO_PI if T is None else T, name=f"example {example}")


def family(example: str, kind: str = "stiffness"):
    """Parameter family over the base potential of ``example``."""
    base = {"6.8": ex65_model, "6.9": sitnikov_model, "6.5": ex65_model, "6.7": sitnikov_model}[example]()
    if kind == "constant":
        return constant_family(base, base.n)
    return stiffness_family(base)
