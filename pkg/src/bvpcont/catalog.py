"""Built-in problems and parameter families, stored as configuration documents."""

from __future__ import annotations

import copy

from .config import ConfigError, family_from_dict
from .limits import ProblemFamily

PI2 = "9.869604401089358"  # pi^2 to double precision


def _col(rows: int, i: int, value: str = "1") -> list:
    """rows x 1 matrix with ``value`` in row i."""
    return [[value if k == i else "0"] for k in range(rows)]


def _term(point: str, coeffs: dict) -> dict:
    return {"point": point, "coeffs": {str(l): mat for l, mat in coeffs.items()}}


def _points(*terms) -> dict:
    """Parameter-free multipoint operator: one group per term, no free points."""
    return {"groups": [[]] + [[t] for t in terms], "limits": list(terms)}


def _scalar(name, r, n, K, f, q, boundary, **extra) -> dict:
    cfg = {
        "name": name,
        "interval": [0, 1],
        "orders": {"r": r, "n": n, "m": 1},
        "coefficients": {"K": [[[k]] for k in K], "f": [f]},
        "boundary": dict(boundary, q=q),
    }
    cfg.update(extra)
    return cfg


CATALOG: dict[str, dict] = {}


def _add(cfg: dict) -> None:
    CATALOG[cfg["name"]] = cfg


# analytic problems -----------------------------------------------------------

_add(_scalar("line", 1, 0, ["0"], "1", ["0"], {"multipoint": _points(_term("0", {0: [["1"]]}))},
             exact=["t"], description="z' = 1, z(0) = 0"))

_add(_scalar("gauss", 1, 1, ["t"], "0", ["1"], {"multipoint": _points(_term("0", {0: [["1"]]}))},
             exact=["exp(-t^2/2)"], description="z' + t z = 0, z(0) = 1"))

_add({
    "name": "rotation",
    "description": "z' + [[0, -1], [1, 0]] z = 0, z(0) = (0, 1)",
    "interval": [0, 1],
    "orders": {"r": 1, "n": 1, "m": 2},
    "coefficients": {"K": [[["0", "-1"], ["1", "0"]]], "f": ["0", "0"]},
    "boundary": {"q": ["0", "1"], "multipoint": _points(_term("0", {0: [["1", "0"], ["0", "1"]]}))},
    "exact": ["sin(t)", "cos(t)"],
})

_add(_scalar("sin", 2, 0, ["1", "0"], "0", ["0", "sin(1)"],
             {"multipoint": _points(_term("0", {0: _col(2, 0)}), _term("1", {0: _col(2, 1)}))},
             exact=["sin(t)"], description="z'' + z = 0, z(0) = 0, z(1) = sin 1"))

_add(_scalar("linear-mixed", 2, 0, ["0", "0"], "0", ["1", "2"],
             {"multipoint": _points(_term("0", {0: _col(2, 0)}), _term("1", {1: _col(2, 1)}))},
             exact=["1 + 2*t"], description="z'' = 0, z(0) = 1, z'(1) = 2"))

_add(_scalar("exp-square", 2, 1, ["-2", "-2*t"], "0", ["1", "0"],
             {"multipoint": _points(_term("0", {0: _col(2, 0), 1: _col(2, 1)}))},
             exact=["exp(t^2)"], description="z'' - 2t z' - 2z = 0, z(0) = 1, z'(0) = 0"))

_add({
    "name": "coupled",
    "description": "z'' + K z = 0 with K = [[2.5, -1.5], [-1.5, 2.5]], Dirichlet data",
    "interval": [0, 1],
    "orders": {"r": 2, "n": 0, "m": 2},
    "coefficients": {"K": [[["2.5", "-1.5"], ["-1.5", "2.5"]], [["0", "0"], ["0", "0"]]], "f": ["0", "0"]},
    "boundary": {
        "q": ["0", "0", "sin(1) + sin(2)", "sin(1) - sin(2)"],
        "multipoint": _points(
            _term("0", {0: [["1", "0"], ["0", "1"], ["0", "0"], ["0", "0"]]}),
            _term("1", {0: [["0", "0"], ["0", "0"], ["1", "0"], ["0", "1"]]}),
        ),
    },
    "exact": ["sin(t) + sin(2*t)", "sin(t) - sin(2*t)"],
})

_add(_scalar("cubic-exp", 3, 1, ["-1", "0", "0"], "0", ["1", "exp(0.5)", "exp(1)"],
             {"multipoint": _points(_term("0", {0: _col(3, 0)}), _term("0.5", {1: _col(3, 1)}),
                                    _term("1", {0: _col(3, 2)}))},
             exact=["exp(t)"], description="z''' - z = 0, z(0) = 1, z'(1/2) = e^(1/2), z(1) = e"))

_add(_scalar("integral-bc", 1, 0, ["1"], "0", ["2*exp(-1)"],
             {"canonical": {"betas": [[["1"]]], "densities": [{"lo": "0", "hi": "1", "matrix": [["t"]]}]}},
             exact=["exp(-t)"], description="z' + z = 0, z(0) + int t z'(t) dt = 2/e"))

_add(_scalar("jump-bc", 2, 0, ["1", "0"], "0", ["0", "-sin(0.5)"],
             {"canonical": {"betas": [_col(2, 0), _col(2, 0, "0")],
                            "jumps": [{"point": "0.5", "matrix": _col(2, 1)}]}},
             exact=["sin(t)"], description="z'' + z = 0, z(0) = 0, z''(1/2) = -sin(1/2)"))

# degeneracy checks -----------------------------------------------------------

_DIRICHLET = {"multipoint": _points(_term("0", {0: _col(2, 0)}), _term("1", {0: _col(2, 1)}))}

_add(_scalar("dirichlet-eigen", 2, 0, [PI2, "0"], "0", ["0", "0"], _DIRICHLET,
             description="z'' + pi^2 z = 0 with Dirichlet data (eigenvalue)"))

_add(_scalar("dirichlet-9", 2, 0, ["9", "0"], "0", ["0", "0"], _DIRICHLET,
             description="z'' + 9 z = 0 with Dirichlet data"))

# parameter families ------------------------------------------------------------

_add(_scalar("constant", 2, 0, ["1", "0"], "0", ["0", "sin(1)"], copy.deepcopy(_DIRICHLET),
             description="no parameter dependence"))

_add(_scalar("k0-eps", 1, 0, ["eps"], "1", ["0"], {"multipoint": _points(_term("0", {0: [["1"]]}))},
             description="z' + eps z = 1, z(0) = 0"))

_add(_scalar("f-shift", 1, 0, ["1"], "1 + eps", ["0"], {"multipoint": _points(_term("0", {0: [["1"]]}))},
             description="z' + z = 1 + eps, z(0) = 0"))

_add(_scalar("q-shift", 2, 0, ["1", "0"], "0", ["eps", "sin(1)"], copy.deepcopy(_DIRICHLET),
             description="z'' + z = 0, z(0) = eps, z(1) = sin 1"))

_add(_scalar("osc-density", 1, 0, ["1"], "1", ["0"],
             {"canonical": {"betas": [[["1"]]], "densities": [{"lo": "0", "hi": "1", "matrix": [["sin(t/eps)"]]}]},
              "limit": {"betas": [[["1"]]]}},
             description="z' + z = 1, z(0) + int sin(t/eps) z'(t) dt = 0"))

_add(_scalar("shifted-point", 2, 0, ["1", "0"], "0", ["0", "sin(1)"], {"multipoint": {
    "groups": [
        [_term("0.5 + 0.25*sin(1/eps)", {0: _col(2, 0, "eps")})],
        [_term("0", {0: _col(2, 0)})],
        [_term("1 - eps", {0: _col(2, 1)})],
    ],
    "limits": [_term("0", {0: _col(2, 0)}), _term("1", {0: _col(2, 1)})],
}}, description="z'' + z = 0, z(0) + eps z(1/2 + sin(1/eps)/4) = 0, z(1 - eps) = sin 1"))

_add(_scalar("osc-k", 1, 0, ["sin(t/eps)"], "1", ["0"], {"multipoint": _points(_term("0", {0: [["1"]]}))},
             limit={"K": [[["0"]]]}, description="z' + sin(t/eps) z = 1, z(0) = 0"))

_add(_scalar("divided-difference", 1, 0, ["0"], "1", ["0"], {"multipoint": {
    "groups": [
        [],
        [_term("0.5 + eps", {0: [["1/eps"]]}), _term("0.5", {0: [["-1/eps"]]})],
        [_term("0", {0: [["1"]]})],
    ],
    "limits": [_term("0.5", {0: [["0"]]}), _term("0", {0: [["1"]]})],
}}, description="z' = 1, z(0) + (z(1/2 + eps) - z(1/2))/eps = 0"))

_add(_scalar("eigen-limit", 2, 0, [PI2 + " + eps", "0"], "1", ["0", "0"], copy.deepcopy(_DIRICHLET),
             description="z'' + (pi^2 + eps) z = 1 with Dirichlet data; degenerate at eps = 0"))

ANALYTIC = ("line", "gauss", "rotation", "sin", "linear-mixed", "exp-square", "coupled", "cubic-exp",
            "integral-bc", "jump-bc")
DEGENERACY = ("dirichlet-eigen", "dirichlet-9")
FAMILIES = ("constant", "k0-eps", "f-shift", "q-shift", "osc-density", "shifted-point", "osc-k",
            "divided-difference", "eigen-limit")
# families for which Condition (0) and limit conditions (I), (II) hold
SATISFYING = ("constant", "k0-eps", "f-shift", "q-shift", "osc-density", "shifted-point")


def preset_config(name: str) -> dict:
    if name not in CATALOG:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(CATALOG))}")
    return copy.deepcopy(CATALOG[name])


def preset(name: str) -> ProblemFamily:
    return family_from_dict(preset_config(name))


def catalog_names() -> list[str]:
    return list(CATALOG)
