"""Two-band non-Hermitian lattice model in momentum space.

The Bloch matrix has zero diagonal; the off-diagonal entries collect an
on-site coupling plus range-n hoppings dressed with e^{+-ink} phases.
Coupling constants are complex and dimensionless.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

PRESET_TAGS = ("unlink", "unknot", "hopf_link")


@dataclass(frozen=True)
class ModelParams:
    """Coupling constants of the two-band lattice model.

    ``gamma1_*``/``gamma2_*`` are length-m sequences; entry n-1 is the
    range-n hopping amplitude.
    """

    gamma0_minus: complex
    gamma0_plus: complex
    gamma1_minus: tuple = ()
    gamma1_plus: tuple = ()
    gamma2_minus: tuple = ()
    gamma2_plus: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gamma1_minus", tuple(complex(g) for g in self.gamma1_minus))
        object.__setattr__(self, "gamma1_plus", tuple(complex(g) for g in self.gamma1_plus))
        object.__setattr__(self, "gamma2_minus", tuple(complex(g) for g in self.gamma2_minus))
        object.__setattr__(self, "gamma2_plus", tuple(complex(g) for g in self.gamma2_plus))
        object.__setattr__(self, "gamma0_minus", complex(self.gamma0_minus))
        object.__setattr__(self, "gamma0_plus", complex(self.gamma0_plus))
        m = len(self.gamma1_minus)
        if not (len(self.gamma1_plus) == len(self.gamma2_minus) == len(self.gamma2_plus) == m):
            raise ValueError("hopping sequences must all have length m")
        for g in self.all_couplings():
            if not (math.isfinite(g.real) and math.isfinite(g.imag)):
                raise ValueError("couplings must be finite complex numbers")

    @property
    def m(self) -> int:
        """Coupling range."""
        return len(self.gamma1_minus)

    def all_couplings(self):
        return (
            (self.gamma0_minus, self.gamma0_plus)
            + self.gamma1_minus
            + self.gamma1_plus
            + self.gamma2_minus
            + self.gamma2_plus
        )

    def scaled(self, factor: float) -> "ModelParams":
        return ModelParams(
            gamma0_minus=self.gamma0_minus * factor,
            gamma0_plus=self.gamma0_plus * factor,
            gamma1_minus=tuple(g * factor for g in self.gamma1_minus),
            gamma1_plus=tuple(g * factor for g in self.gamma1_plus),
            gamma2_minus=tuple(g * factor for g in self.gamma2_minus),
            gamma2_plus=tuple(g * factor for g in self.gamma2_plus),
        )


_PRESETS = {
    "unlink": ModelParams(
        gamma0_minus=-0.45,
        gamma0_plus=0.79,
        gamma1_minus=(-0.30j,),
        gamma1_plus=(0.0,),
        gamma2_minus=(0.08j,),
        gamma2_plus=(0.0,),
    ),
    "unknot": ModelParams(
        gamma0_minus=-0.21,
        gamma0_plus=0.70,
        gamma1_minus=(-0.30j,),
        gamma1_plus=(0.0,),
        gamma2_minus=(0.08j,),
        gamma2_plus=(0.0,),
    ),
    "hopf_link": ModelParams(
        gamma0_minus=0.04,
        gamma0_plus=0.49,
        gamma1_minus=(-0.13j, -0.58j),
        gamma1_plus=(0.02j, 0.03j),
        gamma2_minus=(0.02j, 0.09j),
        gamma2_plus=(-0.13j, -0.21j),
    ),
}


def preset_params(tag: str) -> ModelParams:
    """Return the published coupling set for a named phase."""
    try:
        return _PRESETS[tag]
    except KeyError:
        raise ValueError(
            f"unknown preset {tag!r}; valid tags are {', '.join(PRESET_TAGS)}"
        ) from None


def fold_k(k: float) -> float:
    """Fold quasi-momentum into [0, 2pi)."""
    out = float(k) % TWO_PI
    # float rounding can land exactly on the excluded endpoint
    return 0.0 if out >= TWO_PI else out


def bloch_hamiltonian(params: ModelParams, k: float) -> np.ndarray:
    """Momentum-space Hamiltonian H(k), a zero-diagonal 2x2 complex matrix."""
    k = fold_k(k)
    top = params.gamma0_minus
    bot = params.gamma0_plus
    for n in range(1, params.m + 1):
        ep = cmath.exp(1j * n * k)
        em = cmath.exp(-1j * n * k)
        top += params.gamma1_minus[n - 1] * ep + params.gamma2_plus[n - 1] * em
        bot += params.gamma1_plus[n - 1] * em + params.gamma2_minus[n - 1] * ep
    return np.array([[0.0, top], [bot, 0.0]], dtype=complex)


def off_diagonals(params: ModelParams, k_grid: np.ndarray):
    """Vectorized off-diagonal entries (h12, h21) over a k grid."""
    k = np.asarray(k_grid, dtype=float) % TWO_PI
    top = np.full_like(k, params.gamma0_minus, dtype=complex)
    bot = np.full_like(k, params.gamma0_plus, dtype=complex)
    for n in range(1, params.m + 1):
        ep = np.exp(1j * n * k)
        em = np.exp(-1j * n * k)
        top += params.gamma1_minus[n - 1] * ep + params.gamma2_plus[n - 1] * em
        bot += params.gamma1_plus[n - 1] * em + params.gamma2_minus[n - 1] * ep
    return top, bot


def _c2pair(g: complex):
    return [g.real, g.imag]


def params_to_dict(params: ModelParams) -> dict:
    """JSON-friendly form: complex numbers as [re, im] pairs."""
    return {
        "m": params.m,
        "gamma0": [_c2pair(params.gamma0_minus), _c2pair(params.gamma0_plus)],
        "gamma1": [
            [_c2pair(params.gamma1_minus[n]), _c2pair(params.gamma1_plus[n])]
            for n in range(params.m)
        ],
        "gamma2": [
            [_c2pair(params.gamma2_minus[n]), _c2pair(params.gamma2_plus[n])]
            for n in range(params.m)
        ],
    }


def params_from_dict(data: dict) -> ModelParams:
    m = int(data["m"])
    g0m, g0p = (complex(re, im) for re, im in data["gamma0"])
    g1 = [[complex(re, im) for re, im in row] for row in data["gamma1"]]
    g2 = [[complex(re, im) for re, im in row] for row in data["gamma2"]]
    if len(g1) != m or len(g2) != m:
        raise ValueError("gamma1/gamma2 must have m rows")
    return ModelParams(
        gamma0_minus=g0m,
        gamma0_plus=g0p,
        gamma1_minus=tuple(row[0] for row in g1),
        gamma1_plus=tuple(row[1] for row in g1),
        gamma2_minus=tuple(row[0] for row in g2),
        gamma2_plus=tuple(row[1] for row in g2),
    )


def load_params(source: str) -> ModelParams:
    """Accept a preset tag or a path to a JSON parameter file."""
    if source in _PRESETS:
        return _PRESETS[source]
    with open(source) as fh:
        return params_from_dict(json.load(fh))
