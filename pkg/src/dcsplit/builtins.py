"""Registry of analytic test functions.

Each builtin evaluates on arrays of points (last axis = coordinates) and
carries two Lipschitz constants:

``lipschitz``
    a bound for ``|grad f|`` on the closed unit disk (used for traces along
    curves inside the unit disk, e.g. the turn sandwich);
``ph_lipschitz``
    a bound for the Lipschitz constant of the degree-1 positively
    homogeneous function ``||q|| * f(q / ||q||)`` built from the values of
    ``f`` on the unit circle, i.e. ``max sqrt(Phi^2 + Phi'^2)`` (used for
    fans sampled on the unit circle).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParseError, UnknownBuiltin

OSC_AMPLITUDE = 0.3


def _xy(q):
    q = np.asarray(q, dtype=float)
    return q[..., 0], q[..., 1]


def _angle(q):
    x, y = _xy(q)
    return np.arctan2(y, x)


def _norm2(q):
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)


def _norm1(q):
    return np.abs(np.asarray(q, dtype=float)).sum(-1)


def _norminf(q):
    return np.abs(np.asarray(q, dtype=float)).max(-1)


def _maxcoord(q):
    x, y = _xy(q)
    return np.maximum(x, y)


def _saddle(q):
    x, y = _xy(q)
    r = np.hypot(x, y)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (x * x - y * y) / r
    return np.where(r > 0, out, 0.0)


def osc_profile(s):
    """Angular profile ``1 + a w^2 cos(1/w)`` with ``w = 2 sin(s/2)``.

    ``w`` behaves like ``s`` near ``s = 0`` and is smooth and
    ``2*pi``-periodic in ``w^2``, so the profile is C^1 away from ``s = 0``.
    Its derivative contains ``a w' sin(1/w)``: the derivative has infinite
    variation near ``s = 0`` while the profile stays Lipschitz.
    """
    w = 2.0 * np.sin(0.5 * np.asarray(s, dtype=float))
    nz = w != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        osc = np.where(nz, w * w * np.cos(1.0 / np.where(nz, w, 1.0)), 0.0)
    return 1.0 + OSC_AMPLITUDE * osc


def _osc(q):
    return _norm2(q) * osc_profile(_angle(q))


def _poly2(q):
    x, y = _xy(q)
    return x * x + y * y + x


def _smooth(q):
    x, y = _xy(q)
    return np.sin(x) * np.cos(y)


def _absdiff(q):
    x, y = _xy(q)
    return np.abs(x) - np.abs(y)


@dataclass(frozen=True)
class Builtin:
    key: str
    func: Callable
    lipschitz: float
    ph_lipschitz: float
    degree: int | None = None
    convex: bool = False
    params: tuple = ()
    nd: bool = False

    def __call__(self, q):
        return self.func(q)

    def boundary(self, t):
        """``Phi(t) = f(cos t, sin t)``."""
        t = np.asarray(t, dtype=float)
        return self.func(np.stack([np.cos(t), np.sin(t)], axis=-1))

    @property
    def spec(self) -> str:
        if self.params:
            return f"builtin:{self.key}:" + ",".join(repr(float(p)) for p in self.params)
        return f"builtin:{self.key}"


# |Phi| <= 1 + 4a and |Phi'| <= a (2|w| + 1) <= 5a
_OSC_L = float(np.hypot(1.0 + 4.0 * OSC_AMPLITUDE, 5.0 * OSC_AMPLITUDE))

_FIXED = {
    "norm2": Builtin("norm2", _norm2, 1.0, 1.0, 1, True, nd=True),
    "norm1": Builtin("norm1", _norm1, np.sqrt(2.0), np.sqrt(2.0), 1, True, nd=True),
    "norminf": Builtin("norminf", _norminf, 1.0, 1.0, 1, True, nd=True),
    "maxcoord": Builtin("maxcoord", _maxcoord, 1.0, 1.0, 1, True),
    "saddle": Builtin("saddle", _saddle, 2.0, 2.0, 1, False),
    "osc": Builtin("osc", _osc, _OSC_L, _OSC_L, 1, False),
    "poly2": Builtin("poly2", _poly2, 3.0, 2.0, None, True),
    "smooth": Builtin("smooth", _smooth, 1.0, np.sqrt(2.0), None, False),
    "absdiff": Builtin("absdiff", _absdiff, np.sqrt(2.0), np.sqrt(2.0), 1, False),
}

BUILTIN_KEYS = tuple(sorted([*_FIXED, "linear"]))


def linear(*coeffs: float) -> Builtin:
    a = np.asarray(coeffs, dtype=float)
    if a.ndim != 1 or len(a) < 2:
        raise ParseError("linear needs at least 2 coefficients")
    L = float(np.linalg.norm(a))

    def f(q, a=a):
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != len(a):
            raise ParseError(f"linear({len(a)} coefficients) evaluated on {q.shape[-1]}-D points")
        return q @ a

    return Builtin("linear", f, L, float(np.linalg.norm(a[:2])), 1, True, tuple(a.tolist()), nd=True)


def get_builtin(key: str, params: str | None = None) -> Builtin:
    """Look up ``key``; ``params`` is a comma-separated number list."""
    if key == "linear":
        if not params:
            raise ParseError("linear requires coefficients, e.g. linear:1,-2")
        try:
            vals = [float(p) for p in params.split(",")]
        except ValueError as exc:
            raise ParseError(f"bad linear coefficients {params!r}") from exc
        return linear(*vals)
    if key not in _FIXED:
        raise UnknownBuiltin(f"unknown builtin {key!r}; known: {', '.join(BUILTIN_KEYS)}")
    if params:
        raise ParseError(f"builtin {key!r} takes no parameters")
    return _FIXED[key]


def all_builtins(include_linear: bool = True) -> list[Builtin]:
    out = [_FIXED[k] for k in sorted(_FIXED)]
    if include_linear:
        out.append(linear(1.0, -2.0))
    return out
