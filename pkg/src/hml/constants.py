"""Fitted envelope constants: calibration grids, fitting routines and the frozen constants file.

Each calibration is a pure function of its grid. ``calibrate`` refits every
entry and writes ``data/constants.json``; ``frozen`` reads the stored value
(fitted value times ``HEADROOM``) for the default grid, so a later regression
that pushes a ratio past the frozen constant is detectable.
"""

from __future__ import annotations

import hashlib
import json
import math
from functools import lru_cache
from pathlib import Path

import mpmath
import numpy as np

from .bessel import bessel_j_series
from .modforms import hecke_eigenforms
from .moments import first_moment, second_main_series
from .numeric import Precision
from .offdiag import bump_d1_vec
from .petersson import solve_harmonic_weights
from .voronoi import (
    SmoothingParams,
    default_cutoff,
    w_delta_d1_vec,
    w_tilde_asymptotic,
    w_tilde_table,
)

__all__ = ["GRIDS", "HEADROOM", "grid_hash", "fit", "calibrate", "load", "frozen", "CONSTANTS_PATH"]

CONSTANTS_PATH = Path(__file__).parent / "data" / "constants.json"
HEADROOM = 1.5

GRIDS = {
    "bessel.tiny": {"nu": [11, 49, 99, 199], "points": 12},
    "bessel.subtransition": {"nu": [11, 49, 99, 199], "delta": 0.3, "points": 12},
    "bessel.peak": {"nu": [11, 49, 99, 199], "points": 240},
    "voronoi.transform": {"k": [24, 40], "delta_exp": [0.55, 0.65]},
    "voronoi.weight_derivatives": {"delta": [10, 100, 1000], "points": 4000},
    "offdiag.bump_derivatives": {"l": [-3, -2, -1, 0, 1, 2, 3], "L": [1.0, 4.0], "alpha": 50.0, "points": 4000},
    "moments.first": {"k": [24, 36, 48, 60]},
    "moments.second_upper": {"k": [24, 36, 48, 60, 100, 150, 200]},
}


def grid_hash(grid: dict) -> str:
    text = json.dumps(grid, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _bessel_abs(nu: int, z: float) -> float:
    return abs(float(bessel_j_series(nu, mpmath.mpf(z), Precision(128))))


def _fit_bessel_tiny(g):
    # |J| <= C z^2 exp(-14 nu/13) for z <= (nu+1)/4
    best = 0.0
    for nu in g["nu"]:
        top = (nu + 1) / 4
        for j in range(1, g["points"] + 1):
            z = top * j / g["points"]
            best = max(best, _bessel_abs(nu, z) / (z * z * math.exp(-14 * nu / 13)))
    return {"C": best}


def _fit_bessel_sub(g):
    # |J| <= C exp(-nu^delta) for z <= (nu+1) - (nu+1)^(1/3+delta)
    best = 0.0
    d = g["delta"]
    for nu in g["nu"]:
        top = (nu + 1) - (nu + 1) ** (1 / 3 + d)
        for j in range(1, g["points"] + 1):
            z = top * j / g["points"]
            best = max(best, _bessel_abs(nu, z) / math.exp(-nu ** d))
    return {"C": best}


def _fit_bessel_peak(g):
    best = 0.0
    for nu in g["nu"]:
        for j in range(1, g["points"] + 1):
            z = 3 * nu * j / g["points"]
            best = max(best, _bessel_abs(nu, z) * nu ** (1 / 3))
        # the maximum sits just past nu; sample it finely
        for j in range(41):
            z = nu + j * 2 * nu ** (1 / 3) / 40
            best = max(best, _bessel_abs(nu, z) * nu ** (1 / 3))
    return {"C_prime": best}


def _fit_voronoi(g):
    """C (x^(3/4) decay of the transform), C1 and C2 (asymptotic remainder), C_A (decay with A = 3)."""
    out = {"C": 0.0, "C1": 0.0, "C2": 0.0, "C_A": 0.0}
    for k in g["k"]:
        x = k * k // 4
        for e in g["delta_exp"]:
            delta = x ** e
            p = SmoothingParams(delta, x, k)
            n_top = default_cutoff(p)
            tab = w_tilde_table(p, n_top)
            for n in range(1, n_top + 1):
                w = float(tab[n - 1])
                nx = n * x
                out["C"] = max(out["C"], abs(w) * nx ** 0.75)
                r = abs(w - w_tilde_asymptotic(n, p))
                out["C1"] = max(out["C1"], r / (2 * nx ** -1.25))
                out["C2"] = max(out["C2"], r / (2 * nx ** -0.25 / delta))
                xi = nx / (k * k + delta * delta)
                if xi >= 1:
                    out["C_A"] = max(out["C_A"], abs(w) * xi ** 3)
    return out


def _derivs(d1, t: np.ndarray, step: float):
    """First derivative exactly, second and third by central differences of it."""
    f1 = d1(t)
    f2 = (d1(t + step) - d1(t - step)) / (2 * step)
    f3 = (d1(t + step) - 2 * f1 + d1(t - step)) / (step * step)
    return f1, f2, f3


def _fit_weight_derivs(g):
    out = {"C1": 0.0, "C2": 0.0, "C3": 0.0}
    for delta in g["delta"]:
        t = np.linspace(1.0, 2.0, g["points"] + 1)
        # resolve both transition zones densely
        t = np.unique(np.concatenate([t, 1 + np.linspace(0, 1, 800) / delta, 2 - np.linspace(0, 1, 800) / delta]))
        f = _derivs(lambda s: w_delta_d1_vec(s, delta), t, 1e-4 / delta)
        for j, fj in enumerate(f, 1):
            out[f"C{j}"] = max(out[f"C{j}"], float(np.max(np.abs(fj))) / delta ** j)
    return out


def _fit_bump_derivs(g):
    out = {"C1": 0.0, "C2": 0.0}
    alpha = g["alpha"]
    for L in g["L"]:
        for l in g["l"]:
            span = L * 2 ** (abs(l) + 2)
            xi = alpha + np.linspace(-span, span, g["points"])
            step = 1e-4 * L * 2.0 ** abs(l)
            f1 = bump_d1_vec(l, xi, L, alpha)
            f2 = (bump_d1_vec(l, xi + step, L, alpha) - bump_d1_vec(l, xi - step, L, alpha)) / (2 * step)
            out["C1"] = max(out["C1"], float(np.max(np.abs(f1))) * 2.0 ** abs(l) * L)
            out["C2"] = max(out["C2"], float(np.max(np.abs(f2))) * 4.0 ** abs(l) * L * L)
    return out


def _fit_first_moment(g):
    best = 0.0
    for k in g["k"]:
        x = k * k // 4
        basis = solve_harmonic_weights(k, hecke_eigenforms(k, 2 * x))
        value, main = first_moment(basis, x)
        best = max(best, abs(float(value) - float(main)) / (math.sqrt(x) / k ** 0.9))
    return {"C": best}


def _fit_second_upper(g):
    best = 0.0
    for k in g["k"]:
        x = k * k // 4
        main, _ = second_main_series(x, k - 1)
        best = max(best, main / math.sqrt(x))
    return {"C": best}


FITTERS = {
    "bessel.tiny": _fit_bessel_tiny,
    "bessel.subtransition": _fit_bessel_sub,
    "bessel.peak": _fit_bessel_peak,
    "voronoi.transform": _fit_voronoi,
    "voronoi.weight_derivatives": _fit_weight_derivs,
    "offdiag.bump_derivatives": _fit_bump_derivs,
    "moments.first": _fit_first_moment,
    "moments.second_upper": _fit_second_upper,
}


def fit(lemma: str, grid: dict | None = None) -> dict:
    return FITTERS[lemma](GRIDS[lemma] if grid is None else grid)


def calibrate(path: Path = CONSTANTS_PATH) -> dict:
    table = {}
    for lemma in sorted(GRIDS):
        grid = GRIDS[lemma]
        fitted = fit(lemma)
        table[f"{lemma}|{grid_hash(grid)}"] = {
            "lemma": lemma,
            "grid": grid,
            "fitted": fitted,
            "frozen": {name: v * HEADROOM for name, v in fitted.items()},
        }
    path.write_text(json.dumps(table, indent=1, sort_keys=True) + "\n")
    load.cache_clear()
    return table


@lru_cache(maxsize=1)
def load(path: Path = CONSTANTS_PATH) -> dict:
    return json.loads(Path(path).read_text())


def frozen(lemma: str, name: str) -> float:
    """Stored constant for the default grid of ``lemma``."""
    key = f"{lemma}|{grid_hash(GRIDS[lemma])}"
    table = load()
    if key not in table:
        raise KeyError(f"no calibration for {key}; rerun calibrate()")
    return table[key]["frozen"][name]


if __name__ == "__main__":
    for key, entry in calibrate().items():
        print(key, entry["fitted"])
