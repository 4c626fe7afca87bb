"""Handover-margin controllers.

A controller maps the load pair of a (serving, target) cell pair to the
handover margin ``HM[k, i]`` read by serving cell ``k`` for target ``i``.
Two low-dimensional surfaces are provided: a bilinear interpolation of the
four corner margins and an exponential function of the load difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DISABLED = math.inf

POLYNOMIAL = "polynomial"
EXPONENTIAL = "exponential"


def poly_surface(load_i, load_j, p):
    """Bilinear margin ``b0 + b1*Li + b2*Lj + b3*Li*Lj`` (dB, unclamped)."""
    b0, b1, b2, b3 = p
    return b0 + b1 * load_i + b2 * load_j + b3 * load_i * load_j


def corners_to_coeffs(hm00: float, hm10: float, hm01: float, hm11: float):
    """Polynomial coefficients interpolating the four corner margins.

    ``hm10`` is the margin at ``(L_i, L_j) = (1, 0)``.
    """
    return (hm00, hm10 - hm00, hm01 - hm00, hm00 + hm11 - hm01 - hm10)


def exp_surface(w, p):
    """Exponential margin as a function of the load difference ``w = Li - Lj``.

    For ``w >= 0`` the margin grows (or decays) from ``b`` to ``a1`` at
    ``w = 1``; for ``w < 0`` it mirrors towards ``2b - a2`` at ``w = -1``.
    """
    a1, a2, b = p
    if not (a1 > 0 and a2 > 0 and b > 0):
        raise ConfigurationError(f"exponential surface needs a1, a2, b > 0, got {p}")
    w = np.asarray(w, dtype=float)
    up = b * np.exp(math.log(a1 / b) * np.maximum(w, 0.0))
    down = 2.0 * b - b * np.exp(-math.log(a2 / b) * np.minimum(w, 0.0))
    out = np.where(w >= 0, up, down)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HmSurface:
    kind: str
    params: tuple[float, ...]
    hm_min: float = -10.0
    hm_max: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if self.kind == POLYNOMIAL:
            if len(self.params) != 4:
                raise ConfigurationError("polynomial surface needs (b0, b1, b2, b3)")
        elif self.kind == EXPONENTIAL:
            if len(self.params) != 3:
                raise ConfigurationError("exponential surface needs (a1, a2, b)")
            if min(self.params) <= 0:
                raise ConfigurationError(f"exponential surface needs a1, a2, b > 0, got {self.params}")
        else:
            raise ConfigurationError(f"unknown surface kind {self.kind!r}")
        if not self.hm_min <= self.hm_max:
            raise ConfigurationError("hm_min must not exceed hm_max")

    @classmethod
    def flat(cls, hm0: float = 6.0, **bounds) -> "HmSurface":
        return cls(POLYNOMIAL, (hm0, 0.0, 0.0, 0.0), **bounds)

    def evaluate(self, serving_load, target_load):
        """Clamped margin for a handover from a cell at ``serving_load``.

        The polynomial takes ``(L_serving, L_target)`` as ``(L_i, L_j)``; the
        exponential takes ``w = L_target - L_serving``, so a loaded target
        raises the margin towards ``a1`` and a lightly loaded target lowers
        it towards ``2b - a2``.
        """
        if self.kind == POLYNOMIAL:
            raw = poly_surface(serving_load, target_load, self.params)
        else:
            raw = exp_surface(np.asarray(target_load) - np.asarray(serving_load), self.params)
        return np.clip(raw, self.hm_min, self.hm_max)


def constant_hm_matrix(n: int, value: float = 6.0) -> np.ndarray:
    hm = np.full((n, n), float(value))
    np.fill_diagonal(hm, DISABLED)
    return hm


def sample_hm_matrix(surface: HmSurface, loads, neighbors: np.ndarray | None = None) -> np.ndarray:
    """Dense margin matrix ``hm[k, i] = surface.evaluate(L_k, L_i)``.

    Row ``k`` is the serving cell, column ``i`` the handover target.

    ``neighbors`` is an optional boolean (n, n) mask; pairs outside it, and
    the diagonal, hold the disabled sentinel ``+inf``.
    """
    loads = np.asarray(loads, dtype=float)
    hm = np.asarray(surface.evaluate(loads[:, None], loads[None, :]), dtype=float)
    hm = np.broadcast_to(hm, (len(loads), len(loads))).copy()
    if neighbors is not None:
        hm[~np.asarray(neighbors, dtype=bool)] = DISABLED
    np.fill_diagonal(hm, DISABLED)
    return hm


class FixedController:
    """A margin matrix held constant for the entire run."""

    def __init__(self, hm: np.ndarray):
        self.hm = np.array(hm, dtype=float)

    def initial(self, n_cells: int) -> np.ndarray:
        if self.hm.shape != (n_cells, n_cells):
            raise ConfigurationError(
                f"HM matrix shape {self.hm.shape} does not match {n_cells} cells")
        if np.isnan(self.hm).any():
            raise ConfigurationError("HM matrix has missing (NaN) entries")
        return self.hm

    def maybe_update(self, clock: float, loads) -> np.ndarray | None:
        return None


class DynamicSampler:
    """Re-samples a surface from current loads every ``period`` seconds.

    Before the first update the matrix is the surface sampled at
    ``initial_loads`` if given, otherwise a flat ``hm0`` matrix.
    """

    def __init__(self, surface: HmSurface, period: float = 5.0, hm0: float = 6.0,
                 initial_loads=None, neighbors=None):
        if not period > 0:
            raise ConfigurationError("update period must be > 0")
        self.surface = surface
        self.period = float(period)
        self.hm0 = hm0
        self.initial_loads = None if initial_loads is None else np.asarray(initial_loads, float)
        self.neighbors = neighbors
        self.last_update = 0.0
        self.n_updates = 0

    def initial(self, n_cells: int) -> np.ndarray:
        self.last_update = 0.0
        self.n_updates = 0
        if self.initial_loads is not None:
            if len(self.initial_loads) != n_cells:
                raise ConfigurationError("initial_loads length does not match cell count")
            return sample_hm_matrix(self.surface, self.initial_loads, self.neighbors)
        hm = constant_hm_matrix(n_cells, self.hm0)
        if self.neighbors is not None:
            hm[~np.asarray(self.neighbors, dtype=bool)] = DISABLED
        return hm

    def maybe_update(self, clock: float, loads) -> np.ndarray | None:
        # small slack so accumulated float clocks land on the boundary
        if clock - self.last_update < self.period - 1e-9:
            return None
        self.last_update = clock
        self.n_updates += 1
        return sample_hm_matrix(self.surface, loads, self.neighbors)
