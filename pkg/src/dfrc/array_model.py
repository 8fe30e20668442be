"""Uniform linear array geometry, steering vectors and beampatterns.

All angles are in radians. Beampatterns are linear power gains normalized by
the transmitted power of the block being assessed, so an ideal single-beam
column peaks at ``M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when an input lies outside an operation's domain."""


@dataclass(frozen=True)
class ArrayGeometry:
    num_elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 2:
            raise DomainError(f"num_elements must be an integer >= 2, got {self.num_elements}")
        if not self.spacing_wavelengths > 0:
            raise DomainError(f"spacing_wavelengths must be > 0, got {self.spacing_wavelengths}")

    @property
    def beamwidth_sine(self) -> float:
        """Null-to-peak mainlobe width of the uniform array factor in sine space."""
        return 2.0 / self.num_elements


@dataclass(frozen=True)
class AngleGrid:
    angles: tuple

    def __init__(self, angles: Sequence[float]):
        arr = np.asarray(angles, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("angle grid must be nonempty")
        if np.any(np.abs(arr) > np.pi / 2 + 1e-12):
            raise DomainError("grid angles must lie in [-pi/2, pi/2]")
        if np.any(np.diff(arr) <= 0):
            raise DomainError("grid angles must be strictly increasing")
        object.__setattr__(self, "angles", tuple(float(a) for a in arr))

    def __len__(self):
        return len(self.angles)

    def __iter__(self):
        return iter(self.angles)

    def as_array(self) -> np.ndarray:
        return np.array(self.angles)

    @classmethod
    def from_degrees(cls, degrees: Sequence[float]) -> "AngleGrid":
        return cls(np.deg2rad(np.asarray(degrees, dtype=float)))

    @classmethod
    def sine_uniform(cls, num_points: int, lo: float = -1.0, hi: float = 1.0) -> "AngleGrid":
        """Grid uniform in ``sin(theta)`` over ``[lo, hi]``, endpoints included."""
        s = np.linspace(lo, hi, num_points)
        return cls(np.arcsin(np.clip(s, -1.0, 1.0)))

    @classmethod
    def sector(cls, geometry: ArrayGeometry, center: float = 0.0,
               width_beamwidths: float = 0.5, step_beamwidths: float = 0.1) -> "AngleGrid":
        """Search sector of a given width (in beamwidths) discretized in sine space.

        Endpoints are inclusive, so half a beamwidth in tenth-beamwidth steps
        gives six angles.
        """
        if width_beamwidths < 0 or step_beamwidths <= 0:
            raise DomainError("sector width must be >= 0 and step > 0")
        bw = geometry.beamwidth_sine
        n_steps = int(round(width_beamwidths / step_beamwidths))
        s0 = np.sin(center) - 0.5 * width_beamwidths * bw
        s = s0 + np.arange(n_steps + 1) * step_beamwidths * bw
        if np.any(np.abs(s) > 1 + 1e-12):
            raise DomainError("sector extends beyond endfire")
        return cls(np.arcsin(np.clip(s, -1.0, 1.0)))


def _check_angle(angle) -> np.ndarray:
    theta = np.asarray(angle, dtype=float)
    if np.any(np.abs(theta) > np.pi / 2 + 1e-12):
        raise DomainError(f"angle outside [-pi/2, pi/2]: {angle}")
    return theta


def steering(geometry: ArrayGeometry, angle: float) -> np.ndarray:
    """Transmit steering vector; element ``m`` is ``exp(j 2 pi (d/lambda) m sin(angle))``."""
    theta = _check_angle(angle)
    m = np.arange(geometry.num_elements)
    return np.exp(2j * np.pi * geometry.spacing_wavelengths * m * np.sin(theta))


def steering_matrix(geometry: ArrayGeometry, angles) -> np.ndarray:
    """Steering vectors stacked as columns, shape ``(M, len(angles))``."""
    theta = _check_angle(np.atleast_1d(angles))
    m = np.arange(geometry.num_elements)[:, None]
    return np.exp(2j * np.pi * geometry.spacing_wavelengths * m * np.sin(theta)[None, :])


def column_beampattern(geometry: ArrayGeometry, w: np.ndarray, angle: float) -> float:
    w = np.asarray(w, dtype=complex).ravel()
    power = np.vdot(w, w).real
    if power <= 0:
        raise DomainError("beampattern of a zero column is undefined")
    a = steering(geometry, angle)
    return float(abs(np.vdot(a, w)) ** 2 / power)


def block_beampattern(geometry: ArrayGeometry, block: np.ndarray, angle: float) -> float:
    """``||a^H W||^2 / tr(W W^H)`` for a precoder block (comm, radar or full)."""
    block = np.asarray(block, dtype=complex)
    if block.ndim == 1:
        block = block[:, None]
    power = np.sum(np.abs(block) ** 2)
    if power <= 0:
        raise DomainError("beampattern of an all-zero block is undefined")
    a = steering(geometry, angle)
    return float(np.sum(np.abs(a.conj() @ block) ** 2) / power)


def _pattern_over(geometry, block, angles):
    A = steering_matrix(geometry, angles)
    power = np.sum(np.abs(block) ** 2)
    if block.size == 0 or power <= 0:
        return np.full(len(angles), np.nan)
    return np.sum(np.abs(A.conj().T @ block) ** 2, axis=1) / power


@dataclass
class BeampatternTable:
    angles: np.ndarray
    comm: np.ndarray
    radar: np.ndarray
    total: np.ndarray
    columns: np.ndarray  # (len(angles), K_c + K_r); NaN where a column is zero

    def header(self) -> list:
        return (["angle_deg", "B_c", "B_r", "B_total"]
                + [f"col_{j}" for j in range(self.columns.shape[1])])

    def rows(self) -> list:
        out = []
        for i, ang in enumerate(self.angles):
            out.append([float(np.rad2deg(ang)), self.comm[i], self.radar[i], self.total[i],
                        *self.columns[i]])
        return out


def beampattern_sweep(geometry: ArrayGeometry, W_c: np.ndarray, W_r: np.ndarray,
                      grid: AngleGrid) -> BeampatternTable:
    """Evaluate comm, radar, total and per-column patterns over a grid.

    Blocks with zero power give NaN columns rather than raising, so a
    radar-only design still produces a full table.
    """
    angles = grid.as_array()
    W_c = np.asarray(W_c, dtype=complex).reshape(geometry.num_elements, -1)
    W_r = np.asarray(W_r, dtype=complex).reshape(geometry.num_elements, -1)
    W = np.hstack([W_c, W_r])
    cols = np.column_stack([_pattern_over(geometry, W[:, [j]], angles) for j in range(W.shape[1])]) \
        if W.shape[1] else np.zeros((len(angles), 0))
    return BeampatternTable(
        angles=angles,
        comm=_pattern_over(geometry, W_c, angles),
        radar=_pattern_over(geometry, W_r, angles),
        total=_pattern_over(geometry, W, angles),
        columns=cols,
    )
