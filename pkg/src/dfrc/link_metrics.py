"""Radar and communication output SINRs, in precoder and covariance form.

Node channels are stored pre-normalized: ``g_k = sqrt(P_e) / sigma_k * h_k``,
which makes the noise term of every communication SINR equal to one. For a
line-of-sight node, ``g_k = sqrt(input_snr) * a(theta_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .array_model import AngleGrid, ArrayGeometry, DomainError, steering, steering_matrix

# numerator of a covariance-form SINR may dip this far below zero (relative to
# the trace scale of the matrices involved) before we call the ordering violated
PSD_ORDER_TOL = 1e-7


@dataclass(frozen=True)
class SecondaryNode:
    channel: np.ndarray
    input_snr: float
    symbol_len: int = 10
    los_angle: Optional[float] = None

    def __post_init__(self):
        g = np.asarray(self.channel, dtype=complex).ravel()
        if not np.any(g):
            raise DomainError("node channel must be nonzero")
        if not self.input_snr > 0:
            raise DomainError("node input SNR must be positive")
        if int(self.symbol_len) != self.symbol_len or self.symbol_len < 1:
            raise DomainError("symbol_len must be a positive integer")
        g.setflags(write=False)
        object.__setattr__(self, "channel", g)

    @classmethod
    def line_of_sight(cls, geometry: ArrayGeometry, angle: float, input_snr: float,
                      symbol_len: int = 10) -> "SecondaryNode":
        g = np.sqrt(input_snr) * steering(geometry, angle)
        return cls(channel=g, input_snr=input_snr, symbol_len=symbol_len, los_angle=float(angle))


@dataclass(frozen=True)
class RadarSpec:
    sector: AngleGrid
    pulse_len: int = 100
    worst_case_input_snr: float = 10 ** (-3.4)
    required_sinr: Optional[float] = None

    def __post_init__(self):
        if int(self.pulse_len) != self.pulse_len or self.pulse_len < 1:
            raise DomainError("pulse_len must be a positive integer")
        if not self.worst_case_input_snr > 0:
            raise DomainError("worst-case input SNR must be positive")
        if self.required_sinr is not None and not self.required_sinr > 0:
            raise DomainError("required radar SINR must be positive")


@dataclass
class Precoder:
    """``W = [W_c, W_r]``; column ``k`` of ``W_c`` serves node ``k``."""

    W_c: np.ndarray
    W_r: np.ndarray

    def __post_init__(self):
        self.W_c = np.asarray(self.W_c, dtype=complex)
        self.W_r = np.asarray(self.W_r, dtype=complex)
        if self.W_c.ndim != 2 or self.W_r.ndim != 2 or self.W_c.shape[0] != self.W_r.shape[0]:
            raise DomainError("W_c and W_r must be 2-D with the same number of rows")

    @property
    def W(self) -> np.ndarray:
        return np.hstack([self.W_c, self.W_r])

    @property
    def num_elements(self) -> int:
        return self.W_c.shape[0]

    def antenna_powers(self) -> np.ndarray:
        return np.sum(np.abs(self.W) ** 2, axis=1)

    def power_split(self) -> tuple:
        """(radar_fraction, comm_fraction) of total transmit power."""
        pc = float(np.sum(np.abs(self.W_c) ** 2))
        pr = float(np.sum(np.abs(self.W_r) ** 2))
        total = pc + pr
        if total <= 0:
            return (0.0, 0.0)
        return (pr / total, pc / total)


@dataclass
class CovarianceSolution:
    """Total covariance ``R`` and per-node ``R_k`` (zero for nodes left out)."""

    R: np.ndarray
    R_k: list = field(default_factory=list)

    @property
    def R_sum(self) -> np.ndarray:
        out = np.zeros_like(self.R, dtype=complex)
        for Rk in self.R_k:
            out = out + Rk
        return out

    @classmethod
    def from_precoder(cls, W: Precoder) -> "CovarianceSolution":
        return cls(R=W.W @ W.W.conj().T,
                   R_k=[np.outer(W.W_c[:, k], W.W_c[:, k].conj()) for k in range(W.W_c.shape[1])])


def _quad(a, X) -> float:
    return float(np.real(np.vdot(a, X @ a)))


def radar_sinr(W_c, W_r, angle: float, xi_ir: float, pulse_len: int,
               geometry: ArrayGeometry) -> float:
    a = steering(geometry, angle)
    M = geometry.num_elements
    sig = float(np.sum(np.abs(a.conj() @ np.asarray(W_r).reshape(M, -1)) ** 2))
    intf = float(np.sum(np.abs(a.conj() @ np.asarray(W_c).reshape(M, -1)) ** 2))
    return pulse_len * M * xi_ir * sig / (M * xi_ir * intf + 1.0)


def radar_sinr_over(W: Precoder, radar: RadarSpec, geometry: ArrayGeometry,
                    xi_ir: Optional[float] = None) -> np.ndarray:
    """Radar output SINR at every sector angle."""
    xi = radar.worst_case_input_snr if xi_ir is None else xi_ir
    A = steering_matrix(geometry, radar.sector.as_array())
    M = geometry.num_elements
    sig = np.sum(np.abs(A.conj().T @ W.W_r) ** 2, axis=1)
    intf = np.sum(np.abs(A.conj().T @ W.W_c) ** 2, axis=1)
    return radar.pulse_len * M * xi * sig / (M * xi * intf + 1.0)


def comm_sinr(W: Precoder, k: int, node: SecondaryNode) -> float:
    """Symbol-level SINR at node ``k``; radar columns count as interference."""
    if not 0 <= k < W.W_c.shape[1]:
        raise DomainError(f"node index {k} out of range")
    g = node.channel
    gains = np.abs(g.conj() @ W.W) ** 2
    desired = gains[k]
    return float(node.symbol_len * desired / (np.sum(gains) - desired + 1.0))


def comm_sinrs(W: Precoder, nodes: Sequence[SecondaryNode]) -> np.ndarray:
    return np.array([comm_sinr(W, k, n) for k, n in enumerate(nodes)])


def _check_order(numerator: float, scale: float, what: str):
    if numerator < -PSD_ORDER_TOL * max(scale, 1.0):
        raise DomainError(f"{what}: covariance ordering violated (numerator {numerator:.3e})")


def radar_sinr_cov(R, R_sum, angle: float, xi_ir: float, pulse_len: int,
                   geometry: ArrayGeometry) -> float:
    a = steering(geometry, angle)
    M = geometry.num_elements
    num = _quad(a, np.asarray(R) - np.asarray(R_sum))
    _check_order(num, abs(np.trace(R)) * M, "radar SINR")
    num = max(num, 0.0)
    return pulse_len * M * xi_ir * num / (M * xi_ir * _quad(a, R_sum) + 1.0)


def comm_sinr_cov(R, R_k, node: SecondaryNode) -> float:
    g = node.channel
    desired = _quad(g, R_k)
    total = _quad(g, R)
    _check_order(total - desired, abs(np.trace(R)) * np.vdot(g, g).real, "comm SINR")
    return float(node.symbol_len * max(desired, 0.0) / (max(total - desired, 0.0) + 1.0))


def gamma_c_max(nodes: Sequence[SecondaryNode], geometry: ArrayGeometry) -> float:
    """Largest conceivable minimum comm SINR: all power toward the weakest node."""
    if len(nodes) == 0:
        raise DomainError("gamma_c_max needs at least one secondary node")
    M = geometry.num_elements
    return float(min(M * n.symbol_len * np.vdot(n.channel, n.channel).real for n in nodes))


def gamma_r_max(radar: RadarSpec, geometry: ArrayGeometry) -> float:
    """Maximum radar processing gain ``N_r M^3`` times the worst-case input SNR."""
    return float(radar.pulse_len * geometry.num_elements ** 3 * radar.worst_case_input_snr)


def db(x):
    """10 log10 of a linear power ratio; zero maps to -inf."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def from_db(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)
