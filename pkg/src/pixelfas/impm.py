"""Internal multi-port reduction: configuration -> loads -> feed impedance,
reflection, port currents, and total pattern.

Open internal ports are handled by exact row/column elimination, not a
large-impedance sentinel, so the reduced system stays well conditioned.
All operations are pure; many configurations can be evaluated
concurrently on the same immutable network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridMismatchError, PixelFasError
from .em_model import FrequencyGrid, MultiportNetwork, PatternGrid
from .numerics import solve_linear

REFLECTION_FLOOR_DB = -120.0


@dataclass(frozen=True)
class PixelConfiguration:
    """One pixel-layer state: hardwire bits plus switch positions and bits.

    ``hardwire`` holds the Q connection bits (0 = open, 1 = connected);
    ``switch_positions`` are 1-based internal-port indices whose state is
    taken from ``switch_bits`` instead of ``hardwire``.
    """

    q: int
    hardwire: tuple
    switch_positions: tuple
    switch_bits: tuple

    def __post_init__(self):
        if len(self.hardwire) != self.q:
            raise ConfigError("hardwire vector must have Q entries")
        if any(b not in (0, 1) for b in self.hardwire):
            raise ConfigError("hardwire entries must be 0 or 1")
        p = len(self.switch_positions)
        if len(set(self.switch_positions)) != p:
            raise ConfigError("switch positions must be distinct")
        if p >= self.q:
            raise ConfigError("need fewer switches than internal ports")
        if any(not 1 <= s <= self.q for s in self.switch_positions):
            raise ConfigError("switch positions must lie in 1..Q")
        if len(self.switch_bits) != p or any(b not in (0, 1) for b in self.switch_bits):
            raise ConfigError("switch bits must be 0/1 and match the switch count")

    @property
    def config_id(self) -> str:
        bits = "".join(str(b) for b in self.switch_bits)
        return f"S={list(self.switch_positions)} bits={bits}"


@dataclass(frozen=True)
class CircuitBranch:
    """Two-terminal RLC branch, series or parallel, with optional elements."""

    topology: str = "series"
    r_ohm: float = 0.0
    l_h: float = 0.0
    c_f: float | None = None

    def __post_init__(self):
        if self.topology not in ("series", "parallel"):
            raise ConfigError(f"unknown branch topology {self.topology!r}")
        if self.r_ohm < 0 or self.l_h < 0:
            raise ConfigError("R and L must be nonnegative")
        if self.c_f is not None and self.c_f <= 0:
            raise ConfigError("C must be positive when present")

    def impedance(self, f_hz) -> np.ndarray:
        w = 2.0 * math.pi * np.asarray(f_hz, dtype=float)
        if self.topology == "series":
            z = self.r_ohm + 1j * w * self.l_h
            if self.c_f is not None:
                z = z + 1.0 / (1j * w * self.c_f)
            return z
        y = np.zeros_like(w, dtype=complex)
        if self.r_ohm > 0:
            y = y + 1.0 / self.r_ohm
        if self.l_h > 0:
            y = y + 1.0 / (1j * w * self.l_h)
        if self.c_f is not None:
            y = y + 1j * w * self.c_f
        if np.any(y == 0):
            raise ConfigError("parallel branch with no elements is an open, not a load")
        return 1.0 / y


@dataclass(frozen=True)
class SwitchModel:
    """On/off equivalent-circuit branches of the RF switch."""

    on_branch: CircuitBranch
    off_branch: CircuitBranch


@dataclass
class LoadMap:
    """Per-port termination: open (eliminated) or a complex impedance per frequency.

    ``z_load`` has shape (Q, T); entries under ``open_mask`` carry no value.
    """

    open_mask: np.ndarray
    z_load: np.ndarray
    config_id: str = ""

    def __post_init__(self):
        self.open_mask = np.asarray(self.open_mask, dtype=bool)
        self.z_load = np.asarray(self.z_load, dtype=complex)
        if self.z_load.shape[0] != self.open_mask.shape[0]:
            raise ConfigError("load map arrays disagree on Q")

    @property
    def q(self) -> int:
        return self.open_mask.shape[0]


@dataclass
class PortSolution:
    """Feed impedance and the (Q+1)-element current vector per frequency."""

    z_in: np.ndarray
    currents: np.ndarray  # (T, Q+1); index 0 is the feed


def build_load_map(config: PixelConfiguration, model: SwitchModel,
                   freqs: FrequencyGrid) -> LoadMap:
    """Terminations for one configuration: hardwire short/open, switch on/off."""
    t = freqs.t_samples
    open_mask = np.zeros(config.q, dtype=bool)
    z_load = np.zeros((config.q, t), dtype=complex)
    switch_set = dict(zip(config.switch_positions, config.switch_bits))
    f = freqs.samples_hz
    for port in range(1, config.q + 1):
        if port in switch_set:
            branch = model.on_branch if switch_set[port] else model.off_branch
            z_load[port - 1] = branch.impedance(f)
        elif config.hardwire[port - 1] == 0:
            open_mask[port - 1] = True
    return LoadMap(open_mask=open_mask, z_load=z_load, config_id=config.config_id)


def _reduced_blocks(net: MultiportNetwork, loads: LoadMap, t: int):
    keep = ~loads.open_mask
    z_i = net.z_i(t)[np.ix_(keep, keep)] + np.diag(loads.z_load[keep, t])
    return keep, z_i, net.z_ie(t)[keep], net.z_ei(t)[keep]


def input_impedance(net: MultiportNetwork, loads: LoadMap) -> np.ndarray:
    """Feed impedance per frequency via the Schur complement of the loaded block."""
    if loads.q != net.q:
        raise ConfigError("load map and network disagree on Q")
    z_in = np.empty(net.freqs.t_samples, dtype=complex)
    for t in range(net.freqs.t_samples):
        keep, z_i, z_ie, z_ei = _reduced_blocks(net, loads, t)
        if not keep.any():
            z_in[t] = net.z_e(t)
            continue
        x = solve_linear(z_i, z_ie, config_id=loads.config_id)
        z_in[t] = net.z_e(t) - z_ei @ x
    return z_in


def reflection_coefficient(z_in, z0: float) -> np.ndarray:
    """Reflection magnitude in dB against a real characteristic impedance."""
    if z0 <= 0:
        raise ConfigError("characteristic impedance must be positive")
    z_in = np.asarray(z_in, dtype=complex)
    denom = z_in + z0
    if np.any(denom == 0):
        raise PixelFasError("Z_in = -Z0 is non-physical (infinite reflection)")
    gamma = np.abs((z_in - z0) / denom)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(gamma)
    return np.maximum(db, REFLECTION_FLOOR_DB)


def port_currents(net: MultiportNetwork, loads: LoadMap,
                  z_in: np.ndarray) -> PortSolution:
    """Feed-normalized currents: i0 = 1/sqrt(Z_in) on the principal branch.

    The branch/scale choice is immaterial downstream: the normalized
    covariance is invariant under any nonzero complex rescaling of a
    state's current vector.
    """
    z_in = np.asarray(z_in, dtype=complex)
    t_samples = net.freqs.t_samples
    currents = np.zeros((t_samples, net.q + 1), dtype=complex)
    for t in range(t_samples):
        i0 = 1.0 / np.sqrt(z_in[t])
        currents[t, 0] = i0
        keep, z_i, z_ie, _ = _reduced_blocks(net, loads, t)
        if keep.any():
            internal = -solve_linear(z_i, z_ie, config_id=loads.config_id) * i0
            currents[t, 1:][keep] = internal
    return PortSolution(z_in=z_in, currents=currents)


def total_pattern(patterns: PatternGrid, sol: PortSolution) -> PatternGrid:
    """Current-weighted sum of the open-circuit patterns: one state, all nodes."""
    if patterns.n_ports != sol.currents.shape[1]:
        raise GridMismatchError(
            f"pattern bundle has {patterns.n_ports} ports, "
            f"current vector has {sol.currents.shape[1]}"
        )
    e_theta = np.einsum("tq,tqn->tn", sol.currents, patterns.e_theta)[:, None, :]
    e_phi = np.einsum("tq,tqn->tn", sol.currents, patterns.e_phi)[:, None, :]
    return PatternGrid(grid=patterns.grid, freqs=patterns.freqs,
                       e_theta=e_theta, e_phi=e_phi)
