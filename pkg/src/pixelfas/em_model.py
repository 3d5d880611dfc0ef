"""Data model and I/O for multiport networks, far-field patterns, and PAS.

The impedance matrices and open-circuit patterns of a real pixel antenna
come from a full-wave solver; this module treats them as input data
(native text format or Touchstone v2 Z-parameters, plus a pattern bundle
directory) and also provides seeded synthetic surrogates so the rest of
the toolchain can be exercised without an EM solver.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .numerics import SUPPORTS, QuadratureGrid, build_quadrature

RECIPROCITY_TOL = 1e-9
PASSIVITY_TOL = 1e-9
_FMT = "%.17g"


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency sampling of the design band.

    ``t_samples == 1`` means the single frequency ``f_lower_hz``.
    """

    f_lower_hz: float
    f_upper_hz: float
    t_samples: int

    def __post_init__(self):
        if self.t_samples < 1:
            raise ConfigError("frequency grid needs at least one sample")
        if self.f_lower_hz > self.f_upper_hz:
            raise ConfigError("f_lower_hz must not exceed f_upper_hz")
        if self.t_samples > 1 and self.f_lower_hz == self.f_upper_hz:
            raise ConfigError("multiple samples need a nonzero bandwidth")

    @property
    def samples_hz(self) -> np.ndarray:
        if self.t_samples == 1:
            return np.array([self.f_lower_hz])
        return np.linspace(self.f_lower_hz, self.f_upper_hz, self.t_samples)


@dataclass
class MultiportNetwork:
    """Impedance description of the antenna: one feed port plus Q internal ports.

    ``z`` has shape (T, Q+1, Q+1) with index 0 the external feed.
    """

    freqs: FrequencyGrid
    z: np.ndarray
    reciprocity_ok: bool = field(default=True)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=complex)
        if self.z.ndim != 3 or self.z.shape[1] != self.z.shape[2]:
            raise ConfigError("impedance array must be (T, Q+1, Q+1)")
        if self.z.shape[0] != self.freqs.t_samples:
            raise ConfigError("impedance array and frequency grid disagree on T")
        if not np.all(np.isfinite(self.z)):
            raise ConfigError("impedance entries must be finite")
        worst = 0.0
        for zt in self.z:
            scale = np.max(np.abs(zt))
            if scale > 0:
                worst = max(worst, np.max(np.abs(zt - zt.T)) / scale)
        if worst > RECIPROCITY_TOL:
            # Measured data may be slightly asymmetric; flag, don't reject.
            self.reciprocity_ok = False
            warnings.warn(
                f"network violates reciprocity by {worst:.2e} relative", stacklevel=2
            )

    @property
    def q(self) -> int:
        return self.z.shape[1] - 1

    def z_e(self, t: int) -> complex:
        return self.z[t, 0, 0]

    def z_ei(self, t: int) -> np.ndarray:
        return self.z[t, 0, 1:]

    def z_ie(self, t: int) -> np.ndarray:
        return self.z[t, 1:, 0]

    def z_i(self, t: int) -> np.ndarray:
        return self.z[t, 1:, 1:]

    def check_passivity(self) -> float:
        """Smallest eigenvalue of the symmetrized real part, over frequencies.

        Synthetic networks must keep this above -PASSIVITY_TOL * ||Re Z||.
        """
        worst = np.inf
        for zt in self.z:
            re = 0.5 * (zt.real + zt.real.T)
            worst = min(worst, float(np.linalg.eigvalsh(re)[0]))
        return worst


@dataclass
class PatternGrid:
    """Complex far-field components per port on a shared angular grid.

    ``e_theta`` and ``e_phi`` have shape (T, n_ports, n_nodes). For the
    open-circuit patterns of a pixel antenna the port axis runs over the
    feed (index 0) and the Q internal ports; synthetic state sets reuse
    the same container with the port axis running over states.
    """

    grid: QuadratureGrid
    freqs: FrequencyGrid
    e_theta: np.ndarray
    e_phi: np.ndarray

    def __post_init__(self):
        self.e_theta = np.asarray(self.e_theta, dtype=complex)
        self.e_phi = np.asarray(self.e_phi, dtype=complex)
        if self.e_theta.shape != self.e_phi.shape or self.e_theta.ndim != 3:
            raise ConfigError("pattern arrays must both be (T, ports, nodes)")
        if self.e_theta.shape[0] != self.freqs.t_samples:
            raise ConfigError("pattern arrays and frequency grid disagree on T")
        if self.e_theta.shape[2] != self.grid.n_nodes:
            raise ConfigError("pattern arrays and quadrature grid disagree on node count")
        if not (np.all(np.isfinite(self.e_theta)) and np.all(np.isfinite(self.e_phi))):
            raise ConfigError("pattern values must be finite")

    @property
    def n_ports(self) -> int:
        return self.e_theta.shape[1]


def stack_patterns(patterns: list[PatternGrid]) -> PatternGrid:
    """Concatenate single-port patterns along the port axis."""
    first = patterns[0]
    for p in patterns[1:]:
        if not p.grid.matches(first.grid):
            raise ConfigError("patterns to stack live on different grids")
    return PatternGrid(
        grid=first.grid,
        freqs=first.freqs,
        e_theta=np.concatenate([p.e_theta for p in patterns], axis=1),
        e_phi=np.concatenate([p.e_phi for p in patterns], axis=1),
    )


@dataclass(frozen=True)
class PowerAngularSpectrum:
    """Angular power density of the incident multipath: constant on support."""

    support: str
    s0: float = 1.0

    def __post_init__(self):
        if self.support not in SUPPORTS:
            raise ConfigError(f"unknown PAS support {self.support!r}")
        if self.s0 < 0:
            raise ConfigError("PAS density must be nonnegative")

    def weighted_measure(self, grid: QuadratureGrid) -> np.ndarray:
        """Quadrature weights scaled by the PAS density on the grid."""
        if grid.support != self.support:
            raise ConfigError(
                f"grid support {grid.support!r} does not match PAS support {self.support!r}"
            )
        return grid.weights * self.s0


# ---------------------------------------------------------------------------
# Native Z-matrix format
# ---------------------------------------------------------------------------

def save_network(net: MultiportNetwork, path) -> None:
    path = Path(path)
    lines = [f"# Zmatrix ports={net.q + 1} freqs={net.freqs.t_samples} unit=Hz"]
    for t, f in enumerate(net.freqs.samples_hz):
        lines.append(f"freq {_FMT % f}")
        for row in net.z[t]:
            lines.append(",".join(f"{_FMT % v.real}:{_FMT % v.imag}" for v in row))
    path.write_text("\n".join(lines) + "\n")


def load_network(path) -> MultiportNetwork:
    """Read a network from the native Z-matrix format or Touchstone v2."""
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path=path)
    text = path.read_text()
    if text.lstrip().lower().startswith("[version]"):
        return _load_touchstone_v2(path, text)
    return _load_native(path, text)


def _load_native(path, text) -> MultiportNetwork:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# Zmatrix"):
        raise ParseError("missing '# Zmatrix' header", path=path, line=1)
    header = {}
    for tok in lines[0].split()[2:]:
        key, _, val = tok.partition("=")
        header[key] = val
    try:
        n_ports = int(header["ports"])
        n_freqs = int(header["freqs"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header: {exc}", path=path, line=1) from exc
    if header.get("unit", "Hz") != "Hz":
        raise ParseError(f"unsupported unit {header.get('unit')!r}", path=path, line=1)

    freqs = []
    blocks = []
    i = 1
    for _ in range(n_freqs):
        if i >= len(lines):
            raise ParseError("truncated file: expected 'freq' line", path=path, line=len(lines))
        if not lines[i].startswith("freq "):
            raise ParseError(f"expected 'freq <value>', got {lines[i]!r}", path=path, line=i + 1)
        try:
            freqs.append(float(lines[i].split()[1]))
        except (IndexError, ValueError) as exc:
            raise ParseError("unreadable frequency", path=path, line=i + 1) from exc
        i += 1
        block = np.empty((n_ports, n_ports), dtype=complex)
        for r in range(n_ports):
            if i >= len(lines) or not lines[i].strip():
                raise ParseError("truncated file: expected matrix row", path=path,
                                 line=min(i + 1, len(lines)))
            cells = lines[i].split(",")
            if len(cells) != n_ports:
                raise ParseError(
                    f"expected {n_ports} entries, got {len(cells)}", path=path, line=i + 1
                )
            for c, cell in enumerate(cells):
                re, sep, im = cell.partition(":")
                if not sep:
                    raise ParseError(f"entry {cell!r} is not 're:im'", path=path, line=i + 1)
                try:
                    block[r, c] = complex(float(re), float(im))
                except ValueError as exc:
                    raise ParseError(f"unreadable entry {cell!r}", path=path, line=i + 1) from exc
            i += 1
        blocks.append(block)

    order = np.argsort(freqs)
    freqs = [freqs[k] for k in order]
    blocks = [blocks[k] for k in order]
    grid = _uniform_grid_from(freqs, path)
    return MultiportNetwork(freqs=grid, z=np.stack(blocks))


def _uniform_grid_from(freqs, path) -> FrequencyGrid:
    grid = FrequencyGrid(freqs[0], freqs[-1], len(freqs))
    if len(freqs) > 1:
        dev = np.max(np.abs(np.asarray(freqs) - grid.samples_hz))
        if dev > 1e-6 * max(abs(freqs[-1]), 1.0):
            raise ParseError("frequency samples are not uniformly spaced", path=path)
    return grid


_TS_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def _load_touchstone_v2(path, text) -> MultiportNetwork:
    """Minimal Touchstone v2 reader restricted to Z-parameter data."""
    unit = 1e9
    fmt = "MA"
    n_ports = None
    numbers: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low.startswith("[version]") or low.startswith("[network data]") \
                or low.startswith("[end]") or low.startswith("[reference]") \
                or low.startswith("[matrix format]") \
                or low.startswith("[two-port data order]"):
            if low.startswith("[matrix format]") and "full" not in low:
                raise ParseError("only Full matrix format is supported", path=path, line=lineno)
            continue
        if low.startswith("[number of ports]"):
            n_ports = int(line.split("]")[1])
            continue
        if low.startswith("[number of frequencies]"):
            continue
        if line.startswith("#"):
            toks = low[1:].split()
            if toks:
                if toks[0] not in _TS_UNITS:
                    raise ParseError(f"unknown frequency unit {toks[0]!r}", path=path, line=lineno)
                unit = _TS_UNITS[toks[0]]
            if len(toks) > 1 and toks[1] != "z":
                raise ParseError(
                    f"only Z-parameter Touchstone files are accepted (got {toks[1].upper()!r})",
                    path=path, line=lineno,
                )
            if len(toks) > 2:
                fmt = toks[2].upper()
            continue
        try:
            numbers.extend(float(tok) for tok in line.split())
        except ValueError as exc:
            raise ParseError(f"unreadable data line {line!r}", path=path, line=lineno) from exc
    if n_ports is None:
        raise ParseError("missing [Number of Ports]", path=path)
    per_block = 1 + 2 * n_ports * n_ports
    if not numbers or len(numbers) % per_block:
        raise ParseError("network data does not tile into frequency blocks", path=path)
    freqs = []
    blocks = []
    for k in range(0, len(numbers), per_block):
        freqs.append(numbers[k] * unit)
        vals = np.array(numbers[k + 1:k + per_block]).reshape(n_ports, n_ports, 2)
        if fmt == "RI":
            block = vals[..., 0] + 1j * vals[..., 1]
        elif fmt == "MA":
            block = vals[..., 0] * np.exp(1j * np.deg2rad(vals[..., 1]))
        elif fmt == "DB":
            block = 10.0 ** (vals[..., 0] / 20.0) * np.exp(1j * np.deg2rad(vals[..., 1]))
        else:
            raise ParseError(f"unknown data format {fmt!r}", path=path)
        blocks.append(block)
    order = np.argsort(freqs)
    freqs = [freqs[k] for k in order]
    blocks = [blocks[k] for k in order]
    grid = _uniform_grid_from(freqs, path)
    return MultiportNetwork(freqs=grid, z=np.stack(blocks))


# ---------------------------------------------------------------------------
# Pattern bundle
# ---------------------------------------------------------------------------

_PATTERN_COLUMNS = "port,theta_rad,phi_rad,re_etheta,im_etheta,re_ephi,im_ephi"


def save_pattern_bundle(patterns: PatternGrid, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    grid = patterns.grid
    manifest = {
        "ports": patterns.n_ports,
        "frequencies_hz": [float(f) for f in patterns.freqs.samples_hz],
        "support": grid.support,
        "grid": {
            "theta_rad": grid.theta.tolist(),
            "phi_rad": grid.phi.tolist(),
            "weights": grid.weights.tolist(),
        },
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for t in range(patterns.freqs.t_samples):
        lines = [_PATTERN_COLUMNS]
        for p in range(patterns.n_ports):
            for n in range(grid.n_nodes):
                et = patterns.e_theta[t, p, n]
                ep = patterns.e_phi[t, p, n]
                lines.append(
                    f"{p},{_FMT % grid.theta[n]},{_FMT % grid.phi[n]},"
                    f"{_FMT % et.real},{_FMT % et.imag},{_FMT % ep.real},{_FMT % ep.imag}"
                )
        (path / f"pattern_f{t + 1}.csv").write_text("\n".join(lines) + "\n")


def load_pattern_bundle(path, expected_ports: int | None = None) -> PatternGrid:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise ParseError("missing manifest.json", path=path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad manifest: {exc}", path=manifest_path) from exc
    try:
        n_ports = int(manifest["ports"])
        freq_list = [float(f) for f in manifest["frequencies_hz"]]
        grid = QuadratureGrid(
            support=manifest["support"],
            theta=np.array(manifest["grid"]["theta_rad"]),
            phi=np.array(manifest["grid"]["phi_rad"]),
            weights=np.array(manifest["grid"]["weights"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad manifest: {exc}", path=manifest_path) from exc
    if expected_ports is not None and n_ports != expected_ports:
        raise ParseError(
            f"manifest declares {n_ports} ports but companion network has {expected_ports}",
            path=manifest_path,
        )
    freqs = _uniform_grid_from(freq_list, manifest_path)

    e_theta = np.zeros((len(freq_list), n_ports, grid.n_nodes), dtype=complex)
    e_phi = np.zeros_like(e_theta)
    for t in range(len(freq_list)):
        table = path / f"pattern_f{t + 1}.csv"
        if not table.exists():
            raise ParseError(f"missing pattern table pattern_f{t + 1}.csv", path=path)
        seen = np.zeros(n_ports, dtype=int)
        for lineno, line in enumerate(table.read_text().splitlines(), start=1):
            if lineno == 1:
                if line.strip() != _PATTERN_COLUMNS:
                    raise ParseError("unexpected column header", path=table, line=1)
                continue
            if not line.strip():
                continue
            cells = line.split(",")
            if len(cells) != 7:
                raise ParseError("expected 7 columns", path=table, line=lineno)
            try:
                p = int(cells[0])
                theta, phi = float(cells[1]), float(cells[2])
                vals = [float(c) for c in cells[3:]]
            except ValueError as exc:
                raise ParseError(f"unreadable row: {exc}", path=table, line=lineno) from exc
            if not 0 <= p < n_ports:
                raise ParseError(f"port {p} outside 0..{n_ports - 1}", path=table, line=lineno)
            n = seen[p]
            if n >= grid.n_nodes:
                raise ParseError(f"too many rows for port {p}", path=table, line=lineno)
            if theta != grid.theta[n] or phi != grid.phi[n]:
                raise ParseError(
                    f"grid mismatch at port {p} node {n}", path=table, line=lineno
                )
            e_theta[t, p, n] = complex(vals[0], vals[1])
            e_phi[t, p, n] = complex(vals[2], vals[3])
            seen[p] += 1
        missing = np.nonzero(seen != grid.n_nodes)[0]
        if missing.size:
            raise ParseError(
                f"port {missing[0]} has {seen[missing[0]]} of {grid.n_nodes} nodes", path=table
            )
    return PatternGrid(grid=grid, freqs=freqs, e_theta=e_theta, e_phi=e_phi)


# ---------------------------------------------------------------------------
# Synthetic surrogates
# ---------------------------------------------------------------------------

def synth_dipole_translations(n_states: int, aperture_wl: float,
                              grid: QuadratureGrid,
                              freqs: FrequencyGrid | None = None) -> PatternGrid:
    """Vertically polarized dipole translated to N uniform positions.

    State n (zero-based) carries the phase factor
    exp(j * 2*pi * n * W / (N-1) * cos(phi)) relative to state 0. The
    correlation of this set against a constant PAS reduces analytically
    to the J0 target, which makes it the canonical end-to-end oracle.
    """
    if n_states < 2:
        raise ConfigError("need at least two states")
    if aperture_wl <= 0:
        raise ConfigError("aperture must be positive")
    if freqs is None:
        freqs = FrequencyGrid(1.0, 1.0, 1)
    spacing = aperture_wl / (n_states - 1)
    phase = 2.0 * math.pi * spacing * np.cos(grid.phi)
    e_theta = np.exp(1j * np.outer(np.arange(n_states), phase))
    e_theta = np.broadcast_to(e_theta, (freqs.t_samples,) + e_theta.shape).copy()
    return PatternGrid(grid=grid, freqs=freqs,
                       e_theta=e_theta, e_phi=np.zeros_like(e_theta))


@dataclass(frozen=True)
class SurrogateParams:
    """Knobs of the synthetic pixel-antenna model.

    The network is Z = D + K + jX: configured self-impedances on the
    diagonal, a distance-decayed random symmetric resistive coupling K,
    and a random symmetric reactance X; the real part is made PSD by
    eigenvalue clipping. Patterns are elementary-dipole fields phase
    shifted by port position on a planar layout.
    """

    q: int
    seed: int = 0
    feed_resistance_ohm: float = 50.0
    feed_reactance_ohm: float = 2.0
    internal_resistance_ohm: float = 5.0
    coupling_scale_ohm: float = 30.0
    coupling_decay_wl: float = 0.6
    reactance_scale_ohm: float = 25.0
    pattern_gain: float = 15.0
    aperture_wl: float = 0.67

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError("surrogate needs at least one internal port")


def _port_layout(params: SurrogateParams) -> np.ndarray:
    """(Q+1, 2) port positions in wavelengths; feed at the aperture center."""
    cols = int(math.ceil(math.sqrt(params.q)))
    rows = int(math.ceil(params.q / cols))
    xs = (np.arange(cols) - (cols - 1) / 2.0) * params.aperture_wl / max(cols - 1, 1)
    ys = (np.arange(rows) - (rows - 1) / 2.0) * params.aperture_wl / max(rows - 1, 1)
    pos = [(0.0, 0.0)]
    for k in range(params.q):
        pos.append((xs[k % cols], ys[k // cols]))
    return np.array(pos)


def synth_pixel_surrogate(params: SurrogateParams, grid: QuadratureGrid,
                          freqs: FrequencyGrid) -> tuple[MultiportNetwork, PatternGrid]:
    """Deterministic reciprocal surrogate network plus open-circuit patterns."""
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    n = params.q + 1
    pos = _port_layout(params)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    decay = np.exp(-dist / params.coupling_decay_wl)
    np.fill_diagonal(decay, 0.0)

    coupling = rng.standard_normal((n, n)) * params.coupling_scale_ohm
    coupling = 0.5 * (coupling + coupling.T) * decay
    re_z = coupling.copy()
    np.fill_diagonal(re_z, params.internal_resistance_ohm
                     * (1.0 + 0.2 * rng.standard_normal(n)))
    re_z[0, 0] = params.feed_resistance_ohm
    # Passivity: clip negative eigenvalues of the symmetric real part.
    evals, evecs = np.linalg.eigh(re_z)
    re_z = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
    re_z = 0.5 * (re_z + re_z.T)

    x0 = rng.standard_normal((n, n)) * params.reactance_scale_ohm
    x0 = 0.5 * (x0 + x0.T) * np.where(decay > 0, decay, 0.0)
    diag_x = params.reactance_scale_ohm * rng.standard_normal(n)
    diag_x[0] = params.feed_reactance_ohm
    np.fill_diagonal(x0, diag_x)

    f_center = 0.5 * (freqs.f_lower_hz + freqs.f_upper_hz)
    z = np.stack([re_z + 1j * x0 * (f / f_center) for f in freqs.samples_hz])
    net = MultiportNetwork(freqs=freqs, z=z)

    gains = np.ones(n, dtype=complex)
    gains[1:] = params.pattern_gain * (
        rng.standard_normal(params.q) + 1j * rng.standard_normal(params.q)
    ) / math.sqrt(2.0)
    phi_gains = 0.3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    phi_gains[0] = 0.0

    st, ct = np.sin(grid.theta), np.cos(grid.theta)
    direction = np.stack([st * np.cos(grid.phi), st * np.sin(grid.phi)])
    e_theta = np.empty((freqs.t_samples, n, grid.n_nodes), dtype=complex)
    e_phi = np.empty_like(e_theta)
    for t, f in enumerate(freqs.samples_hz):
        # positions are in wavelengths at band center; scale for each sample
        k_dot_r = 2.0 * math.pi * (pos @ direction) * (f / f_center)
        steering = np.exp(1j * k_dot_r)
        e_theta[t] = gains[:, None] * st[None, :] * steering
        e_phi[t] = phi_gains[:, None] * ct[None, :] * steering
    patterns = PatternGrid(grid=grid, freqs=freqs, e_theta=e_theta, e_phi=e_phi)
    return net, patterns
