"""Pattern-correlation engine.

The expensive part, the open-circuit kernel K[p,q] = int e_p* . e_q S dOmega,
is computed once per (patterns, PAS, grid) and cached by content hash;
every state covariance after that is a cheap congruence C = I^H K I
followed by Hadamard normalization against C's own diagonal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateStateError, GridMismatchError
from .em_model import PatternGrid, PowerAngularSpectrum
from .numerics import bessel_j0

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-9


@dataclass
class PatternKernel:
    """Hermitian PSD correlation kernel of the open-circuit patterns, per frequency."""

    k: np.ndarray  # (T, ports, ports)
    pas: PowerAngularSpectrum
    n_ports: int

    def __post_init__(self):
        for kt in self.k:
            scale = max(np.max(np.abs(kt)), 1e-300)
            if np.max(np.abs(kt - kt.conj().T)) > HERMITICITY_TOL * scale:
                raise ConfigError("kernel is not Hermitian")
            if np.linalg.eigvalsh(kt)[0] < -PSD_TOL * scale:
                raise ConfigError("kernel is not positive semidefinite")


@dataclass
class CovarianceMatrix:
    """Normalized magnitude covariance of M states at one frequency sample."""

    rho: np.ndarray
    frequency_hz: float

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        m = self.rho.shape[0]
        if self.rho.shape != (m, m):
            raise ConfigError("covariance matrix must be square")
        if np.max(np.abs(self.rho - self.rho.T)) > 1e-9:
            raise ConfigError("covariance matrix must be symmetric")
        if np.max(np.abs(np.diag(self.rho) - 1.0)) > 1e-9:
            raise ConfigError("covariance diagonal must be unity")
        if np.max(self.rho) > 1.0 + 1e-9:
            raise ConfigError("covariance entries must not exceed 1")

    @property
    def m(self) -> int:
        return self.rho.shape[0]


@dataclass(frozen=True)
class TargetCovariance:
    """Clarke-model J0 covariance for N ports over an aperture of W wavelengths."""

    n: int
    w: float
    rho: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.rho


def target_covariance(n: int, w: float) -> TargetCovariance:
    if n < 2:
        raise ConfigError("need at least two ports")
    if w <= 0:
        raise ConfigError("aperture must be positive")
    idx = np.arange(n)
    rho = bessel_j0(2.0 * np.pi * np.abs(idx[:, None] - idx[None, :]) * w / (n - 1))
    return TargetCovariance(n=n, w=w, rho=rho)


_kernel_cache: dict[str, PatternKernel] = {}


def _kernel_digest(patterns: PatternGrid, pas: PowerAngularSpectrum) -> str:
    h = hashlib.sha256()
    h.update(pas.support.encode())
    h.update(np.float64(pas.s0).tobytes())
    for arr in (patterns.grid.theta, patterns.grid.phi, patterns.grid.weights,
                patterns.e_theta, patterns.e_phi):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def compute_kernel(patterns: PatternGrid, pas: PowerAngularSpectrum) -> PatternKernel:
    """Open-circuit pattern correlation kernel, cached by content hash."""
    digest = _kernel_digest(patterns, pas)
    cached = _kernel_cache.get(digest)
    if cached is not None:
        return cached
    w = pas.weighted_measure(patterns.grid)
    t_samples, n_ports, _ = patterns.e_theta.shape
    k = np.empty((t_samples, n_ports, n_ports), dtype=complex)
    for t in range(t_samples):
        et = patterns.e_theta[t]
        ep = patterns.e_phi[t]
        kt = (et.conj() * w) @ et.T + (ep.conj() * w) @ ep.T
        k[t] = 0.5 * (kt + kt.conj().T)
    kernel = PatternKernel(k=k, pas=pas, n_ports=n_ports)
    _kernel_cache[digest] = kernel
    return kernel


def _normalize(c: np.ndarray, frequency_hz: float) -> CovarianceMatrix:
    energy = np.real(np.diag(c))
    dead = np.nonzero(energy <= 0)[0]
    if dead.size:
        raise DegenerateStateError(int(dead[0]))
    g = np.sqrt(np.outer(energy, energy))
    rho = np.abs(c / g)
    rho = 0.5 * (rho + rho.T)
    np.fill_diagonal(rho, 1.0)
    return CovarianceMatrix(rho=np.minimum(rho, 1.0), frequency_hz=frequency_hz)


def covariance_from_currents(kernel: PatternKernel, currents: np.ndarray,
                             frequencies_hz) -> list[CovarianceMatrix]:
    """State covariance from current vectors: rho0 = |C / G| with C = I^H K I.

    ``currents`` is (T, ports, M); a 2-D (ports, M) array is accepted for T = 1.
    """
    currents = np.asarray(currents, dtype=complex)
    if currents.ndim == 2:
        currents = currents[None, :, :]
    if currents.shape[0] != kernel.k.shape[0]:
        raise ConfigError("current matrix and kernel disagree on T")
    if currents.shape[1] != kernel.n_ports:
        raise ConfigError("current matrix and kernel disagree on port count")
    freqs = np.atleast_1d(np.asarray(frequencies_hz, dtype=float))
    out = []
    for t in range(currents.shape[0]):
        i_t = currents[t]
        c = i_t.conj().T @ kernel.k[t] @ i_t
        out.append(_normalize(c, float(freqs[t])))
    return out


def covariance_direct(state_patterns: PatternGrid,
                      pas: PowerAngularSpectrum) -> list[CovarianceMatrix]:
    """Reference covariance by direct quadrature of the pattern overlap integral.

    ``state_patterns`` carries one port per state. This path never touches
    the kernel factorization and serves as its independent oracle.
    """
    w = pas.weighted_measure(state_patterns.grid)
    out = []
    for t, f in enumerate(state_patterns.freqs.samples_hz):
        et = state_patterns.e_theta[t]
        ep = state_patterns.e_phi[t]
        m = et.shape[0]
        c = np.empty((m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                c[i, j] = np.sum(w * (np.conj(et[i]) * et[j] + np.conj(ep[i]) * ep[j]))
        out.append(_normalize(c, float(f)))
    return out


def average_error(rhos: list[CovarianceMatrix], target: TargetCovariance,
                  ordering) -> float:
    """Mean absolute covariance deviation over N^2 entries and T frequencies.

    ``ordering`` maps FAS port n (1-based position) to a 1-based state
    index into each rho.
    """
    idx = np.asarray(ordering, dtype=int) - 1
    if idx.shape != (target.n,):
        raise ConfigError(f"ordering must select exactly {target.n} states")
    total = 0.0
    for cov in rhos:
        if np.any(idx < 0) or np.any(idx >= cov.m):
            raise ConfigError("ordering indexes outside the available states")
        sel = cov.rho[np.ix_(idx, idx)]
        total += float(np.sum(np.abs(sel - np.abs(target.rho))))
    return total / (len(rhos) * target.n ** 2)
