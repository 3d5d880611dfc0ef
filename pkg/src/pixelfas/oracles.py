"""Built-in verification suites.

Each suite checks one load-bearing identity of the toolchain against an
independent route: analytic reduction (dipole translations), a dense
augmented solve (multiport reduction), direct quadrature (kernel
factorization), exhaustive enumeration (chromosome decoding and GA).
The CLI exposes them via ``pixelfas oracle``; the acceptance tests reuse
the same implementations.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .em_model import (FrequencyGrid, MultiportNetwork, PowerAngularSpectrum,
                       SurrogateParams, synth_dipole_translations,
                       synth_pixel_surrogate)
from .impm import LoadMap, input_impedance, port_currents
from .numerics import bessel_j0, build_quadrature, solve_linear
from .pcdm import (compute_kernel, covariance_direct, covariance_from_currents,
                   target_covariance)
from .search import GAParams, brute_force_order, decode, ga_order, make_evaluator


def dense_solve_reference(net: MultiportNetwork, loads: LoadMap, t: int):
    """Feed impedance and internal currents from one dense augmented solve.

    Unknowns are the Q internal currents under a unit feed current. Loaded
    ports contribute the row (Z_I + diag(Z_L)) i = -Z_IE; open ports
    contribute the explicit constraint i_q = 0. No block elimination is
    performed, so this is an independent route to the same quantities.
    """
    q = net.q
    a = np.zeros((q, q), dtype=complex)
    b = np.zeros(q, dtype=complex)
    z_i = net.z_i(t)
    for row in range(q):
        if loads.open_mask[row]:
            a[row, row] = 1.0
        else:
            a[row] = z_i[row]
            a[row, row] += loads.z_load[row, t]
            b[row] = -net.z_ie(t)[row]
    # zero out coupling into constrained columns for loaded rows
    for col in range(q):
        if loads.open_mask[col]:
            keep_diag = a[col, col]
            a[:, col] = 0.0
            a[col, col] = keep_diag
    i_internal = solve_linear(a, b)
    z_in = net.z_e(t) + net.z_ei(t) @ i_internal
    return z_in, i_internal


def _random_network(rng, q: int, t_samples: int = 1) -> MultiportNetwork:
    freqs = FrequencyGrid(1e9, 1e9 if t_samples == 1 else 1.2e9, t_samples)
    z = np.empty((t_samples, q + 1, q + 1), dtype=complex)
    for t in range(t_samples):
        m = rng.standard_normal((q + 1, q + 1)) + 1j * rng.standard_normal((q + 1, q + 1))
        m = 0.5 * (m + m.T)
        # diagonal boost keeps the reduced systems well conditioned
        m += np.diag(10.0 + rng.random(q + 1) * 20.0)
        z[t] = m
    return MultiportNetwork(freqs=freqs, z=z)


def _random_loads(rng, q: int, t_samples: int = 1) -> LoadMap:
    kinds = rng.integers(0, 3, size=q)  # 0 open, 1 short, 2 finite
    open_mask = kinds == 0
    z_load = np.zeros((q, t_samples), dtype=complex)
    finite = kinds == 2
    z_load[finite] = (rng.random((int(finite.sum()), t_samples)) * 40.0
                      + 1j * rng.standard_normal((int(finite.sum()), t_samples)) * 30.0)
    return LoadMap(open_mask=open_mask, z_load=z_load)


def suite_dipole(n: int = 12, w: float = 0.5, n_phi: int = 360) -> dict:
    """Translated-dipole covariance equals the J0 target on the horizon ring."""
    start = time.perf_counter()
    grid = build_quadrature("horizon-ring", n_phi=n_phi)
    pas = PowerAngularSpectrum("horizon-ring")
    patterns = synth_dipole_translations(n, w, grid)
    rho = covariance_direct(patterns, pas)[0].rho
    target = np.abs(target_covariance(n, w).rho)
    err = float(np.max(np.abs(rho - target)))
    return {"name": "dipole", "passed": err <= 1e-3, "max_abs_error": err,
            "tolerance": 1e-3, "seconds": time.perf_counter() - start}


def suite_schur(trials: int = 200, max_q: int = 30, seed: int = 2024) -> dict:
    """Block reduction agrees with the dense augmented solve."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_z = worst_i = 0.0
    for _ in range(trials):
        q = int(rng.integers(2, max_q + 1))
        net = _random_network(rng, q)
        loads = _random_loads(rng, q)
        z_in = input_impedance(net, loads)
        sol = port_currents(net, loads, z_in)
        z_ref, i_ref = dense_solve_reference(net, loads, 0)
        worst_z = max(worst_z, abs(z_in[0] - z_ref) / abs(z_ref))
        i_ref_scaled = i_ref / np.sqrt(z_ref)
        scale = max(np.linalg.norm(i_ref_scaled), 1e-300)
        worst_i = max(worst_i, np.linalg.norm(sol.currents[0, 1:] - i_ref_scaled) / scale)
    passed = worst_z <= 1e-9 and worst_i <= 1e-9
    return {"name": "schur", "passed": bool(passed), "max_zin_error": float(worst_z),
            "max_current_error": float(worst_i), "tolerance": 1e-9,
            "seconds": time.perf_counter() - start}


def suite_pcdm_direct(q: int = 20, trials: int = 30, seed: int = 7,
                      perturb_kernel: float = 0.0) -> dict:
    """Kernel congruence equals direct pattern quadrature for random currents.

    ``perturb_kernel`` injects a fault for self-test of the suite itself.
    """
    start = time.perf_counter()
    grid = build_quadrature("upper-hemisphere", n_theta=24, n_phi=48)
    pas = PowerAngularSpectrum("upper-hemisphere")
    freqs = FrequencyGrid(2.5e9, 2.5e9, 1)
    _, patterns = synth_pixel_surrogate(SurrogateParams(q=q, seed=seed), grid, freqs)
    kernel = compute_kernel(patterns, pas)
    if perturb_kernel:
        kernel = type(kernel)(k=kernel.k * (1.0 + perturb_kernel),
                              pas=kernel.pas, n_ports=kernel.n_ports)
        kernel.k[0, 0, 1] += perturb_kernel
        kernel.k[0, 1, 0] += perturb_kernel
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(2, 9))
        currents = (rng.standard_normal((1, q + 1, m))
                    + 1j * rng.standard_normal((1, q + 1, m)))
        rho_k = covariance_from_currents(kernel, currents, [2.5e9])[0].rho
        state_et = np.einsum("qm,qn->mn", currents[0], patterns.e_theta[0])
        state_ep = np.einsum("qm,qn->mn", currents[0], patterns.e_phi[0])
        states = type(patterns)(grid=grid, freqs=freqs,
                                e_theta=state_et[None], e_phi=state_ep[None])
        rho_d = covariance_direct(states, pas)[0].rho
        worst = max(worst, float(np.max(np.abs(rho_k - rho_d))))
    return {"name": "pcdm_direct", "passed": worst <= 1e-10, "max_abs_error": worst,
            "tolerance": 1e-10, "seconds": time.perf_counter() - start}


def suite_decode(max_m: int = 6, max_n: int = 4) -> dict:
    """Exhaustive decode validity plus surjectivity for M=4, N=3."""
    start = time.perf_counter()
    import itertools
    valid = True
    for m in range(1, max_m + 1):
        for n in range(1, min(m, max_n) + 1):
            for chrom in itertools.product(range(1, m + 1), repeat=n):
                d = decode(chrom, m, n)
                if len(set(d)) != n or any(not 1 <= v <= m for v in d):
                    valid = False
    image = {decode(c, 4, 3) for c in itertools.product(range(1, 5), repeat=3)}
    surjective = len(image) == math.perm(4, 3)
    return {"name": "decode", "passed": valid and surjective,
            "valid": valid, "image_size": len(image),
            "expected_image_size": math.perm(4, 3),
            "seconds": time.perf_counter() - start}


def _random_instance(seed: int, m: int = 8):
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((6, m)) + 1j * rng.standard_normal((6, m))
    c = vecs.conj().T @ vecs
    energy = np.real(np.diag(c))
    rho = np.abs(c / np.sqrt(np.outer(energy, energy)))
    rho = 0.5 * (rho + rho.T)
    np.fill_diagonal(rho, 1.0)
    from .pcdm import CovarianceMatrix
    return [CovarianceMatrix(rho=np.minimum(rho, 1.0), frequency_hz=1e9)]


def suite_ga_brute(instances: int = 20, m: int = 8, n: int = 4,
                   required_hits: int = 18, seed: int = 11) -> dict:
    """GA reaches the exhaustive optimum on small synthetic instances."""
    start = time.perf_counter()
    target = target_covariance(n, 0.5)
    hits = 0
    for k in range(instances):
        rhos = _random_instance(seed + k, m)
        evaluator = make_evaluator(rhos, target)
        _, brute = brute_force_order(m, n, evaluator)
        params = GAParams(seed=seed * 1000 + k)
        _, got, _ = ga_order(m, n, evaluator, params)
        if abs(got - brute) <= 1e-12:
            hits += 1
    return {"name": "ga_brute", "passed": hits >= required_hits, "hits": hits,
            "instances": instances, "required": required_hits,
            "seconds": time.perf_counter() - start}


FAST_SUITES = ("dipole", "decode")
ALL_SUITES = ("dipole", "schur", "pcdm_direct", "decode", "ga_brute")

_RUNNERS = {
    "dipole": suite_dipole,
    "schur": suite_schur,
    "pcdm_direct": suite_pcdm_direct,
    "decode": suite_decode,
    "ga_brute": suite_ga_brute,
}


def run_suites(level: str = "full") -> list[dict]:
    names = FAST_SUITES if level == "fast" else ALL_SUITES
    return [_RUNNERS[name]() for name in names]
