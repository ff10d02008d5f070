"""Built-in property checks behind the ``clbc check`` subcommand.

Short-horizon versions of the core correctness properties: the frozen
closed loop against its matrix-exponential solution, the swapping and
prediction-error identities, estimation-energy monotonicity and the
brute-force replay of the staged excitation maximization.  Meant to run
in well under a minute; the full acceptance suite lives in the tests.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from scipy.linalg import expm

from .backstepping import closed_loop_matrix
from .excitation import ExcitationMemory, staged_update
from .runner import Trace, run_scenario
from .scenarios import builtin_case1


def _short_clean_case1(duration: float = 10.0, **overrides):
    spec = builtin_case1()
    return replace(spec, duration=duration, noise_std=0.0, **overrides)


def check_oracle_closed_loop(duration: float = 10.0) -> tuple[bool, str]:
    """Frozen exact estimate: recorded errors follow e' = Lam e."""
    spec = _short_clean_case1(duration, theta_hat0=(0.1, 0.5, 1.5))
    trace, _ = run_scenario(spec)
    lam = closed_loop_matrix(spec.k_c)
    e_cols = np.column_stack([trace.column(f"e{i}") for i in range(1, 4)])
    e0 = e_cols[0]
    worst = max(float(np.max(np.abs(e_cols[i] - expm(lam * t) @ e0)))
                for i, t in enumerate(trace.t))
    return worst <= 1e-5, f"max closed-loop deviation {worst:.2e} (tol 1e-5)"


def check_identities(duration: float = 10.0) -> tuple[bool, str]:
    """Swapping and prediction-error identities on a clean run."""
    spec = _short_clean_case1(duration)
    trace, _ = run_scenario(spec, collect_diagnostics=True)
    th = np.asarray(spec.theta)
    d = trace.diagnostics
    e_cols = np.column_stack([trace.column(f"e{i}") for i in range(1, 4)])
    th_cols = np.column_stack([trace.column(f"theta_hat_{j}") for j in range(1, 4)])

    gap_p = max(float(np.linalg.norm(d["p"][i] - d["Phi_s"][i].T @ th))
                for i in range(len(trace.t)))
    gap_eps = max(float(np.linalg.norm(
        d["eps"][i] - d["Phi_f"][i].T @ (th - th_cols[i])))
        for i in range(len(trace.t)))
    gap_xi = max(float(np.linalg.norm(
        d["xi"][i] - d["Q"][i] @ (th - th_cols[i])))
        for i in range(len(trace.t)))
    ok = gap_p <= 1e-4 and gap_eps <= 1e-4 and gap_xi <= 1e-4
    return ok, (f"max |p - Phi_s^T theta| {gap_p:.2e}, "
                f"|eps - Phi_f^T err| {gap_eps:.2e}, "
                f"|xi - Q err| {gap_xi:.2e} (tol 1e-4)")


def check_vtheta_monotone(duration: float = 10.0) -> tuple[bool, str]:
    spec = _short_clean_case1(duration)
    trace, _ = run_scenario(spec)
    v = trace.column("V_theta")
    worst = float(np.max(np.diff(v)))
    return worst <= 1e-8, f"max V_theta increment {worst:.2e} (tol 1e-8)"


def replay_staged_maximization(trace: Trace, sigma: float, threshold: float):
    """Independent offline replay of the staged update on recorded data."""
    d = trace.diagnostics
    N = trace.n_params
    mem = ExcitationMemory(n_params=N, sigma_floor=sigma, threshold=threshold)
    sigma_c, t_e, stages = [], [], []
    for i, t in enumerate(trace.t):
        staged_update(mem, d["Psi"][i], d["q"][i], float(t))
        sigma_c.append(mem.sigma_c)
        t_e.append(mem.t_e)
        stages.append(mem.stage)
    return np.array(sigma_c), np.array(t_e), np.array(stages)


def check_staged_bruteforce(duration: float = 10.0) -> tuple[bool, str]:
    """Recorded sigma_c/t_e match a from-scratch replay exactly."""
    spec = _short_clean_case1(duration)
    trace, _ = run_scenario(spec, collect_diagnostics=True)
    sigma_c, t_e, _ = replay_staged_maximization(
        trace, spec.sigma, spec.mu * spec.tau_d)
    ok = (np.array_equal(sigma_c, trace.column("sigma_c"))
          and np.array_equal(t_e, trace.column("t_e")))
    return ok, "exact replay " + ("matched" if ok else "DIVERGED")


CHECKS = [
    ("oracle closed loop", check_oracle_closed_loop),
    ("swapping / prediction-error identities", check_identities),
    ("estimation energy monotone", check_vtheta_monotone),
    ("staged maximization brute force", check_staged_bruteforce),
]


def run_checks(duration: float = 10.0) -> int:
    failures = 0
    for name, fn in CHECKS:
        ok, detail = fn(duration)
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failures += 0 if ok else 1
    return failures
