"""Composite-learning high-order tuner algebra.

All adaptation signals pass through the same lag cascade, so every
quantity the update law needs -- the filtered regressor, the filtered
error combination z, the filtered window snapshots -- has algebraically
exact time derivatives available from cascade taps.  The update law

    th' = Gamma (Phi_f eps + kappa xi)

combines the instantaneous filtered prediction error eps = z - Phi_f^T th
with the memory-based generalized error xi = q_f - Q th, and its own time
derivatives follow from the product rule with binomial weights, which is
what :func:`derivative_chain` implements.
"""

from __future__ import annotations

from math import comb
from types import SimpleNamespace

import numpy as np


def compute_z(e_rate_tap: np.ndarray, w_filtered: np.ndarray) -> np.ndarray:
    """z = (d/dt) H[e] + H[Phi^T th - Lam e], from the two cascade outputs."""
    return e_rate_tap + w_filtered


def epsilon(z: np.ndarray, Phi_f: np.ndarray, theta_hat: np.ndarray) -> np.ndarray:
    """Filtered prediction error eps = z - Phi_f^T th."""
    return z - Phi_f.T @ theta_hat


def xi(q_f: np.ndarray, Q: np.ndarray, theta_hat: np.ndarray) -> np.ndarray:
    """Generalized prediction error xi = q_f - Q th (snapshot-filtered)."""
    return q_f - Q @ theta_hat


def theta_dot(Gamma_diag: np.ndarray, Phi_f: np.ndarray, eps: np.ndarray,
              kappa: float, xi_val: np.ndarray) -> np.ndarray:
    """Composite update law; written as two terms so ablations add exactly."""
    return Gamma_diag * (Phi_f @ eps) + kappa * (Gamma_diag * xi_val)


def lyapunov_Vtheta(theta_err: np.ndarray, Gamma_diag: np.ndarray) -> float:
    """Estimation-error energy th_err^T Gamma^-1 th_err (diagnostic)."""
    theta_err = np.asarray(theta_err, dtype=float)
    Gamma_diag = np.atleast_1d(np.asarray(Gamma_diag, dtype=float))
    if np.any(Gamma_diag <= 0.0):
        raise ValueError("learning rates must be positive")
    return float(np.sum(theta_err * theta_err / Gamma_diag))


def derivative_chain(Gamma_diag: np.ndarray, kappa: float, phi_taps,
                     z_taps, Q_taps, qf_taps, theta_hat: np.ndarray,
                     kmax: int, use_eps: bool = True, use_xi: bool = True,
                     resume: SimpleNamespace | None = None) -> SimpleNamespace:
    """Estimate derivatives th^(1)..th^(kmax+1) and their error chains.

    ``phi_taps[k]`` is the k-th derivative tap of the filtered regressor
    (shape (N, n)), ``z_taps[i]`` the i-th derivative of z, ``Q_taps`` and
    ``qf_taps`` the taps of the filtered snapshots.  For each k <= kmax:

        eps^(k) = z^(k) - sum_j C(k,j) (d^(k-j) Phi_f)^T th^(j)
        xi^(k)  = qf^(k) - sum_i C(k,i) Q^(k-i) th^(i)
        th^(k+1) = Gamma ( sum_i C(k,i) d^(k-i) Phi_f eps^(i) + kappa xi^(k) )

    which is the product rule applied to the update law, so each returned
    order is the exact time derivative of the one below it.  ``use_eps``
    and ``use_xi`` gate the two terms for the ablation controllers; the
    gated terms are built separately and added, so the composite update
    equals the sum of the two ablations bit for bit.

    Passing a previous result as ``resume`` continues the chain from the
    orders already computed (the caller guarantees identical inputs).
    """
    if resume is not None:
        ths = [np.asarray(theta_hat, dtype=float)] + list(resume.theta_derivs)
        eps_list = list(resume.eps)
        xi_list = list(resume.xi)
    else:
        ths = [np.asarray(theta_hat, dtype=float)]
        eps_list = []
        xi_list = []
    zero = np.zeros_like(ths[0])
    for k in range(len(eps_list), kmax + 1):
        eps_k = z_taps[k].copy()
        for j in range(k + 1):
            eps_k -= comb(k, j) * (phi_taps[k - j].T @ ths[j])
        xi_k = qf_taps[k].copy()
        for i in range(k + 1):
            xi_k -= comb(k, i) * (Q_taps[k - i] @ ths[i])
        eps_list.append(eps_k)
        xi_list.append(xi_k)

        if use_eps:
            acc = np.zeros_like(ths[0])
            for i in range(k + 1):
                acc += comb(k, i) * (phi_taps[k - i] @ eps_list[i])
            eps_term = Gamma_diag * acc
        else:
            eps_term = zero
        xi_term = kappa * (Gamma_diag * xi_k) if use_xi else zero
        ths.append(eps_term + xi_term)
    return SimpleNamespace(theta_derivs=ths[1:], eps=eps_list, xi=xi_list)
