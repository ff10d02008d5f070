"""Swapping filters: dynamic tracking errors to a static regression.

The filters

    zeta'   = Lam zeta + Phi^T th,        zeta(0)  = -e(0)
    Phi_s'^T = Lam Phi_s^T + Phi^T,       Phi_s(0) = 0

turn the closed-loop error dynamics into the static model
p := e + zeta = Phi_s^T theta, whose windowed Gram integrals feed the
excitation machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SwappingState:
    """Filter states owned by a single run."""

    zeta: np.ndarray
    Phi_s: np.ndarray  # (N, n)
    closed_loop: np.ndarray

    @classmethod
    def initial(cls, e0: np.ndarray, n_params: int, closed_loop: np.ndarray) -> "SwappingState":
        e0 = np.asarray(e0, dtype=float)
        return cls(zeta=-e0.copy(), Phi_s=np.zeros((n_params, e0.size)),
                   closed_loop=closed_loop)


def swapping_derivative(closed_loop: np.ndarray, zeta: np.ndarray,
                        Phi_s: np.ndarray, Phi: np.ndarray,
                        theta_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """State derivatives of the two swapping filters."""
    zeta_dot = closed_loop @ zeta + Phi.T @ theta_hat
    Phi_s_dot = Phi_s @ closed_loop.T + Phi
    return zeta_dot, Phi_s_dot


def output_p(e: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Swapping output p = e + zeta; equals Phi_s^T theta on exact runs."""
    return e + zeta


def excitation_integrands(Phi_s: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Window integrands: the Gram matrix Phi_s Phi_s^T and Phi_s p."""
    return Phi_s @ Phi_s.T, Phi_s @ p
