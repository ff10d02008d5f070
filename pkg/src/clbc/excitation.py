"""Staged exciting-strength maximization and excitation predicates.

The online memory watches the windowed Gram matrix of the swapped
regressor.  Channels whose diagonal energy exceeds a small threshold are
"active"; whenever a new channel activates, a fresh excitation stage
begins and the running maximal strength resets to the floor.  Within a
stage the memory keeps the snapshot of the window integrals taken at the
time of greatest exciting strength (the smallest singular value of the
active-channel submatrix), which downstream filtering turns into the
generalized prediction error.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np


def detect_active(psi_diagonal: np.ndarray, threshold: float) -> tuple[int, ...]:
    """Indices (0-based) whose diagonal window energy exceeds ``threshold``.

    The threshold is the activity level mu scaled by the window length, so
    the test is invariant to the window size.
    """
    diag = np.asarray(psi_diagonal, dtype=float)
    if np.any(diag < -1e-12):
        raise ValueError("Gram diagonal must be non-negative")
    return tuple(int(j) for j in np.flatnonzero(diag > threshold))


def sub_matrix(Psi: np.ndarray, idx) -> np.ndarray:
    """Principal submatrix on the sorted index set ``idx`` (may be empty)."""
    idx = np.asarray(idx, dtype=int)
    return Psi[np.ix_(idx, idx)]


def min_singular(M: np.ndarray) -> float:
    """Smallest singular value of a symmetric PSD matrix (its min eigenvalue)."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        raise ValueError("empty matrix has no singular values")
    if not np.allclose(M, M.T, atol=1e-8 * (1.0 + np.abs(M).max())):
        raise ValueError("matrix is not symmetric within tolerance")
    return float(np.linalg.eigvalsh(M)[0])


@dataclass
class ExcitationMemory:
    """State of the staged maximization loop (one instance per run)."""

    n_params: int
    sigma_floor: float
    threshold: float          # mu * window length
    active: tuple[int, ...] = ()
    stage_start: float = 0.0  # T_a
    sigma_c: float = 0.0
    t_e: float = 0.0
    stage: int = 0
    Psi_store: np.ndarray = None
    q_store: np.ndarray = None

    def __post_init__(self):
        if self.sigma_floor <= 0.0:
            raise ValueError("sigma floor must be positive")
        self.sigma_c = self.sigma_floor
        if self.Psi_store is None:
            self.Psi_store = np.zeros((self.n_params, self.n_params))
        if self.q_store is None:
            self.q_store = np.zeros(self.n_params)


def staged_update(memory: ExcitationMemory, Psi: np.ndarray, q: np.ndarray,
                  t: float) -> ExcitationMemory:
    """One sampled step of the staged maximization.

    While fewer than all channels have been active, a newly activated
    channel resets the stage (strength floor, stage start, index set);
    then the strength of the current active submatrix is compared against
    the running maximum with a >= test, so ties refresh the exciting time
    to the latest attainment.  Once every channel has been seen, the full
    Gram matrix is tracked instead.  Snapshots persist across stage resets
    until a new qualifying sample replaces them, keeping the downstream
    filter input defined.
    """
    N = memory.n_params
    if len(memory.active) < N:
        current = detect_active(np.diagonal(Psi), memory.threshold)
        if any(j not in memory.active for j in current):
            memory.sigma_c = memory.sigma_floor
            memory.stage_start = t
            memory.active = current
            memory.stage += 1
        if memory.active:
            strength = min_singular(sub_matrix(Psi, memory.active))
            if strength >= memory.sigma_c:
                memory.sigma_c = strength
                memory.t_e = t
                memory.Psi_store = Psi.copy()
                memory.q_store = q.copy()
    else:
        strength = min_singular(Psi)
        if strength >= memory.sigma_c:
            memory.sigma_c = strength
            memory.t_e = t
            memory.Psi_store = Psi.copy()
            memory.q_store = q.copy()
    return memory


def window_gram_history(phi_s_history: np.ndarray, period: float,
                        window: float) -> np.ndarray:
    """Trapezoidal moving-window Gram matrices of a sampled regressor.

    ``phi_s_history`` has shape (T, N, n); the result has shape (T, N, N)
    with entry t integrating over [max(0, t - window), t].
    """
    tr = np.asarray(phi_s_history, dtype=float)
    grams = np.einsum("tin,tjn->tij", tr, tr)
    mids = 0.5 * (grams[1:] + grams[:-1]) * period
    cum = np.concatenate((np.zeros((1,) + grams.shape[1:]), np.cumsum(mids, axis=0)))
    span = int(round(window / period))
    out = np.empty_like(cum)
    for t in range(cum.shape[0]):
        out[t] = cum[t] - cum[max(0, t - span)]
    return out


def excitation_predicates(phi_s_history: np.ndarray, period: float,
                          sigma: float, window: float) -> dict[str, bool]:
    """Offline check of the three excitation notions on a recorded trace.

    Persistent excitation holds when every full window is uniformly
    exciting; interval excitation when some single window is; partial
    interval excitation when some window excites a strict subset of the
    channels.  Test-side diagnostics only.
    """
    tr = np.asarray(phi_s_history, dtype=float)
    if tr.ndim != 3:
        raise ValueError("expected a (T, N, n) history")
    T, N, _ = tr.shape
    if N > 12:
        raise ValueError("subset enumeration is only sensible for small N")
    grams = window_gram_history(tr, period, window)
    span = int(round(window / period))

    full = np.array([np.linalg.eigvalsh(G)[0] for G in grams])
    pe = bool(T > span and np.all(full[span:] >= sigma))
    ie = bool(np.any(full >= sigma))

    partial = False
    subsets = [c for r in range(1, N) for c in combinations(range(N), r)]
    for G in grams:
        for idx in subsets:
            if np.linalg.eigvalsh(sub_matrix(G, idx))[0] >= sigma:
                partial = True
                break
        if partial:
            break
    return {"pe": pe, "ie": ie, "partial_ie": partial}
