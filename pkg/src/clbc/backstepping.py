"""Recursive modular backstepping with exact partial derivatives.

Virtual controls are built stage by stage:

    v_1 = -k_c1 e_1 - psi_1^T th
    v_i = -k_ci e_i - e_{i-1} - psi_i^T th
          + sum_k ( dv_{i-1}/dx_k x_{k+1} + dv_{i-1}/dth^(k-1) th^(k)
                    + dv_{i-1}/dy_r^(k-1) y_r^(k) )      [- k_di |psi_i|^2 e_i]
    u   = (v_n + y_r^(n)) / beta(x)

with e_1 = x_1 - y_r, e_i = x_i - v_{i-1} - y_r^(i-1) and
psi_i = phi_i - sum_k dv_{i-1}/dx_k phi_k.  The partial derivatives are
propagated through the recursion by truncated multivariate jets: stage i
of an n-stage design needs partials of earlier stages up to order n - i,
so evaluating stages 1..n-1 in a jet space of truncation order n - 1
makes every value above exact.  The final stage only consumes first-order
partials of v_{n-1} and is evaluated in plain floats.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .jets import Jet, as_jet, jet_dot, jet_space
from .numerics import SimulationDiverged
from .plant import ControllerFault, PlantModel


@dataclass(frozen=True)
class ControlGains:
    """Backstepping gains: k_c must be positive, damping k_d non-negative."""

    k_c: tuple[float, ...]
    k_d: tuple[float, ...] = ()

    def __post_init__(self):
        k_c = tuple(float(k) for k in self.k_c)
        k_d = tuple(float(k) for k in self.k_d) if self.k_d else (0.0,) * len(k_c)
        object.__setattr__(self, "k_c", k_c)
        object.__setattr__(self, "k_d", k_d)
        if len(k_d) != len(k_c):
            raise ValueError("k_d length must match k_c")
        if any(k <= 0.0 for k in k_c):
            raise ValueError("control gains must be positive")
        if any(k < 0.0 for k in k_d):
            raise ValueError("damping gains must be non-negative")
        if any(k <= 0.25 for k in k_c):
            warnings.warn("control gains <= 1/4 fall below the stability margin "
                          "used in the convergence analysis", stacklevel=2)

    @property
    def order(self) -> int:
        return len(self.k_c)


def closed_loop_matrix(k_c) -> np.ndarray:
    """Tridiagonal closed-loop error matrix: -k_ci diagonal, +1 above, -1 below."""
    k_c = np.atleast_1d(np.asarray(k_c, dtype=float))
    n = k_c.size
    lam = np.diag(-k_c)
    if n > 1:
        idx = np.arange(n - 1)
        lam[idx, idx + 1] = 1.0
        lam[idx + 1, idx] = -1.0
    return lam


@dataclass
class BackstepOutput:
    """One evaluation of the full recursion at a measured state."""

    v: np.ndarray        # virtual controls v_1..v_n
    e: np.ndarray        # tracking errors e_1..e_n
    regressor: np.ndarray  # Phi = [psi_1 .. psi_n], shape (N, n)
    u: float
    closed_loop: np.ndarray  # the tridiagonal matrix above


class _VarLayout:
    """Index bookkeeping for the jet variables of an s-stage recursion.

    Variables, in order: x_1..x_s, then th^(0)..th^(s-1) (N entries each),
    then y_r^(0)..y_r^(s-1).
    """

    def __init__(self, stages: int, n_params: int):
        self.stages = stages
        self.n_params = n_params
        self.total = stages * (n_params + 2)

    def x(self, i: int) -> int:
        return i

    def th(self, k: int, j: int) -> int:
        return self.stages + k * self.n_params + j

    def yr(self, k: int) -> int:
        return self.stages + self.stages * self.n_params + k


def _stage_recursion(model: PlantModel, gains: ControlGains, x_vals, Theta,
                     yr_vals, stages: int, order: int) -> SimpleNamespace:
    """Evaluate stages 1..stages as jets of the given truncation order."""
    N = model.n_params
    lay = _VarLayout(stages, N)
    sp = jet_space(lay.total, order)

    jx = [sp.variable(lay.x(i), float(x_vals[i])) for i in range(stages)]
    jth = [[sp.variable(lay.th(k, j), float(Theta[j, k])) for j in range(N)]
           for k in range(stages)]
    jyr = [sp.variable(lay.yr(k), float(yr_vals[k])) for k in range(stages)]
    phis = [[as_jet(sp, p) for p in model.phi(i + 1, jx)] for i in range(stages)]

    es: list[Jet] = []
    vs: list[Jet] = []
    psis: list[list[Jet]] = []
    for i in range(stages):
        if i == 0:
            e = jx[0] - jyr[0]
            psi = list(phis[0])
            v = (-gains.k_c[0]) * e - jet_dot(psi, jth[0])
        else:
            vp = vs[-1]
            e = jx[i] - vp - jyr[i]
            dvdx = [vp.partial(lay.x(k)) for k in range(i)]
            psi = [phis[i][j] - _chain_sum(dvdx, [phis[k][j] for k in range(i)])
                   for j in range(N)]
            v = (-gains.k_c[i]) * e - es[-1] - jet_dot(psi, jth[0])
            for k in range(i):
                v = v + dvdx[k] * jx[k + 1]
                for j in range(N):
                    v = v + vp.partial(lay.th(k, j)) * jth[k + 1][j]
                v = v + vp.partial(lay.yr(k)) * jyr[k + 1]
        if gains.k_d[i] != 0.0:
            v = v - gains.k_d[i] * jet_dot(psi, psi) * e
        if not np.isfinite(v.value):
            raise SimulationDiverged(f"non-finite virtual control at stage {i + 1}")
        es.append(e)
        vs.append(v)
        psis.append(psi)
    return SimpleNamespace(layout=lay, space=sp, jx=jx, jth=jth, jyr=jyr,
                           es=es, vs=vs, psis=psis)


def _chain_sum(coeffs, terms):
    acc = coeffs[0] * terms[0]
    for c, t in zip(coeffs[1:], terms[1:]):
        acc = acc + c * t
    return acc


def _finalize(model: PlantModel, gains: ControlGains, stage_jets, x, Theta,
              yr_taps, beta: float) -> SimpleNamespace:
    """Plain-float final stage: e_n, psi_n, v_n and the control input."""
    n = model.order
    N = model.n_params
    lay = stage_jets.layout
    vp = stage_jets.vs[-1]
    g = vp.c  # first partials of v_{n-1} live at indices 1..total

    e_prev = stage_jets.es[-1].value
    e_n = float(x[n - 1]) - vp.value - float(yr_taps[n - 1])

    phi_f = [model.phi_values(i + 1, x) for i in range(n)]
    dvdx = np.array([g[1 + lay.x(k)] for k in range(n - 1)])
    psi_n = phi_f[n - 1] - sum(dvdx[k] * phi_f[k] for k in range(n - 1))

    v_n = -gains.k_c[n - 1] * e_n - e_prev - float(psi_n @ Theta[:, 0])
    for k in range(n - 1):
        v_n += dvdx[k] * float(x[k + 1])
        dv_dth = np.array([g[1 + lay.th(k, j)] for j in range(N)])
        v_n += float(dv_dth @ Theta[:, k + 1])
        v_n += g[1 + lay.yr(k)] * float(yr_taps[k + 1])
    if gains.k_d[n - 1] != 0.0:
        v_n -= gains.k_d[n - 1] * float(psi_n @ psi_n) * e_n
    if not np.isfinite(v_n):
        raise SimulationDiverged(f"non-finite virtual control at stage {n}")

    u = (v_n + float(yr_taps[n])) / beta
    return SimpleNamespace(e_n=e_n, psi_n=psi_n, v_n=v_n, u=u, phi_values=phi_f)


def backstep(model: PlantModel, gains: ControlGains, x_measured, Theta,
             yr_taps) -> BackstepOutput:
    """Run the full recursion at one measured state.

    ``Theta`` is the (N, n) estimate bundle whose column k is the k-th time
    derivative of the parameter estimate; ``yr_taps`` holds the reference
    and its derivatives up to order n.
    """
    n = model.order
    N = model.n_params
    if gains.order != n:
        raise ValueError("gain count must match the plant order")
    x = np.asarray(x_measured, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    yr_taps = np.asarray(yr_taps, dtype=float)
    if x.shape != (n,) or Theta.shape != (N, n) or yr_taps.shape != (n + 1,):
        raise ValueError("backstep input shape mismatch")
    beta = model.beta_value(x)

    if n == 1:
        e1 = float(x[0] - yr_taps[0])
        psi1 = model.phi_values(1, x)
        v1 = -gains.k_c[0] * e1 - float(psi1 @ Theta[:, 0])
        if gains.k_d[0] != 0.0:
            v1 -= gains.k_d[0] * float(psi1 @ psi1) * e1
        u = (v1 + float(yr_taps[1])) / beta
        return BackstepOutput(v=np.array([v1]), e=np.array([e1]),
                              regressor=psi1.reshape(N, 1), u=u,
                              closed_loop=closed_loop_matrix(gains.k_c))

    S = _stage_recursion(model, gains, x[:n - 1], Theta[:, :n - 1],
                         yr_taps[:n - 1], stages=n - 1, order=n - 1)
    fin = _finalize(model, gains, S, x, Theta, yr_taps, beta)

    e = np.array([jet.value for jet in S.es] + [fin.e_n])
    v = np.array([jet.value for jet in S.vs] + [fin.v_n])
    psi_cols = [np.array([p.value for p in psi]) for psi in S.psis] + [fin.psi_n]
    Phi = np.column_stack(psi_cols)
    return BackstepOutput(v=v, e=e, regressor=Phi, u=fin.u,
                          closed_loop=closed_loop_matrix(gains.k_c))


def backstep_jets(model: PlantModel, gains: ControlGains, x, Theta, yr_vals,
                  order: int | None = None) -> SimpleNamespace:
    """Jet evaluation of all n stages, for derivative verification.

    Returns the stage jets together with the variable layout so callers can
    compare any first partial of v_i or psi_i against finite differences.
    Truncation order n makes first partials of every stage exact.
    """
    n = model.order
    x = np.asarray(x, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    yr_vals = np.asarray(yr_vals, dtype=float)
    if order is None:
        order = n
    return _stage_recursion(model, gains, x, Theta, yr_vals, stages=n, order=order)


__all__ = ["ControlGains", "BackstepOutput", "ControllerFault",
           "closed_loop_matrix", "backstep", "backstep_jets"]
