"""Scenario engine: joint fixed-step integration plus sampled machinery.

One run integrates plant, swapping filters, tuner cascades, the parameter
estimate and (if present) the reference chain as a single flat state with
RK4 at step dt.  On the coarser T_s grid it resamples measurement noise,
pushes the window integrals, runs the staged excitation update, and logs
one trace row.  Estimate derivatives are algebraic outputs of the tuner
cascades, so the control input is an explicit function of the joint state
and the held discrete values -- there is no hidden extra dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .backstepping import ControlGains, _finalize, _stage_recursion, closed_loop_matrix
from .baselines import make_controller
from .excitation import ExcitationMemory, staged_update
from .numerics import (SimulationDiverged, SlidingWindow, cascade_derivative,
                       cascade_taps, gaussian_noise, rk4_step)
from .plant import disturbance_sample, make_plant, plant_derivative
from .scenarios import ScenarioSpec
from .swapping import excitation_integrands, output_p
from .tuner import derivative_chain, lyapunov_Vtheta


@dataclass
class Trace:
    """Per-sample log of a run, one row per T_s tick."""

    columns: list[str]
    data: np.ndarray
    n: int
    n_params: int
    meta: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict, repr=False)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for key in sorted(self.meta):
                fh.write(f"# {key} = {self.meta[key]}\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Trace":
        meta: dict = {}
        with open(path, "r", encoding="utf-8") as fh:
            line = fh.readline()
            while line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                line = fh.readline()
            columns = line.strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        n = sum(1 for c in columns if c.startswith("x"))
        n_params = sum(1 for c in columns if c.startswith("theta_hat_"))
        return cls(columns=columns, data=data, n=n, n_params=n_params, meta=meta)


@dataclass(frozen=True)
class MetricsRecord:
    """Summary of one trace; recomputable from the trace alone."""

    peak_e1: float
    tail_rms_e1: float
    tail_window: float
    theta_err_checkpoints: tuple[tuple[float, float], ...]
    theta_err_zeta_checkpoints: tuple[tuple[float, float], ...]
    time_to_threshold: float
    threshold: float
    stage_count: int
    final_sigma_c: float

    _COLUMNS = ("peak_e1", "tail_rms_e1", "tail_window", "theta_err_checkpoints",
                "theta_err_zeta_checkpoints", "time_to_threshold", "threshold",
                "stage_count", "final_sigma_c")

    def to_csv(self, path) -> None:
        def fmt(v):
            if isinstance(v, tuple):
                return ";".join(f"{repr(t)}:{repr(x)}" for t, x in v)
            return repr(v)

        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(self._COLUMNS) + "\n")
            fh.write(",".join(fmt(getattr(self, c)) for c in self._COLUMNS) + "\n")


def summarize(trace: Trace, tail_window: float = 10.0, checkpoints=None,
              threshold: float = 0.1) -> MetricsRecord:
    """Compute the summary metrics from a trace."""
    t = trace.t
    if t.size == 0:
        raise ValueError("empty trace")
    e1 = trace.column("e1")
    err = trace.column("theta_err_norm")
    err_zeta = trace.column("theta_err_zeta_norm")
    t_end = float(t[-1])
    if checkpoints is None:
        checkpoints = (t_end,)

    tail = e1[t >= t_end - tail_window]
    cps, cps_zeta = [], []
    for cp in checkpoints:
        i = int(np.argmin(np.abs(t - cp)))
        cps.append((float(t[i]), float(err[i])))
        cps_zeta.append((float(t[i]), float(err_zeta[i])))
    hit = np.flatnonzero(err <= threshold)
    return MetricsRecord(
        peak_e1=float(np.max(np.abs(e1))),
        tail_rms_e1=float(np.sqrt(np.mean(tail * tail))),
        tail_window=float(tail_window),
        theta_err_checkpoints=tuple(cps),
        theta_err_zeta_checkpoints=tuple(cps_zeta),
        time_to_threshold=float(t[hit[0]]) if hit.size else math.nan,
        threshold=float(threshold),
        stage_count=int(trace.column("stage")[-1]),
        final_sigma_c=float(trace.column("sigma_c")[-1]),
    )


class _Reference:
    """Reference taps y_r .. y_r^(n) for both reference kinds."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec.reference
        self.n = spec.order
        if self.spec.kind == "lti":
            den = np.asarray(self.spec.denominator)
            self.degree = den.size - 1
            if self.degree < self.n:
                raise ValueError("reference model degree must reach the plant order")
            self._coeffs = den[1:][::-1]
        else:
            self.degree = 0

    @property
    def state_dim(self) -> int:
        return self.degree if self.spec.kind == "lti" else 0

    def taps(self, t: float, state: np.ndarray) -> np.ndarray:
        n = self.n
        if self.spec.kind == "sinusoid":
            a, w = self.spec.amplitude, self.spec.frequency
            k = np.arange(n + 1)
            return a * w ** k * np.sin(w * t + 0.5 * np.pi * k)
        top = self.spec.a0 * self.spec.input_value(t) - float(self._coeffs @ state)
        full = np.concatenate((state, [top]))
        return full[:n + 1]

    def derivative(self, t: float, state: np.ndarray) -> np.ndarray:
        top = self.spec.a0 * self.spec.input_value(t) - float(self._coeffs @ state)
        return np.concatenate((state[1:], [top]))


class _Engine:
    def __init__(self, spec: ScenarioSpec, collect: bool = False,
                 collect_dense: bool = False):
        self.spec = spec
        self.collect = collect
        self.collect_dense = collect_dense
        self.model = make_plant(spec.plant, spec.theta)
        n, N = self.model.order, self.model.n_params
        self.n, self.N = n, N
        self.gains = ControlGains(spec.k_c, spec.k_d)
        self.ctrl = make_controller(spec.controller, spec.k_d)
        self.Lam = closed_loop_matrix(spec.k_c)
        self.Gamma = np.asarray(spec.gamma, dtype=float)
        if np.any(self.Gamma <= 0.0):
            raise ValueError("learning rates must be positive")
        self.kappa = float(spec.kappa)
        self.theta_true = np.asarray(spec.theta, dtype=float)
        self.ref = _Reference(spec)
        self.rng = np.random.default_rng(spec.seed)

        m = n - 1
        self.m = m
        self.alphas = np.asarray(spec.poles, dtype=float)
        self.alphas_col = self.alphas.reshape(m, 1)

        # the five tuner/swap filters share one pole list, so their states
        # fuse into a single (m, W) block and one tap computation serves all
        cols = {"phi": N * n, "e": n, "w": n, "Q": N * N, "q": N}
        self.fcols = {}
        off = 0
        for key, sz in cols.items():
            self.fcols[key] = slice(off, off + sz)
            off += sz
        self.W = off

        layout = {
            "x": (n,), "zeta": (n,), "Phi_s": (N, n), "F": (m, self.W),
            "theta": (N,), "ref": (self.ref.state_dim,),
        }
        self.slices = {}
        off = 0
        for key, shape in layout.items():
            sz = int(np.prod(shape)) if shape[0] else 0
            self.slices[key] = (slice(off, off + sz), shape)
            off += sz
        self.state_dim = off

        self.steps_per_sample = int(round(spec.t_s / spec.dt))
        self.n_steps = int(round(spec.duration / spec.dt))
        self.win_Psi = SlidingWindow(spec.tau_d, spec.t_s, (N, N))
        self.win_q = SlidingWindow(spec.tau_d, spec.t_s, (N,))
        self.memory = ExcitationMemory(n_params=N, sigma_floor=spec.sigma,
                                       threshold=spec.mu * spec.tau_d)

    # -- views ---------------------------------------------------------

    def _view(self, s: np.ndarray, key: str) -> np.ndarray:
        sl, shape = self.slices[key]
        return s[sl].reshape(shape)

    # -- pipeline ------------------------------------------------------

    def _evaluate(self, t: float, s: np.ndarray, held) -> SimpleNamespace:
        n, N, m = self.n, self.N, self.m
        x = self._view(s, "x")
        theta_hat = self._view(s, "theta")
        yr = self.ref.taps(t, self._view(s, "ref"))
        xm = x + held.noise

        F = self._view(s, "F")
        taps = cascade_taps(self.alphas, F, m - 1)
        cphi, ce, cw, cQ, cq = (self.fcols[k] for k in ("phi", "e", "w", "Q", "q"))
        phi_taps = [tp[cphi].reshape(N, n) for tp in taps]
        fe_taps = [tp[ce] for tp in taps]
        fw_taps = [tp[cw] for tp in taps]
        Q_taps = [tp[cQ].reshape(N, N) for tp in taps]
        qf_taps = [tp[cq] for tp in taps]

        # estimate derivatives below the top order need no instantaneous input
        z_taps = [fe_taps[i + 1] + fw_taps[i] for i in range(m - 1)]
        Theta = np.zeros((N, n))
        Theta[:, 0] = theta_hat
        low = None
        if n > 2:
            low = derivative_chain(self.Gamma, self.kappa, phi_taps, z_taps,
                                   Q_taps, qf_taps, theta_hat, kmax=n - 3,
                                   use_eps=self.ctrl.use_eps, use_xi=self.ctrl.use_xi)
            for k, d in enumerate(low.theta_derivs, start=1):
                Theta[:, k] = d

        stages = _stage_recursion(self.model, self.gains, xm[:n - 1],
                                  Theta[:, :n - 1], yr[:n - 1],
                                  stages=n - 1, order=n - 1)
        e = np.empty(n)
        for i, jet in enumerate(stages.es):
            e[i] = jet.value
        e[n - 1] = xm[n - 1] - stages.vs[-1].value - yr[n - 1]

        # top derivative closes through the biproper tap of the e-cascade
        z_taps = z_taps + [cascade_taps(self.alphas, F[:, ce], m, u=e)[m]
                           + fw_taps[m - 1]]
        chain = derivative_chain(self.Gamma, self.kappa, phi_taps, z_taps,
                                 Q_taps, qf_taps, theta_hat, kmax=n - 2,
                                 use_eps=self.ctrl.use_eps, use_xi=self.ctrl.use_xi,
                                 resume=low)
        Theta[:, n - 1] = chain.theta_derivs[n - 2]

        beta = self.model.beta_value(xm)
        fin = _finalize(self.model, self.gains, stages, xm, Theta, yr, beta)

        Phi = np.empty((N, n))
        for i, psi in enumerate(stages.psis):
            for j in range(N):
                Phi[j, i] = psi[j].value
        Phi[:, n - 1] = fin.psi_n
        w = Phi.T @ theta_hat - self.Lam @ e

        Q_rate = Q_taps[1] if m > 1 else cascade_taps(
            self.alphas, F[:, cQ].reshape(m, N, N), m, u=held.Psi_store)[m]
        return SimpleNamespace(x=x, xm=xm, yr=yr, e=e, u=fin.u, Phi=Phi,
                               Phi_f=phi_taps[0], w=w, theta_hat=theta_hat,
                               Theta=Theta, eps=chain.eps[0], xi=chain.xi[0],
                               Q=Q_taps[0], qf=qf_taps[0], Q_rate=Q_rate,
                               theta_derivs=chain.theta_derivs)

    def _field(self, t: float, s: np.ndarray, held) -> np.ndarray:
        o = self._evaluate(t, s, held)
        ds = np.empty_like(s)
        if self.spec.disturbance.kind == "random":
            d = held.disturbance
        elif self.spec.disturbance.kind == "none":
            d = None
        else:
            d = disturbance_sample(self.spec.disturbance, t, self.rng, self.n)
        self._view(ds, "x")[:] = plant_derivative(self.model, o.x, o.u, d)
        self._view(ds, "zeta")[:] = self.Lam @ self._view(s, "zeta") + o.Phi.T @ o.theta_hat
        self._view(ds, "Phi_s")[:] = self._view(s, "Phi_s") @ self.Lam.T + o.Phi

        u_all = np.empty(self.W)
        u_all[self.fcols["phi"]] = o.Phi.ravel()
        u_all[self.fcols["e"]] = o.e
        u_all[self.fcols["w"]] = o.w
        u_all[self.fcols["Q"]] = held.Psi_store.ravel()
        u_all[self.fcols["q"]] = held.q_store
        self._view(ds, "F")[:] = cascade_derivative(
            self.alphas_col, self._view(s, "F"), u_all)

        self._view(ds, "theta")[:] = o.theta_derivs[0]
        if self.ref.state_dim:
            self._view(ds, "ref")[:] = self.ref.derivative(t, self._view(s, "ref"))
        return ds

    # -- orchestration ---------------------------------------------------

    def _columns(self) -> list[str]:
        n, N = self.n, self.N
        return (["t"] + [f"x{i}" for i in range(1, n + 1)]
                + [f"e{i}" for i in range(1, n + 1)] + ["u"]
                + [f"theta_hat_{j}" for j in range(1, N + 1)]
                + ["theta_err_norm", "theta_err_zeta_norm", "eps_norm",
                   "xi_norm", "sigma_c", "t_e", "stage", "V_theta"])

    def _row(self, t, s, o) -> list[float]:
        err = self.theta_true - self._view(s, "theta")
        active = np.asarray(self.memory.active, dtype=int)
        err_zeta = float(np.linalg.norm(err[active])) if active.size else 0.0
        return ([t] + list(self._view(s, "x")) + list(o.e) + [o.u]
                + list(self._view(s, "theta"))
                + [float(np.linalg.norm(err)), err_zeta,
                   float(np.linalg.norm(o.eps)), float(np.linalg.norm(o.xi)),
                   self.memory.sigma_c, self.memory.t_e, float(self.memory.stage),
                   lyapunov_Vtheta(err, self.Gamma)])

    def _draw_noise(self) -> np.ndarray:
        return np.array([gaussian_noise(self.spec.noise_std, self.rng)
                         for _ in range(self.n)])

    def run(self) -> Trace:
        spec = self.spec
        n, N = self.n, self.N
        s = np.zeros(self.state_dim)
        self._view(s, "x")[:] = spec.x0
        self._view(s, "theta")[:] = spec.theta_hat0

        held = SimpleNamespace(noise=self._draw_noise(),
                               disturbance=np.zeros(n),
                               Psi_store=self.memory.Psi_store,
                               q_store=self.memory.q_store)
        if spec.disturbance.kind == "random":
            held.disturbance = disturbance_sample(spec.disturbance, 0.0, self.rng, n)

        # swapping filter starts at minus the measured error; the e-cascade
        # starts on e(0) so its rate tap filters the true error derivative
        boot = self._evaluate(0.0, s, held)
        self._view(s, "zeta")[:] = -boot.e
        self._view(s, "F")[:, self.fcols["e"]] = boot.e

        n_rows = self.n_steps // self.steps_per_sample + 1
        data = np.empty((n_rows, len(self._columns())))
        diag: dict[str, list] = {}
        if self.collect:
            diag = {k: [] for k in ("Phi", "Phi_f", "Phi_s", "p", "Psi", "q",
                                    "Q", "qf", "Q_rate", "eps", "xi",
                                    "theta_derivs", "Psi_store", "q_store",
                                    "active")}

        dense: dict[str, list] = {}
        if self.collect_dense:
            dense = {"t": [], "theta": [], "theta_derivs": []}

        # escapes surface as the finite-state checks aborting the run, so
        # the intermediate overflow warnings are pure noise
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                row = self._loop(spec, s, held, data, diag, dense)
        except SimulationDiverged as exc:
            trace = self._make_trace(data[:self._rows_done], diag, dense)
            raise SimulationDiverged(str(exc), time=self._last_t, trace=trace) from None
        return self._make_trace(data[:row], diag, dense)

    def _loop(self, spec, s, held, data, diag, dense) -> int:
        n = self.n
        row = 0
        t = 0.0
        self._rows_done = 0
        self._last_t = 0.0
        for k in range(self.n_steps + 1):
            t = k * spec.dt
            o = None
            if k % self.steps_per_sample == 0:
                if k > 0:
                    held.noise = self._draw_noise()
                    if spec.disturbance.kind == "random":
                        held.disturbance = disturbance_sample(
                            spec.disturbance, t, self.rng, n)
                o = self._evaluate(t, s, held)
                Phi_s = self._view(s, "Phi_s")
                p = output_p(o.e, self._view(s, "zeta"))
                gram, qvec = excitation_integrands(Phi_s, p)
                Psi = self.win_Psi.push(gram, t)
                q = self.win_q.push(qvec, t)
                staged_update(self.memory, Psi, q, t)
                held.Psi_store = self.memory.Psi_store
                held.q_store = self.memory.q_store
                data[row] = self._row(t, s, o)
                if self.collect:
                    diag["Phi"].append(o.Phi.copy())
                    diag["Phi_f"].append(o.Phi_f.copy())
                    diag["Phi_s"].append(Phi_s.copy())
                    diag["p"].append(p.copy())
                    diag["Psi"].append(Psi.copy())
                    diag["q"].append(q.copy())
                    diag["Q"].append(o.Q.copy())
                    diag["qf"].append(o.qf.copy())
                    diag["Q_rate"].append(o.Q_rate.copy())
                    diag["eps"].append(o.eps.copy())
                    diag["xi"].append(o.xi.copy())
                    diag["theta_derivs"].append(np.array(o.theta_derivs))
                    diag["Psi_store"].append(self.memory.Psi_store.copy())
                    diag["q_store"].append(self.memory.q_store.copy())
                    diag["active"].append(tuple(self.memory.active))
                row += 1
                self._rows_done = row
                self._last_t = t
            if self.collect_dense:
                od = o if o is not None else self._evaluate(t, s, held)
                dense["t"].append(t)
                dense["theta"].append(self._view(s, "theta").copy())
                dense["theta_derivs"].append(np.array(od.theta_derivs))
            if k == self.n_steps:
                break
            s = rk4_step(lambda tt, ss: self._field(tt, ss, held), s, t, spec.dt)
        return row

    def _make_trace(self, data, diag, dense=None) -> Trace:
        diagnostics = {k: (np.array(v) if k != "active" else v)
                       for k, v in diag.items()} if diag else {}
        if dense:
            diagnostics.update({f"dense_{k}": np.array(v)
                                for k, v in dense.items()})
        meta = {"controller": self.spec.controller, "plant": self.spec.plant,
                "seed": str(self.spec.seed)}
        return Trace(columns=self._columns(), data=data, n=self.n,
                     n_params=self.N, meta=meta, diagnostics=diagnostics)


def run_scenario(spec: ScenarioSpec, collect_diagnostics: bool = False,
                 collect_dense: bool = False, tail_window: float = 10.0,
                 checkpoints=None, threshold: float = 0.1) -> tuple[Trace, MetricsRecord]:
    """Simulate one scenario; returns the trace and its summary metrics.

    ``collect_diagnostics`` attaches per-sample internals to the trace;
    ``collect_dense`` additionally records the estimate and its derivative
    chain at every integration step.  A numerical blow-up raises
    :class:`SimulationDiverged` carrying the last valid time and the
    partial trace collected so far.
    """
    engine = _Engine(spec, collect=collect_diagnostics,
                     collect_dense=collect_dense)
    trace = engine.run()
    metrics = summarize(trace, tail_window=tail_window,
                        checkpoints=checkpoints, threshold=threshold)
    return trace, metrics
