"""Fixed-step integration, lag cascades, sliding windows, reference chains.

Everything here is deliberately small and explicit: a classical RK4 step,
first-order lag cascades realized as chains ``x_j' = alpha_j (u_j - x_j)``
with algebraically exact output-derivative taps, trapezoidal moving-window
integrals on a ring buffer, a chain-of-integrators reference generator,
and seeded Gaussian noise.  All continuous dynamics in a run integrate
jointly at one fixed step; discrete machinery samples on a coarser grid.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np


class SimulationDiverged(RuntimeError):
    """Raised when a vector field or state stops being finite."""

    def __init__(self, message: str, time: float | None = None, trace=None):
        super().__init__(message)
        self.time = time
        self.trace = trace


def rk4_step(vector_field: Callable, state: np.ndarray, t: float, h: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta update of ``state`` at time ``t``."""
    if h <= 0.0:
        raise ValueError("step size must be positive")
    k1 = vector_field(t, state)
    k2 = vector_field(t + 0.5 * h, state + (0.5 * h) * k1)
    k3 = vector_field(t + 0.5 * h, state + (0.5 * h) * k2)
    k4 = vector_field(t + h, state + h * k3)
    new = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise SimulationDiverged(f"non-finite state after step at t={t!r}", time=t)
    return new


# -- first-order lag cascades ------------------------------------------


def cascade_derivative(alphas_col: np.ndarray, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Per-stage state derivatives of the lag chain driven by ``u``.

    ``alphas_col`` must already be broadcast-shaped ``(m, 1, ..)`` against
    ``states`` of shape ``(m, *input_shape)``.
    """
    prev = np.concatenate((u[None], states[:-1]), axis=0)
    return alphas_col * (prev - states)


def cascade_taps(alphas: np.ndarray, states: np.ndarray, kmax: int,
                 u: np.ndarray | None = None) -> list[np.ndarray]:
    """Output time-derivative taps 0..kmax of the lag chain.

    Taps up to ``m - 1`` are exact algebraic functions of the stage states.
    Tap ``m`` additionally involves the instantaneous input (the chain
    output is biproper at that order), so it requires ``u``.
    """
    alphas = np.reshape(alphas, -1)
    m = states.shape[0]
    if kmax > m:
        raise ValueError(f"tap {kmax} unavailable for a {m}-stage cascade")
    if kmax == m and u is None:
        raise ValueError(f"tap {m} needs the instantaneous input")
    taps = [states[m - 1]]
    prev = list(states)  # prev[j] = current-order derivative of stage j
    for r in range(1, kmax + 1):
        cur: list = [None] * m
        if r == 1 and u is not None:
            cur[0] = alphas[0] * (u - prev[0])
        for j in range(1, m):
            if prev[j - 1] is not None:
                cur[j] = alphas[j] * (prev[j - 1] - prev[j])
        taps.append(cur[m - 1])
        prev = cur
    return taps


class FilterCascade:
    """Stateful convenience wrapper around the lag-chain helpers.

    Holds stage gains and stage states for an elementwise filter of any
    input shape.  DC gain is exactly one: a constant input held long
    enough drives every stage, hence the output, to that constant.
    """

    def __init__(self, alphas, shape=()):
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        if alphas.ndim != 1 or alphas.size == 0:
            raise ValueError("need a non-empty 1-D list of stage gains")
        if np.any(alphas <= 0.0):
            raise ValueError("stage gains must be positive")
        self.alphas = alphas
        self.shape = tuple(shape)
        self._alphas_col = alphas.reshape((alphas.size,) + (1,) * len(self.shape))
        self.states = np.zeros((alphas.size,) + self.shape)

    @property
    def stages(self) -> int:
        return self.alphas.size

    def reset(self, value=0.0) -> None:
        self.states[:] = value

    def _check_input(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != self.shape:
            raise ValueError(f"input shape {u.shape} != cascade shape {self.shape}")
        return u

    def derivative(self, u) -> np.ndarray:
        return cascade_derivative(self._alphas_col, self.states, self._check_input(u))

    def output(self) -> np.ndarray:
        return self.states[-1]

    def taps(self, kmax: int, u=None) -> list[np.ndarray]:
        uu = self._check_input(u) if u is not None else None
        return cascade_taps(self._alphas_col, self.states, kmax, uu)

    def step(self, u, h: float) -> None:
        """Advance the cascade one RK4 step with the input held constant."""
        uu = self._check_input(u)
        flat = self.states.reshape(-1)

        def field(_t, s):
            st = s.reshape(self.states.shape)
            return cascade_derivative(self._alphas_col, st, uu).reshape(-1)

        self.states = rk4_step(field, flat, 0.0, h).reshape(self.states.shape)


class SlidingWindow:
    """Trapezoidal integral of a sampled signal over a moving window.

    Samples arrive at a fixed period; the buffer holds
    ``ceil(window / period) + 1`` of them.  Until the window fills the
    integral spans ``[0, t]`` (the buffer grows from the first sample).
    """

    def __init__(self, window: float, period: float, shape=()):
        if window <= 0.0 or period <= 0.0:
            raise ValueError("window and period must be positive")
        if window <= period:
            raise ValueError("window must exceed the sample period")
        self.window = float(window)
        self.period = float(period)
        self.shape = tuple(shape)
        self.capacity = math.ceil(window / period) + 1
        self._buffer = np.zeros((self.capacity,) + self.shape)
        self._count = 0
        self._head = 0
        self._last_t = None
        self._value = np.zeros(self.shape)

    def push(self, sample, t: float) -> np.ndarray:
        """Append one sample; returns the updated window integral."""
        if self._last_t is not None and t <= self._last_t:
            raise ValueError(f"out-of-order sample at t={t!r}")
        self._last_t = t
        sample = np.asarray(sample, dtype=float)
        if sample.shape != self.shape:
            raise ValueError("sample shape mismatch")
        tail = (self._head + self._count) % self.capacity
        self._buffer[tail] = sample
        if self._count < self.capacity:
            self._count += 1
        else:
            self._head = (self._head + 1) % self.capacity
        self._value = np.trapezoid(self.samples(), dx=self.period, axis=0) \
            if self._count >= 2 else np.zeros(self.shape)
        return self._value

    def samples(self) -> np.ndarray:
        """Buffered samples in arrival order (oldest first)."""
        idx = (self._head + np.arange(self._count)) % self.capacity
        return self._buffer[idx]

    @property
    def value(self) -> np.ndarray:
        return self._value


class LtiGenerator:
    """Reference chain ``y = a0 / a(s) [r]`` in integrator-chain form.

    ``denominator`` lists the monic a(s) coefficients in descending powers,
    leading 1 included.  The chain states are the output and its first
    d-1 derivatives; tap d is the algebraic derivative of the last state,
    so all taps 0..d come for free without numerical differentiation.
    """

    def __init__(self, a0: float, denominator):
        den = np.asarray(denominator, dtype=float)
        if den.ndim != 1 or den.size < 2:
            raise ValueError("denominator needs degree >= 1")
        if den[0] != 1.0:
            raise ValueError("denominator must be monic")
        self.a0 = float(a0)
        self.degree = den.size - 1
        self._coeffs = den[1:][::-1]  # ascending c_0 .. c_{d-1}
        self.state = np.zeros(self.degree)

    def derivative(self, r: float, state: np.ndarray | None = None) -> np.ndarray:
        s = self.state if state is None else state
        top = self.a0 * r - float(self._coeffs @ s)
        return np.concatenate((s[1:], [top]))

    def taps(self, r: float, state: np.ndarray | None = None) -> np.ndarray:
        """Output derivatives 0..d; taps 0..d-1 are the chain states."""
        s = self.state if state is None else state
        top = self.a0 * r - float(self._coeffs @ s)
        return np.concatenate((s, [top]))

    def step(self, r: float, h: float) -> np.ndarray:
        """Advance one RK4 step with ``r`` held; returns all taps."""
        if not np.isfinite(r):
            raise ValueError("non-finite reference input")
        self.state = rk4_step(lambda _t, s: self.derivative(r, s), self.state, 0.0, h)
        return self.taps(r)


def reference_step(gen: LtiGenerator, r: float, h: float) -> np.ndarray:
    """Module-level alias for :meth:`LtiGenerator.step`."""
    return gen.step(r, h)


def gaussian_noise(std: float, rng: np.random.Generator) -> float:
    """One zero-mean Gaussian draw; deterministic given the rng state."""
    if std < 0.0:
        raise ValueError("standard deviation must be non-negative")
    return std * rng.standard_normal()
