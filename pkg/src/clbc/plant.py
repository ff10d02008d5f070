"""Strict-feedback plant family, benchmark factories, disturbance injection.

A plant of order n has dynamics

    x_i' = phi_i(x_1..x_i)^T theta + x_{i+1} + d_i      (i < n)
    x_n' = phi_n(x)^T theta + beta(x) u + d_n

with known regressors phi_i, known input gain beta and an unknown constant
parameter vector theta.  Regressors are closed-form callables that accept
plain numbers or jets, so the controller can differentiate through them.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Callable, Sequence

import numpy as np

from .numerics import SimulationDiverged


@dataclass(frozen=True)
class PlantModel:
    """Strict-feedback system description (immutable, shareable)."""

    order: int
    n_params: int
    regressors: tuple[Callable, ...]  # regressors[i-1](*x[:i]) -> N entries
    beta: Callable
    theta: np.ndarray
    c_theta: float
    name: str = "custom"

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", theta)
        if len(self.regressors) != self.order:
            raise ValueError("need one regressor per state equation")
        if theta.shape != (self.n_params,):
            raise ValueError("theta dimension mismatch")
        if np.linalg.norm(theta) > self.c_theta:
            raise ValueError("true parameter violates its stated bound")

    def phi(self, i: int, args: Sequence):
        """Evaluate phi_i on the first i state coordinates (1-based i)."""
        if not 1 <= i <= self.order:
            raise ValueError(f"phi index {i} out of range")
        out = self.regressors[i - 1](*args[:i])
        if len(out) != self.n_params:
            raise ValueError(f"phi_{i} returned {len(out)} entries, expected {self.n_params}")
        return out

    def phi_values(self, i: int, x: np.ndarray) -> np.ndarray:
        """phi_i on plain numbers, as a float vector."""
        out = np.asarray(self.regressors[i - 1](*x[:i]), dtype=float)
        if out.shape != (self.n_params,):
            raise ValueError(f"phi_{i} returned shape {out.shape}")
        return out

    def beta_value(self, x: np.ndarray) -> float:
        b = float(self.beta(x))
        if b == 0.0:
            raise ControllerFault("input gain beta(x) vanished")
        return b


class ControllerFault(RuntimeError):
    """Control law cannot be evaluated (e.g. beta(x) = 0)."""


def plant_derivative(model: PlantModel, x: np.ndarray, u: float,
                     d: np.ndarray | None = None) -> np.ndarray:
    """True state derivative under input ``u`` and disturbance ``d``."""
    x = np.asarray(x, dtype=float)
    n = model.order
    if x.shape != (n,):
        raise ValueError(f"state shape {x.shape} != ({n},)")
    theta = model.theta
    regs = model.regressors
    xdot = np.empty(n)
    for i in range(n - 1):
        xdot[i] = np.dot(np.asarray(regs[i](*x[:i + 1]), dtype=float), theta) + x[i + 1]
    xdot[n - 1] = (np.dot(np.asarray(regs[n - 1](*x), dtype=float), theta)
                   + float(model.beta(x)) * u)
    if d is not None:
        xdot += np.asarray(d, dtype=float)
    if not np.all(np.isfinite(xdot)):
        raise SimulationDiverged("non-finite plant derivative")
    return xdot


def benchmark_msd(theta=(0.1, 0.5, 1.5), c_theta: float | None = None) -> PlantModel:
    """Third-order mass-spring-damper benchmark.

    Only the second state equation is uncertain:
    phi_2(x1, x2) = [-x2, -x1, -x2^3], phi_1 = phi_3 = 0, beta = 1.
    """
    theta = np.asarray(theta, dtype=float)

    def phi1(x1):
        return (0.0, 0.0, 0.0)

    def phi2(x1, x2):
        return (-x2, -x1, -(x2 * x2 * x2))

    def phi3(x1, x2, x3):
        return (0.0, 0.0, 0.0)

    if c_theta is None:
        c_theta = 2.0 * max(1.0, float(np.linalg.norm(theta)))
    return PlantModel(order=3, n_params=3, regressors=(phi1, phi2, phi3),
                      beta=lambda x: 1.0, theta=theta, c_theta=c_theta, name="msd")


def benchmark_second_order(theta=(2.0,), c_theta: float | None = None) -> PlantModel:
    """Second-order benchmark with phi_1(x1) = x1^2, phi_2 = 0, beta = 1."""
    theta = np.asarray(theta, dtype=float)

    def phi1(x1):
        return (x1 * x1,)

    def phi2(x1, x2):
        return (0.0,)

    if c_theta is None:
        c_theta = 2.0 * max(1.0, float(np.linalg.norm(theta)))
    return PlantModel(order=2, n_params=1, regressors=(phi1, phi2),
                      beta=lambda x: 1.0, theta=theta, c_theta=c_theta,
                      name="second_order")


_PLANTS = {"msd": benchmark_msd, "second_order": benchmark_second_order}


def make_plant(name: str, theta) -> PlantModel:
    """Benchmark factory lookup used by the scenario harness."""
    try:
        factory = _PLANTS[name]
    except KeyError:
        raise ValueError(f"unknown plant {name!r}; choices: {sorted(_PLANTS)}") from None
    return factory(theta=theta)


@dataclass(frozen=True)
class DisturbanceSpec:
    """Bounded disturbance description: every sample has norm <= bound."""

    kind: str = "none"  # none | constant | sinusoid | random
    bound: float = 0.0
    frequency: float = 1.0
    axis: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "constant", "sinusoid", "random"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.bound < 0.0:
            raise ValueError("disturbance bound must be non-negative")


def disturbance_sample(spec: DisturbanceSpec, t: float, rng: np.random.Generator,
                       dim: int) -> np.ndarray:
    """One disturbance vector in R^dim with norm at most ``spec.bound``."""
    d = np.zeros(dim)
    if spec.kind == "none" or spec.bound == 0.0:
        return d
    if spec.kind == "constant":
        d[spec.axis] = spec.bound
    elif spec.kind == "sinusoid":
        d[spec.axis] = spec.bound * np.sin(spec.frequency * t)
    else:  # random, resampled by the caller on its sampling grid
        u = rng.uniform(-1.0, 1.0, size=dim)
        d = (spec.bound / np.sqrt(dim)) * u
    if np.linalg.norm(d) > spec.bound * (1.0 + 1e-12):
        raise AssertionError("disturbance bound violated")
    return d
