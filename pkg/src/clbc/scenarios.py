"""Scenario specifications, built-in presets, and the config-file format.

A scenario bundles everything a run needs: the plant, the controller
kind, all gains and filter constants, timing, noise/disturbance, the
reference signal and the initial conditions.  Specs serialize to a
line-oriented ``key = value`` text format (arrays as comma lists) and
round-trip losslessly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .baselines import KINDS
from .plant import DisturbanceSpec

_PLANT_ORDERS = {"msd": (3, 3), "second_order": (2, 1)}


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference trajectory: a direct sinusoid or an LTI shaping model.

    For ``kind='lti'`` the trajectory is a0/a(s) applied to an input r(t)
    that is either piecewise constant (breakpoints as (time, level) pairs)
    or a sinusoid reusing the amplitude/frequency fields.
    """

    kind: str = "sinusoid"          # sinusoid | lti
    amplitude: float = 0.0
    frequency: float = 1.0
    a0: float = 1.0
    denominator: tuple[float, ...] = (1.0, 1.0)
    input_kind: str = "piecewise"   # piecewise | sinusoid (lti only)
    breakpoints: tuple[tuple[float, float], ...] = ((0.0, 0.0),)

    def __post_init__(self):
        if self.kind not in ("sinusoid", "lti"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.input_kind not in ("piecewise", "sinusoid"):
            raise ValueError(f"unknown reference input kind {self.input_kind!r}")
        object.__setattr__(self, "denominator",
                           tuple(float(c) for c in self.denominator))
        object.__setattr__(self, "breakpoints",
                           tuple((float(t), float(v)) for t, v in self.breakpoints))
        if self.kind == "lti":
            if self.denominator[0] != 1.0:
                raise ValueError("reference denominator must be monic")
            if self.input_kind == "piecewise":
                times = [t for t, _ in self.breakpoints]
                if not times or times[0] != 0.0 or sorted(times) != times:
                    raise ValueError("breakpoints must start at 0 and be sorted")

    def input_value(self, t: float) -> float:
        """r(t) for the LTI model (last breakpoint level at or before t)."""
        if self.input_kind == "sinusoid":
            return self.amplitude * math.sin(self.frequency * t)
        level = self.breakpoints[0][1]
        for bt, bv in self.breakpoints:
            if t >= bt:
                level = bv
            else:
                break
        return level


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete, serializable description of one simulation run."""

    plant: str = "msd"
    controller: str = "clbc"
    k_c: tuple[float, ...] = (1.0, 1.0, 1.0)
    k_d: tuple[float, ...] = (0.0, 0.0, 0.0)
    gamma: tuple[float, ...] = (3.0, 3.0, 3.0)
    kappa: float = 1.0
    tau_d: float = 3.0
    sigma: float = 1e-4
    mu: float = 1e-6
    poles: tuple[float, ...] = (5.0, 5.0)
    dt: float = 1e-3
    t_s: float = 1e-2
    duration: float = 60.0
    noise_std: float = 1e-3
    seed: int = 0
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    x0: tuple[float, ...] = (0.0, 0.0, 0.0)
    theta_hat0: tuple[float, ...] = (0.0, 0.0, 0.0)
    theta: tuple[float, ...] = (0.1, 0.5, 1.5)

    def __post_init__(self):
        for name in ("k_c", "k_d", "gamma", "poles", "x0", "theta_hat0", "theta"):
            object.__setattr__(self, name,
                               tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "seed", int(self.seed))
        if self.plant not in _PLANT_ORDERS:
            raise ValueError(f"unknown plant {self.plant!r}")
        if self.controller not in KINDS:
            raise ValueError(f"unknown controller {self.controller!r}")
        n, n_params = _PLANT_ORDERS[self.plant]
        if len(self.k_c) != n or len(self.k_d) != n or len(self.x0) != n:
            raise ValueError(f"gain/state lengths must equal the plant order {n}")
        if len(self.gamma) != n_params or len(self.theta) != n_params \
                or len(self.theta_hat0) != n_params:
            raise ValueError(f"parameter-sized fields must have length {n_params}")
        if len(self.poles) != n - 1:
            raise ValueError(f"pole list must have length {n - 1}")
        if not (self.tau_d > self.t_s > self.dt > 0.0):
            raise ValueError("need tau_d > T_s > dt > 0")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if abs(self.t_s / self.dt - round(self.t_s / self.dt)) > 1e-9:
            raise ValueError("T_s must be an integer multiple of dt")

    @property
    def order(self) -> int:
        return _PLANT_ORDERS[self.plant][0]

    @property
    def n_params(self) -> int:
        return _PLANT_ORDERS[self.plant][1]


# -- built-in presets ----------------------------------------------------


def builtin_case1() -> ScenarioSpec:
    """Third-order tracking run: sinusoidal reference keeps all channels rich."""
    return ScenarioSpec(
        plant="msd", controller="clbc",
        k_c=(1.0, 1.0, 1.0), k_d=(0.0, 0.0, 0.0),
        gamma=(3.0, 3.0, 3.0), kappa=1.0,
        tau_d=3.0, sigma=1e-4, mu=1e-6,
        poles=(5.0, 5.0), dt=1e-3, t_s=1e-2, duration=60.0,
        noise_std=1e-3, seed=0,
        reference=ReferenceSpec(kind="sinusoid", amplitude=1.5, frequency=0.5),
        disturbance=DisturbanceSpec(),
        x0=(0.6, 0.0, 0.0), theta_hat0=(0.0, 0.0, 0.0),
        theta=(0.1, 0.5, 1.5),
    )


def builtin_case2() -> ScenarioSpec:
    """Regulation run whose cubic channel only wakes up after the big setpoint step."""
    return ScenarioSpec(
        plant="msd", controller="clbc",
        k_c=(1.0, 1.0, 1.0), k_d=(0.0, 0.0, 0.0),
        gamma=(3.0, 3.0, 3.0), kappa=1.0,
        tau_d=3.0, sigma=1e-4, mu=1e-4,
        poles=(5.0, 5.0), dt=1e-3, t_s=1e-2, duration=120.0,
        noise_std=1e-3, seed=0,
        reference=ReferenceSpec(
            kind="lti", a0=16.0, denominator=(1.0, 8.0, 24.0, 32.0, 16.0),
            input_kind="piecewise",
            breakpoints=((0.0, -0.3), (60.0, -1.5), (100.0, 0.0))),
        disturbance=DisturbanceSpec(),
        x0=(0.0, 0.0, 0.0), theta_hat0=(0.0, 0.0, 0.0),
        theta=(0.4, 0.5, 0.1),
    )


def builtin_case3(k_d: float = 0.0) -> ScenarioSpec:
    """Second-order transient benchmark; ``k_d`` sets both damping gains."""
    if not 0.0 <= k_d < 1.0:
        raise ValueError("damping gain must lie in [0, 1)")
    return ScenarioSpec(
        plant="second_order", controller="clbc",
        k_c=(1.0, 1.0), k_d=(k_d, k_d),
        gamma=(1.0,), kappa=1.0,
        tau_d=1.0, sigma=1e-4, mu=1e-6,
        poles=(25.0,), dt=1e-3, t_s=1e-2, duration=30.0,
        noise_std=1e-3, seed=0,
        reference=ReferenceSpec(kind="lti", a0=1.0, denominator=(1.0, 3.0, 3.0, 1.0),
                                input_kind="sinusoid", amplitude=1.0, frequency=2.0),
        disturbance=DisturbanceSpec(),
        x0=(0.6, 0.0), theta_hat0=(0.0,), theta=(2.0,),
    )


def case3_damping_sweep() -> tuple[float, ...]:
    """The seven damping levels of the transient comparison."""
    return tuple(round(0.01 + 0.03 * i, 10) for i in range(7))


BUILTINS = {"case1": builtin_case1, "case2": builtin_case2,
            "case3": builtin_case3}


# -- config text round-trip ----------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return repr(int(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    raise TypeError(f"cannot serialize {type(value)}")


def spec_to_text(spec: ScenarioSpec) -> str:
    """Render a scenario as line-oriented ``key = value`` config text."""
    lines = []
    for f in fields(spec):
        value = getattr(spec, f.name)
        if f.name == "reference":
            lines.append(f"reference = {value.kind}")
            lines.append(f"ref_amplitude = {_fmt(value.amplitude)}")
            lines.append(f"ref_frequency = {_fmt(value.frequency)}")
            lines.append(f"ref_a0 = {_fmt(value.a0)}")
            lines.append(f"ref_denominator = {_fmt(value.denominator)}")
            lines.append(f"ref_input = {value.input_kind}")
            bp = ", ".join(f"{_fmt(t)}:{_fmt(v)}" for t, v in value.breakpoints)
            lines.append(f"ref_breakpoints = {bp}")
        elif f.name == "disturbance":
            lines.append(f"disturbance = {value.kind}")
            lines.append(f"dist_bound = {_fmt(value.bound)}")
            lines.append(f"dist_frequency = {_fmt(value.frequency)}")
            lines.append(f"dist_axis = {_fmt(value.axis)}")
        else:
            lines.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def _parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


def spec_from_text(text: str) -> ScenarioSpec:
    """Parse config text written by :func:`spec_to_text` (or by hand)."""
    kv: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()

    def pop(key, default=None):
        if key in kv:
            return kv.pop(key)
        if default is None:
            raise KeyError(f"missing config key {key!r}")
        return default

    ref_kind = pop("reference", "sinusoid")
    breakpoints = tuple(
        (float(p.split(":")[0]), float(p.split(":")[1]))
        for p in pop("ref_breakpoints", "0:0").split(",") if p.strip()
    ) or ((0.0, 0.0),)
    reference = ReferenceSpec(
        kind=ref_kind,
        amplitude=float(pop("ref_amplitude", "0")),
        frequency=float(pop("ref_frequency", "1")),
        a0=float(pop("ref_a0", "1")),
        denominator=_parse_floats(pop("ref_denominator", "1, 1")),
        input_kind=pop("ref_input", "piecewise"),
        breakpoints=breakpoints,
    )
    disturbance = DisturbanceSpec(
        kind=pop("disturbance", "none"),
        bound=float(pop("dist_bound", "0")),
        frequency=float(pop("dist_frequency", "1")),
        axis=int(float(pop("dist_axis", "0"))),
    )
    spec = ScenarioSpec(
        plant=pop("plant"), controller=pop("controller", "clbc"),
        k_c=_parse_floats(pop("k_c")), k_d=_parse_floats(pop("k_d")),
        gamma=_parse_floats(pop("gamma")), kappa=float(pop("kappa")),
        tau_d=float(pop("tau_d")), sigma=float(pop("sigma")),
        mu=float(pop("mu")), poles=_parse_floats(pop("poles")),
        dt=float(pop("dt")), t_s=float(pop("t_s")),
        duration=float(pop("duration")), noise_std=float(pop("noise_std")),
        seed=int(pop("seed")), reference=reference, disturbance=disturbance,
        x0=_parse_floats(pop("x0")), theta_hat0=_parse_floats(pop("theta_hat0")),
        theta=_parse_floats(pop("theta")),
    )
    if kv:
        raise ValueError(f"unknown config keys: {sorted(kv)}")
    return spec


def load_scenario(name_or_path: str) -> ScenarioSpec:
    """Resolve ``case1|case2|case3`` or ``file:<path>`` to a spec."""
    if name_or_path in BUILTINS:
        return BUILTINS[name_or_path]()
    if name_or_path.startswith("file:"):
        with open(name_or_path[5:], "r", encoding="utf-8") as fh:
            return spec_from_text(fh.read())
    raise ValueError(f"unknown scenario {name_or_path!r} "
                     f"(use {sorted(BUILTINS)} or file:<path>)")
