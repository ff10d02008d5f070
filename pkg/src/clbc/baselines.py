"""Controller variants for comparisons and ablations.

The composite controller drives adaptation with both prediction errors
and needs no damping.  The two stand-in baselines keep exactly one error
term each and typically add nonlinear damping to the virtual controls:

    clbc      th' = Gamma (Phi_f eps + kappa xi),  k_d = 0
    eps_only  th' = Gamma  Phi_f eps               (kappa term off)
    xi_only   th' = Gamma  kappa xi                (gradient term off)
"""

from __future__ import annotations

from dataclasses import dataclass

KINDS = ("clbc", "eps_only", "xi_only")


@dataclass(frozen=True)
class ControllerKind:
    """Which adaptation terms run, plus per-stage damping gains."""

    kind: str
    k_d: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}; choices: {KINDS}")
        k_d = tuple(float(k) for k in self.k_d)
        if any(k < 0.0 for k in k_d):
            raise ValueError("damping gains must be non-negative")
        object.__setattr__(self, "k_d", k_d)

    @property
    def use_eps(self) -> bool:
        return self.kind != "xi_only"

    @property
    def use_xi(self) -> bool:
        return self.kind != "eps_only"


def make_controller(kind: str, k_d=()) -> ControllerKind:
    """Validated constructor used by the scenario harness and the CLI."""
    return ControllerKind(kind=kind, k_d=tuple(k_d))
