"""Vaccine block: efficacy, uptake and rejection dynamics.

Rejection carries the hysteresis ratchet: it rises while infection sits
above the mandate threshold and decays more slowly when below, so mandate
episodes leave a permanent mark. Uptake chases an infection-dependent
target but can never exceed the non-rejecting share. Efficacy jumps on
innovation events and is cut multiplicatively when a new strain lands.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VaccineParams:
    innovation_rate: float = 0.038  # /wk, before coupling scaling
    efficacy_jump: float = 0.3
    drift_loss: float = 0.4         # fraction of efficacy lost on strain arrival
    theta_adopt: float = 0.05
    theta_decay: float = 0.005
    theta_up: float = 0.005
    theta_down: float = 0.003
    i_thresh: float = 0.02
    rho_0: float = 0.15

    def validate(self):
        if self.theta_up <= self.theta_down:
            raise ValueError(
                f"theta_up must exceed theta_down, got {self.theta_up} "
                f"<= {self.theta_down}")
        for name in ("innovation_rate", "efficacy_jump", "drift_loss",
                     "theta_adopt", "theta_decay", "theta_up", "theta_down",
                     "i_thresh"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.rho_0 <= 1.0:
            raise ValueError(f"rho_0 must lie in [0,1], got {self.rho_0}")


@dataclass(frozen=True)
class VaccineState:
    v: object    # efficacy in [0,1]
    u: object    # uptake in [0,1], capped at 1 - rho
    rho: object  # rejection fraction in [0,1]


def seed_state(params, n=None):
    def f(v):
        return v if n is None else np.full(n, v)
    return VaccineState(v=f(0.0), u=f(0.0), rho=f(params.rho_0))


def uptake_target(I):
    """Outbreak demand: baseline willingness plus an infection kicker."""
    return 0.3 + 2.0 * I


def step_vaccine(state, params, I, mandate_multiplier, lambda_v_eff,
                 strain_arrived, u01):
    """One week.

    I is the infection level the block observes; mandate_multiplier scales
    the rejection ramp (recession backlash); lambda_v_eff is the innovation
    rate after coupling scalings; u01 is one uniform draw used for the
    innovation event. Strain drift hits efficacy before any same-week
    innovation jump.
    """
    mandate = I > params.i_thresh
    rho = np.where(mandate,
                   state.rho + params.theta_up * mandate_multiplier * (1.0 - state.rho),
                   state.rho - params.theta_down * state.rho)
    rho = np.clip(rho, 0.0, 1.0)

    v = np.where(strain_arrived, state.v * (1.0 - params.drift_loss), state.v)
    p_innov = 1.0 - np.exp(-np.asarray(lambda_v_eff, dtype=float))
    v = np.where(u01 < p_innov, np.minimum(1.0, v + params.efficacy_jump), v)
    v = np.clip(v, 0.0, 1.0)

    u = (state.u + params.theta_adopt * np.maximum(0.0, uptake_target(I) - state.u)
         - params.theta_decay * state.u)
    u = np.minimum(np.clip(u, 0.0, 1.0), 1.0 - rho)
    return VaccineState(v=v, u=u, rho=rho)
