"""Fiscal block: spending, debt deviation, political activation.

Spending responds to recessions through a politically gated channel and to
the epidemic through an emergency channel; debt accumulates spending minus
tax revenue as plain accounting; activation ratchets up fast inside
recessions and leaks away slowly outside them.

Two calibrations ship: a restrained baseline and a us-scale variant with a
doubled recession response, a tripled emergency channel and programme
sunsetting. Parameter selection lives in the config layer.
"""

from dataclasses import dataclass

import numpy as np

WEEKS_PER_QUARTER = 13

# spending responses are quarterly rates consumed weekly
FLOW_BRIDGE = 1.0 / WEEKS_PER_QUARTER

# the recession threshold is quoted against quarterly-averaged gaps; the
# weekly gap runs smaller, so the trigger reads it through this scale
TAU_SCALE = 1.0 / 3.0


@dataclass(frozen=True)
class FiscalParams:
    alpha_g: float = 0.03     # spending response to recession
    tau: float = 0.03         # recession threshold on the output gap
    sigma_g: float = 0.001
    phi_up: float = 0.08
    phi_down: float = 0.005
    phi_0: float = 0.05
    tau_tax: float = 0.3
    alpha_I: float = 0.05     # emergency spending channel
    g_decay: float = 0.0      # programme sunset rate /wk
    d_star: float = 0.0       # carried, referenced by no update rule
    eta_g: float = 0.5        # demand pass-through of spending impulses
    zeta: float = 2.0         # innovation-rate boost per unit spending
    kappa_rho: float = 1.5    # rejection block on the recession channel

    def validate(self):
        if self.phi_up <= self.phi_down:
            raise ValueError(
                f"phi_up must exceed phi_down, got {self.phi_up} <= {self.phi_down}")
        for name in ("alpha_g", "tau", "sigma_g", "phi_up", "phi_down",
                     "tau_tax", "alpha_I", "g_decay", "eta_g", "zeta",
                     "kappa_rho"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.phi_0 <= 1.0:
            raise ValueError(f"phi_0 must lie in [0,1], got {self.phi_0}")


@dataclass(frozen=True)
class FiscalState:
    g: object    # spending, fraction of GDP, >= 0
    d: object    # cumulative debt deviation, sign-free
    phi: object  # political activation in [0,1]


def seed_state(params, n=None):
    def f(v):
        return v if n is None else np.full(n, v)
    return FiscalState(g=f(0.0), d=f(0.0), phi=f(params.phi_0))


def recession_flag(y, params):
    """Activation trigger: the gap below the scaled threshold."""
    return y < -(params.tau * TAU_SCALE)


def step_fiscal(state, params, y, I, rho, xi, m=None, alpha_g_eff=None,
                emergency=None):
    """One week. y, I, rho are the gap, infection and rejection the block
    observes (severed inputs arrive as zeros); xi is one standard normal.
    m, alpha_g_eff and emergency, when given, replace the internally
    computed activation flag, blocked spending rate and emergency inflow
    (the symmetrised-factor path supplies values no plain input reproduces).

    Debt updates with the incoming spending level, so the identity
    d' - d = g - tau_tax*y holds exactly in the level the week started at.
    """
    if m is None:
        m = recession_flag(y, params)
    if alpha_g_eff is None:
        alpha_g_eff = np.maximum(
            0.0, params.alpha_g * (1.0 - params.kappa_rho * rho))
    if emergency is None:
        emergency = params.alpha_I * I * (1.0 - state.phi)
    inflow = (alpha_g_eff * state.phi * m
              + emergency
              + params.sigma_g * xi)
    g = state.g + FLOW_BRIDGE * inflow - params.g_decay * state.g
    g = np.maximum(g, 0.0)
    d = state.d + state.g - params.tau_tax * y
    mf = np.asarray(m, dtype=float)
    phi = (state.phi + params.phi_up * mf * (1.0 - state.phi)
           - params.phi_down * (1.0 - mf) * state.phi)
    phi = np.clip(phi, 0.0, 1.0)
    return FiscalState(g=g, d=d, phi=phi)
