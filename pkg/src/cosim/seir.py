"""Stochastic SEIR block.

Forward Euler with a one-week step, behavioural contact dampening in the
transmission rate, and dominant-strain replacement as a weekly Bernoulli
event with freshly drawn strain characteristics. All step functions accept
scalars or aligned arrays (one lane per particle).
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StrainParams:
    r0: object        # basic reproduction number
    escape: object    # immune escape fraction in [0,1]
    ifr: object       # infection fatality rate in [0,1]


@dataclass(frozen=True)
class SEIRParams:
    sigma: float = 1.41          # incubation rate /wk
    gamma: float = 0.7           # recovery rate /wk
    omega: float = 0.019         # waning rate /wk, R back to S
    alpha: float = 5.0           # behavioural contact response
    arrival_rate: float = 0.025  # strain arrivals /wk
    r0_init: float = 2.5
    ifr_init: float = 0.05

    def validate(self):
        for name in ("sigma", "gamma", "omega", "alpha", "arrival_rate"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class SEIRState:
    S: object
    E: object
    I: object
    R: object
    D: object


def seed_state(n=None):
    """Near disease-free start: S=0.99 with a small exposed/infected seed."""
    def f(v):
        return v if n is None else np.full(n, v)
    return SEIRState(S=f(0.99), E=f(0.005), I=f(0.005), R=f(0.0), D=f(0.0))


def initial_strain(params, n=None):
    def f(v):
        return v if n is None else np.full(n, v)
    return StrainParams(r0=f(params.r0_init), escape=f(0.0), ifr=f(params.ifr_init))


def _clamp_renormalise(S, E, I, R, D):
    """Clamp compartments to [0,1]; when clamping fired, rescale the living
    compartments to 1 - D so the population identity survives. Deaths are
    never rescaled, keeping D monotone."""
    Sc = np.clip(S, 0.0, 1.0)
    Ec = np.clip(E, 0.0, 1.0)
    Ic = np.clip(I, 0.0, 1.0)
    Rc = np.clip(R, 0.0, 1.0)
    Dc = np.clip(D, 0.0, 1.0)
    fired = ((Sc != S) | (Ec != E) | (Ic != I) | (Rc != R) | (Dc != D))
    if np.any(fired):
        living = Sc + Ec + Ic + Rc
        safe = np.where(living > 0.0, living, 1.0)
        scale = np.where(fired, (1.0 - Dc) / safe, 1.0)
        Sc = Sc * scale
        Ec = Ec * scale
        Ic = Ic * scale
        Rc = Rc * scale
    return SEIRState(S=Sc, E=Ec, I=Ic, R=Rc, D=Dc)


def step_seir(state, strain, params, s_eff):
    """One forward-Euler week with effective susceptibles s_eff in [0, S]."""
    beta = strain.r0 * params.gamma
    beta_eff = np.maximum(0.0, beta * (1.0 - params.alpha * state.I))
    new_inf = beta_eff * s_eff * state.I
    incubated = params.sigma * state.E
    recovered = params.gamma * state.I
    waned = params.omega * state.R
    S = state.S - new_inf + waned
    E = state.E + new_inf - incubated
    I = state.I + incubated - recovered
    R = state.R + (1.0 - strain.ifr) * recovered - waned
    D = state.D + strain.ifr * recovered
    return _clamp_renormalise(S, E, I, R, D)


def draw_strain_candidates(gen, n):
    """Candidate strain characteristics for this week, one set per lane.

    Drawn every week regardless of arrival so the stream layout is fixed.
    """
    r0 = gen.uniform(1.5, 6.0, n)
    escape = gen.beta(3.0, 3.0, n)
    ifr = gen.beta(2.0, 40.0, n)
    return r0, escape, ifr


def maybe_strain_arrival(strain, state, params, draws):
    """Weekly dominant-strain replacement.

    draws is (u01, r0_new, escape_new, ifr_new). On arrival the new strain
    takes over and a fraction escape_new of the recovered pool returns to
    susceptible. Returns (strain, state, arrived).
    """
    u01, r0_new, escape_new, ifr_new = draws
    p_arrive = 1.0 - math.exp(-params.arrival_rate)
    arrived = u01 < p_arrive
    r0 = np.where(arrived, r0_new, strain.r0)
    escape = np.where(arrived, escape_new, strain.escape)
    ifr = np.where(arrived, ifr_new, strain.ifr)
    freed = np.where(arrived, escape_new * state.R, 0.0)
    new_state = SEIRState(S=state.S + freed, E=state.E, I=state.I,
                          R=state.R - freed, D=state.D)
    return StrainParams(r0=r0, escape=escape, ifr=ifr), new_state, arrived
