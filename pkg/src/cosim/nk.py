"""Linearised three-equation macro block.

Forward-looking IS curve, Phillips curve and a Taylor rule, calibrated at
quarterly frequency and stepped weekly. The rational-expectations solution
is computed once by undetermined coefficients on the minimum-state-variable
guess x_t = A s_t, where x = (y, pi, i) and s = (eps_s, r_n, eps_m); after
that a step is a matrix multiply.

Conventions fixed here and relied on elsewhere:
  * y, pi, i are fractional deviations from steady state (0.01 = 1%).
  * eps_s is carried in output-gap (marginal cost) units and enters the
    Phillips curve through the slope: the cost-push term is kappa*(y+eps_s).
  * expectations are over (y, pi, i) only; whatever other blocks feed in
    arrives as exogenous shifts of the shock states, never inside the
    solved expectations.
  * weekly conversion: persistences as rho**(1/13), shock s.d. as
    sqrt(1/13) times the quarterly value; Taylor coefficients, beta and
    kappa stay at their quarterly values (phi_y deliberately unscaled).
"""

import math
from dataclasses import dataclass

import numpy as np

WEEKS_PER_QUARTER = 13

# shock-state additions coming from other blocks are quarterly-rate
# quantities; each week consumes one thirteenth of the quarter's worth
COUPLING_BRIDGE = 1.0 / WEEKS_PER_QUARTER

# block-local innovations are scaled a further 13**-1.5 beyond the stored
# weekly s.d. (net sigma_q/169): idiosyncratic macro noise must stay
# subordinate to the coupling channels or it swamps the terminal
# co-movements the coupled system is supposed to exhibit; a shocks-only run
# then shows terminal output-gap dispersion of a few hundredths of a percent
INNOVATION_BRIDGE = WEEKS_PER_QUARTER ** -1.5


class DeterminacyError(Exception):
    """The calibration admits no unique stable MSV solution."""


@dataclass(frozen=True)
class NKParams:
    beta: float = 0.99
    kappa: float = 0.024
    sigma_inv: float = 1.0
    phi_pi: float = 1.5
    phi_y: float = 0.125
    rho_s: float = 0.9
    rho_r: float = 0.8
    sigma_s: float = 0.005
    sigma_r: float = 0.005
    sigma_m: float = 0.0025

    def validate(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0,1), got {self.beta}")
        for name in ("sigma_s", "sigma_r", "sigma_m"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("rho_s", "rho_r"):
            rho = getattr(self, name)
            if not 0.0 <= rho < 1.0:
                raise ValueError(f"{name} must lie in [0,1), got {rho}")
        if self.sigma_inv <= 0.0:
            raise ValueError(f"sigma_inv must be > 0, got {self.sigma_inv}")


@dataclass(frozen=True)
class NKState:
    """Fields may be scalars or aligned arrays (one lane per particle)."""
    y: object
    pi: object
    i: object
    eps_s: object
    r_n: object
    eps_m: object


def zero_state(n=None):
    z = 0.0 if n is None else np.zeros(n)
    make = (lambda: z) if n is None else (lambda: np.zeros(n))
    return NKState(y=make(), pi=make(), i=make(), eps_s=make(), r_n=make(),
                   eps_m=make())


@dataclass(frozen=True)
class NKSolution:
    policy: np.ndarray  # maps current shock states to (y, pi, i)
    P: np.ndarray       # maps lagged shock states to (y, pi, i)
    Q: np.ndarray       # maps unit-variance innovations to (y, pi, i)
    rho_s_w: float
    rho_r_w: float
    sigma_s_w: float
    sigma_r_w: float
    sigma_m_w: float


def _policy_column(p, rho, forcing):
    """Solve one column of the policy matrix.

    For a shock with persistence rho and forcing direction
    (d_s, d_r, d_m), undetermined coefficients reduce to a 3x3 linear
    system in the column (y, pi, i):

        -kappa*y + (1 - beta*rho)*pi           = kappa*d_s
        (1-rho)*y - sigma_inv*rho*pi + s_inv*i = sigma_inv*d_r
        -phi_y*y - phi_pi*pi + i               = d_m
    """
    d_s, d_r, d_m = forcing
    M = np.array([
        [-p.kappa, 1.0 - p.beta * rho, 0.0],
        [1.0 - rho, -p.sigma_inv * rho, p.sigma_inv],
        [-p.phi_y, -p.phi_pi, 1.0],
    ])
    b = np.array([p.kappa * d_s, p.sigma_inv * d_r, d_m])
    try:
        return np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:
        raise DeterminacyError(
            f"undetermined-coefficient system singular at persistence {rho}: {exc}")


def solve_msv(params):
    """Solve the model once; returns an immutable solution bundle."""
    params.validate()
    slack = params.kappa * (params.phi_pi - 1.0) + (1.0 - params.beta) * params.phi_y
    if slack <= 0.0:
        raise DeterminacyError(
            "Taylor principle violated: need "
            "kappa*(phi_pi - 1) + (1 - beta)*phi_y > 0, got "
            f"{slack:.6g}")
    rho_s_w = params.rho_s ** (1.0 / WEEKS_PER_QUARTER)
    rho_r_w = params.rho_r ** (1.0 / WEEKS_PER_QUARTER)
    policy = np.column_stack([
        _policy_column(params, rho_s_w, (1.0, 0.0, 0.0)),
        _policy_column(params, rho_r_w, (0.0, 1.0, 0.0)),
        _policy_column(params, 0.0, (0.0, 0.0, 1.0)),
    ])
    scale = math.sqrt(1.0 / WEEKS_PER_QUARTER)
    sig_w = np.array([params.sigma_s, params.sigma_r, params.sigma_m]) * scale
    P = policy @ np.diag([rho_s_w, rho_r_w, 0.0])
    Q = policy @ np.diag(sig_w)
    for arr in (policy, P, Q):
        arr.setflags(write=False)
    return NKSolution(policy=policy, P=P, Q=Q, rho_s_w=rho_s_w, rho_r_w=rho_r_w,
                      sigma_s_w=sig_w[0], sigma_r_w=sig_w[1], sigma_m_w=sig_w[2])


def step_nk(state, sol, d_eps_s=0.0, d_r_n=0.0, innovations=(0.0, 0.0, 0.0)):
    """Advance one week.

    d_eps_s and d_r_n are quarterly-rate additions from the coupling fabric
    (cost-push and natural-rate channels); innovations are three standard
    normal draws. Additions land in the shock states, so they both move
    (y, pi, i) this week and persist through the AR memory.
    """
    e1, e2, e3 = innovations
    eps_s = (sol.rho_s_w * state.eps_s
             + INNOVATION_BRIDGE * sol.sigma_s_w * e1
             + COUPLING_BRIDGE * d_eps_s)
    r_n = (sol.rho_r_w * state.r_n
           + INNOVATION_BRIDGE * sol.sigma_r_w * e2
           + COUPLING_BRIDGE * d_r_n)
    eps_m = INNOVATION_BRIDGE * sol.sigma_m_w * e3
    A = sol.policy
    y = A[0, 0] * eps_s + A[0, 1] * r_n + A[0, 2] * eps_m
    pi = A[1, 0] * eps_s + A[1, 1] * r_n + A[1, 2] * eps_m
    i = A[2, 0] * eps_s + A[2, 1] * r_n + A[2, 2] * eps_m
    return NKState(y=y, pi=pi, i=i, eps_s=eps_s, r_n=r_n, eps_m=eps_m)


def equilibrium_residuals(params, sol, eps_s, r_n, eps_m):
    """Residuals of the three equilibrium conditions at given shock states.

    Expectations are implied by the weekly AR(1) structure:
    E[x'] = policy @ diag(rho_s_w, rho_r_w, 0) @ s. Returns an array shaped
    (3, ...) ordered (phillips, is, taylor).
    """
    s = np.stack([np.asarray(eps_s, dtype=float),
                  np.asarray(r_n, dtype=float),
                  np.asarray(eps_m, dtype=float)])
    x = sol.policy @ s
    ex_next = sol.P @ s
    y, pi, i = x[0], x[1], x[2]
    ey, epi = ex_next[0], ex_next[1]
    r_phillips = pi - params.beta * epi - params.kappa * (y + s[0])
    r_is = y - ey + params.sigma_inv * (i - epi - s[1])
    r_taylor = i - params.phi_pi * pi - params.phi_y * y - s[2]
    return np.stack([r_phillips, r_is, r_taylor])
