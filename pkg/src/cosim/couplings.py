"""Coupling fabric: the cross-block factor functions, habituation schedules,
the population/labour identity, symmetrisation, and the asymmetry audit.

Eleven factors connect the blocks. f3 (outbreak demand for vaccination) is
embedded in the vaccine block's uptake target and never appears as a
separate node; the other ten are explicit. Hard factors modify states; the
registry records each one's functional form and input domain so the audit
can integrate it independently of the simulation loop.

Factor map, in the order the weekly loop applies them:
    f1  epidemic -> economy   demand drag      delta r_n = -eta_d(t) * I
    f2  epidemic -> economy   cost push        delta eps_s = +eta_s(t) * I
    f3  epidemic -> vaccine   uptake target    (embedded, vaccine block)
    f4  vaccine  -> epidemic  protection       s_eff = clamp(S - v*u*(1-rho), 0, S)
    f5  economy  -> vaccine   backlash         theta_up scale 1 + 5*max(0, -y)
    f6  economy  -> vaccine   funding          lambda_v scale max(0.5, 1 - 0.4*i)
    f7  economy  -> fiscal    recession flag   1[y < -tau_eff]
    f8  fiscal   -> economy   demand flow      delta r_n = +eta_g * max(flow, 0)
    f9  fiscal   -> vaccine   procurement      lambda_v scale 1 + zeta*g
    f10 vaccine  -> fiscal    spending block   alpha_g_eff = max(0, alpha_g*(1 - kappa_rho*rho))
    f11 epidemic -> fiscal    emergency        inflow alpha_I * I * (1 - phi)
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .fiscal import TAU_SCALE

# fraction of the appropriations flow that shows up as demand. Transfers
# leak into savings and imports; spend-out studies of pandemic-era cheques
# put the short-run consumption response just under half the headline
# amount.
DEMAND_SHARE = 0.47

THREE_NARRATIVE_FACTORS = ("f1", "f2", "f3", "f4", "f5", "f6")
FOUR_NARRATIVE_FACTORS = THREE_NARRATIVE_FACTORS + ("f7", "f8", "f9", "f10", "f11")
EMBEDDED_FACTORS = ("f3",)


class ZeroFactorError(Exception):
    """The factor vanishes identically on its sampled domain."""


class UnboundedDomainError(Exception):
    """Reflection undefined: one-sided or unbounded input domain."""


@dataclass(frozen=True)
class HabituationParams:
    h: float = 0.02
    eta_d_floor: float = 0.02
    eta_d_amplitude: float = 0.08
    eta_s_floor: float = 0.01
    eta_s_amplitude: float = 0.04  # unprinted upstream; half the demand side
    xi: float = 0.3                # absenteeism share of infected workers

    def validate(self):
        for name in ("h", "eta_d_floor", "eta_d_amplitude", "eta_s_floor",
                     "eta_s_amplitude", "xi"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


def demand_elasticity(t, hab):
    """eta_d(t): decays from floor+amplitude to the floor as populations
    adapt to endemic disease."""
    return hab.eta_d_floor + hab.eta_d_amplitude * math.exp(-hab.h * t)


def supply_elasticity(t, hab):
    return hab.eta_s_floor + hab.eta_s_amplitude * math.exp(-hab.h * t)


def labour_supply(D, I, hab):
    """Survivors minus absent infected workers; reporting only, the macro
    block absorbs labour into its supply shock."""
    return (1.0 - D) - hab.xi * I


def protection_shield(S, v, u, rho):
    """f4: effective susceptibles after vaccine protection."""
    return np.clip(S - v * u * (1.0 - rho), 0.0, S)


def mandate_multiplier(y):
    """f5: recession backlash on the rejection ramp."""
    return 1.0 + 5.0 * np.maximum(0.0, -y)


def funding_scale(i):
    """f6: innovation-rate scaling from the policy rate."""
    return np.maximum(0.5, 1.0 - 0.4 * i)


@dataclass(frozen=True)
class FactorSpec:
    id: str
    source: str
    target: str
    kind: str                 # "hard" (state-modifying) or "soft" (weight)
    evaluator: object         # callable, (n, d) array -> (n,)
    inputs: tuple             # qualified labels, e.g. ("epidemic.I",)
    outputs: tuple
    domain: tuple             # ((lo, hi), ...) per input dimension

    def __call__(self, x):
        return self.evaluator(np.atleast_2d(np.asarray(x, dtype=float)))


def _reflection(domain):
    for lo, hi in domain:
        if lo is None or hi is None or not (math.isfinite(lo) and math.isfinite(hi)):
            raise UnboundedDomainError(
                f"cannot reflect over unbounded domain {domain}")

    def reflect(x):
        out = np.empty_like(x)
        for j, (lo, hi) in enumerate(domain):
            out[:, j] = (lo + hi) - x[:, j]
        return out

    return reflect


def symmetrise(factor):
    """Even part of the factor about its domain's reflection.

    Symmetric-about-zero domains reflect through -x; bounded [lo, hi]
    domains through lo+hi-x (the same formula). Idempotent pointwise."""
    reflect = _reflection(factor.domain)
    inner = factor.evaluator

    def even_part(x):
        return 0.5 * (inner(x) + inner(reflect(x)))

    new_id = factor.id if factor.id.endswith("_sym") else factor.id + "_sym"
    return replace(factor, id=new_id, evaluator=even_part)


def asymmetry_ratio(factor, samples=4096):
    """Positive share of the factor's mass over a symmetric midpoint grid.

    Returns sum(max(f,0)) / sum(|f|) over a uniform product grid of the
    input domain; 0.5 marks a perfectly symmetric factor. The grid pairs
    each point with its reflection, so odd factors come out at exactly
    one half up to float summation order."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    reflect_check = _reflection(factor.domain)  # also validates boundedness
    del reflect_check
    d = len(factor.domain)
    m = max(2, int(round(samples ** (1.0 / d))))
    axes = [lo + (np.arange(m) + 0.5) * (hi - lo) / m for lo, hi in factor.domain]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([ax.ravel() for ax in mesh])
    vals = np.asarray(factor.evaluator(points), dtype=float)
    pos = float(vals[vals > 0.0].sum())
    neg = float(-vals[vals < 0.0].sum())
    total = pos + neg
    if total == 0.0:
        raise ZeroFactorError(f"{factor.id} is identically zero on its domain")
    return pos / total


def asymmetry_profile(factor, samples=4096):
    """Ratio plus a sign-definiteness flag, for the audit table."""
    try:
        ratio = asymmetry_ratio(factor, samples=samples)
    except ZeroFactorError:
        return {"id": factor.id, "outcome": "zero-factor"}
    sign_definite = ratio in (0.0, 1.0)
    return {"id": factor.id, "outcome": "ratio", "ratio": ratio,
            "sign_definite": sign_definite}


def build_factor_registry(hab, fiscal_params=None, narratives=3, t=0.0):
    """Explicit factor nodes at a frozen habituation time t.

    Returns {id: FactorSpec} for the narrative count; f3 is embedded and
    deliberately absent. fiscal_params is required for narratives=4."""
    eta_d = demand_elasticity(t, hab)
    eta_s = supply_elasticity(t, hab)
    reg = {
        "f1": FactorSpec(
            id="f1", source="epidemic", target="economy", kind="hard",
            evaluator=lambda x: -eta_d * x[:, 0],
            inputs=("epidemic.I",), outputs=("economy.r_n",),
            domain=((0.0, 1.0),)),
        "f2": FactorSpec(
            id="f2", source="epidemic", target="economy", kind="hard",
            evaluator=lambda x: eta_s * x[:, 0],
            inputs=("epidemic.I",), outputs=("economy.eps_s",),
            domain=((0.0, 1.0),)),
        "f4": FactorSpec(
            id="f4", source="vaccine", target="epidemic", kind="hard",
            evaluator=lambda x: protection_shield(x[:, 0], x[:, 1], x[:, 2], x[:, 3]),
            inputs=("epidemic.S", "vaccine.v", "vaccine.u", "vaccine.rho"),
            outputs=("epidemic.S",),
            domain=((0.0, 1.0),) * 4),
        "f5": FactorSpec(
            id="f5", source="economy", target="vaccine", kind="hard",
            evaluator=lambda x: mandate_multiplier(x[:, 0]),
            inputs=("economy.y",), outputs=("vaccine.rho",),
            domain=((-1.0, 1.0),)),
        "f6": FactorSpec(
            id="f6", source="economy", target="vaccine", kind="hard",
            evaluator=lambda x: funding_scale(x[:, 0]),
            inputs=("economy.i",), outputs=("vaccine.v",),
            domain=((-1.0, 1.0),)),
    }
    if narratives == 4:
        if fiscal_params is None:
            raise ValueError("fiscal_params required for the 4-narrative registry")
        fp = fiscal_params
        tau_eff = fp.tau * TAU_SCALE
        reg.update({
            "f7": FactorSpec(
                id="f7", source="economy", target="fiscal", kind="hard",
                evaluator=lambda x: (x[:, 0] < -tau_eff).astype(float),
                inputs=("economy.y",), outputs=("fiscal.g", "fiscal.phi"),
                domain=((-1.0, 1.0),)),
            "f8": FactorSpec(
                id="f8", source="fiscal", target="economy", kind="hard",
                evaluator=lambda x: fp.eta_g * np.maximum(0.0, x[:, 0]),
                inputs=("fiscal.g",), outputs=("economy.r_n",),
                domain=((0.0, 0.2),)),
            "f9": FactorSpec(
                id="f9", source="fiscal", target="vaccine", kind="hard",
                evaluator=lambda x: 1.0 + fp.zeta * x[:, 0],
                inputs=("fiscal.g",), outputs=("vaccine.v",),
                domain=((0.0, 0.2),)),
            "f10": FactorSpec(
                id="f10", source="vaccine", target="fiscal", kind="hard",
                evaluator=lambda x: np.maximum(0.0, fp.alpha_g * (1.0 - fp.kappa_rho * x[:, 0])),
                inputs=("vaccine.rho",), outputs=("fiscal.g",),
                domain=((0.0, 1.0),)),
            "f11": FactorSpec(
                id="f11", source="epidemic", target="fiscal", kind="hard",
                evaluator=lambda x: fp.alpha_I * x[:, 0] * (1.0 - x[:, 1]),
                inputs=("epidemic.I", "fiscal.phi"), outputs=("fiscal.g",),
                domain=((0.0, 1.0), (0.0, 1.0))),
        })
    return reg


@dataclass(frozen=True)
class CouplingOutput:
    """Per-week coupling values, one lane per particle.

    delta_r_n folds f1 and f8; lambda_v_eff folds f6 and f9 onto the base
    innovation rate. fiscal_y/fiscal_I/fiscal_rho are the (possibly
    severed) inputs the fiscal step reads; fiscal_m, alpha_g_eff and
    emergency pin the fiscal step to the same snapshot the f8 flow was
    built from (and carry the reflected forms when the run symmetrises).
    vaccine_I is the infection level the vaccine block sees through the
    embedded f3 channel."""
    delta_r_n: object
    delta_eps_s: object
    s_eff: object
    mandate_multiplier: object
    lambda_v_eff: object
    vaccine_I: object
    labour: object
    fiscal_y: object = None
    fiscal_I: object = None
    fiscal_rho: object = None
    fiscal_m: object = None
    alpha_g_eff: object = None
    emergency: object = None


def eval_couplings(week, hab, enabled, y, i_rate, I, S, v, u, rho,
                   vaccine_params, fiscal_params=None, g=None,
                   phi=None, D=None, symmetrised=False):
    """Evaluate every enabled factor on the week-start state.

    All factors read the same snapshot; masked factors contribute their
    neutral element (zero addition, unit scale, raw S, severed zero
    input). With symmetrised=True each enabled explicit factor is replaced
    by its even part about the domain reflection used by the audit."""
    zeros = np.zeros_like(np.asarray(I, dtype=float))

    def sym2(f_at, f_at_reflected):
        return 0.5 * (f_at + f_at_reflected)

    # f1, f2: epidemic shocks into the economy, habituating elasticities
    eta_d = demand_elasticity(week, hab)
    eta_s = supply_elasticity(week, hab)
    if "f1" in enabled:
        d_r_n = sym2(-eta_d * I, -eta_d * (1.0 - I)) if symmetrised else -eta_d * I
    else:
        d_r_n = zeros.copy()
    if "f2" in enabled:
        d_eps_s = sym2(eta_s * I, eta_s * (1.0 - I)) if symmetrised else eta_s * I
    else:
        d_eps_s = zeros.copy()

    # f4: vaccine protection shields susceptibles
    if "f4" in enabled:
        if symmetrised:
            s_eff = sym2(protection_shield(S, v, u, rho),
                         protection_shield(1.0 - S, 1.0 - v, 1.0 - u, 1.0 - rho))
        else:
            s_eff = protection_shield(S, v, u, rho)
    else:
        s_eff = S

    # f5: recession backlash on the rejection ramp
    if "f5" in enabled:
        mult = sym2(mandate_multiplier(y), mandate_multiplier(-y)) \
            if symmetrised else mandate_multiplier(y)
    else:
        mult = np.ones_like(zeros)

    # f6 and f9 scale the innovation rate multiplicatively
    lam_scale = np.ones_like(zeros)
    if "f6" in enabled:
        lam_scale = sym2(funding_scale(i_rate), funding_scale(-i_rate)) \
            if symmetrised else funding_scale(i_rate)
    if "f9" in enabled and fiscal_params is not None and g is not None:
        lo, hi = 0.0, 0.2
        raw = 1.0 + fiscal_params.zeta * g
        refl = 1.0 + fiscal_params.zeta * (lo + hi - g)
        lam_scale = lam_scale * (sym2(raw, refl) if symmetrised else raw)
    lambda_v_eff = vaccine_params.innovation_rate * lam_scale

    vaccine_I = I if "f3" in enabled else zeros

    out = {
        "delta_r_n": d_r_n,
        "delta_eps_s": d_eps_s,
        "s_eff": s_eff,
        "mandate_multiplier": mult,
        "lambda_v_eff": lambda_v_eff,
        "vaccine_I": vaccine_I,
        "labour": labour_supply(D, I, hab) if D is not None else None,
    }

    if fiscal_params is not None:
        fp = fiscal_params
        tau_eff = fp.tau * TAU_SCALE
        fis_y = y if "f7" in enabled else zeros
        fis_I = I if "f11" in enabled else zeros
        fis_rho = rho if "f10" in enabled else zeros
        out["fiscal_y"], out["fiscal_I"], out["fiscal_rho"] = fis_y, fis_I, fis_rho

        # the gate, the rejection block and the emergency channel, each
        # evaluated on its severed-aware input (even part when symmetrised)
        if symmetrised:
            m = sym2((fis_y < -tau_eff).astype(float),
                     (-fis_y < -tau_eff).astype(float))
            a_raw = np.maximum(0.0, fp.alpha_g * (1.0 - fp.kappa_rho * fis_rho))
            a_ref = np.maximum(0.0, fp.alpha_g * (1.0 - fp.kappa_rho * (1.0 - fis_rho)))
            a_eff = sym2(a_raw, a_ref)
            phi_arr = phi if phi is not None else np.full_like(zeros, fp.phi_0)
            emergency = sym2(fp.alpha_I * fis_I * (1.0 - phi_arr),
                             fp.alpha_I * (1.0 - fis_I) * phi_arr)
        else:
            m = (fis_y < -tau_eff).astype(float)
            a_eff = np.maximum(0.0, fp.alpha_g * (1.0 - fp.kappa_rho * fis_rho))
            phi_arr = phi if phi is not None else np.full_like(zeros, fp.phi_0)
            emergency = fp.alpha_I * fis_I * (1.0 - phi_arr)
        out["fiscal_m"], out["alpha_g_eff"] = m, a_eff
        out["emergency"] = emergency

        # f8: the week's new appropriations feed demand. The input is the
        # spending flow at quarterly rate (what the fiscal block adds to g
        # this week, pre-noise), not the accumulated programme stock: a
        # permanent programme is not a permanent demand boost, but every
        # fresh bill is a fresh one.
        if "f8" in enabled:
            flow = a_eff * phi_arr * m + emergency
            gain = fp.eta_g * DEMAND_SHARE
            raw = gain * np.maximum(0.0, flow)
            if symmetrised:
                lo, hi = 0.0, 0.2
                refl = gain * np.maximum(0.0, (lo + hi) - flow)
                d_r_n = d_r_n + sym2(raw, refl)
            else:
                d_r_n = d_r_n + raw
            out["delta_r_n"] = d_r_n
    return CouplingOutput(**out)
