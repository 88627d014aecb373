"""Particle-ensemble engine over the composed model.

One run evolves N particles for T weeks. Every particle advances through
the same weekly order: couplings are evaluated on the week-start state,
then the strain-arrival event, the epidemic step, the vaccine step, the
macro step, and (in four-block runs) the fiscal step all consume that
snapshot. Randomness comes from counter-based streams keyed by
(seed, week, subsystem), so any particle's draws are reproducible in
isolation and results are independent of worker count: threads only write
disjoint row blocks of preallocated arrays.

Weekly draw layout, fixed regardless of which factors are enabled so that
masked and unmasked runs see identical shock realisations:

    nk        standard_normal (3, N)
    strain    uniform (N,), then candidate draws (r0, escape, ifr)
    vaccine   uniform (N,)
    fiscal    standard_normal (N,)   [four-block runs only]
    resample  uniform ()             [drawn only when triggered]
"""

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import couplings as cp
from .composition import Identification, NarrativeCospan, compose
from .couplings import eval_couplings, labour_supply
from .fiscal import FiscalState, step_fiscal
from .nk import NKState, solve_msv, step_nk
from .rng import stream
from .seir import (SEIRState, StrainParams, draw_strain_candidates,
                   initial_strain, maybe_strain_arrival, seed_state,
                   step_seir)
from .vaccine import VaccineState, step_vaccine
from .vaccine import seed_state as vaccine_seed_state

RESAMPLE_FRACTION = 0.5

ECONOMY_INTERIOR = ("y", "pi", "i", "eps_s", "r_n", "eps_m", "L")
ECONOMY_INTERFACE = ("y", "i", "r_n", "eps_s")
EPIDEMIC_INTERIOR = ("S", "E", "I", "R", "D", "N")
EPIDEMIC_INTERFACE = ("S", "I")
VACCINE_INTERIOR = ("v", "u", "rho")
VACCINE_INTERFACE = ("v", "u", "rho")
FISCAL_INTERIOR = ("g", "d", "phi")
FISCAL_INTERFACE = ("g", "d", "phi")

STATE_VARIABLES_3N = (
    "y", "pi", "i", "eps_s", "r_n", "eps_m",
    "S", "E", "I", "R", "D",
    "strain_r0", "strain_escape", "strain_ifr",
    "v", "u", "rho",
)
DERIVED_VARIABLES = ("L", "strain_arrived")
FISCAL_VARIABLES = ("g", "d", "phi")


class EmptySupportError(ValueError):
    """Every particle got zero weight."""


class InjectionError(ValueError):
    """A hand-built trajectory failed validation."""


def ess(weights):
    """Effective sample size 1 / sum(w^2) of normalized weights."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-d array")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    total = float(w.sum())
    if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"weights must sum to 1, got {total}")
    return 1.0 / float(np.sum(w * w))


def systematic_resample(weights, u01):
    """Systematic resampling: one uniform offset, N evenly spaced pointers
    through the cumulative weights. Returns selected indices."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    if not 0.0 <= u01 < 1.0:
        raise ValueError(f"u01 must lie in [0, 1), got {u01}")
    positions = (np.arange(n) + u01) / n
    cumulative = np.cumsum(w)
    cumulative[-1] = 1.0  # guard float shortfall in the last bin
    return np.searchsorted(cumulative, positions, side="right").astype(np.intp)


@dataclass
class ParticleEnsemble:
    """Current-week cross-section: per-variable arrays plus weights."""
    variables: dict
    weights: np.ndarray
    seed: int
    week: int


def resample_if_needed(ensemble, u01=None):
    """Resample when ESS drops below half the particle count."""
    n = ensemble.weights.size
    if ess(ensemble.weights) >= RESAMPLE_FRACTION * n:
        return ensemble
    if u01 is None:
        u01 = float(stream(ensemble.seed, ensemble.week, "resample").uniform())
    idx = systematic_resample(ensemble.weights, u01)
    return ParticleEnsemble(
        variables={k: v[idx].copy() for k, v in ensemble.variables.items()},
        weights=np.full(n, 1.0 / n),
        seed=ensemble.seed,
        week=ensemble.week,
    )


@dataclass
class TrajectoryStore:
    """Full run output: (N, T+1) arrays per variable, final weights, and
    the configuration that produced them."""
    data: dict
    weights: np.ndarray
    seed: int
    config: object
    label: str = "coupled"
    factor_mask: tuple = ()

    @property
    def n_particles(self):
        return int(self.weights.size)

    @property
    def weeks(self):
        first = next(iter(self.data.values()))
        return int(first.shape[1] - 1)

    @property
    def variables(self):
        return tuple(self.data.keys())

    def terminal(self, var):
        return self.data[var][:, -1]


def build_narratives(config):
    """Instantiate the blocks with their decorations (params + solver)."""
    sol = solve_msv(config.nk)
    econ = NarrativeCospan(
        name="economy", interior=ECONOMY_INTERIOR, interface=ECONOMY_INTERFACE,
        decoration={"params": config.nk, "solution": sol})
    epi = NarrativeCospan(
        name="epidemic", interior=EPIDEMIC_INTERIOR, interface=EPIDEMIC_INTERFACE,
        decoration={"params": config.epi})
    vax = NarrativeCospan(
        name="vaccine", interior=VACCINE_INTERIOR, interface=VACCINE_INTERFACE,
        decoration={"params": config.vax})
    out = [econ, epi, vax]
    if config.narratives == 4:
        out.append(NarrativeCospan(
            name="fiscal", interior=FISCAL_INTERIOR, interface=FISCAL_INTERFACE,
            decoration={"params": config.fiscal}))
    return out


def build_model(config):
    """Compose the blocks, identify population with labour, and attach the
    enabled explicit factors."""
    narratives = build_narratives(config)
    registry = cp.build_factor_registry(
        config.habituation,
        fiscal_params=config.fiscal if config.narratives == 4 else None,
        narratives=config.narratives)
    enabled = [registry[fid] for fid in sorted(registry, key=_factor_order)
               if fid in config.factor_mask]
    idents = [Identification(left=("epidemic", "N"), right=("economy", "L"))]
    return compose(narratives, identifications=idents, factors=enabled)


def _factor_order(fid):
    return int(fid.lstrip("f").split("_")[0])


def _chunk_slices(n, workers):
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_simulation(model, config, workers=1, symmetrised=False,
                   weekly_likelihood=None, label=None):
    """Advance the full ensemble and return its trajectory store.

    symmetrised=True replaces every enabled explicit factor with its even
    part about the audit reflection. weekly_likelihood, when given, maps
    (week, values_dict) to nonnegative per-particle factors; weights are
    updated each week and systematically resampled when ESS falls below
    half the ensemble.
    """
    n, T, seed = config.particles, config.weeks, config.seed
    fiscal_on = config.narratives == 4
    enabled = frozenset(config.factor_mask)
    hab = config.habituation
    econ = model.narrative("economy").decoration
    sol = econ["solution"]
    eparams = model.narrative("epidemic").decoration["params"]
    vparams = model.narrative("vaccine").decoration["params"]
    fparams = model.narrative("fiscal").decoration["params"] if fiscal_on else None

    state_vars = STATE_VARIABLES_3N + (FISCAL_VARIABLES if fiscal_on else ())
    all_vars = state_vars + DERIVED_VARIABLES

    hist = {v: np.empty((n, T + 1)) for v in all_vars}

    cur = {v: np.zeros(n) for v in state_vars}
    nxt = {v: np.empty(n) for v in state_vars}
    seir0 = seed_state(n)
    strain0 = initial_strain(eparams, n)
    vax0 = vaccine_seed_state(vparams, n)
    cur["S"], cur["E"], cur["I"] = seir0.S, seir0.E, seir0.I
    cur["R"], cur["D"] = seir0.R, seir0.D
    cur["strain_r0"] = strain0.r0
    cur["strain_escape"] = strain0.escape
    cur["strain_ifr"] = strain0.ifr
    cur["v"], cur["u"], cur["rho"] = vax0.v, vax0.u, vax0.rho
    if fiscal_on:
        cur["phi"] = np.full(n, fparams.phi_0)
    for v in state_vars:
        hist[v][:, 0] = cur[v]
    hist["L"][:, 0] = labour_supply(cur["D"], cur["I"], hab)
    hist["strain_arrived"][:, 0] = 0.0

    weights = np.full(n, 1.0 / n)
    chunks = _chunk_slices(n, workers)
    pool = ThreadPoolExecutor(max_workers=len(chunks)) if len(chunks) > 1 else None

    try:
        for t in range(T):
            normals = stream(seed, t, "nk").standard_normal((3, n))
            gen_strain = stream(seed, t, "strain")
            u_arrival = gen_strain.uniform(size=n)
            r0_cand, esc_cand, ifr_cand = draw_strain_candidates(gen_strain, n)
            u_vax = stream(seed, t, "vaccine").uniform(size=n)
            xi = stream(seed, t, "fiscal").standard_normal(n) if fiscal_on else None

            def body(sl, t=t, normals=normals, u_arrival=u_arrival,
                     r0_cand=r0_cand, esc_cand=esc_cand, ifr_cand=ifr_cand,
                     u_vax=u_vax, xi=xi):
                g_sl = cur["g"][sl] if fiscal_on else None
                cpl = eval_couplings(
                    week=t, hab=hab, enabled=enabled,
                    y=cur["y"][sl], i_rate=cur["i"][sl], I=cur["I"][sl],
                    S=cur["S"][sl], v=cur["v"][sl], u=cur["u"][sl],
                    rho=cur["rho"][sl], vaccine_params=vparams,
                    fiscal_params=fparams, g=g_sl,
                    phi=cur["phi"][sl] if fiscal_on else None,
                    symmetrised=symmetrised)

                strain = StrainParams(r0=cur["strain_r0"][sl],
                                      escape=cur["strain_escape"][sl],
                                      ifr=cur["strain_ifr"][sl])
                seir = SEIRState(S=cur["S"][sl], E=cur["E"][sl], I=cur["I"][sl],
                                 R=cur["R"][sl], D=cur["D"][sl])
                strain, seir, arrived = maybe_strain_arrival(
                    strain, seir, eparams,
                    (u_arrival[sl], r0_cand[sl], esc_cand[sl], ifr_cand[sl]))
                # shield applies to the post-arrival susceptible pool only
                # through the week-start evaluation; re-clip to stay within it
                s_eff = np.minimum(cpl.s_eff, seir.S)
                seir_next = step_seir(seir, strain, eparams, s_eff)

                arrived_vax = arrived if "f3" in enabled else np.zeros(arrived.size, bool)
                vax = VaccineState(v=cur["v"][sl], u=cur["u"][sl], rho=cur["rho"][sl])
                vax_next = step_vaccine(
                    vax, vparams, I=cpl.vaccine_I,
                    mandate_multiplier=cpl.mandate_multiplier,
                    lambda_v_eff=cpl.lambda_v_eff, strain_arrived=arrived_vax,
                    u01=u_vax[sl])

                nk = NKState(y=cur["y"][sl], pi=cur["pi"][sl], i=cur["i"][sl],
                             eps_s=cur["eps_s"][sl], r_n=cur["r_n"][sl],
                             eps_m=cur["eps_m"][sl])
                nk_next = step_nk(nk, sol, d_eps_s=cpl.delta_eps_s,
                                  d_r_n=cpl.delta_r_n,
                                  innovations=(normals[0, sl], normals[1, sl],
                                               normals[2, sl]))

                if fiscal_on:
                    fis = FiscalState(g=g_sl, d=cur["d"][sl], phi=cur["phi"][sl])
                    fis_next = step_fiscal(
                        fis, fparams, y=cpl.fiscal_y, I=cpl.fiscal_I,
                        rho=cpl.fiscal_rho, xi=xi[sl], m=cpl.fiscal_m,
                        alpha_g_eff=cpl.alpha_g_eff, emergency=cpl.emergency)
                    nxt["g"][sl], nxt["d"][sl] = fis_next.g, fis_next.d
                    nxt["phi"][sl] = fis_next.phi

                nxt["y"][sl], nxt["pi"][sl], nxt["i"][sl] = (
                    nk_next.y, nk_next.pi, nk_next.i)
                nxt["eps_s"][sl], nxt["r_n"][sl], nxt["eps_m"][sl] = (
                    nk_next.eps_s, nk_next.r_n, nk_next.eps_m)
                nxt["S"][sl], nxt["E"][sl], nxt["I"][sl] = (
                    seir_next.S, seir_next.E, seir_next.I)
                nxt["R"][sl], nxt["D"][sl] = seir_next.R, seir_next.D
                nxt["strain_r0"][sl] = strain.r0
                nxt["strain_escape"][sl] = strain.escape
                nxt["strain_ifr"][sl] = strain.ifr
                nxt["v"][sl], nxt["u"][sl], nxt["rho"][sl] = (
                    vax_next.v, vax_next.u, vax_next.rho)

                for var in state_vars:
                    hist[var][sl, t + 1] = nxt[var][sl]
                hist["L"][sl, t + 1] = labour_supply(seir_next.D, seir_next.I, hab)
                hist["strain_arrived"][sl, t + 1] = arrived.astype(float)

            if pool is None:
                body(chunks[0])
            else:
                list(pool.map(body, chunks))

            cur, nxt = nxt, cur

            if weekly_likelihood is not None:
                view = {var: hist[var][:, t + 1] for var in all_vars}
                lik = np.asarray(weekly_likelihood(t, view), dtype=float)
                if lik.shape != (n,):
                    raise ValueError(
                        f"likelihood must return shape ({n},), got {lik.shape}")
                if np.any(lik < 0.0) or not np.all(np.isfinite(lik)):
                    raise ValueError("likelihood values must be finite and >= 0")
                w = weights * lik
                total = float(w.sum())
                if total <= 0.0:
                    raise EmptySupportError(
                        f"all particle weights vanished at week {t}")
                weights = w / total
                if ess(weights) < RESAMPLE_FRACTION * n:
                    u01 = float(stream(seed, t, "resample").uniform())
                    idx = systematic_resample(weights, u01)
                    for var in state_vars:
                        cur[var] = cur[var][idx].copy()
                    for var in all_vars:
                        hist[var][:, :t + 2] = hist[var][idx, :t + 2]
                    weights = np.full(n, 1.0 / n)
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    if label is None:
        label = "symmetrised" if symmetrised else (
            "coupled" if enabled else "uncoupled")
    return TrajectoryStore(
        data=hist, weights=weights, seed=seed, config=config, label=label,
        factor_mask=tuple(sorted(enabled, key=_factor_order)))


_LENS_RE = re.compile(
    r"^\s*(?P<var>\w+?)_(?P<stat>T|peak|trough|mean)\s*"
    r"(?P<op><=|>=|<|>)\s*(?P<num>[-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*$")

_STATS = {
    "T": lambda a: a[:, -1],
    "peak": lambda a: a.max(axis=1),
    "trough": lambda a: a.min(axis=1),
    "mean": lambda a: a.mean(axis=1),
}

_OPS = {
    "<": np.less, ">": np.greater,
    "<=": np.less_equal, ">=": np.greater_equal,
}


@dataclass(frozen=True)
class SalienceLens:
    """Nonnegative reweighting functional over finished trajectories."""
    name: str
    fn: object = field(repr=False)

    @classmethod
    def from_spec(cls, text):
        """Parse lens expressions like "y_T < -0.01" or "I_peak > 0.1".

        Grammar: <variable>_<stat> <op> <number>, with stat one of
        T (terminal), peak, trough, mean; or the literal "uniform"/"1"."""
        text = text.strip()
        if text in ("uniform", "1"):
            return cls(name="uniform",
                       fn=lambda store: np.ones(store.weights.size))
        m = _LENS_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse lens spec {text!r}")
        var, stat, op, num = (m.group("var"), m.group("stat"),
                              m.group("op"), float(m.group("num")))
        statf, opf = _STATS[stat], _OPS[op]

        def fn(store, var=var, statf=statf, opf=opf, num=num):
            if var not in store.data:
                raise KeyError(f"lens variable {var!r} not in store")
            return opf(statf(store.data[var]), num).astype(float)

        return cls(name=text, fn=fn)


def salience_reweight(store, lens):
    """Apply a lens to final weights; returns (new_weights, ess)."""
    vals = np.asarray(lens.fn(store), dtype=float)
    if vals.shape != (store.n_particles,):
        raise ValueError(
            f"lens must return shape ({store.n_particles},), got {vals.shape}")
    if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
        raise ValueError("lens values must be finite and >= 0")
    w = store.weights * vals
    total = float(w.sum())
    if total <= 0.0:
        raise EmptySupportError(f"lens {lens.name!r} is zero on every particle")
    w = w / total
    return w, ess(w)


def _single_particle_view(store, trajectory):
    data = {k: np.asarray(v, dtype=float).reshape(1, -1)
            for k, v in trajectory.items()}
    return TrajectoryStore(data=data, weights=np.ones(1), seed=store.seed,
                           config=store.config, label="injected")


INJECTION_RATIO_CUTOFF = 0.1


def inject_particle(store, trajectory, lens):
    """Score a hand-built trajectory against the ensemble under a lens.

    The injected path gets the uniform prior weight 1/N times its lens
    value; that is compared to the median lens-weighted particle. A ratio
    above the cutoff means the region is reachable but unsampled
    (sampling bias); below, the lens itself suppresses it."""
    T = store.weeks
    missing = [v for v in store.variables if v not in trajectory]
    if missing:
        raise InjectionError(f"trajectory missing variables {missing}")
    for var, arr in trajectory.items():
        a = np.asarray(arr, dtype=float)
        if a.shape != (T + 1,):
            raise InjectionError(
                f"{var}: expected shape ({T + 1},), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InjectionError(f"{var}: non-finite values")
    comp = sum(np.asarray(trajectory[v], dtype=float)
               for v in ("S", "E", "I", "R", "D"))
    if np.max(np.abs(comp - 1.0)) > 1e-9:
        raise InjectionError("epidemic compartments must sum to 1 each week")
    for v in ("S", "E", "I", "R", "D"):
        if np.min(np.asarray(trajectory[v], dtype=float)) < -1e-12:
            raise InjectionError(f"{v}: negative compartment mass")

    view = _single_particle_view(store, trajectory)
    lens_val = float(np.asarray(lens.fn(view), dtype=float)[0])
    prior = 1.0 / store.n_particles
    injected_weight = prior * lens_val

    ensemble_vals = np.asarray(lens.fn(store), dtype=float)
    ensemble_weights = store.weights * ensemble_vals
    median_weight = float(np.median(ensemble_weights))

    if median_weight > 0.0:
        ratio = injected_weight / median_weight
    else:
        ratio = math.inf if injected_weight > 0.0 else 0.0
    verdict = "sampling_bias" if ratio >= INJECTION_RATIO_CUTOFF else "negligible"
    return {
        "lens": lens.name,
        "injected_weight": injected_weight,
        "median_ensemble_weight": median_weight,
        "ratio": ratio,
        "verdict": verdict,
    }


def default_constructive_trajectory(config):
    """A deterministic benign path: disease stays out, output on trend,
    vaccination proceeds calmly. Used as the default injection probe."""
    T = config.weeks
    z = np.zeros(T + 1)
    traj = {v: z.copy() for v in STATE_VARIABLES_3N + DERIVED_VARIABLES}
    traj["y"] = np.full(T + 1, 0.005)  # output half a point above trend
    traj["i"] = np.full(T + 1, 0.005 * 0.125)
    traj["S"] = np.full(T + 1, 0.99)
    traj["R"] = np.full(T + 1, 0.01)
    traj["strain_r0"] = np.full(T + 1, config.epi.r0_init)
    traj["strain_ifr"] = np.full(T + 1, config.epi.ifr_init)
    traj["rho"] = np.full(T + 1, config.vax.rho_0)
    traj["L"] = np.ones(T + 1)
    v = np.zeros(T + 1)
    jump_week = 8
    v[jump_week:] = min(1.0, config.vax.efficacy_jump)
    traj["v"] = v
    u = np.zeros(T + 1)
    for t in range(T):
        target = 0.3  # disease-free uptake target
        u[t + 1] = min(u[t] + config.vax.theta_adopt * max(0.0, target - u[t])
                       - config.vax.theta_decay * u[t], 1.0 - config.vax.rho_0)
    traj["u"] = u
    if config.narratives == 4:
        phi = np.empty(T + 1)
        phi[0] = config.fiscal.phi_0
        for t in range(T):
            phi[t + 1] = phi[t] - config.fiscal.phi_down * phi[t]
        traj["g"] = np.zeros(T + 1)
        traj["d"] = np.zeros(T + 1)
        traj["phi"] = phi
    return traj


BUILTIN_LIKELIHOODS = ("none", "mild_infection", "severe_infection")


def make_likelihood(name):
    """Stylised weekly observation streams keyed by name."""
    if name in (None, "none"):
        return None
    if name == "mild_infection":
        return lambda t, view: np.exp(-(view["I"] / 0.02) ** 2)
    if name == "severe_infection":
        return lambda t, view: np.exp(-(((view["I"] - 0.05) / 0.02) ** 2))
    raise ValueError(f"unknown likelihood {name!r}; "
                     f"choose from {BUILTIN_LIKELIHOODS}")


def run_observation_free_vs_likelihood(model, config, likelihood,
                                       region_lens=None, workers=1):
    """Paired uniform vs likelihood-weighted runs on identical draws.

    Returns both constructive-region masses; their difference (uniform
    minus likelihood) is the component of the bias attributable to the
    observation stream rather than to structure or sampling."""
    if region_lens is None:
        region_lens = SalienceLens.from_spec(config.constructive_region)
    store_u = run_simulation(model, config, workers=workers, label="uniform")
    mass_u = float(np.sum(store_u.weights * region_lens.fn(store_u)))
    if likelihood is None:
        return {
            "region": region_lens.name,
            "uniform_mass": mass_u,
            "likelihood_mass": mass_u,
            "observational_component": 0.0,
            "note": "uniform likelihood; arms coincide",
        }
    store_l = run_simulation(model, config, workers=workers,
                             weekly_likelihood=likelihood, label="likelihood")
    mass_l = float(np.sum(store_l.weights * region_lens.fn(store_l)))
    return {
        "region": region_lens.name,
        "uniform_mass": mass_u,
        "likelihood_mass": mass_l,
        "observational_component": mass_u - mass_l,
    }


def paired_stores(config, workers=1):
    """Coupled and uncoupled runs sharing seed and draw streams."""
    model = build_model(config)
    coupled = run_simulation(model, config, workers=workers)
    un_cfg = replace(config, mode="uncoupled", factor_mask=frozenset())
    un_model = build_model(un_cfg)
    uncoupled = run_simulation(un_model, un_cfg, workers=workers)
    return coupled, uncoupled
