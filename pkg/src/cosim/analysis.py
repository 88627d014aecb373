"""Ensemble analytics: trajectory features, weighted k-medoids archetypes,
rolling cross-block correlations, paired-run bias tables, and the
three-test bias decomposition (injection, symmetrisation, observation)."""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from . import couplings as cp
from .engine import (SalienceLens, build_model, default_constructive_trajectory,
                     inject_particle, make_likelihood,
                     run_observation_free_vs_likelihood, run_simulation)

FEATURES_3N = (
    "peak_infection", "peak_week", "deaths", "y_trough", "rho_final",
    "strain_count", "mean_infection", "mean_y", "vaccine_weeks",
)
FEATURES_4N = FEATURES_3N + (
    "peak_spending", "debt_final", "phi_final", "g_final",
)


def extract_features(store):
    """Per-particle summary features; returns (matrix (N, F), names)."""
    d = store.data
    cols = {
        "peak_infection": d["I"].max(axis=1),
        "peak_week": d["I"].argmax(axis=1).astype(float),
        "deaths": d["D"][:, -1],
        "y_trough": d["y"].min(axis=1),
        "rho_final": d["rho"][:, -1],
        "strain_count": d["strain_arrived"][:, 1:].sum(axis=1),
        "mean_infection": d["I"].mean(axis=1),
        "mean_y": d["y"].mean(axis=1),
        "vaccine_weeks": (d["v"] * d["u"] * (1.0 - d["rho"]))[:, :-1].sum(axis=1),
    }
    names = FEATURES_3N
    if "g" in d:
        cols["peak_spending"] = d["g"].max(axis=1)
        cols["debt_final"] = d["d"][:, -1]
        cols["phi_final"] = d["phi"][:, -1]
        cols["g_final"] = d["g"][:, -1]
        names = FEATURES_4N
    return np.column_stack([cols[n] for n in names]), names


def zscore(features):
    """Column-standardise; constant columns map to zero."""
    mu = features.mean(axis=0)
    sd = features.std(axis=0)
    sd = np.where(sd > 0.0, sd, 1.0)
    return (features - mu) / sd


PAM_EXACT_LIMIT = 4000
PAM_SUBSAMPLE = 2000


def _pam(dist, k, weights, rng):
    """Weighted PAM on a full distance matrix: k-medoids++ seeding, then
    greedy swap descent to a local optimum."""
    n = dist.shape[0]
    medoids = []
    probs = weights / weights.sum()
    medoids.append(int(rng.choice(n, p=probs)))
    for _ in range(1, k):
        dmin = dist[:, medoids].min(axis=1)
        score = weights * dmin ** 2
        total = score.sum()
        if total <= 0.0:
            # all remaining points sit on chosen medoids; spread arbitrarily
            remaining = [i for i in range(n) if i not in medoids]
            medoids.append(remaining[0] if remaining else medoids[0])
            continue
        medoids.append(int(rng.choice(n, p=score / total)))
    medoids = list(dict.fromkeys(medoids))
    while len(medoids) < k:  # pad collisions with farthest points
        dmin = dist[:, medoids].min(axis=1)
        medoids.append(int(np.argmax(dmin)))

    def objective(meds):
        return float((weights * dist[:, meds].min(axis=1)).sum())

    best = objective(medoids)
    improved = True
    while improved:
        improved = False
        for mi in range(k):
            others = medoids[:mi] + medoids[mi + 1:]
            d_others = dist[:, others].min(axis=1) if others else np.full(n, np.inf)
            # cost after swapping medoid mi for each candidate j, vectorised
            cand_cost = (weights[:, None] * np.minimum(d_others[:, None], dist)).sum(axis=0)
            if others:
                cand_cost[others] = np.inf
            j = int(np.argmin(cand_cost))
            if cand_cost[j] + 1e-12 < best:
                medoids = others[:mi] + [j] + others[mi:]
                best = float(cand_cost[j])
                improved = True
    assign = np.argmin(dist[:, medoids], axis=1)
    return medoids, assign, best


def kmedoids(features, k, weights=None, seed=0):
    """Weighted k-medoids in z-scored feature space.

    Deterministic given (features as a set, weights, seed): rows are
    canonicalised by lexicographic sort before seeding so the outcome is
    invariant to input permutation. Above PAM_EXACT_LIMIT points the swap
    search runs on a weighted subsample and all points are then assigned
    to the nearest found medoid."""
    X = np.asarray(features, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w < 0.0):
        raise ValueError("weights must be nonnegative with one entry per row")
    Z = zscore(X)

    order = np.lexsort(Z.T[::-1])  # canonical row order
    Zc, wc = Z[order], w[order]
    rng = np.random.default_rng(seed)

    if n <= PAM_EXACT_LIMIT:
        dist = np.sqrt(((Zc[:, None, :] - Zc[None, :, :]) ** 2).sum(axis=2))
        meds_c, assign_c, obj = _pam(dist, k, wc, rng)
        medoid_rows = order[np.asarray(meds_c)]
        assign = np.empty(n, dtype=int)
        assign[order] = assign_c
    else:
        probs = wc / wc.sum()
        n_sub = min(PAM_SUBSAMPLE, int((probs > 0.0).sum()))
        sub = rng.choice(n, size=max(n_sub, k), replace=False, p=probs)
        sub.sort()
        Zs, ws = Zc[sub], wc[sub]
        dist = np.sqrt(((Zs[:, None, :] - Zs[None, :, :]) ** 2).sum(axis=2))
        meds_s, _, _ = _pam(dist, k, ws, rng)
        medoid_rows = order[sub[np.asarray(meds_s)]]
        d_all = np.sqrt(((Z[:, None, :] - Z[medoid_rows][None, :, :]) ** 2).sum(axis=2))
        assign = np.argmin(d_all, axis=1)
        obj = float((w * d_all.min(axis=1)).sum())
    return np.asarray(medoid_rows), assign, obj


@dataclass(frozen=True)
class ArchetypeSet:
    """Clusters ordered by terminal rejection of their weighted mean."""
    k: int
    feature_names: tuple
    medoid_indices: np.ndarray
    assignments: np.ndarray
    mass: np.ndarray                      # (k,) weighted cluster mass
    feature_means: np.ndarray             # (k, F) weighted means
    trajectories: dict = field(repr=False)  # var -> (k, T+1) weighted means
    rho_terminal: np.ndarray = None

    def to_frame(self):
        df = pd.DataFrame(self.feature_means, columns=list(self.feature_names))
        df.insert(0, "archetype", np.arange(self.k))
        df.insert(1, "mass", self.mass)
        return df


def archetypes(store, k, seed=0):
    """Cluster the ensemble and summarise each cluster by weighted means."""
    X, names = extract_features(store)
    w = store.weights
    medoid_rows, assign, _ = kmedoids(X, k, weights=w, seed=seed)

    mass = np.zeros(k)
    fmeans = np.zeros((k, X.shape[1]))
    trajs = {var: np.zeros((k, store.weeks + 1)) for var in store.variables}
    rho_T = np.zeros(k)
    for c in range(k):
        sel = assign == c
        m = float(w[sel].sum())
        mass[c] = m
        if m > 0.0:
            wc = w[sel] / m
            fmeans[c] = wc @ X[sel]
            for var in store.variables:
                trajs[var][c] = wc @ store.data[var][sel]
            rho_T[c] = float(wc @ store.data["rho"][sel, -1])
        else:  # empty cluster: fall back to its medoid
            row = medoid_rows[c]
            fmeans[c] = X[row]
            for var in store.variables:
                trajs[var][c] = store.data[var][row]
            rho_T[c] = float(store.data["rho"][row, -1])

    order = np.argsort(rho_T, kind="stable")
    remap = np.empty(k, dtype=int)
    remap[order] = np.arange(k)
    return ArchetypeSet(
        k=k, feature_names=names,
        medoid_indices=np.asarray(medoid_rows)[order],
        assignments=remap[assign],
        mass=mass[order], feature_means=fmeans[order],
        trajectories={var: trajs[var][order] for var in trajs},
        rho_terminal=rho_T[order])


def weighted_corr(x, y, w):
    """Weighted Pearson correlation; NaN when either variance vanishes."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    # an exactly constant input has zero variance regardless of the
    # rounding dust the normalised mean would otherwise leave behind
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        return float("nan")
    w = w / w.sum()
    mx, my = float(w @ x), float(w @ y)
    cov = float(w @ ((x - mx) * (y - my)))
    vx = float(w @ ((x - mx) ** 2))
    vy = float(w @ ((y - my) ** 2))
    if vx <= 0.0 or vy <= 0.0:
        return float("nan")
    return cov / math.sqrt(vx * vy)


DEFAULT_PAIRS = (("y", "I"), ("y", "rho"), ("i", "v"), ("rho", "D"))


def rolling_correlations(store, pairs=DEFAULT_PAIRS, weights=None):
    """Per-week weighted cross-section correlations for variable pairs."""
    w = store.weights if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    rows = []
    for a, b in pairs:
        A, B = store.data[a], store.data[b]
        ma, mb = w @ A, w @ B
        cov = w @ (A * B) - ma * mb
        va = w @ (A * A) - ma * ma
        vb = w @ (B * B) - mb * mb
        ok = (va > 1e-300) & (vb > 1e-300)
        corr = np.full(A.shape[1], np.nan)
        corr[ok] = cov[ok] / np.sqrt(va[ok] * vb[ok])
        for t in range(A.shape[1]):
            rows.append({"week": t, "pair": f"{a}~{b}", "corr": corr[t]})
    return pd.DataFrame(rows, columns=["week", "pair", "corr"])


BIAS_VARIABLES_3N = ("y", "I", "D", "rho", "v")
BIAS_VARIABLES_4N = BIAS_VARIABLES_3N + ("g", "d", "phi")


@dataclass(frozen=True)
class BiasReport:
    variables: dict
    meta: dict

    def to_dict(self):
        return {"variables": self.variables, "meta": self.meta}


def _core_identity(config):
    return {
        "narratives": config.narratives,
        "calibration": config.calibration,
        "particles": config.particles,
        "weeks": config.weeks,
        "seed": config.seed,
        "nk": config.nk, "epi": config.epi, "vax": config.vax,
        "fiscal": config.fiscal, "habituation": config.habituation,
    }


def _wmean_sd(x, w):
    m = float(w @ x)
    var = float(w @ ((x - m) ** 2))
    return m, math.sqrt(max(var, 0.0))


def bias_table(coupled, uncoupled):
    """Terminal-state shifts between a coupled run and its severed twin.

    Both stores must come from the same seed, draws, horizon and
    calibration; anything else makes the difference meaningless, so a
    mismatch is a hard error."""
    if coupled.seed != uncoupled.seed:
        raise ValueError(
            f"paired runs need matching seeds: {coupled.seed} != {uncoupled.seed}")
    ca, cb = _core_identity(coupled.config), _core_identity(uncoupled.config)
    if ca != cb:
        diff = [k for k in ca if ca[k] != cb[k]]
        raise ValueError(f"paired runs differ outside the factor mask: {diff}")

    names = BIAS_VARIABLES_4N if "g" in coupled.data else BIAS_VARIABLES_3N
    out = {}
    for var in names:
        mc, sc = _wmean_sd(coupled.terminal(var), coupled.weights)
        mu, su = _wmean_sd(uncoupled.terminal(var), uncoupled.weights)
        out[var] = {
            "coupled_mean": mc, "coupled_sd": sc,
            "uncoupled_mean": mu, "uncoupled_sd": su,
            "shift": mc - mu,
        }
    meta = {
        "seed": coupled.seed,
        "particles": coupled.n_particles,
        "weeks": coupled.weeks,
        "narratives": coupled.config.narratives,
        "coupled_factors": list(coupled.factor_mask),
        "uncoupled_factors": list(uncoupled.factor_mask),
    }
    return BiasReport(variables=out, meta=meta)


def region_mass(store, lens):
    return float(np.sum(store.weights * np.asarray(lens.fn(store), dtype=float)))


def bias_decomposition(config, likelihood_name="none", workers=1,
                       injection_trajectory=None):
    """Three diagnostics separating where bearishness enters.

    Test 1 injects a hand-built constructive trajectory and scores it
    under the run's lens: reachable-but-unsampled regions show up as a
    large weight ratio. Test 2 reruns the model with every explicit factor
    symmetrised (even part about the audit reflection) and reports the
    constructive-mass change, plus the per-factor asymmetry table. Test 3
    pairs an observation-free run against a likelihood-weighted run on
    identical draws."""
    model = build_model(config)
    region = SalienceLens.from_spec(config.constructive_region)

    store = run_simulation(model, config, workers=workers)
    mass_orig = region_mass(store, region)

    # Test 1: injection
    traj = injection_trajectory or default_constructive_trajectory(config)
    test1 = inject_particle(store, traj, region)

    # Test 2: structural symmetrisation
    store_sym = run_simulation(model, config, workers=workers, symmetrised=True)
    mass_sym = region_mass(store_sym, region)
    registry = cp.build_factor_registry(
        config.habituation,
        fiscal_params=config.fiscal if config.narratives == 4 else None,
        narratives=config.narratives)
    audit = [cp.asymmetry_profile(registry[fid])
             for fid in sorted(registry, key=lambda s: int(s[1:]))
             if fid in config.factor_mask]
    test2 = {
        "original_mass": mass_orig,
        "symmetrised_mass": mass_sym,
        "structural_component": mass_sym - mass_orig,
        "factor_asymmetries": audit,
    }

    # Test 3: observation stream
    test3 = run_observation_free_vs_likelihood(
        model, config, make_likelihood(likelihood_name),
        region_lens=region, workers=workers)

    return {
        "region": region.name,
        "sampling": test1,
        "structural": test2,
        "observational": test3,
    }
