"""Composed narrative ensembles: a macro block, an epidemic block, a
vaccine-behaviour block and an optional fiscal block, glued along shared
variables and run as one particle ensemble."""

from .analysis import (ArchetypeSet, archetypes, bias_decomposition,
                       bias_table, extract_features, kmedoids,
                       rolling_correlations)
from .composition import (CompositeModel, CompositionError, Identification,
                          NarrativeCospan, compose, validate_factor_graph)
from .config import ConfigError, RunConfig, default_config, load_config, to_ini
from .couplings import (FactorSpec, HabituationParams, UnboundedDomainError,
                        ZeroFactorError, asymmetry_ratio, build_factor_registry,
                        eval_couplings, symmetrise)
from .engine import (EmptySupportError, InjectionError, ParticleEnsemble,
                     SalienceLens, TrajectoryStore, build_model, ess,
                     inject_particle, resample_if_needed,
                     run_observation_free_vs_likelihood, run_simulation,
                     salience_reweight, systematic_resample)
from .fiscal import FiscalParams, FiscalState, step_fiscal
from .nk import DeterminacyError, NKParams, NKState, solve_msv, step_nk
from .outputs import OutputError, emit_outputs, validate_output_file
from .seir import SEIRParams, SEIRState, StrainParams, step_seir
from .vaccine import VaccineParams, VaccineState, step_vaccine

__version__ = "0.1.0"

__all__ = [
    "ArchetypeSet", "CompositeModel", "CompositionError", "ConfigError",
    "DeterminacyError", "EmptySupportError", "FactorSpec", "FiscalParams",
    "FiscalState", "HabituationParams", "Identification", "InjectionError",
    "NKParams", "NKState", "NarrativeCospan", "OutputError",
    "ParticleEnsemble", "RunConfig", "SEIRParams", "SEIRState",
    "SalienceLens", "StrainParams", "TrajectoryStore",
    "UnboundedDomainError", "VaccineParams", "VaccineState",
    "ZeroFactorError", "archetypes", "asymmetry_ratio",
    "bias_decomposition", "bias_table", "build_factor_registry",
    "build_model", "compose", "default_config", "emit_outputs", "ess",
    "eval_couplings", "extract_features", "inject_particle", "kmedoids",
    "load_config", "resample_if_needed", "rolling_correlations",
    "run_observation_free_vs_likelihood", "run_simulation",
    "salience_reweight", "solve_msv", "step_fiscal", "step_nk", "step_seir",
    "step_vaccine", "symmetrise", "systematic_resample", "to_ini",
    "validate_factor_graph", "validate_output_file",
]
