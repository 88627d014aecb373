"""Run configuration: INI files over calibrated defaults.

Layers, in order: built-in defaults, the named calibration column
("baseline" or "us-scale", which rescales the fiscal block), then any
values from the file, then programmatic overrides. Unknown keys and
out-of-range values are startup errors, not warnings."""

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .couplings import (FOUR_NARRATIVE_FACTORS, HabituationParams,
                        THREE_NARRATIVE_FACTORS)
from .fiscal import FiscalParams
from .nk import NKParams
from .seir import SEIRParams
from .vaccine import VaccineParams


class ConfigError(Exception):
    pass


CALIBRATIONS = ("baseline", "us-scale")
MODES = ("coupled", "uncoupled", "custom")

US_SCALE_FISCAL = {"alpha_g": 0.06, "alpha_I": 0.18, "g_decay": 0.06, "eta_g": 0.6}

_SECTION_PARAMS = {
    "economy": (NKParams, "nk"),
    "epidemic": (SEIRParams, "epi"),
    "vaccine": (VaccineParams, "vax"),
    "fiscal": (FiscalParams, "fiscal"),
    "couplings": (HabituationParams, "habituation"),
}

# file key -> dataclass field, where they differ
_KEY_ALIASES = {
    "epidemic": {"lambda": "arrival_rate"},
    "vaccine": {"lambda_v": "innovation_rate"},
}

_RUN_KEYS = ("mode", "narratives", "calibration", "particles", "weeks",
             "seed", "cluster_k", "output_dir", "lens",
             "constructive_region", "factors")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "coupled"
    narratives: int = 3
    calibration: str = "baseline"
    particles: int = 10000
    weeks: int = 156
    seed: int = 1
    cluster_k: int = 5
    output_dir: str = "out"
    lens: str = "y_T < -0.01"
    constructive_region: str = "y_T > 0"
    factor_mask: frozenset = None
    nk: NKParams = field(default_factory=NKParams)
    epi: SEIRParams = field(default_factory=SEIRParams)
    vax: VaccineParams = field(default_factory=VaccineParams)
    fiscal: FiscalParams = field(default_factory=FiscalParams)
    habituation: HabituationParams = field(default_factory=HabituationParams)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.narratives not in (3, 4):
            raise ConfigError(f"narratives must be 3 or 4, got {self.narratives}")
        if self.calibration not in CALIBRATIONS:
            raise ConfigError(
                f"calibration must be one of {CALIBRATIONS}, got {self.calibration!r}")
        if self.calibration == "us-scale" and self.narratives != 4:
            raise ConfigError("us-scale calibration requires narratives = 4")
        if self.particles < 1:
            raise ConfigError(f"particles must be >= 1, got {self.particles}")
        if self.weeks < 1:
            raise ConfigError(f"weeks must be >= 1, got {self.weeks}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in uint64, got {self.seed}")
        if self.cluster_k < 1:
            raise ConfigError(f"cluster_k must be >= 1, got {self.cluster_k}")
        if self.factor_mask is None:
            raise ConfigError(
                "factor_mask unset; build configs via load_config or default_config")
        allowed = set(FOUR_NARRATIVE_FACTORS if self.narratives == 4
                      else THREE_NARRATIVE_FACTORS)
        bad = sorted(set(self.factor_mask) - allowed)
        if bad:
            raise ConfigError(
                f"factors {bad} not available with narratives={self.narratives}")
        for section, attr in (("economy", "nk"), ("epidemic", "epi"),
                              ("vaccine", "vax"), ("fiscal", "fiscal"),
                              ("couplings", "habituation")):
            try:
                getattr(self, attr).validate()
            except ValueError as e:
                raise ConfigError(f"[{section}] {e}") from e
        return self


def _default_mask(mode, narratives):
    if mode == "uncoupled":
        return frozenset()
    return frozenset(FOUR_NARRATIVE_FACTORS if narratives == 4
                     else THREE_NARRATIVE_FACTORS)


def _coerce(section, key, raw, pytype):
    try:
        if pytype is int:
            return int(raw)
        if pytype is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {pytype.__name__}") from None


def load_config(path=None, overrides=None):
    """Build a validated RunConfig from an INI file plus overrides.

    overrides maps (section, key) -> string value and is applied after the
    file, through the same parsing and validation."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keys are case-sensitive
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
    for (section, key), value in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))

    known_sections = {"run", *_SECTION_PARAMS}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown config section [{section}]")

    run_vals = {}
    if parser.has_section("run"):
        for key, raw in parser.items("run"):
            if key not in _RUN_KEYS:
                raise ConfigError(f"[run] unknown key {key!r}")
            run_vals[key] = raw

    mode = run_vals.get("mode", "coupled")
    narratives = _coerce("run", "narratives", run_vals.get("narratives", "3"), int)
    calibration = run_vals.get("calibration", "baseline")

    params = {}
    for section, (cls, attr) in _SECTION_PARAMS.items():
        kwargs = {}
        if section == "fiscal" and calibration == "us-scale":
            kwargs.update(US_SCALE_FISCAL)
        aliases = _KEY_ALIASES.get(section, {})
        valid = {f.name for f in fields(cls)}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                name = aliases.get(key, key)
                if name not in valid:
                    raise ConfigError(f"[{section}] unknown key {key!r}")
                kwargs[name] = _coerce(section, key, raw, float)
        params[attr] = cls(**kwargs)

    if "factors" in run_vals:
        raw = run_vals["factors"].strip()
        mask = frozenset(x.strip() for x in raw.split(",") if x.strip()) \
            if raw else frozenset()
    else:
        mask = _default_mask(mode, narratives)

    cfg = RunConfig(
        mode=mode,
        narratives=narratives,
        calibration=calibration,
        particles=_coerce("run", "particles", run_vals.get("particles", "10000"), int),
        weeks=_coerce("run", "weeks", run_vals.get("weeks", "156"), int),
        seed=_coerce("run", "seed", run_vals.get("seed", "1"), int),
        cluster_k=_coerce("run", "cluster_k", run_vals.get("cluster_k", "5"), int),
        output_dir=run_vals.get("output_dir", "out"),
        lens=run_vals.get("lens", "y_T < -0.01"),
        constructive_region=run_vals.get("constructive_region", "y_T > 0"),
        factor_mask=mask,
        **params,
    )
    return cfg.validate()


def default_config(**kw):
    """Programmatic defaults with keyword tweaks; mask tracks mode."""
    cfg = RunConfig(**kw)
    if cfg.calibration == "us-scale" and "fiscal" not in kw:
        cfg = replace(cfg, fiscal=FiscalParams(**US_SCALE_FISCAL))
    if cfg.factor_mask is None:
        cfg = replace(cfg, factor_mask=_default_mask(cfg.mode, cfg.narratives))
    return cfg.validate()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_ini(config):
    """Canonical INI text that round-trips through load_config."""
    out = io.StringIO()
    out.write("[run]\n")
    out.write(f"mode = {config.mode}\n")
    out.write(f"narratives = {config.narratives}\n")
    out.write(f"calibration = {config.calibration}\n")
    out.write(f"particles = {config.particles}\n")
    out.write(f"weeks = {config.weeks}\n")
    out.write(f"seed = {config.seed}\n")
    out.write(f"cluster_k = {config.cluster_k}\n")
    out.write(f"output_dir = {config.output_dir}\n")
    out.write(f"lens = {config.lens}\n")
    out.write(f"constructive_region = {config.constructive_region}\n")
    ordered = sorted(config.factor_mask, key=lambda s: int(s[1:]))
    out.write(f"factors = {','.join(ordered)}\n")
    for section, (cls, attr) in _SECTION_PARAMS.items():
        obj = getattr(config, attr)
        aliases = {v: k for k, v in _KEY_ALIASES.get(section, {}).items()}
        out.write(f"\n[{section}]\n")
        for f in fields(cls):
            key = aliases.get(f.name, f.name)
            out.write(f"{key} = {_fmt(getattr(obj, f.name))}\n")
    return out.getvalue()
