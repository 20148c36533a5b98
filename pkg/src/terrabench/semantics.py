"""Semantics class catalogue: ten terrain classes and SCM parameter sets.

The catalogue ships as package data (data/semantics.yaml) and can be replaced
wholesale with `load_catalogue(path)` to recalibrate friction statistics or
sampling weights without code changes.
"""

from dataclasses import dataclass
from importlib import resources
from typing import Dict, Optional

import yaml

from .errors import ConfigError

# Canonical class order; index in this list is the class id used in maps.
CLASS_ORDER = ("grass", "wood", "gravel", "dirt", "clay", "rock", "concrete",
               "snow", "mud", "sand")
RIGID_CLASSES = CLASS_ORDER[:7]
DEFORMABLE_CLASSES = CLASS_ORDER[7:]
SCM_LEVELS = ("soft", "medium", "hard")


@dataclass(frozen=True)
class ScmParams:
    """Bekker pressure-sinkage constants for one deformability level."""
    k_c: float        # Pa * m^(1-n)
    k_phi: float      # Pa * m^-n
    n_exp: float
    hardening: float  # stiffness multiplier growth per meter of plastic sinkage
    damping: float    # N*s/m
    traction: float   # effective tire-soil friction for the Coulomb circle
    level: str

    def __post_init__(self):
        if self.k_phi <= 0:
            raise ConfigError(f"k_phi must be positive, got {self.k_phi}")
        if not 0.5 <= self.n_exp <= 2.0:
            raise ConfigError(f"n_exp must be in [0.5, 2.0], got {self.n_exp}")
        if self.hardening < 0:
            raise ConfigError(f"hardening must be >= 0, got {self.hardening}")
        if self.level not in SCM_LEVELS:
            raise ConfigError(f"unknown SCM level {self.level!r}")


@dataclass(frozen=True)
class ClassSpec:
    """Catalogue entry for one semantics class."""
    name: str
    kind: str                         # "rigid" | "deformable"
    weight: float                     # sampling weight for cluster class draws
    friction_mean: Optional[float] = None
    friction_std: Optional[float] = None
    scm_level: Optional[str] = None

    @property
    def rigid(self) -> bool:
        return self.kind == "rigid"


@dataclass(frozen=True)
class SemanticsCatalogue:
    classes: Dict[str, ClassSpec]
    scm_levels: Dict[str, ScmParams]
    restitution: float
    friction_clamp: tuple

    def class_id(self, name: str) -> int:
        return CLASS_ORDER.index(name)

    def scm_for_class(self, name: str) -> ScmParams:
        return self.scm_levels[self.classes[name].scm_level]


def _parse_catalogue(cfg: dict) -> SemanticsCatalogue:
    classes = {}
    for name in CLASS_ORDER:
        if name not in cfg["classes"]:
            raise ConfigError(f"semantics catalogue is missing class {name!r}")
        raw = cfg["classes"][name]
        spec = ClassSpec(
            name=name,
            kind=raw["kind"],
            weight=float(raw.get("weight", 1.0)),
            friction_mean=raw.get("friction_mean"),
            friction_std=raw.get("friction_std"),
            scm_level=raw.get("scm_level"),
        )
        if spec.kind not in ("rigid", "deformable"):
            raise ConfigError(f"class {name!r}: unknown kind {spec.kind!r}")
        if spec.rigid and (spec.friction_mean is None or spec.friction_std is None):
            raise ConfigError(f"rigid class {name!r} needs friction_mean/friction_std")
        if not spec.rigid and spec.scm_level not in SCM_LEVELS:
            raise ConfigError(f"deformable class {name!r} needs a valid scm_level")
        classes[name] = spec

    levels = {}
    for level in SCM_LEVELS:
        raw = cfg["scm_levels"][level]
        levels[level] = ScmParams(
            k_c=float(raw["k_c"]), k_phi=float(raw["k_phi"]),
            n_exp=float(raw["n_exp"]), hardening=float(raw["hardening"]),
            damping=float(raw["damping"]), traction=float(raw["traction"]),
            level=level,
        )

    rigid = [c for c in classes.values() if c.rigid]
    deformable = [c for c in classes.values() if not c.rigid]
    if len(rigid) != 7 or len(deformable) != 3:
        raise ConfigError("catalogue must have exactly 7 rigid and 3 deformable classes")

    return SemanticsCatalogue(
        classes=classes,
        scm_levels=levels,
        restitution=float(cfg["restitution"]),
        friction_clamp=tuple(float(v) for v in cfg["friction_clamp"]),
    )


def load_catalogue(path=None) -> SemanticsCatalogue:
    """Load the semantics catalogue from `path`, or the packaged default."""
    if path is None:
        text = resources.files("terrabench.data").joinpath("semantics.yaml").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return _parse_catalogue(yaml.safe_load(text))


_DEFAULT = None


def default_catalogue() -> SemanticsCatalogue:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_catalogue()
    return _DEFAULT
