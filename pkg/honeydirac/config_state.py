import copy
import json
import os
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError
from .output import write_json

DEFAULT_CONFIG = {
    "lattice": {
        "a": 1.0,
    },
    "potential": {
        "kind": "optical",
        "V0": 1.0,
        "s": 0.3,
        "M": None,
        "path": None,
        "m": [1, 0],
        "amplitude": 1.0,
    },
    "solver": {
        "eps": 0.3,
        "M": 8,
        "workers": 1,
        "n_bands": 8,
    },
    "tolerances": {
        "degeneracy": 1e-8,
        "pair_match": 1e-9,
        "symmetry": 1e-10,
        "lambda_threshold": 1e-6,
        "isotropy": 0.01,
        "slope": 0.005,
        "radius_fraction": 0.02,
    },
    "bands": {
        "path": "G-K-M-G",
        "points_per_segment": 40,
        "kpoints": None,
    },
    "dirac": {
        "vertex": "K",
        "directions": 8,
        "random_directions": False,
        "radii": None,
    },
    "perturb": {
        "eps_list": [0.01, 0.02, 0.04],
    },
    "deform": {
        "W": {"kind": "cos", "m": [1, 0], "amplitude": 1.0},
        "etas": [0.01, 0.005],
        "closure_coeff": 10.0,
    },
    "det2": {
        "sigma": "tau",
        "window": [10.0, 30.0],
        "grid_n": 400,
    },
    "scan": {
        "eps_list": [-0.2, -0.1, 0.0, 0.1, 0.2],
        "collapse_tol": 1e-6,
    },
    "seed": 0,
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeSection(_Section):
    a: float = Field(1.0, gt=0)


class PotentialSection(_Section):
    kind: Literal["optical", "atomic", "triangular", "file", "cos", "sin"] = "optical"
    V0: float = 1.0
    s: float = Field(0.3, gt=0)
    M: Optional[int] = Field(None, ge=1)
    path: Optional[str] = None
    m: Tuple[int, int] = (1, 0)
    amplitude: float = 1.0


class SolverSection(_Section):
    eps: float = 0.3
    M: int = Field(8, ge=1)
    workers: int = Field(1, ge=1)
    n_bands: int = Field(8, ge=1)


class TolerancesSection(_Section):
    degeneracy: float = Field(1e-8, gt=0)
    pair_match: float = Field(1e-9, gt=0)
    symmetry: float = Field(1e-10, gt=0)
    lambda_threshold: float = Field(1e-6, ge=0)
    isotropy: float = Field(0.01, gt=0)
    slope: float = Field(0.005, gt=0)
    radius_fraction: float = Field(0.02, gt=0)


class BandsSection(_Section):
    path: str = "G-K-M-G"
    points_per_segment: int = Field(40, ge=1)
    kpoints: Optional[List[Tuple[float, float]]] = None


class DiracSection(_Section):
    vertex: Literal["K", "K'"] = "K"
    directions: int = Field(8, ge=1)
    random_directions: bool = False
    radii: Optional[List[float]] = None


class PerturbSection(_Section):
    eps_list: List[float] = Field(default_factory=lambda: [0.01, 0.02, 0.04], min_length=1)


class DeformSection(_Section):
    W: PotentialSection = Field(default_factory=lambda: PotentialSection(kind="cos"))
    etas: List[float] = Field(default_factory=lambda: [0.01, 0.005], min_length=1)
    closure_coeff: float = Field(10.0, gt=0)


class Det2Section(_Section):
    sigma: Literal["1", "tau", "taubar"] = "tau"
    window: Tuple[float, float] = (10.0, 30.0)
    grid_n: int = Field(400, ge=8)


class ScanSection(_Section):
    eps_list: List[float] = Field(default_factory=lambda: [-0.2, -0.1, 0.0, 0.1, 0.2], min_length=1)
    collapse_tol: float = Field(1e-6, gt=0)


class RunConfig(_Section):
    lattice: LatticeSection
    potential: PotentialSection
    solver: SolverSection
    tolerances: TolerancesSection
    bands: BandsSection
    dirac: DiracSection
    perturb: PerturbSection
    deform: DeformSection
    det2: Det2Section
    scan: ScanSection
    seed: int = 0


def _deep_update(target, updates):
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            _deep_update(target[key], value)
        else:
            target[key] = value


def _resolve_paths(config, base_dir):
    for section in (config.get("potential"), (config.get("deform") or {}).get("W")):
        if isinstance(section, dict) and section.get("path") and not os.path.isabs(section["path"]):
            section["path"] = os.path.join(base_dir, section["path"])


def load_config(path=None, overrides=None):
    """Defaults, then the JSON file at ``path``, then ``overrides``; validated as a RunConfig."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                saved = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(saved, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        _resolve_paths(saved, os.path.dirname(os.path.abspath(path)))
        _deep_update(config, saved)
    if overrides:
        _deep_update(config, overrides)

    try:
        return RunConfig.model_validate(config)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}") from e


def save_config(config, path):
    if isinstance(config, RunConfig):
        config = config.model_dump(mode="json")
    write_json(path, config)
