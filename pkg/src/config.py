"""Configuration management for the TPE solver"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError


class Settings(BaseSettings):
    """Process settings with environment variable support (prefix TPE_)"""

    # Logging
    log: str = "INFO"

    # Parallelism
    jobs: int = 1

    # Output
    output_dir: str = "./tpe_output"
    dump_matrices: bool = False

    # Linear algebra
    direct_solver: Literal["splu", "spsolve"] = "splu"

    model_config = SettingsConfigDict(
        env_prefix="TPE_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )


settings = Settings()


class _Strict(BaseModel):
    """Base for run-config sections: unknown keys are rejected"""

    model_config = ConfigDict(extra="forbid")


class MeshSpec(_Strict):
    """Mesh source: generated sequence or files"""
    kind: Literal["voronoi", "cartesian", "file"] = "voronoi"
    domain: Tuple[float, float, float, float] = (0.0, 2.0, 0.0, 2.0)
    # Voronoi: number of seeds per level; Cartesian: cells per side per level
    sizes: List[int] = Field(default_factory=lambda: [100])
    lloyd_iterations: int = 20
    files: List[str] = Field(default_factory=list)

    @field_validator("sizes")
    @classmethod
    def _positive_sizes(cls, v: List[int]) -> List[int]:
        if any(n < 1 for n in v):
            raise ValueError("mesh sizes must be >= 1")
        return v

    @field_validator("domain")
    @classmethod
    def _non_degenerate(cls, v: Tuple[float, float, float, float]):
        if not (v[1] > v[0] and v[3] > v[2]):
            raise ValueError("domain must be (xmin, xmax, ymin, ymax) with xmax > xmin, ymax > ymin")
        return v


class TimeSpec(_Strict):
    """theta-method grid"""
    theta: float = 0.5
    dt: float = 1.0
    t_final: float = 1.0
    steady: bool = False

    @model_validator(mode="after")
    def _check(self) -> "TimeSpec":
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        n = round(self.t_final / self.dt)
        if n < 1 or abs(n * self.dt - self.t_final) > 1e-12 * max(1.0, self.t_final):
            raise ValueError("t_final must be an integer multiple of dt")
        return self


class FixedPointSpec(_Strict):
    """Fixed-point linearization of the convective term"""
    tolerance: float = Field(default=1e-8, gt=0)
    max_iterations: int = Field(default=50, ge=1)
    initial_guess: Literal["previous_step", "zero_gradient"] = "previous_step"
    linearization: Literal["temperature_gradient", "darcy_flux"] = "temperature_gradient"


class PenaltySpec(_Strict):
    """Multipliers of the face stabilization functions"""
    alpha1: float = Field(default=10.0, gt=0)
    alpha2: float = Field(default=10.0, gt=0)
    alpha3: float = Field(default=10.0, gt=0)
    alpha4: float = Field(default=1.0, gt=0)


class CoefficientOverrides(_Strict):
    """Coefficient values replacing the experiment defaults (None keeps the default)"""
    a0: Optional[float] = None
    b0: Optional[float] = None
    c0: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    c_f: Optional[float] = None
    mu: Optional[float] = None
    lam: Optional[float] = None
    K: Optional[float] = None
    Theta: Optional[float] = None
    porosity: Optional[float] = None

    def as_dict(self) -> Dict[str, float]:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class GeothermalSpec(_Strict):
    """Injection/extraction scenario"""
    T_inj: float = 60.0
    T_ext: float = 120.0
    p_inj: float = 1.0
    p_ext: float = -1.0
    gamma: float = 0.01
    T_initial: float = 0.0
    p_initial: float = 0.0
    probe_points: int = 41


class SolverSpec(_Strict):
    """Linear solve contract"""
    method: Literal["direct", "iterative"] = "direct"
    rtol: float = 1e-10
    max_iterations: int = 2000


class OutputSpec(_Strict):
    """What to write"""
    directory: Optional[str] = None
    vtk: bool = True
    vtk_vertex_resampled: bool = False
    write_every: int = Field(default=100, ge=1)
    dump_matrices: bool = False


class RunConfig(_Strict):
    """Complete, schema-validated description of one invocation"""
    experiment: Literal["convergence", "robustness", "geothermal", "custom"] = "convergence"
    mesh: MeshSpec = Field(default_factory=MeshSpec)
    degree: int = Field(default=1, ge=1)
    phi_degree: Optional[int] = None
    degree_u: Optional[int] = None
    nonlinear: bool = False
    time: TimeSpec = Field(default_factory=TimeSpec)
    fixed_point: FixedPointSpec = Field(default_factory=FixedPointSpec)
    penalties: PenaltySpec = Field(default_factory=PenaltySpec)
    coefficients: CoefficientOverrides = Field(default_factory=CoefficientOverrides)
    robustness_tests: List[Literal["i", "ii", "iii", "iv"]] = Field(
        default_factory=lambda: ["i", "ii", "iii"]
    )
    geothermal: GeothermalSpec = Field(default_factory=GeothermalSpec)
    solver: SolverSpec = Field(default_factory=SolverSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    estimate_infsup: bool = False
    rng_seed: int = 42

    @model_validator(mode="after")
    def _degrees(self) -> "RunConfig":
        m = self.phi_degree if self.phi_degree is not None else self.degree
        lu = self.degree_u if self.degree_u is not None else self.degree
        if m > lu + 1:
            raise ValueError(f"phi degree {m} exceeds displacement degree + 1 ({lu + 1})")
        if self.mesh.kind == "file" and not self.mesh.files:
            raise ValueError("mesh.kind == 'file' requires mesh.files")
        return self


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dictionary merge (override wins)"""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_run_config(data: Dict[str, Any]) -> RunConfig:
    """Validate a raw mapping, raising ConfigError with the pydantic report"""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError("invalid run configuration",
                          {"errors": json.loads(e.json())}) from e


def load_run_config(path: Path, base: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read a JSON config file, optionally layered over a preset mapping"""
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {path}", {"position": e.pos}) from e
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_run_config(merge_config(base or {}, raw))
