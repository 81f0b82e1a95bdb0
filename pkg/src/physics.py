"""
Thermo-Poroelastic Model - coefficients, boundary conditions and test problems

The strong system on Ω × (0, T_f]:

    ∂t(a0 T - b0 p + β ∇·u) - c_f ∇T·(K∇p) - ∇·(Θ∇T) = H      (energy)
    ∂t(c0 p - b0 T + α ∇·u) - ∇·(K∇p)                  = g      (mass)
    -∇·(2μ ε(u) + λ ∇·u I - α p I - β T I)              = f      (momentum)

with the pseudo-total pressure φ = λ∇·u - αp - βT as fourth unknown.

Why a separate physics module?
- Coefficient admissibility is checked once, before anything is assembled
- Problems (manufactured, robustness, geothermal) are plain value objects the
  assembler and solver consume without knowing where they came from
- Manufactured forcing is derived symbolically with sympy, so a change to the
  exact fields never needs hand-derived forcing terms

Validation follows a report pattern: validate() never raises, it returns every
violated relation at once.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from sympy import Matrix, cos, diff, exp, expand, lambdify, pi, sin, symbols

from .errors import AssemblyError, CoefficientError
from .mesh import Face
from .space import FieldId

logger = logging.getLogger(__name__)

SPATIAL_DIM = 2

ScalarField = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
Tensor = Union[float, np.ndarray]


def _as_tensor(value) -> np.ndarray:
    """Scalar → multiple of the identity; (2,2) or (n,2,2) arrays pass through"""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(2)
    return arr


@dataclass(frozen=True)
class TpeCoefficients:
    """
    Model coefficients

    mu, K and Theta are element-wise constant: a scalar/(2,2) value applies to
    every cell, an array with a leading cell axis gives one value per cell.

    Attributes:
        a0: Effective thermal capacity
        b0: Thermal dilatation coefficient
        c0: Specific storage coefficient
        alpha: Biot-Willis constant
        beta: Thermal stress coefficient
        c_f: Fluid volumetric heat capacity over reference temperature
        mu: Lamé shear modulus (scalar or per cell)
        lam: Lamé first parameter
        K: Permeability over viscosity (2×2 SPD, or per cell)
        Theta: Effective thermal conductivity (2×2 SPD, or per cell)
        porosity: Porosity φ (optional, enables d0 and the Biot-Willis bound)
        K_s: Solid bulk modulus (optional)
        K_f: Fluid bulk modulus (optional)
        a_f: Fluid thermal dilatation (optional)
    """
    a0: float
    b0: float
    c0: float
    alpha: float
    beta: float
    mu: Tensor
    lam: float
    K: Tensor
    Theta: Tensor
    c_f: float = 0.0
    porosity: Optional[float] = None
    K_s: Optional[float] = None
    K_f: Optional[float] = None
    a_f: Optional[float] = None

    def mu_cell(self, c: int) -> float:
        mu = np.asarray(self.mu, dtype=float)
        return float(mu) if mu.ndim == 0 else float(mu[c])

    def K_cell(self, c: int) -> np.ndarray:
        K = _as_tensor(self.K)
        return K if K.ndim == 2 else K[c]

    def Theta_cell(self, c: int) -> np.ndarray:
        Th = _as_tensor(self.Theta)
        return Th if Th.ndim == 2 else Th[c]

    @property
    def is_uniform(self) -> bool:
        return (np.asarray(self.mu).ndim == 0 and _as_tensor(self.K).ndim == 2
                and _as_tensor(self.Theta).ndim == 2)

    @property
    def bulk_modulus(self) -> float:
        return bulk_modulus(self.lam, float(np.min(self.mu)))

    def with_overrides(self, overrides: Dict[str, float]) -> "TpeCoefficients":
        """Copy with scalar overrides (K and Theta become multiples of I)"""
        values = dict(overrides)
        for key in ("K", "Theta"):
            if key in values and np.ndim(values[key]) == 0:
                values[key] = float(values[key]) * np.eye(2)
        return replace(self, **values)


class CoefficientViolation(Enum):
    """Relations a coefficient set can violate"""
    NON_FINITE = "all coefficients finite"
    NEGATIVE_B0 = "b0 >= 0"
    A0_BELOW_B0 = "a0 >= b0"
    C0_BELOW_B0 = "c0 >= b0"
    ALPHA_NOT_POSITIVE = "alpha > 0"
    BETA_NOT_POSITIVE = "beta > 0"
    LAMBDA_NOT_POSITIVE = "lambda > 0"
    MU_NOT_POSITIVE = "mu > 0"
    NEGATIVE_CF = "c_f >= 0"
    K_NOT_SPD = "K symmetric positive definite"
    THETA_NOT_SPD = "Theta symmetric positive definite"
    POROSITY_RANGE = "0 < porosity < 1"
    HASHIN_SHTRIKMAN = "3 porosity/(2 + porosity) <= alpha <= 1"
    BIOT_WILLIS_BOUND = "beta < 1 - alpha + gamma_f"


@dataclass
class ValidationReport:
    """Result of a coefficient check"""
    ok: bool
    violations: List[CoefficientViolation]
    explanation: str

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise CoefficientError(self.explanation,
                                   {"violations": [v.value for v in self.violations]})


def _spd(tensor: np.ndarray) -> bool:
    tensors = tensor.reshape(-1, 2, 2)
    if not np.allclose(tensors, np.transpose(tensors, (0, 2, 1)), rtol=1e-12, atol=0.0):
        return False
    return bool(np.all(np.linalg.eigvalsh(tensors) > 0.0))


def bulk_modulus(lam: float, mu: float) -> float:
    """Drained bulk modulus d⁻¹(dλ + 2μ) for d = 2"""
    return (SPATIAL_DIM * lam + 2.0 * mu) / SPATIAL_DIM


def gamma_f(porosity: float, K: float, K_f: float, a_f: float, alpha: float) -> float:
    """Thermal storage ratio entering the Biot-Willis upper bound"""
    return K * porosity * (1.0 - a_f * K_f) / (K_f * (alpha - porosity))


def d0(coeffs: TpeCoefficients) -> float:
    """(1 + γ_f - α - β)(α - φ)/K, or 0 when the porosity data are missing"""
    if coeffs.porosity is None or coeffs.K_f is None:
        return 0.0
    K = coeffs.bulk_modulus
    gf = gamma_f(coeffs.porosity, K, coeffs.K_f, coeffs.a_f or 0.0, coeffs.alpha)
    return (1.0 + gf - coeffs.alpha - coeffs.beta) * (coeffs.alpha - coeffs.porosity) / K


def validate(coeffs: TpeCoefficients) -> ValidationReport:
    """Check every admissibility relation and report all violations"""
    violations: List[CoefficientViolation] = []
    scalars = [coeffs.a0, coeffs.b0, coeffs.c0, coeffs.alpha, coeffs.beta, coeffs.lam, coeffs.c_f]
    K = _as_tensor(coeffs.K)
    Th = _as_tensor(coeffs.Theta)
    mu = np.asarray(coeffs.mu, dtype=float)
    if not (np.isfinite(scalars).all() and np.isfinite(K).all()
            and np.isfinite(Th).all() and np.isfinite(mu).all()):
        violations.append(CoefficientViolation.NON_FINITE)
        return ValidationReport(False, violations, "non-finite coefficient values")

    if coeffs.b0 < 0:
        violations.append(CoefficientViolation.NEGATIVE_B0)
    if coeffs.a0 < coeffs.b0:
        violations.append(CoefficientViolation.A0_BELOW_B0)
    if coeffs.c0 < coeffs.b0:
        violations.append(CoefficientViolation.C0_BELOW_B0)
    if coeffs.alpha <= 0:
        violations.append(CoefficientViolation.ALPHA_NOT_POSITIVE)
    if coeffs.beta <= 0:
        violations.append(CoefficientViolation.BETA_NOT_POSITIVE)
    if coeffs.lam <= 0:
        violations.append(CoefficientViolation.LAMBDA_NOT_POSITIVE)
    if np.any(mu <= 0):
        violations.append(CoefficientViolation.MU_NOT_POSITIVE)
    if coeffs.c_f < 0:
        violations.append(CoefficientViolation.NEGATIVE_CF)
    if not _spd(K):
        violations.append(CoefficientViolation.K_NOT_SPD)
    if not _spd(Th):
        violations.append(CoefficientViolation.THETA_NOT_SPD)

    phi = coeffs.porosity
    if phi is not None:
        if not 0.0 < phi < 1.0:
            violations.append(CoefficientViolation.POROSITY_RANGE)
        elif not 3.0 * phi / (2.0 + phi) <= coeffs.alpha <= 1.0:
            violations.append(CoefficientViolation.HASHIN_SHTRIKMAN)
        elif coeffs.K_f is not None and coeffs.alpha > phi:
            gf = gamma_f(phi, coeffs.bulk_modulus, coeffs.K_f, coeffs.a_f or 0.0, coeffs.alpha)
            if not coeffs.beta < 1.0 - coeffs.alpha + gf:
                violations.append(CoefficientViolation.BIOT_WILLIS_BOUND)

    if violations:
        explanation = "coefficient relations violated: " + ", ".join(v.value for v in violations)
    else:
        explanation = "all coefficient relations hold"
    return ValidationReport(not violations, violations, explanation)


@dataclass
class StorageCoefficients:
    """Storage coefficients derived from porosity and bulk moduli"""
    alpha: float
    b0: float
    c0: float
    gamma_f: float
    report: ValidationReport


def derive_storage_coefficients(porosity: float, K_s: float, K_f: float, a_f: float,
                                beta: float, lam: float, mu: float) -> StorageCoefficients:
    """
    α, b0, c0 from the micro-structure parameters

        K  = λ + μ            (d = 2)
        α  = 1 - K/K_s
        b0 = β(α - φ)/K + φ a_f
        c0 = (α - φ)/K_s + φ/K_f

    The Hashin-Shtrikman lower bound on α is reported in the returned
    validation report; α <= φ and a violated Biot-Willis bound raise.

    Raises:
        CoefficientError: φ outside (0, 1), non-positive moduli, α <= φ, or
            β >= 1 - α + γ_f
    """
    if not 0.0 < porosity < 1.0:
        raise CoefficientError("porosity must lie in (0, 1)", {"porosity": porosity})
    if K_s <= 0 or K_f <= 0:
        raise CoefficientError("bulk moduli must be positive", {"K_s": K_s, "K_f": K_f})
    K = bulk_modulus(lam, mu)
    alpha = 1.0 - K / K_s
    if alpha <= porosity:
        raise CoefficientError("Biot-Willis constant must exceed the porosity",
                               {"alpha": alpha, "porosity": porosity})
    b0 = beta * (alpha - porosity) / K + porosity * a_f
    c0 = (alpha - porosity) / K_s + porosity / K_f
    gf = gamma_f(porosity, K, K_f, a_f, alpha)
    if not beta < 1.0 - alpha + gf:
        raise CoefficientError("beta violates the Biot-Willis upper bound",
                               {"beta": beta, "bound": 1.0 - alpha + gf})
    a0 = max(b0, c0)
    report = validate(TpeCoefficients(a0=a0, b0=b0, c0=c0, alpha=alpha, beta=beta, mu=mu,
                                      lam=lam, K=1.0, Theta=1.0, porosity=porosity,
                                      K_s=K_s, K_f=K_f, a_f=a_f))
    return StorageCoefficients(alpha=alpha, b0=b0, c0=c0, gamma_f=gf, report=report)


# Penalties

class PenaltyKind(Enum):
    """Face stabilization functions"""
    HEAT = "heat"            # σ, Θ
    FLOW = "flow"            # ξ, K
    ELASTICITY = "elasticity"  # ζ, μ
    PSTAB = "pstab"          # ϱ, φ stabilization


@dataclass(frozen=True)
class PenaltyParams:
    """Multipliers α1..α4 of σ, ξ, ζ and ϱ"""
    alpha1: float = 10.0
    alpha2: float = 10.0
    alpha3: float = 10.0
    alpha4: float = 1.0

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.alpha3, self.alpha4) <= 0:
            raise CoefficientError("penalty multipliers must be positive")

    def multiplier(self, kind: PenaltyKind) -> float:
        return {PenaltyKind.HEAT: self.alpha1, PenaltyKind.FLOW: self.alpha2,
                PenaltyKind.ELASTICITY: self.alpha3, PenaltyKind.PSTAB: self.alpha4}[kind]


def penalty_value(kind: PenaltyKind, params: PenaltyParams, degree: int,
                  h_plus: float, coef_plus: float = 1.0,
                  h_minus: Optional[float] = None, coef_minus: float = 1.0) -> float:
    """
    Penalty from the incident cell data

    Diffusive kinds take α·max±(coef ℓ²/h); the φ stabilization takes
    α4·min±(h/m). Boundary faces pass h_minus=None.
    """
    a = params.multiplier(kind)
    if kind == PenaltyKind.PSTAB:
        m = max(degree, 1)
        hs = [h_plus] if h_minus is None else [h_plus, h_minus]
        return a * min(h / m for h in hs)
    values = [coef_plus * degree ** 2 / h_plus]
    if h_minus is not None:
        values.append(coef_minus * degree ** 2 / h_minus)
    return a * max(values)


def cell_scale(kind: PenaltyKind, coeffs: TpeCoefficients, c: int) -> float:
    """Element-wise coefficient size: |√Θ|₂², |√K|₂², μ (1 for φ)"""
    if kind == PenaltyKind.HEAT:
        return float(np.linalg.eigvalsh(coeffs.Theta_cell(c)).max())
    if kind == PenaltyKind.FLOW:
        return float(np.linalg.eigvalsh(coeffs.K_cell(c)).max())
    if kind == PenaltyKind.ELASTICITY:
        return coeffs.mu_cell(c)
    return 1.0


def penalty(face: Face, kind: PenaltyKind, space, coeffs: TpeCoefficients,
            params: PenaltyParams) -> float:
    """Stabilization weight of one face for the given form"""
    degree = {
        PenaltyKind.HEAT: space.degree_of(FieldId.T),
        PenaltyKind.FLOW: space.degree_of(FieldId.P),
        PenaltyKind.ELASTICITY: space.degree_of(FieldId.U),
        PenaltyKind.PSTAB: space.degree_of(FieldId.PHI),
    }[kind]
    geo = space.mesh.geometry
    plus = face.cell_plus
    minus = face.cell_minus
    return penalty_value(
        kind, params, degree,
        geo[plus].diameter, cell_scale(kind, coeffs, plus),
        geo[minus].diameter if minus is not None else None,
        cell_scale(kind, coeffs, minus) if minus is not None else 1.0,
    )


# Boundary conditions

@dataclass(frozen=True)
class Dirichlet:
    """Prescribed trace g(x, y, t)"""
    value: Callable


@dataclass(frozen=True)
class Neumann:
    """Prescribed outward flux (traction for u) h(x, y, t)"""
    flux: Callable


@dataclass(frozen=True)
class Robin:
    """γ(T - ambient) + Θ∇T·n = 0 (temperature only)"""
    gamma: float
    ambient: Callable


Condition = Union[Dirichlet, Neumann, Robin]


@dataclass
class BoundaryConditions:
    """Conditions per field and boundary tag"""
    displacement: Dict[int, Condition]
    pressure: Dict[int, Condition]
    temperature: Dict[int, Condition]

    def __post_init__(self):
        for table in (self.displacement, self.pressure):
            if any(isinstance(cond, Robin) for cond in table.values()):
                raise CoefficientError("Robin conditions apply to the temperature only")

    def for_field(self, name: str) -> Dict[int, Condition]:
        return {"u": self.displacement, "p": self.pressure, "T": self.temperature}[name]

    def check_tags(self, tags) -> None:
        """Every boundary tag must have a condition for every field"""
        for name in ("u", "p", "T"):
            missing = sorted(set(tags) - set(self.for_field(name)))
            if missing:
                raise AssemblyError(f"no {name} boundary condition for tags {missing}")


def constant_scalar(value: float) -> ScalarField:
    def evaluate(x, y, t):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(value))
    return evaluate


def constant_vector(vx: float, vy: float) -> VectorField:
    def evaluate(x, y, t):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        out = np.empty(shape + (2,))
        out[..., 0] = vx
        out[..., 1] = vy
        return out
    return evaluate


def homogeneous_dirichlet(tags=(1, 2, 3, 4)) -> BoundaryConditions:
    zero_s = constant_scalar(0.0)
    zero_v = constant_vector(0.0, 0.0)
    return BoundaryConditions(
        displacement={t: Dirichlet(zero_v) for t in tags},
        pressure={t: Dirichlet(zero_s) for t in tags},
        temperature={t: Dirichlet(zero_s) for t in tags},
    )


# Problems

@dataclass
class ExactSolution:
    """Closed-form fields; vector closures return (..., 2), gradients (..., 2) or (..., 2, 2)"""
    u: VectorField
    grad_u: Callable
    p: ScalarField
    grad_p: VectorField
    T: ScalarField
    grad_T: VectorField
    phi: ScalarField


@dataclass
class Problem:
    """
    Everything the solver needs besides the discretization

    Attributes:
        name: Identifier used in logs and outputs
        coefficients: Model coefficients
        bcs: Boundary conditions per field and tag
        f, g, H: Momentum, mass and energy sources
        u0, p0, T0: Initial fields
        domain: (xmin, xmax, ymin, ymax)
        exact: Closed-form solution, when known
    """
    name: str
    coefficients: TpeCoefficients
    bcs: BoundaryConditions
    f: VectorField
    g: ScalarField
    H: ScalarField
    u0: VectorField
    p0: ScalarField
    T0: ScalarField
    domain: Tuple[float, float, float, float]
    exact: Optional[ExactSolution] = None

    @property
    def nonlinear(self) -> bool:
        return self.coefficients.c_f > 0.0


@dataclass
class ManufacturedCase(Problem):
    """Problem with forcing obtained by substituting exact fields into the strong system"""
    steady: bool = False
    expressions: Dict[str, object] = field(default_factory=dict)


_x, _y, _t = symbols("x y t", real=True)


def _scalar_closure(expr) -> ScalarField:
    fn = lambdify((_x, _y, _t), expr, modules="numpy")

    def evaluate(x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(np.asarray(fn(x, y, t), dtype=float), shape).copy()
    return evaluate


def _vector_closure(exprs) -> VectorField:
    parts = [_scalar_closure(e) for e in exprs]

    def evaluate(x, y, t):
        return np.stack([part(x, y, t) for part in parts], axis=-1)
    return evaluate


def _tensor_closure(rows) -> Callable:
    parts = [_vector_closure(r) for r in rows]

    def evaluate(x, y, t):
        return np.stack([part(x, y, t) for part in parts], axis=-2)
    return evaluate


def baseline_coefficients(c_f: float = 0.0) -> TpeCoefficients:
    """Coefficients of the convergence study (c_f is not tabulated: 0 linear, 1 nonlinear)"""
    return TpeCoefficients(a0=0.02, b0=0.01, c0=0.03, alpha=1.0, beta=0.8, mu=1.0, lam=5.0,
                           K=0.2 * np.eye(2), Theta=0.05 * np.eye(2), c_f=c_f)


def convergence_case(coeffs: Optional[TpeCoefficients] = None, steady: bool = False) -> ManufacturedCase:
    """
    Manufactured solution on (0, 2)²

        u1 = (eᵗ-1)(sin 2πy (cos 2πx - 1) + sin πx sin πy/(μ+λ))
        u2 = (eᵗ-1)(sin 2πx (1 - cos 2πy) + sin πx sin πy/(μ+λ))
        p  = (eᵗ-1) sin πx sin πy
        T  = (eᵗ-1)(cos 2πx - 1)(cos 2πy - 1)

    All fields vanish at t = 0 and on ∂Ω. With steady=True the time
    derivative in the forcing is replaced by the backward difference over one
    unit step, so one backward Euler step of length 1 from rest targets the
    fields at t = 1.

    Args:
        coeffs: Uniform coefficients (default: convergence table, c_f = 0)
        steady: Build the one-step steady forcing
    """
    coeffs = coeffs or baseline_coefficients()
    if not coeffs.is_uniform:
        raise CoefficientError("manufactured forcing needs uniform coefficients")
    a0, b0, c0 = coeffs.a0, coeffs.b0, coeffs.c0
    alpha, beta, lam, c_f = coeffs.alpha, coeffs.beta, coeffs.lam, coeffs.c_f
    mu = float(coeffs.mu)
    K = Matrix(_as_tensor(coeffs.K).tolist())
    Th = Matrix(_as_tensor(coeffs.Theta).tolist())
    x, y, t = _x, _y, _t

    ramp = exp(t) - 1
    bubble = sin(pi * x) * sin(pi * y)
    u1 = ramp * (sin(2 * pi * y) * (cos(2 * pi * x) - 1) + bubble / (mu + lam))
    u2 = ramp * (sin(2 * pi * x) * (1 - cos(2 * pi * y)) + bubble / (mu + lam))
    p = ramp * bubble
    T = ramp * (cos(2 * pi * x) - 1) * (cos(2 * pi * y) - 1)

    divu = expand(diff(u1, x) + diff(u2, y))
    phi = lam * divu - alpha * p - beta * T
    grad_p = Matrix([diff(p, x), diff(p, y)])
    grad_T = Matrix([diff(T, x), diff(T, y)])

    def d_dt(expr):
        if steady:
            return expr - expr.subs(t, t - 1)
        return diff(expr, t)

    def div(vec):
        return diff(vec[0], x) + diff(vec[1], y)

    H = (d_dt(a0 * T - b0 * p + beta * divu)
         - c_f * (grad_T.T * K * grad_p)[0, 0]
         - div(Th * grad_T))
    g = d_dt(c0 * p - b0 * T + alpha * divu) - div(K * grad_p)
    grad_divu = [diff(divu, x), diff(divu, y)]
    lap = [diff(u1, x, 2) + diff(u1, y, 2), diff(u2, x, 2) + diff(u2, y, 2)]
    f = [
        -(mu * (lap[0] + grad_divu[0]) + lam * grad_divu[0]) + alpha * grad_p[0] + beta * grad_T[0],
        -(mu * (lap[1] + grad_divu[1]) + lam * grad_divu[1]) + alpha * grad_p[1] + beta * grad_T[1],
    ]

    exact = ExactSolution(
        u=_vector_closure([u1, u2]),
        grad_u=_tensor_closure([[diff(u1, x), diff(u1, y)], [diff(u2, x), diff(u2, y)]]),
        p=_scalar_closure(p),
        grad_p=_vector_closure(list(grad_p)),
        T=_scalar_closure(T),
        grad_T=_vector_closure(list(grad_T)),
        phi=_scalar_closure(phi),
    )
    tags = (1, 2, 3, 4)
    bcs = BoundaryConditions(
        displacement={tag: Dirichlet(exact.u) for tag in tags},
        pressure={tag: Dirichlet(exact.p) for tag in tags},
        temperature={tag: Dirichlet(exact.T) for tag in tags},
    )
    name = "manufactured-steady" if steady else "manufactured"
    logger.debug(f"{name} case built (c_f={c_f})")
    return ManufacturedCase(
        name=name,
        coefficients=coeffs,
        bcs=bcs,
        f=_vector_closure(f),
        g=_scalar_closure(g),
        H=_scalar_closure(H),
        u0=lambda xx, yy, tt=0.0: exact.u(xx, yy, 0.0),
        p0=lambda xx, yy, tt=0.0: exact.p(xx, yy, 0.0),
        T0=lambda xx, yy, tt=0.0: exact.T(xx, yy, 0.0),
        domain=(0.0, 2.0, 0.0, 2.0),
        exact=exact,
        steady=steady,
        expressions={"u1": u1, "u2": u2, "p": p, "T": T, "phi": phi, "divu": divu,
                     "f1": f[0], "f2": f[1], "g": g, "H": H},
    )


@dataclass(frozen=True)
class RobustnessTest:
    """One parameter set of the robustness study"""
    name: str
    coefficients: TpeCoefficients
    nonlinear_only: bool = False


def robustness_cases() -> List[RobustnessTest]:
    """Tests (i)-(iv): degenerate storage, tiny diffusivities, quasi-incompressibility"""
    base = baseline_coefficients()
    zero = dict(a0=0.0, b0=0.0, c0=0.0)
    return [
        RobustnessTest("i", replace(base, **zero, lam=5e6, K=0.2 * np.eye(2), Theta=0.05 * np.eye(2))),
        RobustnessTest("ii", replace(base, a0=0.01, b0=0.01, c0=0.01, lam=5.0,
                                     K=2e-7 * np.eye(2), Theta=5e-8 * np.eye(2))),
        RobustnessTest("iii", replace(base, **zero, lam=5.0, K=0.2 * np.eye(2), Theta=5e-8 * np.eye(2))),
        RobustnessTest("iv", replace(base, **zero, lam=5.0, K=2e-7 * np.eye(2), Theta=0.05 * np.eye(2)),
                       nonlinear_only=True),
    ]


def geothermal_case(T_inj: float = 60.0, T_ext: float = 120.0, p_inj: float = 1.0,
                    p_ext: float = -1.0, gamma: float = 0.01,
                    coeffs: Optional[TpeCoefficients] = None,
                    T_initial: float = 0.0, p_initial: float = 0.0) -> Problem:
    """
    Injection/extraction slab (0, 4) × (0, 1)

    Left side (tag 4) injects at (p_inj, T_inj), right side (tag 2) extracts
    at (p_ext, T_ext), both clamped. Top and bottom are traction free,
    impermeable and exchange heat with the T_ext reservoir through a Robin
    condition. No sources.
    """
    coeffs = coeffs or baseline_coefficients(c_f=1.0)
    zero_v = constant_vector(0.0, 0.0)
    zero_s = constant_scalar(0.0)
    ext = constant_scalar(T_ext)
    bcs = BoundaryConditions(
        displacement={1: Neumann(zero_v), 2: Dirichlet(zero_v), 3: Neumann(zero_v), 4: Dirichlet(zero_v)},
        pressure={1: Neumann(zero_s), 2: Dirichlet(constant_scalar(p_ext)),
                  3: Neumann(zero_s), 4: Dirichlet(constant_scalar(p_inj))},
        temperature={1: Robin(gamma, ext), 2: Dirichlet(ext),
                     3: Robin(gamma, ext), 4: Dirichlet(constant_scalar(T_inj))},
    )
    return Problem(
        name=f"geothermal-Tinj{T_inj:g}",
        coefficients=coeffs,
        bcs=bcs,
        f=zero_v,
        g=zero_s,
        H=zero_s,
        u0=zero_v,
        p0=constant_scalar(p_initial),
        T0=constant_scalar(T_initial),
        domain=(0.0, 4.0, 0.0, 1.0),
    )


# Strong-form oracle

_D1 = (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, np.arange(-2, 3))
_D2 = (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, np.arange(-2, 3))


def _fd(fn: Callable, point: Tuple, axis: int, order: int, step: float):
    weights, shifts = _D1 if order == 1 else _D2
    total = 0.0
    for w, s in zip(weights, shifts):
        if w == 0.0:
            continue
        shifted = list(point)
        shifted[axis] = shifted[axis] + s * step
        total = total + w * fn(*shifted)
    return total / step ** order


def strong_residual(case: Problem, x, y, t, step: float = 1e-3) -> Dict[str, np.ndarray]:
    """
    Residuals of the strong system for the exact fields and the case forcing

    Derivatives are fourth-order central differences of the exact closures,
    independent of the symbolic path that produced the forcing.

    Returns:
        {"energy": (...), "mass": (...), "momentum": (..., 2)}
    """
    if case.exact is None:
        raise CoefficientError("strong residual needs an exact solution")
    ex = case.exact
    co = case.coefficients
    K = _as_tensor(co.K)
    Th = _as_tensor(co.Theta)
    mu = float(co.mu)
    pt = (np.asarray(x, dtype=float), np.asarray(y, dtype=float), t)
    steady = getattr(case, "steady", False)

    def u_comp(i):
        return lambda a, b, c: ex.u(a, b, c)[..., i]

    def partial(fn, axes):
        if len(axes) == 1:
            return _fd(fn, pt, axes[0], 1, step)
        if axes[0] == axes[1]:
            return _fd(fn, pt, axes[0], 2, step)
        inner = lambda a, b, c: _fd(fn, (a, b, c), axes[1], 1, step)  # noqa: E731
        return _fd(inner, pt, axes[0], 1, step)

    def divu_at(a, b, c):
        return (_fd(u_comp(0), (a, b, c), 0, 1, step)
                + _fd(u_comp(1), (a, b, c), 1, 1, step))

    def d_dt(fn):
        if steady:
            return fn(pt[0], pt[1], t) - fn(pt[0], pt[1], t - 1.0)
        return _fd(fn, pt, 2, 1, step)

    def diffusion(fn, tensor):
        total = 0.0
        for i in range(2):
            for j in range(2):
                if tensor[i, j] != 0.0:
                    total = total + tensor[i, j] * partial(fn, (i, j))
        return total

    grad_T = np.stack([partial(ex.T, (0,)), partial(ex.T, (1,))], axis=-1)
    grad_p = np.stack([partial(ex.p, (0,)), partial(ex.p, (1,))], axis=-1)
    convective = np.einsum("...i,ij,...j->...", grad_T, K, grad_p)

    energy_store = lambda a, b, c: co.a0 * ex.T(a, b, c) - co.b0 * ex.p(a, b, c) + co.beta * divu_at(a, b, c)  # noqa: E731
    mass_store = lambda a, b, c: co.c0 * ex.p(a, b, c) - co.b0 * ex.T(a, b, c) + co.alpha * divu_at(a, b, c)  # noqa: E731

    energy = d_dt(energy_store) - co.c_f * convective - diffusion(ex.T, Th) - case.H(*pt)
    mass = d_dt(mass_store) - diffusion(ex.p, K) - case.g(*pt)

    momentum = []
    for i in range(2):
        lap = partial(u_comp(i), (0, 0)) + partial(u_comp(i), (1, 1))
        grad_div = partial(u_comp(0), (i, 0)) + partial(u_comp(1), (i, 1))
        momentum.append(-(mu * (lap + grad_div) + co.lam * grad_div)
                        + co.alpha * grad_p[..., i] + co.beta * grad_T[..., i])
    momentum = np.stack(momentum, axis=-1) - case.f(*pt)
    return {"energy": energy, "mass": mass, "momentum": momentum}


def describe(coeffs: TpeCoefficients) -> Dict[str, float]:
    """Scalar summary for logs and config dumps"""
    return {
        "a0": coeffs.a0, "b0": coeffs.b0, "c0": coeffs.c0, "alpha": coeffs.alpha,
        "beta": coeffs.beta, "c_f": coeffs.c_f, "lam": coeffs.lam,
        "mu": float(np.max(coeffs.mu)),
        "K": float(np.max(np.linalg.eigvalsh(_as_tensor(coeffs.K).reshape(-1, 2, 2)))),
        "Theta": float(np.max(np.linalg.eigvalsh(_as_tensor(coeffs.Theta).reshape(-1, 2, 2)))),
        "ratio_lam_mu": coeffs.lam / float(np.min(coeffs.mu)),
    }
