"""
Schur-complement reduction of the zero-conductance flux variables.

The rows in Λ₁ carry no resistive term, so N_{Λ₁,·}(θ)Ψ = 0 holds at all
times and Ψ_{Λ₁} = A₀(θ)Ψ_{Λ₂} with A₀ = −N₁₁⁻¹N₁₂. Both A₀ and the reduced
stiffness Ñ = N₂A lie in span{1, sinθ, cosθ, sin2θ, cos2θ}, so they are
recovered exactly from eight samples and evaluated in closed form afterwards.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict

import numpy as np
from scipy import linalg

from .errors import ReductionError
from .model import IndexPartition, StageSystem

logger = logging.getLogger(__name__)

FAMILY_MEMBERS = ("S0", "S1", "C1", "S2", "C2")
FIT_VALIDATION_POINTS = 50
FIT_RTOL = 1.0e-9
FIT_SEED = 20240


@dataclass(frozen=True)
class TrigMatrixFamily:
    """
    Matrix function S0 + S1 sinθ + C1 cosθ + S2 sin2θ + C2 cos2θ.

    Attributes:
        coeffs: Array of shape (5, rows, cols) holding S0, S1, C1, S2, C2
    """
    coeffs: np.ndarray

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    def members(self) -> Dict[str, np.ndarray]:
        return dict(zip(FAMILY_MEMBERS, self.coeffs))

    def eval(self, theta: float) -> np.ndarray:
        s1, c1 = math.sin(theta), math.cos(theta)
        s2, c2 = math.sin(2.0 * theta), math.cos(2.0 * theta)
        return np.tensordot(np.array([1.0, s1, c1, s2, c2]), self.coeffs, axes=1)

    def deriv(self, theta: float) -> np.ndarray:
        s1, c1 = math.sin(theta), math.cos(theta)
        s2, c2 = math.sin(2.0 * theta), math.cos(2.0 * theta)
        return np.tensordot(np.array([0.0, c1, -s1, 2.0 * c2, -2.0 * s2]), self.coeffs, axes=1)

    def deriv2(self, theta: float) -> np.ndarray:
        s1, c1 = math.sin(theta), math.cos(theta)
        s2, c2 = math.sin(2.0 * theta), math.cos(2.0 * theta)
        return np.tensordot(np.array([0.0, -s1, -c1, -4.0 * s2, -4.0 * c2]), self.coeffs, axes=1)


def fit_trig(
    sample: Callable[[float], np.ndarray],
    validation_points: int = FIT_VALIDATION_POINTS,
    rtol: float = FIT_RTOL,
    seed: int = FIT_SEED
) -> TrigMatrixFamily:
    """
    Recover the five coefficient matrices of a trigonometric matrix function.

    Samples θ ∈ {0, ±π/4, ±π/2, ±π, ±3π/2} and applies the closed-form recovery
    formulas, then checks the family against ``sample`` at seeded random angles.

    Args:
        sample: θ ↦ matrix (scalars are promoted to 1×1)
        validation_points: Number of random validation angles
        rtol: Allowed relative Frobenius error at each validation angle
        seed: Seed of the validation angle generator

    Returns:
        TrigMatrixFamily: The fitted family

    Raises:
        ReductionError: If the function is not in the five-term span
    """
    def B(theta: float) -> np.ndarray:
        return np.atleast_2d(np.asarray(sample(theta), dtype=float))

    half_pi = 0.5 * math.pi
    quarter_pi = 0.25 * math.pi
    S0 = sum(B(k * half_pi) + B(-k * half_pi) for k in range(4)) / 8.0
    S1 = 0.5 * B(half_pi) - 0.5 * B(-half_pi)
    C1 = 0.5 * B(0.0) - 0.25 * B(math.pi) - 0.25 * B(-math.pi)
    S2 = 0.5 * B(quarter_pi) - 0.5 * B(-quarter_pi) - (math.sqrt(2.0) / 2.0) * S1
    C2 = 0.5 * B(0.0) + 0.25 * B(math.pi) + 0.25 * B(-math.pi) - S0
    family = TrigMatrixFamily(np.stack([S0, S1, C1, S2, C2]))

    rng = np.random.default_rng(seed)
    scale = max(np.linalg.norm(B(0.0)), np.abs(family.coeffs).max(initial=0.0), 1e-300)
    for theta in rng.uniform(-math.pi, math.pi, validation_points):
        expected = B(theta)
        error = np.linalg.norm(family.eval(theta) - expected)
        if error > rtol * max(np.linalg.norm(expected), scale):
            raise ReductionError(
                f"Trigonometric fit does not reproduce the sampled function at θ={theta:.6f} "
                f"(error={error:.3e}); the topology is outside the supported class"
            )
    return family


def partition_from_KR(K_R_extended: np.ndarray, n: int) -> IndexPartition:
    """
    Classify a conductance diagonal into Λ₀ (inf), Λ₁ (0) and Λ₂ (finite, positive).

    Args:
        K_R_extended: Diagonal of K_R with entries in [0, inf]
        n: Network node count

    Returns:
        IndexPartition: Partition with positions taken after removing Λ₀
    """
    return IndexPartition.from_conductances(np.asarray(K_R_extended, dtype=float), n)


def a0_direct(N: np.ndarray, partition: IndexPartition) -> np.ndarray:
    """A₀ = −N_{Λ₁,Λ₁}⁻¹ N_{Λ₁,Λ₂}, shape |Λ₁|×|Λ₂|."""
    l1, l2 = list(partition.lambda1), list(partition.lambda2)
    if not l1:
        return np.zeros((0, len(l2)))
    try:
        factor = linalg.cho_factor(N[np.ix_(l1, l1)])
    except linalg.LinAlgError as e:
        raise ReductionError(f"N restricted to Λ₁ is not positive definite: {e}") from e
    return -linalg.cho_solve(factor, N[np.ix_(l1, l2)])


def a_of_theta_direct(N: np.ndarray, partition: IndexPartition) -> np.ndarray:
    """
    A(θ) = (A₀; I) stacked as Λ₁ rows followed by Λ₂ rows.

    Args:
        N: N(θ) at the angle of interest
        partition: Index partition of the stage

    Returns:
        np.ndarray: Matrix of shape (|Λ₁|+|Λ₂|)×|Λ₂|
    """
    return np.vstack([a0_direct(N, partition), np.eye(len(partition.lambda2))])


def n_tilde_direct(N: np.ndarray, partition: IndexPartition) -> np.ndarray:
    """Ñ = N₂A = N_{Λ₂,Λ₁}A₀ + N_{Λ₂,Λ₂}, symmetrized."""
    l1, l2 = list(partition.lambda1), list(partition.lambda2)
    reduced = N[np.ix_(l2, l2)].copy()
    if l1:
        reduced += N[np.ix_(l2, l1)] @ a0_direct(N, partition)
    return 0.5 * (reduced + reduced.T)


@dataclass(frozen=True)
class ReducedSystem:
    """
    Reduced stage system K̃_R Ψ̃̇ + Ñ(θ)Ψ̃ = f̃(t) in the Λ₂ coordinates.

    Exposes the same provider interface as StageSystem (kr, n_matrix and its
    θ-derivatives, source, mechanical matrices), so either can drive a
    port-Hamiltonian integration.
    """
    stage: StageSystem
    A_fam: TrigMatrixFamily
    N_fam: TrigMatrixFamily

    @property
    def name(self) -> str:
        return self.stage.name

    @property
    def partition(self) -> IndexPartition:
        return self.stage.partition

    @property
    def dim(self) -> int:
        return len(self.partition.lambda2)

    @cached_property
    def kr(self) -> np.ndarray:
        """Diagonal of K̃_R, strictly positive."""
        return self.stage.kr[list(self.partition.lambda2)]

    @property
    def stiffness(self) -> np.ndarray:
        return self.stage.stiffness

    @property
    def inertia(self) -> np.ndarray:
        return self.stage.inertia

    @property
    def damping(self) -> np.ndarray:
        return self.stage.damping

    @property
    def torque(self) -> np.ndarray:
        return self.stage.torque

    @property
    def omega_s(self) -> float:
        return self.stage.omega_s

    def n_matrix(self, theta: float) -> np.ndarray:
        return self.N_fam.eval(theta)

    def n_matrix_d(self, theta: float) -> np.ndarray:
        return self.N_fam.deriv(theta)

    def n_matrix_d2(self, theta: float) -> np.ndarray:
        return self.N_fam.deriv2(theta)

    def source(self, t: float) -> np.ndarray:
        return self.stage.source(t)[list(self.partition.lambda2)]

    def source_rate(self, t: float) -> np.ndarray:
        return self.stage.source_rate(t)[list(self.partition.lambda2)]

    def a_matrix(self, theta: float) -> np.ndarray:
        """Fitted A(θ) = (A₀(θ); I)."""
        return np.vstack([self.A_fam.eval(theta), np.eye(self.dim)])

    def restrict(self, psi: np.ndarray) -> np.ndarray:
        """Λ₂ components of a stage-coordinate vector."""
        return np.asarray(psi)[list(self.partition.lambda2)]

    def lift(self, theta: float, psi_tilde: np.ndarray) -> np.ndarray:
        """
        Full stage flux with Ψ_{Λ₁} = A₀(θ)Ψ̃ and Ψ_{Λ₂} = Ψ̃.

        Args:
            theta: Rotor angle θ₅
            psi_tilde: Reduced flux

        Returns:
            np.ndarray: Flux in the stage's post-removal coordinates
        """
        psi = np.zeros(self.stage.dim)
        psi[list(self.partition.lambda2)] = psi_tilde
        if self.partition.lambda1:
            psi[list(self.partition.lambda1)] = self.A_fam.eval(theta) @ psi_tilde
        return psi

    def lift_rate(
        self,
        theta: float,
        theta_dot: float,
        psi_tilde: np.ndarray,
        psi_tilde_dot: np.ndarray
    ) -> np.ndarray:
        """Full stage voltage via the product rule d(A₀Ψ̃)/dt = (dA₀/dθ)θ̇₅Ψ̃ + A₀Ψ̃̇."""
        rate = np.zeros(self.stage.dim)
        rate[list(self.partition.lambda2)] = psi_tilde_dot
        if self.partition.lambda1:
            rate[list(self.partition.lambda1)] = (
                self.A_fam.deriv(theta) @ psi_tilde * theta_dot + self.A_fam.eval(theta) @ psi_tilde_dot
            )
        return rate

    def electromagnetic_torque(self, theta: float, psi_tilde: np.ndarray) -> float:
        """T_E = ½Ψ̃ᵀ(dÑ/dθ)Ψ̃."""
        return 0.5 * float(psi_tilde @ self.N_fam.deriv(theta) @ psi_tilde)


def reduce(stage: StageSystem) -> ReducedSystem:
    """
    Build the reduced system of a stage whose shorted rows are already removed.

    Args:
        stage: Stage with a finite conductance diagonal

    Returns:
        ReducedSystem: Fitted A₀ and Ñ families

    Raises:
        ReductionError: If the stage still has shorted rows or a fit fails
    """
    if not np.all(np.isfinite(stage.kr)):
        raise ReductionError(f"Stage {stage.name} still contains ground-shorted rows")
    partition = stage.partition
    if partition.lambda1:
        A_fam = fit_trig(lambda theta: a0_direct(stage.n_matrix(theta), partition))
    else:
        A_fam = TrigMatrixFamily(np.zeros((5, 0, len(partition.lambda2))))
    N_fam = fit_trig(lambda theta: n_tilde_direct(stage.n_matrix(theta), partition))
    logger.info(f"Stage {stage.name}: reduced electrical dimension {stage.dim} -> {len(partition.lambda2)}")
    return ReducedSystem(stage=stage, A_fam=A_fam, N_fam=N_fam)
