"""
Generator-network model assembly.

Builds every coefficient matrix and forcing term of the 7-winding generator
connected to an inductive n-node network:

    K_R Ψ̇ + (K_L + Γ(θ)) Ψ = f(t)
    J θ̈ + D θ̇ + K θ + ½ Ψᵀ (dΓ/dθ) Ψ e₅ = T

Electrical indices are ordered (1α, 1β, …, nα, nβ, f, D, g, Q) and are 0-based
internally. Extended reals use ``math.inf``: an open branch is ℓ = inf, an open
ground is r = inf and a short is r = 0.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from scipy import linalg

from .errors import ModelError

logger = logging.getLogger(__name__)

INF = math.inf
N_WINDINGS = 4
N_MASSES = 6
ANGLE_INDEX = 4  # Γ depends on θ₅ only
WINDING_NAMES = ("f", "D", "g", "Q")
MAX_CONDITION = 1.0e12

# d/dθ of the 2D rotation: P'(θ) = P(θ) G
_G = np.zeros((6, 6))
_G[0, 1] = -1.0
_G[1, 0] = 1.0


def parse_extended(value: Any) -> float:
    """
    Parse an extended non-negative real from a document value.

    Args:
        value: Number or one of the strings "inf", "+inf", "infinity", "open"

    Returns:
        float: The value, ``math.inf`` for the infinite spellings
    """
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", "infinity", "open"):
            return INF
        raise ModelError(f"Cannot parse extended real '{value}'")
    return float(value)


def format_extended(value: float) -> Any:
    """Inverse of parse_extended for JSON output."""
    return "inf" if value == INF else float(value)


def reciprocal(value: float) -> float:
    """1/x on [0, +inf] with 1/inf = 0 and 1/0 = inf."""
    if value == INF:
        return 0.0
    if value == 0.0:
        return INF
    return 1.0 / value


def node_indices(node: int) -> Tuple[int, int]:
    """0-based (α, β) indices of a 0-based node."""
    return 2 * node, 2 * node + 1


def winding_indices(n: int) -> Tuple[int, ...]:
    """0-based indices of the f, D, g, Q windings for an n-node network."""
    return tuple(range(2 * n, 2 * n + N_WINDINGS))


def electrical_label(index: int, n: int) -> str:
    """Human readable label of an original 0-based electrical index, e.g. '1a' or 'f'."""
    if index >= 2 * n:
        return WINDING_NAMES[index - 2 * n]
    return f"{index // 2 + 1}{'a' if index % 2 == 0 else 'b'}"


@dataclass(frozen=True)
class GeneratorParams:
    """
    Parameters of the 7-winding synchronous generator and its 6-mass shaft.

    Γ₀ is obtained by inverting the winding inductance matrix once at
    construction.
    """
    winding_L: np.ndarray
    r_f: float
    r_D: float
    r_g: float
    r_Q: float
    J_diag: np.ndarray
    K_springs: np.ndarray
    T_fracs: np.ndarray
    T0: float
    U_f: float
    gamma0: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        L = np.array(self.winding_L, dtype=float)
        if L.shape != (6, 6):
            raise ModelError(f"winding_L must be 6x6, got {L.shape}")
        if not np.allclose(L, L.T, rtol=0.0, atol=1e-14 * np.abs(L).max()):
            raise ModelError("winding_L must be symmetric")
        J_diag = np.array(self.J_diag, dtype=float)
        K_springs = np.array(self.K_springs, dtype=float)
        T_fracs = np.array(self.T_fracs, dtype=float)
        if J_diag.shape != (N_MASSES,) or np.any(J_diag <= 0):
            raise ModelError("J_diag needs 6 strictly positive inertias")
        if K_springs.shape != (N_MASSES - 1,) or np.any(K_springs <= 0):
            raise ModelError("K_springs needs 5 strictly positive stiffnesses")
        if T_fracs.shape != (N_MASSES,):
            raise ModelError("T_fracs needs 6 entries")
        for name in ("r_f", "r_D", "r_g", "r_Q"):
            value = getattr(self, name)
            if not (0.0 < value < INF):
                raise ModelError(f"Winding resistance {name} must be finite and positive, got {value}")

        condition = np.linalg.cond(L)
        if condition > MAX_CONDITION:
            raise ModelError(f"winding_L is ill-conditioned (cond={condition:.3e})")
        try:
            factor = linalg.cho_factor(L)
        except linalg.LinAlgError as e:
            raise ModelError(f"winding_L is not positive definite: {e}") from e
        gamma0 = linalg.cho_solve(factor, np.eye(6))

        object.__setattr__(self, "winding_L", L)
        object.__setattr__(self, "J_diag", J_diag)
        object.__setattr__(self, "K_springs", K_springs)
        object.__setattr__(self, "T_fracs", T_fracs)
        object.__setattr__(self, "gamma0", 0.5 * (gamma0 + gamma0.T))

    @property
    def winding_resistances(self) -> np.ndarray:
        return np.array([self.r_f, self.r_D, self.r_g, self.r_Q])

    @cached_property
    def inertia(self) -> np.ndarray:
        return np.diag(self.J_diag)

    @cached_property
    def stiffness(self) -> np.ndarray:
        """Tridiagonal shaft stiffness K; rows sum to zero."""
        K = np.zeros((N_MASSES, N_MASSES))
        for i, k in enumerate(self.K_springs):
            K[i, i] += k
            K[i + 1, i + 1] += k
            K[i, i + 1] -= k
            K[i + 1, i] -= k
        return K

    @cached_property
    def damping(self) -> np.ndarray:
        return np.zeros((N_MASSES, N_MASSES))

    @cached_property
    def torque(self) -> np.ndarray:
        return self.T0 * self.T_fracs

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "GeneratorParams":
        """Build from a document mirroring the field names."""
        try:
            return cls(
                winding_L=np.array(doc["winding_L"], dtype=float),
                r_f=float(doc["r_f"]),
                r_D=float(doc["r_D"]),
                r_g=float(doc["r_g"]),
                r_Q=float(doc["r_Q"]),
                J_diag=np.array(doc["J_diag"], dtype=float),
                K_springs=np.array(doc["K_springs"], dtype=float),
                T_fracs=np.array(doc["T_fracs"], dtype=float),
                T0=float(doc["T0"]),
                U_f=float(doc["U_f"]),
            )
        except KeyError as e:
            raise ModelError(f"Generator document is missing field {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "winding_L": self.winding_L.tolist(),
            "r_f": self.r_f,
            "r_D": self.r_D,
            "r_g": self.r_g,
            "r_Q": self.r_Q,
            "J_diag": self.J_diag.tolist(),
            "K_springs": self.K_springs.tolist(),
            "T_fracs": self.T_fracs.tolist(),
            "T0": self.T0,
            "U_f": self.U_f,
        }


@dataclass(frozen=True)
class NetworkTopology:
    """
    Inductive n-node network; node 1 carries the Norton source, node n the generator.

    Attributes:
        n: Node count
        ell: Symmetric n×n branch inductances in (0, inf]; diagonal unused
        r_ground: Ground resistances in [0, inf] (0 = short, inf = open)
        U_s: Source amplitude (V)
        omega_s: Source angular frequency (rad/s)
    """
    n: int
    ell: np.ndarray
    r_ground: np.ndarray
    U_s: float
    omega_s: float

    def __post_init__(self):
        ell = np.array(self.ell, dtype=float)
        r_ground = np.array(self.r_ground, dtype=float)
        n = self.n
        if n < 1:
            raise ModelError("Network needs at least one node")
        if ell.shape != (n, n):
            raise ModelError(f"ell must be {n}x{n}, got {ell.shape}")
        if r_ground.shape != (n,):
            raise ModelError(f"r_ground must have {n} entries")
        off = ~np.eye(n, dtype=bool)
        if np.any(ell[off] <= 0) or np.any(np.isnan(ell[off])):
            raise ModelError("Branch inductances must lie in (0, inf]")
        if not np.array_equal(ell[off], ell.T[off]):
            raise ModelError("ell must be symmetric")
        if np.any(r_ground < 0) or np.any(np.isnan(r_ground)):
            raise ModelError("Ground resistances must lie in [0, inf]")
        if not (0.0 < r_ground[0] < INF):
            raise ModelError("Node 1 must touch ground through a finite positive resistance")
        np.fill_diagonal(ell, INF)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "r_ground", r_ground)

    @property
    def r1(self) -> float:
        return float(self.r_ground[0])

    @property
    def size(self) -> int:
        """Electrical dimension 2n+4."""
        return 2 * self.n + N_WINDINGS

    @classmethod
    def from_branches(
        cls,
        n: int,
        branches: Iterable[Sequence[Any]],
        r_ground: Sequence[Any],
        U_s: float,
        omega_s: float
    ) -> "NetworkTopology":
        """
        Build from a branch list of (i, j, ℓ_ij) with 1-based node labels.

        Node pairs that are not listed are disconnected (ℓ = inf).
        """
        ell = np.full((n, n), INF)
        for i, j, value in branches:
            i, j = int(i) - 1, int(j) - 1
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ModelError(f"Invalid branch ({i + 1}, {j + 1})")
            ell[i, j] = ell[j, i] = parse_extended(value)
        return cls(
            n=n,
            ell=ell,
            r_ground=np.array([parse_extended(r) for r in r_ground]),
            U_s=float(U_s),
            omega_s=float(omega_s),
        )

    def branches(self) -> List[Tuple[int, int, float]]:
        """Finite branches as (i, j, ℓ) with 1-based labels, i < j."""
        return [
            (i + 1, j + 1, float(self.ell[i, j]))
            for i in range(self.n)
            for j in range(i + 1, self.n)
            if self.ell[i, j] != INF
        ]


@dataclass(frozen=True)
class IndexPartition:
    """
    Index sets Λ₀ (shorted), Λ₁ (zero conductance) and Λ₂ (finite conductance).

    ``lambda0`` holds original 0-based indices of removed rows. ``lambda1`` and
    ``lambda2`` are positions in the post-removal system, and ``origin[k]`` maps
    position k back to its original index.
    """
    lambda0: Tuple[int, ...]
    lambda1: Tuple[int, ...]
    lambda2: Tuple[int, ...]
    origin: Tuple[int, ...]
    n: int

    def __post_init__(self):
        positions = set(self.lambda1) | set(self.lambda2)
        if set(self.lambda1) & set(self.lambda2) or positions != set(range(len(self.origin))):
            raise ModelError("Λ₁ and Λ₂ must partition the post-removal indices")
        if set(self.lambda0) & set(self.origin):
            raise ModelError("Removed indices cannot remain in the system")
        windings = set(winding_indices(self.n))
        if not windings <= {self.origin[k] for k in self.lambda2}:
            raise ModelError("Winding indices must belong to Λ₂")
        for group in (self.lambda0, [self.origin[k] for k in self.lambda1]):
            nodes = [i for i in group if i < 2 * self.n]
            if len(nodes) % 2 or any(i ^ 1 not in nodes for i in nodes):
                raise ModelError("Node indices must come in αβ pairs")

    @classmethod
    def from_conductances(
        cls,
        kr: np.ndarray,
        n: int,
        origin: Sequence[int] = None,
        removed: Sequence[int] = ()
    ) -> "IndexPartition":
        """
        Classify a conductance diagonal with entries in [0, inf].

        Infinite entries join Λ₀ (still present in the system until removed);
        zeros form Λ₁; the rest form Λ₂.
        """
        kr = np.asarray(kr, dtype=float)
        origin = tuple(range(len(kr))) if origin is None else tuple(int(o) for o in origin)
        shorted = [origin[k] for k in range(len(kr)) if kr[k] == INF]
        kept = [k for k in range(len(kr)) if kr[k] != INF]
        kept_origin = tuple(origin[k] for k in kept)
        lambda1 = tuple(i for i, k in enumerate(kept) if kr[k] == 0.0)
        lambda2 = tuple(i for i, k in enumerate(kept) if 0.0 < kr[k] < INF)
        return cls(
            lambda0=tuple(sorted(set(removed) | set(shorted))),
            lambda1=lambda1,
            lambda2=lambda2,
            origin=kept_origin,
            n=n,
        )

    def labels(self, which: str) -> List[int]:
        """1-based original labels of 'lambda0', 'lambda1' or 'lambda2'."""
        if which == "lambda0":
            return [i + 1 for i in self.lambda0]
        positions = getattr(self, which)
        return [self.origin[k] + 1 for k in positions]


class RotorCoupling:
    """
    Rotor-angle dependent winding coupling Γ(θ) on the (2n+4) electrical space.

    The bottom-right 6×6 block (generator node αβ plus windings) equals
    P(θ)Γ₀P(−θ); its θ-derivatives are P(θ) C^k(Γ₀) P(−θ) with C(X) = GX − XG.
    """
    def __init__(self, gamma0: np.ndarray, n: int):
        self.gamma0 = gamma0
        self.n = n
        self.size = 2 * n + N_WINDINGS
        self.block = np.arange(2 * n - 2, 2 * n + N_WINDINGS)
        first = _G @ gamma0 - gamma0 @ _G
        second = _G @ first - first @ _G
        self._derivatives = (gamma0, first, second)

    @staticmethod
    def rotation(theta: float) -> np.ndarray:
        """P(θ) = E(θ) ⊕ I₄."""
        c, s = math.cos(theta), math.sin(theta)
        P = np.eye(6)
        P[0, 0] = c
        P[0, 1] = -s
        P[1, 0] = s
        P[1, 1] = c
        return P

    def block_at(self, theta: float, order: int = 0) -> np.ndarray:
        """order-th θ-derivative of P(θ)Γ₀P(−θ)."""
        P = self.rotation(theta)
        return P @ self._derivatives[order] @ P.T

    def _embed(self, block: np.ndarray) -> np.ndarray:
        full = np.zeros((self.size, self.size))
        full[np.ix_(self.block, self.block)] = block
        return full

    def gamma(self, theta: float) -> np.ndarray:
        return self._embed(self.block_at(theta, 0))

    def d_gamma(self, theta: float) -> np.ndarray:
        return self._embed(self.block_at(theta, 1))

    def d2_gamma(self, theta: float) -> np.ndarray:
        return self._embed(self.block_at(theta, 2))


def build_KL(topology: NetworkTopology) -> np.ndarray:
    """
    Inductance coupling matrix K_L = blockdiag(L, 0₄).

    Args:
        topology: Network topology; 1/inf is taken as 0

    Returns:
        np.ndarray: Symmetric (2n+4)×(2n+4) matrix
    """
    n = topology.n
    inv = np.zeros((n, n))
    off = ~np.eye(n, dtype=bool)
    finite = off & np.isfinite(topology.ell)
    inv[finite] = 1.0 / topology.ell[finite]
    nodal = np.diag(inv.sum(axis=1)) - inv
    KL = np.zeros((topology.size, topology.size))
    KL[: 2 * n, : 2 * n] = np.kron(nodal, np.eye(2))
    return KL


def build_KR(topology: NetworkTopology, generator: GeneratorParams) -> np.ndarray:
    """
    Diagonal of K_R = diag(r₁⁻¹, r₁⁻¹, …, r_n⁻¹, r_n⁻¹, r_f⁻¹, r_D⁻¹, r_g⁻¹, r_Q⁻¹).

    Open grounds (r = inf) map to 0, shorts (r = 0) to inf.

    Returns:
        np.ndarray: Diagonal entries in [0, inf]
    """
    nodes = np.repeat([reciprocal(r) for r in topology.r_ground], 2)
    windings = 1.0 / generator.winding_resistances
    return np.concatenate([nodes, windings])


def forcing_alpha_beta(topology: NetworkTopology, generator: GeneratorParams, t: float) -> np.ndarray:
    """
    Injected current f(t) in αβ coordinates.

    Node 1 carries the rotating Norton phasor (U_s/r₁)(cos ω_s t, sin ω_s t);
    the field winding carries U_f/r_f.
    """
    f = np.zeros(topology.size)
    amplitude = topology.U_s / topology.r1
    phase = topology.omega_s * t
    f[0] = amplitude * math.cos(phase)
    f[1] = amplitude * math.sin(phase)
    f[2 * topology.n] = generator.U_f / generator.r_f
    return f


def forcing_rate(topology: NetworkTopology, generator: GeneratorParams, t: float) -> np.ndarray:
    """df/dt of forcing_alpha_beta."""
    df = np.zeros(topology.size)
    amplitude = topology.U_s / topology.r1 * topology.omega_s
    phase = topology.omega_s * t
    df[0] = -amplitude * math.sin(phase)
    df[1] = amplitude * math.cos(phase)
    return df


@dataclass(frozen=True)
class StageSystem:
    """
    Assembled electrical and mechanical matrices of one network stage.

    After remove_shorted the conductance diagonal ``kr`` is finite (zeros
    allowed) and ``origin`` maps every remaining row to its original index.
    """
    name: str
    topology: NetworkTopology
    generator: GeneratorParams
    coupling: RotorCoupling = field(repr=False, compare=False)
    kr: np.ndarray = field(repr=False)
    KL: np.ndarray = field(repr=False)
    origin: Tuple[int, ...] = ()
    removed: Tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.origin)

    @cached_property
    def partition(self) -> IndexPartition:
        return IndexPartition.from_conductances(self.kr, self.topology.n, self.origin, self.removed)

    @cached_property
    def _generator_slots(self) -> Tuple[np.ndarray, np.ndarray]:
        # positions in this system / rows of the 6x6 block that survived removal
        positions, rows = [], []
        for row, original in enumerate(self.coupling.block):
            if original in self.origin:
                positions.append(self.origin.index(original))
                rows.append(row)
        return np.array(positions, dtype=int), np.array(rows, dtype=int)

    @property
    def gamma_parts(self) -> Dict[str, np.ndarray]:
        """Constant blocks Γ₁ (2×2), Γ₂ (2×4), Γ₃ (4×4) of Γ₀."""
        g0 = self.generator.gamma0
        return {"gamma1": g0[:2, :2], "gamma2": g0[:2, 2:], "gamma3": g0[2:, 2:]}

    @property
    def stiffness(self) -> np.ndarray:
        return self.generator.stiffness

    @property
    def inertia(self) -> np.ndarray:
        return self.generator.inertia

    @property
    def damping(self) -> np.ndarray:
        return self.generator.damping

    @property
    def torque(self) -> np.ndarray:
        return self.generator.torque

    @property
    def omega_s(self) -> float:
        return self.topology.omega_s

    def _with_block(self, base: np.ndarray, theta: float, order: int) -> np.ndarray:
        positions, rows = self._generator_slots
        block = self.coupling.block_at(theta, order)
        base[np.ix_(positions, positions)] += block[np.ix_(rows, rows)]
        return base

    def gamma(self, theta: float) -> np.ndarray:
        """Γ(θ) restricted to the remaining rows and columns."""
        return self._with_block(np.zeros((self.dim, self.dim)), theta, 0)

    def d_gamma(self, theta: float) -> np.ndarray:
        return self._with_block(np.zeros((self.dim, self.dim)), theta, 1)

    def d2_gamma(self, theta: float) -> np.ndarray:
        return self._with_block(np.zeros((self.dim, self.dim)), theta, 2)

    def n_matrix(self, theta: float) -> np.ndarray:
        """N(θ) = K_L + Γ(θ)."""
        return self._with_block(self.KL.copy(), theta, 0)

    def n_matrix_d(self, theta: float) -> np.ndarray:
        return self.d_gamma(theta)

    def n_matrix_d2(self, theta: float) -> np.ndarray:
        return self.d2_gamma(theta)

    def source(self, t: float) -> np.ndarray:
        """f(t) restricted to the remaining rows."""
        return forcing_alpha_beta(self.topology, self.generator, t)[list(self.origin)]

    def source_rate(self, t: float) -> np.ndarray:
        return forcing_rate(self.topology, self.generator, t)[list(self.origin)]

    def forcing_xy(self) -> np.ndarray:
        """Constant xy-frame forcing f₀ = f(0)."""
        return self.source(0.0)

    @cached_property
    def kj(self) -> np.ndarray:
        """Block-diagonal 2×2 skews on node pairs, zeros on windings."""
        Kj = np.zeros((self.dim, self.dim))
        n = self.topology.n
        for k, original in enumerate(self.origin):
            if original < 2 * n and original % 2 == 0:
                Kj[k + 1, k] = 1.0
                Kj[k, k + 1] = -1.0
        return Kj

    def min_eigenvalue(self, points: int = 64) -> float:
        """Smallest eigenvalue of N(θ) over a uniform θ grid on [0, 2π)."""
        grid = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
        return min(float(np.linalg.eigvalsh(self.n_matrix(theta))[0]) for theta in grid)


def remove_shorted(system: StageSystem, lambda0: Sequence[int]) -> StageSystem:
    """
    Delete the rows and columns of ground-shorted node components.

    Args:
        system: Stage system still carrying infinite conductances
        lambda0: Original 0-based indices to remove (r_i = 0 nodes)

    Returns:
        StageSystem: System of dimension dim - |Λ₀|

    Raises:
        ModelError: If a winding index is removed or an index is not shorted
    """
    lambda0 = sorted(set(int(i) for i in lambda0))
    if not lambda0:
        return system
    windings = set(winding_indices(system.topology.n))
    if windings & set(lambda0):
        raise ModelError("Winding components f, D, g, Q can never be shorted")
    for original in lambda0:
        if original not in system.origin:
            raise ModelError(f"Index {original} is not present in stage {system.name}")
        if system.kr[system.origin.index(original)] != INF:
            raise ModelError(f"Index {original} is not ground-shorted in stage {system.name}")

    keep = [k for k, original in enumerate(system.origin) if original not in lambda0]
    logger.debug(f"Stage {system.name}: removing shorted indices {[i + 1 for i in lambda0]}")
    return StageSystem(
        name=system.name,
        topology=system.topology,
        generator=system.generator,
        coupling=system.coupling,
        kr=system.kr[keep],
        KL=system.KL[np.ix_(keep, keep)],
        origin=tuple(system.origin[k] for k in keep),
        removed=tuple(sorted(set(system.removed) | set(lambda0))),
    )


def assemble_stage(name: str, topology: NetworkTopology, generator: GeneratorParams) -> StageSystem:
    """
    Assemble a stage and remove its ground-shorted rows.

    Args:
        name: Stage label ("I", "II", "III", ...)
        topology: Network of this stage
        generator: Generator parameters shared across stages

    Returns:
        StageSystem: System with finite conductances
    """
    if topology.n < 1:
        raise ModelError("Network needs at least one node")
    kr = build_KR(topology, generator)
    full = StageSystem(
        name=name,
        topology=topology,
        generator=generator,
        coupling=RotorCoupling(generator.gamma0, topology.n),
        kr=kr,
        KL=build_KL(topology),
        origin=tuple(range(topology.size)),
    )
    shorted = [i for i in range(topology.size) if kr[i] == INF]
    stage = remove_shorted(full, shorted)
    logger.info(
        f"Stage {name}: dim={stage.dim}, Λ₀={stage.partition.labels('lambda0')}, "
        f"Λ₁={stage.partition.labels('lambda1')}, Λ₂={stage.partition.labels('lambda2')}"
    )
    return stage


def stages_from_document(doc: Mapping[str, Any]) -> Dict[str, StageSystem]:
    """
    Build every stage declared in a model document.

    The document has ``generator`` (GeneratorParams fields), ``network``
    (``n``, ``U_s``, ``omega_s``) and ``stages`` mapping stage names to either
    ``branches`` ([i, j, ℓ] with 1-based labels) or a full ``ell`` matrix, plus
    ``r_ground``.

    Returns:
        Dict[str, StageSystem]: Stages in document order
    """
    try:
        generator = GeneratorParams.from_dict(doc["generator"])
        network = doc["network"]
        n = int(network["n"])
        stages = {}
        for name, stage_doc in doc["stages"].items():
            if "ell" in stage_doc:
                topology = NetworkTopology(
                    n=n,
                    ell=np.array([[parse_extended(v) for v in row] for row in stage_doc["ell"]]),
                    r_ground=np.array([parse_extended(r) for r in stage_doc["r_ground"]]),
                    U_s=float(network["U_s"]),
                    omega_s=float(network["omega_s"]),
                )
            else:
                topology = NetworkTopology.from_branches(
                    n, stage_doc["branches"], stage_doc["r_ground"], network["U_s"], network["omega_s"]
                )
            stages[name] = assemble_stage(name, topology, generator)
        return stages
    except KeyError as e:
        raise ModelError(f"Model document is missing field {e}") from e
