"""
## Quantum causal states and quantum memory

Every causal state `s_i` of an ε-transducer is assigned the pure state

    |s_i> = ⊗_x sum_{y,k} sqrt(T[i,x,y,k]) |y>|k>

whose overlaps only depend on the transition tensor. From the Gram matrix of
these states one gets compressed causal states of dimension at most `n`,
the stationary density matrix `rho_X` and its von Neumann entropy `Q_X`, the
memory a quantum transducer needs. `Q_X <= C_X` always, with strict
inequality for step-wise inefficient machines driven by non-pathological
inputs.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from rich.console import Console
from rich.progress import track
from scipy.optimize import minimize as nelder_mead
from scipy.stats import entropy

from ._config import EPS_PROB, GRID_RESOLUTION, PSD_TOL, RANK_TOL
from .base import DimensionMismatch, NotPSD, ReducibleChain
from .classical import (
    StationaryOccupancy, induced_chain, occupancy, stationary_distribution,
)
from .process import InputDistribution, TransducerSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GramMatrix:
    """Overlaps `G[i, j] = <s_i|s_j>` of the quantum causal states."""
    states: Tuple[str, ...]
    entries: np.ndarray

    def __len__(self):
        return len(self.states)

    def __getitem__(self, pair: Tuple[str, str]) -> float:
        i, j = (self.states.index(s) for s in pair)
        return float(self.entries[i, j])


@dataclass(frozen=True)
class CompressedStates:
    """
    Vectors `tau_i` of dimension `rank(G)` with `<tau_i|tau_j> = G[i, j]`,
    one row of `vectors` per causal state.
    """
    states: Tuple[str, ...]
    vectors: np.ndarray

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, state: str) -> np.ndarray:
        return self.vectors[self.states.index(state)]

    def gram(self) -> np.ndarray:
        return self.vectors.conj() @ self.vectors.T


@dataclass(frozen=True)
class DensityMatrix:
    """Stationary memory state `rho_X = sum_i p_X(i) |tau_i><tau_i|`."""
    rho: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.rho)[::-1]

    def entropy(self) -> float:
        return von_neumann_entropy(self.rho)


@dataclass(frozen=True)
class StructuralResult:
    """Supremum found on the IID input simplex and where it was attained."""
    value: float
    argmax: InputDistribution
    which: str

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "value_bits": self.value,
            "argmax_distribution": self.argmax.to_dict(),
        }


def component_overlaps(spec: TransducerSpec) -> np.ndarray:
    """
    Per-input overlaps `O[x, i, j] = <s_i^x|s_j^x>`, where the component
    `|s_i^x>` has amplitudes `sqrt(T[i,x,y,k])` on `|y>|k>`.
    """
    amplitudes = np.sqrt(np.where(spec.support, spec.transitions, 0.))
    return np.einsum("ixyk,jxyk->xij", amplitudes, amplitudes)


def quantum_overlap(spec: TransducerSpec, first: str, second: str) -> float:
    """Overlap `<s_i|s_j>`, the product over inputs of the component overlaps."""
    i, j = spec.states.index(first), spec.states.index(second)
    return float(np.prod(component_overlaps(spec)[:, i, j]))


def gram_matrix(spec: TransducerSpec) -> GramMatrix:
    """Gram matrix of the quantum causal states of `spec`."""
    entries = np.prod(component_overlaps(spec), axis=0)
    entries = np.clip(0.5 * (entries + entries.T), 0., 1.)
    np.fill_diagonal(entries, 1.)

    min_eigenvalue = np.linalg.eigvalsh(entries).min()
    if min_eigenvalue < -PSD_TOL:
        raise NotPSD(float(min_eigenvalue))
    return GramMatrix(tuple(spec.states), entries)


def compressed_states(gram: GramMatrix, tol: float = RANK_TOL) -> CompressedStates:
    """
    Vectors reproducing `gram` in the smallest possible dimension.

    The rank and a first factor `V V^T = G` come from the symmetric
    eigendecomposition (eigenvalues below `tol` are dropped, ties keep index
    order). A QR decomposition of `V^T` then rotates the factor into lower
    trapezoidal form, the same vectors Gram-Schmidt would produce, with the
    first non-zero entry of every basis direction made positive.
    """
    entries = np.asarray(gram.entries, dtype=float)
    vals, vecs = np.linalg.eigh(entries)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    keep = vals > tol
    factor = vecs[:, keep] * np.sqrt(vals[keep])

    _, upper = np.linalg.qr(factor.T)
    for row in upper:
        nonzero = np.flatnonzero(np.abs(row) > tol)
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.
    return CompressedStates(gram.states, upper.T.astype(complex))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits of a density matrix, negative eigenvalues clipped to 0."""
    vals = np.clip(np.linalg.eigvalsh(rho), 0., None)
    if vals.sum() == 0.:
        return 0.
    return float(entropy(vals, base=2))


def density_matrix(gram: GramMatrix, occ: StationaryOccupancy) -> DensityMatrix:
    """Assemble `rho_X` from the compressed states weighted by `occ`."""
    if len(occ) != len(gram):
        raise DimensionMismatch(
            f"Occupancy over {len(occ)} states, Gram matrix over {len(gram)}"
        )
    tau = compressed_states(gram).vectors
    rho = np.einsum("i,ia,ib->ab", occ.pi, tau, tau.conj())
    return DensityMatrix(rho)


def occupancy_entropy(gram: GramMatrix, occ: StationaryOccupancy) -> float:
    """
    Von Neumann entropy of `rho_X` from the `n x n` matrix
    `sqrt(p_i p_j) G[i, j]`, which shares the non-zero spectrum of `rho_X`.
    """
    if len(occ) != len(gram):
        raise DimensionMismatch(
            f"Occupancy over {len(occ)} states, Gram matrix over {len(gram)}"
        )
    root = np.sqrt(occ.pi)
    return von_neumann_entropy(root[:, None] * gram.entries * root[None, :])


def quantum_complexity(spec: TransducerSpec, dist: InputDistribution) -> float:
    """Input-dependent quantum complexity `Q_X` in bits."""
    return occupancy_entropy(gram_matrix(spec), occupancy(spec, dist))


def condition_I_orthogonal(spec: TransducerSpec) -> bool:
    """Whether all quantum causal states are mutually orthogonal."""
    entries = gram_matrix(spec).entries
    off_diagonal = entries[~np.eye(len(entries), dtype=bool)]
    return bool(np.all(off_diagonal <= spec.eps))


def memory_ratio(spec: TransducerSpec, dist: InputDistribution) -> float:
    """`Q_X / C_X`, taken as 0 for a machine that needs no memory at all."""
    occ = occupancy(spec, dist)
    classical = float(entropy(occ.pi, base=2))
    if classical <= spec.eps:
        return 0.
    return occupancy_entropy(gram_matrix(spec), occ) / classical


def quantum_trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Trace distance `1/2 Tr|rho - sigma|` of two density matrices."""
    return 0.5 * float(np.abs(np.linalg.eigvalsh(rho - sigma)).sum())


def state_distances(gram: GramMatrix) -> np.ndarray:
    """Trace distances `sqrt(1 - |G_ij|^2)` between the pure causal states."""
    return np.sqrt(np.clip(1. - np.abs(gram.entries)**2, 0., None))


def simplex_grid(size: int, resolution: int):
    """All distributions over `size` symbols with entries in multiples of `1/resolution`."""
    for bars in itertools.combinations(range(resolution + size - 1), size - 1):
        edges = (-1,) + bars + (resolution + size - 1,)
        yield np.array([b - a - 1 for a, b in zip(edges[:-1], edges[1:])]) / resolution


def structural_complexity(
    spec: TransducerSpec,
    which: str = "quantum",
    grid_resolution: int = GRID_RESOLUTION,
    verbose: bool = False,
) -> StructuralResult:
    """
    Largest `C_X` (`which="classical"`) or `Q_X` (`which="quantum"`) over IID
    input processes. The input simplex is scanned on a grid of the given
    resolution and the best grid point is refined with one Nelder-Mead pass.
    As only IID inputs are searched, the value is a lower bound to the
    supremum over all stationary input processes.
    """
    if which not in ("classical", "quantum"):
        raise ValueError(f"`which` must be 'classical' or 'quantum', not {which}")

    gram = gram_matrix(spec) if which == "quantum" else None

    def value(weights: np.ndarray) -> Optional[float]:
        dist = InputDistribution(dict(zip(spec.inputs, weights)))
        try:
            occ = stationary_distribution(induced_chain(spec, dist), spec.states, spec.eps)
        except ReducibleChain:
            return None
        if gram is None:
            return float(entropy(occ.pi, base=2))
        return occupancy_entropy(gram, occ)

    best_value, best_weights = None, None
    iterator = track(
        list(simplex_grid(len(spec.inputs), grid_resolution)),
        description=f"Scanning IID inputs ({which})",
        disable=not verbose,
        console=Console(stderr=True),
    )
    for weights in iterator:
        current = value(weights)
        if current is None:
            logger.debug("Skipping %s, induced chain is reducible", weights)
            continue
        if best_value is None or current > best_value + EPS_PROB:
            best_value, best_weights = current, weights

    if best_value is None:
        raise ReducibleChain(
            "Induced chain is reducible for every IID input on the grid"
        )

    if len(spec.inputs) > 1:
        best_value, best_weights = _refine(value, best_value, best_weights, grid_resolution)

    argmax = InputDistribution(dict(zip(spec.inputs, best_weights)))
    return StructuralResult(float(best_value), argmax, which)


def _refine(
    value: Callable[[np.ndarray], Optional[float]],
    best_value: float,
    best_weights: np.ndarray,
    grid_resolution: int,
) -> Tuple[float, np.ndarray]:
    """One Nelder-Mead pass over the free coordinates of the simplex."""
    def complete(free):
        return np.append(free, 1. - free.sum())

    def objective(free):
        weights = complete(free)
        if np.any(weights < 0.):
            return np.inf
        current = value(weights)
        return np.inf if current is None else -current

    start = best_weights[:-1]
    step = 0.5 / grid_resolution
    simplex = [start]
    for k in range(start.size):
        vertex = start.copy()
        vertex[k] += step
        if np.any(complete(vertex) < 0.):
            vertex[k] -= 2 * step
        simplex.append(vertex)

    result = nelder_mead(
        objective,
        start,
        method="Nelder-Mead",
        options={"initial_simplex": np.array(simplex), "xatol": 1e-8, "fatol": 1e-12},
    )
    if np.isfinite(result.fun) and -result.fun > best_value + EPS_PROB:
        return float(-result.fun), np.clip(complete(result.x), 0., None)
    logger.info("Local refinement did not improve on the grid value %.6f", best_value)
    return best_value, best_weights


class QuantumModel():
    """
    Everything the quantum transducer of an ε-transducer is built from: the
    per-input component overlaps, the Gram matrix of the quantum causal
    states and their compressed representation.
    """
    def __init__(self, spec: TransducerSpec):
        self.spec = spec
        self.overlaps = component_overlaps(spec)
        self.gram = gram_matrix(spec)
        self.compressed = compressed_states(self.gram)

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(states={list(self.spec.states)}, "
            f"rank={self.compressed.rank})"
        )

    @classmethod
    def from_spec(cls, spec: TransducerSpec) -> QuantumModel:
        return cls(spec)

    def density_matrix(self, occ: StationaryOccupancy) -> DensityMatrix:
        if len(occ) != len(self.gram):
            raise DimensionMismatch(
                f"Occupancy over {len(occ)} states, model over {len(self.gram)}"
            )
        tau = self.compressed.vectors
        return DensityMatrix(np.einsum("i,ia,ib->ab", occ.pi, tau, tau.conj()))

    def complexity(self, dist: InputDistribution) -> float:
        return occupancy_entropy(self.gram, occupancy(self.spec, dist))

    def report(self, dist: InputDistribution) -> Dict[str, float]:
        """`C_X`, `Q_X` and their ratio under `dist`."""
        occ = occupancy(self.spec, dist)
        classical = float(entropy(occ.pi, base=2))
        quantum = occupancy_entropy(self.gram, occ)
        return {
            "C_X": classical,
            "Q_X": quantum,
            "ratio": quantum / classical if classical > self.spec.eps else 0.,
        }
