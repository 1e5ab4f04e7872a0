"""
## Circuit realization of the quantum transducer

One time step of the quantum transducer, fed input `x`:

1. the selection operator keeps only the `x`-component `|s_i^x>` of the
   product state `|s_i> = ⊗_x |s_i^x>`,
2. the operation `B: |y>|k> -> |y>|tau_k>` writes the compressed successor
   next to the output register,
3. the decompression unitary `U` turns `|tau_k>` (plus ancillas) back into
   `|s_k>`,
4. the output register is measured in the `|y>` basis.

Joint unifiliarity makes the retained memory after the measurement the pure
quantum causal state `|s_{g(i,x,y)}>`, so the quantum machine reproduces the
classical statistics exactly while storing non-orthogonal states.

The default simulation path never builds the `(|Y| n)^{|X|}`-dimensional
states: the memory is kept in the compressed space and the selection step is
evaluated from the per-input overlaps. The explicit path materializes the
full `CircuitRealization` (including `U`) and is guarded by
`DIMENSION_GUARD`.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from ._config import DIMENSION_GUARD, EPS_PROB, HORIZON_CAP, RANK_TOL
from .base import (
    DimensionGuardExceeded, HorizonTooLarge, NumericalRankFailure,
    ParameterOutOfRange,
)
from .classical import FutureDistribution, future_distribution, trace_distance
from .process import TransducerSpec
from .quantum import QuantumModel

UNITARY_TOL = 1e-9


@dataclass(frozen=True)
class FullCausalState:
    """
    Quantum causal state of one causal state, stored as its per-input
    components `|s_i^x>` of dimension `|Y| n` (basis `|y>|k>`, `y` major).
    """
    state: str
    components: Dict[str, np.ndarray]

    def overlap(self, other: FullCausalState) -> complex:
        """`<self|other>`, the product of the component overlaps."""
        return complex(np.prod([
            np.vdot(self.components[x], other.components[x])
            for x in self.components
        ]))

    def vector(self, guard: int = DIMENSION_GUARD) -> np.ndarray:
        """The full tensor product, refused if larger than `guard`."""
        size = int(np.prod([len(c) for c in self.components.values()]))
        if size > guard:
            raise DimensionGuardExceeded(size, guard)
        return functools.reduce(np.kron, self.components.values())


@dataclass
class CircuitRealization:
    """
    Explicit matrices of one time step.

    The memory is handed over in a compressed space of dimension
    `compressed_dim`; `embedding` appends ancillas in `|0>` and `decompress`
    (the unitary `U`) turns the result into a state of the memory system
    whose factors have dimensions `subsystem_dims`. `selection[x]` lists the
    factors kept on input `x`, `b_map` acts on them and outputs
    `|y> ⊗ (compressed memory)`, and `measurement` holds the projectors
    `|y><y| ⊗ 1` of the output register. `kraus` is a Kraus family of the
    `B` operation.
    """
    states: Tuple[str, ...]
    outputs: Tuple[str, ...]
    compressed: np.ndarray
    embedding: np.ndarray
    decompress: np.ndarray
    subsystem_dims: Tuple[int, ...]
    selection: Dict[str, Tuple[int, ...]]
    b_map: np.ndarray
    kraus: List[np.ndarray] = field(default_factory=list)
    measurement: List[np.ndarray] = field(default_factory=list)

    @property
    def compressed_dim(self) -> int:
        return self.embedding.shape[1]

    def unitarity_error(self) -> float:
        """Largest entry of `|U^dagger U - 1|`."""
        gram = self.decompress.conj().T @ self.decompress
        return float(np.abs(gram - np.eye(len(gram))).max())

    def kraus_completeness_error(self) -> float:
        """Largest entry of `|sum_K K^dagger K - 1|`."""
        total = sum(k.conj().T @ k for k in self.kraus)
        return float(np.abs(total - np.eye(len(total))).max())

    def initial(self, state: str) -> np.ndarray:
        """Compressed memory holding the causal state `state`."""
        tau = self.compressed[self.states.index(state)]
        return np.outer(tau, tau.conj())

    def decompressed(self, memory: np.ndarray) -> np.ndarray:
        """`U (memory ⊗ |0><0|) U^dagger` on the full memory system."""
        full = self.embedding @ memory @ self.embedding.conj().T
        return self.decompress @ full @ self.decompress.conj().T

    def composite(self, component: np.ndarray) -> np.ndarray:
        """
        Apply `B` and then `U` on the memory part to a pure selected state.
        Row `y` of the result is the (unnormalized) memory state that comes
        with output `y`.
        """
        blocks = (self.b_map @ component).reshape(len(self.outputs), self.compressed_dim)
        return (self.decompress @ self.embedding @ blocks.T).T

    def step(self, memory: np.ndarray, symbol: str) -> List[Tuple[int, float, np.ndarray]]:
        """
        Outcome index, probability and post-measurement compressed memory for
        every output of non-zero probability.
        """
        selected = partial_trace(
            self.decompressed(memory), self.subsystem_dims, self.selection[symbol]
        )
        after = self.b_map @ selected @ self.b_map.conj().T
        return self.measure(after)

    def measure(
        self, after: np.ndarray, eps: float = EPS_PROB
    ) -> List[Tuple[int, float, np.ndarray]]:
        """
        Project the output register of `after` with every `measurement`
        operator and trace it out, keeping outcomes above `eps`.
        """
        dims = (len(self.outputs), self.compressed_dim)
        outcomes = []
        for y, proj in enumerate(self.measurement):
            post = proj @ after @ proj.conj().T
            prob = float(np.real(np.trace(post)))
            if prob > eps:
                outcomes.append((y, prob, partial_trace(post, dims, (1,)) / prob))
        return outcomes


def _measure(after: np.ndarray, n_outputs: int, dim: int, eps: float = EPS_PROB):
    outcomes = []
    for y in range(n_outputs):
        block = after[y * dim:(y + 1) * dim, y * dim:(y + 1) * dim]
        prob = float(np.real(np.trace(block)))
        if prob > eps:
            outcomes.append((y, prob, block / prob))
    return outcomes


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of the factors `keep` (kept in ascending order)."""
    dims = tuple(dims)
    tensor = rho.reshape(dims * 2)
    num = len(dims)
    for axis in reversed(range(len(dims))):
        if axis not in keep:
            tensor = np.trace(tensor, axis1=axis, axis2=axis + num)
            num -= 1
    size = int(np.prod([dims[k] for k in sorted(keep)]))
    return tensor.reshape(size, size)


def complete_unitary(
    source: np.ndarray,
    target: np.ndarray,
    tol: float = RANK_TOL,
) -> np.ndarray:
    """
    Unitary `U` with `U @ source = target` for two sets of column vectors
    with the same Gram matrix. The isometry between their spans is extended
    by mapping orthonormal bases of the orthogonal complements onto each
    other.
    """
    left, sing, right = np.linalg.svd(source, full_matrices=False)
    rank = int(np.sum(sing > tol))
    src_basis = left[:, :rank]
    tgt_basis = target @ right[:rank].conj().T / sing[:rank]

    overlap = tgt_basis.conj().T @ tgt_basis
    if not np.allclose(overlap, np.eye(rank), atol=1e-8):
        raise NumericalRankFailure("Source and target vectors have different Gram matrices")

    src_perp = null_space(src_basis.conj().T, rcond=tol)
    tgt_perp = null_space(tgt_basis.conj().T, rcond=tol)
    if src_perp.shape != tgt_perp.shape:
        raise NumericalRankFailure(
            f"Complements of dimension {src_perp.shape[1]} and {tgt_perp.shape[1]}"
        )

    unitary = tgt_basis @ src_basis.conj().T + tgt_perp @ src_perp.conj().T
    error = np.abs(unitary.conj().T @ unitary - np.eye(len(unitary))).max()
    if error > UNITARY_TOL:
        raise NumericalRankFailure(f"Completed operator deviates from unitarity by {error}")
    return unitary


def build_full_states(spec: TransducerSpec) -> List[FullCausalState]:
    """Per-input components of the quantum causal state of every causal state."""
    amplitudes = np.sqrt(np.where(spec.support, spec.transitions, 0.))
    return [
        FullCausalState(
            state,
            {
                symbol: amplitudes[i, x].reshape(-1).astype(complex)
                for x, symbol in enumerate(spec.inputs)
            },
        )
        for i, state in enumerate(spec.states)
    ]


def build_realization(
    spec: TransducerSpec,
    guard: int = DIMENSION_GUARD,
) -> CircuitRealization:
    """
    Explicit realization of the quantum transducer of `spec`. The compressed
    states are padded to dimension `n`, the ancilla register fills up the
    memory system `W = (Σ ⊗ K)^{⊗|X|}`, and `U` maps the embedded
    compressed states onto the full quantum causal states.
    """
    n_states, n_inputs, n_outputs = spec.shape
    local = n_outputs * n_states
    size = local ** n_inputs
    if size * size > guard:
        raise DimensionGuardExceeded(size * size, guard)

    model = QuantumModel(spec)
    tau = np.zeros((n_states, n_states), dtype=complex)
    tau[:, :model.compressed.rank] = model.compressed.vectors

    full = np.array([s.vector(guard) for s in build_full_states(spec)]).T
    embedding = np.eye(size, n_states, dtype=complex)
    decompress = complete_unitary(embedding @ tau.T, full)

    b_map = np.zeros((local, local), dtype=complex)
    kraus = []
    for y in range(n_outputs):
        for k in range(n_states):
            column = np.zeros(local, dtype=complex)
            column[y * n_states:(y + 1) * n_states] = tau[k]
            b_map[:, y * n_states + k] = column
            op = np.zeros((local, local), dtype=complex)
            op[:, y * n_states + k] = column
            kraus.append(op)

    measurement = [
        np.kron(np.diag(np.eye(n_outputs)[y]), np.eye(n_states))
        for y in range(n_outputs)
    ]
    return CircuitRealization(
        states=tuple(spec.states),
        outputs=tuple(spec.outputs),
        compressed=tau,
        embedding=embedding,
        decompress=decompress,
        subsystem_dims=(local,) * n_inputs,
        selection={symbol: (x,) for x, symbol in enumerate(spec.inputs)},
        b_map=b_map,
        kraus=kraus,
        measurement=measurement,
    )


def perturbed_coin_circuit(p: float, q: float) -> CircuitRealization:
    """
    Four-qubit circuit of the actively perturbed coin. The single memory
    qubit holds `|s_0> = sqrt(r)|0> + sqrt(1-r)|1>` or `|s_1> = |0>` with
    `r = 16 p q (1-p)(1-q)`. Three ancillas in `|0>` are appended and `U`
    prepares `|phi_p> ⊗ |phi_q>` (or its image under `X` on all four qubits).
    Input `0` keeps qubits 3 and 4, input `1` keeps qubits 1 and 2; the
    unitary `V` maps `|00> -> |0>|s_0>` and `|11> -> |1>|s_1>`, after which
    the first kept qubit is measured as output.
    """
    for name, value in (("p", p), ("q", q)):
        if not 0. < value < 1.:
            raise ParameterOutOfRange(f"{name} must lie in (0, 1), not {value}")

    r = 16. * p * q * (1. - p) * (1. - q)
    tau = np.array([[np.sqrt(r), np.sqrt(1. - r)], [1., 0.]], dtype=complex)

    def phi(prob):
        return np.array([np.sqrt(1. - prob), 0., 0., np.sqrt(prob)], dtype=complex)

    pauli_x = np.array([[0., 1.], [1., 0.]])
    flip_all = functools.reduce(np.kron, [pauli_x] * 4)
    prepared_0 = np.kron(phi(p), phi(q))
    prepared_1 = flip_all @ prepared_0

    embedding = np.zeros((16, 2), dtype=complex)
    embedding[0, 0] = embedding[8, 1] = 1.
    decompress = complete_unitary(
        embedding @ tau.T, np.array([prepared_0, prepared_1]).T
    )

    basis = np.eye(2, dtype=complex)
    v_map = complete_unitary(
        np.array([np.kron(basis[0], basis[0]), np.kron(basis[1], basis[1])]).T,
        np.array([np.kron(basis[0], tau[0]), np.kron(basis[1], tau[1])]).T,
    )

    return CircuitRealization(
        states=("s0", "s1"),
        outputs=("0", "1"),
        compressed=tau,
        embedding=embedding,
        decompress=decompress,
        subsystem_dims=(2, 2, 2, 2),
        selection={"0": (2, 3), "1": (0, 1)},
        b_map=v_map,
        kraus=[v_map],
        measurement=[np.kron(np.diag(basis[y]), np.eye(2)) for y in range(2)],
    )


@dataclass
class SimRun:
    """A sampled run of the quantum transducer."""
    seed: Optional[int]
    initial: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...] = ()
    fidelities: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "initial": self.initial,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "fidelities": list(self.fidelities),
        }


class QuantumTransducer():
    """
    Quantum transducer of an ε-transducer, simulated step by step.

    With `explicit=False` the memory lives in the compressed space of
    dimension `rank(G)`. The selection operator is evaluated on the
    decompressed state `sum_ij C_ij |s_i><s_j|` (with `C` the expansion of the
    memory in the compressed states) as
    `sum_ij C_ij prod_{x' != x} <s_j^x'|s_i^x'> |s_i^x><s_j^x|`, which is the
    exact partial trace without building any tensor product. With
    `explicit=True` the materialized `CircuitRealization` is used instead.
    """
    def __init__(
        self,
        spec: TransducerSpec,
        explicit: bool = False,
        guard: int = DIMENSION_GUARD,
    ):
        self.spec = spec
        self.model = QuantumModel(spec)
        self.explicit = explicit
        self._cache: Dict[Tuple[bytes, int], list] = {}

        n_states, n_inputs, n_outputs = spec.shape
        if explicit:
            self.realization = build_realization(spec, guard)
            self.tau = self.realization.compressed
            return

        self.realization = None
        self.tau = self.model.compressed.vectors
        rank = self.model.compressed.rank
        self._expand = np.linalg.pinv(self.tau.T)

        amplitudes = np.sqrt(np.where(spec.support, spec.transitions, 0.))
        self._components = amplitudes.reshape(n_states, n_inputs, -1).transpose(1, 2, 0)

        overlaps = self.model.overlaps
        self._spectators = np.array([
            np.prod(np.delete(overlaps, x, axis=0), axis=0).T
            for x in range(n_inputs)
        ])

        local = n_outputs * n_states
        self._b_map = np.zeros((n_outputs * rank, local), dtype=complex)
        for y in range(n_outputs):
            for k in range(n_states):
                self._b_map[y * rank:(y + 1) * rank, y * n_states + k] = self.tau[k]

    def __repr__(self):
        mode = "explicit" if self.explicit else "compressed"
        return f"{self.__class__.__name__}({self.spec!r}, {mode})"

    @property
    def memory_dim(self) -> int:
        return self.tau.shape[1]

    def initial(self, state: str) -> np.ndarray:
        """Memory holding the quantum causal state of `state`."""
        tau = self.tau[self.spec.states.index(state)]
        return np.outer(tau, tau.conj())

    def fidelity(self, memory: np.ndarray, state: int) -> float:
        """`<tau_state| memory |tau_state>`, independent of global phases."""
        tau = self.tau[state]
        return float(np.real(tau.conj() @ memory @ tau))

    def step(self, memory: np.ndarray, x: int) -> List[Tuple[int, float, np.ndarray]]:
        """Measurement outcomes of one time step with input index `x`."""
        key = (np.round(memory, 12).tobytes(), x)
        if key in self._cache:
            return self._cache[key]

        if self.explicit:
            outcomes = self.realization.step(memory, self.spec.inputs[x])
        else:
            coeffs = self._expand @ memory @ self._expand.conj().T
            comps = self._components[x]
            selected = comps @ (coeffs * self._spectators[x]) @ comps.conj().T
            after = self._b_map @ selected @ self._b_map.conj().T
            outcomes = _measure(after, len(self.spec.outputs), self.memory_dim, self.spec.eps)

        self._cache[key] = outcomes
        return outcomes

    def run(
        self,
        initial: str,
        inputs: Sequence[str],
        rng: np.random.Generator,
    ) -> Tuple[Tuple[str, ...], List[float]]:
        """Sample one output word; also return the per-step fidelities."""
        memory = self.initial(initial)
        state = self.spec.states.index(initial)
        outputs, fidelities = [], []
        for symbol in inputs:
            x = self.spec.inputs.index(symbol)
            outcomes = self.step(memory, x)
            probs = np.array([prob for _, prob, _ in outcomes])
            y, _, memory = outcomes[rng.choice(len(outcomes), p=probs / probs.sum())]
            state = int(self.spec.successors[state, x, y])
            outputs.append(self.spec.outputs[y])
            fidelities.append(self.fidelity(memory, state) if state >= 0 else 0.)
        return tuple(outputs), fidelities

    def branches(self, initial: str, inputs: Sequence[str]):
        """
        All measurement branches with their exact probabilities, as tuples
        `(output word, probability, smallest post-measurement fidelity)`.
        """
        start = self.spec.states.index(initial)
        branches = [((), 1., self.initial(initial), start, 1.)]
        for symbol in inputs:
            x = self.spec.inputs.index(symbol)
            grown = []
            for outputs, prob, memory, state, fid in branches:
                for y, step_prob, post in self.step(memory, x):
                    succ = int(self.spec.successors[state, x, y])
                    step_fid = self.fidelity(post, succ) if succ >= 0 else 0.
                    grown.append((
                        outputs + (self.spec.outputs[y],),
                        prob * step_prob,
                        post,
                        succ,
                        min(fid, step_fid),
                    ))
            branches = grown
        return [(outputs, prob, fid) for outputs, prob, _, _, fid in branches]


def simulate_quantum(
    spec: TransducerSpec,
    initial: str,
    inputs: Sequence[str],
    seed: Optional[int] = None,
    explicit: bool = False,
) -> SimRun:
    """Sample one run of the quantum transducer of `spec`."""
    transducer = QuantumTransducer(spec, explicit=explicit)
    outputs, fidelities = transducer.run(initial, inputs, np.random.default_rng(seed))
    return SimRun(seed, initial, tuple(inputs), outputs, fidelities)


def sample_output_words(
    spec: TransducerSpec,
    initial: str,
    inputs: Sequence[str],
    samples: int,
    seed: Optional[int] = None,
) -> Dict[Tuple[str, ...], int]:
    """Counts of the output words of `samples` runs drawn from one seeded generator."""
    transducer = QuantumTransducer(spec)
    rng = np.random.default_rng(seed)
    counts: Dict[Tuple[str, ...], int] = {}
    for _ in range(samples):
        outputs, _ = transducer.run(initial, inputs, rng)
        counts[outputs] = counts.get(outputs, 0) + 1
    return counts


def exact_output_distribution_quantum(
    spec: TransducerSpec,
    initial: str,
    inputs: Sequence[str],
    cap: int = HORIZON_CAP,
    explicit: bool = False,
) -> FutureDistribution:
    """Output-word distribution of the quantum transducer by branch enumeration."""
    if len(inputs) > cap:
        raise HorizonTooLarge(len(inputs), cap)
    transducer = QuantumTransducer(spec, explicit=explicit)
    probs: Dict[Tuple[str, ...], float] = {}
    for outputs, prob, _ in transducer.branches(initial, inputs):
        probs[outputs] = probs.get(outputs, 0.) + prob
    return FutureDistribution(len(inputs), probs, tuple(spec.outputs))


@dataclass
class VerificationReport:
    """Worst-case agreement of quantum and classical output statistics."""
    horizon: int
    distances: Dict[str, Dict[str, float]]
    max_trace_distance: float
    min_fidelity: float

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "max_trace_distance": self.max_trace_distance,
            "min_fidelity": self.min_fidelity,
            "words": self.distances,
        }


def verify(
    spec: TransducerSpec,
    horizon: int = 4,
    explicit: bool = False,
    cap: int = HORIZON_CAP,
) -> VerificationReport:
    """
    Compare the exact quantum and classical output distributions for every
    initial causal state and every input word of length 1 to `horizon`.
    """
    if horizon > cap:
        raise HorizonTooLarge(horizon, cap)
    transducer = QuantumTransducer(spec, explicit=explicit)
    distances: Dict[str, Dict[str, float]] = {}
    worst, min_fid = 0., 1.
    for state in spec.states:
        distances[state] = {}
        for length in range(1, horizon + 1):
            for word in itertools.product(spec.inputs.symbols, repeat=length):
                probs: Dict[Tuple[str, ...], float] = {}
                for outputs, prob, fid in transducer.branches(state, word):
                    probs[outputs] = probs.get(outputs, 0.) + prob
                    min_fid = min(min_fid, fid)
                quantum = FutureDistribution(length, probs, tuple(spec.outputs))
                classical = future_distribution(spec, state, word)
                dist = trace_distance(quantum, classical)
                distances[state][",".join(word)] = dist
                worst = max(worst, dist)
    return VerificationReport(horizon, distances, worst, min_fid)
