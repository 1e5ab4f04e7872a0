"""
## Classical analysis of ε-transducers

Driving an ε-transducer with an IID input process induces a Markov chain on
its causal states. The Shannon entropy of that chain's stationary
distribution is the input-dependent statistical complexity `C_X`, the memory
a classical model must keep.

Besides `C_X` this module decides step-wise inefficiency (two causal states
that, whatever the input, can both emit the same output and move to the same
state), looks for an adaptive input strategy that tells two causal states
apart, and enumerates exact finite-horizon output distributions so that
strategies and models can be compared via their trace distance.
"""
from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import entropy

from ._config import EPS_PROB, HORIZON_CAP, STATIONARY_RESIDUAL
from .base import (
    AlphabetMismatch, HorizonMismatch, HorizonTooLarge, ReducibleChain,
)
from .process import Alphabet, InputDistribution, TransducerSpec

logger = logging.getLogger(__name__)

History = Tuple[Tuple[str, str], ...]
DecisionTree = Dict[History, str]

DISTINGUISHED = "Distinguished"
CONDITION_II_FAILS = "ConditionIIFails"
DEPTH_EXHAUSTED = "DepthExhausted"


@dataclass(frozen=True)
class StationaryOccupancy:
    """Stationary probability `p_X(i)` of every causal state."""
    states: Tuple[str, ...]
    pi: np.ndarray

    def __len__(self):
        return len(self.states)

    def __getitem__(self, state: str) -> float:
        return float(self.pi[self.states.index(state)])

    def to_dict(self) -> Dict[str, float]:
        return {s: float(p) for s, p in zip(self.states, self.pi)}


@dataclass(frozen=True)
class FutureDistribution:
    """
    Distribution over output words of length `horizon`. Only words with
    non-zero probability are stored; words are tuples of output symbols.
    """
    horizon: int
    probs: Dict[Tuple[str, ...], float]
    outputs: Tuple[str, ...] = ()

    def __getitem__(self, word: Sequence[str]) -> float:
        return self.probs.get(tuple(word), 0.)

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def to_dict(self) -> Dict[str, float]:
        return {" ".join(word): prob for word, prob in sorted(self.probs.items())}


@dataclass
class StrategyResult:
    """
    Outcome of the adaptive discrimination of two causal states.

    `status` is one of `Distinguished` (every branch of `decision_tree` ends
    in an output only one of the two hypotheses can produce, after at most
    `depth` inputs), `ConditionIIFails` (the reachable `pair` has no input
    separating its transitions) or `DepthExhausted`.
    """
    status: str
    depth: Optional[int] = None
    pair: Optional[Tuple[str, str]] = None
    decision_tree: DecisionTree = field(default_factory=dict)

    @property
    def distinguished(self) -> bool:
        return self.status == DISTINGUISHED

    def to_dict(self) -> dict:
        tree = {
            ",".join(f"{x}:{y}" for x, y in history): symbol
            for history, symbol in sorted(self.decision_tree.items())
        }
        return {
            "status": self.status,
            "depth": self.depth,
            "pair": list(self.pair) if self.pair is not None else None,
            "decision_tree": tree,
        }


def induced_chain(spec: TransducerSpec, dist: InputDistribution) -> np.ndarray:
    """
    Row-stochastic matrix `M[i, j] = sum_x P(x) sum_y T[i, x, y, j]` of the
    causal-state chain driven by the IID input `dist`.
    """
    weights = dist.vector(spec.inputs)
    return np.einsum("x,ixyj->ij", weights, spec.transitions)


def is_irreducible(chain: np.ndarray, eps: float = EPS_PROB) -> bool:
    """Whether the support graph of `chain` is strongly connected."""
    num, _ = connected_components(
        csr_matrix(chain > eps), directed=True, connection="strong"
    )
    return num == 1


def stationary_distribution(
    chain: np.ndarray,
    states: Optional[Sequence[str]] = None,
    eps: float = EPS_PROB,
) -> StationaryOccupancy:
    """
    Solve `pi M = pi` with `sum(pi) = 1` for an irreducible chain, replacing
    the last balance equation by the normalization. Reducible chains have no
    unique solution and raise `ReducibleChain`.
    """
    chain = np.asarray(chain, dtype=float)
    num = chain.shape[0]
    states = tuple(states) if states is not None else tuple(str(i) for i in range(num))

    if not is_irreducible(chain, eps):
        raise ReducibleChain(
            "Induced chain is reducible, its stationary distribution is not unique"
        )

    system = chain.T - np.eye(num)
    system[-1, :] = 1.
    rhs = np.zeros(num)
    rhs[-1] = 1.
    pi = np.linalg.solve(system, rhs)

    residual = np.abs(pi @ chain - pi).max()
    if residual > STATIONARY_RESIDUAL:
        logger.warning("Stationary distribution has residual %.3g", residual)
    return StationaryOccupancy(states, np.clip(pi, 0., None))


def occupancy(spec: TransducerSpec, dist: InputDistribution) -> StationaryOccupancy:
    """Stationary causal-state occupancy of `spec` under `dist`."""
    occ = stationary_distribution(induced_chain(spec, dist), spec.states, spec.eps)
    if not is_non_pathological(occ, spec.eps):
        logger.warning(
            "Input process %s is pathological: some causal state is never "
            "occupied", dist
        )
    return occ


def classical_complexity(spec: TransducerSpec, dist: InputDistribution) -> float:
    """Input-dependent statistical complexity `C_X` in bits."""
    return float(entropy(occupancy(spec, dist).pi, base=2))


def is_non_pathological(occ: StationaryOccupancy, eps: float = EPS_PROB) -> bool:
    """Every causal state has strictly positive occupancy."""
    return bool(np.min(occ.pi) > eps)


def _separating_inputs(spec: TransducerSpec, i: int, j: int) -> Iterator[int]:
    for x in range(len(spec.inputs)):
        if not np.any(spec.support[i, x] & spec.support[j, x]):
            yield x


def condition_II_input(spec: TransducerSpec, first: str, second: str) -> Optional[str]:
    """
    First input `x` (in canonical order) for which no output and successor
    are shared by the two states, i.e. `T[i,x,y,k] * T[j,x,y,k] = 0` for all
    `(y, k)`. `None` if every input lets both states agree on some
    transition.
    """
    i, j = spec.states.index(first), spec.states.index(second)
    for x in _separating_inputs(spec, i, j):
        return spec.inputs[x]
    return None


def is_stepwise_inefficient(spec: TransducerSpec) -> Optional[Tuple[str, str]]:
    """
    Return the first pair of causal states without a separating input, the
    witness of step-wise inefficiency, or `None` for a step-wise efficient
    machine.
    """
    for first, second in itertools.combinations(spec.states, 2):
        if condition_II_input(spec, first, second) is None:
            return first, second
    return None


def _joint_outputs(spec: TransducerSpec, i: int, j: int, x: int) -> Iterator[int]:
    """Outputs both `i` and `j` can emit on input `x`."""
    emits_i = spec.support[i, x].any(axis=1)
    emits_j = spec.support[j, x].any(axis=1)
    yield from np.flatnonzero(emits_i & emits_j)


def discrimination_strategy(
    spec: TransducerSpec,
    first: str,
    second: str,
    max_depth: int = 8,
) -> StrategyResult:
    """
    Adaptive input strategy telling `first` from `second`.

    For a pair of hypotheses an input is chosen whose transitions the two
    states do not share. If the observed output is impossible for one of
    them, the pair is decided; otherwise both hypotheses move on through the
    propagator and the procedure repeats on the new pair. The shallowest such
    strategy is found by value iteration over pairs, so cycles without a
    decisive output simply never reach a finite depth.
    """
    if first == second:
        raise ValueError("Discrimination needs two different states")
    start = (spec.states.index(first), spec.states.index(second))
    n_states = len(spec.states)
    pairs = [(a, b) for a in range(n_states) for b in range(n_states) if a != b]
    separating = {pair: list(_separating_inputs(spec, *pair)) for pair in pairs}

    def as_labels(pair):
        return spec.states[pair[0]], spec.states[pair[1]]

    if not separating[start]:
        return StrategyResult(CONDITION_II_FAILS, pair=as_labels(start))

    best: Dict[Tuple[int, int], Tuple[int, int]] = {}
    for _ in range(max_depth):
        updated = {}
        for pair in pairs:
            for x in separating[pair]:
                depth = 1
                for y in _joint_outputs(spec, *pair, x):
                    succ = (
                        int(spec.successors[pair[0], x, y]),
                        int(spec.successors[pair[1], x, y]),
                    )
                    if succ not in best:
                        depth = None
                        break
                    depth = max(depth, 1 + best[succ][0])
                if depth is not None and (pair not in updated or depth < updated[pair][0]):
                    updated[pair] = (depth, x)
        if updated == best:
            break
        best = updated

    if start in best:
        tree: DecisionTree = {}

        def grow(pair, history):
            _, x = best[pair]
            tree[history] = spec.inputs[x]
            for y in _joint_outputs(spec, *pair, x):
                succ = (
                    int(spec.successors[pair[0], x, y]),
                    int(spec.successors[pair[1], x, y]),
                )
                grow(succ, history + ((spec.inputs[x], spec.outputs[y]),))

        grow(start, ())
        return StrategyResult(
            DISTINGUISHED,
            depth=best[start][0],
            pair=as_labels(start),
            decision_tree=tree,
        )

    seen = {start}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        if not separating[pair]:
            return StrategyResult(CONDITION_II_FAILS, pair=as_labels(pair))
        for x in separating[pair]:
            for y in _joint_outputs(spec, *pair, x):
                succ = (
                    int(spec.successors[pair[0], x, y]),
                    int(spec.successors[pair[1], x, y]),
                )
                if succ not in seen:
                    seen.add(succ)
                    queue.append(succ)

    return StrategyResult(DEPTH_EXHAUSTED, pair=as_labels(start))


Inputs = Union[Sequence[str], StrategyResult, Mapping[History, str]]


def future_distribution(
    spec: TransducerSpec,
    state: str,
    inputs: Inputs,
    horizon: Optional[int] = None,
    cap: int = HORIZON_CAP,
) -> FutureDistribution:
    """
    Exact distribution over output words of length `horizon` when `spec`
    starts in `state` and is fed either a fixed input word or the inputs an
    adaptive strategy picks from the history. Histories a decision tree does
    not cover fall back to the first input symbol.
    """
    strategy = None
    if isinstance(inputs, StrategyResult):
        strategy = inputs.decision_tree
    elif isinstance(inputs, Mapping):
        strategy = inputs
    else:
        word = tuple(inputs)
        if horizon is None:
            horizon = len(word)
        if len(word) < horizon:
            raise HorizonMismatch(
                f"Input word of length {len(word)} is shorter than horizon {horizon}"
            )

    if horizon is None:
        horizon = max((len(h) + 1 for h in strategy), default=0)
    if horizon > cap:
        raise HorizonTooLarge(horizon, cap)

    branches = [(spec.states.index(state), 1., (), ())]
    for t in range(horizon):
        grown = []
        for i, prob, outputs, history in branches:
            if strategy is None:
                symbol = word[t]
            else:
                symbol = strategy.get(history, spec.inputs[0])
            x = spec.inputs.index(symbol)
            for y in np.flatnonzero(spec.support[i, x].any(axis=1)):
                j = int(spec.successors[i, x, y])
                grown.append((
                    j,
                    prob * float(spec.transitions[i, x, y, j]),
                    outputs + (spec.outputs[y],),
                    history + ((symbol, spec.outputs[y]),),
                ))
        branches = grown

    probs: Dict[Tuple[str, ...], float] = {}
    for _, prob, outputs, _ in branches:
        probs[outputs] = probs.get(outputs, 0.) + prob
    return FutureDistribution(horizon, probs, tuple(spec.outputs))


def trace_distance(first: FutureDistribution, second: FutureDistribution) -> float:
    """Half the L1 distance between two output-word distributions."""
    if first.horizon != second.horizon:
        raise HorizonMismatch(
            f"Cannot compare horizons {first.horizon} and {second.horizon}"
        )
    if first.outputs and second.outputs and first.outputs != second.outputs:
        raise AlphabetMismatch(
            f"Output alphabets {first.outputs} and {second.outputs} differ"
        )
    words = set(first.probs) | set(second.probs)
    return 0.5 * float(sum(abs(first[w] - second[w]) for w in words))


def all_words(alphabet: Alphabet, length: int) -> Iterator[Tuple[str, ...]]:
    """All words of exactly `length` symbols in lexicographic canonical order."""
    yield from itertools.product(alphabet.symbols, repeat=length)
