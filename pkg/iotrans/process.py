"""
## Finite-state input-output process models

A transducer presentation consists of an input alphabet, an output alphabet, a
list of states and the transition tensor `T[i, x, y, j]`, the probability to
emit output `y` and move to state `j` when state `i` receives input `x`. This
module validates such presentations, provides the propagator of jointly
unifilar machines and ships canonical instances like the actively perturbed
coin.

Symbols and states are strings. Their declaration order is the canonical
index order of every tensor in the package.
"""
from __future__ import annotations

import json
import logging
import os
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._config import DATA_DIR, EPS_PROB
from .base import (
    ImpossibleEmission, NegativeProbability, NonUnifilar, ParameterOutOfRange,
    RowNotNormalized, SpecFormatError, TransducerError, UnknownSymbol,
)

logger = logging.getLogger(__name__)


class Alphabet():
    """
    Ordered collection of distinct symbol labels. The position of a symbol in
    the alphabet is the index used for it in all tensors.
    """
    def __init__(self, symbols: Iterable[str], name: str = "symbol"):
        symbols = tuple(str(s) for s in symbols)
        if len(symbols) == 0:
            raise SpecFormatError(f"The {name} alphabet must not be empty")
        if len(set(symbols)) != len(symbols):
            raise SpecFormatError(f"Labels of the {name} alphabet must be unique")

        self.symbols = symbols
        self.name = name
        self._index = {s: i for i, s in enumerate(symbols)}

    def __repr__(self):
        return f"{self.__class__.__name__}({list(self.symbols)})"

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    def index(self, symbol: str) -> int:
        """Return the canonical index of `symbol`."""
        try:
            return self._index[symbol]
        except KeyError as key_err:
            raise UnknownSymbol(symbol, self.name) from key_err

    def __getitem__(self, idx: int) -> str:
        return self.symbols[idx]

    def split_word(self, word: str) -> Tuple[str, ...]:
        """
        Split a word given on the command line into symbols. If every symbol
        of the alphabet is a single character, the word is read character by
        character, otherwise it must be comma-separated.
        """
        if word == "":
            return ()
        if all(len(s) == 1 for s in self.symbols) and "," not in word:
            symbols = tuple(word)
        else:
            symbols = tuple(s.strip() for s in word.split(","))
        for symbol in symbols:
            self.index(symbol)
        return symbols


class TransducerSpec():
    """
    Validated, immutable transducer presentation.

    On construction the transition tensor is checked for non-negativity, row
    normalization within `eps` and joint unifiliarity, i.e. for every state,
    input and output at most one successor has a probability above `eps`.
    """
    def __init__(
        self,
        inputs: Iterable[str],
        outputs: Iterable[str],
        states: Iterable[str],
        transitions: np.ndarray,
        eps: float = EPS_PROB,
    ):
        self.inputs = inputs if isinstance(inputs, Alphabet) else Alphabet(inputs, "input")
        self.outputs = outputs if isinstance(outputs, Alphabet) else Alphabet(outputs, "output")
        self.states = states if isinstance(states, Alphabet) else Alphabet(states, "state")
        self.eps = eps

        tensor = np.array(transitions, dtype=float)
        expected = (len(self.states), len(self.inputs), len(self.outputs), len(self.states))
        if tensor.shape != expected:
            raise SpecFormatError(
                f"Transition tensor has shape {tensor.shape}, expected {expected}"
            )
        if not np.all(np.isfinite(tensor)):
            i, x, y, j = np.argwhere(~np.isfinite(tensor))[0]
            raise SpecFormatError(
                f"Transition {self.states[i]} --{self.inputs[x]}|{self.outputs[y]}--> "
                f"{self.states[j]} has non-finite probability {tensor[i, x, y, j]}"
            )

        if np.any(tensor < -eps):
            i, x, y, j = np.argwhere(tensor < -eps)[0]
            raise NegativeProbability(
                float(tensor[i, x, y, j]),
                f"transition {self.states[i]} --{self.inputs[x]}|{self.outputs[y]}--> "
                f"{self.states[j]}"
            )
        tensor = np.clip(tensor, 0.0, None)

        totals = tensor.sum(axis=(2, 3))
        for i, x in np.argwhere(np.abs(totals - 1.0) > eps):
            raise RowNotNormalized(self.states[i], self.inputs[x], float(totals[i, x]))

        support = tensor > eps
        for i, x, y in np.argwhere(support.sum(axis=3) > 1):
            raise NonUnifilar(self.states[i], self.inputs[x], self.outputs[y])

        tensor.setflags(write=False)
        support.setflags(write=False)
        self.transitions = tensor
        self.support = support

        successors = np.where(support.any(axis=3), support.argmax(axis=3), -1)
        successors.setflags(write=False)
        self.successors = successors

    def __repr__(self):
        return (
            self.__class__.__name__ +
            f"(inputs={list(self.inputs)}, outputs={list(self.outputs)}, "
            f"states={list(self.states)})"
        )

    def __len__(self):
        return len(self.states)

    @property
    def shape(self) -> Tuple[int, int, int]:
        """Number of states, inputs and outputs."""
        return len(self.states), len(self.inputs), len(self.outputs)

    def allclose(self, other: TransducerSpec, atol: float = EPS_PROB) -> bool:
        """Elementwise comparison of alphabets, state labels and tensors."""
        return (
            self.inputs == other.inputs
            and self.outputs == other.outputs
            and self.states == other.states
            and np.allclose(self.transitions, other.transitions, atol=atol, rtol=0.)
        )

    def row(self, state: str, symbol: str) -> Dict[Tuple[str, str], float]:
        """Return the non-zero entries of `T[state, symbol]` keyed by (output, successor)."""
        i, x = self.states.index(state), self.inputs.index(symbol)
        return {
            (self.outputs[y], self.states[j]): float(self.transitions[i, x, y, j])
            for y, j in np.argwhere(self.support[i, x])
        }

    @classmethod
    def from_dict(cls, raw: dict, eps: float = EPS_PROB) -> TransducerSpec:
        """
        Create a spec from its JSON representation. Omitted transitions have
        probability zero, repeated ones are added up.
        """
        if not isinstance(raw, dict):
            raise SpecFormatError("Spec must be a JSON object")
        try:
            inputs = Alphabet(raw["inputs"], "input")
            outputs = Alphabet(raw["outputs"], "output")
            states = Alphabet(raw["states"], "state")
            entries = raw["transitions"]
        except KeyError as key_err:
            raise SpecFormatError(f"Spec is missing the key {key_err}") from key_err
        except TypeError as type_err:
            raise SpecFormatError("Alphabets and states must be lists") from type_err

        if not isinstance(entries, list):
            raise SpecFormatError("'transitions' must be a list")

        tensor = np.zeros((len(states), len(inputs), len(outputs), len(states)))
        for entry in entries:
            try:
                i = states.index(str(entry["from"]))
                x = inputs.index(str(entry["input"]))
                y = outputs.index(str(entry["output"]))
                j = states.index(str(entry["to"]))
                prob = float(entry["prob"])
            except (KeyError, TypeError, ValueError) as err:
                if isinstance(err, TransducerError):
                    raise
                raise SpecFormatError(f"Malformed transition entry {entry}") from err
            tensor[i, x, y, j] += prob

        return cls(inputs, outputs, states, tensor, eps=eps)

    @classmethod
    def from_json(cls, path: str, eps: float = EPS_PROB) -> TransducerSpec:
        """Load and validate a spec from a JSON file."""
        with open(path, "r", encoding="utf-8") as json_file:
            try:
                raw = json.load(json_file)
            except json.JSONDecodeError as dec_err:
                raise SpecFormatError(f"{path} is not valid JSON: {dec_err}") from dec_err
        return cls.from_dict(raw, eps=eps)

    def to_dict(self) -> dict:
        """JSON representation listing only transitions above `eps`."""
        transitions = [
            {
                "from": self.states[i],
                "input": self.inputs[x],
                "output": self.outputs[y],
                "to": self.states[j],
                "prob": float(self.transitions[i, x, y, j]),
            }
            for i, x, y, j in np.argwhere(self.support)
        ]
        return {
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "states": list(self.states),
            "transitions": transitions,
        }

    def to_json(self, path: str):
        """Write the JSON representation to `path`."""
        with open(path, "w", encoding="utf-8") as json_file:
            json.dump(self.to_dict(), json_file, indent=2)


def validate_spec(raw: dict, eps: float = EPS_PROB) -> TransducerSpec:
    """Validate raw (already parsed) spec data, see `TransducerSpec.from_dict`."""
    return TransducerSpec.from_dict(raw, eps=eps)


def propagator(spec: TransducerSpec, state: str, symbol: str, output: str) -> str:
    """
    Return the unique successor of `state` after reading `symbol` and
    emitting `output`. Raises `ImpossibleEmission` if that output has zero
    probability.
    """
    i = spec.states.index(state)
    x = spec.inputs.index(symbol)
    y = spec.outputs.index(output)
    j = spec.successors[i, x, y]
    if j < 0:
        raise ImpossibleEmission(state, symbol, output)
    return spec.states[j]


def actively_perturbed_coin(p: float, q: float) -> TransducerSpec:
    """
    Two-state machine holding the face of a coin. Input `1` flips the coin
    with probability `p`, input `0` with probability `q`, and the new face is
    emitted. Both parameters must lie strictly between 0 and 1.
    """
    for name, value in (("p", p), ("q", q)):
        if not 0. < value < 1.:
            raise ParameterOutOfRange(f"{name} must lie in (0, 1), not {value}")

    tensor = np.zeros((2, 2, 2, 2))
    flip = {0: q, 1: p}
    for face in (0, 1):
        for x, prob in flip.items():
            tensor[face, x, face, face] = 1. - prob
            tensor[face, x, 1 - face, 1 - face] = prob

    return TransducerSpec(
        inputs=["0", "1"],
        outputs=["0", "1"],
        states=["s0", "s1"],
        transitions=tensor,
    )


def load_example(name: str) -> TransducerSpec:
    """
    Load one of the canonical machines shipped with the package: `disjoint`
    (two states with disjoint outputs), `copy` (a single state that always
    emits `0`) or `two_step` (three states whose initial pair needs two
    adaptive inputs to be told apart).
    """
    path = os.path.join(DATA_DIR, f"{name}.json")
    if not os.path.exists(path):
        raise IOError(f"No example spec named '{name}' at {path}")
    return TransducerSpec.from_json(path)


def random_spec(
    n_states: int,
    n_inputs: int,
    n_outputs: int,
    rng: np.random.Generator,
    floor: float = 0.2,
) -> TransducerSpec:
    """
    Draw a random jointly unifilar spec. For each state and input a random
    non-empty set of outputs is emitted, each leading to a uniformly drawn
    successor. Emission probabilities are Dirichlet samples mixed with a
    uniform share `floor`, which keeps them away from zero.
    """
    tensor = np.zeros((n_states, n_inputs, n_outputs, n_states))
    for i in range(n_states):
        for x in range(n_inputs):
            num = rng.integers(1, n_outputs + 1)
            emitted = rng.choice(n_outputs, size=num, replace=False)
            probs = (1. - floor) * rng.dirichlet(np.ones(num)) + floor / num
            for y, prob in zip(emitted, probs):
                tensor[i, x, y, rng.integers(n_states)] = prob

    return TransducerSpec(
        inputs=[str(x) for x in range(n_inputs)],
        outputs=[str(y) for y in range(n_outputs)],
        states=[f"s{i}" for i in range(n_states)],
        transitions=tensor,
    )


class InputDistribution():
    """
    IID distribution over the input alphabet, i.e. the probability
    `P[X = x]` applied independently at every time step.
    """
    def __init__(self, probs: Dict[str, float], eps: float = EPS_PROB):
        probs = {str(k): float(v) for k, v in probs.items()}
        for symbol, prob in probs.items():
            if not np.isfinite(prob):
                raise SpecFormatError(f"Input probability of '{symbol}' is {prob}")
            if prob < -eps:
                raise NegativeProbability(prob, f"input distribution at '{symbol}'")
        total = sum(probs.values())
        if abs(total - 1.) > eps:
            raise RowNotNormalized("<input process>", "*", total)

        self.probs = {k: max(v, 0.) for k, v in probs.items()}
        self.eps = eps

    def __repr__(self):
        return f"{self.__class__.__name__}({self.probs})"

    def vector(self, alphabet: Alphabet) -> np.ndarray:
        """Probabilities in canonical order of `alphabet`; absent symbols are 0."""
        vec = np.zeros(len(alphabet))
        for symbol, prob in self.probs.items():
            vec[alphabet.index(symbol)] = prob
        return vec

    def missing(self, alphabet: Alphabet) -> List[str]:
        """Symbols of `alphabet` that are never fed in."""
        return [s for s in alphabet if self.probs.get(s, 0.) <= self.eps]

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> InputDistribution:
        """Every input symbol with the same probability."""
        return cls({s: 1. / len(alphabet) for s in alphabet})

    @classmethod
    def parse(cls, text: str, alphabet: Optional[Alphabet] = None) -> InputDistribution:
        """
        Parse comma-separated `symbol=prob` pairs like `1=0.4,0=0.6`. If an
        `alphabet` is given, unknown symbols are rejected and symbols that
        are not mentioned are logged as a pathological input.
        """
        probs = {}
        for item in text.split(","):
            item = item.strip()
            if item == "":
                continue
            if "=" not in item:
                raise SpecFormatError(f"Expected 'symbol=prob', got '{item}'")
            symbol, value = item.split("=", maxsplit=1)
            try:
                probs[symbol.strip()] = float(value)
            except ValueError as val_err:
                raise SpecFormatError(f"'{value}' is not a probability") from val_err

        dist = cls(probs)
        if alphabet is not None:
            dist.vector(alphabet)
            if missing := dist.missing(alphabet):
                logger.warning(
                    "Input distribution never feeds %s; the input process may "
                    "be pathological", missing
                )
        return dist

    def to_dict(self) -> Dict[str, float]:
        return dict(self.probs)


class Trace():
    """
    A run of a transducer: the initial state and the sequence of
    (input, output) pairs that were observed.
    """
    def __init__(
        self,
        spec: TransducerSpec,
        initial_state: str,
        steps: Sequence[Tuple[str, str]],
    ):
        spec.states.index(initial_state)
        for symbol, output in steps:
            spec.inputs.index(symbol)
            spec.outputs.index(output)

        self.spec = spec
        self.initial_state = initial_state
        self.steps = [tuple(step) for step in steps]

    def __repr__(self):
        word = " ".join(f"{x}|{y}" for x, y in self.steps)
        return f"{self.__class__.__name__}({self.initial_state}: {word})"

    def __len__(self):
        return len(self.steps)

    @property
    def inputs(self) -> Tuple[str, ...]:
        return tuple(x for x, _ in self.steps)

    @property
    def outputs(self) -> Tuple[str, ...]:
        return tuple(y for _, y in self.steps)

    def final_state(self) -> str:
        """Replay the trace through the propagator and return the last state."""
        state = self.initial_state
        for symbol, output in self.steps:
            state = propagator(self.spec, state, symbol, output)
        return state


def simulate_classical(
    spec: TransducerSpec,
    initial: str,
    inputs: Sequence[str],
    seed: Optional[int] = None,
) -> Trace:
    """Sample a classical run of `spec` started in `initial` and fed `inputs`."""
    rng = np.random.default_rng(seed)
    n_outputs, n_states = len(spec.outputs), len(spec.states)
    i = spec.states.index(initial)
    steps = []
    for symbol in inputs:
        x = spec.inputs.index(symbol)
        flat = spec.transitions[i, x].reshape(-1)
        choice = rng.choice(n_outputs * n_states, p=flat / flat.sum())
        y, i = divmod(int(choice), n_states)
        steps.append((symbol, spec.outputs[y]))
    return Trace(spec, initial, steps)
