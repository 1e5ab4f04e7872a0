"""
## Minimization to the ε-transducer

Two states of a presentation are merged when their future input-output
behaviour coincides statistically. For jointly unifilar machines this is
decided exactly by partition refinement: states stay together as long as,
for every input, their distributions over (output, successor class) agree.
The quotient of a presentation by the coarsest stable partition is its
ε-transducer, whose states are the causal states.
"""
from __future__ import annotations

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .base import InconsistentPartition
from .process import TransducerSpec


class Partition():
    """
    Disjoint classes of states that cover all states of a spec. Classes are
    numbered by their smallest member in canonical state order.
    """
    def __init__(self, states: Sequence[str], class_of: Dict[str, int]):
        self.states = tuple(states)
        self.class_of = dict(class_of)
        num = max(self.class_of.values()) + 1 if self.class_of else 0
        self.classes: List[List[str]] = [[] for _ in range(num)]
        for state in self.states:
            self.classes[self.class_of[state]].append(state)

    def __repr__(self):
        return f"{self.__class__.__name__}({self.classes})"

    def __len__(self):
        return len(self.classes)

    def __eq__(self, other):
        return isinstance(other, Partition) and self.class_of == other.class_of

    @property
    def is_identity(self) -> bool:
        """Every state sits in a class of its own."""
        return all(len(members) == 1 for members in self.classes)

    def labels(self) -> List[str]:
        """
        State labels of the quotient. A singleton class keeps its member's
        label, merged classes are named by joining the member labels with `+`.
        A joined name that is already taken by some state gets a `#k` suffix.
        """
        taken = set(self.states)
        labels: List[str] = []
        for members in self.classes:
            if len(members) == 1:
                labels.append(members[0])
                continue
            base = label = "+".join(members)
            suffix = 1
            while label in taken:
                label = f"{base}#{suffix}"
                suffix += 1
            taken.add(label)
            labels.append(label)
        return labels

    def label_of(self, state: str) -> str:
        """Label of the quotient state that `state` was merged into."""
        return self.labels()[self.class_of[state]]

    def to_dict(self) -> dict:
        return {
            "class_of": dict(self.class_of),
            "classes": [list(members) for members in self.classes],
        }


def _signatures(spec: TransducerSpec, assignment: np.ndarray, num: int) -> np.ndarray:
    """
    For every state the array `sig[x, y, c]`, the probability to emit `y` and
    land in class `c` after input `x`.
    """
    onehot = np.zeros((len(spec.states), num))
    onehot[np.arange(len(spec.states)), assignment] = 1.
    return np.einsum("ixyj,jc->ixyc", spec.transitions, onehot)


def _canonical(groups: List[List[int]], n_states: int) -> np.ndarray:
    assignment = np.empty(n_states, dtype=int)
    for number, members in enumerate(sorted(groups, key=min)):
        assignment[members] = number
    return assignment


def refine_partition(spec: TransducerSpec, eps: Optional[float] = None) -> Partition:
    """
    Coarsest partition of the states of `spec` that is stable under
    refinement: any class whose members' signatures (input to distribution
    over output and successor class) differ by more than `eps` is split,
    until nothing changes.
    """
    eps = spec.eps if eps is None else eps
    n_states = len(spec.states)
    assignment = np.zeros(n_states, dtype=int)
    num = 1

    while True:
        sig = _signatures(spec, assignment, num)
        groups: List[List[int]] = []
        for cls in range(num):
            cls_groups: List[List[int]] = []
            for i in np.flatnonzero(assignment == cls):
                for group in cls_groups:
                    if np.allclose(sig[i], sig[group[0]], atol=eps, rtol=0.):
                        group.append(int(i))
                        break
                else:
                    cls_groups.append([int(i)])
            groups.extend(cls_groups)

        if len(groups) == num:
            break
        assignment = _canonical(groups, n_states)
        num = len(groups)

    return Partition(
        spec.states,
        {spec.states[i]: int(assignment[i]) for i in range(n_states)},
    )


def quotient(spec: TransducerSpec, part: Partition, eps: Optional[float] = None) -> TransducerSpec:
    """
    Collapse every class of `part` into one state. Rows of the members are
    averaged; if they disagree by more than `eps` the partition was not
    produced by `refine_partition` and `InconsistentPartition` is raised.
    """
    eps = spec.eps if eps is None else eps
    if tuple(part.states) != tuple(spec.states):
        raise InconsistentPartition("Partition does not cover the states of the transducer")

    assignment = np.array([part.class_of[s] for s in spec.states])
    sig = _signatures(spec, assignment, len(part))

    tensor = np.zeros((len(part),) + sig.shape[1:])
    for cls, members in enumerate(part.classes):
        idx = [spec.states.index(m) for m in members]
        rows = sig[idx]
        if np.any(np.abs(rows - rows[0]) > eps):
            raise InconsistentPartition(
                f"Members of class {members} have different transition rows"
            )
        tensor[cls] = rows.mean(axis=0)

    return TransducerSpec(
        spec.inputs,
        spec.outputs,
        part.labels(),
        tensor,
        eps=spec.eps,
    )


def minimize(spec: TransducerSpec) -> Tuple[TransducerSpec, Partition]:
    """Return the ε-transducer of `spec` along with the partition it came from."""
    part = refine_partition(spec)
    if part.is_identity:
        return spec, part
    return quotient(spec, part), part


def _word_distribution(
    spec: TransducerSpec, i: int, word: Sequence[int]
) -> Dict[Tuple[int, ...], float]:
    branches = {(): (i, 1.)}
    for x in word:
        grown = {}
        for outputs, (state, prob) in branches.items():
            for y in np.flatnonzero(spec.support[state, x].any(axis=1)):
                j = spec.successors[state, x, y]
                grown[outputs + (int(y),)] = (j, prob * spec.transitions[state, x, y, j])
        branches = grown
    return {outputs: prob for outputs, (_, prob) in branches.items()}


def distinguishing_word(
    spec: TransducerSpec,
    first: str,
    second: str,
    max_length: Optional[int] = None,
) -> Optional[Tuple[str, ...]]:
    """
    Shortest input word for which the output-word distributions from `first`
    and `second` differ by more than `eps` somewhere, or `None` if no word of
    length up to `max_length` (default: number of states) does.
    """
    max_length = len(spec.states) if max_length is None else max_length
    i, j = spec.states.index(first), spec.states.index(second)
    n_inputs = len(spec.inputs)

    for length in range(1, max_length + 1):
        for word in itertools.product(range(n_inputs), repeat=length):
            dist_i = _word_distribution(spec, i, word)
            dist_j = _word_distribution(spec, j, word)
            for outputs in set(dist_i) | set(dist_j):
                if abs(dist_i.get(outputs, 0.) - dist_j.get(outputs, 0.)) > spec.eps:
                    return tuple(spec.inputs[x] for x in word)
    return None
