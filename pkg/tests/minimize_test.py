"""
Test the partition refinement that turns presentations into ε-transducers.
"""
import itertools

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from iotrans.base import InconsistentPartition
from iotrans.classical import (
    all_words, classical_complexity, future_distribution, trace_distance,
)
from iotrans.minimize import (
    Partition, distinguishing_word, minimize, quotient, refine_partition,
)
from iotrans.process import (
    InputDistribution, TransducerSpec, actively_perturbed_coin, load_example,
    propagator, random_spec,
)
from iotrans.quantum import quantum_complexity

# pylint: disable=no-method-argument
# pylint: disable=no-self-argument

@st.composite
def st_spec(draw, max_states=5, max_symbols=3):
    """Strategy for random jointly unifilar specs."""
    n_states = draw(st.integers(min_value=1, max_value=max_states))
    n_inputs = draw(st.integers(min_value=1, max_value=max_symbols))
    n_outputs = draw(st.integers(min_value=1, max_value=max_symbols))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_spec(n_states, n_inputs, n_outputs, np.random.default_rng(seed))


def with_copy(spec, copy_of):
    """
    `spec` with a copy of one state appended. Transitions of all other
    states into the original are redirected to the copy.
    """
    n_states = len(spec.states)
    idx = spec.states.index(copy_of)
    tensor = np.zeros((n_states + 1,) + spec.transitions.shape[1:3] + (n_states + 1,))
    tensor[:n_states, :, :, :n_states] = spec.transitions
    tensor[n_states] = tensor[idx]
    for i in range(n_states + 1):
        if i != idx:
            tensor[i, :, :, n_states] = tensor[i, :, :, idx]
            tensor[i, :, :, idx] = 0.
    return TransducerSpec(
        spec.inputs, spec.outputs, list(spec.states) + [f"{copy_of}_copy"], tensor
    )


def duplicated_coin(p, q, copy_of="s0"):
    """The coin with a copy of one of its faces."""
    return with_copy(actively_perturbed_coin(p, q), copy_of)


class TestPartition:
    """Test the partition container."""
    def test_labels(self):
        """Merged classes are named after their members."""
        part = Partition(["a", "b", "c"], {"a": 0, "b": 1, "c": 0})
        assert part.classes == [["a", "c"], ["b"]]
        assert part.labels() == ["a+c", "b"]
        assert not part.is_identity
        assert len(part) == 2

    def test_identity(self):
        """Singleton classes only."""
        part = Partition(["a", "b"], {"a": 0, "b": 1})
        assert part.is_identity
        assert part.to_dict()["classes"] == [["a"], ["b"]]

    def test_label_collision(self):
        """Joined names never clash with the name of another state."""
        part = Partition(["a", "b", "a+b"], {"a": 0, "b": 0, "a+b": 1})
        assert part.labels() == ["a+b#1", "a+b"]
        assert part.label_of("b") == "a+b#1"
        assert part.label_of("a+b") == "a+b"

    def test_minimize_with_plus_in_names(self):
        """A state already called `a+b` does not break the quotient."""
        tensor = np.zeros((3, 1, 2, 3))
        tensor[0, 0, 0, 2] = 1.
        tensor[1, 0, 0, 2] = 1.
        tensor[2, 0, 1, 0] = 1.
        spec = TransducerSpec(["0"], ["0", "1"], ["a", "b", "a+b"], tensor)

        minimal, part = minimize(spec)
        assert list(minimal.states) == ["a+b#1", "a+b"]
        assert propagator(minimal, "a+b", "0", "1") == "a+b#1"


class TestRefinePartition:
    """Test the coarsest stable partition."""
    @pytest.mark.parametrize("p, q", [(0.25, 0.25), (0.3, 0.2), (0.5, 0.1), (0.9, 0.5)])
    def test_coin_is_minimal(self, p, q):
        """Unless both flip probabilities are one half, the faces differ."""
        assert refine_partition(actively_perturbed_coin(p, q)).is_identity

    def test_examples_are_minimal(self):
        """The shipped examples are already ε-transducers."""
        for name in ("disjoint", "copy", "two_step"):
            assert refine_partition(load_example(name)).is_identity

    @pytest.mark.parametrize("copy_of", ["s0", "s1"])
    @pytest.mark.parametrize("p, q", [(0.25, 0.25), (0.3, 0.2), (0.1, 0.7)])
    def test_duplicated_state(self, p, q, copy_of):
        """A copied state is merged back, recovering the original coin."""
        spec = duplicated_coin(p, q, copy_of)
        minimal, part = minimize(spec)

        assert len(part) == 2
        assert sorted(map(sorted, part.classes)) == sorted(
            [sorted([copy_of, f"{copy_of}_copy"]), ["s1" if copy_of == "s0" else "s0"]]
        )
        assert np.allclose(
            minimal.transitions, actively_perturbed_coin(p, q).transitions, atol=1e-12
        )

    def test_fair_coin_collapses(self):
        """A fair coin needs no memory at all."""
        minimal, part = minimize(actively_perturbed_coin(0.5, 0.5))
        assert len(minimal.states) == 1
        assert part.labels() == ["s0+s1"]

        dist = InputDistribution.uniform(minimal.inputs)
        assert classical_complexity(minimal, dist) == pytest.approx(0., abs=1e-12)
        assert quantum_complexity(minimal, dist) == pytest.approx(0., abs=1e-12)

    @given(spec=st_spec())
    @settings(max_examples=300, derandomize=True, deadline=None)
    def test_idempotent(self, spec):
        """Minimizing a minimal machine does not change it."""
        minimal, part = minimize(spec)
        assert len(minimal.states) == len(part)
        again, again_part = minimize(minimal)
        assert again_part.is_identity
        assert again.allclose(minimal)

    @given(spec=st_spec(max_states=4, max_symbols=2))
    @settings(max_examples=50, derandomize=True, deadline=None)
    def test_merges_only_equals(self, spec):
        """States are merged exactly when no input word tells them apart."""
        part = refine_partition(spec)
        for first, second in itertools.combinations(spec.states, 2):
            word = distinguishing_word(spec, first, second)
            same = part.class_of[first] == part.class_of[second]
            assert (word is None) == same

    @given(spec=st_spec(max_states=4, max_symbols=2), data=st.data())
    @settings(max_examples=60, derandomize=True, deadline=None)
    def test_preserves_behaviour(self, spec, data):
        """Every state behaves like its class in the quotient for all short words."""
        copy_of = data.draw(st.sampled_from(list(spec.states)))
        presentation = with_copy(spec, copy_of)
        minimal, part = minimize(presentation)
        assert part.class_of[copy_of] == part.class_of[f"{copy_of}_copy"]

        for state in presentation.states:
            for length in range(1, 5):
                for word in all_words(presentation.inputs, length):
                    assert trace_distance(
                        future_distribution(presentation, state, word),
                        future_distribution(minimal, part.label_of(state), word),
                    ) <= 1e-9

    @pytest.mark.parametrize("p, q", [(0.25, 0.25), (0.3, 0.2), (0.5, 0.5)])
    def test_coin_preserves_behaviour(self, p, q):
        """The duplicated coin and its quotient agree on every word up to length 4."""
        presentation = duplicated_coin(p, q, "s1")
        minimal, part = minimize(presentation)
        for state in presentation.states:
            for length in range(1, 5):
                for word in all_words(presentation.inputs, length):
                    assert trace_distance(
                        future_distribution(presentation, state, word),
                        future_distribution(minimal, part.label_of(state), word),
                    ) <= 1e-9


class TestQuotient:
    """Test collapsing classes of states."""
    def test_inconsistent_partition(self):
        """Merging states with different rows is rejected."""
        coin = actively_perturbed_coin(0.3, 0.2)
        with pytest.raises(InconsistentPartition):
            quotient(coin, Partition(coin.states, {"s0": 0, "s1": 0}))

    def test_wrong_states(self):
        """The partition must cover the states of the transducer."""
        coin = actively_perturbed_coin(0.3, 0.2)
        with pytest.raises(InconsistentPartition):
            quotient(coin, Partition(["a", "b"], {"a": 0, "b": 1}))


class TestDistinguishingWord:
    """Test the witnesses for distinct states."""
    def test_two_step(self):
        """The first pair of the two-step machine needs two inputs."""
        spec = load_example("two_step")
        assert distinguishing_word(spec, "a", "b") == ("0", "0")
        assert distinguishing_word(spec, "a", "c") == ("0",)

    def test_copies(self):
        """Copies of a state cannot be told apart."""
        spec = duplicated_coin(0.3, 0.2)
        assert distinguishing_word(spec, "s0", "s0_copy") is None
        assert distinguishing_word(spec, "s0", "s1") == ("0",)
