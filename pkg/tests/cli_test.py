"""
Test the command line interface and the perturbed-coin sweep.
"""
import io
import json

import numpy as np
import pandas as pd
import pytest
from scipy.stats import entropy

from iotrans.base import ParameterOutOfRange
from iotrans.cli import SWEEP_COLUMNS, dispatch, run_sweep, sweep_point, sweep_table
from iotrans.process import actively_perturbed_coin, load_example


@pytest.fixture
def coin_file(tmp_path):
    """The perturbed coin at `p = q = 1/4` written to disk."""
    path = tmp_path / "coin.json"
    actively_perturbed_coin(0.25, 0.25).to_json(path)
    return str(path)


@pytest.fixture
def disjoint_file(tmp_path):
    """The machine with disjoint outputs written to disk."""
    path = tmp_path / "disjoint.json"
    load_example("disjoint").to_json(path)
    return str(path)


@pytest.fixture
def duplicated_file(tmp_path):
    """
    A presentation with two copies `A1`, `A2` of one causal state. Both emit
    `0` and move to `B`, which emits `1` and picks the copy by its input.
    """
    transitions = []
    for symbol in ("0", "1"):
        for copy in ("A1", "A2"):
            transitions.append(
                {"from": copy, "input": symbol, "output": "0", "to": "B", "prob": 1.}
            )
    transitions.append({"from": "B", "input": "0", "output": "1", "to": "A1", "prob": 1.})
    transitions.append({"from": "B", "input": "1", "output": "1", "to": "A2", "prob": 1.})
    path = tmp_path / "duplicated.json"
    path.write_text(json.dumps({
        "inputs": ["0", "1"],
        "outputs": ["0", "1"],
        "states": ["A1", "A2", "B"],
        "transitions": transitions,
    }))
    return str(path)


def run(capsys, *argv):
    """Call the command line and return exit code and parsed report."""
    code = dispatch(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


class TestDispatch:
    """Test the subcommands and their exit codes."""
    def test_validate(self, capsys, coin_file):
        """A valid spec is reported with its sizes."""
        code, report = run(capsys, "validate", coin_file)
        assert code == 0
        assert report == {
            "valid": True, "states": 2, "inputs": 2, "outputs": 2, "minimal": True
        }

    def test_validate_bad(self, capsys, tmp_path):
        """Unnormalized rows are a domain error."""
        raw = actively_perturbed_coin(0.25, 0.25).to_dict()
        raw["transitions"][0]["prob"] = 0.5
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(raw))

        code, report = run(capsys, "validate", str(path))
        assert code == 1
        assert report["error"] == "RowNotNormalized"

    def test_missing_file(self, capsys, tmp_path):
        """Unreadable files are reported, not raised."""
        code, report = run(capsys, "validate", str(tmp_path / "nope.json"))
        assert code == 1
        assert report["error"] == "FileNotFoundError"

    def test_usage_errors(self, capsys):
        """Unknown commands and missing arguments exit with 2."""
        assert dispatch([]) == 2
        assert dispatch(["frobnicate"]) == 2
        assert dispatch(["complexity"]) == 2
        assert capsys.readouterr().out == ""

    def test_minimize(self, capsys, coin_file):
        """A minimal spec comes back unchanged."""
        code, report = run(capsys, "minimize", "--spec", coin_file)
        assert code == 0
        assert report["partition"]["classes"] == [["s0"], ["s1"]]
        assert report["spec"]["states"] == ["s0", "s1"]

    def test_complexity(self, capsys, coin_file):
        """The coin needs one classical bit whatever the input."""
        code, report = run(capsys, "complexity", "--spec", coin_file, "--iid", "1=0.4,0=0.6")
        assert code == 0
        assert report["C_X"] == 1.0
        assert report["occupancy"] == {"s0": 0.5, "s1": 0.5}

    def test_qcomplexity(self, capsys, coin_file):
        """The quantum memory of the coin is the entropy of a biased qubit."""
        code, report = run(capsys, "qcomplexity", "--spec", coin_file)
        assert code == 0
        assert report["Q_X"] == pytest.approx(0.543564443, abs=1e-6)
        assert report["C_X"] == 1.0

    def test_structural(self, capsys, coin_file):
        """The structural complexity report names its argmax."""
        code, report = run(
            capsys, "structural", "--spec", coin_file, "--which", "quantum",
            "--resolution", "8",
        )
        assert code == 0
        assert report["value_bits"] == pytest.approx(0.543564443, abs=1e-6)
        assert set(report["argmax_distribution"]) == {"0", "1"}

    def test_inefficiency(self, capsys, coin_file, disjoint_file):
        """The coin is step-wise inefficient, the disjoint machine is not."""
        code, report = run(capsys, "inefficiency", "--spec", coin_file)
        assert code == 0
        assert report["stepwise_inefficient"] is True
        assert report["witness"] == ["s0", "s1"]

        _, report = run(capsys, "inefficiency", "--spec", disjoint_file)
        assert report["stepwise_inefficient"] is False
        assert report["witness"] is None
        assert report["orthogonal_quantum_states"] is True

    def test_discriminate(self, capsys, coin_file, disjoint_file):
        """Only the disjoint machine can be retrodicted."""
        _, report = run(capsys, "discriminate", "--spec", coin_file, "--pair", "s0,s1")
        assert report["status"] == "ConditionIIFails"

        _, report = run(
            capsys, "discriminate", "--spec", disjoint_file, "--pair", "sa,sb",
            "--max-depth", "3",
        )
        assert report["status"] == "Distinguished"
        assert report["depth"] == 1
        assert report["trace_distance"] == 1.0

    def test_discriminate_unknown_state(self, capsys, coin_file):
        """States must be declared."""
        code, report = run(capsys, "discriminate", "--spec", coin_file, "--pair", "s0,s7")
        assert code == 1
        assert report["error"] == "UnknownSymbol"

    def test_discriminate_same_state(self, coin_file):
        """A state cannot be discriminated from itself."""
        assert dispatch(["discriminate", "--spec", coin_file, "--pair", "s0,s0"]) == 2

    def test_simulate(self, capsys, coin_file):
        """Runs are reproducible given the seed."""
        argv = ["simulate", "--spec", coin_file, "--init", "s0", "--inputs", "0110", "--seed", "7"]
        code, first = run(capsys, *argv)
        assert code == 0
        assert len(first["outputs"]) == 4
        assert all(fid == pytest.approx(1.) for fid in first["fidelities"])

        dispatch(argv)
        second = capsys.readouterr().out
        dispatch(argv)
        assert capsys.readouterr().out == second

    def test_simulate_samples(self, capsys, coin_file):
        """Many samples are aggregated into word frequencies."""
        code, report = run(
            capsys, "simulate", "--spec", coin_file, "--init", "s0", "--inputs", "0",
            "--seed", "3", "--samples", "2000",
        )
        assert code == 0
        assert set(report["frequencies"]) <= {"0", "1"}
        assert sum(report["frequencies"].values()) == pytest.approx(1.)

    def test_seed_from_environment(self, capsys, coin_file, monkeypatch):
        """Without `--seed` the environment decides."""
        monkeypatch.setenv("IOTRANS_SEED", "11")
        _, report = run(
            capsys, "simulate", "--spec", coin_file, "--init", "s1", "--inputs", "01",
        )
        assert report["seed"] == 11

    def test_verify(self, capsys, coin_file):
        """Quantum and classical statistics agree."""
        code, report = run(capsys, "verify", "--spec", coin_file, "--horizon", "3")
        assert code == 0
        assert report["max_trace_distance"] <= 1e-9
        assert report["min_fidelity"] >= 1. - 1e-9
        assert set(report["words"]) == {"s0", "s1"}

    def test_sweep(self, capsys):
        """The sweep writes a CSV table with a fixed header."""
        code = dispatch([
            "sweep", "--resolution", "3", "--p-range", "0.25,0.45",
            "--q-range", "0.25,0.45", "--structural-resolution", "4",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "p,q,c_bar,q_bar,overlap"

        table = pd.read_csv(io.StringIO(out))
        assert len(table) == 9
        first = table.iloc[0]
        assert (first.p, first.q) == (0.25, 0.25)
        assert first.c_bar == pytest.approx(1.)
        assert first.q_bar == pytest.approx(0.543564443, abs=1e-6)

    def test_bad_range(self, capsys):
        """Ranges must be pairs of numbers inside the unit interval."""
        assert dispatch(["sweep", "--p-range", "0.1"]) == 2
        code, report = run(capsys, "sweep", "--p-range", "0.,0.4", "--resolution", "2")
        assert code == 1
        assert report["error"] == "ParameterOutOfRange"


class TestPresentations:
    """Test that non-minimal presentations are analysed through their ε-transducer."""
    def test_validate(self, capsys, duplicated_file):
        """The presentation is valid but not minimal."""
        code, report = run(capsys, "validate", duplicated_file)
        assert code == 0
        assert report["minimal"] is False

    def test_complexity(self, capsys, duplicated_file):
        """Copies of a causal state do not count as extra memory."""
        code, report = run(capsys, "complexity", "--spec", duplicated_file)
        assert code == 0
        assert report["C_X"] == pytest.approx(1.)
        assert report["occupancy"] == {"A1+A2": 0.5, "B": 0.5}

    def test_qcomplexity(self, capsys, duplicated_file):
        """The two causal states are orthogonal, so quantum memory saves nothing."""
        _, report = run(capsys, "qcomplexity", "--spec", duplicated_file)
        assert report["C_X"] == pytest.approx(1.)
        assert report["Q_X"] == pytest.approx(1., abs=1e-9)

    def test_inefficiency(self, capsys, duplicated_file):
        """Copies of one state are not reported as a witness."""
        code, report = run(capsys, "inefficiency", "--spec", duplicated_file)
        assert code == 0
        assert report["stepwise_inefficient"] is False
        assert report["witness"] is None
        assert report["orthogonal_quantum_states"] is True

    def test_discriminate(self, capsys, duplicated_file):
        """Copies cannot be told apart, different causal states can."""
        _, report = run(capsys, "discriminate", "--spec", duplicated_file, "--pair", "A1,A2")
        assert report["status"] == "ConditionIIFails"

        _, report = run(capsys, "discriminate", "--spec", duplicated_file, "--pair", "A2,B")
        assert report["status"] == "Distinguished"
        assert report["depth"] == 1
        assert report["trace_distance"] == 1.0

    def test_simulate(self, capsys, duplicated_file):
        """Runs may start in any state of the presentation."""
        code, report = run(
            capsys, "simulate", "--spec", duplicated_file, "--init", "A2",
            "--inputs", "0110", "--seed", "5",
        )
        assert code == 0
        assert report["initial"] == "A1+A2"
        assert report["outputs"] == ["0", "1", "0", "1"]

    def test_verify(self, capsys, duplicated_file):
        """Verification runs on the causal states."""
        code, report = run(capsys, "verify", "--spec", duplicated_file, "--horizon", "2")
        assert code == 0
        assert set(report["words"]) == {"A1+A2", "B"}
        assert report["max_trace_distance"] <= 1e-9


class TestSweep:
    """Test the structural complexities of the perturbed coin."""
    def test_rows(self):
        """Quantum memory stays below one bit and shrinks along the diagonal."""
        rows = run_sweep(
            resolution=5, p_range=(0.05, 0.45), q_range=(0.05, 0.45),
            structural_resolution=4,
        )
        assert len(rows) == 25
        assert [(r.p, r.q) for r in rows] == sorted((r.p, r.q) for r in rows)
        for row in rows:
            assert row.c_bar == pytest.approx(1.)
            assert row.q_bar <= row.c_bar + 1e-9
            assert 0. <= row.overlap <= 1.

        diagonal = [r.q_bar for r in rows if r.p == r.q]
        assert all(a > b for a, b in zip(diagonal[:-1], diagonal[1:]))

    def test_default_grid(self):
        """
        On the default 21 x 21 grid the classical memory is one bit, the
        quantum memory never exceeds it and decreases along the diagonal.
        """
        rows = run_sweep(structural_resolution=8)
        assert len(rows) == 21 * 21
        assert rows[0].p == pytest.approx(0.01)
        assert rows[-1].q == pytest.approx(0.49)

        for row in rows:
            assert row.c_bar == pytest.approx(1., abs=1e-9)
            assert row.q_bar <= row.c_bar + 1e-9

        center = [r for r in rows if np.isclose(r.p, 0.25) and np.isclose(r.q, 0.25)]
        assert len(center) == 1
        assert center[0].q_bar == pytest.approx(0.543564, abs=1e-6)

        diagonal = [r.q_bar for r in rows if np.isclose(r.p, r.q)]
        assert len(diagonal) == 21
        assert all(a > b for a, b in zip(diagonal[:-1], diagonal[1:]))

    def test_symmetric(self):
        """Swapping the flip probabilities does not change anything."""
        first = sweep_point(0.2, 0.35, 4)
        second = sweep_point(0.35, 0.2, 4)
        assert first.c_bar == pytest.approx(second.c_bar)
        assert first.q_bar == pytest.approx(second.q_bar)
        assert first.overlap == pytest.approx(second.overlap)

    def test_from_above(self):
        """The diagonal also decreases when approaching one half from above."""
        values = [sweep_point(p, p, 4).q_bar for p in (0.9, 0.7, 0.55)]
        assert all(a > b for a, b in zip(values[:-1], values[1:]))

    def test_nearly_fair(self):
        """Next to the fair coin the quantum memory is negligible."""
        row = sweep_point(0.5 - 1e-6, 0.5 - 1e-6, 4)
        assert row.c_bar == pytest.approx(1.)
        assert row.q_bar < 0.01

    def test_diagonal_values(self):
        """Closed form along the diagonal."""
        for p in (0.25, 0.49):
            overlap = 4. * p * (1. - p)
            expected = float(entropy([(1. + overlap) / 2., (1. - overlap) / 2.], base=2))
            assert sweep_point(p, p, 4).q_bar == pytest.approx(expected, abs=1e-6)
        assert sweep_point(0.49, 0.49, 4).q_bar < 0.003

    def test_fair(self):
        """The fair coin collapses to a machine without memory."""
        row = sweep_point(0.5, 0.5, 4)
        assert (row.c_bar, row.q_bar, row.overlap) == (0., 0., 1.)

    def test_workers(self):
        """A process pool gives the same table as a single worker."""
        kwargs = dict(resolution=2, p_range=(0.2, 0.4), q_range=(0.2, 0.4), structural_resolution=2)
        assert run_sweep(workers=2, **kwargs) == run_sweep(workers=1, **kwargs)

    def test_out_of_range(self):
        """The grid must stay inside the unit interval."""
        with pytest.raises(ParameterOutOfRange):
            run_sweep(resolution=2, p_range=(0.1, 1.))

    def test_table(self):
        """Rows become a table with the fixed column order."""
        table = sweep_table([sweep_point(0.25, 0.25, 4)])
        assert list(table.columns) == SWEEP_COLUMNS
        assert np.isclose(table.loc[0, "overlap"], 0.75)
