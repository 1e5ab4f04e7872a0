"""
## Command line interface

All subcommands print a JSON report to standard output, except `sweep`,
which writes the table of the perturbed-coin parameter sweep as CSV. Log
messages and progress bars go to standard error.

Exit codes: `0` on success, `1` if the model or request is invalid (the
report then names the error), `2` on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import track

from ._config import GRID_RESOLUTION, default_seed
from .base import ParameterOutOfRange, TransducerError, error_report
from .circuit import sample_output_words, simulate_quantum, verify
from .classical import (
    CONDITION_II_FAILS, StrategyResult, classical_complexity,
    discrimination_strategy, future_distribution, is_stepwise_inefficient,
    occupancy, trace_distance,
)
from .minimize import Partition, minimize, refine_partition
from .process import InputDistribution, TransducerSpec, actively_perturbed_coin
from .quantum import (
    QuantumModel, condition_I_orthogonal, quantum_overlap, structural_complexity,
)

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["p", "q", "c_bar", "q_bar", "overlap"]


def _round(value, digits: int = 12):
    """Round all floats in a nested report to `digits` significant digits."""
    if isinstance(value, (float, np.floating)):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {str(k): _round(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v, digits) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _emit(report: dict):
    print(json.dumps(_round(report), indent=2))


def _parse_range(text: str) -> Tuple[float, float]:
    try:
        low, high = (float(v) for v in text.split(","))
    except ValueError as val_err:
        raise argparse.ArgumentTypeError(
            f"Expected a range 'low,high', got '{text}'"
        ) from val_err
    return low, high


def _input_distribution(spec: TransducerSpec, text: Optional[str]) -> InputDistribution:
    if text is None:
        return InputDistribution.uniform(spec.inputs)
    return InputDistribution.parse(text, spec.inputs)


@dataclass
class SweepRow:
    """Structural complexities of the perturbed coin at one grid point."""
    p: float
    q: float
    c_bar: float
    q_bar: float
    overlap: float


def sweep_point(p: float, q: float, structural_resolution: int = 16) -> SweepRow:
    """
    Build the perturbed coin at `(p, q)`, minimize it and compute its
    classical and quantum structural complexities.
    """
    spec, _ = minimize(actively_perturbed_coin(p, q))
    if len(spec.states) == 1:
        return SweepRow(p, q, 0., 0., 1.)

    c_bar = structural_complexity(spec, "classical", structural_resolution).value
    q_bar = structural_complexity(spec, "quantum", structural_resolution).value
    overlap = quantum_overlap(spec, spec.states[0], spec.states[1])
    return SweepRow(p, q, c_bar, q_bar, overlap)


def _sweep_point(args) -> SweepRow:
    return sweep_point(*args)


def run_sweep(
    resolution: int = 21,
    p_range: Tuple[float, float] = (0.01, 0.49),
    q_range: Tuple[float, float] = (0.01, 0.49),
    structural_resolution: int = 16,
    workers: int = 1,
    verbose: bool = False,
) -> List[SweepRow]:
    """
    Evaluate `sweep_point` on a `resolution x resolution` grid spanning
    `p_range` and `q_range`. With more than one worker the grid points are
    spread over a process pool. Rows are sorted by `(p, q)`.
    """
    for name, (low, high) in (("p", p_range), ("q", q_range)):
        if not (0. < low < 1. and 0. < high < 1.):
            raise ParameterOutOfRange(
                f"The {name} range [{low}, {high}] must lie within (0, 1)"
            )
    if resolution < 1:
        raise ParameterOutOfRange(f"Resolution must be positive, not {resolution}")

    grid = [
        (float(p), float(q), structural_resolution)
        for p in np.linspace(*p_range, resolution)
        for q in np.linspace(*q_range, resolution)
    ]
    logger.info("Sweeping %d grid points with %d worker(s)", len(grid), workers)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(track(
                executor.map(_sweep_point, grid),
                total=len(grid),
                description="Sweeping...",
                disable=not verbose,
                console=Console(stderr=True),
            ))
    else:
        rows = [
            _sweep_point(args) for args in track(
                grid,
                description="Sweeping...",
                disable=not verbose,
                console=Console(stderr=True),
            )
        ]
    return sorted(rows, key=lambda row: (row.p, row.q))


def sweep_table(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Collect sweep rows in a table with the fixed CSV columns."""
    return pd.DataFrame([asdict(row) for row in rows], columns=SWEEP_COLUMNS)


def _load_minimal(path: str) -> Tuple[TransducerSpec, TransducerSpec, Partition]:
    """
    Read the presentation at `path` and return it together with its
    ε-transducer and the partition between the two.
    """
    spec = TransducerSpec.from_json(path)
    minimal, part = minimize(spec)
    if not part.is_identity:
        logger.warning(
            "Merged the %d states of %s into %d causal states %s",
            len(spec.states), path, len(part), part.labels(),
        )
    return spec, minimal, part


def _causal_state(spec: TransducerSpec, part: Partition, state: str) -> str:
    spec.states.index(state)
    return part.label_of(state)


def _validate(args) -> dict:
    spec = TransducerSpec.from_json(args.spec)
    n_states, n_inputs, n_outputs = spec.shape
    return {
        "valid": True,
        "states": n_states,
        "inputs": n_inputs,
        "outputs": n_outputs,
        "minimal": refine_partition(spec).is_identity,
    }


def _minimize(args) -> dict:
    minimal, part = minimize(TransducerSpec.from_json(args.spec))
    return {"spec": minimal.to_dict(), "partition": part.to_dict()}


def _complexity(args) -> dict:
    _, spec, _ = _load_minimal(args.spec)
    dist = _input_distribution(spec, args.iid)
    return {
        "C_X": classical_complexity(spec, dist),
        "occupancy": occupancy(spec, dist).to_dict(),
    }


def _qcomplexity(args) -> dict:
    _, spec, _ = _load_minimal(args.spec)
    return QuantumModel.from_spec(spec).report(_input_distribution(spec, args.iid))


def _structural(args) -> dict:
    _, spec, _ = _load_minimal(args.spec)
    return structural_complexity(
        spec, args.which, args.resolution, verbose=args.verbose
    ).to_dict()


def _inefficiency(args) -> dict:
    _, spec, _ = _load_minimal(args.spec)
    witness = is_stepwise_inefficient(spec)
    return {
        "stepwise_inefficient": witness is not None,
        "witness": list(witness) if witness is not None else None,
        "orthogonal_quantum_states": condition_I_orthogonal(spec),
    }


def _discriminate(args) -> dict:
    raw, spec, part = _load_minimal(args.spec)
    pair = [s.strip() for s in args.pair.split(",")]
    if len(pair) != 2 or pair[0] == pair[1]:
        raise argparse.ArgumentTypeError(f"Expected two different states, got '{args.pair}'")
    first, second = (_causal_state(raw, part, s) for s in pair)
    if first == second:
        # both name the same causal state, so no input separates them
        return StrategyResult(CONDITION_II_FAILS, pair=(pair[0], pair[1])).to_dict()

    result = discrimination_strategy(spec, first, second, max_depth=args.max_depth)
    report = result.to_dict()
    if result.distinguished:
        report["trace_distance"] = trace_distance(
            future_distribution(spec, first, result, horizon=result.depth),
            future_distribution(spec, second, result, horizon=result.depth),
        )
    return report


def _simulate(args) -> dict:
    raw, spec, part = _load_minimal(args.spec)
    inputs = spec.inputs.split_word(args.inputs)
    initial = _causal_state(raw, part, args.init)
    if args.samples <= 1:
        return simulate_quantum(
            spec, initial, inputs, seed=args.seed, explicit=args.explicit
        ).to_dict()

    counts = sample_output_words(spec, initial, inputs, args.samples, seed=args.seed)
    return {
        "seed": args.seed,
        "initial": initial,
        "inputs": list(inputs),
        "samples": args.samples,
        "frequencies": {
            " ".join(word): count / args.samples
            for word, count in sorted(counts.items())
        },
    }


def _verify(args) -> dict:
    _, spec, _ = _load_minimal(args.spec)
    return verify(spec, args.horizon, explicit=args.explicit).to_dict()


def _sweep(args):
    rows = run_sweep(
        resolution=args.resolution,
        p_range=args.p_range,
        q_range=args.q_range,
        structural_resolution=args.structural_resolution,
        workers=args.workers,
        verbose=args.verbose,
    )
    sweep_table(rows).to_csv(sys.stdout, index=False, float_format="%.12g")


def build_parser() -> argparse.ArgumentParser:
    """Assemble the argument parser with all subcommands."""
    from . import __version__

    parser = argparse.ArgumentParser(
        prog="iotrans",
        description="Classical and quantum memory of input-output processes.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true",
        help="log progress information and show progress bars on stderr",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command")

    def with_spec(name, func, help_text):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--spec", required=True, help="path to the transducer JSON file")
        sub.set_defaults(func=func)
        return sub

    validate = subparsers.add_parser("validate", help="check a spec for validity")
    validate.add_argument("spec", help="path to the transducer JSON file")
    validate.set_defaults(func=_validate)

    with_spec("minimize", _minimize, "merge equivalent states")

    for name, func, help_text in (
        ("complexity", _complexity, "classical statistical complexity C_X"),
        ("qcomplexity", _qcomplexity, "quantum statistical complexity Q_X"),
    ):
        sub = with_spec(name, func, help_text)
        sub.add_argument(
            "--iid", default=None,
            help="IID input distribution as 'x=prob,...' (default: uniform)",
        )

    structural = with_spec("structural", _structural, "structural complexity")
    structural.add_argument("--which", choices=["classical", "quantum"], default="quantum")
    structural.add_argument("--resolution", type=int, default=GRID_RESOLUTION)

    with_spec("inefficiency", _inefficiency, "step-wise inefficiency witness")

    discriminate = with_spec("discriminate", _discriminate, "tell two states apart")
    discriminate.add_argument("--pair", required=True, help="two states as 'a,b'")
    discriminate.add_argument("--max-depth", type=int, default=8)

    simulate = with_spec("simulate", _simulate, "sample the quantum transducer")
    simulate.add_argument("--init", required=True, help="initial causal state")
    simulate.add_argument("--inputs", required=True, help="input word")
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--samples", type=int, default=1)
    simulate.add_argument("--explicit", action="store_true")

    verify_cmd = with_spec("verify", _verify, "compare quantum and classical statistics")
    verify_cmd.add_argument("--horizon", type=int, default=4)
    verify_cmd.add_argument("--explicit", action="store_true")

    sweep = subparsers.add_parser("sweep", help="perturbed coin parameter sweep (CSV)")
    sweep.add_argument("--resolution", type=int, default=21)
    sweep.add_argument("--p-range", type=_parse_range, default=(0.01, 0.49))
    sweep.add_argument("--q-range", type=_parse_range, default=(0.01, 0.49))
    sweep.add_argument("--structural-resolution", type=int, default=16)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.set_defaults(func=_sweep)

    return parser


def _setup_logging(verbose: bool):
    root = logging.getLogger("iotrans")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    root.setLevel(logging.INFO if verbose else logging.WARNING)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line with the arguments `argv` and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_err:
        return exit_err.code if isinstance(exit_err.code, int) else 2

    if args.command is None:
        parser.print_help(sys.stderr)
        return 2

    _setup_logging(args.verbose)
    if getattr(args, "seed", "unset") is None:
        args.seed = default_seed()

    try:
        report = args.func(args)
    except (TransducerError, OSError) as err:
        _emit(error_report(err))
        return 1
    except argparse.ArgumentTypeError as arg_err:
        parser.print_usage(sys.stderr)
        print(f"iotrans: error: {arg_err}", file=sys.stderr)
        return 2

    if report is not None:
        _emit(report)
    return 0


def main():
    sys.exit(dispatch())
