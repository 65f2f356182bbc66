"""Command-line front end.

Reports go to stdout as JSON; human-oriented notes go to stderr.

Exit codes: 0 success, 1 bound violated, 2 bad input (parse errors, bad
parameters), 3 channel fails CPTP validation, 4 ambiguous reference state,
5 precondition not met (channel not mixing or zero Dobrushin constant).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from qmix import channels
from qmix.channels import ChannelError, KrausChannel
from qmix.dobrushin import SearchBudget, kappa_analytic, kappa_scalar
from qmix.dynamics import MIXING, PreconditionError, classify, iterate_trajectory, verify_bound
from qmix.operators import basis_state, is_density, make_rng
from qmix.serialization import (
    FormatError,
    bound_report_to_json,
    channel_from_json,
    channel_to_json,
    classification_to_json,
    dumps,
    kappa_to_json,
    loads,
    operator_from_json,
    operator_to_json,
    trajectory_to_csv,
    validation_to_json,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_AMBIGUOUS = 4
EXIT_PRECONDITION = 5

ZOO_FAMILIES = (
    "identity", "omega", "qubit-depolarizing", "unistochastic", "mixed-unitary",
    "dephasing", "pauli-average", "convex-with-omega", "random",
)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(doc) -> None:
    sys.stdout.write(dumps(doc) + "\n")


def _read_text(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_PARSE) from exc


def _load_channel(path: str) -> KrausChannel:
    try:
        return channel_from_json(loads(_read_text(path)))
    except FormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def _load_operator(path: str) -> np.ndarray:
    try:
        return operator_from_json(loads(_read_text(path)))
    except FormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def _budget(args) -> SearchBudget:
    return SearchBudget(restarts=args.restarts, iterations=args.iterations, seed=args.seed)


def _kappa(ch: KrausChannel, args):
    if args.analytic is None:
        return kappa_scalar(ch, _budget(args))
    family = args.analytic.replace("-", "_")
    if ch.family is not None and ch.family != family:
        _note(f"warning: channel records family {ch.family!r} but --analytic {args.analytic!r} was requested")
    params = {"dim": ch.dim, **ch.params}
    if getattr(args, "alpha", None) is not None:
        params["alpha"] = args.alpha
    try:
        return kappa_analytic(family, **params)
    except KeyError as exc:
        raise CliError(f"--analytic {args.analytic}: channel file lacks parameter {exc}", EXIT_PARSE) from exc
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc


def _require_valid(ch: KrausChannel):
    rep = channels.validate(ch)
    if not rep.passed:
        _emit({"validation": validation_to_json(rep)})
        raise CliError(f"channel is not CPTP (tp residual {rep.tp_residual!r}, "
                       f"Choi min eigenvalue {rep.choi_min_eigenvalue!r})", EXIT_INVALID)
    return rep


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_zoo(args) -> int:
    fam = args.family
    try:
        if fam == "identity":
            ch = channels.identity(args.dim)
        elif fam == "omega":
            ch = channels.omega(args.dim)
        elif fam == "qubit-depolarizing":
            if args.alpha is None:
                raise CliError("qubit-depolarizing needs --alpha", EXIT_PARSE)
            ch = channels.qubit_depolarizing(args.alpha)
        elif fam == "unistochastic":
            if args.phases is not None:
                phases = [float(p) for p in args.phases.split(",")]
                u = np.diag(np.exp(1j * np.array(phases)))
            else:
                u = channels.random_unitary(args.dim, args.seed)
            ch = channels.unistochastic(u)
        elif fam == "mixed-unitary":
            us = [channels.random_unitary(args.dim, make_rng(args.seed, i)) for i in range(args.count)]
            p = make_rng(args.seed, args.count).dirichlet(np.ones(args.count))
            p = p / p.sum()
            ch = channels.mixed_unitary(us, p)
        elif fam == "dephasing":
            ch = channels.dephasing()
        elif fam == "pauli-average":
            ch = channels.pauli_average()
        elif fam == "convex-with-omega":
            if args.base is None or args.alpha is None:
                raise CliError("convex-with-omega needs --base and --alpha", EXIT_PARSE)
            base = _load_channel(args.base)
            _require_valid(base)
            ch = channels.convex_with_omega(base, args.alpha)
        elif fam == "random":
            ch = channels.random_channel(args.dim, args.kraus or args.dim * args.dim, args.seed)
        else:  # argparse restricts choices
            raise CliError(f"unknown family {fam!r}", EXIT_PARSE)
    except (ChannelError, ValueError) as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc
    _emit(channel_to_json(ch))
    return EXIT_OK


def cmd_analyze(args) -> int:
    ch = _load_channel(args.channel)
    rep = channels.validate(ch)
    doc = {"validation": validation_to_json(rep), "kappa": None, "classification": None, "bound_check": None}
    if not rep.passed:
        doc["bound_check"] = {"skipped": "channel failed CPTP validation"}
        _emit(doc)
        _note("channel is not CPTP")
        return EXIT_INVALID
    kb = _kappa(ch, args)
    cls = classify(ch)
    doc["kappa"] = kappa_to_json(kb)
    doc["classification"] = classification_to_json(cls)
    if cls.verdict != MIXING:
        doc["bound_check"] = {"skipped": f"verdict is {cls.verdict}, bound applies to mixing channels"}
    elif kb.trace_kappa <= 0.0:
        doc["bound_check"] = {"skipped": "trace of the Dobrushin bound is 0, rate bound is vacuous"}
    else:
        br = verify_bound(ch, kb, trials=args.trials, n_max=args.steps, seed=args.seed, classification=cls)
        doc["bound_check"] = bound_report_to_json(br)
    for flag in kb.flags:
        _note(f"note: {flag}")
    _emit(doc)
    return EXIT_OK


def _initial_state(arg: str, dim: int) -> np.ndarray:
    try:
        index = int(arg)
    except ValueError:
        rho = _load_operator(arg)
        if rho.shape[0] != dim:
            raise CliError(f"initial state has dim {rho.shape[0]}, channel has dim {dim}", EXIT_PARSE)
        if not is_density(rho):
            raise CliError("initial state is not a density matrix", EXIT_PARSE)
        return rho
    try:
        return basis_state(dim, index)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc


def cmd_iterate(args) -> int:
    ch = _load_channel(args.channel)
    _require_valid(ch)
    if args.steps < 0:
        raise CliError("--steps must be nonnegative", EXIT_PARSE)
    rho0 = _initial_state(args.initial, ch.dim)
    if args.reference is not None:
        reference = _load_operator(args.reference)
        if reference.shape[0] != ch.dim:
            raise CliError("reference dim does not match channel", EXIT_PARSE)
    else:
        cls = classify(ch)
        if cls.profile.unit_multiplicity != 1:
            _emit({"fixed_space_basis": [operator_to_json(fp) for fp in cls.fixed_points]})
            raise CliError(f"fixed space has dimension {cls.profile.unit_multiplicity}; "
                           "pass --reference to choose a reference state", EXIT_AMBIGUOUS)
        reference = cls.fixed_points[0]
    traj = iterate_trajectory(ch, rho0, args.steps, reference)
    csv_text = trajectory_to_csv(traj)
    if args.out == "-":
        sys.stderr.write(csv_text)
    else:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(csv_text)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_PARSE) from exc
    _emit({"reference": operator_to_json(reference)})
    return EXIT_OK


def cmd_verify_bound(args) -> int:
    ch = _load_channel(args.channel)
    _require_valid(ch)
    kb = _kappa(ch, args)
    cls = classify(ch)
    if cls.verdict != MIXING or kb.trace_kappa <= 0.0:
        _emit({"classification": classification_to_json(cls), "kappa": kappa_to_json(kb)})
        reason = f"verdict {cls.verdict}" if cls.verdict != MIXING else "zero Dobrushin bound"
        raise CliError(f"bound verification needs a mixing channel with positive bound ({reason})",
                       EXIT_PRECONDITION)
    try:
        br = verify_bound(ch, kb, trials=args.trials, n_max=args.steps, seed=args.seed, classification=cls)
    except PreconditionError as exc:  # pragma: no cover - guarded above
        raise CliError(str(exc), EXIT_PRECONDITION) from exc
    _emit(bound_report_to_json(br))
    if not br.passed:
        _note(f"{len(br.violations)} violations of the exponential bound")
        return EXIT_VIOLATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_kappa_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--analytic", metavar="FAMILY", default=None,
                   help="use the closed-form bound for FAMILY instead of optimizing")
    p.add_argument("--alpha", type=float, default=None, help="alpha for --analytic, if the file lacks it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmix", description="Ergodicity and mixing analysis of quantum channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    z = sub.add_parser("zoo", help="emit a channel from a known family as JSON")
    z.add_argument("family", choices=ZOO_FAMILIES)
    z.add_argument("--dim", type=int, default=2)
    z.add_argument("--alpha", type=float)
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--phases", help="comma-separated phases of a diagonal unitary (unistochastic)")
    z.add_argument("--count", type=int, default=3, help="number of unitaries (mixed-unitary)")
    z.add_argument("--kraus", type=int, help="number of Kraus operators (random)")
    z.add_argument("--base", help="base channel file (convex-with-omega); '-' for stdin")
    z.set_defaults(func=cmd_zoo)

    a = sub.add_parser("analyze", help="validation, Dobrushin bound, classification and bound check")
    a.add_argument("channel")
    _add_kappa_flags(a)
    a.add_argument("--trials", type=int, default=100)
    a.add_argument("--steps", type=int, default=50)
    a.set_defaults(func=cmd_analyze)

    it = sub.add_parser("iterate", help="write the TV-distance trajectory of M^n(rho) as CSV")
    it.add_argument("channel")
    it.add_argument("--initial", required=True, help="0-based basis index or density-matrix JSON file")
    it.add_argument("--steps", type=int, required=True)
    it.add_argument("--out", required=True, help="CSV path ('-' writes to stderr)")
    it.add_argument("--reference", help="reference state JSON; defaults to the unique fixed point")
    it.set_defaults(func=cmd_iterate)

    v = sub.add_parser("verify-bound", help="check the exponential convergence bound; exit 0 iff it holds")
    v.add_argument("channel")
    _add_kappa_flags(v)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--steps", type=int, default=50)
    v.set_defaults(func=cmd_verify_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _note(f"error: {exc}")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
