"""Command-line front end.

Exit status: 0 when no criterion is violated, 3 when a violation is found,
1 on invalid input, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import criteria as crit
from .errors import EprcvError, TruncationError
from .experiment import estimate_criteria, experiment_pair
from .inference import P_PAIR, X_PAIR, optimal_gain
from .lhv import check_uncertainty_proviso, lhv_outcomes, lhv_predicts, smeared, wigner_sample
from .quadrature import DEFAULT_POINTS, DEFAULT_SIGMAS, joint_distribution, total_variation
from .specfile import load_state
from .states import (
    FockDensityMatrix,
    GaussianState,
    SeparableMixture,
    describe_state,
    gaussian_ppt_min_eigenvalue,
    make_gaussian_tmsv,
    mixture_to_density,
    moments,
    ppt_min_eigenvalue,
    symplectic_eigenvalues,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_VIOLATION = 3


def parse_range(text):
    """``a:b:step`` -> inclusive sorted values; raises ValueError on an empty range."""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"range {text!r} must look like a:b:step") from None
    if step <= 0 or a > b:
        raise ValueError(f"range {text!r} is empty")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return [round(a + k * step, 12) for k in range(n)]


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _fmt_vec(v):
    return "[" + ", ".join(f"{x: .6f}" for x in np.ravel(v)) + "]"


# --------------------------------------------------------------------------
# commands


def cmd_describe(args):
    state = load_state(args.state)
    mean, cov = moments(state)
    lines = [f"state: {args.state}", f"representation: {describe_state(state)}", f"mean (x_A, p_A, x_B, p_B): {_fmt_vec(mean)}", "cov:"]
    lines += ["  " + _fmt_vec(row) for row in cov]
    lines.append(f"symplectic eigenvalues: {_fmt_vec(symplectic_eigenvalues(cov))}")
    if isinstance(state, FockDensityMatrix):
        ev = state.spectrum()[0]
        lines.append(f"physical: trace={np.trace(state.entries).real:.12g} min eigenvalue={ev.min():.3e}")
        lines.append(f"PPT min eigenvalue: {ppt_min_eigenvalue(state):.6e}")
    elif isinstance(state, GaussianState):
        lines.append(f"physical: min eig(cov + i Omega)={np.linalg.eigvalsh(cov + 1j * np.kron(np.eye(2), [[0, 1], [-1, 0]])).min():.3e}")
        lines.append(f"PPT min eigenvalue (partially transposed cov + i Omega): {gaussian_ppt_min_eigenvalue(state):.6e}")
    elif isinstance(state, SeparableMixture):
        lines.append(f"physical: {len(state.terms)} terms, weights sum {state.weights.sum():.15g}")
        try:
            rho = mixture_to_density(state, args.cutoff, args.cutoff)
            lines.append(f"PPT min eigenvalue (cutoff {args.cutoff}): {ppt_min_eigenvalue(rho):.6e}")
        except TruncationError as exc:
            lines.append(f"PPT check skipped: {exc}")
    lines.append("convention: x = a + a^dag, p = -i(a - a^dag), vacuum variance 1, C = D = 1")
    with _output(args.out) as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def _emit_reports(reports, args, with_se=False, extra=""):
    with _output(args.out) as fh:
        if args.format == "csv":
            crit.reports_to_csv(reports, fh, with_se=with_se)
        else:
            fh.write(crit.format_table(reports, with_se=with_se) + "\n")
            fh.write(crit.summarize(reports) + "\n")
            if extra:
                fh.write(extra + "\n")


def _bounds_gains(args):
    return parse_range(args.gains) if args.gains else crit.DEFAULT_GAINS


def _ppt_line(state, cutoff):
    """Independent PPT cross-check for the table footer."""
    try:
        if isinstance(state, GaussianState):
            lam = gaussian_ppt_min_eigenvalue(state)
        elif isinstance(state, FockDensityMatrix):
            lam = ppt_min_eigenvalue(state)
        else:
            lam = ppt_min_eigenvalue(mixture_to_density(state, cutoff, cutoff))
    except TruncationError as exc:
        return f"PPT check skipped: {exc}"
    verdict = "entangled (NPT)" if lam < -1e-9 else "PPT (consistent with separability)"
    return f"PPT min eigenvalue {lam:.3e}: {verdict}"


def cmd_criteria(args):
    state = load_state(args.state)
    reports = crit.evaluate_all(state, _bounds_gains(args), n_points=args.grid_points, n_sigmas=args.grid_sigmas)
    _emit_reports(reports, args, extra=_ppt_line(state, args.cutoff))
    return EXIT_VIOLATION if crit.any_violation(reports) else EXIT_OK


SWEEP_FIELDS = ["parameter", "value"] + crit.CSV_FIELDS


def _sweep_rows(args):
    if args.r_range:
        for r in parse_range(args.r_range):
            state = make_gaussian_tmsv(r)
            reports = [
                crit.reid_epr_criterion(state, "conditional", n_points=args.grid_points, n_sigmas=args.grid_sigmas),
                crit.reid_epr_criterion(state, "linear"),
                crit.linear_product_criterion(state, 1.0, -1.0),
                crit.any_g_product_criterion(state, 1.0),
                crit.two_mode_squeezing_criterion(state),
                crit.duan_sum_criterion(state),
            ]
            for rep in reports:
                yield "r", r, rep
    else:
        state = load_state(args.state)
        h_opt = optimal_gain(state, P_PAIR)
        for g in parse_range(args.g_range):
            for rep in (
                crit.reid_epr_criterion(state, "linear", gains=(g, h_opt)),
                crit.linear_product_criterion(state, g, h_opt),
                crit.any_g_product_criterion(state, g),
            ):
                yield "g", g, rep


def cmd_sweep(args):
    rows = list(_sweep_rows(args))
    with _output(args.out) as fh:
        if args.format == "csv":
            writer = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS, lineterminator="\n")
            writer.writeheader()
            for name, value, rep in rows:
                writer.writerow({"parameter": name, "value": crit.fmt(value), **rep.row()})
        else:
            fh.write(f"{'param':<6}{'value':>10}  {'criterion':<20}{'method':<13}{'lhs':>12}{'bound':>12}{'margin':>12}\n")
            for name, value, rep in rows:
                fh.write(
                    f"{name:<6}{value:>10.4f}  {rep.name:<20}{rep.method:<13}{rep.lhs:>12.6f}{rep.bound:>12.6f}{rep.margin:>12.6f}\n"
                )
    return EXIT_VIOLATION if any(rep.violated for _, _, rep in rows) else EXIT_OK


def cmd_experiment(args):
    state = load_state(args.state)
    x_rec, p_rec = experiment_pair(state, args.shots, args.seed, n_points=args.grid_points, n_sigmas=args.grid_sigmas)
    if args.records_dir:
        out = Path(args.records_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, rec in (("x_record.csv", x_rec), ("p_record.csv", p_rec)):
            with open(out / name, "w", newline="") as fh:
                rec.to_csv(fh)
    reports = estimate_criteria(x_rec, p_rec, seed=args.seed)
    _emit_reports(reports, args, with_se=True)
    return EXIT_VIOLATION if crit.any_violation(reports) else EXIT_OK


def cmd_lhv(args):
    state = load_state(args.state)
    ens = wigner_sample(state, args.shots, args.seed)
    if args.smear is not None:
        ens = smeared(ens, args.smear, args.smear)
    if args.ensemble_out:
        with open(args.ensemble_out, "w", newline="") as fh:
            ens.to_csv(fh)
    proviso = check_uncertainty_proviso(ens, state=state)
    x_rec = lhv_outcomes(ens, X_PAIR, seed=args.seed + 1)
    p_rec = lhv_outcomes(ens, P_PAIR, seed=args.seed + 2)
    reports = estimate_criteria(x_rec, p_rec, seed=args.seed)
    quantum = joint_distribution(state, 0.0, 0.0, n_points=args.grid_points, n_sigmas=args.grid_sigmas)
    predicted = lhv_predicts(ens, 0.0, 0.0, quantum.grid_a, quantum.grid_b)
    factor = 8 if args.grid_points % 8 == 0 else 1
    tv = total_variation(predicted.coarsen(factor), quantum.coarsen(factor))
    extra = io.StringIO()
    extra.write(f"hidden-variable model: {ens.source}, n={len(ens)}, response width={ens.response_width}\n")
    extra.write(
        f"uncertainty proviso: per-lambda sigma(x)sigma(p)={proviso.products[0]:.6g}, "
        f"violated for {100 * proviso.fraction_violating:.1f}% of hidden-variable states\n"
    )
    extra.write(f"{proviso.note}\n")
    extra.write(
        f"total variation vs quantum joint (x, x_B) on {quantum.grid_a.n_points // factor}^2 bins: {tv:.4f}"
    )
    _emit_reports(reports, args, with_se=True, extra=extra.getvalue() if args.format != "csv" else "")
    return EXIT_VIOLATION if crit.any_violation(reports) else EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _grid_points(text):
    n = int(text)
    if n < 16:
        raise argparse.ArgumentTypeError("--grid-points must be >= 16")
    return n


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("value must be positive")
    return v


def _shots(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("--shots must be >= 1")
    return n


def _existing_path(text):
    if not Path(text).is_file():
        raise argparse.ArgumentTypeError(f"state file {text!r} does not exist")
    return text


def build_parser():
    parser = argparse.ArgumentParser(prog="eprcv", description="EPR and separability criteria for two-mode CV states")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-points", type=_grid_points, default=DEFAULT_POINTS)
    common.add_argument("--grid-sigmas", type=_positive_float, default=DEFAULT_SIGMAS)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("table", "csv"), default="table")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", parents=[common], help="moments, physicality and PPT diagnostics")
    p.add_argument("--state", type=_existing_path, required=True)
    p.add_argument("--cutoff", type=int, default=20, help="Fock cutoff for the mixture PPT check")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("criteria", parents=[common], help="evaluate every criterion")
    p.add_argument("--state", type=_existing_path, required=True)
    p.add_argument("--gains", default=None, help="gain sweep a:b:step")
    p.add_argument("--cutoff", type=int, default=20, help="Fock cutoff for the mixture PPT check")
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("sweep", parents=[common], help="criteria versus squeezing r or gain g")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--r-range", default=None, help="TMSV squeezing a:b:step")
    group.add_argument("--g-range", default=None, help="gain a:b:step (needs --state)")
    p.add_argument("--state", type=_existing_path, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("experiment", parents=[common], help="virtual homodyne experiment")
    p.add_argument("--state", type=_existing_path, required=True)
    p.add_argument("--shots", type=_shots, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--records-dir", default=None, help="write x/p records as CSV here")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("lhv", parents=[common], help="Wigner-function hidden-variable model")
    p.add_argument("--state", type=_existing_path, required=True)
    p.add_argument("--shots", type=_shots, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--smear", type=_positive_float, default=None, help="per-lambda response width")
    p.add_argument("--ensemble-out", default=None)
    p.set_defaults(func=cmd_lhv)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            if args.g_range and not args.state:
                parser.error("--g-range needs --state")
            for text in (args.r_range, args.g_range):
                if text:
                    parse_range(text)
        if getattr(args, "gains", None):
            parse_range(args.gains)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        return args.func(args)
    except (EprcvError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
