"""Command-line entry point ``eot``.

Exit codes: 0 success, 1 input error, 2 not converged (``solve``) or boundary
marginal (``check-pauli``), 3 Pauli violation, 4 failed verification.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import sys
from pathlib import Path

import click

from .errors import EOTError, InvalidInput, NumericalFailure, PauliViolation
from .files import dumps, load_problem, read_json
from .runner import MissingState, solve_problem, solver_config, trace_rows, verify_report
from .symmetric import pauli_check

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_PAULI, EXIT_VERIFY = 0, 1, 2, 3, 4
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("eot")


def _setup_logging():
    name = os.environ.get("EOT_LOG", "error").lower()
    level = LOG_LEVELS.get(name)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(level if level is not None else logging.ERROR)
    if level is None:
        log.error("EOT_LOG=%r not understood, expected one of %s", name, sorted(LOG_LEVELS))


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def cli():
    """Entropic optimal transport solver."""
    _setup_logging()


@cli.command()
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--tol", type=float, default=None, help="Marginal residual tolerance.")
@click.option("--max-iter", type=int, default=None, help="Maximum number of sweeps.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
              help="Write per-sweep dual value and residuals as CSV.")
@click.option("--no-state", is_flag=True, help="Omit the plan/state and potentials from the report.")
@click.option("--shrink-boundary", is_flag=True,
              help="Pull a boundary fermionic marginal inside by 1e-6 toward identity/d before solving.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Report path (default <input>.report.json).")
def solve(path, tol, max_iter, trace_path, no_state, shrink_boundary, output):
    """Solve the problem in PATH and write a JSON report."""
    try:
        pf = load_problem(path)
        cfg = solver_config(pf, tol=tol, max_iter=max_iter, shrink_boundary=shrink_boundary)
        doc, rep = solve_problem(pf, cfg, include_state=not no_state)
    except OSError as exc:
        _fail(str(exc), EXIT_INPUT)
    except PauliViolation as exc:
        click.echo(json.dumps(exc.status.to_dict()), err=True)
        sys.exit(EXIT_PAULI)
    except InvalidInput as exc:
        _fail(f"{path}: {exc}", EXIT_INPUT)
    except NumericalFailure as exc:
        _fail(f"numerical failure: {exc}", EXIT_NOT_CONVERGED)
    out = Path(output) if output else Path(f"{path}.report.json")
    out.write_text(dumps(doc))
    if trace_path:
        with open(trace_path, "w", newline="") as fh:
            csv.writer(fh).writerows(trace_rows(rep))
    click.echo(f"{'converged' if rep.converged else 'NOT converged'} after {rep.iterations} sweeps; "
               f"gap {rep.gap:.3e}; report {out}")
    sys.exit(EXIT_OK if rep.converged else EXIT_NOT_CONVERGED)


@cli.command("check-pauli")
@click.argument("path", type=click.Path(dir_okay=False))
def check_pauli(path):
    """Classify the one-body marginal in PATH against 0 < gamma < 1/N."""
    try:
        pf = load_problem(path, require_operator=False)
        if len(pf.marginals) != 1 or pf.kind in ("classical", "quantum"):
            raise InvalidInput("kind: expected a bosonic or fermionic problem with one marginal")
        status = pauli_check(pf.marginals[0], pf.N)
    except OSError as exc:
        _fail(str(exc), EXIT_INPUT)
    except EOTError as exc:
        _fail(f"{path}: {exc}", EXIT_INPUT)
    click.echo(json.dumps(status.to_dict()))
    sys.exit({"strict": EXIT_OK, "boundary": 2, "violates": EXIT_PAULI}[status.classification])


@cli.command()
@click.argument("report", type=click.Path(dir_okay=False))
def verify(report):
    """Recompute values, residuals and the exponential reconstruction of a report."""
    try:
        checks = verify_report(read_json(report))
    except MissingState as exc:
        _fail(str(exc), EXIT_INPUT)
    except (OSError, KeyError, TypeError) as exc:
        _fail(f"{report}: malformed report ({exc})", EXIT_INPUT)
    except EOTError as exc:
        _fail(f"{report}: {exc}", EXIT_INPUT)
    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, detail in checks:
        click.echo(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    if failed:
        click.echo(f"verification failed: {', '.join(failed)}", err=True)
        sys.exit(EXIT_VERIFY)
    sys.exit(EXIT_OK)


def main(argv=None):
    """Run the CLI; usage errors map to exit code 1 rather than click's default 2."""
    try:
        cli.main(args=argv, prog_name="eot", standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_INPUT)
    except click.Abort:
        sys.exit(EXIT_INPUT)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
