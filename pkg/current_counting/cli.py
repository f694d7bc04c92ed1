"""
Command-line interface for current counting.

Commands:
    analyze    spectral report of a model (JSON)
    prob       P(Q_t = Q) by the formula methods or the oracle (CSV + JSON sidecar)
    cumulants  J, D, nu_*, Kemeny constant and lambda_st derivatives
    examples   write one of the built-in example models
    compare    formula method against the brute-force oracles
    oracle     inversion or Monte Carlo reference distribution

Exit codes: 1 bad input or configuration, 2 assumption failure, 3 missing
base point, 4 compare tolerance exceeded.
"""

import sys
from pathlib import Path
from typing import Any, Dict, NoReturn, Optional, Tuple

import click
from rich.console import Console
from rich.table import Table

from .catalog import EXAMPLES, example, three_state_sector
from .core.config import SettingsManager
from .core.engine import CountingAnalyzer
from .core.exceptions import (
    AssumptionError,
    BasePointError,
    ConfigurationError,
    CountingError,
    ModelError,
)
from .core.model import MarkovCountingModel
from .core.results import CurrentDistribution
from .spectral.surface import SurfacePoint, sample_unit_circle_curves
from .utils.output import dumps, write_csv, write_json

EXIT_INPUT = 1
EXIT_ASSUMPTION = 2
EXIT_BASE_POINT = 3
EXIT_COMPARE = 4

METHODS = ('auto', 'reversible', 'general', 'oracle', 'gillespie')

err_console = Console(stderr=True)


class CliState:
    """Settings overrides collected by the group, turned into an analyzer on demand."""

    def __init__(self, config: Optional[str], overrides: Dict[str, Any]):
        self.config = config
        self.overrides = overrides
        self._analyzer: Optional[CountingAnalyzer] = None

    @property
    def analyzer(self) -> CountingAnalyzer:
        if self._analyzer is None:
            manager = SettingsManager(self.config)
            if self.overrides:
                manager.update(self.overrides)
            self._analyzer = CountingAnalyzer(self.config, settings=manager.settings)
        return self._analyzer


def _fail(message: str, code: int) -> NoReturn:
    err_console.print(f"[red]Error:[/red] {message}")
    sys.exit(code)


def _load_model(path: str) -> MarkovCountingModel:
    try:
        return MarkovCountingModel.from_json(path)
    except ModelError as e:
        _fail(str(e), EXIT_INPUT)
        raise


def _analyzer(ctx: click.Context) -> CountingAnalyzer:
    try:
        return ctx.obj.analyzer
    except ConfigurationError as e:
        _fail(str(e), EXIT_INPUT)
        raise


def _q_range(qmin: Optional[int], qmax: Optional[int]) -> Optional[Tuple[int, int]]:
    if qmin is None and qmax is None:
        return None
    if qmin is None or qmax is None:
        raise ValueError("--qmin and --qmax must be given together")
    return qmin, qmax


def _write_distribution(result: CurrentDistribution, out: Optional[str]) -> None:
    frame = result.to_frame()
    if out is None:
        frame.to_csv(sys.stdout, index=False, float_format='%.12e', lineterminator='\n')
        return
    path = write_csv(frame, out)
    write_json(result, path.with_suffix('.json'))
    err_console.print(f"Distribution saved to: {path} ({result.method.value}, err {result.err_estimate:.2e})")


@click.group()
@click.option('-c', '--config', type=click.Path(), help='Path to a JSON or YAML settings file')
@click.option('--tol-root', type=float, help='Root clustering tolerance')
@click.option('--tol-quad', type=float, help='Quadrature convergence tolerance')
@click.option('--tol-assume', type=float, help='Assumption check tolerance')
@click.option('--threads', type=int, help='Worker cap for parallel sections')
@click.option('-v', '--verbose', count=True, help='-v for INFO, -vv for DEBUG logging')
@click.pass_context
def cli(ctx: click.Context, config: Optional[str], tol_root: Optional[float], tol_quad: Optional[float],
        tol_assume: Optional[float], threads: Optional[int], verbose: int) -> None:
    """Full counting statistics of a current in a Markov jump process."""
    overrides: Dict[str, Any] = {}
    tolerances = {k: v for k, v in (('root', tol_root), ('quad', tol_quad), ('assume', tol_assume)) if v is not None}
    if tolerances:
        overrides['tolerances'] = tolerances
    if threads is not None:
        overrides['threads'] = threads
    if verbose:
        overrides['logging'] = {'level': 'DEBUG' if verbose > 1 else 'INFO'}
    ctx.obj = CliState(config, overrides)


@cli.command()
@click.argument('model_path', type=click.Path(exists=True))
@click.option('-o', '--out', type=click.Path(), help='Report path (JSON); stdout when omitted')
@click.option('--curves-csv', type=click.Path(), help='Write samples of the cuts with their g values')
@click.pass_context
def analyze(ctx: click.Context, model_path: str, out: Optional[str], curves_csv: Optional[str]) -> None:
    """Analyze a model: triple, branch points, cuts, special points, zeroes, cumulants."""
    model = _load_model(model_path)
    analyzer = _analyzer(ctx)
    report = analyzer.analyze(model)

    if out:
        write_json(report, out)
        err_console.print(f"Report saved to: {out}")
    else:
        click.echo(dumps(report), nl=False)

    if curves_csv and report.cut_layout is not None:
        curve = analyzer.curve(model)
        write_csv(sample_unit_circle_curves(curve.layout, curve.triple), curves_csv)

    table = Table(title=f"Analysis of {Path(model_path).name}")
    table.add_column("Check")
    table.add_column("Result")
    for check in report.checks:
        table.add_row(check['name'], '[green]ok[/green]' if check['passed'] else f"[red]{check['detail']}[/red]")
    if report.branch_points:
        table.add_row('genus', str(report.branch_points['genus']))
    for error in report.errors:
        table.add_row('error', f"[red]{error}[/red]")
    err_console.print(table)

    if not report.passed:
        sys.exit(EXIT_ASSUMPTION)


@cli.command()
@click.argument('model_path', type=click.Path(exists=True))
@click.option('--t', 't', type=float, required=True, help='Time')
@click.option('--qmin', type=int, help='Smallest Q (default J t - 8 sqrt(D t))')
@click.option('--qmax', type=int, help='Largest Q (default J t + 8 sqrt(D t))')
@click.option('--method', type=click.Choice(METHODS), default='auto', show_default=True)
@click.option('--base-point', type=(float, float, int), default=None,
              help='Base point RE IM SHEET for the general method')
@click.option('-o', '--out', type=click.Path(), help='CSV path; a JSON sidecar is written next to it')
@click.pass_context
def prob(ctx: click.Context, model_path: str, t: float, qmin: Optional[int], qmax: Optional[int],
         method: str, base_point: Optional[Tuple[float, float, int]], out: Optional[str]) -> None:
    """P(Q_t = Q) with stationary initial condition."""
    model = _load_model(model_path)
    analyzer = _analyzer(ctx)
    options: Dict[str, Any] = {}
    if base_point is not None:
        options['base_point'] = SurfacePoint(complex(base_point[0], base_point[1]), base_point[2])
    try:
        if t < 0:
            raise ValueError(f"time must be non-negative, got {t}")
        result = analyzer.distribution(model, t, _q_range(qmin, qmax), method, **options)
    except BasePointError as e:
        _fail(f"{e}. Pass --base-point RE IM SHEET or use --method oracle.", EXIT_BASE_POINT)
    except AssumptionError as e:
        _fail(str(e), EXIT_ASSUMPTION)
    except (CountingError, ValueError) as e:
        _fail(str(e), EXIT_INPUT)
    _write_distribution(result, out)


@cli.command()
@click.argument('model_path', type=click.Path(exists=True))
@click.option('-o', '--out', type=click.Path(), help='Write the cumulant report as JSON')
@click.pass_context
def cumulants(ctx: click.Context, model_path: str, out: Optional[str]) -> None:
    """Stationary current, diffusion constant and related quantities."""
    model = _load_model(model_path)
    try:
        report = _analyzer(ctx).curve(model).cumulants
    except CountingError as e:
        _fail(str(e), EXIT_ASSUMPTION if isinstance(e, AssumptionError) else EXIT_INPUT)
    if out:
        write_json(report, out)

    console = Console()
    table = Table(title="Stationary cumulants")
    table.add_column("Quantity")
    table.add_column("Value", justify="right")
    table.add_row("J", f"{report.J:.12g}")
    table.add_row("D", f"{report.D:.12g}")
    table.add_row("nu_*", f"{report.nu_star:.12g}")
    table.add_row("t_x^K", "n/a" if report.kemeny_modified is None else f"{report.kemeny_modified:.12g}")
    for order, value in enumerate(report.derivatives, start=1):
        table.add_row(f"lambda_st^({order})(0)", f"{value:.12g}")
    if report.mu_2 is not None:
        table.add_row("mu_2", f"{report.mu_2:.12g}")
    console.print(table)

    grid = Table(title="lambda_st(nu)")
    grid.add_column("nu", justify="right")
    grid.add_column("lambda_st", justify="right")
    for nu, value in report.lambda_st_samples:
        grid.add_row(f"{nu:.4g}", f"{value:.12g}")
    console.print(grid)


@cli.command()
@click.argument('name', type=click.Choice(EXAMPLES))
@click.option('--p', type=float, default=0.5, show_default=True, help='Three-state rate p')
@click.option('--q', type=float, default=None, help='Three-state rate q (0.25) or random-walk bias (0.3)')
@click.option('--omega', type=int, default=4, show_default=True, help='Random-walk ring size')
@click.option('-o', '--out', type=click.Path(), help='Model path (JSON); stdout when omitted')
def examples(name: str, p: float, q: Optional[float], omega: int, out: Optional[str]) -> None:
    """Write a built-in example model."""
    try:
        if name == 'three-state':
            q = 0.25 if q is None else q
            model = example(name, p=p, q=q)
            if three_state_sector(p, q) is None:
                err_console.print(f"[yellow]Warning:[/yellow] p={p}, q={q} is on a sector boundary (A2 fails)")
        else:
            model = example(name, omega=omega, q=0.3 if q is None else q)
    except (ValueError, CountingError) as e:
        _fail(str(e), EXIT_INPUT)
    if out:
        write_json(model.to_dict(), out)
        err_console.print(f"Model saved to: {out}")
    else:
        click.echo(dumps(model.to_dict()), nl=False)


@cli.command()
@click.argument('model_path', type=click.Path(exists=True))
@click.option('--t', 't', type=float, required=True, help='Time')
@click.option('--qmin', type=int)
@click.option('--qmax', type=int)
@click.option('--samples', type=int, default=0, help='Also run a Monte Carlo check with this many trajectories')
@click.option('--seed', type=int, help='Monte Carlo root seed')
@click.option('--tolerance', type=float, default=1e-5, show_default=True,
              help='Largest accepted difference between the formula and the inversion oracle')
@click.option('-o', '--out', type=click.Path(), help='Write the comparison summary as JSON')
@click.pass_context
def compare(ctx: click.Context, model_path: str, t: float, qmin: Optional[int], qmax: Optional[int],
            samples: int, seed: Optional[int], tolerance: float, out: Optional[str]) -> None:
    """Compare the formula method with the brute-force oracles."""
    model = _load_model(model_path)
    analyzer = _analyzer(ctx)
    methods = ['auto', 'oracle'] + (['gillespie'] if samples > 0 else [])
    options: Dict[str, Any] = {}
    if samples > 0:
        options['n_samples'] = samples
    if seed is not None:
        options['seed'] = seed
    try:
        comparison = analyzer.compare(model, t, _q_range(qmin, qmax), methods, **options)
    except BasePointError as e:
        _fail(str(e), EXIT_BASE_POINT)
    except AssumptionError as e:
        _fail(str(e), EXIT_ASSUMPTION)
    except (CountingError, ValueError) as e:
        _fail(str(e), EXIT_INPUT)

    if out:
        write_json(comparison, out)

    table = Table(title=f"Method comparison at t={t}")
    table.add_column("Pair")
    table.add_column("max |dP|", justify="right")
    for (first, second), diff in comparison.differences.items():
        table.add_row(f"{first} / {second}", f"{diff:.3e}")
    for label, seconds in comparison.runtimes.items():
        table.add_row(f"runtime {label}", f"{seconds:.3f} s")
    Console().print(table)

    exact = [diff for pair, diff in comparison.differences.items() if 'gillespie' not in pair]
    if max(exact, default=0.0) > tolerance:
        _fail(f"methods differ by {max(exact):.3e} > {tolerance:.1e}", EXIT_COMPARE)


@cli.command()
@click.argument('model_path', type=click.Path(exists=True))
@click.option('--t', 't', type=float, required=True, help='Time')
@click.option('--kind', type=click.Choice(['inversion', 'gillespie']), default='inversion', show_default=True)
@click.option('--qmin', type=int)
@click.option('--qmax', type=int)
@click.option('--samples', type=int, help='Monte Carlo trajectories')
@click.option('--seed', type=int, help='Monte Carlo root seed')
@click.option('-o', '--out', type=click.Path(), help='CSV path; a JSON sidecar is written next to it')
@click.pass_context
def oracle(ctx: click.Context, model_path: str, t: float, kind: str, qmin: Optional[int], qmax: Optional[int],
           samples: Optional[int], seed: Optional[int], out: Optional[str]) -> None:
    """Reference distribution by Fourier inversion or stochastic simulation."""
    model = _load_model(model_path)
    analyzer = _analyzer(ctx)
    options: Dict[str, Any] = {}
    if samples is not None:
        options['n_samples'] = samples
    if seed is not None:
        options['seed'] = seed
    method = 'oracle' if kind == 'inversion' else 'gillespie'
    try:
        result = analyzer.distribution(model, t, _q_range(qmin, qmax), method, **options)
    except (CountingError, ValueError) as e:
        _fail(str(e), EXIT_INPUT)
    _write_distribution(result, out)


def main() -> None:
    """Main CLI entry point."""
    cli()


if __name__ == "__main__":
    main()
