"""
Batch command line for the Grushin-Choquard solver

    gchoquard solve   --config run.toml [--out DIR] [--allow-nonadmissible] [--cross-check]
    gchoquard sweep   --config run.toml --param p --from 1.9 --to 2.8 --steps 10
    gchoquard verify  --field field.csv --config run.toml
    gchoquard kernel  --config run.toml --out kernel.gkrn
    gchoquard profile --config run.toml --tmax 3 --steps 61

Exit codes: 0 ok, 1 configuration / format error, 2 solver error.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import RunConfig, load_config
from .engine import GrushinChoquardEngine
from ..utils.constants import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, SWEEP_PARAMS
from ..utils.errors import (
    ConfigError,
    FormatError,
    GridMismatchError,
    GrushinChoquardError,
    KernelMemoryError,
    NonadmissibleExponentError,
    ParameterError,
)

logger = logging.getLogger(__name__)

CONFIG_ERRORS = (ConfigError, FormatError, ParameterError, GridMismatchError)


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's exit 2"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='gchoquard', description="Grushin-Choquard bi-radial solver and audit suite")
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    parser.add_argument('-q', '--quiet', action='store_true', help="warnings and errors only")
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)

    p = sub.add_parser('solve', help="ground state, audit and output files")
    p.add_argument('--config', required=True)
    p.add_argument('--out', default=None, help="output directory (default: [outputs] directory)")
    p.add_argument('--allow-nonadmissible', action='store_true')
    p.add_argument('--cross-check', action='store_true', help="also run the mountain-pass solver")

    p = sub.add_parser('sweep', help="solve over a range of p, mu or gamma")
    p.add_argument('--config', required=True)
    p.add_argument('--param', required=True)
    p.add_argument('--from', dest='start', type=float, required=True)
    p.add_argument('--to', dest='stop', type=float, required=True)
    p.add_argument('--steps', type=int, required=True)
    p.add_argument('--out', default=None)

    p = sub.add_parser('verify', help="audit a stored field")
    p.add_argument('--field', required=True)
    p.add_argument('--config', required=True)
    p.add_argument('--out', default=None)

    p = sub.add_parser('kernel', help="assemble and store a GKRN1 kernel")
    p.add_argument('--config', required=True)
    p.add_argument('--out', required=True)

    p = sub.add_parser('profile', help="ray profile E(t phi) of the standard bump")
    p.add_argument('--config', required=True)
    p.add_argument('--tmax', type=float, required=True)
    p.add_argument('--steps', type=int, required=True)
    p.add_argument('--out', default=None)
    return parser


class CLI:
    """One handler per subcommand; each returns an exit code"""

    def __init__(self, engine: Optional[GrushinChoquardEngine] = None):
        self.engine = engine or GrushinChoquardEngine()

    def _out(self, config: RunConfig, out: Optional[str]) -> Path:
        return Path(out) if out else Path(config.outputs.directory)

    def do_solve(self, args) -> int:
        config = load_config(args.config)
        if args.allow_nonadmissible:
            config = config.with_solver(allow_nonadmissible=True)
        out = self._out(config, args.out)
        outcome = self.engine.solve(config, out, cross_check=args.cross_check)
        b = outcome.report.breakdown
        print(f"Converged in {outcome.report.iters} iterations: E = {b.E:.10g}")
        print(f"  A = {b.A:.6g}  B = {b.B:.6g}  D = {b.D:.6g}")
        print(f"  residual = {outcome.report.residual:.3e}  "
              f"pohozaev_rel = {outcome.audit.pohozaev_rel:.3e}")
        if outcome.mountain_pass is not None:
            print(f"  mountain-pass level = {outcome.mountain_pass.mp_level:.10g}")
        print(f"Results written to {out}")
        return EXIT_OK

    def do_sweep(self, args) -> int:
        if args.param not in SWEEP_PARAMS:
            raise ConfigError(f"--param must be one of {', '.join(SWEEP_PARAMS)}, got {args.param!r}")
        config = load_config(args.config)
        out = self._out(config, args.out)
        rows = self.engine.sweep(config, args.param, args.start, args.stop, args.steps, out)
        print(f"{'value':>12} {'E':>16} {'converged':>10}  regime")
        for row in rows:
            s = row.summary()
            print(f"{s['value']:12.6g} {s['E']:16.10g} {str(s['converged']):>10}  {s['regime']}")
        print(f"Summary written to {out / 'sweep_summary.csv'}")
        return EXIT_OK

    def do_verify(self, args) -> int:
        config = load_config(args.config)
        out = Path(args.out) if args.out else None
        report = self.engine.verify(args.field, config, out)
        for key, value in report.to_dict().items():
            if key != 'extras':
                print(f"{key:>20}: {value}")
        return EXIT_OK

    def do_kernel(self, args) -> int:
        config = load_config(args.config)
        path = self.engine.build_kernel_file(config, args.out)
        print(f"Kernel written to {path}")
        return EXIT_OK

    def do_profile(self, args) -> int:
        config = load_config(args.config)
        out = self._out(config, args.out)
        result = self.engine.profile(config, args.tmax, args.steps, out)
        print(f"t*     = {result['t_star']:.8g}")
        print(f"t1     = {result['t1']:.8g}")
        print(f"max E  = {result['ray_max']:.8g}")
        print(f"Profile written to {out / 'ray_profile.csv'}")
        return EXIT_OK


def _configure_logging(args) -> None:
    level = logging.INFO
    if getattr(args, 'verbose', False):
        level = logging.DEBUG
    elif getattr(args, 'quiet', False):
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    _configure_logging(args)
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        cli = CLI()
        return getattr(cli, f"do_{args.command}")(args)
    except CONFIG_ERRORS as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except NonadmissibleExponentError as e:
        lo, hi = e.interval
        print(f"Error: {e.message}", file=sys.stderr)
        print(f"Admissible interval: ({lo:.6g}, {hi:.6g}); pass --allow-nonadmissible to run anyway",
              file=sys.stderr)
        return EXIT_SOLVER
    except KernelMemoryError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        print("Hint: set matrix_free = true under [kernel]", file=sys.stderr)
        return EXIT_SOLVER
    except GrushinChoquardError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_SOLVER
    except KeyboardInterrupt:
        print("\nInterrupted by user.", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == '__main__':
    sys.exit(main())
