"""
cli.py -- the `resclim` command.

    resclim gen-data  --config desk_lmnt.toml [--csv]
    resclim sweep     --config desk_lmnt.toml --threads 4
    resclim report    --config desk_lmnt.toml --psd --histogram --grid
    resclim train     --config desk_lmnt.toml --grid-index 0
    resclim predict   --config desk_lmnt.toml --grid-index 0 --test-set 3
    resclim lyapunov  --config ks.toml --horizon 5000
"""

import argparse
import logging
import sys
from pathlib import Path

import resclim as rc

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

def configure_logging(verbosity: int) -> None:
    # -v: INFO, -vv: DEBUG, -q: ERROR
    level = min(max(logging.WARNING - 10 * verbosity, logging.DEBUG), logging.CRITICAL)
    logging.basicConfig(
        level=level,
        format='%(asctime)s %(levelname)-7s %(name)s: %(message)s',
        stream=sys.stderr,
        )
    logging.captureWarnings(True)

def load(args: argparse.Namespace) -> 'rc.ExperimentConfig':
    overrides = {'base_seed': args.seed, 'out': args.out, 'threads': args.threads}
    if args.config is None:
        return rc.with_overrides(rc.parse_config({}), **overrides)
    return rc.load_config(args.config, **overrides)

def _point(config: 'rc.ExperimentConfig', index: int) -> 'rc.RegularizationConfig':
    points = rc.grid_points(config)
    if not 0 <= index < len(points):
        raise rc.ConfigError(
            f"--grid-index must be in [0, {len(points) - 1}], got {index}"
            )
    return points[index]

def cmd_gen_data(args: argparse.Namespace) -> int:
    """
    Generate training and test datasets.

    Writes data/train_<j>.rcds and data/test_<k>.rcds under the output
    directory, each with a JSON sidecar. Existing files are kept.
    """
    config = load(args)
    rc.harness.sweep.prepare_data(config)
    if args.csv:
        for path in sorted(rc.harness.sweep.data_dir(config).glob('*.rcds')):
            rc.write_csv(path.with_suffix('.csv'), rc.load_dataset(path), args.standardized)
    print(rc.harness.sweep.data_dir(config))
    return EXIT_OK

def cmd_train(args: argparse.Namespace) -> int:
    """
    Train one readout and save it.

    Uses reservoir --reservoir, training set --train-set and the grid
    point --grid-index of the configured regularization grid.
    """
    config = load(args)
    point = _point(config, args.grid_index)
    rc.harness.sweep.prepare_data(config)
    context = rc.UnitContext(config, args.reservoir, args.train_set)
    weights = context.weights(point)

    models = config.out / 'models'
    models.mkdir(parents=True, exist_ok=True)
    path = models / f'model_{args.reservoir:03d}_{args.train_set:03d}_{args.grid_index:04d}.rcwm'
    rc.save_model(path, rc.TrainedModel(
        hyperparams=context.hyperparams,
        weights=weights,
        config=point,
        transform=context.train.transform,
        provenance={
            'base_seed': config.base_seed,
            'reservoir': args.reservoir,
            'train_set': args.train_set,
            'train_seed': config.train_seed(args.train_set),
            'noise_seed': context.noise_seed,
            'grid_index': args.grid_index,
            },
        ))
    print(path)
    return EXIT_OK

def cmd_predict(args: argparse.Namespace) -> int:
    """
    Score one closed-loop prediction.

    Trains the readout like `train` (or loads --model), predicts test
    set --test-set and prints valid time, map errors and the verdict.
    """
    config = load(args)
    rc.harness.sweep.prepare_data(config)
    context = rc.UnitContext(config, args.reservoir, args.train_set)
    if args.model is not None:
        model = rc.load_model(args.model)
        if model.hyperparams != context.hyperparams:
            raise rc.ConfigError(
                f"Model {args.model} was trained on a different reservoir "
                f"than reservoir {args.reservoir} of this config"
                )
        weights = model.weights
    else:
        weights = context.weights(_point(config, args.grid_index))

    record = context.predict(weights, context.test(args.test_set))
    lyapunov_time = config.schedule.lyapunov_time
    print(f"valid time      {record.valid_time / lyapunov_time:.4g} t_Lyap "
          f"({record.valid_time:g} time units)")
    print(f"mean map error  {record.mean_map_error:.4g}")
    print(f"max map error   {record.max_map_error:.4g}")
    print(f"verdict         {record.verdict.value}")
    return EXIT_OK

def cmd_sweep(args: argparse.Namespace) -> int:
    """
    Run the whole ensemble over the regularization grid.

    Rows are appended to rows.csv as units finish;
    re-running the same command resumes an interrupted sweep.
    """
    config = load(args)
    result = rc.run_sweep(config)
    print(rc.format_table(result))
    return EXIT_OK

def cmd_report(args: argparse.Namespace) -> int:
    """
    Summarize a finished sweep.

    Prints the selected grid point as a table row and writes table.csv.
    --psd, --histogram and --grid add plot data files.
    """
    config = load(args)
    sweep = rc.harness.sweep
    result = sweep.load_result(config)
    if not result.points:
        raise rc.EmptySweepError(f"No result rows in {sweep.rows_path(config)}")
    sweep.write_summary(config, result)

    print(rc.format_table(result, selected_only=not args.all))
    rc.write_table_csv(config.out / 'table.csv', result)

    point = args.grid_index
    if point is None:
        point = rc.select_parameters(result).index

    if args.psd:
        rc.write_psd_csv(
            config.out / 'psd.csv',
            *rc.psd_curves(config.out / 'psd', point),
            )
    if args.histogram:
        edges, counts = rc.mean_map_histogram(
            sweep.read_rows(sweep.rows_path(config)),
            None if args.grid_index is None else point,
            )
        rc.write_histogram_csv(config.out / 'histogram.csv', edges, counts)
    if args.grid:
        rc.write_grid_csv(config.out / 'grid.csv', result)
    return EXIT_OK

def cmd_lyapunov(args: argparse.Namespace) -> int:
    """
    Estimate the largest Lyapunov exponent of the configured KS system.
    """
    config = load(args)
    exponent = rc.largest_lyapunov(
        config.ks,
        horizon=args.horizon,
        renorm_interval=args.renorm_interval,
        ic_seed=config.base_seed,
        )
    print(f"largest exponent  {exponent:.6g}")
    if exponent > 0:
        print(f"Lyapunov time     {1 / exponent:.6g}")
    return EXIT_OK

def _add_unit_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--reservoir', type=int, default=0, help="Reservoir index")
    parser.add_argument('--train-set', type=int, default=0, help="Training set index")
    parser.add_argument('--grid-index', type=int, default=0, help="Grid point index")

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help="TOML experiment file")
    common.add_argument('--seed', type=int, help="Override base_seed")
    common.add_argument('--threads', type=int, help="Worker processes")
    common.add_argument('--out', type=Path, help="Override the output directory")
    common.add_argument('-v', '--verbose', action='count', default=0)
    common.add_argument('-q', '--quiet', action='count', default=0)

    parser = argparse.ArgumentParser(
        prog='resclim',
        description=rc.split_docstring(__doc__).heading,
        )
    commands = parser.add_subparsers(dest='name', required=True)

    def add(name: str, function):
        heading, description = rc.split_docstring(function.__doc__)
        sub = commands.add_parser(
            name,
            help=heading,
            description=f'{heading}\n\n{description}'.strip(),
            parents=[common],
            formatter_class=argparse.RawDescriptionHelpFormatter,
            )
        sub.set_defaults(command=function)
        return sub

    gen = add('gen-data', cmd_gen_data)
    gen.add_argument('--csv', action='store_true', help="Also write plain CSV copies")
    gen.add_argument(
        '--standardized', action='store_true',
        help="CSV holds standardized instead of raw samples")

    _add_unit_args(add('train', cmd_train))

    predict = add('predict', cmd_predict)
    _add_unit_args(predict)
    predict.add_argument('--test-set', type=int, default=0, help="Test set index")
    predict.add_argument('--model', type=Path, help="Use a saved model")

    add('sweep', cmd_sweep)

    report = add('report', cmd_report)
    report.add_argument('--all', action='store_true', help="Print every grid point")
    report.add_argument(
        '--grid-index', type=int,
        help="Grid point for --psd and --histogram (default: the selected one)")
    report.add_argument('--psd', action='store_true', help="Write psd.csv")
    report.add_argument('--histogram', action='store_true', help="Write histogram.csv")
    report.add_argument('--grid', action='store_true', help="Write grid.csv")

    lyapunov = add('lyapunov', cmd_lyapunov)
    lyapunov.add_argument('--horizon', type=float, default=5000.0)
    lyapunov.add_argument('--renorm-interval', type=float, default=1.0)

    return parser

def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose - args.quiet)
    try:
        return args.command(args)
    except rc.ConfigError as err:
        logger.error("%s", err)
        return EXIT_CONFIG
    except (rc.HarnessError, rc.ContainerError, OSError, *rc.harness.sweep.RUN_ERRORS) as err:
        logger.error("%s", err)
        return EXIT_FAILURE

if __name__ == '__main__':
    sys.exit(main())
