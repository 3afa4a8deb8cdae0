import logging
import sys
import traceback

import click

import consts
from errors import LogSurfComputationError, LogSurfInputError
from reports import (EXIT_INPUT_ERROR, cmd_examples, cmd_kappa, cmd_mbound, cmd_peel, cmd_validate,
                     cmd_verify_theorem, cmd_zariski)
from utils import setup_logger

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S',
    handlers=[logging.StreamHandler()]
)

logger = logging.getLogger(__name__)


def _emit(ctx, command, *args, **kwargs):
    """Run a report command, print it and exit with its code."""
    output_format = ctx.obj["format"]
    try:
        report, exit_code = command(*args, **kwargs)
    except LogSurfInputError as e:
        click.echo(f"error: {e}", err=True)
        for violation in getattr(e, "violations", []):
            click.echo(f"  - {violation}", err=True)
        ctx.exit(EXIT_INPUT_ERROR)
    except LogSurfComputationError as e:
        logger.warning("%s failed: %s", command.__name__, e)
        click.echo(f"error: {e}", err=True)
        ctx.exit(EXIT_INPUT_ERROR)
    except Exception:
        logging.error(traceback.format_exc())
        ctx.exit(EXIT_INPUT_ERROR)
    click.echo(report.render(output_format))
    ctx.exit(exit_code)


@click.group()
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text",
              help="Report format.")
@click.option("--log-file", type=click.Path(dir_okay=False), default=None, help="Also log to this file.")
@click.option("--verbose", is_flag=True, help="Log at DEBUG level.")
@click.pass_context
def cli(ctx, output_format, log_file, verbose):
    """logsurf: exact intersection-lattice tools for log surfaces."""
    level = logging.DEBUG if verbose or consts.DEBUG else logging.INFO
    logging.getLogger().setLevel(level)
    if log_file:
        setup_logger("", log_file, level=level)
    ctx.ensure_object(dict)
    ctx.obj["format"] = output_format


@cli.command()
@click.argument("model")
@click.pass_context
def validate(ctx, model):
    """Check a model file against the SNC and adjunction invariants."""
    _emit(ctx, cmd_validate, model)


@cli.command()
@click.argument("model")
@click.option("--strong", is_flag=True, help="Also contract curves orthogonal to K + D^#.")
@click.pass_context
def peel(ctx, model, strong):
    """Peel the boundary: twigs, bark and D^#."""
    _emit(ctx, cmd_peel, model, strong=strong)


@cli.command()
@click.argument("model")
@click.pass_context
def kappa(ctx, model):
    """Log Kodaira dimension verdict."""
    _emit(ctx, cmd_kappa, model)


@cli.command()
@click.argument("model")
@click.pass_context
def zariski(ctx, model):
    """Zariski decomposition of K + D."""
    _emit(ctx, cmd_zariski, model)


@cli.command()
@click.argument("data", nargs=-1)
@click.option("--model", "model_path", default=None, help="Extract the data from a model's fiber assignment.")
@click.option("--m", "m", type=int, default=None, help="Check the fibration criterion at this m.")
@click.option("--threshold", is_flag=True, help="Compute the exact threshold.")
@click.pass_context
def mbound(ctx, data, model_path, m, threshold):
    """Degree of delta_m for `g=.. t=.. horiz=.. fibers=(b,m),...`."""
    inline = " ".join(data) if data else None
    _emit(ctx, cmd_mbound, inline=inline, model_path=model_path, m=m, threshold=threshold)


@cli.command("verify-theorem")
@click.option("--m", "m", type=click.IntRange(min=1), default=8, show_default=True)
@click.option("--jobs", type=click.IntRange(min=0), default=consts.DEFAULT_JOBS, show_default=True,
              help="Worker processes, 0 for all CPUs.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Write the verdict table as CSV.")
@click.pass_context
def verify_theorem(ctx, m, jobs, csv_path):
    """Check the fibration bound across every case family."""
    _emit(ctx, cmd_verify_theorem, m, jobs=jobs, csv_path=csv_path)


@cli.command()
@click.argument("name")
@click.pass_context
def examples(ctx, name):
    """Replay a bundled example and check its claimed facts."""
    _emit(ctx, cmd_examples, name)


if __name__ == '__main__':
    sys.exit(cli(obj={}))
