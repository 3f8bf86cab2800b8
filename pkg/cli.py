import asyncio
import sys
from enum import Enum
from pathlib import Path
from typing import Annotated

import click
import typer
from dotenv import load_dotenv

from config.logging import configure_logging
from config.settings import Settings, get_log_level, get_settings
from services.errors import FocalFramesError, InputError, UsageError
from services.reporting import load_document, render, report_all, run_operation

app = typer.Typer(add_completion=False, help="Normalized varieties, focal loci and transport checks.")


class OutputFormat(str, Enum):
    JSON = "json"
    MD = "md"


InputOption = Annotated[Path, typer.Option("--input", help="JSON input document.")]
OutputOption = Annotated[
    Path | None, typer.Option("--output", help="Write the report here instead of stdout.")
]
FormatOption = Annotated[OutputFormat, typer.Option("--format", help="Report format.")]
ToleranceOption = Annotated[
    float | None, typer.Option("--tolerance", help="Float tolerance; overrides FOCALFRAMES_TOLERANCE.")
]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Seed for generated instances.")]
StepsOption = Annotated[int | None, typer.Option("--steps", help="Integration steps per path segment.")]
TimingsOption = Annotated[bool, typer.Option("--timings", help="Include wall time in the report.")]


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        typer.echo(text, nl=False)
        return
    try:
        output.write_text(text, encoding="utf-8")
    except OSError as e:
        raise InputError(f"{output}: cannot write report ({e.strerror})")


def _execute(
    operation: str,
    input_path: Path,
    output: Path | None,
    fmt: OutputFormat,
    tolerance: float | None,
    seed: int | None,
    steps: int | None,
    timings: bool,
) -> None:
    """
    Shared body of every subcommand.
    Exit code 0 when every section passed, 2 when validation or a section
    failed (the report is still written), 1 for usage and input errors.
    """
    try:
        settings: Settings = get_settings(tolerance, steps, seed, timings)
        document, digest = load_document(input_path)
        if operation == "report-all":
            report = asyncio.run(report_all(document, digest, settings))
        else:
            report = run_operation(operation, document, digest, settings)
        _emit(render(report, fmt.value), output)
    except (InputError, UsageError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(1)
    except FocalFramesError as e:
        typer.echo(f"Error: {type(e).__name__}: {e}", err=True)
        raise typer.Exit(1)
    if report["status"] != "ok":
        raise typer.Exit(2)


def _command(operation: str, summary: str):
    def command(
        input_path: InputOption,
        output: OutputOption = None,
        fmt: FormatOption = OutputFormat.JSON,
        tolerance: ToleranceOption = None,
        seed: SeedOption = None,
        steps: StepsOption = None,
        timings: TimingsOption = False,
    ):
        _execute(operation, input_path, output, fmt, tolerance, seed, steps, timings)

    command.__doc__ = summary
    app.command(operation)(command)


_command("validate", "Check the structural identities of the input and classify it.")
_command("curvature", "Tangential and normal curvature tensors, Ricci contractions, flatness.")
_command("focal", "Focus hypersurface and hypercone polynomials and their linear factors.")
_command("classify", "Classify the normalization (central, trivial, central-affine, general).")
_command("frames", "Frame data of an immersion at the chosen point.")
_command("transport", "Parallel transport of tangent and normal vectors along the chosen path.")
_command("holonomy", "Holonomy around the chosen rectangle against the curvature prediction.")
_command("parallel", "Offset variety by a parallel normal field and its tangent spaces.")
_command("sweep", "Parallel subbundle check and tangent constancy along swept generators.")
_command("report-all", "Every section that applies to the input, in one report.")


def run(argv: list[str] | None = None) -> int:
    """
    Entry point returning the exit code instead of exiting.

    Example:
        python cli.py validate --input tests/fixtures/central.json
        python cli.py focal --input diag23.json --format md --output focal.md
    """
    load_dotenv()
    configure_logging(get_log_level())
    try:
        result = app(args=argv if argv is not None else sys.argv[1:], standalone_mode=False)
    except click.ClickException as e:
        typer.echo(f"Error: {e.format_message()}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(run())
