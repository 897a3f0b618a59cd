from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Optional, Tuple

import click
from pydantic import ValidationError

from tmbinomial import settings
from tmbinomial.binomial import FactorOptions, binom_words, complexity_profile, extended_parikh, psi_words, source_factors
from tmbinomial.core import word_from_text, word_to_text
from tmbinomial.errors import UsageError, VerificationFailed, WordError
from tmbinomial.schemas import RunConfig, VerificationReport
from tmbinomial.services import SUITES, run_suite
from tmbinomial.tm import closed_form_table, conjecture_scan, thue_morse, tm_prefix


LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"

logger = logging.getLogger(__name__)


class WordsGroup(click.Group):
    """Translates library errors into the documented exit codes."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except WordError as exc:
            click.echo(f"error: {exc.detail}", err=True)
            ctx.exit(exc.exit_code)
        except ValidationError as exc:
            problems = "; ".join(f"{'.'.join(map(str, e['loc'])) or 'config'}: {e['msg']}" for e in exc.errors())
            click.echo(f"error: {problems}", err=True)
            ctx.exit(UsageError.exit_code)


def parse_n_range(text: str) -> Tuple[int, int]:
    lo_text, sep, hi_text = text.partition("..")
    try:
        lo = int(lo_text)
        hi = int(hi_text) if sep else lo
    except ValueError as exc:
        raise click.BadParameter(f"expected A..B or a single integer, got {text!r}") from exc
    if lo < 0 or hi < lo:
        raise click.BadParameter(f"empty or negative range {text!r}")
    return lo, hi


def _n_range_option(_ctx: click.Context, _param: click.Parameter, value: Optional[str]) -> Optional[Tuple[int, int]]:
    return None if value is None else parse_n_range(value)


RUN_OPTIONS = [
    click.option("--prefix-K", "prefix_growth_k", type=int, default=settings.PREFIX_GROWTH_K, show_default=True),
    click.option("--max-doublings", type=int, default=settings.MAX_DOUBLINGS, show_default=True),
    click.option("--budget-mb", type=int, default=settings.BUDGET_MB, show_default=True),
    click.option("--jobs", default=settings.JOBS, show_default=True, help="worker processes or 'auto'"),
    click.option("--strategy", type=click.Choice(["cover", "prefix"]), default=settings.STRATEGY, show_default=True),
]


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every command that builds a RunConfig."""
    for option in reversed(RUN_OPTIONS):
        func = option(func)
    return func


def build_config(**values: Any) -> RunConfig:
    n_range = values.pop("n_range", None)
    if n_range is not None:
        values["n_lo"], values["n_hi"] = n_range
    return RunConfig(**{key: value for key, value in values.items() if value is not None})


def factor_options(config: RunConfig) -> FactorOptions:
    return FactorOptions(
        strategy=config.strategy,
        growth_k=config.prefix_growth_k,
        max_doublings=config.max_doublings,
    )


def emit(text: str, output: Optional[str]) -> None:
    """Write to stdout, or replace the output file in one step so no partial file is left."""
    if output is None:
        click.echo(text, nl=False)
        return
    target = Path(output)
    try:
        fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    except OSError as exc:
        raise UsageError(f"cannot write {target}: {exc.strerror}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except OSError as exc:
        Path(tmp_name).unlink(missing_ok=True)
        raise UsageError(f"cannot write {target}: {exc.strerror}") from exc
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info("wrote %s", target)


@click.group(cls=WordsGroup)
@click.option("--verbose", is_flag=True, help="log progress at INFO level")
def cli(verbose: bool) -> None:
    """Binomial coefficients of words and complexity of generalized Thue-Morse words."""
    level = logging.INFO if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--len", "length", type=click.IntRange(min=0), required=True)
@click.option("--format", "output_format", type=click.Choice(["plain", "json"]), default="plain")
def generate(m: int, length: int, output_format: str) -> None:
    """Prefix of t_m of the requested length."""
    build_config(m=m)
    word = tm_prefix(m, length)[:length]
    text = word_to_text(word, m)
    if output_format == "json":
        click.echo(json.dumps({"m": m, "length": length, "word": text}))
    elif text:
        click.echo(text)


@cli.command()
@click.argument("u")
@click.argument("v", required=False)
@click.option("--empty-v", is_flag=True, help="use the empty word as V")
def binom(u: str, v: Optional[str], empty_v: bool) -> None:
    """Number of occurrences of V as a scattered subword of U."""
    if empty_v and v is not None:
        raise UsageError("give either V or --empty-v, not both")
    if not empty_v and not v:
        raise UsageError("V is missing; pass the empty word with --empty-v")
    click.echo(binom_words(word_from_text(u), word_from_text(v or "")))


@cli.command()
@click.argument("word")
@click.option("--k", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--m", type=int, default=None, help="alphabet size (default: largest letter + 1)")
@click.option("--format", "output_format", type=click.Choice(["csv", "json", "plain"]), default="plain")
def psi(word: str, k: int, m: Optional[int], output_format: str) -> None:
    """Extended Parikh vector of WORD, labelled by the words it counts."""
    u = word_from_text(word)
    m = m if m is not None else max(2, max(u, default=0) + 1)
    build_config(m=m, k=k)
    vector = extended_parikh(u, k, m)
    labels = [word_to_text(v, m) for v in psi_words(k, m)]
    if output_format == "json":
        entries = [{"word": label, "count": count} for label, count in zip(labels, vector.counts)]
        click.echo(json.dumps({"k": k, "m": m, "entries": entries}, indent=2))
    elif output_format == "csv":
        click.echo("word,count")
        for label, count in zip(labels, vector.counts):
            click.echo(f"{label},{count}")
    else:
        click.echo(",".join(str(c) for c in vector.counts))


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--n", "n", type=click.IntRange(min=0), required=True)
@click.option("--format", "output_format", type=click.Choice(["csv", "json", "plain"]), default="plain")
@run_options
def factors(m: int, n: int, output_format: str, **options: Any) -> None:
    """Length-n factors of t_m in lexicographic order."""
    config = build_config(m=m, n_range=(n, n), output_format=output_format, **options)
    words = [word_to_text(f, m) for f in source_factors(thue_morse(m), n, factor_options(config))]
    if output_format == "json":
        click.echo(json.dumps(words))
    elif output_format == "csv":
        click.echo("factor")
        for w in words:
            click.echo(w)
    else:
        for w in words:
            click.echo(w)


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--n", "n_range", required=True, callback=_n_range_option, help="A..B or a single n")
@click.option("--format", "output_format", type=click.Choice(["csv", "json", "plain"]), default="csv")
@click.option("--closed-form", is_flag=True, help="emit the closed-form table instead of the oracle")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@run_options
def complexity(closed_form: bool, output: Optional[str], **values: Any) -> None:
    """k-binomial complexity of t_m over a range of n."""
    config = build_config(**values)
    if closed_form:
        table = closed_form_table(config.m, config.k, config.n_range)
    else:
        table = complexity_profile(
            thue_morse(config.m), config.k, config.m, config.n_range, factor_options(config), config.workers
        )
    emit(table.render(config.output_format), output)


def _render_report(report: VerificationReport, output_format: str) -> str:
    if output_format == "json":
        return report.model_dump_json(indent=2) + "\n"
    lines = [f"{r.claim_id} {r.verdict}" for r in report.records]
    lines.extend(f"# {note}" for note in report.notes)
    lines.append(f"{report.suite} {report.verdict}")
    return "\n".join(lines) + "\n"


@cli.command()
@click.argument("suite", type=click.Choice([*SUITES, "all"]))
@click.option("--m", type=int, default=None, help="restrict the suite to one alphabet size")
@click.option("--n", "n_range", default=None, callback=_n_range_option, help="widen the upper end of the pinned window")
@click.option("--format", "output_format", type=click.Choice(["json", "plain"]), default="json")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@run_options
def verify(suite: str, output: Optional[str], **values: Any) -> None:
    """Run a verification suite and report every claim it checks."""
    output_format = values.pop("output_format")
    config = build_config(**values)
    report = run_suite(suite, config)
    emit(_render_report(report, output_format), output)
    if not report.passed:
        for record in report.failures():
            click.echo(f"failed: {record.model_dump_json()}", err=True)
        raise VerificationFailed(f"{len(report.failures())} of {len(report.records)} claims failed in {report.suite}")


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--n-max", type=int, default=None, help="largest n scanned (default 3 * m^k)")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@run_options
def scan(n_max: Optional[int], output: Optional[str], **values: Any) -> None:
    """Check b_{t_m,k} for periodicity m^k; the verdict is evidence only."""
    config = build_config(**values)
    report = conjecture_scan(
        config.m,
        config.k,
        n_max,
        budget_mb=config.budget_mb,
        options=factor_options(config),
        jobs=config.workers,
    )
    emit(report.model_dump_json(indent=2) + "\n", output)


def main() -> None:
    cli(prog_name="tmbinomial")
