import logging
import sys
from typing import Any, Dict, List, Optional

import click
from click.core import ParameterSource

from config import BaseConfig
from src import __version__, configure_logging
from src.modules import InputError
from src.modules.attack import SamplingStrategy, SelectionStrategy
from src.modules.evaluation import FixtureSpec, SweepSpec
from src.modules.kb import CountMode, PoolKind
from src.modules.victim import MissingPolicy, VictimTransportError
from src.services.attack_service import run_attack, run_header_attack
from src.services.audit_service import run_leakage_audit
from src.services.fixture_service import generate_fixtures
from src.services.victim_service import train_victim

logger = logging.getLogger("src.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_TRANSPORT = 3

existing_file = click.Path(exists=True, dir_okay=False)
percentages = click.IntRange(1, 100)


def _choices(enum) -> click.Choice:
    return click.Choice([member.value for member in enum])


def _explicit(ctx: click.Context, values: Dict[str, Any], params: Dict[str, str]) -> Dict[str, Any]:
    """Values of the options given on the command line, keyed by spec field."""
    return {
        field: values[field] for field, param in params.items()
        if ctx.get_parameter_source(param) is not ParameterSource.DEFAULT
    }


def _seeds(seed: int, repeats: int) -> List[int]:
    return list(range(seed, seed + repeats))


@click.group()
@click.version_option(__version__, prog_name="table-attack")
@click.option("--log-level", default=BaseConfig.LOG_LEVEL, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level: str):
    """Entity-swap adversarial attacks on column type annotation."""
    configure_logging(log_level)


@cli.command("audit-leakage")
@click.option("--train", "train_path", required=True, type=existing_file)
@click.option("--test", "test_path", required=True, type=existing_file)
@click.option("--mode", default=CountMode.UNIQUE.value, show_default=True,
              type=_choices(CountMode), help="Count distinct entities or every mention.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def cmd_audit_leakage(train_path: str, test_path: str, mode: str, out_path: str):
    """Per-class overlap of test entities with training entities."""
    report = run_leakage_audit(train_path, test_path, out_path, mode)
    click.echo(f"Wrote {len(report.rows)} classes to {out_path}.")


@cli.command("attack")
@click.option("--corpus", type=existing_file, help="Test corpus.")
@click.option("--train-corpus", type=existing_file)
@click.option("--embeddings", type=existing_file)
@click.option("--victim", help="prototype:<model file> or http:<host:port>.")
@click.option("--config", "config_path", type=existing_file, help="Sweep spec YAML.")
@click.option("--p", "p_values", multiple=True, type=percentages,
              default=BaseConfig.DEFAULT_P_VALUES, show_default=True)
@click.option("--selection", "selections", multiple=True, type=_choices(SelectionStrategy),
              default=(SelectionStrategy.IMPORTANCE.value,), show_default=True)
@click.option("--sampling", "samplings", multiple=True, type=_choices(SamplingStrategy),
              default=(SamplingStrategy.SIMILARITY.value,), show_default=True)
@click.option("--pool", "pools", multiple=True, type=_choices(PoolKind),
              default=(PoolKind.TEST.value,), show_default=True)
@click.option("--seed", default=BaseConfig.DEFAULT_SEED, show_default=True, type=int)
@click.option("--repeats", default=1, show_default=True, type=click.IntRange(min=1),
              help="Run seeds seed .. seed + repeats - 1.")
@click.option("--all-columns", is_flag=True,
              help="Also attack columns the victim misclassifies at baseline.")
@click.option("--mask-headers", is_flag=True, help="Evaluate on tables with masked headers.")
@click.option("--header-synonyms", is_flag=True,
              help="Swap headers for synonyms before the entity attack.")
@click.option("--synonyms", type=existing_file, help="Synonym embedding file.")
@click.option("--allow-duplicates", is_flag=True)
@click.option("--threads", default=BaseConfig.THREADS, show_default=True,
              type=click.IntRange(min=1))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_attack(ctx: click.Context, config_path: Optional[str], out_dir: str, seed: int,
               repeats: int, all_columns: bool, **options):
    """Entity-swap sweep over p, strategies, pools and seeds."""
    values = dict(options)
    values["seeds"] = _seeds(seed, repeats)
    values["only_correct"] = not all_columns
    params = {name: name for name in options}
    params.update(seeds="seed", only_correct="all_columns")

    explicit = _explicit(ctx, values, params)
    if ctx.get_parameter_source("repeats") is not ParameterSource.DEFAULT:
        explicit["seeds"] = values["seeds"]
    if config_path:
        spec = SweepSpec.from_yaml(config_path, **explicit)
    else:
        spec = SweepSpec(**values)

    outputs = run_attack(spec, out_dir)
    click.echo(f"Wrote {', '.join(sorted(p.name for p in outputs.values()))} to {out_dir}.")


@cli.command("header-attack")
@click.option("--corpus", required=True, type=existing_file, help="Test corpus.")
@click.option("--synonyms", required=True, type=existing_file, help="Synonym embedding file.")
@click.option("--p", "p_values", multiple=True, type=percentages,
              default=BaseConfig.DEFAULT_P_VALUES, show_default=True)
@click.option("--seed", default=BaseConfig.DEFAULT_SEED, show_default=True, type=int)
@click.option("--repeats", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--victim", help="Victim evaluating the perturbed corpus.")
@click.option("--threads", default=BaseConfig.THREADS, show_default=True,
              type=click.IntRange(min=1))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def cmd_header_attack(corpus: str, synonyms: str, p_values, seed: int, repeats: int,
                      victim: Optional[str], threads: int, out_dir: str):
    """Replace column names with their nearest synonyms."""
    outputs = run_header_attack(corpus, synonyms, out_dir, p_values=list(p_values),
                                seeds=_seeds(seed, repeats), victim_spec=victim,
                                threads=threads)
    click.echo(f"Wrote {', '.join(sorted(p.name for p in outputs.values()))} to {out_dir}.")


FIXTURE_OPTIONS = {
    "n_classes": "n_classes",
    "entities_per_class": "entities_per_class",
    "columns": "columns",
    "train_columns": "train_columns",
    "rows_per_column": "rows_per_column",
    "columns_per_table": "columns_per_table",
    "overlap_fraction": "overlap",
    "dimension": "dimension",
    "noise": "noise",
    "outlier_fraction": "outlier_fraction",
    "seed": "seed",
}


@cli.command("gen-fixtures")
@click.option("--config", "config_path", type=existing_file, help="Fixture spec YAML.")
@click.option("--n-classes", default=FixtureSpec.n_classes, show_default=True, type=int)
@click.option("--entities-per-class", default=FixtureSpec.entities_per_class, show_default=True,
              type=int)
@click.option("--columns", default=FixtureSpec.columns, show_default=True, type=int)
@click.option("--train-columns", default=FixtureSpec.train_columns, show_default=True, type=int)
@click.option("--rows-per-column", default=FixtureSpec.rows_per_column, show_default=True,
              type=int)
@click.option("--columns-per-table", default=FixtureSpec.columns_per_table, show_default=True,
              type=int)
@click.option("--overlap", default=FixtureSpec.overlap_fraction, show_default=True, type=float)
@click.option("--dimension", default=FixtureSpec.dimension, show_default=True, type=int)
@click.option("--noise", default=FixtureSpec.noise, show_default=True, type=float)
@click.option("--outlier-fraction", default=FixtureSpec.outlier_fraction, show_default=True,
              type=float)
@click.option("--seed", default=FixtureSpec.seed, show_default=True, type=int)
@click.option("--header-weight", default=BaseConfig.DEFAULT_HEADER_WEIGHT, show_default=True,
              type=click.FloatRange(0, 1), help="w_h of the calibration victim.")
@click.option("--threshold", default=BaseConfig.DEFAULT_THRESHOLD, show_default=True,
              type=float, help="Threshold of the calibration victim.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_gen_fixtures(ctx: click.Context, config_path: Optional[str], header_weight: float,
                     threshold: float, out_dir: str, **options):
    """Synthetic train/test corpora with embedding and synonym files."""
    values = {field: options[param] for field, param in FIXTURE_OPTIONS.items()}
    if config_path:
        spec = FixtureSpec.from_yaml(config_path, **_explicit(ctx, values, FIXTURE_OPTIONS))
    else:
        spec = FixtureSpec(**values)
    outputs = generate_fixtures(spec, out_dir, header_weight, threshold)
    click.echo(f"Wrote {', '.join(sorted(p.name for p in outputs.values()))} to {out_dir}.")


@cli.command("train-victim")
@click.option("--train", "train_path", required=True, type=existing_file)
@click.option("--embeddings", required=True, type=existing_file)
@click.option("--header-weight", default=BaseConfig.DEFAULT_HEADER_WEIGHT, show_default=True,
              type=click.FloatRange(0, 1))
@click.option("--threshold", default=BaseConfig.DEFAULT_THRESHOLD, show_default=True,
              type=float)
@click.option("--missing", default=BaseConfig.MISSING_EMBEDDING_POLICY, show_default=True,
              type=_choices(MissingPolicy))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def cmd_train_victim(train_path: str, embeddings: str, header_weight: float,
                     threshold: float, missing: str, out_path: str):
    """Train the prototype victim and save it as a model file."""
    victim = train_victim(train_path, embeddings, out_path, header_weight, threshold, missing)
    click.echo(f"Wrote prototype victim with {len(victim.classes)} classes to {out_path}.")


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    Runs the command line and maps failures to exit codes: 1 for usage
    errors, 2 for input and schema errors, 3 for victim transport errors.
    """
    try:
        result = cli.main(args=argv, prog_name="table-attack", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except VictimTransportError as e:
        logger.error("Victim transport error: %s", e.message)
        click.echo(f"Error: {e.message}", err=True)
        return EXIT_TRANSPORT
    except InputError as e:
        logger.error("Input error: %s", e.message)
        click.echo(f"Error: {e.message}", err=True)
        return EXIT_INPUT
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(run_cli())
