import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

from config import BaseConfig
from src.modules.attack import (
    AttackConfig,
    AttackError,
    header_synonym_attack,
    imperceptibility_audit,
)
from src.modules.evaluation import (
    SweepOutcome,
    SweepSpec,
    SweepSpecError,
    emit_report,
    run_header_sweep,
    run_sweep,
    write_header_swaps,
    write_results,
    write_sweep_csv,
)
from src.modules.kb import EmbeddingStore, EntityKB, build_kb, load_embeddings
from src.modules.table import Corpus, SplitTag, parse_corpus
from src.modules.victim import Victim, resolve_victim
from src.utils.manifest import RunManifest

logger = logging.getLogger(__name__)


def victim_input(victim_spec: Optional[str]) -> Optional[str]:
    """The model file behind a `prototype:` victim spec, if any."""
    if victim_spec and victim_spec.startswith("prototype:"):
        return victim_spec.partition(":")[2]
    return None


def load_attack_kb(test: Corpus, train_path: Union[str, Path], store: EmbeddingStore) -> EntityKB:
    """Builds the test KB with the training KB as reference for filtered pools."""
    train = parse_corpus(train_path, SplitTag.TRAIN)
    return build_kb(test, store).with_reference(build_kb(train, store))


def audit_outcome(outcome: SweepOutcome, kb: EntityKB) -> None:
    """
    Raises:
        AttackError: If an adversarial entity left the attacked column's class.
    """
    for result in outcome.results:
        if not imperceptibility_audit(result, kb):
            raise AttackError(
                f"An adversarial entity of table '{result.original_table.table_id}' "
                f"column {result.column} is not of the column's class.")
    logger.info("Imperceptibility audit passed on %d attacks.", len(outcome.results))


def write_outputs(outcome: SweepOutcome, out_dir: Path, manifest: RunManifest) -> Dict[str, Path]:
    outputs = {
        "results": write_results(outcome, out_dir / BaseConfig.RESULTS_FILE),
        "sweep": write_sweep_csv(outcome.rows, out_dir / BaseConfig.SWEEP_FILE),
    }
    outputs.update(emit_report(outcome.rows, out_dir, outcome.per_class))
    for name, path in outputs.items():
        manifest.record_output(name, path)
    outputs["manifest"] = manifest.write(out_dir / BaseConfig.MANIFEST_FILE)
    return outputs


def run_attack(spec: SweepSpec, out_dir: Union[str, Path],
               victim: Optional[Victim] = None) -> Dict[str, Path]:
    """
    Runs an entity-swap sweep and writes results, the sweep CSV, the report
    files and the manifest. Nothing is written unless the whole sweep completes.

    Args:
        spec (SweepSpec): The sweep, including corpus, embedding and victim locations.
        out_dir (Union[str, Path]): Output directory.
        victim (Optional[Victim]): A ready victim; otherwise `spec.victim` is resolved.

    Returns:
        Dict[str, Path]: Output name to written path.
    """
    for name in ("corpus", "train_corpus", "embeddings"):
        if not getattr(spec, name):
            raise SweepSpecError(f"The attack needs '{name}'.")
    if victim is None and not spec.victim:
        raise SweepSpecError("The attack needs a victim spec.")
    if spec.header_synonyms and not spec.synonyms:
        raise SweepSpecError("Header synonyms need a synonym embedding file.")

    manifest = RunManifest.for_inputs(
        "attack", spec.to_dict(),
        {
            "corpus": spec.corpus,
            "train_corpus": spec.train_corpus,
            "embeddings": spec.embeddings,
            "synonyms": spec.synonyms if spec.header_synonyms else None,
            "victim_model": victim_input(spec.victim),
        },
        seed=min(spec.seeds),
    )

    test = parse_corpus(spec.corpus, SplitTag.TEST)
    kb = load_attack_kb(test, spec.train_corpus, load_embeddings(spec.embeddings))
    synonyms = load_embeddings(spec.synonyms) if spec.header_synonyms else None
    if victim is None:
        victim = resolve_victim(spec.victim)

    outcome = run_sweep(victim, test, kb, spec, synonyms)
    audit_outcome(outcome, kb)
    return write_outputs(outcome, Path(out_dir), manifest)


def run_header_attack(corpus_path: Union[str, Path], synonyms_path: Union[str, Path],
                      out_dir: Union[str, Path],
                      p_values: Sequence[int] = BaseConfig.DEFAULT_P_VALUES,
                      seeds: Sequence[int] = (BaseConfig.DEFAULT_SEED,),
                      victim_spec: Optional[str] = None,
                      threads: int = BaseConfig.THREADS,
                      victim: Optional[Victim] = None) -> Dict[str, Path]:
    """
    Swaps column names for their nearest synonyms at every p and seed. With a
    victim, the perturbed corpus is also evaluated and reported; without one,
    only the swaps are written.
    """
    config = {"p_values": list(p_values), "seeds": list(seeds), "victim": victim_spec,
              "threads": threads}
    manifest = RunManifest.for_inputs(
        "header-attack", config,
        {"corpus": corpus_path, "synonyms": synonyms_path,
         "victim_model": victim_input(victim_spec)},
        seed=min(seeds),
    )
    test = parse_corpus(corpus_path, SplitTag.TEST)
    synonyms = load_embeddings(synonyms_path)
    out_dir = Path(out_dir)

    if victim is None and victim_spec:
        victim = resolve_victim(victim_spec)
    if victim is None:
        outcome = SweepOutcome(rows=[])
        for p in sorted(set(p_values)):
            for seed in sorted(set(seeds)):
                attack_config = AttackConfig(p=p, seed=seed)
                outcome.header_results.extend(
                    (attack_config, header_synonym_attack(table, attack_config, synonyms))
                    for table in test)
        outputs = {"results": write_results(outcome, out_dir / BaseConfig.RESULTS_FILE)}
    else:
        outcome = run_header_sweep(victim, test, synonyms, p_values, seeds, threads)
        outputs = {
            "results": write_results(outcome, out_dir / BaseConfig.RESULTS_FILE),
            "sweep": write_sweep_csv(outcome.rows, out_dir / BaseConfig.SWEEP_FILE),
        }
        outputs.update(emit_report(outcome.rows, out_dir, outcome.per_class))

    outputs["header_swaps"] = write_header_swaps(outcome, out_dir / BaseConfig.HEADER_SWAPS_FILE)
    for name, path in outputs.items():
        manifest.record_output(name, path)
    outputs["manifest"] = manifest.write(out_dir / BaseConfig.MANIFEST_FILE)
    return outputs
