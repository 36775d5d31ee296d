import logging
from pathlib import Path
from typing import Union

from src.modules.kb import CountMode, LeakageReport, leakage_report
from src.modules.table import CorpusError, SplitTag, parse_corpus
from src.utils.manifest import RunManifest

logger = logging.getLogger(__name__)


def manifest_path(out_path: Union[str, Path]) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(f"{out_path.stem}.manifest.yaml")


def run_leakage_audit(train_path: Union[str, Path], test_path: Union[str, Path],
                      out_path: Union[str, Path],
                      mode: Union[str, CountMode] = CountMode.UNIQUE) -> LeakageReport:
    """
    Writes the per-class train/test entity overlap of two corpora as CSV, with
    its manifest next to it.

    Args:
        train_path (Union[str, Path]): Training corpus file.
        test_path (Union[str, Path]): Test corpus file.
        out_path (Union[str, Path]): CSV destination.
        mode (Union[str, CountMode]): Count distinct entities or every mention.

    Returns:
        LeakageReport: The report that was written.

    Raises:
        CorpusError: If a corpus cannot be parsed or the test corpus is empty.
    """
    mode = CountMode(mode)
    manifest = RunManifest.for_inputs(
        "audit-leakage", {"mode": mode}, {"train": train_path, "test": test_path})

    train = parse_corpus(train_path, SplitTag.TRAIN)
    test = parse_corpus(test_path, SplitTag.TEST)
    if len(test) == 0:
        raise CorpusError(f"Test corpus {test_path} is empty.")

    report = leakage_report(train, test, mode)
    path = report.write_csv(out_path)
    manifest.record_output("leakage", path)
    manifest.write(manifest_path(path))
    logger.info("Wrote leakage report for %d classes to %s.", len(report.rows), path)
    return report
