import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

from marshmallow import (
    EXCLUDE,
    Schema,
    ValidationError,
    fields,
    post_load,
    validate,
    validates_schema,
)

from src.modules import InputError
from src.modules.table.typing import MASK_TOKEN, Table, TableError, from_record, to_record

logger = logging.getLogger(__name__)


class SplitTag(str, Enum):
    TRAIN = "train"
    TEST = "test"


class CorpusError(InputError):
    pass


class CorpusParseError(CorpusError):
    """
    Raised when one or more corpus lines fail validation.

    Attributes:
        path (str): The offending file.
        problems (List[str]): One diagnostic per rejected line, prefixed with its line number.
    """

    def __init__(self, path: Union[str, Path], problems: List[str]):
        self.path = str(path)
        self.problems = problems
        shown = "; ".join(problems[:5])
        more = f" (and {len(problems) - 5} more)" if len(problems) > 5 else ""
        super().__init__(f"Corpus {self.path} rejected: {shown}{more}")


class TableRecordSchema(Schema):
    allow_mask = False

    class Meta:
        unknown = EXCLUDE

    table_id = fields.String(required=True, validate=validate.Length(min=1))
    headers = fields.List(fields.String(), required=True,
                          validate=validate.Length(min=1))
    rows = fields.List(fields.List(fields.String()), required=True,
                       validate=validate.Length(min=1))
    annotations = fields.Dict(
        keys=fields.String(),
        values=fields.List(fields.String(), validate=validate.Length(min=1)),
        load_default=dict,
    )

    @validates_schema
    def check_shape(self, data, **kwargs):
        m = len(data["headers"])
        for i, row in enumerate(data["rows"], start=1):
            if len(row) != m:
                raise ValidationError(
                    f"row {i} has {len(row)} cells, expected {m}", "rows")
            if not self.allow_mask and MASK_TOKEN in row:
                raise ValidationError(
                    f"row {i} contains the reserved value {MASK_TOKEN}", "rows")
        for key, classes in data["annotations"].items():
            if not key.isdigit() or not 0 <= int(key) < m:
                raise ValidationError(
                    f"column index {key!r} is outside [0, {m})", "annotations")
            if len(set(classes)) != len(classes):
                raise ValidationError(
                    f"column {key} repeats a class", "annotations")

    @post_load
    def make_table(self, data, **kwargs) -> Table:
        try:
            return from_record(data)
        except TableError as e:
            raise ValidationError(e.message)


class WireTableSchema(TableRecordSchema):
    """Table records sent to a victim, where masked cells are expected."""
    allow_mask = True


@dataclass(frozen=True)
class Corpus:
    tables: Tuple[Table, ...]
    split_tag: SplitTag

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(self.tables))
        object.__setattr__(self, "split_tag", SplitTag(self.split_tag))
        seen = set()
        for table in self.tables:
            if table.table_id in seen:
                raise CorpusError(
                    f"Duplicate table id '{table.table_id}' in {self.split_tag.value} corpus.")
            seen.add(table.table_id)

    def __len__(self) -> int:
        return len(self.tables)

    def __iter__(self) -> Iterator[Table]:
        return iter(self.tables)

    def get(self, table_id: str) -> Optional[Table]:
        for table in self.tables:
            if table.table_id == table_id:
                return table
        return None

    def annotated_columns(self) -> List[Tuple[Table, int]]:
        return [(table, j) for table in self.tables for j in table.annotated_columns]


def parse_corpus(path: Union[str, Path], split_tag: Union[str, SplitTag]) -> Corpus:
    """
    Parses a line-delimited corpus file, one table record per line.

    Every malformed line is collected before failing, so a single run reports
    all of them with their line numbers.

    Args:
        path (Union[str, Path]): The corpus file.
        split_tag (Union[str, SplitTag]): Which split the corpus represents.

    Returns:
        Corpus: The parsed tables in file order.

    Raises:
        CorpusError: If the file cannot be read.
        CorpusParseError: If any line is not a well-formed table record.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusError(f"Cannot read corpus {path}: {e}")

    schema = TableRecordSchema()
    tables: List[Table] = []
    problems: List[str] = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            problems.append(f"line {lineno}: invalid JSON ({e.msg})")
            continue
        try:
            table = schema.load(record)
        except ValidationError as e:
            problems.append(f"line {lineno}: {e.messages}")
            continue
        if table.table_id in seen:
            problems.append(
                f"line {lineno}: duplicate table id '{table.table_id}'")
            continue
        seen.add(table.table_id)
        tables.append(table)

    if problems:
        for problem in problems:
            logger.error("%s %s", path, problem)
        raise CorpusParseError(path, problems)

    logger.info("Parsed %d tables from %s.", len(tables), path)
    return Corpus(tables, SplitTag(split_tag))


def serialize_corpus(corpus: Corpus, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for table in corpus:
            f.write(json.dumps(to_record(table), ensure_ascii=False) + "\n")
    return path


def load_table_record(record, allow_mask: bool = True) -> Table:
    """
    Validates a single table record, as received over the wire.

    Raises:
        TableError: If the record is malformed.
    """
    schema = WireTableSchema() if allow_mask else TableRecordSchema()
    try:
        return schema.load(record)
    except ValidationError as e:
        raise TableError(f"Invalid table record: {e.messages}")
