import pytest

from src.modules.evaluation import FixtureSpec, gen_synthetic_corpus
from src.modules.kb import CountMode, KBError, LeakageReport, LeakageRow, leakage_report, overlap_pct
from src.modules.table import Corpus, Table


def _column_table(table_id, entity_class, cells):
    return Table(table_id, ["h"], [[c] for c in cells], {0: [entity_class]})


@pytest.fixture
def mention_corpora():
    train = Corpus([
        _column_table("r1", "person", ["ann", "bob"]),
        _column_table("r2", "city", ["paris"]),
    ], "train")
    test = Corpus([
        _column_table("s1", "person", ["ann", "ann", "cyd"]),
        _column_table("s2", "person", ["ann", "dee"]),
        _column_table("s3", "city", ["rome", "oslo"]),
    ], "test")
    return train, test


def test_overlap_pct_matches_published_counts():
    assert overlap_pct(29215, 47852) == pytest.approx(61.0, abs=0.05)
    assert overlap_pct(47852, 47852) == 100.0
    assert overlap_pct(0, 10) == 0.0


def test_unique_and_mention_modes(mention_corpora):
    train, test = mention_corpora
    unique = leakage_report(train, test, CountMode.UNIQUE)
    mention = leakage_report(train, test, "mention")
    assert unique.classes == mention.classes == ["person", "city"]
    assert unique.row("person") == LeakageRow("person", 3, 1, 33.3)
    assert mention.row("person") == LeakageRow("person", 5, 3, 60.0)
    assert unique.row("city").overlap == 0
    assert unique.row("city").pct == 0.0


def test_class_absent_from_train(mention_corpora):
    train, test = mention_corpora
    extra = Corpus(list(test) + [_column_table("s4", "river", ["nile"])], "test")
    row = leakage_report(train, extra).row("river")
    assert (row.total, row.overlap, row.pct) == (1, 0, 0.0)


def test_full_overlap_reports_hundred():
    train = Corpus([_column_table("r", "award", ["oscar", "emmy"])], "train")
    test = Corpus([_column_table("s", "award", ["emmy", "oscar"])], "test")
    assert leakage_report(train, test).row("award").pct == 100.0


def test_planted_fixture_overlap():
    spec = FixtureSpec(n_classes=2, entities_per_class=1000, columns=200, train_columns=200,
                       overlap_fraction=0.61, overlap_overrides={"location.location": 1.0},
                       dimension=8)
    fixture = gen_synthetic_corpus(spec)
    report = leakage_report(fixture.train, fixture.test)
    assert report.row("people.person").pct == 61.0
    assert report.row("people.person").overlap == 610
    assert report.row("location.location").pct == 100.0


def test_write_csv(tmp_path, mention_corpora):
    train, test = mention_corpora
    path = leakage_report(train, test).write_csv(tmp_path / "leakage.csv")
    assert path.read_text(encoding="utf-8") == (
        "class,total,overlap,pct\n"
        "person,3,1,33.3\n"
        "city,2,0,0.0\n"
    )


def test_rows_reject_impossible_overlap():
    with pytest.raises(KBError):
        LeakageRow("c", 1, 2, 200.0)
    assert LeakageReport((), CountMode.UNIQUE).classes == []


def test_small_overlap_is_truncated_but_kept_in_csv(tmp_path):
    assert overlap_pct(1, 3000) == 0.0
    path = LeakageReport(
        (LeakageRow("rare", 3000, 1, overlap_pct(1, 3000)),
         LeakageRow("clean", 3000, 0, overlap_pct(0, 3000))),
        CountMode.UNIQUE,
    ).write_csv(tmp_path / "leakage.csv")
    assert path.read_text(encoding="utf-8").splitlines()[1:] == [
        "rare,3000,1,0.0",
        "clean,3000,0,0.0",
    ]
