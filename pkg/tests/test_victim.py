import numpy as np
import pytest

from src import ApplicationManager
from src.modules.evaluation import FixtureSpec, gen_synthetic_corpus
from src.modules.kb import EmbeddingStore, cosine_similarity
from src.modules.table import CellRef, Corpus, Table, column, mask_entity, mask_headers
from src.modules.victim import (
    DegeneratePrototypeError,
    EmptyClassError,
    LogitVector,
    MissingEmbeddingError,
    PredictionSet,
    PrototypeVictim,
    RemoteVictim,
    UnknownClassError,
    VictimConfigError,
    VictimModelError,
    VictimSpecError,
    build_prototype_victim,
    load_prototype_victim,
    resolve_victim,
    save_model,
)


@pytest.fixture
def toy_victim(small_table, toy_store):
    return build_prototype_victim(Corpus([small_table], "train"), toy_store,
                                  header_weight=0.0, threshold=0.5)


def test_classes_are_most_specific_and_sorted(toy_victim):
    assert toy_victim.classes == ("location.country", "tennis.player")
    assert toy_victim.threshold == 0.5


def test_training_column_scores_its_own_prototype(toy_victim, small_table):
    logits = toy_victim.predict_logits(small_table, 0, ["tennis.player", "location.country"])
    assert logits.classes == ("tennis.player", "location.country")
    assert logits.score("tennis.player") == pytest.approx(1.0)
    assert logits.score("location.country") < 0.5
    assert toy_victim.predict_classes(small_table, 0).to_list() == ["tennis.player"]
    assert toy_victim.predict_classes(small_table, 1).to_list() == ["location.country"]


def test_scores_do_not_depend_on_request_order(toy_victim, small_table):
    forward = toy_victim.predict_logits(small_table, 1, ["tennis.player", "location.country"])
    backward = toy_victim.predict_logits(small_table, 1, ["location.country", "tennis.player"])
    assert forward.scores == tuple(reversed(backward.scores))
    single = toy_victim.predict_logits(small_table, 1, ["tennis.player"])
    assert single.scores[0] == forward.scores[0]


def test_header_only_victim_scores_header(small_table, toy_store):
    victim = build_prototype_victim(Corpus([small_table], "train"), toy_store,
                                    header_weight=1.0, threshold=0.5)
    expected = cosine_similarity(toy_store.vector("player"), victim.prototype("tennis.player"))
    assert victim.predict_logits(small_table, 0, ["tennis.player"]).scores[0] == \
        pytest.approx(expected, abs=1e-12)


def test_fully_masked_column_scores_zero(toy_victim, small_table):
    table = mask_headers(small_table)
    for row in range(1, table.n_rows + 1):
        table = mask_entity(table, CellRef(table.table_id, row, 0))
    logits = toy_victim.predict_logits(table, 0, toy_victim.classes)
    assert logits.scores == (0.0, 0.0)
    assert len(toy_victim.predict_classes(table, 0)) == 0


def test_masked_entities_leave_the_weighted_header(small_table, toy_store):
    victim = build_prototype_victim(Corpus([small_table], "train"), toy_store, 0.3, 0.5)
    table = small_table
    for row in range(1, table.n_rows + 1):
        table = mask_entity(table, CellRef(table.table_id, row, 0))
    name = toy_store.vector("player")
    logits = victim.predict_logits(table, 0, victim.classes)
    for entity_class, score in zip(logits.classes, logits.scores):
        assert score == pytest.approx(0.3 * np.dot(victim.prototype(entity_class), name), abs=1e-12)

    solo = Table("solo", ["player"], [["[MASK]"]], {0: ["tennis.player"]})
    assert victim.predict_logits(solo, 0, ["tennis.player"]).scores[0] == pytest.approx(
        0.3 * cosine_similarity(name, victim.prototype("tennis.player")), abs=1e-12)


def test_predicted_classes_threshold_single_class_logits(synthetic, reference_victim):
    for table, j in synthetic.test.annotated_columns():
        expected = {
            c for c in reference_victim.classes
            if reference_victim.predict_logits(table, j, [c]).scores[0] >= reference_victim.threshold
        }
        assert set(reference_victim.predict_classes(table, j).classes) == expected


def test_masking_dissimilar_entities_never_lowers_the_logit():
    fixture = gen_synthetic_corpus(FixtureSpec(dimension=256, noise=0.053))
    store = fixture.embeddings
    victim = build_prototype_victim(fixture.train, store, header_weight=0.0, threshold=0.5)
    checked = 0
    for table, j in fixture.test.annotated_columns():
        entity_class = table.most_specific(j)
        prototype = victim.prototype(entity_class)
        cells = column(table, j)
        cosines = [float(np.dot(prototype, store.vector(surface))) for _, surface in cells]
        before = victim.predict_logits(table, j, [entity_class]).scores[0]
        for (ref, _), cosine in zip(cells, cosines):
            if cosine >= np.mean(cosines):
                continue
            after = victim.predict_logits(mask_entity(table, ref), j, [entity_class]).scores[0]
            assert after >= before
            checked += 1
    assert checked >= 200


def test_unknown_entities_are_skipped_or_fail(small_table, toy_store):
    table = Table("t", ["player"], [["rafael nadal"], ["someone new"]], {0: ["tennis.player"]})
    victim = build_prototype_victim(Corpus([small_table], "train"), toy_store, 0.0, 0.5)
    assert victim.predict_logits(table, 0, ["tennis.player"]).scores[0] > 0.9

    strict = build_prototype_victim(Corpus([small_table], "train"), toy_store, 0.0, 0.5,
                                    missing="fail")
    with pytest.raises(MissingEmbeddingError):
        strict.predict_logits(table, 0, ["tennis.player"])


def test_unknown_and_empty_class_requests(toy_victim, small_table):
    with pytest.raises(UnknownClassError) as excinfo:
        toy_victim.predict_logits(small_table, 0, ["tennis.player", "film.film"])
    assert excinfo.value.classes == ["film.film"]
    with pytest.raises(UnknownClassError):
        toy_victim.predict_logits(small_table, 0, [])


def test_degenerate_prototype():
    store = EmbeddingStore(["up", "down"], np.array([[1.0, 0.0], [-1.0, 0.0]]))
    train = Corpus([Table("t", ["h"], [["up"], ["down"]], {0: ["c"]})], "train")
    with pytest.raises(DegeneratePrototypeError):
        build_prototype_victim(train, store, 0.0, 0.5)


def test_class_without_embedded_entities(toy_store):
    train = Corpus([
        Table("a", ["h"], [["spain"]], {0: ["location.country"]}),
        Table("b", ["h"], [["nobody"]], {0: ["people.person"]}),
    ], "train")
    with pytest.raises(EmptyClassError):
        build_prototype_victim(train, toy_store, 0.0, 0.5)
    with pytest.raises(MissingEmbeddingError):
        build_prototype_victim(train, toy_store, 0.0, 0.5, missing="fail")
    with pytest.raises(EmptyClassError):
        build_prototype_victim(Corpus([Table("x", ["h"], [["spain"]])], "train"), toy_store, 0.0, 0.5)


@pytest.mark.parametrize("header_weight, threshold", [(-0.1, 0.5), (1.5, 0.5), (0.3, 1.0), (0.3, -1.0)])
def test_invalid_parameters(small_table, toy_store, header_weight, threshold):
    with pytest.raises(VictimConfigError):
        build_prototype_victim(Corpus([small_table], "train"), toy_store, header_weight, threshold)


def test_fixture_prototypes_align_with_centroids(synthetic, reference_victim):
    assert len(reference_victim.classes) == 20
    for entity_class, centroid in synthetic.centroids.items():
        assert cosine_similarity(reference_victim.prototype(entity_class), centroid) >= 0.9


def test_save_and_load(tmp_path, synthetic, reference_victim):
    path = save_model(reference_victim, tmp_path / "victim.npz")
    loaded = load_prototype_victim(path)
    assert loaded.classes == reference_victim.classes
    assert loaded.header_weight == reference_victim.header_weight
    assert loaded.threshold == reference_victim.threshold
    for table in list(synthetic.test)[:5]:
        for j in table.annotated_columns:
            assert loaded.predict_logits(table, j, loaded.classes).scores == pytest.approx(
                reference_victim.predict_logits(table, j, loaded.classes).scores, abs=1e-12)


def test_load_rejects_missing_and_foreign_files(tmp_path):
    with pytest.raises(VictimModelError):
        load_prototype_victim(tmp_path / "absent.npz")
    foreign = tmp_path / "foreign.npz"
    with open(foreign, "wb") as f:
        np.savez(f, something=np.zeros(3))
    with pytest.raises(VictimModelError):
        load_prototype_victim(foreign)


def test_resolve_victim(tmp_path, reference_victim):
    path = save_model(reference_victim, tmp_path / "victim.npz")
    assert isinstance(resolve_victim(f"prototype:{path}"), PrototypeVictim)

    remote = resolve_victim("http:127.0.0.1:5000")
    assert isinstance(remote, RemoteVictim)
    assert remote.endpoint == "http://127.0.0.1:5000"
    assert resolve_victim("http://example.org/victim/").endpoint == "http://example.org/victim"

    for spec in ("prototype", "prototype:", "ftp:somewhere"):
        with pytest.raises(VictimSpecError):
            resolve_victim(spec)


def test_application_manager_loads_victim_once(tmp_path, reference_victim):
    path = save_model(reference_victim, tmp_path / "victim.npz")
    manager = ApplicationManager(f"prototype:{path}")
    victim = manager.get_victim()
    assert isinstance(victim, PrototypeVictim)
    assert victim.classes == reference_victim.classes
    assert manager.get_victim() is victim

    with pytest.raises(RuntimeError):
        ApplicationManager("").get_victim()


def test_logit_vector_and_prediction_set():
    with pytest.raises(ValueError):
        LogitVector(("a", "b"), (0.1,))
    with pytest.raises(ValueError):
        LogitVector(("a",), (float("nan"),))
    predicted = PredictionSet({"b", "a"})
    assert list(predicted) == ["a", "b"]
    assert "a" in predicted
    assert predicted.isdisjoint(PredictionSet({"c"}))
