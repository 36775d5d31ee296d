import pytest

from src.modules.attack import AttackConfig, header_synonym_attack
from src.modules.table import MASK_TOKEN, Table


def _wide_table(names, table_id="wide"):
    return Table(table_id, list(names), [[f"cell {j}" for j in range(len(names))]],
                 {j: ["c"] for j in range(len(names))})


def test_full_header_attack_uses_planted_synonyms(synthetic):
    table = next(iter(synthetic.test))
    result = header_synonym_attack(table, AttackConfig(p=100), synthetic.synonyms)
    assert result.selected == (0, 1)
    assert result.skips == 0
    for swap in result.swaps:
        entity_class = table.most_specific(swap.column)
        assert (swap.original, swap.replacement) == synthetic.headers[entity_class]
    assert result.adversarial_table.cells == table.cells
    assert result.adversarial_table.annotations == table.annotations


def test_every_planted_pair(synthetic):
    names = [name for name, _ in synthetic.headers.values()]
    result = header_synonym_attack(_wide_table(names), AttackConfig(p=100), synthetic.synonyms)
    expected = {name: synonym for name, synonym in synthetic.headers.values()}
    assert {s.original: s.replacement for s in result.swaps} == expected


def test_selection_size(synthetic):
    names = [name for name, _ in list(synthetic.headers.values())[:10]]
    result = header_synonym_attack(_wide_table(names), AttackConfig(p=20, seed=4), synthetic.synonyms)
    assert len(result.selected) == 2
    assert len(result.swaps) == 2
    changed = [j for j in range(10) if result.adversarial_table.headers[j] != names[j]]
    assert changed == list(result.selected)


def test_unknown_and_masked_headers_are_skipped(synthetic):
    table = _wide_table(["person", "no such header", MASK_TOKEN])
    result = header_synonym_attack(table, AttackConfig(p=100), synthetic.synonyms)
    assert result.skips == 2
    assert [s.column for s in result.swaps] == [0]
    assert result.adversarial_table.headers[1:] == ("no such header", MASK_TOKEN)


@pytest.mark.parametrize("allow_duplicates", [False, True])
def test_repeated_headers(synthetic, allow_duplicates):
    table = _wide_table(["person", "person"])
    config = AttackConfig(p=100, allow_duplicates=allow_duplicates)
    replacements = [s.replacement for s in header_synonym_attack(table, config, synthetic.synonyms).swaps]
    assert replacements[0] == "individual"
    assert (replacements[1] == "individual") is allow_duplicates


def test_selection_depends_on_seed_only(synthetic):
    names = [name for name, _ in synthetic.headers.values()]
    table = _wide_table(names)
    first = header_synonym_attack(table, AttackConfig(p=30, seed=1), synthetic.synonyms)
    again = header_synonym_attack(table, AttackConfig(p=30, seed=1), synthetic.synonyms)
    assert first == again
    assert first.to_record()["selected"] == list(first.selected)
