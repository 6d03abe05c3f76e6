import pytest
from hypothesis import given
from hypothesis import strategies as st

from modstance.errors import DuplicateVariant, MissingLexicon
from modstance.labels import (STANCE_LABELS, Discard, load_lexicon,
                              normalize_stance, turkish_lower)


@pytest.fixture(scope="module")
def lexicons():
    return {lang: load_lexicon(lang) for lang in ("en", "de", "tr")}


def test_lexicon_covers_published_variant_tables(lexicons):
    assert lexicons["en"].variants["oppose"] == "keep"
    assert lexicons["en"].variants["support"] == "delete"
    assert lexicons["en"].variants["relist"] == "merge"
    assert lexicons["en"].variants["no vote"] == "comment"
    assert lexicons["de"].variants["7 tage"] == "comment"
    assert lexicons["de"].variants["hinfort"] == "delete"
    assert lexicons["de"].variants["weiterleitung"] == "merge"
    assert lexicons["tr"].variants["birleştirilsin"] == "merge"
    assert lexicons["tr"].variants["silinmeli"] == "delete"
    assert lexicons["tr"].variants["geçersiz"] == "comment"


def test_missing_language_raises(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("en\tkeep\tkeep\n", encoding="utf-8")
    with pytest.raises(MissingLexicon):
        load_lexicon("de", path)


def test_duplicate_variant_raises(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("en\tkeep\tkeep\nen\tkeep\tdelete\n", encoding="utf-8")
    with pytest.raises(DuplicateVariant):
        load_lexicon("en", path)


@pytest.mark.parametrize("raw,language,expected", [
    ("behalten", "de", "keep"),
    ("delete", "en", "delete"),
    ("Speedy keep", "en", "keep"),
    ("silinmeli", "tr", "delete"),
    ("Strong Delete", "en", "delete"),
    ("'''Merge'''", "en", "merge"),
    ("redirect", "en", "merge"),
    ("Hızlı silinsin", "tr", "delete"),
    ("schnell löschen", "de", "delete"),
])
def test_normalize_known_votes(raw, language, expected, lexicons):
    assert normalize_stance(raw, language, lexicons[language]) == expected


def test_ambiguous_vote_discarded(lexicons):
    result = normalize_stance("keep or delete", "en", lexicons["en"])
    assert result == Discard("ambiguous")


def test_missing_vote_discarded(lexicons):
    assert normalize_stance(None, "en", lexicons["en"]) == Discard("no_vote")
    assert normalize_stance("   ", "en", lexicons["en"]) == Discard("no_vote")


def test_unknown_vote_discarded(lexicons):
    assert normalize_stance("wibble", "en", lexicons["en"]) == Discard("unknown_token")


def test_same_label_twice_is_not_ambiguous(lexicons):
    # both variants map to merge, so nothing contradicts; still no exact match
    assert normalize_stance("merge or redirect", "en", lexicons["en"]) == \
        Discard("unknown_token")


@pytest.mark.parametrize("language,canonical", [
    ("en", {"keep": "keep", "delete": "delete", "merge": "merge", "comment": "comment"}),
    ("de", {"keep": "behalten", "delete": "löschen", "merge": "verschieben",
            "comment": "7 tage"}),
    ("tr", {"keep": "kalsın", "delete": "silinsin", "merge": "aktarılsın",
            "comment": "yorum"}),
])
def test_canonical_strings_are_fixed_points(language, canonical, lexicons):
    surfaces = lexicons[language].canonical_surfaces()
    assert surfaces == canonical
    for label, surface in canonical.items():
        assert normalize_stance(surface, language, lexicons[language]) == label


def test_turkish_case_folding():
    assert turkish_lower("SİLİNSİN") == "silinsin"
    assert turkish_lower("KALSIN") == "kalsın"
    # repairs naive str.lower() which leaves a combining dot after 'i'
    assert turkish_lower("İstanbul".lower()) == "istanbul"
    assert normalize_stance("SİL", "tr") == "delete"


@given(st.text(max_size=60))
def test_normalize_total_on_arbitrary_input(text):
    result = normalize_stance(text, "en")
    assert result in STANCE_LABELS or isinstance(result, Discard)
