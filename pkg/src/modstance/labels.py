"""Stance vote normalization: raw bolded vote strings to the 4-way label set."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DuplicateVariant, MissingLexicon

STANCE_LABELS = ("comment", "delete", "keep", "merge")

LANGUAGES = ("en", "de", "tr")

# Intensity prefixes stripped before lexicon lookup ("Speedy keep" -> "keep").
QUALIFIERS = ("speedy", "strong", "weak", "schnell", "hızlı")

# Reason codes for votes that do not survive normalization.
DISCARD_NO_VOTE = "no_vote"
DISCARD_UNKNOWN = "unknown_token"
DISCARD_AMBIGUOUS = "ambiguous"

_COMBINING_DOT = "̇"
_TRIM_CHARS = " \t\r\n'\"`*_:;.,!?()[]{}<>|~-—–"


@dataclass(frozen=True)
class Discard:
    """Marker for a vote that was dropped, with the reason why."""

    reason: str


@dataclass(frozen=True)
class StanceLexicon:
    language: str
    variants: dict  # lowercased surface -> canonical label

    def canonical_surfaces(self) -> dict:
        """First-listed surface per label (the language's canonical spellings)."""
        seen = {}
        for surface, label in self.variants.items():
            seen.setdefault(label, surface)
        return seen


def turkish_lower(text: str) -> str:
    """Lowercase with Turkish dotted/dotless i rules.

    Also strips the combining dot that str.lower() leaves behind on 'İ', so
    text that was already lowercased naively still folds to the same form.
    """
    folded = text.replace("İ", "i").replace("I", "ı").lower()
    return unicodedata.normalize("NFC", folded.replace("i" + _COMBINING_DOT, "i"))


def fold_case(text: str, language: str) -> str:
    if language == "tr":
        return turkish_lower(text)
    return text.lower()


def _default_lexicon_path() -> Path:
    return Path(resources.files("modstance").joinpath("data/stance_lexicon.tsv"))


def load_lexicon(language: str, path: Path | None = None) -> StanceLexicon:
    """Load the shipped vote lexicon for one language.

    File format: tab-separated ``language, surface, label`` rows, UTF-8,
    ``#`` comment lines. Raises MissingLexicon when the file or language is
    absent, DuplicateVariant when a surface maps to two labels.
    """
    path = Path(path) if path is not None else _default_lexicon_path()
    if not path.exists():
        raise MissingLexicon(f"lexicon file not found: {path}")
    variants: dict = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != 3:
            raise MissingLexicon(f"{path}:{lineno}: expected 3 tab-separated columns")
        lang, surface, label = parts
        if lang != language:
            continue
        if label not in STANCE_LABELS:
            raise MissingLexicon(f"{path}:{lineno}: unknown label {label!r}")
        surface = fold_case(surface, language)
        if surface in variants and variants[surface] != label:
            raise DuplicateVariant(f"{path}:{lineno}: {surface!r} mapped to both "
                                   f"{variants[surface]!r} and {label!r}")
        variants[surface] = label
    if not variants:
        raise MissingLexicon(f"no lexicon rows for language {language!r} in {path}")
    return StanceLexicon(language=language, variants=variants)


def _strip_qualifiers(token: str) -> str:
    changed = True
    while changed:
        changed = False
        for qualifier in QUALIFIERS:
            if token.startswith(qualifier + " "):
                token = token[len(qualifier) + 1:].strip()
                changed = True
    return token


def _distinct_labels_mentioned(text: str, lexicon: StanceLexicon) -> set:
    """Labels whose variants occur as whole words inside the vote string."""
    words = text.split()
    found = set()
    for surface, label in lexicon.variants.items():
        if " " in surface:
            if f" {surface} " in f" {text} ":
                found.add(label)
        elif surface in words:
            found.add(label)
    return found


def normalize_stance(vote_raw, language: str, lexicon: StanceLexicon | None = None):
    """Map a raw vote string to one of the four labels, or a Discard.

    Pipeline: lowercase (Turkish-aware for tr), trim punctuation and
    whitespace, strip qualifier prefixes, then exact-match against the
    lexicon. A missing vote, an unknown token, or a token naming two
    different labels each discard with their own reason code. Never raises
    on arbitrary input.
    """
    if lexicon is None:
        lexicon = load_lexicon(language)
    if vote_raw is None:
        return Discard(DISCARD_NO_VOTE)
    token = fold_case(str(vote_raw), language).strip(_TRIM_CHARS)
    token = " ".join(token.split())
    token = _strip_qualifiers(token)
    if not token:
        return Discard(DISCARD_NO_VOTE)
    label = lexicon.variants.get(token)
    if label is not None:
        return label
    if len(_distinct_labels_mentioned(token, lexicon)) >= 2:
        return Discard(DISCARD_AMBIGUOUS)
    return Discard(DISCARD_UNKNOWN)
