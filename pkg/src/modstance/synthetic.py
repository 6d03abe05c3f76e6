"""Synthetic evaluation data.

The full corpora cannot be rebuilt inside CI (no live wiki access), so the
acceptance suite runs against synthetic stand-ins: label sets matched to the
published per-language distributions, a seeded comment generator with
stance-bearing phrasing, and an alignment fixture with the published
registry sizes. Everything here is deterministic given the seed.
"""

from __future__ import annotations

import random

from .corpus import CorpusRecord, SplitPlan, assign_splits, record_id
from .policies import PolicyRegistry

# Published per-language stance label counts for the full corpora.
STANCE_COUNTS = {
    "en": {"comment": 30974, "delete": 279063, "keep": 108273, "merge": 19460},
    "de": {"comment": 395, "delete": 4805, "keep": 3394, "merge": 43},
    "tr": {"comment": 224, "delete": 433, "keep": 252, "merge": 21},
}

# Test-split sizes and policy registry sizes per language.
TEST_SIZES = {"en": 43776, "de": 862, "tr": 202}
REGISTRY_SIZES = {"en": 94, "de": 48, "tr": 33}

# Share of the most-cited policy (notability) in each test distribution.
NOTABILITY_SHARE = {"en": 0.55, "de": 0.45, "tr": 0.62}

NOTABILITY_TITLES = {
    "en": "Wikipedia:Notability",
    "de": "Wikipedia:Relevanzkriterien",
    "tr": "Vikipedi:Kayda değerlik",
}


def stance_proportions(language: str) -> dict:
    counts = STANCE_COUNTS[language]
    total = sum(counts.values())
    return {label: count / total for label, count in counts.items()}


def largest_remainder(proportions: dict, n: int) -> dict:
    """Integer counts summing to n, closest to the target proportions."""
    floors = {}
    remainders = []
    for label in sorted(proportions):
        exact = proportions[label] * n
        floors[label] = int(exact)
        remainders.append((exact - int(exact), label))
    leftover = n - sum(floors.values())
    for _, label in sorted(remainders, key=lambda rl: (-rl[0], rl[1]))[:leftover]:
        floors[label] += 1
    return floors


def make_stance_labels(language: str, n: int) -> list:
    """Gold stance labels matching the published distribution exactly."""
    counts = largest_remainder(stance_proportions(language), n)
    labels = []
    for label in sorted(counts):
        labels.extend([label] * counts[label])
    return labels


def policy_label_space(language: str) -> list:
    """Registry-sized policy label list headed by the notability title."""
    size = REGISTRY_SIZES[language]
    head = NOTABILITY_TITLES[language]
    return [head] + [f"{head} fixture {i:03d}" for i in range(1, size)]


def make_policy_labels(language: str, n: int) -> list:
    """Gold policy labels with the notability share of the test distribution.

    The non-notability mass decays geometrically over the remaining registry
    titles; the exact tail shape is irrelevant to the majority and random
    baselines, which depend only on the head share and the registry size.
    """
    space = policy_label_space(language)
    share = NOTABILITY_SHARE[language]
    rest = len(space) - 1
    weights = [0.85 ** i for i in range(rest)]
    scale = (1.0 - share) / sum(weights)
    proportions = {space[0]: share}
    for i, title in enumerate(space[1:]):
        proportions[title] = weights[i] * scale
    counts = largest_remainder(proportions, n)
    labels = []
    for title in space:
        labels.extend([title] * counts.get(title, 0))
    return labels


# Stance-bearing phrase pools. The delete pool deliberately carries the
# "not enough" bigram and the "fails" token as its strongest cues.
_CUES = {
    "en": {
        "delete": [
            ("fails the bar by a wide margin", "Wikipedia:Notability"),
            ("not enough sources to establish anything", "Wikipedia:Verifiability"),
            ("not enough independent coverage out there", "Wikipedia:Notability"),
            ("blatant advertising for a minor outfit", "Wikipedia:What Wikipedia is not"),
            ("per nom, the sourcing is thin", "Wikipedia:Notability"),
            ("no reliable coverage that I can find", "Wikipedia:Reliable sources"),
            ("fails every inclusion test we have", "Wikipedia:Notability"),
            ("reads like an advertisement front to back", "Wikipedia:What Wikipedia is not"),
        ],
        "keep": [
            ("clearly passes with the award coverage", "Wikipedia:Notability"),
            ("easily passes given the national press", "Wikipedia:Notability"),
            ("plenty of reliable coverage in the archives", "Wikipedia:Reliable sources"),
            ("well sourced and plainly significant", "Wikipedia:Verifiability"),
            ("meets the inclusion criteria comfortably", "Wikipedia:Notability"),
            ("significant coverage in two broadsheets", "Wikipedia:Notability"),
        ],
        "comment": [
            ("question for the nominator about the second source", "Wikipedia:Verifiability"),
            ("can you clarify which criterion applies here", "Wikipedia:Notability"),
            ("neutral for now, waiting on better sources", "Wikipedia:Reliable sources"),
            ("procedural note, the page moved yesterday", "Wikipedia:What Wikipedia is not"),
            ("no opinion yet, the history is confusing", "Wikipedia:Verifiability"),
        ],
        "merge": [
            ("merge into the parent article where context exists", "Wikipedia:Notability"),
            ("redirect to the main topic instead", "Wikipedia:What Wikipedia is not"),
            ("better covered inside the series article", "Wikipedia:Notability"),
            ("move the salvageable parts and redirect", "Wikipedia:Verifiability"),
        ],
    },
    "de": {
        "delete": [("erfüllt die Kriterien nirgends", "Wikipedia:Relevanzkriterien"),
                   ("reine Werbung ohne Substanz", "Wikipedia:Was Wikipedia nicht ist")],
        "keep": [("erfüllt die Kriterien eindeutig", "Wikipedia:Relevanzkriterien"),
                 ("ausreichend belegt und relevant", "Wikipedia:Belege")],
        "comment": [("sieben Tage abwarten, Quellenlage offen", "Wikipedia:Belege")],
        "merge": [("in den Hauptartikel einarbeiten", "Wikipedia:Relevanzkriterien")],
    },
    "tr": {
        "delete": [("kriterleri hiçbir şekilde karşılamıyor", "Vikipedi:Kayda değerlik")],
        "keep": [("kriterlere net bir şekilde uyuyor", "Vikipedi:Kayda değerlik")],
        "comment": [("kaynaklar hakkında bir soru soracağım", "Vikipedi:Doğrulanabilirlik")],
        "merge": [("ana maddeye aktarılması daha iyi olur", "Vikipedi:Kayda değerlik")],
    },
}

_FILLERS = {
    "en": ["after a quick search", "for what it is worth", "looking at the edit history",
           "as discussed above", "having skimmed the article", "judging by the current revision"],
    "de": ["nach kurzer Suche", "nach Durchsicht der Versionsgeschichte"],
    "tr": ["kısa bir aramadan sonra", "geçmişe bakınca"],
}

_TOPIC_PARTS = {
    "en": (["Northfield", "Harbor Lane", "Crestwood", "Eastgate", "Silver Creek",
            "Maple Row", "Down Valley", "Kings Mill", "Red Fen", "West Quay"],
           ["Bakery", "Quartet", "Festival", "Railway Halt", "Society", "Grammar School",
            "Football Club", "Radio Hour", "Art Prize", "Boat Race"]),
    "de": (["Nordfeld", "Hafenweg", "Lindenhof", "Osttor"],
           ["Bäckerei", "Quartett", "Gesellschaft", "Ruderverein"]),
    "tr": (["Kuzeytepe", "Limanyolu", "Doğukapı", "Gümüşdere"],
           ["Korosu", "Topluluğu", "Derneği", "Okulu"]),
}


def make_stance_corpus(language: str, n: int, seed: int = 0,
                       plan: SplitPlan | None = None) -> list:
    """Seeded synthetic corpus with learnable stance (and policy) signal.

    Stance proportions follow the published distribution; each comment is a
    stance cue plus neutral filler, and each cue carries a plausible policy
    citation label. Splits come from the standard deterministic plan.
    """
    rng = random.Random(seed)
    stances = make_stance_labels(language, n)
    rng.shuffle(stances)
    cues = _CUES[language]
    fillers = _FILLERS[language]
    firsts, seconds = _TOPIC_PARTS[language]

    policy_space = sorted({policy for pool in cues.values() for _, policy in pool})
    policy_ids = {policy: i for i, policy in enumerate(policy_space)}

    records = []
    for i, stance in enumerate(stances):
        cue, policy = rng.choice(cues[stance])
        extra = rng.sample(fillers, k=min(2, len(fillers)))
        parts = [extra[0], cue] + extra[1:]
        if rng.random() < 0.5:
            parts = [cue] + extra
        comment = ", ".join(parts) + "."
        article = f"{rng.choice(firsts)} {rng.choice(seconds)} {i:05d}"
        if language == "de":
            topic = f"Löschung von {article}"
        elif language == "tr":
            topic = f"{article}'nin silinmesi"
        else:
            topic = f"Deletion of {article}"
        records.append(CorpusRecord(
            id=record_id(language, article, i),
            lang=language,
            topic=topic,
            comment=comment,
            stance=stance,
            policy=policy,
            policy_superset_id=policy_ids[policy],
            split="train",
        ))
    plan = plan or SplitPlan(seed=seed, tr_min_test=2 if language == "tr" else 200)
    return assign_splits(records, plan)


def make_alignment_fixture():
    """Registries with the published sizes plus interwiki links that identify
    exactly 59 titles across languages (25 three-way and 9 two-way ties)."""
    titles = {
        "en": ["Wikipedia:Notability"] + [f"Wikipedia:EN Policy {i:03d}" for i in range(1, 94)],
        "de": ["Wikipedia:Relevanzkriterien"] + [f"Wikipedia:DE Richtlinie {i:03d}" for i in range(1, 48)],
        "tr": ["Vikipedi:Kayda değerlik"] + [f"Vikipedi:TR Politika {i:03d}" for i in range(1, 33)],
    }
    registries = [
        PolicyRegistry(language=lang, canonical=set(names), redirect_map={},
                       merge_map={}, counts={name: 1 for name in names}, min_count=1)
        for lang, names in titles.items()
    ]
    edges = set()
    for i in range(25):  # three-way components
        en, de, tr = titles["en"][i], titles["de"][i], titles["tr"][i]
        edges.add((("en", en), ("de", de)))
        edges.add((("de", de), ("tr", tr)))
    for i in range(25, 34):  # two-way en/de components
        edges.add((("en", titles["en"][i]), ("de", titles["de"][i])))
    return registries, edges
