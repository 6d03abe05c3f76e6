import pytest

from modstance.errors import ConfigError, CycleDetected
from modstance.policies import (Curation, PolicyPage, PolicyRegistry, build_merge_map,
                                build_registry, canonicalize, filter_infrequent,
                                load_curation, load_registry, select_primary_policy)


def _registry():
    return PolicyRegistry(
        language="en",
        canonical={"Wikipedia:Notability", "Wikipedia:Verifiability"},
        redirect_map={
            "WP:NOTE": "Wikipedia:Notability",
            "WP:V": "Wikipedia:Verifiability",
            "WP:NM": "Wikipedia:Notability (music)",
            "Wikipedia:Notability": "Wikipedia:Notability",
            "Wikipedia:Verifiability": "Wikipedia:Verifiability",
            "Wikipedia:Notability (music)": "Wikipedia:Notability (music)",
        },
        merge_map={"Wikipedia:Notability (music)": "Wikipedia:Notability"},
        counts={"Wikipedia:Notability": 150, "Wikipedia:Verifiability": 30},
        min_count=10,
    )


def test_canonicalize_shortcut():
    assert canonicalize("WP:NOTE", _registry()) == "Wikipedia:Notability"


def test_canonicalize_fixed_point():
    assert canonicalize("Wikipedia:Notability", _registry()) == "Wikipedia:Notability"


def test_canonicalize_sub_policy_merges_into_parent():
    registry = _registry()
    assert canonicalize("Wikipedia:Notability (music)", registry) == "Wikipedia:Notability"
    assert canonicalize("WP:NM", registry) == "Wikipedia:Notability"


def test_canonicalize_unknown_and_fragment():
    registry = _registry()
    assert canonicalize("WP:MADEUP", registry) is None
    assert canonicalize("WP:NOTE#History", registry) == "Wikipedia:Notability"


def test_canonicalize_idempotent():
    registry = _registry()
    for raw in ("WP:NOTE", "WP:NM", "Wikipedia:Verifiability"):
        once = canonicalize(raw, registry)
        assert canonicalize(once, registry) == once


def test_build_merge_map_requires_link_and_curation():
    pages = [
        PolicyPage("Wikipedia:Notability (music)", "en",
                   "Subtopic of [[Wikipedia:Notability]].", True),
        PolicyPage("Wikipedia:Notability", "en", "The main page.", True),
        PolicyPage("Wikipedia:Orphan", "en", "No parent link here.", True),
    ]
    merges = {
        "Wikipedia:Notability (music)": "Wikipedia:Notability",
        "Wikipedia:Orphan": "Wikipedia:Notability",  # curated but unlinked
    }
    out = build_merge_map(pages, merges)
    assert out == {"Wikipedia:Notability (music)": "Wikipedia:Notability"}


def test_build_merge_map_flattens_chains():
    pages = [
        PolicyPage("A", "en", "child of [[B]]", True),
        PolicyPage("B", "en", "child of [[C]]", True),
        PolicyPage("C", "en", "the root", True),
    ]
    out = build_merge_map(pages, {"A": "B", "B": "C"})
    assert out == {"A": "C", "B": "C"}


def test_build_merge_map_cycle_detected():
    pages = [
        PolicyPage("A", "en", "links [[B]]", True),
        PolicyPage("B", "en", "links [[A]]", True),
    ]
    with pytest.raises(CycleDetected):
        build_merge_map(pages, {"A": "B", "B": "A"})


def test_filter_infrequent():
    assert filter_infrequent({"Notability": 150, "X": 99}, 100) == {"Notability"}
    assert filter_infrequent({}, 10) == set()
    assert filter_infrequent({"A": 100}, 100) == {"A"}
    with pytest.raises(ConfigError):
        filter_infrequent({"A": 1}, 0)


def test_select_primary_policy():
    assert select_primary_policy(
        ["Wikipedia:Notability", "Wikipedia:Verifiability"]) == "Wikipedia:Notability"
    assert select_primary_policy([]) is None
    assert select_primary_policy(["A", "A", "B"]) == "A"


def test_load_curation(tmp_path):
    path = tmp_path / "en.curation"
    path.write_text(
        "# comment\n"
        "verdict(Wikipedia:Notability)=policy\n"
        "verdict(Wikipedia:Snowball clause)=not_policy\n"
        "merge(Wikipedia:Notability (music))=Wikipedia:Notability\n",
        encoding="utf-8",
    )
    curation = load_curation(path)
    assert curation.verdicts == {"Wikipedia:Notability": True,
                                 "Wikipedia:Snowball clause": False}
    assert curation.merges == {"Wikipedia:Notability (music)": "Wikipedia:Notability"}
    (tmp_path / "bad.curation").write_text("nonsense line\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_curation(tmp_path / "bad.curation")


def test_build_registry_counts_after_merge_and_filters():
    resolutions = {
        "WP:NOTE": "Wikipedia:Notability",
        "WP:NM": "Wikipedia:Notability (music)",
        "WP:RS": "Wikipedia:Reliable sources",
        "WP:RED": None,
        "WP:SNOW": "Wikipedia:Snowball clause",
    }
    pages = [
        PolicyPage("Wikipedia:Notability", "en", "main", False),
        PolicyPage("Wikipedia:Notability (music)", "en",
                   "see [[Wikipedia:Notability]]", False),
        PolicyPage("Wikipedia:Reliable sources", "en", "sources", False),
    ]
    curation = Curation(
        verdicts={"Wikipedia:Notability": True, "Wikipedia:Notability (music)": True,
                  "Wikipedia:Reliable sources": True, "Wikipedia:Snowball clause": False},
        merges={"Wikipedia:Notability (music)": "Wikipedia:Notability"},
    )
    target_lists = [
        ["WP:NOTE"], ["WP:NM"], ["WP:RS"], ["WP:RED"], ["WP:SNOW"], ["WP:NOTE", "WP:NM"],
    ]
    registry = build_registry("en", resolutions, pages, curation, target_lists, 2)
    # notability: 2 direct + 2 via the music sub-policy = 4; RS filtered at 1
    assert registry.canonical == {"Wikipedia:Notability"}
    assert registry.counts == {"Wikipedia:Notability": 4}
    assert canonicalize("WP:SNOW", registry) is None
    assert canonicalize("WP:RED", registry) is None


def test_registry_merge_idempotent_and_save_roundtrip(tmp_path):
    registry = _registry()
    for child, parent in registry.merge_map.items():
        assert registry.merge_map.get(parent, parent) == parent
    path = tmp_path / "registry.json"
    registry.save(path)
    loaded = load_registry(path)
    assert loaded == registry


def test_filtered_counts_respect_threshold():
    registry = _registry()
    retained = filter_infrequent(registry.counts, registry.min_count)
    assert min(registry.counts[t] for t in retained) >= registry.min_count
