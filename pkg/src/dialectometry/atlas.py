"""Linguistic atlas data model and JSON interchange format.

An atlas file is one JSON object::

    {
      "inventory": {"base_symbols": [...], "diacritic_symbols": [...]},   # optional
      "sites": [{"id": "A", "name": "Alder", "region_path": ["Alder", "Eastshire", "North"]}],
      "concepts": [{"id": "c01", "gloss": "sell"}],
      "citations": [{"site": "A", "concept": "c01", "form": "di:l",
                     "word": "díol", "etymon": "díol"}],
      "isogloss_features": [{"id": "f1", "assignments": {"A": "x", "B": "y"}}]
    }

``word`` and ``etymon`` may be ``null`` or omitted when a citation was not
annotated.  Without an ``inventory`` the symbols of the bundled feature table
are used.  Malformed documents are rejected, never repaired.
"""
from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .transcript import (
    PhoneSeq,
    SymbolInventory,
    TokenizationError,
    default_inventory,
    tokenize,
)

TOP_LEVEL_KEYS = ("sites", "concepts", "citations", "isogloss_features")


class AtlasError(ValueError):
    """Base class for atlas loading and validation failures.

    ``path`` locates the offending value inside the document, for example
    ``citations[3].site``.
    """

    def __init__(self, message: str, path: str = "", value: Any = None):
        self.path = path
        self.value = value
        where = f"{path}: " if path else ""
        super().__init__(where + message)


class AtlasParseError(AtlasError):
    """The document is not valid JSON or does not follow the schema."""


class AtlasReferenceError(AtlasError):
    """A citation or isogloss assignment names a site or concept that does not exist."""


class AtlasTokenizationError(AtlasError):
    """A citation form contains symbols outside the inventory."""

    def __init__(self, message: str, path: str, value: Any, index: int):
        self.index = index
        super().__init__(message, path, value)


class AtlasWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Site:
    id: str
    name: str
    region_path: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "region_path", tuple(self.region_path))
        if not self.region_path:
            raise AtlasError(f"site {self.id!r} has an empty region_path", value=self.id)

    @property
    def label(self) -> str:
        return ", ".join(self.region_path)


@dataclass(frozen=True)
class Concept:
    id: str
    gloss: str


@dataclass(frozen=True)
class Citation:
    site: str
    concept: str
    form: str
    word: str | None = None
    etymon: str | None = None

    def sort_key(self) -> tuple:
        return (self.site, self.concept, self.form, self.word or "", self.etymon or "")


@dataclass(frozen=True)
class IsoglossFeature:
    id: str
    assignments: Mapping[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", dict(sorted(self.assignments.items())))
        if len(set(self.assignments.values())) < 2:
            raise AtlasError(
                f"isogloss feature {self.id!r} needs at least two distinct categories",
                value=self.id,
            )


@dataclass(frozen=True)
class Atlas:
    """A validated, immutable atlas.

    Citations are stored in a canonical order, so two atlases that differ only
    in the order of their citations compare equal.
    """

    sites: tuple[Site, ...]
    concepts: tuple[Concept, ...]
    citations: tuple[Citation, ...]
    isogloss_features: tuple[IsoglossFeature, ...] = ()
    inventory: SymbolInventory = field(default_factory=default_inventory)

    def __post_init__(self) -> None:
        sites = tuple(self.sites)
        concepts = tuple(self.concepts)
        citations = tuple(self.citations)
        features = tuple(self.isogloss_features)

        _check_unique((s.id for s in sites), "sites")
        _check_unique((c.id for c in concepts), "concepts")
        _check_unique((f.id for f in features), "isogloss_features")
        site_ids = {s.id for s in sites}
        concept_ids = {c.id for c in concepts}

        phones: dict[str, PhoneSeq] = {}
        word_etymon: dict[str, tuple[str, int]] = {}
        for i, cit in enumerate(citations):
            if cit.site not in site_ids:
                raise AtlasReferenceError(
                    f"unknown site {cit.site!r}", f"citations[{i}].site", cit.site
                )
            if cit.concept not in concept_ids:
                raise AtlasReferenceError(
                    f"unknown concept {cit.concept!r}", f"citations[{i}].concept", cit.concept
                )
            if cit.form not in phones:
                try:
                    phones[cit.form] = tokenize(cit.form, self.inventory)
                except TokenizationError as exc:
                    raise AtlasTokenizationError(
                        str(exc), f"citations[{i}].form", cit.form, exc.index
                    ) from exc
            if cit.word is not None and cit.etymon is not None:
                seen = word_etymon.setdefault(cit.word, (cit.etymon, i))
                if seen[0] != cit.etymon:
                    raise AtlasError(
                        f"word {cit.word!r} has etymon {cit.etymon!r} here but "
                        f"{seen[0]!r} at citations[{seen[1]}]",
                        f"citations[{i}].etymon",
                        cit.etymon,
                    )
        for i, feat in enumerate(features):
            for sid in feat.assignments:
                if sid not in site_ids:
                    raise AtlasReferenceError(
                        f"unknown site {sid!r}", f"isogloss_features[{i}].assignments", sid
                    )

        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "concepts", concepts)
        object.__setattr__(self, "citations", tuple(sorted(citations, key=Citation.sort_key)))
        object.__setattr__(self, "isogloss_features", features)

        by_pair: dict[tuple[str, str], list[Citation]] = {}
        for cit in self.citations:
            by_pair.setdefault((cit.site, cit.concept), []).append(cit)
        object.__setattr__(self, "_by_pair", {k: tuple(v) for k, v in by_pair.items()})
        object.__setattr__(self, "_phones", phones)
        object.__setattr__(self, "_site_index", {s.id: s for s in sites})

    @property
    def site_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sites)

    def site(self, site_id: str) -> Site:
        try:
            return self._site_index[site_id]
        except KeyError:
            raise KeyError(f"unknown site {site_id!r}") from None

    def citations_for(self, site_id: str, concept_id: str) -> tuple[Citation, ...]:
        return self._by_pair.get((site_id, concept_id), ())

    def phones(self, form: str) -> PhoneSeq:
        seq = self._phones.get(form)
        if seq is None:
            seq = tokenize(form, self.inventory)
        return seq

    @property
    def has_words(self) -> bool:
        return bool(self.citations) and all(c.word is not None for c in self.citations)

    @property
    def has_etymons(self) -> bool:
        return bool(self.citations) and all(c.etymon is not None for c in self.citations)

    def to_dict(self) -> dict:
        return {
            "inventory": {
                "base_symbols": sorted(self.inventory.base_symbols),
                "diacritic_symbols": sorted(self.inventory.diacritic_symbols),
            },
            "sites": [
                {"id": s.id, "name": s.name, "region_path": list(s.region_path)} for s in self.sites
            ],
            "concepts": [{"id": c.id, "gloss": c.gloss} for c in self.concepts],
            "citations": [
                {
                    "site": c.site,
                    "concept": c.concept,
                    "form": c.form,
                    "word": c.word,
                    "etymon": c.etymon,
                }
                for c in self.citations
            ],
            "isogloss_features": [
                {"id": f.id, "assignments": dict(f.assignments)} for f in self.isogloss_features
            ],
        }

    def completeness_warnings(self) -> list[str]:
        """Data-completeness issues that do not invalidate the atlas."""
        found = []
        attested_sites = {c.site for c in self.citations}
        attested_concepts = {c.concept for c in self.citations}
        for s in self.sites:
            if s.id not in attested_sites:
                found.append(f"site {s.id!r} has no citations")
        for c in self.concepts:
            if c.id not in attested_concepts:
                found.append(f"concept {c.id!r} is attested at no site")
        return found


def _check_unique(ids: Iterable[str], where: str) -> None:
    counts = Counter(ids)
    dupes = sorted(k for k, n in counts.items() if n > 1)
    if dupes:
        raise AtlasError(f"duplicate id {dupes[0]!r}", where, dupes[0])


def _require(obj: Mapping, key: str, kind: type | tuple, path: str, optional: bool = False):
    if key not in obj:
        if optional:
            return None
        raise AtlasParseError(f"missing field {key!r}", path)
    value = obj[key]
    if value is None and optional:
        return None
    if not isinstance(value, kind) or isinstance(value, bool):
        raise AtlasParseError(f"field {key!r} has the wrong type", f"{path}.{key}", value)
    return value


def _check_keys(obj: Any, allowed: Iterable[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise AtlasParseError("expected a JSON object", path, obj)
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise AtlasParseError(f"unexpected field {extra[0]!r}", path, extra[0])


def _strings(values: Any, path: str) -> list[str]:
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise AtlasParseError("expected a list of strings", path, values)
    return values


def atlas_from_dict(data: Any, inventory: SymbolInventory | None = None) -> Atlas:
    """Build and validate an :class:`Atlas` from a decoded JSON document.

    *inventory* is used when the document declares none; it defaults to the
    symbols of the bundled feature table.
    """
    _check_keys(data, TOP_LEVEL_KEYS + ("inventory",), "$")
    for key in TOP_LEVEL_KEYS:
        if key not in data:
            raise AtlasParseError(f"missing top-level key {key!r}", "$")
        if not isinstance(data[key], list):
            raise AtlasParseError(f"{key!r} must be a list", key, data[key])

    if "inventory" in data:
        inv = data["inventory"]
        _check_keys(inv, ("base_symbols", "diacritic_symbols"), "inventory")
        try:
            inventory = SymbolInventory(
                frozenset(_strings(inv.get("base_symbols"), "inventory.base_symbols")),
                frozenset(_strings(inv.get("diacritic_symbols", []), "inventory.diacritic_symbols")),
            )
        except ValueError as exc:
            if isinstance(exc, AtlasError):
                raise
            raise AtlasParseError(str(exc), "inventory") from exc
    elif inventory is None:
        inventory = default_inventory()

    sites = []
    for i, obj in enumerate(data["sites"]):
        path = f"sites[{i}]"
        _check_keys(obj, ("id", "name", "region_path"), path)
        sid = _require(obj, "id", str, path)
        name = _require(obj, "name", str, path)
        region = _strings(_require(obj, "region_path", list, path), f"{path}.region_path")
        if not region:
            raise AtlasParseError("region_path must be non-empty", f"{path}.region_path", region)
        sites.append(Site(sid, name, tuple(region)))

    concepts = []
    for i, obj in enumerate(data["concepts"]):
        path = f"concepts[{i}]"
        _check_keys(obj, ("id", "gloss"), path)
        concepts.append(Concept(_require(obj, "id", str, path), _require(obj, "gloss", str, path)))

    citations = []
    for i, obj in enumerate(data["citations"]):
        path = f"citations[{i}]"
        _check_keys(obj, ("site", "concept", "form", "word", "etymon"), path)
        citations.append(
            Citation(
                site=_require(obj, "site", str, path),
                concept=_require(obj, "concept", str, path),
                form=_require(obj, "form", str, path),
                word=_require(obj, "word", str, path, optional=True),
                etymon=_require(obj, "etymon", str, path, optional=True),
            )
        )

    features = []
    for i, obj in enumerate(data["isogloss_features"]):
        path = f"isogloss_features[{i}]"
        _check_keys(obj, ("id", "assignments"), path)
        fid = _require(obj, "id", str, path)
        assignments = _require(obj, "assignments", dict, path)
        for sid, label in assignments.items():
            if not isinstance(label, str):
                raise AtlasParseError(
                    "category labels must be strings", f"{path}.assignments.{sid}", label
                )
        if len(set(assignments.values())) < 2:
            raise AtlasParseError(
                "an isogloss feature needs at least two distinct categories", path, fid
            )
        features.append(IsoglossFeature(fid, assignments))

    return Atlas(tuple(sites), tuple(concepts), tuple(citations), tuple(features), inventory)


def loads_atlas(
    text: str, source: str = "<string>", inventory: SymbolInventory | None = None
) -> Atlas:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AtlasParseError(
            f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    atlas = atlas_from_dict(data, inventory)
    for message in atlas.completeness_warnings():
        warnings.warn(f"{source}: {message}", AtlasWarning, stacklevel=3)
    return atlas


def load_atlas(path: str | Path, inventory: SymbolInventory | None = None) -> Atlas:
    """Read and validate an atlas JSON file.

    Raises :class:`AtlasParseError`, :class:`AtlasReferenceError` or
    :class:`AtlasTokenizationError`; each carries the JSON path of the
    offending value.  Incomplete-but-valid data (an unattested concept, a site
    with no citations) produces an :class:`AtlasWarning`.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise AtlasParseError(f"{path}: not valid UTF-8: {exc}") from None
    return loads_atlas(text, str(path), inventory)


def dumps_atlas(atlas: Atlas) -> str:
    return json.dumps(atlas.to_dict(), ensure_ascii=False, indent=2) + "\n"


def save_atlas(atlas: Atlas, path: str | Path) -> None:
    Path(path).write_text(dumps_atlas(atlas), encoding="utf-8")


@dataclass(frozen=True)
class CoverageReport:
    concept_fraction: dict[str, float]
    site_concepts: dict[str, int]
    n_sites: int

    def format(self) -> str:
        lines = ["concept\tfraction"]
        lines += [f"{cid}\t{frac:.3f}" for cid, frac in self.concept_fraction.items()]
        lines.append("")
        lines.append("site\tconcepts")
        lines += [f"{sid}\t{n}" for sid, n in self.site_concepts.items()]
        return "\n".join(lines) + "\n"


def validate_coverage(atlas: Atlas) -> CoverageReport:
    """Per concept, the fraction of sites citing it; per site, how many concepts it attests."""
    attested = {(c.site, c.concept) for c in atlas.citations}
    n = len(atlas.sites)
    fractions = {}
    for concept in atlas.concepts:
        hits = sum((s.id, concept.id) in attested for s in atlas.sites)
        fractions[concept.id] = hits / n if n else 0.0
    per_site = {
        s.id: sum((s.id, c.id) in attested for c in atlas.concepts) for s in atlas.sites
    }
    return CoverageReport(fractions, per_site, n)
