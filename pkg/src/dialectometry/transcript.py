"""Phonetic transcriptions: tokenization into phones and phonetic feature vectors.

A phone is one base symbol followed by any diacritics attached to it, so
``L:`` is a single phone distinct from ``L``.  Feature vectors have twelve
ordinal features scaled to [0, 1]; diacritics act as overrides on the base
symbol's row.
"""
from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

FEATURE_NAMES: tuple[str, ...] = (
    "nasality",
    "stricture",
    "laterality",
    "articulator",
    "glottis",
    "place",
    "palatalization",
    "rounding",
    "length",
    "height",
    "strength",
    "syllabicity",
)

# Ordinal place-of-articulation scale.
PLACE_SCALE: dict[str, float] = {
    "glottal": 0.0,
    "uvular": 0.1,
    "postvelar": 0.2,
    "velar": 0.3,
    "prevelar": 0.4,
    "palatal": 0.5,
    "alveolar": 0.7,
    "dental": 0.8,
    "labial": 1.0,
}


class TokenizationError(ValueError):
    """A transcription contains a character outside the symbol inventory."""

    def __init__(self, form: str, index: int, reason: str):
        self.form = form
        self.index = index
        self.reason = reason
        super().__init__(f"{reason} at index {index} in {form!r}")


class MissingSymbolError(KeyError):
    """A phone's base symbol or diacritic has no entry in the feature system."""

    def __init__(self, symbol: str, kind: str = "symbol"):
        self.symbol = symbol
        self.kind = kind
        super().__init__(f"no feature entry for {kind} {symbol!r}")

    def __str__(self) -> str:
        return self.args[0]


class FeatureTableError(ValueError):
    """Malformed feature or diacritic table."""


@dataclass(frozen=True)
class SymbolInventory:
    base_symbols: frozenset[str]
    diacritic_symbols: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_symbols", frozenset(self.base_symbols))
        object.__setattr__(self, "diacritic_symbols", frozenset(self.diacritic_symbols))
        if "" in self.base_symbols or "" in self.diacritic_symbols:
            raise ValueError("symbol inventory may not contain the empty string")
        overlap = self.base_symbols & self.diacritic_symbols
        if overlap:
            raise ValueError(f"symbols declared both base and diacritic: {sorted(overlap)}")
        # Longest match first; ties resolved alphabetically so scanning is deterministic.
        object.__setattr__(
            self, "_base_by_length", sorted(self.base_symbols, key=lambda s: (-len(s), s))
        )
        object.__setattr__(
            self, "_diacritics_by_length", sorted(self.diacritic_symbols, key=lambda s: (-len(s), s))
        )

    def match_base(self, text: str, pos: int) -> str | None:
        for sym in self._base_by_length:
            if text.startswith(sym, pos):
                return sym
        return None

    def match_diacritic(self, text: str, pos: int) -> str | None:
        for sym in self._diacritics_by_length:
            if text.startswith(sym, pos):
                return sym
        return None


@dataclass(frozen=True)
class Phone:
    base: str
    diacritics: tuple[str, ...] = ()

    @property
    def symbol(self) -> str:
        return self.base + "".join(self.diacritics)

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True)
class PhoneSeq:
    phones: tuple[Phone, ...]
    source: str

    def __len__(self) -> int:
        return len(self.phones)

    def __iter__(self):
        return iter(self.phones)

    def __getitem__(self, i):
        return self.phones[i]

    @classmethod
    def from_phones(cls, phones: Iterable[Phone]) -> "PhoneSeq":
        phones = tuple(phones)
        return cls(phones, "".join(p.symbol for p in phones))


def tokenize(form: str, inv: SymbolInventory) -> PhoneSeq:
    """Split *form* into phones by a greedy left-to-right scan.

    Each phone is the longest matching base symbol followed by the maximal run
    of diacritics.  Raises :class:`TokenizationError` for an unknown character
    or for a diacritic with no preceding base symbol.
    """
    phones: list[Phone] = []
    pos = 0
    n = len(form)
    while pos < n:
        base = inv.match_base(form, pos)
        if base is None:
            if inv.match_diacritic(form, pos) is not None:
                raise TokenizationError(form, pos, "diacritic without a base symbol")
            raise TokenizationError(form, pos, f"unknown symbol {form[pos]!r}")
        pos += len(base)
        diacritics = []
        while pos < n:
            # A base symbol takes priority if both could match here.
            if inv.match_base(form, pos) is not None:
                break
            mark = inv.match_diacritic(form, pos)
            if mark is None:
                break
            diacritics.append(mark)
            pos += len(mark)
        phones.append(Phone(base, tuple(diacritics)))
    return PhoneSeq(tuple(phones), form)


@dataclass(frozen=True, eq=False)
class FeatureSystem:
    feature_names: tuple[str, ...]
    base_table: Mapping[str, tuple[float, ...]]
    diacritic_overrides: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = tuple(self.feature_names)
        if len(names) != 12 or len(set(names)) != 12:
            raise FeatureTableError(f"expected 12 distinct feature names, got {names}")
        object.__setattr__(self, "feature_names", names)
        table = {}
        for sym, row in self.base_table.items():
            row = tuple(float(v) for v in row)
            if len(row) != 12:
                raise FeatureTableError(f"row for {sym!r} has {len(row)} values, expected 12")
            for name, v in zip(names, row):
                if not 0.0 <= v <= 1.0:
                    raise FeatureTableError(f"{sym!r}: {name}={v} outside [0, 1]")
            table[sym] = row
        object.__setattr__(self, "base_table", table)
        overrides = {}
        for mark, partial in self.diacritic_overrides.items():
            checked = {}
            for name, v in partial.items():
                if name not in names:
                    raise FeatureTableError(f"diacritic {mark!r}: unknown feature {name!r}")
                v = float(v)
                if not 0.0 <= v <= 1.0:
                    raise FeatureTableError(f"diacritic {mark!r}: {name}={v} outside [0, 1]")
                checked[name] = v
            overrides[mark] = checked
        object.__setattr__(self, "diacritic_overrides", overrides)
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(names)})
        object.__setattr__(self, "_cache", {})

    @property
    def inventory(self) -> SymbolInventory:
        """The symbol inventory this feature system can resolve."""
        return SymbolInventory(frozenset(self.base_table), frozenset(self.diacritic_overrides))

    def check_covers(self, inv: SymbolInventory) -> None:
        missing = sorted(inv.base_symbols - set(self.base_table))
        if missing:
            raise MissingSymbolError(missing[0], "symbol")
        missing = sorted(inv.diacritic_symbols - set(self.diacritic_overrides))
        if missing:
            raise MissingSymbolError(missing[0], "diacritic")

    def vector(self, p: Phone) -> np.ndarray:
        cached = self._cache.get(p)
        if cached is not None:
            return cached
        try:
            row = list(self.base_table[p.base])
        except KeyError:
            raise MissingSymbolError(p.base, "symbol") from None
        for mark in p.diacritics:
            try:
                partial = self.diacritic_overrides[mark]
            except KeyError:
                raise MissingSymbolError(mark, "diacritic") from None
            for name, v in partial.items():
                row[self._index[name]] = v
        vec = np.array(row, dtype=float)
        vec.flags.writeable = False
        self._cache[p] = vec
        return vec


def phone_vector(p: Phone, fs: FeatureSystem) -> np.ndarray:
    """Feature vector of *p*: its base row with diacritic overrides applied in order."""
    return fs.vector(p)


def phone_distance(p: Phone, q: Phone, fs: FeatureSystem) -> float:
    """Mean absolute feature difference between two phones, in [0, 1]."""
    if p == q:
        return 0.0
    return float(np.abs(fs.vector(p) - fs.vector(q)).sum() / len(fs.feature_names))


def _read_tsv(path) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [row for row in csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE) if row]


def _parse_value(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise FeatureTableError(f"{where}: {text!r} is not a decimal value") from None
    if not 0.0 <= v <= 1.0:
        raise FeatureTableError(f"{where}: {v} outside [0, 1]")
    return v


def load_feature_system(table_path, overrides_path=None) -> FeatureSystem:
    """Read a feature system from TSV files.

    The base table has a header ``symbol<TAB>nasality<TAB>...<TAB>syllabicity``
    and one row per base symbol.  The override table has rows
    ``diacritic<TAB>feature<TAB>value``; a row holding only a diacritic declares
    it with no overrides.
    """
    rows = _read_tsv(table_path)
    if not rows:
        raise FeatureTableError(f"{table_path}: empty feature table")
    header = rows[0]
    if header[0] != "symbol" or tuple(header[1:]) != FEATURE_NAMES:
        raise FeatureTableError(
            f"{table_path}: header must be 'symbol' followed by {', '.join(FEATURE_NAMES)}"
        )
    base = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 13:
            raise FeatureTableError(f"{table_path}:{lineno}: expected 13 columns, got {len(row)}")
        sym = row[0]
        if not sym:
            raise FeatureTableError(f"{table_path}:{lineno}: empty symbol")
        if sym in base:
            raise FeatureTableError(f"{table_path}:{lineno}: duplicate symbol {sym!r}")
        base[sym] = tuple(_parse_value(v, f"{table_path}:{lineno}") for v in row[1:])

    overrides: dict[str, dict[str, float]] = {}
    if overrides_path is not None:
        orows = _read_tsv(overrides_path)
        if orows and orows[0][:1] == ["diacritic"]:
            orows = orows[1:]
            start = 2
        else:
            start = 1
        for lineno, row in enumerate(orows, start=start):
            mark = row[0]
            if not mark:
                raise FeatureTableError(f"{overrides_path}:{lineno}: empty diacritic")
            entry = overrides.setdefault(mark, {})
            rest = [c for c in row[1:] if c]
            if not rest:
                continue
            if len(rest) != 2:
                raise FeatureTableError(f"{overrides_path}:{lineno}: expected diacritic, feature, value")
            name, value = rest
            if name not in FEATURE_NAMES:
                raise FeatureTableError(f"{overrides_path}:{lineno}: unknown feature {name!r}")
            entry[name] = _parse_value(value, f"{overrides_path}:{lineno}")
    return FeatureSystem(FEATURE_NAMES, base, overrides)


@functools.lru_cache(maxsize=None)
def default_feature_system() -> FeatureSystem:
    """The bundled feature tables.

    Only the place scale is fixed by convention; the other feature values in
    the bundled table are editorial choices and may be replaced wholesale.
    """
    data = resources.files("dialectometry") / "data"
    with resources.as_file(data / "features.tsv") as table, resources.as_file(
        data / "diacritics.tsv"
    ) as marks:
        return load_feature_system(table, marks)


def default_inventory() -> SymbolInventory:
    return default_feature_system().inventory


def inventory_from_lists(base: Sequence[str], diacritics: Sequence[str]) -> SymbolInventory:
    return SymbolInventory(frozenset(base), frozenset(diacritics))
