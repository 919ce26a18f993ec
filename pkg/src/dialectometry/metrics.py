"""Linguistic distances between citations and between sites.

Six site-distance metrics are available:

``isogloss``
    share of isogloss features on which two sites fall in different categories;
``etymon`` / ``word``
    0/1 identity of the cited etymon or word, averaged over concepts;
``phone_string``
    Levenshtein distance with unit costs over phones;
``feature_all_word``
    Levenshtein distance with substitution cost equal to the feature distance
    of the two phones;
``feature_same_word``
    as ``feature_all_word`` but only for citation pairs that use the same word.

A value of ``None`` means the distance is undefined (missing data).  It is
propagated explicitly from citation pairs to concepts to site pairs.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .atlas import Atlas, Citation
from .matrixlab import DistanceMatrix
from .transcript import (
    FeatureSystem,
    PhoneSeq,
    SymbolInventory,
    default_feature_system,
    default_inventory,
    phone_distance,
    tokenize,
)

METRICS = (
    "isogloss",
    "etymon",
    "word",
    "phone_string",
    "feature_all_word",
    "feature_same_word",
)
LEVENSHTEIN_METRICS = ("phone_string", "feature_all_word", "feature_same_word")
DEFAULT_FEATURE_INDEL_COST = 0.5


class MetricRequirementError(ValueError):
    """The atlas lacks the annotations a metric needs."""


class IncompleteMatrixError(ValueError):
    """Some site pairs have no defined distance."""

    def __init__(self, pairs: Sequence[tuple[str, str]], metric: str = ""):
        self.pairs = tuple(pairs)
        self.metric = metric
        shown = ", ".join(f"{a}-{b}" for a, b in self.pairs)
        label = f"{metric}: " if metric else ""
        super().__init__(f"{label}{len(self.pairs)} site pair(s) without a distance: {shown}")


@dataclass(frozen=True)
class CostModel:
    """Edit costs for :func:`levenshtein`.

    ``flat``: every insertion, deletion and substitution costs 1, and a
    substitution of identical phones costs 0.  ``feature``: substitutions cost
    the feature distance of the two phones and indels cost ``indel_cost``.
    """

    kind: str = "flat"
    indel_cost: float = 1.0
    feature_system: Optional[FeatureSystem] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("flat", "feature"):
            raise ValueError(f"unknown cost model kind {self.kind!r}")
        if self.kind == "flat" and self.indel_cost != 1.0:
            raise ValueError("the flat cost model has unit indel cost")
        if not self.indel_cost > 0:
            raise ValueError("indel cost must be positive")
        if self.kind == "feature" and self.feature_system is None:
            object.__setattr__(self, "feature_system", default_feature_system())

    @classmethod
    def flat(cls) -> "CostModel":
        return cls("flat", 1.0)

    @classmethod
    def feature(
        cls, feature_system: FeatureSystem | None = None, indel_cost: float = DEFAULT_FEATURE_INDEL_COST
    ) -> "CostModel":
        return cls("feature", float(indel_cost), feature_system)

    def substitution(self, p, q) -> float:
        if self.kind == "flat":
            return 0.0 if p == q else 1.0
        return phone_distance(p, q, self.feature_system)


def levenshtein(a: PhoneSeq | Sequence, b: PhoneSeq | Sequence, cm: CostModel | None = None) -> float:
    """Minimal total cost of indels and substitutions turning *a* into *b*."""
    cm = cm or CostModel.flat()
    a = tuple(a)
    b = tuple(b)
    indel = cm.indel_cost
    sub: Callable = cm.substitution
    prev = [j * indel for j in range(len(b) + 1)]
    for i, p in enumerate(a, start=1):
        cur = [i * indel]
        for j, q in enumerate(b, start=1):
            cur.append(min(prev[j] + indel, cur[j - 1] + indel, prev[j - 1] + sub(p, q)))
        prev = cur
    return float(prev[-1])


@dataclass(frozen=True)
class MetricSpec:
    """A site-distance metric.

    ``normalize`` divides each Levenshtein value by the length of the longer
    form.  ``aggregate`` combines the citation pairs of one concept: ``mean``
    over the cross product of the two sites' citations, or ``min``.
    """

    name: str
    cost_model: Optional[CostModel] = None
    normalize: bool = False
    aggregate: str = "mean"

    def __post_init__(self) -> None:
        if self.name not in METRICS:
            raise ValueError(f"unknown metric {self.name!r}; choose from {', '.join(METRICS)}")
        if self.aggregate not in ("mean", "min"):
            raise ValueError(f"unknown aggregation {self.aggregate!r}")
        if self.cost_model is None and self.name in LEVENSHTEIN_METRICS:
            cm = CostModel.flat() if self.name == "phone_string" else CostModel.feature()
            object.__setattr__(self, "cost_model", cm)

    def check_atlas(self, atlas: Atlas) -> None:
        if self.name in ("word", "feature_same_word"):
            unannotated = [c for c in atlas.citations if c.word is None]
            if unannotated:
                c = unannotated[0]
                raise MetricRequirementError(
                    f"metric {self.name} requires word annotations on every citation; "
                    f"{len(unannotated)} citation(s) lack one (first: site {c.site}, concept {c.concept})"
                )
        if self.name == "etymon":
            unannotated = [c for c in atlas.citations if c.etymon is None]
            if unannotated:
                c = unannotated[0]
                raise MetricRequirementError(
                    f"metric etymon requires etymon annotations on every citation; "
                    f"{len(unannotated)} citation(s) lack one (first: site {c.site}, concept {c.concept})"
                )
        if self.cost_model is not None and self.cost_model.kind == "feature":
            fs = self.cost_model.feature_system
            for form in {c.form for c in atlas.citations}:
                for p in atlas.phones(form):
                    fs.vector(p)


def _distance_of_forms(a: PhoneSeq, b: PhoneSeq, spec: MetricSpec) -> float:
    d = levenshtein(a, b, spec.cost_model)
    if spec.normalize:
        longest = max(len(a), len(b))
        return d / longest if longest else 0.0
    return d


def _citation_distance(
    c1: Citation, c2: Citation, spec: MetricSpec, phones: Callable[[str], PhoneSeq]
) -> float | None:
    name = spec.name
    if name == "etymon":
        if c1.etymon is None or c2.etymon is None:
            raise MetricRequirementError("etymon metric needs etymon annotations")
        return 0.0 if c1.etymon == c2.etymon else 1.0
    if name == "word":
        if c1.word is None or c2.word is None:
            raise MetricRequirementError("word metric needs word annotations")
        return 0.0 if c1.word == c2.word else 1.0
    if name == "feature_same_word":
        if c1.word is None or c2.word is None:
            raise MetricRequirementError("feature_same_word metric needs word annotations")
        if c1.word != c2.word:
            return None
    if name in LEVENSHTEIN_METRICS:
        return _distance_of_forms(phones(c1.form), phones(c2.form), spec)
    raise ValueError(f"metric {name!r} is not defined on citation pairs")


def citation_distance(
    c1: Citation, c2: Citation, spec: MetricSpec, inventory: SymbolInventory | None = None
) -> float | None:
    """Distance between two citations of the same concept, or ``None`` if undefined.

    ``feature_same_word`` is undefined for citations of different words.
    """
    if c1.concept != c2.concept:
        raise ValueError("citations must share a concept")
    inv = inventory or default_inventory()
    return _citation_distance(c1, c2, spec, lambda form: tokenize(form, inv))


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def site_pair_distance(atlas: Atlas, s1: str, s2: str, spec: MetricSpec) -> float | None:
    """Distance between two sites under *spec*, or ``None`` if no data is shared."""
    order = {sid: i for i, sid in enumerate(atlas.site_ids)}
    for sid in (s1, s2):
        if sid not in order:
            raise KeyError(f"unknown site {sid!r}")
    if s1 == s2:
        return 0.0
    if order[s1] > order[s2]:
        s1, s2 = s2, s1

    if spec.name == "isogloss":
        scores = []
        for feat in atlas.isogloss_features:
            a = feat.assignments.get(s1)
            b = feat.assignments.get(s2)
            if a is not None and b is not None:
                scores.append(0.0 if a == b else 1.0)
        return _mean(scores) if scores else None

    combine = _mean if spec.aggregate == "mean" else min
    contributions = []
    for concept in atlas.concepts:
        left = atlas.citations_for(s1, concept.id)
        right = atlas.citations_for(s2, concept.id)
        if not left or not right:
            continue
        values = []
        for c1 in left:
            for c2 in right:
                d = _citation_distance(c1, c2, spec, atlas.phones)
                if d is not None:
                    values.append(d)
        if values:
            contributions.append(combine(values))
    return _mean(contributions) if contributions else None


def build_matrix(
    atlas: Atlas, spec: MetricSpec, impute: bool = False, workers: int = 1
) -> DistanceMatrix:
    """Distance matrix over all atlas sites.

    Raises :class:`IncompleteMatrixError` listing every undefined pair unless
    *impute* is set, in which case undefined pairs receive the mean of the
    defined off-diagonal cells and are recorded in ``DistanceMatrix.imputed``.
    Output is identical for any number of *workers*.
    """
    ids = atlas.site_ids
    n = len(ids)
    if n < 2:
        raise ValueError("a distance matrix needs at least two sites")
    spec.check_atlas(atlas)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def cell(pair):
        i, j = pair
        return site_pair_distance(atlas, ids[i], ids[j], spec)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(cell, pairs))
    else:
        values = [cell(p) for p in pairs]

    missing = [(ids[i], ids[j]) for (i, j), v in zip(pairs, values) if v is None]
    defined = [v for v in values if v is not None]
    if missing and (not impute or not defined):
        raise IncompleteMatrixError(missing, spec.name)
    fill = _mean(defined) if missing else 0.0

    cells = [[0.0] * n for _ in range(n)]
    for (i, j), v in zip(pairs, values):
        cells[i][j] = cells[j][i] = fill if v is None else v
    return DistanceMatrix(ids, cells, imputed=missing)
