"""Site-by-site distance matrices and the statistics used to compare them."""
from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

SYMMETRY_TOLERANCE = 1e-9


class MatrixError(ValueError):
    """A matrix violates the distance-matrix invariants or cannot be parsed."""


class MismatchedSitesError(MatrixError):
    """Two matrices do not cover the same sites in the same order."""


class DegenerateVarianceError(MatrixError):
    """A matrix is constant off the diagonal, so a correlation is undefined."""


class DistanceMatrix:
    """Symmetric, zero-diagonal, nonnegative matrix of distances between labelled sites.

    ``imputed`` lists site pairs whose value was filled in rather than measured.
    """

    __slots__ = ("site_ids", "cells", "imputed", "_index")

    def __init__(
        self,
        site_ids: Sequence[str],
        cells,
        imputed: Iterable[tuple[str, str]] = (),
    ):
        ids = tuple(site_ids)
        arr = np.array(cells, dtype=float)
        n = len(ids)
        if arr.shape != (n, n):
            raise MatrixError(f"cells have shape {arr.shape}, expected ({n}, {n})")
        if len(set(ids)) != n:
            raise MatrixError("site ids must be unique")
        if not np.all(np.isfinite(arr)):
            raise MatrixError("cells must be finite")
        if np.any(arr < 0):
            raise MatrixError("cells must be nonnegative")
        if np.any(np.diag(arr) != 0):
            raise MatrixError("diagonal must be zero")
        if n and np.max(np.abs(arr - arr.T)) > SYMMETRY_TOLERANCE:
            i, j = np.unravel_index(np.argmax(np.abs(arr - arr.T)), arr.shape)
            raise MatrixError(f"matrix is not symmetric at ({ids[i]}, {ids[j]})")
        # Exact for symmetric input; evens out sub-tolerance noise otherwise.
        arr = (arr + arr.T) / 2
        arr.flags.writeable = False
        self.site_ids = ids
        self.cells = arr
        self.imputed = tuple(imputed)
        self._index = {s: i for i, s in enumerate(ids)}

    def __len__(self) -> int:
        return len(self.site_ids)

    def __repr__(self) -> str:
        return f"DistanceMatrix(n={len(self)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.site_ids == other.site_ids and np.array_equal(self.cells, other.cells)

    __hash__ = None

    def index(self, site_id: str) -> int:
        try:
            return self._index[site_id]
        except KeyError:
            raise KeyError(f"site {site_id!r} not in matrix") from None

    def get(self, s1: str, s2: str) -> float:
        return float(self.cells[self.index(s1), self.index(s2)])

    def upper_triangle(self) -> np.ndarray:
        """Off-diagonal cells, each unordered pair once, in row-major order."""
        iu = np.triu_indices(len(self), k=1)
        return self.cells[iu]

    def subset(self, site_ids: Sequence[str]) -> "DistanceMatrix":
        idx = [self.index(s) for s in site_ids]
        return DistanceMatrix(site_ids, self.cells[np.ix_(idx, idx)])

    def reorder(self, site_ids: Sequence[str]) -> "DistanceMatrix":
        if sorted(site_ids) != sorted(self.site_ids):
            raise MismatchedSitesError("reordering must use exactly the same sites")
        return self.subset(site_ids)

    def map_cells(self, fn: Callable[[np.ndarray], np.ndarray]) -> "DistanceMatrix":
        """Apply *fn* to the off-diagonal cells; the diagonal stays zero."""
        out = np.array(fn(self.cells), dtype=float)
        np.fill_diagonal(out, 0.0)
        return DistanceMatrix(self.site_ids, out)

    def to_tsv(self) -> str:
        buf = io.StringIO()
        buf.write("\t".join(self.site_ids) + "\n")
        for i, sid in enumerate(self.site_ids):
            row = ["0" if i == j else repr(float(v)) for j, v in enumerate(self.cells[i])]
            buf.write(sid + "\t" + "\t".join(row) + "\n")
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_tsv())


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write *text* to *path* through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def parse_matrix(text: str, source: str = "<string>") -> DistanceMatrix:
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines:
        raise MatrixError(f"{source}: empty matrix file")
    header = lines[0].rstrip("\r").split("\t")
    if header and header[0] == "":
        # Tolerate a leading empty corner cell.
        header = header[1:]
    n = len(header)
    if len(lines) - 1 != n:
        raise MatrixError(f"{source}: header lists {n} sites but there are {len(lines) - 1} rows")
    cells = np.zeros((n, n))
    for r, line in enumerate(lines[1:]):
        fields = line.rstrip("\r").split("\t")
        if len(fields) != n + 1:
            raise MatrixError(f"{source}:{r + 2}: expected {n + 1} fields, got {len(fields)}")
        if fields[0] != header[r]:
            raise MatrixError(
                f"{source}:{r + 2}: row label {fields[0]!r} does not match column {header[r]!r}"
            )
        try:
            cells[r] = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise MatrixError(f"{source}:{r + 2}: {exc}") from None
    try:
        return DistanceMatrix(header, cells)
    except MatrixError as exc:
        raise MatrixError(f"{source}: {exc}") from None


def read_matrix(path: str | Path) -> DistanceMatrix:
    path = Path(path)
    return parse_matrix(path.read_text(encoding="utf-8"), str(path))


def _check_pair(X: DistanceMatrix, Y: DistanceMatrix) -> None:
    if X.site_ids != Y.site_ids:
        raise MismatchedSitesError("matrices must list identical sites in identical order")
    if len(X) < 3:
        raise MatrixError("at least three sites are needed")


def pearson_rho(X: DistanceMatrix, Y: DistanceMatrix) -> float:
    """Pearson correlation between corresponding cells of two matrices.

    Each unordered site pair is counted once and the diagonal is excluded.
    """
    _check_pair(X, Y)
    x = X.upper_triangle()
    y = Y.upper_triangle()
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateVarianceError("a matrix is constant off the diagonal")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def dietz_kc(X: DistanceMatrix, Y: DistanceMatrix) -> float:
    """Kendall-style concordance of two distance matrices.

    For every site i and every unordered pair {j, k} of other sites, score the
    sign of ``(X[i,j] - X[i,k]) * (Y[i,j] - Y[i,k])`` and average.  Ties score 0.
    """
    _check_pair(X, Y)
    total, count = _kc_sum(X.cells, Y.cells)
    return total / count


def _kc_sum(x: np.ndarray, y: np.ndarray) -> tuple[int, int]:
    n = x.shape[0]
    iu = np.triu_indices(n - 1, k=1)
    total = 0
    for i in range(n):
        others = np.r_[0:i, i + 1 : n]
        xr = x[i, others]
        yr = y[i, others]
        sx = np.sign(xr[:, None] - xr[None, :])[iu]
        sy = np.sign(yr[:, None] - yr[None, :])[iu]
        total += int((sx * sy).sum())
    count = n * (n - 1) * (n - 2) // 2
    return total, count


@dataclass(frozen=True)
class MatrixComparison:
    rho: float
    kc: float
    n_pairs: int
    n_triples: int


def compare(X: DistanceMatrix, Y: DistanceMatrix) -> MatrixComparison:
    n = len(X)
    return MatrixComparison(
        rho=pearson_rho(X, Y),
        kc=dietz_kc(X, Y),
        n_pairs=n * (n - 1) // 2,
        n_triples=n * (n - 1) * (n - 2) // 2,
    )
