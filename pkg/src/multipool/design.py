"""Multipool designs: constant pool size, constant item multiplicity,
and no two items sharing more than one pool.

The builder covers n = q*q items for a supported prime power q.  Items
are the cells of a q-by-q grid indexed by pairs of field elements, and
every pool is the cell set of a line: the pool with slope a and
intercept b collects the cells (x, a*x + b), and the vertical pool with
intercept c collects the cells (c, y).  All q pools of one slope
partition the grid, so a design that uses m slope layers puts every item
in exactly m pools, and two distinct lines meet in at most one cell.
With the vertical layer included there are q + 1 layers available, which
is the most any design on q*q items with pool size q can have.

Validation is independent of the builder and accepts arbitrary binary
incidence structures, so externally produced designs can be checked with
the same report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import gf
from .errors import DesignBoundError, DomainError, MatrixFormatError

FORMAT_VERSION = 1

# Slope marker for the vertical layer; also its spelling in design files.
INFINITY = "inf"


@dataclass(frozen=True)
class PoolLabel:
    """The (slope, intercept) pair naming one builder pool."""

    slope: int | str
    intercept: int


@dataclass(frozen=True)
class MultipoolParams:
    """Parameters of a built design: pool size q and multiplicity m."""

    q: int
    m: int

    def __post_init__(self):
        if self.q < 2:
            raise DomainError(f"pool size must be at least 2, got {self.q}")
        if self.m < 1:
            raise DomainError(f"multiplicity must be at least 1, got {self.m}")
        if self.m > self.q + 1:
            raise DesignBoundError(
                f"multiplicity {self.m} exceeds the maximum {self.q + 1} "
                f"achievable with pool size {self.q} on {self.q * self.q} items"
            )

    @property
    def n(self) -> int:
        return self.q * self.q

    @property
    def t(self) -> int:
        return self.m * self.q


class PoolingMatrix:
    """A binary incidence structure held in two mutually dual views.

    ``pools`` lists, per pool, the sorted item indices it contains;
    ``item_membership`` lists, per item, the sorted pool indices that
    contain it.  Instances are immutable after construction and safe to
    share across threads.
    """

    def __init__(
        self,
        n: int,
        pools: tuple[tuple[int, ...], ...],
        item_membership: tuple[tuple[int, ...], ...],
        labels: tuple[PoolLabel, ...] | None,
    ):
        self.n = n
        self.t = len(pools)
        self.pools = pools
        self.item_membership = item_membership
        self.labels = labels

    @classmethod
    def from_pools(
        cls,
        n: int,
        pools: Sequence[Iterable[int]],
        labels: Sequence[PoolLabel] | None = None,
    ) -> "PoolingMatrix":
        if n < 1:
            raise DomainError(f"item count must be positive, got {n}")
        if len(pools) < 1:
            raise DomainError("a design needs at least one pool")
        canonical: list[tuple[int, ...]] = []
        for i, pool in enumerate(pools):
            items = sorted(int(j) for j in pool)
            if items and (items[0] < 0 or items[-1] >= n):
                raise DomainError(f"pool {i} contains an item index outside [0, {n})")
            if any(a == b for a, b in zip(items, items[1:])):
                raise DomainError(f"pool {i} lists an item more than once")
            canonical.append(tuple(items))
        membership: list[list[int]] = [[] for _ in range(n)]
        for i, pool in enumerate(canonical):
            for j in pool:
                membership[j].append(i)
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != len(canonical):
                raise DomainError("labels must match the number of pools")
        return cls(n, tuple(canonical), tuple(tuple(row) for row in membership), labels)

    @classmethod
    def from_dense(cls, array: np.ndarray) -> "PoolingMatrix":
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise DomainError("dense design must be a 2-d array")
        pools = [tuple(np.flatnonzero(row).tolist()) for row in arr]
        return cls.from_pools(arr.shape[1], pools)

    @property
    def pool_size(self) -> int | None:
        """Common pool size, or None when pools differ in size."""
        sizes = {len(pool) for pool in self.pools}
        return sizes.pop() if len(sizes) == 1 else None

    @property
    def multiplicity(self) -> int | None:
        """Common number of pools per item, or None when items differ."""
        counts = {len(row) for row in self.item_membership}
        return counts.pop() if len(counts) == 1 else None

    @cached_property
    def pools_array(self) -> np.ndarray | None:
        """Pools as a (t, q) int array when the pool size is constant."""
        if self.pool_size is None:
            return None
        return np.asarray(self.pools, dtype=np.int32)

    @cached_property
    def membership_array(self) -> np.ndarray | None:
        """Membership as an (n, m) int array when multiplicity is constant."""
        if self.multiplicity is None:
            return None
        return np.asarray(self.item_membership, dtype=np.int32)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.t, self.n), dtype=np.uint8)
        for i, pool in enumerate(self.pools):
            dense[i, list(pool)] = 1
        return dense

    def __eq__(self, other) -> bool:
        if not isinstance(other, PoolingMatrix):
            return NotImplemented
        return self.n == other.n and self.pools == other.pools and self.labels == other.labels

    def __repr__(self) -> str:
        return f"PoolingMatrix(n={self.n}, t={self.t})"


def build_multipool(params: MultipoolParams) -> PoolingMatrix:
    """Construct the line design for (q, m): q*q items, m*q pools.

    Item (x, y) gets index q*x + y.  Slope layers are the first m field
    elements in index order; when m = q + 1 the vertical layer comes
    last.  Within a layer, pools are ordered by intercept, so pool
    indices are layer*q + intercept.
    """
    field = gf.field_for_order(params.q)
    q, m = params.q, params.m
    pools: list[tuple[int, ...]] = []
    labels: list[PoolLabel] = []
    for slope in range(min(m, q)):
        for intercept in range(q):
            # q*x + (slope*x + intercept) is increasing in x, so the pool
            # comes out sorted without an explicit sort.
            items = tuple(
                q * x + field.add(field.mul(slope, x), intercept) for x in range(q)
            )
            pools.append(items)
            labels.append(PoolLabel(slope, intercept))
    if m == q + 1:
        for intercept in range(q):
            pools.append(tuple(range(q * intercept, q * intercept + q)))
            labels.append(PoolLabel(INFINITY, intercept))
    return PoolingMatrix.from_pools(params.n, pools, labels=labels)


def max_pools_bound(q: int, n: int) -> int:
    """Largest number of size-q pools on n items with pairwise overlap <= 1.

    Every pool contains q*(q-1)/2 item pairs and no pair may repeat, so
    the count is at most n*(n-1) / (q*(q-1)), rounded down.
    """
    if q < 2:
        raise DomainError(f"pool size must be at least 2, got {q}")
    if n < q:
        raise DomainError(f"need at least q={q} items, got {n}")
    return (n * (n - 1)) // (q * (q - 1))


@dataclass(frozen=True)
class ValidationReport:
    """Result of checking the three multipool properties.

    ``violations`` holds (kind, indices) pairs: kind "row_sum" with a pool
    index, "col_sum" with an item index, or "overlap" with an item pair.
    """

    is_multipool: bool
    row_sums: tuple[int, ...]
    col_sums: tuple[int, ...]
    max_pairwise_overlap: int
    violations: tuple[tuple[str, tuple[int, ...]], ...]

    def summary(self) -> str:
        lines = [
            f"pools: {len(self.row_sums)}, items: {len(self.col_sums)}",
            f"max pairwise overlap: {self.max_pairwise_overlap}",
            f"multipool: {'yes' if self.is_multipool else 'no'}",
        ]
        for kind, indices in self.violations[:20]:
            lines.append(f"violation: {kind} at {indices}")
        if len(self.violations) > 20:
            lines.append(f"... and {len(self.violations) - 20} more violations")
        return "\n".join(lines)


def _pair_codes(matrix: PoolingMatrix) -> np.ndarray:
    """Encode every within-pool item pair (j1 < j2) as j1*n + j2."""
    n = matrix.n
    arr = matrix.pools_array
    if arr is not None and arr.shape[1] >= 2:
        q = arr.shape[1]
        left, right = np.triu_indices(q, k=1)
        return (arr[:, left].astype(np.int64) * n + arr[:, right]).ravel()
    codes: list[np.ndarray] = []
    for pool in matrix.pools:
        if len(pool) < 2:
            continue
        items = np.asarray(pool, dtype=np.int64)
        left, right = np.triu_indices(len(items), k=1)
        codes.append(items[left] * n + items[right])
    if not codes:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(codes)


def validate_multipool(matrix: PoolingMatrix, q: int, m: int) -> ValidationReport:
    """Check that every pool has size q, every item sits in m pools, and
    no two items share more than one pool."""
    if q < 1 or m < 1:
        raise DomainError("q and m must be positive")
    row_sums = tuple(len(pool) for pool in matrix.pools)
    col_sums = tuple(len(row) for row in matrix.item_membership)
    violations: list[tuple[str, tuple[int, ...]]] = []
    for i, size in enumerate(row_sums):
        if size != q:
            violations.append(("row_sum", (i,)))
    for j, count in enumerate(col_sums):
        if count != m:
            violations.append(("col_sum", (j,)))
    codes = _pair_codes(matrix)
    if codes.size:
        unique, counts = np.unique(codes, return_counts=True)
        max_overlap = int(counts.max())
        for code in unique[counts > 1]:
            violations.append(("overlap", (int(code) // matrix.n, int(code) % matrix.n)))
    else:
        max_overlap = 0
    return ValidationReport(
        is_multipool=not violations,
        row_sums=row_sums,
        col_sums=col_sums,
        max_pairwise_overlap=max_overlap,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class MatrixFile:
    """A design together with the (q, m) it claims to satisfy."""

    matrix: PoolingMatrix
    q: int
    m: int


def matrix_document(matrix: PoolingMatrix, q: int, m: int) -> dict:
    labels = None
    if matrix.labels is not None:
        labels = [{"slope": lab.slope, "intercept": lab.intercept} for lab in matrix.labels]
    return {
        "format_version": FORMAT_VERSION,
        "q": q,
        "m": m,
        "n": matrix.n,
        "t": matrix.t,
        "pools": [list(pool) for pool in matrix.pools],
        "labels": labels,
    }


def _require(condition: bool, message: str):
    if not condition:
        raise MatrixFormatError(message)


def matrix_from_document(doc: object) -> MatrixFile:
    _require(isinstance(doc, dict), "design document must be a JSON object")
    version = doc.get("format_version")
    _require(version == FORMAT_VERSION, f"unsupported format_version {version!r}")
    for key in ("q", "m", "n", "t"):
        _require(isinstance(doc.get(key), int), f"field {key!r} must be an integer")
    q, m, n, t = doc["q"], doc["m"], doc["n"], doc["t"]
    pools = doc.get("pools")
    _require(isinstance(pools, list), "field 'pools' must be an array")
    _require(len(pools) == t, f"expected {t} pools, found {len(pools)}")
    for i, pool in enumerate(pools):
        _require(isinstance(pool, list), f"pool {i} must be an array")
        for j in pool:
            _require(isinstance(j, int), f"pool {i} contains a non-integer entry")
    labels_doc = doc.get("labels")
    labels: list[PoolLabel] | None = None
    if labels_doc is not None:
        _require(isinstance(labels_doc, list), "field 'labels' must be an array or null")
        _require(len(labels_doc) == t, f"expected {t} labels, found {len(labels_doc)}")
        labels = []
        for i, entry in enumerate(labels_doc):
            _require(isinstance(entry, dict), f"label {i} must be an object")
            slope = entry.get("slope")
            intercept = entry.get("intercept")
            _require(
                slope == INFINITY or (isinstance(slope, int) and 0 <= slope < q),
                f"label {i} has invalid slope {slope!r}",
            )
            _require(
                isinstance(intercept, int) and 0 <= intercept < q,
                f"label {i} has invalid intercept {intercept!r}",
            )
            labels.append(PoolLabel(slope, intercept))
    try:
        matrix = PoolingMatrix.from_pools(n, pools, labels=labels)
    except DomainError as exc:
        raise MatrixFormatError(str(exc)) from exc
    return MatrixFile(matrix=matrix, q=q, m=m)


def dump_matrix_json(matrix: PoolingMatrix, q: int, m: int) -> str:
    return json.dumps(matrix_document(matrix, q, m), indent=2) + "\n"


def load_matrix_json(text: str) -> MatrixFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    return matrix_from_document(doc)


def write_matrix_json(path: str, matrix: PoolingMatrix, q: int, m: int):
    with open(path, "w", newline="\n") as handle:
        handle.write(dump_matrix_json(matrix, q, m))


def read_matrix_json(path: str) -> MatrixFile:
    with open(path) as handle:
        return load_matrix_json(handle.read())


def dump_matrix_csv(matrix: PoolingMatrix) -> str:
    dense = matrix.to_dense()
    return "\n".join(",".join(str(int(v)) for v in row) for row in dense) + "\n"


def parse_matrix_csv(text: str) -> PoolingMatrix:
    rows: list[list[int]] = []
    width: int | None = None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for line_no, line in enumerate(lines, start=1):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise MatrixFormatError(
                f"row has {len(cells)} columns, expected {width}", line=line_no, column=1
            )
        row = []
        for col_no, cell in enumerate(cells, start=1):
            value = cell.strip()
            if value not in ("0", "1"):
                raise MatrixFormatError(
                    f"non-binary entry {cell!r}", line=line_no, column=col_no
                )
            row.append(int(value))
        rows.append(row)
    if not rows:
        raise MatrixFormatError("empty design file", line=1, column=1)
    try:
        return PoolingMatrix.from_dense(np.asarray(rows, dtype=np.uint8))
    except DomainError as exc:
        raise MatrixFormatError(str(exc)) from exc


def write_matrix_csv(path: str, matrix: PoolingMatrix):
    with open(path, "w", newline="\n") as handle:
        handle.write(dump_matrix_csv(matrix))


def read_matrix_csv(path: str) -> PoolingMatrix:
    with open(path) as handle:
        return parse_matrix_csv(handle.read())
