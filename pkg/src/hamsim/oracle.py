"""Black-box access to d-sparse Hermitian Hamiltonians, with query counting.

An oracle answers row queries: query(x, i) returns the i-th nonzero entry of
row x as (column index y, value H[x, y]), with 1 <= i <= d, and pads with
(x, 0) past the actual degree.  Nonzero slots always come first.  Every
query() call bumps a monotone counter; verification bridges (to_dense,
entry-list extraction) go through the uncounted peek() so measured query
complexity reflects the algorithms alone.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .config import OracleError, dense_cap

# tolerance for Hermitian pair consistency of caller-supplied columns
_PAIR_TOL = 1e-12


class QueryCounter:
    """Thread-safe monotone call counter."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    @property
    def count(self) -> int:
        return self._count

    def increment(self, by: int = 1) -> None:
        with self._lock:
            self._count += by

    def reset(self) -> None:
        with self._lock:
            self._count = 0


class SparseOracle:
    """Counted query access to a d-sparse Hermitian matrix on n bits."""

    def __init__(self, n: int, d: int,
                 fn: Callable[[int, int], tuple[int, complex]]) -> None:
        if n < 1:
            raise OracleError(f"need at least one vertex bit, got n={n}")
        if not 1 <= d <= (1 << n):
            raise OracleError(f"degree bound d={d} out of range for n={n}")
        self.n = n
        self.d = d
        self._fn = fn
        self.counter = QueryCounter()

    @property
    def dim(self) -> int:
        return 1 << self.n

    def _check_args(self, x: int, i: int) -> None:
        if not 0 <= x < self.dim:
            raise OracleError(f"vertex {x} out of range for n={self.n}")
        if not 1 <= i <= self.d:
            raise OracleError(f"slot {i} out of range for d={self.d}")

    def query(self, x: int, i: int) -> tuple[int, complex]:
        """Counted query: (y, H[x, y]) for the i-th nonzero of row x."""
        self._check_args(x, i)
        self.counter.increment()
        y, v = self._fn(x, i)
        return int(y), complex(v)

    def peek(self, x: int, i: int) -> tuple[int, complex]:
        """Uncounted access for verification and serialization bridges."""
        self._check_args(x, i)
        y, v = self._fn(x, i)
        return int(y), complex(v)

    def column(self, x: int) -> tuple[int, complex]:
        """Single counted probe, the 1-sparse piece interface (d must be 1)."""
        if self.d != 1:
            raise OracleError(f"column() needs a 1-sparse oracle, d={self.d}")
        return self.query(x, 1)


@dataclass(frozen=True)
class EntryList:
    """Serializable description: entries are (x, y, H[x, y]) with x <= y."""

    n: int
    d: int
    entries: tuple[tuple[int, int, complex], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        dim = 1 << self.n
        if self.n < 1 or not 1 <= self.d <= dim:
            raise OracleError(f"bad header n={self.n} d={self.d}")
        seen: set[tuple[int, int]] = set()
        for x, y, v in self.entries:
            if not (0 <= x < dim and 0 <= y < dim):
                raise OracleError(f"entry ({x}, {y}) out of range")
            if x > y:
                raise OracleError(f"entry ({x}, {y}) must be stored with x <= y")
            if (x, y) in seen:
                raise OracleError(f"duplicate entry for pair ({x}, {y})")
            seen.add((x, y))
            v = complex(v)
            if v == 0:
                raise OracleError(f"zero value stored for pair ({x}, {y})")
            if not (np.isfinite(v.real) and np.isfinite(v.imag)):
                raise OracleError(f"non-finite value for pair ({x}, {y})")
            if x == y and abs(v.imag) > _PAIR_TOL:
                raise OracleError(f"diagonal entry at {x} must be real, got {v}")


def _columns_fn(columns: dict[int, list[tuple[int, complex]]]
                ) -> Callable[[int, int], tuple[int, complex]]:
    def fn(x: int, i: int) -> tuple[int, complex]:
        row = columns.get(x)
        if row is not None and i <= len(row):
            return row[i - 1]
        return (x, 0j)

    return fn


def from_columns(n: int, d: int,
                 columns: dict[int, list[tuple[int, complex]]],
                 sort: bool = True) -> SparseOracle:
    """Oracle over explicit per-row neighbor lists.

    With sort=True (canonical) neighbors are ordered by ascending index;
    sort=False keeps the given order, which lets tests pin down arbitrary
    but stable slot layouts.  Validates range, degree, duplicates, and
    Hermitian pair consistency.
    """
    dim = 1 << n
    cols: dict[int, list[tuple[int, complex]]] = {}
    for x, row in columns.items():
        if not 0 <= x < dim:
            raise OracleError(f"vertex {x} out of range")
        if len(row) > d:
            raise OracleError(f"row {x} has {len(row)} neighbors, exceeds d={d}")
        seen: set[int] = set()
        out = []
        for y, v in row:
            if not 0 <= y < dim:
                raise OracleError(f"neighbor {y} of {x} out of range")
            if y in seen:
                raise OracleError(f"duplicate neighbor {y} in row {x}")
            seen.add(y)
            v = complex(v)
            if v == 0:
                raise OracleError(f"explicit zero entry at ({x}, {y})")
            if not (np.isfinite(v.real) and np.isfinite(v.imag)):
                raise OracleError(f"non-finite entry at ({x}, {y})")
            if y == x and abs(v.imag) > _PAIR_TOL:
                raise OracleError(f"diagonal entry at {x} must be real, got {v}")
            out.append((y, v))
        if sort:
            out.sort(key=lambda e: e[0])
        if out:
            cols[x] = out
    # Hermitian pair consistency: presence and conjugate values both ways.
    for x, row in cols.items():
        for y, v in row:
            if y == x:
                continue
            back = dict(cols.get(y, ()))
            if x not in back:
                raise OracleError(f"entry ({x}, {y}) has no mirror at row {y}")
            if abs(back[x] - v.conjugate()) > _PAIR_TOL:
                raise OracleError(
                    f"non-Hermitian pair ({x}, {y}): {v} vs {back[x]}")
    return SparseOracle(n, d, _columns_fn(cols))


def from_entry_list(el: EntryList, sort: bool = True) -> SparseOracle:
    """Oracle from a validated entry list (mirror entries are implied)."""
    columns: dict[int, list[tuple[int, complex]]] = {}
    for x, y, v in el.entries:
        v = complex(v)
        columns.setdefault(x, []).append((y, v))
        if y != x:
            columns.setdefault(y, []).append((x, v.conjugate()))
    return from_columns(el.n, el.d, columns, sort=sort)


def from_dense(H: np.ndarray, n: int, d: int | None = None) -> SparseOracle:
    """Oracle view of a dense Hermitian matrix of dimension 2^n."""
    H = np.asarray(H, dtype=complex)
    dim = 1 << n
    if H.shape != (dim, dim):
        raise OracleError(f"matrix shape {H.shape} does not match n={n}")
    columns: dict[int, list[tuple[int, complex]]] = {}
    degmax = 0
    for x in range(dim):
        row = [(int(y), complex(H[x, y])) for y in np.nonzero(H[x])[0]]
        if row:
            columns[x] = row
            degmax = max(degmax, len(row))
    if d is None:
        d = max(degmax, 1)
    return from_columns(n, d, columns, sort=True)


def to_dense(oracle: SparseOracle) -> np.ndarray:
    """Uncounted full extraction, validating oracle structure on the way.

    Checks: padding only after the nonzero slots, no duplicate neighbors,
    and Hermitian symmetry of the assembled matrix.
    """
    dim = oracle.dim
    if dim > dense_cap():
        raise OracleError(f"dimension {dim} exceeds dense cap {dense_cap()}")
    H = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        ended = False
        seen: set[int] = set()
        for i in range(1, oracle.d + 1):
            y, v = oracle.peek(x, i)
            if y == x and v == 0:
                ended = True
                continue
            if ended:
                raise OracleError(f"row {x}: nonzero slot {i} after padding")
            if y in seen:
                raise OracleError(f"row {x}: duplicate neighbor {y}")
            seen.add(y)
            if v == 0:
                raise OracleError(f"row {x}: explicit zero at slot {i}")
            H[x, y] = v
    dev = np.abs(H - H.conj().T).max() if dim else 0.0
    if dev > _PAIR_TOL:
        raise OracleError(f"oracle is not Hermitian: max deviation {dev:.3e}")
    return H


def to_entry_list(oracle: SparseOracle) -> EntryList:
    """Uncounted extraction to the canonical x <= y entry list."""
    dim = oracle.dim
    if dim > dense_cap():
        raise OracleError(f"dimension {dim} exceeds dense cap {dense_cap()}")
    entries = []
    for x in range(dim):
        for i in range(1, oracle.d + 1):
            y, v = oracle.peek(x, i)
            if y == x and v == 0:
                break
            if x <= y:
                entries.append((x, y, v))
    entries.sort(key=lambda e: (e[0], e[1]))
    return EntryList(oracle.n, oracle.d, tuple(entries))


def entry_list_to_text(el: EntryList) -> str:
    """Text form: header line `n d`, then `x y re im` per entry.

    Values are printed with 17 significant digits, which round-trips IEEE
    doubles exactly.
    """
    lines = [f"{el.n} {el.d}"]
    for x, y, v in el.entries:
        lines.append(f"{x} {y} {v.real:.17g} {v.imag:.17g}")
    return "\n".join(lines) + "\n"


def text_to_entry_list(text: str) -> EntryList:
    """Parse the entry-list format; blank lines and `#` comments are skipped."""
    header: tuple[int, int] | None = None
    entries: list[tuple[int, int, complex]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if header is None:
                if len(parts) != 2:
                    raise ValueError("expected `n d`")
                header = (int(parts[0]), int(parts[1]))
            else:
                if len(parts) != 4:
                    raise ValueError("expected `x y re im`")
                x, y = int(parts[0]), int(parts[1])
                v = complex(float(parts[2]), float(parts[3]))
                if x > y:
                    x, y, v = y, x, v.conjugate()
                entries.append((x, y, v))
        except ValueError as exc:
            raise OracleError(f"line {ln}: {exc} (got {raw!r})") from exc
    if header is None:
        raise OracleError("missing `n d` header line")
    return EntryList(header[0], header[1], tuple(entries))


def save_entry_list(el: EntryList, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(entry_list_to_text(el))


def load_entry_list(path: str) -> EntryList:
    with open(path, "r", encoding="ascii") as fh:
        return text_to_entry_list(fh.read())


def random_sparse(n: int, d: int, seed: int,
                  norm_target: float | None = None) -> SparseOracle:
    """Random d-sparse Hermitian oracle, deterministic in the seed.

    Mixes real diagonal entries with complex off-diagonal pairs; every row
    keeps at most d nonzeros.  With norm_target the whole matrix is rescaled
    to that spectral norm (requires the dimension to be under the dense cap).
    """
    rng = np.random.default_rng(seed)
    dim = 1 << n
    deg = [0] * dim
    neighbors: list[set[int]] = [set() for _ in range(dim)]
    columns: dict[int, list[tuple[int, complex]]] = {}

    def add(x: int, y: int, v: complex) -> None:
        columns.setdefault(x, []).append((y, v))
        neighbors[x].add(y)
        deg[x] += 1
        if y != x:
            columns.setdefault(y, []).append((x, v.conjugate()))
            neighbors[y].add(x)
            deg[y] += 1

    for x in range(dim):
        if rng.random() < 0.25 and deg[x] < d:
            add(x, x, complex(rng.uniform(-1.0, 1.0)))
    for _ in range(3 * d * dim):
        x = int(rng.integers(dim))
        y = int(rng.integers(dim))
        if x == y or deg[x] >= d or deg[y] >= d or y in neighbors[x]:
            continue
        add(min(x, y), max(x, y),
            complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))

    if norm_target is not None:
        oracle = from_columns(n, d, columns, sort=True)
        cur = float(np.linalg.norm(to_dense(oracle), 2))
        if cur == 0.0:
            raise OracleError("random instance came out empty, cannot rescale")
        scale = norm_target / cur
        columns = {x: [(y, v * scale) for y, v in row]
                   for x, row in columns.items()}
    return from_columns(n, d, columns, sort=True)


def shuffled_columns(oracle: SparseOracle, seed: int) -> SparseOracle:
    """Same Hamiltonian, each row's slot order permuted (deterministically).

    Exercises the promise that algorithms must not rely on any particular
    neighbor order, only on its stability.
    """
    rng = np.random.default_rng(seed)
    dim = oracle.dim
    if dim > dense_cap():
        raise OracleError(f"dimension {dim} exceeds dense cap {dense_cap()}")
    columns: dict[int, list[tuple[int, complex]]] = {}
    for x in range(dim):
        row = []
        for i in range(1, oracle.d + 1):
            y, v = oracle.peek(x, i)
            if y == x and v == 0:
                break
            row.append((y, v))
        if row:
            order = rng.permutation(len(row))
            columns[x] = [row[j] for j in order]
    return from_columns(oracle.n, oracle.d, columns, sort=False)
