"""Exact-coordinate point sets on the unit cube.

Every construction stores its points as integer numerators over a single
common denominator, so that certification code can later compare empirical
counts against box volumes with integer arithmetic only.

Conventions fixed here and used everywhere:

* digits: ``i = sum_k a[k] * b**(k-1)`` with ``a[1]`` the least significant
  digit, and the digit vector of ``i`` is ``(a[1], ..., a[m])``;
* point order: digital nets and lattices are emitted with index ``i``
  ascending, Cartesian products row-major with the second factor fastest.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import CapacityError, InvalidParameterError

#: Largest supported common denominator (b**m); beyond this the exact
#: integer comparisons would need guards everywhere while serving no
#: desk-scale use case.
MAX_DENOMINATOR = 1 << 40

#: Largest supported number of points in a single set.
MAX_POINTS = 1 << 25


@dataclass(frozen=True)
class Provenance:
    """Construction descriptor attached to every point set.

    ``params`` holds primitive construction parameters, ``parents`` the
    provenance of input sets for derived constructions (transforms,
    products).  The descriptor is what certificate code inspects to decide
    whether a set is backed by a construction-level guarantee.
    """

    name: str
    params: tuple[tuple[str, object], ...] = ()
    parents: tuple["Provenance", ...] = ()

    def describe(self) -> str:
        if self.name == "_verbatim":
            return str(self.params[0][1])
        inner = [f"{key}={value}" for key, value in self.params]
        inner.extend(parent.describe() for parent in self.parents)
        return f"{self.name}({', '.join(inner)})"


@dataclass(frozen=True, eq=False)
class PointSet:
    """n points in [0,1]^d with exact rational coordinates.

    ``coords`` is an (n, d) int64 array of numerators over ``denominator``.
    Instances are immutable; the coordinate array is marked read-only.
    """

    d: int
    n: int
    denominator: int
    coords: np.ndarray
    provenance: Provenance = Provenance("unknown")

    def __post_init__(self) -> None:
        if self.d < 1 or self.n < 1:
            raise InvalidParameterError("point sets need n >= 1 and d >= 1")
        if self.denominator < 1:
            raise InvalidParameterError("denominator must be positive")
        if self.denominator > MAX_DENOMINATOR:
            raise CapacityError(
                f"denominator {self.denominator} exceeds capacity {MAX_DENOMINATOR}"
            )
        coords = np.ascontiguousarray(self.coords, dtype=np.int64)
        if coords.shape != (self.n, self.d):
            raise InvalidParameterError(
                f"coordinate array has shape {coords.shape}, expected {(self.n, self.d)}"
            )
        if self.n > MAX_POINTS:
            raise CapacityError(f"{self.n} points exceed capacity {MAX_POINTS}")
        if coords.size and (coords.min() < 0 or coords.max() > self.denominator):
            raise InvalidParameterError("numerators must lie in [0, denominator]")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return (
            self.d == other.d
            and self.n == other.n
            and self.denominator == other.denominator
            and bool(np.array_equal(self.coords, other.coords))
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"PointSet(d={self.d}, n={self.n}, den={self.denominator}, "
            f"provenance={self.provenance.describe()})"
        )

    def distinct_values(self, j: int) -> np.ndarray:
        """Sorted distinct numerators of coordinate ``j`` (0-based)."""
        return np.unique(self.coords[:, j])

    def fractions(self) -> list[tuple[Fraction, ...]]:
        den = self.denominator
        return [tuple(Fraction(int(v), den) for v in row) for row in self.coords]

    def row_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in row) for row in self.coords}

    def contains(self, numerators: Sequence[int]) -> bool:
        row = np.asarray(numerators, dtype=np.int64)
        return bool((self.coords == row).all(axis=1).any())


@dataclass(frozen=True)
class Permutation:
    """A permutation of {1..m}, stored as the image tuple (pi(1), ..., pi(m))."""

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        m = len(self.mapping)
        if m == 0 or sorted(self.mapping) != list(range(1, m + 1)):
            raise InvalidParameterError(f"not a permutation of 1..{m}: {self.mapping}")

    @property
    def size(self) -> int:
        return len(self.mapping)

    def __call__(self, k: int) -> int:
        return self.mapping[k - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for k, v in enumerate(self.mapping, start=1):
            inv[v - 1] = k
        return Permutation(tuple(inv))

    def matrix(self, b: int) -> "GeneratorMatrix":
        m = self.size
        rows = np.zeros((m, m), dtype=np.int64)
        for k, v in enumerate(self.mapping):
            rows[k, v - 1] = 1
        return GeneratorMatrix(b, tuple(map(tuple, rows.tolist())))

    @staticmethod
    def identity(m: int) -> "Permutation":
        return Permutation(tuple(range(1, m + 1)))

    @staticmethod
    def reversal(m: int) -> "Permutation":
        return Permutation(tuple(range(m, 0, -1)))


@dataclass(frozen=True)
class GeneratorMatrix:
    """m x m matrix over Z_b driving one coordinate of a digital net."""

    b: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.b < 2:
            raise InvalidParameterError("base must be >= 2")
        m = len(self.entries)
        if m == 0 or any(len(row) != m for row in self.entries):
            raise InvalidParameterError("generator matrix must be square and non-empty")
        flat = [v for row in self.entries for v in row]
        if min(flat) < 0 or max(flat) >= self.b:
            raise InvalidParameterError("entries must lie in {0..b-1}")

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=np.int64)

    def is_permutation_like(self) -> bool:
        """True when every row is a one-hot 0/1 vector (permutation rows allowed to repeat)."""
        for row in self.entries:
            if sum(row) != 1 or any(v not in (0, 1) for v in row):
                return False
        return True

    def digits_row_major(self) -> str:
        if self.b > 10:
            raise InvalidParameterError("digit serialization supports b <= 10")
        return "".join(str(v) for row in self.entries for v in row)

    @staticmethod
    def from_digits(b: int, m: int, digits: str) -> "GeneratorMatrix":
        digits = digits.strip()
        if len(digits) != m * m or not digits.isdigit():
            raise InvalidParameterError(f"expected {m * m} digits, got {digits!r}")
        vals = [int(c) for c in digits]
        rows = tuple(tuple(vals[r * m : (r + 1) * m]) for r in range(m))
        return GeneratorMatrix(b, rows)

    @staticmethod
    def identity(b: int, m: int) -> "GeneratorMatrix":
        return GeneratorMatrix(b, tuple(tuple(int(r == s) for s in range(m)) for r in range(m)))


@dataclass(frozen=True)
class DigitalNetSpec:
    """Base, size and the d generator matrices of a digital construction."""

    b: int
    m: int
    d: int
    matrices: tuple[GeneratorMatrix, ...]

    def __post_init__(self) -> None:
        if self.b < 2 or self.m < 1 or self.d < 1:
            raise InvalidParameterError("need b >= 2, m >= 1, d >= 1")
        if len(self.matrices) != self.d:
            raise InvalidParameterError("need exactly d generator matrices")
        for mat in self.matrices:
            if mat.b != self.b or mat.m != self.m:
                raise InvalidParameterError("all matrices must share b and m")

    def is_permutation_net(self) -> bool:
        return all(mat.is_permutation_like() for mat in self.matrices)

    @staticmethod
    def from_permutations(b: int, perms: Sequence[Permutation]) -> "DigitalNetSpec":
        if not perms:
            raise InvalidParameterError("need at least one permutation")
        m = perms[0].size
        if any(p.size != m for p in perms):
            raise InvalidParameterError("all permutations must share the size m")
        return DigitalNetSpec(b, m, len(perms), tuple(p.matrix(b) for p in perms))


def _checked_power(b: int, m: int) -> int:
    if b < 2 or m < 1:
        raise InvalidParameterError("need b >= 2 and m >= 1")
    n = b**m
    if n > MAX_DENOMINATOR:
        raise CapacityError(f"b**m = {n} exceeds capacity {MAX_DENOMINATOR}")
    return n


def _digit_matrix(n: int, b: int, m: int) -> np.ndarray:
    """(n, m) array with row i holding the base-b digits of i, least significant first."""
    idx = np.arange(n, dtype=np.int64)
    digits = np.empty((n, m), dtype=np.int64)
    for k in range(m):
        digits[:, k] = idx % b
        idx = idx // b
    return digits


def grid_1d(n: int) -> PointSet:
    """The one-dimensional left-endpoint grid {0, 1/n, ..., (n-1)/n}."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if n > MAX_DENOMINATOR:
        raise CapacityError(f"n = {n} exceeds capacity {MAX_DENOMINATOR}")
    coords = np.arange(n, dtype=np.int64).reshape(n, 1)
    return PointSet(1, n, n, coords, Provenance("grid_1d", (("n", n),)))


def digital_net(spec: DigitalNetSpec, provenance: Provenance | None = None) -> PointSet:
    """Digital net over Z_b: coordinate j of point i expands C^(j) @ digits(i) mod b."""
    n = _checked_power(spec.b, spec.m)
    digits = _digit_matrix(n, spec.b, spec.m)
    weights = spec.b ** (spec.m - 1 - np.arange(spec.m, dtype=np.int64))
    cols = []
    for mat in spec.matrices:
        out_digits = (digits @ mat.array.T) % spec.b
        cols.append(out_digits @ weights)
    coords = np.stack(cols, axis=1)
    if provenance is None:
        provenance = Provenance(
            "digital_net",
            (
                ("b", spec.b),
                ("m", spec.m),
                ("d", spec.d),
                ("permutation_matrices", spec.is_permutation_net()),
                ("matrices", ";".join(mat.digits_row_major() for mat in spec.matrices)),
            ),
        )
    return PointSet(spec.d, n, n, coords, provenance)


def permutation_net(b: int, m: int, perms: Sequence[Permutation]) -> PointSet:
    """Digital net whose generator matrices are the given permutation matrices."""
    spec = DigitalNetSpec.from_permutations(b, list(perms))
    if spec.m != m:
        raise InvalidParameterError(f"permutations have size {spec.m}, expected m={m}")
    prov = Provenance(
        "permutation_net",
        (("b", b), ("m", m), ("perms", ";".join(",".join(map(str, p.mapping)) for p in perms))),
    )
    return digital_net(spec, prov)


def hammersley(b: int, m: int) -> PointSet:
    """The n = b**m two-dimensional Hammersley set {(i/n, i'/n)}.

    i' reverses the m base-b digits of i.  The emitted order is the digital
    net order for generators (identity, reversed identity), i.e. point i is
    (rev(i)/n, i/n); the set of points is exactly {(i/n, i'/n) : 0 <= i < n}.
    """
    ps = permutation_net(b, m, [Permutation.identity(m), Permutation.reversal(m)])
    return PointSet(2, ps.n, ps.denominator, ps.coords, Provenance("hammersley", (("b", b), ("m", m))))


def rank1_lattice(n: int, g: Sequence[int]) -> PointSet:
    """Rank-1 lattice {((i * g) mod n) / n : 0 <= i < n}."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if n > MAX_DENOMINATOR:
        raise CapacityError(f"n = {n} exceeds capacity {MAX_DENOMINATOR}")
    gvec = tuple(int(v) for v in g)
    if not gvec or any(v < 1 for v in gvec):
        raise InvalidParameterError("generating vector components must be >= 1")
    idx = np.arange(n, dtype=np.int64)
    coords = np.stack([(idx * v) % n for v in gvec], axis=1)
    prov = Provenance("rank1_lattice", (("n", n), ("g", ",".join(map(str, gvec)))))
    return PointSet(len(gvec), n, n, coords, prov)


def rank1_lattice_powers(b: int, m: int, d: int) -> PointSet:
    """Rank-1 lattice with generating vector (1, b, b^2, ..., b^(d-1)) and n = b**m."""
    if d < 1 or m < d:
        raise InvalidParameterError("need m >= d >= 1")
    n = _checked_power(b, m)
    ps = rank1_lattice(n, tuple(b**j for j in range(d)))
    prov = Provenance("rank1_lattice_powers", (("b", b), ("m", m), ("d", d)))
    return PointSet(d, n, n, ps.coords, prov)


def diagonal_lattice(n: int, d: int) -> PointSet:
    """The n points (k/n, ..., k/n) on the main diagonal."""
    if n < 1 or d < 1:
        raise InvalidParameterError("need n >= 1 and d >= 1")
    if n > MAX_DENOMINATOR:
        raise CapacityError(f"n = {n} exceeds capacity {MAX_DENOMINATOR}")
    col = np.arange(n, dtype=np.int64)
    coords = np.repeat(col.reshape(n, 1), d, axis=1)
    return PointSet(d, n, n, coords, Provenance("diagonal_lattice", (("n", n), ("d", d))))


def reflect(ps: PointSet) -> PointSet:
    """Coordinatewise reflection x -> 1 - x."""
    coords = ps.denominator - ps.coords
    return PointSet(ps.d, ps.n, ps.denominator, coords, Provenance("reflect", (), (ps.provenance,)))


def _with_nth_denominator(ps: PointSet) -> tuple[np.ndarray, int, int]:
    """Coordinates rescaled so the denominator is divisible by n; returns (coords, den, den // n)."""
    den = ps.denominator
    if den % ps.n:
        den = den * ps.n // math.gcd(den, ps.n)
        if den > MAX_DENOMINATOR:
            raise CapacityError("rescaled denominator exceeds capacity")
        coords = ps.coords * (den // ps.denominator)
    else:
        coords = ps.coords.copy()
    return coords, den, den // ps.n


def shift_reflect(ps: PointSet) -> PointSet:
    """x -> 1 - (1/n + x) per coordinate; requires all coordinates <= 1 - 1/n."""
    coords, den, step = _with_nth_denominator(ps)
    if coords.size and coords.max() > den - step:
        raise InvalidParameterError("shift_reflect needs all coordinates <= 1 - 1/n")
    out = den - step - coords
    return PointSet(ps.d, ps.n, den, out, Provenance("shift_reflect", (), (ps.provenance,)))


def npld_transform(ps: PointSet) -> PointSet:
    """Two-dimensional transform (x1, x2) -> (1/n + x1, 1 - x2)."""
    if ps.d != 2:
        raise InvalidParameterError("npld_transform is defined for d = 2 only")
    coords, den, step = _with_nth_denominator(ps)
    if coords[:, 0].max() > den - step:
        raise InvalidParameterError("npld_transform needs first coordinates <= 1 - 1/n")
    out = coords.copy()
    out[:, 0] += step
    out[:, 1] = den - out[:, 1]
    return PointSet(2, ps.n, den, out, Provenance("npld_transform", (), (ps.provenance,)))


def cartesian_product(p: PointSet, q: PointSet) -> PointSet:
    """All pairs of points from p and q, q index varying fastest."""
    den = p.denominator * q.denominator // math.gcd(p.denominator, q.denominator)
    if den > MAX_DENOMINATOR:
        raise CapacityError("product denominator exceeds capacity")
    n = p.n * q.n
    if n > MAX_POINTS:
        raise CapacityError(f"product would hold {n} points, capacity {MAX_POINTS}")
    pc = p.coords * (den // p.denominator)
    qc = q.coords * (den // q.denominator)
    left = np.repeat(pc, q.n, axis=0)
    right = np.tile(qc, (p.n, 1))
    coords = np.concatenate([left, right], axis=1)
    prov = Provenance("cartesian_product", (), (p.provenance, q.provenance))
    return PointSet(p.d + q.d, n, den, coords, prov)


_HEADER_RE = re.compile(r"^# d=(\d+) n=(\d+) den=(\d+) provenance=(.*)$")


def write_pointset_csv(ps: PointSet, dest: str | Path | IO[str]) -> None:
    """Write the exact CSV form: a header line, then one row of numerators per point."""
    lines = [f"# d={ps.d} n={ps.n} den={ps.denominator} provenance={ps.provenance.describe()}"]
    lines.extend(",".join(str(int(v)) for v in row) for row in ps.coords)
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def read_pointset_csv(src: str | Path | IO[str]) -> PointSet:
    """Read the CSV form written by :func:`write_pointset_csv` (exact round trip)."""
    if hasattr(src, "read"):
        text = src.read()
    else:
        text = Path(src).read_text()
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise InvalidParameterError("empty point-set file")
    match = _HEADER_RE.match(lines[0])
    if not match:
        raise InvalidParameterError(f"malformed header line: {lines[0]!r}")
    d, n, den = int(match.group(1)), int(match.group(2)), int(match.group(3))
    prov = Provenance("_verbatim", (("text", match.group(4)),))
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != d:
            raise InvalidParameterError(f"row {line!r} does not have {d} fields")
        try:
            rows.append([int(v) for v in parts])
        except ValueError as exc:
            raise InvalidParameterError(f"non-integer numerator in {line!r}") from exc
    if len(rows) != n:
        raise InvalidParameterError(f"expected {n} rows, found {len(rows)}")
    return PointSet(d, n, den, np.asarray(rows, dtype=np.int64), prov)
