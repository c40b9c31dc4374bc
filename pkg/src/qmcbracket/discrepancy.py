"""Exact local-discrepancy evaluation and certification.

Everything in this module compares rationals by integer cross-multiplication;
no floating point is used anywhere.

Certification rests on an exact critical-grid reduction.  Write V_j for the
distinct j-th coordinates of the point set.  Inside any cell
prod_j (w_j, w'_j] of the grid generated by the V_j, the open-box count
#{x_i < z} is constant (it equals the closed count at the lower corner w) and
the box volume is monotone in z.  Hence

* min over the cube of the open local discrepancy is attained on the corner
  grid prod_j (V_j | {1}), and
* sup over the cube of the open local discrepancy equals the maximum of the
  closed-box discrepancy over prod_j ({0} | V_j) restricted to corners with
  every coordinate < 1 (corners with a coordinate equal to 1 bound empty
  half-open cells).

Both reductions are exact, so the verdicts below are certificates, not
approximations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceededError, InvalidParameterError
from .pointset import PointSet

#: Default enumeration budget, counted in grid corners examined.
DEFAULT_BUDGET = 10**9

#: Above this value of n * denominator**d the int64 fast path could overflow,
#: so the scan falls back to arbitrary-precision Python integers.
_INT64_SAFE = 1 << 62

RationalValue = Fraction

_CERTIFIED_NNLD = "certified-nnld"
_CERTIFIED_NPLD = "certified-npld"
_REFUTED = "refuted"
_STAR = "star-value"


@dataclass(frozen=True)
class DiscrepancyReport:
    """Outcome of a certification run.

    ``witness`` is the extremal corner: on refutation the corner violating
    the required inequality (re-evaluating ``local_disc_open`` /
    ``local_disc_closed`` there reproduces ``delta`` exactly); on
    certification the corner attaining the extreme discrepancy value.
    """

    verdict: str
    witness: tuple[Fraction, ...] | None
    delta: Fraction | None
    boxes: int

    def serialize(self) -> str:
        if self.witness is None:
            witness = "-"
        else:
            witness = ",".join(f"{z.numerator}/{z.denominator}" for z in self.witness)
        if self.delta is None:
            delta = "-"
        else:
            delta = f"{self.delta.numerator}/{self.delta.denominator}"
        return f"verdict={self.verdict} witness={witness} delta={delta} boxes={self.boxes}"


def _as_fraction_vector(z: Sequence) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in z)


def local_disc_open(ps: PointSet, z: Sequence) -> Fraction:
    """delta(z): empirical minus true measure of the half-open box [0, z)."""
    zf = _as_fraction_vector(z)
    if len(zf) != ps.d:
        raise InvalidParameterError(f"z has dimension {len(zf)}, point set has {ps.d}")
    den = ps.denominator
    count = 0
    for row in ps.coords:
        if all(int(v) * q.denominator < q.numerator * den for v, q in zip(row, zf)):
            count += 1
    volume = Fraction(1)
    for q in zf:
        volume *= q
    return Fraction(count, ps.n) - volume


def local_disc_closed(ps: PointSet, z: Sequence) -> Fraction:
    """delta-bar(z): the same with the closed box [0, z]."""
    zf = _as_fraction_vector(z)
    if len(zf) != ps.d:
        raise InvalidParameterError(f"z has dimension {len(zf)}, point set has {ps.d}")
    den = ps.denominator
    count = 0
    for row in ps.coords:
        if all(int(v) * q.denominator <= q.numerator * den for v, q in zip(row, zf)):
            count += 1
    volume = Fraction(1)
    for q in zf:
        volume *= q
    return Fraction(count, ps.n) - volume


def is_projection_regular(ps: PointSet) -> bool:
    """True iff every 1-d projection equals {0, 1/n, ..., (n-1)/n} as a set."""
    n, den = ps.n, ps.denominator
    for j in range(ps.d):
        vals = ps.distinct_values(j)
        if len(vals) != n:
            return False
        # vals[k]/den == k/n  <=>  vals[k]*n == k*den
        if not np.array_equal(vals * n, np.arange(n, dtype=np.int64) * den):
            return False
    return True


def structural_prechecks(ps: PointSet) -> list[tuple[str, bool]]:
    """Fast necessary conditions for the NNLD property.

    Returns (check name, passed) pairs; failing any check proves the set is
    not NNLD.  The diagonal-corner check applies only to projection-regular
    sets and passes vacuously otherwise.
    """
    n, den = ps.n, ps.denominator
    origin_ok = bool((ps.coords == 0).all(axis=1).any())
    upper_ok = bool((ps.coords * n <= den * (n - 1)).all())
    diag_ok = True
    if is_projection_regular(ps):
        target = den * (n - 1)  # numerator*n == den*(n-1) marks the value (n-1)/n
        diag_ok = bool(((ps.coords * n) == target).all(axis=1).any())
    return [
        ("origin-member", origin_ok),
        ("within-upper-bound", upper_ok),
        ("diagonal-corner", diag_ok),
    ]


def _precheck_witness(ps: PointSet) -> tuple[tuple[Fraction, ...], Fraction] | None:
    """Witness corner with provably negative open discrepancy, from the prechecks."""
    n, den = ps.n, ps.denominator
    coords = ps.coords
    if not (coords == 0).all(axis=1).any():
        positive = coords[coords > 0]
        c = Fraction(int(positive.min()), den)
        witness = (c,) * ps.d
        return witness, local_disc_open(ps, witness)
    over = np.argwhere(coords * n > den * (n - 1))
    if over.size:
        i, j = (int(v) for v in over[0])
        witness = tuple(
            Fraction(int(coords[i, j]), den) if jj == j else Fraction(1) for jj in range(ps.d)
        )
        return witness, local_disc_open(ps, witness)
    if ps.d >= 2 and is_projection_regular(ps):
        target = den * (n - 1)
        if not ((coords * n) == target).all(axis=1).any():
            # The unique point with first coordinate (n-1)/n misses the
            # corner in some other coordinate j; that pair of axes carries
            # the violation.
            i = int(np.flatnonzero(coords[:, 0] * n == target)[0])
            j = int(np.flatnonzero(coords[i] * n != target)[0])
            corner = Fraction(n - 1, n)
            witness = tuple(
                corner if jj in (0, j) else Fraction(1) for jj in range(ps.d)
            )
            return witness, local_disc_open(ps, witness)
    return None


def _grids_for(ps: PointSet, mode: str) -> list[np.ndarray]:
    den = ps.denominator
    grids = []
    for j in range(ps.d):
        vals = ps.distinct_values(j)
        if mode == "npld":
            vals = vals[vals < den]
            if len(vals) == 0 or vals[0] != 0:
                vals = np.concatenate([np.zeros(1, dtype=np.int64), vals])
        else:
            if len(vals) == 0 or vals[-1] != den:
                vals = np.concatenate([vals, np.asarray([den], dtype=np.int64)])
        grids.append(vals)
    return grids


def _outer_product(grids: Iterable[np.ndarray]) -> np.ndarray:
    out = None
    for g in grids:
        out = g if out is None else np.multiply.outer(out, g)
    assert out is not None
    return out


class _Scan:
    """Shared machinery: per-corner open/closed counts over the critical grid.

    The grid is sliced along axis 0 (ascending, so corners are visited in
    lexicographic order).  For each slice the counts over the remaining axes
    are obtained from a running histogram of point index vectors followed by
    inclusive cumulative sums, which is exactly the number of points weakly
    below each corner index.
    """

    def __init__(self, ps: PointSet, grids: list[np.ndarray], budget: int | None):
        self.ps = ps
        self.grids = grids
        self.sizes = [len(g) for g in grids]
        self.total = 1
        for k in self.sizes:
            self.total *= k
        budget = DEFAULT_BUDGET if budget is None else budget
        if self.total > budget:
            raise BudgetExceededError(
                f"critical grid holds {self.total} corners, budget is {budget}; "
                "raise the budget or reduce n/d"
            )
        self.dd = ps.denominator**ps.d
        self.scale = ps.n * self.dd
        self.object_mode = self.scale >= _INT64_SAFE
        self.rest_shape = tuple(self.sizes[1:])
        self.rest_size = 1
        for k in self.rest_shape:
            self.rest_size *= k

    def indices(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        """Per-point grid insertion indices and the keep mask for counting side."""
        cols = []
        for j, grid in enumerate(self.grids):
            cols.append(np.searchsorted(grid, self.ps.coords[:, j], side=side))
        s = np.stack(cols, axis=1)
        keep = np.ones(self.ps.n, dtype=bool)
        for j, grid in enumerate(self.grids):
            keep &= s[:, j] < len(grid)
        return s[keep], keep

    def rest_volume(self) -> np.ndarray | int:
        if not self.rest_shape:
            return 1
        if self.object_mode:
            return _outer_product([g.astype(object) for g in self.grids[1:]])
        return _outer_product(self.grids[1:])


def _slice_runs(s0: np.ndarray, k0: int) -> list[np.ndarray]:
    """Row indices grouped by axis-0 grid index."""
    order = np.argsort(s0, kind="stable")
    sorted_vals = s0[order]
    bounds = np.searchsorted(sorted_vals, np.arange(k0 + 1))
    return [order[bounds[t] : bounds[t + 1]] for t in range(k0)]


def _cumulate(hist: np.ndarray, object_mode: bool, out: np.ndarray | None = None) -> np.ndarray:
    if object_mode:
        cum = hist.copy()
        for ax in range(cum.ndim):
            cum = np.cumsum(cum, axis=ax)
        return cum
    assert out is not None
    np.copyto(out, hist)
    for ax in range(out.ndim):
        np.cumsum(out, axis=ax, out=out)
    return out


def _one_sided_scan(ps: PointSet, mode: str, budget: int | None):
    """Scan for verify_nnld / verify_npld.

    Returns (violation_corner_indices | None, extreme_margin, extreme_corner,
    boxes, scan) where margins are delta * n * den**d as exact integers,
    oriented so the property requires margin >= 0 everywhere.
    """
    grids = _grids_for(ps, mode)
    scan = _Scan(ps, grids, budget)
    side = "right" if mode == "nnld" else "left"
    s, _ = scan.indices(side)
    n, dd = ps.n, scan.dd
    k0 = scan.sizes[0]
    g0 = grids[0]

    if ps.d == 1:
        counts = np.bincount(s[:, 0], minlength=k0)
        cum = np.cumsum(counts)
        margins = [int(cum[t]) * dd - n * int(g0[t]) for t in range(k0)]
        if mode == "npld":
            margins = [-v for v in margins]
        best_t = min(range(k0), key=lambda t: (margins[t], t))
        boxes = k0
        viol = next(((t,) for t in range(k0) if margins[t] < 0), None)
        return viol, margins[best_t], (best_t,), boxes, scan

    rest_vol = scan.rest_volume()
    runs = _slice_runs(s[:, 0], k0)
    rest_idx = s[:, 1:]
    dtype = object if scan.object_mode else np.int64
    hist = np.zeros(scan.rest_shape, dtype=dtype)
    cumbuf = None if scan.object_mode else np.empty(scan.rest_shape, dtype=np.int64)
    volbuf = None if scan.object_mode else np.empty(scan.rest_shape, dtype=np.int64)

    best_margin = None
    best_corner: tuple[int, ...] = ()
    boxes = 0
    for t0 in range(k0):
        rows = runs[t0]
        if len(rows):
            np.add.at(hist, tuple(rest_idx[rows].T), 1)
        cum = _cumulate(hist, scan.object_mode, cumbuf)
        vol_scalar = n * int(g0[t0])
        if scan.object_mode:
            counts_scaled = cum * dd
            vol_scaled = rest_vol * vol_scalar
            margin = counts_scaled - vol_scaled if mode == "nnld" else vol_scaled - counts_scaled
        else:
            np.multiply(cum, dd, out=cum)
            np.multiply(rest_vol, vol_scalar, out=volbuf)
            if mode == "nnld":
                np.subtract(cum, volbuf, out=cum)
            else:
                np.subtract(volbuf, cum, out=cum)
            margin = cum
        flat = margin.reshape(-1)
        boxes += scan.rest_size
        mn_pos = int(np.argmin(flat)) if not scan.object_mode else min(
            range(len(flat)), key=lambda i: flat[i]
        )
        mn = int(flat[mn_pos])
        if best_margin is None or mn < best_margin:
            best_margin = mn
            best_corner = (t0,) + tuple(
                int(v) for v in np.unravel_index(mn_pos, scan.rest_shape)
            )
        if mn < 0:
            first = int(np.argmax(flat < 0))
            corner = (t0,) + tuple(int(v) for v in np.unravel_index(first, scan.rest_shape))
            return corner, best_margin, best_corner, boxes, scan
    assert best_margin is not None
    return None, best_margin, best_corner, boxes, scan


def _corner_fractions(grids: list[np.ndarray], idx: tuple[int, ...], den: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(int(grids[j][t]), den) for j, t in enumerate(idx))


def _margin_delta(margin: int, scan: _Scan, mode: str) -> Fraction:
    # margin = sign * (count*den^d - n*prod(g)); delta = (count/n - vol)
    signed = margin if mode == "nnld" else -margin
    return Fraction(signed, scan.scale)


def verify_nnld(ps: PointSet, budget: int | None = None) -> DiscrepancyReport:
    """Certify delta(z) >= 0 for every z in the unit cube, or refute with a witness.

    Structural prechecks run first (each failure yields a corner with
    provably negative discrepancy); otherwise the corner grid
    prod_j (V_j | {1}) is enumerated exactly.  The refutation witness is the
    lexicographically first violating corner of that grid.
    """
    pre = _precheck_witness(ps)
    if pre is not None:
        witness, delta = pre
        return DiscrepancyReport(_REFUTED, witness, delta, boxes=1)
    viol, margin, corner, boxes, scan = _one_sided_scan(ps, "nnld", budget)
    grids = scan.grids
    if viol is not None:
        witness = _corner_fractions(grids, viol, ps.denominator)
        return DiscrepancyReport(_REFUTED, witness, local_disc_open(ps, witness), boxes)
    witness = _corner_fractions(grids, corner, ps.denominator)
    return DiscrepancyReport(_CERTIFIED_NNLD, witness, _margin_delta(margin, scan, "nnld"), boxes)


def verify_npld(ps: PointSet, budget: int | None = None) -> DiscrepancyReport:
    """Certify delta(z) <= 0 everywhere, or refute with a witness corner.

    Enumerates the closed-box discrepancy on prod_j ({0} | V_j), excluding
    corners with any coordinate equal to 1 (those bound empty half-open
    cells, cf. the module docstring).
    """
    viol, margin, corner, boxes, scan = _one_sided_scan(ps, "npld", budget)
    grids = scan.grids
    if viol is not None:
        witness = _corner_fractions(grids, viol, ps.denominator)
        return DiscrepancyReport(_REFUTED, witness, local_disc_closed(ps, witness), boxes)
    witness = _corner_fractions(grids, corner, ps.denominator)
    return DiscrepancyReport(_CERTIFIED_NPLD, witness, _margin_delta(margin, scan, "npld"), boxes)


def star_discrepancy(ps: PointSet, budget: int | None = None) -> tuple[Fraction, DiscrepancyReport]:
    """Exact D_n* by corner enumeration.

    D_n* = max over corners z of prod_j (V_j | {1}) of
    max( vol(z) - open_count(z)/n , closed_count(z)/n - vol(z) ),
    reported together with the extremal corner.  ``delta`` in the report is
    the signed discrepancy at that corner (open if the deficit side won,
    closed otherwise).
    """
    grids = _grids_for(ps, "star")
    scan = _Scan(ps, grids, budget)
    s_open, _ = scan.indices("right")
    s_closed, _ = scan.indices("left")
    n, dd = ps.n, scan.dd
    k0 = scan.sizes[0]
    g0 = grids[0]

    if ps.d == 1:
        c_open = np.cumsum(np.bincount(s_open[:, 0], minlength=k0))
        c_closed = np.cumsum(np.bincount(s_closed[:, 0], minlength=k0))
        best = None
        for t in range(k0):
            vol = n * int(g0[t])
            deficit = vol - int(c_open[t]) * dd
            excess = int(c_closed[t]) * dd - vol
            val = max(deficit, excess)
            if best is None or val > best[0]:
                best = (val, (t,), excess >= deficit)
        assert best is not None
        val, corner, closed_side = best
        witness = _corner_fractions(grids, corner, ps.denominator)
        dstar = Fraction(max(val, 0), scan.scale)
        delta = Fraction(val if closed_side else -val, scan.scale)
        return dstar, DiscrepancyReport(_STAR, witness, delta, k0)

    rest_vol = scan.rest_volume()
    runs_open = _slice_runs(s_open[:, 0], k0)
    runs_closed = _slice_runs(s_closed[:, 0], k0)
    rest_open = s_open[:, 1:]
    rest_closed = s_closed[:, 1:]
    dtype = object if scan.object_mode else np.int64
    hist_open = np.zeros(scan.rest_shape, dtype=dtype)
    hist_closed = np.zeros(scan.rest_shape, dtype=dtype)
    bufs = (
        (None, None, None)
        if scan.object_mode
        else tuple(np.empty(scan.rest_shape, dtype=np.int64) for _ in range(3))
    )

    best: tuple[int, tuple[int, ...], bool] | None = None
    boxes = 0
    for t0 in range(k0):
        rows = runs_open[t0]
        if len(rows):
            np.add.at(hist_open, tuple(rest_open[rows].T), 1)
        rows = runs_closed[t0]
        if len(rows):
            np.add.at(hist_closed, tuple(rest_closed[rows].T), 1)
        vol_scalar = n * int(g0[t0])
        if scan.object_mode:
            vol = rest_vol * vol_scalar
            deficit = vol - _cumulate(hist_open, True) * dd
            excess = _cumulate(hist_closed, True) * dd - vol
            val = np.maximum(deficit, excess)
            flat = val.reshape(-1)
            pos = max(range(len(flat)), key=lambda i: (flat[i], -i))
            pos = min(
                (i for i in range(len(flat)) if flat[i] == flat[pos]), default=pos
            )
        else:
            cum_open, cum_closed, volbuf = bufs
            _cumulate(hist_open, False, cum_open)
            _cumulate(hist_closed, False, cum_closed)
            np.multiply(cum_open, dd, out=cum_open)
            np.multiply(cum_closed, dd, out=cum_closed)
            np.multiply(rest_vol, vol_scalar, out=volbuf)
            np.subtract(volbuf, cum_open, out=cum_open)   # deficit
            np.subtract(cum_closed, volbuf, out=cum_closed)  # excess
            deficit, excess = cum_open, cum_closed
            val = np.maximum(deficit, excess)
            flat = val.reshape(-1)
            pos = int(np.argmax(flat))
        boxes += scan.rest_size
        mx = int(flat[pos])
        if best is None or mx > best[0]:
            idx = tuple(int(v) for v in np.unravel_index(pos, scan.rest_shape))
            closed_side = bool(excess.reshape(-1)[pos] >= deficit.reshape(-1)[pos])
            best = (mx, (t0,) + idx, closed_side)
    assert best is not None
    val, corner, closed_side = best
    witness = _corner_fractions(grids, corner, ps.denominator)
    dstar = Fraction(max(val, 0), scan.scale)
    delta = Fraction(val if closed_side else -val, scan.scale)
    return dstar, DiscrepancyReport(_STAR, witness, delta, boxes)


def hammersley_star_disc_formula(m: int) -> Fraction:
    """Closed-form base-2 Hammersley discrepancy value (1/n)[m/3 + (1 - (-1/2)^m)/9].

    Note: this classical value coincides with the supremum of |delta| over
    boxes whose corners lie on the n-grid {0, 1/n, ..., 1}^2; the
    unrestricted supremum computed by :func:`star_discrepancy` is strictly
    larger for these sets (see the test suite).
    """
    if m < 1:
        raise InvalidParameterError("m must be >= 1")
    n = 2**m
    return (Fraction(m, 3) + Fraction(1, 9) * (1 - Fraction((-1) ** m, n))) / n


def star_discrepancy_on_unit_grid(ps: PointSet, resolution: int | None = None) -> Fraction:
    """sup |delta(z)| restricted to z on the grid {0, 1/r, ..., 1}^d, r = resolution.

    Diagnostic companion to :func:`star_discrepancy` (default r = n).  This
    restricted supremum is what the classical Hammersley closed form
    measures.
    """
    r = ps.n if resolution is None else resolution
    den = ps.denominator
    best = Fraction(0)
    grids = [np.arange(r + 1, dtype=np.int64)] * ps.d

    counts = np.zeros((r + 1,) * ps.d, dtype=np.int64)
    idx_cols = []
    keep = np.ones(ps.n, dtype=bool)
    for j in range(ps.d):
        # x < k/r  <=>  x*r < k*den; insertion index is the first k with x*r < k*den
        s = ps.coords[:, j] * r // den + 1
        exact = (ps.coords[:, j] * r) % den == 0
        s = np.where(exact, ps.coords[:, j] * r // den + 1, s)
        idx_cols.append(s)
        keep &= s <= r
    s = np.stack(idx_cols, axis=1)[keep]
    if len(s):
        np.add.at(counts, tuple(s.T), 1)
    for ax in range(counts.ndim):
        np.cumsum(counts, axis=ax, out=counts)
    vol = _outer_product(grids).astype(object)
    margins = counts.astype(object) * (r**ps.d) - ps.n * vol
    worst = max(int(np.abs(margins).max()), 0)
    best = Fraction(worst, ps.n * r**ps.d)
    return best
