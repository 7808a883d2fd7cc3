"""Exact algebra on continuous piecewise-linear paths.

A path is stored as its breakpoints (strictly increasing times starting at 0,
one value per time), interpreted as the linear interpolation between
consecutive breakpoints and constant after the last one.  All operations that
create new breakpoints (boundary hits, lattice crossings, merges) solve for
the crossing times in closed form, so downstream identities hold to roughly
1e-12 instead of some grid resolution.

Paths are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np


class DomainError(ValueError):
    """Raised when an operation is called outside its stated domain."""


#: tolerance used by canonicalization to drop collinear interior breakpoints
_COLLINEAR_TOL = 1e-12

#: tolerance of structural path comparison, see ``paths_equal``
EQUALITY_TOL = 1e-9


def _as_arrays(times, values):
    # always copy: the path must not alias caller-owned storage
    t = np.array(times, dtype=np.float64)
    v = np.array(values, dtype=np.float64)
    if t.ndim != 1 or v.ndim != 1 or t.size != v.size:
        raise DomainError("times and values must be 1-d arrays of equal length")
    if t.size == 0:
        raise DomainError("a path needs at least one breakpoint")
    if t[0] != 0.0:
        raise DomainError("first breakpoint time must be 0, got %r" % t[0])
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise DomainError("breakpoint times must be strictly increasing")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise DomainError("breakpoints must be finite")
    return t, v


def _canonicalize(t, v):
    """Drop redundant interior breakpoints and any trailing flat.

    A breakpoint is redundant when removing it moves the interpolated value
    at its time by at most ``_COLLINEAR_TOL`` (relative to the neighbouring
    value scale).  The pass repeats until stable, so canonicalization is
    idempotent; each pass perturbs evaluation by no more than the tolerance.
    """
    while t.size > 2:
        lerp = v[:-2] + (v[2:] - v[:-2]) * ((t[1:-1] - t[:-2]) / (t[2:] - t[:-2]))
        scale = np.maximum(
            1.0, np.maximum(np.abs(v[:-2]), np.maximum(np.abs(v[1:-1]), np.abs(v[2:])))
        )
        drop = np.abs(v[1:-1] - lerp) <= _COLLINEAR_TOL * scale
        if not drop.any():
            break
        keep = np.ones(t.size, dtype=bool)
        # never drop two adjacent points in one pass: the second test used
        # the first point as a neighbour
        k = 1
        while k <= drop.size:
            if drop[k - 1]:
                keep[k] = False
                k += 2
            else:
                k += 1
        t, v = t[keep], v[keep]
    # constant extension makes a final zero-slope point redundant
    while t.size >= 2 and v[-1] == v[-2]:
        t, v = t[:-1], v[:-1]
    return t, v


class PiecewiseLinearPath:
    """Continuous piecewise-linear path on [0, infinity).

    Parameters
    ----------
    times, values : array-like
        Breakpoint times (strictly increasing, starting at 0) and values.
        The constructor canonicalizes: collinear interior points and a
        trailing flat are removed, so structural equality is meaningful.
    """

    __slots__ = ("times", "values")

    def __init__(self, times, values):
        t, v = _as_arrays(times, values)
        t, v = _canonicalize(t, v)
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseLinearPath is immutable")

    # -- constructors and basic queries ----------------------------------

    @classmethod
    def from_breakpoints(cls, points):
        """Build from an iterable of (time, value) pairs."""
        pts = list(points)
        return cls([p[0] for p in pts], [p[1] for p in pts])

    @classmethod
    def zero(cls):
        return cls([0.0], [0.0])

    @property
    def end_time(self):
        """Time of the last breakpoint; the path is constant afterwards."""
        return float(self.times[-1])

    @property
    def end_value(self):
        return float(self.values[-1])

    def breakpoints(self):
        return list(zip(self.times.tolist(), self.values.tolist()))

    def __len__(self):
        return int(self.times.size)

    def __repr__(self):
        pts = ", ".join("(%g, %g)" % p for p in self.breakpoints()[:6])
        if len(self) > 6:
            pts += ", ..."
        return "PiecewiseLinearPath[%s]" % pts

    def evaluate(self, t):
        """Value at time ``t`` (scalar or array), constant past the end."""
        t_arr = np.asarray(t, dtype=np.float64)
        if np.any(t_arr < 0):
            raise DomainError("evaluate requires t >= 0")
        out = np.interp(t_arr, self.times, self.values)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    __call__ = evaluate

    # -- extrema, oscillation, variation -------------------------------

    def _check_interval(self, a, b):
        if a < 0 or a > b:
            raise DomainError("need 0 <= a <= b, got [%r, %r]" % (a, b))

    def _grid_on(self, a, b):
        """Times of all breakpoints in (a, b) plus both endpoints."""
        i = np.searchsorted(self.times, a, side="right")
        j = np.searchsorted(self.times, b, side="left")
        inner = self.times[i:j]
        return np.concatenate([[a], inner, [b]])

    def inf_on(self, a, b):
        """Exact minimum over [a, b] and the earliest time attaining it."""
        self._check_interval(a, b)
        grid = self._grid_on(a, b)
        vals = self.evaluate(grid)
        k = int(np.argmin(vals))
        return float(vals[k]), float(grid[k])

    def sup_on(self, a, b):
        """Exact maximum over [a, b] and the earliest time attaining it."""
        self._check_interval(a, b)
        grid = self._grid_on(a, b)
        vals = self.evaluate(grid)
        k = int(np.argmax(vals))
        return float(vals[k]), float(grid[k])

    def oscillation(self, a, b):
        """sup - inf over [a, b]."""
        self._check_interval(a, b)
        grid = self._grid_on(a, b)
        vals = self.evaluate(grid)
        return float(vals.max() - vals.min())

    def total_variation(self, a, b):
        """Sum of absolute value increments over [a, b]."""
        self._check_interval(a, b)
        grid = self._grid_on(a, b)
        vals = self.evaluate(grid)
        return float(np.abs(np.diff(vals)).sum())

    # -- constructive operations ---------------------------------------

    def restart(self, T):
        """Zero on [0, T], then follows the increments of the path.

        The result r satisfies r(t) = f(t) - f(T) for t >= T and r = 0 before.
        """
        if T < 0:
            raise DomainError("restart requires T >= 0")
        fT = self.evaluate(T)
        j = np.searchsorted(self.times, T, side="right")
        head_t = [0.0, T] if T > 0 else [0.0]
        head_v = [0.0] * len(head_t)
        t = np.concatenate([head_t, self.times[j:]])
        v = np.concatenate([head_v, self.values[j:] - fT])
        return PiecewiseLinearPath(t, v)

    def shifted(self, dv):
        """Path with ``dv`` added to every value."""
        return PiecewiseLinearPath(self.times, self.values + dv)

    def scaled(self, factor):
        """Path with every value multiplied by ``factor``."""
        return PiecewiseLinearPath(self.times, self.values * factor)

    def negated(self):
        return self.scaled(-1.0)

    def stopped(self, T):
        """Path frozen at its value from time T on (f(. ^ T))."""
        if T < 0:
            raise DomainError("stopped requires T >= 0")
        fT = self.evaluate(T)
        j = np.searchsorted(self.times, T, side="left")
        t = np.concatenate([self.times[:j], [T]])
        v = np.concatenate([self.values[:j], [fT]])
        return PiecewiseLinearPath(t, v)

    def sawtooth_reflect(self, h):
        """Pointwise composition with the period-2h triangle wave.

        The wave interpolates the lattice points (2kh, 0) and ((2k+1)h, h),
        so the result is the path folded into [0, h].  Output breakpoints
        include every crossing of a lattice level k*h, keeping the result
        exactly piecewise linear.
        """
        if h <= 0:
            raise DomainError("sawtooth_reflect requires h > 0")
        t, v = self.times, self.values
        out_t = [t[0]]
        out_v = [_fold(v[0], h)]
        for k in range(t.size - 1):
            t0, t1 = t[k], t[k + 1]
            v0, v1 = v[k], v[k + 1]
            if v1 != v0:
                lo, hi = (v0, v1) if v0 < v1 else (v1, v0)
                k0 = math.floor(lo / h) + 1
                k1 = math.ceil(hi / h) - 1
                levels = [m * h for m in range(k0, k1 + 1)]
                if v0 > v1:
                    levels.reverse()
                for lev in levels:
                    tc = t0 + (t1 - t0) * (lev - v0) / (v1 - v0)
                    if t0 < tc < t1:
                        out_t.append(tc)
                        out_v.append(_fold(lev, h))
            out_t.append(t1)
            out_v.append(_fold(v1, h))
        return PiecewiseLinearPath(out_t, out_v)


def _fold(x, h):
    """Triangle wave through (2kh, 0) and ((2k+1)h, h), evaluated at x."""
    r = x % (2.0 * h)
    return r if r <= h else 2.0 * h - r


class ExcursionPath(PiecewiseLinearPath):
    """Non-negative path starting at 0 with compact support.

    Beyond the base invariants the constructor checks value(0) = 0, all
    breakpoint values >= 0 and a final return to 0 (the canonical form makes
    the path identically 0 after its last breakpoint).
    """

    __slots__ = ()

    def __init__(self, times, values, tol=0.0):
        super().__init__(times, values)
        v = self.values
        if v[0] != 0.0:
            raise DomainError("an excursion must start at 0")
        if np.any(v < -tol):
            raise DomainError("an excursion must be non-negative")
        if v[-1] != 0.0:
            raise DomainError("an excursion must end back at 0")

    @classmethod
    def from_path(cls, path, tol=0.0):
        """Validate and rewrap a plain path, snapping |values| <= tol to 0."""
        v = np.array(path.values)
        if np.any(v < -tol):
            raise DomainError("path is not an excursion: negative values")
        if tol > 0.0:
            v[np.abs(v) <= tol] = 0.0
        return cls(path.times, v)

    @property
    def support_end(self):
        """sup of the support  (last time the path is nonzero; 0 if flat)."""
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return 0.0
        # canonical form guarantees the breakpoint after the last nonzero
        # value exists and is a zero
        return float(self.times[nz[-1] + 1])


# -- path arithmetic -----------------------------------------------------


def merge_times(p, q, *more):
    """Sorted union of breakpoint times of several paths."""
    arrays = [p.times, q.times] + [m.times for m in more]
    return np.unique(np.concatenate(arrays))


def add(p, q):
    """Exact pointwise sum (breakpoints on the merged grid)."""
    t = merge_times(p, q)
    return PiecewiseLinearPath(t, p.evaluate(t) + q.evaluate(t))


def subtract(p, q):
    """Exact pointwise difference p - q."""
    t = merge_times(p, q)
    return PiecewiseLinearPath(t, p.evaluate(t) - q.evaluate(t))


def paste(e, w):
    """Excursion followed by a path: e(t) + w((t - K) v 0) with K = support end.

    ``w`` must start at 0.  The result coincides with ``e`` on [0, K] and
    follows the increments of ``w`` afterwards.
    """
    if not isinstance(e, ExcursionPath):
        e = ExcursionPath.from_path(e)
    if w.values[0] != 0.0:
        raise DomainError("paste requires w(0) = 0")
    K = e.support_end
    te = e.times[e.times <= K]
    ve = e.values[: te.size]
    if te.size == 0 or te[-1] < K:
        te = np.concatenate([te, [K]])
        ve = np.concatenate([ve, [0.0]])
    tw = w.times[w.times > 0]
    vw = w.values[-tw.size:] if tw.size else np.empty(0)
    return PiecewiseLinearPath(
        np.concatenate([te, K + tw]), np.concatenate([ve, vw])
    )


def paths_equal(p, q, tol=EQUALITY_TOL):
    """Structural equality: same canonical size, values within tol on the
    merged breakpoint grid."""
    if len(p) != len(q):
        return False
    t = merge_times(p, q)
    return bool(np.max(np.abs(p.evaluate(t) - q.evaluate(t))) <= tol)


# -- CSV interface --------------------------------------------------------


def write_csv(path, stream):
    """Write breakpoints as ``t,value`` rows (UTF-8, '.' decimals)."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["t", "value"])
    for t, v in zip(path.times, path.values):
        w.writerow([repr(float(t)), repr(float(v))])


def read_csv(stream):
    """Parse a ``t,value`` CSV into a path.

    Rejects missing headers, non-numeric fields, unsorted or duplicate
    times, with the offending line in the error message.
    """
    r = csv.reader(stream)
    try:
        header = next(r)
    except StopIteration:
        raise DomainError("empty CSV: expected a 't,value' header") from None
    if [c.strip().lower() for c in header[:2]] != ["t", "value"]:
        raise DomainError("bad CSV header %r, expected t,value" % (header,))
    times, values = [], []
    for lineno, row in enumerate(r, start=2):
        if not row:
            continue
        if len(row) < 2:
            raise DomainError("line %d: expected two fields" % lineno)
        try:
            t, v = float(row[0]), float(row[1])
        except ValueError:
            raise DomainError("line %d: non-numeric field in %r" % (lineno, row)) from None
        if times and t <= times[-1]:
            raise DomainError("line %d: times not strictly increasing" % lineno)
        times.append(t)
        values.append(v)
    if not times:
        raise DomainError("CSV contains a header but no rows")
    return PiecewiseLinearPath(times, values)


def path_from_csv_file(filename):
    with io.open(filename, "r", encoding="utf-8", newline="") as fh:
        return read_csv(fh)


def path_to_csv_file(path, filename):
    with io.open(filename, "w", encoding="utf-8", newline="") as fh:
        write_csv(path, fh)
