"""Two-sided Skorokhod reflection on [0, h] and the h-cut of a path.

The reflected path is computed segment by segment.  Every linear segment is
monotone, so inside a segment the reflected path follows the input until it
reaches a boundary, then sticks to it while the matching compensator absorbs
the remaining increment.  Boundary crossing times are solved in closed form
and inserted as breakpoints, which keeps the defining identity

    reflected(t) = f(t) + push_up(t) + push_down(t)

exact to floating-point roundoff.  ``push_up`` (the compensator at 0, called
c0 below) is non-decreasing and moves only while the reflected path sits at
0; ``push_down`` (c^h, called ch) is non-increasing and moves only at h.

The h-cut is f minus its reflection, equivalently -(c0 + ch).  It is the
minimal-total-variation path whose difference from f has oscillation at most
h, and it drives everything in :mod:`skotrim.trees` and
:mod:`skotrim.grafting`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .paths import DomainError, PiecewiseLinearPath, merge_times


@dataclass(frozen=True)
class ReflectionResult:
    """Reflection of a path on [0, h] together with its two compensators."""

    lam: PiecewiseLinearPath  #: the reflected path, valued in [0, h]
    c0: PiecewiseLinearPath  #: upward push at 0, non-decreasing, c0(0) = 0
    ch: PiecewiseLinearPath  #: downward push at h, non-increasing, ch(0) = 0
    h: float

    def cut(self):
        """The h-cut  -(c0 + ch)."""
        t = merge_times(self.c0, self.ch)
        # + 0.0 normalizes the -0.0 produced by negating a zero sum
        return PiecewiseLinearPath(t, -(self.c0.evaluate(t) + self.ch.evaluate(t)) + 0.0)


@dataclass(frozen=True)
class CutDecomposition:
    """h-cut of a path plus the boundary cycle data extracted from it.

    ``t[i]``, ``T[i]``, ``s[i]`` are the (i+1)-th return time to 0, hitting
    time of h and exit time from 0 of the reflected path; equivalently T is
    when a climb of size h completes, t is when the following descent of
    size h completes, and s is the last rest at 0 before the climb.
    ``X[i] = cut(t[i]) - cut(s[i])`` and ``Y[i] = cut(t[i-1]) - cut(s[i])``
    are the graft lengths and offsets used to rebuild the trimmed tree.
    """

    cut: PiecewiseLinearPath
    reflection: ReflectionResult
    t: list = field(default_factory=list)
    T: list = field(default_factory=list)
    s: list = field(default_factory=list)
    X: list = field(default_factory=list)
    Y: list = field(default_factory=list)

    @property
    def N(self):
        return len(self.t)


def reflect_two_sided(f, h):
    """Unique solution of the two-sided Skorokhod problem on [0, h].

    Parameters
    ----------
    f : PiecewiseLinearPath
        Input path with f(0) in [0, h].
    h : float
        Strip height, > 0.

    Returns
    -------
    ReflectionResult
    """
    if h <= 0:
        raise DomainError("reflection requires h > 0")
    ft, fv = f.times, f.values
    if not (0.0 <= fv[0] <= h):
        raise DomainError("f(0) must lie in [0, h], got %r" % fv[0])

    lam_t = [ft[0]]
    lam_v = [fv[0]]
    c0_t = [ft[0]]
    c0_v = [0.0]
    ch_t = [ft[0]]
    ch_v = [0.0]

    lam = fv[0]
    c0 = 0.0
    ch = 0.0
    for k in range(ft.size - 1):
        t0, t1 = ft[k], ft[k + 1]
        dv = fv[k + 1] - fv[k]
        if dv > 0:
            room = h - lam
            if dv <= room:
                lam += dv
                lam_t.append(t1)
                lam_v.append(lam)
            else:
                if room > 0:
                    tc = t0 + (t1 - t0) * (room / dv)
                    lam_t.append(tc)
                    lam_v.append(h)
                else:
                    tc = t0
                lam = h
                lam_t.append(t1)
                lam_v.append(h)
                ch -= dv - room
                ch_t.append(tc)
                ch_v.append(ch_v[-1])
                ch_t.append(t1)
                ch_v.append(ch)
        elif dv < 0:
            room = lam
            if -dv <= room:
                lam += dv
                lam_t.append(t1)
                lam_v.append(lam)
            else:
                if room > 0:
                    tc = t0 + (t1 - t0) * (room / -dv)
                    lam_t.append(tc)
                    lam_v.append(0.0)
                else:
                    tc = t0
                lam = 0.0
                lam_t.append(t1)
                lam_v.append(0.0)
                c0 += (-dv) - room
                c0_t.append(tc)
                c0_v.append(c0_v[-1])
                c0_t.append(t1)
                c0_v.append(c0)
        else:
            lam_t.append(t1)
            lam_v.append(lam)

    return ReflectionResult(
        lam=_pl(lam_t, lam_v),
        c0=_pl(c0_t, c0_v),
        ch=_pl(ch_t, ch_v),
        h=float(h),
    )


def _pl(ts, vs):
    """Path from event lists that may repeat a time (keep the last value)."""
    t = np.asarray(ts)
    v = np.asarray(vs)
    keep = np.ones(t.size, dtype=bool)
    keep[:-1] = np.diff(t) > 0
    return PiecewiseLinearPath(t[keep], v[keep])


def reflect_one_sided_low(f):
    """One-sided reflection at 0:  f(t) - min(inf_{[0,t]} f, 0).

    Computed directly from the running-minimum formula.  The output grid
    refines f's breakpoints with the times where a falling segment first
    goes below the old running minimum and where the running minimum itself
    crosses 0, so the composition stays exactly piecewise linear.
    """
    t, v = f.times, f.values
    out_t = [t[0]]
    out_v = [v[0] - min(v[0], 0.0)]
    m = v[0]
    for k in range(t.size - 1):
        t0, t1 = t[k], t[k + 1]
        v0, v1 = v[k], v[k + 1]
        if v1 < v0:
            cuts = []
            if v1 < m < v0:
                cuts.append(m)  # falls below the old minimum here
            if min(v0, m) > 0.0 > v1:
                cuts.append(0.0)  # the running minimum turns negative here
            for lev in sorted(cuts, reverse=True):
                tc = t0 + (t1 - t0) * (v0 - lev) / (v0 - v1)
                if t0 < tc < t1:
                    out_t.append(tc)
                    out_v.append(lev - min(min(m, lev), 0.0))
        m = min(m, v1)
        out_t.append(t1)
        out_v.append(v1 - min(m, 0.0))
    return _pl(out_t, out_v)


def reflect_one_sided_high(f, h):
    """One-sided reflection at h:  f(t) - max(sup_{[0,t]} f - h, 0)."""
    t, v = f.times, f.values
    if v[0] > h:
        raise DomainError("one-sided high reflection requires f(0) <= h")
    out_t = [t[0]]
    out_v = [v[0] - max(v[0] - h, 0.0)]
    m = v[0]
    for k in range(t.size - 1):
        t0, t1 = t[k], t[k + 1]
        v0, v1 = v[k], v[k + 1]
        if v1 > v0:
            cuts = []
            if v0 < m < v1:
                cuts.append(m)  # climbs above the old maximum here
            if max(v0, m) < h < v1:
                cuts.append(h)  # the running maximum crosses h here
            for lev in sorted(cuts):
                tc = t0 + (t1 - t0) * (lev - v0) / (v1 - v0)
                if t0 < tc < t1:
                    out_t.append(tc)
                    out_v.append(lev - max(max(m, lev) - h, 0.0))
        m = max(m, v1)
        out_t.append(t1)
        out_v.append(v1 - max(m - h, 0.0))
    return _pl(out_t, out_v)


#: zero-detection tolerance for event extraction on computed reflections.
#: Crossing times are closed-form, so boundary values are exact to roundoff;
#: the tolerance only guards accumulated float error on long paths.
_EVENT_TOL = 1e-12


def h_cut(f, h, tol=_EVENT_TOL):
    """h-cut of ``f`` plus the event times and graft data read off from it.

    Requires f(0) = 0.  Event extraction scans the reflected path: a cycle
    opens when the reflection hits h (time ``T_n``), closes at the next
    return to 0 (time ``t_n``), and ``s_n`` is the supremum of the zero set
    before the cycle opens (right endpoint of the last zero plateau).
    """
    if f.values[0] != 0.0:
        raise DomainError("h_cut requires f(0) = 0")
    refl = reflect_two_sided(f, h)
    cut = refl.cut()

    lt, lv = refl.lam.times, refl.lam.values
    scale = max(h, float(np.max(np.abs(f.values))))
    zero = scale * tol
    t_list, T_list, s_list = [], [], []
    seen_h = False
    last_zero = lt[0] if lv[0] <= zero else None
    for i in range(lt.size):
        at_zero = lv[i] <= zero
        at_h = lv[i] >= h - zero
        if not seen_h:
            if at_zero:
                # extend the current zero plateau to its right endpoint
                j = i
                while j + 1 < lt.size and lv[j + 1] <= zero:
                    j += 1
                last_zero = lt[j]
            if at_h:
                T_list.append(float(lt[i]))
                s_list.append(float(last_zero if last_zero is not None else lt[0]))
                seen_h = True
        else:
            if at_zero:
                t_list.append(float(lt[i]))
                seen_h = False
                last_zero = lt[i]

    # a climb that never closed (possible for non-compact inputs) leaves an
    # unmatched hitting time; keep the lists aligned on completed cycles
    T_list = T_list[: len(t_list)]
    s_list = s_list[: len(t_list)]

    X = []
    Y = []
    prev_t = 0.0
    for n in range(len(t_list)):
        X.append(float(cut.evaluate(t_list[n]) - cut.evaluate(s_list[n])))
        Y.append(float(cut.evaluate(prev_t) - cut.evaluate(s_list[n])))
        prev_t = t_list[n]

    return CutDecomposition(
        cut=cut, reflection=refl, t=t_list, T=T_list, s=s_list, X=X, Y=Y
    )


def event_times_direct(f, h):
    """Climb/descent event times read from running extrema of ``f`` alone.

    Returns (tau, theta, sigma) where ``theta[n]`` is the first time after
    ``tau[n-1]`` that f sits h above its running minimum, ``tau[n]`` the
    first subsequent time f sits h below its running maximum (maximum taken
    from theta on), and ``sigma[n]`` the last time before ``tau[n]`` at which
    f touches its running minimum.  No reflection is computed; this is the
    independent route to the same times that :func:`h_cut` produces.
    """
    if f.values[0] != 0.0:
        raise DomainError("event_times_direct requires f(0) = 0")
    if h <= 0:
        raise DomainError("event_times_direct requires h > 0")
    t, v = f.times, f.values
    n = t.size
    tau, theta, sigma = [], [], []
    k = 0  # current segment index
    pos = t[0]  # current time
    val = v[0]
    while True:
        # phase 1: from (pos,val) find theta = first drawup of size h,
        # tracking the last touch time of the running minimum for sigma
        m = val
        last_min_t = pos
        found = False
        while k < n - 1:
            a_t, b_t = max(pos, t[k]), t[k + 1]
            a_v = val if a_t == pos else v[k]
            b_v = v[k + 1]
            if b_v < a_v:  # falling: minimum tracks the path
                if b_v <= m:
                    m = b_v
                    last_min_t = b_t
            elif b_v == a_v:
                if a_v <= m:
                    last_min_t = b_t
            else:  # rising: drawup can complete
                if a_v <= m:
                    last_min_t = a_t
                if b_v - m >= h:
                    tc = a_t + (b_t - a_t) * ((m + h) - a_v) / (b_v - a_v)
                    theta.append(float(tc))
                    pos, val = tc, m + h
                    found = True
                    break
            k += 1
            pos, val = b_t, b_v
        if not found:
            break
        sig = last_min_t
        # phase 2: from theta find tau = first drawdown of size h
        M = val
        found = False
        while k < n - 1:
            a_t, b_t = max(pos, t[k]), t[k + 1]
            a_v = val if a_t == pos else v[k]
            b_v = v[k + 1]
            if b_v > a_v:
                if b_v > M:
                    M = b_v
            elif b_v < a_v:
                if M - b_v >= h:
                    tc = a_t + (b_t - a_t) * (a_v - (M - h)) / (a_v - b_v)
                    tau.append(float(tc))
                    sigma.append(float(sig))
                    pos, val = tc, M - h
                    found = True
                    break
            k += 1
            pos, val = b_t, b_v
        if not found:
            theta.pop()  # climb completed but the descent never did
            break
    return tau, theta, sigma


def local_time_compensator(f, h, level):
    """Boundary local time of the reflection: c0 for 'low', -ch for 'high'."""
    refl = f if isinstance(f, ReflectionResult) else reflect_two_sided(f, h)
    if level == "low":
        return refl.c0
    if level == "high":
        return refl.ch.negated()
    raise DomainError("level must be 'low' or 'high', got %r" % (level,))


def local_time_window_estimate(f, h, level, t, eps):
    """Occupation-density estimate of the boundary local time at time ``t``.

    Measures the time the reflected path spends within ``eps`` of the
    boundary on [0, t], divided by 2 eps.  Exact on the piecewise-linear
    reflection (plateau segments count in full, sloped segments by the
    fraction of their range inside the band).  Converges to the compensator
    as eps -> 0 only for Brownian-like inputs; on a fixed path it is just
    the stated occupation integral.
    """
    if not (0 < eps < h / 2):
        raise DomainError("need 0 < eps < h/2")
    if t < 0:
        raise DomainError("need t >= 0")
    refl = f if isinstance(f, ReflectionResult) else reflect_two_sided(f, h)
    lam = refl.lam
    if level == "low":
        lo, hi = 0.0, eps
    elif level == "high":
        lo, hi = h - eps, h
    else:
        raise DomainError("level must be 'low' or 'high', got %r" % (level,))

    grid = np.unique(np.concatenate([lam.times[lam.times < t], [t]]))
    vals = lam.evaluate(grid)
    occ = 0.0
    for i in range(grid.size - 1):
        dt = grid[i + 1] - grid[i]
        a, b = vals[i], vals[i + 1]
        smin, smax = (a, b) if a <= b else (b, a)
        if a == b:
            occ += dt if lo <= a <= hi else 0.0
        else:
            overlap = min(smax, hi) - max(smin, lo)
            if overlap > 0:
                occ += dt * overlap / (smax - smin)
    return float(occ / (2.0 * eps))
