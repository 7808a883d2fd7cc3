"""Random-walk samplers and the stochastic verification harness.

Walks follow the diffusive scaling of a simple random walk: with parameter
``n`` the time step is 1/n and the space step 1/sqrt(n), so an n-step walk
spans one time unit at unit variance.  Two excursion samplers are provided:

* ``bridge-excursion``: a fixed-duration excursion (uniform lattice bridge
  rotated at its first minimum), optionally rejection-conditioned on height.
* first-return: the excursion of the walk away from 0, conditioned to reach
  a given height; simulated lazily through its reflection cycles so the
  heavy-tailed duration never has to be stored beyond what is explored.

The harness reproduces, at walk scale, the binary-tree statistics of the
boundary-cycle data and the law of the maximum of a sticky path built by
Poisson marking of the reflected walk's tree.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from . import _kernels
from .grafting import GraftSequence, build_from_grafts
from .paths import DomainError, ExcursionPath, PiecewiseLinearPath, paste
from .reflection import h_cut, reflect_one_sided_low, reflect_two_sided
from .trees import contour_to_tree, subtree_max_heights, total_branch_length, trim


class SamplingBudgetError(RuntimeError):
    """A rejection or growth cap was exhausted before the sample completed."""


def thread_count():
    """Worker cap from SKOTRIM_THREADS (default 1, sequential)."""
    try:
        return max(1, int(os.environ.get("SKOTRIM_THREADS", "1")))
    except ValueError:
        return 1


def stream(seed, *key):
    """Deterministic counter-based generator for (seed, key...)."""
    if int(seed) < 0:
        raise DomainError("seeds must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class RandomWalkConfig:
    """Walk discretization: ``n`` steps of size (1/n, 1/sqrt(n))."""

    n: int
    seed: int = 0
    mode: str = "bridge-excursion"  # or "free-walk"
    max_attempts: int = 10_000

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("a walk needs at least one step")
        if self.mode not in ("bridge-excursion", "free-walk"):
            raise DomainError("unknown walk mode %r" % (self.mode,))

    @property
    def dt(self):
        return 1.0 / self.n

    @property
    def dx(self):
        return 1.0 / math.sqrt(self.n)


def _turning_path(steps, dt, dx):
    """Piecewise-linear interpolation of a +-1 step sequence, canonical."""
    s = np.concatenate([[0], np.cumsum(steps, dtype=np.int64)])
    d = np.asarray(steps)
    turn = np.nonzero(d[1:] != d[:-1])[0] + 1
    idx = np.concatenate([[0], turn, [len(s) - 1]])
    return PiecewiseLinearPath(idx * dt, s[idx] * dx)


def sample_walk(cfg, rng=None):
    """Free simple random walk under diffusive scaling."""
    rng = rng if rng is not None else stream(cfg.seed, 0)
    steps = rng.integers(0, 2, cfg.n) * 2 - 1
    return _turning_path(steps, cfg.dt, cfg.dx)


def _bridge_excursion_steps(rng, n):
    """Uniform +-1 bridge rotated at its first minimum: a lattice excursion."""
    base = np.concatenate([np.ones(n // 2, np.int64), -np.ones(n // 2, np.int64)])
    steps = rng.permutation(base)
    s = np.concatenate([[0], np.cumsum(steps)])
    k = int(np.argmin(s[:-1]))
    return np.concatenate([steps[k:], steps[:k]])


def sample_excursion_conditioned(cfg, h):
    """Fixed-duration walk excursion, resampled until its height reaches h.

    Uses the bridge rotation, so each draw costs n steps; draws are rejected
    until the scaled maximum is at least ``h`` (h = 0 accepts everything).
    Raises :class:`SamplingBudgetError` when ``cfg.max_attempts`` draws all
    fall short, which is the expected outcome when h is near or above the
    reachable height for the given n.
    """
    if h < 0:
        raise DomainError("height threshold must be >= 0")
    if cfg.mode != "bridge-excursion":
        raise DomainError("sample_excursion_conditioned needs bridge-excursion mode")
    if cfg.n % 2:
        raise DomainError("a bridge excursion needs an even step count")
    need = math.ceil(h / cfg.dx - 1e-9)
    rng = stream(cfg.seed, 1)
    for _ in range(cfg.max_attempts):
        steps = _bridge_excursion_steps(rng, cfg.n)
        s = np.cumsum(steps)
        if s.max(initial=0) >= need:
            path = _turning_path(steps, cfg.dt, cfg.dx)
            return ExcursionPath(path.times, path.values)
    raise SamplingBudgetError(
        "no excursion of height >= %g in %d attempts at n=%d"
        % (h, cfg.max_attempts, cfg.n)
    )


def sample_excursion_first_return(n, h, seed, cycle_cap=512, buffer_len=1 << 21):
    """First-return walk excursion conditioned to reach height h, exact law.

    The walk is simulated through its reflection cycles (see
    :mod:`skotrim._kernels`), which keeps the expected cost finite even
    though the unconditioned excursion duration has no mean.  The height is
    rounded to the nearest lattice level h*sqrt(n).  Raises
    :class:`SamplingBudgetError` if the excursion is still alive after
    ``cycle_cap`` boundary cycles.
    """
    if h <= 0:
        raise DomainError("first-return sampling needs h > 0")
    H = max(1, round(h * math.sqrt(n)))
    seed64 = np.uint64(np.random.SeedSequence(entropy=int(seed)).generate_state(1, np.uint64)[0])
    buf = int(buffer_len)
    for _ in range(8):
        rec_t = np.empty(buf, np.int64)
        rec_v = np.empty(buf, np.int64)
        _, _, _, truncated, nt, overflow, _ = _kernels.pn_with_path(
            seed64, H, cycle_cap, rec_t, rec_v
        )
        if truncated:
            raise SamplingBudgetError(
                "excursion still alive after %d boundary cycles" % cycle_cap
            )
        if not overflow:
            dt, dx = 1.0 / n, 1.0 / math.sqrt(n)
            return ExcursionPath(rec_t[:nt] * dt, rec_v[:nt] * dx)
        buf *= 4
    raise SamplingBudgetError("turning-point buffer kept overflowing")


def couple_and_extend(e, cfg):
    """Paste a fresh scaled walk at the end of the excursion's support."""
    return paste(e, sample_walk(cfg, rng=stream(cfg.seed, 2)))


def sample_binary_tree(alpha, seed, max_branches=100_000):
    """Grow the branch/offset data of a random binary tree and build it.

    Lengths and offsets are i.i.d. exponential with mean ``alpha``; growth
    stops the first time a prospective attachment point would fall below the
    root.  Returns (tree, grafts).  Hitting ``max_branches`` truncates with
    a warning (the stopping time is finite but heavy tailed).
    """
    if alpha <= 0:
        raise DomainError("alpha must be > 0")
    rng = stream(seed, 3)
    pairs = [(float(rng.exponential(alpha)), 0.0)]
    height = pairs[0][0]
    while len(pairs) < max_branches:
        y = float(rng.exponential(alpha))
        if height - y < 0:
            break
        x = float(rng.exponential(alpha))
        pairs.append((x, y))
        height = height - y + x
    else:
        warnings.warn("binary tree truncated at %d branches" % max_branches)
    grafts = GraftSequence(tuple(pairs))
    return build_from_grafts(grafts), grafts


def sample_stop_counts(alpha, replicates, seed, cap=1 << 16, block=256):
    """Stopping indices of the exponential growth rule, in bulk.

    Vectorized over replicates: partial sums of (length - next offset) are
    advanced blockwise until they first go negative.  Counts that survive
    ``cap`` rounds are clipped there (reported separately by callers if
    needed); the first few bins are unaffected.
    """
    rng = stream(seed, 4)
    counts = np.zeros(replicates, np.int64)
    sums = np.zeros(replicates)
    active = np.arange(replicates)
    while active.size:
        x = rng.exponential(alpha, (active.size, block))
        y = rng.exponential(alpha, (active.size, block))
        c = sums[active, None] + np.cumsum(x - y, axis=1)
        neg = c < 0
        has = neg.any(axis=1)
        first = np.argmax(neg, axis=1)
        hit = active[has]
        counts[hit] += first[has] + 1
        rest = active[~has]
        counts[rest] += block
        sums[rest] = c[~has, -1]
        over = counts[rest] >= cap
        active = rest[~over]
    return counts


# -- boundary-cycle statistics harness --------------------------------------


def _pn_batches(seeds, H, cap, threads):
    if threads <= 1 or seeds.size < 2 * threads:
        return _kernels.pn_batch(seeds, H, cap)
    chunks = np.array_split(seeds, threads)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda s: _kernels.pn_batch(s, H, cap), chunks))
    X = np.concatenate([p[0] for p in parts])
    Y = np.concatenate([p[1] for p in parts])
    N = np.concatenate([p[2] for p in parts])
    tr = np.concatenate([p[3] for p in parts])
    st = np.concatenate([p[4] for p in parts])
    return X, Y, N, tr, st


def pn_statistics(h, cfg, replicates, cycle_cap=64, path_check=25, law_bins=5,
                  threads=None):
    """Boundary-cycle statistics of height-conditioned walk excursions.

    For each replicate a first-return excursion conditioned to reach ``h``
    is streamed through the exact reflection; the branch lengths X_i and
    offsets Y_i of its h-cut are pooled across replicates.  The report
    compares the pooled X sample against exponential laws with mean h/2 and
    mean h, the first offset against exact zero, and the law of the cycle
    count against the stopping law of :func:`sample_stop_counts`.

    ``path_check`` replicates are replayed as full piecewise-linear paths
    and pushed through the exact path-level pipeline (reflection, h-cut,
    event extraction) to confirm the streamed statistics pathwise, including
    the identity of X_i with the increments of the boundary compensator.
    """
    if replicates < 100:
        raise DomainError("pn_statistics needs at least 100 replicates")
    if h <= 0:
        raise DomainError("pn_statistics needs h > 0")
    n = cfg.n
    H = max(1, round(h * math.sqrt(n)))
    dx = 1.0 / math.sqrt(n)
    threads = thread_count() if threads is None else max(1, int(threads))

    seeds = np.random.SeedSequence(entropy=int(cfg.seed)).generate_state(
        replicates, np.uint64
    )
    X, Y, N, truncated, steps = _pn_batches(seeds, H, cycle_cap, threads)

    mask = np.arange(cycle_cap)[None, :] < N[:, None]
    pooled_x = X[mask].astype(np.float64) * dx
    mask_y = mask.copy()
    mask_y[:, 0] = False
    pooled_y = Y[mask_y].astype(np.float64) * dx
    y1_lattice = Y[:, 0]

    ks_half = sstats.kstest(pooled_x, "expon", args=(0.0, h / 2.0), method="asymp")
    ks_full = sstats.kstest(pooled_x, "expon", args=(0.0, h), method="asymp")

    # cycle-count law versus the exponential stopping rule (scale free in
    # alpha, h/2 kept for the record)
    ntilde = sample_stop_counts(h / 2.0, replicates, cfg.seed + 1)
    law = []
    for b in range(1, law_bins + 1):
        p1 = float(np.mean(N == b))
        p2 = float(np.mean(ntilde == b))
        se = math.sqrt(p1 * (1 - p1) / replicates + p2 * (1 - p2) / replicates)
        law.append(
            {
                "bin": b,
                "excursion": p1,
                "stop_rule": p2,
                "diff": p1 - p2,
                "se": se,
                "within_3se": bool(abs(p1 - p2) <= 3 * se or se == 0.0),
            }
        )

    # pathwise confirmation on a replayed subset
    path_report = _pn_path_check(
        seeds[: min(path_check, replicates)], H, cycle_cap, h, n,
        X, Y, N, truncated,
    )

    mean_x = float(pooled_x.mean()) if pooled_x.size else float("nan")
    se_x = float(pooled_x.std(ddof=1) / math.sqrt(pooled_x.size)) if pooled_x.size > 1 else float("nan")
    return {
        "h": h,
        "n": n,
        "lattice_height": H,
        "replicates": replicates,
        "truncated_replicates": int(truncated.sum()),
        "cycle_cap": cycle_cap,
        "mean_cycles": float(N.mean()),
        "total_steps": int(steps.sum()),
        "pooled_x_count": int(pooled_x.size),
        "pooled_x_mean": mean_x,
        "pooled_x_se": se_x,
        "pooled_x_var": float(pooled_x.var(ddof=1)) if pooled_x.size > 1 else float("nan"),
        "pooled_y_count": int(pooled_y.size),
        "pooled_y_mean": float(pooled_y.mean()) if pooled_y.size else float("nan"),
        "y1_all_zero": bool(np.all(y1_lattice == 0)),
        "y1_max_abs": float(np.max(np.abs(y1_lattice)) * dx),
        "ks_vs_exp_mean_half_h": {"stat": float(ks_half.statistic), "p": float(ks_half.pvalue)},
        "ks_vs_exp_mean_h": {"stat": float(ks_full.statistic), "p": float(ks_full.pvalue)},
        "cycle_count_law": law,
        "path_check": path_report,
    }


def _pn_path_check(seeds, H, cycle_cap, h, n, X, Y, N, truncated):
    """Replay replicates as paths and confirm the streamed statistics."""
    dt, dx = 1.0 / n, 1.0 / math.sqrt(n)
    worst_xy = 0.0
    worst_local = 0.0
    worst_y1 = 0.0
    checked = 0
    for r in range(seeds.size):
        buf = 1 << 21
        for _ in range(8):
            rec_t = np.empty(buf, np.int64)
            rec_v = np.empty(buf, np.int64)
            Xr, Yr, n_cyc, trunc, nt, overflow, _ = _kernels.pn_with_path(
                seeds[r], H, cycle_cap, rec_t, rec_v
            )
            if not overflow:
                break
            buf *= 4
        else:
            raise SamplingBudgetError("path replay buffer kept overflowing")
        if not (n_cyc == N[r] and bool(trunc) == bool(truncated[r])
                and np.array_equal(Xr, X[r]) and np.array_equal(Yr, Y[r])):
            raise AssertionError("replayed stream diverged from the batch run")
        path = PiecewiseLinearPath(rec_t[:nt] * dt, rec_v[:nt] * dx)
        dec = h_cut(path, h)
        if dec.N != n_cyc:
            raise AssertionError(
                "path-level cycle count %d != streamed %d" % (dec.N, n_cyc)
            )
        kx = np.asarray(dec.X)
        ky = np.asarray(dec.Y)
        worst_xy = max(
            worst_xy,
            float(np.max(np.abs(kx - Xr[:n_cyc] * dx), initial=0.0)),
            float(np.max(np.abs(ky - Yr[:n_cyc] * dx), initial=0.0)),
        )
        if dec.N:
            worst_y1 = max(worst_y1, abs(dec.Y[0]))
        # X_i equals the increment of the downward compensator over the cycle
        ch = dec.reflection.ch
        prev_t = 0.0
        for i in range(dec.N):
            drop = float(ch.evaluate(prev_t) - ch.evaluate(dec.t[i]))
            worst_local = max(worst_local, abs(drop - dec.X[i]))
            prev_t = dec.t[i]
        checked += 1
    return {
        "replicates": checked,
        "max_xy_error": worst_xy,
        "max_local_time_identity_error": worst_local,
        "max_y1": worst_y1,
    }


# -- marked trees and the sticky path ---------------------------------------


@dataclass(frozen=True)
class MarkedTreeSample:
    """Reflected walk, its explored tree, Poisson marks and the sticky path."""

    xi: PiecewiseLinearPath
    tree: object
    marks: list  # (edge id, offset from the edge bottom)
    theta: float
    sticky: PiecewiseLinearPath
    branch_length: float
    horizon: float


def close_off(path, t):
    """Freeze a non-negative path at time t and descend to 0 at unit speed.

    The path is total on [0, infinity) by constant extension, so any t >= 0
    is allowed; callers tie t to the span of the underlying walk.
    """
    if t < 0:
        raise DomainError("close_off requires t >= 0")
    xt = float(path.evaluate(t))
    j = np.searchsorted(path.times, t, side="left")
    ts = list(path.times[:j]) + [t]
    vs = list(path.values[:j]) + [xt]
    if xt > 0:
        ts.append(t + xt)
        vs.append(0.0)
    return ExcursionPath.from_path(PiecewiseLinearPath(ts, vs), tol=1e-12)


def _edge_table(tree):
    """Per-edge arrays (exploration order): bottom/top heights, spans, node."""
    lo, hi, nodes = [], [], []
    for node, height in tree.iter_nodes():
        if node is tree.root:
            continue
        hi.append(height)
        lo.append(height - node.edge_length)
        nodes.append(node)
    return np.asarray(lo), np.asarray(hi), nodes


def _mark_interval(path, node, y):
    """Visit interval of the subtree above the point at height y on the edge.

    Uses the recorded monotone runs: the opening time is the unique upward
    crossing of y in the run ascending the edge, the closing time the
    downward crossing in the run descending it.
    """
    t, v = path.times, path.values
    u0, u1, d0, d1 = node.span
    up = v[u0 : u1 + 1]
    k = int(np.searchsorted(up, y, side="left"))
    if k == 0:
        left = float(t[u0])
    else:
        a, b = up[k - 1], up[k]
        frac = 0.0 if b == a else (y - a) / (b - a)
        left = float(t[u0 + k - 1] + (t[u0 + k] - t[u0 + k - 1]) * frac)
    dn = v[d0 : d1 + 1]
    kk = int(np.searchsorted(-dn, -y, side="right"))
    if kk >= dn.size:
        right = float(t[d1])
    else:
        a, b = dn[kk - 1], dn[kk]
        frac = 0.0 if b == a else (a - y) / (a - b)
        right = float(t[d0 + kk - 1] + (t[d0 + kk] - t[d0 + kk - 1]) * frac)
    return left, right


def build_marked_sample(w, t, theta, h, seed):
    """Mark the explored tree of the reflected walk and read off the sticky path.

    The walk is pushed up at 0, the tree explored by time ``t`` is extracted
    from the closed-off reflection, and a Poisson number (intensity 2 theta
    per unit branch length) of marks is dropped uniformly on the branches.
    The sticky path is 0 while the explored point has an unmarked ancestry
    and the height above the lowest ancestral mark otherwise.
    """
    if theta < 0:
        raise DomainError("theta must be >= 0")
    if h is not None and h <= 0:
        raise DomainError("h must be > 0 when given")
    if w.values[0] != 0.0:
        raise DomainError("build_marked_sample needs w(0) = 0")
    if not 0 <= t <= w.end_time:
        raise DomainError("t=%r outside the walk span [0, %r]" % (t, w.end_time))
    xi = reflect_one_sided_low(w)
    xi_t = close_off(xi, t)
    tree = contour_to_tree(xi_t)
    lo, hi, nodes = _edge_table(tree)
    lengths = hi - lo
    total = float(lengths.sum())
    rng = stream(seed, 5)
    count = int(rng.poisson(2.0 * theta * total)) if total > 0 else 0
    u = np.sort(rng.random(count) * total)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    marks = []
    intervals = []
    for uu in u:
        e = min(int(np.searchsorted(cum, uu, side="right")) - 1, len(nodes) - 1)
        offset = uu - cum[e]
        y = lo[e] + offset
        marks.append((e, float(offset)))
        intervals.append((*_mark_interval(xi_t, nodes[e], y), float(y)))

    grid = np.unique(
        np.concatenate(
            [
                xi_t.times[xi_t.times <= t],
                [t],
                [iv[0] for iv in intervals if iv[0] <= t],
                [min(iv[1], t) for iv in intervals],
            ]
        )
    )
    lowest = np.full(grid.size, np.inf)
    for left, right, y in intervals:
        a = int(np.searchsorted(grid, left, side="left"))
        b = int(np.searchsorted(grid, right, side="right"))
        lowest[a:b] = np.minimum(lowest[a:b], y)
    vals = xi_t.evaluate(grid)
    z = np.where(np.isfinite(lowest), np.maximum(vals - lowest, 0.0), 0.0)
    sticky = PiecewiseLinearPath(grid, z)
    return MarkedTreeSample(
        xi=xi,
        tree=tree,
        marks=marks,
        theta=float(theta),
        sticky=sticky,
        branch_length=total,
        horizon=float(t),
    )


def verify_teo1(w, t, theta, h, mark_replicates, seed, tol=1e-9):
    """Check the law of the sticky maximum against the boundary local time.

    Deterministic leg: the branch length of the depth-h pruning of the
    explored tree must equal the downward compensator of the walk's
    reflection at time t (three routes compared, tolerance ``tol``).
    Stochastic leg: the frequency of {sticky maximum on [0, t] <= h} over
    independent markings must match exp(-2 theta ell) within 3 binomial
    standard errors, where ell is that same branch length.
    """
    if theta <= 0:
        raise DomainError("verify_teo1 needs theta > 0")
    if h <= 0:
        raise DomainError("verify_teo1 needs h > 0")
    if not 0 <= t <= w.end_time:
        raise DomainError("t=%r outside the walk span [0, %r]" % (t, w.end_time))
    xi = reflect_one_sided_low(w)
    xi_t = close_off(xi, t)
    tree = contour_to_tree(xi_t)
    trimmed = trim(tree, h)
    ell_tree = total_branch_length(trimmed) if trimmed is not None else 0.0

    scale = max(1.0, h, float(np.max(np.abs(w.values))))
    ch_w = reflect_two_sided(w, h).ch
    ell_w = -float(ch_w.evaluate(t))
    ch_closed = reflect_two_sided(xi_t, h).ch
    ell_closed = -float(ch_closed.end_value)
    det_err = max(abs(ell_tree - ell_w), abs(ell_tree - ell_closed))
    det_ok = det_err <= tol * scale

    p_expected = math.exp(-2.0 * theta * ell_tree)

    maxh = subtree_max_heights(tree)
    lo, hi, nodes = _edge_table(tree)
    cut = np.array([maxh[id(nd)] - h for nd in nodes])
    lengths = hi - lo
    total = float(lengths.sum())
    cum = np.cumsum(lengths)

    rng = stream(seed, 6)
    m = int(mark_replicates)
    counts = rng.poisson(2.0 * theta * total, m)
    total_marks = int(counts.sum())
    u = rng.random(total_marks) * total
    edge = np.minimum(np.searchsorted(cum, u, side="right"), len(nodes) - 1)
    y = u - np.concatenate([[0.0], cum])[edge] + lo[edge]
    inside_trim = y <= cut[edge]
    marking_id = np.repeat(np.arange(m), counts)
    ok = np.ones(m, dtype=bool)
    ok[marking_id[inside_trim]] = False
    freq = float(ok.mean())

    se = math.sqrt(p_expected * (1 - p_expected) / m)
    trivial = ell_tree <= tol * scale
    stoch_ok = abs(freq - p_expected) <= 3 * se if se > 0 else freq == p_expected
    return {
        "theta": theta,
        "h": h,
        "t": t,
        "mark_replicates": m,
        "trimmed_branch_length": ell_tree,
        "compensator_at_t": ell_w,
        "compensator_closed_limit": ell_closed,
        "deterministic_error": det_err,
        "deterministic_pass": bool(det_ok),
        "expected_probability": p_expected,
        "observed_frequency": freq,
        "binomial_se": se,
        "stochastic_pass": bool(stoch_ok),
        "trivial": bool(trivial),
        "pass": bool(det_ok and stoch_ok),
    }
