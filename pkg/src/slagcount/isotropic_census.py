"""Counting primitive isotropic lattice vectors with bounded projection onto a positive plane.

On the isotropic cone Q(v) = 0 the majorant M(v) = Q(v_P) - Q(v_perp) equals
2 Q(v_P), so the count N(V) = #{v primitive, Q(v) = 0, Q(v_P) <= V^2} is a
Fincke-Pohst enumeration of the definite form M inside the ball M <= 2 V^2.
The census kernel never visits the innermost coordinate: it is solved from
Q(v) = 0 exactly in integers.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numba
import numpy as np

from .quadratic_lattice import GramLattice, PositivePlane

REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MajorantForm:
    matrix: np.ndarray
    cholesky: np.ndarray  # upper triangular R with matrix = R^T R

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    def value(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.matrix @ v)


@dataclass(frozen=True)
class CensusRecord:
    V: float
    count: int
    enumerated: int
    elapsed_ms: int

    @property
    def count_up_to_sign(self) -> int:
        return self.count // 2


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int = 0


class InsufficientDataError(ValueError):
    pass


def build_majorant(lattice: GramLattice, plane: PositivePlane) -> MajorantForm:
    q = lattice.matrix.astype(float)
    pi_p = plane.projector
    pi_perp = np.eye(lattice.rank) - pi_p
    m = pi_p.T @ q @ pi_p - pi_perp.T @ q @ pi_perp
    m = (m + m.T) / 2
    try:
        r = np.linalg.cholesky(m).T
    except np.linalg.LinAlgError:
        raise ValueError(
            "majorant is not positive definite: plane dimension must equal n_plus "
            f"(plane dim {plane.dim}, signature {lattice.signature})") from None
    return MajorantForm(m, r)


def _fp_coefficients(form: MajorantForm) -> tuple[np.ndarray, np.ndarray]:
    r = form.cholesky
    qd = np.diag(r) ** 2
    mu = r / np.diag(r)[:, None]
    return qd, mu


def enumerate_ball(form: MajorantForm, bound: float) -> Iterator[tuple[int, ...]]:
    """Yield every nonzero integer v with M(v) <= bound, both signs, in a fixed order.

    Plain Fincke-Pohst: the last coordinate is chosen first and each deeper
    coordinate ranges over the interval left by the partial sum.
    """
    if bound <= 0:
        return
    n = form.rank
    qd, mu = _fp_coefficients(form)
    slack = REL_TOL * max(1.0, bound)
    x = [0] * n

    def rec(k: int, used: float):
        center = -sum(mu[k, j] * x[j] for j in range(k + 1, n))
        rem = bound + slack - used
        if rem < 0:
            return
        rad = math.sqrt(rem / qd[k])
        for xk in range(math.ceil(center - rad), math.floor(center + rad) + 1):
            x[k] = xk
            d = used + qd[k] * (xk - center) ** 2
            if d > bound + slack:
                continue
            if k == 0:
                if any(x):
                    yield tuple(x)
            else:
                yield from rec(k - 1, d)
        x[k] = 0

    yield from rec(n - 1, 0.0)


def naive_box_scan(form: MajorantForm, bound: float) -> list[tuple[int, ...]]:
    """Brute force over the bounding box of the ellipsoid (|x_i|^2 <= bound * (M^-1)_ii)."""
    inv = np.linalg.inv(form.matrix)
    slack = REL_TOL * max(1.0, bound)
    box = [int(math.floor(math.sqrt((bound + slack) * inv[i, i]))) for i in range(form.rank)]
    out = []
    for v in itertools.product(*(range(-b, b + 1) for b in box)):
        if any(v) and form.value(v) <= bound + slack:
            out.append(v)
    return out


# -- compiled cone search -----------------------------------------------------------

@numba.njit(cache=True)
def _gcd(a, b):
    a = abs(a)
    b = abs(b)
    while b:
        a, b = b, a % b
    return a


@numba.njit(cache=True)
def _isqrt(n):
    s = np.int64(math.sqrt(n))
    while s * s > n:
        s -= 1
    while (s + 1) * (s + 1) <= n:
        s += 1
    return s


@numba.njit(cache=True)
def _record(hist, bounds, mval, buf_m, buf_v, size, x, collect):
    j = np.searchsorted(bounds, mval)
    hist[j] += 1
    if not collect:
        return buf_m, buf_v, size
    if size == buf_m.shape[0]:
        new_m = np.empty(2 * size, dtype=np.float64)
        new_v = np.empty((2 * size, buf_v.shape[1]), dtype=np.int64)
        new_m[:size] = buf_m
        new_v[:size] = buf_v
        buf_m, buf_v = new_m, new_v
    buf_m[size] = mval
    buf_v[size, :] = x
    return buf_m, buf_v, size + 1


@numba.njit(cache=True, nogil=True)
def _cone_search(qd, mu, gram, bounds, top_lo, top_hi, collect):
    """Primitive isotropic v, one per pair +-v, with M(v) <= bounds[-1].

    Only vectors whose last nonzero coordinate is positive are visited, and
    only those with x[n-1] in [top_lo, top_hi].  Hits are binned by the first
    bound they satisfy.  Returns (histogram, M-values, vectors, nodes); the
    last two arrays are empty unless ``collect``.
    """
    n = qd.shape[0]
    lim = bounds[-1]
    hist = np.zeros(bounds.shape[0], dtype=np.int64)
    buf_m = np.empty(1024 if collect else 0, dtype=np.float64)
    buf_v = np.empty((1024 if collect else 0, n), dtype=np.int64)
    size = 0
    nodes = 0
    if n < 2:
        return hist, buf_m, buf_v, nodes

    x = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    center = np.zeros(n)
    dist = np.zeros(n + 1)
    gx = np.zeros((n + 1, n), dtype=np.int64)  # gx[k, m] = sum_{j>=k} gram[m, j] x[j]
    qpart = np.zeros(n + 1, dtype=np.int64)     # Q restricted to coordinates >= k
    nonzero = np.zeros(n + 1, dtype=np.bool_)   # some coordinate >= k is nonzero
    sols = np.empty(2, dtype=np.int64)

    k = n - 1
    rad = math.sqrt(lim / qd[k])
    x[k] = max(max(math.ceil(-rad), top_lo), 0)
    hi[k] = min(math.floor(rad), top_hi)
    while True:
        if x[k] > hi[k]:
            k += 1
            if k == n:
                break
            x[k] += 1
            continue
        nodes += 1
        d = x[k] - center[k]
        dist[k] = dist[k + 1] + qd[k] * d * d
        if dist[k] > lim:
            # the admissible values form an interval: skip to its other side
            if x[k] > center[k]:
                x[k] = hi[k] + 1
            else:
                x[k] += 1
            continue
        xk = x[k]
        nonzero[k] = nonzero[k + 1] or xk != 0
        qpart[k] = qpart[k + 1] + 2 * xk * gx[k + 1, k] + gram[k, k] * xk * xk
        for m in range(n):
            gx[k, m] = gx[k + 1, m] + gram[m, k] * xk
        if k > 1:
            k -= 1
            c = 0.0
            for j in range(k + 1, n):
                c -= mu[k, j] * x[j]
            center[k] = c
            rem = lim - dist[k + 1]
            rad = math.sqrt(rem / qd[k]) if rem > 0 else 0.0
            x[k] = math.ceil(c - rad)
            if not nonzero[k + 1] and x[k] < 0:
                x[k] = 0
            hi[k] = math.floor(c + rad)
            continue

        # leaf: solve Q(x0, x[1:]) = g00 x0^2 + 2 b x0 + c = 0 for x0
        c0 = 0.0
        for j in range(1, n):
            c0 -= mu[0, j] * x[j]
        rem = lim - dist[1]
        rad = math.sqrt(rem / qd[0]) if rem > 0 else 0.0
        lo0 = math.ceil(c0 - rad)
        hi0 = math.floor(c0 + rad)
        if not nonzero[1] and lo0 < 1:
            lo0 = 1
        b = gx[1, 0]
        cq = qpart[1]
        g00 = gram[0, 0]
        nsol = 0
        full_line = False
        if g00 == 0:
            if b == 0:
                full_line = cq == 0
            elif (-cq) % (2 * b) == 0:
                sols[0] = (-cq) // (2 * b)
                nsol = 1
        else:
            disc = b * b - g00 * cq
            if disc >= 0:
                s = _isqrt(disc)
                if s * s == disc:
                    for sgn in (-1, 1):
                        num = -b + sgn * s
                        if num % g00 == 0:
                            sols[nsol] = num // g00
                            nsol += 1
                        if s == 0:
                            break
                    if nsol == 2 and sols[0] > sols[1]:
                        sols[0], sols[1] = sols[1], sols[0]
        if full_line:
            nsol = hi0 - lo0 + 1 if hi0 >= lo0 else 0
        for i in range(nsol):
            x0 = lo0 + i if full_line else sols[i]
            if x0 < lo0 or x0 > hi0:
                continue
            x[0] = x0
            g = 0
            for j in range(n):
                g = _gcd(g, x[j])
            if g != 1:
                continue
            d0 = x0 - c0
            mval = dist[1] + qd[0] * d0 * d0
            if mval <= lim:
                buf_m, buf_v, size = _record(hist, bounds, mval, buf_m, buf_v, size, x, collect)
        x[0] = 0
        x[1] += 1
    return hist, buf_m[:size], buf_v[:size], nodes


@dataclass(frozen=True, eq=False)
class ConeSearch:
    """Raw output of one pass.

    ``counts[i]`` is the number of hits (both signs) with M <= bounds[i].
    ``mvalues``/``vectors`` list every hit with both signs when collected.
    """

    bounds: np.ndarray
    counts: np.ndarray
    mvalues: np.ndarray
    vectors: np.ndarray
    nodes: int
    elapsed_ms: int


def _thread_count(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("SLAG_THREADS", os.cpu_count() or 1))
    return max(1, threads)


def cone_search(lattice: GramLattice, plane: PositivePlane, bounds: Sequence[float],
                threads: int | None = None, collect_vectors: bool = False) -> ConeSearch:
    """Count primitive isotropic v with M(v) <= b for each b in ascending ``bounds``.

    The outermost coordinate range is split into contiguous chunks that run
    concurrently; chunk results are merged in order, so the output does not
    depend on the thread count.
    """
    if plane.dim != lattice.signature[0]:
        raise ValueError(f"plane dimension {plane.dim} != n_plus {lattice.signature[0]}")
    start = time.perf_counter()
    n = lattice.rank
    raw = np.asarray(bounds, dtype=float)
    if 0 in lattice.signature:
        # a definite form has no nonzero isotropic vectors
        return ConeSearch(raw, np.zeros(len(raw), dtype=np.int64), np.zeros(0),
                          np.zeros((0, n), dtype=np.int64), 0,
                          int(round(1000 * (time.perf_counter() - start))))
    form = build_majorant(lattice, plane)
    qd, mu = _fp_coefficients(form)
    gram = lattice.matrix.astype(np.int64)
    lims = raw * (1 + REL_TOL) + REL_TOL
    rad = math.sqrt(lims[-1] / qd[n - 1])
    hi = math.floor(rad)
    nthreads = min(_thread_count(threads), hi + 1)
    edges = np.linspace(0, hi + 1, nthreads + 1).astype(np.int64)
    chunks = [(int(a), int(b) - 1) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    def run(chunk):
        return _cone_search(qd, mu, gram, lims, chunk[0], chunk[1], collect_vectors)

    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    hist = sum(p[0] for p in parts)
    counts = 2 * np.cumsum(hist)
    half_m = np.concatenate([p[1] for p in parts])
    half_v = np.concatenate([p[2] for p in parts]).reshape(-1, n)
    # interleave v, -v
    mvals = np.repeat(half_m, 2)
    vecs = np.empty((2 * len(half_v), n), dtype=np.int64)
    vecs[0::2] = half_v
    vecs[1::2] = -half_v
    nodes = sum(int(p[3]) for p in parts)
    return ConeSearch(raw, counts, mvals, vecs, nodes,
                      int(round(1000 * (time.perf_counter() - start))))


def census(lattice: GramLattice, plane: PositivePlane, v_list: Sequence[float],
           threads: int | None = None) -> list[CensusRecord]:
    """N(V) for each V: primitive isotropic v with Q(v_P) <= V^2, counted with both signs.

    One enumeration at the largest V; smaller V are read off by binning on M = 2 Q(v_P).
    """
    v_list = [float(v) for v in v_list]
    if not v_list:
        raise ValueError("V list is empty")
    if any(v <= 0 for v in v_list) or v_list != sorted(v_list):
        raise ValueError("V list must be positive and ascending")
    result = cone_search(lattice, plane, [2 * v * v for v in v_list], threads)
    return [CensusRecord(v, int(c), result.nodes, result.elapsed_ms)
            for v, c in zip(v_list, result.counts)]


def fit_exponent(records: Sequence[CensusRecord], drop_smallest: bool | None = None) -> FitResult:
    """Least squares of log N against log V.

    The smallest V is dropped when five or more points are available, unless
    ``drop_smallest`` says otherwise.
    """
    pts = sorted((r.V, r.count) for r in records if r.count > 0)
    if drop_smallest is None:
        drop_smallest = len(pts) >= 5
    if drop_smallest:
        pts = pts[1:]
    if len(pts) < 3 or len({v for v, _ in pts}) < 3:
        raise InsufficientDataError("need at least 3 records with count > 0 and distinct V")
    x = np.log([v for v, _ in pts])
    y = np.log([c for _, c in pts])
    return linear_fit(x, y)


def linear_fit(x: np.ndarray, y: np.ndarray) -> FitResult:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), min(1.0, max(0.0, r2)), len(x))
