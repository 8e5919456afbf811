"""Iwasawa decomposition in SO(p, q) and quadrature for the Harish-Chandra function.

Conventions
-----------
The diagonal basis u_1..u_n carries J = diag(I_p, -I_q) and K = O(p) x O(q)
is block diagonal there.  The hyperbolic basis is the flag-ordered basis

    f_1, ..., f_p, u_{2p+1}, ..., u_n, f'_p, ..., f'_1,
    f_i = (u_i + u_{p+i}) / sqrt 2,   f'_i = (u_i - u_{p+i}) / sqrt 2,

in which N is unit upper triangular.  The torus element with logarithm
H = (h_1, ..., h_p) scales f_i by exp(-h_i) and f'_i by exp(h_i), so the
boost a_t = exp(t e_1) contracts the isotropic vector f_1 by exp(-t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .isotropic_census import FitResult, linear_fit
from .lie_data import GroupSpec, rho_H, root_datum

FORM_TOL = 1e-9
MAX_COND = 1e12
CONVERGENCE_TOL = 1e-6
DEFAULT_NODES = 256
SUPPORTED_XI = {(1, 2), (2, 2)}
# beyond this, forming k a_t^{-1} in doubles loses the e^{-|t|} scale to cancellation
MAX_ABS_T = 15.0


class QuadratureError(RuntimeError):
    pass


class UnsupportedSpecError(ValueError):
    pass


def form_matrix(spec: GroupSpec, basis: str = "diagonal") -> np.ndarray:
    j = np.diag([1.0] * spec.p + [-1.0] * spec.q)
    if basis == "diagonal":
        return j
    t = change_of_basis(spec)
    return t.T @ j @ t


def change_of_basis(spec: GroupSpec) -> np.ndarray:
    """Orthogonal T whose columns are the hyperbolic basis in diagonal coordinates."""
    p, n = spec.p, spec.n
    t = np.zeros((n, n))
    s = 1 / math.sqrt(2)
    for i in range(p):
        t[i, i] = t[p + i, i] = s
        t[i, n - 1 - i] = s
        t[p + i, n - 1 - i] = -s
    for j, m in enumerate(range(2 * p, n)):
        t[m, p + j] = 1.0
    return t


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    spec: GroupSpec
    basis: str = "diagonal"

    def __post_init__(self):
        if self.basis not in ("diagonal", "hyperbolic"):
            raise ValueError(f"unknown basis {self.basis!r}")
        g = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", g)
        j = form_matrix(self.spec, self.basis)
        # relative to |g|^2: boosts with large t have entries of size e^t
        scale = max(1.0, float(np.max(np.abs(g))) ** 2)
        if np.max(np.abs(g.T @ j @ g - j)) > FORM_TOL * scale:
            raise ValueError("matrix does not preserve the quadratic form")

    def to_basis(self, basis: str) -> "GroupElement":
        if basis == self.basis:
            return self
        t = change_of_basis(self.spec)
        m = t.T @ self.matrix @ t if basis == "hyperbolic" else t @ self.matrix @ t.T
        return GroupElement(m, self.spec, basis)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.to_basis(self.basis).matrix, self.spec, self.basis)

    def inverse(self) -> "GroupElement":
        j = form_matrix(self.spec, self.basis)
        # g^{-1} = J^{-1} g^T J for form-preserving g
        return GroupElement(np.linalg.solve(j, self.matrix.T @ j), self.spec, self.basis)


@dataclass(frozen=True, eq=False)
class IwasawaTriple:
    n: GroupElement  # hyperbolic basis, unit upper triangular
    H: np.ndarray
    k: GroupElement  # diagonal basis, orthogonal

    def a(self) -> GroupElement:
        return torus_element(self.n.spec, self.H)

    def reconstruct(self) -> GroupElement:
        return (self.n @ self.a() @ self.k).to_basis("diagonal")


def torus_element(spec: GroupSpec, h) -> GroupElement:
    h = np.asarray(h, dtype=float)
    if h.shape != (spec.p,):
        raise ValueError(f"torus logarithm must have length {spec.p}")
    d = np.ones(spec.n)
    d[: spec.p] = np.exp(-h)
    d[spec.n - spec.p:] = np.exp(h[::-1])
    return GroupElement(np.diag(d), spec, "hyperbolic")


def boost(spec: GroupSpec, t: float) -> GroupElement:
    """a_t = exp(t H) with H the first torus coordinate."""
    h = np.zeros(spec.p)
    h[0] = t
    return torus_element(spec, h)


def iwasawa(g: GroupElement) -> IwasawaTriple:
    """g = n a k with n in N (upper unipotent in the hyperbolic basis), a in A, k in K.

    With P = g g^T (K is orthogonal in both bases), P = n a^2 n^T is the
    unique upper-lower factorisation of a positive matrix, obtained from the
    Cholesky factor of P with rows and columns reversed.
    """
    spec = g.spec
    cond = np.linalg.cond(g.matrix)
    if not np.isfinite(cond) or cond > MAX_COND:
        raise ValueError(f"element is numerically degenerate (condition {cond:.3g})")
    gf = g.to_basis("hyperbolic").matrix
    pm = gf @ gf.T
    rev = pm[::-1, ::-1]
    lower = np.linalg.cholesky((rev + rev.T) / 2)
    upper = lower[::-1, ::-1]
    a_diag = np.diag(upper).copy()
    n_mat = upper / a_diag[None, :]
    h = -np.log(a_diag[: spec.p])
    k_f = np.linalg.solve(n_mat * a_diag[None, :], gf)
    n_el = GroupElement(n_mat, spec, "hyperbolic")
    k_el = GroupElement(k_f, spec, "hyperbolic").to_basis("diagonal")
    return IwasawaTriple(n_el, h, k_el)


def H_of(g: GroupElement) -> np.ndarray:
    return iwasawa(g).H


# -- K parametrisation ---------------------------------------------------------------

def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def circle_count(spec: GroupSpec) -> int:
    return int(spec.p == 2) + int(spec.q == 2)


def k_blocks(spec: GroupSpec, angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(k1, k2) in SO(p) x SO(q) for batched rotation angles (supported sizes p, q <= 2)."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    if spec.p > 2 or spec.q > 2:
        raise UnsupportedSpecError("K is parameterised by rotation angles only for p, q <= 2")
    m = angles.shape[0]
    col = 0
    blocks = []
    for size in (spec.p, spec.q):
        if size == 2:
            blocks.append(_rot(angles[:, col]))
            col += 1
        else:
            blocks.append(np.ones((m, 1, 1)))
    return blocks[0], blocks[1]


def k_element(spec: GroupSpec, angles) -> GroupElement:
    k1, k2 = k_blocks(spec, np.asarray(angles, dtype=float)[None, :])
    k = np.zeros((spec.n, spec.n))
    k[: spec.p, : spec.p] = k1[0]
    k[spec.p:, spec.p:] = k2[0]
    return GroupElement(k, spec)


# -- quadrature --------------------------------------------------------------------------

DE_HALF_WIDTH = 3.5


def _circle_rule(nodes: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Angles and weights (summing to ~1) for one circle.

    ``"uniform"`` is the plain trapezoid rule.  ``"double_exponential"`` runs
    the trapezoid rule in the tanh-sinh variable on each half circle, with
    break points at 0 and pi where the integrand for a boost concentrates.
    """
    if kind == "uniform":
        return 2 * np.pi * np.arange(nodes) / nodes, np.full(nodes, 1.0 / nodes)
    if kind != "double_exponential":
        raise ValueError(f"unknown quadrature kind {kind!r}")
    half = nodes // 2
    h = 2 * DE_HALF_WIDTH / half
    s = -DE_HALF_WIDTH + (np.arange(half) + 0.5) * h
    arg = 0.5 * np.pi * np.sinh(s)
    x = np.tanh(arg)                    # in (-1, 1)
    dx = 0.5 * np.pi * np.cosh(s) / np.cosh(arg) ** 2 * h
    theta = np.concatenate([np.pi / 2 * (1 + x), np.pi + np.pi / 2 * (1 + x)])
    w = np.concatenate([dx, dx]) * (np.pi / 2) / (2 * np.pi)
    return theta, w


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor product grid on the identity component of K; weights sum to 1.

    For (2, 2) the grid axes are the sum and difference angles
    (u, v) = (alpha + beta, alpha - beta): the integrand concentrates along
    lines alpha +- beta = const, which become coordinate lines there.  The
    map (u, v) -> (alpha, beta) covers the torus modulo -1 in K, which acts
    trivially on the integrand.
    """

    spec: GroupSpec
    nodes_per_circle: int
    kind: str = "double_exponential"
    axes: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if circle_count(self.spec) == 0:
            raise UnsupportedSpecError("K has no circle factor to integrate over")
        rules = [_circle_rule(self.nodes_per_circle, self.kind)
                 for _ in range(circle_count(self.spec))]
        # unit mass exactly, not just to rounding of the node map
        rules = [(th, w / math.fsum(w)) for th, w in rules]
        object.__setattr__(self, "axes", tuple(rules))

    @classmethod
    def uniform(cls, spec: GroupSpec, nodes_per_circle: int) -> "QuadratureGrid":
        return cls(spec, nodes_per_circle, "uniform")

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(self.spec, 2 * self.nodes_per_circle, self.kind)

    @property
    def size(self) -> int:
        return self.nodes_per_circle ** len(self.axes)

    @property
    def weights(self) -> np.ndarray:
        if len(self.axes) == 1:
            return self.axes[0][1]
        return np.outer(self.axes[0][1], self.axes[1][1]).ravel()

    @property
    def nodes(self) -> np.ndarray:
        """K angles, one row per node."""
        if len(self.axes) == 1:
            return self.axes[0][0][:, None]
        u, v = np.meshgrid(self.axes[0][0], self.axes[1][0], indexing="ij")
        return np.stack([(u + v).ravel() / 2, (u - v).ravel() / 2], axis=1)

    def chunks(self, size: int = 1 << 18):
        """(angles, weights) in row-major blocks without materialising the full grid."""
        if len(self.axes) == 1:
            th, w = self.axes[0]
            for s in range(0, len(th), size):
                yield th[s:s + size, None], w[s:s + size]
            return
        (tu, wu), (tv, wv) = self.axes
        rows = max(1, size // len(tv))
        for s in range(0, len(tu), rows):
            u = tu[s:s + rows, None]
            ang = np.stack([np.broadcast_to((u + tv) / 2, (len(u), len(tv))).ravel(),
                            np.broadcast_to((u - tv) / 2, (len(u), len(tv))).ravel()], axis=1)
            yield ang, np.outer(wu[s:s + rows], wv).ravel()


def torus_log_batch(spec: GroupSpec, g_rows: np.ndarray) -> np.ndarray:
    """H from the last p rows (f'_1, ..., f'_p order) of g in the hyperbolic basis.

    The trailing minors of P = g g^T are products of the last diagonal entries
    of a^2, so a Cholesky factor of the Gram matrix of these rows gives H.
    """
    gram = np.einsum("mik,mjk->mij", g_rows, g_rows)
    if spec.p == 1:
        return 0.5 * np.log(gram[:, 0, 0])[:, None]
    if spec.p == 2:
        g11, g12, g22 = gram[:, 0, 0], gram[:, 0, 1], gram[:, 1, 1]
        h1 = 0.5 * np.log(g11)
        h2 = 0.5 * np.log((g11 * g22 - g12 * g12) / g11)
        return np.stack([h1, h2], axis=1)
    chol = np.linalg.cholesky(gram)
    return np.log(np.diagonal(chol, axis1=1, axis2=2))


def _integrand(spec: GroupSpec, angles: np.ndarray, g_inv_diag: np.ndarray, rho: np.ndarray):
    """exp(-rho(H(k g^{-1}))) at each K node, with g^{-1} given in the diagonal basis."""
    p = spec.p
    k1, k2 = k_blocks(spec, angles)
    # row f'_i of T^T k is (k1[i, :], -k2[i, :]) / sqrt 2
    rows = np.concatenate([k1[:, :p, :], -k2[:, :p, :]], axis=2) / math.sqrt(2)
    rows = rows[:, :p, :] @ (g_inv_diag @ change_of_basis(spec))
    h = torus_log_batch(spec, rows)
    return np.exp(-h @ rho)


def _check_xi_spec(spec: GroupSpec):
    if (spec.p, spec.q) not in SUPPORTED_XI:
        raise UnsupportedSpecError(
            f"Xi quadrature supports (1,2) and (2,2) only; for ({spec.p},{spec.q}) "
            f"use the analytic decay rate rho(H) = {rho_H(spec)}")


def xi_on_grid(spec: GroupSpec, t: float, grid: QuadratureGrid) -> float:
    """One quadrature sum for Xi(a_t), no convergence check."""
    _check_xi_spec(spec)
    if abs(t) > MAX_ABS_T:
        raise QuadratureError(f"|t| = {abs(t)} exceeds {MAX_ABS_T}; double precision cannot resolve Xi there")
    rho = np.array([float(x) for x in root_datum(spec).rho])
    a_inv = boost(spec, -t).to_basis("diagonal").matrix
    partial = [float(np.sum(f * w)) for f, w in
               ((_integrand(spec, ang, a_inv, rho), w) for ang, w in grid.chunks())]
    total = math.fsum(partial)
    if not math.isfinite(total):
        raise QuadratureError(f"non-finite quadrature sum at t = {t}")
    return total


def xi_value(spec: GroupSpec, t: float, grid: QuadratureGrid | None = None,
             nodes_per_circle: int | None = None) -> float:
    """Xi(a_t) = integral over K of exp(-rho(H(k a_t^{-1}))) dk.

    The sum on ``grid`` is compared with the sum on its refinement (twice the
    nodes); the refined value is returned if they agree within 1e-6.
    """
    _check_xi_spec(spec)
    if grid is None:
        grid = QuadratureGrid(spec, nodes_per_circle or DEFAULT_NODES)
    if grid.nodes_per_circle < 256:
        raise ValueError("need at least 256 nodes per circle")
    coarse = xi_on_grid(spec, t, grid)
    fine = xi_on_grid(spec, t, grid.refined())
    if abs(fine - coarse) > CONVERGENCE_TOL:
        raise QuadratureError(f"Xi({t}) not converged: {coarse} vs {fine}")
    return fine


@dataclass(frozen=True)
class DecayFit:
    """Three regressions of log Xi on t.

    ``rate`` uses the model -r t + log t + c.  ``rate_matched`` uses
    -r t + k log t + c with k the power of t in the true asymptotics (k = 2
    for (2, 2)); ``rate_pure`` drops the logarithm.
    """

    rate: float
    intercept: float
    r_squared: float
    rate_pure: float
    r_squared_pure: float
    rate_matched: float
    r_squared_matched: float
    log_power_matched: int
    expected_rate: float

    @property
    def fit(self) -> FitResult:
        return FitResult(-self.rate, self.intercept, self.r_squared)


def polynomial_degree(spec: GroupSpec) -> int:
    """Power of t in Xi(a_t) ~ c t^k exp(-rho(H) t): positive roots not vanishing on H."""
    return sum(1 for root, _ in root_datum(spec).positive_roots if root[0] != 0)


def fit_decay(ts, log_xi, expected_rate: float = float("nan"), log_power: int = 1) -> DecayFit:
    ts = np.asarray(ts, dtype=float)
    y = np.asarray(log_xi, dtype=float)
    corrected = linear_fit(ts, y - np.log(ts))
    matched = linear_fit(ts, y - log_power * np.log(ts))
    pure = linear_fit(ts, y)
    return DecayFit(-corrected.slope, corrected.intercept, corrected.r_squared,
                    -pure.slope, pure.r_squared, -matched.slope, matched.r_squared,
                    log_power, expected_rate)


def xi_samples(spec: GroupSpec, t_min: float, t_max: float, samples: int,
               nodes_per_circle: int | None = None) -> list[tuple[float, float]]:
    ts = np.linspace(t_min, t_max, samples)
    return [(float(t), xi_value(spec, float(t), nodes_per_circle=nodes_per_circle)) for t in ts]


def xi_decay_fit(spec: GroupSpec, t_range: tuple[float, float], samples: int,
                 nodes_per_circle: int | None = None) -> DecayFit:
    t_min, t_max = t_range
    if t_min < 4:
        raise ValueError("t_min must be at least 4 (asymptotic regime)")
    if samples < 8:
        raise ValueError("need at least 8 samples")
    data = xi_samples(spec, t_min, t_max, samples, nodes_per_circle)
    return fit_decay([t for t, _ in data], [math.log(x) for _, x in data],
                     float(rho_H(spec)), polynomial_degree(spec))
