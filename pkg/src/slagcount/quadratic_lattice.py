"""Integer lattices with indefinite forms, positive planes, reflections and boosts."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

TOL = 1e-10

# Bourbaki labelling: chain 1-3-4-5-6-7-8 with node 2 attached to node 4.
_E8_EDGES = [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)]


def _e8_cartan() -> list[list[int]]:
    c = [[2 if i == j else 0 for j in range(8)] for i in range(8)]
    for i, j in _E8_EDGES:
        c[i][j] = c[j][i] = -1
    return c


class DegenerateFormError(ValueError):
    pass


def sylvester_signature(gram: Sequence[Sequence[int]]) -> tuple[int, int]:
    """Signature by exact congruence diagonalisation over the rationals."""
    a = [[Fraction(x) for x in row] for row in gram]
    pos = neg = 0
    while a:
        n = len(a)
        piv = next((i for i in range(n) if a[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in range(n) for j in range(n) if a[i][j] != 0), None)
            if pair is None:
                raise DegenerateFormError(f"form is degenerate (rank deficiency {n})")
            i, j = pair
            # v_i -> v_i + v_j makes the diagonal entry 2*a_ij != 0
            for k in range(n):
                a[i][k] += a[j][k]
            for k in range(n):
                a[k][i] += a[k][j]
            piv = i
        d = a[piv][piv]
        if d > 0:
            pos += 1
        else:
            neg += 1
        rest = [k for k in range(n) if k != piv]
        a = [[a[r][c] - a[r][piv] * a[piv][c] / d for c in rest] for r in rest]
    return pos, neg


@dataclass(frozen=True)
class GramLattice:
    gram: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        g = tuple(tuple(int(x) for x in row) for row in self.gram)
        n = len(g)
        if n == 0 or any(len(row) != n for row in g):
            raise ValueError("gram must be a non-empty square matrix")
        if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise ValueError("gram must be symmetric")
        object.__setattr__(self, "gram", g)
        # raises DegenerateFormError early
        object.__setattr__(self, "_signature", sylvester_signature(g))

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def signature(self) -> tuple[int, int]:
        return self._signature

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64)

    @property
    def is_even(self) -> bool:
        return all(self.gram[i][i] % 2 == 0 for i in range(self.rank))

    def determinant(self) -> int:
        a = [[Fraction(x) for x in row] for row in self.gram]
        n, det = self.rank, Fraction(1)
        for c in range(n):
            piv = next((r for r in range(c, n) if a[r][c] != 0), None)
            if piv is None:
                return 0
            if piv != c:
                a[c], a[piv] = a[piv], a[c]
                det = -det
            det *= a[c][c]
            for r in range(c + 1, n):
                f = a[r][c] / a[c][c]
                if f:
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return int(det)

    def pair(self, v: Sequence, w: Sequence):
        """Bilinear pairing; exact when both arguments are integer/rational."""
        return sum(v[i] * self.gram[i][j] * w[j]
                   for i in range(self.rank) for j in range(self.rank) if self.gram[i][j])

    def to_json(self) -> str:
        return json.dumps([list(row) for row in self.gram])

    @classmethod
    def from_json(cls, text: str) -> "GramLattice":
        return cls(tuple(tuple(row) for row in json.loads(text)))

    @classmethod
    def U(cls) -> "GramLattice":
        return cls(((0, 1), (1, 0)), "U")

    @classmethod
    def E8m(cls) -> "GramLattice":
        return cls(tuple(tuple(-x for x in row) for row in _e8_cartan()), "E8m")

    @classmethod
    def parse(cls, text: str) -> "GramLattice":
        """Parse strings like ``"U"``, ``"2U"`` or ``"3U+2E8m"`` into a direct sum."""
        blocks = []
        for token in text.replace(" ", "").split("+"):
            m = re.fullmatch(r"(\d*)(U|E8m)", token)
            if not m:
                raise ValueError(f"cannot parse lattice term {token!r}")
            mult = int(m.group(1) or 1)
            if mult < 1:
                raise ValueError(f"multiplicity must be positive in {token!r}")
            base = cls.U() if m.group(2) == "U" else cls.E8m()
            blocks.extend([base] * mult)
        return direct_sum(*blocks, name=text.replace(" ", ""))


def direct_sum(*lattices: GramLattice, name: str | None = None) -> GramLattice:
    n = sum(L.rank for L in lattices)
    g = [[0] * n for _ in range(n)]
    off = 0
    for L in lattices:
        for i in range(L.rank):
            for j in range(L.rank):
                g[off + i][off + j] = L.gram[i][j]
        off += L.rank
    if name is None:
        name = "+".join(L.name or "?" for L in lattices)
    return GramLattice(tuple(map(tuple, g)), name)


def k3_lattice() -> GramLattice:
    return GramLattice.parse("3U+2E8m")


@dataclass(frozen=True)
class LatticeVector:
    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(x) for x in self.coords))

    def __len__(self):
        return len(self.coords)

    @property
    def is_primitive(self) -> bool:
        return reduce(math.gcd, self.coords, 0) == 1

    def is_isotropic(self, lattice: GramLattice) -> bool:
        return q_value(lattice, self) == 0


def _coords(v) -> tuple:
    return v.coords if isinstance(v, LatticeVector) else tuple(v)


def q_value(lattice: GramLattice, v) -> int:
    c = _coords(v)
    if len(c) != lattice.rank:
        raise ValueError(f"vector has length {len(c)}, lattice rank is {lattice.rank}")
    return lattice.pair(c, c)


def signature(lattice: GramLattice) -> tuple[int, int]:
    return lattice.signature


# -- small exact linear algebra -------------------------------------------------

def _frac_inverse(a: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(a)
    m = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def _as_fraction_matrix(a) -> np.ndarray:
    out = np.empty(np.shape(a), dtype=object)
    for idx, x in np.ndenumerate(np.asarray(a, dtype=object)):
        out[idx] = Fraction(x)
    return out


# -- positive planes --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PositivePlane:
    """A positive-definite subspace of the real span, given by basis columns.

    ``exact_basis`` is kept when the plane was built from rational vectors so
    that projections, reflections and boosts can be evaluated without rounding.
    """

    basis: np.ndarray
    parent: GramLattice
    exact_basis: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        b = np.zeros((self.parent.rank, 0)) if b.size == 0 else b.reshape(self.parent.rank, -1)
        object.__setattr__(self, "basis", b)
        if self.dim:
            gram_p = b.T @ self.parent.matrix @ b
            if not np.allclose(gram_p, gram_p.T, atol=TOL):
                raise ValueError("restricted form is not symmetric")
            if np.linalg.eigvalsh((gram_p + gram_p.T) / 2).min() <= 0:
                raise ValueError("plane is not positive definite")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_exact(self) -> bool:
        return self.exact_basis is not None

    @cached_property
    def projector(self) -> np.ndarray:
        n = self.parent.rank
        if not self.dim:
            return np.zeros((n, n))
        q = self.parent.matrix.astype(float)
        b = self.basis
        return b @ np.linalg.solve(b.T @ q @ b, b.T @ q)

    @cached_property
    def exact_projector(self) -> np.ndarray:
        if self.exact_basis is None:
            raise ValueError("plane has no rational basis")
        n = self.parent.rank
        if not self.dim:
            return _as_fraction_matrix(np.zeros((n, n), dtype=int))
        q = _as_fraction_matrix(self.parent.matrix)
        b = self.exact_basis
        inner = np.array(_frac_inverse((b.T @ q @ b).tolist()), dtype=object)
        return b @ inner @ b.T @ q

    @classmethod
    def empty(cls, lattice: GramLattice) -> "PositivePlane":
        return cls(np.zeros((lattice.rank, 0)), lattice,
                   np.zeros((lattice.rank, 0), dtype=object))

    @classmethod
    def from_vectors(cls, lattice: GramLattice, vectors: Sequence[Sequence]) -> "PositivePlane":
        """Plane spanned by rational vectors, Q-orthogonalised exactly (no normalisation)."""
        ortho: list[list[Fraction]] = []
        for v in vectors:
            w = [Fraction(x) for x in v]
            if len(w) != lattice.rank:
                raise ValueError("vector length does not match lattice rank")
            for u in ortho:
                coef = lattice.pair(w, u) / lattice.pair(u, u)
                w = [wi - coef * ui for wi, ui in zip(w, u)]
            if lattice.pair(w, w) <= 0:
                raise ValueError("spanning vectors do not define a positive-definite plane")
            ortho.append(w)
        if not ortho:
            return cls.empty(lattice)
        exact = np.array(ortho, dtype=object).T
        return cls(np.array(exact, dtype=float), lattice, exact)

    @classmethod
    def random(cls, lattice: GramLattice, seed: int, spread: float = 0.5,
               attempts: int = 100) -> "PositivePlane":
        """Seeded generic plane of dimension ``n_plus``.

        Gaussian perturbations (relative size ``spread``) of the positive
        eigenspace of Q are Q-orthonormalised by Gram-Schmidt; a draw is rejected if it is not
        positive definite.
        """
        rng = np.random.default_rng(seed)
        q = lattice.matrix.astype(float)
        p = lattice.signature[0]
        w, vecs = np.linalg.eigh(q)
        anchor = vecs[:, w > 0]
        for _ in range(attempts):
            cand = anchor + spread / math.sqrt(lattice.rank) * rng.standard_normal(anchor.shape)
            basis = _q_gram_schmidt(q, cand)
            if basis is not None:
                return cls(basis, lattice)
        raise RuntimeError(f"no positive-definite {p}-plane found in {attempts} attempts")

    def transformed(self, u: np.ndarray) -> "PositivePlane":
        """Image of the plane under an integer isometry ``u`` (columns act on coordinates)."""
        u = np.asarray(u)
        exact = None if self.exact_basis is None else _as_fraction_matrix(u) @ self.exact_basis
        return PositivePlane(u @ self.basis, self.parent, exact)


def _q_gram_schmidt(q: np.ndarray, cand: np.ndarray) -> np.ndarray | None:
    out = []
    for j in range(cand.shape[1]):
        w = cand[:, j].copy()
        for u in out:
            w -= (w @ q @ u) * u
        norm2 = w @ q @ w
        if norm2 <= 1e-8:
            return None
        out.append(w / math.sqrt(norm2))
    return np.array(out).T.reshape(q.shape[0], len(out))


def project(plane: PositivePlane, v, exact: bool = False):
    """Split ``v`` into its components in the plane and in its Q-orthogonal complement."""
    if len(v) != plane.parent.rank:
        raise ValueError("vector length does not match lattice rank")
    if exact:
        vv = np.array([Fraction(x) for x in v], dtype=object)
        vp = plane.exact_projector @ vv
        return vp, vv - vp
    vv = np.asarray(v, dtype=float)
    vp = plane.projector @ vv
    return vp, vv - vp


def reflect_e_prime(plane: PositivePlane, e, exact: bool = False):
    """e' = (e)_P - (e)_{P-perp}: the reflection of an isotropic vector across the plane."""
    c = _coords(e)
    if q_value(plane.parent, c) != 0:
        raise ValueError("e must be isotropic")
    vp, vperp = project(plane, c, exact=exact)
    return vp - vperp


def boost_matrix(plane: PositivePlane, e, lam):
    """Matrix scaling e by 1/lam and e' by lam, identity on span(e, e')-perp.

    Exact (object array of Fractions) when the plane has a rational basis and
    ``lam`` is an int or Fraction; floating otherwise.
    """
    c = _coords(e)
    exact = plane.is_exact and isinstance(lam, (int, Fraction))
    if not exact:
        lam = float(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    ep = reflect_e_prime(plane, c, exact=exact)
    if exact:
        q = _as_fraction_matrix(plane.parent.matrix)
        ev = np.array([Fraction(x) for x in c], dtype=object)
        eye = _as_fraction_matrix(np.eye(len(c), dtype=int))
        inv = Fraction(1) / Fraction(lam)
    else:
        q = plane.parent.matrix.astype(float)
        ev = np.asarray(c, dtype=float)
        eye = np.eye(len(c))
        inv = 1.0 / lam
    pairing = ev @ q @ ep
    if pairing == 0 or (not exact and abs(pairing) < TOL):
        raise ValueError("degenerate pairing between e and e'")
    return (eye
            + (inv - 1) * np.outer(ev, q @ ep) / pairing
            + (lam - 1) * np.outer(ep, q @ ev) / pairing)


def boost_matrix_t(plane: PositivePlane, e, t: float) -> np.ndarray:
    """Floating boost a_t, i.e. lambda = exp(t)."""
    return boost_matrix(plane, e, math.exp(t))
