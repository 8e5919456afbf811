"""Dimensions and restricted root data of O(p, q)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

# p(pi) for the regular representation on L^2_0(Gamma \ G), keyed by (p, q).
P_PI_TABLE: dict[tuple[int, int], int] = {(3, 19): 20}


@dataclass(frozen=True)
class GroupSpec:
    p: int
    q: int

    def __post_init__(self):
        if not (1 <= self.p <= self.q):
            raise ValueError(f"need 1 <= p <= q, got ({self.p}, {self.q})")

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def real_rank(self) -> int:
        return self.p


@dataclass(frozen=True)
class GroupDimensions:
    dim_G: int
    dim_K: int
    dim_He: int
    dim_X: int
    dim_Y: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RestrictedRootDatum:
    """Positive restricted roots (coefficients on the torus basis e_1..e_p) with multiplicities."""

    spec: GroupSpec
    positive_roots: tuple[tuple[tuple[int, ...], int], ...]
    rho: tuple[Fraction, ...]

    @property
    def dim_n(self) -> int:
        return sum(m for _, m in self.positive_roots)

    @property
    def root_type(self) -> str:
        return ("B" if self.spec.q > self.spec.p else "D") + str(self.spec.p)

    def to_dict(self) -> dict:
        return {
            "p": self.spec.p,
            "q": self.spec.q,
            "type": self.root_type,
            "positive_roots": [{"root": list(r), "multiplicity": m} for r, m in self.positive_roots],
            "rho": [str(x) for x in self.rho],
        }


def dimensions(spec: GroupSpec) -> GroupDimensions:
    n, p, q = spec.n, spec.p, spec.q
    dim_g = n * (n - 1) // 2
    dim_k = p * (p - 1) // 2 + q * (q - 1) // 2
    # the stabiliser of an isotropic vector drops n - 1 dimensions
    dim_he = dim_g - (n - 1)
    return GroupDimensions(dim_g, dim_k, dim_he, dim_g, dim_he)


def root_datum(spec: GroupSpec) -> RestrictedRootDatum:
    p, q = spec.p, spec.q
    roots = []

    def unit(*pairs):
        v = [0] * p
        for i, c in pairs:
            v[i] += c
        return tuple(v)

    for i in range(p):
        for j in range(i + 1, p):
            roots.append((unit((i, 1), (j, -1)), 1))
            roots.append((unit((i, 1), (j, 1)), 1))
    if q > p:
        for i in range(p):
            roots.append((unit((i, 1)), q - p))
    rho = tuple(Fraction(sum(m * r[i] for r, m in roots), 2) for i in range(p))
    return RestrictedRootDatum(spec, tuple(roots), rho)


def rho_H(spec: GroupSpec) -> Fraction:
    """rho evaluated on the boost generator H = e_1 (first torus coordinate)."""
    return root_datum(spec).rho[0]


def load_p_pi_table(path: str | Path) -> dict[tuple[int, int], int]:
    """Read ``[[p, q, value], ...]`` triples from a JSON file."""
    rows = json.loads(Path(path).read_text())
    table = {}
    for row in rows:
        if len(row) != 3:
            raise ValueError(f"p(pi) table rows must be [p, q, value], got {row!r}")
        p, q, val = (int(x) for x in row)
        table[(p, q)] = val
    return table


def integrability_constant(spec: GroupSpec, table: dict[tuple[int, int], int] | None = None) -> int | None:
    merged = dict(P_PI_TABLE)
    if table:
        merged.update(table)
    return merged.get((spec.p, spec.q))
