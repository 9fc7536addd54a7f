"""Oriented simplicial complexes, integer boundary operators, and cochains.

Simplices are stored as strictly sorted vertex tuples. The basis orientation
of every simplex is its sorted order, and incidence signs follow the
alternating convention on vertex deletion, which makes the chain-complex
identity boundary-of-boundary = 0 a structural fact independent of how the
input cells were ordered. The orientation supplied with the top cells is kept
separately as a +-1 coefficient vector (the fundamental class); a complex is
accepted only if that chain is a cycle, i.e. the input is a closed oriented
pseudomanifold.

Boundary matrices are integer and kept exact; ranks (hence Betti numbers) are
computed by Gaussian elimination over a large prime field, which agrees with
the rational rank whenever the complex has no torsion divisible by the prime.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ComplexError, DegreeError, ShapeError

__all__ = [
    "SimplicialComplex",
    "Cochain",
    "build_complex",
    "coboundary",
    "cochain_zero",
    "cochain_axpy",
    "random_cochain",
    "rank_mod_p",
]

# 2^31 - 1. Elimination over GF(p) gives the rational rank for torsion-free
# complexes; the fixed corpus (circles, tori, spheres) is torsion-free.
_RANK_PRIME = 2_147_483_647


def _sorted_with_parity(simplex):
    """Sort a vertex tuple, returning (sorted tuple, permutation sign)."""
    items = list(simplex)
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    return tuple(items), sign


def rank_mod_p(matrix, p: int = _RANK_PRIME) -> int:
    """Rank of an integer matrix, by row elimination over GF(p)."""
    if sp.issparse(matrix):
        matrix = matrix.toarray()
    a = np.array(matrix, dtype=np.int64) % p
    m, n = a.shape
    if m == 0 or n == 0:
        return 0
    rank = 0
    for col in range(n):
        pivots = np.nonzero(a[rank:, col])[0]
        if pivots.size == 0:
            continue
        r = rank + pivots[0]
        if r != rank:
            a[[rank, r]] = a[[r, rank]]
        inv = pow(int(a[rank, col]), p - 2, p)
        a[rank] = (a[rank] * inv) % p
        below = np.nonzero(a[rank + 1:, col])[0]
        if below.size:
            rows = rank + 1 + below
            # entries < p, so products stay within int64
            a[rows] = (a[rows] - np.outer(a[rows, col], a[rank])) % p
        rank += 1
        if rank == m:
            break
    return rank


@dataclass(frozen=True)
class SimplicialComplex:
    """A closed oriented simplicial pseudomanifold with exact incidence data.

    Attributes:
        dimension: top degree n >= 1.
        vertices: (num_vertices, ambient_dim) float coordinates.
        period: optional per-coordinate periods; when set, geometry is read
            in quotient (minimum-image) coordinates, e.g. the flat torus.
        simplices: per degree p, the tuple of sorted vertex tuples.
        orientation: +-1 per top simplex, relating the supplied orientation
            of each top cell to its sorted-tuple basis orientation.
        meta: free-form provenance tags (corpus generators fill these in).
    """

    dimension: int
    vertices: np.ndarray
    simplices: tuple
    orientation: np.ndarray
    period: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices.setflags(write=False)
        self.orientation.setflags(write=False)

    def num_simplices(self, p: int) -> int:
        self._check_degree(p)
        return len(self.simplices[p])

    def _check_degree(self, p: int):
        if not 0 <= p <= self.dimension:
            raise DegreeError(
                f"degree {p} outside 0..{self.dimension}")

    @cached_property
    def _boundaries(self) -> tuple:
        """Integer boundary matrices; entry [p] maps p-chains to (p-1)-chains."""
        mats = [sp.csr_matrix((0, len(self.simplices[0])), dtype=np.int64)]
        for p in range(1, self.dimension + 1):
            faces = {s: i for i, s in enumerate(self.simplices[p - 1])}
            rows, cols, vals = [], [], []
            for c, simplex in enumerate(self.simplices[p]):
                sign = 1
                for k in range(p + 1):
                    face = simplex[:k] + simplex[k + 1:]
                    rows.append(faces[face])
                    cols.append(c)
                    vals.append(sign)
                    sign = -sign
            mat = sp.csr_matrix(
                (vals, (rows, cols)),
                shape=(len(self.simplices[p - 1]), len(self.simplices[p])),
                dtype=np.int64,
            )
            mats.append(mat)
        return tuple(mats)

    def boundary_matrix(self, p: int) -> sp.csr_matrix:
        """The integer boundary operator on p-chains, 1 <= p <= n."""
        if not 1 <= p <= self.dimension:
            raise DegreeError(f"boundary degree {p} outside 1..{self.dimension}")
        return self._boundaries[p]

    def coboundary_matrix(self, p: int) -> sp.csr_matrix:
        """The integer coboundary d_p on p-cochains, 0 <= p < n."""
        if not 0 <= p < self.dimension:
            raise DegreeError(f"coboundary degree {p} outside 0..{self.dimension - 1}")
        return sp.csr_matrix(self._boundaries[p + 1].T)

    def _coboundary_or_empty(self, p: int) -> sp.csr_matrix:
        """d_p, extended by the empty map on top-degree cochains."""
        if p == self.dimension:
            return sp.csr_matrix((0, self.num_simplices(p)), dtype=np.int64)
        return self.coboundary_matrix(p)

    @cached_property
    def betti_numbers(self) -> tuple:
        """Betti numbers from exact integer ranks of the boundary operators."""
        n = self.dimension
        ranks = [0] + [rank_mod_p(self._boundaries[p]) for p in range(1, n + 1)] + [0]
        return tuple(
            self.num_simplices(p) - ranks[p] - ranks[p + 1] for p in range(n + 1)
        )

    @cached_property
    def complex_id(self) -> str:
        """Content hash identifying this complex in serialized cochains."""
        h = hashlib.sha256()
        h.update(np.int64(self.dimension).tobytes())
        h.update(np.asarray(self.vertices, dtype=np.float64).tobytes())
        if self.period is not None:
            h.update(np.asarray(self.period, dtype=np.float64).tobytes())
        for p in range(self.dimension + 1):
            h.update(np.asarray(self.simplices[p], dtype=np.int64).tobytes())
        h.update(np.asarray(self.orientation, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]

    def simplex_displacements(self, p: int, index: int) -> np.ndarray:
        """Edge vectors of a p-simplex from its first vertex, (ambient, p).

        Minimum-image convention applies when the complex is periodic.
        """
        simplex = self.simplices[p][index]
        base = self.vertices[simplex[0]]
        disp = self.vertices[list(simplex[1:])] - base
        if self.period is not None:
            per = np.asarray(self.period)
            disp = disp - per * np.round(disp / per)
        return disp.T

    def __repr__(self):
        counts = ", ".join(
            f"{len(self.simplices[p])} x {p}-cells" for p in range(self.dimension + 1)
        )
        return f"SimplicialComplex(dim={self.dimension}, {counts})"


def build_complex(vertices, top_simplices, period=None, meta=None) -> SimplicialComplex:
    """Assemble a complex from vertex coordinates and oriented top cells.

    Every (n-1)-simplex must have exactly two top cofaces whose induced
    orientations cancel; anything else (boundary, non-manifold gluing, or an
    orientation mismatch) is rejected with the offending simplex named.

    Raises:
        ComplexError: malformed cells, duplicate top simplices, unused
            vertices, or a non-closed / non-oriented input.
    """
    verts = np.array(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[0] == 0:
        raise ComplexError("vertices must be a nonempty (count, dim) array")
    nv = verts.shape[0]

    tops = [tuple(int(v) for v in s) for s in top_simplices]
    if not tops:
        raise ComplexError("no top simplices given")
    n = len(tops[0]) - 1
    if n < 1:
        raise ComplexError("top simplices must have at least 2 vertices")

    canonical = []
    signs = []
    seen = {}
    for s in tops:
        if len(s) != n + 1:
            raise ComplexError(f"top simplex {s} has mixed dimension")
        if any(v < 0 or v >= nv for v in s):
            raise ComplexError(f"top simplex {s} references a missing vertex")
        key, sign = _sorted_with_parity(s)
        if len(set(key)) != n + 1:
            raise ComplexError(f"top simplex {s} repeats a vertex")
        if key in seen:
            raise ComplexError(f"duplicate top simplex {key}")
        seen[key] = None
        canonical.append(key)
        signs.append(sign)

    order = sorted(range(len(canonical)), key=lambda i: canonical[i])
    canonical = [canonical[i] for i in order]
    signs = np.array([signs[i] for i in order], dtype=np.int8)

    simplices = [None] * (n + 1)
    simplices[n] = tuple(canonical)
    for p in range(n, 0, -1):
        faces = {s[:k] + s[k + 1:] for s in simplices[p] for k in range(p + 1)}
        simplices[p - 1] = tuple(sorted(faces))

    if len(simplices[0]) != nv:
        used = {s[0] for s in simplices[0]}
        missing = sorted(set(range(nv)) - used)
        raise ComplexError(f"vertices {missing[:5]} belong to no top simplex")

    complex_ = SimplicialComplex(
        dimension=n,
        vertices=verts,
        simplices=tuple(simplices),
        orientation=signs,
        period=tuple(float(x) for x in period) if period is not None else None,
        meta=dict(meta or {}),
    )

    top_boundary = complex_.boundary_matrix(n)
    cofaces = np.diff(top_boundary.indptr)
    bad = np.nonzero(cofaces != 2)[0]
    if bad.size:
        i = int(bad[0])
        raise ComplexError(
            f"not a closed pseudomanifold: {n - 1}-simplex "
            f"{complex_.simplices[n - 1][i]} has {int(cofaces[i])} cofaces"
        )
    cycle = top_boundary @ signs.astype(np.int64)
    bad = np.nonzero(cycle)[0]
    if bad.size:
        i = int(bad[0])
        raise ComplexError(
            f"not consistently oriented: induced orientations do not cancel "
            f"on {n - 1}-simplex {complex_.simplices[n - 1][i]}"
        )
    return complex_


def coboundary(complex_: SimplicialComplex, p: int) -> sp.csr_matrix:
    """Integer coboundary matrix d_p; satisfies d_{p+1} d_p = 0 exactly."""
    return complex_.coboundary_matrix(p)


@dataclass(frozen=True)
class Cochain:
    """A real-valued p-cochain on a fixed complex (the discrete p-form)."""

    complex: SimplicialComplex
    degree: int
    values: np.ndarray

    def __post_init__(self):
        self.complex._check_degree(self.degree)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.complex.num_simplices(self.degree),):
            raise ShapeError(
                f"degree-{self.degree} cochain needs "
                f"{self.complex.num_simplices(self.degree)} values, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ShapeError("cochain values must be finite")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)

    @property
    def complex_id(self) -> str:
        return self.complex.complex_id

    def with_values(self, values) -> "Cochain":
        return Cochain(self.complex, self.degree, values)


def cochain_zero(complex_: SimplicialComplex, p: int) -> Cochain:
    """The zero p-cochain."""
    return Cochain(complex_, p, np.zeros(complex_.num_simplices(p)))


def cochain_axpy(a: float, x: Cochain, y: Cochain) -> Cochain:
    """a*x + y for cochains of matching degree on the same complex."""
    if x.degree != y.degree:
        raise ShapeError(f"degree mismatch: {x.degree} vs {y.degree}")
    if x.complex is not y.complex and x.complex_id != y.complex_id:
        raise ShapeError("cochains live on different complexes")
    return Cochain(x.complex, x.degree, float(a) * x.values + y.values)


def random_cochain(complex_: SimplicialComplex, p: int, rng) -> Cochain:
    """Standard-normal cochain; rng is a numpy Generator for reproducibility."""
    return Cochain(complex_, p, rng.standard_normal(complex_.num_simplices(p)))
