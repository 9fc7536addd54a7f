"""L2 inner products on cochains and the metric operators they induce.

Two schemes are provided. The Whitney (Galerkin) scheme assembles the mass
matrix of the piecewise-linear elementary p-forms from simplex geometry and
works on any mesh; the lumped scheme uses diagonal circumcentric Hodge stars
and requires a well-centered mesh. Either way, the codifferential is realized
as the mass-matrix adjoint of the coboundary rather than through an explicit
star matrix, and the Hodge Laplacian is assembled from that adjoint pair. The
sign convention of the smooth-theory codifferential is recovered by
construction and cross-checked against the Fourier oracle in the test suite.

Metric data comes from the embedding (or quotient) coordinates of the
vertices; simplex volumes and barycentric gradients are computed from
minimum-image displacement vectors so periodic meshes are handled exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import factorial

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .complexes import Cochain, SimplicialComplex
from .errors import DegreeError, GeometryError, ParameterError, SchemeError, ShapeError

__all__ = [
    "MetricStructure",
    "build_metric",
    "inner",
    "l2_norm",
    "codifferential",
    "codifferential_apply",
    "laplacian",
    "laplacian_apply",
    "stiffness_pair",
]

_DEGENERACY_TOL = 1e-12


class _MassFactor:
    """SPD mass matrix with a cached factorization for repeated solves."""

    def __init__(self, matrix: sp.csr_matrix):
        self.matrix = matrix
        diag = matrix.diagonal()
        offdiag = matrix - sp.diags(diag)
        self._diagonal = diag if offdiag.nnz == 0 else None
        self._cho = None
        if self._diagonal is not None and np.any(self._diagonal <= 0):
            raise GeometryError("mass matrix is not positive-definite")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, x):
        return self.matrix @ x

    def solve(self, b):
        if self._diagonal is not None:
            return (b.T / self._diagonal).T
        if self._cho is None:
            try:
                self._cho = sla.cho_factor(self.matrix.toarray())
            except np.linalg.LinAlgError as exc:
                raise GeometryError(f"mass matrix is not positive-definite: {exc}")
        return sla.cho_solve(self._cho, b)


@dataclass(frozen=True)
class MetricStructure:
    """Per-degree SPD mass matrices plus cached simplex volumes."""

    complex: SimplicialComplex
    scheme: str
    mass: tuple           # csr matrix per degree 0..n
    volumes: tuple        # float array per degree 0..n (degree 0 -> ones)
    _factors: dict = field(default_factory=dict, repr=False)

    def mass_matrix(self, p: int) -> sp.csr_matrix:
        self.complex._check_degree(p)
        return self.mass[p]

    def factor(self, p: int) -> _MassFactor:
        if p not in self._factors:
            self._factors[p] = _MassFactor(self.mass_matrix(p))
        return self._factors[p]


def _simplex_volume(disp) -> float:
    """p-volume of a simplex from its (ambient, p) displacement matrix."""
    p = disp.shape[1]
    if p == 0:
        return 1.0
    gram = disp.T @ disp
    det = float(np.linalg.det(gram)) if p > 1 else float(gram[0, 0])
    return float(np.sqrt(max(det, 0.0)) / factorial(p))


def _all_volumes(complex_: SimplicialComplex) -> tuple:
    vols = []
    for p in range(complex_.dimension + 1):
        if p == 0:
            vols.append(np.ones(complex_.num_simplices(0)))
            continue
        v = np.empty(complex_.num_simplices(p))
        for i in range(complex_.num_simplices(p)):
            disp = complex_.simplex_displacements(p, i)
            v[i] = _simplex_volume(disp)
            edge_scale = float(np.max(np.linalg.norm(disp, axis=0)))
            if v[i] <= _DEGENERACY_TOL * edge_scale ** p:
                raise GeometryError(
                    f"degenerate {p}-simplex {complex_.simplices[p][i]} "
                    f"(volume {v[i]:.3e})")
        vols.append(v)
    return tuple(vols)


def _barycentric_gradients(disp):
    """Gradients of the barycentric coordinates, columns 0..p (ambient vectors)."""
    gram = disp.T @ disp
    rest = disp @ np.linalg.inv(gram)
    first = -rest.sum(axis=1, keepdims=True)
    return np.hstack([first, rest])


def _minor_det(g, rows, cols):
    m = g[np.ix_(rows, cols)]
    k = len(rows)
    if k == 0:
        return 1.0
    if k == 1:
        return m[0, 0]
    if k == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return float(np.linalg.det(m))


def _whitney_masses(complex_: SimplicialComplex, volumes) -> list:
    """Galerkin mass matrices of the elementary p-forms, all degrees at once.

    On a top simplex with barycentric functions l_a, the elementary form of
    the p-face (a_0 < ... < a_p) is
    p! * sum_k (-1)^k l_{a_k} dl_{a_0} ^ ... omit k ... ^ dl_{a_p};
    pairings reduce to integrals of l_a l_b times Gram determinants of the
    gradients.
    """
    n = complex_.dimension
    index = [
        {s: i for i, s in enumerate(complex_.simplices[p])} for p in range(n + 1)
    ]
    entries = [([], [], []) for _ in range(n + 1)]
    local_faces = {
        p: list(combinations(range(n + 1), p + 1)) for p in range(n + 1)
    }
    for t, top in enumerate(complex_.simplices[n]):
        disp = complex_.simplex_displacements(n, t)
        vol = volumes[n][t]
        grads = _barycentric_gradients(disp)
        g = grads.T @ grads
        moment = vol / ((n + 1) * (n + 2))
        for p in range(n + 1):
            scale = factorial(p) ** 2
            rows, cols, vals = entries[p]
            faces = local_faces[p]
            for fa in faces:
                ga = index[p][tuple(top[i] for i in fa)]
                for fb in faces:
                    gb = index[p][tuple(top[i] for i in fb)]
                    acc = 0.0
                    for k in range(p + 1):
                        ra = fa[:k] + fa[k + 1:]
                        sk = -1.0 if k % 2 else 1.0
                        for l in range(p + 1):
                            rb = fb[:l] + fb[l + 1:]
                            sl = -1.0 if l % 2 else 1.0
                            w = moment * (1.0 + (fa[k] == fb[l]))
                            acc += sk * sl * w * _minor_det(g, ra, rb)
                    rows.append(ga)
                    cols.append(gb)
                    vals.append(scale * acc)
    masses = []
    for p in range(n + 1):
        rows, cols, vals = entries[p]
        m = sp.csr_matrix(
            (vals, (rows, cols)),
            shape=(complex_.num_simplices(p),) * 2,
        )
        m = 0.5 * (m + m.T)
        masses.append(m.tocsr())
    return masses


def _circumcenter_barycentric(gram, sq_norms):
    """Barycentric coordinates of the circumcenter of a top simplex."""
    # solve 2 c . e_i = |e_i|^2 in the simplex frame, then convert
    rhs = 0.5 * sq_norms
    y = np.linalg.solve(gram, rhs)
    return np.concatenate([[1.0 - y.sum()], y])


def _lumped_masses(complex_: SimplicialComplex, volumes) -> list:
    """Diagonal circumcentric Hodge stars; needs a well-centered mesh."""
    n = complex_.dimension
    if n == 1:
        m0 = np.zeros(complex_.num_simplices(0))
        lengths = volumes[1]
        for i, (a, b) in enumerate(complex_.simplices[1]):
            m0[a] += 0.5 * lengths[i]
            m0[b] += 0.5 * lengths[i]
        return [sp.diags(m0).tocsr(), sp.diags(1.0 / lengths).tocsr()]
    if n != 2:
        raise SchemeError("lumped scheme is implemented for dimensions 1 and 2")

    edge_index = {s: i for i, s in enumerate(complex_.simplices[1])}
    m0 = np.zeros(complex_.num_simplices(0))
    dual_len = np.zeros(complex_.num_simplices(1))
    for t, tri in enumerate(complex_.simplices[2]):
        disp = complex_.simplex_displacements(2, t)
        gram = disp.T @ disp
        bary = _circumcenter_barycentric(gram, np.diag(gram).copy())
        if np.min(bary) <= _DEGENERACY_TOL:
            raise SchemeError(
                f"mesh is not well-centered: circumcenter of triangle "
                f"{tri} is not interior (barycentric {np.round(bary, 6)})")
        # local vertex positions relative to the first vertex
        pts = np.hstack([np.zeros((disp.shape[0], 1)), disp])
        center = pts @ bary
        for a, b in combinations(range(3), 2):
            e = edge_index[tuple(sorted((tri[a], tri[b])))]
            midpoint = 0.5 * (pts[:, a] + pts[:, b])
            half = 0.5 * np.linalg.norm(pts[:, a] - pts[:, b])
            dist = float(np.linalg.norm(center - midpoint))
            dual_len[e] += dist
            m0[tri[a]] += 0.5 * half * dist
            m0[tri[b]] += 0.5 * half * dist
    lengths = volumes[1]
    areas = volumes[2]
    return [
        sp.diags(m0).tocsr(),
        sp.diags(dual_len / lengths).tocsr(),
        sp.diags(1.0 / areas).tocsr(),
    ]


def build_metric(complex_: SimplicialComplex, scheme: str = "whitney") -> MetricStructure:
    """Equip a complex with SPD mass matrices for every degree.

    Args:
        scheme: "whitney" (Galerkin, any mesh) or "lumped" (diagonal
            circumcentric stars, well-centered meshes only).

    Raises:
        GeometryError: degenerate simplex or non-SPD mass matrix.
        SchemeError: lumped scheme on a mesh that is not well-centered.
    """
    volumes = _all_volumes(complex_)
    if scheme == "whitney":
        masses = _whitney_masses(complex_, volumes)
    elif scheme == "lumped":
        masses = _lumped_masses(complex_, volumes)
    else:
        raise ParameterError(f"unknown metric scheme {scheme!r}")
    metric = MetricStructure(
        complex=complex_, scheme=scheme, mass=tuple(masses), volumes=volumes)
    for p in range(complex_.dimension + 1):
        metric.factor(p)  # forces the SPD check via Cholesky
    return metric


def _match(metric: MetricStructure, x: Cochain, y: Cochain):
    if x.degree != y.degree:
        raise ShapeError(f"degree mismatch: {x.degree} vs {y.degree}")
    if x.complex_id != metric.complex.complex_id or y.complex_id != x.complex_id:
        raise ShapeError("cochain does not belong to this metric's complex")


def inner(metric: MetricStructure, x: Cochain, y: Cochain) -> float:
    """L2 pairing <x, y> = x^T M_p y."""
    _match(metric, x, y)
    return float(x.values @ (metric.mass_matrix(x.degree) @ y.values))


def l2_norm(metric: MetricStructure, x: Cochain) -> float:
    return float(np.sqrt(max(inner(metric, x, x), 0.0)))


def codifferential_apply(metric: MetricStructure, p: int, values: np.ndarray) -> np.ndarray:
    """Apply delta_p = M_{p-1}^{-1} d_{p-1}^T M_p to degree-p values."""
    complex_ = metric.complex
    if not 0 <= p <= complex_.dimension:
        raise DegreeError(f"degree {p} outside 0..{complex_.dimension}")
    if p == 0:
        return np.zeros((0,) + values.shape[1:])
    d = complex_.coboundary_matrix(p - 1)
    return metric.factor(p - 1).solve(d.T @ (metric.mass_matrix(p) @ values))


def codifferential(metric: MetricStructure, p: int) -> LinearOperator:
    """delta_p as a LinearOperator; the zero map to the empty degree for p=0."""
    n_in = metric.complex.num_simplices(p)
    n_out = 0 if p == 0 else metric.complex.num_simplices(p - 1)
    return LinearOperator(
        (n_out, n_in),
        matvec=lambda x: codifferential_apply(metric, p, x),
        dtype=np.float64,
    )


def laplacian_apply(metric: MetricStructure, p: int, values: np.ndarray) -> np.ndarray:
    """Apply Delta_p = delta_{p+1} d_p + d_{p-1} delta_p."""
    complex_ = metric.complex
    complex_._check_degree(p)
    out = np.zeros_like(values, dtype=np.float64)
    if p < complex_.dimension:
        d = complex_.coboundary_matrix(p)
        out += metric.factor(p).solve(d.T @ (metric.mass_matrix(p + 1) @ (d @ values)))
    if p > 0:
        d = complex_.coboundary_matrix(p - 1)
        out += d @ codifferential_apply(metric, p, values)
    return out


def laplacian(metric: MetricStructure, p: int) -> LinearOperator:
    """Delta_p as a LinearOperator (self-adjoint in the M_p inner product)."""
    n = metric.complex.num_simplices(p)
    return LinearOperator(
        (n, n), matvec=lambda x: laplacian_apply(metric, p, x), dtype=np.float64)


def stiffness_pair(metric: MetricStructure, p: int):
    """Dense symmetric A_p = M_p Delta_p together with sparse M_p.

    The pair (A_p, M_p) is the generalized-eigenproblem form of the Hodge
    Laplacian; A_p is PSD with kernel equal to the harmonic space.
    """
    complex_ = metric.complex
    complex_._check_degree(p)
    n = complex_.num_simplices(p)
    a = np.zeros((n, n))
    if p < complex_.dimension:
        d = complex_.coboundary_matrix(p)
        a += (d.T @ metric.mass_matrix(p + 1) @ d).toarray()
    if p > 0:
        d = complex_.coboundary_matrix(p - 1)
        w = (d.T @ metric.mass_matrix(p)).toarray()  # (n_{p-1}, n_p)
        a += w.T @ metric.factor(p - 1).solve(w)
    a = 0.5 * (a + a.T)
    return a, metric.mass_matrix(p)
