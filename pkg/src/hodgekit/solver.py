"""Harmonic spaces, the Green operator, and the coexact primitive of d.

Per degree p the solver factors the generalized pair (A_p, M_p) with
A_p = M_p Delta_p once and reuses it:

* the harmonic space is detected from the smallest Betti+3 eigenpairs of the
  pair, with a hard cross-check of the count against the exact integer Betti
  number, then the basis is purified by shifted inverse iteration until the
  closedness/co-closedness residuals sit near roundoff (the raw eigenvectors
  alone are orders of magnitude too contaminated for the orthogonality
  contracts downstream);
* the Green operator solves the harmonic-shifted SPD system
  (A + (M H)(M H)^T) x = M (omega - P_H omega), which agrees with the
  constrained problem Delta x = omega - P_H omega, x perp H, in exact
  arithmetic, plus an iterative-refinement sweep to push the residual to the
  configured tolerance;
* the primitive of an exact p-form is delta G, the unique coexact choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .complexes import Cochain, cochain_zero
from .errors import (
    DegreeError,
    NotExactError,
    RankAmbiguityError,
    ShapeError,
    SolverError,
)
from .metric import MetricStructure, codifferential_apply, laplacian_apply, stiffness_pair

__all__ = ["HodgeSystem", "Decomposition", "ExactnessReport"]

_DENSE_EIG_LIMIT = 1200
_REFINE_SWEEPS = 3


@dataclass(frozen=True)
class Decomposition:
    """Orthogonal splitting omega = exact + coexact + harmonic.

    alpha is the coexact potential with d alpha = exact part (None in degree
    0); beta the exact copotential with delta beta = coexact part (None in
    top degree); residual_norm is the relative reconstruction defect.
    """

    exact: Cochain
    coexact: Cochain
    harmonic: Cochain
    alpha: Cochain | None
    beta: Cochain | None
    residual_norm: float


@dataclass(frozen=True)
class ExactnessReport:
    """Outcome of the exactness test with both residuals."""

    exact: bool
    closedness_residual: float
    harmonic_residual: float
    tol: float

    def __bool__(self):
        return self.exact


class _DegreeSolver:
    """Factored Hodge Laplacian of a single degree."""

    def __init__(self, system: "HodgeSystem", p: int):
        self.p = p
        metric = system.metric
        self.metric = metric
        self.mass = metric.mass_matrix(p)
        self.n = self.mass.shape[0]
        self.stiffness, _ = stiffness_pair(metric, p)

        rng = np.random.default_rng(0x5EED ^ p)
        self.lam_max = self._estimate_lam_max(rng)
        betti = metric.complex.betti_numbers[p]
        self.eigenvalues = self._smallest_eigenpairs(betti, rng)
        cutoff = system.rank_cutoff_factor * self.lam_max
        self._check_cutoff(cutoff, system.ambiguity_factor)
        dim_null = int(np.sum(self.eigenvalues < cutoff))
        if dim_null != betti:
            raise SolverError(
                f"degree {p}: numerical harmonic dimension {dim_null} "
                f"disagrees with Betti number {betti}")
        self.betti = betti
        self.first_positive = (
            float(self.eigenvalues[betti]) if betti < len(self.eigenvalues) else None)
        self.harmonics = self._refined_harmonics(system)
        mh = self.mass @ self.harmonics
        shifted = self.stiffness + mh @ mh.T
        try:
            self.cho_shift = sla.cho_factor(shifted)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"degree {p}: shifted Laplacian not SPD: {exc}")
        self._mass_harmonics = mh
        self.solver_tol = system.solver_tol

    # -- spectral detection -------------------------------------------------

    def _estimate_lam_max(self, rng) -> float:
        x = rng.standard_normal(self.n)
        factor = self.metric.factor(self.p)
        lam = 1.0
        for _ in range(40):
            y = factor.solve(self.stiffness @ x)
            norm = np.linalg.norm(y)
            if norm == 0.0:
                return 1.0
            x = y / norm
            lam = float(x @ (self.stiffness @ x)) / float(x @ (self.mass @ x))
        return max(lam * 1.05, np.finfo(float).tiny)

    def _smallest_eigenpairs(self, betti: int, rng):
        k = min(betti + 3, self.n)
        if self.n <= _DENSE_EIG_LIMIT:
            vals, vecs = sla.eigh(self.stiffness, self.mass.toarray())
            self._raw_vectors = vecs[:, :k]
            return vals[:k]
        shift = 1e-4 * self.lam_max
        op = sla.cho_factor(self.stiffness + shift * self.mass.toarray())
        opinv = spla.LinearOperator(
            (self.n, self.n), matvec=lambda x: sla.cho_solve(op, x))
        amat = spla.aslinearoperator(self.stiffness)
        vals, vecs = spla.eigsh(
            amat, k=k, M=spla.aslinearoperator(self.mass),
            sigma=-shift, which="LM", OPinv=opinv,
            v0=rng.standard_normal(self.n), tol=0, maxiter=10 * self.n)
        order = np.argsort(vals)
        self._raw_vectors = vecs[:, order]
        return vals[order]

    def _check_cutoff(self, cutoff: float, ambiguity: float):
        window = (self.eigenvalues >= cutoff / ambiguity) & (
            self.eigenvalues <= cutoff * ambiguity)
        if np.any(window):
            bad = self.eigenvalues[window]
            raise RankAmbiguityError(
                f"degree {self.p}: eigenvalue {bad[0]:.3e} lies within "
                f"{ambiguity:g}x of the rank cutoff {cutoff:.3e}; "
                f"a finer cutoff is required")

    def _m_orthonormalize(self, v):
        gram = v.T @ (self.mass @ v)
        try:
            chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            raise SolverError(
                f"degree {self.p}: harmonic candidates became dependent")
        return sla.solve_triangular(chol, v.T, lower=True).T

    def _refined_harmonics(self, system: "HodgeSystem"):
        if self.betti == 0:
            return np.zeros((self.n, 0))
        v = self._m_orthonormalize(self._raw_vectors[:, : self.betti])
        eps = 1e-2 * (self.first_positive or 1e-6 * self.lam_max)
        u0 = self.mass @ v
        refine = sla.cho_factor(self.stiffness + eps * (u0 @ u0.T))
        for _ in range(_REFINE_SWEEPS):
            v = sla.cho_solve(refine, self.mass @ v)
            v = self._m_orthonormalize(v)
        ritz = v.T @ (self.stiffness @ v)
        _, rot = np.linalg.eigh(0.5 * (ritz + ritz.T))
        v = self._m_orthonormalize(v @ rot)
        residual = float(np.sqrt(max(np.max(np.diag(v.T @ (self.stiffness @ v))), 0.0)))
        if residual > system.harmonic_residual_tol * max(1.0, self.lam_max):
            raise SolverError(
                f"degree {self.p}: harmonic basis residual {residual:.3e} "
                f"exceeds tolerance after refinement")
        del self._raw_vectors
        return v

    # -- solves ---------------------------------------------------------------

    def project_harmonic(self, values):
        if self.betti == 0:
            return np.zeros_like(values)
        coeffs = self.harmonics.T @ (self.mass @ values)
        return self.harmonics @ coeffs

    def green_values(self, values):
        rhs = values - self.project_harmonic(values)
        b = self.mass @ rhs
        x = sla.cho_solve(self.cho_shift, b)
        scale = max(float(np.linalg.norm(b)), np.finfo(float).tiny)
        for _ in range(3):
            r = b - self._shift_apply(x)
            if np.linalg.norm(r) <= self.solver_tol * scale:
                break
            x = x + sla.cho_solve(self.cho_shift, r)
        if self.betti:
            x = x - self.project_harmonic(x)
        return x, rhs

    def _shift_apply(self, x):
        y = self.stiffness @ x
        if self.betti:
            y = y + self._mass_harmonics @ (self._mass_harmonics.T @ x)
        return y


class HodgeSystem:
    """Factorized Hodge theory of a fixed metric complex.

    Immutable after construction (degree factorizations are cached on first
    use); all query methods are pure and safe to call concurrently.
    """

    def __init__(self, metric: MetricStructure, *, rank_cutoff_factor: float = 1e-9,
                 solver_tol: float = 1e-12, exactness_tol: float = 1e-8,
                 ambiguity_factor: float = 10.0,
                 harmonic_residual_tol: float = 1e-9):
        self.metric = metric
        self.complex = metric.complex
        self.rank_cutoff_factor = float(rank_cutoff_factor)
        self.solver_tol = float(solver_tol)
        self.exactness_tol = float(exactness_tol)
        self.ambiguity_factor = float(ambiguity_factor)
        self.harmonic_residual_tol = float(harmonic_residual_tol)
        for name, value in (("rank_cutoff_factor", rank_cutoff_factor),
                            ("solver_tol", solver_tol),
                            ("exactness_tol", exactness_tol)):
            if value <= 0:
                raise SolverError(f"{name} must be positive")
        self._degrees: dict[int, _DegreeSolver] = {}

    def _degree(self, p: int) -> _DegreeSolver:
        self.complex._check_degree(p)
        if p not in self._degrees:
            self._degrees[p] = _DegreeSolver(self, p)
        return self._degrees[p]

    def _own(self, omega: Cochain):
        if omega.complex_id != self.complex.complex_id:
            raise ShapeError("cochain does not belong to this system's complex")

    def degree_diagnostics(self, p: int) -> dict:
        """Spectral bookkeeping of one degree (eigenvalues, cutoff, Betti)."""
        deg = self._degree(p)
        return {
            "degree": p,
            "betti": deg.betti,
            "lambda_max_estimate": deg.lam_max,
            "rank_cutoff": self.rank_cutoff_factor * deg.lam_max,
            "smallest_eigenvalues": [float(v) for v in deg.eigenvalues],
            "first_positive_eigenvalue": deg.first_positive,
        }

    def harmonic_basis(self, p: int) -> list:
        """M-orthonormal basis of the harmonic p-forms; length equals Betti."""
        deg = self._degree(p)
        return [Cochain(self.complex, p, deg.harmonics[:, j].copy())
                for j in range(deg.betti)]

    def harmonic_projection(self, omega: Cochain) -> Cochain:
        self._own(omega)
        deg = self._degree(omega.degree)
        return omega.with_values(deg.project_harmonic(omega.values))

    def laplacian_apply(self, omega: Cochain) -> Cochain:
        self._own(omega)
        return omega.with_values(
            laplacian_apply(self.metric, omega.degree, omega.values))

    def green(self, omega: Cochain) -> Cochain:
        """Green operator: Delta x = omega - P_H omega with x perp harmonics."""
        self._own(omega)
        deg = self._degree(omega.degree)
        x, rhs = deg.green_values(omega.values)
        scale = self._norm_values(omega.degree, omega.values)
        if scale > 0:
            resid = laplacian_apply(self.metric, omega.degree, x) - rhs
            rel = self._norm_values(omega.degree, resid) / scale
            if rel > 1e-8:
                raise SolverError(
                    f"green solve did not converge: relative residual {rel:.3e}")
        return omega.with_values(x)

    def _norm_values(self, p: int, values) -> float:
        return float(np.sqrt(max(values @ (self.metric.mass_matrix(p) @ values), 0.0)))

    def decompose(self, omega: Cochain) -> Decomposition:
        """Split omega into exact + coexact + harmonic parts with potentials."""
        self._own(omega)
        p = omega.degree
        n = self.complex.dimension
        harmonic = self.harmonic_projection(omega)
        g = self.green(omega)
        if p > 0:
            alpha = Cochain(self.complex, p - 1,
                            codifferential_apply(self.metric, p, g.values))
            exact = Cochain(self.complex, p,
                            self.complex.coboundary_matrix(p - 1) @ alpha.values)
        else:
            alpha = None
            exact = cochain_zero(self.complex, 0)
        if p < n:
            beta = Cochain(self.complex, p + 1,
                           self.complex.coboundary_matrix(p) @ g.values)
            coexact = Cochain(self.complex, p,
                              codifferential_apply(self.metric, p + 1, beta.values))
        else:
            beta = None
            coexact = cochain_zero(self.complex, p)
        recon = exact.values + coexact.values + harmonic.values
        scale = self._norm_values(p, omega.values)
        residual = (self._norm_values(p, omega.values - recon) / scale
                    if scale > 0 else 0.0)
        return Decomposition(exact=exact, coexact=coexact, harmonic=harmonic,
                             alpha=alpha, beta=beta, residual_norm=residual)

    def is_exact(self, omega: Cochain, tol: float | None = None) -> ExactnessReport:
        """Exactness test: closed (d omega = 0) with no harmonic component."""
        self._own(omega)
        tol = self.exactness_tol if tol is None else float(tol)
        p = omega.degree
        scale = self._norm_values(p, omega.values)
        if scale == 0.0:
            return ExactnessReport(True, 0.0, 0.0, tol)
        if p < self.complex.dimension:
            d = self.complex.coboundary_matrix(p) @ omega.values
            closed = self._norm_values(p + 1, d) / scale
        else:
            closed = 0.0
        harm = self._norm_values(
            p, self._degree(p).project_harmonic(omega.values)) / scale
        return ExactnessReport(closed <= tol and harm <= tol, closed, harm, tol)

    def primitive(self, omega: Cochain) -> Cochain:
        """The coexact primitive alpha = delta G omega, with d alpha = omega.

        Raises NotExactError (citing the failing residual) unless omega passes
        the exactness test.
        """
        self._own(omega)
        p = omega.degree
        if p < 1:
            raise DegreeError("primitives exist for degrees >= 1")
        report = self.is_exact(omega)
        if not report:
            reasons = []
            if report.closedness_residual > report.tol:
                reasons.append(
                    f"d omega residual {report.closedness_residual:.3e}")
            if report.harmonic_residual > report.tol:
                reasons.append(
                    f"harmonic component {report.harmonic_residual:.3e}")
            raise NotExactError(
                "cochain is not exact (" + "; ".join(reasons) + f"; tol {report.tol:g})")
        g = self.green(omega)
        return Cochain(self.complex, p - 1,
                       codifferential_apply(self.metric, p, g.values))
