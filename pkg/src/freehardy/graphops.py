"""Truncated graph spaces of right multiplication operators.

The graph of right multiplication by a symbol f, cut at degree N, is spanned
by the columns p ⊕ p*f for basis words p of length <= N, with the bottom
components stored through degree N + m for a window m (deg f for polynomial
symbols, an expansion margin for rational ones).  Left creation operators
then map the degree-(N-1) graph into the degree-N graph exactly, which makes
the wandering subspace a clean numerical complement.

The regularized solve (I + M*M) g = h, with M the truncated multiplication
matrix, yields the minimizer of ||h - g||^2 + ||g*f||^2; feeding it h = 1
produces the canonical inner-outer pair of the symbol.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve, cholesky, null_space, qr, solve_triangular
from scipy.sparse.linalg import LinearOperator, cg

from .series import (
    FreeSeries,
    SeriesColumn,
    apply_creation_word,
    from_dense,
    inner_product,
    multiply,
    solve_left,
    to_dense,
)
from .words import Word, count_up_to, rank, words_up_to

RATIONAL_EXPANSION_MARGIN = 4
CG_DIMENSION_LIMIT = 5000


class MultiplicationOperator:
    """Right multiplication by a polynomial or rational symbol.

    Rational symbols are pairs (den, num) with den having invertible constant
    term, acting pointwise as den(Z)^{-1} num(Z); the series expansion of the
    symbol is computed on demand by series division.  Only right
    multiplication is represented; left multiplication is obtained by
    conjugating with the transpose unitary.
    """

    side = "right"

    def __init__(self, d, polynomial=None, denominator=None, numerator=None):
        rational = denominator is not None or numerator is not None
        if (polynomial is None) == (not rational):
            raise ValueError("give either a polynomial or a (denominator, numerator) pair")
        if rational:
            if denominator is None or numerator is None:
                raise ValueError("rational symbols need both denominator and numerator")
            if denominator.d != d or numerator.d != d:
                raise ValueError("alphabet size mismatch in rational symbol")
            if denominator.coefficient(()) == 0:
                raise ValueError("non-invertible constant term in denominator")
        elif polynomial.d != d:
            raise ValueError("alphabet size mismatch in polynomial symbol")
        self.d = d
        self.polynomial = polynomial
        self.denominator = denominator
        self.numerator = numerator

    @classmethod
    def from_polynomial(cls, f: FreeSeries):
        return cls(f.d, polynomial=f)

    @classmethod
    def from_rational(cls, denominator: FreeSeries, numerator: FreeSeries):
        return cls(denominator.d, denominator=denominator, numerator=numerator)

    @property
    def is_rational(self) -> bool:
        return self.polynomial is None

    def degree_window(self) -> int:
        """Bottom-degree margin of the truncated graph."""
        if self.is_rational:
            return self.numerator.degree() + RATIONAL_EXPANSION_MARGIN
        return self.polynomial.degree()

    def expanded_symbol(self, degree: int) -> FreeSeries:
        if self.is_rational:
            return solve_left(self.denominator, self.numerator, degree)
        return self.polynomial.truncate(degree)

    def evaluate_at(self, Z) -> np.ndarray:
        """Pointwise value of the symbol (den(Z)^{-1} num(Z) when rational)."""
        from .nceval import evaluate

        if self.is_rational:
            return np.linalg.solve(
                evaluate(self.denominator, Z), evaluate(self.numerator, Z)
            )
        return evaluate(self.polynomial, Z)

    def __repr__(self):
        kind = "rational" if self.is_rational else "polynomial"
        return f"MultiplicationOperator(d={self.d}, {kind})"


@dataclass
class InnerOuterPair:
    """Normalized symbols (a, b) with [a; b] approximately inner and a outer.

    `normalizer` is the norm of the un-normalized wandering vector; the pair
    encodes the symbol as a(Z)^{-1} b(Z) through the stated degree.
    """

    a: FreeSeries
    b: FreeSeries
    normalizer: float
    degree: int
    diagnostics: dict = field(default_factory=dict)

    def column(self) -> SeriesColumn:
        return SeriesColumn(self.a, self.b)


@dataclass
class WanderingSpace:
    dim: int
    basis: list
    sigmas: list
    degree: int


@dataclass
class GraphBasis:
    """Orthonormal basis of a truncated graph space."""

    degree: int
    window: int
    columns: list

    def __len__(self):
        return len(self.columns)

    def orthonormality_residual(self) -> float:
        from .series import column_inner_product

        worst = 0.0
        for i, x in enumerate(self.columns):
            for j, y in enumerate(self.columns):
                target = 1.0 if i == j else 0.0
                worst = max(worst, abs(column_inner_product(x, y) - target))
        return worst


@dataclass
class OuterDiagnostics:
    """Necessary-condition report for outerness of a multiplier symbol.

    Outerness (dense range) is not decidable from finitely many coefficients,
    so only diagnostics are reported: the constant term, the smallest singular
    value of the symbol over the sample points, and the distance from the
    vacuum vector to the truncated range of right multiplication (a proxy for
    range density; it tends to 0 when 1 lies in the range closure).
    """

    constant_term: complex
    min_singular_at_points: float
    range_distance: float


def right_mult_matrix(T: MultiplicationOperator, degree: int, bottom_degree=None):
    """Sparse matrix of p -> p*f from degree <= N into degree <= N + window.

    Columns follow the graded word order; for a nonzero symbol the matrix has
    full column rank (right multiplication is injective).
    """
    window = T.degree_window()
    bottom = degree + window if bottom_degree is None else bottom_degree
    symbol = T.expanded_symbol(bottom)
    rows, cols, vals = [], [], []
    for col, beta in enumerate(words_up_to(T.d, degree)):
        for w, c in symbol.coeffs.items():
            if len(beta) + len(w) <= bottom:
                rows.append(rank(beta.concat(w)))
                cols.append(col)
                vals.append(c)
    shape = (count_up_to(T.d, bottom), count_up_to(T.d, degree))
    return sp.csr_matrix(
        (np.array(vals, dtype=complex), (rows, cols)), shape=shape
    )


def _graph_gram(M) -> np.ndarray:
    G = (M.conj().T @ M).toarray()
    G[np.diag_indices_from(G)] += 1.0
    return G


def _normal_solve(M, rhs):
    """Solve (I + M*M) x = rhs; Cholesky at desk scale, CG beyond."""
    dim = M.shape[1]
    if dim > CG_DIMENSION_LIMIT:
        op = LinearOperator(
            (dim, dim),
            matvec=lambda x: x + M.conj().T @ (M @ x),
            dtype=complex,
        )
        x, info = cg(op, rhs, rtol=1e-13, atol=0.0, maxiter=10 * dim)
        if info != 0:
            raise RuntimeError(f"conjugate gradient did not converge (info={info})")
        return x, None
    G = _graph_gram(M)
    factor = cho_factor(G, lower=True)
    return cho_solve(factor, rhs), G


def vn_solve(T: MultiplicationOperator, h: FreeSeries, degree: int) -> FreeSeries:
    """Regularized minimizer of ||h - g||^2 + ||g*f||^2 over deg g <= N.

    The unique solution of the normal equations (I + M*M) g = h; it always
    satisfies ||g|| <= ||h||.
    """
    if h.d != T.d:
        raise ValueError(f"alphabet size mismatch: {h.d} != {T.d}")
    if h.degree() > degree:
        raise ValueError(f"deg h = {h.degree()} exceeds truncation degree {degree}")
    M = right_mult_matrix(T, degree)
    x, _ = _normal_solve(M, to_dense(h, degree))
    return from_dense(x, T.d, degree)


def inner_outer(T: MultiplicationOperator, degree: int) -> InnerOuterPair:
    """Canonical inner-outer pair of the symbol at truncation degree N.

    g solves (I + M*M) g = 1; the normalizer is sqrt(<1, g>), a = g and
    b = g*f rescaled by it, with the phase fixed so the constant term of a is
    positive.  Diagnostics report the wandering-orthogonality defect of the
    column, the unit-column-norm defect, and the normal-equation residual.
    """
    window = T.degree_window()
    bottom = degree + window
    M = right_mult_matrix(T, degree, bottom_degree=bottom)
    e0 = np.zeros(M.shape[1], dtype=complex)
    e0[0] = 1.0
    x, _ = _normal_solve(M, e0)
    normal_residual = float(np.linalg.norm(x + M.conj().T @ (M @ x) - e0))

    nu_sq = x[0]
    if not nu_sq.real > 0:
        raise RuntimeError("vacuum component of the regularized solve is not positive")
    nu = float(np.sqrt(nu_sq.real))

    a_vec = x / nu
    phase = a_vec[0] / abs(a_vec[0])
    a_vec = a_vec / phase
    b_vec = (M @ x) / (nu * phase)
    a = from_dense(a_vec, T.d, degree)
    b = from_dense(b_vec, T.d, bottom)

    theta = SeriesColumn(a, b)
    diagnostics = {
        "wandering": wandering_residual(theta, max(1, degree - window)),
        "columnNorm": abs(a.norm() ** 2 + b.norm() ** 2 - 1.0),
        "normalEq": normal_residual,
    }
    return InnerOuterPair(a=a, b=b, normalizer=nu, degree=degree, diagnostics=diagnostics)


def wandering_defect(theta: SeriesColumn, gamma: Word) -> complex:
    """Overlap <theta, (L^gamma ⊗ I_2) theta>; zero for every nonempty word
    exactly when theta is a wandering vector."""
    shifted_top = apply_creation_word(theta.top, gamma, side="left")
    shifted_bottom = apply_creation_word(theta.bottom, gamma, side="left")
    return inner_product(theta.top, shifted_top) + inner_product(
        theta.bottom, shifted_bottom
    )


def wandering_residual(theta: SeriesColumn, max_gamma_degree: int) -> float:
    """Largest wandering defect over nonempty words up to the given degree."""
    worst = 0.0
    for gamma in words_up_to(theta.d, max_gamma_degree):
        if len(gamma) == 0:
            continue
        worst = max(worst, abs(wandering_defect(theta, gamma)))
    return worst


def wandering_space(T: MultiplicationOperator, degree: int, tol: float = 1e-6):
    """Orthogonal complement of the shifted graph inside the degree-N graph.

    The creation operators send the graph column of a word beta to the column
    of k.beta, so the shifted subspace is spanned exactly by the columns of
    nonempty words; its coordinate Gram is I + M*M restricted off the vacuum
    column, which is >= I, so those columns never degenerate.  The projected
    complement is therefore computed from the vacuum-column Schur complement,
    and its nonzero singular value is reported against the rank threshold.
    """
    window = T.degree_window()
    if degree < 1 + window:
        raise ValueError(
            f"degree {degree} too small: need at least {1 + window} for this symbol"
        )
    M = right_mult_matrix(T, degree)
    if M.shape[1] > CG_DIMENSION_LIMIT:
        raise ValueError("truncation too large for the dense wandering computation")
    G = _graph_gram(M)
    sub_factor = cho_factor(G[1:, 1:], lower=True)
    xi = cho_solve(sub_factor, G[1:, 0])
    schur = float((G[0, 0] - np.vdot(G[1:, 0], xi)).real)

    L = cholesky(G, lower=True)
    e0 = np.zeros(G.shape[0], dtype=complex)
    e0[0] = 1.0
    t = solve_triangular(L, e0, lower=True)
    sigma = float(np.sqrt(max(schur, 0.0) * np.vdot(t, t).real))

    threshold = tol * max(1.0, sigma)
    sigmas = [sigma]
    basis = []
    if sigma >= threshold:
        coords = np.concatenate(([1.0 + 0j], -xi)) / np.sqrt(schur)
        top = from_dense(coords, T.d, degree)
        bottom = from_dense(M @ coords, T.d, degree + window)
        basis.append(SeriesColumn(top, bottom))
    return WanderingSpace(dim=len(basis), basis=basis, sigmas=sigmas, degree=degree)


def graph_basis(T: MultiplicationOperator, degree: int) -> GraphBasis:
    """Orthonormal basis of the truncated graph, materialized densely."""
    window = T.degree_window()
    bottom = degree + window
    if count_up_to(T.d, bottom) > 20_000:
        raise ValueError("truncation too large for a dense graph basis")
    M = right_mult_matrix(T, degree, bottom_degree=bottom)
    top_dim = M.shape[1]
    C = np.vstack([np.eye(top_dim, dtype=complex), M.toarray()])
    Q, _ = qr(C, mode="economic")
    columns = [
        SeriesColumn(
            from_dense(Q[:top_dim, j], T.d, degree),
            from_dense(Q[top_dim:, j], T.d, bottom),
        )
        for j in range(top_dim)
    ]
    return GraphBasis(degree=degree, window=window, columns=columns)


def outer_diagnostics(a: FreeSeries, degree: int, points) -> OuterDiagnostics:
    """Necessary-condition diagnostics for outerness of a polynomial symbol."""
    from .nceval import evaluate

    if a.is_zero():
        raise ValueError("zero multiplier has no outer diagnostics")
    T = MultiplicationOperator.from_polynomial(a)
    M = right_mult_matrix(T, degree)
    e0 = np.zeros(M.shape[0], dtype=complex)
    e0[0] = 1.0
    x, _ = _normal_solve_range(M, e0)
    range_distance = float(np.linalg.norm(M @ x - e0))
    min_singular = np.inf
    for Z in points:
        sing = np.linalg.svd(evaluate(a, Z), compute_uv=False)
        min_singular = min(min_singular, float(sing.min()) if sing.size else 0.0)
    return OuterDiagnostics(
        constant_term=a.coefficient(()),
        min_singular_at_points=min_singular,
        range_distance=range_distance,
    )


def _normal_solve_range(M, target):
    """Least-squares projection coefficients of `target` onto the columns of M."""
    G = (M.conj().T @ M).toarray()
    rhs = M.conj().T @ target
    factor = cho_factor(G, lower=True)
    return cho_solve(factor, rhs), G


def local_residuals(domain_columns: np.ndarray, d: int, degree: int) -> float:
    """Largest projection defect of backward shifts applied to the domain.

    `domain_columns` spans the truncated domain inside degree <= N.  For every
    unit vector of the domain with vanishing vacuum component (the part inside
    the range of the shifts), each deleted-letter image is projected back onto
    the domain; the defect is the largest projection residual.
    """
    A = np.asarray(domain_columns, dtype=complex)
    dim = count_up_to(d, degree)
    if A.shape[0] != dim:
        raise ValueError(f"domain columns must have {dim} rows, got {A.shape[0]}")
    if A.shape[1] == 0:
        return 0.0
    Qa, _ = qr(A, mode="economic")

    vacuum_row = A[0, :].reshape(1, -1)
    if np.linalg.norm(vacuum_row) == 0:
        inside = A
    else:
        kernel = null_space(vacuum_row)
        if kernel.shape[1] == 0:
            return 0.0
        inside = A @ kernel
    Qin, _ = qr(inside, mode="economic")

    sub_dim = count_up_to(d, degree - 1)
    shift_rows = [
        np.array([rank(Word(d, (k,) + w.letters)) for w in words_up_to(d, degree - 1)])
        for k in range(1, d + 1)
    ]
    worst = 0.0
    for j in range(Qin.shape[1]):
        w = Qin[:, j]
        for rows in shift_rows:
            u = np.zeros(dim, dtype=complex)
            u[:sub_dim] = w[rows]
            defect = u - Qa @ (Qa.conj().T @ u)
            worst = max(worst, float(np.linalg.norm(defect)))
    return worst


def is_local(T: MultiplicationOperator, degree: int, tol: float = 1e-8) -> bool:
    """Whether backward shifts keep the truncated domain inside itself.

    Polynomial symbols have full domain at truncation, hence are local.  For
    rational symbols the truncated domain is spanned by the right translates
    of the denominator.
    """
    if not T.is_rational:
        return True
    den = T.denominator
    top = degree - den.degree()
    if top < 0:
        raise ValueError(f"degree {degree} smaller than the denominator degree")
    dim = count_up_to(T.d, degree)
    cols = []
    for beta in words_up_to(T.d, top):
        shifted = multiply(FreeSeries.monomial(T.d, beta.letters), den, degree)
        cols.append(to_dense(shifted, degree))
    A = np.stack(cols, axis=1) if cols else np.zeros((dim, 0), dtype=complex)
    return local_residuals(A, T.d, degree) <= tol


def divergence_witness(
    denominator: FreeSeries,
    numerator: FreeSeries,
    witness: FreeSeries,
    max_degree: int,
    side: str = "left",
):
    """Partial norms of the product of an expanded rational symbol with a witness.

    With the symbol series on the left the truncated norms grow without bound
    for symbols outside the Fock space (each extra degree contributes at least
    one witness coefficient); with the witness on the left (side="right",
    i.e. the witness in the domain of right multiplication) they stay bounded.
    Returns (degree, partial norm) pairs from deg(witness) to max_degree.
    """
    if denominator.d != 2:
        raise ValueError("witness construction requires alphabet size 2")
    if witness.is_zero():
        raise ValueError("witness must be nonzero")
    expanded = solve_left(denominator, numerator, max_degree)
    if side == "left":
        product = multiply(expanded, witness, max_degree)
    elif side == "right":
        product = multiply(witness, expanded, max_degree)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    by_degree = np.zeros(max_degree + 1)
    for w, c in product.coeffs.items():
        by_degree[len(w)] += abs(c) ** 2
    cumulative = np.cumsum(by_degree)
    start = witness.degree()
    return [(n, float(np.sqrt(cumulative[n]))) for n in range(start, max_degree + 1)]
