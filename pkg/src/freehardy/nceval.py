"""Evaluation of free series at matrix points, and the NC Szegő kernel.

Points are d-tuples of n x n matrices.  Evaluation of a finitely supported
series is defined at any point; the kernel constructions require a strict row
contraction.  The kernel map K(Z, W)[P] is computed in closed form from its
fixed-point identity K = P + sum_j Z_j K W_j*, either by one vectorized
linear solve or, above a size threshold, by the contractive fixed-point
iteration (whose partial sums are exactly the degree-truncated kernel sums).
"""

import math

import numpy as np
from scipy import linalg as sla

from .series import FreeSeries
from .words import Word, count_up_to, words_of_degree, words_up_to


class MatrixPoint:
    """A d-tuple of square complex matrices, one per letter."""

    __slots__ = ("d", "n", "mats", "_row_norm")

    def __init__(self, mats):
        arrays = tuple(np.array(m, dtype=complex) for m in mats)
        if not arrays:
            raise ValueError("a point needs at least one matrix")
        n = arrays[0].shape[0]
        for m in arrays:
            if m.shape != (n, n):
                raise ValueError(f"matrices must all be {n}x{n}, got {m.shape}")
        for m in arrays:
            m.flags.writeable = False
        self.d = len(arrays)
        self.n = n
        self.mats = arrays
        self._row_norm = None

    @property
    def row_norm(self) -> float:
        """Largest singular value of the row [Z_1 ... Z_d]."""
        if self._row_norm is None:
            row = np.hstack(self.mats)
            self._row_norm = float(np.linalg.norm(row, 2))
        return self._row_norm

    @property
    def in_open_ball(self) -> bool:
        return self.row_norm < 1.0

    def direct_sum(self, other: "MatrixPoint") -> "MatrixPoint":
        if self.d != other.d:
            raise ValueError(f"alphabet size mismatch: {self.d} != {other.d}")
        return MatrixPoint(
            [sla.block_diag(a, b) for a, b in zip(self.mats, other.mats)]
        )

    def __repr__(self):
        return f"MatrixPoint(d={self.d}, n={self.n}, row_norm={self.row_norm:.4g})"


def row_norm(Z: MatrixPoint) -> float:
    return Z.row_norm


def zero_point(d: int, n: int = 1) -> MatrixPoint:
    return MatrixPoint([np.zeros((n, n))] * d)


def evaluate(f: FreeSeries, Z: MatrixPoint) -> np.ndarray:
    """Sum of Z^w f_w over the support of f (Z^empty = identity).

    Finite sums are defined at every point; no row-norm restriction applies.
    """
    if f.d != Z.d:
        raise ValueError(f"alphabet size mismatch: {f.d} != {Z.d}")
    cache = {(): np.eye(Z.n, dtype=complex)}

    def word_matrix(letters):
        found = cache.get(letters)
        if found is None:
            found = word_matrix(letters[:-1]) @ Z.mats[letters[-1] - 1]
            cache[letters] = found
        return found

    acc = np.zeros((Z.n, Z.n), dtype=complex)
    for w, c in f.coeffs.items():
        acc += c * word_matrix(w.letters)
    return acc


def word_matrices(Z: MatrixPoint, degree: int) -> np.ndarray:
    """All products Z^w for |w| <= degree, stacked in graded-lex order."""
    levels = [np.eye(Z.n, dtype=complex)[None, :, :]]
    for _ in range(degree):
        prev = levels[-1]
        levels.append(
            np.concatenate([np.einsum("ab,wbc->wac", m, prev) for m in Z.mats])
        )
    return np.concatenate(levels)


def szego_apply(
    Z: MatrixPoint,
    W: MatrixPoint,
    P,
    method: str = "auto",
    size_limit: int = 64,
) -> np.ndarray:
    """Apply the NC Szegő kernel K(Z, W) to the matrix P.

    Solves (I - sum_j conj(W_j) ⊗ Z_j) vec(K) = vec(P) with column-major vec,
    or runs the fixed-point iteration K <- P + sum_j Z_j K W_j* when the
    vectorized system would exceed `size_limit` (or when method="iterative").
    Both points must lie strictly inside the NC unit ball.
    """
    if Z.d != W.d:
        raise ValueError(f"alphabet size mismatch: {Z.d} != {W.d}")
    _require_in_ball(Z)
    _require_in_ball(W)
    P = np.array(P, dtype=complex)
    if P.shape != (Z.n, W.n):
        raise ValueError(f"P must be {Z.n}x{W.n}, got {P.shape}")
    if method == "auto":
        method = "direct" if Z.n * W.n <= size_limit else "iterative"
    if method == "direct":
        nm = Z.n * W.n
        A = np.eye(nm, dtype=complex)
        for Zj, Wj in zip(Z.mats, W.mats):
            A -= np.kron(Wj.conj(), Zj)
        K = np.linalg.solve(A, P.flatten(order="F")).reshape((Z.n, W.n), order="F")
        return K
    if method != "iterative":
        raise ValueError(f"method must be auto, direct or iterative, got {method!r}")
    rho = Z.row_norm * W.row_norm
    acc = P.copy()
    term = P
    for _ in range(500_000):
        term = sum(Zj @ term @ Wj.conj().T for Zj, Wj in zip(Z.mats, W.mats))
        acc += term
        if np.linalg.norm(term) * rho <= 1e-16 * max(1.0, np.linalg.norm(acc)) * (1 - rho):
            return acc
    raise RuntimeError("fixed-point iteration failed to converge")  # pragma: no cover


def szego_truncated(Z: MatrixPoint, W: MatrixPoint, P, degree: int) -> np.ndarray:
    """Partial kernel sum over words of length <= degree."""
    if Z.d != W.d:
        raise ValueError(f"alphabet size mismatch: {Z.d} != {W.d}")
    P = np.array(P, dtype=complex)
    acc = P.copy()
    term = P
    for _ in range(degree):
        term = sum(Zj @ term @ Wj.conj().T for Zj, Wj in zip(Z.mats, W.mats))
        acc += term
    return acc


def fixed_point_residual(Z: MatrixPoint, W: MatrixPoint, P, K) -> float:
    """Frobenius norm of K - P - sum_j Z_j K W_j*."""
    P = np.asarray(P, dtype=complex)
    K = np.asarray(K, dtype=complex)
    R = K - P - sum(Zj @ K @ Wj.conj().T for Zj, Wj in zip(Z.mats, W.mats))
    return float(np.linalg.norm(R))


class KernelVectorSpec:
    """Data (Z, y, v) of a kernel vector; Z must be a strict row contraction.

    The represented vector is invariant under y -> s*y, v -> conj(s)^{-1} v.
    """

    __slots__ = ("Z", "y", "v")

    def __init__(self, Z: MatrixPoint, y, v):
        y = np.array(y, dtype=complex).reshape(-1)
        v = np.array(v, dtype=complex).reshape(-1)
        if y.shape != (Z.n,) or v.shape != (Z.n,):
            raise ValueError(f"y and v must have length {Z.n}")
        _require_in_ball(Z)
        y.flags.writeable = False
        v.flags.writeable = False
        self.Z = Z
        self.y = y
        self.v = v

    def __repr__(self):
        return f"KernelVectorSpec(n={self.Z.n}, d={self.Z.d})"


def kernel_vector(spec: KernelVectorSpec, degree: int) -> FreeSeries:
    """Fock-space representative: coefficient at w is <Z^w v, y>, |w| <= degree."""
    Z, y, v = spec.Z, spec.y, spec.v
    coeffs = {}
    level = v[None, :]
    for k in range(degree + 1):
        if k > 0:
            level = np.concatenate([level @ m.T for m in Z.mats])
        vals = level.conj() @ y
        for i, w in enumerate(words_of_degree(Z.d, k)):
            if vals[i] != 0:
                coeffs[w] = vals[i]
    return FreeSeries(Z.d, coeffs, degree)


def multiplier_adjoint(spec: KernelVectorSpec, g: FreeSeries, side: str = "left"):
    """Adjoint action of a multiplier with symbol g on a kernel vector.

    Left multipliers send y to g(Z)* y; right multipliers send v to g(Z) v.
    """
    if g.d != spec.Z.d:
        raise ValueError(f"alphabet size mismatch: {g.d} != {spec.Z.d}")
    gz = evaluate(g, spec.Z)
    if side == "left":
        return KernelVectorSpec(spec.Z, gz.conj().T @ spec.y, spec.v)
    if side == "right":
        return KernelVectorSpec(spec.Z, spec.y, gz @ spec.v)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def word_point(word: Word, r: float = 0.9) -> KernelVectorSpec:
    """Kernel-vector data reproducing the basis vector of a single word.

    Uses the compressions of the left shifts to words of length <= |word|,
    scaled by r; the point is jointly nilpotent, so the kernel sum is finite
    and exact for any truncation degree >= |word|.
    """
    if not 0 < r < 1:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    d, m = word.d, len(word)
    dim = count_up_to(d, m)
    index = {w.letters: i for i, w in enumerate(words_up_to(d, m))}
    mats = []
    for k in range(1, d + 1):
        lam = np.zeros((dim, dim), dtype=complex)
        for w, col in index.items():
            if len(w) < m:
                lam[index[(k,) + w], col] = 1.0
        mats.append(r * lam)
    y = np.zeros(dim, dtype=complex)
    y[index[word.letters]] = r ** (-m)
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return KernelVectorSpec(MatrixPoint(mats), y, v)


def poly_point(p: FreeSeries, r: float = 0.9) -> KernelVectorSpec:
    """Kernel-vector data reproducing a polynomial exactly.

    One nilpotent block per supported word w: on C^{|w|+1} the k-th matrix is
    r times the upper shift with a unit in column i+1 exactly when the i-th
    letter of w is k; y and v load the word's coefficient at the ends of the
    chain.  The direct sum over the support reproduces p for any degree
    >= deg p.
    """
    if not 0 < r < 1:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    support = [w for w, _ in p.terms()]
    if not support:
        raise ValueError("empty direct sum: the zero polynomial has no point data")
    blocks = {k: [] for k in range(1, p.d + 1)}
    ys, vs = [], []
    for w in support:
        c = p.coeffs[w]
        m = len(w)
        root = math.sqrt(abs(c))
        for k in range(1, p.d + 1):
            C = np.zeros((m + 1, m + 1), dtype=complex)
            for i, letter in enumerate(w.letters):
                if letter == k:
                    C[i, i + 1] = 1.0
            blocks[k].append(r * C)
        y_block = np.zeros(m + 1, dtype=complex)
        y_block[0] = (c / root) * r ** (-m)
        v_block = np.zeros(m + 1, dtype=complex)
        v_block[m] = root
        ys.append(y_block)
        vs.append(v_block)
    mats = [sla.block_diag(*blocks[k]) for k in range(1, p.d + 1)]
    return KernelVectorSpec(MatrixPoint(mats), np.concatenate(ys), np.concatenate(vs))


def tail_bound(f: FreeSeries, Z: MatrixPoint, degree: int) -> float:
    """Certified bound on the evaluation tail beyond the given degree.

    The row of all Z^w with |w| = k has norm at most row_norm(Z)^k, so the
    discarded tail of any series with coefficient l2-norm <= ||f|| is at most
    ||f|| r^{degree+1} / sqrt(1 - r^2).
    """
    r = Z.row_norm
    if r >= 1:
        raise ValueError(f"row norm {r} is not < 1")
    return f.norm() * r ** (degree + 1) / math.sqrt(1.0 - r * r)


def _require_in_ball(Z: MatrixPoint):
    if not Z.in_open_ball:
        raise ValueError(f"point outside open NC ball (row norm {Z.row_norm:.6g})")
