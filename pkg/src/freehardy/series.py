"""Sparse free power series: Fock inner product, creation operators, products.

A series is a finitely supported map word -> complex coefficient.  All inner
products are conjugate linear in the first argument.  Coefficients are pruned
only when exactly zero, so equality of series is well defined; every numeric
comparison elsewhere carries an explicit tolerance.
"""

import math

import numpy as np

from .words import Word, count_up_to, rank, words_up_to


class FreeSeries:
    """Finitely supported element of the Fock space over d letters.

    `max_degree` is the truncation certificate: inexact operations (products,
    series division) set it to their degree cap, and no stored word may be
    longer.  Equality compares coefficient maps only.
    """

    __slots__ = ("d", "coeffs", "max_degree")

    def __init__(self, d, coeffs=None, max_degree=None):
        if d < 1:
            raise ValueError(f"alphabet size must be positive, got {d}")
        clean = {}
        stored_degree = 0
        for key, val in (coeffs or {}).items():
            word = key if isinstance(key, Word) else Word(d, tuple(key))
            if word.d != d:
                raise ValueError(f"word over alphabet {word.d} in series over {d}")
            val = complex(val)
            if val != 0:
                clean[word] = val
                stored_degree = max(stored_degree, len(word))
        if max_degree is None:
            max_degree = stored_degree
        if stored_degree > max_degree:
            raise ValueError(
                f"stored degree {stored_degree} exceeds max_degree {max_degree}"
            )
        self.d = d
        self.coeffs = clean
        self.max_degree = int(max_degree)

    @classmethod
    def zero(cls, d):
        return cls(d)

    @classmethod
    def unit(cls, d):
        return cls(d, {Word(d): 1.0})

    @classmethod
    def monomial(cls, d, letters, coeff=1.0):
        return cls(d, {Word(d, tuple(letters)): coeff})

    def coefficient(self, key) -> complex:
        word = key if isinstance(key, Word) else Word(self.d, tuple(key))
        return self.coeffs.get(word, 0j)

    def terms(self):
        """(word, coefficient) pairs in graded-lexicographic order."""
        return sorted(self.coeffs.items(), key=lambda kv: rank(kv[0]))

    def degree(self) -> int:
        """Largest stored word length (0 for the zero series)."""
        return max((len(w) for w in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.coeffs.values()))

    def truncate(self, degree: int) -> "FreeSeries":
        kept = {w: c for w, c in self.coeffs.items() if len(w) <= degree}
        return FreeSeries(self.d, kept, max_degree=min(self.max_degree, degree))

    def transpose(self) -> "FreeSeries":
        """Apply the transpose unitary e_w -> e_{w reversed}."""
        return FreeSeries(
            self.d,
            {w.transpose(): c for w, c in self.coeffs.items()},
            max_degree=self.max_degree,
        )

    def _require_same_alphabet(self, other):
        if not isinstance(other, FreeSeries):
            raise TypeError(f"expected FreeSeries, got {type(other).__name__}")
        if self.d != other.d:
            raise ValueError(f"alphabet size mismatch: {self.d} != {other.d}")

    def __add__(self, other):
        self._require_same_alphabet(other)
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0j) + c
        return FreeSeries(self.d, out, max(self.max_degree, other.max_degree))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return FreeSeries(
            self.d, {w: -c for w, c in self.coeffs.items()}, self.max_degree
        )

    def __mul__(self, scalar):
        if isinstance(scalar, FreeSeries):
            raise TypeError("series products need a degree cap; use multiply(f, g, N)")
        return FreeSeries(
            self.d, {w: c * scalar for w, c in self.coeffs.items()}, self.max_degree
        )

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __eq__(self, other):
        if not isinstance(other, FreeSeries):
            return NotImplemented
        return self.d == other.d and self.coeffs == other.coeffs

    def __repr__(self):
        parts = [f"{c:.6g}*e{''.join(map(str, w.letters)) or '0'}" for w, c in self.terms()]
        body = " + ".join(parts[:6]) + (" + ..." if len(parts) > 6 else "")
        return f"FreeSeries(d={self.d}, {body or '0'})"


def inner_product(f: FreeSeries, g: FreeSeries) -> complex:
    """Fock inner product, conjugate linear in the first argument."""
    f._require_same_alphabet(g)
    if len(f.coeffs) > len(g.coeffs):
        return sum(np.conj(f.coeffs.get(w, 0j)) * c for w, c in g.coeffs.items())
    return sum(np.conj(c) * g.coeffs.get(w, 0j) for w, c in f.coeffs.items())


def apply_creation(f: FreeSeries, k: int, side: str = "left") -> FreeSeries:
    """Tensor by the k-th basis letter on the given side (an isometry)."""
    _check_letter(f.d, k)
    if side == "left":
        out = {Word(f.d, (k,) + w.letters): c for w, c in f.coeffs.items()}
    elif side == "right":
        out = {Word(f.d, w.letters + (k,)): c for w, c in f.coeffs.items()}
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return FreeSeries(f.d, out, f.max_degree + 1)


def apply_creation_adjoint(f: FreeSeries, k: int, side: str = "left") -> FreeSeries:
    """Delete a leading (left) or trailing (right) letter k."""
    _check_letter(f.d, k)
    out = {}
    for w, c in f.coeffs.items():
        if not w.letters:
            continue
        if side == "left" and w.letters[0] == k:
            out[Word(f.d, w.letters[1:])] = c
        elif side == "right" and w.letters[-1] == k:
            out[Word(f.d, w.letters[:-1])] = c
    return FreeSeries(f.d, out, max(f.max_degree - 1, 0))


def apply_creation_word(f: FreeSeries, word: Word, side: str = "left") -> FreeSeries:
    """Apply the product of creation operators indexed by `word`.

    On the left this prepends the word; on the right the letters are applied
    in operator order, so the reversed word is appended.
    """
    if word.d != f.d:
        raise ValueError(f"alphabet size mismatch: {word.d} != {f.d}")
    if side == "left":
        out = {Word(f.d, word.letters + w.letters): c for w, c in f.coeffs.items()}
    elif side == "right":
        rev = word.letters[::-1]
        out = {Word(f.d, w.letters + rev): c for w, c in f.coeffs.items()}
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return FreeSeries(f.d, out, f.max_degree + len(word))


def multiply(f: FreeSeries, g: FreeSeries, degree_cap: int) -> FreeSeries:
    """Concatenation product truncated to the degree cap.

    Coefficient rule: (fg)_w = sum of f_u * g_v over splittings w = uv.  All
    coefficients up to the cap are exact; higher ones are dropped.
    """
    f._require_same_alphabet(g)
    if degree_cap < 0:
        raise ValueError("degree cap must be non-negative")
    out = {}
    for wf, cf in f.coeffs.items():
        if len(wf) > degree_cap:
            continue
        for wg, cg in g.coeffs.items():
            if len(wf) + len(wg) > degree_cap:
                continue
            key = Word(f.d, wf.letters + wg.letters)
            out[key] = out.get(key, 0j) + cf * cg
    return FreeSeries(f.d, out, degree_cap)


def solve_left(a: FreeSeries, b: FreeSeries, degree_cap: int) -> FreeSeries:
    """Solve a * x = b for x by degree recursion, up to the degree cap.

    This expands a(Z)^{-1} b(Z) as a power series; it requires an invertible
    constant term.  multiply(a, x, degree_cap) reproduces b exactly through
    the cap.
    """
    a._require_same_alphabet(b)
    a0 = a.coefficient(())
    if a0 == 0:
        raise ValueError("non-invertible constant term")
    a_rest = [(w, c) for w, c in a.coeffs.items() if len(w) >= 1]
    x: dict[Word, complex] = {}
    # Candidate support: words of b plus left extensions of solved words by
    # words of a; processed by increasing degree so suffixes are ready.
    pending: dict[int, set] = {}
    for w in b.coeffs:
        if len(w) <= degree_cap:
            pending.setdefault(len(w), set()).add(w)
    for deg in range(degree_cap + 1):
        for gamma in sorted(pending.get(deg, ()), key=rank):
            val = b.coefficient(gamma)
            for wa, ca in a_rest:
                beta = gamma.strip_prefix(wa)
                if beta is not None and beta in x:
                    val -= ca * x[beta]
            if val != 0:
                x[gamma] = val / a0
                for wa, _ in a_rest:
                    ext = len(wa) + deg
                    if ext <= degree_cap:
                        pending.setdefault(ext, set()).add(
                            Word(a.d, wa.letters + gamma.letters)
                        )
    return FreeSeries(a.d, x, degree_cap)


def transpose_unitary(f: FreeSeries) -> FreeSeries:
    """The unitary sending e_w to e_{w reversed}; swaps left and right shifts."""
    return f.transpose()


def to_dense(f: FreeSeries, degree: int) -> np.ndarray:
    """Coefficient vector over the graded basis of words of length <= degree."""
    if f.degree() > degree:
        raise ValueError(f"series has degree {f.degree()} > requested {degree}")
    vec = np.zeros(count_up_to(f.d, degree), dtype=complex)
    for w, c in f.coeffs.items():
        vec[rank(w)] = c
    return vec


def from_dense(vec, d: int, max_degree: int) -> FreeSeries:
    """Inverse of to_dense; exact zeros are pruned."""
    vec = np.asarray(vec)
    expected = count_up_to(d, max_degree)
    if vec.shape != (expected,):
        raise ValueError(f"expected vector of length {expected}, got {vec.shape}")
    coeffs = {w: vec[i] for i, w in enumerate(words_up_to(d, max_degree)) if vec[i] != 0}
    return FreeSeries(d, coeffs, max_degree)


class SeriesColumn:
    """Two-component column of series over the same alphabet."""

    __slots__ = ("top", "bottom")

    def __init__(self, top: FreeSeries, bottom: FreeSeries):
        top._require_same_alphabet(bottom)
        self.top = top
        self.bottom = bottom

    @property
    def d(self):
        return self.top.d

    def norm(self) -> float:
        return math.sqrt(self.top.norm() ** 2 + self.bottom.norm() ** 2)

    def __eq__(self, other):
        if not isinstance(other, SeriesColumn):
            return NotImplemented
        return self.top == other.top and self.bottom == other.bottom

    def __repr__(self):
        return f"SeriesColumn(top={self.top!r}, bottom={self.bottom!r})"


def column_inner_product(x: SeriesColumn, y: SeriesColumn) -> complex:
    return inner_product(x.top, y.top) + inner_product(x.bottom, y.bottom)


def _check_letter(d, k):
    if not 1 <= k <= d:
        raise ValueError(f"letter {k} outside alphabet {{1,...,{d}}}")
