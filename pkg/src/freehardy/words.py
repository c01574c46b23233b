"""Words of the free monoid on d letters, with a graded-lexicographic order.

Letters are 1-based integers in {1, ..., d}.  The canonical enumeration is
length-major, lexicographic within each length, with the empty word first;
degree truncation is then a prefix of the enumeration.
"""

from dataclasses import dataclass, field
from itertools import chain, product


@dataclass(frozen=True)
class Word:
    """A word over the alphabet {1, ..., d}; the empty tuple is the unit."""

    d: int
    letters: tuple = field(default=())

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"alphabet size must be positive, got {self.d}")
        letters = tuple(int(x) for x in self.letters)
        object.__setattr__(self, "letters", letters)
        for x in letters:
            if not 1 <= x <= self.d:
                raise ValueError(f"letter {x} outside alphabet {{1,...,{self.d}}}")

    def __len__(self):
        return len(self.letters)

    def concat(self, other: "Word") -> "Word":
        if self.d != other.d:
            raise ValueError(f"alphabet size mismatch: {self.d} != {other.d}")
        return Word(self.d, self.letters + other.letters)

    def transpose(self) -> "Word":
        """Reverse the letters (an involutive anti-homomorphism)."""
        return Word(self.d, self.letters[::-1])

    def strip_prefix(self, prefix: "Word"):
        """Return w with `prefix` removed from the front, or None."""
        k = len(prefix.letters)
        if self.letters[:k] == prefix.letters:
            return Word(self.d, self.letters[k:])
        return None

    def strip_suffix(self, suffix: "Word"):
        """Return w with `suffix` removed from the end, or None."""
        k = len(suffix.letters)
        if k == 0:
            return self
        if self.letters[-k:] == suffix.letters:
            return Word(self.d, self.letters[:-k])
        return None


def count_words(d: int, degree: int) -> int:
    """Number of words of exactly the given length."""
    return d**degree if degree >= 0 else 0


def count_up_to(d: int, degree: int) -> int:
    """Number of words of length <= degree (0 if degree < 0)."""
    if degree < 0:
        return 0
    if d == 1:
        return degree + 1
    return (d ** (degree + 1) - 1) // (d - 1)


def rank(w: Word) -> int:
    """Position of w in the graded-lexicographic enumeration."""
    idx = 0
    for x in w.letters:
        idx = idx * w.d + (x - 1)
    return count_up_to(w.d, len(w.letters) - 1) + idx


def unrank(i: int, d: int, max_degree: int | None = None) -> Word:
    """Inverse of rank.  Raises if i falls beyond degree `max_degree`."""
    if i < 0:
        raise ValueError(f"rank must be non-negative, got {i}")
    k = 0
    while i >= count_up_to(d, k):
        k += 1
    if max_degree is not None and k > max_degree:
        raise ValueError(f"rank {i} exceeds enumeration of degree <= {max_degree}")
    idx = i - count_up_to(d, k - 1)
    letters = []
    for _ in range(k):
        idx, rem = divmod(idx, d)
        letters.append(rem + 1)
    return Word(d, tuple(reversed(letters)))


def words_of_degree(d: int, degree: int):
    """Iterate words of exactly the given length, lexicographically."""
    return (Word(d, p) for p in product(range(1, d + 1), repeat=degree))


def words_up_to(d: int, degree: int):
    """Iterate all words of length <= degree in graded-lexicographic order."""
    return chain.from_iterable(words_of_degree(d, k) for k in range(degree + 1))
