"""Binary words and the dyadic odometer (adding machine).

A word ``a = a_0 a_1 ... a_{t-1}`` is stored as the integer
``sum(a_k * 2**k)`` together with its length, so digit 0 is the least
significant bit.  Adding 1 with carry from left to right is then ordinary
integer addition modulo ``2**t``.  Words render with digit 0 leftmost.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_LENGTH = 32


@dataclass(frozen=True, order=True)
class Word:
    length: int
    value: int

    def __post_init__(self):
        if not 0 <= self.length <= MAX_LENGTH:
            raise ValueError(f"word length {self.length} outside [0, {MAX_LENGTH}]")
        if not 0 <= self.value < (1 << self.length):
            raise ValueError(f"value {self.value} does not fit in {self.length} digits")

    @classmethod
    def from_str(cls, s: str) -> "Word":
        if any(c not in "01" for c in s):
            raise ValueError(f"not a binary word: {s!r}")
        value = 0
        for k, c in enumerate(s):
            if c == "1":
                value |= 1 << k
        return cls(len(s), value)

    @classmethod
    def empty(cls) -> "Word":
        return cls(0, 0)

    @classmethod
    def zeros(cls, t: int) -> "Word":
        return cls(t, 0)

    @classmethod
    def ones(cls, t: int) -> "Word":
        return cls(t, (1 << t) - 1)

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple((self.value >> k) & 1 for k in range(self.length))

    @property
    def is_all_ones(self) -> bool:
        return self.value == (1 << self.length) - 1

    def __str__(self) -> str:
        return "".join(str(d) for d in self.digits)

    def __len__(self) -> int:
        return self.length

    def __add__(self, n: int) -> "Word":
        return word_add(self, n)

    def __sub__(self, n: int) -> "Word":
        return word_add(self, -n)

    def extend(self, digit: int) -> "Word":
        """The word ``a·digit`` of length ``t + 1``."""
        if digit not in (0, 1):
            raise ValueError("digit must be 0 or 1")
        return Word(self.length + 1, self.value | (digit << self.length))


def word_add(a: Word, n: int) -> Word:
    """Return ``a + n`` in the cyclic group of words of length ``|a|``.

    Negative ``n`` is allowed.  The carry out of the last digit is dropped.
    """
    if a.length == 0:
        return a
    return Word(a.length, (a.value + n) % (1 << a.length))


def word_prefix(a: Word, s: int) -> Word:
    if not 0 <= s <= a.length:
        raise ValueError(f"prefix length {s} outside [0, {a.length}]")
    return Word(s, a.value & ((1 << s) - 1))


def word_in_cylinder(b: Word, a: Word) -> bool:
    """True iff ``b`` starts with ``a``."""
    return a.length <= b.length and word_prefix(b, a.length) == a


def all_words(t: int) -> list[Word]:
    """All words of length ``t``, ordered by integer value (i.e. ``0^t + i``)."""
    return [Word(t, v) for v in range(1 << t)]
