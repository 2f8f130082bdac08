"""Reduced words in free groups and signed letter substitutions.

Generators are lowercase letters ``a, b, c, ...``; the inverse of a letter is
its uppercase form.  A word is a Python string and the identity is ``""``.
The output order on letters is a < A < b < B < ...
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


def inv_letter(c: str) -> str:
    return c.swapcase()


def reduce(w: str) -> str:
    """Freely reduce ``w``."""
    out: list[str] = []
    for c in w:
        if out and out[-1] == c.swapcase():
            out.pop()
        else:
            out.append(c)
    return "".join(out)


def mul(*ws: str) -> str:
    """Product of reduced words (cancellation only happens at the junctions)."""
    out = ""
    for w in ws:
        k, n = 0, min(len(out), len(w))
        while k < n and out[-1 - k] == w[k].swapcase():
            k += 1
        out = out[:len(out) - k] + w[k:]
    return out


def inverse(w: str) -> str:
    return w[::-1].swapcase()


def is_reduced(w: str) -> bool:
    return all(a != b.swapcase() for a, b in zip(w, w[1:]))


def letters(m: int) -> list[str]:
    """The 2m letters of F_m in output order."""
    out = []
    for c in ALPHABET[:m]:
        out.extend([c, c.upper()])
    return out


def letter_key(c: str) -> tuple[int, int]:
    return (ALPHABET.index(c.lower()), 0 if c.islower() else 1)


def word_key(w: str) -> tuple:
    """Shortlex key using the letter order a < A < b < B < ..."""
    return (len(w), tuple(letter_key(c) for c in w))


def check_word(w: str, m: int) -> None:
    allowed = set(letters(m))
    if not isinstance(w, str) or any(c not in allowed for c in w):
        raise ValueError(f"{w!r} is not a word over {m} letters")
    if not is_reduced(w):
        raise ValueError(f"{w!r} is not freely reduced")


def lcp_len(u: str, v: str) -> int:
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return k


def cyclic_reduce(w: str) -> tuple[str, str]:
    """Write a reduced word as ``c v c⁻¹`` with ``v`` cyclically reduced; return (c, v)."""
    w = reduce(w)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == w[j - 1].swapcase():
        i += 1
        j -= 1
    return w[:i], w[i:j]


def cyclic_length(w: str) -> int:
    return len(cyclic_reduce(w)[1])


def words_up_to(m: int, r: int) -> Iterator[str]:
    """All reduced words of length at most ``r``, in shortlex order."""
    layer = [""]
    yield ""
    for _ in range(r):
        nxt = []
        for w in layer:
            for c in letters(m):
                if not w or w[-1] != c.swapcase():
                    nxt.append(w + c)
        yield from nxt
        layer = nxt


def sphere_size(m: int, r: int) -> int:
    if r == 0:
        return 1
    if m == 1:
        return 2
    return 2 * m * (2 * m - 1) ** (r - 1)


@dataclass(frozen=True)
class Substitution:
    """A signed permutation of the letters, extended to an automorphism of F_m.

    ``images`` lists the image of each generator ``a, b, ...`` in order; the
    image of an inverse letter is the inverse of the image.
    """

    images: tuple[str, ...]

    @classmethod
    def identity(cls, m: int) -> "Substitution":
        return cls(tuple(ALPHABET[:m]))

    @classmethod
    def parse(cls, text: str, m: int) -> "Substitution":
        """Parse ``"a->a,b->B"``; unmentioned generators are fixed."""
        images = dict(zip(ALPHABET[:m], ALPHABET[:m]))
        if text.strip():
            for part in text.split(","):
                src, dst = (s.strip() for s in part.split("->"))
                if src not in images or len(dst) != 1:
                    raise ValueError(f"bad substitution entry {part!r}")
                images[src] = dst
        sub = cls(tuple(images[c] for c in ALPHABET[:m]))
        sub.check()
        return sub

    @property
    def rank(self) -> int:
        return len(self.images)

    def check(self) -> None:
        targets = {c.lower() for c in self.images}
        if len(targets) != self.rank or not targets <= set(ALPHABET[:self.rank]):
            raise ValueError(f"substitution {self} is not a signed permutation")

    def letter(self, c: str) -> str:
        img = self.images[ALPHABET.index(c.lower())]
        return img if c.islower() else img.swapcase()

    @cached_property
    def _table(self) -> dict:
        table = {}
        for i, img in enumerate(self.images):
            table[ord(ALPHABET[i])] = img
            table[ord(ALPHABET[i].upper())] = img.swapcase()
        return table

    def __call__(self, w: str) -> str:
        return w.translate(self._table)

    def compose(self, other: "Substitution") -> "Substitution":
        """self ∘ other."""
        return Substitution(tuple(self(c) for c in other.images))

    def inverse(self) -> "Substitution":
        out = [""] * self.rank
        for i, img in enumerate(self.images):
            src = ALPHABET[i]
            out[ALPHABET.index(img.lower())] = src if img.islower() else src.upper()
        return Substitution(tuple(out))

    def is_identity(self) -> bool:
        return self.images == tuple(ALPHABET[:self.rank])

    def __str__(self) -> str:
        return ",".join(f"{ALPHABET[i]}->{img}" for i, img in enumerate(self.images))
