"""Exact word arithmetic and Cayley-ball enumeration for marked groups.

Two families are supported: free groups F_n (reduced letter sequences) and
free abelian groups Z^d (exponent vectors).  Letters are encoded as signed
integers: +i is the i-th generator, -i its inverse, with i in 1..rank.
Canonical enumeration order everywhere is shortlex with letter order
a1 < a1^-1 < a2 < a2^-1 < ...
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .errors import DescriptorMismatch, InvalidDescriptor, InvalidLetter

FREE = "free"
ABELIAN = "abelian"


@dataclass(frozen=True)
class GroupDescriptor:
    """Identity of a marked group: kind ('free' or 'abelian') and rank >= 1."""

    kind: str
    rank: int

    def __post_init__(self):
        if self.kind not in (FREE, ABELIAN):
            raise InvalidDescriptor(f"unknown group kind {self.kind!r}")
        if not isinstance(self.rank, int) or self.rank < 1:
            raise InvalidDescriptor(f"rank must be a positive integer, got {self.rank!r}")

    @property
    def is_free(self) -> bool:
        return self.kind == FREE

    def spec(self) -> str:
        return f"{self.kind}:{self.rank}"

    @staticmethod
    def parse(spec: str) -> "GroupDescriptor":
        m = re.fullmatch(r"(free|abelian):(\d+)", spec.strip())
        if not m:
            raise InvalidDescriptor(f"cannot parse group spec {spec!r} (expected free:N or abelian:N)")
        return GroupDescriptor(m.group(1), int(m.group(2)))


def free_group(rank: int) -> GroupDescriptor:
    return GroupDescriptor(FREE, rank)


def free_abelian(rank: int) -> GroupDescriptor:
    return GroupDescriptor(ABELIAN, rank)


def letter(index: int, sign: int) -> int:
    """Encode a letter: generator `index` (1-based) with sign +1 or -1."""
    if index < 1:
        raise InvalidLetter(f"generator index must be >= 1, got {index}")
    if sign not in (1, -1):
        raise InvalidLetter(f"sign must be +1 or -1, got {sign}")
    return index * sign


def _check_letters(descriptor: GroupDescriptor, letters: Iterable[int]) -> tuple[int, ...]:
    out = tuple(letters)
    for l in out:
        if l == 0 or abs(l) > descriptor.rank:
            raise InvalidLetter(f"letter {l} out of range for rank {descriptor.rank}")
    return out


def _reduce_free(letters: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A group element in normal form.

    Free groups: `data` is the fully reduced letter sequence.  Free abelian
    groups: `data` is the exponent vector (length = rank).  Equality and
    hashing are structural on the normal form.
    """

    descriptor: GroupDescriptor
    data: tuple[int, ...]

    @staticmethod
    def identity(descriptor: GroupDescriptor) -> "Word":
        if descriptor.is_free:
            return Word(descriptor, ())
        return Word(descriptor, (0,) * descriptor.rank)

    @staticmethod
    def from_letters(descriptor: GroupDescriptor, letters: Iterable[int]) -> "Word":
        """Build a word from raw letters, reducing / accumulating as needed."""
        ls = _check_letters(descriptor, letters)
        if descriptor.is_free:
            return Word(descriptor, _reduce_free(ls))
        vec = [0] * descriptor.rank
        for l in ls:
            vec[abs(l) - 1] += 1 if l > 0 else -1
        return Word(descriptor, tuple(vec))

    @staticmethod
    def from_vector(descriptor: GroupDescriptor, vec: Sequence[int]) -> "Word":
        if descriptor.is_free:
            raise InvalidLetter("exponent vectors only make sense for abelian descriptors")
        if len(vec) != descriptor.rank:
            raise InvalidLetter(f"vector length {len(vec)} != rank {descriptor.rank}")
        return Word(descriptor, tuple(int(c) for c in vec))

    @property
    def is_identity(self) -> bool:
        return all(c == 0 for c in self.data) if not self.descriptor.is_free else not self.data

    def length(self) -> int:
        """Word length: letter count for free groups, l1 norm for abelian ones."""
        if self.descriptor.is_free:
            return len(self.data)
        return sum(abs(c) for c in self.data)

    def inverse(self) -> "Word":
        if self.descriptor.is_free:
            return Word(self.descriptor, tuple(-l for l in reversed(self.data)))
        return Word(self.descriptor, tuple(-c for c in self.data))

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def letters(self) -> tuple[int, ...]:
        """Canonical letter spelling (for abelian words: a1-run, then a2-run, ...)."""
        if self.descriptor.is_free:
            return self.data
        out: list[int] = []
        for i, c in enumerate(self.data, start=1):
            out.extend([i if c > 0 else -i] * abs(c))
        return tuple(out)

    def __repr__(self) -> str:
        return f"Word({format_word(self)!r})"


def reduce(descriptor: GroupDescriptor, letters: Iterable[int]) -> Word:
    """Normal form of a raw letter sequence; idempotent."""
    return Word.from_letters(descriptor, letters)


def multiply(u: Word, v: Word) -> Word:
    """Reduced product uv."""
    if u.descriptor != v.descriptor:
        raise DescriptorMismatch(f"{u.descriptor.spec()} vs {v.descriptor.spec()}")
    if u.descriptor.is_free:
        # only the seam can cancel; both factors are already reduced
        a, b = list(u.data), v.data
        i = 0
        while a and i < len(b) and a[-1] == -b[i]:
            a.pop()
            i += 1
        return Word(u.descriptor, tuple(a) + b[i:])
    return Word(u.descriptor, tuple(x + y for x, y in zip(u.data, v.data)))


def begins_with(w: Word, l: int) -> bool:
    """True iff the reduced word starts with letter `l`; false for the identity."""
    if not w.descriptor.is_free:
        raise InvalidLetter("begins_with is only defined on free-group words")
    _check_letters(w.descriptor, (l,))
    return bool(w.data) and w.data[0] == l


def letter_order_index(l: int) -> int:
    """Position of a letter in the canonical order a1 < a1^-1 < a2 < a2^-1 < ..."""
    return 2 * (abs(l) - 1) + (0 if l > 0 else 1)


def shortlex_key(w: Word) -> tuple:
    return (w.length(), tuple(letter_order_index(l) for l in w.letters()))


def letters_in_order(rank: int) -> tuple[int, ...]:
    """All letters of a rank-n free group in canonical order."""
    return tuple(l for i in range(1, rank + 1) for l in (i, -i))


@dataclass(frozen=True)
class Ball:
    """All words of length <= radius, shortlex-sorted and duplicate-free."""

    descriptor: GroupDescriptor
    radius: int
    elements: tuple[Word, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.elements)})

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Word]:
        return iter(self.elements)

    def __contains__(self, w: Word) -> bool:
        return w in self._index

    def index_of(self, w: Word) -> int:
        return self._index[w]

    def get_index(self, w: Word, default: int = -1) -> int:
        return self._index.get(w, default)


def _free_spheres(descriptor: GroupDescriptor, radius: int) -> list[list[Word]]:
    """Spheres 0..radius, each shortlex-sorted (non-backtracking extension)."""
    order = letters_in_order(descriptor.rank)
    spheres = [[Word.identity(descriptor)]]
    for _ in range(radius):
        nxt = []
        for w in spheres[-1]:
            last = w.data[-1] if w.data else 0
            for l in order:
                if l != -last:
                    nxt.append(Word(descriptor, w.data + (l,)))
        spheres.append(nxt)
    return spheres


def _abelian_elements(descriptor: GroupDescriptor, radius: int) -> list[Word]:
    d = descriptor.rank
    out = []
    for vec in itertools.product(range(-radius, radius + 1), repeat=d):
        if sum(abs(c) for c in vec) <= radius:
            out.append(Word(descriptor, vec))
    out.sort(key=shortlex_key)
    return out


@lru_cache(maxsize=None)
def ball(descriptor: GroupDescriptor, radius: int) -> Ball:
    """The radius-`radius` Cayley ball with respect to the standard generators."""
    if radius < 0:
        raise InvalidDescriptor(f"radius must be >= 0, got {radius}")
    if descriptor.is_free:
        elems = [w for sphere in _free_spheres(descriptor, radius) for w in sphere]
    else:
        elems = _abelian_elements(descriptor, radius)
    elems.sort(key=shortlex_key)
    return Ball(descriptor, radius, tuple(elems))


def free_ball_size(rank: int, radius: int) -> int:
    """Closed form 1 + 2n((2n-1)^r - 1)/(2n-2) for |ball(F_n, r)|."""
    if radius == 0:
        return 1
    n = rank
    if n == 1:
        return 2 * radius + 1
    return 1 + 2 * n * ((2 * n - 1) ** radius - 1) // (2 * n - 2)


def free_sphere_size(rank: int, radius: int) -> int:
    if radius == 0:
        return 1
    n = rank
    return 2 * n * (2 * n - 1) ** (radius - 1)


# ---------------------------------------------------------------------------
# Textual word syntax: generators a1..an, inverses A1..An, '.'-separated,
# 'e' for the identity; abelian elements as comma-separated ints in parens.

_TOKEN_RE = re.compile(r"([aA])(\d+)")


def format_word(w: Word) -> str:
    if not w.descriptor.is_free:
        return "(" + ",".join(str(c) for c in w.data) + ")"
    if w.is_identity:
        return "e"
    return ".".join((f"a{l}" if l > 0 else f"A{-l}") for l in w.data)


def parse_word(descriptor: GroupDescriptor, text: str) -> Word:
    text = text.strip()
    if not descriptor.is_free:
        m = re.fullmatch(r"\(([-\d,\s]*)\)", text)
        if not m:
            raise InvalidLetter(f"cannot parse abelian element {text!r} (expected e.g. '(2,-1)')")
        parts = [p.strip() for p in m.group(1).split(",")] if m.group(1).strip() else []
        return Word.from_vector(descriptor, [int(p) for p in parts])
    if text == "e":
        return Word.identity(descriptor)
    letters = []
    for tok in text.split("."):
        m = _TOKEN_RE.fullmatch(tok.strip())
        if not m:
            raise InvalidLetter(f"cannot parse letter {tok!r} in word {text!r}")
        idx = int(m.group(2))
        letters.append(idx if m.group(1) == "a" else -idx)
    return Word.from_letters(descriptor, letters)


def standard_generators(descriptor: GroupDescriptor) -> tuple[Word, ...]:
    if descriptor.is_free:
        return tuple(Word(descriptor, (i,)) for i in range(1, descriptor.rank + 1))
    gens = []
    for i in range(descriptor.rank):
        vec = [0] * descriptor.rank
        vec[i] = 1
        gens.append(Word(descriptor, tuple(vec)))
    return tuple(gens)


def parse_generators(descriptor: GroupDescriptor, text: str) -> tuple[Word, ...]:
    """Parse a comma-separated generator list, paren-aware for abelian tuples."""
    items: list[str] = []
    depth = 0
    cur = ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            items.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        items.append(cur)
    words = tuple(parse_word(descriptor, item) for item in items)
    if not words:
        raise InvalidLetter("empty generator list")
    return words
