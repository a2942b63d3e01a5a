"""Interior boundaries, boundary ratios, and Folner-set search.

Ratios are exact rationals internally; floats appear only at the reporting
edge.  Three estimators are provided and never conflated: exact minima over
small balls, the canonical ball family, and seeded local search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import (
    DescriptorMismatch,
    InvalidDescriptor,
    PreconditionError,
    SearchSpaceTooLarge,
    SeedRequired,
)
from .words import (
    Ball,
    GroupDescriptor,
    Word,
    ball,
    format_word,
    free_ball_size,
    free_sphere_size,
    multiply,
    shortlex_key,
    standard_generators,
)

EXHAUSTIVE_BALL_CAP = 22  # |ball| cap: at most 2^22 candidate subsets


@dataclass(frozen=True)
class ElementSet:
    """A finite set of words sharing one descriptor."""

    descriptor: GroupDescriptor
    members: frozenset

    @staticmethod
    def of(descriptor: GroupDescriptor, words: Iterable[Word]) -> "ElementSet":
        ws = frozenset(words)
        for w in ws:
            if w.descriptor != descriptor:
                raise DescriptorMismatch(f"member {format_word(w)} has descriptor {w.descriptor.spec()}")
        return ElementSet(descriptor, ws)

    def sorted_members(self) -> list[Word]:
        return sorted(self.members, key=shortlex_key)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class GeneratingSet:
    """Finite generating set; boundary computations use X and X^-1."""

    descriptor: GroupDescriptor
    generators: tuple[Word, ...]

    @staticmethod
    def of(descriptor: GroupDescriptor, words: Iterable[Word]) -> "GeneratingSet":
        ws = sorted(set(words), key=shortlex_key)
        if not ws:
            raise PreconditionError("generating set must be non-empty")
        for w in ws:
            if w.descriptor != descriptor:
                raise DescriptorMismatch(f"generator {format_word(w)} has descriptor {w.descriptor.spec()}")
        return GeneratingSet(descriptor, tuple(ws))

    @staticmethod
    def standard(descriptor: GroupDescriptor) -> "GeneratingSet":
        return GeneratingSet.of(descriptor, standard_generators(descriptor))

    def closure(self) -> tuple[Word, ...]:
        """X union X^-1, deduplicated, shortlex-sorted."""
        both = set(self.generators) | {g.inverse() for g in self.generators}
        return tuple(sorted(both, key=shortlex_key))

    def is_standard(self) -> bool:
        return self.generators == standard_generators(self.descriptor)


@dataclass(frozen=True)
class BoundaryReport:
    set_size: int
    boundary_size: int
    ratio: Fraction

    def __post_init__(self):
        if self.set_size <= 0:
            raise PreconditionError("boundary ratio of an empty set")
        assert self.ratio == Fraction(self.boundary_size, self.set_size)

    @property
    def ratio_float(self) -> float:
        return self.boundary_size / self.set_size

    @staticmethod
    def of(set_size: int, boundary_size: int) -> "BoundaryReport":
        return BoundaryReport(set_size, boundary_size, Fraction(boundary_size, set_size))


def interior_boundary(A: ElementSet, X: GeneratingSet) -> ElementSet:
    """Members a of A with a*x outside A for some x in X or X^-1."""
    if A.descriptor != X.descriptor:
        raise DescriptorMismatch("set and generating set live in different groups")
    if not A.members:
        raise PreconditionError("interior boundary of an empty set")
    closure = X.closure()
    members = A.members
    bd = [a for a in members if any(multiply(a, x) not in members for x in closure)]
    return ElementSet(A.descriptor, frozenset(bd))


def boundary_ratio(A: ElementSet, X: GeneratingSet) -> BoundaryReport:
    """Exact rational #boundary(A) / #A."""
    bd = interior_boundary(A, X)
    return BoundaryReport.of(len(A.members), len(bd.members))


# ---------------------------------------------------------------------------
# Exhaustive search over all non-empty subsets of a ball (bitmask-vectorized).


def _neighbor_table(b: Ball, X: GeneratingSet) -> np.ndarray:
    """nbr[x, i] = ball index of elements[i] * closure[x], or -1 if outside."""
    closure = X.closure()
    nbr = np.full((len(closure), len(b)), -1, dtype=np.int64)
    for xi, x in enumerate(closure):
        for i, w in enumerate(b.elements):
            nbr[xi, i] = b.get_index(multiply(w, x))
    return nbr


def _subset_boundary_counts(masks: np.ndarray, nbr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boundary popcount and size popcount for each subset bitmask."""
    interior = masks.copy()
    one = np.uint64(1)
    for xi in range(nbr.shape[0]):
        stay = np.zeros_like(masks)
        for i in range(nbr.shape[1]):
            j = nbr[xi, i]
            if j >= 0:
                stay |= ((masks >> np.uint64(j)) & one) << np.uint64(i)
        interior &= stay
    bnd = masks & ~interior
    return np.bitwise_count(bnd).astype(np.int64), np.bitwise_count(masks).astype(np.int64)


def exhaustive_min_ratio(
    descriptor: GroupDescriptor,
    X: GeneratingSet,
    radius: int,
    chunk: int = 1 << 20,
) -> tuple[ElementSet, BoundaryReport]:
    """True minimum of the boundary ratio over all non-empty subsets of ball(radius).

    Ties are broken by smaller set size, then by shortlex-lexicographic
    membership.  Refuses when |ball(radius)| exceeds the 2^22 subset cap.
    """
    b = ball(descriptor, radius)
    n = len(b)
    if n > EXHAUSTIVE_BALL_CAP:
        raise SearchSpaceTooLarge(f"|ball({radius})| = {n} exceeds the exhaustive cap of {EXHAUSTIVE_BALL_CAP}")
    nbr = _neighbor_table(b, X)
    total = (1 << n) - 1

    best: tuple[Fraction, int, tuple[int, ...]] | None = None
    for start in range(1, total + 1, chunk):
        stop = min(start + chunk, total + 1)
        masks = np.arange(start, stop, dtype=np.uint64)
        bcnt, scnt = _subset_boundary_counts(masks, nbr)
        ratios = bcnt / scnt
        m = ratios.min()
        # distinct rationals with denominators <= 22 are separated far beyond
        # float error, so a float window isolates the exact minimizers
        cand = np.where(ratios <= m + 1e-9)[0]
        for ci in cand:
            frac = Fraction(int(bcnt[ci]), int(scnt[ci]))
            mask = int(masks[ci])
            key = (frac, int(scnt[ci]), tuple(i for i in range(n) if (mask >> i) & 1))
            if best is None or key < best:
                best = key
    assert best is not None
    frac, size, indices = best
    members = ElementSet.of(descriptor, (b.elements[i] for i in indices))
    return members, BoundaryReport(size, int(frac * size), frac)


# ---------------------------------------------------------------------------
# Ball family.


@dataclass(frozen=True)
class BallRatio:
    radius: int
    report: BoundaryReport
    method: str  # "enumerated" or "closed_form"


def free_ball_ratio_closed_form(rank: int, radius: int) -> Fraction:
    """Boundary ratio of ball(F_n, r): the boundary is exactly the r-sphere."""
    if radius < 1:
        raise PreconditionError("closed form needs radius >= 1")
    return Fraction(free_sphere_size(rank, radius), free_ball_size(rank, radius))


ENUMERATION_CAP = 200_000


def ball_family_ratios(
    descriptor: GroupDescriptor,
    X: GeneratingSet,
    r_max: int,
    method: str = "auto",
) -> list[BallRatio]:
    """Boundary ratios of ball(r) for r = 1..r_max.

    method 'auto' uses the closed form for free groups with standard
    generators and enumeration otherwise; 'enumerate' and 'closed_form'
    force one path.
    """
    if r_max < 1:
        raise PreconditionError("r_max must be >= 1")
    if method not in ("auto", "enumerate", "closed_form"):
        raise PreconditionError(f"unknown method {method!r}")
    closed_ok = descriptor.is_free and X.is_standard()
    if method == "closed_form" and not closed_ok:
        raise PreconditionError("closed form only applies to free groups with standard generators")

    out: list[BallRatio] = []
    for r in range(1, r_max + 1):
        use_closed = method == "closed_form" or (
            method == "auto" and closed_ok and free_ball_size(descriptor.rank, r) > ENUMERATION_CAP
        )
        if use_closed:
            size = free_ball_size(descriptor.rank, r)
            bd = free_sphere_size(descriptor.rank, r)
            out.append(BallRatio(r, BoundaryReport(size, bd, Fraction(bd, size)), "closed_form"))
        else:
            b = ball(descriptor, r)
            if len(b) > ENUMERATION_CAP:
                raise SearchSpaceTooLarge(f"|ball({r})| = {len(b)} exceeds the enumeration cap")
            rep = boundary_ratio(ElementSet.of(descriptor, b.elements), X)
            out.append(BallRatio(r, rep, "enumerated"))
    return out


# ---------------------------------------------------------------------------
# Seeded local search (simulated annealing on single-element toggles).


@dataclass(frozen=True)
class GroupSearchConfig:
    radius: int
    mode: str = "search"  # exhaustive | balls | search
    seed: int | None = None
    iterations: int = 10_000
    temp_initial: float = 0.25
    temp_decay: float = 0.999

    def __post_init__(self):
        if self.mode not in ("exhaustive", "balls", "search"):
            raise InvalidDescriptor(f"unknown search mode {self.mode!r}")
        if self.radius < 0:
            raise PreconditionError("radius must be >= 0")
        if self.mode == "search" and self.seed is None:
            raise SeedRequired("local search requires an explicit seed")


@dataclass
class AcceptedMove:
    iteration: int
    move: str  # "+word" or "-word"
    boundary_size: int
    set_size: int


@dataclass
class LocalSearchResult:
    best_set: ElementSet
    report: BoundaryReport
    history: list[AcceptedMove]
    initial_report: BoundaryReport


def _mask_ratio(mask: np.ndarray, nbr: np.ndarray) -> tuple[int, int]:
    stay = np.ones_like(mask)
    for xi in range(nbr.shape[0]):
        nb = nbr[xi]
        valid = nb >= 0
        s = np.zeros_like(mask)
        s[valid] = mask[nb[valid]]
        stay &= s
    interior = mask & stay
    size = int(mask.sum())
    return size - int(interior.sum()), size


def local_search_min_ratio(
    descriptor: GroupDescriptor,
    X: GeneratingSet,
    config: GroupSearchConfig,
    initial: ElementSet | None = None,
) -> LocalSearchResult:
    """Annealed single-element toggles within ball(radius), starting from {e}.

    Deterministic for a fixed seed.  The reported ratio is an achieved value,
    hence an upper bound for the infimum; it never exceeds the initial ratio.
    """
    if config.seed is None:
        raise SeedRequired("local search requires an explicit seed")
    b = ball(descriptor, config.radius)
    n = len(b)
    nbr = _neighbor_table(b, X)
    mask = np.zeros(n, dtype=bool)
    if initial is None:
        mask[b.index_of(Word.identity(descriptor))] = True
    else:
        for w in initial.members:
            if w not in b:
                raise PreconditionError(f"initial member {format_word(w)} outside ball({config.radius})")
            mask[b.index_of(w)] = True
        if not mask.any():
            raise PreconditionError("initial set must be non-empty")

    rng = np.random.default_rng(config.seed)
    bcnt, size = _mask_ratio(mask, nbr)
    current = bcnt / size
    best = (Fraction(bcnt, size), size, mask.copy())
    initial_report = BoundaryReport.of(size, bcnt)
    history: list[AcceptedMove] = []
    temp = config.temp_initial

    for it in range(config.iterations):
        i = int(rng.integers(n))
        removing = bool(mask[i])
        if removing and size == 1:
            temp *= config.temp_decay
            continue  # never empty the set
        mask[i] = not mask[i]
        nb, ns = _mask_ratio(mask, nbr)
        cand = nb / ns
        accept = cand <= current or (temp > 0 and rng.random() < math.exp((current - cand) / temp))
        if accept:
            current, bcnt, size = cand, nb, ns
            history.append(AcceptedMove(it, ("-" if removing else "+") + format_word(b.elements[i]), nb, ns))
            frac = Fraction(nb, ns)
            if (frac, ns) < (best[0], best[1]):
                best = (frac, ns, mask.copy())
        else:
            mask[i] = not mask[i]
        temp *= config.temp_decay

    frac, _, bm = best
    members = ElementSet.of(descriptor, (b.elements[i] for i in np.flatnonzero(bm)))
    report = boundary_ratio(members, X)
    assert report.ratio == frac
    assert report.ratio <= initial_report.ratio
    return LocalSearchResult(members, report, history, initial_report)
