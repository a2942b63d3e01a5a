"""Finite-scale audit of the paradoxical lower-bound argument on free groups.

Prefix sets (words sharing a first letter), their translates, restriction
norms, per-frame mass values, the displacement bound certified through the
nearest-unitary approximation, and the inequality chain in two constant
regimes: the literal replay and the re-derived honest one.  Verdicts always
use the honest constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PreconditionError, UnitaryRequired
from .l2ops import Frame, GroupAlgebraElement, L2Vec, compress, nearest_unitary
from .words import GroupDescriptor, Word, ball, begins_with, format_word, free_group, multiply

PAPER_EPSILON = Fraction(1, 7)
PAPER_DISPLACEMENT = Fraction(4, 49)
PAPER_PINCER = Fraction(5, 12)
DERIVED_THRESHOLD = math.sqrt(2.0) / 24.0  # honest chain: B_a + B_b < 1/6 with B -> sqrt(2) eps


def _letter_name(letter: int) -> str:
    return f"a{letter}" if letter > 0 else f"A{-letter}"


@dataclass(frozen=True)
class PrefixSet:
    """A first-letter set S_{a_i^eps} (or {e}), optionally translated/complemented.

    Membership is decided symbolically (translate back, inspect the first
    letter), which agrees with the realized set on every word inside the
    stated realization radius.
    """

    descriptor: GroupDescriptor
    base_letter: int | None  # None encodes the singleton {e}
    realization_radius: int
    translate: Word | None = None
    complement: bool = False

    def __post_init__(self):
        if not self.descriptor.is_free:
            raise PreconditionError("prefix sets live in free groups")
        if self.realization_radius < 0:
            raise PreconditionError("realization radius must be >= 0")

    def _translate_word(self) -> Word:
        return self.translate if self.translate is not None else Word.identity(self.descriptor)

    def contains(self, w: Word) -> bool:
        u = multiply(self._translate_word().inverse(), w)
        if self.base_letter is None:
            inside = u.is_identity
        else:
            inside = begins_with(u, self.base_letter)
        return inside != self.complement

    def translated(self, g: Word) -> "PrefixSet":
        return PrefixSet(
            self.descriptor,
            self.base_letter,
            self.realization_radius - g.length(),
            multiply(g, self._translate_word()),
            self.complement,
        )
    def complemented(self) -> "PrefixSet":
        return PrefixSet(
            self.descriptor, self.base_letter, self.realization_radius,
            self.translate, not self.complement,
        )

    def label(self) -> str:
        core = "{e}" if self.base_letter is None else f"S({_letter_name(self.base_letter)})"
        t = self._translate_word()
        if not t.is_identity:
            core = f"{format_word(t)}*{core}"
        if self.complement:
            core = f"comp({core})"
        return core

    def realized(self, radius: int | None = None) -> list[Word]:
        r = self.realization_radius if radius is None else radius
        return [w for w in ball(self.descriptor, r) if self.contains(w)]


def prefix_set(descriptor: GroupDescriptor, letter: int, realization_radius: int) -> PrefixSet:
    return PrefixSet(descriptor, letter, realization_radius)


def identity_set(descriptor: GroupDescriptor, realization_radius: int) -> PrefixSet:
    return PrefixSet(descriptor, None, realization_radius)


def restriction_norm(v: L2Vec, s: PrefixSet) -> float:
    """||v||^2_S: the squared amplitude mass sitting inside S."""
    if v.descriptor != s.descriptor:
        raise PreconditionError("vector and prefix set from different groups")
    if v.support_radius > s.realization_radius:
        raise PreconditionError(
            f"support radius {v.support_radius} escapes the realization radius {s.realization_radius}"
        )
    return sum(a.real * a.real + a.imag * a.imag for w, a in v.amplitudes.items() if s.contains(w))


def c_value(frame: Frame, s: PrefixSet) -> float:
    """(1/k) sum_i ||xi_i||^2_S, always in [0, 1]."""
    return sum(restriction_norm(col, s) for col in frame.columns) / frame.rank


# ---------------------------------------------------------------------------
# Set identities.


@dataclass(frozen=True)
class SetIdentityReport:
    radius: int
    checked_words: int
    disjoint_ok: bool
    corrected_cover_ok: bool
    literal_cover_holds: bool
    uncovered_count: int
    uncovered_examples: tuple[str, ...]
    uncovered_equals_first_letter_set: bool


def verify_set_identities(radius: int) -> SetIdentityReport:
    """Exact checks on ball(radius - 1) in F2, with S = words beginning a^-1.

    (i) S, bS, b^-1 S are pairwise disjoint; (ii) the corrected cover: S_a and
    aS partition everything; (iii) the literal union S + aS, reporting the
    words it leaves uncovered (exactly those beginning with a).
    """
    if radius < 2:
        raise PreconditionError("radius must be >= 2")
    descriptor = free_group(2)
    a = Word(descriptor, (1,))
    b = Word(descriptor, (2,))
    s = prefix_set(descriptor, -1, radius)
    s_a = prefix_set(descriptor, 1, radius)
    a_s = s.translated(a)
    b_s = s.translated(b)
    binv_s = s.translated(b.inverse())

    check_ball = ball(descriptor, radius - 1)
    disjoint_ok = True
    corrected_ok = True
    uncovered: list[Word] = []
    mismatch = False
    for w in check_ball:
        hits = sum((s.contains(w), b_s.contains(w), binv_s.contains(w)))
        if hits > 1:
            disjoint_ok = False
        if s_a.contains(w) + a_s.contains(w) != 1:
            corrected_ok = False
        literal = s.contains(w) or a_s.contains(w)
        if not literal:
            uncovered.append(w)
            if not s_a.contains(w):
                mismatch = True
        elif s_a.contains(w):
            mismatch = True  # covered although it begins with a
    return SetIdentityReport(
        radius=radius,
        checked_words=len(check_ball),
        disjoint_ok=disjoint_ok,
        corrected_cover_ok=corrected_ok,
        literal_cover_holds=not uncovered,
        uncovered_count=len(uncovered),
        uncovered_examples=tuple(format_word(w) for w in uncovered[:5]),
        uncovered_equals_first_letter_set=not mismatch,
    )


# ---------------------------------------------------------------------------
# Displacement bounds.


@dataclass(frozen=True)
class DisplacementBound:
    set_label: str
    unitary_label: str
    measured_pull: float  # |c_{U^-1 S} - c_S|
    measured_push: float  # |c_{U S} - c_S|
    measured: float
    certified: float      # 2 ||Ue - W||_{tau_k}, W the polar factor of eUe
    w_distance: float     # ||eUe - W||_{tau_k}
    compression_gap: float  # sqrt(1 - tau_k(A* A)) = ||Ue - eUe||_{tau_k}


def displacement_bound(frame: Frame, op: GroupAlgebraElement, s: PrefixSet) -> DisplacementBound:
    """Measured mass displacement of S under U against its certified bound.

    certified = 2 ||Ue - W|| with ||Ue - W||^2 = dist^2 + (1 - tau_k(A*A)),
    an exact identity for the polar factor W; measured <= certified is a
    theorem and is asserted.
    """
    if not op.is_single_unitary:
        raise UnitaryRequired("displacement bounds need a single unitary")
    g = op.single_word
    c_s = c_value(frame, s)
    c_pull = c_value(frame, s.translated(g.inverse()))
    c_push = c_value(frame, s.translated(g))
    a = compress(op, frame)
    k = frame.rank
    tau_aa = float(np.sum(np.abs(a) ** 2)) / k
    _, dist = nearest_unitary(a)
    gap = math.sqrt(max(0.0, 1.0 - tau_aa))
    ue_w = math.sqrt(max(0.0, dist * dist + 1.0 - tau_aa))
    certified = 2.0 * ue_w
    measured = max(abs(c_pull - c_s), abs(c_push - c_s))
    assert measured <= certified + 1e-9, "displacement theorem violated"
    return DisplacementBound(
        set_label=s.label(),
        unitary_label=op.label(),
        measured_pull=abs(c_pull - c_s),
        measured_push=abs(c_push - c_s),
        measured=measured,
        certified=certified,
        w_distance=dist,
        compression_gap=gap,
    )


# ---------------------------------------------------------------------------
# The inequality chain.


@dataclass(frozen=True)
class ChainVariant:
    """One symmetric instance of the pincer argument."""

    anchor: str            # label of the base set S
    cover_bound: float     # B of the generator driving the cover pair
    disjoint_bound: float  # B of the generator driving the disjoint triple
    lower: float           # 1/2 - cover_bound
    upper: float           # 1/3 + disjoint_bound
    satisfiable: bool      # lower <= upper, i.e. B_cover + B_disjoint >= 1/6
    c_anchor: float


@dataclass(frozen=True)
class PaperTrace:
    """Replay of the literal constant regime (provenance only, never a verdict)."""

    epsilon: float
    displacement_constant: float
    pincer_lower: float  # 1/2 - 4/49
    pincer_upper: float  # 1/3 + 4/49
    pincer_threshold: float  # 5/12
    lower_exceeds_threshold: bool
    upper_below_threshold: bool
    chain_closes: bool
    honest_displacement_constant: float  # 2/7 after restoring the square root


@dataclass(frozen=True)
class ParadoxReport:
    c_values: dict
    displacements: dict
    variants: tuple[ChainVariant, ...]
    verdict: str  # contradiction | consistent | inconclusive
    partition_sum: float
    constants: dict
    paper_trace: PaperTrace | None = None


@dataclass(frozen=True)
class ContradictionThreshold:
    derived: float
    paper_nominal: float
    discrepancy: bool

    @property
    def note(self) -> str:
        return (
            "the displayed chain bounds the square of the displacement; taking the "
            "square root honestly turns 4/49 into 2/7 and the closing constant into "
            f"{self.derived:.6f} instead of {self.paper_nominal:.6f}"
        )


def contradiction_threshold() -> ContradictionThreshold:
    """Largest eps for which the re-derived chain guarantees a contradiction.

    The chain needs B_a + B_b < 1/6 with B = 2(eps/sqrt(2) + delta') and
    delta' -> 0, giving eps* = sqrt(2)/24; the literal constant 1/7 is
    returned alongside with a discrepancy flag.
    """
    return ContradictionThreshold(DERIVED_THRESHOLD, float(PAPER_EPSILON), True)


def make_paper_trace() -> PaperTrace:
    lower = 0.5 - float(PAPER_DISPLACEMENT)
    upper = 1.0 / 3.0 + float(PAPER_DISPLACEMENT)
    thr = float(PAPER_PINCER)
    return PaperTrace(
        epsilon=float(PAPER_EPSILON),
        displacement_constant=float(PAPER_DISPLACEMENT),
        pincer_lower=lower,
        pincer_upper=upper,
        pincer_threshold=thr,
        lower_exceeds_threshold=lower > thr,
        upper_below_threshold=upper < thr,
        chain_closes=(lower > thr) and (upper < thr),
        honest_displacement_constant=2.0 / 7.0,
    )


def chain_audit(frame: Frame, paper_mode: bool = False) -> ParadoxReport:
    """Evaluate the full inequality chain on one frame with honest constants.

    Masses are computed over the first-letter partition and the translates the
    argument uses; the certified displacement bounds B per generator are set
    independent, and the abstract chain is unsatisfiable (verdict
    'contradiction') precisely when B_a + B_b < 1/6 in any symmetric variant.
    """
    descriptor = frame.descriptor
    if not descriptor.is_free or descriptor.rank < 2:
        raise PreconditionError("the chain audit targets free groups of rank >= 2")
    radius = frame.ambient_radius
    a_w = Word(descriptor, (1,))
    b_w = Word(descriptor, (2,))
    l_a = GroupAlgebraElement.left_translation(a_w)
    l_b = GroupAlgebraElement.left_translation(b_w)

    partition = [identity_set(descriptor, radius)] + [
        prefix_set(descriptor, l, radius) for i in range(1, descriptor.rank + 1) for l in (i, -i)
    ]
    c_values = {s.label(): c_value(frame, s) for s in partition}
    partition_sum = float(sum(c_values.values()))

    base = prefix_set(descriptor, -1, radius)
    translate_sets = [base.translated(a_w), base.translated(b_w), base.translated(b_w.inverse())]
    for s in translate_sets:
        c_values[s.label()] = c_value(frame, s)

    d_a = displacement_bound(frame, l_a, base)
    d_b = displacement_bound(frame, l_b, base)
    displacements = {
        d.unitary_label: {
            "measured_pull": d.measured_pull,
            "measured_push": d.measured_push,
            "measured": d.measured,
            "certified": d.certified,
            "w_distance": d.w_distance,
            "compression_gap": d.compression_gap,
        }
        for d in (d_a, d_b)
    }
    bounds = {1: d_a.certified, 2: d_b.certified}

    variants = []
    for cover_gen, disjoint_gen in ((1, 2), (2, 1)):
        for sign in (-1, 1):
            anchor = prefix_set(descriptor, sign * cover_gen, radius)
            b_cover = bounds[cover_gen]
            b_disjoint = bounds[disjoint_gen]
            lower = 0.5 - b_cover
            upper = 1.0 / 3.0 + b_disjoint
            variants.append(
                ChainVariant(
                    anchor=anchor.label(),
                    cover_bound=b_cover,
                    disjoint_bound=b_disjoint,
                    lower=lower,
                    upper=upper,
                    satisfiable=lower <= upper,
                    c_anchor=c_value(frame, anchor),
                )
            )

    if abs(partition_sum - 1.0) > 1e-9:
        verdict = "inconclusive"
    elif any(not v.satisfiable for v in variants):
        verdict = "contradiction"
    else:
        verdict = "consistent"

    thr = contradiction_threshold()
    constants = {
        "derived_threshold": thr.derived,
        "paper_epsilon": thr.paper_nominal,
        "paper_displacement": float(PAPER_DISPLACEMENT),
        "pincer": float(PAPER_PINCER),
        "honest_B_a": d_a.certified,
        "honest_B_b": d_b.certified,
        "chain_requires": "B_a + B_b < 1/6",
    }
    return ParadoxReport(
        c_values=c_values,
        displacements=displacements,
        variants=tuple(variants),
        verdict=verdict,
        partition_sum=partition_sum,
        constants=constants,
        paper_trace=make_paper_trace() if paper_mode else None,
    )
