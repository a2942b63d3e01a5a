"""Witness frames, certificates, Q evaluation, projection search."""

import math

import numpy as np
import pytest

from foelner.connes import (
    ProjectionSearchConfig,
    WitnessConfig,
    anneal_projection,
    build_witness_frame,
    certificate_formula,
    evaluate_Q,
    foelner_upper_estimate,
    frame_fingerprint,
    frame_pool,
    limit_formula,
    pool_objective,
    prefixed_words,
    q_objective,
    random_frame,
    standard_unitaries,
    witness_certificate,
)
from foelner.errors import PreconditionError
from foelner.l2ops import Frame, GroupAlgebraElement, L2Vec, compress, gram_matrix, inner_product
from foelner.words import Word, begins_with, free_group, multiply

F2 = free_group(2)
L_a = GroupAlgebraElement.left_translation(Word(F2, (1,)))
L_b = GroupAlgebraElement.left_translation(Word(F2, (2,)))
L_e = GroupAlgebraElement.left_translation(Word.identity(F2))


# ---------------------------------------------------------------------------
# Witness construction.


def test_prefixed_words_are_shortlex_and_prefixed():
    words = prefixed_words(F2, -1, 10)
    assert len(words) == 10
    assert all(begins_with(w, -1) for w in words)
    lengths = [w.length() for w in words]
    assert lengths == sorted(lengths)
    assert words[0] == Word(F2, (-1,))


def test_witness_small_example():
    frame = build_witness_frame(WitnessConfig(2, 2, 1))
    assert frame.rank == 2
    assert np.allclose(gram_matrix(frame.columns), np.eye(2), atol=1e-12)


def test_witness_orthonormal_grid():
    for n, k, t in ((2, 2, 2), (2, 8, 6), (2, 32, 8), (3, 16, 5), (4, 8, 4), (5, 32, 8)):
        frame = build_witness_frame(WitnessConfig(n, k, t))
        g = gram_matrix(frame.columns)
        assert np.allclose(g, np.eye(k), atol=1e-10)


def test_witness_subdiagonal_geometric_series_oracle():
    # raw truncated column: squared norm 1 - (n+1)^-T, raw adjacent inner
    # product (1 - (n+1)^-T)/n, hence exactly 1/n after renormalization
    for n, t in ((2, 1), (2, 4), (3, 2), (5, 6)):
        raw_norm_sq = sum(n * (n + 1) ** (-s) for s in range(1, t + 1))
        assert abs(raw_norm_sq - (1 - (n + 1) ** (-t))) < 1e-12
        raw_ip = sum((n + 1) ** (-s) for s in range(1, t + 1))
        assert abs(raw_ip - raw_norm_sq / n) < 1e-12

        frame = build_witness_frame(WitnessConfig(n, 3, t))
        ops = standard_unitaries(frame.descriptor)
        from foelner.l2ops import apply

        for op in ops:
            for m in (1, 2):  # <L_aj xi_m, xi_{m+1}> = 1/n for every j
                moved = apply(op, frame.columns[m - 1], frame.ambient_radius)
                got = inner_product(moved, frame.columns[m])
                assert abs(got - 1.0 / n) < 1e-12
        for op in ops:
            a = compress(op, frame)
            for q in range(3):
                for p in range(3):
                    expected = 1.0 / n if q == p + 1 else 0.0
                    assert abs(a[q, p] - expected) < 1e-12


def test_witness_compression_shape():
    frame = build_witness_frame(WitnessConfig(2, 8, 6))
    a = compress(L_a, frame)
    expected = np.zeros((8, 8))
    for m in range(1, 8):
        expected[m, m - 1] = 0.5
    assert np.allclose(a, expected, atol=1e-12)


def test_witness_requires_rank_two():
    with pytest.raises(PreconditionError):
        WitnessConfig(1, 4, 3)


def test_certificate_formula_values():
    assert abs(certificate_formula(2, 1) - math.sqrt(2)) < 1e-15
    assert abs(certificate_formula(2, 8) - 1.25) < 1e-15
    assert abs(limit_formula(2) - math.sqrt(1.5)) < 1e-15


def test_witness_certificate_exact():
    cert = witness_certificate(2, 8, 6)
    assert abs(cert.certified_epsilon - 1.25) < 1e-12
    assert abs(cert.certified_epsilon - cert.formula_epsilon) < 1e-9
    assert all(r.defect < 1e-12 for r in cert.records)
    assert len(cert.frame_fingerprint) == 64


def test_witness_certificate_n3_k3():
    cert = witness_certificate(3, 3, 4)
    expected = math.sqrt(2 - 4 / 27)
    assert abs(cert.certified_epsilon - expected) < 1e-9
    assert abs(expected - 1.361) < 1e-3


def test_certificate_monotonicity():
    # strictly decreasing in k, strictly increasing in n
    for n in (2, 3, 5):
        eps = [certificate_formula(n, k) for k in range(1, 12)]
        assert all(e1 > e2 for e1, e2 in zip(eps, eps[1:]))
    for k in (2, 8, 32):
        eps = [certificate_formula(n, k) for n in (2, 3, 4, 5)]
        assert all(e1 < e2 for e1, e2 in zip(eps, eps[1:]))


def test_certificate_independent_of_tail_enumeration():
    # permuting the enumeration of the tail sets leaves the certificate alone
    cfg = WitnessConfig(2, 4, 3)
    base = build_witness_frame(cfg)
    lists = []
    for i in (1, 2):
        w = 2 if i == 1 else i - 1
        lst = prefixed_words(F2, -w, cfg.T)
        lists.append([lst[1], lst[2], lst[0]])  # cyclic permutation
    columns = []
    for m in range(1, cfg.k + 1):
        amps = {}
        for i in (1, 2):
            head = Word(F2, (i,) * m)
            for t in range(1, cfg.T + 1):
                amps[multiply(head, lists[i - 1][t - 1])] = (cfg.n + 1) ** (-t / 2)
        columns.append(L2Vec.of(F2, amps).normalized())
    permuted = Frame(F2, tuple(columns), base.ambient_radius)
    for frame in (base, permuted):
        worst = max(r.worst for r in q_objective((L_a, L_b), frame))
        assert abs(worst - certificate_formula(2, 4)) < 1e-9


# ---------------------------------------------------------------------------
# Q evaluation.


def test_evaluate_q_examples():
    rng = np.random.default_rng(0)
    frame = random_frame(F2, 3, 4, rng)
    assert evaluate_Q([L_e], frame, 0.1).verdict is True
    f_e = Frame(F2, (L2Vec.delta(Word.identity(F2)),), 2)
    rep = evaluate_Q([L_a], f_e, 1.0)
    assert rep.verdict is False
    assert abs(rep.records[0].ratio - math.sqrt(2)) < 1e-12
    witness = build_witness_frame(WitnessConfig(2, 8, 6))
    assert evaluate_Q([L_a, L_b], witness, 1.25 + 1e-9).verdict is True


def test_evaluate_q_monotone_in_epsilon_antitone_in_x():
    witness = build_witness_frame(WitnessConfig(2, 4, 3))
    eps0 = certificate_formula(2, 4)
    assert evaluate_Q([L_a], witness, eps0 + 1e-9).verdict
    assert not evaluate_Q([L_a], witness, eps0 - 1e-3).verdict
    # superset of unitaries can only lower the verdict
    for eps in (0.5, eps0 + 1e-9, 2.0):
        v1 = evaluate_Q([L_a], witness, eps).verdict
        v2 = evaluate_Q([L_a, L_b], witness, eps).verdict
        assert (not v2) or v1


def test_evaluate_q_rejects_non_unitaries():
    witness = build_witness_frame(WitnessConfig(2, 2, 2))
    blend = GroupAlgebraElement.of(F2, {Word.identity(F2): 0.5, Word(F2, (1,)): 0.5})
    with pytest.raises(PreconditionError):
        evaluate_Q([blend], witness, 1.0)
    with pytest.raises(PreconditionError):
        evaluate_Q([], witness, 1.0)


# ---------------------------------------------------------------------------
# Upper estimate sweeps.


def test_upper_estimate_frame_mode():
    est = foelner_upper_estimate(2, 1)
    assert abs(est.best_epsilon - math.sqrt(2)) < 1e-12
    est8 = foelner_upper_estimate(2, 8)
    assert est8.best_k == 8
    assert abs(est8.best_epsilon - 1.25) < 1e-9
    eps = [e for _, e in est8.sweep]
    assert all(e1 > e2 for e1, e2 in zip(eps, eps[1:]))


def test_upper_estimate_formula_mode_limit():
    est = foelner_upper_estimate(2, 10_000, mode="formula")
    assert abs(est.best_epsilon - math.sqrt(1.5)) < 1e-3
    assert est.best_k == 10_000


# ---------------------------------------------------------------------------
# Random frames and annealing.


def test_random_frame_deterministic():
    a = frame_pool(F2, 4, 4, seed=21, count=3)
    b = frame_pool(F2, 4, 4, seed=21, count=3)
    assert [frame_fingerprint(f) for f in a] == [frame_fingerprint(f) for f in b]


def test_pool_objective_monotone():
    pool = frame_pool(F2, 4, 4, seed=33, count=6)
    v1, _ = pool_objective([L_a], pool)
    v2, _ = pool_objective([L_a, L_b], pool)
    assert v1 <= v2


def test_anneal_identity_unitary_is_trivial():
    cfg = ProjectionSearchConfig(
        descriptor=F2, rank=3, ambient_radius=3, seed=5, iterations=20, unitaries=(Word.identity(F2),)
    )
    res = anneal_projection(cfg)
    assert res.history[0] == (0, res.history[0][1])
    assert res.history[0][1] < 1e-9
    assert res.objective < 1e-9


def test_anneal_deterministic_and_nonincreasing():
    cfg = ProjectionSearchConfig(
        descriptor=F2, rank=4, ambient_radius=4, seed=42, iterations=300,
        unitaries=(Word(F2, (1,)), Word(F2, (2,))),
    )
    r1 = anneal_projection(cfg)
    r2 = anneal_projection(cfg)
    assert r1.history == r2.history
    assert abs(r1.objective - r2.objective) < 1e-15
    best = [v for _, v in r1.history]
    assert all(b1 >= b2 for b1, b2 in zip(best, best[1:]))
    assert frame_fingerprint(r1.frame) == frame_fingerprint(r2.frame)


def test_anneal_spec_example_floor():
    cfg = ProjectionSearchConfig(
        descriptor=F2, rank=8, ambient_radius=5, seed=42, iterations=10_000,
        unitaries=(Word(F2, (1,)), Word(F2, (2,))),
    )
    res = anneal_projection(cfg)
    assert res.objective >= 0.05


def test_anneal_monotone_between_unitary_sets_on_same_seed():
    base = dict(descriptor=F2, rank=4, ambient_radius=4, seed=11, iterations=400)
    single = anneal_projection(ProjectionSearchConfig(unitaries=(Word(F2, (1,)),), **base))
    double = anneal_projection(
        ProjectionSearchConfig(unitaries=(Word(F2, (1,)), Word(F2, (2,))), **base)
    )
    assert single.objective <= double.objective
