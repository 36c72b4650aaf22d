import numpy as np
import pytest

from sgproof.core import Shape, full_position, stat, subset
from sgproof.propagate import (Batch, modify_leftright_step, modify_prod_step,
                               modify_ternary_step, process, process_batch)

from oracles import (chaotic_fixpoint, covered_structures, leftright_step_loops,
                     prod_step_loops, random_position, ternary_step_loops)


def masks_equal(p, q):
    return all((x == y).all() for x, y in zip(p.masks(), q.masks()))


def test_steps_on_full_masks(shape32):
    p = full_position(shape32, np.array([[0, 1], [1, 0], [0, 0]]))
    assert masks_equal(modify_ternary_step(p), ternary_step_loops(p))
    q = modify_ternary_step(p)
    # full m has no unique column, so l and r stay put
    assert masks_equal(modify_leftright_step(q), leftright_step_loops(q))
    assert (modify_leftright_step(q).l == q.l).all()
    assert (modify_leftright_step(q).r == q.r).all()


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("ab", [(2, 2), (3, 2), (4, 2), (2, 3)])
def test_steps_match_loop_reference(ab, seed):
    shape = Shape(*ab)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        p = random_position(shape, rng, keep=0.75, done_l=(seed % 2 == 0))
        assert masks_equal(modify_ternary_step(p), ternary_step_loops(p))
        assert masks_equal(modify_leftright_step(p), leftright_step_loops(p))
        assert masks_equal(modify_prod_step(p), prod_step_loops(p))


def test_steps_shrink(shape32):
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = random_position(shape32, rng, keep=0.8)
        for step in (modify_ternary_step, modify_leftright_step, modify_prod_step):
            assert subset(step(p), p)


def test_process_idempotent_many():
    rng = np.random.default_rng(8)
    for ab in [(2, 2), (3, 2), (4, 2)]:
        shape = Shape(*ab)
        for _ in range(40):
            p = random_position(shape, rng, keep=0.8)
            q = process(p)
            assert subset(q, p)
            assert masks_equal(process(q), q)


def test_process_skips_empty_m_column(shape32):
    p = random_position(shape32, np.random.default_rng(9), keep=0.9)
    m = p.m.copy()
    m[1, 1, :] = False
    q = p.replace_m(m)
    assert masks_equal(process(q), q)


def test_process_matches_chaotic_iteration(shape22):
    # Rule application order is immaterial wherever the position stays
    # possible; around emptied columns the uniqueness guard makes the rules
    # non-monotone and exact bits may differ, but both orders then agree the
    # position is impossible.  The sequential order is the normative one.
    from sgproof.core import possible

    rng = np.random.default_rng(10)
    checked = 0
    for k in range(120):
        p = random_position(shape22, rng, keep=0.85, done_l=(k % 2 == 0))
        if (stat(p.m) == 0).any():
            continue
        q1 = process(p)
        q2 = chaotic_fixpoint(p, rng)
        if masks_equal(q1, q2):
            checked += 1
            continue
        assert not possible(q1) and not possible(q2)
    assert checked >= 40


def test_process_preserves_covered_structures(shape22):
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(200):
        p = random_position(shape22, rng, keep=0.85)
        if (stat(p.m) == 0).any():
            continue
        before = covered_structures(p)
        after = covered_structures(process(p))
        assert sorted(before) == sorted(after)
        checked += 1
    assert checked >= 150


def test_batch_matches_single(shape32):
    rng = np.random.default_rng(12)
    ps = [random_position(shape32, rng, keep=0.8) for _ in range(10)]
    batch = process_batch(Batch(shape32, ps))
    for before, after in zip(ps, batch.positions):
        assert masks_equal(after, process(before))
    assert batch.length == 10


def test_batch_shape_mismatch(shape32, shape22):
    p32 = random_position(shape32, np.random.default_rng(0))
    with pytest.raises(ValueError):
        Batch(shape22, [p32])
