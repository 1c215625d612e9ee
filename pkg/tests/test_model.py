import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    brute_force_nll,
    dense_gradients,
    finite_difference_gradients,
    loop_prediction,
    random_instance,
    relative_error,
)
from sne.model import (
    AdagradState,
    Distribution,
    Gradients,
    Mode,
    NegativeSampler,
    SampledSoftmaxConfig,
    SneModel,
    adagrad_step,
    candidate_nll_grad,
    full_softmax_nll,
    full_softmax_nll_grad,
    node_representation,
    predict_embedding,
    representations,
    sampled_softmax_nll_grad,
    score,
    softmax_probs,
)
from sne.walks import WalkSample


def fixed_model(src, tgt=None, c_pos=None, c_neg=None, bias=None):
    src = np.asarray(src, dtype=float)
    n, d = src.shape
    return SneModel(
        src,
        np.zeros((n, d)) if tgt is None else np.asarray(tgt, dtype=float),
        np.ones(d) if c_pos is None else np.asarray(c_pos, dtype=float),
        np.ones(d) if c_neg is None else np.asarray(c_neg, dtype=float),
        np.zeros(n) if bias is None else np.asarray(bias, dtype=float),
    )


class TestPrediction:
    def test_identity_context(self):
        m = fixed_model([[1.0, -2.0, 3.0], [4.0, 5.0, 6.0]])
        h = predict_embedding(m, WalkSample((1,), (1,), 0))
        assert np.array_equal(h, m.src_emb[1])

    def test_zero_positive_vector(self):
        m = fixed_model([[1.0, 2.0], [3.0, -1.0]], c_pos=[0, 0], c_neg=[2.0, -1.0])
        h = predict_embedding(m, WalkSample((0, 1), (1, -1), 0))
        assert np.array_equal(h, m.c_neg * m.src_emb[1])

    def test_hand_example(self):
        m = fixed_model([[1.0, 2.0], [3.0, -1.0]], c_pos=[0.5, 0.5], c_neg=[-1.0, 1.0])
        sample = WalkSample((0, 1), (1, -1), 0)
        h = predict_embedding(m, sample)
        assert np.allclose(h, loop_prediction(m, sample), rtol=0, atol=1e-15)
        assert h.tolist() == [-2.5, 0.0]

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            m, s = random_instance(rng)
            np.testing.assert_allclose(predict_embedding(m, s), loop_prediction(m, s), atol=1e-12)


class TestScore:
    def test_orthogonal(self):
        m = fixed_model([[0.0, 0.0]], tgt=[[0.0, 3.0]])
        assert score(m, np.array([2.0, 0.0]), 0) == 0.0

    def test_self_inner_product(self):
        h = np.array([1.5, -2.0, 0.5])
        m = fixed_model(np.zeros((1, 3)), tgt=[h])
        assert score(m, h, 0) == pytest.approx(h @ h)

    def test_hand_example(self):
        m = fixed_model(np.zeros((1, 2)), tgt=[[2.0, 7.0]], bias=[0.5])
        assert score(m, np.array([-2.5, 0.0]), 0) == -4.5


class TestFullSoftmax:
    def test_single_node(self):
        m = fixed_model([[1.0, 2.0]], tgt=[[3.0, 4.0]], bias=[7.0])
        assert full_softmax_nll(m, WalkSample((0,), (1,), 0)) == 0.0

    def test_uniform_scores(self):
        m = fixed_model(np.ones((6, 2)))
        assert full_softmax_nll(m, WalkSample((2,), (-1,), 4)) == pytest.approx(math.log(6), abs=1e-15)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(12345)
        m = SneModel(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)), rng.normal(size=3),
                     rng.normal(size=3), rng.normal(size=5))
        s = WalkSample((4, 1, 4), (1, -1, -1), 2)
        assert abs(full_softmax_nll(m, s) - brute_force_nll(m, s)) < 1e-12

    def test_overflow_safe(self):
        m = fixed_model([[100.0]], tgt=[[100.0]] * 3, bias=[0.0, 1.0, 2.0])
        loss = full_softmax_nll(m, WalkSample((0,), (1,), 0))
        assert math.isfinite(loss)
        assert loss == pytest.approx(math.log(1 + math.e + math.e ** 2) - 0.0, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_probabilities_sum_to_one(self, seed):
        m, s = random_instance(np.random.default_rng(seed), max_nodes=100)
        p = softmax_probs(m, s)
        assert abs(p.sum() - 1.0) < 1e-9
        assert -math.log(p[s.target]) == pytest.approx(full_softmax_nll(m, s), abs=1e-9)


class TestGradients:
    @pytest.mark.parametrize("unsigned", [False, True])
    def test_full_softmax_matches_finite_differences(self, unsigned):
        rng = np.random.default_rng(7 + unsigned)
        for _ in range(10):
            m, s = random_instance(rng, unsigned=unsigned)
            grads = dense_gradients(m, full_softmax_nll_grad(m, s))
            fd = finite_difference_gradients(lambda mm: full_softmax_nll(mm, s), m)
            for name in fd:
                assert relative_error(grads[name], fd[name]) < 1e-4, name

    def test_loss_matches_nll(self):
        rng = np.random.default_rng(1)
        m, s = random_instance(rng)
        assert full_softmax_nll_grad(m, s).loss == pytest.approx(full_softmax_nll(m, s), abs=1e-12)

    def test_repeated_path_node_accumulates(self):
        m = fixed_model([[1.0, 2.0], [0.5, -1.0]], tgt=[[1.0, 0.0], [0.0, 1.0]],
                        c_pos=[2.0, 1.0], c_neg=[-1.0, 0.5])
        s = WalkSample((0, 0, 1), (1, -1, 1), 1)
        g = full_softmax_nll_grad(m, s)
        assert sorted(g.src_rows.tolist()) == [0, 1]
        fd = finite_difference_gradients(lambda mm: full_softmax_nll(mm, s), m)
        assert relative_error(dense_gradients(m, g)["src"], fd["src"]) < 1e-6

    def test_sampled_with_frozen_negatives_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m, s = random_instance(rng, max_nodes=20)
            if m.num_nodes < 3:
                continue
            cfg = SampledSoftmaxConfig(num_samples=int(rng.integers(1, m.num_nodes)))
            negs, q = NegativeSampler(m.num_nodes, cfg).sample(s.target, rng)
            grads = dense_gradients(m, candidate_nll_grad(m, s, negs, q))
            fd = finite_difference_gradients(lambda mm: candidate_nll_grad(mm, s, negs, q).loss, m)
            for name in fd:
                assert relative_error(grads[name], fd[name]) < 1e-4, name

    def test_sampled_equals_full_with_every_negative(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m, s = random_instance(rng)
            cfg = SampledSoftmaxConfig(num_samples=m.num_nodes - 1) if m.num_nodes > 1 else None
            if cfg is None:
                continue
            sampled = sampled_softmax_nll_grad(m, s, cfg, rng)
            assert not sampled.full
            full = full_softmax_nll_grad(m, s)
            assert abs(sampled.loss - full.loss) < 1e-10
            a, b = dense_gradients(m, sampled), dense_gradients(m, full)
            for name in a:
                np.testing.assert_allclose(a[name], b[name], rtol=0, atol=1e-10)

    def test_target_bias_gradient_negative(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m, s = random_instance(rng)
            for g in (full_softmax_nll_grad(m, s),
                      sampled_softmax_nll_grad(m, s, SampledSoftmaxConfig(max(1, m.num_nodes // 2)), rng)):
                b = dense_gradients(m, g)["bias"][s.target]
                p = math.exp(-g.loss)
                assert b < 0
                assert b == pytest.approx(p - 1, abs=1e-12)

    def test_fallback_flag(self):
        rng = np.random.default_rng(0)
        m, s = random_instance(rng, n=6)
        g = sampled_softmax_nll_grad(m, s, SampledSoftmaxConfig(num_samples=6), rng)
        assert g.full
        assert len(g.tgt_rows) == 6


class TestNegativeSampler:
    @pytest.mark.parametrize("dist", list(Distribution))
    def test_distinct_and_exclude_target(self, dist):
        rng = np.random.default_rng(0)
        degrees = rng.integers(1, 30, size=50)
        sampler = NegativeSampler(50, SampledSoftmaxConfig(20, dist), degrees=degrees)
        for target in range(50):
            negs, q = sampler.sample(target, rng)
            assert len(set(negs.tolist())) == 20
            assert target not in negs.tolist()
            assert np.all(q > 0)

    def test_uniform_is_uniform(self):
        rng = np.random.default_rng(1)
        sampler = NegativeSampler(6, SampledSoftmaxConfig(1))
        counts = np.bincount([sampler.sample(2, rng)[0][0] for _ in range(6000)], minlength=6)
        assert counts[2] == 0
        expected = 6000 / 5
        sigma = math.sqrt(6000 * 0.2 * 0.8)
        assert np.all(np.abs(np.delete(counts, 2) - expected) < 4 * sigma)

    def test_log_uniform_prefers_high_degree(self):
        sampler = NegativeSampler(4, SampledSoftmaxConfig(1, "log-uniform"), degrees=[1, 9, 5, 3])
        assert np.argmax(sampler.probs) == 1
        assert sampler.probs.sum() == pytest.approx(1.0)
        assert sampler.probs[1] > sampler.probs[2] > sampler.probs[3] > sampler.probs[0]

    def test_log_uniform_needs_degrees(self):
        with pytest.raises(ValueError):
            NegativeSampler(4, SampledSoftmaxConfig(1, "log-uniform"))

    def test_too_many(self):
        sampler = NegativeSampler(3, SampledSoftmaxConfig(3))
        assert sampler.falls_back
        with pytest.raises(ValueError):
            sampler.sample(0, np.random.default_rng(0))


def _scalar_grads(model, g_src0):
    d = model.dim
    return Gradients(0.0, np.array([0]), np.array([g_src0]), np.array([], dtype=int),
                     np.zeros((0, d)), np.array([], dtype=int), np.zeros(0),
                     np.zeros(d), np.zeros(d))


class TestAdagrad:
    def test_zero_gradient_is_noop(self):
        rng = np.random.default_rng(0)
        m, s = random_instance(rng)
        state = AdagradState.for_model(m)
        before = m.copy()
        g = full_softmax_nll_grad(m, s)
        for arr in (g.src, g.tgt, g.bias, g.c_pos, g.c_neg):
            arr[...] = 0
        adagrad_step(m, state, g)
        for a, b in ((m.src_emb, before.src_emb), (m.tgt_emb, before.tgt_emb),
                     (m.c_pos, before.c_pos), (m.c_neg, before.c_neg), (m.bias, before.bias)):
            assert np.array_equal(a, b)
        for acc in (state.src, state.tgt, state.c_pos, state.c_neg, state.bias):
            assert not acc.any()

    def test_first_step_normalised(self):
        m = fixed_model([[1.0]])
        state = AdagradState.for_model(m, lr=0.1, eps=1e-8)
        adagrad_step(m, state, _scalar_grads(m, [3.0]))
        assert m.src_emb[0, 0] - 1.0 == pytest.approx(-0.1 * 3 / (3 + 1e-8), abs=1e-15)
        assert state.src[0, 0] == 9.0

    def test_steps_shrink(self):
        m = fixed_model([[1.0]])
        state = AdagradState.for_model(m)
        x0 = m.src_emb[0, 0]
        adagrad_step(m, state, _scalar_grads(m, [2.0]))
        x1 = m.src_emb[0, 0]
        adagrad_step(m, state, _scalar_grads(m, [2.0]))
        x2 = m.src_emb[0, 0]
        assert abs(x2 - x1) < abs(x1 - x0)

    def test_sparse_rows_untouched(self):
        rng = np.random.default_rng(2)
        m, _ = random_instance(rng, n=20)
        state = AdagradState.for_model(m)
        before = m.copy()
        s = WalkSample((3, 5), (1, -1), 7)
        g = sampled_softmax_nll_grad(m, s, SampledSoftmaxConfig(4), rng)
        adagrad_step(m, state, g)
        touched_src = set(g.src_rows.tolist())
        touched_tgt = set(g.tgt_rows.tolist())
        assert touched_src == {3, 5}
        assert 7 in touched_tgt and len(touched_tgt) == 5
        for v in range(20):
            assert np.array_equal(m.src_emb[v], before.src_emb[v]) == (v not in touched_src)
            assert np.array_equal(m.tgt_emb[v], before.tgt_emb[v]) == (v not in touched_tgt)
            assert (m.bias[v] == before.bias[v]) == (v not in touched_tgt)

    def test_accumulators_monotone(self):
        rng = np.random.default_rng(4)
        m, s = random_instance(rng)
        state = AdagradState.for_model(m)
        prev = state.tgt.copy()
        for _ in range(5):
            adagrad_step(m, state, full_softmax_nll_grad(m, s))
            assert np.all(state.tgt >= prev)
            prev = state.tgt.copy()


class TestRepresentation:
    def test_modes(self):
        m = fixed_model([[1.0, 2.0]], tgt=[[3.0, 4.0]])
        assert node_representation(m, 0, Mode.CONCAT).tolist() == [1.0, 2.0, 3.0, 4.0]
        assert node_representation(m, 0, "st").shape == (2 * m.dim,)
        assert np.array_equal(node_representation(m, 0, "s"), m.src_emb[0])
        assert np.array_equal(representations(m, "st")[0], node_representation(m, 0, "st"))


class TestInvariants:
    def test_init(self):
        m = SneModel.init(30, 10, np.random.default_rng(0))
        assert np.all(np.abs(m.src_emb) <= 0.05) and np.all(np.abs(m.tgt_emb) <= 0.05)
        assert np.all(np.abs(m.c_pos - 1) <= 0.01) and np.all(np.abs(m.c_neg - 1) <= 0.01)
        assert not np.array_equal(m.c_pos, m.c_neg)
        assert m.c_pos is not m.c_neg
        assert not m.bias.any()
        u = SneModel.init(30, 10, np.random.default_rng(0), unsigned=True)
        assert u.c_pos is u.c_neg

    def test_sign_flip_changes_prediction(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            m, s = random_instance(rng)
            i = int(rng.integers(len(s.path)))
            flipped = list(s.signs)
            flipped[i] = -flipped[i]
            other = WalkSample(s.path, tuple(flipped), s.target)
            assert not np.allclose(predict_embedding(m, s), predict_embedding(m, other))

    def test_unsigned_loss_ignores_signs(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            m, s = random_instance(rng, unsigned=True)
            base = full_softmax_nll(m, s)
            for perm in set(itertools.permutations(s.signs)):
                other = WalkSample(s.path, perm, s.target)
                assert full_softmax_nll(m, other) == pytest.approx(base, abs=1e-12)
            flipped = WalkSample(s.path, tuple(-x for x in s.signs), s.target)
            assert full_softmax_nll(m, flipped) == pytest.approx(base, abs=1e-12)
