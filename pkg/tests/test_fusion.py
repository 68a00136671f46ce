import numpy as np
import pytest

from scdetect.autodiff import constant, grad_check, row_softmax, sum_all
from scdetect.model.fusion import (
    adaptive_fuse,
    aggregate,
    bce_loss,
    classify,
    classify_scores,
    cross_attend,
    fuse_modalities,
    init_classifier,
    init_fusion,
    self_attend,
)
from scdetect.model.params import ParamStore

DIM = 8
HEADS = 2


def store(seed=0):
    return ParamStore(np.random.default_rng(seed))


def rand_modality(rows, seed):
    return constant(np.random.default_rng(seed).normal(size=(rows, DIM)))


class TestAggregate:
    def test_single_modality_is_identity(self):
        z = rand_modality(3, 0)
        (h,) = aggregate([z], {})
        assert h is z

    def test_two_modality_reduction(self):
        # with N = 2 the normalizer is 1, so H_1 = Z_1 + C_{1->2} exactly
        z1, z2 = rand_modality(3, 1), rand_modality(4, 2)
        c12, c21 = rand_modality(3, 3), rand_modality(4, 4)
        h = aggregate([z1, z2], {(0, 1): c12, (1, 0): c21})
        assert np.allclose(h[0].data, z1.data + c12.data)
        assert np.allclose(h[1].data, z2.data + c21.data)

    def test_three_modality_normalizer(self):
        z = [rand_modality(2, i) for i in range(3)]
        cross = {(i, j): rand_modality(2, 10 + 3 * i + j) for i in range(3) for j in range(3) if i != j}
        h = aggregate(z, cross)
        expected = z[0].data + 0.5 * (cross[(0, 1)].data + cross[(0, 2)].data)
        assert np.allclose(h[0].data, expected)


class TestAdaptiveFuse:
    def test_weights_sum_to_one(self):
        s = store()
        params = init_fusion(s, 3, DIM)
        params.weights.value.data[:] = np.random.default_rng(5).normal(size=(1, 3))
        alpha = row_softmax(params.weights.value).data
        assert abs(alpha.sum() - 1.0) < 1e-12

    def test_fused_shape(self):
        s = store()
        params = init_fusion(s, 2, DIM)
        out = adaptive_fuse([rand_modality(3, 0), rand_modality(5, 1)], params)
        assert out.shape == (1, DIM)

    def test_softmax_shift_invariance(self):
        s = store()
        params = init_fusion(s, 2, DIM)
        h = [rand_modality(3, 0), rand_modality(5, 1)]
        a = adaptive_fuse(h, params).data.copy()
        params.weights.value.data += 123.0  # shared shift leaves softmax unchanged
        b = adaptive_fuse(h, params).data
        assert np.allclose(a, b, atol=1e-12)


class TestFuseModalities:
    def test_full_pipeline_shape(self):
        s = store()
        params = init_fusion(s, 3, DIM)
        mods = [rand_modality(r, i) for i, r in enumerate((3, 4, 2))]
        out = fuse_modalities(mods, params, HEADS)
        assert out.shape == (1, DIM)

    def test_wrong_modality_count(self):
        s = store()
        params = init_fusion(s, 2, DIM)
        with pytest.raises(ValueError):
            fuse_modalities([rand_modality(2, 0)], params, HEADS)

    def test_permutation_equivariance(self):
        """Swapping two modalities along with their per-modality parameters
        leaves the fused vector unchanged (the cross-attention set is shared)."""
        s = store()
        params = init_fusion(s, 2, DIM)
        m0, m1 = rand_modality(3, 0), rand_modality(4, 1)
        out = fuse_modalities([m0, m1], params, HEADS).data.copy()

        swapped = init_fusion(store(1), 2, DIM)  # fresh container, then copy swapped
        swapped.cross_attn = params.cross_attn
        swapped.self_attn = [params.self_attn[1], params.self_attn[0]]
        swapped.proj_w = [params.proj_w[1], params.proj_w[0]]
        swapped.proj_b = [params.proj_b[1], params.proj_b[0]]
        swapped.weights.value.data[:] = params.weights.value.data[:, ::-1]
        out_swapped = fuse_modalities([m1, m0], swapped, HEADS).data
        assert np.allclose(out, out_swapped, atol=1e-12)

    def test_gradients(self):
        s = store()
        params = init_fusion(s, 2, DIM)
        mods = [rand_modality(3, 0), rand_modality(4, 1)]
        report = grad_check(
            lambda: sum_all(fuse_modalities(mods, params, HEADS)),
            s.values(),
            rng=np.random.default_rng(0),
            max_coords=2,
        )
        assert report.passed, report.worst


class TestClassifier:
    def make(self, labels=4, tau=0.5):
        s = store()
        return s, init_classifier(s, DIM, hidden=6, labels=labels, tau=tau)

    def test_scores_in_unit_interval(self):
        _, params = self.make()
        p = classify_scores(rand_modality(1, 0), params)
        assert p.shape == (1, 4)
        assert ((p.data > 0) & (p.data < 1)).all()

    def test_threshold_uses_geq(self):
        _, params = self.make()
        pred = classify(rand_modality(1, 0), params)
        assert np.array_equal(pred.labels, pred.probabilities >= 0.5)

    def test_zero_logits_hit_tau_boundary(self):
        s = store()
        params = init_classifier(s, DIM, hidden=6, labels=3, tau=0.5)
        for p in (params.w1, params.b1, params.w2, params.b2):
            p.value.data[:] = 0.0
        pred = classify(constant(np.zeros((1, DIM))), params)
        assert np.allclose(pred.probabilities, 0.5)
        assert pred.labels.all()  # p == tau counts as positive


class TestBceLoss:
    def test_matches_manual_formula(self):
        _, params = TestClassifier().make()
        p = classify_scores(rand_modality(1, 3), params)
        y = np.array([1.0, 0.0, 1.0, 0.0])
        loss = bce_loss(p, y).item()
        q = p.data[0]
        manual = -np.mean(y * np.log(q) + (1 - y) * np.log(1 - q))
        assert abs(loss - manual) < 1e-12

    def test_perfect_prediction_is_near_zero(self):
        p = constant(np.array([[1.0 - 1e-12, 1e-12]]))
        assert bce_loss(p, np.array([1.0, 0.0])).item() < 1e-9

    def test_extreme_probabilities_stay_finite(self):
        p = constant(np.array([[0.0, 1.0]]))
        loss = bce_loss(p, np.array([1.0, 0.0])).item()
        assert np.isfinite(loss)

    def test_shape_mismatch(self):
        p = constant(np.zeros((1, 3)) + 0.5)
        with pytest.raises(ValueError):
            bce_loss(p, np.array([1.0, 0.0]))

    def test_gradient(self):
        s, params = TestClassifier().make()
        x = rand_modality(1, 9)
        y = np.array([1.0, 0.0, 1.0, 1.0])
        report = grad_check(
            lambda: bce_loss(classify_scores(x, params), y),
            s.values(),
            rng=np.random.default_rng(0),
        )
        assert report.passed, report.worst


class TestSelfCrossAttend:
    def test_self_attend_shape(self):
        s = store()
        params = init_fusion(s, 1, DIM)
        m = rand_modality(5, 0)
        assert self_attend(m, params.self_attn[0], HEADS).shape == (5, DIM)

    def test_cross_attend_query_length(self):
        s = store()
        params = init_fusion(s, 2, DIM)
        out = cross_attend(rand_modality(3, 0), rand_modality(7, 1), params.cross_attn, HEADS)
        assert out.shape == (3, DIM)
