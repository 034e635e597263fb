import math

import numpy as np
import pytest
import torch

from seeg_pretrain.exception import ParameterError, ShapeError, StateError
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.modeling.losses import content_aware_loss, masked_l1_loss, total_loss
from seeg_pretrain.modeling.nn import (
    LAYER_NORM_EPS,
    EncoderLayer,
    Lamb,
    MultiHeadSelfAttention,
    backward,
    build_adamw,
    dropout,
    gelu,
    lamb_step,
    xavier_init_,
    xavier_uniform_init,
)


def _linear(x, layer):
    return x @ layer.weight.T + layer.bias


def _layer_norm(x, norm):
    mean = x.mean(dim=-1, keepdim=True)
    var = ((x - mean) ** 2).mean(dim=-1, keepdim=True)
    return (x - mean) / torch.sqrt(var + LAYER_NORM_EPS) * norm.weight + norm.bias


class TestActivations:
    def test_gelu_is_exact(self):
        x = torch.tensor([1.0], dtype=torch.float64)
        assert float(gelu(x)) == pytest.approx(0.5 * (1 + math.erf(1 / math.sqrt(2))), abs=1e-12)

    def test_dropout_eval_is_identity(self):
        x = torch.randn(5, 7)
        assert dropout(x, 0.5, training=False) is x

    def test_dropout_scales_kept_values(self):
        x = torch.ones(2000)
        out = dropout(x, 0.25, training=True, generator=torch.Generator().manual_seed(0))
        kept = out[out != 0]
        torch.testing.assert_close(kept, torch.full_like(kept, 1 / 0.75))
        assert abs(float(out.mean()) - 1.0) < 0.05


class TestAttention:
    def test_weights_rows_sum_to_one(self):
        torch.manual_seed(0)
        attention = MultiHeadSelfAttention(16, 4).double()
        _, weights = attention(torch.randn(3, 9, 16, dtype=torch.float64))
        assert weights.shape == (3, 4, 9, 9)
        torch.testing.assert_close(weights.sum(-1), torch.ones(3, 4, 9, dtype=torch.float64), atol=1e-10, rtol=0)

    def test_heads_must_divide_width(self):
        with pytest.raises(ParameterError):
            MultiHeadSelfAttention(10, 3)


class TestEncoderLayer:
    @pytest.fixture
    def layer(self):
        torch.manual_seed(3)
        return EncoderLayer(8, 2, 16, 0.1).double().eval()

    def test_eval_is_deterministic(self, layer):
        x = torch.randn(5, 8, dtype=torch.float64)
        assert torch.equal(layer(x), layer(x))

    @pytest.mark.parametrize("m", [1, 4, 17])
    def test_shape_preserved(self, layer, m):
        assert layer(torch.randn(2, m, 8, dtype=torch.float64)).shape == (2, m, 8)

    def test_single_frame_single_head_oracle(self):
        torch.manual_seed(5)
        layer = EncoderLayer(8, 1, 16, 0.1).double().eval()
        x = torch.randn(1, 8, dtype=torch.float64)
        with torch.no_grad():
            # one frame attends only to itself
            attended = _linear(_linear(x, layer.attention.value), layer.attention.output)
            h = _layer_norm(x + attended, layer.attention_norm)
            inner = _linear(h, layer.feed_forward.inner)
            ff = _linear(0.5 * inner * (1 + torch.erf(inner / math.sqrt(2))), layer.feed_forward.outer)
            expected = _layer_norm(h + ff, layer.output_norm)
            torch.testing.assert_close(layer(x), expected, atol=1e-10, rtol=0)

    def test_normalised_rows(self, layer):
        with torch.no_grad():
            out = layer(torch.randn(6, 8, dtype=torch.float64) * 10)
        assert float(out.mean(-1).abs().max()) <= 1e-10
        torch.testing.assert_close(out.var(-1, unbiased=False), torch.ones(6, dtype=torch.float64), atol=1e-6, rtol=0)

    def test_width_mismatch(self, layer):
        with pytest.raises(ShapeError):
            layer(torch.randn(3, 7, dtype=torch.float64))


class TestBackward:
    def test_sum_gives_ones(self):
        w = torch.randn(3, 4, requires_grad=True)
        backward(w.sum())
        torch.testing.assert_close(w.grad, torch.ones(3, 4))

    def test_chain_rule(self):
        w = torch.tensor(3.0, dtype=torch.float64, requires_grad=True)
        backward((w * 2.0) ** 2)
        assert float(w.grad) == 24.0

    def test_without_forward(self):
        with pytest.raises(StateError):
            backward(torch.tensor(1.0))

    def test_non_scalar(self):
        w = torch.randn(3, requires_grad=True)
        with pytest.raises(ShapeError):
            backward(w * 2)

    @pytest.mark.parametrize("loss_fn", [masked_l1_loss, content_aware_loss])
    def test_encoder_gradients_match_finite_differences(self, tiny_encoder_cfg, loss_fn):
        model = SpectrogramEncoder(tiny_encoder_cfg, seed=1).double().eval()
        gen = torch.Generator().manual_seed(2)
        y = torch.randn(8, 6, generator=gen, dtype=torch.float64)
        target = torch.randn(8, 6, generator=gen, dtype=torch.float64) * 2
        mask = torch.rand(8, 6, generator=gen) < 0.5

        backward(loss_fn(target, model(y), mask))
        h = 1e-5
        with torch.no_grad():
            for name, p in model.named_parameters():
                flat = p.view(-1)
                numeric = torch.empty_like(flat)
                for i in range(flat.numel()):
                    original = float(flat[i])
                    flat[i] = original + h
                    up = float(loss_fn(target, model(y), mask))
                    flat[i] = original - h
                    down = float(loss_fn(target, model(y), mask))
                    flat[i] = original
                    numeric[i] = (up - down) / (2 * h)
                np.testing.assert_allclose(p.grad.view(-1).numpy(), numeric.numpy(), rtol=1e-4, atol=1e-7, err_msg=name)

    @pytest.mark.parametrize("seed", range(20))
    def test_total_loss_gradients_match_finite_differences(self, tiny_encoder_cfg, seed):
        model = SpectrogramEncoder(tiny_encoder_cfg, seed=seed).double().eval()
        gen = torch.Generator().manual_seed(100 + seed)
        y = torch.randn(8, 6, generator=gen, dtype=torch.float64)
        target = torch.randn(8, 6, generator=gen, dtype=torch.float64) * 2
        mask = torch.rand(8, 6, generator=gen) < 0.5

        def loss():
            return total_loss(target, model(y), mask, gamma=1.0, alpha=0.5).total

        backward(loss())
        h = 1e-5
        with torch.no_grad():
            for name, p in model.named_parameters():
                flat = p.view(-1)
                picked = torch.randperm(flat.numel(), generator=gen)[:6]
                numeric = torch.empty(picked.numel(), dtype=torch.float64)
                for k, i in enumerate(picked.tolist()):
                    original = float(flat[i])
                    flat[i] = original + h
                    up = float(loss())
                    flat[i] = original - h
                    down = float(loss())
                    flat[i] = original
                    numeric[k] = (up - down) / (2 * h)
                np.testing.assert_allclose(
                    p.grad.view(-1)[picked].numpy(), numeric.numpy(), rtol=1e-4, atol=1e-7, err_msg=name
                )


class TestXavier:
    def test_square_bound(self):
        w = xavier_uniform_init((3, 3), rng_seed=0)
        assert float(w.abs().max()) <= 1.0

    def test_same_seed(self):
        assert torch.equal(xavier_uniform_init((4, 6), 7), xavier_uniform_init((4, 6), 7))

    def test_mean_near_zero(self):
        w = xavier_uniform_init((1000, 1000), 1, dtype=torch.float64)
        bound = math.sqrt(6.0 / 2000)
        sigma = bound / math.sqrt(3) / 1000
        assert abs(float(w.mean())) <= 3 * sigma
        assert float(w.abs().max()) <= bound

    def test_rejects_non_matrix(self):
        with pytest.raises(ShapeError):
            xavier_uniform_init((3,), 0)

    def test_module_init_zeroes_biases(self):
        layer = EncoderLayer(8, 2, 16)
        xavier_init_(layer, torch.Generator().manual_seed(0))
        assert float(layer.feed_forward.inner.bias.abs().sum()) == 0.0
        assert float(layer.feed_forward.inner.weight.abs().max()) <= math.sqrt(6.0 / 24)


class TestLamb:
    def test_zero_gradient_is_noop(self):
        p = torch.randn(5, dtype=torch.float64)
        before = p.clone()
        lamb_step(p, torch.zeros_like(p), {}, lr=0.1)
        assert torch.equal(p, before)

    def test_first_scalar_step(self):
        p = torch.tensor([1.0], dtype=torch.float64)
        state = {}
        lamb_step(p, torch.tensor([0.5], dtype=torch.float64), state, lr=0.01)
        m_hat, v_hat = 0.05 / 0.1, 0.00025 / 0.001
        update = m_hat / (math.sqrt(v_hat) + 1e-6)
        assert float(p) == pytest.approx(1.0 - 0.01 * (1.0 / update) * update, abs=1e-12)
        assert state["step"] == 1

    def test_trust_ratio_homogeneity(self, rng):
        base = torch.as_tensor(rng.normal(size=20))
        grad = torch.as_tensor(rng.normal(size=20))
        p1, p2 = base.clone(), 2 * base.clone()
        lamb_step(p1, grad, {}, lr=0.05)
        lamb_step(p2, grad, {}, lr=0.05)
        change1 = torch.linalg.vector_norm(p1 - base)
        change2 = torch.linalg.vector_norm(p2 - 2 * base)
        assert float(change2) == pytest.approx(2 * float(change1), rel=1e-9)

    def test_optimizer_matches_functional_step(self):
        torch.manual_seed(0)
        a = torch.nn.Parameter(torch.randn(4, 3, dtype=torch.float64))
        b = a.detach().clone()
        optimizer = Lamb([a], lr=0.01, weight_decay=0.01)
        state = {}
        for _ in range(3):
            a.grad = torch.ones_like(a)
            optimizer.step()
            lamb_step(b, torch.ones_like(b), state, 0.01, weight_decay=0.01)
        torch.testing.assert_close(a.detach(), b)

    def test_invalid_learning_rate(self):
        with pytest.raises(ParameterError):
            Lamb([torch.nn.Parameter(torch.zeros(1))], lr=-1.0)


class TestAdamW:
    def test_decoupled_decay(self):
        p = torch.nn.Parameter(torch.tensor([2.0, -4.0], dtype=torch.float64))
        optimizer = build_adamw([p], lr=1e-3, weight_decay=0.01)
        p.grad = torch.zeros_like(p)
        optimizer.step()
        torch.testing.assert_close(p.detach(), torch.tensor([2.0, -4.0], dtype=torch.float64) * (1 - 1e-5))

    def test_no_decay_no_gradient(self):
        p = torch.nn.Parameter(torch.tensor([1.5], dtype=torch.float64))
        optimizer = build_adamw([p], lr=1e-3, weight_decay=0.0)
        p.grad = torch.zeros_like(p)
        optimizer.step()
        assert float(p) == 1.5

    def test_first_step_magnitude(self):
        p = torch.nn.Parameter(torch.tensor([0.0, 0.0], dtype=torch.float64))
        optimizer = build_adamw([p], lr=1e-3, weight_decay=0.0)
        p.grad = torch.tensor([0.3, -2.0], dtype=torch.float64)
        optimizer.step()
        torch.testing.assert_close(p.detach().abs(), torch.full((2,), 1e-3, dtype=torch.float64), atol=1e-8, rtol=0)
