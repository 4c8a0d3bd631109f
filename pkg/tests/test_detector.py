import math
import pytest
import torch
from pydantic import ValidationError
from detector.model import count_parameters, decide, forward, init_detector, predict
from schemas.detector import DetectorConfig
from utils.exceptions import ConfigError, DetectorInputError


def tiny_config(**overrides) -> DetectorConfig:
    values = {"input_dim": 8, "model_dim": 8, "heads": 2, "blocks": 2, "ffn_dim": 16, "dropout": 0.0, "seed": 0}
    values.update(overrides)
    return DetectorConfig(**values)


class TestInitDetector:
    def test_parameter_count_without_projection(self):
        model = init_detector(DetectorConfig(input_dim=768))
        count = count_parameters(model)
        # 2 * (4*128*128 + 4*128 + 2*128*256 + 256 + 128 + 4*128) + (128*2 + 2)
        assert count == 265_218
        assert 250_000 <= count <= 350_000
        assert count_parameters(model, include_projection=True) == count + 768 * 128 + 128

    def test_same_seed_same_weights(self):
        a = init_detector(tiny_config(seed=4)).state_dict()
        b = init_detector(tiny_config(seed=4)).state_dict()
        c = init_detector(tiny_config(seed=5)).state_dict()
        assert all(torch.equal(a[k], b[k]) for k in a)
        assert not all(torch.equal(a[k], c[k]) for k in a)

    def test_global_rng_untouched(self):
        torch.manual_seed(123)
        expected = torch.rand(3)
        torch.manual_seed(123)
        init_detector(tiny_config())
        assert torch.equal(torch.rand(3), expected)

    def test_heads_must_divide_width(self):
        with pytest.raises(ValidationError, match="divisible by heads"):
            DetectorConfig(input_dim=768, heads=5)

    def test_ffn_not_narrower_than_model(self):
        with pytest.raises(ValidationError, match="ffn_dim"):
            DetectorConfig(input_dim=768, ffn_dim=64)

    def test_input_dim_required(self):
        with pytest.raises(ConfigError):
            init_detector(DetectorConfig())


class TestForward:
    def test_padding_rows_never_matter(self):
        model = init_detector(tiny_config(seed=1)).eval()
        x = torch.randn(5, 8)
        reference = forward(model, x)
        for pad in (1, 4, 11):
            padded = torch.cat([x, 100 * torch.randn(pad, 8)]).unsqueeze(0)
            mask = torch.zeros(1, 5 + pad, dtype=torch.bool)
            mask[0, 5:] = True
            torch.testing.assert_close(forward(model, padded, mask)[0], reference, atol=1e-5, rtol=0)

    def test_batched_equals_single(self):
        model = init_detector(tiny_config(seed=2)).eval()
        short, long = torch.randn(2, 8), torch.randn(6, 8)
        batch = torch.zeros(2, 6, 8)
        batch[0, :2], batch[1] = short, long
        mask = torch.zeros(2, 6, dtype=torch.bool)
        mask[0, 2:] = True
        logits = forward(model, batch, mask)
        torch.testing.assert_close(logits[0], forward(model, short), atol=1e-5, rtol=0)
        torch.testing.assert_close(logits[1], forward(model, long), atol=1e-5, rtol=0)

    def test_single_utterance(self):
        model = init_detector(tiny_config()).eval()
        logits = forward(model, torch.randn(1, 8))
        assert logits.shape == (2,)
        assert torch.isfinite(logits).all()

    def test_order_matters_only_with_positions(self):
        x = torch.randn(7, 8)
        perm = torch.randperm(7)
        with_positions = init_detector(tiny_config(seed=3)).eval()
        assert not torch.allclose(forward(with_positions, x), forward(with_positions, x[perm]), atol=1e-5)

        without_positions = init_detector(tiny_config(seed=3, positional_encoding=False)).eval()
        torch.testing.assert_close(
            forward(without_positions, x), forward(without_positions, x[perm]), atol=1e-5, rtol=0
        )

    def test_non_finite_input(self):
        model = init_detector(tiny_config()).eval()
        x = torch.randn(3, 8)
        x[1, 2] = float("nan")
        with pytest.raises(DetectorInputError):
            forward(model, x)

    def test_fully_padded_sequence(self):
        model = init_detector(tiny_config()).eval()
        with pytest.raises(DetectorInputError):
            forward(model, torch.randn(1, 3, 8), torch.ones(1, 3, dtype=torch.bool))

    def test_gradients_match_finite_differences(self):
        model = init_detector(tiny_config(seed=6)).double().eval()
        x = torch.randn(3, 8, dtype=torch.float64, requires_grad=True)
        label = torch.tensor([1])

        def loss_of(features):
            return torch.nn.functional.cross_entropy(model(features).unsqueeze(0), label)

        assert torch.autograd.gradcheck(loss_of, (x,), atol=1e-5, rtol=1e-3)

        loss_of(x).backward()
        weights = {
            "projection": model.projection.weight,
            "attention": model.blocks[0].self_attn.in_proj_weight,
            "output": model.output.weight,
        }
        step = 1e-6
        # perturb through .data so every evaluation takes the same attention path as backward
        for name, weight in weights.items():
            analytic = weight.grad.clone()
            for i, j in [(0, 0), (1, 5), (1, 7)]:
                original = weight.data[i, j].item()
                weight.data[i, j] = original + step
                up = loss_of(x).item()
                weight.data[i, j] = original - step
                down = loss_of(x).item()
                weight.data[i, j] = original
                numeric = (up - down) / (2 * step)
                expected = analytic[i, j].item()
                assert abs(numeric - expected) <= 1e-4 * max(abs(numeric), abs(expected)) + 1e-7, (name, i, j)


class TestDecide:
    def test_tie_goes_to_negative(self):
        label, score = decide(torch.tensor([2.0, 2.0]))
        assert label == 0
        assert score == pytest.approx(0.5)

    def test_confident_positive(self):
        label, score = decide(torch.tensor([0.0, 1e4]))
        assert label == 1
        assert score == pytest.approx(1.0)

    def test_score_is_positive_class_probability(self):
        generator = torch.Generator().manual_seed(3)
        logits = torch.randn(50, 2, generator=generator, dtype=torch.float64) * 5
        for l0, l1 in logits.tolist():
            label, score = decide(torch.tensor([l0, l1]))
            assert score == pytest.approx(1.0 / (1.0 + math.exp(l0 - l1)), abs=1e-6)
            assert label == (1 if l1 > l0 else 0)

    def test_predict_returns_label_and_score(self):
        model = init_detector(tiny_config())
        label, score = predict(model, torch.randn(4, 8).numpy())
        assert label in (0, 1)
        assert 0.0 <= score <= 1.0
