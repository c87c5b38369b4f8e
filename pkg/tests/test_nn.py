import math

import numpy as np
import pytest

from semexpand.errors import ConfigError, DataFormatError, NumericError
from semexpand.nn import (
    CHECKPOINT_TAG,
    CnnClassifier,
    LstmClassifier,
    TrainConfig,
    build_model,
    cnn_output_lengths,
    evaluate,
    forward_cnn,
    forward_lstm,
    gradient_check,
    layers,
    load_model,
    save_model,
    train_classifier,
)
from semexpand.synthetic import make_separable_toyset


class TestConvAndPool:
    def test_conv_hand_values(self):
        x = np.array([[[1.0], [2.0], [3.0], [4.0]]])
        w = np.array([[1.0], [1.0]])
        b = np.array([0.5])
        out, _ = layers.conv1d_forward(x, w, b, kernel_width=2)
        assert np.allclose(out[0, :, 0], [3.5, 5.5, 7.5], atol=1e-12)

    def test_conv_matches_window_loop(self):
        rng = np.random.default_rng(20)
        x = rng.normal(size=(2, 7, 3))
        kw, filters = 3, 4
        w = rng.normal(size=(kw * 3, filters))
        b = rng.normal(size=filters)
        out, _ = layers.conv1d_forward(x, w, b, kernel_width=kw)
        assert out.shape == (2, 5, filters)
        for bi in range(2):
            for t in range(5):
                window = x[bi, t : t + kw, :].reshape(-1)
                assert np.abs(out[bi, t] - (window @ w + b)).max() < 1e-12

    def test_conv_rejects_short_sequence(self):
        with pytest.raises(ValueError):
            layers.conv1d_forward(np.zeros((1, 2, 1)), np.zeros((3, 1)), np.zeros(1), 3)

    def test_maxpool_hand_values_floor_tail(self):
        x = np.array([[[3.0], [1.0], [4.0], [1.0], [5.0]]])
        out, _ = layers.maxpool1d_forward(x, width=2)
        # tail element 5 is dropped by the floor
        assert out[0, :, 0].tolist() == [3.0, 4.0]

    def test_maxpool_matches_block_loop(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(3, 9, 2))
        out, _ = layers.maxpool1d_forward(x, width=2)
        assert out.shape == (3, 4, 2)
        for bi in range(3):
            for t in range(4):
                assert np.array_equal(out[bi, t], x[bi, 2 * t : 2 * t + 2].max(axis=0))

    def test_stage_lengths(self):
        assert cnn_output_lengths(20, 5, 2) == (16, 8, 4, 2)
        assert cnn_output_lengths(12, 5, 2) == (8, 4, 0, 0)


class TestSoftmaxCrossEntropy:
    def test_softmax_rows_are_distributions(self):
        rng = np.random.default_rng(22)
        logits = rng.normal(scale=5.0, size=(40, 6))
        probs = layers.softmax(logits)
        assert np.all(probs > 0)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-12

    def test_softmax_shift_invariance(self):
        logits = np.array([[1.0, 2.0, 3.0]])
        assert np.abs(layers.softmax(logits) - layers.softmax(logits + 100.0)).max() < 1e-12

    def test_cross_entropy_hand_value(self):
        probs = np.array([[0.5, 0.5], [0.25, 0.75]])
        expected = (math.log(2.0) + -math.log(0.75)) / 2
        assert abs(layers.cross_entropy(probs, np.array([0, 1])) - expected) < 1e-12

    def test_loss_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        logits = rng.normal(size=(3, 4))
        labels = np.array([1, 3, 0])
        grad = layers.softmax_cross_entropy_grad(layers.softmax(logits), labels)
        h = 1e-6
        for i in range(3):
            for j in range(4):
                bumped = logits.copy()
                bumped[i, j] += h
                dipped = logits.copy()
                dipped[i, j] -= h
                numeric = (
                    layers.cross_entropy(layers.softmax(bumped), labels)
                    - layers.cross_entropy(layers.softmax(dipped), labels)
                ) / (2 * h)
                assert abs(grad[i, j] - numeric) < 1e-8


class TestLstmRecurrence:
    def test_two_step_scalar_recurrence(self):
        w = np.array([[0.5, -0.3, 0.8, 0.2], [0.1, 0.4, -0.2, 0.6]])
        b = np.array([0.05, 1.0, -0.1, 0.3])
        x = np.array([[[0.7], [-1.2]]])
        h_seq, _ = layers.lstm_forward(x, w, b, hidden=1)

        def sigmoid(v):
            return 1.0 / (1.0 + math.exp(-v))

        h = c = 0.0
        expected = []
        for t in range(2):
            xv = x[0, t, 0]
            i = sigmoid(w[0, 0] * xv + w[1, 0] * h + b[0])
            f = sigmoid(w[0, 1] * xv + w[1, 1] * h + b[1])
            g = math.tanh(w[0, 2] * xv + w[1, 2] * h + b[2])
            o = sigmoid(w[0, 3] * xv + w[1, 3] * h + b[3])
            c = f * c + i * g
            h = o * math.tanh(c)
            expected.append(h)
        assert np.abs(h_seq[0, :, 0] - expected).max() < 1e-12

    def test_forget_gate_bias_starts_at_one(self):
        model = LstmClassifier(input_width=3, num_classes=2, hidden=4, seed=0)
        gate_b = model.params["gate_b"]
        assert np.array_equal(gate_b[4:8], np.ones(4))
        assert np.array_equal(gate_b[:4], np.zeros(4))
        assert np.array_equal(gate_b[8:], np.zeros(8))

    def test_masked_mean_hand_values(self):
        h_seq = np.array([[[2.0], [4.0], [99.0]]])
        mask = np.array([[1.0, 1.0, 0.0]])
        pooled, _ = layers.masked_mean_forward(h_seq, mask)
        assert pooled[0, 0] == 3.0

    def test_output_ignores_padding_content_and_length(self):
        rng = np.random.default_rng(24)
        model = LstmClassifier(input_width=3, num_classes=2, hidden=5, seed=1)
        x = rng.normal(size=(2, 4, 3))
        mask = np.array([[1.0, 1.0, 1.0, 0.0], [1.0, 1.0, 0.0, 0.0]])
        garbled = x.copy()
        garbled[mask == 0.0] = 1e6
        assert np.abs(model.forward(x, mask) - model.forward(garbled, mask)).max() < 1e-12

        longer = np.concatenate([x, rng.normal(size=(2, 3, 3))], axis=1)
        longer_mask = np.concatenate([mask, np.zeros((2, 3))], axis=1)
        assert np.abs(model.forward(x, mask) - model.forward(longer, longer_mask)).max() < 1e-9

    def test_empty_sequence_gets_uniform_prediction(self):
        model = LstmClassifier(input_width=2, num_classes=4, hidden=3, seed=0)
        x = np.ones((2, 3, 2))
        mask = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        probs = model.forward(x, mask)
        assert np.abs(probs[1] - 0.25).max() < 1e-12
        assert np.abs(probs[0] - 0.25).max() > 0.0  # real row is not forced uniform


class TestCnnModel:
    def test_rejects_too_short_max_len(self):
        with pytest.raises(ConfigError, match="max_len"):
            CnnClassifier(input_width=4, num_classes=2, max_len=12, kernel_width=5, pool_width=2)

    def test_rejects_wrong_input_width(self):
        model = CnnClassifier(input_width=4, num_classes=2, max_len=20)
        with pytest.raises(ValueError):
            model.forward(np.zeros((1, 20, 5)))

    def test_output_rows_are_distributions(self):
        rng = np.random.default_rng(25)
        model = CnnClassifier(
            input_width=4, num_classes=3, max_len=20, kernels=6, kernel_width=5, pool_width=2
        )
        probs = forward_cnn(model, rng.normal(size=(5, 20, 4)))
        assert probs.shape == (5, 3)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-9

    def test_trailing_padding_invariance_with_zero_extended_fc(self):
        rng = np.random.default_rng(26)
        kernels = 6
        short = CnnClassifier(
            input_width=3, num_classes=2, max_len=20, kernels=kernels, kernel_width=5,
            pool_width=2, seed=2,
        )
        longer = CnnClassifier(
            input_width=3, num_classes=2, max_len=28, kernels=kernels, kernel_width=5,
            pool_width=2, seed=2,
        )
        for name in ("conv1_w", "conv1_b", "conv2_w", "conv2_b"):
            longer.params[name] = short.params[name].copy()
        longer.params["fc_w"] = np.zeros_like(longer.params["fc_w"])
        longer.params["fc_w"][: short.flat_width] = short.params["fc_w"]
        longer.params["fc_b"] = short.params["fc_b"].copy()
        x = rng.normal(size=(4, 20, 3))
        padded = np.concatenate([x, np.zeros((4, 8, 3))], axis=1)
        assert np.abs(short.forward(x) - longer.forward(padded)).max() < 1e-6


class TestGradientChecks:
    def test_cnn_gradients(self):
        rng = np.random.default_rng(27)
        model = CnnClassifier(
            input_width=3, num_classes=3, max_len=10, kernels=4, kernel_width=3,
            pool_width=2, seed=3,
        )
        x = rng.normal(size=(4, 10, 3))
        y = np.array([0, 1, 2, 1])
        assert gradient_check(model, x, None, y) < 1e-4

    def test_lstm_gradients(self):
        rng = np.random.default_rng(28)
        model = LstmClassifier(input_width=3, num_classes=3, hidden=5, seed=4)
        x = rng.normal(size=(4, 6, 3))
        mask = np.ones((4, 6))
        mask[1, 4:] = 0.0
        mask[3, 2:] = 0.0
        y = np.array([2, 0, 1, 1])
        assert gradient_check(model, x, mask, y) < 1e-4

    def test_lstm_gradients_with_empty_sequence_row(self):
        rng = np.random.default_rng(29)
        model = LstmClassifier(input_width=2, num_classes=2, hidden=3, seed=5)
        x = rng.normal(size=(3, 4, 2))
        mask = np.ones((3, 4))
        mask[2] = 0.0  # uniform-output row must contribute zero gradient
        y = np.array([0, 1, 1])
        assert gradient_check(model, x, mask, y) < 1e-4


class TestTrainClassifier:
    def test_first_batch_loss_is_log_num_classes_with_zero_head(self):
        x, mask, y = make_separable_toyset(num_examples=12, max_len=20, width=4, seed=1)
        for model in (
            CnnClassifier(input_width=4, num_classes=2, max_len=20, kernels=4, seed=0),
            LstmClassifier(input_width=4, num_classes=2, hidden=6, seed=0),
        ):
            model.params["fc_w"] = np.zeros_like(model.params["fc_w"])
            model.params["fc_b"] = np.zeros_like(model.params["fc_b"])
            log = train_classifier(
                model, x, mask, y, TrainConfig(batch_size=4, epochs=1, learning_rate=0.01)
            )
            assert abs(log.first_batch_loss - math.log(2)) < 1e-9

    def test_overfits_separable_toyset_cnn(self):
        x, mask, y = make_separable_toyset()
        model = CnnClassifier(
            input_width=8, num_classes=2, max_len=20, kernels=8, kernel_width=5,
            pool_width=2, seed=0,
        )
        train_classifier(
            model, x, mask, y, TrainConfig(batch_size=4, epochs=200, learning_rate=0.05, seed=0)
        )
        assert evaluate(model, x, mask, y).accuracy == 1.0

    def test_overfits_separable_toyset_lstm(self):
        x, mask, y = make_separable_toyset()
        model = LstmClassifier(input_width=8, num_classes=2, hidden=16, seed=0)
        log = train_classifier(
            model, x, mask, y, TrainConfig(batch_size=4, epochs=200, learning_rate=0.1, seed=0)
        )
        assert evaluate(model, x, mask, y).accuracy == 1.0
        assert log.epoch_losses[-1] < log.epoch_losses[0]

    def test_training_is_deterministic(self):
        x, mask, y = make_separable_toyset(num_examples=12, max_len=20, width=4, seed=2)
        cfg = TrainConfig(batch_size=4, epochs=3, learning_rate=0.05, seed=9)
        flats = []
        logs = []
        for _ in range(2):
            model = LstmClassifier(input_width=4, num_classes=2, hidden=5, seed=6)
            logs.append(train_classifier(model, x, mask, y, cfg))
            flats.append(model.get_flat())
        assert np.array_equal(flats[0], flats[1])
        assert logs[0].epoch_losses == logs[1].epoch_losses

    def test_non_finite_loss_raises_with_location(self):
        x = np.zeros((4, 5, 3))
        x[0, 0, 0] = np.nan
        mask = np.ones((4, 5))
        y = np.array([0, 1, 0, 1])
        model = LstmClassifier(input_width=3, num_classes=2, hidden=4, seed=0)
        with pytest.raises(NumericError, match="epoch 1, batch 1"):
            train_classifier(
                model, x, mask, y,
                TrainConfig(batch_size=4, epochs=1, learning_rate=0.1, shuffle=False),
            )

    def test_empty_dataset_rejected(self):
        model = LstmClassifier(input_width=2, num_classes=2, hidden=2)
        with pytest.raises(ConfigError):
            train_classifier(model, np.zeros((0, 3, 2)), None, np.zeros(0, dtype=int), TrainConfig())

    def test_config_validation(self):
        for kwargs in ({"batch_size": 0}, {"epochs": 0}, {"learning_rate": 0.0}):
            with pytest.raises(ConfigError):
                TrainConfig(**kwargs)


class _FixedModel:
    """Evaluation stub that replays fixed probabilities by example index."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)
        self.num_classes = self.probs.shape[1]

    def forward(self, x, mask=None):
        idx = np.asarray(x)[:, 0, 0].astype(int)
        return self.probs[idx]


def _index_inputs(count):
    x = np.zeros((count, 1, 1))
    x[:, 0, 0] = np.arange(count)
    return x


class TestEvaluate:
    def test_hand_confusion_matrix(self):
        # predictions 0,1,1,0 against labels 0,1,0,0
        probs = [[0.9, 0.1], [0.2, 0.8], [0.3, 0.7], [0.6, 0.4]]
        result = evaluate(_FixedModel(probs), _index_inputs(4), None, np.array([0, 1, 0, 0]))
        assert result.confusion.tolist() == [[2, 1], [0, 1]]
        assert result.accuracy == 0.75
        assert result.precision.tolist() == [1.0, 0.5]
        assert np.abs(result.recall - [2 / 3, 1.0]).max() < 1e-12

    def test_confusion_rows_sum_to_true_counts(self):
        rng = np.random.default_rng(30)
        probs = rng.dirichlet(np.ones(3), size=50)
        y = rng.integers(3, size=50)
        result = evaluate(_FixedModel(probs), _index_inputs(50), None, y)
        assert result.confusion.sum() == 50
        for c in range(3):
            assert result.confusion[c].sum() == int((y == c).sum())

    def test_never_predicted_class_gets_zero_precision(self):
        probs = [[0.9, 0.1], [0.8, 0.2], [0.7, 0.3]]
        result = evaluate(_FixedModel(probs), _index_inputs(3), None, np.array([0, 0, 1]))
        assert result.precision.tolist() == [2 / 3, 0.0]
        assert result.recall.tolist() == [1.0, 0.0]

    def test_summary_lines_use_label_names(self):
        probs = [[0.9, 0.1], [0.2, 0.8]]
        result = evaluate(_FixedModel(probs), _index_inputs(2), None, np.array([0, 1]))
        lines = result.summary_lines(["negative", "positive"])
        assert lines[0] == "accuracy 1.0000"
        assert any("positive" in line for line in lines)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ConfigError):
            evaluate(_FixedModel([[1.0, 0.0]]), np.zeros((0, 1, 1)), None, np.zeros(0, dtype=int))


class TestCheckpoints:
    def _trained_lstm(self):
        x, mask, y = make_separable_toyset(num_examples=8, max_len=10, width=3, seed=3)
        model = LstmClassifier(input_width=3, num_classes=2, hidden=4, seed=7)
        train_classifier(model, x, mask, y, TrainConfig(batch_size=4, epochs=2, learning_rate=0.05))
        return model, (x, mask, y)

    def test_lstm_round_trip_restores_loss(self, tmp_path):
        model, (x, mask, y) = self._trained_lstm()
        path = tmp_path / "model.txt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.kind == "lstm"
        assert loaded.arch() == model.arch()
        assert np.array_equal(loaded.get_flat(), model.get_flat())
        loss_a, _, _ = model.loss_and_grads(x, mask, y)
        loss_b, _, _ = loaded.loss_and_grads(x, mask, y)
        assert abs(loss_a - loss_b) < 1e-6

    def test_cnn_round_trip(self, tmp_path):
        model = CnnClassifier(
            input_width=3, num_classes=3, max_len=14, kernels=4, kernel_width=3,
            pool_width=2, seed=8,
        )
        path = tmp_path / "model.txt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.arch() == model.arch()
        rng = np.random.default_rng(31)
        x = rng.normal(size=(2, 14, 3))
        assert np.abs(model.forward(x) - loaded.forward(x)).max() < 1e-12

    def test_wrong_tag_rejected(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("some-other-format v9\n")
        with pytest.raises(DataFormatError, match=":1:"):
            load_model(path)

    def test_malformed_sections_rejected(self, tmp_path):
        model = LstmClassifier(input_width=2, num_classes=2, hidden=2, seed=0)
        path = tmp_path / "model.txt"
        save_model(model, path)
        lines = path.read_text().splitlines()

        bad = list(lines)
        bad[1] = "input_width 2 extra"
        path.write_text("\n".join(bad) + "\n")
        with pytest.raises(DataFormatError, match=":2:"):
            load_model(path)

        param_line = next(i for i, l in enumerate(lines) if l.startswith("param gate_w"))
        bad = list(lines)
        bad[param_line + 1] = "1.0 2.0 nope"
        path.write_text("\n".join(bad) + "\n")
        with pytest.raises(DataFormatError, match="gate_w"):
            load_model(path)

        bad = list(lines)
        bad[param_line] = "param gate_w 3"
        path.write_text("\n".join(bad) + "\n")
        with pytest.raises(DataFormatError, match="gate_w"):
            load_model(path)

        bad = [l for l in lines if not l.startswith("param fc_b")]
        bad = bad[: len(bad) - 1]  # drop fc_b header and values
        path.write_text("\n".join(bad) + "\n")
        with pytest.raises(DataFormatError, match="fc_b"):
            load_model(path)

    def test_tag_constant_is_versioned(self):
        assert CHECKPOINT_TAG.endswith("v1")

    def test_build_model_rejects_unknown_kind(self):
        with pytest.raises(ConfigError):
            build_model({"kind": "transformer"})

    def test_set_flat_rejects_wrong_size(self):
        model = LstmClassifier(input_width=2, num_classes=2, hidden=2)
        with pytest.raises(ValueError):
            model.set_flat(np.zeros(3))

    def test_forward_helpers_check_kind(self):
        cnn = CnnClassifier(input_width=2, num_classes=2, max_len=20, kernels=2)
        lstm = LstmClassifier(input_width=2, num_classes=2, hidden=2)
        with pytest.raises(ValueError):
            forward_cnn(lstm, np.zeros((1, 3, 2)))
        with pytest.raises(ValueError):
            forward_lstm(cnn, np.zeros((1, 20, 2)))
