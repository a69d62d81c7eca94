"""Classifier checks: shapes, analytic anchors, gradients, checkpoints."""

import numpy as np
import pytest

from pstnet.model import (
    ModelConfig,
    forward,
    init_state,
    load_checkpoint,
    loss,
    predict,
    save_checkpoint,
    state_from_arrays,
)
from pstnet.tensor import Tensor

from oracles import fd_grad, rel_err

TINY = ModelConfig(
    t=3, s=2, v=4, h=4, n_classes=3, conv_channels=(2, 2), kernel=(3, 3, 3),
    n_attention_blocks=2, fc_hidden=4,
)


def batch_for(config, seed=0, batch=2):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((batch, config.t, config.s, config.v, config.h))


def zeroed_state(config, seed=0):
    state = init_state(config, seed=seed)
    for _, p in state.named_parameters():
        p.values[...] = 0.0
    return state


class TestForward:
    def test_default_config_shape_contract(self):
        config = ModelConfig()
        state = init_state(config, seed=0)
        logits = forward(Tensor(batch_for(config)), state, config)
        assert logits.shape == (2, 3)

    def test_zero_weights_give_zero_logits(self):
        config = TINY
        state = zeroed_state(config)
        logits = forward(Tensor(batch_for(config)), state, config)
        np.testing.assert_array_equal(logits.values, 0.0)

    def test_loss_on_uniform_logits_is_log_n_classes(self):
        config = TINY
        state = zeroed_state(config)
        logits = forward(Tensor(batch_for(config)), state, config)
        got = loss(logits, np.array([0, 2])).item()
        np.testing.assert_allclose(got, np.log(3.0), rtol=1e-12)

    def test_eval_forward_is_deterministic(self):
        config = TINY
        state = init_state(config, seed=1)
        x = Tensor(batch_for(config, seed=2))
        a = forward(x, state, config, training=False).values
        b = forward(x, state, config, training=False).values
        np.testing.assert_array_equal(a, b)

    def test_training_dropout_reproducible_by_seed(self):
        config = TINY
        state = init_state(config, seed=2)
        x = Tensor(batch_for(config, seed=4))
        a = forward(x, state, config, training=True, dropout_rng=np.random.default_rng(9)).values
        b = forward(x, state, config, training=True, dropout_rng=np.random.default_rng(9)).values
        c = forward(x, state, config, training=True, dropout_rng=np.random.default_rng(10)).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_training_without_rng_rejected(self):
        config = TINY
        state = init_state(config, seed=5)
        with pytest.raises(ValueError, match="dropout_rng"):
            forward(Tensor(batch_for(config)), state, config, training=True)

    def test_zero_dropout_training_matches_eval(self):
        config = ModelConfig(
            t=3, s=2, v=4, h=4, conv_channels=(2, 2), kernel=(3, 3, 3),
            n_attention_blocks=2, fc_hidden=4, dropout_rate=0.0,
        )
        state = init_state(config, seed=6)
        x = Tensor(batch_for(config, seed=7))
        a = forward(x, state, config, training=True).values
        b = forward(x, state, config, training=False).values
        np.testing.assert_array_equal(a, b)

    def test_bad_input_shape_names_the_input(self):
        config = TINY
        state = init_state(config, seed=8)
        with pytest.raises(ValueError, match="input:"):
            forward(Tensor(np.zeros((2, 3, 2, 4, 5))), state, config)

    def test_corrupt_layer_error_names_the_stage(self):
        config = TINY
        state = init_state(config, seed=9)
        w, b = state.convs[1]
        state.convs[1] = (Tensor(np.zeros((2, 3) + config.kernel)), b)
        with pytest.raises(ValueError, match="conv1:"):
            forward(Tensor(batch_for(config)), state, config)


class TestPredict:
    def test_tie_breaks_to_lowest_class(self):
        config = TINY
        state = zeroed_state(config)
        got = predict(Tensor(batch_for(config)), state, config)
        np.testing.assert_array_equal(got, 0)

    def test_dominant_bias_wins(self):
        config = TINY
        state = zeroed_state(config)
        state.fc2_b.values[...] = [0.0, 5.0, 0.0]
        got = predict(Tensor(batch_for(config)), state, config)
        np.testing.assert_array_equal(got, 1)

    def test_matches_argmax_of_logits(self):
        config = TINY
        state = init_state(config, seed=10)
        x = Tensor(batch_for(config, seed=11, batch=8))
        want = np.argmax(forward(x, state, config).values, axis=1)
        np.testing.assert_array_equal(predict(x, state, config), want)


class TestParameterAccounting:
    @staticmethod
    def expected_counts(config):
        kt, kv, kh = config.kernel
        total = 0
        attention = 0
        dims = config.stage_dims()
        for i, c_out in enumerate(config.conv_channels):
            c_in, v_in, h_in = dims[i]
            total += c_out * c_in * kt * kv * kh + c_out
            if i < config.n_attention_blocks:
                p, s, t = config.attention_enabled
                here = 0
                if p:
                    here += (v_in + h_in) ** 2 + (v_in + h_in)
                if s:
                    here += c_out * c_out + c_out
                if t:
                    here += config.t * config.t + config.t
                attention += here
        total += attention
        total += config.fc_hidden * config.conv_channels[-1] + config.fc_hidden
        total += config.n_classes * config.fc_hidden + config.n_classes
        return total, attention

    def test_default_param_count_matches_arithmetic(self):
        config = ModelConfig()
        want, _ = self.expected_counts(config)
        assert init_state(config, seed=0).param_count() == want

    def test_disabling_attention_removes_exactly_its_parameters(self):
        full_cfg = ModelConfig()
        plain_cfg = ModelConfig(attention_enabled=(False, False, False))
        want_full, want_att = self.expected_counts(full_cfg)
        full = init_state(full_cfg, seed=0).param_count()
        plain = init_state(plain_cfg, seed=0).param_count()
        assert full == want_full
        assert full - plain == want_att

    def test_parameter_names_unique(self):
        names = [n for n, _ in init_state(ModelConfig(), seed=0).named_parameters()]
        assert len(names) == len(set(names))

    def test_backbone_init_independent_of_attention_toggle(self):
        full = init_state(ModelConfig(), seed=4)
        plain = init_state(ModelConfig(attention_enabled=(False, False, False)), seed=4)
        for (w_f, b_f), (w_p, b_p) in zip(full.convs, plain.convs):
            np.testing.assert_array_equal(w_f.values, w_p.values)
        np.testing.assert_array_equal(full.fc1_w.values, plain.fc1_w.values)
        np.testing.assert_array_equal(full.fc2_w.values, plain.fc2_w.values)

    def test_plain_config_equals_full_model_with_blocks_removed(self):
        config = TINY
        plain_cfg = ModelConfig(
            t=3, s=2, v=4, h=4, conv_channels=(2, 2), kernel=(3, 3, 3),
            n_attention_blocks=2, fc_hidden=4,
            attention_enabled=(False, False, False),
        )
        full = init_state(config, seed=12)
        plain = init_state(plain_cfg, seed=12)
        x = Tensor(batch_for(config, seed=13))
        full.blocks = [None, None]
        np.testing.assert_array_equal(
            forward(x, full, config).values, forward(x, plain, plain_cfg).values
        )


class TestFullModelGradients:
    @staticmethod
    def boosted_state(config, seed, w_scale=4.0, b_jitter=0.2):
        # fresh-init activations here are ~1e-5 (two attention blocks each
        # multiply by ~0.5^4), far below the h=1e-5 probe; rescaling to O(1)
        # keeps the finite differences meaningful on the same code path
        state = init_state(config, seed=seed)
        rng = np.random.default_rng([seed, 999])
        for name, p in state.named_parameters():
            if name.endswith(".w"):
                p.values *= w_scale
            else:
                p.values[...] = b_jitter * rng.standard_normal(p.values.shape)
        return state

    def test_every_parameter_matches_finite_differences(self):
        config = TINY
        state = self.boosted_state(config, seed=14)
        xv = batch_for(config, seed=15)
        labels = np.array([0, 2])

        state.zero_grads()
        loss(forward(Tensor(xv), state, config), labels).backward()

        for name, p in state.named_parameters():
            def objective(candidate, p=p):
                keep = p.values
                p.values = candidate
                try:
                    return loss(forward(Tensor(xv), state, config), labels).item()
                finally:
                    p.values = keep

            fd = fd_grad(objective, p.values)
            assert rel_err(p.grad, fd) < 1e-3, name


class TestCheckpoint:
    def roundtrip(self, tmp_path, config, seed=16):
        state = init_state(config, seed=seed)
        path = tmp_path / "model.ckpt"
        save_checkpoint(state, path)
        return state, path

    def test_arrays_survive_exactly(self, tmp_path):
        state, path = self.roundtrip(tmp_path, TINY)
        arrays = load_checkpoint(path)
        for name, p in state.named_parameters():
            np.testing.assert_array_equal(arrays[name], p.values)

    def test_rebuilt_state_forwards_identically(self, tmp_path):
        state, path = self.roundtrip(tmp_path, TINY)
        rebuilt = state_from_arrays(TINY, load_checkpoint(path))
        x = Tensor(batch_for(TINY, seed=17))
        np.testing.assert_array_equal(
            forward(x, state, TINY).values, forward(x, rebuilt, TINY).values
        )

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOTACKPT\n")
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_truncation_reports_offset(self, tmp_path):
        _, path = self.roundtrip(tmp_path, TINY)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(ValueError, match="truncated"):
            load_checkpoint(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        _, path = self.roundtrip(tmp_path, TINY)
        path.write_bytes(path.read_bytes() + b"\x00" * 4)
        with pytest.raises(ValueError, match="trailing"):
            load_checkpoint(path)

    def test_config_mismatch_rejected(self, tmp_path):
        _, path = self.roundtrip(tmp_path, TINY)
        other = ModelConfig(
            t=3, s=2, v=4, h=4, conv_channels=(2, 2), kernel=(3, 3, 3),
            n_attention_blocks=0, fc_hidden=4,
        )
        with pytest.raises(ValueError, match="does not match config"):
            state_from_arrays(other, load_checkpoint(path))

    def test_shape_mismatch_rejected(self, tmp_path):
        _, path = self.roundtrip(tmp_path, TINY)
        arrays = load_checkpoint(path)
        arrays["fc1.b"] = np.zeros(5)
        with pytest.raises(ValueError, match="fc1.b"):
            state_from_arrays(TINY, arrays)


class TestConfigValidation:
    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            ModelConfig(kernel=(2, 5, 5))

    def test_too_many_attention_blocks_rejected(self):
        with pytest.raises(ValueError, match="conv stages"):
            ModelConfig(conv_channels=(8,), n_attention_blocks=2)

    def test_dropout_one_rejected(self):
        with pytest.raises(ValueError, match="dropout"):
            ModelConfig(dropout_rate=1.0)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="classes"):
            ModelConfig(n_classes=1)

    def test_stage_dims_track_pooling(self):
        assert ModelConfig().stage_dims() == [(5, 8, 9), (32, 4, 4), (64, 2, 2)]
