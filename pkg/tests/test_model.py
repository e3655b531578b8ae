import math

import numpy as np
import pytest

from stepqa.data import CandidateAnswer
from stepqa.embeddings import EmbeddingTable, make_id
from stepqa.errors import (
    BadMagic,
    ConfigError,
    DimensionMismatch,
    IndexOutOfRange,
    MissingId,
    NonFiniteValue,
    TruncatedFile,
)
from stepqa.grounding import FunctionWeights
from stepqa.model import (
    GroundingMode,
    ModelConfig,
    ce_loss,
    cross_attention_weights,
    expected_shapes,
    forward_sample,
    fuse_context,
    gru_step,
    init_params,
    load_checkpoint,
    resolve_sample,
    save_checkpoint,
    score_candidates,
    softmax,
)
from stepqa.toy import load_toy_samples, toy_model_config

from oracles import scalar_gru, scalar_mlp_logits


def zero_params(config):
    params = init_params(config)
    for _, tensor in params.tensors():
        tensor[...] = 0.0
    return params


def tiny_config(**kw):
    defaults = dict(dim_t=3, dim_v=2, hidden=4, mlp_hidden=5, seed=1)
    defaults.update(kw)
    return ModelConfig(**defaults)


class TestModelConfig:
    def test_derived_dims(self):
        cfg = tiny_config()
        assert cfg.ctx_dim == 5
        assert cfg.ans_dim == 5
        assert cfg.gru_input_dim == 5 + 3 + 5
        assert cfg.mlp_input_dim == 4 + 5 + 3 + 5

    def test_feature_toggles_shrink_dims(self):
        cfg = tiny_config(use_function_v=False, use_answer_v=False)
        assert cfg.ctx_dim == 3
        assert cfg.ans_dim == 3

    def test_no_function_feature_rejected(self):
        with pytest.raises(ConfigError):
            tiny_config(use_function_t=False, use_function_v=False)

    def test_no_answer_feature_rejected(self):
        with pytest.raises(ConfigError):
            tiny_config(use_answer_t=False, use_answer_v=False)

    def test_bad_hidden_rejected(self):
        with pytest.raises(ConfigError):
            tiny_config(hidden=0)


class TestInitParams:
    def test_shapes_match_declaration(self):
        cfg = tiny_config(grounding_mode=GroundingMode.CROSS_ATTENTION)
        params = init_params(cfg)
        got = {name: t.shape for name, t in params.tensors()}
        assert got == dict(expected_shapes(cfg))

    def test_same_seed_same_bytes(self):
        cfg = tiny_config(seed=9)
        a, b = init_params(cfg), init_params(cfg)
        for (_, ta), (_, tb) in zip(a.tensors(), b.tensors()):
            assert ta.tobytes() == tb.tobytes()

    def test_different_seed_differs(self):
        a = init_params(tiny_config(seed=1))
        b = init_params(tiny_config(seed=2))
        assert a.w1.tobytes() != b.w1.tobytes()

    def test_no_w_att_in_tfidf_mode(self):
        assert init_params(tiny_config()).w_att is None


class TestSoftmax:
    def test_uniform_on_zeros(self):
        np.testing.assert_allclose(softmax(np.zeros(3)), np.full(3, 1 / 3), atol=1e-15)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=7)
        np.testing.assert_allclose(softmax(x + 123.4), softmax(x), atol=1e-12)

    def test_no_overflow_on_large_logits(self):
        p = softmax(np.array([1000.0, 0.0]))
        assert p[0] == pytest.approx(1.0, abs=1e-12)
        assert np.isfinite(p).all()

    def test_sums_to_one_in_open_interval(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = softmax(rng.normal(size=5) * 10)
            assert p.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(p > 0) and np.all(p < 1)


class TestCeLoss:
    def test_certain_correct_is_zero(self):
        assert ce_loss(np.array([1.0, 0.0, 0.0]), 0) == 0.0

    def test_uniform_over_four(self):
        assert ce_loss(np.full(4, 0.25), 2) == pytest.approx(math.log(4), abs=1e-12)

    def test_quarter_probability(self):
        assert ce_loss(np.array([0.75, 0.25]), 1) == pytest.approx(
            math.log(4), abs=1e-12
        )

    def test_out_of_range_rejected(self):
        with pytest.raises(IndexOutOfRange):
            ce_loss(np.array([0.5, 0.5]), 2)


class TestGruStep:
    def test_zero_params_halve_hidden(self):
        cfg = tiny_config()
        params = zero_params(cfg)
        h_prev = np.ones(cfg.hidden)
        x = np.zeros(cfg.gru_input_dim)
        np.testing.assert_allclose(
            gru_step(params, h_prev, x), 0.5 * h_prev, atol=1e-15
        )

    def test_zero_hidden_is_fixed_point_of_zero_params(self):
        cfg = tiny_config()
        params = zero_params(cfg)
        h = np.zeros(cfg.hidden)
        np.testing.assert_array_equal(
            gru_step(params, h, np.zeros(cfg.gru_input_dim)), h
        )

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(17)
        cfg = tiny_config(seed=17)
        params = init_params(cfg)
        for _ in range(5):
            h_prev = rng.normal(size=cfg.hidden)
            x = rng.normal(size=cfg.gru_input_dim)
            got = gru_step(params, h_prev, x)
            ref = scalar_gru(params, h_prev, x)
            np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_shape_mismatch_rejected(self):
        cfg = tiny_config()
        params = init_params(cfg)
        with pytest.raises(DimensionMismatch):
            gru_step(params, np.zeros(cfg.hidden + 1), np.zeros(cfg.gru_input_dim))
        with pytest.raises(DimensionMismatch):
            gru_step(params, np.zeros(cfg.hidden), np.zeros(3))


def table_for(cfg, video="v", n_funcs=2, n_cands=3, seed=5):
    # One flat table holding function, question, and candidate vectors.
    assert cfg.dim_t == cfg.dim_v
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(dim=cfg.dim_t)
    for i in range(n_funcs):
        table.put(make_id("ft", video, f"f{i}"), rng.normal(size=cfg.dim_t))
        table.put(make_id("fv", video, f"f{i}"), rng.normal(size=cfg.dim_v))
    table.put(make_id("q", video, "q0"), rng.normal(size=cfg.dim_t))
    for j in range(n_cands):
        table.put(make_id("at", video, f"c{j}"), rng.normal(size=cfg.dim_t))
        table.put(make_id("av", video, f"c{j}"), rng.normal(size=cfg.dim_v))
    return table


def function_set_for(video="v", n_funcs=2):
    from stepqa.segmenter import FunctionSet, FunctionUnit

    units = tuple(
        FunctionUnit(
            function_id=f"f{i}",
            para_text=f"How to do thing {i}? Press button {i}.",
            clip_start_s=2.0 * i,
            clip_end_s=2.0 * i + 2.0,
            source_line_indices=(2 * i, 2 * i + 1),
        )
        for i in range(n_funcs)
    )
    return FunctionSet(video_id=video, units=units)


def square_config(**kw):
    defaults = dict(dim_t=3, dim_v=3, hidden=4, mlp_hidden=5, seed=2)
    defaults.update(kw)
    return ModelConfig(**defaults)


class TestFuseContext:
    def test_one_hot_weights_select_one_function(self):
        cfg = square_config()
        table = table_for(cfg)
        fs = function_set_for()
        ctx = fuse_context(np.array([1.0, 0.0]), table, fs, cfg)
        expected = np.concatenate(
            [table[make_id("ft", "v", "f0")], table[make_id("fv", "v", "f0")]]
        )
        np.testing.assert_allclose(ctx, expected, atol=1e-15)

    def test_even_weights_average(self):
        cfg = square_config()
        table = table_for(cfg)
        fs = function_set_for()
        ctx = fuse_context(np.array([0.5, 0.5]), table, fs, cfg)
        rows = [
            np.concatenate(
                [table[make_id("ft", "v", f"f{i}")], table[make_id("fv", "v", f"f{i}")]]
            )
            for i in range(2)
        ]
        np.testing.assert_allclose(ctx, (rows[0] + rows[1]) / 2, atol=1e-15)

    def test_disabled_feature_omitted(self):
        cfg = square_config(use_function_v=False)
        table = table_for(cfg)
        fs = function_set_for()
        ctx = fuse_context(np.array([1.0, 0.0]), table, fs, cfg)
        np.testing.assert_allclose(ctx, table[make_id("ft", "v", "f0")], atol=1e-15)

    def test_missing_embedding_raises(self):
        cfg = square_config()
        table = table_for(cfg)
        del table.entries[make_id("fv", "v", "f1")]
        with pytest.raises(MissingId):
            fuse_context(np.array([0.5, 0.5]), table, function_set_for(), cfg)

    def test_weight_count_mismatch(self):
        cfg = square_config()
        with pytest.raises(DimensionMismatch):
            fuse_context(np.array([1.0]), table_for(cfg), function_set_for(), cfg)


class TestCrossAttention:
    def test_zero_matrix_gives_uniform(self):
        cfg = square_config(grounding_mode=GroundingMode.CROSS_ATTENTION)
        params = zero_params(cfg)
        table = table_for(cfg)
        fw = cross_attention_weights(
            params, table, table[make_id("q", "v", "q0")], function_set_for()
        )
        np.testing.assert_allclose(fw.weights, [0.5, 0.5], atol=1e-15)

    def test_single_function_full_weight(self):
        cfg = square_config(grounding_mode=GroundingMode.CROSS_ATTENTION)
        params = init_params(cfg)
        table = table_for(cfg, n_funcs=1)
        fw = cross_attention_weights(
            params, table, table[make_id("q", "v", "q0")], function_set_for(n_funcs=1)
        )
        np.testing.assert_allclose(fw.weights, [1.0], atol=1e-15)

    def test_hand_evaluated_softmax(self):
        # scores [ln 3, 0] -> weights [0.75, 0.25]
        np.testing.assert_allclose(
            softmax(np.array([math.log(3.0), 0.0])), [0.75, 0.25], atol=1e-12
        )

    def test_distribution_for_random_matrices(self):
        cfg = square_config(grounding_mode=GroundingMode.CROSS_ATTENTION)
        table = table_for(cfg, n_funcs=2)
        fs = function_set_for()
        q = table[make_id("q", "v", "q0")]
        rng = np.random.default_rng(3)
        params = init_params(cfg)
        for _ in range(10):
            params.w_att[...] = rng.normal(size=params.w_att.shape) * 5
            fw = cross_attention_weights(params, table, q, fs)
            assert fw.weights.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(fw.weights >= 0)

    def test_missing_w_att_rejected(self):
        cfg = square_config()  # tfidf mode, no w_att
        params = init_params(cfg)
        table = table_for(cfg)
        with pytest.raises(ConfigError):
            cross_attention_weights(
                params, table, table[make_id("q", "v", "q0")], function_set_for()
            )


class TestScoreCandidates:
    def _setup(self, **kw):
        cfg = square_config(**kw)
        table = table_for(cfg)
        cands = [
            CandidateAnswer(make_id("at", "v", f"c{j}"), make_id("av", "v", f"c{j}"))
            for j in range(3)
        ]
        h = np.zeros(cfg.hidden)
        ctx = fuse_context(np.array([0.5, 0.5]), table, function_set_for(), cfg)
        q = table[make_id("q", "v", "q0")]
        return cfg, table, cands, h, ctx, q

    def test_zero_head_gives_equal_logits(self):
        cfg, table, cands, h, ctx, q = self._setup()
        params = zero_params(cfg)
        logits = score_candidates(params, h, ctx, q, cands, table, cfg)
        assert np.ptp(logits) == 0.0
        np.testing.assert_allclose(softmax(logits), np.full(3, 1 / 3), atol=1e-15)

    def test_identical_candidates_identical_logits(self):
        cfg, table, cands, h, ctx, q = self._setup()
        params = init_params(cfg)
        twins = [cands[0], cands[0], cands[1]]
        logits = score_candidates(params, h, ctx, q, twins, table, cfg)
        assert logits[0] == logits[1]

    def test_matches_scalar_oracle(self):
        cfg, table, cands, h, ctx, q = self._setup()
        params = init_params(cfg)
        rng = np.random.default_rng(23)
        h = rng.normal(size=cfg.hidden)
        from stepqa.model import candidate_feature_matrix

        feats = candidate_feature_matrix(table, cands, cfg)
        got = score_candidates(params, h, ctx, q, cands, table, cfg)
        ref = scalar_mlp_logits(params, h, ctx, q, feats)
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_missing_button_id_with_answer_visual_enabled(self):
        cfg, table, cands, h, ctx, q = self._setup()
        params = init_params(cfg)
        broken = [CandidateAnswer(cands[0].text_emb_id, None), cands[1]]
        with pytest.raises(MissingId):
            score_candidates(params, h, ctx, q, broken, table, cfg)

    def test_bad_hidden_shape_rejected(self):
        cfg, table, cands, h, ctx, q = self._setup()
        params = init_params(cfg)
        with pytest.raises(DimensionMismatch):
            score_candidates(params, np.zeros(99), ctx, q, cands, table, cfg)


class TestPermutationEquivariance:
    def test_permuting_candidates_permutes_logits(self, toy_table, toy_functions):
        cfg = toy_model_config()
        params = init_params(cfg)
        samples = load_toy_samples()
        sample = samples[0]
        from stepqa.train import tfidf_function_weights

        weights = tfidf_function_weights(toy_functions, sample.question_text)
        rs = resolve_sample(sample, toy_functions, toy_table, cfg, weights)
        base = forward_sample(params, rs, cfg)

        rng = np.random.default_rng(4)
        perm = rng.permutation(3)
        rs_perm = resolve_sample(sample, toy_functions, toy_table, cfg, weights)
        rs_perm.step_answers = [a[perm] for a in rs.step_answers]
        rs_perm.gt = [int(np.where(perm == g)[0][0]) for g in rs.gt]
        permuted = forward_sample(params, rs_perm, cfg)

        for st_base, st_perm in zip(base.steps, permuted.steps):
            np.testing.assert_allclose(
                st_perm.probs, st_base.probs[perm], atol=1e-12
            )
        assert permuted.loss_sum == pytest.approx(base.loss_sum, abs=1e-12)


class TestCheckpoint:
    def _roundtrip(self, tmp_path, mode):
        cfg = square_config(grounding_mode=mode, seed=8)
        params = init_params(cfg)
        path = tmp_path / "m.qam1"
        save_checkpoint(path, cfg, params)
        return cfg, params, path

    @pytest.mark.parametrize(
        "mode", [GroundingMode.TFIDF, GroundingMode.CROSS_ATTENTION]
    )
    def test_round_trip_bit_exact(self, tmp_path, mode):
        cfg, params, path = self._roundtrip(tmp_path, mode)
        loaded_cfg, loaded = load_checkpoint(path)
        assert loaded_cfg == cfg
        for (na, ta), (nb, tb) in zip(params.tensors(), loaded.tensors()):
            assert na == nb
            assert ta.tobytes() == tb.tobytes()

    def test_save_twice_byte_identical(self, tmp_path):
        cfg, params, path = self._roundtrip(tmp_path, GroundingMode.TFIDF)
        other = tmp_path / "m2.qam1"
        save_checkpoint(other, cfg, params)
        assert path.read_bytes() == other.read_bytes()

    def test_bad_magic(self, tmp_path):
        _, _, path = self._roundtrip(tmp_path, GroundingMode.TFIDF)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(raw)
        with pytest.raises(BadMagic):
            load_checkpoint(path)

    def test_truncation(self, tmp_path):
        _, _, path = self._roundtrip(tmp_path, GroundingMode.TFIDF)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 9])
        with pytest.raises(TruncatedFile):
            load_checkpoint(path)

    def test_trailing_bytes(self, tmp_path):
        _, _, path = self._roundtrip(tmp_path, GroundingMode.TFIDF)
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(TruncatedFile):
            load_checkpoint(path)

    def test_nan_tensor_rejected_on_save(self, tmp_path):
        cfg = square_config()
        params = init_params(cfg)
        params.w1[0, 0] = float("nan")
        with pytest.raises(NonFiniteValue):
            save_checkpoint(tmp_path / "bad.qam1", cfg, params)

    def test_nan_in_file_rejected_on_load(self, tmp_path):
        cfg, params, path = self._roundtrip(tmp_path, GroundingMode.TFIDF)
        raw = bytearray(path.read_bytes())
        # overwrite the last tensor's final f64 with NaN
        import struct as _struct

        _struct.pack_into("<d", raw, len(raw) - 8, float("nan"))
        path.write_bytes(raw)
        with pytest.raises(NonFiniteValue):
            load_checkpoint(path)
