import dataclasses

import numpy as np
import pytest

from lcvsr import ops
from lcvsr.gradcheck import grad_check
from lcvsr.model import (
    ModelConfig,
    check_params,
    count_parameters,
    grn_forward,
    init_params,
    lcvsr_forward,
    lfgn_forward,
    parameter_shapes,
    resblock,
)
from lcvsr.tensor import ConfigError, ShapeError, Tensor, no_grad, precision

TINY = ModelConfig(r=2, lfgn_widths=(4, 6, 8), grn_widths=(2, 3, 4, 3, 2), resblocks_per_subblock=1)

# frozen after the first computation; any architecture change must update it deliberately
DEFAULT_PARAMETER_COUNT = 74_125_617


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def _zero_block(cin, cout, with_proj):
    p = {
        "b.conv1.weight": Tensor(np.zeros((cout, cin, 3, 3))),
        "b.conv1.bias": Tensor(np.zeros(cout)),
        "b.conv2.weight": Tensor(np.zeros((cout, cout, 3, 3))),
        "b.conv2.bias": Tensor(np.zeros(cout)),
    }
    if with_proj:
        w = np.zeros((cout, cin, 1, 1))
        for c in range(min(cin, cout)):
            w[c, c] = 1
        p["b.proj.weight"] = Tensor(w)
        p["b.proj.bias"] = Tensor(np.zeros(cout))
    return p


class TestConfig:
    def test_derived_quantities(self):
        cfg = ModelConfig()
        assert (cfg.C, cfg.s, cfg.L, cfg.depth) == (7, 3, 16, 1008)
        assert ModelConfig(r=2).depth == 252

    def test_groups_must_divide_depth(self):
        ModelConfig(groups=7)
        with pytest.raises(ConfigError, match="groups"):
            ModelConfig(groups=5)

    def test_slope_range(self):
        with pytest.raises(ConfigError):
            ModelConfig(leaky_slope=1.0)

    def test_dict_round_trip(self):
        cfg = ModelConfig(r=3, groups=7, ablate_lc=True)
        assert ModelConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            ModelConfig.from_dict({"rr": 2})


class TestParameters:
    def test_names_unique_and_shapes_fixed(self):
        shapes = parameter_shapes(TINY)
        params = init_params(TINY, seed=0)
        assert list(params) == list(shapes)
        assert all(tuple(p.shape) == shapes[n] for n, p in params.items())

    def test_init_is_seeded(self):
        a, b = init_params(TINY, 3), init_params(TINY, 3)
        assert all(np.array_equal(a[k].data, b[k].data) for k in a)
        c = init_params(TINY, 4)
        assert any(not np.array_equal(a[k].data, c[k].data) for k in a if k.endswith("weight"))

    def test_biases_zero_weights_bounded(self):
        for name, p in init_params(TINY, 0).items():
            if name.endswith("bias"):
                assert not p.data.any()
            else:
                rf = p.shape[2] * p.shape[3]
                bound = np.sqrt(6.0 / (p.shape[0] * rf + p.shape[1] * rf))
                assert np.abs(p.data).max() <= bound

    def test_default_parameter_count_regression(self):
        n = count_parameters(ModelConfig())
        assert n == count_parameters(ModelConfig())
        assert n == DEFAULT_PARAMETER_COUNT

    def test_groups_shrink_final_subblock(self):
        assert count_parameters(ModelConfig(groups=7)) < count_parameters(ModelConfig())

    def test_mismatch_names_tensor(self):
        params = init_params(TINY, 0)
        other = dataclasses.replace(TINY, lfgn_widths=(4, 6, 10))
        with pytest.raises(ShapeError, match=r"lfgn\.sub3"):
            check_params(params, other)


class TestResBlock:
    def test_zero_weights_identity(self, rng):
        x = Tensor(rng.standard_normal((1, 3, 5, 5)))
        out = resblock(x, _zero_block(3, 3, False), "b")
        np.testing.assert_array_equal(out.data, x.data)

    def test_zero_weights_projection(self, rng):
        x = Tensor(rng.standard_normal((1, 3, 5, 5)))
        out = resblock(x, _zero_block(3, 5, True), "b").data
        np.testing.assert_array_equal(out[:, :3], x.data)
        assert not out[:, 3:].any()

    def test_gradient(self, rng):
        params = init_params(TINY, 1)
        x = rng.standard_normal((1, 7, 8, 8))
        assert grad_check(lambda t: resblock(t, params, "lfgn.sub1.res0"), x, eps=1e-4) < 1e-2


class TestForward:
    @pytest.mark.parametrize("r,depth", [(4, 1008), (2, 252)])
    def test_lfgn_depth(self, r, depth):
        cfg = dataclasses.replace(TINY, r=r)
        with no_grad():
            out = lfgn_forward(np.zeros((7, 8, 8)), init_params(cfg, 0), cfg)
        assert out.shape == (depth, 8, 8)

    def test_grn_shape_and_divisibility(self, rng):
        params = init_params(TINY, 0)
        with no_grad():
            assert grn_forward(rng.random((1, 1, 64, 64)), params, TINY).shape == (1, 1, 64, 64)
        with pytest.raises(ShapeError, match="divisible by 4"):
            grn_forward(np.zeros((1, 1, 6, 8)), params, TINY)

    @pytest.mark.parametrize("r,side", [(3, 48), (4, 64)])
    def test_end_to_end_shape(self, rng, r, side):
        cfg = dataclasses.replace(TINY, r=r)
        with no_grad():
            out = lcvsr_forward(rng.random((7, 16, 16)), init_params(cfg, 0), cfg)
        assert out.shape == (1, side, side)

    def test_ablation_same_shape(self, rng):
        x = rng.random((7, 8, 8))
        abl = dataclasses.replace(TINY, ablate_lc=True)
        with no_grad():
            a = lcvsr_forward(x, init_params(TINY, 0), TINY)
            b = lcvsr_forward(x, init_params(abl, 0), abl)
        assert a.shape == b.shape

    def test_filters_shape(self, rng):
        with no_grad():
            _, theta = lcvsr_forward(rng.random((7, 8, 8)), init_params(TINY, 0), TINY, return_filters=True)
        assert theta.shape == (1, 7, 24, 24, 4)

    def test_grouped_generator_runs(self, rng):
        cfg = dataclasses.replace(TINY, groups=7)
        with no_grad():
            assert lcvsr_forward(rng.random((7, 8, 8)), init_params(cfg, 0), cfg).shape == (1, 16, 16)

    def test_batched_matches_single(self, rng):
        x = rng.random((2, 7, 8, 8))
        params = init_params(TINY, 0)
        with no_grad():
            both = lcvsr_forward(x, params, TINY).data
            one = lcvsr_forward(x[1], params, TINY).data
        np.testing.assert_allclose(both[1], one, atol=1e-6)

    def test_wrong_frame_count(self):
        with pytest.raises(ShapeError):
            lcvsr_forward(np.zeros((5, 8, 8)), init_params(TINY, 0), TINY)

    def test_end_to_end_gradient_wrt_input(self, rng):
        params = init_params(TINY, 2)
        assert grad_check(lambda t: lcvsr_forward(t, params, TINY), rng.random((7, 8, 8)), eps=1e-4) < 1e-2

    def test_end_to_end_gradient_wrt_weight(self, rng):
        params = init_params(TINY, 2)
        x = rng.random((7, 8, 8))
        name = "lfgn.sub4.res0.conv2.weight"

        def f(w):
            p = dict(params)
            p[name] = w
            return ops.mean_all(lcvsr_forward(x, p, TINY))

        assert grad_check(f, params[name].data, eps=1e-4) < 1e-2

    def test_float64_forward_close_to_float32(self, rng):
        x = rng.random((7, 8, 8))
        params = init_params(TINY, 0)
        with no_grad():
            a = lcvsr_forward(x, params, TINY).data
            with precision(np.float64):
                p64 = {k: Tensor(v.data) for k, v in params.items()}
                b = lcvsr_forward(x, p64, TINY).data
        np.testing.assert_allclose(a, b, atol=1e-4)
