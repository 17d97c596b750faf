import numpy as np
import pytest

from condlab import nn, ortho
from condlab.exceptions import DegenerateInputError, ValidationError

from oracles import fd_gradient, random_orthogonal


class TestNormalizeColumns:
    def test_three_four_five(self):
        out = ortho.l2_normalize_columns(np.array([[3.0], [4.0]]))
        assert np.allclose(out, [[0.6], [0.8]], atol=1e-15)

    def test_orthogonal_unchanged(self):
        q = random_orthogonal(5, np.random.default_rng(1))
        assert np.allclose(ortho.l2_normalize_columns(q), q, atol=1e-12)

    def test_unit_diagonal(self):
        w = np.random.default_rng(2).standard_normal((7, 4)) * 10.0
        what = ortho.l2_normalize_columns(w)
        assert np.allclose(np.diag(what.T @ what), 1.0, atol=1e-12)

    def test_zero_column_flagged_not_raised(self):
        w = np.array([[1.0, 0.0], [0.0, 0.0]])
        out, zero = ortho.l2_normalize_columns(w, return_zero_mask=True)
        assert np.array_equal(zero, [False, True])
        assert np.array_equal(out[:, 1], [0.0, 0.0])


class TestPenalty:
    def test_orthogonal_zero(self):
        q = random_orthogonal(6, np.random.default_rng(3))
        assert ortho.ortho_penalty(q, 7.3) == pytest.approx(0.0, abs=1e-20)

    def test_duplicate_columns(self):
        c = np.array([1.0, 0.0])
        w = np.stack([c, c], axis=1)
        assert ortho.ortho_penalty(w, 1.0) == pytest.approx(2.0, abs=1e-12)

    def test_lambda_zero(self):
        w = np.random.default_rng(4).standard_normal((5, 5))
        assert ortho.ortho_penalty(w, 0.0) == 0.0

    def test_nonnegative(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            w = rng.standard_normal((rng.integers(2, 9), rng.integers(2, 9)))
            assert ortho.ortho_penalty(w, 1.0) >= 0.0

    def test_zero_iff_orthogonal_columns(self):
        rng = np.random.default_rng(6)
        q = random_orthogonal(5, rng) * rng.uniform(0.5, 2.0, size=5)
        assert ortho.ortho_penalty(q, 1.0) < 1e-10
        w = q.copy()
        w[:, 1] = w[:, 0] + 0.3 * w[:, 1]
        assert ortho.ortho_penalty(w, 1.0) > 1e-3

    def test_column_scale_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            w = rng.standard_normal((6, 4))
            d = rng.uniform(0.1, 10.0, size=4)
            a = ortho.ortho_penalty(w, 2.5)
            b = ortho.ortho_penalty(w * d, 2.5)
            assert abs(a - b) <= 1e-10 * max(1.0, a)

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValidationError):
            ortho.ortho_penalty(np.eye(2), -1.0)


class TestPenaltyGrad:
    def test_zero_at_orthogonal(self):
        q = random_orthogonal(5, np.random.default_rng(8))
        assert np.allclose(ortho.ortho_penalty_grad(q, 3.0), 0.0, atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        for shape in [(4, 3), (3, 4), (6, 6), (16, 16)]:
            w = rng.standard_normal(shape)
            lam = float(rng.uniform(0.1, 3.0))
            got = ortho.ortho_penalty_grad(w, lam)

            def f(flat, shape=shape, lam=lam):
                return ortho.ortho_penalty(flat.reshape(shape), lam)

            want = fd_gradient(f, w.ravel().copy()).reshape(shape)
            denom = max(1.0, float(np.abs(want).max()))
            assert np.abs(got - want).max() / denom < 1e-6

    def test_descent_step(self):
        rng = np.random.default_rng(10)
        hits = 0
        for _ in range(100):
            n = int(rng.integers(3, 8))
            w = random_orthogonal(n, rng) + 0.05 * rng.standard_normal((n, n))
            before = ortho.ortho_penalty(w, 1.0)
            if before < 1e-14:
                continue
            g = ortho.ortho_penalty_grad(w, 1.0)
            after = ortho.ortho_penalty(w - 1e-3 * g, 1.0)
            assert after < before
            hits += 1
        assert hits >= 90

    def test_radial_component_is_zero(self):
        # column-scale invariance in gradient form: grad has no component
        # along the column itself
        rng = np.random.default_rng(11)
        w = rng.standard_normal((5, 4))
        g = ortho.ortho_penalty_grad(w, 1.0)
        dots = np.einsum("ij,ij->j", w, g)
        assert np.abs(dots).max() < 1e-12

    def test_zero_column_raises(self):
        w = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegenerateInputError):
            ortho.ortho_penalty_grad(w, 1.0)

    def test_lambda_zero_gradient(self):
        w = np.random.default_rng(12).standard_normal((4, 4))
        assert np.array_equal(ortho.ortho_penalty_grad(w, 0.0), np.zeros((4, 4)))


def two_layer_net(rng):
    net = nn.Network([nn.Dense(6, 5), nn.Relu(), nn.Dense(5, 10)])
    for layer in net.parameterized():
        layer.weight = rng.standard_normal(layer.weight.shape)
        layer.bias = rng.standard_normal(layer.bias.shape)
    return net


class TestTotalLoss:
    def test_disabled_passthrough(self):
        net = two_layer_net(np.random.default_rng(13))
        cfg = ortho.RegConfig(enabled=False, default_lambda=5.0)
        total, breakdown = ortho.total_loss(1.25, net, cfg)
        assert total == 1.25
        assert breakdown == {}

    def test_orthogonal_layers_passthrough(self):
        rng = np.random.default_rng(14)
        net = nn.Network([nn.Dense(12, 12), nn.Relu(), nn.Dense(12, 10)])
        net.layers[0].weight = random_orthogonal(12, rng)
        net.layers[2].weight = random_orthogonal(12, rng)[:, :10]
        cfg = ortho.RegConfig(default_lambda=2.0)
        total, breakdown = ortho.total_loss(0.7, net, cfg)
        assert total == pytest.approx(0.7, abs=1e-12)
        assert all(v < 1e-12 for v in breakdown.values())

    def test_manual_sum(self):
        rng = np.random.default_rng(15)
        net = two_layer_net(rng)
        cfg = ortho.RegConfig(default_lambda=0.5,
                              per_layer={"00-dense": 0.2, "01-dense": 0.9})
        p0 = ortho.ortho_penalty(net.layers[0].weight, 0.2)
        p1 = ortho.ortho_penalty(net.layers[2].weight, 0.9)
        total, breakdown = ortho.total_loss(2.0, net, cfg)
        assert total == pytest.approx(2.0 + p0 + p1, rel=1e-12)
        assert breakdown["00-dense"] == pytest.approx(p0, rel=1e-12)
        assert breakdown["01-dense"] == pytest.approx(p1, rel=1e-12)

    def test_conv_layers_use_matrix_view(self):
        net = nn.build_network("A", seed=16)
        cfg = ortho.RegConfig(default_lambda=1.0)
        conv = net.layers[0]
        want = ortho.ortho_penalty(nn.conv_weight_matrix(conv), 1.0)
        _, breakdown = ortho.total_loss(0.0, net, cfg)
        assert breakdown["00-conv2d"] == pytest.approx(want, rel=1e-12)

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValidationError):
            ortho.RegConfig(default_lambda=-0.1)
        with pytest.raises(ValidationError):
            ortho.RegConfig(per_layer={"00-dense": -1.0})


class TestPenaltyGrads:
    def test_alignment_and_shapes(self):
        net = nn.build_network("A", seed=17)
        cfg = ortho.RegConfig(default_lambda=0.3)
        grads = ortho.penalty_grads(net, cfg)
        assert len(grads) == len(net.layers)
        for layer, g in zip(net.layers, grads):
            if isinstance(layer, nn.PARAMETERIZED):
                assert g.shape == layer.weight.shape
            else:
                assert g is None

    def test_disabled_all_none(self):
        net = nn.build_network("B", seed=18)
        grads = ortho.penalty_grads(net, ortho.RegConfig(enabled=False))
        assert all(g is None for g in grads)

    def test_conv_grad_matches_matrix_view(self):
        net = nn.build_network("A", seed=19)
        cfg = ortho.RegConfig(default_lambda=0.7)
        grads = ortho.penalty_grads(net, cfg)
        conv = net.layers[0]
        want = ortho.ortho_penalty_grad(nn.conv_weight_matrix(conv), 0.7)
        assert np.allclose(grads[0], want.reshape(conv.weight.shape), atol=1e-14)

    def test_per_layer_zero_lambda_skipped(self):
        net = nn.build_network("B", seed=20)
        names = nn.param_layer_names(net)
        cfg = ortho.RegConfig(default_lambda=1.0, per_layer={names[1]: 0.0})
        grads = ortho.penalty_grads(net, cfg)
        param_idx = [i for i, l in enumerate(net.layers)
                     if isinstance(l, nn.PARAMETERIZED)]
        assert grads[param_idx[0]] is not None
        assert grads[param_idx[1]] is None
        assert grads[param_idx[2]] is not None


class TestResolveLambdas:
    def test_scales_with_initial_conditioning(self):
        rng = np.random.default_rng(21)
        net = nn.Network([nn.Dense(8, 8), nn.Relu(), nn.Dense(8, 10)])
        net.layers[0].weight = random_orthogonal(8, rng)  # kappa = 1
        w = rng.standard_normal((8, 10))
        u, s, vt = np.linalg.svd(w, full_matrices=False)
        s = np.linspace(1.0, 1e-3, num=s.size)  # kappa = 1000
        net.layers[2].weight = u @ np.diag(s) @ vt
        cfg = ortho.resolve_lambdas(net, 1e-2)
        names = nn.param_layer_names(net)
        assert cfg.per_layer[names[0]] == pytest.approx(1e-2 * 1.0)  # clamped up
        assert cfg.per_layer[names[1]] == pytest.approx(1e-2 * 3.0, rel=1e-6)

    def test_clamps(self):
        rng = np.random.default_rng(22)
        net = nn.Network([nn.Dense(4, 4), nn.Relu(), nn.Dense(4, 10)])
        u = random_orthogonal(4, rng)
        net.layers[0].weight = u @ np.diag([1.0, 1e-2, 1e-4, 1e-6]) @ u.T  # kappa 1e6
        net.layers[2].weight = rng.standard_normal((4, 10))
        cfg = ortho.resolve_lambdas(net, 0.1)
        names = nn.param_layer_names(net)
        assert cfg.per_layer[names[0]] == pytest.approx(0.1 * 4.0)  # clamped down

    def test_zero_base_disables(self):
        net = nn.build_network("B", seed=23)
        cfg = ortho.resolve_lambdas(net, 0.0)
        assert not cfg.enabled
