import numpy as np
import pytest

from agpolicy import neuralnet as nn
from agpolicy.errors import FormatError, InvalidArgument, TruncatedFileError


def small_net(head=nn.HEAD_LINEAR, seed=4):
    return nn.init([5, 7, 3], head, seed)


class TestInit:
    def test_shapes_and_zero_biases(self):
        p = nn.init([28, 256, 256, 256, 25], seed=1)
        assert p.layer_sizes == [28, 256, 256, 256, 25]
        assert all(np.all(b == 0) for b in p.biases)

    def test_he_uniform_bounds(self):
        p = nn.init([50, 400], seed=2)
        limit = np.sqrt(6.0 / 50)
        w = p.weights[0]
        assert np.abs(w).max() <= limit
        assert w.var() == pytest.approx(2.0 / 50, rel=0.05)

    def test_seeded(self):
        assert nn.init([4, 6, 2], seed=9).equals(nn.init([4, 6, 2], seed=9))
        assert not nn.init([4, 6, 2], seed=9).equals(nn.init([4, 6, 2], seed=10))

    def test_float32_is_rounded_float64(self):
        a = nn.init([4, 6, 2], seed=3)
        b = nn.init([4, 6, 2], seed=3, dtype=np.float32)
        assert b.dtype == np.float32
        assert a.astype(np.float32).equals(b)

    @pytest.mark.parametrize("sizes", [[3], [3, 0, 2], []])
    def test_bad_sizes(self, sizes):
        with pytest.raises(InvalidArgument):
            nn.init(sizes)

    def test_mismatched_layers(self):
        with pytest.raises(InvalidArgument):
            nn.MLPParams([np.zeros((3, 4)), np.zeros((5, 2))], [np.zeros(4), np.zeros(2)])
        with pytest.raises(InvalidArgument):
            nn.MLPParams([np.zeros((3, 4))], [np.zeros(4)], head="tanh")


class TestForward:
    def test_single_and_batch_agree(self):
        p = small_net()
        x = np.random.default_rng(0).normal(size=(4, 5))
        batch = nn.forward(p, x)
        assert batch.shape == (4, 3)
        for row, out in zip(x, batch):
            assert np.allclose(nn.forward(p, row), out, rtol=0, atol=1e-14)

    def test_relu_hidden_linear_output(self):
        w1 = np.array([[1.0, -1.0]])
        w2 = np.array([[2.0], [3.0]])
        p = nn.MLPParams([w1, w2], [np.zeros(2), np.array([0.5])])
        assert nn.forward(p, [2.0])[0] == 4.5
        assert nn.forward(p, [-2.0])[0] == 6.5

    def test_squashed_head_bounds(self):
        p = small_net(nn.HEAD_SQUASHED)
        out = nn.forward(p, np.random.default_rng(1).normal(scale=100, size=(50, 5)))
        assert np.all((out >= 0) & (out <= 1))

    def test_zero_preactivation_gives_half(self):
        p = small_net(nn.HEAD_SQUASHED).zeros_like()
        assert np.array_equal(nn.forward(p, np.ones(5)), np.full(3, 0.5))

    def test_wrong_width(self):
        with pytest.raises(InvalidArgument):
            nn.forward(small_net(), np.ones(4))


class TestLoss:
    def test_value(self):
        p = nn.MLPParams([np.array([[2.0]])], [np.array([1.0])])
        loss, _ = nn.loss_and_grad(p, [[1.0], [0.0]], [[0.0], [0.0]])
        assert loss == pytest.approx((9.0 + 1.0) / 2)

    def test_mask_ignores_other_outputs(self):
        p = small_net()
        x = np.random.default_rng(2).normal(size=(6, 5))
        y = np.random.default_rng(3).normal(size=(6, 3))
        mask = np.zeros((6, 3))
        mask[:, 1] = 1
        l1, g1 = nn.loss_and_grad(p, x, y, mask)
        y2 = y.copy()
        y2[:, [0, 2]] += 100.0
        l2, g2 = nn.loss_and_grad(p, x, y2, mask)
        assert l1 == l2
        assert g1.equals(g2)

    def test_bad_kind_and_shapes(self):
        p = small_net()
        with pytest.raises(InvalidArgument):
            nn.loss_and_grad(p, np.ones((2, 5)), np.ones((2, 3)), kind="huber")
        with pytest.raises(InvalidArgument):
            nn.loss_and_grad(p, np.ones((2, 5)), np.ones((2, 2)))
        with pytest.raises(InvalidArgument):
            nn.loss_and_grad(p, np.ones((2, 5)), np.ones((2, 3)), np.ones((2, 2)))


class TestGradcheck:
    @pytest.mark.parametrize("head", [nn.HEAD_LINEAR, nn.HEAD_SQUASHED])
    def test_single_net(self, head):
        rng = np.random.default_rng(5)
        p = nn.init([4, 8, 6, 3], head, 11)
        for b in p.biases:
            b[:] = rng.normal(0, 0.1, b.shape)
        err = nn.gradcheck(p, rng.normal(size=(5, 4)), rng.normal(size=(5, 3)))
        assert err <= 1e-5

    def test_masked(self):
        rng = np.random.default_rng(6)
        p = nn.init([3, 10, 25], nn.HEAD_LINEAR, 1)
        mask = np.zeros((4, 25))
        mask[np.arange(4), [0, 7, 7, 24]] = 1
        assert nn.gradcheck(p, rng.normal(size=(4, 3)), rng.normal(size=(4, 25)), mask) <= 1e-5

    def test_random_nets(self):
        assert nn.gradcheck_random_nets(10, seed=3) <= 1e-5

    def test_relative_error_floor(self):
        a = nn.MLPParams([np.array([[0.0]])], [np.array([1e-12])])
        b = nn.MLPParams([np.array([[0.0]])], [np.array([0.0])])
        assert nn.max_relative_error(a, b) == pytest.approx(1e-4)


class TestAdam:
    def test_first_step_moves_by_lr(self):
        p = nn.MLPParams([np.array([[1.0, -1.0]])], [np.zeros(2)])
        g = nn.MLPParams([np.array([[0.3, -2.0]])], [np.array([0.0, 5.0])])
        st = nn.AdamState.for_params(p, lr=0.01)
        nn.adam_update_(p, g, st)
        assert st.t == 1
        assert np.allclose(p.weights[0], [[0.99, -0.99]], rtol=0, atol=1e-9)
        assert np.allclose(p.biases[0], [0.0, -0.01], rtol=0, atol=1e-9)

    def test_functional_step_leaves_inputs(self):
        p = small_net()
        g = small_net(seed=5)
        st = nn.AdamState.for_params(p, lr=1e-3)
        before = p.copy()
        new_p, new_st = nn.adam_step(p, g, st)
        assert p.equals(before) and st.t == 0
        assert new_st.t == 1 and not new_p.equals(p)

    def test_minimizes_quadratic(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(64, 3))
        y = x @ np.array([[1.0], [-2.0], [0.5]]) + 0.25
        p = nn.init([3, 1], seed=0)
        st = nn.AdamState.for_params(p, lr=0.05)
        for _ in range(600):
            _, g = nn.loss_and_grad(p, x, y)
            nn.adam_update_(p, g, st)
        assert nn.loss_and_grad(p, x, y)[0] < 1e-6

    def test_structure_mismatch(self):
        p = small_net()
        with pytest.raises(InvalidArgument):
            nn.adam_update_(p, nn.init([5, 3]), nn.AdamState.for_params(p))


class TestNormalizer:
    def test_fit_and_apply(self):
        x = np.array([[1.0, 5.0], [3.0, 5.0]])
        n = nn.Normalizer.fit(x)
        assert np.array_equal(n.apply(x), [[-1.0, 0.0], [1.0, 0.0]])

    def test_nonpositive_scale(self):
        with pytest.raises(InvalidArgument):
            nn.Normalizer(np.zeros(2), np.array([1.0, 0.0]))


class TestCheckpoint:
    @pytest.mark.parametrize("head", [nn.HEAD_LINEAR, nn.HEAD_SQUASHED])
    def test_round_trip_is_lossless(self, tmp_path, head):
        rng = np.random.default_rng(8)
        p = nn.init([6, 9, 4], head, 2)
        for b in p.biases:
            b[:] = rng.normal(size=b.shape)
        norm = nn.Normalizer(rng.normal(size=6), rng.uniform(0.1, 3, size=6))
        path = tmp_path / "net.agpl"
        nn.save_checkpoint(p, norm, {"kind": "test", "x": [1, 2]}, path)
        q, norm2, meta = nn.load_checkpoint(path)
        assert q.equals(p) and norm2.equals(norm)
        assert meta == {"kind": "test", "x": [1, 2]}
        nn.save_checkpoint(q, norm2, meta, tmp_path / "again.agpl")
        assert (tmp_path / "again.agpl").read_bytes() == path.read_bytes()

    def test_without_normalizer(self, tmp_path):
        nn.save_checkpoint(small_net(), None, None, tmp_path / "a")
        _, norm, meta = nn.load_checkpoint(tmp_path / "a")
        assert norm is None and meta == {}

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x").write_bytes(b"NOTACHECKPOINT" * 4)
        with pytest.raises(FormatError):
            nn.load_checkpoint(tmp_path / "x")

    def test_truncated(self, tmp_path):
        path = tmp_path / "t"
        nn.save_checkpoint(small_net(), None, {}, path)
        data = path.read_bytes()
        for cut in (3, 12, len(data) // 2, len(data) - 1):
            path.write_bytes(data[:cut])
            with pytest.raises(TruncatedFileError):
                nn.load_checkpoint(path)

    def test_head_mismatch(self, tmp_path):
        nn.save_checkpoint(small_net(), None, {}, tmp_path / "q")
        with pytest.raises(FormatError):
            nn.load_checkpoint(tmp_path / "q", expect_head=nn.HEAD_SQUASHED)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v"
        nn.save_checkpoint(small_net(), None, {}, path)
        data = bytearray(path.read_bytes())
        data[len(nn.MAGIC)] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            nn.load_checkpoint(path)
