import math
from concurrent.futures import ThreadPoolExecutor

import pytest
import torch

from region_synth.data import ModelDims
from region_synth.errors import ContractError, DimensionError, NonFiniteError, OracleError
from region_synth.model import ConditionalGenerator, reset_parameters
from region_synth.numerics import (
    Tape,
    finite_diff_check,
    finite_diff_check_params,
    grad,
    input_grad_norm,
    input_grad_norms,
    leaky_relu,
    linear,
    matmul,
    relative_error,
    relu,
)
from region_synth.pipeline.gradcheck_suite import check_quadratic_penalty


def t(values):
    return torch.tensor(values, dtype=torch.float64)


class TestMatmul:
    def test_identity(self):
        a = t([[1.0, 2.0], [3.0, 4.0]])
        assert torch.equal(matmul(a, torch.eye(2, dtype=torch.float64)), a)

    def test_scalar_case(self):
        assert matmul(t([[2.0]]), t([[3.0]])).item() == 6.0

    def test_matches_triple_loop(self, gen):
        a = torch.randn(5, 7, generator=gen, dtype=torch.float64)
        b = torch.randn(7, 3, generator=gen, dtype=torch.float64)
        expected = torch.zeros(5, 3, dtype=torch.float64)
        for i in range(5):
            for j in range(3):
                for k in range(7):
                    expected[i, j] += a[i, k] * b[k, j]
        assert relative_error(matmul(a, b), expected) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            matmul(torch.ones(2, 3), torch.ones(2, 3))

    def test_non_finite_is_an_error(self):
        with pytest.raises(NonFiniteError):
            matmul(t([[math.inf]]), t([[0.0]]))


class TestLeakyRelu:
    def test_branches(self):
        assert leaky_relu(t([3.0]), 0.2).item() == 3.0
        assert leaky_relu(t([-1.0]), 0.2).item() == pytest.approx(-0.2, abs=1e-15)

    def test_derivative_on_negative_branch(self):
        with Tape() as tape:
            x = tape.watch(t([-1.0]))
            (g,) = grad(tape, leaky_relu(x, 0.2).sum(), [x])
        assert g.item() == pytest.approx(0.2, abs=1e-15)
        assert finite_diff_check(lambda v: leaky_relu(v, 0.2).sum(), t([-1.0])) < 1e-8

    def test_subgradient_at_zero_takes_positive_branch(self):
        with Tape() as tape:
            x = tape.watch(t([0.0]))
            (g,) = grad(tape, leaky_relu(x).sum(), [x])
        assert g.item() == 1.0

    @pytest.mark.parametrize("slope", [0.0, 1.0, -0.1])
    def test_slope_must_lie_in_unit_interval(self, slope):
        with pytest.raises(ContractError):
            leaky_relu(t([1.0]), slope)


class TestGrad:
    def test_quadratic(self):
        with Tape() as tape:
            x = tape.watch(t([1.0, 2.0]))
            (g,) = grad(tape, (x * x).sum(), [x])
        assert torch.equal(g, t([2.0, 4.0]))

    def test_constant_output(self):
        with Tape() as tape:
            x = tape.watch(t([1.0, 2.0]))
            (g,) = grad(tape, t(3.0), [x])
        assert torch.equal(g, t([0.0, 0.0]))

    def test_unused_input_gets_zero_gradient(self):
        with Tape() as tape:
            x = tape.watch(t([1.0, 2.0]))
            y = tape.watch(t([5.0]))
            gx, gy = grad(tape, (x**2).sum(), [x, y])
        assert torch.equal(gy, t([0.0]))
        assert torch.equal(gx, t([2.0, 4.0]))

    def test_non_scalar_output(self):
        with Tape() as tape:
            x = tape.watch(t([1.0, 2.0]))
            with pytest.raises(ContractError):
                grad(tape, x * 2, [x])

    def test_second_order(self):
        with Tape() as tape:
            x = tape.watch(t([1.0, 3.0]))
            (g,) = grad(tape, (x**3).sum(), [x])
            (h,) = grad(tape, g.sum(), [x])
        assert torch.allclose(h, 6 * t([1.0, 3.0]))

    def test_two_layer_mlp_matches_finite_differences(self, gen):
        w1 = torch.randn(5, 4, generator=gen, dtype=torch.float64)
        b1 = torch.randn(5, generator=gen, dtype=torch.float64)
        w2 = torch.randn(1, 5, generator=gen, dtype=torch.float64)
        x = torch.randn(3, 4, generator=gen, dtype=torch.float64)

        def mlp(v):
            return linear(leaky_relu(linear(v, w1, b1)), w2).sum()

        assert finite_diff_check(mlp, x) < 1e-6


class TestPrimitivesAgainstFiniteDifferences:
    def test_hundred_random_inputs(self, gen):
        b = torch.randn(4, 3, generator=gen, dtype=torch.float64)
        w = torch.randn(2, 4, generator=gen, dtype=torch.float64)
        bias = torch.randn(2, generator=gen, dtype=torch.float64)
        for _ in range(100):
            x = torch.randn(3, 4, generator=gen, dtype=torch.float64)
            away = torch.sign(x) * (0.05 + x.abs())
            assert finite_diff_check(lambda v: (matmul(v, b) ** 2).sum(), x) < 1e-4
            assert finite_diff_check(lambda v: (linear(v, w, bias) ** 2).sum(), x) < 1e-4
            assert finite_diff_check(lambda v: (leaky_relu(v) ** 2).sum(), away) < 1e-4
            assert finite_diff_check(lambda v: (relu(v) ** 2).sum(), away) < 1e-4


class TestInputGradNorm:
    def test_constant_critic(self):
        with Tape() as tape:
            f_hat = tape.watch(t([[0.3, -0.7]]))
            norm = input_grad_norm(tape, t(2.5), f_hat)
        assert norm.item() == 0.0
        assert ((norm - 1.0) ** 2).item() == 1.0

    @pytest.mark.parametrize("f", [[0.0, 0.0], [1.0, -2.0], [10.0, 3.5]])
    def test_linear_critic_has_norm_five(self, f):
        a = t([[3.0], [4.0]])
        with Tape() as tape:
            f_hat = tape.watch(t([f]))
            norm = input_grad_norm(tape, matmul(f_hat, a).sum(), f_hat)
        assert norm.item() == pytest.approx(5.0, abs=1e-12)

    def test_per_row_norms(self):
        a = t([[3.0], [4.0]])
        with Tape() as tape:
            f_hat = tape.watch(t([[1.0, 1.0], [2.0, -1.0], [0.0, 5.0]]))
            norms = input_grad_norms(tape, matmul(f_hat, a).sum(), f_hat)
        assert torch.allclose(norms, t([5.0, 5.0, 5.0]))

    def test_unwatched_input(self):
        with Tape() as tape:
            f = t([[1.0, 2.0]]).requires_grad_(True)
            with pytest.raises(ContractError):
                input_grad_norm(tape, (f * 2).sum(), f)

    def test_quadratic_critic_second_order(self, gen):
        for _ in range(5):
            assert check_quadratic_penalty(gen, 1.0) < 1e-5

    def test_penalty_parameter_gradient_for_two_layer_critic(self, gen):
        w1 = torch.randn(4, 3, generator=gen, dtype=torch.float64).requires_grad_(True)
        w2 = torch.randn(1, 4, generator=gen, dtype=torch.float64).requires_grad_(True)
        f = torch.rand(2, 3, generator=gen, dtype=torch.float64) + 0.5

        def penalty():
            tape = Tape()
            f_hat = tape.watch(f.clone())
            out = linear(leaky_relu(linear(f_hat, w1)), w2).sum()
            return ((input_grad_norms(tape, out, f_hat) - 1.0) ** 2).mean()

        assert finite_diff_check_params(penalty, [w1, w2]) < 1e-5


class TestFiniteDiffCheck:
    def test_sum_of_squares(self):
        assert finite_diff_check(lambda x: (x**2).sum(), t([1.0, -1.0]), eps=1e-5) < 1e-7

    def test_leaky_relu_far_from_zero(self):
        assert finite_diff_check(lambda x: leaky_relu(x).sum(), t([2.0, -3.0, 0.5]), eps=1e-5) < 1e-7

    def test_non_finite_function(self):
        with pytest.raises(OracleError):
            finite_diff_check(lambda x: (x / 0.0).sum(), t([1.0]))

    def test_corrupted_gradient_is_detected(self):
        assert finite_diff_check(lambda x: (x**2).sum(), t([1.0, 2.0]), corrupt=1.5) > 0.3


class TestTape:
    def _generator(self, seed):
        dims = ModelDims(d_f=4, d_w=2, d_z=3, hidden_g=8, hidden_d=8)
        G = ConditionalGenerator(dims)
        reset_parameters(G, 0.5, torch.Generator().manual_seed(seed))
        return G

    def test_records_primitives_in_order(self):
        G = self._generator(0)
        with Tape() as tape:
            G(torch.ones(2, 3, dtype=torch.float64), torch.ones(2, 2, dtype=torch.float64))
        assert [e.op for e in tape.entries] == ["concat", "linear", "leaky_relu", "linear", "relu"]

    def test_replay_is_bit_identical(self):
        G = self._generator(0)
        z = torch.randn(5, 3, generator=torch.Generator().manual_seed(1), dtype=torch.float64)
        with Tape() as tape:
            out = G(z, torch.ones(1, 2, dtype=torch.float64))
        assert torch.equal(tape.replay()[-1], out.detach())

    def test_same_seed_same_outputs_and_gradients(self):
        results = []
        for _ in range(2):
            G = self._generator(3)
            z = torch.randn(5, 3, generator=torch.Generator().manual_seed(4), dtype=torch.float64)
            with Tape() as tape:
                out = G(z, torch.ones(1, 2, dtype=torch.float64)).sum()
                grads = grad(tape, out, list(G.parameters()))
            results.append((out.detach(), [g.detach() for g in grads]))
        assert torch.equal(results[0][0], results[1][0])
        assert all(torch.equal(a, b) for a, b in zip(results[0][1], results[1][1], strict=True))

    def test_no_tape_records_nothing(self):
        with Tape() as tape:
            pass
        matmul(torch.ones(1, 1), torch.ones(1, 1))
        assert tape.entries == []

    def test_tapes_in_different_threads_stay_separate(self):
        def run(count):
            with Tape() as tape:
                for _ in range(count):
                    matmul(torch.ones(2, 2), torch.ones(2, 2))
            return len(tape.entries)

        with ThreadPoolExecutor(max_workers=4) as pool:
            assert list(pool.map(run, [1, 2, 3, 4, 5, 6])) == [1, 2, 3, 4, 5, 6]
