"""Central finite-difference oracle for the reverse-mode gradients."""

from collections.abc import Callable, Sequence

import torch

from region_synth.errors import ContractError, OracleError
from region_synth.numerics.tape import Tape, grad

_DENOM_FLOOR = 1e-8


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    denom = torch.maximum(torch.maximum(analytic.abs(), numeric.abs()), torch.full_like(analytic, _DENOM_FLOOR))
    return float(((analytic - numeric).abs() / denom).max()) if analytic.numel() else 0.0


def _evaluate(fn: Callable[[], torch.Tensor]) -> float:
    value = fn()
    if value.numel() != 1:
        raise ContractError("finite-difference oracle needs a scalar function")
    value = float(value.detach())
    if not torch.isfinite(torch.tensor(value)):
        raise OracleError(f"function value is not finite: {value}")
    return value


def numeric_gradient(fn: Callable[[], torch.Tensor], tensors: Sequence[torch.Tensor], eps: float) -> list[torch.Tensor]:
    """Central differences of ``fn()`` over every entry of ``tensors`` (perturbed in place)."""
    if eps <= 0:
        raise ContractError(f"eps must be > 0, got {eps}")
    grads = []
    for tensor in tensors:
        g = torch.zeros_like(tensor)
        flat = tensor.data.view(-1)
        g_flat = g.view(-1)
        for i in range(flat.numel()):
            old = flat[i].item()
            flat[i] = old + eps
            plus = _evaluate(fn)
            flat[i] = old - eps
            minus = _evaluate(fn)
            flat[i] = old
            g_flat[i] = (plus - minus) / (2 * eps)
        grads.append(g)
    return grads


def finite_diff_check(
    fn: Callable[[torch.Tensor], torch.Tensor], x: torch.Tensor, eps: float = 1e-6, corrupt: float = 1.0
) -> float:
    """
    Worst relative error between ``grad`` and central differences of ``fn`` at ``x``.

    The denominator is ``max(|analytic|, |numeric|, 1e-8)``.
    """
    x = x.detach().clone().requires_grad_(True)
    with Tape() as tape:
        tape.watch(x)
        value = fn(x)
        _evaluate(lambda: value)
        (analytic,) = grad(tape, value, [x])
    (numeric,) = numeric_gradient(lambda: fn(x), [x], eps)
    return relative_error(analytic.detach() * corrupt, numeric)


def finite_diff_check_params(
    loss_fn: Callable[[], torch.Tensor],
    params: Sequence[torch.Tensor],
    eps: float = 1e-6,
    corrupt: float = 1.0,
) -> float:
    """
    Same check over parameter tensors that ``loss_fn`` closes over.

    ``corrupt`` scales the analytic gradient; anything but 1.0 is a negative control.
    """
    with Tape() as tape:
        for p in params:
            if not p.requires_grad:
                p.requires_grad_(True)
            tape.watch(p)
        value = loss_fn()
        _evaluate(lambda: value)
        analytic = grad(tape, value, list(params))
    numeric = numeric_gradient(loss_fn, params, eps)
    return max(
        relative_error(a.detach() * corrupt, n) for a, n in zip(analytic, numeric, strict=True)
    )
