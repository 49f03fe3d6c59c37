"""
Differentiable primitives and the tape that records them.

Gradients come from ``torch.autograd``; the tape adds what the training code needs on
top: a per-context record of primitive ops that can be replayed, a scalar-output
contract for ``grad``, zero gradients for inputs the output does not depend on, and the
double-differentiation helper behind the gradient penalty.
"""

from collections.abc import Callable, Sequence
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Any

import torch
import torch.nn.functional as F

from region_synth.errors import ContractError, DimensionError, NonFiniteError

_ACTIVE_TAPE: ContextVar["Tape | None"] = ContextVar("region_synth_active_tape", default=None)


@dataclass(frozen=True)
class TapeEntry:
    op: str
    fn: Callable[..., torch.Tensor]
    inputs: tuple[torch.Tensor, ...]
    kwargs: dict[str, Any]
    output: torch.Tensor


@dataclass
class Tape:
    """
    Records primitive ops executed while it is the active tape.

    Use as a context manager. Tapes are bound to the current context (thread or task),
    so independent tapes can run concurrently. ``higher_order`` keeps the graph of every
    gradient it hands out, which is what makes second-order gradients available.
    """

    higher_order: bool = True
    entries: list[TapeEntry] = field(default_factory=list)
    _watched: set[int] = field(default_factory=set)
    _token: Any = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def watch(self, tensor: torch.Tensor) -> torch.Tensor:
        """Return ``tensor`` as a differentiable leaf tracked by this tape."""
        if not tensor.requires_grad:
            tensor = tensor.detach().requires_grad_(True)
        self._watched.add(id(tensor))
        return tensor

    def watches(self, tensor: torch.Tensor) -> bool:
        return id(tensor) in self._watched or any(e.output is tensor for e in self.entries)

    def record(self, entry: TapeEntry) -> None:
        self.entries.append(entry)

    def replay(self) -> list[torch.Tensor]:
        """Re-run every recorded op on the recorded inputs, in order."""
        replayed: dict[int, torch.Tensor] = {}
        outputs = []
        with torch.no_grad():
            for entry in self.entries:
                inputs = [replayed.get(id(x), x).detach() for x in entry.inputs]
                out = entry.fn(*inputs, **entry.kwargs)
                replayed[id(entry.output)] = out
                outputs.append(out)
        return outputs


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE.get()


def check_finite(tensor: torch.Tensor, where: str) -> torch.Tensor:
    if not bool(torch.isfinite(tensor).all()):
        raise NonFiniteError(f"{where} produced non-finite values")
    return tensor


def _apply(op: str, fn: Callable[..., torch.Tensor], *inputs: torch.Tensor, **kwargs) -> torch.Tensor:
    out = check_finite(fn(*inputs, **kwargs), op)
    tape = _ACTIVE_TAPE.get()
    if tape is not None:
        tape.record(TapeEntry(op=op, fn=fn, inputs=tuple(inputs), kwargs=kwargs, output=out))
    return out


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.dim() != 2 or b.dim() != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {tuple(a.shape)} and {tuple(b.shape)}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner dimensions differ: {tuple(a.shape)} x {tuple(b.shape)}")
    return _apply("matmul", torch.matmul, a, b)


def _leaky_relu(x: torch.Tensor, slope: float) -> torch.Tensor:
    # x >= 0 puts the subgradient at exactly 0 on the positive branch
    return torch.where(x >= 0, x, slope * x)


def leaky_relu(x: torch.Tensor, slope: float = 0.2) -> torch.Tensor:
    if not 0.0 < slope < 1.0:
        raise ContractError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    return _apply("leaky_relu", _leaky_relu, x, slope=slope)


def relu(x: torch.Tensor) -> torch.Tensor:
    return _apply("relu", torch.relu, x)


def linear(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor | None = None) -> torch.Tensor:
    """``x @ weight.T + bias`` with ``weight`` stored as (out, in)."""
    if x.dim() != 2 or x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"linear expects input (*, {weight.shape[1]}), got {tuple(x.shape)}"
        )
    if bias is None:
        return _apply("linear", F.linear, x, weight)
    return _apply("linear", F.linear, x, weight, bias)


def _concat(*tensors: torch.Tensor) -> torch.Tensor:
    return torch.cat(tensors, dim=1)


def concat(tensors: Sequence[torch.Tensor]) -> torch.Tensor:
    """Concatenate 2-D tensors along the feature axis."""
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1 or any(t.dim() != 2 for t in tensors):
        raise DimensionError(f"concat expects 2-D tensors with equal rows, got {[tuple(t.shape) for t in tensors]}")
    return _apply("concat", _concat, *tensors)


def grad(tape: Tape, output: torch.Tensor, inputs: Sequence[torch.Tensor]) -> list[torch.Tensor]:
    """
    Reverse-mode gradients of a scalar ``output`` with respect to ``inputs``.

    Inputs the output does not depend on (or that are not differentiable at all) get
    zero gradients. With ``tape.higher_order`` the returned gradients are themselves
    differentiable.
    """
    if output.numel() != 1:
        raise ContractError(f"grad needs a scalar output, got shape {tuple(output.shape)}")
    wanted = [i for i, x in enumerate(inputs) if x.requires_grad]
    grads: list[torch.Tensor] = [torch.zeros_like(x) for x in inputs]
    if not output.requires_grad or not wanted:
        return grads
    computed = torch.autograd.grad(
        output.reshape(()),
        [inputs[i] for i in wanted],
        retain_graph=True,
        create_graph=tape.higher_order,
        allow_unused=True,
    )
    for i, g in zip(wanted, computed, strict=True):
        if g is not None:
            grads[i] = g
    return grads


def _input_gradient(tape: Tape, d_out: torch.Tensor, f_hat: torch.Tensor) -> torch.Tensor:
    if not f_hat.requires_grad or not tape.watches(f_hat):
        raise ContractError("f_hat is not a watched tensor on this tape")
    if d_out.numel() != 1:
        raise ContractError(f"critic output must be reduced to a scalar, got {tuple(d_out.shape)}")
    if not d_out.requires_grad:
        return torch.zeros_like(f_hat)
    (g,) = torch.autograd.grad(
        d_out.reshape(()), [f_hat], retain_graph=True, create_graph=True, allow_unused=True
    )
    return torch.zeros_like(f_hat) if g is None else g


def input_grad_norm(tape: Tape, d_out: torch.Tensor, f_hat: torch.Tensor) -> torch.Tensor:
    """L2 norm of d(d_out)/d(f_hat) as a differentiable scalar."""
    return torch.linalg.vector_norm(_input_gradient(tape, d_out, f_hat))


def input_grad_norms(tape: Tape, d_out: torch.Tensor, f_hat: torch.Tensor) -> torch.Tensor:
    """
    Per-row L2 norms of d(d_out)/d(f_hat).

    With ``d_out`` the sum of per-sample critic scores, row ``i`` of the gradient is the
    input-gradient of sample ``i`` alone, which is what the batched penalty needs.
    """
    g = _input_gradient(tape, d_out, f_hat)
    return torch.linalg.vector_norm(g.reshape(g.shape[0], -1), dim=1)
