import torch
from torch import nn

from region_synth.data import BACKGROUND, ModelDims
from region_synth.errors import ContractError, DimensionError
from region_synth.numerics import concat, leaky_relu, linear, relu


def _check_width(name: str, tensor: torch.Tensor, width: int) -> None:
    if tensor.dim() != 2 or tensor.shape[1] != width:
        raise DimensionError(f"{name} must have shape (n, {width}), got {tuple(tensor.shape)}")


def _broadcast_condition(x: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    """One semantic row conditions every sample; otherwise rows must pair up."""
    if w.dim() == 1:
        w = w.unsqueeze(0)
    if w.shape[0] == 1 and x.shape[0] != 1:
        w = w.expand(x.shape[0], -1)
    if w.shape[0] != x.shape[0]:
        raise DimensionError(f"got {x.shape[0]} samples but {w.shape[0]} semantic rows")
    return w


class ConditionalGenerator(nn.Module):
    """G(z, w): two fully-connected layers, LeakyReLU hidden, ReLU output."""

    def __init__(self, dims: ModelDims, dtype: torch.dtype = torch.float64):
        super().__init__()
        self.dims = dims
        self.fc1 = nn.Linear(dims.d_z + dims.d_w, dims.hidden_g, dtype=dtype)
        self.fc2 = nn.Linear(dims.hidden_g, dims.d_f, dtype=dtype)

    def forward(self, z: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
        _check_width("noise", z, self.dims.d_z)
        w = _broadcast_condition(z, w)
        _check_width("semantic vector", w, self.dims.d_w)
        h = leaky_relu(linear(concat([z, w]), self.fc1.weight, self.fc1.bias), self.dims.leaky_slope)
        return relu(linear(h, self.fc2.weight, self.fc2.bias))


class ConditionalCritic(nn.Module):
    """D(f, w): two fully-connected layers and an unbounded scalar score per sample."""

    def __init__(self, dims: ModelDims, dtype: torch.dtype = torch.float64):
        super().__init__()
        self.dims = dims
        self.fc1 = nn.Linear(dims.d_f + dims.d_w, dims.hidden_d, dtype=dtype)
        self.fc2 = nn.Linear(dims.hidden_d, 1, dtype=dtype)

    def forward(self, f: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
        _check_width("feature", f, self.dims.d_f)
        w = _broadcast_condition(f, w)
        _check_width("semantic vector", w, self.dims.d_w)
        h = leaky_relu(linear(concat([f, w]), self.fc1.weight, self.fc1.bias), self.dims.leaky_slope)
        return linear(h, self.fc2.weight, self.fc2.bias).squeeze(1)


class LinearClassifier(nn.Module):
    """Linear logits over ``class_ids``; column ``k`` scores ``class_ids[k]``."""

    def __init__(self, d_f: int, class_ids: list[int], dtype: torch.dtype = torch.float64):
        super().__init__()
        if len(set(class_ids)) != len(class_ids):
            raise ContractError(f"duplicate class ids: {class_ids}")
        self.d_f = d_f
        self.class_ids = list(class_ids)
        self.fc = nn.Linear(d_f, len(class_ids), dtype=dtype)

    @property
    def num_classes(self) -> int:
        return len(self.class_ids)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        _check_width("feature", f, self.d_f)
        return linear(f, self.fc.weight, self.fc.bias)

    def logits_for(self, f: torch.Tensor, class_ids: list[int]) -> torch.Tensor:
        """Logits of the listed classes only; other rows are never read."""
        _check_width("feature", f, self.d_f)
        rows = torch.tensor([self.class_ids.index(c) for c in class_ids], dtype=torch.long)
        return linear(f, self.fc.weight[rows], self.fc.bias[rows])

    def label_index(self, labels: torch.Tensor) -> torch.Tensor:
        """Map class ids to column indices."""
        lookup = {c: k for k, c in enumerate(self.class_ids)}
        try:
            return torch.tensor([lookup[int(y)] for y in labels], dtype=torch.long)
        except KeyError as e:
            raise ContractError(f"label {e.args[0]} is not a class of this classifier") from e

    def freeze(self) -> "LinearClassifier":
        for p in self.parameters():
            p.requires_grad_(False)
        return self


class MergedClassifier(nn.Module):
    """
    Seen classifier (seen classes + background) stacked with the unseen classifier.

    The blocks are evaluated separately and concatenated, so the seen block's logits are
    exactly what the seen classifier alone produces.
    """

    def __init__(self, seen: LinearClassifier, unseen: LinearClassifier):
        super().__init__()
        if seen.d_f != unseen.d_f:
            raise DimensionError(f"feature widths differ: seen {seen.d_f}, unseen {unseen.d_f}")
        overlap = set(seen.class_ids) & set(unseen.class_ids)
        if overlap:
            raise ContractError(f"seen and unseen classifiers share class ids {sorted(overlap)}")
        self.seen = seen
        self.unseen = unseen
        self.d_f = seen.d_f

    @property
    def class_ids(self) -> list[int]:
        return self.seen.class_ids + self.unseen.class_ids

    @property
    def num_classes(self) -> int:
        return len(self.class_ids)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        return torch.cat([self.seen(f), self.unseen(f)], dim=1)

    def label_index(self, labels: torch.Tensor) -> torch.Tensor:
        lookup = {c: k for k, c in enumerate(self.class_ids)}
        try:
            return torch.tensor([lookup[int(y)] for y in labels], dtype=torch.long)
        except KeyError as e:
            raise ContractError(f"label {e.args[0]} is not in the merged classifier") from e

    def logits_for(self, f: torch.Tensor, class_ids: list[int]) -> torch.Tensor:
        columns = []
        for c in class_ids:
            block = self.seen if c in self.seen.class_ids else self.unseen
            if c not in block.class_ids:
                raise ContractError(f"class {c} is not in the merged classifier")
            columns.append(block.logits_for(f, [c]))
        return torch.cat(columns, dim=1)


def generator_forward(p: ConditionalGenerator, z: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    return p(z, w)


def discriminator_forward(p: ConditionalCritic, f: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    return p(f, w)


def classifier_forward(p: LinearClassifier | MergedClassifier, f: torch.Tensor) -> torch.Tensor:
    return p(f)


def seen_classifier_ids(seen_ids: list[int]) -> list[int]:
    return list(seen_ids) + [BACKGROUND]
