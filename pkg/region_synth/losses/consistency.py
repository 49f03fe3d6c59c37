import torch
import torch.nn.functional as F

from region_synth.data import BACKGROUND
from region_synth.errors import ContractError
from region_synth.model import LinearClassifier


def cls_consistency_loss(
    seen_classifier: LinearClassifier, f_fake: torch.Tensor, labels: torch.Tensor
) -> torch.Tensor:
    """Mean softmax cross-entropy of synthesized features under the frozen seen classifier."""
    if any(p.requires_grad for p in seen_classifier.parameters()):
        raise ContractError("the seen classifier must be frozen")
    if bool((labels == BACKGROUND).any()):
        raise ContractError("background is never a conditioning class")
    targets = seen_classifier.label_index(labels)
    return F.cross_entropy(seen_classifier(f_fake), targets)
