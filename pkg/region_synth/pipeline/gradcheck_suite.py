"""
Finite-difference audit of every differentiable piece of the training objective.

Each check draws small random instances, rejects the ones whose activations sit too
close to a ReLU/LeakyReLU kink, and compares reverse-mode gradients against central
differences at 64-bit precision.
"""

import logging
import os
from collections.abc import Callable
from dataclasses import dataclass, field

import torch

from region_synth.data import BACKGROUND, FeatureBatch, LossWeights, ModelDims, NoisePairConfig
from region_synth.errors import NormalizationError
from region_synth.losses import (
    GeneratorLossParts,
    build_hybrid_pool,
    cls_consistency_loss,
    critic_loss,
    generator_adv_loss,
    inter_sp_loss,
    intra_sd_loss,
    total_generator_objective,
)
from region_synth.model import ConditionalCritic, ConditionalGenerator, LinearClassifier, reset_parameters
from region_synth.numerics import (
    Tape,
    active_tape,
    finite_diff_check,
    finite_diff_check_params,
    input_grad_norm,
    leaky_relu,
    matmul,
)
from region_synth.sampling import sample_triplets

CORRUPT_ENV = "REGION_SYNTH_CORRUPT_GRADCHECK"
CORRUPT_FACTOR = 1.5
KINK_MARGIN = 1e-3
MAX_ATTEMPTS_PER_INSTANCE = 50
# step for checks whose value sums many terms; stays well under KINK_MARGIN
COMPOSITE_EPS = 1e-4

DTYPE = torch.float64
TOY_DIMS = ModelDims(d_f=3, d_w=2, d_z=2, hidden_g=4, hidden_d=4)
TOY_CLASSES = [0, 1, 2]
QUERY_ROWS = list(range(len(TOY_CLASSES)))
TAU = 0.1
GP_WEIGHT = 10.0


class _Resample(Exception):
    pass


@dataclass
class GradCheckResult:
    name: str
    max_error: float
    instances: int
    passed: bool


@dataclass
class GradCheckReport:
    tolerance: float
    results: list[GradCheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def format(self) -> str:
        width = max(len(r.name) for r in self.results) if self.results else 0
        lines = [
            f"{r.name:<{width}}  max_rel_error={r.max_error:.3e}  "
            f"instances={r.instances}  {'PASS' if r.passed else 'FAIL'}"
            for r in self.results
        ]
        lines.append(f"tolerance={self.tolerance:.0e}  overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def corrupt_factor_from_env() -> float:
    value = os.getenv(CORRUPT_ENV, "").strip().lower()
    return CORRUPT_FACTOR if value not in ("", "0", "false", "no", "off") else 1.0


def _tape() -> Tape:
    return active_tape() or Tape()


def _screen(fn: Callable[[], torch.Tensor]) -> None:
    """Reject instances with a pre-activation within KINK_MARGIN of zero."""
    try:
        with Tape() as tape:
            fn()
    except NormalizationError as e:
        raise _Resample from e
    for entry in tape.entries:
        if entry.op in ("relu", "leaky_relu") and float(entry.inputs[0].detach().abs().min()) < KINK_MARGIN:
            raise _Resample


def _randn(gen: torch.Generator, *shape: int) -> torch.Tensor:
    return torch.randn(*shape, generator=gen, dtype=DTYPE)


def _away_from_zero(gen: torch.Generator, *shape: int) -> torch.Tensor:
    x = _randn(gen, *shape)
    return torch.sign(x) * (0.1 + x.abs())


def _positive(gen: torch.Generator, *shape: int) -> torch.Tensor:
    return 0.1 + _randn(gen, *shape).abs()


def _toy_networks(gen: torch.Generator) -> tuple[ConditionalGenerator, ConditionalCritic, LinearClassifier]:
    G = ConditionalGenerator(TOY_DIMS, dtype=DTYPE)
    D = ConditionalCritic(TOY_DIMS, dtype=DTYPE)
    C = LinearClassifier(TOY_DIMS.d_f, TOY_CLASSES + [BACKGROUND], dtype=DTYPE)
    for module in (G, D, C):
        reset_parameters(module, 0.5, gen)
        for layer in module.modules():
            if isinstance(layer, torch.nn.Linear) and layer.bias is not None:
                with torch.no_grad():
                    layer.bias.normal_(0.0, 0.5, generator=gen)
    return G, D, C.freeze()


def critic_checked_params(D: ConditionalCritic) -> list[torch.Tensor]:
    """Critic parameters with a non-trivial gradient; the output bias cancels between real and fake."""
    return [D.fc1.weight, D.fc1.bias, D.fc2.weight]


def check_matmul(gen: torch.Generator, corrupt: float) -> float:
    b = _randn(gen, 4, 3)
    return finite_diff_check(lambda a: (matmul(a, b) ** 2).sum(), _randn(gen, 5, 4), corrupt=corrupt)


def check_leaky_relu(gen: torch.Generator, corrupt: float) -> float:
    c = _randn(gen, 6)
    return finite_diff_check(lambda x: (leaky_relu(x) * c).sum(), _away_from_zero(gen, 6), corrupt=corrupt)


def check_generator_mlp(gen: torch.Generator, corrupt: float) -> float:
    G, _, _ = _toy_networks(gen)
    z, w, c = _randn(gen, 4, TOY_DIMS.d_z), _randn(gen, 4, TOY_DIMS.d_w), _randn(gen, 4, TOY_DIMS.d_f)
    _screen(lambda: G(z, w))
    return finite_diff_check(lambda x: (G(x, w) * c).sum(), z, corrupt=corrupt)


def check_critic_loss(gen: torch.Generator, corrupt: float) -> float:
    _, D, _ = _toy_networks(gen)
    f_real, f_fake = _positive(gen, 4, TOY_DIMS.d_f), _positive(gen, 4, TOY_DIMS.d_f)
    w = _randn(gen, 4, TOY_DIMS.d_w)
    mix_seed = int(torch.randint(2**31 - 1, (1,), generator=gen))

    def loss() -> torch.Tensor:
        rng = torch.Generator().manual_seed(mix_seed)
        return critic_loss(D, f_real, f_fake, w, GP_WEIGHT, _tape(), rng)

    _screen(loss)
    return finite_diff_check_params(loss, critic_checked_params(D), eps=COMPOSITE_EPS, corrupt=corrupt)


def check_quadratic_penalty(gen: torch.Generator, corrupt: float) -> float:
    """(||grad_f 0.5 ||A f||^2|| - 1)^2 differentiated with respect to A."""
    A = _randn(gen, 3, 4).requires_grad_(True)
    f = _randn(gen, 1, 4)

    def penalty() -> torch.Tensor:
        tape = _tape()
        f_hat = tape.watch(f.clone())
        d_out = 0.5 * (matmul(f_hat, A.T) ** 2).sum()
        return (input_grad_norm(tape, d_out, f_hat) - 1.0) ** 2

    return finite_diff_check_params(penalty, [A], corrupt=corrupt)


def check_generator_adv(gen: torch.Generator, corrupt: float) -> float:
    G, D, _ = _toy_networks(gen)
    z, w = _randn(gen, 4, TOY_DIMS.d_z), _randn(gen, 4, TOY_DIMS.d_w)

    def loss() -> torch.Tensor:
        return generator_adv_loss(D, G(z, w), w)

    _screen(loss)
    return finite_diff_check_params(loss, list(G.parameters()), eps=COMPOSITE_EPS, corrupt=corrupt)


def check_cls_consistency(gen: torch.Generator, corrupt: float) -> float:
    _, _, C = _toy_networks(gen)
    labels = torch.tensor(TOY_CLASSES + TOY_CLASSES[:1], dtype=torch.long)
    f = _positive(gen, labels.shape[0], TOY_DIMS.d_f)
    return finite_diff_check(lambda x: cls_consistency_loss(C, x, labels), f, corrupt=corrupt)


def check_intra_sd(gen: torch.Generator, corrupt: float) -> float:
    n = 3
    q, p = _positive(gen, 2, TOY_DIMS.d_f), _positive(gen, 2, TOY_DIMS.d_f)
    negs = _positive(gen, 2, n, TOY_DIMS.d_f)
    return finite_diff_check(lambda x: intra_sd_loss(x, p, negs, TAU), q, corrupt=corrupt)


def _toy_pool_inputs(gen: torch.Generator) -> tuple[FeatureBatch, torch.Tensor]:
    real = FeatureBatch(
        features=_positive(gen, len(TOY_CLASSES), TOY_DIMS.d_f),
        labels=torch.tensor(TOY_CLASSES, dtype=torch.long),
    )
    return real, _positive(gen, 2, TOY_DIMS.d_f)


def check_inter_sp(gen: torch.Generator, corrupt: float) -> float:
    """Three queries against an 8-entry pool (3 synthesized, 3 real, 2 background)."""
    labels = torch.tensor(TOY_CLASSES, dtype=torch.long)
    queries = _positive(gen, len(TOY_CLASSES), TOY_DIMS.d_f)
    real, background = _toy_pool_inputs(gen)

    def loss(x: torch.Tensor) -> torch.Tensor:
        pool = build_hybrid_pool(x, labels, real, background)
        return inter_sp_loss(x, labels, pool, TAU, rng=torch.Generator().manual_seed(0), query_indices=QUERY_ROWS)

    return finite_diff_check(loss, queries, corrupt=corrupt)


def check_generator_objective(gen: torch.Generator, corrupt: float) -> float:
    """The weighted generator objective on a 3-class toy, over generator parameters."""
    G, D, C = _toy_networks(gen)
    noise = NoisePairConfig(radius=0.1, num_negatives=3, d_z=TOY_DIMS.d_z)
    weights = LossWeights(lambda1=0.5, lambda2=0.5, lambda3=0.5, tau=TAU)
    labels = torch.tensor(TOY_CLASSES, dtype=torch.long)
    w = _randn(gen, len(TOY_CLASSES), TOY_DIMS.d_w)
    triplets = sample_triplets(len(TOY_CLASSES), noise, gen, dtype=DTYPE)
    real, background = _toy_pool_inputs(gen)
    b, n = len(TOY_CLASSES), noise.num_negatives

    def objective() -> torch.Tensor:
        f_fake = G(triplets.query, w)
        f_pos = G(triplets.positive, w)
        f_negs = G(triplets.negatives.reshape(b * n, -1), w.repeat_interleave(n, dim=0)).reshape(b, n, -1)
        pool = build_hybrid_pool(f_fake, labels, real, background)
        parts = GeneratorLossParts(
            adv=generator_adv_loss(D, f_fake, w),
            l_cs=cls_consistency_loss(C, f_fake, labels),
            l_sd=intra_sd_loss(f_fake, f_pos, f_negs, weights.tau),
            l_sp=inter_sp_loss(
                f_fake, labels, pool, weights.tau, rng=torch.Generator().manual_seed(0), query_indices=QUERY_ROWS
            ),
        )
        return total_generator_objective(parts, weights)

    _screen(objective)
    return finite_diff_check_params(objective, list(G.parameters()), eps=COMPOSITE_EPS, corrupt=corrupt)


GRADIENT_CHECKS: dict[str, Callable[[torch.Generator, float], float]] = {
    "matmul": check_matmul,
    "leaky_relu": check_leaky_relu,
    "generator_mlp": check_generator_mlp,
    "critic_loss_gp": check_critic_loss,
    "quadratic_penalty_2nd_order": check_quadratic_penalty,
    "generator_adv": check_generator_adv,
    "cls_consistency": check_cls_consistency,
    "intra_sd": check_intra_sd,
    "inter_sp": check_inter_sp,
    "generator_objective": check_generator_objective,
}


def run_gradcheck_suite(
    instances: int = 20,
    seed: int = 0,
    tolerance: float = 1e-4,
    corrupt: float | None = None,
    checks: list[str] | None = None,
    logger: logging.Logger | None = None,
) -> GradCheckReport:
    logger = logger or logging.getLogger("region_synth")
    corrupt = corrupt_factor_from_env() if corrupt is None else corrupt
    if corrupt != 1.0:
        logger.warning(f"analytic gradients scaled by {corrupt} (negative control)")
    report = GradCheckReport(tolerance=tolerance)
    for name in checks or list(GRADIENT_CHECKS):
        check = GRADIENT_CHECKS[name]
        gen = torch.Generator().manual_seed(seed)
        errors: list[float] = []
        attempts = 0
        while len(errors) < instances and attempts < instances * MAX_ATTEMPTS_PER_INSTANCE:
            attempts += 1
            try:
                errors.append(check(gen, corrupt))
            except _Resample:
                continue
        max_error = max(errors) if errors else float("inf")
        result = GradCheckResult(
            name=name,
            max_error=max_error,
            instances=len(errors),
            passed=len(errors) == instances and max_error < tolerance,
        )
        logger.info(f"gradcheck {name}: max_rel_error={max_error:.3e} over {len(errors)} instances")
        report.results.append(result)
    return report
