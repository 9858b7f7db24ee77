"""Quantization primitives and the gradient-safe lower bound.

Rounding is half away from zero everywhere (0.5 -> 1, -0.5 -> -1); the
default tie-to-even of torch.round would change entropy-coded symbols.
"""

import enum

import torch


class QuantizerMode(str, enum.Enum):
    """How latents are made discrete-ish.

    TRAIN_NOISE adds i.i.d. uniform noise in [-0.5, 0.5) as the usual
    differentiable surrogate; TEST_ROUND rounds half away from zero.
    """

    TRAIN_NOISE = "train_noise"
    TEST_ROUND = "test_round"


def round_half_away(x: torch.Tensor) -> torch.Tensor:
    """Round to nearest integer with ties going away from zero."""
    return torch.sign(x) * torch.floor(torch.abs(x) + 0.5)


def uniform_noise_like(x: torch.Tensor, generator: torch.Generator | None = None) -> torch.Tensor:
    """Noise in [-0.5, 0.5), drawn from `generator` when given."""
    return torch.rand(x.shape, dtype=x.dtype, device=x.device, generator=generator) - 0.5


def quantize(
    x: torch.Tensor,
    mode: QuantizerMode,
    noise: torch.Tensor | None = None,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Quantize `x` under `mode`.

    In TRAIN_NOISE mode a caller may pin the noise tensor for reproducible
    finite-difference checks; otherwise it is sampled.  TEST_ROUND ignores
    `generator` and rejects an explicit noise tensor.
    """
    mode = QuantizerMode(mode)
    if mode is QuantizerMode.TRAIN_NOISE:
        if noise is None:
            noise = uniform_noise_like(x, generator)
        return x + noise
    if noise is not None:
        from cnfv.errors import ContractViolation

        raise ContractViolation("explicit noise is only valid in train_noise mode")
    return round_half_away(x)


class _LowerBound(torch.autograd.Function):
    """clamp_min with a straight-through-ish gradient.

    The gradient passes whenever the input is above the bound or the
    gradient pushes the value back up; this keeps bounded quantities
    (scales, probabilities) trainable at the boundary.
    """

    @staticmethod
    def forward(ctx, x, bound):
        ctx.save_for_backward(x, bound)
        return torch.max(x, bound)

    @staticmethod
    def backward(ctx, grad_output):
        x, bound = ctx.saved_tensors
        passthrough = (x >= bound) | (grad_output < 0)
        return grad_output * passthrough, None


def lower_bound(x: torch.Tensor, bound: float) -> torch.Tensor:
    bound_t = torch.tensor(bound, dtype=x.dtype, device=x.device)
    return _LowerBound.apply(x, bound_t)
