"""Training objectives: adversarial terms, L1, MS-SSIM and the mixes.

All functions take float tensors shaped (N, C, H, W) in [0, 1] and return
scalar tensors, differentiable where that matters.  Windowed operations
use an 11x11 Gaussian (sigma 1.5) with reflection padding; multiscale
similarity downsamples dyadically and applies unit exponents to the
luminance/contrast-structure terms.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from .errors import ContractError, ParameterError, ScaleError

# Classical multiscale exponents, restorable behind a flag.
CLASSIC_MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class SynthesisLossConfig:
    lambda_l1: float = 0.1

    def __post_init__(self):
        if self.lambda_l1 < 0:
            raise ParameterError(f"lambda_l1 must be >= 0, got {self.lambda_l1}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisLossConfig":
        return cls(**d)


@dataclass(frozen=True)
class RemovalLossConfig:
    """Mix-loss constants: gamma weighting, the shared Gaussian window and
    the similarity stabilizers (C1 = (k1*L)^2, C2 = (k2*L)^2)."""

    gamma: float = 0.84
    gaussian_size: int = 11
    gaussian_std: float = 1.5
    ms_ssim_scales: int = 5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0
    classic_weights: bool = False

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ParameterError(f"gamma must be in [0,1], got {self.gamma}")
        if self.ms_ssim_scales < 1:
            raise ParameterError(f"ms_ssim_scales must be >= 1, got {self.ms_ssim_scales}")
        if self.gaussian_size % 2 != 1 or self.gaussian_size < 3:
            raise ParameterError(f"gaussian_size must be odd >= 3, got {self.gaussian_size}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RemovalLossConfig":
        return cls(**d)


def gaussian_window(size: int = 11, std: float = 1.5,
                    dtype=torch.float32) -> torch.Tensor:
    """Normalized 2-D Gaussian window of odd size; sums to 1."""
    half = size // 2
    x = torch.arange(-half, half + 1, dtype=dtype)
    g = torch.exp(-(x ** 2) / (2.0 * std ** 2))
    g = g / g.sum()
    return torch.outer(g, g)


def _check_same_shape(a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")


def _windowed(x: torch.Tensor, window: torch.Tensor) -> torch.Tensor:
    """Per-channel Gaussian-weighted local filtering with reflection pad."""
    c = x.shape[1]
    k = window.shape[0]
    w = window.to(x.dtype).expand(c, 1, k, k)
    x = F.pad(x, (k // 2,) * 4, mode="reflect")
    return F.conv2d(x, w, groups=c)


def l1_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference over all samples."""
    _check_same_shape(a, b)
    return (a - b).abs().mean()


def adversarial_losses(real_scores: torch.Tensor,
                       fake_scores: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """(d_loss, g_loss) from pre-sigmoid patch score maps.

    d_loss drives real->1, fake->0 (mean of the two cross-entropy terms);
    g_loss is the non-saturating generator term driving fake->1.
    """
    d_real = F.binary_cross_entropy_with_logits(real_scores, torch.ones_like(real_scores))
    d_fake = F.binary_cross_entropy_with_logits(fake_scores, torch.zeros_like(fake_scores))
    g_loss = F.binary_cross_entropy_with_logits(fake_scores, torch.ones_like(fake_scores))
    return 0.5 * (d_real + d_fake), g_loss


def generator_adversarial_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    return F.binary_cross_entropy_with_logits(fake_scores, torch.ones_like(fake_scores))


def synthesis_objective(g_adv: torch.Tensor, l1: torch.Tensor,
                        cfg: SynthesisLossConfig) -> torch.Tensor:
    """Generator objective: adversarial term plus lambda-weighted L1."""
    return g_adv + cfg.lambda_l1 * l1


def min_size_for_scales(scales: int, window: int = 11) -> int:
    """Smallest input side computable at `scales` (reflect pad at the
    coarsest dyadic level needs size > window//2)."""
    return (window // 2 + 1) * 2 ** (scales - 1)


def ms_ssim(x: torch.Tensor, xhat: torch.Tensor,
            cfg: RemovalLossConfig = RemovalLossConfig()) -> torch.Tensor:
    """Multiscale structural similarity.

    Product of the coarsest-scale luminance term and per-scale
    contrast-structure terms; exponents are 1 unless cfg.classic_weights.
    Full 11x11 window support wants min(H,W) >= 11 * 2^(M-1); inputs down
    to the reflect-pad limit are accepted for small-patch training.
    """
    _check_same_shape(x, xhat)
    m = cfg.ms_ssim_scales
    if min(x.shape[-2:]) < min_size_for_scales(m, cfg.gaussian_size):
        raise ScaleError(
            f"input {tuple(x.shape[-2:])} too small for {m} scales "
            f"(needs >= {min_size_for_scales(m, cfg.gaussian_size)})")
    c1 = (cfg.k1 * cfg.dynamic_range) ** 2
    c2 = (cfg.k2 * cfg.dynamic_range) ** 2
    window = gaussian_window(cfg.gaussian_size, cfg.gaussian_std, dtype=x.dtype)
    if cfg.classic_weights:
        weights = CLASSIC_MSSSIM_WEIGHTS[:m]
    else:
        weights = (1.0,) * m

    total = None
    a, b = x, xhat
    for j in range(m):
        mu_a = _windowed(a, window)
        mu_b = _windowed(b, window)
        var_a = _windowed(a * a, window) - mu_a ** 2
        var_b = _windowed(b * b, window) - mu_b ** 2
        cov = _windowed(a * b, window) - mu_a * mu_b
        cs = ((2 * cov + c2) / (var_a + var_b + c2)).mean()
        term = cs ** weights[j]
        if j == m - 1:
            lum = ((2 * mu_a * mu_b + c1) / (mu_a ** 2 + mu_b ** 2 + c1)).mean()
            term = term * lum ** weights[j]
        total = term if total is None else total * term
        if j < m - 1:
            a = F.avg_pool2d(a, 2)
            b = F.avg_pool2d(b, 2)
    return total


def ms_ssim_loss(x: torch.Tensor, xhat: torch.Tensor,
                 cfg: RemovalLossConfig = RemovalLossConfig()) -> torch.Tensor:
    """1 - ms_ssim; zero at identity."""
    return 1.0 - ms_ssim(x, xhat, cfg)


def gaussian_weighted_l1(x: torch.Tensor, xhat: torch.Tensor,
                         cfg: RemovalLossConfig = RemovalLossConfig()) -> torch.Tensor:
    """Per-pixel |x - xhat| filtered by the shared Gaussian, then averaged.

    Equals plain L1 on constant-difference images since the window sums
    to one and reflection padding preserves constants.
    """
    _check_same_shape(x, xhat)
    window = gaussian_window(cfg.gaussian_size, cfg.gaussian_std, dtype=x.dtype)
    return _windowed((x - xhat).abs(), window).mean()


def removal_mix_loss(x: torch.Tensor, xhat: torch.Tensor,
                     cfg: RemovalLossConfig = RemovalLossConfig()) -> torch.Tensor:
    """gamma * (1 - MS-SSIM) + (1 - gamma) * Gaussian-weighted L1."""
    return (cfg.gamma * ms_ssim_loss(x, xhat, cfg)
            + (1.0 - cfg.gamma) * gaussian_weighted_l1(x, xhat, cfg))


def effective_scales(height: int, width: int, requested: int,
                     window: int = 11, warn: bool = True) -> int:
    """Largest usable scale count <= requested for the given patch size."""
    m = requested
    while m > 1 and min(height, width) < min_size_for_scales(m, window):
        m -= 1
    if m != requested and warn:
        warnings.warn(
            f"multiscale similarity reduced to {m} scales for {height}x{width} inputs",
            stacklevel=2)
    return m
