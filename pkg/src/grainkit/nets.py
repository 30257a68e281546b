"""Generator and discriminator architectures.

The generator is a five-scale U-Net whose convolution blocks are residual
(pre-activation BN+ReLU+conv, 1x1 shortcut when channel counts change),
with strided-conv downsampling, transposed-conv upsampling and long skip
concatenations.  A `residual=False` switch swaps the residual blocks for
plain double-conv blocks (ablation baseline).  The discriminator is a
patch classifier: four 4x4 conv blocks (widths 64-128-256-512, strides
2,2,2,1, LeakyReLU 0.2, batch norm except the first) plus a 1-channel
head, giving a 70 px receptive field and a 30x30 score map on 256^2
inputs.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import torch
import torch.nn as nn

from .errors import ContractError, ParameterError

SCALES = 5
DOWN_FACTOR = 2 ** (SCALES - 1)  # spatial dims must divide this

# (kernel, stride) for every discriminator conv including the 1-channel head.
DISC_LAYOUT = ((4, 2), (4, 2), (4, 2), (4, 1), (4, 1))
DISC_WIDTHS = (64, 128, 256, 512)  # body widths; the head follows


@dataclass(frozen=True)
class GeneratorConfig:
    """Architecture switches for a generator instance.

    channels: image channels C in {1,3}; conditioned adds one input channel
    for the constant level map.  base_width is the channel count at the
    finest scale and doubles per scale.
    """

    channels: int = 3
    conditioned: bool = True
    base_width: int = 64
    residual: bool = True
    global_skip: bool = False

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ParameterError(f"channels must be 1 or 3, got {self.channels}")
        if self.base_width < 8:
            raise ParameterError(f"base_width must be >= 8, got {self.base_width}")

    @property
    def in_channels(self) -> int:
        return self.channels + (1 if self.conditioned else 0)

    @property
    def out_channels(self) -> int:
        return self.channels

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(**d)


class ResidualBlock(nn.Module):
    """Pre-activation residual block; 1x1 conv shortcut on width change."""

    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.bn1 = nn.BatchNorm2d(cin)
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.bn2 = nn.BatchNorm2d(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.shortcut = nn.Conv2d(cin, cout, 1) if cin != cout else nn.Identity()

    def forward(self, x):
        h = self.conv1(torch.relu(self.bn1(x)))
        h = self.conv2(torch.relu(self.bn2(h)))
        return h + self.shortcut(x)


class PlainBlock(nn.Module):
    """Non-residual double conv, used by the ablation baselines."""

    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.bn1 = nn.BatchNorm2d(cin)
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.bn2 = nn.BatchNorm2d(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)

    def forward(self, x):
        h = self.conv1(torch.relu(self.bn1(x)))
        return self.conv2(torch.relu(self.bn2(h)))


class Generator(nn.Module):
    """Five-scale encoder-decoder mapping [0,1] images to [0,1] images."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        block = ResidualBlock if config.residual else PlainBlock
        ws = [config.base_width * 2 ** s for s in range(SCALES)]
        self.stem = nn.Conv2d(config.in_channels, ws[0], 3, padding=1)
        self.enc = nn.ModuleList(block(ws[s], ws[s]) for s in range(SCALES))
        self.down = nn.ModuleList(
            nn.Conv2d(ws[s], ws[s + 1], 3, stride=2, padding=1) for s in range(SCALES - 1))
        self.up = nn.ModuleList(
            nn.ConvTranspose2d(ws[s], ws[s - 1], 2, stride=2) for s in range(SCALES - 1, 0, -1))
        self.dec = nn.ModuleList(
            block(2 * ws[s - 1], ws[s - 1]) for s in range(SCALES - 1, 0, -1))
        self.head = nn.Conv2d(ws[0], config.out_channels, 3, padding=1)

    def forward(self, img: torch.Tensor, level: torch.Tensor | None = None) -> torch.Tensor:
        if img.dim() != 4 or img.shape[1] != self.config.channels:
            raise ContractError(
                f"expected (N,{self.config.channels},H,W) input, got {tuple(img.shape)}")
        if self.config.conditioned:
            if level is None:
                raise ContractError("conditioned generator requires a level map")
            if level.shape[0] != img.shape[0] or level.shape[-2:] != img.shape[-2:]:
                raise ContractError(
                    f"level map shape {tuple(level.shape)} does not match image {tuple(img.shape)}")
            x = torch.cat([img, level], dim=1)
        else:
            if level is not None:
                raise ContractError("unconditioned generator got a level map")
            x = img
        h_dim, w_dim = img.shape[-2:]
        if h_dim % DOWN_FACTOR or w_dim % DOWN_FACTOR:
            raise ContractError(
                f"spatial dims must be divisible by {DOWN_FACTOR}, got {h_dim}x{w_dim}")

        skips = []
        h = self.stem(x)
        for s in range(SCALES):
            h = self.enc[s](h)
            if s < SCALES - 1:
                skips.append(h)
                h = self.down[s](h)
        for up, dec, skip in zip(self.up, self.dec, reversed(skips)):
            h = dec(torch.cat([up(h), skip], dim=1))
        out = self.head(h)
        if self.config.global_skip:
            out = out + img
        return torch.sigmoid(out)


class PatchDiscriminator(nn.Module):
    """Patch classifier over (clean, candidate, level) triples.

    Returns pre-sigmoid logits of shape (N, 1, n, n); n = 30 for 256^2
    inputs under the fixed layout.
    """

    def __init__(self, image_channels: int = 3):
        super().__init__()
        cin = 2 * image_channels + 1
        layers: list[nn.Module] = []
        prev = cin
        for width, (k, s) in zip(DISC_WIDTHS, DISC_LAYOUT):
            layers.append(nn.Conv2d(prev, width, k, stride=s, padding=1))
            if prev != cin:
                layers.append(nn.BatchNorm2d(width))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            prev = width
        k, s = DISC_LAYOUT[-1]
        layers.append(nn.Conv2d(prev, 1, k, stride=s, padding=1))
        self.stack = nn.Sequential(*layers)
        self.image_channels = image_channels

    def forward(self, clean: torch.Tensor, candidate: torch.Tensor,
                level: torch.Tensor) -> torch.Tensor:
        for name, t in (("clean", clean), ("candidate", candidate), ("level", level)):
            if t.shape[-2:] != clean.shape[-2:]:
                raise ContractError(f"{name} spatial dims mismatch: {tuple(t.shape)}")
        if clean.shape != candidate.shape:
            raise ContractError(
                f"clean {tuple(clean.shape)} vs candidate {tuple(candidate.shape)}")
        return self.stack(torch.cat([clean, candidate, level], dim=1))


def _init_weights(module: nn.Module, gen: torch.Generator) -> None:
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
            with torch.no_grad():
                m.weight.normal_(0.0, 0.02, generator=gen)
                if m.bias is not None:
                    m.bias.zero_()
        elif isinstance(m, nn.BatchNorm2d):
            with torch.no_grad():
                m.weight.normal_(1.0, 0.02, generator=gen)
                m.bias.zero_()


def init_generator(config: GeneratorConfig, seed: int) -> Generator:
    """Build a generator with seed-deterministic normal(0, 0.02) init."""
    net = Generator(config)
    gen = torch.Generator().manual_seed(seed & 0x7FFFFFFFFFFFFFFF)
    _init_weights(net, gen)
    return net


def init_discriminator(image_channels: int, seed: int) -> PatchDiscriminator:
    net = PatchDiscriminator(image_channels)
    gen = torch.Generator().manual_seed(seed & 0x7FFFFFFFFFFFFFFF)
    _init_weights(net, gen)
    return net


def score_map_size(input_size: int, layout=DISC_LAYOUT) -> int:
    """Spatial size of the discriminator output for a square input."""
    n = input_size
    for k, s in layout:
        n = (n + 2 - k) // s + 1
    return n


def receptive_field(layout=DISC_LAYOUT) -> int:
    """Receptive field of one output score, by the standard conv arithmetic."""
    rf, jump = 1, 1
    for k, s in layout:
        rf += (k - 1) * jump
        jump *= s
    return rf
