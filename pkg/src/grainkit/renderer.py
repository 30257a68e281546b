"""Stochastic film-grain renderer (inhomogeneous Boolean model).

Grain disks are centered on a Poisson process whose intensity follows the
local gray level; each output pixel is the fraction of Gaussian-jittered
Monte Carlo sample points covered by at least one disk.  The intensity is
calibrated so that for a constant input u the expected coverage equals u:

    lambda(u) = -ln(1 - min(u, u_max)) / (pi * (mu_r^2 + sigma_r^2))

since the Boolean-model coverage probability is 1 - exp(-lambda*pi*E[R^2]).

All randomness is counter-based (see rng.py): Poisson counts, grain
positions, radii and sample jitters are pure hashes of
(seed, purpose, cell-or-pixel, index), so output never depends on the
internal row banding used to bound memory.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ParameterError
from .image_io import ensure_image
from .rng import mix, mix64, mix_int, normal_pair_from_bits, u01_from_bits, u01_pair_from_bits

# Paper-sweep grain levels used for dataset builds.
DATASET_LEVELS = (0.010, 0.025, 0.050, 0.075, 0.100)

# Purpose tags for the counter-based RNG.
_TAG_COUNT = 0x11
_TAG_POS = 0x22
_TAG_RADIUS = 0x33
_TAG_JITTER = 0x44

# Memory governors for band processing; observable output is band-independent.
_GRAIN_BUDGET = 6_000_000
_SAMPLE_BUDGET = 4_000_000
_JITTER_CLIP_SIGMAS = 4.0


@dataclass(frozen=True)
class GrainParams:
    """Renderer parameters; serialized verbatim into dataset manifests."""

    mu_r: float
    sigma_r: float = 0.0
    kernel_std: float = 0.8
    mc_samples: int = 800
    seed: int = 0
    u_max: float = 0.9999
    decorrelate_channels: bool = False

    def validate(self) -> None:
        if not (self.mu_r > 0):
            raise ParameterError(f"mu_r must be > 0, got {self.mu_r}")
        if self.sigma_r < 0:
            raise ParameterError(f"sigma_r must be >= 0, got {self.sigma_r}")
        if not (self.kernel_std > 0):
            raise ParameterError(f"kernel_std must be > 0, got {self.kernel_std}")
        if self.mc_samples < 1:
            raise ParameterError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if not (0.0 < self.u_max < 1.0):
            raise ParameterError(f"u_max must be in (0,1), got {self.u_max}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GrainParams":
        return cls(**d)


def _radius_cap(params: GrainParams) -> float:
    # Log-normal tails are clipped so the spatial hash stays a 3x3 probe.
    return params.mu_r + 6.0 * params.sigma_r


def _lognormal_params(mu_r: float, sigma_r: float) -> tuple[float, float]:
    # Moment-matched: mean mu_r, std sigma_r.
    var_ln = math.log(1.0 + (sigma_r / mu_r) ** 2)
    return math.log(mu_r) - 0.5 * var_ln, math.sqrt(var_ln)


def _poisson_counts(uniforms: np.ndarray, lam: np.ndarray) -> np.ndarray:
    counts = np.zeros(lam.shape, dtype=np.int64)
    live = lam > 0
    if live.any():
        u = np.maximum(uniforms[live], 1e-16)  # poisson.ppf(0) is -1 by convention
        counts[live] = stats.poisson.ppf(u, lam[live]).astype(np.int64)
    return counts


def _render_channel(u: np.ndarray, params: GrainParams, chan_key: int, jit_key: int) -> np.ndarray:
    h, w = u.shape
    s = params.mc_samples
    sig = params.kernel_std
    r_cap = _radius_cap(params)
    mean_r2 = params.mu_r ** 2 + params.sigma_r ** 2
    use_lognormal = params.sigma_r > 0
    if use_lognormal:
        mu_ln, sig_ln = _lognormal_params(params.mu_r, params.sigma_r)

    pad = int(math.ceil(_JITTER_CLIP_SIGMAS * sig + max(1.0, r_cap)))
    up = np.pad(np.clip(u.astype(np.float64), 0.0, params.u_max), pad, mode="reflect")
    hp, wp = up.shape
    lam = -np.log1p(-up) / (math.pi * mean_r2)
    if not lam.any():
        return np.zeros((h, w), dtype=np.float32)

    # Subcell size: big enough that a 3x3 probe sees every disk that can
    # cover a point, small enough that cells stay sparsely populated.
    h_sub = max(2.0 * params.mu_r, r_cap, wp / 1e5)
    nsx = int(math.ceil(wp / h_sub))

    k_cnt = mix_int(chan_key, _TAG_COUNT)
    k_pos = mix_int(chan_key, _TAG_POS)
    k_rad = mix_int(chan_key, _TAG_RADIUS)
    k_jit = mix_int(jit_key, _TAG_JITTER)

    # Row banding keeps grain/sample arrays bounded.
    exp_per_row = lam.sum(axis=1)
    jitter_reach = _JITTER_CLIP_SIGMAS * sig
    covered_count = np.zeros(h * w, dtype=np.int32)
    row0 = 0
    while row0 < h:
        row1 = row0 + 1
        while row1 < h:
            lo = max(0, int(math.floor(row0 + pad + 0.5 - jitter_reach - r_cap)))
            hi = int(math.ceil(row1 + 1 + pad + 0.5 + jitter_reach + r_cap))
            n_samples = (row1 + 1 - row0) * w * s
            n_subcells = ((hi - lo) / h_sub + 2) * nsx
            if (exp_per_row[lo:hi].sum() > _GRAIN_BUDGET
                    or n_samples > _SAMPLE_BUDGET or n_subcells > 2.4e7):
                break
            row1 += 1

        # Sample points of output rows [row0, row1), in padded coordinates.
        # The jitter hash is keyed by the global sample index pixel*s + j.
        n_band_pix = (row1 - row0) * w
        gid = np.arange(row0 * w * s, row1 * w * s, dtype=np.uint64)
        dx, dy = normal_pair_from_bits(mix(np.uint64(k_jit), gid))
        np.clip(dx, -_JITTER_CLIP_SIGMAS, _JITTER_CLIP_SIGMAS, out=dx)
        np.clip(dy, -_JITTER_CLIP_SIGMAS, _JITTER_CLIP_SIGMAS, out=dy)
        px = np.repeat((np.arange(row0 * w, row1 * w) % w).astype(np.float32), s)
        py = np.repeat((np.arange(row0 * w, row1 * w) // w).astype(np.float32), s)
        qx = px + np.float32(pad + 0.5) + (sig * dx).astype(np.float32)
        qy = py + np.float32(pad + 0.5) + (sig * dy).astype(np.float32)
        del gid, dx, dy, px, py

        # Grains for every padded cell row a sample might probe.
        g_lo = max(0, int(math.floor(qy.min() - r_cap)))
        g_hi = min(hp, int(math.ceil(qy.max() + r_cap)) + 1)
        cells = np.arange(g_lo * wp, g_hi * wp, dtype=np.uint64)
        lam_band = lam[g_lo:g_hi].ravel()
        counts = _poisson_counts(u01_from_bits(mix(np.uint64(k_cnt), cells)), lam_band)
        total = int(counts.sum())
        if total == 0:
            row0 = row1
            continue
        # Grain identity = cell*2^20 + within-cell index (counts stay far
        # below 2^20), hashed once per attribute stream.
        cell_of_grain = np.repeat(cells, counts)
        starts = np.cumsum(counts) - counts
        k_of_grain = np.arange(total, dtype=np.uint64) - np.repeat(starts.astype(np.uint64), counts)
        with np.errstate(over="ignore"):
            grain_id = (cell_of_grain << np.uint64(20)) | k_of_grain
        ux, uy = u01_pair_from_bits(mix(np.uint64(k_pos), grain_id))
        gx = (cell_of_grain % np.uint64(wp)).astype(np.float32) + ux.astype(np.float32)
        gy = (cell_of_grain // np.uint64(wp)).astype(np.float32) + uy.astype(np.float32)
        if use_lognormal:
            z, _ = normal_pair_from_bits(mix(np.uint64(k_rad), grain_id))
            gr = np.minimum(np.exp(mu_ln + sig_ln * z), r_cap).astype(np.float32)
        else:
            gr = None  # constant radius mu_r
        del ux, uy, cell_of_grain, k_of_grain, counts, starts, grain_id

        # Bin grains into the subcell hash; one empty ring around the grid
        # lets the 3x3 probe run without bounds checks.
        band_y0 = g_lo  # subgrid origin (pixel rows)
        nsy = int(math.ceil((g_hi - g_lo) / h_sub))
        gw = nsx + 2
        sub = ((np.floor((gy - band_y0) / h_sub).astype(np.int64) + 1) * gw
               + np.floor(gx / h_sub).astype(np.int64) + 1)
        order = np.argsort(sub)
        gx, gy, sub = gx[order], gy[order], sub[order]
        if gr is not None:
            gr = gr[order]
        cnt_sub = np.bincount(sub, minlength=(nsy + 2) * gw)
        start_sub = np.concatenate(([0], np.cumsum(cnt_sub)))
        del order, sub

        covered = np.zeros(qx.shape[0], dtype=bool)
        cell0 = ((np.floor((qy - band_y0) / h_sub).astype(np.int64) + 1) * gw
                 + np.floor(qx / h_sub).astype(np.int64) + 1)
        r2_const = np.float32(params.mu_r ** 2)
        for off in (0, -1, 1, -gw, gw, -gw - 1, -gw + 1, gw - 1, gw + 1):
            idx = np.nonzero(~covered)[0]
            if idx.size == 0:
                break
            c = cell0[idx] + off
            k = cnt_sub[c]
            nz = k > 0
            if not nz.any():
                continue
            idx, c, k = idx[nz], c[nz], k[nz]
            pairs = int(k.sum())
            rep_s = np.repeat(idx, k)
            within = np.arange(pairs, dtype=np.int64) - np.repeat(np.cumsum(k) - k, k)
            gi = np.repeat(start_sub[c], k) + within
            d2 = (qx[rep_s] - gx[gi]) ** 2 + (qy[rep_s] - gy[gi]) ** 2
            hit = d2 <= (gr[gi] ** 2 if gr is not None else r2_const)
            if hit.any():
                covered[rep_s[hit]] = True

        hits_per_pixel = covered.reshape(-1, s).sum(axis=1, dtype=np.int32)
        covered_count[row0 * w:row1 * w] = hits_per_pixel
        row0 = row1

    return (covered_count.astype(np.float32) / s).reshape(h, w)


def render_grain(img: np.ndarray, params: GrainParams) -> np.ndarray:
    """Render film grain onto an image; deterministic given (img, params).

    By default all channels share the same grain geometry and sampling
    jitter (monochrome-style grain on gray content); pass
    decorrelate_channels=True for per-channel independent grain.
    """
    params.validate()
    img = ensure_image(img)
    seed_key = mix_int(params.seed)
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        tag = c if params.decorrelate_channels else 0
        chan_key = mix_int(seed_key, tag)
        out[:, :, c] = _render_channel(img[:, :, c], params, chan_key, chan_key)
    return out


def level_seed(base_seed: int, level_index: int) -> int:
    """Sub-seed for level i so the levels of a set are mutually independent."""
    return mix_int(base_seed, level_index)


def render_level_set(img: np.ndarray, levels, base_params: GrainParams) -> list[np.ndarray]:
    """One grainy rendering per requested mean grain radius."""
    outputs = []
    for i, mu in enumerate(levels):
        p = dataclasses.replace(base_params, mu_r=float(mu),
                                seed=level_seed(base_params.seed, i))
        outputs.append(render_grain(img, p))
    return outputs
