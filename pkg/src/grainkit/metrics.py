"""Evaluation measures: PSNR, SSIM, MS-SSIM and the grain-fidelity JSD-NSS.

JSD-NSS compares the natural-scene-statistics signature of two images:
mean-subtracted contrast-normalized (MSCN) coefficients are computed on
local Gaussian neighborhoods, local spatial correlation is captured by
products of diagonally adjacent coefficients, and the Jensen-Shannon
divergence between the two product histograms is returned.  Small values
mean the images carry the same distortion character.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from scipy import ndimage

from .errors import ContractError, ParameterError
from .image_io import ensure_image, luminance
from . import losses


@dataclass(frozen=True)
class NssConfig:
    mscn_window: int = 7
    mscn_std: float = 7.0 / 6.0
    mscn_c: float = 1.0 / 255.0
    hist_bins: int = 201
    hist_range: tuple[float, float] = (-2.0, 2.0)
    smoothing_eps: float = 1e-12
    both_diagonals: bool = False
    include_mscn_marginal: bool = False

    def __post_init__(self):
        if self.hist_bins < 2:
            raise ParameterError(f"hist_bins must be >= 2, got {self.hist_bins}")
        lo, hi = self.hist_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ParameterError(f"hist_range must be finite and increasing, got {self.hist_range}")
        if self.smoothing_eps <= 0:
            raise ParameterError(f"smoothing_eps must be > 0, got {self.smoothing_eps}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _gaussian_kernel(size: int, std: float) -> np.ndarray:
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x ** 2) / (2.0 * std ** 2))
    g /= g.sum()
    return np.outer(g, g)


def _local_filter(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # 'mirror' matches the reflect convention used by the loss module.
    return ndimage.correlate(img, kernel, mode="mirror")


def psnr(x: np.ndarray, xhat: np.ndarray, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE); +inf when the inputs are identical."""
    x = ensure_image(x)
    xhat = ensure_image(xhat)
    if x.shape != xhat.shape:
        raise ContractError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    mse = float(np.mean((x.astype(np.float64) - xhat.astype(np.float64)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(peak * peak / mse)


def ssim(x: np.ndarray, xhat: np.ndarray, window: int = 11, std: float = 1.5,
         k1: float = 0.01, k2: float = 0.03, peak: float = 1.0) -> float:
    """Single-scale structural similarity with a Gaussian window."""
    x = ensure_image(x)
    xhat = ensure_image(xhat)
    if x.shape != xhat.shape:
        raise ContractError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    kern = _gaussian_kernel(window, std)
    vals = []
    for c in range(x.shape[2]):
        a = x[:, :, c].astype(np.float64)
        b = xhat[:, :, c].astype(np.float64)
        mu_a = _local_filter(a, kern)
        mu_b = _local_filter(b, kern)
        var_a = _local_filter(a * a, kern) - mu_a ** 2
        var_b = _local_filter(b * b, kern) - mu_b ** 2
        cov = _local_filter(a * b, kern) - mu_a * mu_b
        num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
        den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
        vals.append(np.mean(num / den))
    return float(np.mean(vals))


def ms_ssim(x: np.ndarray, xhat: np.ndarray,
            cfg: losses.RemovalLossConfig = losses.RemovalLossConfig()) -> float:
    """Multiscale similarity; thin wrapper over the differentiable path."""
    x = ensure_image(x)
    xhat = ensure_image(xhat)
    ta = torch.from_numpy(np.moveaxis(x, 2, 0)[None].astype(np.float64))
    tb = torch.from_numpy(np.moveaxis(xhat, 2, 0)[None].astype(np.float64))
    with torch.no_grad():
        return float(losses.ms_ssim(ta, tb, cfg))


def mscn(img: np.ndarray, cfg: NssConfig = NssConfig()) -> np.ndarray:
    """Mean-subtracted contrast-normalized coefficients of the luma plane."""
    y = luminance(img).astype(np.float64)
    kern = _gaussian_kernel(cfg.mscn_window, cfg.mscn_std)
    mu = _local_filter(y, kern)
    var = _local_filter(y * y, kern) - mu ** 2
    sigma = np.sqrt(np.maximum(var, 0.0))
    return (y - mu) / (sigma + cfg.mscn_c)


def diagonal_products(coef: np.ndarray, both_diagonals: bool = False) -> np.ndarray:
    """Products of diagonally adjacent coefficients, main orientation
    c(i,j)*c(i+1,j+1); the anti-diagonal joins in behind the flag."""
    coef = np.asarray(coef, dtype=np.float64)
    if coef.ndim != 2:
        raise ContractError(f"expected 2-D coefficient map, got shape {coef.shape}")
    if coef.shape[0] < 2 or coef.shape[1] < 2:
        return np.empty(0, dtype=np.float64)
    main = (coef[:-1, :-1] * coef[1:, 1:]).ravel()
    if not both_diagonals:
        return main
    anti = (coef[1:, :-1] * coef[:-1, 1:]).ravel()
    return np.concatenate([main, anti])


def jsd(p: np.ndarray, q: np.ndarray, eps: float = 1e-12) -> float:
    """Jensen-Shannon divergence (natural log), in [0, ln 2]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ContractError(f"distributions must be 1-D and equal length: {p.shape} vs {q.shape}")
    if (p < 0).any() or (q < 0).any():
        raise ContractError("distributions must be non-negative")
    p = (p + eps) / (p + eps).sum()
    q = (q + eps) / (q + eps).sum()
    m = 0.5 * (p + q)
    kl_pm = float(np.sum(p * np.log(p / m)))
    kl_qm = float(np.sum(q * np.log(q / m)))
    return 0.5 * kl_pm + 0.5 * kl_qm


def _product_histogram(values: np.ndarray, cfg: NssConfig) -> np.ndarray:
    lo, hi = cfg.hist_range
    clipped = np.clip(values, lo, hi)
    hist, _ = np.histogram(clipped, bins=cfg.hist_bins, range=(lo, hi))
    return hist.astype(np.float64)


def jsd_nss(a: np.ndarray, b: np.ndarray, cfg: NssConfig = NssConfig()) -> float:
    """Grain-fidelity distance between two images; 0 iff identical stats."""
    a = ensure_image(a)
    b = ensure_image(b)
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch: {a.shape} vs {b.shape}")
    ca = mscn(a, cfg)
    cb = mscn(b, cfg)
    pa = _product_histogram(diagonal_products(ca, cfg.both_diagonals), cfg)
    pb = _product_histogram(diagonal_products(cb, cfg.both_diagonals), cfg)
    value = jsd(pa, pb, cfg.smoothing_eps)
    if cfg.include_mscn_marginal:
        ha = _product_histogram(ca.ravel(), cfg)
        hb = _product_histogram(cb.ravel(), cfg)
        value = 0.5 * (value + jsd(ha, hb, cfg.smoothing_eps))
    return value


_REPORT_FIELDS = ("dataset", "level", "item", "psnr_db", "ssim", "ms_ssim", "jsd_nss")
_METRIC_FIELDS = ("psnr_db", "ssim", "ms_ssim", "jsd_nss")


@dataclass
class MetricReport:
    """Per-image rows plus (dataset, level) mean aggregates."""

    rows: list[dict] = field(default_factory=list)

    def add_row(self, dataset: str, level: float, item: str, **metrics) -> None:
        row = {"dataset": dataset, "level": float(level), "item": item}
        for k in _METRIC_FIELDS:
            row[k] = float(metrics[k]) if k in metrics and metrics[k] is not None else None
        self.rows.append(row)

    def aggregates(self) -> list[dict]:
        groups: dict[tuple, list[dict]] = {}
        for row in self.rows:
            groups.setdefault((row["dataset"], row["level"]), []).append(row)
        out = []
        for (dataset, level), rows in sorted(groups.items()):
            agg = {"dataset": dataset, "level": level, "count": len(rows)}
            for k in _METRIC_FIELDS:
                vals = [r[k] for r in rows if r[k] is not None]
                agg[k] = float(np.mean(vals)) if vals else None
            out.append(agg)
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_REPORT_FIELDS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: row.get(k) for k in _REPORT_FIELDS})

    def to_json(self, path) -> None:
        payload = {"rows": self.rows, "aggregates": self.aggregates()}
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))

    def format_table(self) -> str:
        lines = [f"{'dataset':<14}{'level':>8}{'n':>5}{'psnr_db':>10}{'ssim':>8}"
                 f"{'ms_ssim':>9}{'jsd_nss':>10}"]
        for agg in self.aggregates():
            def fmt(v, spec):
                return "-" if v is None else format(v, spec)
            lines.append(
                f"{agg['dataset']:<14}{agg['level']:>8.3f}{agg['count']:>5}"
                f"{fmt(agg['psnr_db'], '>10.2f')}{fmt(agg['ssim'], '>8.4f')}"
                f"{fmt(agg['ms_ssim'], '>9.4f')}{fmt(agg['jsd_nss'], '>10.5f')}")
        return "\n".join(lines)
