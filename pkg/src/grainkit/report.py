"""Figure rendering for evaluation reports.

All plots are written to files (Agg backend); nothing is interactive.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import NssConfig, diagonal_products, mscn

_STYLES = ("-", "--", ":", "-.")


def plot_nss_histograms(images: dict[str, np.ndarray], out_path,
                        cfg: NssConfig = NssConfig(), title: str | None = None) -> Path:
    """Overlayed histograms of diagonal MSCN products for named images.

    The usual reading: curves that coincide carry the same distortion
    character; grain widens the product distribution relative to clean.
    """
    out_path = Path(out_path)
    lo, hi = cfg.hist_range
    centers = (np.arange(cfg.hist_bins) + 0.5) * (hi - lo) / cfg.hist_bins + lo
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for i, (name, img) in enumerate(images.items()):
        products = np.clip(diagonal_products(mscn(img, cfg), cfg.both_diagonals), lo, hi)
        hist, _ = np.histogram(products, bins=cfg.hist_bins, range=(lo, hi))
        density = hist / max(hist.sum(), 1)
        ax.semilogy(centers, density + cfg.smoothing_eps,
                    _STYLES[i % len(_STYLES)], label=name, linewidth=1.2)
    ax.set_xlabel("diagonal MSCN product")
    ax.set_ylabel("relative frequency")
    ax.set_xlim(lo, hi)
    ax.legend(frameon=False, fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_training_log(rows: list[dict], out_path) -> Path:
    """Loss (and validation PSNR when present) curves over epochs."""
    out_path = Path(out_path)
    epochs = [r["epoch"] for r in rows]
    curves = [(k, label) for k, label in
              (("d_loss", "discriminator"), ("g_loss", "generator adv"),
               ("l1", "L1"), ("loss", "total"))
              if any(k in r for r in rows)]
    has_psnr = any("psnr" in r for r in rows)
    fig, axes = plt.subplots(1, 2 if has_psnr else 1, figsize=(8 if has_psnr else 5, 3.2))
    ax0 = axes[0] if has_psnr else axes
    for i, (key, label) in enumerate(curves):
        vals = [r.get(key) for r in rows]
        if any(v is not None for v in vals):
            ax0.plot(epochs, vals, _STYLES[i % len(_STYLES)], label=label, linewidth=1.2)
    ax0.set_xlabel("epoch")
    ax0.set_ylabel("loss")
    ax0.legend(frameon=False, fontsize=8)
    if has_psnr:
        axes[1].plot(epochs, [r.get("psnr") for r in rows], "-", linewidth=1.2)
        axes[1].set_xlabel("epoch")
        axes[1].set_ylabel("val PSNR (dB)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
