"""Paired clean/grainy dataset building, persistence and loading.

A dataset is a directory of PNG patches plus a JSON manifest listing
(clean_path, grainy_path, level, seed) entries together with the renderer
parameter snapshot.  Rendering seeds are derived per (patch, level) so a
rebuild with the same seed is byte-identical, and train/val/test splits
are made at the source-image level to avoid near-duplicate leakage.
"""
from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, DataError, ParameterError
from .image_io import SUPPORTED_SUFFIXES, extract_patches, load_image, save_image
from .renderer import GrainParams, render_grain
from .rng import mix_int

MANIFEST_VERSION = 1


def make_level_map(level: float, h: int, w: int) -> np.ndarray:
    """Constant conditioning map of shape (h, w, 1)."""
    if not (0.0 < level < 1.0):
        raise ParameterError(f"level must be in (0,1), got {level}")
    if h < 1 or w < 1:
        raise ParameterError(f"level map dims must be >= 1, got {h}x{w}")
    return np.full((h, w, 1), level, dtype=np.float32)


@dataclass
class PairedSample:
    clean: np.ndarray
    grainy: np.ndarray
    level_map: np.ndarray

    @property
    def level(self) -> float:
        return float(self.level_map.flat[0])


@dataclass
class DatasetManifest:
    entries: list[dict]
    grain_params: GrainParams
    patch_size: int
    split: str = "all"
    root: Path | None = None

    def save(self, path) -> None:
        path = Path(path)
        payload = {
            "version": MANIFEST_VERSION,
            "split": self.split,
            "patch_size": self.patch_size,
            "grain_params": self.grain_params.to_dict(),
            "entries": self.entries,
        }
        path.write_text(json.dumps(payload, indent=1, sort_keys=True))

    @classmethod
    def load(cls, path, check_files: bool = True) -> "DatasetManifest":
        path = Path(path)
        if not path.is_file():
            raise DataError(f"no such manifest: {path}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"manifest {path} is not valid JSON: {exc}") from exc
        if payload.get("version") != MANIFEST_VERSION:
            raise DataError(f"manifest {path}: unsupported version {payload.get('version')}")
        manifest = cls(
            entries=payload["entries"],
            grain_params=GrainParams.from_dict(payload["grain_params"]),
            patch_size=int(payload["patch_size"]),
            split=payload.get("split", "all"),
            root=path.parent,
        )
        if check_files:
            for entry in manifest.entries:
                for key in ("clean_path", "grainy_path"):
                    if not (manifest.root / entry[key]).is_file():
                        raise DataError(f"manifest references missing file: {entry[key]}")
        return manifest

    def __len__(self) -> int:
        return len(self.entries)


def load_pair(manifest: DatasetManifest, index: int) -> PairedSample:
    """Load one (clean, grainy, level map) triple."""
    if not (0 <= index < len(manifest.entries)):
        raise ContractError(f"index {index} out of range [0, {len(manifest.entries)})")
    if manifest.root is None:
        raise DataError("manifest has no root directory; load it from disk first")
    entry = manifest.entries[index]
    clean = load_image(manifest.root / entry["clean_path"])
    grainy = load_image(manifest.root / entry["grainy_path"])
    if clean.shape != grainy.shape:
        raise DataError(
            f"corrupt pair at index {index}: {clean.shape} vs {grainy.shape}")
    level_map = make_level_map(entry["level"], clean.shape[0], clean.shape[1])
    return PairedSample(clean=clean, grainy=grainy, level_map=level_map)


def list_source_images(src_dir) -> list[Path]:
    src = Path(src_dir)
    if not src.is_dir():
        raise DataError(f"source directory does not exist: {src}")
    files = sorted(p for p in src.iterdir()
                   if p.suffix.lower() in SUPPORTED_SUFFIXES and p.is_file())
    if not files:
        raise DataError(f"no readable images in {src}")
    return files


def _render_one(args) -> None:
    clean, params, out_path = args
    save_image(render_grain(clean, params), out_path)


def build_dataset(src_dir, out_dir, levels, patch_size: int = 256,
                  grain_params: GrainParams = GrainParams(mu_r=0.05),
                  seed: int = 0, split: str = "all",
                  workers: int = 1) -> DatasetManifest:
    """Extract patches, render each at every level, write files + manifest.

    Entry count = (#patches) x (#levels).  The per-entry seed is
    mix(seed, patch_index, level_index), recorded in the manifest.
    """
    levels = [float(v) for v in levels]
    if not levels:
        raise ParameterError("levels must be non-empty")
    for v in levels:
        if not (0.0 < v < 1.0):
            raise ParameterError(f"levels must be in (0,1), got {v}")
    grain_params.validate()
    sources = list_source_images(src_dir)
    out = Path(out_dir)
    (out / "clean").mkdir(parents=True, exist_ok=True)
    (out / "grainy").mkdir(parents=True, exist_ok=True)

    entries: list[dict] = []
    jobs = []
    patch_index = 0
    for src_path in sources:
        img = load_image(src_path)
        for patch in extract_patches(img, size=patch_size, stride=patch_size):
            clean_rel = f"clean/p{patch_index:06d}.png"
            save_image(patch, out / clean_rel)
            for li, level in enumerate(levels):
                entry_seed = mix_int(seed, patch_index, li)
                params = dataclasses.replace(grain_params, mu_r=level, seed=entry_seed)
                grainy_rel = f"grainy/p{patch_index:06d}_l{li}.png"
                jobs.append((patch, params, out / grainy_rel))
                entries.append({
                    "clean_path": clean_rel,
                    "grainy_path": grainy_rel,
                    "level": level,
                    "seed": entry_seed,
                    "source": src_path.name,
                })
            patch_index += 1
    if patch_index == 0:
        raise DataError(f"no source image in {src_dir} yields a {patch_size}px patch")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_render_one, jobs, chunksize=1))
    else:
        for job in jobs:
            _render_one(job)

    manifest = DatasetManifest(entries=entries, grain_params=grain_params,
                               patch_size=patch_size, split=split, root=out)
    manifest.save(out / "manifest.json")
    return manifest


def split_manifest(manifest: DatasetManifest, fractions: dict[str, float],
                   seed: int = 0) -> dict[str, DatasetManifest]:
    """Partition entries by source image into named splits, deterministically.

    fractions maps split name -> weight; weights are normalized.  Every
    entry lands in exactly one split.
    """
    if not fractions:
        raise ParameterError("fractions must be non-empty")
    total = sum(fractions.values())
    if total <= 0:
        raise ParameterError("fractions must have positive total weight")
    names = list(fractions)
    sources = sorted({e.get("source", e["clean_path"]) for e in manifest.entries})
    rng = np.random.default_rng(mix_int(seed, len(sources)))
    order = rng.permutation(len(sources))
    bounds = np.cumsum([fractions[n] / total for n in names])
    assignment: dict[str, str] = {}
    for rank, src_i in enumerate(order):
        frac = (rank + 0.5) / len(sources)
        slot = int(np.searchsorted(bounds, frac))
        slot = min(slot, len(names) - 1)
        assignment[sources[src_i]] = names[slot]
    out = {}
    for name in names:
        entries = [e for e in manifest.entries
                   if assignment[e.get("source", e["clean_path"])] == name]
        out[name] = DatasetManifest(entries=entries, grain_params=manifest.grain_params,
                                    patch_size=manifest.patch_size, split=name,
                                    root=manifest.root)
    return out
