"""Optimization loops for grain synthesis (adversarial) and removal
(supervised), plus checkpoint IO, model application and ablation runs.

Checkpoints are deterministic ZIP archives: a JSON config header plus one
.npy entry per named tensor (model, discriminator, optimizer moments),
with fixed timestamps so identical runs produce identical bytes.
"""
from __future__ import annotations

import dataclasses
import io
import json
import math
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .dataset import DatasetManifest, load_pair, make_level_map
from .errors import ContractError, DataError, NumericError, ParameterError
from .image_io import crop_to_size, ensure_image, pad_to_multiple
from .losses import (RemovalLossConfig, SynthesisLossConfig, adversarial_losses,
                     effective_scales, generator_adversarial_loss, l1_loss,
                     ms_ssim, removal_mix_loss, synthesis_objective)
from .metrics import MetricReport, jsd_nss, psnr
from .metrics import ssim as ssim_metric
from .nets import (DOWN_FACTOR, Generator, GeneratorConfig, init_discriminator,
                   init_generator)
from .rng import mix_int

CHECKPOINT_VERSION = 1
LOG_COLUMNS = ("step", "epoch", "d_loss", "g_loss", "l1", "loss", "psnr", "ms_ssim")


@dataclass(frozen=True)
class TrainConfig:
    """One training run; every field maps to one CLI flag of `train`."""

    task: str = "removal"                  # synthesis | removal
    blind: bool = False                    # removal only: drop the level map input
    epochs: int = 20
    seed: int = 0
    batch_size: int | None = None          # default: 1 synthesis, 16 removal
    lr_generator: float = 3e-4
    lr_discriminator: float = 1e-4
    adam_beta1: float | None = None        # default: 0.5 synthesis, 0.9 removal
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    base_width: int = 64
    residual: bool = True
    global_skip: bool = False
    use_adversarial: bool = True           # synthesis only; off = plain L1 baseline
    removal_loss: str = "mix"              # mix | l1
    lambda_l1: float = 0.1
    gamma: float = 0.84
    ms_ssim_scales: int = 5
    deterministic: bool = False
    checkpoint_every: int = 0              # epochs between periodic checkpoints
    device: str = "cpu"

    def __post_init__(self):
        if self.task not in ("synthesis", "removal"):
            raise ParameterError(f"task must be synthesis or removal, got {self.task!r}")
        if self.removal_loss not in ("mix", "l1"):
            raise ParameterError(f"removal_loss must be mix or l1, got {self.removal_loss!r}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr_generator <= 0 or self.lr_discriminator <= 0:
            raise ParameterError("learning rates must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")

    @property
    def effective_batch_size(self) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return 1 if self.task == "synthesis" else 16

    @property
    def effective_beta1(self) -> float:
        if self.adam_beta1 is not None:
            return self.adam_beta1
        return 0.5 if self.task == "synthesis" else 0.9

    def synthesis_loss_config(self) -> SynthesisLossConfig:
        return SynthesisLossConfig(lambda_l1=self.lambda_l1)

    def removal_loss_config(self, patch: int) -> RemovalLossConfig:
        scales = effective_scales(patch, patch, self.ms_ssim_scales)
        return RemovalLossConfig(gamma=self.gamma, ms_ssim_scales=scales)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def image_to_tensor(img: np.ndarray) -> torch.Tensor:
    """(H, W, C) float array -> (1, C, H, W) float32 tensor."""
    img = ensure_image(img)
    return torch.from_numpy(np.moveaxis(img, 2, 0).copy())[None]


def tensor_to_image(t: torch.Tensor) -> np.ndarray:
    """(1, C, H, W) tensor -> (H, W, C) float32 array."""
    if t.dim() != 4 or t.shape[0] != 1:
        raise ContractError(f"expected (1,C,H,W) tensor, got {tuple(t.shape)}")
    return np.moveaxis(t.detach().cpu().numpy()[0], 0, 2).astype(np.float32)


@dataclass
class Checkpoint:
    """Model + optimizer snapshot sufficient to resume training exactly."""

    task: str
    cfg: TrainConfig
    gen_config: GeneratorConfig
    epoch: int
    gen_state: dict
    disc_state: dict | None = None
    opt_g_state: dict | None = None
    opt_d_state: dict | None = None

    def save(self, path) -> None:
        json_parts: dict[str, dict] = {}
        arrays: dict[str, np.ndarray] = {}
        meta = {
            "version": CHECKPOINT_VERSION,
            "task": self.task,
            "epoch": self.epoch,
            "cfg": self.cfg.to_dict(),
            "gen_config": self.gen_config.to_dict(),
            "has_discriminator": self.disc_state is not None,
        }
        json_parts["meta.json"] = meta
        _pack_tensors(arrays, "gen", self.gen_state)
        if self.disc_state is not None:
            _pack_tensors(arrays, "disc", self.disc_state)
        for tag, opt_state in (("optg", self.opt_g_state), ("optd", self.opt_d_state)):
            if opt_state is None:
                continue
            json_parts[f"{tag}.json"] = _pack_optimizer(arrays, tag, opt_state)
        _write_archive(path, json_parts, arrays)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        path = Path(path)
        if not path.is_file():
            raise DataError(f"no such checkpoint: {path}")
        with zipfile.ZipFile(path) as zf:
            names = set(zf.namelist())
            meta = json.loads(zf.read("meta.json"))
            if meta.get("version") != CHECKPOINT_VERSION:
                raise DataError(f"unsupported checkpoint version {meta.get('version')}")
            gen_state = _unpack_tensors(zf, names, "gen")
            disc_state = _unpack_tensors(zf, names, "disc") if meta["has_discriminator"] else None
            opt_g = _unpack_optimizer(zf, names, "optg")
            opt_d = _unpack_optimizer(zf, names, "optd")
        return cls(
            task=meta["task"],
            cfg=TrainConfig.from_dict(meta["cfg"]),
            gen_config=GeneratorConfig.from_dict(meta["gen_config"]),
            epoch=meta["epoch"],
            gen_state=gen_state,
            disc_state=disc_state,
            opt_g_state=opt_g,
            opt_d_state=opt_d,
        )

    def build_generator(self) -> Generator:
        net = Generator(self.gen_config)
        try:
            net.load_state_dict({k: torch.as_tensor(v) for k, v in self.gen_state.items()},
                                strict=True)
        except RuntimeError as exc:
            raise DataError(f"checkpoint does not match architecture config: {exc}") from exc
        net.eval()
        return net


def _pack_tensors(arrays: dict, prefix: str, state: dict) -> None:
    for key, val in state.items():
        arrays[f"{prefix}/{key}.npy"] = np.asarray(
            val.detach().cpu().numpy() if isinstance(val, torch.Tensor) else val)


def _unpack_tensors(zf: zipfile.ZipFile, names: set, prefix: str) -> dict:
    out = {}
    lead = f"{prefix}/"
    for name in sorted(names):
        if name.startswith(lead) and name.endswith(".npy"):
            arr = np.load(io.BytesIO(zf.read(name)))
            out[name[len(lead):-4]] = arr
    return out


def _pack_optimizer(arrays: dict, tag: str, opt_state: dict) -> dict:
    meta = {"param_groups": opt_state["param_groups"], "state_keys": {}}
    for idx, slots in opt_state["state"].items():
        keys = []
        for key, val in slots.items():
            if isinstance(val, torch.Tensor):
                arrays[f"{tag}/{idx}.{key}.npy"] = val.detach().cpu().numpy()
                keys.append([key, "tensor"])
            else:
                keys.append([key, val])
        meta["state_keys"][str(idx)] = keys
    return meta


def _unpack_optimizer(zf: zipfile.ZipFile, names: set, tag: str) -> dict | None:
    meta_name = f"{tag}.json"
    if meta_name not in names:
        return None
    meta = json.loads(zf.read(meta_name))
    state: dict = {}
    for idx_str, keys in meta["state_keys"].items():
        slots = {}
        for key, marker in keys:
            if marker == "tensor":
                arr = np.load(io.BytesIO(zf.read(f"{tag}/{idx_str}.{key}.npy")))
                slots[key] = torch.as_tensor(arr)
            else:
                slots[key] = marker
        state[int(idx_str)] = slots
    return {"state": state, "param_groups": meta["param_groups"]}


def _write_archive(path, json_parts: dict[str, dict], arrays: dict[str, np.ndarray]) -> None:
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(json_parts):
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, json.dumps(json_parts[name], indent=1, sort_keys=True))
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.save(buf, arrays[name])
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def write_log_csv(path, rows: list[dict]) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in LOG_COLUMNS})


class _Loaded:
    """Whole-manifest tensors; toy datasets fit comfortably in memory."""

    def __init__(self, manifest: DatasetManifest):
        if len(manifest) == 0:
            raise DataError("manifest has no entries")
        cleans, grainies, levels = [], [], []
        shape = None
        for i in range(len(manifest)):
            pair = load_pair(manifest, i)
            if shape is None:
                shape = pair.clean.shape
            elif pair.clean.shape != shape:
                raise DataError(f"entry {i} shape {pair.clean.shape} != {shape}")
            cleans.append(np.moveaxis(pair.clean, 2, 0))
            grainies.append(np.moveaxis(pair.grainy, 2, 0))
            levels.append(pair.level)
        self.clean = torch.from_numpy(np.stack(cleans))
        self.grainy = torch.from_numpy(np.stack(grainies))
        self.levels = torch.tensor(levels, dtype=torch.float32)
        self.channels = int(self.clean.shape[1])
        self.patch = int(self.clean.shape[2])

    def __len__(self) -> int:
        return int(self.clean.shape[0])

    def level_maps(self, idx) -> torch.Tensor:
        n, h, w = len(idx), self.clean.shape[2], self.clean.shape[3]
        return self.levels[idx].view(n, 1, 1, 1).expand(n, 1, h, w).contiguous()


def _setup_run(cfg: TrainConfig) -> None:
    torch.manual_seed(mix_int(cfg.seed, 0x7041) & 0x7FFFFFFFFFFFFFFF)
    if cfg.deterministic:
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    return np.random.default_rng(mix_int(seed, 0x0E0C, epoch)).permutation(n)


def _adam(params, lr: float, cfg: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=lr,
                            betas=(cfg.effective_beta1, cfg.adam_beta2), eps=cfg.adam_eps)


def _check_finite(value: float, what: str, diag_factory, ckpt_path) -> None:
    if math.isfinite(value):
        return
    if ckpt_path is not None:
        diag_path = Path(str(ckpt_path) + ".nan.zip")
        diag_factory().save(diag_path)
        raise NumericError(f"{what} became non-finite; diagnostic checkpoint at {diag_path}")
    raise NumericError(f"{what} became non-finite")


def train_synthesis(cfg: TrainConfig, manifest: DatasetManifest,
                    val_manifest: DatasetManifest | None = None,
                    ckpt_path=None, start_from: Checkpoint | None = None,
                    ) -> tuple[Checkpoint, list[dict]]:
    """Adversarial training of the conditioned grain generator.

    Per batch: one discriminator step maximizing the real/fake objective,
    then one generator step minimizing adversarial + lambda*L1.  With
    use_adversarial=False the generator trains on L1 alone (ablation
    baseline).  Deterministic given cfg.seed in single-thread mode.
    """
    if cfg.task != "synthesis":
        raise ParameterError(f"cfg.task must be synthesis, got {cfg.task}")
    _setup_run(cfg)
    data = _Loaded(manifest)
    gen_config = GeneratorConfig(channels=data.channels, conditioned=True,
                                 base_width=cfg.base_width, residual=cfg.residual,
                                 global_skip=cfg.global_skip)
    gen = init_generator(gen_config, mix_int(cfg.seed, 1))
    disc = init_discriminator(data.channels, mix_int(cfg.seed, 2)) if cfg.use_adversarial else None
    opt_g = _adam(gen.parameters(), cfg.lr_generator, cfg)
    opt_d = _adam(disc.parameters(), cfg.lr_discriminator, cfg) if disc else None
    loss_cfg = cfg.synthesis_loss_config()

    start_epoch = 0
    if start_from is not None:
        _resume(start_from, cfg, gen, disc, opt_g, opt_d)
        start_epoch = start_from.epoch

    def snapshot(epoch: int) -> Checkpoint:
        return Checkpoint(
            task="synthesis", cfg=cfg, gen_config=gen_config, epoch=epoch,
            gen_state=gen.state_dict(),
            disc_state=disc.state_dict() if disc else None,
            opt_g_state=opt_g.state_dict(),
            opt_d_state=opt_d.state_dict() if opt_d else None)

    rows: list[dict] = []
    bsz = cfg.effective_batch_size
    step = start_epoch * math.ceil(len(data) / bsz)
    for epoch in range(start_epoch, cfg.epochs):
        gen.train()
        if disc:
            disc.train()
        order = _epoch_order(cfg.seed, epoch, len(data))
        sums = {"d_loss": 0.0, "g_loss": 0.0, "l1": 0.0, "loss": 0.0}
        batches = 0
        for lo in range(0, len(order), bsz):
            idx = order[lo:lo + bsz].copy()
            x = data.clean[idx]
            y = data.grainy[idx]
            v = data.level_maps(idx)
            fake = gen(x, v)
            if disc:
                opt_d.zero_grad()
                d_loss, _ = adversarial_losses(disc(x, y, v), disc(x, fake.detach(), v))
                d_loss.backward()
                opt_d.step()
                g_adv = generator_adversarial_loss(disc(x, fake, v))
            else:
                d_loss = torch.zeros(())
                g_adv = torch.zeros(())
            l1 = l1_loss(fake, y)
            total = synthesis_objective(g_adv, l1, loss_cfg) if disc else l1
            opt_g.zero_grad()
            total.backward()
            opt_g.step()
            sums["d_loss"] += float(d_loss)
            sums["g_loss"] += float(g_adv)
            sums["l1"] += float(l1)
            sums["loss"] += float(total)
            batches += 1
            step += 1
            _check_finite(float(total) + float(d_loss), "training loss",
                          lambda: snapshot(epoch), ckpt_path)
        row = {"step": step, "epoch": epoch + 1}
        row.update({k: sums[k] / batches for k in sums})
        rows.append(row)
        if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0 and ckpt_path:
            snapshot(epoch + 1).save(ckpt_path)

    ckpt = snapshot(cfg.epochs)
    if ckpt_path is not None:
        ckpt.save(ckpt_path)
    return ckpt, rows


def train_removal(cfg: TrainConfig, manifest: DatasetManifest,
                  val_manifest: DatasetManifest | None = None,
                  ckpt_path=None, start_from: Checkpoint | None = None,
                  ) -> tuple[Checkpoint, list[dict]]:
    """Supervised training of the blind or non-blind grain remover."""
    if cfg.task != "removal":
        raise ParameterError(f"cfg.task must be removal, got {cfg.task}")
    _setup_run(cfg)
    data = _Loaded(manifest)
    val = _Loaded(val_manifest) if val_manifest is not None else None
    gen_config = GeneratorConfig(channels=data.channels, conditioned=not cfg.blind,
                                 base_width=cfg.base_width, residual=cfg.residual,
                                 global_skip=cfg.global_skip)
    gen = init_generator(gen_config, mix_int(cfg.seed, 1))
    opt_g = _adam(gen.parameters(), cfg.lr_generator, cfg)
    loss_cfg = cfg.removal_loss_config(data.patch)

    start_epoch = 0
    if start_from is not None:
        _resume(start_from, cfg, gen, None, opt_g, None)
        start_epoch = start_from.epoch

    def snapshot(epoch: int) -> Checkpoint:
        return Checkpoint(task="removal", cfg=cfg, gen_config=gen_config, epoch=epoch,
                          gen_state=gen.state_dict(), opt_g_state=opt_g.state_dict())

    rows: list[dict] = []
    bsz = cfg.effective_batch_size
    step = start_epoch * math.ceil(len(data) / bsz)
    for epoch in range(start_epoch, cfg.epochs):
        gen.train()
        order = _epoch_order(cfg.seed, epoch, len(data))
        loss_sum, batches = 0.0, 0
        for lo in range(0, len(order), bsz):
            idx = order[lo:lo + bsz].copy()
            x = data.clean[idx]
            y = data.grainy[idx]
            v = data.level_maps(idx) if not cfg.blind else None
            out = gen(y, v)
            if cfg.removal_loss == "mix":
                loss = removal_mix_loss(x, out, loss_cfg)
            else:
                loss = l1_loss(x, out)
            opt_g.zero_grad()
            loss.backward()
            opt_g.step()
            loss_sum += float(loss)
            batches += 1
            step += 1
            _check_finite(float(loss), "training loss", lambda: snapshot(epoch), ckpt_path)
        row = {"step": step, "epoch": epoch + 1, "loss": loss_sum / batches}
        if val is not None:
            row.update(_validate_removal(gen, val, cfg, loss_cfg))
        rows.append(row)
        if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0 and ckpt_path:
            snapshot(epoch + 1).save(ckpt_path)

    ckpt = snapshot(cfg.epochs)
    if ckpt_path is not None:
        ckpt.save(ckpt_path)
    return ckpt, rows


def _validate_removal(gen: Generator, val: "_Loaded", cfg: TrainConfig,
                      loss_cfg: RemovalLossConfig) -> dict:
    gen.eval()
    mses, sims = [], []
    with torch.no_grad():
        for lo in range(0, len(val), 16):
            idx = np.arange(lo, min(lo + 16, len(val)))
            v = val.level_maps(idx) if not cfg.blind else None
            out = gen(val.grainy[idx], v)
            x = val.clean[idx]
            mses.append(float(((out - x) ** 2).mean()))
            sims.append(float(ms_ssim(x, out, loss_cfg)))
    gen.train()
    mse = float(np.mean(mses))
    return {"psnr": float("inf") if mse == 0 else -10.0 * math.log10(mse),
            "ms_ssim": float(np.mean(sims))}


def _resume(start: Checkpoint, cfg: TrainConfig, gen, disc, opt_g, opt_d) -> None:
    # Everything except the epoch budget must match for an exact resume.
    a = dict(start.cfg.to_dict(), epochs=0, checkpoint_every=0)
    b = dict(cfg.to_dict(), epochs=0, checkpoint_every=0)
    if a != b:
        raise ContractError("resume config differs from checkpoint config")
    gen.load_state_dict({k: torch.as_tensor(v) for k, v in start.gen_state.items()})
    if disc is not None and start.disc_state is not None:
        disc.load_state_dict({k: torch.as_tensor(v) for k, v in start.disc_state.items()})
    if start.opt_g_state is not None:
        opt_g.load_state_dict(start.opt_g_state)
    if opt_d is not None and start.opt_d_state is not None:
        opt_d.load_state_dict(start.opt_d_state)


def apply_model(ckpt: Checkpoint, img: np.ndarray, level: float | None = None) -> np.ndarray:
    """Run a trained generator on one image of any size.

    Reflection-pads to a multiple of 16, runs inference, crops back.
    Conditioned models (synthesis, non-blind removal) require `level`.
    """
    gen = ckpt.build_generator()
    conditioned = ckpt.gen_config.conditioned
    if conditioned and level is None:
        raise ContractError(f"{ckpt.task} model is conditioned; a level is required")
    if not conditioned and level is not None:
        raise ContractError("blind model does not accept a level")
    img = ensure_image(img)
    if img.shape[2] != ckpt.gen_config.channels:
        raise ContractError(
            f"model expects {ckpt.gen_config.channels} channels, image has {img.shape[2]}")
    padded, hw = pad_to_multiple(img, DOWN_FACTOR)
    x = image_to_tensor(padded)
    v = None
    if conditioned:
        v = image_to_tensor(make_level_map(level, padded.shape[0], padded.shape[1]))
    with torch.no_grad():
        out = gen(x, v)
    return crop_to_size(tensor_to_image(out), hw)


ABLATION_IDS = (1, 2, 3)


def ablation_config(task: str, config_id: int, base: TrainConfig) -> TrainConfig:
    """Reduced architectures/losses for the three-step ablation ladders.

    synthesis: 1 = plain U-Net + L1 only, 2 = + patch discriminator,
               3 = + residual blocks (full model).
    removal:   1 = plain U-Net + L1, 2 = + residual blocks,
               3 = + multiscale-similarity mix loss (full model).
    """
    if config_id not in ABLATION_IDS:
        raise ParameterError(f"config_id must be one of {ABLATION_IDS}, got {config_id}")
    if task == "synthesis":
        table = {
            1: {"residual": False, "use_adversarial": False},
            2: {"residual": False, "use_adversarial": True},
            3: {"residual": True, "use_adversarial": True},
        }
    elif task == "removal":
        table = {
            1: {"residual": False, "removal_loss": "l1"},
            2: {"residual": True, "removal_loss": "l1"},
            3: {"residual": True, "removal_loss": "mix"},
        }
    else:
        raise ParameterError(f"unknown task {task!r}")
    return dataclasses.replace(base, task=task, **table[config_id])


def evaluate_removal(ckpt: Checkpoint, manifest: DatasetManifest,
                     report: MetricReport | None = None,
                     dataset_name: str = "eval") -> MetricReport:
    """PSNR/SSIM/MS-SSIM/JSD-NSS of filtered outputs against clean truth."""
    report = report if report is not None else MetricReport()
    for i in range(len(manifest)):
        pair = load_pair(manifest, i)
        level = pair.level if not ckpt.cfg.blind else None
        out = apply_model(ckpt, pair.grainy, level)
        report.add_row(dataset_name, pair.level, f"{i:04d}",
                       psnr_db=psnr(pair.clean, out),
                       ssim=ssim_metric(pair.clean, out),
                       ms_ssim=_safe_ms_ssim(pair.clean, out),
                       jsd_nss=jsd_nss(pair.clean, out))
    return report


def evaluate_synthesis(ckpt: Checkpoint, manifest: DatasetManifest,
                       report: MetricReport | None = None,
                       dataset_name: str = "eval") -> MetricReport:
    """Grain-fidelity of generated grain against the rendered ground truth."""
    report = report if report is not None else MetricReport()
    for i in range(len(manifest)):
        pair = load_pair(manifest, i)
        out = apply_model(ckpt, pair.clean, pair.level)
        report.add_row(dataset_name, pair.level, f"{i:04d}",
                       psnr_db=psnr(pair.grainy, out),
                       ssim=ssim_metric(pair.grainy, out),
                       ms_ssim=_safe_ms_ssim(pair.grainy, out),
                       jsd_nss=jsd_nss(pair.grainy, out))
    return report


def _safe_ms_ssim(a: np.ndarray, b: np.ndarray) -> float:
    from .metrics import ms_ssim as msssim_metric
    from .losses import RemovalLossConfig as RLC
    scales = effective_scales(a.shape[0], a.shape[1], 5, warn=False)
    return msssim_metric(a, b, RLC(ms_ssim_scales=scales))


def run_ablation(task: str, config_id: int, manifest: DatasetManifest,
                 val_manifest: DatasetManifest, base: TrainConfig,
                 ckpt_path=None) -> tuple[MetricReport, Checkpoint]:
    """Train one ablation configuration and evaluate it on the val split."""
    cfg = ablation_config(task, config_id, base)
    if task == "synthesis":
        ckpt, _ = train_synthesis(cfg, manifest, ckpt_path=ckpt_path)
        report = evaluate_synthesis(ckpt, val_manifest,
                                    dataset_name=f"{task}-config{config_id}")
    else:
        ckpt, _ = train_removal(cfg, manifest, ckpt_path=ckpt_path)
        report = evaluate_removal(ckpt, val_manifest,
                                  dataset_name=f"{task}-config{config_id}")
    return report, ckpt
