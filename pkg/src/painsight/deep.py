"""Pretrained-backbone pain classifier and its two-phase fine-tuning loop.

The classification head is two fully-connected layers with a rectifier
in between, emitting two logits.  Phase 1 trains the head only with the
backbone frozen; phase 2 additionally unfreezes the backbone's last
block (its final stage) for the remaining epochs.  The smoke profile
substitutes a small 3-stage convolutional stack with the same interface
so the full pipeline stays testable on a laptop CPU without pretrained
weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import (
    DegenerateLabelsError,
    NonFiniteLossError,
    NotTrainedError,
    RangeError,
    WeightsUnavailableError,
)
from .preprocess import AugmentationSpec, augment_frame

from enum import Enum


class BackboneProfile(str, Enum):
    PAPER = "paper"
    SMOKE = "smoke"


@dataclass(frozen=True)
class HeadSpec:
    hidden_width: int = 256
    output_classes: int = 2

    def __post_init__(self) -> None:
        if self.hidden_width < 2:
            raise ValueError("hidden_width must be >= 2")


@dataclass(frozen=True)
class TrainSchedule:
    phase1_epochs: int = 18
    phase2_epochs: int = 2
    batch_size: int = 128
    base_lr: float = 0.005
    lr_decay_factor: float = 0.1
    lr_decay_every: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.phase1_epochs < 0 or self.phase2_epochs < 0 or self.total_epochs < 1:
            raise ValueError("schedule needs at least one epoch")
        if self.batch_size < 1 or self.base_lr <= 0 or self.lr_decay_every < 1:
            raise ValueError("bad schedule hyperparameters")

    @property
    def total_epochs(self) -> int:
        return self.phase1_epochs + self.phase2_epochs


def _filter_bank_weights() -> torch.Tensor:
    """Fixed 3x3 kernels over luma: identity, blur, and rectified-pair
    edge/ridge detectors (+/- sobel x, +/- sobel y, +/- laplacian).

    A deterministic stem stands in for pretrained features: it preserves
    intensity and local-contrast information, so the fresh head already
    has something to learn from while the backbone is frozen.
    """
    luma = torch.tensor([0.299, 0.587, 0.114])
    identity = torch.zeros(3, 3)
    identity[1, 1] = 1.0
    blur = torch.full((3, 3), 1.0 / 9.0)
    sobel_x = torch.tensor([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]) / 4.0
    sobel_y = sobel_x.t()
    laplacian = torch.tensor([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]) / 4.0
    kernels = [identity, blur, sobel_x, -sobel_x, sobel_y, -sobel_y, laplacian, -laplacian]
    weight = torch.stack([k[None, :, :] * luma[:, None, None] for k in kernels])
    return weight  # (8, 3, 3, 3)


class _SmokeBackbone(nn.Module):
    """Small deterministic conv stack for CI-scale runs.

    Three stages mirror the frozen-then-unfreeze-last-block contract: an
    aggressive entry pool (cheap on one CPU core), a fixed filter-bank
    stage, and a trainable refinement stage (the "last block",
    identity-initialized so phase 1 sees clean stem features).  Spatial
    grid pooling keeps locality that a global average would destroy.
    """

    grid = 8
    channels = 8
    feature_dim = channels * grid * grid

    def __init__(self) -> None:
        super().__init__()
        self.entry = nn.AvgPool2d(4)  # 224 -> 56
        self.bank = nn.Conv2d(3, self.channels, 3, padding=1, bias=False)
        with torch.no_grad():
            self.bank.weight.copy_(_filter_bank_weights())
        self.mid = nn.AvgPool2d(2)  # 56 -> 28
        self.refine = nn.Sequential(
            nn.Conv2d(self.channels, self.channels, 3, padding=1),
            nn.BatchNorm2d(self.channels),
            nn.ReLU(inplace=True),
        )
        with torch.no_grad():
            nn.init.dirac_(self.refine[0].weight)
            nn.init.zeros_(self.refine[0].bias)
        self.pool = nn.AdaptiveAvgPool2d(self.grid)

    @property
    def last_block(self) -> nn.Module:
        return self.refine

    def stem(self, x: torch.Tensor) -> torch.Tensor:
        """Everything below the last block (frozen in both phases)."""
        x = self.entry(x)
        x = torch.relu(self.bank(x))
        return self.mid(x)

    def from_stem(self, feats: torch.Tensor) -> torch.Tensor:
        x = self.refine(feats)
        return self.pool(x).flatten(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.from_stem(self.stem(x))


class _ResNeXtBackbone(nn.Module):
    """ResNeXt-50-32x4d feature extractor; last block is its final stage."""

    feature_dim = 2048

    def __init__(self, pretrained: bool = True) -> None:
        super().__init__()
        from torchvision.models import resnext50_32x4d

        if pretrained:
            from torchvision.models import ResNeXt50_32X4D_Weights

            try:
                net = resnext50_32x4d(weights=ResNeXt50_32X4D_Weights.IMAGENET1K_V1)
            except Exception as exc:
                raise WeightsUnavailableError(
                    f"could not obtain pretrained backbone weights: {exc}"
                ) from exc
        else:
            net = resnext50_32x4d(weights=None)
        net.fc = nn.Identity()
        self.net = net

    @property
    def last_block(self) -> nn.Module:
        return self.net.layer4

    def stem(self, x: torch.Tensor) -> torch.Tensor:
        """Everything below the final residual stage."""
        net = self.net
        x = net.maxpool(net.relu(net.bn1(net.conv1(x))))
        x = net.layer3(net.layer2(net.layer1(x)))
        return x

    def from_stem(self, feats: torch.Tensor) -> torch.Tensor:
        x = self.net.layer4(feats)
        return torch.flatten(self.net.avgpool(x), 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.from_stem(self.stem(x))


_PROFILE_STATS = {
    # channel statistics the backbone's inputs were standardized with
    BackboneProfile.PAPER: ((0.485, 0.456, 0.406), (0.229, 0.224, 0.225)),
    BackboneProfile.SMOKE: ((0.5, 0.5, 0.5), (0.25, 0.25, 0.25)),
}


class DeepModel(nn.Module):
    """Backbone + fresh two-layer head, with phase-dependent freeze masks."""

    def __init__(self, backbone: nn.Module, head_spec: HeadSpec,
                 profile: BackboneProfile) -> None:
        super().__init__()
        self.backbone = backbone
        self.head = nn.Sequential(
            nn.Linear(backbone.feature_dim, head_spec.hidden_width),
            nn.ReLU(inplace=True),
            nn.Linear(head_spec.hidden_width, head_spec.output_classes),
        )
        self.head_spec = head_spec
        self.profile = profile
        self.is_trained = False
        mean, std = _PROFILE_STATS[profile]
        self.register_buffer("input_mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("input_std", torch.tensor(std).view(1, 3, 1, 1))
        self.set_phase(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """x: (B, 3, H, W) float in [0, 1]; returns (B, 2) logits."""
        x = (x - self.input_mean) / self.input_std
        return self.head(self.backbone(x))

    def stem_features(self, x: torch.Tensor) -> torch.Tensor:
        """Frozen-stem activations for x in [0, 1] (input normalization
        applied), the cacheable part of the forward pass."""
        x = (x - self.input_mean) / self.input_std
        return self.backbone.stem(x)

    def head_from_stem(self, feats: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone.from_stem(feats))

    def set_phase(self, phase: int) -> None:
        """Phase 1: head only; phase 2: head plus the backbone's last block."""
        if phase not in (1, 2):
            raise RangeError(f"phase must be 1 or 2, got {phase}")
        for p in self.backbone.parameters():
            p.requires_grad = False
        if phase == 2:
            for p in self.backbone.last_block.parameters():
                p.requires_grad = True
        for p in self.head.parameters():
            p.requires_grad = True
        self.phase = phase

    def frozen_backbone_parameters(self) -> list[torch.nn.Parameter]:
        """Backbone parameters outside the last block (frozen in both phases)."""
        last = {id(p) for p in self.backbone.last_block.parameters()}
        return [p for p in self.backbone.parameters() if id(p) not in last]


def build_model(
    head: HeadSpec = HeadSpec(),
    backbone_profile: BackboneProfile = BackboneProfile.SMOKE,
    *,
    pretrained: bool = True,
    seed: int = 0,
) -> DeepModel:
    """Construct a model accepting 224x224 RGB input and emitting 2 logits.

    The paper profile loads the pretrained ResNeXt-50-32x4d backbone and
    raises WeightsUnavailableError when no weight source is reachable;
    pretrained=False builds the same architecture randomly initialized
    (for structural tests and checkpoint loading).  The smoke profile is
    always available.
    """
    torch.manual_seed(seed)
    if backbone_profile is BackboneProfile.PAPER:
        backbone: nn.Module = _ResNeXtBackbone(pretrained=pretrained)
    elif backbone_profile is BackboneProfile.SMOKE:
        backbone = _SmokeBackbone()
    else:
        raise ValueError(f"unknown backbone profile {backbone_profile!r}")
    return DeepModel(backbone, head, backbone_profile)


def lr_at_epoch(schedule: TrainSchedule, epoch: int) -> float:
    """base_lr decayed by lr_decay_factor every lr_decay_every epochs."""
    if epoch < 1 or epoch > schedule.total_epochs:
        raise RangeError(f"epoch {epoch} outside 1..{schedule.total_epochs}")
    steps = (epoch - 1) // schedule.lr_decay_every
    return schedule.base_lr * schedule.lr_decay_factor**steps


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    phase: int
    lr: float
    mean_loss: float


def schedule_plan(schedule: TrainSchedule) -> list[tuple[int, int, float]]:
    """(epoch, phase, lr) rows for the full schedule; pure bookkeeping."""
    return [
        (e, 1 if e <= schedule.phase1_epochs else 2, lr_at_epoch(schedule, e))
        for e in range(1, schedule.total_epochs + 1)
    ]


def _batches(n: int, batch_size: int, order: np.ndarray):
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _to_input_tensor(crops: np.ndarray) -> torch.Tensor:
    t = torch.from_numpy(np.ascontiguousarray(crops))
    return t.permute(0, 3, 1, 2).float().div_(255.0)


def train_two_phase(
    model: DeepModel,
    crops: np.ndarray,
    labels: np.ndarray,
    schedule: TrainSchedule = TrainSchedule(),
    augment: AugmentationSpec | None = None,
    log_path: str | Path | None = None,
) -> list[EpochLog]:
    """Run the two-phase fine-tuning schedule on labeled crops.

    crops: (n, S, S, 3) uint8 array, or any object exposing len() and
    take(indices, axis=0) over frames; labels: (n,) with 0 = no pain,
    1 = pain.
    The trainable mask switches from head-only to head+last-block exactly
    after phase1_epochs.  Deterministic given (model state, schedule,
    augment): shuffling and augmentation draw from generators derived
    from the schedule seed and epoch index.
    """
    y_np = np.asarray(labels).astype(np.int64)
    if len(np.unique(y_np)) < 2:
        raise DegenerateLabelsError("training set must contain both classes")
    n = len(y_np)
    y = torch.from_numpy(y_np)

    optimizer = torch.optim.Adam(
        list(model.head.parameters()) + list(model.backbone.last_block.parameters()),
        lr=schedule.base_lr,
    )
    loss_fn = nn.CrossEntropyLoss()
    do_augment = augment is not None and not augment.is_identity

    log: list[EpochLog] = []
    for epoch in range(1, schedule.total_epochs + 1):
        phase = 1 if epoch <= schedule.phase1_epochs else 2
        model.set_phase(phase)
        model.train()
        # frozen backbone parts also keep their norm statistics frozen
        model.backbone.eval()
        if phase == 2:
            model.backbone.last_block.train()
        lr = lr_at_epoch(schedule, epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        rng = np.random.default_rng([schedule.seed, epoch])
        order = rng.permutation(n)
        total_loss = 0.0
        for batch_idx in _batches(n, schedule.batch_size, order):
            batch = crops.take(batch_idx, axis=0)
            if do_augment:
                batch = np.stack([augment_frame(img, augment, rng) for img in batch])
            x = _to_input_tensor(batch)
            optimizer.zero_grad()
            loss = loss_fn(model(x), y[batch_idx])
            value = float(loss.item())
            if not np.isfinite(value):
                raise NonFiniteLossError(
                    f"non-finite loss {value} at epoch {epoch} (phase {phase}, lr {lr})"
                )
            loss.backward()
            optimizer.step()
            total_loss += value * len(batch_idx)
        log.append(EpochLog(epoch=epoch, phase=phase, lr=lr, mean_loss=total_loss / n))

    model.is_trained = True
    if log_path is not None:
        write_train_log(log_path, log)
    return log


def write_train_log(path: str | Path, log: list[EpochLog]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "phase", "lr", "mean_loss"])
        for row in log:
            writer.writerow([row.epoch, row.phase, repr(row.lr), repr(row.mean_loss)])
    return path


def score_frames_deep(
    model: DeepModel, crops: np.ndarray, batch_size: int = 128
) -> np.ndarray:
    """Softmax pain probability per frame, deterministic (no augmentation)."""
    if not model.is_trained:
        raise NotTrainedError("model must be trained before scoring")
    model.eval()
    n = len(crops)
    scores = np.empty(n, dtype=np.float64)
    with torch.no_grad():
        for start in range(0, n, batch_size):
            x = _to_input_tensor(np.asarray(crops[start:start + batch_size]))
            probs = torch.softmax(model(x), dim=1)
            scores[start:start + len(x)] = probs[:, 1].numpy()
    return scores


def save_checkpoint(
    model: DeepModel,
    path: str | Path,
    schedule: TrainSchedule | None = None,
    seed: int = 0,
) -> Path:
    """Checkpoint container: profile, head spec, weights, schedule, seed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "format": 1,
            "profile": model.profile.value,
            "head_spec": vars(model.head_spec),
            "state_dict": model.state_dict(),
            "schedule": vars(schedule) if schedule else None,
            "seed": seed,
            "is_trained": model.is_trained,
        },
        path,
    )
    return path


def load_checkpoint(path: str | Path) -> DeepModel:
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    profile = BackboneProfile(payload["profile"])
    model = build_model(
        HeadSpec(**payload["head_spec"]), profile, pretrained=False, seed=payload["seed"]
    )
    model.load_state_dict(payload["state_dict"])
    model.is_trained = payload["is_trained"]
    return model
