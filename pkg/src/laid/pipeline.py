"""End-to-end benchmark run: data, spectral derivation, training, clean and
adversarial evaluation, reports.

Every random draw comes from a child stream of the run seed, so a run
directory (config copy plus attack logs) is enough to replay it exactly.
"""

from __future__ import annotations

import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attacks import AttackKind, AttackSpec, apply_attack, sample_attack
from .config import RunConfig
from .data import DomainTag, TensorCache, build_spectral_cache, synth_cache
from .errors import ConfigError, LaidError, StateError
from .imgcore import ImageTensor, RangeTag, Rng, spectral_image
from .metrics import EvalReport, Records, Setting, evaluate_protocol
from .nn import NetworkGraph, TrainConfig, forward, positive_probability, tiny_detector_arch, train
from .nn import checkpoint
from .profiler import profile
from .trends import emit_scatter_svg, linear_fit

log = logging.getLogger(__name__)

# child-stream indices of the run seed
STREAM_DATA, STREAM_INIT, STREAM_TRAIN, STREAM_ATTACK = 0, 1, 2, 3
MODEL_INDEX = {"spatial": 0, "spectral": 1}


class StageError(LaidError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunResult:
    out_dir: Path
    reports: list[EvalReport] = field(default_factory=list)
    best_epochs: dict = field(default_factory=dict)


@contextmanager
def run_lock(out_dir: Path):
    """Exclusive lock file so two runs cannot share an output directory."""
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as exc:
        raise StateError(f"{out_dir} is locked by another run ({lock})") from exc
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def load_splits(config: RunConfig) -> tuple[TensorCache, TensorCache, TensorCache]:
    """(train, val, test) spatial caches, read from disk or synthesized."""
    if config.train_cache:
        caches = tuple(TensorCache.read(p) for p in
                       (config.train_cache, config.val_cache, config.test_cache))
        for c in caches:
            if c.domain is not DomainTag.SPATIAL:
                raise ConfigError("dataset caches must hold spatial images")
        return caches
    rng = Rng(config.seed).child(STREAM_DATA)
    sizes = (config.synth_per_class, config.synth_val_per_class, config.synth_test_per_class)
    return tuple(synth_cache(n, rng.child(i), config.image_size) for i, n in enumerate(sizes))


def score_images(net: NetworkGraph, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Positive-class probability for each image of an N x H x W x C stack."""
    net.eval()
    out = np.empty(len(images), dtype=np.float64)
    for i in range(0, len(images), batch_size):
        out[i:i + batch_size] = positive_probability(forward(net, images[i:i + batch_size]))
    return out


def spectral_stack(images: np.ndarray) -> np.ndarray:
    out = np.empty_like(images, dtype=np.float32)
    for i, img in enumerate(images):
        out[i] = spectral_image(ImageTensor(img, RangeTag.BYTE0255)).data
    return out


def attack_images(images: np.ndarray, kind: AttackKind, rng: Rng) -> tuple[np.ndarray, list[AttackSpec]]:
    """Attack every image with its own sampled parameters (stream ``rng.child(i)``)."""
    size = images.shape[1]
    out = np.empty_like(images)
    specs = []
    for i, img in enumerate(images):
        spec = sample_attack(kind, rng.child(i))
        out[i] = apply_attack(ImageTensor(img, RangeTag.BYTE0255), spec, size).data
        specs.append(spec)
    return out, specs


def replay_attacks(images: np.ndarray, specs: list[AttackSpec]) -> np.ndarray:
    if len(specs) != len(images):
        raise ConfigError("attack log length does not match the image count")
    size = images.shape[1]
    out = np.empty_like(images)
    for i, (img, spec) in enumerate(zip(images, specs)):
        out[i] = apply_attack(ImageTensor(img, RangeTag.BYTE0255), spec, size).data
    return out


def write_attack_log(specs: list[AttackSpec], path) -> None:
    Path(path).write_text("".join(s.to_record() + "\n" for s in specs))


def read_attack_log(path) -> list[AttackSpec]:
    return [AttackSpec.from_record(line) for line in Path(path).read_text().splitlines() if line]


def evaluate_pair(net_p: NetworkGraph, net_f: NetworkGraph, images: np.ndarray,
                  labels: np.ndarray) -> Records:
    """Score the same spatial images with both detectors (spectral view derived here)."""
    return Records(score_images(net_p, images), score_images(net_f, spectral_stack(images)),
                   np.asarray(labels, dtype=np.int64))


def write_reports(reports: list[EvalReport], out_dir: Path) -> None:
    payload = {r.setting: json.loads(r.to_json()) for r in reports}
    (out_dir / "metrics.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    (out_dir / "metrics.txt").write_text("".join(r.to_text() + "\n" for r in reports))


def training_curve_svg(result, title: str) -> str:
    pts = [(e.epoch, e.val_acc) for e in result.log]
    if len(pts) < 2:
        pts = pts + [(pts[0][0] + 1, pts[0][1])]
    return emit_scatter_svg(pts, linear_fit(pts), "epoch", "validation accuracy (%)", title)


def _train_one(domain: str, train_set: TensorCache, val_set: TensorCache, config: RunConfig):
    idx = MODEL_INDEX[domain]
    root = Rng(config.seed)
    net = tiny_detector_arch(train_set.images.shape[1]).init_params(root.child(STREAM_INIT).child(idx))
    tcfg = TrainConfig(epochs=config.epochs, batch_size=config.batch, lr=config.lr,
                       seed=root.child(STREAM_TRAIN).child(idx).seed64())
    return train(net, (train_set.images, train_set.labels), (val_set.images, val_set.labels), tcfg)


def run_pipeline(config: RunConfig) -> RunResult:
    """Run the full benchmark into ``config.out``.

    On failure a ``FAILED`` marker naming the stage is written and a
    StageError is raised; the original exception is kept as ``cause``.
    """
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    with run_lock(out):
        (out / "FAILED").unlink(missing_ok=True)
        stage = "setup"
        try:
            (out / "config.ini").write_text(config.to_text())
            for sub in ("models", "attacks", "figures"):
                (out / sub).mkdir(exist_ok=True)
            result = RunResult(out)

            stage = "data"
            train_p, val_p, test_p = load_splits(config)
            stage = "spectral"
            train_f, val_f = build_spectral_cache(train_p), build_spectral_cache(val_p)

            nets = {}
            for domain, (tr, va) in (("spatial", (train_p, val_p)), ("spectral", (train_f, val_f))):
                stage = f"train:{domain}"
                trained = _train_one(domain, tr, va, config)
                nets[domain] = trained.net
                result.best_epochs[domain] = trained.best_epoch
                checkpoint.save(trained.net, out / "models" / f"{domain}.ckpt")
                (out / "models" / f"{domain}_log.tsv").write_text(
                    "epoch\ttrain_loss\tval_acc\tlr\n" + "".join(
                        f"{e.epoch}\t{e.train_loss:.6f}\t{e.val_acc:.2f}\t{e.lr:.1e}\n"
                        for e in trained.log))
                (out / "figures" / f"training_{domain}.svg").write_text(
                    training_curve_svg(trained, f"{domain} detector"))
            net_p, net_f = nets["spatial"], nets["spectral"]
            cost = profile(net_p)

            stage = "evaluate:clean"
            clean = evaluate_pair(net_p, net_f, test_p.images, test_p.labels)
            result.reports.append(evaluate_protocol(clean, Setting.CLEAN, "spatial", cost))
            result.reports.append(evaluate_protocol(clean, Setting.CLEAN, "spectral", cost))
            if config.fusion_clean:
                result.reports.append(evaluate_protocol(clean, Setting.CLEAN_FUSION))

            attack_root = Rng(config.seed).child(STREAM_ATTACK)
            for kind_name in config.attacks:
                kind = AttackKind(kind_name)
                stage = f"attack:{kind.value}"
                kind_idx = list(AttackKind).index(kind)
                attacked, specs = attack_images(test_p.images, kind, attack_root.child(kind_idx))
                write_attack_log(specs, out / "attacks" / f"{kind.value}.tsv")
                recs = evaluate_pair(net_p, net_f, attacked, test_p.labels)
                for setting in (Setting.ADV_SPATIAL, Setting.ADV_SPECTRAL, Setting.ADV_FUSION):
                    rep = evaluate_protocol(recs, setting)
                    rep.setting = f"{rep.setting}:{kind.value}"
                    result.reports.append(rep)

            stage = "report"
            write_reports(result.reports, out)
            return result
        except Exception as exc:
            (out / "FAILED").write_text(f"stage: {stage}\nerror: {type(exc).__name__}: {exc}\n")
            raise StageError(stage, exc) from exc
