"""Dataset manifests, the binary tensor cache, the split/subsample protocol,
spectral-dataset derivation and a synthetic desk-scale dataset.

Labels: 0 = natural, 1 = synthetic (AI-generated).
"""

from __future__ import annotations

import csv
import enum
import struct
import zlib
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ParameterError
from .imgcore import ImageTensor, RangeTag, Rng, resize_bilinear, spectral_image

CLASS_DIRS = {"nature": 0, "ai": 1}
IMAGE_SUFFIXES = {".ppm", ".pgm", ".pnm"}


class Split(enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class DomainTag(enum.IntEnum):
    SPATIAL = 0
    SPECTRAL = 1


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    generator: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    split: Split = Split.TRAIN

    def __len__(self):
        return len(self.entries)

    def strata(self) -> dict[tuple[int, str], list[ManifestEntry]]:
        groups = defaultdict(list)
        for e in self.entries:
            groups[(e.label, e.generator)].append(e)
        return dict(sorted(groups.items()))

    @property
    def generators(self) -> list[str]:
        return sorted({e.generator for e in self.entries})

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["path", "label", "generator", "split"])
            for e in self.entries:
                w.writerow([e.path, e.label, e.generator, self.split.value])

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh, delimiter="\t"))
        if not rows:
            return cls()
        try:
            entries = [ManifestEntry(r["path"], int(r["label"]), r["generator"]) for r in rows]
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: malformed manifest ({exc})") from exc
        if any(e.label not in (0, 1) for e in entries):
            raise DataError(f"{path}: labels must be 0 or 1")
        return cls(entries, Split(rows[0].get("split") or "train"))


def scan_directory(root, split: Split = Split.TRAIN) -> DatasetManifest:
    """Build a manifest from ``<root>/<generator>/<nature|ai>/<image>``."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} does not exist")
    entries = []
    for gen_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for cls_name, label in CLASS_DIRS.items():
            cls_dir = gen_dir / cls_name
            if not cls_dir.is_dir():
                continue
            for f in sorted(cls_dir.rglob("*")):
                if f.suffix.lower() in IMAGE_SUFFIXES:
                    entries.append(ManifestEntry(str(f), label, gen_dir.name))
    return DatasetManifest(entries, split)


def stratified_subsample(manifest: DatasetManifest, total: int, rng: Rng) -> DatasetManifest:
    """Draw ``total / (2 * n_generators)`` entries uniformly from every
    (class, generator) stratum, visiting strata in sorted order."""
    gens = manifest.generators
    strata = manifest.strata()
    if not gens or total % (2 * len(gens)):
        raise ParameterError(f"total {total} not divisible by 2 x {len(gens)} generators")
    per = total // (2 * len(gens))
    out = []
    for label in (0, 1):
        for gen in gens:
            items = strata.get((label, gen), [])
            if len(items) < per:
                raise DataError(f"stratum (label={label}, generator={gen}) has {len(items)} "
                                f"entries, needs {per}")
            out.extend(items[i] for i in rng.sample_indices(len(items), per))
    return DatasetManifest(out, manifest.split)


def split_val_test(manifest: DatasetManifest, rng: Rng) -> tuple[DatasetManifest, DatasetManifest]:
    """Per-stratum 50/50 split; an odd stratum gives its extra item to validation."""
    val, test = [], []
    for key, items in manifest.strata().items():
        if len(items) < 2:
            raise DataError(f"stratum {key} has fewer than 2 entries")
        order = rng.permutation(len(items))
        cut = (len(items) + 1) // 2
        val.extend(items[i] for i in order[:cut])
        test.extend(items[i] for i in order[cut:])
    return DatasetManifest(val, Split.VAL), DatasetManifest(test, Split.TEST)


# -- minimal Netpbm reader/writer ------------------------------------------------

def _pnm_tokens(blob: bytes, count: int, pos: int):
    tokens = []
    while len(tokens) < count:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError("truncated PNM header")
        tokens.append(int(blob[start:pos]))
    return tokens, pos


def read_pnm(path) -> ImageTensor:
    """Read a P2/P3/P5/P6 image as a Byte0255 ImageTensor."""
    blob = Path(path).read_bytes()
    magic = blob[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise DataError(f"{path}: unsupported image format {magic!r}")
    (w, h, maxval), pos = _pnm_tokens(blob, 3, 2)
    channels = 3 if magic in (b"P3", b"P6") else 1
    n = w * h * channels
    if magic in (b"P5", b"P6"):
        dtype = ">u2" if maxval > 255 else "u1"
        pos += 1
        raw = np.frombuffer(blob, dtype=dtype, count=n, offset=pos)
    else:
        raw = np.asarray(_pnm_tokens(blob, n, pos)[0])
    data = raw.reshape(h, w, channels).astype(np.float32) * (255.0 / maxval)
    return ImageTensor(np.clip(data, 0, 255), RangeTag.BYTE0255)


def write_pnm(img: ImageTensor, path) -> None:
    magic = b"P6" if img.channels == 3 else b"P5"
    data = np.clip(np.round(img.data), 0, 255).astype(np.uint8)
    Path(path).write_bytes(magic + f"\n{img.width} {img.height}\n255\n".encode() + data.tobytes())


# -- tensor cache ----------------------------------------------------------------

CACHE_MAGIC = b"LAIDTNSR"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<8sHBBIIII")
_RANGE_CODES = {RangeTag.UNIT01: 0, RangeTag.BYTE0255: 1, RangeTag.UNBOUNDED: 2}
_RANGE_FROM_CODE = {v: k for k, v in _RANGE_CODES.items()}


@dataclass(eq=False)
class TensorCache:
    """A stack of equally-shaped preprocessed images with labels.

    Binary layout (little-endian): header ``8s magic, u16 version, u8 range
    tag, u8 domain tag, u32 count, u32 height, u32 width, u32 channels``;
    float32 payload in N x H x W x C order; one label byte per tensor; u32
    CRC-32 of all preceding bytes.
    """

    images: np.ndarray
    labels: np.ndarray
    range_tag: RangeTag = RangeTag.BYTE0255
    domain: DomainTag = DomainTag.SPATIAL

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.float32)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.images.ndim != 4 or len(self.images) != len(self.labels):
            raise DataError(f"cache shape mismatch: {self.images.shape} vs {self.labels.shape}")
        self.domain = DomainTag(self.domain)

    def __len__(self):
        return len(self.labels)

    def image(self, i: int) -> ImageTensor:
        return ImageTensor(self.images[i], self.range_tag)

    def to_bytes(self) -> bytes:
        n, h, w, c = self.images.shape
        body = b"".join([
            _CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, _RANGE_CODES[self.range_tag],
                               int(self.domain), n, h, w, c),
            self.images.astype("<f4").tobytes(),
            self.labels.tobytes(),
        ])
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, blob: bytes) -> "TensorCache":
        if len(blob) < _CACHE_HEADER.size + 4:
            raise DataError("tensor cache truncated")
        magic, version, rcode, dcode, n, h, w, c = _CACHE_HEADER.unpack_from(blob, 0)
        if magic != CACHE_MAGIC or version != CACHE_VERSION:
            raise DataError("not a LAID tensor cache (bad magic or version)")
        (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
        if zlib.crc32(blob[:-4]) != crc:
            raise DataError("tensor cache checksum mismatch")
        payload = n * h * w * c
        if len(blob) != _CACHE_HEADER.size + 4 * payload + n + 4:
            raise DataError("declared tensor count does not match payload length")
        off = _CACHE_HEADER.size
        images = np.frombuffer(blob, "<f4", payload, off).reshape(n, h, w, c)
        labels = np.frombuffer(blob, np.uint8, n, off + 4 * payload)
        return cls(images.copy(), labels.copy(), _RANGE_FROM_CODE[rcode], DomainTag(dcode))

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def read(cls, path) -> "TensorCache":
        try:
            return cls.from_bytes(Path(path).read_bytes())
        except FileNotFoundError as exc:
            raise DataError(f"cache {path} not found") from exc


def preprocess(manifest: DatasetManifest, size: int = 256) -> TensorCache:
    """Load, resize to ``size`` x ``size`` and stack as a spatial cache.

    Grayscale inputs are replicated to three channels.
    """
    if len(manifest) == 0:
        raise DataError("empty manifest")
    images = np.empty((len(manifest), size, size, 3), dtype=np.float32)
    for i, e in enumerate(manifest.entries):
        img = resize_bilinear(read_pnm(e.path), size, size)
        images[i] = img.data if img.channels == 3 else np.repeat(img.data, 3, axis=2)
    labels = [e.label for e in manifest.entries]
    return TensorCache(images, labels, RangeTag.BYTE0255, DomainTag.SPATIAL)


def build_spectral_cache(spatial: TensorCache) -> TensorCache:
    if spatial.domain is not DomainTag.SPATIAL:
        raise DataError("spectral cache must be built from a spatial cache")
    out = np.empty_like(spatial.images)
    for i in range(len(spatial)):
        out[i] = spectral_image(spatial.image(i)).data
    return TensorCache(out, spatial.labels.copy(), RangeTag.BYTE0255, DomainTag.SPECTRAL)


# -- synthetic desk-scale dataset --------------------------------------------------

FIELD_STD = 40.0
FIELD_CUTOFF = 0.15  # cycles/pixel, Gaussian optical roll-off
ARTIFACT_STD = 4.0


def _pink_field(rng: Rng, size: int) -> np.ndarray:
    """Zero-mean colour field, std FIELD_STD, with a 1/f amplitude spectrum
    rolled off by a Gaussian low-pass (camera optics)."""
    f = np.fft.fftfreq(size)
    radius = np.hypot(f[:, None], f[None, :])
    radius[0, 0] = 1.0
    amp = np.exp(-(radius / FIELD_CUTOFF) ** 2) / radius
    amp[0, 0] = 0.0
    # shared luminance structure plus weaker per-channel colour variation
    noise = rng.normal(size=(4, size, size))
    planes = np.real(np.fft.ifft2(np.fft.fft2(noise) * amp))
    planes /= planes.std(axis=(1, 2), keepdims=True)
    lum, chroma = planes[0], planes[1:]
    rgb = lum[..., None] * 0.9 + chroma.transpose(1, 2, 0) * 0.45
    return rgb * (FIELD_STD / rgb.std())


def _grid_artifact(rng: Rng, size: int) -> np.ndarray:
    """Half-resolution white noise upsampled 2x by pixel repetition."""
    half = rng.normal(0.0, ARTIFACT_STD, size=(size // 2, size // 2, 3))
    return half.repeat(2, axis=0).repeat(2, axis=1)


def synth_image(rng: Rng, label: int, size: int = 64) -> np.ndarray:
    img = 128.0 + _pink_field(rng, size)
    if label == 1:
        img = img + _grid_artifact(rng, size)
    return np.clip(np.round(img), 0, 255).astype(np.float32)


def synth_cache(n_per_class: int, rng: Rng, size: int = 64) -> TensorCache:
    """Interleaved natural/synthetic images, each drawn from its own child stream."""
    n = 2 * n_per_class
    images = np.empty((n, size, size, 3), dtype=np.float32)
    labels = np.arange(n) % 2
    for i in range(n):
        images[i] = synth_image(rng.child(i), int(labels[i]), size)
    return TensorCache(images, labels, RangeTag.BYTE0255, DomainTag.SPATIAL)


def synth_dataset(n_per_class: int, rng: Rng, size: int = 64,
                  n_val_per_class: int | None = None) -> tuple[TensorCache, TensorCache]:
    """(train, val) spatial caches; validation defaults to a quarter of train."""
    if n_per_class < 8:
        raise ParameterError("n_per_class must be >= 8")
    if size % 2:
        raise ParameterError("synthetic images need an even size")
    n_val = n_val_per_class if n_val_per_class is not None else max(n_per_class // 4, 1)
    return synth_cache(n_per_class, rng.child(0), size), synth_cache(n_val, rng.child(1), size)
