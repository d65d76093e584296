"""Image perturbations used for robustness testing: crop-and-resize, Gaussian
blur, additive Gaussian noise, a JPEG quantization round trip, and a random
combination of the four.

Every attack is a pure function of ``(img, spec)``; any randomness it needs
(crop offset, noise samples) is drawn from ``Rng(spec.seed)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .imgcore import ImageTensor, RangeTag, Rng, resize_bilinear

CROP_RANGE = (0.05, 0.20)
BLUR_KERNELS = (3, 5, 7, 9)
BLUR_SIGMAS = (1.0, 2.0, 3.0, 4.0)
NOISE_RANGE = (5.0, 20.0)
JPEG_RANGE = (25, 90)
DEFAULT_SIZE = 256


class AttackKind(enum.Enum):
    CROP = "crop"
    BLUR = "blur"
    NOISE = "noise"
    JPEG = "jpeg"
    COMBINED = "combined"


# application order inside a combined attack
COMBINED_ORDER = (AttackKind.CROP, AttackKind.BLUR, AttackKind.NOISE, AttackKind.JPEG)


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    crop_fraction: float = 0.125
    blur_kernel: int = 3
    blur_sigma: float = 1.0
    noise_variance: float = 10.0
    jpeg_quality: int = 75
    seed: int = 0
    flags: tuple[bool, bool, bool, bool] = (False, False, False, False)

    def __post_init__(self):
        if not CROP_RANGE[0] <= self.crop_fraction <= CROP_RANGE[1]:
            raise ParameterError(f"crop_fraction {self.crop_fraction} outside {CROP_RANGE}")
        if self.blur_kernel not in BLUR_KERNELS:
            raise ParameterError(f"blur_kernel {self.blur_kernel} not in {BLUR_KERNELS}")
        if self.blur_sigma not in BLUR_SIGMAS:
            raise ParameterError(f"blur_sigma {self.blur_sigma} not in {BLUR_SIGMAS}")
        if not NOISE_RANGE[0] <= self.noise_variance <= NOISE_RANGE[1]:
            raise ParameterError(f"noise_variance {self.noise_variance} outside {NOISE_RANGE}")
        if not JPEG_RANGE[0] <= self.jpeg_quality <= JPEG_RANGE[1]:
            raise ParameterError(f"jpeg_quality {self.jpeg_quality} outside {JPEG_RANGE}")

    # -- sidecar log format: one tab-separated record per line --
    LOG_FIELDS = (
        "kind", "crop_fraction", "blur_kernel", "blur_sigma",
        "noise_variance", "jpeg_quality", "flags", "seed",
    )

    def to_record(self) -> str:
        flags = "".join("1" if f else "0" for f in self.flags)
        return "\t".join([
            self.kind.value, repr(self.crop_fraction), str(self.blur_kernel),
            repr(self.blur_sigma), repr(self.noise_variance), str(self.jpeg_quality),
            flags, str(self.seed),
        ])

    @classmethod
    def from_record(cls, line: str) -> "AttackSpec":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(cls.LOG_FIELDS):
            raise ParameterError(f"malformed attack record: {line!r}")
        kind, crop, kern, sigma, var, q, flags, seed = parts
        return cls(
            kind=AttackKind(kind), crop_fraction=float(crop), blur_kernel=int(kern),
            blur_sigma=float(sigma), noise_variance=float(var), jpeg_quality=int(q),
            flags=tuple(c == "1" for c in flags), seed=int(seed),
        )


def sample_attack(kind: AttackKind, rng: Rng) -> AttackSpec:
    """Draw every parameter from its range; ``kind`` decides which are used.

    The draw order is fixed so a spec is reproducible from the stream alone.
    """
    kind = AttackKind(kind)
    crop = float(rng.uniform(*CROP_RANGE))
    kernel = int(rng.choice(BLUR_KERNELS))
    sigma = float(rng.choice(BLUR_SIGMAS))
    var = float(rng.uniform(*NOISE_RANGE))
    quality = int(rng.integers(*JPEG_RANGE))
    flags = tuple(bool(b) for b in rng.bernoulli(0.5, size=4))
    return AttackSpec(kind, crop, kernel, sigma, var, quality, rng.seed64(), flags)


def crop_rect(h: int, w: int, spec: AttackSpec) -> tuple[int, int, int, int]:
    """(top, left, height, width) of the retained sub-rectangle."""
    keep = math.sqrt(1.0 - spec.crop_fraction)
    ch, cw = int(round(h * keep)), int(round(w * keep))
    if ch < 1 or cw < 1:
        raise ParameterError(f"crop of {h}x{w} by {spec.crop_fraction} leaves no pixels")
    rng = Rng(spec.seed)
    top = int(rng.integers(0, h - ch))
    left = int(rng.integers(0, w - cw))
    return top, left, ch, cw


def attack_crop(img: ImageTensor, spec: AttackSpec, size: int = DEFAULT_SIZE) -> ImageTensor:
    if img.height < 8 or img.width < 8:
        raise ParameterError("crop needs at least an 8x8 image")
    top, left, ch, cw = crop_rect(img.height, img.width, spec)
    sub = ImageTensor(img.data[top:top + ch, left:left + cw], img.range_tag)
    return resize_bilinear(sub, size, size)


def gaussian_kernel_1d(k: int, sigma: float) -> np.ndarray:
    x = np.arange(k, dtype=np.float64) - (k - 1) / 2
    g = np.exp(-(x * x) / (2 * sigma * sigma))
    return g / g.sum()


def attack_blur(img: ImageTensor, spec: AttackSpec) -> ImageTensor:
    # the normalized 2D Gaussian is the outer product of normalized 1D ones
    g = gaussian_kernel_1d(spec.blur_kernel, spec.blur_sigma)
    r = spec.blur_kernel // 2
    d = img.data.astype(np.float64)
    h, w, _ = d.shape
    pad = np.pad(d, ((r, r), (r, r), (0, 0)), mode="reflect" if min(h, w) > r else "symmetric")
    tmp = sum(g[i] * pad[i:i + h] for i in range(spec.blur_kernel))
    out = sum(g[j] * tmp[:, j:j + w] for j in range(spec.blur_kernel))
    return ImageTensor(np.clip(out, 0, 255).astype(np.float32), img.range_tag)


def attack_noise(img: ImageTensor, spec: AttackSpec) -> ImageTensor:
    rng = Rng(spec.seed)
    noise = rng.normal(0.0, math.sqrt(spec.noise_variance), size=img.shape)
    out = np.clip(img.data.astype(np.float64) + noise, 0, 255)
    return ImageTensor(out.astype(np.float32), img.range_tag)


# ITU-T T.81 Annex K base tables (row-major, natural order)
BASE_LUMA = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)

BASE_CHROMA = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.int64)


@dataclass(frozen=True)
class QuantTables:
    luma: np.ndarray
    chroma: np.ndarray
    quality: int


def jpeg_tables(quality: int) -> QuantTables:
    """IJG-style quality scaling of the Annex K tables."""
    if not 1 <= quality <= 100:
        raise ParameterError(f"JPEG quality must be in [1, 100], got {quality}")
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality

    def scaled(base):
        return np.clip((base * scale + 50) // 100, 1, 255)

    return QuantTables(scaled(BASE_LUMA), scaled(BASE_CHROMA), quality)


def _dct_matrix(n: int = 8) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    c[0] /= np.sqrt(2.0)
    return c


DCT8 = _dct_matrix(8)


def rgb_to_ycbcr(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    return np.stack([y, cb, cr], axis=-1)


def ycbcr_to_rgb(ycc: np.ndarray) -> np.ndarray:
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def _quantize_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    blocks = (plane - 128.0).reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)
    coef = DCT8 @ blocks @ DCT8.T
    coef = np.round(coef / table) * table
    rec = DCT8.T @ coef @ DCT8
    return rec.transpose(0, 2, 1, 3).reshape(h, w) + 128.0


def jpeg_roundtrip(data: np.ndarray, quality: int) -> np.ndarray:
    """Baseline 4:4:4 JPEG quantization round trip of an H x W x C array.

    Entropy coding is skipped since it is lossless. Single-channel input is
    treated as luma only.
    """
    tables = jpeg_tables(quality)
    h, w, c = data.shape
    ph, pw = -h % 8, -w % 8
    d = np.pad(data.astype(np.float64), ((0, ph), (0, pw), (0, 0)), mode="edge")
    if c == 3:
        ycc = rgb_to_ycbcr(d)
        planes = [_quantize_plane(ycc[..., i], tables.luma if i == 0 else tables.chroma)
                  for i in range(3)]
        out = ycbcr_to_rgb(np.stack(planes, axis=-1))
    else:
        out = _quantize_plane(d[..., 0], tables.luma)[..., None]
    return np.clip(np.round(out[:h, :w]), 0, 255)


def attack_jpeg(img: ImageTensor, spec: AttackSpec) -> ImageTensor:
    if img.range_tag is not RangeTag.BYTE0255:
        raise ParameterError("JPEG attack expects a Byte0255 image")
    return ImageTensor(jpeg_roundtrip(img.data, spec.jpeg_quality).astype(np.float32),
                       img.range_tag)


def combined_parts(spec: AttackSpec) -> list[AttackSpec]:
    """The single-kind specs a combined attack applies, in order.

    Each part is resampled from a child stream of ``spec.seed``.
    """
    root = Rng(spec.seed)
    parts = []
    for i, (kind, on) in enumerate(zip(COMBINED_ORDER, spec.flags)):
        if on:
            parts.append(sample_attack(kind, root.child(i)))
    return parts


def attack_combined(img: ImageTensor, spec: AttackSpec, size: int = DEFAULT_SIZE) -> ImageTensor:
    out = img
    for part in combined_parts(spec):
        out = apply_attack(out, part, size)
    if out is img:
        return ImageTensor(img.data.copy(), img.range_tag)
    return out


def apply_attack(img: ImageTensor, spec: AttackSpec, size: int = DEFAULT_SIZE) -> ImageTensor:
    """Dispatch on ``spec.kind``.

    ``size`` is the square output side of crop (the other attacks preserve
    dimensions); pass the corpus resolution when working below 256.
    """
    kind = spec.kind
    if kind is AttackKind.CROP:
        return attack_crop(img, spec, size)
    if kind is AttackKind.BLUR:
        return attack_blur(img, spec)
    if kind is AttackKind.NOISE:
        return attack_noise(img, spec)
    if kind is AttackKind.JPEG:
        return attack_jpeg(img, spec)
    return attack_combined(img, spec, size)
