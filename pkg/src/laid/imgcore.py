"""Image tensors, seeded RNG streams, resizing, range normalization and the
zero-centered 2D FFT used to build spectral images."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError


class RangeTag(enum.Enum):
    UNIT01 = "unit01"
    BYTE0255 = "byte0255"
    UNBOUNDED = "unbounded"


_RANGE_BOUNDS = {RangeTag.UNIT01: (0.0, 1.0), RangeTag.BYTE0255: (0.0, 255.0)}


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """An H x W x C image stored as float32 with an explicit value-range tag."""

    data: np.ndarray
    range_tag: RangeTag = RangeTag.BYTE0255

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise DimensionError(f"expected H x W x {{1,3}} data, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError("image has an empty dimension")
        bounds = _RANGE_BOUNDS.get(self.range_tag)
        if bounds is not None and arr.size:
            lo, hi = bounds
            if arr.min() < lo or arr.max() > hi:
                raise ParameterError(
                    f"samples outside {self.range_tag.value} range: [{arr.min()}, {arr.max()}]"
                )
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, ImageTensor):
            return NotImplemented
        return self.range_tag == other.range_tag and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class ComplexPlane:
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        if self.re.shape != self.im.shape or self.re.ndim != 2:
            raise DimensionError("re/im must be 2D arrays of equal shape")

    @property
    def height(self) -> int:
        return self.re.shape[0]

    @property
    def width(self) -> int:
        return self.re.shape[1]

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexPlane":
        z = np.asarray(z, dtype=np.complex128)
        return cls(np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag))


class Rng:
    """Counter-based (Philox) random stream keyed by a 64-bit seed.

    Child streams are keyed by hashing ``(seed, index)`` so they are distinct
    for distinct indices and independent of how many draws the parent made.
    Instances are not thread-safe; hand each worker its own ``child``.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def child(self, index: int) -> "Rng":
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(index),))
        return Rng(int(ss.generate_state(1, np.uint64)[0]))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high, size=None):
        """Integers in the closed interval [low, high]."""
        return self._gen.integers(low, high, size=size, endpoint=True)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def bernoulli(self, p=0.5, size=None):
        return self._gen.random(size) < p

    def choice(self, options):
        return options[int(self._gen.integers(0, len(options)))]

    def seed64(self) -> int:
        return int(self._gen.integers(0, 2**64, dtype=np.uint64))

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n) by a partial Fisher-Yates shuffle."""
        if not 0 <= k <= n:
            raise ParameterError(f"cannot draw {k} of {n} without replacement")
        pool = list(range(n))
        for i in range(k):
            j = i + int(self._gen.integers(0, n - i))
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def permutation(self, n: int) -> np.ndarray:
        return np.asarray(self.sample_indices(n, n), dtype=np.int64)


def resize_bilinear(img: ImageTensor, out_h: int, out_w: int) -> ImageTensor:
    """Bilinear resize with half-pixel-center alignment and edge clamping."""
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"output size must be positive, got {out_h}x{out_w}")
    h, w, _ = img.shape
    if (h, w) == (out_h, out_w):
        return ImageTensor(img.data.copy(), img.range_tag)

    def axis(n_in, n_out):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        i0 = np.floor(src).astype(np.int64)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, src - i0

    y0, y1, fy = axis(h, out_h)
    x0, x1, fx = axis(w, out_w)
    d = img.data.astype(np.float64)
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = d[y0][:, x0] * (1 - fx) + d[y0][:, x1] * fx
    bot = d[y1][:, x0] * (1 - fx) + d[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    # convex combination; clip only guards float32 rounding at the extremes
    out = np.clip(out, d.min(), d.max())
    return ImageTensor(out.astype(np.float32), img.range_tag)


def normalize_range(img: ImageTensor, target: RangeTag) -> ImageTensor:
    """Per-image min-max map onto ``target``; constant images go to the midpoint."""
    if target is RangeTag.UNBOUNDED:
        return ImageTensor(img.data.copy(), target)
    lo, hi = _RANGE_BOUNDS[target]
    d = img.data.astype(np.float64)
    dmin, dmax = d.min(), d.max()
    if dmax == dmin:
        out = np.full_like(d, (lo + hi) / 2)
    else:
        out = lo + (d - dmin) / (dmax - dmin) * (hi - lo)
    return ImageTensor(np.clip(out, lo, hi).astype(np.float32), target)


def fft2d(plane: np.ndarray) -> ComplexPlane:
    """Unnormalized forward 2D DFT of a real plane (any size)."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or min(plane.shape) < 1:
        raise DimensionError(f"fft2d expects a non-empty 2D plane, got {plane.shape}")
    return ComplexPlane.from_complex(np.fft.fft2(plane))


def ifft2d(spec: ComplexPlane) -> np.ndarray:
    return np.fft.ifft2(spec.to_complex())


def zero_center_shift(spec: ComplexPlane) -> ComplexPlane:
    """Move bin (0, 0) to (H // 2, W // 2)."""
    shift = (spec.height // 2, spec.width // 2)
    return ComplexPlane(np.roll(spec.re, shift, axis=(0, 1)), np.roll(spec.im, shift, axis=(0, 1)))


def log_magnitude(spec: ComplexPlane) -> np.ndarray:
    return np.log1p(np.hypot(spec.re, spec.im))


def spectral_image(img: ImageTensor) -> ImageTensor:
    """Per-channel centered log-magnitude spectrum, min-max scaled to [0, 255]."""
    if img.range_tag is not RangeTag.BYTE0255:
        raise ParameterError("spectral_image expects a Byte0255 image")
    chans = [
        log_magnitude(zero_center_shift(fft2d(img.data[:, :, c]))) for c in range(img.channels)
    ]
    mag = ImageTensor(np.stack(chans, axis=-1), RangeTag.UNBOUNDED)
    return normalize_range(mag, RangeTag.BYTE0255)
