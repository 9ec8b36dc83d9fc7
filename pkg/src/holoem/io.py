"""File formats and flat key-value documents.

Images travel as PFM (grayscale 'Pf', float32, |scale| row order
bottom-to-top, sign of scale giving endianness) for lossless float data,
or binary PGM ('P5', maxval 255 or 65535, 16-bit big-endian) for display.
Every image carries a sidecar ``<image>.meta`` in the same ``key = value``
format as config files, holding pixel pitch, wavelength when known, and
for PGM the quantization range so loading can undo the scaling.

Config documents are flat ``key = value`` lines with ``#`` comments; all
physical quantities in files are SI. Traces are CSV with the fixed header
``iteration,nll,tv,ssim,millis``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import scipy.ndimage as _ndi

from .em import ReconTrace
from .grid import RealGrid2D

logger = logging.getLogger(__name__)

__all__ = [
    "HoloIOError",
    "ConfigError",
    "DEFAULT_WAVELENGTH",
    "DEFAULT_PITCH",
    "save_image",
    "load_image",
    "load_metadata",
    "sidecar_path",
    "apply_reference_illumination",
    "parse_key_values",
    "load_key_values",
    "write_key_values",
    "write_trace",
    "read_trace",
    "write_error_record",
]

DEFAULT_WAVELENGTH = 675e-9
DEFAULT_PITCH = 1.12e-6

_MAX_SIDE = 32768
_MAX_PIXELS = 1 << 26


class HoloIOError(Exception):
    """Malformed or unreadable image/trace data."""


class ConfigError(Exception):
    """Invalid configuration document or parameter value."""


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta")


def _check_dims(width: int, height: int, where: str):
    if width < 1 or height < 1:
        raise HoloIOError(f"{where}: non-positive dimensions {width}x{height}")
    if width > _MAX_SIDE or height > _MAX_SIDE or width * height > _MAX_PIXELS:
        raise HoloIOError(f"{where}: dimensions {width}x{height} overflow the supported range")


def _read_token(buf: bytes, pos: int, where: str, allow_comments: bool) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        if allow_comments and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos] not in b"\r\n":
                pos += 1
        elif buf[pos] in b" \t\r\n":
            pos += 1
        else:
            break
    if pos >= n:
        raise HoloIOError(f"{where}: header truncated at byte {pos}")
    start = pos
    while pos < n and buf[pos] not in b" \t\r\n":
        pos += 1
    return buf[start:pos], pos


def _header_int(token: bytes, where: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise HoloIOError(f"{where}: expected an integer, got {token!r}") from None


def _write_pfm(path: Path, data: np.ndarray):
    height, width = data.shape
    with open(path, "wb") as f:
        f.write(f"Pf\n{width} {height}\n-1.0\n".encode("ascii"))
        f.write(np.flipud(data).astype("<f4").tobytes())


def _read_pfm(path: Path) -> np.ndarray:
    buf = path.read_bytes()
    magic, pos = _read_token(buf, 0, str(path), allow_comments=False)
    if magic == b"PF":
        raise HoloIOError(f"{path}: color PFM not supported, expected grayscale 'Pf'")
    if magic != b"Pf":
        raise HoloIOError(f"{path}: bad magic {magic!r}, expected 'Pf'")
    wtok, pos = _read_token(buf, pos, str(path), allow_comments=False)
    htok, pos = _read_token(buf, pos, str(path), allow_comments=False)
    stok, pos = _read_token(buf, pos, str(path), allow_comments=False)
    width, height = _header_int(wtok, str(path)), _header_int(htok, str(path))
    _check_dims(width, height, str(path))
    try:
        scale = float(stok)
    except ValueError:
        raise HoloIOError(f"{path}: bad scale token {stok!r}") from None
    if scale == 0.0 or not np.isfinite(scale):
        raise HoloIOError(f"{path}: scale must be finite and nonzero, got {scale}")
    pos += 1  # single whitespace after the scale line
    raw = buf[pos:pos + 4 * width * height]
    if len(raw) < 4 * width * height:
        raise HoloIOError(
            f"{path}: expected {4 * width * height} data bytes, found {len(raw)}"
        )
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.flipud(np.frombuffer(raw, dtype=dtype).reshape(height, width)).astype(np.float64)
    if not np.isfinite(data).all():
        bad = np.argwhere(~np.isfinite(data))[0]
        raise HoloIOError(f"{path}: non-finite pixel at (y={bad[0]}, x={bad[1]})")
    return data


def _write_pgm(path: Path, data: np.ndarray, bit_depth: int) -> tuple[float, float]:
    if bit_depth not in (8, 16):
        raise ValueError(f"PGM bit depth must be 8 or 16, got {bit_depth}")
    maxval = (1 << bit_depth) - 1
    lo, hi = float(data.min()), float(data.max())
    if hi > lo:
        q = np.rint((data - lo) / (hi - lo) * maxval)
    else:
        q = np.zeros_like(data)
    height, width = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        f.write(q.astype(">u2" if bit_depth == 16 else "u1").tobytes())
    return lo, hi


def _read_pgm(path: Path) -> tuple[np.ndarray, int]:
    buf = path.read_bytes()
    magic, pos = _read_token(buf, 0, str(path), allow_comments=True)
    if magic != b"P5":
        raise HoloIOError(f"{path}: bad magic {magic!r}, expected binary 'P5'")
    wtok, pos = _read_token(buf, pos, str(path), allow_comments=True)
    htok, pos = _read_token(buf, pos, str(path), allow_comments=True)
    mtok, pos = _read_token(buf, pos, str(path), allow_comments=True)
    width, height = _header_int(wtok, str(path)), _header_int(htok, str(path))
    _check_dims(width, height, str(path))
    maxval = _header_int(mtok, str(path))
    if not 0 < maxval < 65536:
        raise HoloIOError(f"{path}: maxval {maxval} out of range")
    pos += 1
    itemsize = 2 if maxval > 255 else 1
    raw = buf[pos:pos + itemsize * width * height]
    if len(raw) < itemsize * width * height:
        raise HoloIOError(
            f"{path}: expected {itemsize * width * height} data bytes, found {len(raw)}"
        )
    counts = np.frombuffer(raw, dtype=">u2" if itemsize == 2 else "u1").reshape(height, width)
    return counts.astype(np.float64), maxval


def save_image(path, grid: RealGrid2D, wavelength: float | None = None,
               bit_depth: int = 16) -> list[Path]:
    """Write a grid as .pfm (float) or .pgm (quantized) plus its sidecar.

    Returns the written paths ([image, sidecar]). PGM data is min-max
    scaled to the integer range; the range goes into the sidecar so
    :func:`load_image` can restore the original values to quantization
    accuracy.
    """
    path = Path(path)
    meta: dict[str, object] = {"pitch_x": grid.pitch_x, "pitch_y": grid.pitch_y}
    if wavelength is not None:
        meta["wavelength"] = wavelength
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        _write_pfm(path, grid.data)
    elif suffix == ".pgm":
        lo, hi = _write_pgm(path, grid.data, bit_depth)
        meta["pgm_min"] = lo
        meta["pgm_max"] = hi
    else:
        raise HoloIOError(f"{path}: unsupported image suffix {suffix!r} (use .pfm or .pgm)")
    side = sidecar_path(path)
    write_key_values(side, meta)
    return [path, side]


def load_metadata(path) -> dict[str, str]:
    """Sidecar key-value pairs for an image path; empty when absent."""
    side = sidecar_path(path)
    if not side.exists():
        return {}
    return load_key_values(side)


def load_image(path) -> RealGrid2D:
    """Read a .pfm or .pgm image with its sidecar metadata.

    Missing sidecars fall back to the default pitch (1.12 um) with a
    warning. PGM values are mapped back to the recorded range when the
    sidecar has one, otherwise to [0, 1].
    """
    path = Path(path)
    if not path.exists():
        raise HoloIOError(f"{path}: no such file")
    suffix = path.suffix.lower()
    meta = load_metadata(path)
    if not meta:
        logger.warning(
            "%s: no sidecar metadata; assuming pitch %.3g m (and wavelength %.3g m if needed)",
            path, DEFAULT_PITCH, DEFAULT_WAVELENGTH,
        )
    try:
        pitch_x = float(meta.get("pitch_x", DEFAULT_PITCH))
        pitch_y = float(meta.get("pitch_y", meta.get("pitch_x", DEFAULT_PITCH)))
    except ValueError as exc:
        raise HoloIOError(f"{sidecar_path(path)}: bad pitch value ({exc})") from None
    if suffix == ".pfm":
        data = _read_pfm(path)
    elif suffix == ".pgm":
        counts, maxval = _read_pgm(path)
        data = counts / maxval
        if "pgm_min" in meta and "pgm_max" in meta:
            lo, hi = float(meta["pgm_min"]), float(meta["pgm_max"])
            data = lo + data * (hi - lo)
    else:
        raise HoloIOError(f"{path}: unsupported image suffix {suffix!r} (use .pfm or .pgm)")
    return RealGrid2D(data, pitch_x, pitch_y)


def apply_reference_illumination(raw: RealGrid2D, size: int = 5) -> RealGrid2D:
    """Smooth a recorded reference image into a per-pixel upper bound.

    A k x k mean filter with replicated edges knocks shot noise out of the
    reference while keeping its low-frequency illumination profile.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"mean filter size must be odd and >= 1, got {size}")
    return raw.with_data(_ndi.uniform_filter(raw.data, size=size, mode="nearest"))


def parse_key_values(text: str, where: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{where}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = body.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{where}:{lineno}: empty key")
        if key in out:
            logger.warning("%s:%d: duplicate key %r overrides earlier value", where, lineno, key)
        out[key] = value
    return out


def load_key_values(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise HoloIOError(f"{path}: {exc}") from None
    return parse_key_values(text, where=str(path))


def write_key_values(path, mapping) -> Path:
    path = Path(path)
    lines = []
    for key, value in mapping.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_trace(path, trace: ReconTrace) -> Path:
    """Write a trace as CSV with header iteration,nll,tv,ssim,millis."""
    path = Path(path)
    rows = ["iteration,nll,tv,ssim,millis"]
    for i in range(len(trace)):
        s = "" if trace.ssim[i] is None else repr(trace.ssim[i])
        rows.append(
            f"{trace.iterations[i]},{trace.nll[i]!r},{trace.tv[i]!r},{s},{trace.millis[i]!r}"
        )
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def read_trace(path) -> ReconTrace:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "iteration,nll,tv,ssim,millis":
        raise HoloIOError(f"{path}: bad trace header")
    trace = ReconTrace()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise HoloIOError(f"{path}:{lineno}: expected 5 columns, got {len(parts)}")
        it, nll_s, tv_s, ssim_s, ms_s = parts
        try:
            trace.append(int(it), float(nll_s), float(tv_s),
                         None if ssim_s == "" else float(ssim_s), float(ms_s))
        except ValueError as exc:
            raise HoloIOError(f"{path}:{lineno}: {exc}") from None
    return trace


def write_error_record(out_dir, exit_code: int, kind: str, message: str) -> Path | None:
    """Best-effort machine-readable failure record in the output directory."""
    try:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "error.json"
        path.write_text(
            json.dumps({"exit_code": exit_code, "error": kind, "message": message}, indent=2)
            + "\n",
            encoding="utf-8",
        )
        return path
    except OSError:
        logger.error("could not write error record to %s", out_dir)
        return None
