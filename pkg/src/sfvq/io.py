"""Vector-file persistence and figure output (SVG curve plots, PGM heatmaps).

Binary vector files::

    offset 0   8 bytes   ASCII magic "SFVQVEC1"
    offset 8   uint32 LE count
    offset 12  uint32 LE dim
    offset 16  count*dim float32 LE, row-major

Paths ending in ``.csv`` are read/written as one vector per line instead.
Values are stored as float32, so float64 data is rounded on write.
"""

import struct
from pathlib import Path

import numpy as np

from ._arrays import as_codebook, as_vectors
from .analysis import pca_directions
from .directions import DirectionVec
from .errors import DimensionError, FormatError, LengthError, NumericError

MAGIC = b"SFVQVEC1"
HEADER = struct.Struct("<8sII")


def _is_csv(path) -> bool:
    return str(path).lower().endswith(".csv")


def encode_vectors(vs) -> bytes:
    x = as_vectors(vs, allow_empty=True)
    return HEADER.pack(MAGIC, x.shape[0], x.shape[1]) + x.astype("<f4").tobytes()


def decode_vectors(buf: bytes) -> np.ndarray:
    if len(buf) < HEADER.size:
        raise LengthError(f"file too short for header ({len(buf)} bytes)")
    magic, count, dim = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if dim < 1:
        raise FormatError("dim must be >= 1")
    want = HEADER.size + 4 * count * dim
    if len(buf) != want:
        raise LengthError(f"payload length mismatch: header declares {want} bytes, file has {len(buf)}")
    data = np.frombuffer(buf, dtype="<f4", offset=HEADER.size).reshape(count, dim)
    if not np.all(np.isfinite(data)):
        raise NumericError("file contains non-finite values")
    return data.astype(np.float64)


def write_vectors(path, vs) -> None:
    """Write a ``(count, dim)`` array; ``.csv`` paths get decimal text."""
    if _is_csv(path):
        x = as_vectors(vs).astype(np.float32)
        lines = [",".join(repr(float(v)) for v in row) for row in x]
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        Path(path).write_bytes(encode_vectors(vs))


def read_vectors(path) -> np.ndarray:
    """Read a vector file as a float64 ``(count, dim)`` array."""
    if not _is_csv(path):
        return decode_vectors(Path(path).read_bytes())
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: no vectors")
    if len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: rows have differing lengths")
    data = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise NumericError("file contains non-finite values")
    return data


def write_direction(path, d: DirectionVec) -> Path:
    """Write the vector as a 1-row vector file plus a ``key=value`` sidecar.

    Returns the sidecar path (``<path>.txt``).
    """
    write_vectors(path, d.vector[None, :])
    sidecar = Path(str(path) + ".txt")
    i, j = d.source_pair
    sidecar.write_text(
        f"label={d.label}\npair={i},{j}\nlayer_mask={d.layer_mask}\nraw_norm={d.raw_norm!r}\n")
    return sidecar


def read_direction(path) -> DirectionVec:
    vec = read_vectors(path)
    if vec.shape[0] != 1:
        raise FormatError("direction file must hold exactly one vector")
    meta = {}
    sidecar = Path(str(path) + ".txt")
    if sidecar.exists():
        for line in sidecar.read_text().splitlines():
            key, sep, value = line.partition("=")
            if sep:
                meta[key] = value
    pair = tuple(int(p) for p in meta.get("pair", "-1,-1").split(","))
    return DirectionVec(vec[0], pair, meta.get("label", ""), meta.get("layer_mask", ""),
                        float(meta.get("raw_norm", "1.0")))


# ---------------------------------------------------------------------------
# figures

SVG_SIZE = 600
LIGHT = np.array([0.88, 0.93, 0.98])
DARK = np.array([0.03, 0.12, 0.35])


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def segment_colors(n_segments: int) -> np.ndarray:
    """RGB fractions running light to dark along the curve."""
    t = np.linspace(0.0, 1.0, n_segments)[:, None] if n_segments > 1 else np.zeros((1, 1))
    return (1.0 - t) * LIGHT + t * DARK


def _css_rgb(rgb) -> str:
    return "rgb(" + ",".join(_fmt(100.0 * v) + "%" for v in rgb) + ")"


def curve_svg(data, codebook) -> str:
    """SVG text: data as grey dots, codewords as circles, the curve as coloured line segments.

    Data with more than two dimensions is projected onto its top two
    principal directions. The view is fitted to the data bounding box plus
    a 5% margin; codewords outside it are clipped.
    """
    x = as_vectors(data, "data")
    c = as_codebook(codebook)
    if x.shape[1] < 2 or c.shape[1] != x.shape[1]:
        raise DimensionError("plotting needs data and codebook of equal dim >= 2")
    if x.shape[1] > 2:
        mean = x.mean(axis=0)
        basis = pca_directions(x, 2)
        x = (x - mean) @ basis.T
        c = (c - mean) @ basis.T
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    lo = lo - 0.05 * span
    hi = hi + 0.05 * span
    scale = SVG_SIZE / float(np.max(hi - lo))
    offset = (SVG_SIZE - scale * (hi - lo)) / 2

    def px(p):
        q = (p - lo) * scale + offset
        return q[..., 0], SVG_SIZE - q[..., 1]

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" '
        f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        f'<rect x="0" y="0" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>',
        '<g id="data" fill="#9a9a9a" stroke="none">',
    ]
    dx, dy = px(x)
    for a, b in zip(dx, dy):
        out.append(f'<rect x="{_fmt(a - 0.75)}" y="{_fmt(b - 0.75)}" width="1.5" height="1.5"/>')
    out.append("</g>")
    cx, cy = px(c)
    colors = segment_colors(len(c) - 1)
    out.append('<g id="curve" stroke-width="1.5" stroke-linecap="round">')
    for k in range(len(c) - 1):
        out.append(f'<line x1="{_fmt(cx[k])}" y1="{_fmt(cy[k])}" x2="{_fmt(cx[k + 1])}" '
                   f'y2="{_fmt(cy[k + 1])}" stroke="{_css_rgb(colors[k])}"/>')
    out.append("</g>")
    out.append('<g id="codewords" fill="#1f5fd6" stroke="none">')
    for a, b in zip(cx, cy):
        out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.5"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_curve_svg(data, codebook, path) -> None:
    """Write :func:`curve_svg` output to ``path``."""
    text = curve_svg(data, codebook)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def heatmap_pixels(matrix) -> np.ndarray:
    """8-bit grey levels, bright for small values: ``round(255 (1 - m / max m))``."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"heatmap needs a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("heatmap matrix contains non-finite values")
    top = m.max()
    if top <= 0:
        return np.full(m.shape, 255, dtype=np.uint8)
    # round half up
    return np.floor(255.0 * (1.0 - m / top) + 0.5).clip(0, 255).astype(np.uint8)


def render_heatmap_pgm(matrix, path) -> None:
    """Binary (P5) 8-bit PGM of a square matrix."""
    pix = heatmap_pixels(matrix)
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path) -> np.ndarray:
    """Minimal P5 reader (whitespace-separated header, no comments)."""
    buf = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while buf[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not buf[pos:pos + 1].isspace():
            pos += 1
        fields.append(buf[start:pos])
    pos += 1
    if fields[0] != b"P5":
        raise FormatError("not a binary PGM")
    w, h, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise FormatError("only 8-bit PGM supported")
    payload = buf[pos:]
    if len(payload) != w * h:
        raise LengthError(f"PGM payload has {len(payload)} bytes, expected {w * h}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w)
