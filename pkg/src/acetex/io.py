"""Image and model persistence.

PGM support covers binary P5 and ASCII P2 at maxval 255.  Models are stored
in a line-oriented ASCII format ("ACE-MODEL v1") holding the config, the raw
histograms, and the codebooks with full float round-trip precision; lookup
tables are rebuilt from the codebooks on load, so save -> load -> save is
byte-identical.
"""

from __future__ import annotations

import numpy as np

from .pyramid import AceConfig, AceLayer, AceModel, Frame, layer_geometry
from .stats import Histogram1D, Histogram2D
from .vq import Codebook, build_lut

__all__ = [
    "PgmParseError",
    "ModelFormatError",
    "read_pgm",
    "write_pgm",
    "save_model",
    "load_model",
]


class PgmParseError(ValueError):
    """Malformed or unsupported PGM data; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ModelFormatError(ValueError):
    """Malformed, truncated, or inconsistent model file."""


_WHITESPACE = frozenset(b" \t\r\n\x0b\x0c")
_HASH = ord("#")


def _skip_space(data: bytes, pos: int) -> int:
    while pos < len(data):
        c = data[pos]
        if c == _HASH:
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    return pos


def _next_token(data: bytes, pos: int, what: str) -> tuple[bytes, int]:
    pos = _skip_space(data, pos)
    if pos >= len(data):
        raise PgmParseError(f"unexpected end of data while reading {what}", pos)
    end = pos
    while end < len(data) and data[end] not in _WHITESPACE and data[end] != _HASH:
        end += 1
    return data[pos:end], end


def _next_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, end = _next_token(data, pos, what)
    try:
        return int(token), end
    except ValueError:
        raise PgmParseError(f"expected an integer {what}, got {token!r}", pos) from None


def read_pgm(data: bytes) -> Frame:
    """Parse P5 (binary) or P2 (ASCII) greymap bytes into an 8-bit frame."""
    magic, pos = _next_token(data, 0, "magic number")
    if magic not in (b"P5", b"P2"):
        raise PgmParseError(f"unsupported magic {magic!r}, expected P5 or P2", 0)
    width, pos = _next_int(data, pos, "width")
    height, pos = _next_int(data, pos, "height")
    if width < 1 or height < 1:
        raise PgmParseError(f"bad dimensions {width}x{height}", pos)
    maxval, pos = _next_int(data, pos, "maxval")
    if maxval != 255:
        raise PgmParseError(f"unsupported maxval {maxval}, expected 255", pos)

    count = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\r", b"\n"):
            raise PgmParseError("expected a single whitespace byte after maxval", pos)
        pos += 1
        raw = data[pos:pos + count]
        if len(raw) < count:
            raise PgmParseError(
                f"truncated pixel data: expected {count} bytes, got {len(raw)}", pos + len(raw)
            )
        samples = np.frombuffer(raw, dtype=np.uint8, count=count)
    else:
        values = np.empty(count, dtype=np.int64)
        for i in range(count):
            v, pos = _next_int(data, pos, f"pixel {i}")
            if not (0 <= v <= maxval):
                raise PgmParseError(f"pixel value {v} exceeds maxval {maxval}", pos)
            values[i] = v
        samples = values
    codes = np.asarray(samples, dtype=np.int64).reshape(height, width)
    return Frame(codes, 8)


def write_pgm(frame: Frame) -> bytes:
    """Serialize a frame of byte-sized codes as binary P5 with maxval 255."""
    if frame.bits > 8:
        raise ValueError("PGM output needs codes that fit in one byte")
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.codes.astype(np.uint8).tobytes()


_MAGIC = "ACE-MODEL"
_VERSION = "v1"


def save_model(model: AceModel) -> bytes:
    """Serialize a model to its canonical ASCII form."""
    c = model.config
    lines = [
        f"{_MAGIC} {_VERSION}",
        f"width {model.width} height {model.height} layers {c.layers} "
        f"vq_bits {c.vq_bits} hist_bits {c.hist_bits} wedge {int(c.wedge)} seed {c.seed}",
        "LEAF_HIST",
        " ".join(str(int(v)) for v in model.leaf_hist.counts),
    ]
    for layer in model.layers:
        g = layer.geometry
        lines.append(f"LAYER {g.level} DIR {g.direction} OFFSET {g.offset}")
        lines.append(f"CODEBOOK {len(layer.codebook)}")
        for vx, vy in layer.codebook.vectors:
            lines.append(f"{vx:.17g} {vy:.17g}")
        lines.append("HIST")
        for row in layer.hist.counts:
            lines.append(" ".join(str(int(v)) for v in row))
    lines.append("END")
    return ("\n".join(lines) + "\n").encode("ascii")


class _Tokens:
    """Whitespace-delimited token stream with truncation-aware errors."""

    def __init__(self, text: str):
        self._tokens = text.split()
        self._pos = 0

    def next(self, what: str) -> str:
        if self._pos >= len(self._tokens):
            raise ModelFormatError(f"truncated model file: expected {what}")
        tok = self._tokens[self._pos]
        self._pos += 1
        return tok

    def expect(self, literal: str) -> None:
        tok = self.next(f"'{literal}'")
        if tok != literal:
            raise ModelFormatError(f"malformed model file: expected '{literal}', got '{tok}'")

    def next_int(self, what: str) -> int:
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ModelFormatError(f"malformed model file: expected integer {what}, got '{tok}'") from None

    def next_float(self, what: str) -> float:
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise ModelFormatError(f"malformed model file: expected number {what}, got '{tok}'") from None

    def exhausted(self) -> bool:
        return self._pos >= len(self._tokens)


def load_model(data: bytes) -> AceModel:
    """Parse model bytes, validate consistency, and rebuild lookup tables."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"model file is not ASCII: {exc}") from None
    toks = _Tokens(text)

    magic = toks.next("magic")
    if magic != _MAGIC:
        raise ModelFormatError(f"not a model file: magic '{magic}'")
    version = toks.next("format version")
    if version != _VERSION:
        raise ModelFormatError(f"unsupported model version '{version}', expected '{_VERSION}'")

    fields = {}
    for name in ("width", "height", "layers", "vq_bits", "hist_bits", "wedge", "seed"):
        toks.expect(name)
        fields[name] = toks.next_int(name)
    if fields["wedge"] not in (0, 1):
        raise ModelFormatError("malformed model file: wedge must be 0 or 1")
    config = AceConfig(
        layers=fields["layers"],
        vq_bits=fields["vq_bits"],
        hist_bits=fields["hist_bits"],
        wedge=bool(fields["wedge"]),
        seed=fields["seed"],
    )
    if fields["width"] < 1 or fields["height"] < 1:
        raise ModelFormatError("model dimensions are inconsistent: non-positive image size")

    nbins = 1 << config.hist_bits
    toks.expect("LEAF_HIST")
    leaf = np.array([toks.next_int("leaf count") for _ in range(nbins)], dtype=np.int64)
    if np.any(leaf < 0):
        raise ModelFormatError("model counts are inconsistent: negative leaf bin")

    cb_size = 1 << config.vq_bits
    start = None
    layers: list[AceLayer] = []
    for level in range(1, config.layers + 1):
        toks.expect("LAYER")
        got_level = toks.next_int("layer level")
        if got_level != level:
            raise ModelFormatError(
                f"model geometry is inconsistent: expected layer {level}, found {got_level}"
            )
        toks.expect("DIR")
        direction = toks.next("layer direction")
        if direction not in ("v", "h"):
            raise ModelFormatError(f"model geometry is inconsistent: direction '{direction}'")
        if level == 1:
            start = direction
        toks.expect("OFFSET")
        offset = toks.next_int("layer offset")
        geom = layer_geometry(level, start)
        if geom.direction != direction or geom.offset != offset:
            raise ModelFormatError(
                f"model geometry is inconsistent at layer {level}: "
                f"DIR {direction} OFFSET {offset} does not alternate from layer 1"
            )

        toks.expect("CODEBOOK")
        n = toks.next_int("codebook size")
        if n != cb_size:
            raise ModelFormatError(
                f"model codebook is inconsistent: {n} entries for vq_bits {config.vq_bits}"
            )
        vecs = np.empty((n, 2), dtype=float)
        for i in range(n):
            vecs[i, 0] = toks.next_float("codebook x")
            vecs[i, 1] = toks.next_float("codebook y")
        cb = Codebook(vecs)

        toks.expect("HIST")
        counts = np.empty((nbins, nbins), dtype=np.int64)
        for r in range(nbins):
            for cidx in range(nbins):
                counts[r, cidx] = toks.next_int("histogram count")
        if np.any(counts < 0):
            raise ModelFormatError("model counts are inconsistent: negative histogram bin")

        layers.append(AceLayer(geom, cb, build_lut(cb, config.vq_bits), Histogram2D(config.hist_bits, counts)))

    toks.expect("END")
    if not toks.exhausted():
        raise ModelFormatError("malformed model file: trailing data after END")

    return AceModel(
        config,
        fields["width"],
        fields["height"],
        Histogram1D(config.hist_bits, leaf),
        layers,
    )
