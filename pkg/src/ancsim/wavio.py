"""Mono WAV input/output: 16-bit PCM and 32-bit IEEE float.

16-bit samples map to [-1, 1) by division by 32768; writing is the exact
inverse with round-half-away-from-zero, so data already on the 16-bit
grid round-trips bit-identically. Values outside the representable range
clamp to the rail and are counted as clipped. Float32 files are read
exactly; writing rounds float64 data to float32.
"""

from __future__ import annotations

import struct
import warnings

import numpy as np

from .errors import EmptyWavError, MalformedWavError, UnsupportedWavError
from .signals import Signal

FORMAT_PCM = 0x0001
FORMAT_IEEE_FLOAT = 0x0003


class ClippingWarning(UserWarning):
    """Samples were clamped to the representable range during a write."""


def read_wav(path) -> Signal:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise MalformedWavError(f"{path}: too short for a RIFF header")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWavError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset:offset + 4]
        (chunk_size,) = struct.unpack_from("<I", data, offset + 4)
        body_start = offset + 8
        if body_start + chunk_size > len(data):
            raise MalformedWavError(f"{path}: chunk {chunk_id!r} overruns the file")
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise MalformedWavError(f"{path}: fmt chunk of {chunk_size} bytes")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            payload = data[body_start:body_start + chunk_size]
        offset = body_start + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise MalformedWavError(f"{path}: missing fmt chunk")
    if payload is None:
        raise MalformedWavError(f"{path}: missing data chunk")
    format_tag, channels, sample_rate, _byte_rate, _block_align, bits = fmt

    if channels != 1:
        raise UnsupportedWavError(
            f"{path}: {channels} channels; only mono is supported. Downmix or "
            f"extract one channel before loading.")
    if format_tag == FORMAT_PCM and bits == 16:
        if len(payload) % 2:
            raise MalformedWavError(f"{path}: odd PCM16 data size {len(payload)}")
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif format_tag == FORMAT_IEEE_FLOAT and bits == 32:
        if len(payload) % 4:
            raise MalformedWavError(f"{path}: float32 data size {len(payload)} not a multiple of 4")
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavError(
            f"{path}: format tag {format_tag} at {bits} bits; supported: PCM 16-bit, "
            f"IEEE float 32-bit")
    if samples.size == 0:
        raise EmptyWavError(f"{path}: zero-length data chunk")
    return Signal(samples, float(sample_rate))


def write_wav(path, sig: Signal, fmt: str = "pcm16") -> int:
    """Write a mono WAV; returns the number of clipped samples."""
    rate = int(round(sig.sample_rate_hz))
    if fmt == "pcm16":
        scaled = sig.samples * 32768.0
        quantized = np.copysign(np.floor(np.abs(scaled) + 0.5), scaled)
        clipped = int(np.sum((quantized > 32767.0) | (quantized < -32768.0)))
        quantized = np.clip(quantized, -32768.0, 32767.0)
        payload = quantized.astype("<i2").tobytes()
        blob = _render(rate, channels=1, bits=16, format_tag=FORMAT_PCM,
                       payload=payload, n_frames=len(sig))
    elif fmt == "float32":
        payload = sig.samples.astype("<f4").tobytes()
        clipped = 0
        blob = _render(rate, channels=1, bits=32, format_tag=FORMAT_IEEE_FLOAT,
                       payload=payload, n_frames=len(sig))
    else:
        raise UnsupportedWavError(f"unknown write format {fmt!r}; use pcm16 or float32")
    with open(path, "wb") as fh:
        fh.write(blob)
    if clipped:
        warnings.warn(f"{path}: clipped {clipped} samples to the 16-bit range",
                      ClippingWarning, stacklevel=2)
    return clipped


def _render(rate, channels, bits, format_tag, payload, n_frames) -> bytes:
    block_align = channels * bits // 8
    byte_rate = rate * block_align
    fmt_chunk = struct.pack("<4sIHHIIHH", b"fmt ", 16, format_tag, channels,
                            rate, byte_rate, block_align, bits)
    chunks = fmt_chunk
    if format_tag == FORMAT_IEEE_FLOAT:
        chunks += struct.pack("<4sII", b"fact", 4, n_frames)
    data_header = struct.pack("<4sI", b"data", len(payload))
    pad = b"\x00" if len(payload) % 2 else b""
    body = chunks + data_header + payload + pad
    return struct.pack("<4sI4s", b"RIFF", 4 + len(body), b"WAVE") + body
