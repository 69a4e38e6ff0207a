"""On-disk formats: canonical JSON, the binary grid format, and PGM images.

JSON output is deterministic (sorted keys, floats rendered with 17
significant digits) so identical inputs produce byte-identical files.
Grids use a little-endian float64 container with magic ``ANI1``; PGM
covers 8- and 16-bit image interchange with the affine value scaling
recorded in a JSON sidecar.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from fractions import Fraction
from typing import Any

import numpy as np

from .dictionary import (
    AnisoFilterBank,
    UnivariateQMFSet,
    moment_order_nd,
)
from .lattice import IntMatrix, RatMatrix, SmithFactorization
from .seqcore import CoefSeq, Window
from .subdivision import SampledFunction

GRID_MAGIC = b"ANI1"


# -- canonical JSON ----------------------------------------------------------

def dumps(obj: Any) -> str:
    """Serialize to canonical JSON: sorted keys, 17-significant-digit floats."""
    return _render(obj)


def _render(obj: Any) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError("cannot serialize non-finite float")
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Fraction):
        return _render({"num": obj.numerator, "den": obj.denominator})
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        return "{" + ",".join(f"{json.dumps(str(k))}:{_render(v)}"
                              for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_render(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj)!r}")


def atomic_write_text(path: str, text: str):
    _atomic_write(path, text.encode())


def atomic_write_bytes(path: str, blob: bytes):
    _atomic_write(path, blob)


def _atomic_write(path: str, blob: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".aniso-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- matrices and rationals --------------------------------------------------

def matrix_to_json(m: IntMatrix) -> dict:
    return {"dim": m.dim, "rows": [list(r) for r in m.entries]}

def matrix_from_json(obj: dict) -> IntMatrix:
    m = IntMatrix.from_rows(obj["rows"])
    if m.dim != obj.get("dim", m.dim):
        raise ValueError("matrix dim field disagrees with rows")
    return m


def rat_matrix_to_json(m: RatMatrix) -> dict:
    return {"dim": m.dim,
            "rows": [[{"num": x.numerator, "den": x.denominator} for x in row]
                     for row in m.entries]}


def rat_matrix_from_json(obj: dict) -> RatMatrix:
    return RatMatrix.from_rows(
        [[Fraction(x["num"], x["den"]) for x in row] for row in obj["rows"]])


# -- coefficient sequences ---------------------------------------------------

def coefseq_to_json(c: CoefSeq) -> dict:
    return {"dim": c.dim, "origin": list(c.origin), "shape": list(c.shape),
            "data": [float(x) for x in c.data.reshape(-1)]}


def coefseq_from_json(obj: dict) -> CoefSeq:
    shape = tuple(int(n) for n in obj["shape"])
    data = np.array(obj["data"], dtype=np.float64).reshape(shape)
    return CoefSeq(tuple(int(o) for o in obj["origin"]), data)


# -- binary grid container ---------------------------------------------------

def grid_to_bytes(c: CoefSeq) -> bytes:
    head = GRID_MAGIC + struct.pack("<I", c.dim)
    head += struct.pack(f"<{c.dim}q", *c.origin)
    head += struct.pack(f"<{c.dim}Q", *c.shape)
    return head + np.ascontiguousarray(c.data, dtype="<f8").tobytes()


def grid_from_bytes(blob: bytes) -> CoefSeq:
    if blob[:4] != GRID_MAGIC:
        raise ValueError("not a grid file (bad magic)")
    (dim,) = struct.unpack_from("<I", blob, 4)
    off = 8
    origin = struct.unpack_from(f"<{dim}q", blob, off)
    off += 8 * dim
    shape = struct.unpack_from(f"<{dim}Q", blob, off)
    off += 8 * dim
    count = int(np.prod(shape))
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
    return CoefSeq(origin, data.reshape(shape).copy())


def write_grid(path: str, c: CoefSeq):
    atomic_write_bytes(path, grid_to_bytes(c))


def read_grid(path: str) -> CoefSeq:
    with open(path, "rb") as handle:
        return grid_from_bytes(handle.read())


# -- sampled limit functions -------------------------------------------------

def sampled_sidecar(sf: SampledFunction, extra: dict | None = None) -> dict:
    obj = {"level": sf.level, "xi_total": matrix_to_json(sf.xi_total),
           "window": {"lo": list(sf.window.lo), "hi": list(sf.window.hi)}}
    if extra:
        obj.update(extra)
    return obj


def write_sampled(base_path: str, sf: SampledFunction, extra: dict | None = None):
    """Write base_path.grid plus the base_path.json sidecar."""
    write_grid(base_path + ".grid", sf.as_seq())
    atomic_write_text(base_path + ".json", dumps(sampled_sidecar(sf, extra)) + "\n")


def read_sampled(base_path: str) -> SampledFunction:
    seq = read_grid(base_path + ".grid")
    with open(base_path + ".json", "r", encoding="utf-8") as handle:
        side = json.load(handle)
    window = Window(tuple(side["window"]["lo"]), tuple(side["window"]["hi"]))
    if window.lo != seq.origin or window.shape != seq.shape:
        raise ValueError("sidecar window disagrees with grid")
    return SampledFunction(int(side["level"]), matrix_from_json(side["xi_total"]),
                           window, seq.data)


# -- univariate sets and banks -----------------------------------------------

def univariate_set_to_json(s: UnivariateQMFSet) -> dict:
    return {"scale": s.scale, "filters": [coefseq_to_json(f) for f in s.filters]}


def univariate_set_from_json(obj: dict) -> UnivariateQMFSet:
    return UnivariateQMFSet(int(obj["scale"]),
                            tuple(coefseq_from_json(f) for f in obj["filters"]))


def _eta_key(eta: tuple[int, ...]) -> str:
    return ",".join(str(e) for e in eta)


def _eta_from_key(key: str) -> tuple[int, ...]:
    return tuple(int(p) for p in key.split(","))


def bank_to_json(bank: AnisoFilterBank) -> dict:
    return {
        "xi": matrix_to_json(bank.xi),
        "sigma": list(bank.sigma),
        "theta1": matrix_to_json(bank.fact.theta1),
        "theta2": matrix_to_json(bank.fact.theta2),
        "filters": {_eta_key(eta): coefseq_to_json(f)
                    for eta, f in bank.filters.items()},
    }


def bank_from_json(obj: dict) -> AnisoFilterBank:
    xi = matrix_from_json(obj["xi"])
    sigma = tuple(int(x) for x in obj["sigma"])
    fact = SmithFactorization(matrix_from_json(obj["theta1"]), sigma,
                              matrix_from_json(obj["theta2"]))
    if fact.reconstruct() != xi:
        raise ValueError("bank factorization does not reproduce its dilation")
    filters = {_eta_from_key(k): coefseq_from_json(v)
               for k, v in obj["filters"].items()}
    orders = {eta: (0 if not any(eta) else moment_order_nd(f))
              for eta, f in filters.items()}
    return AnisoFilterBank(xi, fact, sigma, filters, orders)


def write_bank(path: str, bank: AnisoFilterBank):
    atomic_write_text(path, dumps(bank_to_json(bank)) + "\n")


def read_bank(path: str) -> AnisoFilterBank:
    with open(path, "r", encoding="utf-8") as handle:
        return bank_from_json(json.load(handle))


# -- PGM images ----------------------------------------------------------------

def read_pgm(path: str) -> np.ndarray:
    """Read an 8- or 16-bit PGM (binary P5 or ascii P2) as floats in [0, 1]."""
    with open(path, "rb") as handle:
        blob = handle.read()

    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    magic, width, height, maxval = (tokens[0], int(tokens[1]), int(tokens[2]),
                                    int(tokens[3]))
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        data = np.frombuffer(blob, dtype=dtype, count=width * height, offset=pos)
    elif magic == b"P2":
        data = np.array(blob[pos:].split()[: width * height], dtype=np.float64)
    else:
        raise ValueError(f"unsupported PGM magic {magic!r}")
    return (data.astype(np.float64) / maxval).reshape(height, width)


def write_pgm(path: str, values: np.ndarray, bits: int = 8) -> tuple[float, float]:
    """Write values as PGM with affine scaling; returns (vmin, vmax) used."""
    if bits not in (8, 16):
        raise ValueError("PGM depth must be 8 or 16 bits")
    if values.ndim != 2:
        raise ValueError("PGM export needs a 2-D array")
    vmin = float(values.min())
    vmax = float(values.max())
    spread = vmax - vmin if vmax > vmin else 1.0
    maxval = (1 << bits) - 1
    scaled = np.round((values - vmin) / spread * maxval)
    raw = scaled.astype(">u2" if bits == 16 else "u1")
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n{maxval}\n".encode()
    atomic_write_bytes(path, header + raw.tobytes())
    return vmin, vmax
