"""Compact little-endian wire format for inducing packages.

Layout (all little-endian)::

    offset  size  field
    0       2     magic b"CM"
    2       1     version (1)
    3       2     agent_id  (uint16)
    5       2     region_id (uint16)
    7       1     m         (uint8, 1..255)
    8       16m   locations, m x 4 float32, row-major
    ...     4m    mean, float32
    ...     2m(m+1)  covariance upper triangle incl. diagonal, float32, row-major

A container file is a sequence of records, each a uint32 byte length followed
by one encoded package.
"""
import io
import struct

import numpy as np

from .policy import InducingPackage, is_psd

MAGIC = b"CM"
VERSION = 1
_HEADER = struct.Struct("<2sBHHB")
HEADER_SIZE = _HEADER.size  # 8
_F32 = np.dtype("<f4")
_LEN = struct.Struct("<I")


class WireFormatError(ValueError):
    pass


class BadMagicError(WireFormatError):
    pass


class UnsupportedVersionError(WireFormatError):
    pass


class TruncatedPayloadError(WireFormatError):
    pass


class CovarianceError(WireFormatError):
    pass


def n_floats(m):
    return 4 * m + m + m * (m + 1) // 2


def encoded_size(m):
    return HEADER_SIZE + 4 * n_floats(m)


def encode_package(pkg):
    m = pkg.m
    if not 1 <= m <= 255:
        raise WireFormatError(f"m must be in [1, 255], got {m}")
    for name, v in (("agent_id", pkg.agent_id), ("region_id", pkg.region_id)):
        if not 0 <= v <= 0xFFFF:
            raise WireFormatError(f"{name} {v} does not fit in 16 bits")
    iu = np.triu_indices(m)
    body = np.concatenate([pkg.locations.ravel(), pkg.mean, pkg.covariance[iu]]).astype(_F32)
    return _HEADER.pack(MAGIC, VERSION, pkg.agent_id, pkg.region_id, m) + body.tobytes()


def decode_package(data):
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise TruncatedPayloadError(f"need {HEADER_SIZE} header bytes, got {len(data)}")
    magic, version, agent_id, region_id, m = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if m == 0:
        raise WireFormatError("m must be at least 1")
    need = encoded_size(m)
    if len(data) < need:
        raise TruncatedPayloadError(f"m={m} needs {need} bytes, got {len(data)}")
    if len(data) > need:
        raise WireFormatError(f"{len(data) - need} trailing bytes after package")
    vals = np.frombuffer(data, dtype=_F32, offset=HEADER_SIZE).astype(np.float64)
    if not np.all(np.isfinite(vals)):
        raise WireFormatError("non-finite value in payload")
    loc = vals[: 4 * m].reshape(m, 4)
    mean = vals[4 * m: 5 * m]
    cov = np.zeros((m, m))
    cov[np.triu_indices(m)] = vals[5 * m:]
    cov = cov + np.triu(cov, 1).T
    if not is_psd(cov):
        raise CovarianceError("covariance is not positive semi-definite")
    return InducingPackage(agent_id, loc, mean, cov, region_id)


def write_container(packages, dest):
    """Write length-prefixed packages to a path or binary stream."""
    blob = b"".join(_LEN.pack(len(b)) + b for b in map(encode_package, packages))
    if hasattr(dest, "write"):
        dest.write(blob)
    else:
        with open(dest, "wb") as fh:
            fh.write(blob)
    return len(blob)


def read_container(src):
    if hasattr(src, "read"):
        raw = src.read()
    elif isinstance(src, (bytes, bytearray)):
        raw = bytes(src)
    else:
        with open(src, "rb") as fh:
            raw = fh.read()
    out = []
    buf = io.BytesIO(raw)
    while True:
        head = buf.read(_LEN.size)
        if not head:
            break
        if len(head) < _LEN.size:
            raise TruncatedPayloadError("truncated record length")
        (n,) = _LEN.unpack(head)
        rec = buf.read(n)
        if len(rec) < n:
            raise TruncatedPayloadError(f"record declares {n} bytes, {len(rec)} present")
        out.append(decode_package(rec))
    return out
