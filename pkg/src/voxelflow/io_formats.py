"""Binary volume formats: an uncompressed NIfTI-1 subset and a raw tensor
format (RTF), plus the reader transform that pulls volumes into records.

Only single-file uncompressed .nii is handled; gzip-compressed inputs must
be decompressed beforehand. Orientation matrices are ignored: voxels are
returned in stored order, slowest axis first ([Z, Y, X], 2-D -> [Y, X]).
"""

import os
import struct

import numpy as np

from .errors import VoxelflowError
from .numerics import Tensor
from .records import Record
from .transforms import Transform

HEADER_SIZE = 348
DEFAULT_VOX_OFFSET = 352

# datatype code -> numpy dtype character (all promoted to float32 on load)
_DTYPES = {2: "u1", 4: "i2", 8: "i4", 16: "f4", 64: "f8"}
_BITPIX = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64}


class FormatError(VoxelflowError):
    pass


class FileError(FormatError):
    pass


class BadMagic(FormatError):
    pass


class UnsupportedDatatype(FormatError):
    def __init__(self, code):
        self.code = code
        super().__init__(f"unsupported datatype code {code}")


class TruncatedData(FormatError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} bytes of voxel data, got {got}")


class RankError(FormatError):
    pass


class NotAPath(FormatError):
    def __init__(self, field):
        self.field = field
        super().__init__(f"field {field!r} does not hold a path string")


class VolumeMeta:
    """Per-volume metadata carried alongside loaded voxels."""

    __slots__ = ("spacing", "original_dtype", "source_path")

    def __init__(self, spacing, original_dtype=16, source_path=None):
        spacing = tuple(float(s) for s in spacing)
        if any(s <= 0 for s in spacing):
            raise FormatError(f"spacing must be positive, got {spacing}")
        self.spacing = spacing
        self.original_dtype = original_dtype
        self.source_path = source_path


def read_nifti(path):
    """Read an uncompressed single-file NIfTI-1 volume as (Tensor, VolumeMeta).

    Endianness is probed via sizeof_hdr; integer voxels are promoted to
    float32; scl_slope/scl_inter intensity scaling is applied when active.
    """
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise FileError(f"cannot read {path}: {e}") from e
    if len(raw) < HEADER_SIZE:
        raise TruncatedData(HEADER_SIZE, len(raw))

    if struct.unpack_from("<i", raw, 0)[0] == HEADER_SIZE:
        end = "<"
    elif struct.unpack_from(">i", raw, 0)[0] == HEADER_SIZE:
        end = ">"
    else:
        raise BadMagic(f"{path}: sizeof_hdr is not 348 under either byte order")

    magic = raw[344:348]
    if magic == b"ni1\0":
        raise BadMagic(f"{path}: two-file NIfTI (ni1) is not supported, use single-file n+1")
    if magic != b"n+1\0":
        raise BadMagic(f"{path}: bad magic {magic!r}")

    dim = struct.unpack_from(end + "8h", raw, 40)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise FormatError(f"{path}: dim[0] must be 1..7, got {ndim}")
    dims = dim[1 : 1 + ndim]
    if any(d < 1 for d in dims):
        raise FormatError(f"{path}: non-positive dimension in {dims}")

    datatype = struct.unpack_from(end + "h", raw, 70)[0]
    bitpix = struct.unpack_from(end + "h", raw, 72)[0]
    if datatype not in _DTYPES:
        raise UnsupportedDatatype(datatype)
    if bitpix != _BITPIX[datatype]:
        raise FormatError(f"{path}: bitpix {bitpix} inconsistent with datatype {datatype}")

    pixdim = struct.unpack_from(end + "8f", raw, 76)
    vox_offset = int(struct.unpack_from(end + "f", raw, 108)[0])
    scl_slope = struct.unpack_from(end + "f", raw, 112)[0]
    scl_inter = struct.unpack_from(end + "f", raw, 116)[0]
    if vox_offset < HEADER_SIZE:
        raise FormatError(f"{path}: vox_offset {vox_offset} below header size")

    count = 1
    for d in dims:
        count *= d
    expected = count * (_BITPIX[datatype] // 8)
    payload = raw[vox_offset : vox_offset + expected]
    if len(payload) < expected:
        raise TruncatedData(expected, len(payload))

    voxels = np.frombuffer(payload, dtype=np.dtype(end + _DTYPES[datatype])).astype(np.float32)
    if scl_slope != 0.0 and not (scl_slope == 1.0 and scl_inter == 0.0):
        voxels = voxels * np.float32(scl_slope) + np.float32(scl_inter)
    # stored order is X fastest; reshape to slowest-first row-major
    shape = tuple(reversed(dims))
    spacing = tuple(reversed([float(p) for p in pixdim[1 : 1 + ndim]]))
    meta = VolumeMeta(spacing, original_dtype=datatype, source_path=str(path))
    return Tensor(np.ascontiguousarray(voxels.reshape(shape))), meta


def write_nifti(path, t, meta=None):
    """Write a rank-2/3 float32 tensor as little-endian single-file NIfTI-1."""
    if t.rank not in (2, 3):
        raise RankError(f"write_nifti supports rank 2 or 3, got {t.rank}")
    spacing = meta.spacing if meta is not None else (1.0,) * t.rank
    if len(spacing) != t.rank:
        raise FormatError(f"spacing has {len(spacing)} entries for rank-{t.rank} tensor")

    header = bytearray(DEFAULT_VOX_OFFSET)
    struct.pack_into("<i", header, 0, HEADER_SIZE)
    dims = [1] * 8
    dims[0] = t.rank
    for i, d in enumerate(reversed(t.shape)):
        dims[1 + i] = d
    struct.pack_into("<8h", header, 40, *dims)
    struct.pack_into("<h", header, 70, 16)  # float32
    struct.pack_into("<h", header, 72, 32)
    pix = [1.0] * 8
    for i, s in enumerate(reversed(spacing)):
        pix[1 + i] = s
    struct.pack_into("<8f", header, 76, *pix)
    struct.pack_into("<f", header, 108, float(DEFAULT_VOX_OFFSET))
    struct.pack_into("<f", header, 112, 1.0)  # scl_slope
    struct.pack_into("<f", header, 116, 0.0)  # scl_inter
    header[344:348] = b"n+1\0"

    data = np.ascontiguousarray(t.data, dtype="<f4")
    try:
        with open(path, "wb") as f:
            f.write(bytes(header))
            f.write(data.tobytes())
    except OSError as e:
        raise FileError(f"cannot write {path}: {e}") from e


def read_rtf(path):
    """Read the raw tensor format: "RTF1", u32 rank, u32 dims, f32 payload."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise FileError(f"cannot read {path}: {e}") from e
    if len(raw) < 8 or raw[:4] != b"RTF1":
        raise BadMagic(f"{path}: not an RTF file")
    rank = struct.unpack_from("<I", raw, 4)[0]
    if rank > 7:
        raise FormatError(f"{path}: rank {rank} out of range")
    need = 8 + 4 * rank
    if len(raw) < need:
        raise TruncatedData(need, len(raw))
    dims = struct.unpack_from(f"<{rank}I", raw, 8) if rank else ()
    count = 1
    for d in dims:
        count *= d
    expected = count * 4
    payload = raw[need : need + expected]
    if len(payload) < expected:
        raise TruncatedData(need + expected, len(raw))
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return Tensor(np.asarray(data, order="C").copy())


def write_rtf(path, t):
    try:
        with open(path, "wb") as f:
            f.write(b"RTF1")
            f.write(struct.pack("<I", t.rank))
            for d in t.shape:
                f.write(struct.pack("<I", d))
            f.write(np.ascontiguousarray(t.data, dtype="<f4").tobytes())
    except OSError as e:
        raise FileError(f"cannot write {path}: {e}") from e


class LoadNifti(Transform):
    """Replace path fields with loaded voxel tensors.

    Each declared field must hold a path string (resolved against
    data_root); after the transform it holds the volume tensor and gains a
    "<field>_meta" sibling carrying the voxel spacing.
    """

    name = "load_nifti"

    def __init__(self, fields, data_root="."):
        self.fields = tuple(fields)
        self.data_root = data_root

    def apply(self, record):
        loaded = {}
        for field in self.fields:
            value = record[field]
            if not isinstance(value, str):
                raise NotAPath(field)
            try:
                volume, meta = read_nifti(os.path.join(self.data_root, value))
            except FormatError as e:
                raise FormatError(f"field {field!r}: {e}") from e
            loaded[field] = (volume, list(meta.spacing))
        entries = {}
        for name, value in record.items():
            if name in loaded:
                volume, spacing = loaded[name]
                entries[name] = volume
                entries[name + "_meta"] = spacing
            else:
                entries[name] = value
        return Record(entries)
