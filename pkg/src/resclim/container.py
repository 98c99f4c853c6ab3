"""
container.py -- the binary container shared by datasets, models
and regularization matrices.

Layout (all little-endian):

    4 bytes     magic (b'RCDS' dataset, b'RCWM' model, b'RCRM' reg. matrix)
    uint16      format version
    uint32      header length in bytes
    ...         header, packed with a per-kind struct format
    uint32      number of arrays
    per array:
        uint32  ndim
        uint64  each dimension
        float64 payload, row-major

Human-readable provenance goes into a JSON sidecar `<file>.json`.
"""

import json
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np


VERSION = 1

MAGIC_DATASET = b'RCDS'
MAGIC_MODEL = b'RCWM'
MAGIC_REGMAT = b'RCRM'

class ContainerError(Exception):
    pass

class BadMagicError(ContainerError):
    pass

class UnsupportedVersionError(ContainerError):
    pass

class TruncatedContainerError(ContainerError):
    pass

class InvalidDestinationError(ContainerError, ValueError):
    pass

class ContainerFormatError(ContainerError):
    pass

def _pack_header(header_fmt: str, header: tuple) -> bytes:
    try:
        return struct.pack('<' + header_fmt, *header)
    except struct.error as err:
        raise ContainerFormatError(
            f"Cannot pack header {header!r} as {header_fmt!r}: {err}"
            ) from err

def _yield_container(
        magic: bytes,
        header_bytes: bytes,
        arrays: list[np.ndarray],
        ):
    yield magic
    yield struct.pack('<HI', VERSION, len(header_bytes))
    yield header_bytes
    yield struct.pack('<I', len(arrays))
    for array in arrays:
        array = np.ascontiguousarray(array, dtype='<f8')
        yield struct.pack('<I', array.ndim)
        yield struct.pack(f'<{array.ndim}Q', *array.shape)
        yield array.tobytes()

def write_container(
        dest: 'str | Path | BinaryIO',
        magic: bytes,
        header_fmt: str,
        header: tuple,
        arrays: list[np.ndarray],
        ) -> None:
    """
    Write a container to a path or a binary stream.
    """
    chunks = _yield_container(magic, _pack_header(header_fmt, header), arrays)

    if isinstance(dest, (str, Path)):
        with open(dest, 'wb') as file:
            file.writelines(chunks)
    elif hasattr(dest, 'write'):
        for chunk in chunks:
            dest.write(chunk)
    else:
        raise InvalidDestinationError(
            f"Invalid destination type {type(dest)}. "
            "Must be a file path or a binary stream."
            )

def _take(buffer: memoryview, offset: int, size: int) -> tuple[memoryview, int]:
    if offset + size > len(buffer):
        raise TruncatedContainerError(
            f"Container ends at byte {len(buffer)}, "
            f"needed {offset + size}."
            )
    return buffer[offset:offset + size], offset + size

def read_container(
        src: 'str | Path | BinaryIO',
        magic: bytes,
        header_fmt: str,
        ) -> tuple[tuple, list[np.ndarray]]:
    """
    Read a container written by `write_container`.

    Returns
    -------
    header: tuple
        Unpacked header fields.
    arrays: list[np.ndarray]
        Payload arrays, as float64.
    """
    if isinstance(src, (str, Path)):
        data = Path(src).read_bytes()
    else:
        data = src.read()
    buffer = memoryview(data)

    found, offset = _take(buffer, 0, 4)
    if bytes(found) != magic:
        raise BadMagicError(
            f"Expected magic {magic!r}, found {bytes(found)!r}."
            )

    chunk, offset = _take(buffer, offset, 6)
    version, header_len = struct.unpack('<HI', chunk)
    if version != VERSION:
        raise UnsupportedVersionError(
            f"Container version {version} is not supported "
            f"(this is resclim container version {VERSION})."
            )

    expected = struct.calcsize('<' + header_fmt)
    if header_len != expected:
        raise ContainerFormatError(
            f"Header is {header_len} bytes, expected {expected} "
            f"for format {header_fmt!r}."
            )
    chunk, offset = _take(buffer, offset, header_len)
    header = struct.unpack('<' + header_fmt, chunk)

    chunk, offset = _take(buffer, offset, 4)
    (count,) = struct.unpack('<I', chunk)

    arrays = []
    for _ in range(count):
        chunk, offset = _take(buffer, offset, 4)
        (ndim,) = struct.unpack('<I', chunk)
        chunk, offset = _take(buffer, offset, 8 * ndim)
        shape = struct.unpack(f'<{ndim}Q', chunk)
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        chunk, offset = _take(buffer, offset, nbytes)
        arrays.append(
            np.frombuffer(chunk, dtype='<f8').reshape(shape).astype(np.float64)
            )

    return header, arrays

def sidecar_path(path: 'str | Path') -> Path:
    path = Path(path)
    return path.with_name(path.name + '.json')

def write_sidecar(path: 'str | Path', content: dict) -> Path:
    sidecar = sidecar_path(path)
    sidecar.write_text(json.dumps(content, indent=2, sort_keys=True) + '\n')
    return sidecar

def read_sidecar(path: 'str | Path') -> dict:
    sidecar = sidecar_path(path)
    try:
        content = json.loads(sidecar.read_text())
    except json.JSONDecodeError as err:
        raise ContainerFormatError(f"Malformed sidecar {sidecar}: {err}") from err
    if not isinstance(content, dict):
        raise ContainerFormatError(f"Sidecar {sidecar} is not a JSON object")
    return content

def pack_name(name: str, size: int = 16) -> bytes:
    """Encode a short name into a fixed-size, NUL-padded header field."""
    encoded = name.encode('ascii')
    if len(encoded) > size:
        raise ValueError(f"Name {name!r} longer than {size} bytes")
    return encoded.ljust(size, b'\0')

def unpack_name(field: bytes) -> str:
    return field.rstrip(b'\0').decode('ascii')
