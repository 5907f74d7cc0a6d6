"""
Formato binário NLSH1 para campos.

Layout: magic b"NLSH1", comprimento do cabeçalho (uint32 little-endian),
cabeçalho JSON UTF-8 {"d", "L", "n", "dtype"} e n^d pares (re, im) float64
little-endian em ordem row-major.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.core.errors import FieldFormatError
from app.models.grid import Field, Grid

logger = logging.getLogger(__name__)

MAGIC = b"NLSH1"
DTYPE = "c128"
_LENGTH = struct.Struct("<I")


def encode_field(f: Field) -> bytes:
    """Serializa um campo no formato NLSH1."""
    grid = f.grid
    header = json.dumps(
        {"d": grid.d, "L": [grid.L] * grid.d, "n": [grid.n] * grid.d, "dtype": DTYPE},
        separators=(",", ":"),
    ).encode("utf-8")
    payload = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return MAGIC + _LENGTH.pack(len(header)) + header + payload


def decode_field(data: bytes) -> Field:
    """
    Desserializa um campo NLSH1.

    Raises:
        FieldFormatError: Se o conteúdo estiver malformado
    """
    if data[: len(MAGIC)] != MAGIC:
        raise FieldFormatError("Magic NLSH1 ausente")
    start = len(MAGIC) + _LENGTH.size
    if len(data) < start:
        raise FieldFormatError("Cabeçalho truncado")
    (length,) = _LENGTH.unpack(data[len(MAGIC) : start])
    try:
        header = json.loads(data[start : start + length].decode("utf-8"))
        d = int(header["d"])
        lengths = [float(v) for v in header["L"]]
        sizes = [int(v) for v in header["n"]]
        dtype = header["dtype"]
    except (ValueError, KeyError, TypeError) as e:
        raise FieldFormatError(f"Cabeçalho NLSH1 inválido: {e}")

    if dtype != DTYPE:
        raise FieldFormatError(f"dtype não suportado: {dtype}")
    if len(lengths) != d or len(sizes) != d:
        raise FieldFormatError("Listas L/n incompatíveis com d")
    if len(set(lengths)) != 1 or len(set(sizes)) != 1:
        raise FieldFormatError("Grades anisotrópicas não são suportadas")

    grid = Grid(d=d, L=lengths[0], n=sizes[0])
    payload = data[start + length :]
    expected = 16 * grid.n**d
    if len(payload) != expected:
        raise FieldFormatError(f"Payload com {len(payload)} bytes, esperado {expected}")
    values = np.frombuffer(payload, dtype="<c16").reshape(grid.shape)
    return Field(grid, values)


def write_field(f: Field, path: Union[str, Path]) -> Path:
    """Grava um campo NLSH1 em disco."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_field(f))
    logger.info(f"Campo gravado em: {target}")
    return target


def read_field(path: Union[str, Path]) -> Field:
    """Lê um campo NLSH1 do disco."""
    source = Path(path)
    if not source.exists():
        raise FieldFormatError(f"Arquivo não encontrado: {source}")
    return decode_field(source.read_bytes())
