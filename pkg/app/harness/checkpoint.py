"""Binary checkpoints of relaxing states.

Layout (little-endian): magic b"RLXC", u32 version, u32 dim, u32 n_per_dim,
f64 length, f64 tau, f64 t, then one block of n_per_dim**dim f64 values per
field in the order xi, v_0 .. v_{dim-1}, phi (row-major). Fourier
coefficients are never stored. Free-form metadata goes to a JSON sidecar
``<path>.meta.json``.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Optional

import numpy as np

from app.errors import CheckpointFormatError
from app.models.base import TorusGrid
from app.models.state import PerturbationState
from app.numerics.spectral import SpectralField

logger = logging.getLogger(__name__)

MAGIC = b"RLXC"
VERSION = 1
HEADER = struct.Struct("<4sIIIddd")
FIELD_DTYPE = np.dtype("<f8")


def _block_names(dim: int) -> list[str]:
    return ["xi", *(f"v{i}" for i in range(dim)), "phi"]


def meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_checkpoint(
    state: PerturbationState,
    tau: float,
    meta: Optional[dict[str, Any]],
    path: str | Path,
) -> Path:
    """Write state (and meta, if given) to path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = state.grid
    with path.open("wb") as f:
        f.write(HEADER.pack(MAGIC, VERSION, grid.dim, grid.n_per_dim, grid.length, tau, state.t))
        for field in (state.xi, *state.vel, state.phi):
            f.write(np.ascontiguousarray(field.values, dtype=FIELD_DTYPE).tobytes(order="C"))
    if meta is not None:
        meta_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2), encoding="utf-8")
    logger.info(f"Checkpoint t={state.t:.6g} tau={tau:g} written to {path}")
    return path


def read_checkpoint(
    path: str | Path,
    grid: Optional[TorusGrid] = None,
) -> tuple[PerturbationState, float, dict[str, Any]]:
    """Read (state, tau, meta); meta is empty when there is no sidecar.

    Raises:
        CheckpointFormatError: bad magic or version, truncated blocks, or a
            grid that does not match ``grid`` when one is given
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise CheckpointFormatError(f"file is {len(data)} bytes, header needs {HEADER.size}", block="header")
    magic, version, dim, n_per_dim, length, tau, t = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}", block="header")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported version {version}", block="header")
    try:
        file_grid = TorusGrid(dim=dim, n_per_dim=n_per_dim, length=length)
    except ValueError as e:
        raise CheckpointFormatError(f"invalid grid in header: {e}", block="header") from e
    if grid is not None and grid != file_grid:
        raise CheckpointFormatError(
            f"checkpoint grid (dim={dim}, n={n_per_dim}, length={length}) does not match the current grid",
            block="header",
        )

    count = file_grid.total_points
    block_bytes = count * FIELD_DTYPE.itemsize
    fields = []
    offset = HEADER.size
    for name in _block_names(dim):
        if len(data) < offset + block_bytes:
            raise CheckpointFormatError(
                f"truncated: expected {block_bytes} bytes, found {max(len(data) - offset, 0)}", block=name
            )
        values = np.frombuffer(data, dtype=FIELD_DTYPE, count=count, offset=offset).reshape(file_grid.shape)
        fields.append(SpectralField(file_grid, values))
        offset += block_bytes
    if offset != len(data):
        raise CheckpointFormatError(f"{len(data) - offset} trailing bytes", block="phi")

    state = PerturbationState(t=t, xi=fields[0], vel=tuple(fields[1:-1]), phi=fields[-1])
    sidecar = meta_path(path)
    meta = json.loads(sidecar.read_text(encoding="utf-8")) if sidecar.exists() else {}
    logger.info(f"Checkpoint t={t:.6g} tau={tau:g} read from {path}")
    return state, tau, meta
