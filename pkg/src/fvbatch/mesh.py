"""Patch data model: Cartesian volume blocks with halos, batches, layouts.

A patch is a p x p (or p x p x p) block of finite volumes embedded in one
mesh cell.  Input arrays carry a one-volume halo so a first-order stencil
needs no inter-patch communication during a kernel; output arrays are
interior-only.  Volume multi-indices linearize x-fastest, arrays index as
[patch][z][y][x][unknown] when reshaped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import BinaryIO, Sequence

import numpy as np

from .errors import ContractViolationError

HALO_WIDTH = 1


@dataclass(frozen=True)
class PatchSpec:
    """Shape of one patch: dimensions, volumes per axis, unknowns per volume."""

    dimensions: int
    volumes_per_axis: int
    unknowns: int
    halo: int = HALO_WIDTH

    def __post_init__(self):
        if self.dimensions not in (2, 3):
            raise ContractViolationError(f"dimensions must be 2 or 3, got {self.dimensions}")
        if self.volumes_per_axis < 1:
            raise ContractViolationError(f"volumes_per_axis must be >= 1, got {self.volumes_per_axis}")
        if self.unknowns < 1:
            raise ContractViolationError(f"unknowns must be >= 1, got {self.unknowns}")
        if self.halo != HALO_WIDTH:
            raise ContractViolationError("halo width is fixed at 1 for the first-order stencil")

    @property
    def haloed_per_axis(self) -> int:
        return self.volumes_per_axis + 2 * self.halo

    @property
    def interior_volumes(self) -> int:
        return self.volumes_per_axis ** self.dimensions

    @property
    def haloed_volumes(self) -> int:
        return self.haloed_per_axis ** self.dimensions


class Layout(Enum):
    """Placement of the unknown index relative to volumes: fastest, slowest, or blocked."""

    AOS = "aos"
    SOA = "soa"
    AOSOA = "aosoa"


def layout_from_label(label: str) -> Layout:
    for layout in Layout:
        if layout.value == label:
            return layout
    raise ContractViolationError(f"unknown layout label {label!r}")


DEFAULT_AOSOA_BLOCK = 8


@dataclass(frozen=True)
class LayoutEnumerator:
    """Bijection (patch, volume multi-index, component) -> flat offset.

    AOS places the component fastest, SOA slowest (across the whole array),
    AOSOA blocks `block` volumes and cycles components inside each block;
    a ragged final block keeps the map bijective when the volume count is
    not a multiple of the block length.
    """

    kind: Layout
    patches: int
    dimensions: int
    extent: int
    components: int
    block: int = DEFAULT_AOSOA_BLOCK

    def __post_init__(self):
        if self.patches < 0 or self.extent < 1 or self.components < 1:
            raise ContractViolationError("enumerator sizes must be positive")
        if self.kind is Layout.AOSOA and self.block < 1:
            raise ContractViolationError("aosoa block length must be >= 1")

    @property
    def volumes(self) -> int:
        return self.extent ** self.dimensions

    @property
    def total(self) -> int:
        return self.patches * self.volumes * self.components

    def linearize(self, volume: Sequence[int]) -> int:
        if len(volume) != self.dimensions:
            raise ContractViolationError(
                f"volume index {tuple(volume)} has {len(volume)} axes, expected {self.dimensions}"
            )
        lin = 0
        for axis in reversed(range(self.dimensions)):
            v = volume[axis]
            if not 0 <= v < self.extent:
                raise ContractViolationError(f"volume coordinate {v} outside [0, {self.extent})")
            lin = lin * self.extent + v
        return lin

    def index(self, patch: int, volume: Sequence[int], component: int) -> int:
        """Flat offset for one (patch, volume, component) triple."""
        if not 0 <= patch < self.patches:
            raise ContractViolationError(f"patch {patch} outside [0, {self.patches})")
        if not 0 <= component < self.components:
            raise ContractViolationError(f"component {component} outside [0, {self.components})")
        vol = self.linearize(volume)
        v, c = self.volumes, self.components
        if self.kind is Layout.AOS:
            return (patch * v + vol) * c + component
        if self.kind is Layout.SOA:
            return (component * self.patches + patch) * v + vol
        b = min(self.block, v)
        block_idx, within = divmod(vol, b)
        block_len = min(b, v - block_idx * b)
        return patch * v * c + block_idx * b * c + component * block_len + within

    def offset_tensor(self) -> np.ndarray:
        """All offsets as an int64 array shaped (patches, extent ... extent, components).

        Volume axes are ordered slowest-to-fastest (z, y, x) so the tensor
        indexes as [patch][z][y][x][component].
        """
        return _offset_tensor(self)


@lru_cache(maxsize=128)
def _offset_tensor(e: LayoutEnumerator) -> np.ndarray:
    v, c = e.volumes, e.components
    patch = np.arange(e.patches, dtype=np.int64)
    vol = np.arange(v, dtype=np.int64)
    comp = np.arange(c, dtype=np.int64)
    p_ = patch[:, None, None]
    v_ = vol[None, :, None]
    c_ = comp[None, None, :]
    if e.kind is Layout.AOS:
        flat = (p_ * v + v_) * c + c_
    elif e.kind is Layout.SOA:
        flat = (c_ * e.patches + p_) * v + v_
    else:
        b = min(e.block, v)
        block_idx = v_ // b
        within = v_ - block_idx * b
        block_len = np.minimum(b, v - block_idx * b)
        flat = p_ * (v * c) + block_idx * (b * c) + c_ * block_len + within
    shape = (e.patches,) + (e.extent,) * e.dimensions + (c,)
    flat = flat.reshape(e.patches, *((e.extent,) * e.dimensions), c)
    assert flat.shape == shape
    flat.setflags(write=False)
    return flat


@dataclass
class PatchBatch:
    """Arrays for a batch of patches: haloed inputs, interior outputs, geometry.

    QIn rows hold (p+2)^d * s reals per patch in AoS order, QOut rows hold
    p^d * s.  cell_size components are equal per patch (cubic volumes) and
    the volume spacing is cell_size / p.
    """

    spec: PatchSpec
    n_patches: int
    QIn: np.ndarray
    QOut: np.ndarray
    cell_centre: np.ndarray
    cell_size: np.ndarray
    t: np.ndarray
    dt: np.ndarray
    max_eigenvalue: np.ndarray

    def volume_spacing(self) -> np.ndarray:
        """dx per patch (first cell_size component over p; components are equal)."""
        return self.cell_size[:, 0] / self.spec.volumes_per_axis

    def qin_view(self) -> np.ndarray:
        """QIn reshaped to (n, [z,] y, x, s) haloed volume axes."""
        e = self.spec.haloed_per_axis
        return self.QIn.reshape((self.n_patches,) + (e,) * self.spec.dimensions + (self.spec.unknowns,))

    def qout_view(self) -> np.ndarray:
        """QOut reshaped to (n, [z,] y, x, s) interior volume axes."""
        p = self.spec.volumes_per_axis
        return self.QOut.reshape((self.n_patches,) + (p,) * self.spec.dimensions + (self.spec.unknowns,))

    def copy(self) -> "PatchBatch":
        return PatchBatch(
            spec=self.spec,
            n_patches=self.n_patches,
            QIn=self.QIn.copy(),
            QOut=self.QOut.copy(),
            cell_centre=self.cell_centre.copy(),
            cell_size=self.cell_size.copy(),
            t=self.t.copy(),
            dt=self.dt.copy(),
            max_eigenvalue=self.max_eigenvalue.copy(),
        )


def make_patch_batch(
    spec: PatchSpec,
    n_patches: int,
    origin: Sequence[float] | None = None,
    patch_extent: float = 1.0,
) -> PatchBatch:
    """Allocate a zero-initialized batch with populated geometry.

    All patches share the same centre (origin + extent/2 per axis); grid
    builders overwrite cell_centre per patch afterwards.
    """
    if n_patches < 1:
        raise ContractViolationError(f"n_patches must be >= 1, got {n_patches}")
    if patch_extent <= 0.0:
        raise ContractViolationError(f"patch_extent must be > 0, got {patch_extent}")
    d, s = spec.dimensions, spec.unknowns
    if origin is None:
        origin = (0.0,) * d
    if len(origin) != d:
        raise ContractViolationError(f"origin has {len(origin)} components, expected {d}")
    centre = np.asarray(origin, dtype=np.float64) + 0.5 * patch_extent
    batch = PatchBatch(
        spec=spec,
        n_patches=n_patches,
        QIn=np.zeros((n_patches, spec.haloed_volumes * s)),
        QOut=np.zeros((n_patches, spec.interior_volumes * s)),
        cell_centre=np.tile(centre, (n_patches, 1)),
        cell_size=np.full((n_patches, d), patch_extent),
        t=np.zeros(n_patches),
        dt=np.zeros(n_patches),
        max_eigenvalue=np.zeros(n_patches),
    )
    return batch


def patch_grid_index(grid_shape: Sequence[int], coords: Sequence[int]) -> int:
    """Linear patch id of grid coordinates (x-fastest)."""
    lin = 0
    for axis in reversed(range(len(grid_shape))):
        lin = lin * grid_shape[axis] + coords[axis]
    return lin


def halo_project(batch: PatchBatch, grid_shape: Sequence[int], periodic: bool = True) -> None:
    """Refresh QIn from QOut across a logical uniform patch grid.

    Every patch's QIn interior is overwritten from its own QOut; face halos
    come from the adjacent patch's boundary volumes, wrapping around when
    periodic.  Non-periodic domain edges fall back to a zero-gradient copy
    of the patch's own boundary volumes.  Corner and edge halo entries get
    whatever the padded assembly produces; the first-order kernel never
    reads them.
    """
    d = batch.spec.dimensions
    p = batch.spec.volumes_per_axis
    s = batch.spec.unknowns
    shape = tuple(int(g) for g in grid_shape)
    if len(shape) != d:
        raise ContractViolationError(f"grid shape {shape} has {len(shape)} axes, expected {d}")
    n = 1
    for g in shape:
        n *= g
    if n != batch.n_patches:
        raise ContractViolationError(
            f"grid shape {shape} implies {n} patches, batch holds {batch.n_patches}"
        )

    # assemble the global interior field: grid axes slowest-to-fastest (z, y, x)
    rev = tuple(reversed(shape))
    qout = batch.QOut.reshape(rev + (p,) * d + (s,))
    # interleave (gz, pz, gy, py, gx, px): axis order (0, d, 1, d+1, ...)
    perm = []
    for axis in range(d):
        perm.extend([axis, d + axis])
    perm.append(2 * d)
    global_field = np.transpose(qout, perm).reshape(tuple(g * p for g in rev) + (s,))

    pad_mode = "wrap" if periodic else "edge"
    padded = np.pad(global_field, [(1, 1)] * d + [(0, 0)], mode=pad_mode)

    qin = batch.qin_view()
    window = p + 2
    for patch in range(batch.n_patches):
        coords = []
        lin = patch
        for axis in range(d):
            lin, c = divmod(lin, shape[axis])
            coords.append(c)  # coords[axis] along axis `axis` (x first)
        sel = tuple(
            slice(coords[axis] * p, coords[axis] * p + window)
            for axis in reversed(range(d))
        )
        qin[patch] = padded[sel]


BATCH_MAGIC = b"FVB1"


def save_batch(batch: PatchBatch, f: BinaryIO | str) -> None:
    """Test-fixture dump: (d, p, s, N) header then little-endian float64 arrays."""
    own = isinstance(f, str)
    fh = open(f, "wb") if own else f
    try:
        fh.write(BATCH_MAGIC)
        fh.write(struct.pack("<4q", batch.spec.dimensions, batch.spec.volumes_per_axis,
                             batch.spec.unknowns, batch.n_patches))
        for arr in (batch.QIn, batch.QOut, batch.cell_centre, batch.cell_size,
                    batch.t, batch.dt, batch.max_eigenvalue):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    finally:
        if own:
            fh.close()


def load_batch(f: BinaryIO | str) -> PatchBatch:
    own = isinstance(f, str)
    fh = open(f, "rb") if own else f
    try:
        magic = fh.read(4)
        if magic != BATCH_MAGIC:
            raise ContractViolationError(f"not a batch dump (magic {magic!r})")
        d, p, s, n = struct.unpack("<4q", fh.read(32))
        spec = PatchSpec(d, p, s)
        batch = make_patch_batch(spec, n)

        def read_into(arr: np.ndarray):
            raw = fh.read(arr.size * 8)
            arr[...] = np.frombuffer(raw, dtype="<f8").reshape(arr.shape)

        for arr in (batch.QIn, batch.QOut, batch.cell_centre, batch.cell_size,
                    batch.t, batch.dt, batch.max_eigenvalue):
            read_into(arr)
        return batch
    finally:
        if own:
            fh.close()
