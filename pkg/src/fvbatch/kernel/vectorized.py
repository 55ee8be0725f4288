"""Whole-array kernel engine; bitwise-equal to the loop-body reference.

Each launch of the batched pipeline is a set of numpy array operations over
(a chunk of) the collapsed patch x volume space; the patch-wise pipeline
runs the same launches patch by patch with the patch loop outermost.  The
per-element arithmetic and accumulation order match the loop bodies exactly,
so every ordering/layout/strategy/engine combination produces identical
bits.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import NonPhysicalStateError
from ..itspace import StrategyKind
from ..mesh import PatchBatch, PatchSpec
from ..pde import PdeDefinition
from . import KernelTemporaries, KernelVariant, Ordering


@dataclass(frozen=True)
class _Plan:
    """Precomputed index geometry for one (spec, patches, layout) shape."""

    spec: PatchSpec
    interior: tuple  # slices into haloed volume axes
    boxes: tuple     # interior box plus one slab per patch face, no corners
    eig_offsets_key: tuple
    flux_offsets_key: tuple


def _volume_axis(spec: PatchSpec, direction: int) -> int:
    # arrays index volumes as [z, y, x]; direction 0 is x
    return spec.dimensions - 1 - direction


@lru_cache(maxsize=64)
def _plan(spec: PatchSpec) -> _Plan:
    d, p = spec.dimensions, spec.volumes_per_axis
    interior = tuple([slice(1, p + 1)] * d)
    boxes = [interior]
    for direction in range(d):
        axis = _volume_axis(spec, direction)
        for face_slice in (slice(0, 1), slice(p + 1, p + 2)):
            box = list(interior)
            box[axis] = face_slice
            boxes.append(tuple(box))
    return _Plan(spec, interior, tuple(boxes), (), ())


def _neighbour(interior: tuple, spec: PatchSpec, direction: int, shift: int) -> tuple:
    p = spec.volumes_per_axis
    axis = _volume_axis(spec, direction)
    out = list(interior)
    out[axis] = slice(0, p) if shift < 0 else slice(2, p + 2)
    return tuple(out)


def _positions(batch: PatchBatch) -> np.ndarray:
    """Volume-centre coordinates over the haloed range, shaped (n, [z,]y,x,d)."""
    spec = batch.spec
    d, e = spec.dimensions, spec.haloed_per_axis
    n = batch.n_patches
    dx = batch.cell_size[:, 0] / spec.volumes_per_axis
    origin = batch.cell_centre - 0.5 * batch.cell_size
    out = np.empty((n,) + (e,) * d + (d,))
    line = np.arange(e, dtype=np.float64) - 0.5
    for direction in range(d):
        axis = _volume_axis(spec, direction)
        shape = [1] * d
        shape[axis] = e
        offs = line.reshape(shape) * dx.reshape((n,) + (1,) * d)
        out[..., direction] = origin[:, direction].reshape((n,) + (1,) * d) + offs
    return out


def _locate_bad_state(batch: PatchBatch, psel, box, exc: NonPhysicalStateError):
    """Slow path: find the first inadmissible volume for the diagnostic."""
    qin = batch.qin_view()[(psel,) + box]
    rho = qin[..., 0]
    bad = np.argwhere(~(rho > 0.0))
    if bad.size == 0:
        mom2 = np.sum(qin[..., 1:-1] ** 2, axis=-1)
        pressure_like = qin[..., -1] - 0.5 * mom2 / rho
        bad = np.argwhere(~(pressure_like >= 0.0))
    if bad.size:
        first = bad[0]
        patch_base = psel.start if isinstance(psel, slice) else 0
        starts = [b.start for b in box]
        coords = tuple(int(first[1 + i]) + starts[i] for i in range(len(box)))
        raise NonPhysicalStateError(
            str(exc), patch=patch_base + int(first[0]), volume=tuple(reversed(coords))
        ) from None
    raise exc


def _run_chunk(batch: PatchBatch, pde: PdeDefinition, temporaries: KernelTemporaries,
               positions: np.ndarray, psel: slice) -> None:
    _pass_copy(batch, psel)
    _pass_fill_eigenvalues(batch, pde, temporaries, positions, psel)
    _pass_dissipation(batch, temporaries, psel)
    _pass_fill_fluxes(batch, pde, temporaries, positions, psel)
    _pass_flux_accumulate(batch, temporaries, psel)
    if pde.has_ncp:
        _pass_ncp(batch, pde, temporaries, positions, psel)
    _pass_reduce(batch, temporaries, psel)


def _pass_copy(batch: PatchBatch, psel: slice) -> None:
    plan = _plan(batch.spec)
    batch.qout_view()[psel] = batch.qin_view()[(psel,) + plan.interior]


def _broadcast(values: np.ndarray, psel: slice, d: int) -> np.ndarray:
    return values[psel].reshape((-1,) + (1,) * d)


def _pass_fill_eigenvalues(batch, pde, temporaries, positions, psel) -> None:
    spec = batch.spec
    plan = _plan(spec)
    qin = batch.qin_view()
    offsets = temporaries.eig_enum.offset_tensor()
    eig = temporaries.eigenvalues
    t_b = _broadcast(batch.t, psel, spec.dimensions)
    for box in plan.boxes:
        q = qin[(psel,) + box]
        x = positions[(psel,) + box]
        tb = t_b[(slice(None),) + tuple(0 if isinstance(b, slice) and b.stop - b.start == 1 else slice(None) for b in ())] if False else t_b
        for direction in range(spec.dimensions):
            try:
                lam = pde.max_abs_eigenvalue(q, x, tb, direction)
            except NonPhysicalStateError as exc:
                _locate_bad_state(batch, psel, box, exc)
            eig[offsets[(psel,) + box + (direction,)]] = lam


def _pass_fill_fluxes(batch, pde, temporaries, positions, psel) -> None:
    spec = batch.spec
    plan = _plan(spec)
    s = spec.unknowns
    qin = batch.qin_view()
    offsets = temporaries.flux_enum.offset_tensor()
    flux = temporaries.flux_values
    t_b = _broadcast(batch.t, psel, spec.dimensions)
    for box in plan.boxes:
        q = qin[(psel,) + box]
        x = positions[(psel,) + box]
        for direction in range(spec.dimensions):
            try:
                f = pde.flux(q, x, t_b, direction)
            except NonPhysicalStateError as exc:
                _locate_bad_state(batch, psel, box, exc)
            flux[offsets[(psel,) + box + (slice(direction * s, (direction + 1) * s),)]] = f


def _pass_dissipation(batch, temporaries, psel) -> None:
    spec = batch.spec
    plan = _plan(spec)
    d = spec.dimensions
    qin = batch.qin_view()
    qout = batch.qout_view()[psel]
    offsets = temporaries.eig_enum.offset_tensor()
    eig = temporaries.eigenvalues
    dx = batch.cell_size[:, 0] / spec.volumes_per_axis
    inv = _broadcast(batch.dt / dx, psel, d)

    q_own = qin[(psel,) + plan.interior]
    for direction in range(d):
        lam_own = eig[offsets[(psel,) + plan.interior + (direction,)]]
        for shift in (-1, 1):
            nb = _neighbour(plan.interior, spec, direction, shift)
            lam_n = eig[offsets[(psel,) + nb + (direction,)]]
            a = np.maximum(lam_n, lam_own)
            coeff = 0.5 * inv * a
            qout += coeff[..., None] * (qin[(psel,) + nb] - q_own)


def _pass_flux_accumulate(batch, temporaries, psel) -> None:
    spec = batch.spec
    plan = _plan(spec)
    d, s = spec.dimensions, spec.unknowns
    qout = batch.qout_view()[psel]
    offsets = temporaries.flux_enum.offset_tensor()
    flux = temporaries.flux_values
    dx = batch.cell_size[:, 0] / spec.volumes_per_axis
    inv = _broadcast(batch.dt / dx, psel, d)[..., None]

    for direction in range(d):
        comp = slice(direction * s, (direction + 1) * s)
        f_own = flux[offsets[(psel,) + plan.interior + (comp,)]]
        f_m = flux[offsets[(psel,) + _neighbour(plan.interior, spec, direction, -1) + (comp,)]]
        f_p = flux[offsets[(psel,) + _neighbour(plan.interior, spec, direction, 1) + (comp,)]]
        favg_m = 0.5 * (f_m + f_own)
        favg_p = 0.5 * (f_own + f_p)
        qout += inv * (favg_m - favg_p)


def _pass_ncp(batch, pde, temporaries, positions, psel) -> None:
    spec = batch.spec
    plan = _plan(spec)
    d, s = spec.dimensions, spec.unknowns
    qin = batch.qin_view()
    qout = batch.qout_view()[psel]
    dx = batch.cell_size[:, 0] / spec.volumes_per_axis
    twodx = _broadcast(2.0 * dx, psel, d)[..., None]
    dt_b = _broadcast(batch.dt, psel, d)[..., None]
    t_b = _broadcast(batch.t, psel, d)

    q_own = qin[(psel,) + plan.interior]
    x = positions[(psel,) + plan.interior]
    grad = np.empty(q_own.shape[:-1] + (d, s))
    for direction in range(d):
        q_m = qin[(psel,) + _neighbour(plan.interior, spec, direction, -1)]
        q_p = qin[(psel,) + _neighbour(plan.interior, spec, direction, 1)]
        grad[..., direction, :] = (q_p - q_m) / twodx
    for direction in range(d):
        ncp = pde.nonconservative_product(q_own, grad, x, t_b, direction)
        qout -= dt_b * ncp


def _pass_reduce(batch, temporaries, psel) -> None:
    spec = batch.spec
    plan = _plan(spec)
    offsets = temporaries.eig_enum.offset_tensor()
    lam = temporaries.eigenvalues[offsets[(psel,) + plan.interior + (slice(None),)]]
    batch.max_eigenvalue[psel] = lam.reshape(lam.shape[0], -1).max(axis=1)


def _patch_chunks(n: int, workers: int) -> list[slice]:
    chunks = min(workers, n)
    base, extra = divmod(n, chunks)
    out = []
    start = 0
    for i in range(chunks):
        size = base + (1 if i < extra else 0)
        out.append(slice(start, start + size))
        start += size
    return out


def run(batch: PatchBatch, pde: PdeDefinition, variant: KernelVariant,
        temporaries: KernelTemporaries) -> None:
    n = batch.n_patches
    positions = _positions(batch)
    parallel = variant.strategy.kind is StrategyKind.PARALLEL_UNORDERED
    workers = variant.strategy.workers() if parallel else 1

    if variant.ordering is Ordering.BATCHED:
        passes = [_pass_copy_args, _pass_eig_args, _pass_diss_args,
                  _pass_fluxfill_args, _pass_fluxacc_args]
        chunks = _patch_chunks(n, workers) if parallel else [slice(0, n)]
        if len(chunks) == 1:
            _run_chunk(batch, pde, temporaries, positions, chunks[0])
            return
        # one barrier per launch: every step finishes over the full space
        # before the next starts
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            def launch(fn, *args):
                for fut in [pool.submit(fn, *args, c) for c in chunks]:
                    fut.result()

            launch(_pass_copy, batch)
            launch(_pass_fill_eigenvalues, batch, pde, temporaries, positions)
            launch(_pass_dissipation, batch, temporaries)
            launch(_pass_fill_fluxes, batch, pde, temporaries, positions)
            launch(_pass_flux_accumulate, batch, temporaries)
            if pde.has_ncp:
                launch(_pass_ncp, batch, pde, temporaries, positions)
            launch(_pass_reduce, batch, temporaries)
        return

    # patch-wise: patch loop outermost, all launches complete per patch
    if not parallel or n == 1:
        for patch in range(n):
            _run_chunk(batch, pde, temporaries, positions, slice(patch, patch + 1))
        return
    with ThreadPoolExecutor(max_workers=min(workers, n)) as pool:
        futures = [
            pool.submit(_run_chunk, batch, pde, temporaries, positions, slice(patch, patch + 1))
            for patch in range(n)
        ]
        for fut in futures:
            fut.result()
