"""Per-tuple loop bodies and the reference pipelines built from them.

Tuples follow the collapsed iteration-space convention (x, y[, z], patch);
volume coordinates are interior-based for compute bodies and halo-based for
the fill bodies.  Every body is race-free across distinct tuples: writes
target only the tuple's own output and temporary slots, and face values are
taken from either completed prior launches (batched pipeline) or fresh
evaluation of neighbour states (fused patch-wise body).
"""

from __future__ import annotations

import numpy as np

from ..errors import NonPhysicalStateError
from ..itspace import ExecutionStrategy, cartesian, for_each, reduce_max
from ..mesh import PatchBatch
from ..pde import PdeDefinition
from . import Ordering  # noqa: F401  (re-imported at bottom of package __init__)


def _position(batch: PatchBatch, patch: int, haloed_coords) -> np.ndarray:
    dx = batch.cell_size[patch, 0] / batch.spec.volumes_per_axis
    origin = batch.cell_centre[patch] - 0.5 * batch.cell_size[patch]
    return origin + (np.asarray(haloed_coords, dtype=np.float64) - 0.5) * dx


def _state(flat: np.ndarray, enum, patch: int, vol) -> np.ndarray:
    s = enum.components
    return np.array([flat[enum.index(patch, vol, u)] for u in range(s)])


def copy_solution(batch: PatchBatch, enumerators, tup) -> None:
    """Seed the output volume with its input value (halo never copied)."""
    patch, v = tup[-1], tup[:-1]
    vh = tuple(c + 1 for c in v)
    qin = batch.QIn.reshape(-1)
    qout = batch.QOut.reshape(-1)
    for u in range(batch.spec.unknowns):
        qout[enumerators.qout.index(patch, v, u)] = qin[enumerators.qin.index(patch, vh, u)]


def accumulate_dissipation(batch: PatchBatch, pde: PdeDefinition, temporaries, tup) -> None:
    """Store the volume's directional max |eigenvalue| and add the jump
    dissipation from each face, evaluating neighbour eigenvalues in place."""
    patch, v = tup[-1], tup[:-1]
    spec = batch.spec
    d, s, p = spec.dimensions, spec.unknowns, spec.volumes_per_axis
    vh = tuple(c + 1 for c in v)
    qin = batch.QIn.reshape(-1)
    qout = batch.QOut.reshape(-1)
    enums = temporaries.enums
    t = batch.t[patch]
    dx = batch.cell_size[patch, 0] / p
    inv = batch.dt[patch] / dx

    q_own = _state(qin, enums.qin, patch, vh)
    x_own = _position(batch, patch, vh)
    try:
        lam_own = []
        for j in range(d):
            lam = float(pde.max_abs_eigenvalue(q_own, x_own, t, j))
            temporaries.eigenvalues[temporaries.eig_enum.index(patch, vh, j)] = lam
            lam_own.append(lam)
        for j in range(d):
            for shift in (-1, 1):
                nh = list(vh)
                nh[j] += shift
                nh = tuple(nh)
                q_n = _state(qin, enums.qin, patch, nh)
                lam_n = float(pde.max_abs_eigenvalue(q_n, _position(batch, patch, nh), t, j))
                a = lam_n if lam_n > lam_own[j] else lam_own[j]
                coeff = 0.5 * inv * a
                for u in range(s):
                    qout[enums.qout.index(patch, v, u)] += coeff * (q_n[u] - q_own[u])
    except NonPhysicalStateError as exc:
        raise NonPhysicalStateError(str(exc), patch=patch, volume=v) from None


def accumulate_fluxes(batch: PatchBatch, pde: PdeDefinition, temporaries, tup) -> None:
    """Store the volume's directional fluxes and add the centred face-average
    flux differences, evaluating neighbour fluxes in place."""
    patch, v = tup[-1], tup[:-1]
    spec = batch.spec
    d, s, p = spec.dimensions, spec.unknowns, spec.volumes_per_axis
    vh = tuple(c + 1 for c in v)
    qin = batch.QIn.reshape(-1)
    qout = batch.QOut.reshape(-1)
    enums = temporaries.enums
    t = batch.t[patch]
    dx = batch.cell_size[patch, 0] / p
    inv = batch.dt[patch] / dx

    q_own = _state(qin, enums.qin, patch, vh)
    x_own = _position(batch, patch, vh)
    try:
        f_own = []
        for j in range(d):
            f = pde.flux(q_own, x_own, t, j)
            for u in range(s):
                temporaries.flux_values[temporaries.flux_enum.index(patch, vh, j * s + u)] = f[u]
            f_own.append(f)
        for j in range(d):
            mh = list(vh)
            mh[j] -= 1
            ph = list(vh)
            ph[j] += 1
            q_m = _state(qin, enums.qin, patch, tuple(mh))
            q_p = _state(qin, enums.qin, patch, tuple(ph))
            f_m = pde.flux(q_m, _position(batch, patch, mh), t, j)
            f_p = pde.flux(q_p, _position(batch, patch, ph), t, j)
            for u in range(s):
                favg_m = 0.5 * (f_m[u] + f_own[j][u])
                favg_p = 0.5 * (f_own[j][u] + f_p[u])
                qout[enums.qout.index(patch, v, u)] += inv * (favg_m - favg_p)
    except NonPhysicalStateError as exc:
        raise NonPhysicalStateError(str(exc), patch=patch, volume=v) from None


def apply_ncp(batch: PatchBatch, pde: PdeDefinition, temporaries, tup) -> None:
    """Add the non-conservative product term; a no-op for PDEs without one."""
    if not pde.has_ncp:
        return
    patch, v = tup[-1], tup[:-1]
    spec = batch.spec
    d, s, p = spec.dimensions, spec.unknowns, spec.volumes_per_axis
    vh = tuple(c + 1 for c in v)
    qin = batch.QIn.reshape(-1)
    qout = batch.QOut.reshape(-1)
    enums = temporaries.enums
    t = batch.t[patch]
    dx = batch.cell_size[patch, 0] / p
    twodx = 2.0 * dx
    dt = batch.dt[patch]

    q_own = _state(qin, enums.qin, patch, vh)
    x_own = _position(batch, patch, vh)
    grad = np.empty((d, s))
    for j in range(d):
        mh = list(vh)
        mh[j] -= 1
        ph = list(vh)
        ph[j] += 1
        q_m = _state(qin, enums.qin, patch, tuple(mh))
        q_p = _state(qin, enums.qin, patch, tuple(ph))
        for u in range(s):
            grad[j, u] = (q_p[u] - q_m[u]) / twodx
    for j in range(d):
        ncp = pde.nonconservative_product(q_own, grad, x_own, t, j)
        for u in range(s):
            qout[enums.qout.index(patch, v, u)] -= dt * ncp[u]


def _reduce_one_patch(batch: PatchBatch, temporaries, strategy: ExecutionStrategy, patch: int) -> None:
    spec = batch.spec
    d, p = spec.dimensions, spec.volumes_per_axis
    space = cartesian([(0, p)] * d + [(0, d)])
    eig = temporaries.eigenvalues
    enum = temporaries.eig_enum

    def value(tup):
        vh = tuple(c + 1 for c in tup[:-1])
        return eig[enum.index(patch, vh, tup[-1])]

    batch.max_eigenvalue[patch] = reduce_max(space, strategy, value)


def reduce_patch_eigenvalue(batch: PatchBatch, temporaries, strategy: ExecutionStrategy) -> None:
    """Per-patch maximum over the stored interior directional eigenvalues."""
    for patch in range(batch.n_patches):
        _reduce_one_patch(batch, temporaries, strategy, patch)


def _shell_rank(vh, extent: int) -> int:
    return sum(1 for c in vh if c == 0 or c == extent - 1)


def _fill_eigenvalues(batch, pde, temporaries, tup):
    patch, vh = tup[-1], tup[:-1]
    spec = batch.spec
    extent = spec.haloed_per_axis
    if _shell_rank(vh, extent) > 1:
        return  # corner/edge halo volumes hold undefined data, never touched
    qin = batch.QIn.reshape(-1)
    q = _state(qin, temporaries.enums.qin, patch, vh)
    x = _position(batch, patch, vh)
    t = batch.t[patch]
    try:
        for j in range(spec.dimensions):
            temporaries.eigenvalues[temporaries.eig_enum.index(patch, vh, j)] = float(
                pde.max_abs_eigenvalue(q, x, t, j)
            )
    except NonPhysicalStateError as exc:
        raise NonPhysicalStateError(str(exc), patch=patch, volume=vh) from None


def _fill_fluxes(batch, pde, temporaries, tup):
    patch, vh = tup[-1], tup[:-1]
    spec = batch.spec
    extent = spec.haloed_per_axis
    if _shell_rank(vh, extent) > 1:
        return
    s = spec.unknowns
    qin = batch.QIn.reshape(-1)
    q = _state(qin, temporaries.enums.qin, patch, vh)
    x = _position(batch, patch, vh)
    t = batch.t[patch]
    try:
        for j in range(spec.dimensions):
            f = pde.flux(q, x, t, j)
            for u in range(s):
                temporaries.flux_values[temporaries.flux_enum.index(patch, vh, j * s + u)] = f[u]
    except NonPhysicalStateError as exc:
        raise NonPhysicalStateError(str(exc), patch=patch, volume=vh) from None


def _damp_from_stored(batch, temporaries, tup):
    patch, v = tup[-1], tup[:-1]
    spec = batch.spec
    d, s, p = spec.dimensions, spec.unknowns, spec.volumes_per_axis
    vh = tuple(c + 1 for c in v)
    qin = batch.QIn.reshape(-1)
    qout = batch.QOut.reshape(-1)
    enums = temporaries.enums
    eig = temporaries.eigenvalues
    eig_enum = temporaries.eig_enum
    dx = batch.cell_size[patch, 0] / p
    inv = batch.dt[patch] / dx

    q_own = _state(qin, enums.qin, patch, vh)
    for j in range(d):
        lam_own = eig[eig_enum.index(patch, vh, j)]
        for shift in (-1, 1):
            nh = list(vh)
            nh[j] += shift
            nh = tuple(nh)
            q_n = _state(qin, enums.qin, patch, nh)
            lam_n = eig[eig_enum.index(patch, nh, j)]
            a = lam_n if lam_n > lam_own else lam_own
            coeff = 0.5 * inv * a
            for u in range(s):
                qout[enums.qout.index(patch, v, u)] += coeff * (q_n[u] - q_own[u])


def _accumulate_stored_fluxes(batch, temporaries, tup):
    patch, v = tup[-1], tup[:-1]
    spec = batch.spec
    d, s, p = spec.dimensions, spec.unknowns, spec.volumes_per_axis
    vh = tuple(c + 1 for c in v)
    qout = batch.QOut.reshape(-1)
    enums = temporaries.enums
    flux = temporaries.flux_values
    fx_enum = temporaries.flux_enum
    dx = batch.cell_size[patch, 0] / p
    inv = batch.dt[patch] / dx

    for j in range(d):
        mh = list(vh)
        mh[j] -= 1
        ph = list(vh)
        ph[j] += 1
        for u in range(s):
            f_o = flux[fx_enum.index(patch, vh, j * s + u)]
            f_m = flux[fx_enum.index(patch, tuple(mh), j * s + u)]
            f_p = flux[fx_enum.index(patch, tuple(ph), j * s + u)]
            favg_m = 0.5 * (f_m + f_o)
            favg_p = 0.5 * (f_o + f_p)
            qout[enums.qout.index(patch, v, u)] += inv * (favg_m - favg_p)


def run(batch: PatchBatch, pde: PdeDefinition, variant, temporaries) -> None:
    if variant.ordering is Ordering.PATCH_WISE:
        _run_patch_wise(batch, pde, variant, temporaries)
    else:
        _run_batched(batch, pde, variant, temporaries)


def _run_patch_wise(batch, pde, variant, temporaries):
    spec = batch.spec
    vol_space = cartesian([(0, spec.volumes_per_axis)] * spec.dimensions)
    enums = temporaries.enums
    for patch in range(batch.n_patches):
        def body(vt, patch=patch):
            tup = vt + (patch,)
            copy_solution(batch, enums, tup)
            accumulate_dissipation(batch, pde, temporaries, tup)
            accumulate_fluxes(batch, pde, temporaries, tup)
            apply_ncp(batch, pde, temporaries, tup)

        for_each(vol_space, variant.strategy, body)
        _reduce_one_patch(batch, temporaries, variant.strategy, patch)


def _run_batched(batch, pde, variant, temporaries):
    spec = batch.spec
    d, p, n = spec.dimensions, spec.volumes_per_axis, batch.n_patches
    interior = cartesian([(0, p)] * d + [(0, n)])
    haloed = cartesian([(0, p + 2)] * d + [(0, n)])
    strategy = variant.strategy
    enums = temporaries.enums

    for_each(interior, strategy, lambda tup: copy_solution(batch, enums, tup))
    for_each(haloed, strategy, lambda tup: _fill_eigenvalues(batch, pde, temporaries, tup))
    for_each(interior, strategy, lambda tup: _damp_from_stored(batch, temporaries, tup))
    for_each(haloed, strategy, lambda tup: _fill_fluxes(batch, pde, temporaries, tup))
    for_each(interior, strategy, lambda tup: _accumulate_stored_fluxes(batch, temporaries, tup))
    if pde.has_ncp:
        for_each(interior, strategy, lambda tup: apply_ncp(batch, pde, temporaries, tup))
    reduce_patch_eigenvalue(batch, temporaries, strategy)
