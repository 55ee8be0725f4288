"""Rusanov finite-volume patch-update kernels.

The update pipeline has two orderings: patch-wise (patch index outermost,
all compute steps fused into one traversal per patch) and batched (one
collapsed loop over all patches and volumes per compute step).  Temporary
flux and eigenvalue arrays are laid out per a configurable enumerator;
solution storage itself is always AoS.

Two engines produce bitwise-identical results: a vectorized engine (the
default) whose launches are whole-array operations, and a per-tuple
loop-body engine that is the readable reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ContractViolationError
from ..itspace import ExecutionStrategy, SEQUENTIAL, PARALLEL, strategy_from_label
from ..mesh import (
    DEFAULT_AOSOA_BLOCK,
    Layout,
    LayoutEnumerator,
    PatchBatch,
    PatchSpec,
    layout_from_label,
)
from ..pde import PdeDefinition


class Ordering(Enum):
    PATCH_WISE = "patchwise"
    BATCHED = "batched"


def ordering_from_label(label: str) -> Ordering:
    for o in Ordering:
        if o.value == label:
            return o
    raise ContractViolationError(f"unknown ordering label {label!r}")


@dataclass(frozen=True)
class KernelVariant:
    """One point of the kernel design space: loop ordering, temporary-data
    layout, and execution strategy."""

    ordering: Ordering
    layout: Layout
    strategy: ExecutionStrategy

    @property
    def label(self) -> str:
        return f"{self.ordering.value}-{self.layout.value}-{self.strategy.label}"


def variant_from_labels(ordering: str, layout: str, strategy: str,
                        worker_hint: int | None = None) -> KernelVariant:
    return KernelVariant(
        ordering=ordering_from_label(ordering),
        layout=layout_from_label(layout),
        strategy=strategy_from_label(strategy, worker_hint),
    )


@dataclass(frozen=True)
class KernelEnumerators:
    """Enumerators for the AoS solution arrays (haloed input, interior output)."""

    qin: LayoutEnumerator
    qout: LayoutEnumerator


def solution_enumerators(spec: PatchSpec, n_patches: int) -> KernelEnumerators:
    return KernelEnumerators(
        qin=LayoutEnumerator(Layout.AOS, n_patches, spec.dimensions,
                             spec.haloed_per_axis, spec.unknowns),
        qout=LayoutEnumerator(Layout.AOS, n_patches, spec.dimensions,
                              spec.volumes_per_axis, spec.unknowns),
    )


@dataclass
class KernelTemporaries:
    """Per-volume flux and eigenvalue scratch, spanning interior plus the
    face-adjacent halo shell (the rectangle includes corner volumes, which
    are never written or read)."""

    eigenvalues: np.ndarray
    flux_values: np.ndarray
    eig_enum: LayoutEnumerator
    flux_enum: LayoutEnumerator
    enums: KernelEnumerators


def allocate_temporaries(spec: PatchSpec, n_patches: int, layout: Layout,
                         block: int = DEFAULT_AOSOA_BLOCK) -> KernelTemporaries:
    d = spec.dimensions
    eig_enum = LayoutEnumerator(layout, n_patches, d, spec.haloed_per_axis, d, block)
    flux_enum = LayoutEnumerator(layout, n_patches, d, spec.haloed_per_axis,
                                 d * spec.unknowns, block)
    return KernelTemporaries(
        eigenvalues=np.zeros(eig_enum.total),
        flux_values=np.zeros(flux_enum.total),
        eig_enum=eig_enum,
        flux_enum=flux_enum,
        enums=solution_enumerators(spec, n_patches),
    )


def update_patch_batch(batch: PatchBatch, pde: PdeDefinition, variant: KernelVariant,
                       temporaries: KernelTemporaries | None = None,
                       engine: str = "vectorized") -> None:
    """Advance every patch of the batch by its own dt.

    QOut receives the updated interior solution and max_eigenvalue the
    per-patch directional maximum; QIn is read-only.  Results are identical
    across orderings, layouts, strategies, and engines.
    """
    if batch.n_patches == 0:
        return
    if batch.spec.unknowns != pde.unknowns:
        raise ContractViolationError(
            f"batch carries {batch.spec.unknowns} unknowns, PDE defines {pde.unknowns}"
        )
    if np.any(batch.dt < 0.0):
        raise ContractViolationError("negative dt in batch")
    if temporaries is None:
        temporaries = allocate_temporaries(batch.spec, batch.n_patches, variant.layout)
    if engine == "vectorized":
        from . import vectorized
        vectorized.run(batch, pde, variant, temporaries)
    elif engine == "loopbody":
        from . import loopbody
        loopbody.run(batch, pde, variant, temporaries)
    else:
        raise ContractViolationError(f"unknown engine {engine!r}")


from .loopbody import (  # noqa: E402
    copy_solution,
    accumulate_dissipation,
    accumulate_fluxes,
    apply_ncp,
    reduce_patch_eigenvalue,
)

__all__ = [
    "Ordering",
    "KernelVariant",
    "KernelEnumerators",
    "KernelTemporaries",
    "allocate_temporaries",
    "solution_enumerators",
    "update_patch_batch",
    "variant_from_labels",
    "ordering_from_label",
    "copy_solution",
    "accumulate_dissipation",
    "accumulate_fluxes",
    "apply_ncp",
    "reduce_patch_eigenvalue",
    "SEQUENTIAL",
    "PARALLEL",
]
