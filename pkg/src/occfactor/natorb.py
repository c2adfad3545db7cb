"""Natural-orbital basis: 1-RDM diagonalization and integral rotation.

The pipeline mirrors the usual recipe: solve for the ground state, build the
spin-summed 1-RDM, diagonalize it, rotate the integrals into the eigenbasis
(occupations descending), and solve again there.  Spatial orbitals are used
throughout, so occupations live in [0, 2].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fci import compute_rdm1, solve_ground_state
from .integrals import IntegralSet

__all__ = [
    "OrbitalRotation",
    "natural_orbital_basis",
    "transform_integrals",
    "no_pipeline",
]


@dataclass(frozen=True)
class OrbitalRotation:
    """Orthogonal rotation whose columns are natural orbitals.

    ``c[:, k]`` is the k-th natural orbital; ``occupations[k]`` its 1-RDM
    eigenvalue, sorted descending.
    """

    c: np.ndarray
    occupations: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        occ = np.array(self.occupations, dtype=float)
        n = c.shape[0]
        if c.shape != (n, n) or occ.shape != (n,):
            raise ValueError("rotation must be square with one occupation per column")
        if np.max(np.abs(c.T @ c - np.eye(n))) > 1e-10:
            raise ValueError("columns must be orthonormal")
        if np.any(np.diff(occ) > 1e-10):
            raise ValueError("occupations must be sorted descending")
        c.setflags(write=False)
        occ.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "occupations", occ)


def natural_orbital_basis(r1) -> OrbitalRotation:
    """Diagonalize a 1-RDM; columns sorted by occupation descending.

    Each column's sign is fixed so its largest-magnitude entry is positive
    (first such entry on ties).  Within numerically degenerate occupation
    blocks columns are ordered by lexicographic comparison of their entries,
    an arbitrary but deterministic choice.
    """
    r1 = np.asarray(r1, dtype=float)
    n = r1.shape[0]
    if r1.shape != (n, n):
        raise ValueError(f"rdm1 must be square, got shape {r1.shape}")
    if np.max(np.abs(r1 - r1.T)) > 1e-8:
        raise ValueError("rdm1 must be symmetric")
    evals, evecs = np.linalg.eigh(0.5 * (r1 + r1.T))
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    for k in range(n):
        lead = int(np.argmax(np.abs(evecs[:, k])))
        if evecs[lead, k] < 0:
            evecs[:, k] = -evecs[:, k]
    order = list(range(n))
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(evals[stop] - evals[start]) <= 1e-10:
            stop += 1
        if stop - start > 1:
            block = sorted(range(start, stop), key=lambda k: tuple(evecs[:, k]))
            order[start:stop] = block
        start = stop
    return OrbitalRotation(c=evecs[:, order], occupations=evals[order])


def _symmetrize_two_body(v):
    """Average over the 8-fold images, exactly equal across each class.

    The mean is evaluated once per canonical representative and gathered
    back, so all eight positions of a class hold the identical float (a
    plain sum of transposes would differ across positions in the last ulp).
    """
    n = v.shape[0]
    acc = v.copy()
    for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
                 (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)):
        acc += v.transpose(perm)
    acc /= 8.0
    p, q, r, s = np.indices((n, n, n, n))
    hi_pq, lo_pq = np.maximum(p, q), np.minimum(p, q)
    hi_rs, lo_rs = np.maximum(r, s), np.minimum(r, s)
    pair_pq = hi_pq * (hi_pq + 1) // 2 + lo_pq
    pair_rs = hi_rs * (hi_rs + 1) // 2 + lo_rs
    swap = pair_pq < pair_rs
    cp = np.where(swap, hi_rs, hi_pq)
    cq = np.where(swap, lo_rs, lo_pq)
    cr = np.where(swap, hi_pq, hi_rs)
    cs = np.where(swap, lo_pq, lo_rs)
    return acc[cp, cq, cr, cs]


def transform_integrals(integrals: IntegralSet, rot: OrbitalRotation) -> IntegralSet:
    """Rotate integrals into the orbital basis defined by ``rot``.

    ``h' = C^T h C`` and ``(ab|cd)' = sum C_ia C_jb (ij|kl) C_kc C_ld``,
    done as four successive one-index contractions; the core energy is
    unchanged.  The result is re-symmetrized so the 8-fold invariance of the
    output holds exactly as stored.
    """
    c = rot.c
    n = integrals.n_spatial
    if c.shape != (n, n):
        raise ValueError(f"rotation dimension {c.shape} does not match {n} orbitals")
    h_new = c.T @ integrals.h @ c
    v_new = np.tensordot(c, integrals.v, axes=(0, 0))        # (a, j, k, l)
    v_new = np.tensordot(c, v_new, axes=(0, 1))              # (b, a, k, l)
    v_new = np.tensordot(v_new, c, axes=(2, 0))              # (b, a, l, c)
    v_new = np.tensordot(v_new, c, axes=(2, 0))              # (b, a, c, d)
    v_new = v_new.transpose(1, 0, 2, 3)
    return IntegralSet(
        n_spatial=n,
        h=0.5 * (h_new + h_new.T),
        v=_symmetrize_two_body(v_new),
        e_core=integrals.e_core,
    )


def no_pipeline(integrals, n_alpha, n_beta, mode="auto", **solver_kwargs):
    """Solve, rotate to natural orbitals, and solve again.

    Returns ``(psi_no, integrals_no, rotation)``: the ground state and
    integrals in the natural-orbital basis plus the rotation that produced
    them.  A single pass is performed.
    """
    psi = solve_ground_state(integrals, n_alpha, n_beta, mode=mode, **solver_kwargs)
    rotation = natural_orbital_basis(compute_rdm1(psi))
    integrals_no = transform_integrals(integrals, rotation)
    psi_no = solve_ground_state(integrals_no, n_alpha, n_beta, mode=mode,
                                **solver_kwargs)
    return psi_no, integrals_no, rotation
