"""Determinant basis, Hamiltonian application, ground-state solve, and RDMs.

Determinants are pairs of alpha/beta occupation bitsets over spatial
orbitals.  The canonical basis order is lexicographic over the
``(alpha_occ, beta_occ)`` bit patterns read as ascending integers (bit ``p``
= orbital ``p``), which factorizes the basis as a row-major grid of alpha
strings times beta strings.  The Hamiltonian is applied through per-spin
single-excitation link tables: with the spin-summed generators
``E_pq = sum_s a+_ps a_qs`` the Hamiltonian is

    H = e_core + sum_pq h'_pq E_pq + 1/2 sum_pqrs (pq|rs) E_pq E_rs,
    h'_pq = h_pq - 1/2 sum_k (pk|kq),

so a matrix-vector product costs two passes of single-excitation sweeps plus
one dense contraction with the two-body tensor.

Fermionic sign convention: creation operators ordered all-alpha ascending
then all-beta ascending; excitation phases count occupied orbitals strictly
between the two indices within the same spin string.  Cross-spin phases
cancel because every beta operator hops an even number of alpha operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

__all__ = [
    "Determinant",
    "CIVector",
    "ConvergenceError",
    "enumerate_basis",
    "apply_hamiltonian",
    "solve_ground_state",
    "hamiltonian_diagonal",
    "compute_rdm1",
    "compute_rdm2",
    "energy_from_rdms",
]

DENSE_CAP_DEFAULT = 20_000


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed; carries the last residual norm."""

    def __init__(self, message, residual_norm):
        super().__init__(f"{message} (residual norm {residual_norm:.3e})")
        self.residual_norm = residual_norm


@dataclass(frozen=True, slots=True)
class Determinant:
    """Occupation-number vector split into alpha and beta bitsets.

    Bit ``p`` of each bitset flags spatial orbital ``p``.  In feature space
    alpha orbitals map to spin-orbital indices ``0 .. n-1`` and beta to
    ``n .. 2n-1``.
    """

    alpha_occ: int
    beta_occ: int
    n_spatial: int

    @property
    def n_alpha(self) -> int:
        return self.alpha_occ.bit_count()

    @property
    def n_beta(self) -> int:
        return self.beta_occ.bit_count()

    def occupation_vector(self) -> np.ndarray:
        """0/1 vector of length ``2 * n_spatial`` (alpha block, beta block)."""
        n = self.n_spatial
        out = np.zeros(2 * n, dtype=np.int8)
        for p in range(n):
            if self.alpha_occ >> p & 1:
                out[p] = 1
            if self.beta_occ >> p & 1:
                out[n + p] = 1
        return out

    def __str__(self):
        n = self.n_spatial
        a = "".join("1" if self.alpha_occ >> p & 1 else "0" for p in range(n))
        b = "".join("1" if self.beta_occ >> p & 1 else "0" for p in range(n))
        return f"{a}|{b}"


@dataclass(frozen=True)
class CIVector:
    """Normalized CI expansion over the canonical determinant basis."""

    basis: tuple
    coefficients: np.ndarray
    energy: float = float("nan")

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float)
        if coeffs.ndim != 1 or len(coeffs) != len(self.basis):
            raise ValueError("coefficients must align with the basis")
        norm2 = float(coeffs @ coeffs)
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"coefficients must be unit-norm (got |c|^2 = {norm2!r})")
        coeffs.setflags(write=False)
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "energy", float(self.energy))

    @property
    def n_spatial(self) -> int:
        return self.basis[0].n_spatial

    def dominant(self, k=8):
        """The ``k`` largest-magnitude entries as (Determinant, coefficient)."""
        order = sorted(range(len(self.basis)),
                       key=lambda i: (-abs(self.coefficients[i]), i))
        return [(self.basis[i], float(self.coefficients[i])) for i in order[:k]]


# ---------------------------------------------------------------------------
# string spaces and excitation link tables


@lru_cache(maxsize=32)
def _string_space(n, k):
    """All k-electron occupation bitsets over n orbitals, ascending.

    Returns (strings, index map, occupancy matrix, link tables); the link
    table maps an ordered orbital pair (p, q), p != q, to the arrays
    (from, to, sign) realizing ``a+_p a_q`` on the string list.
    """
    if not 0 <= k <= n:
        raise ValueError(f"electron count {k} outside [0, {n}]")
    strings = sorted(sum(1 << p for p in combo) for combo in combinations(range(n), k))
    index = {s: i for i, s in enumerate(strings)}
    occ = np.zeros((len(strings), n), dtype=np.float64)
    links = {}
    for i, s in enumerate(strings):
        occupied = [p for p in range(n) if s >> p & 1]
        empty = [p for p in range(n) if not s >> p & 1]
        for p in occupied:
            occ[i, p] = 1.0
        for q in occupied:
            for p in empty:
                s2 = (s ^ (1 << q)) | (1 << p)
                lo, hi = (p, q) if p < q else (q, p)
                between = (s >> (lo + 1)) & ((1 << (hi - lo - 1)) - 1)
                sign = -1.0 if between.bit_count() & 1 else 1.0
                links.setdefault((p, q), []).append((i, index[s2], sign))
    tables = {}
    for pair, entries in links.items():
        frm = np.array([e[0] for e in entries], dtype=np.intp)
        to = np.array([e[1] for e in entries], dtype=np.intp)
        sgn = np.array([e[2] for e in entries], dtype=np.float64)
        tables[pair] = (frm, to, sgn)
    return tuple(strings), index, occ, tables


def enumerate_basis(n_spatial, n_alpha, n_beta):
    """Canonically ordered determinant list for fixed electron counts.

    The order is row-major over (alpha string, beta string) with each string
    list ascending by bit pattern, giving exactly
    ``C(n, n_alpha) * C(n, n_beta)`` determinants.
    """
    if not 0 <= n_alpha <= n_spatial or not 0 <= n_beta <= n_spatial:
        raise ValueError(
            f"electron counts ({n_alpha}, {n_beta}) outside [0, {n_spatial}]")
    strings_a, _, _, _ = _string_space(n_spatial, n_alpha)
    strings_b, _, _, _ = _string_space(n_spatial, n_beta)
    return [Determinant(a, b, n_spatial) for a in strings_a for b in strings_b]


def _basis_counts(basis):
    """Validate that ``basis`` is a canonical enumeration; return counts."""
    first = basis[0]
    n = first.n_spatial
    na, nb = first.n_alpha, first.n_beta
    strings_a, _, _, _ = _string_space(n, na)
    strings_b, _, _, _ = _string_space(n, nb)
    if len(basis) != len(strings_a) * len(strings_b):
        raise ValueError("basis is not the canonical full enumeration")
    got_a = np.fromiter((d.alpha_occ for d in basis), dtype=np.int64, count=len(basis))
    got_b = np.fromiter((d.beta_occ for d in basis), dtype=np.int64, count=len(basis))
    want_a = np.repeat(np.array(strings_a, dtype=np.int64), len(strings_b))
    want_b = np.tile(np.array(strings_b, dtype=np.int64), len(strings_a))
    if not (np.array_equal(got_a, want_a) and np.array_equal(got_b, want_b)):
        raise ValueError("basis is not in canonical order")
    return n, na, nb


# ---------------------------------------------------------------------------
# Hamiltonian application


class _Engine:
    """Precomputed apparatus for one (integrals, n_alpha, n_beta) problem."""

    def __init__(self, integrals, n_alpha, n_beta):
        n = integrals.n_spatial
        if not 0 <= n_alpha <= n or not 0 <= n_beta <= n:
            raise ValueError(
                f"electron counts ({n_alpha}, {n_beta}) outside [0, {n}]")
        self.integrals = integrals
        self.n = n
        self.strings_a, _, self.occ_a, self.links_a = _string_space(n, n_alpha)
        self.strings_b, _, self.occ_b, self.links_b = _string_space(n, n_beta)
        self.na = len(self.strings_a)
        self.nb = len(self.strings_b)
        self.dim = self.na * self.nb
        # fold the contracted exchange term into the one-body part
        self.h_eff = integrals.h - 0.5 * np.einsum("ikkj->ij", integrals.v)
        self.v2 = integrals.v.reshape(n * n, n * n)

    def _generator_stack(self, C):
        """D[p, q] = E_pq C for all orbital pairs; C has shape (B, na, nb)."""
        n, B = self.n, C.shape[0]
        D = np.zeros((n, n, B, self.na, self.nb))
        for p in range(n):
            D[p, p] = (self.occ_a[:, p][None, :, None]
                       + self.occ_b[:, p][None, None, :]) * C
            for q in range(n):
                if p == q:
                    continue
                block = D[p, q]
                if (p, q) in self.links_a:
                    frm, to, sgn = self.links_a[(p, q)]
                    block[:, to, :] = sgn[None, :, None] * C[:, frm, :]
                if (p, q) in self.links_b:
                    frm, to, sgn = self.links_b[(p, q)]
                    block[:, :, to] += sgn[None, None, :] * C[:, :, frm]
        return D

    def apply(self, C):
        """sigma = H C for a batch C of shape (B, na, nb)."""
        n, B = self.n, C.shape[0]
        D = self._generator_stack(C)
        sigma = self.integrals.e_core * C
        sigma += np.tensordot(self.h_eff, D, axes=([0, 1], [0, 1]))
        G = (self.v2 @ D.reshape(n * n, -1)).reshape(n, n, B, self.na, self.nb)
        for p in range(n):
            sigma += 0.5 * ((self.occ_a[:, p][None, :, None]
                             + self.occ_b[:, p][None, None, :]) * G[p, p])
            for q in range(n):
                if p == q:
                    continue
                block = G[p, q]
                if (p, q) in self.links_a:
                    frm, to, sgn = self.links_a[(p, q)]
                    sigma[:, to, :] += 0.5 * sgn[None, :, None] * block[:, frm, :]
                if (p, q) in self.links_b:
                    frm, to, sgn = self.links_b[(p, q)]
                    sigma[:, :, to] += 0.5 * sgn[None, None, :] * block[:, :, frm]
        return sigma

    def matvec(self, x):
        C = np.ascontiguousarray(x).reshape(1, self.na, self.nb)
        return self.apply(C).reshape(self.dim)

    def diagonal(self):
        """<D|H|D> for every determinant, as an (na, nb) grid."""
        h, v = self.integrals.h, self.integrals.v
        hdiag = np.diag(h)
        coul = np.einsum("ppqq->pq", v)
        exch = np.einsum("pqqp->pq", v)
        occ_a, occ_b = self.occ_a, self.occ_b
        one_a = occ_a @ hdiag
        one_b = occ_b @ hdiag
        same_a = 0.5 * np.einsum("ip,pq,iq->i", occ_a, coul - exch, occ_a)
        same_b = 0.5 * np.einsum("ip,pq,iq->i", occ_b, coul - exch, occ_b)
        cross = occ_a @ coul @ occ_b.T
        return (self.integrals.e_core
                + (one_a + same_a)[:, None]
                + (one_b + same_b)[None, :]
                + cross)

    def dense_matrix(self, max_block_bytes=2 * 10**8):
        """Explicit Hamiltonian matrix, assembled via batched products."""
        dim = self.dim
        block = max(1, int(max_block_bytes / (self.n ** 2 * dim * 8)))
        H = np.empty((dim, dim))
        eye = np.eye(dim)
        for start in range(0, dim, block):
            stop = min(dim, start + block)
            C = eye[start:stop].reshape(stop - start, self.na, self.nb)
            H[start:stop] = self.apply(C).reshape(stop - start, dim)
        return H


def apply_hamiltonian(integrals, x, basis):
    """Return ``H x`` over the canonical determinant basis.

    Matrix elements follow the Slater-Condon rules with the module's sign
    convention; the core energy contributes to the diagonal.  The basis must
    be the canonical enumeration matching ``x``.  The sweep order and
    reductions are fixed, so repeated calls are bit-identical.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (len(basis),):
        raise ValueError(f"vector length {x.shape} does not match basis size {len(basis)}")
    n, na, nb = _basis_counts(basis)
    if integrals.n_spatial != n:
        raise ValueError("integral set and basis disagree on orbital count")
    return _Engine(integrals, na, nb).matvec(x)


def hamiltonian_diagonal(integrals, n_alpha, n_beta):
    """Diagonal of the Hamiltonian in the canonical basis (flattened)."""
    return _Engine(integrals, n_alpha, n_beta).diagonal().reshape(-1)


# ---------------------------------------------------------------------------
# ground-state solvers


def _fix_sign(coeffs):
    lead = np.argmax(np.abs(coeffs))
    return -coeffs if coeffs[lead] < 0 else coeffs


def _dense_ground_state(engine):
    H = engine.dense_matrix()
    evals, evecs = np.linalg.eigh(H)
    # among numerically degenerate lowest eigenpairs, pick the one whose
    # dominant determinant comes first in the canonical order
    candidates = np.nonzero(evals <= evals[0] + 1e-12)[0]
    best = min(candidates, key=lambda i: int(np.argmax(np.abs(evecs[:, i]))))
    vec = evecs[:, best]
    return float(evals[best]), vec / np.linalg.norm(vec)


def _davidson(engine, tol=1e-9, max_subspace=30, max_iter=200):
    dim = engine.dim
    diag = engine.diagonal().reshape(-1)
    if dim == 1:
        return float(diag[0]), np.ones(1)

    max_subspace = max(2, min(max_subspace, dim))
    seed = np.zeros(dim)
    seed[int(np.argmin(diag))] = 1.0
    V = [seed]
    W = [engine.matvec(seed)]
    residual_norm = math.inf
    for _ in range(max_iter):
        m = len(V)
        Vm = np.stack(V, axis=1)
        Wm = np.stack(W, axis=1)
        S = Vm.T @ Wm
        S = 0.5 * (S + S.T)
        theta, Y = np.linalg.eigh(S)
        theta0, y = theta[0], Y[:, 0]
        u = Vm @ y
        r = Wm @ y - theta0 * u
        residual_norm = float(np.linalg.norm(r))
        if residual_norm <= tol:
            return float(theta0), _fix_sign(u / np.linalg.norm(u))
        denom = diag - theta0
        denom = np.where(np.abs(denom) < 1e-10, np.copysign(1e-10, denom), denom)
        t = r / denom
        if m >= max_subspace:
            V, W = [u / np.linalg.norm(u)], [engine.matvec(u) / np.linalg.norm(u)]
            Vm = np.stack(V, axis=1)
        # twice-iterated Gram-Schmidt keeps the subspace orthonormal
        for _ in range(2):
            t = t - Vm @ (Vm.T @ t)
        tnorm = np.linalg.norm(t)
        if tnorm < 1e-12:
            if residual_norm <= max(tol, 1e-8):
                return float(theta0), _fix_sign(u / np.linalg.norm(u))
            raise ConvergenceError("Davidson subspace saturated", residual_norm)
        t /= tnorm
        V.append(t)
        W.append(engine.matvec(t))
    raise ConvergenceError("Davidson did not converge", residual_norm)


def solve_ground_state(integrals, n_alpha, n_beta, mode="auto", *,
                       dense_cap=DENSE_CAP_DEFAULT, tol=1e-9,
                       max_subspace=30, max_iter=200):
    """Lowest eigenpair of the Hamiltonian at fixed electron counts.

    Parameters
    ----------
    mode : {"auto", "dense", "davidson"}
        ``dense`` diagonalizes the explicit matrix (basis size capped at
        ``dense_cap``); ``davidson`` runs the iterative solver seeded from
        the lowest-diagonal determinant; ``auto`` picks dense when the basis
        fits under the cap.

    Returns a :class:`CIVector` with the global sign fixed so the
    largest-magnitude coefficient is positive.
    """
    engine = _Engine(integrals, n_alpha, n_beta)
    if mode not in ("auto", "dense", "davidson"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "auto":
        mode = "dense" if engine.dim <= dense_cap else "davidson"
    if mode == "dense":
        if engine.dim > dense_cap:
            raise ValueError(
                f"dense mode limited to {dense_cap} determinants, got {engine.dim}")
        energy, vec = _dense_ground_state(engine)
    else:
        energy, vec = _davidson(engine, tol=tol, max_subspace=max_subspace,
                                max_iter=max_iter)
    vec = _fix_sign(vec / np.linalg.norm(vec))
    basis = enumerate_basis(integrals.n_spatial, n_alpha, n_beta)
    return CIVector(basis=tuple(basis), coefficients=vec, energy=energy)


# ---------------------------------------------------------------------------
# reduced density matrices


def _generator_flat(psi):
    """vec(E_pq psi) for all pairs, shape (n*n, dim)."""
    n, _, _ = _basis_counts(psi.basis)
    strings_a, _, occ_a, links_a = _string_space(n, psi.basis[0].n_alpha)
    strings_b, _, occ_b, links_b = _string_space(n, psi.basis[0].n_beta)
    na, nb = len(strings_a), len(strings_b)
    C = psi.coefficients.reshape(1, na, nb)
    D = np.zeros((n, n, 1, na, nb))
    for p in range(n):
        D[p, p] = (occ_a[:, p][None, :, None] + occ_b[:, p][None, None, :]) * C
        for q in range(n):
            if p == q:
                continue
            block = D[p, q]
            if (p, q) in links_a:
                frm, to, sgn = links_a[(p, q)]
                block[:, to, :] = sgn[None, :, None] * C[:, frm, :]
            if (p, q) in links_b:
                frm, to, sgn = links_b[(p, q)]
                block[:, :, to] += sgn[None, None, :] * C[:, :, frm]
    return n, D.reshape(n * n, na * nb)


def compute_rdm1(psi: CIVector) -> np.ndarray:
    """Spin-summed one-body reduced density matrix gamma_pq = <a+_p a_q>."""
    n, Dflat = _generator_flat(psi)
    gamma = (Dflat @ psi.coefficients).reshape(n, n)
    return 0.5 * (gamma + gamma.T)


def compute_rdm2(psi: CIVector) -> np.ndarray:
    """Spin-summed two-body RDM in chemists' notation.

    Normalized so that the energy is exactly
    ``sum(rdm1 * h) + 0.5 * sum(rdm2 * v) + e_core`` against an
    :class:`~occfactor.integrals.IntegralSet`; explicitly,
    ``rdm2[p,q,r,s] = <E_pq E_rs> - delta_qr <E_ps>``.
    """
    n, Dflat = _generator_flat(psi)
    gamma = (Dflat @ psi.coefficients).reshape(n, n)
    expect = (Dflat @ Dflat.T).reshape(n, n, n, n)  # expect[q,p,r,s] = <E_pq E_rs>
    rho2 = expect.transpose(1, 0, 2, 3).copy()
    for j in range(n):
        rho2[:, j, j, :] -= gamma
    return rho2


def energy_from_rdms(r1, r2, integrals) -> float:
    """Contract RDMs with the integrals: sum(r1 h) + 1/2 sum(r2 v) + e_core."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    n = integrals.n_spatial
    if r1.shape != (n, n):
        raise ValueError(f"rdm1 shape {r1.shape} does not match {n} orbitals")
    if r2.shape != (n, n, n, n):
        raise ValueError(f"rdm2 shape {r2.shape} does not match {n} orbitals")
    return float(np.sum(r1 * integrals.h)
                 + 0.5 * np.sum(r2 * integrals.v)
                 + integrals.e_core)
