"""Hamiltonian integral sets: lattice-model builder and FCIDUMP file I/O.

An :class:`IntegralSet` holds the one-body matrix ``h``, the two-body tensor
``v`` in chemists' notation ``(pq|rs)`` with 8-fold permutation symmetry, and
a scalar core energy.  All quantities are in Hartree.  Orbital indices are
0-based in memory and 1-based on disk (FCIDUMP convention).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntegralSet",
    "HubbardSpec",
    "FcidumpError",
    "FcidumpHeader",
    "build_hubbard",
    "read_fcidump",
    "read_fcidump_header",
    "write_fcidump",
]

# (p,q,r,s) images of a chemists'-notation integral under the 8-fold symmetry
_PERMUTATIONS = (
    (0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
)


class FcidumpError(ValueError):
    """Malformed FCIDUMP content.  ``line`` is the 1-based offending line."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class IntegralSet:
    """One- and two-body integrals defining a second-quantized Hamiltonian.

    Attributes
    ----------
    n_spatial : int
        Number of spatial orbitals.
    h : np.ndarray, shape (n, n)
        One-body matrix, exactly symmetric.
    v : np.ndarray, shape (n, n, n, n)
        Two-body tensor ``v[p,q,r,s] = (pq|rs)`` in chemists' notation,
        invariant under the 8 chemists'-notation index permutations.
    e_core : float
        Scalar offset added to every diagonal Hamiltonian element.
    """

    n_spatial: int
    h: np.ndarray
    v: np.ndarray
    e_core: float = 0.0

    def __post_init__(self):
        n = self.n_spatial
        if n < 1:
            raise ValueError(f"n_spatial must be >= 1, got {n}")
        h = np.array(self.h, dtype=float)
        v = np.array(self.v, dtype=float)
        if h.shape != (n, n):
            raise ValueError(f"h has shape {h.shape}, expected {(n, n)}")
        if v.shape != (n, n, n, n):
            raise ValueError(f"v has shape {v.shape}, expected {(n,) * 4}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(v))
                and np.isfinite(self.e_core)):
            raise ValueError("integrals must be finite")
        if not np.array_equal(h, h.T):
            raise ValueError("h must be exactly symmetric")
        for perm in _PERMUTATIONS[1:]:
            if not np.allclose(v, np.transpose(v, perm), rtol=0.0, atol=1e-12):
                raise ValueError("v violates 8-fold chemists'-notation symmetry")
        h.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "e_core", float(self.e_core))

    def allclose(self, other, atol=0.0):
        return (
            self.n_spatial == other.n_spatial
            and np.allclose(self.h, other.h, rtol=0.0, atol=atol)
            and np.allclose(self.v, other.v, rtol=0.0, atol=atol)
            and abs(self.e_core - other.e_core) <= atol
        )


@dataclass(frozen=True)
class HubbardSpec:
    """Parameters of a 1-D Hubbard chain with a tight-binding one-body term.

    ``alpha`` sits on the diagonal of ``h``, ``beta`` connects nearest
    neighbours, and ``u`` is the on-site repulsion ``(pp|pp)``.
    """

    n_sites: int
    u: float
    alpha: float = 0.0
    beta: float = -1.0
    boundary: str = "open"

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        for name in ("u", "alpha", "beta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def build_hubbard(spec: HubbardSpec) -> IntegralSet:
    """Build the integral set of a 1-D Hubbard/tight-binding chain.

    ``h[p,p] = alpha``, ``h[p,q] = beta`` for nearest neighbours, and
    ``v[p,p,p,p] = u``.  Under periodic boundary conditions the extra
    ``(0, n-1)`` bond is added, except for ``n_sites == 2`` where the single
    existing bond is kept once rather than doubled.
    """
    n = spec.n_sites
    h = np.zeros((n, n))
    np.fill_diagonal(h, spec.alpha)
    for p in range(n - 1):
        h[p, p + 1] = h[p + 1, p] = spec.beta
    if spec.boundary == "periodic" and n > 2:
        h[0, n - 1] = h[n - 1, 0] = spec.beta
    v = np.zeros((n, n, n, n))
    for p in range(n):
        v[p, p, p, p] = spec.u
    return IntegralSet(n_spatial=n, h=h, v=v, e_core=0.0)


@dataclass(frozen=True)
class FcidumpHeader:
    norb: int
    nelec: int
    ms2: int


def _parse_header(lines):
    """Parse the namelist header; returns (FcidumpHeader, index past &END)."""
    text = ""
    end = None
    for i, raw in enumerate(lines):
        stripped = raw.strip()
        if i == 0 and not stripped.upper().startswith("&FCI"):
            raise FcidumpError("expected '&FCI' namelist header", line=1)
        text += " " + stripped
        if "&END" in stripped.upper() or stripped.endswith("/"):
            end = i + 1
            break
    if end is None:
        raise FcidumpError("header not terminated by '&END'", line=len(lines))

    fields = {}
    body = text.upper().replace("&FCI", " ").replace("&END", " ").rstrip("/ ")
    for item in body.replace(",", " ").split():
        # bare tokens (continuation of ORBSYM value lists) carry no key
        if "=" in item:
            key, _, value = item.partition("=")
            fields[key.strip()] = value.strip()
    try:
        norb = int(fields["NORB"])
    except (KeyError, ValueError):
        raise FcidumpError("header must define integer NORB", line=1) from None
    if norb < 1:
        raise FcidumpError(f"NORB must be positive, got {norb}", line=1)

    def _opt(key, default):
        try:
            return int(fields[key])
        except (KeyError, ValueError):
            return default

    return FcidumpHeader(norb=norb, nelec=_opt("NELEC", 0), ms2=_opt("MS2", 0)), end


def read_fcidump_header(path) -> FcidumpHeader:
    """Read only the namelist header (NORB/NELEC/MS2) of an FCIDUMP file."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FcidumpError("empty file", line=1)
    header, _ = _parse_header(lines)
    return header


def read_fcidump(path) -> IntegralSet:
    """Read an FCIDUMP file into an :class:`IntegralSet`.

    Each stored entry is replicated to its 8 symmetric positions.  Lines are
    ``<value> <p> <q> <r> <s>`` with 1-based indices; ``r = s = 0`` marks a
    one-body element, an all-zero index tuple the core energy.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FcidumpError("empty file", line=1)
    header, start = _parse_header(lines)
    n = header.norb

    h = np.zeros((n, n))
    v = np.zeros((n, n, n, n))
    e_core = 0.0
    for lineno in range(start, len(lines)):
        stripped = lines[lineno].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 5:
            raise FcidumpError(f"expected '<value> p q r s', got {stripped!r}",
                               line=lineno + 1)
        try:
            value = float(tokens[0])
            p, q, r, s = (int(t) for t in tokens[1:])
        except ValueError:
            raise FcidumpError(f"unparsable data line {stripped!r}",
                               line=lineno + 1) from None
        for name, idx in zip("pqrs", (p, q, r, s)):
            if idx < 0 or idx > n:
                raise FcidumpError(f"index {name}={idx} outside [0, {n}]",
                                   line=lineno + 1)
        if p == q == r == s == 0:
            e_core = value
        elif r == 0 and s == 0:
            if p == 0 or q == 0:
                raise FcidumpError("one-body entry needs p, q >= 1", line=lineno + 1)
            h[p - 1, q - 1] = value
            h[q - 1, p - 1] = value
        elif min(p, q, r, s) >= 1:
            idx = (p - 1, q - 1, r - 1, s - 1)
            for perm in _PERMUTATIONS:
                v[tuple(idx[axis] for axis in perm)] = value
        else:
            raise FcidumpError(f"mixed zero/nonzero index pattern ({p},{q},{r},{s})",
                               line=lineno + 1)
    return IntegralSet(n_spatial=n, h=h, v=v, e_core=e_core)


def _canonical_two_body(n):
    """Yield one representative (p,q,r,s) per 8-fold class, 0-based, sorted."""
    for p in range(n):
        for q in range(p + 1):
            pq = p * (p + 1) // 2 + q
            for r in range(p + 1):
                for s in range(r + 1):
                    if r * (r + 1) // 2 + s <= pq:
                        yield p, q, r, s


def write_fcidump(integrals: IntegralSet, path, n_elec=None, ms2=0) -> None:
    """Write a canonical FCIDUMP: one representative per symmetry class.

    Values are printed with 18 significant digits so a read/write cycle is
    bit-exact.  Zero entries are omitted; the trailing core-energy line is
    always present.  ``n_elec`` defaults to half filling (one electron per
    spatial orbital).
    """
    n = integrals.n_spatial
    if n_elec is None:
        n_elec = n
    orbsym = ",".join(["1"] * n)
    out = [f"&FCI NORB={n},NELEC={n_elec},MS2={ms2}, ORBSYM={orbsym}, ISYM=1, &END"]
    for p, q, r, s in _canonical_two_body(n):
        value = integrals.v[p, q, r, s]
        if value != 0.0:
            out.append(f"{value:.17e} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(n):
        for q in range(p + 1):
            value = integrals.h[p, q]
            if value != 0.0:
                out.append(f"{value:.17e} {p + 1} {q + 1} 0 0")
    out.append(f"{integrals.e_core:.17e} 0 0 0 0")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
