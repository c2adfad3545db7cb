#!/usr/bin/env python3
"""Exact diagonalization of 1-D Hubbard chains, and FCIDUMP round trips.

Walks through the lowest layer of the library: building integral sets,
solving for ground states with the dense and iterative eigensolvers, and
moving Hamiltonians through the FCIDUMP interchange format.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from occfactor import (HubbardSpec, build_hubbard, read_fcidump,
                       solve_ground_state, write_fcidump)

print("=" * 70)
print("1. Two-site chain: closed-form check")
print("=" * 70)
# The half-filled two-site chain has the closed-form ground energy
#   E(U) = U/2 - sqrt(U^2/4 + 4 beta^2).
for u in (-10.0, -4.0, 0.0, 4.0, 10.0):
    integrals = build_hubbard(HubbardSpec(n_sites=2, u=u))
    psi = solve_ground_state(integrals, 1, 1)
    exact = u / 2 - math.sqrt(u * u / 4 + 4)
    print(f"  U = {u:6.1f}   E = {psi.energy:+.12f}   exact = {exact:+.12f}")

print()
print("=" * 70)
print("2. Six sites, no interaction: the one-particle spectrum rules")
print("=" * 70)
integrals = build_hubbard(HubbardSpec(n_sites=6, u=0.0))
psi = solve_ground_state(integrals, 3, 3)
levels = np.linalg.eigvalsh(integrals.h)
print(f"  tight-binding levels: {np.round(levels, 6)}")
print(f"  2 x (three lowest)  : {2 * levels[:3].sum():+.10f}")
print(f"  FCI ground energy   : {psi.energy:+.10f}")
print(f"  basis size          : {len(psi.basis)} determinants")

print()
print("=" * 70)
print("3. Correlation spreads the wavefunction")
print("=" * 70)
for u in (0.0, 2.0, 10.0):
    integrals = build_hubbard(HubbardSpec(n_sites=6, u=u))
    psi = solve_ground_state(integrals, 3, 3)
    leading = psi.dominant(1)[0]
    print(f"  U = {u:5.1f}   E = {psi.energy:+.6f}   "
          f"largest |c| = {abs(leading[1]):.4f} on {leading[0]}")

print()
print("=" * 70)
print("4. FCIDUMP round trip")
print("=" * 70)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "chain.fcidump"
    original = build_hubbard(HubbardSpec(n_sites=4, u=2.0))
    write_fcidump(original, path)
    print(f"  wrote {path.name}:")
    for line in path.read_text().splitlines()[:4]:
        print(f"    {line}")
    print("    ...")
    recovered = read_fcidump(path)
    print(f"  h recovered exactly: {np.array_equal(recovered.h, original.h)}")
    print(f"  v recovered exactly: {np.array_equal(recovered.v, original.v)}")
    psi = solve_ground_state(recovered, 2, 2)
    print(f"  ground energy from the file: {psi.energy:+.10f}")
