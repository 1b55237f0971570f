"""
Packing a lattice into the eight word arrays
============================================

A 12 x 96 Ising lattice is split by checkerboard color, row parity, and
fold direction into eight matrices whose 16-bit words each hold 16 spins.
This walk-through locates individual spins, packs and unpacks a lattice,
and prints one array with its halo words filled in.
"""

import numpy as np

from multispin.lattice import (
    ALL_CODES,
    ArrayCode,
    LatticeDims,
    canonical_halo_source,
    classify,
    pack,
    unclassify,
    unpack,
)
from multispin.engine import refresh_boundaries

dims = LatticeDims(12, 96)
print(f"lattice {dims.m} x {dims.n}: {dims.cells} worker cells per array, "
      f"{dims.words} words per cell column, {dims.sites} spins")

###############################################################################
# Where does a spin live?
# -----------------------
# Linear index idx = column * n + row.  Spin 224 sits in column 2, row 32:
# red (2+32 even), even row, forward half, second cell, second word, bit 0.

for idx in (0, 224, 1057):
    coord = classify(idx, dims)
    print(f"spin {idx:5d} -> array {coord.code}, cell {coord.cell}, "
          f"word {coord.word}, bit {coord.bit:2d} "
          f"(round trip: {unclassify(coord, dims)})")

###############################################################################
# Pack / unpack round trip
# ------------------------

rng = np.random.default_rng(1)
spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=(dims.m, dims.n))
packed = pack(spins)
print("\nround trip exact:", bool((unpack(packed) == spins).all()))

###############################################################################
# One array with halos
# --------------------
# After a boundary refresh, the top halo of an even array repeats its first
# interior word (periodic wrap) and the live moat mirrors the fold partner's
# edge column.  Dead positions stay zero.

refresh_boundaries(packed)
rfe = packed.matrix(ArrayCode.RFE)
print("\nRFE matrix (rows = cell columns 0..4, cols = vector elements 0..4):")
for g in range(dims.cols):
    print("  " + " ".join(f"{int(w):04x}" for w in rfe[g]))

print("\nhalo sources of RFE's right moat (cell column 4):")
for element in range(1, dims.words + 1):
    src = canonical_halo_source(ArrayCode.RFE, dims.cols - 1, element, dims)
    print(f"  element {element} <- array {src.code}, cell {src.cell}, word {src.word}")

###############################################################################
# The eight arrays partition the lattice
# --------------------------------------

total_bits = sum(
    int(np.unpackbits(packed.interior(code).astype(">u2").view(np.uint8)).sum())
    for code in ALL_CODES
)
print(f"\nup spins counted across all interiors: {total_bits} "
      f"(plain lattice: {int((spins == 1).sum())})")
