"""Periodic lattice geometries and their translation classes of pairings.

Sites are indexed row-major over the grid. Every supported geometry splits
its nearest-neighbor bonds into d translation-equivalence classes, each class
consisting of two perfect pairings of all sites; one pairing is one parallel
circuit layer. The 4x4 square and triangular pairing orders reproduce the
conventions of the qib adjacency definitions verbatim.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Geometry(str, Enum):
    CHAIN = "chain"
    SQUARE = "square"
    TRIANGULAR = "triangular"


# translation vectors (dr, dc) per class, in layer order
_CLASS_DIRECTIONS = {
    Geometry.SQUARE: [(1, 0), (0, 1)],              # vertical, horizontal
    Geometry.TRIANGULAR: [(0, 1), (1, 1), (1, 0)],  # horizontal, diagonal, vertical
}

_EXPECTED_DEGREE = {Geometry.CHAIN: 2, Geometry.SQUARE: 4, Geometry.TRIANGULAR: 6}


@dataclass(frozen=True)
class PermutationClass:
    """One translation class: a list of perfect pairings that tile the bonds."""

    class_index: int
    pairings: tuple[tuple[tuple[int, int], ...], ...]

    def flat(self) -> list[tuple[int, ...]]:
        """Each pairing flattened to the consecutive-pairs integer list form."""
        return [tuple(s for pair in pairing for s in pair) for pairing in self.pairings]


@dataclass(frozen=True)
class Lattice:
    geometry: Geometry
    extents: tuple[int, ...]
    classes: tuple[PermutationClass, ...] = field(repr=False)

    @property
    def n_sites(self) -> int:
        n = 1
        for e in self.extents:
            n *= e
        return n

    @property
    def d(self) -> int:
        return len(self.classes)

    @property
    def bonds(self) -> list[tuple[int, int]]:
        out = []
        for cls in self.classes:
            for pairing in cls.pairings:
                out.extend(pairing)
        return out

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {s: set() for s in range(self.n_sites)}
        for a, b in self.bonds:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def site_index(self, r: int, c: int = 0) -> int:
        if self.geometry is Geometry.CHAIN:
            return r % self.extents[0]
        rows, cols = self.extents
        return (r % rows) * cols + (c % cols)

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry.value,
            "extents": list(self.extents),
            "n_sites": self.n_sites,
            "bonds": [list(b) for b in self.bonds],
            "classes": [
                {"class_index": cls.class_index, "pairings": [[list(p) for p in pairing] for pairing in cls.pairings]}
                for cls in self.classes
            ],
        }


def _chain_classes(n: int) -> tuple[PermutationClass, ...]:
    pairings = []
    for offset in (0, 1):
        pairings.append(tuple((i % n, (i + 1) % n) for i in range(offset, n, 2)))
    return (PermutationClass(0, tuple(pairings)),)


def _cycle(start: int, step: tuple[int, int], extents: tuple[int, int]) -> list[int]:
    rows, cols = extents
    r, c = divmod(start, cols)
    sites = [start]
    while True:
        r, c = (r + step[0]) % rows, (c + step[1]) % cols
        s = r * cols + c
        if s == start:
            return sites
        sites.append(s)


def _square_classes(extents: tuple[int, int]) -> tuple[PermutationClass, ...]:
    rows, cols = extents
    idx = lambda r, c: (r % rows) * cols + (c % cols)
    vertical = []
    for offset in (0, 1):
        vertical.append(tuple(
            (idx(r, c), idx(r + 1, c)) for r in range(offset, rows, 2) for c in range(cols)
        ))
    horizontal = []
    for offset in (0, 1):
        horizontal.append(tuple(
            (idx(r, c), idx(r, c + 1)) for c in range(offset, cols, 2) for r in range(rows)
        ))
    return (PermutationClass(0, tuple(vertical)), PermutationClass(1, tuple(horizontal)))


def _triangular_classes(extents: tuple[int, int]) -> tuple[PermutationClass, ...]:
    rows, cols = extents
    idx = lambda r, c: (r % rows) * cols + (c % cols)

    horizontal = []
    for offset in (0, 1):
        horizontal.append(tuple(
            (idx(r, c), idx(r, c + 1)) for r in range(rows) for c in range(offset, cols, 2)
        ))

    def chained(step, starts):
        pairings = ([], [])
        for start in starts:
            cyc = _cycle(start, step, extents)
            if len(cyc) % 2 != 0:
                raise ValueError("translation cycles must have even length for perfect pairings")
            for offset in (0, 1):
                for j in range(0, len(cyc), 2):
                    pairings[offset].append((cyc[(j + offset) % len(cyc)], cyc[(j + 1 + offset) % len(cyc)]))
        return (tuple(pairings[0]), tuple(pairings[1]))

    # diagonal chains start from row 0, columns ordered 0, cols-1, ..., 1
    diag_starts, seen = [], set()
    for c in [0] + list(range(cols - 1, 0, -1)):
        if idx(0, c) not in seen:
            cyc = _cycle(idx(0, c), (1, 1), extents)
            if any(s in seen for s in cyc):
                continue
            seen.update(cyc)
            diag_starts.append(idx(0, c))
    diagonal = chained((1, 1), diag_starts)
    vertical = chained((1, 0), [idx(0, c) for c in range(cols)])
    return (
        PermutationClass(0, horizontal),
        PermutationClass(1, diagonal),
        PermutationClass(2, vertical),
    )


def build_lattice(geometry: Geometry | str, extents) -> Lattice:
    """Build a periodic lattice with its pairing classes.

    Rejects geometries whose perfect pairings cannot exist: the total site
    count must be even, and every 2D extent must be even and at least 2.
    """
    geometry = Geometry(geometry)
    extents = tuple(int(e) for e in extents)
    if any(e <= 0 for e in extents):
        raise ValueError("extents must be positive")

    if geometry is Geometry.CHAIN:
        if len(extents) != 1:
            raise ValueError("chain takes a single extent")
        n = extents[0]
        if n % 2 != 0:
            raise ValueError("site count must be even (perfect pairings impossible)")
        if n < 4:
            raise ValueError("chain needs at least 4 sites for distinct even/odd pairings")
        classes = _chain_classes(n)
    elif geometry in (Geometry.SQUARE, Geometry.TRIANGULAR):
        if len(extents) != 2:
            raise ValueError("2D lattices take two extents")
        # extent 2 would duplicate bonds under periodic wrapping
        if any(e < 4 for e in extents):
            raise ValueError("2D extents must be at least 4 (periodic boundaries)")
        if any(e % 2 != 0 for e in extents):
            raise ValueError("2D extents must be even (perfect pairings impossible)")
        classes = _square_classes(extents) if geometry is Geometry.SQUARE else _triangular_classes(extents)
    else:  # pragma: no cover
        raise ValueError(f"unsupported geometry {geometry}")

    lattice = Lattice(geometry, extents, classes)
    _validate(lattice)
    return lattice


def permutation_classes(lattice: Lattice) -> list[PermutationClass]:
    return list(lattice.classes)


def _validate(lattice: Lattice) -> None:
    n = lattice.n_sites
    seen_bonds = set()
    for cls in lattice.classes:
        for pairing in cls.pairings:
            sites = [s for pair in pairing for s in pair]
            if sorted(sites) != list(range(n)):
                raise AssertionError("pairing is not a perfect cover of all sites")
            for a, b in pairing:
                if a == b:
                    raise AssertionError("self-bond")
                key = (min(a, b), max(a, b))
                if key in seen_bonds:
                    raise AssertionError(f"bond {key} appears in two pairings")
                seen_bonds.add(key)
    degree = _EXPECTED_DEGREE[lattice.geometry]
    adj = lattice.adjacency()
    for s, nbrs in adj.items():
        if len(nbrs) != degree:
            raise AssertionError(f"site {s} has degree {len(nbrs)}, expected {degree}")


def class_parity(lattice: Lattice, class_index: int) -> list[int]:
    """Per-site 0/1 parity that alternates along the class's bond direction.

    For every bond (a, b) of the class, parity[a] != parity[b]; used to lay
    alternating two-letter Pauli strings along a bond direction.
    """
    if lattice.geometry is Geometry.CHAIN:
        return [s % 2 for s in range(lattice.n_sites)]
    rows, cols = lattice.extents
    direction = _CLASS_DIRECTIONS[lattice.geometry][class_index]
    if direction == (0, 1):
        par = lambda r, c: c % 2
    else:
        # vertical and diagonal directions both advance the row by one
        par = lambda r, c: r % 2
    return [par(r, c) for r in range(rows) for c in range(cols)]
