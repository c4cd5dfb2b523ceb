"""Spin Hamiltonians as Pauli-string sums, plus anticommuting decompositions.

Supported models: antiferromagnetic transverse-field Ising (ZZ bonds + gX
fields) and the Heisenberg model in a field (XX+YY+ZZ bonds + per-axis
fields). Bond terms are bucketed by (permutation class, pairing) so circuit
layers can be read straight off the structure.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lattice import Lattice, class_parity
from .pauli import PAULI_MATRICES, PauliString, from_sites

_FIELD_CLASS = 0  # all on-site field terms ride with class 0 (keeps parts TI and sums exact)


@dataclass(frozen=True)
class Hamiltonian:
    lattice: Lattice
    # (class_index, pairing_index) -> bond terms, in pairing order
    bond_terms: dict[tuple[int, int], tuple[PauliString, ...]]
    field_terms: tuple[PauliString, ...]
    kind: str = "custom"
    params: tuple = ()

    @property
    def n(self) -> int:
        return self.lattice.n_sites

    @property
    def terms(self) -> list[PauliString]:
        out = []
        for key in sorted(self.bond_terms):
            out.extend(self.bond_terms[key])
        out.extend(self.field_terms)
        return out

    @cached_property
    def norm_bound(self) -> float:
        return float(sum(abs(t.coeff) for t in self.terms))

    def two_site_groups(self) -> list[tuple[tuple[tuple[int, int], ...], np.ndarray]]:
        """Exact regrouping of H into parallel two-site operators.

        Returns (pairs, 4x4 Hermitian block) per pairing layer; embedding each
        block on its pairs and summing reproduces H. Field terms are folded
        into the two pairings of their class with weight 1/2 each.
        """
        groups = []
        field_by_class: dict[int, list[PauliString]] = {}
        for t in self.field_terms:
            field_by_class.setdefault(_FIELD_CLASS, []).append(t)
        for cls in self.lattice.classes:
            for p_idx, pairing in enumerate(cls.pairings):
                terms = self.bond_terms.get((cls.class_index, p_idx), ())
                per_pair: dict[tuple[int, int], np.ndarray] = {tuple(p): np.zeros((4, 4), complex) for p in pairing}
                for t in terms:
                    a, b = t.support
                    key = (a, b) if (a, b) in per_pair else (b, a)
                    op_a, op_b = t.ops[key[0]], t.ops[key[1]]
                    per_pair[key] = per_pair[key] + t.coeff * np.kron(PAULI_MATRICES[op_a], PAULI_MATRICES[op_b])
                for t in field_by_class.get(cls.class_index, []):
                    (site,) = t.support
                    for key in per_pair:
                        if site in key:
                            letter = t.ops[site]
                            half = 0.5 * t.coeff
                            if key[0] == site:
                                per_pair[key] = per_pair[key] + half * np.kron(PAULI_MATRICES[letter], np.eye(2))
                            else:
                                per_pair[key] = per_pair[key] + half * np.kron(np.eye(2), PAULI_MATRICES[letter])
                groups.append((tuple(per_pair), [per_pair[k] for k in per_pair]))
        # collapse to (pairs, blocks) form
        return [(pairs, blocks) for pairs, blocks in groups]

    def matvec(self, state: np.ndarray) -> np.ndarray:
        """Matrix-free H @ state via grouped two-site applications."""
        from .statevector import apply_two_site_operator

        n = self.n
        out = np.zeros_like(state)
        for pairs, blocks in self._matvec_groups:
            for pair, block in zip(pairs, blocks):
                out += apply_two_site_operator(state, block, pair, n)
        return out

    @cached_property
    def _matvec_groups(self):
        return self.two_site_groups()

    def dense(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (gated by the Pauli dense-site limit)."""
        mat = np.zeros((2 ** self.n, 2 ** self.n), dtype=complex)
        for t in self.terms:
            mat += t.dense()
        return mat

    def expectation(self, state: np.ndarray) -> float:
        return float(np.real(np.vdot(state, self.matvec(state))))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": list(self.params),
            "lattice": self.lattice.to_dict(),
            "terms": [{"word": t.ops, "coeff": float(np.real(t.coeff))} for t in self.terms],
        }


def _bond_bucket(lattice: Lattice, word_fn) -> dict[tuple[int, int], tuple[PauliString, ...]]:
    buckets = {}
    for cls in lattice.classes:
        for p_idx, pairing in enumerate(cls.pairings):
            buckets[(cls.class_index, p_idx)] = tuple(word_fn(a, b) for a, b in pairing)
    return buckets


def build_tfim(lattice: Lattice, g: float) -> Hamiltonian:
    """Antiferromagnetic TFIM: sum of Z_i Z_j over bonds plus g * sum X_i."""
    n = lattice.n_sites
    bonds = _bond_bucket(lattice, lambda a, b: from_sites(n, {a: "Z", b: "Z"}, 1.0))
    fields = tuple(from_sites(n, {i: "X"}, float(g)) for i in range(n)) if g != 0 else ()
    return Hamiltonian(lattice, bonds, fields, kind="tfim", params=(float(g),))


def build_heisenberg_field(lattice: Lattice, h_x: float, h_y: float, h_z: float) -> Hamiltonian:
    """Heisenberg model in a field: per axis O, bonds O_i O_j plus h_O * sum O_i."""
    n = lattice.n_sites
    buckets: dict[tuple[int, int], list[PauliString]] = {}
    for cls in lattice.classes:
        for p_idx, pairing in enumerate(cls.pairings):
            terms = []
            for a, b in pairing:
                terms.extend(from_sites(n, {a: o, b: o}, 1.0) for o in "XYZ")
            buckets[(cls.class_index, p_idx)] = tuple(terms)
    fields = []
    for o, h in (("X", h_x), ("Y", h_y), ("Z", h_z)):
        if h != 0:
            fields.extend(from_sites(n, {i: o}, float(h)) for i in range(n))
    return Hamiltonian(lattice, buckets, tuple(fields), kind="heisenberg",
                       params=(float(h_x), float(h_y), float(h_z)))


def anticommutes(a: PauliString, b: PauliString) -> bool:
    return a.anticommutes(b)


@dataclass(frozen=True)
class DecompositionPart:
    """One sub-Hamiltonian with the Pauli string that conjugation-flips it."""

    class_index: int
    part_index: int
    bond_terms: dict[int, tuple[PauliString, ...]]  # pairing_index -> terms
    field_terms: tuple[PauliString, ...]
    k_string: PauliString

    @property
    def terms(self) -> list[PauliString]:
        out = []
        for p_idx in sorted(self.bond_terms):
            out.extend(self.bond_terms[p_idx])
        out.extend(self.field_terms)
        return out


@dataclass(frozen=True)
class AnticommutingDecomposition:
    hamiltonian: Hamiltonian
    parts: tuple[DecompositionPart, ...]

    @property
    def d(self) -> int:
        return self.hamiltonian.lattice.d

    @property
    def eta(self) -> int:
        return len(self.parts) // self.d

    def parts_for_class(self, class_index: int) -> list[DecompositionPart]:
        return [p for p in self.parts if p.class_index == class_index]

    def verify(self) -> None:
        """Check the defining algebra symbolically.

        Every term of every part must anticommute with the part's K string,
        and the multiset sum of all part terms must equal the Hamiltonian.
        """
        for part in self.parts:
            for term in part.terms:
                if not term.anticommutes(part.k_string):
                    raise ValueError(
                        f"term {term.ops} does not anticommute with K={part.k_string.ops} "
                        f"(class {part.class_index}, part {part.part_index})"
                    )
        lhs: dict[str, complex] = {}
        for part in self.parts:
            for t in part.terms:
                lhs[t.ops] = lhs.get(t.ops, 0.0) + t.coeff
        rhs: dict[str, complex] = {}
        for t in self.hamiltonian.terms:
            rhs[t.ops] = rhs.get(t.ops, 0.0) + t.coeff
        lhs = {w: c for w, c in lhs.items() if c != 0}
        rhs = {w: c for w, c in rhs.items() if c != 0}
        if lhs != rhs:
            raise ValueError("sum of decomposition parts does not reproduce the Hamiltonian")


# per-part (bond letter, field letter, parity->K letter map)
_HEISENBERG_SCHEME = [
    ("X", "Y", ("X", "Z")),  # XX bonds with h_Y fields, K = X Z X Z ...
    ("Y", "Z", ("X", "Y")),  # YY bonds with h_Z fields, K = X Y X Y ...
    ("Z", "X", ("Y", "Z")),  # ZZ bonds with h_X fields, K = Y Z Y Z ...
]


def _k_string(lattice: Lattice, class_index: int, letters: tuple[str, str]) -> PauliString:
    parity = class_parity(lattice, class_index)
    return PauliString("".join(letters[p] for p in parity), 1.0)


def decompose_anticommuting(hamiltonian: Hamiltonian, scheme: str = "auto") -> AnticommutingDecomposition:
    """Split H into parts H_i with Pauli strings K_i obeying K H_i K = -H_i.

    The TFIM scheme uses one part per permutation class (alternating Y/Z
    string along the bond direction); the Heisenberg scheme uses three parts
    per class pairing (XX, h_Y), (YY, h_Z), (ZZ, h_X). Field terms are
    attached to the class-0 parts. The anticommutation algebra is verified
    symbolically before returning.
    """
    if scheme == "auto":
        scheme = hamiltonian.kind
    lattice = hamiltonian.lattice
    if lattice.n_sites % 2 != 0:
        raise ValueError("alternating control strings need an even site count")

    fields_by_letter: dict[str, list[PauliString]] = {}
    for t in hamiltonian.field_terms:
        (site,) = t.support
        fields_by_letter.setdefault(t.ops[site], []).append(t)

    parts = []
    if scheme == "tfim":
        for cls in lattice.classes:
            k = _k_string(lattice, cls.class_index, ("Y", "Z"))
            bond = {p: hamiltonian.bond_terms[(cls.class_index, p)] for p in range(len(cls.pairings))}
            fields = tuple(fields_by_letter.get("X", ())) if cls.class_index == _FIELD_CLASS else ()
            parts.append(DecompositionPart(cls.class_index, 0, bond, fields, k))
    elif scheme == "heisenberg":
        for cls in lattice.classes:
            for part_index, (bond_letter, field_letter, k_letters) in enumerate(_HEISENBERG_SCHEME):
                k = _k_string(lattice, cls.class_index, k_letters)
                bond = {
                    p: tuple(t for t in hamiltonian.bond_terms[(cls.class_index, p)]
                             if t.ops[t.support[0]] == bond_letter)
                    for p in range(len(cls.pairings))
                }
                fields = ()
                if cls.class_index == _FIELD_CLASS:
                    fields = tuple(fields_by_letter.get(field_letter, ()))
                parts.append(DecompositionPart(cls.class_index, part_index, bond, fields, k))
    else:
        raise ValueError(
            f"no registered anticommuting scheme for kind '{scheme}'; "
            "build an AnticommutingDecomposition with custom K_i strings instead"
        )

    decomposition = AnticommutingDecomposition(hamiltonian, tuple(parts))
    decomposition.verify()
    return decomposition
