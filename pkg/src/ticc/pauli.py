"""Symbolic Pauli-string algebra.

Strings are kept symbolic (one letter per site) so Hamiltonians on up to
~24 sites stay representable; dense matrices are only materialized below
the dense-realization limit.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DENSE_SITE_LIMIT = 12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-site products: (left, right) -> (phase, result)
_SINGLE_PRODUCTS = {}
for _a in "IXYZ":
    for _b in "IXYZ":
        m = PAULI_MATRICES[_a] @ PAULI_MATRICES[_b]
        for _c in "IXYZ":
            p = PAULI_MATRICES[_c]
            ratio = np.trace(p.conj().T @ m) / 2
            if abs(ratio) > 0.5:
                _SINGLE_PRODUCTS[(_a, _b)] = (complex(np.round(ratio.real, 0) + 1j * np.round(ratio.imag, 0)), _c)
                break


@dataclass(frozen=True, eq=True)
class PauliString:
    """Weighted tensor product of single-site Paulis, e.g. 0.5 * 'YZIX'."""

    ops: str
    coeff: complex = 1.0

    def __post_init__(self):
        bad = set(self.ops) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli letters: {sorted(bad)}")

    @property
    def n(self) -> int:
        return len(self.ops)

    @property
    def weight(self) -> int:
        return sum(1 for c in self.ops if c != "I")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.ops) if c != "I")

    def with_coeff(self, coeff: complex) -> "PauliString":
        return replace(self, coeff=coeff)

    def commutes(self, other: "PauliString") -> bool:
        return not self.anticommutes(other)

    def anticommutes(self, other: "PauliString") -> bool:
        """True iff the strings anticommute.

        Two Pauli strings anticommute exactly when the number of sites where
        both act non-trivially with different letters is odd.
        """
        if len(self.ops) != len(other.ops):
            raise ValueError(f"length mismatch: {len(self.ops)} vs {len(other.ops)}")
        clashes = sum(
            1
            for a, b in zip(self.ops, other.ops)
            if a != "I" and b != "I" and a != b
        )
        return clashes % 2 == 1

    def __mul__(self, other: "PauliString") -> "PauliString":
        if len(self.ops) != len(other.ops):
            raise ValueError("length mismatch")
        phase = self.coeff * other.coeff
        letters = []
        for a, b in zip(self.ops, other.ops):
            p, c = _SINGLE_PRODUCTS[(a, b)]
            phase *= p
            letters.append(c)
        return PauliString("".join(letters), phase)

    def dense(self) -> np.ndarray:
        """Full 2^n x 2^n matrix; refuses above the dense site limit."""
        if self.n > DENSE_SITE_LIMIT:
            raise ValueError(f"dense realization limited to {DENSE_SITE_LIMIT} sites, got {self.n}")
        out = np.array([[self.coeff]], dtype=complex)
        for c in self.ops:
            out = np.kron(out, PAULI_MATRICES[c])
        return out

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Matrix-free action on a statevector of 2^n amplitudes.

        Site 0 is the most significant bit (matches the Kronecker order of
        :meth:`dense`).
        """
        n = self.n
        psi = state.reshape([2] * n)
        out = psi
        for site, c in enumerate(self.ops):
            if c == "I":
                continue
            out = np.swapaxes(out, 0, site)
            if c == "X":
                out = out[::-1]
            elif c == "Y":
                out = out[::-1] * np.array([-1j, 1j]).reshape([2] + [1] * (n - 1))
            else:  # Z
                out = out * np.array([1, -1]).reshape([2] + [1] * (n - 1))
            out = np.swapaxes(out, 0, site)
        return (self.coeff * out).reshape(-1)

    def two_site_factors(self, pairs) -> list[np.ndarray]:
        """Split into per-pair 4x4 factors over a perfect pairing.

        The product of the returned factors embedded on their pairs equals the
        dense string exactly; per-site phases stay with their pair and the
        overall coefficient is spread as a uniform scalar so the factors of a
        translationally invariant string remain identical.
        """
        covered = sorted(s for pair in pairs for s in pair)
        if covered != list(range(self.n)):
            raise ValueError("pairs must cover every site exactly once")
        scale = complex(self.coeff) ** (1.0 / len(pairs)) if self.coeff != 1.0 else 1.0
        return [
            scale * np.kron(PAULI_MATRICES[self.ops[a]], PAULI_MATRICES[self.ops[b]])
            for a, b in pairs
        ]

    def __str__(self):
        return f"{self.coeff:+g} * {self.ops}"


def identity(n: int) -> PauliString:
    return PauliString("I" * n, 1.0)


def from_sites(n: int, sites_ops: dict[int, str], coeff: complex = 1.0) -> PauliString:
    """Build a string acting with the given letters on the given sites."""
    ops = ["I"] * n
    for site, letter in sites_ops.items():
        if not 0 <= site < n:
            raise ValueError(f"site {site} out of range for {n} sites")
        ops[site] = letter
    return PauliString("".join(ops), coeff)
