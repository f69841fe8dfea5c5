"""Exact states restricted to a fixed triangle-parity sector.

Every operator in the model (star and triangle terms, logical strings,
decorated anyon strings) maps a computational basis state to a phase times
another basis state and preserves all triangle parities.  States reachable
from a basis state therefore live in the span of the basis states sharing one
triangle syndrome — dimension 4096 on the 3x3 torus instead of 2^27 — and all
exact-mode computations run there.

Basis states are stored as sorted uint64 bitmasks (bit q = qubit q) with a
complex amplitude array.  Applying an X-type operator XORs a mask into the
support and re-sorts; diagonal operators multiply phases computed by bit
arithmetic.  ``to_dense`` scatters into a full 2^n vector (qubit 0 = most
significant bit, matching the engine's axis order when qubits are allocated
in index order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lattice import COLORS, KagomeTorus


def _parity(z: np.ndarray, mask: int) -> np.ndarray:
    return (np.bitwise_count(z & np.uint64(mask)) & 1).astype(np.int8)


def triangle_masks(torus: KagomeTorus) -> list[int]:
    return [sum(1 << v for v in t.vertices) for t in torus.triangles]


def enumerate_sector_basis(torus: KagomeTorus,
                           syndrome: Sequence[int] | None = None) -> np.ndarray:
    """All basis states with the given per-triangle parities (+1 default).

    Enumerates each color class independently (triangles are single-colored)
    and combines; returns a sorted uint64 array.
    """
    want = ([1] * torus.n_triangles if syndrome is None else list(syndrome))
    per_color: list[np.ndarray] = []
    for color in COLORS:
        qubits = torus.vertices_of_color(color)
        tris = torus.triangles_of_color(color)
        local = {q: i for i, q in enumerate(qubits)}
        masks = [sum(1 << local[v] for v in t.vertices) for t in tris]
        signs = [want[t.index] for t in tris]
        cand = np.arange(2 ** len(qubits), dtype=np.uint64)
        keep = np.ones(len(cand), dtype=bool)
        for m, s in zip(masks, signs):
            par = _parity(cand, m)
            keep &= (par == (0 if s == 1 else 1))
        good = cand[keep]
        # spread back to global qubit positions
        spread = np.zeros(len(good), dtype=np.uint64)
        for i, q in enumerate(qubits):
            spread |= ((good >> np.uint64(i)) & np.uint64(1)) << np.uint64(q)
        per_color.append(spread)
    out = per_color[0]
    for nxt in per_color[1:]:
        out = (out[:, None] | nxt[None, :]).reshape(-1)
    out.sort()
    return out


@dataclass
class SectorState:
    """Amplitudes over a fixed triangle-sector basis."""

    torus: KagomeTorus
    support: np.ndarray   # sorted uint64 masks
    amps: np.ndarray      # complex128, same length

    @staticmethod
    def basis_state(torus: KagomeTorus, z: int = 0) -> "SectorState":
        tm = triangle_masks(torus)
        syndrome = [1 - 2 * (bin(z & m).count("1") & 1) for m in tm]
        support = enumerate_sector_basis(torus, syndrome)
        amps = np.zeros(len(support), dtype=np.complex128)
        pos = int(np.searchsorted(support, np.uint64(z)))
        assert support[pos] == z
        amps[pos] = 1.0
        return SectorState(torus, support, amps)

    @staticmethod
    def product_state(torus: KagomeTorus, alpha: np.ndarray,
                      beta: np.ndarray) -> "SectorState":
        """Projection of ⊗_q (alpha_q|0> + beta_q|1>) onto the B=+1 sector.

        Not normalized: amplitudes are those of the product state on the
        sector's basis states.
        """
        support = enumerate_sector_basis(torus)
        n = torus.n_vertices
        amps = np.ones(len(support), dtype=np.complex128)
        for q in range(n):
            bit = (support >> np.uint64(q)) & np.uint64(1)
            amps *= np.where(bit == 1, beta[q], alpha[q])
        return SectorState(torus, support, amps)

    # ------------------------------------------------------------ plumbing

    def copy(self) -> "SectorState":
        return SectorState(self.torus, self.support.copy(), self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> "SectorState":
        self.amps /= self.norm()
        return self

    def inner(self, other: "SectorState") -> complex:
        """<self|other>; supports may differ (then overlap is on the joint)."""
        if len(self.support) == len(other.support) and \
                np.array_equal(self.support, other.support):
            return complex(np.vdot(self.amps, other.amps))
        pos = np.searchsorted(self.support, other.support)
        pos = np.clip(pos, 0, len(self.support) - 1)
        hit = self.support[pos] == other.support
        return complex(np.vdot(self.amps[pos[hit]], other.amps[hit]))

    # ----------------------------------------------------------- operators

    def apply_xor(self, mask: int) -> None:
        """X on every qubit in ``mask``."""
        self.support ^= np.uint64(mask)
        order = np.argsort(self.support)
        self.support = self.support[order]
        self.amps = self.amps[order]

    def phase_z(self, mask: int) -> None:
        """Product of Z over the qubits in ``mask``."""
        self.amps *= 1.0 - 2.0 * _parity(self.support, mask)

    def phase_cz(self, a: int, b: int) -> None:
        both = ((self.support >> np.uint64(a)) &
                (self.support >> np.uint64(b)) & np.uint64(1))
        self.amps *= 1.0 - 2.0 * both.astype(np.int8)

    def apply_factors(self, factors: Iterable[tuple]) -> None:
        """Product of X/Y/Z/CZ factors, first factor acting last."""
        xmask = 0
        for f in reversed(list(factors)):
            kind = f[0]
            if kind == "X":
                xmask ^= 1 << f[1]
            elif kind == "Y":
                if xmask:
                    self.apply_xor(xmask)
                    xmask = 0
                q = np.uint64(f[1])
                bit = (self.support >> q) & np.uint64(1)
                self.amps *= np.where(bit == 1, -1j, 1j)  # Y|0>=i|1>, Y|1>=-i|0>
                xmask ^= 1 << f[1]
            elif kind == "Z":
                if xmask:  # flush pending X's so Z sees the right bits
                    self.apply_xor(xmask)
                    xmask = 0
                self.phase_z(1 << f[1])
            elif kind == "CZ":
                if xmask:
                    self.apply_xor(xmask)
                    xmask = 0
                self.phase_cz(f[1], f[2])
            else:
                raise ValueError(f"unknown factor {kind!r}")
        if xmask:
            self.apply_xor(xmask)

    def expval(self, factors: Iterable[tuple]) -> complex | float:
        work = self.copy()
        work.apply_factors(factors)
        val = self.inner(work)
        return val.real if abs(val.imag) < 1e-9 else val

    def project_factors(self, factors: Sequence[tuple], sign: int = +1) -> None:
        """Apply (1 + sign * O)/2 for a Pauli/CZ product O."""
        work = self.copy()
        work.apply_factors(factors)
        if np.array_equal(work.support, self.support):
            self.amps = 0.5 * (self.amps + sign * work.amps)
        else:
            raise ValueError("projector leaves the sector")

    # ------------------------------------------------------------- export

    def to_dense(self, dtype=np.complex128) -> np.ndarray:
        """Full statevector; qubit 0 is the most significant bit."""
        n = self.torus.n_vertices
        out = np.zeros(2 ** n, dtype=dtype)
        # reverse bit order: engine allocates qubit 0 first (axis 0 = MSB)
        idx = np.zeros(len(self.support), dtype=np.uint64)
        for q in range(n):
            bit = (self.support >> np.uint64(q)) & np.uint64(1)
            idx |= bit << np.uint64(n - 1 - q)
        out[idx] = self.amps
        return out

    def diagonal_probability(self, mask: int) -> float:
        """P(even parity of Z over ``mask``) for the current state."""
        par = _parity(self.support, mask)
        w = np.abs(self.amps) ** 2
        return float(w[par == 0].sum() / w.sum())

    def project_diagonal(self, mask: int, sign: int) -> float:
        """Project onto the ±1 eigenspace of a Z-product; returns weight."""
        par = _parity(self.support, mask)
        keep = (par == (0 if sign == 1 else 1))
        w = float((np.abs(self.amps[keep]) ** 2).sum())
        self.amps[~keep] = 0.0
        return w
