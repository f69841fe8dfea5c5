"""Parametric noise channels and readout-error mitigation.

Two channels, independently switchable:

* gate noise — after each two-qubit gate, with probability ``p_depol2``,
  a uniformly random nonidentity two-qubit Pauli is inserted on the
  gate's qubits (the standard depolarizing stand-in for otherwise
  unspecified gate error);
* readout noise — independent asymmetric per-bit flips with
  ``p(read 0 | qubit 1)`` and ``p(read 1 | qubit 0)``.

Mitigation inverts the single-bit transition matrix exactly over the
support of a diagonal product estimator, which is unbiased for such
estimators in the infinite-shot limit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import GateProgram, Instr, shot_rng

__all__ = [
    "SupportTooLarge",
    "NoiseModel",
    "apply_gate_noise",
    "apply_readout_noise",
    "counts_from_bits",
    "mitigate_readout",
]

_TWO_QUBIT_OPS = ("CZ", "CNOT", "ZZPhase")

# the 15 nonidentity two-qubit Paulis, as (first-qubit, second-qubit) letters
_PAULI_PAIRS = tuple(
    (a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")
)


class SupportTooLarge(ValueError):
    """Estimator support exceeds the exact-inversion limit (16 bits)."""


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return shot_rng(int(seed))


@dataclass(frozen=True)
class NoiseModel:
    """Two-qubit depolarizing rate plus asymmetric readout flips.

    Defaults correspond to 99.8% two-qubit gate fidelity and measured
    readout transition probabilities p(0|1) = 2.37e-3, p(1|0) = 0.82e-3.
    """

    p_depol2: float = 0.002
    p_read_0given1: float = 2.37e-3
    p_read_1given0: float = 0.82e-3
    gate_noise: bool = True
    readout_noise: bool = True

    def __post_init__(self):
        for name in ("p_depol2", "p_read_0given1", "p_read_1given0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if np.linalg.det(self.readout_matrix()) <= 0.0:
            raise ValueError("readout transition matrix is singular")

    def readout_matrix(self) -> np.ndarray:
        """Column-stochastic M with M[read, true]."""
        p01 = self.p_read_0given1
        p10 = self.p_read_1given0
        return np.array([[1.0 - p10, p01], [p10, 1.0 - p01]])

    def disabled(self) -> "NoiseModel":
        return replace(self, gate_noise=False, readout_noise=False)

    # -- program hook (matches prep.PrepConfig.noise.insert) -------------
    def insert(self, prog: GateProgram, rng) -> GateProgram:
        return apply_gate_noise(prog, self, rng)

    # -- (de)serialization ------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "p_depol2": self.p_depol2,
            "p_read_0given1": self.p_read_0given1,
            "p_read_1given0": self.p_read_1given0,
            "gate_noise": self.gate_noise,
            "readout_noise": self.readout_noise,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(d: Mapping) -> "NoiseModel":
        allowed = {
            "p_depol2", "p_read_0given1", "p_read_1given0",
            "gate_noise", "readout_noise",
        }
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown noise fields {sorted(unknown)}")
        return NoiseModel(**dict(d))

    @staticmethod
    def from_json(text: str) -> "NoiseModel":
        return NoiseModel.from_dict(json.loads(text))


# ------------------------------------------------------------- gate noise


def apply_gate_noise(prog: GateProgram, model: NoiseModel,
                     seed) -> GateProgram:
    """Copy of ``prog`` with stochastic Pauli insertions.

    After each two-qubit gate, with probability ``p_depol2``, one of the
    15 nonidentity two-qubit Paulis (uniform) is appended on the gate's
    qubits. Conditional sub-programs are traversed recursively. The input
    program is never mutated.
    """
    if not model.gate_noise or model.p_depol2 == 0.0:
        return prog
    rng = _as_rng(seed)

    def corrupt(instrs: Iterable[Instr]) -> list[Instr]:
        out: list[Instr] = []
        for ins in instrs:
            if ins.op == "CondProgram":
                out.append(replace(ins, sub=tuple(corrupt(ins.sub))))
                continue
            out.append(ins)
            if ins.op in _TWO_QUBIT_OPS and rng.random() < model.p_depol2:
                pair = _PAULI_PAIRS[rng.integers(len(_PAULI_PAIRS))]
                for letter, q in zip(pair, ins.qubits):
                    if letter != "I":
                        out.append(Instr(letter, (q,)))
        return out

    return GateProgram(corrupt(prog.instructions))


# ---------------------------------------------------------- readout noise


def apply_readout_noise(bits: np.ndarray, model: NoiseModel,
                        seed) -> np.ndarray:
    """Independent asymmetric flips on a 0/1 bit array (any shape)."""
    bits = np.asarray(bits)
    if not model.readout_noise:
        return bits.copy()
    rng = _as_rng(seed)
    u = rng.random(bits.shape)
    flip = np.where(bits == 1, u < model.p_read_0given1,
                    u < model.p_read_1given0)
    return bits ^ flip.astype(bits.dtype)


def counts_from_bits(bits: np.ndarray) -> dict[str, int]:
    """Histogram shot rows -> {'0110...': count}."""
    bits = np.asarray(bits)
    out: dict[str, int] = {}
    for row in bits:
        key = "".join("1" if b else "0" for b in row)
        out[key] = out.get(key, 0) + 1
    return out


def mitigate_readout(support: Sequence[int], counts: Mapping[str, float],
                     model: NoiseModel) -> float:
    """Readout-corrected ⟨∏_{q∈support} Z_q⟩ from bitstring counts.

    ``counts`` maps measured bitstrings ('0'/'1' characters, a reported 1
    meaning outcome -1) to counts; ``support`` indexes into those strings.
    The marginal distribution over the support is transformed by the
    inverse transition matrix on each bit before the parity is evaluated.
    Exact tensor inversion is used, so the support is capped at 16 bits.
    """
    support = list(support)
    k = len(support)
    if k > 16:
        raise SupportTooLarge(f"support of {k} bits exceeds 16")
    total = float(sum(counts.values()))
    if total <= 0.0:
        raise ValueError("empty counts")
    if k == 0:
        return 1.0
    p = np.zeros((2,) * k)
    for key, c in counts.items():
        idx = tuple(int(key[q]) for q in support)
        p[idx] += c
    p /= total
    if model.readout_noise:
        minv = np.linalg.inv(model.readout_matrix())
        for axis in range(k):
            p = np.tensordot(minv, p, axes=([1], [axis]))
            p = np.moveaxis(p, 0, axis)
    parity = np.ones((2,) * k)
    for axis in range(k):
        shape = [1] * k
        shape[axis] = 2
        parity = parity * np.array([1.0, -1.0]).reshape(shape)
    return float((parity * p).sum())
