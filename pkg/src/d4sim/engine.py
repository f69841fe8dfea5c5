"""Dense statevector engine with a dynamic register.

The register grows and shrinks at runtime: ``Alloc`` adds a qubit as a new
tensor axis, ``Drop`` removes a measured qubit (project + renormalize +
reindex).  Gates act in place on the reshaped ``(2,)*n`` amplitude array via
axis slicing.  All measurement randomness comes from one counter-based
generator stream per shot (Philox keyed by ``(seed, shot)``), so shots are
reproducible independently of execution order.

Instruction set (JSON-serializable):

    Alloc(q, basis "0"|"+"), H, X, Z, CZ, CNOT, CCZ, CCX,
    ZZPhase(q1, q2, theta), ZZZPhase(q1, q2, q3, theta),
    MeasureX(q, key), MeasureZ(q, key), Drop(q),
    CondZ(q, keys)  -- Z applied when the XOR of the named bits is 1,
    CondProgram(key, sub)  -- sub-program applied when the named bit is 1,
    Barrier.

Phase conventions: ``ZZPhase(theta)`` multiplies a basis state by
``exp(i*theta*(-1)^(z1+z2))`` and ``ZZZPhase`` likewise with three parities,
so ``ZZZPhase(+pi/8)`` puts the phase ``e^{+i pi/8}`` on |000>.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DTYPES = {"c64": np.complex64, "c128": np.complex128}
NORM_TOL = {"c64": 1e-6, "c128": 1e-12}


class EngineError(RuntimeError):
    pass


class RegisterOverflow(EngineError):
    pass


class UnknownQubit(EngineError):
    pass


class InvalidCondition(EngineError):
    pass


class ZeroProbability(EngineError):
    """A forced measurement outcome has zero amplitude."""


class NonUnitaryInstruction(EngineError):
    pass


class ResourceLimit(EngineError):
    """Peak register would exceed the memory cap."""


def shot_rng(seed: int, shot: int = 0) -> np.random.Generator:
    """Counter-based per-shot stream: independent of execution order."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), shot]))


@dataclass(frozen=True)
class Instr:
    op: str
    qubits: tuple[int, ...] = ()
    param: float | None = None
    basis: str | None = None
    key: str | None = None
    keys: tuple[str, ...] = ()
    sub: tuple["Instr", ...] = ()

    def to_dict(self) -> dict:
        d: dict = {"op": self.op}
        if self.qubits:
            d["qubits"] = list(self.qubits)
        if self.param is not None:
            d["param"] = self.param
        if self.basis is not None:
            d["basis"] = self.basis
        if self.key is not None:
            d["key"] = self.key
        if self.keys:
            d["keys"] = list(self.keys)
        if self.sub:
            d["sub"] = [s.to_dict() for s in self.sub]
        return d

    @staticmethod
    def from_dict(d: dict) -> "Instr":
        return Instr(
            op=d["op"],
            qubits=tuple(d.get("qubits", ())),
            param=d.get("param"),
            basis=d.get("basis"),
            key=d.get("key"),
            keys=tuple(d.get("keys", ())),
            sub=tuple(Instr.from_dict(s) for s in d.get("sub", ())),
        )


_UNITARY = {"H", "X", "Y", "Z", "CZ", "CNOT", "CCZ", "CCX", "ZZPhase", "ZZZPhase",
            "Barrier"}


class GateProgram:
    """Ordered instruction list with convenience builders."""

    def __init__(self, instructions: Iterable[Instr] = ()):
        self.instructions: list[Instr] = list(instructions)

    def _add(self, *a, **k) -> "GateProgram":
        self.instructions.append(Instr(*a, **k))
        return self

    def alloc(self, q: int, basis: str = "0"):
        return self._add("Alloc", (q,), basis=basis)

    def h(self, q):
        return self._add("H", (q,))

    def x(self, q):
        return self._add("X", (q,))

    def z(self, q):
        return self._add("Z", (q,))

    def y(self, q):
        return self._add("Y", (q,))

    def cz(self, a, b):
        return self._add("CZ", (a, b))

    def cnot(self, c, t):
        return self._add("CNOT", (c, t))

    def ccz(self, a, b, c):
        return self._add("CCZ", (a, b, c))

    def ccx(self, a, b, t):
        return self._add("CCX", (a, b, t))

    def zzphase(self, a, b, theta):
        return self._add("ZZPhase", (a, b), param=theta)

    def zzzphase(self, a, b, c, theta):
        return self._add("ZZZPhase", (a, b, c), param=theta)

    def measure_x(self, q, key: str):
        return self._add("MeasureX", (q,), key=key)

    def measure_z(self, q, key: str):
        return self._add("MeasureZ", (q,), key=key)

    def drop(self, q):
        return self._add("Drop", (q,))

    def cond_z(self, q, keys: Sequence[str]):
        return self._add("CondZ", (q,), keys=tuple(keys))

    def cond_program(self, key: str, sub: "GateProgram"):
        return self._add("CondProgram", key=key, sub=tuple(sub.instructions))

    def barrier(self):
        return self._add("Barrier")

    def extend(self, other: "GateProgram"):
        self.instructions.extend(other.instructions)
        return self

    # ------------------------------------------------------------- analysis

    def peak_register(self) -> int:
        live, peak = 0, 0
        for ins in self.instructions:
            if ins.op == "Alloc":
                live += 1
                peak = max(peak, live)
            elif ins.op == "Drop":
                live -= 1
        return peak

    def count_two_qubit(self) -> int:
        def count(instrs) -> int:
            n = 0
            for ins in instrs:
                if ins.op in ("CZ", "CNOT", "ZZPhase"):
                    n += 1
                elif ins.op in ("CCZ", "CCX", "ZZZPhase"):
                    n += 2  # not used for cost reports; see prep.CostReport
                elif ins.op == "CondProgram":
                    n += count(ins.sub)
            return n
        return count(self.instructions)

    def validate(self) -> None:
        """Measure-before-drop and condition-after-measure checks."""
        def walk(instrs, live: set, measured: set):
            for ins in instrs:
                if ins.op == "Alloc":
                    live.add(ins.qubits[0])
                    measured.discard(ins.qubits[0])
                elif ins.op in ("MeasureX", "MeasureZ"):
                    measured.add(ins.key)
                elif ins.op == "Drop":
                    pass  # engine checks post-measurement purity at runtime
                elif ins.op == "CondZ":
                    for k in ins.keys:
                        if k not in measured:
                            raise InvalidCondition(f"bit {k!r} not yet measured")
                elif ins.op == "CondProgram":
                    if ins.key not in measured:
                        raise InvalidCondition(f"bit {ins.key!r} not yet measured")
                    walk(ins.sub, live, measured)
        walk(self.instructions, set(), set())

    # ---------------------------------------------------------------- (de)ser

    def to_json(self) -> str:
        return json.dumps([i.to_dict() for i in self.instructions])

    @staticmethod
    def from_json(text: str) -> "GateProgram":
        return GateProgram(Instr.from_dict(d) for d in json.loads(text))


def controlled(program: GateProgram, ancilla: int) -> GateProgram:
    """Ancilla-controlled version of a unitary program."""
    out = GateProgram()
    table = {"X": "CNOT", "Z": "CZ", "CZ": "CCZ", "CNOT": "CCX"}
    for ins in program.instructions:
        if ins.op == "Barrier":
            out.barrier()
            continue
        if ins.op not in _UNITARY or ins.op not in table:
            raise NonUnitaryInstruction(
                f"cannot control instruction {ins.op!r}"
            )
        out._add(table[ins.op], (ancilla, *ins.qubits))
    return out


def _available_memory_bytes() -> int:
    try:
        with open("/proc/meminfo") as fh:
            for line in fh:
                if line.startswith("MemAvailable:"):
                    return int(line.split()[1]) * 1024
    except OSError:
        pass
    return 1 << 62


class StateVector:
    """Dense state over a dynamic register of named qubits."""

    def __init__(self, precision: str = "c128", max_qubits: int = 30,
                 enforce_memory: bool = True):
        if precision not in DTYPES:
            raise ValueError(f"unknown precision {precision!r}")
        self.precision = precision
        self.dtype = DTYPES[precision]
        self.norm_tolerance = NORM_TOL[precision]
        self.max_qubits = max_qubits
        self.enforce_memory = enforce_memory
        self.qubits: list[int] = []       # axis order
        self._axis: dict[int, int] = {}
        self.amps = np.ones((), dtype=self.dtype)
        self.global_phase = complex(1.0)  # factored out on renormalization

    # ----------------------------------------------------------- register

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def axis(self, q: int) -> int:
        try:
            return self._axis[q]
        except KeyError:
            raise UnknownQubit(f"qubit {q} is not live") from None

    def alloc(self, q: int, basis: str = "0") -> None:
        if q in self._axis:
            raise EngineError(f"qubit {q} already live")
        n = self.n_qubits + 1
        if n > self.max_qubits:
            raise RegisterOverflow(
                f"register cap {self.max_qubits} exceeded"
            )
        need = (2 ** n) * np.dtype(self.dtype).itemsize
        if self.enforce_memory and 3 * need > _available_memory_bytes():
            raise ResourceLimit(
                f"{n}-qubit state needs ~{3 * need >> 20} MiB; not available"
            )
        single = np.array([1.0, 0.0] if basis == "0"
                          else [2 ** -0.5, 2 ** -0.5], dtype=self.dtype)
        self.amps = np.multiply.outer(self.amps, single)
        self._axis[q] = self.n_qubits
        self.qubits.append(q)

    def drop(self, q: int) -> None:
        """Remove a measured qubit; its marginal must be pure |0> or |1>."""
        ax = self.axis(q)
        amps = np.moveaxis(self.amps, ax, 0)
        n0, n1 = np.linalg.norm(amps[0]), np.linalg.norm(amps[1])
        if min(n0, n1) > math.sqrt(self.norm_tolerance):
            raise EngineError(f"qubit {q} dropped without prior measurement")
        self.amps = np.ascontiguousarray(amps[0 if n0 >= n1 else 1])
        self.qubits.remove(q)
        del self._axis[q]
        for k, v in self._axis.items():
            if v > ax:
                self._axis[k] = v - 1

    # -------------------------------------------------------------- gates

    def _slice(self, pairs: dict[int, int]) -> tuple:
        idx: list = [slice(None)] * self.n_qubits
        for ax, bit in pairs.items():
            idx[ax] = bit
        return tuple(idx)

    def apply_h(self, q: int) -> None:
        ax = self.axis(q)
        a = np.moveaxis(self.amps, ax, 0)
        s0 = (a[0] + a[1]) * np.array(2 ** -0.5, dtype=self.dtype)
        s1 = (a[0] - a[1]) * np.array(2 ** -0.5, dtype=self.dtype)
        a[0], a[1] = s0, s1

    def apply_x(self, q: int) -> None:
        ax = self.axis(q)
        self.amps = np.flip(self.amps, axis=ax)

    def apply_z(self, q: int) -> None:
        self.amps[self._slice({self.axis(q): 1})] *= -1

    def apply_y(self, q: int) -> None:
        ax = self.axis(q)
        self.amps = np.flip(self.amps, axis=ax)
        self.amps[self._slice({ax: 0})] *= -1j
        self.amps[self._slice({ax: 1})] *= 1j

    def apply_cz(self, a: int, b: int) -> None:
        self.amps[self._slice({self.axis(a): 1, self.axis(b): 1})] *= -1

    def apply_ccz(self, a: int, b: int, c: int) -> None:
        self.amps[self._slice(
            {self.axis(a): 1, self.axis(b): 1, self.axis(c): 1})] *= -1

    def apply_cnot(self, c: int, t: int) -> None:
        sl = self._slice({self.axis(c): 1})
        tax = self.axis(t) - (1 if self.axis(t) > self.axis(c) else 0)
        self.amps[sl] = np.flip(self.amps[sl], axis=tax).copy()

    def apply_ccx(self, c1: int, c2: int, t: int) -> None:
        sl = self._slice({self.axis(c1): 1, self.axis(c2): 1})
        tax = self.axis(t) - sum(
            1 for c in (c1, c2) if self.axis(c) < self.axis(t))
        self.amps[sl] = np.flip(self.amps[sl], axis=tax).copy()

    def _parity_phase(self, qs: Sequence[int], theta: float) -> None:
        plus, minus = np.exp(1j * theta), np.exp(-1j * theta)
        n = len(qs)
        for bits in range(2 ** n):
            pattern = {self.axis(q): (bits >> i) & 1 for i, q in enumerate(qs)}
            parity = bin(bits).count("1") & 1
            self.amps[self._slice(pattern)] *= (minus if parity else plus)

    def apply_zzphase(self, a: int, b: int, theta: float) -> None:
        self._parity_phase((a, b), theta)

    def apply_zzzphase(self, a: int, b: int, c: int, theta: float) -> None:
        self._parity_phase((a, b, c), theta)

    # -------------------------------------------------------- measurement

    def prob_one(self, q: int) -> float:
        amps = np.moveaxis(self.amps, self.axis(q), 0)
        return float(np.linalg.norm(amps[1]) ** 2)

    def measure_z(self, q: int, rng: np.random.Generator | None = None,
                  force: int | None = None) -> int:
        """Project qubit q in the Z basis; returns outcome in {+1, -1}.

        ``force`` = +1/-1 postselects the outcome (+1 means bit 0).
        """
        p1 = self.prob_one(q)
        if force is not None:
            bit = 0 if force == +1 else 1
            p = p1 if bit else 1.0 - p1
            if p < self.norm_tolerance:
                raise ZeroProbability(
                    f"forced outcome {force:+d} on qubit {q} has probability {p:.2e}")
        else:
            if rng is None:
                raise EngineError("measurement without rng or forced outcome")
            bit = int(rng.random() < p1)
        sl = self._slice({self.axis(q): 1 - bit})
        self.amps[sl] = 0
        norm = np.linalg.norm(self.amps)
        self.amps /= np.array(norm, dtype=self.dtype)
        return +1 if bit == 0 else -1

    def measure_x(self, q: int, rng: np.random.Generator | None = None,
                  force: int | None = None) -> int:
        self.apply_h(q)
        out = self.measure_z(q, rng, force)
        self.apply_h(q)
        return out

    # ----------------------------------------------------------- analysis

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def check_norm(self) -> None:
        if abs(self.norm() - 1.0) > self.norm_tolerance * self.amps.size ** 0.5:
            raise EngineError(f"norm drift: {self.norm()}")

    def copy(self) -> "StateVector":
        out = StateVector.__new__(StateVector)
        out.__dict__.update(self.__dict__)
        out.qubits = list(self.qubits)
        out._axis = dict(self._axis)
        out.amps = self.amps.copy()
        return out

    def aligned_amps(self, qubit_order: Sequence[int]) -> np.ndarray:
        if sorted(qubit_order) != sorted(self.qubits):
            raise UnknownQubit("qubit sets differ")
        perm = [self.axis(q) for q in qubit_order]
        return np.transpose(self.amps, perm)

    def inner(self, other: "StateVector") -> complex:
        """<self|other> with matching qubit sets."""
        a = self.aligned_amps(self.qubits).reshape(-1)
        b = other.aligned_amps(self.qubits).reshape(-1)
        return complex(np.vdot(a.astype(np.complex128),
                               b.astype(np.complex128)))

    def apply_factors(self, factors: Iterable[tuple]) -> None:
        """Apply a product of Pauli/CZ factors, first factor acting last."""
        for f in reversed(list(factors)):
            name = f[0]
            if name == "X":
                self.apply_x(f[1])
            elif name == "Y":
                self.apply_y(f[1])
            elif name == "Z":
                self.apply_z(f[1])
            elif name == "CZ":
                self.apply_cz(f[1], f[2])
            else:
                raise EngineError(f"unknown factor {name!r}")

    def expval(self, factors: Iterable[tuple]) -> complex | float:
        work = self.copy()
        work.apply_factors(factors)
        val = self.inner(work)
        return val.real if abs(val.imag) < 1e-9 else val

    # ----------------------------------------------------------- sampling

    def sample(self, setting: dict[int, str], shots: int,
               seed: int) -> np.ndarray:
        """Born-rule samples; returns array (shots, n) over ``self.qubits``.

        ``setting`` maps qubit id -> "X" or "Z" basis; a reported 1 means
        outcome -1 of the chosen single-qubit Pauli.
        """
        work = self.copy()
        for q, basis in setting.items():
            if basis == "X":
                work.apply_h(q)
            elif basis != "Z":
                raise EngineError(f"unknown basis {basis!r}")
        p = np.abs(work.amps.reshape(-1).astype(np.complex128)) ** 2
        cdf = np.cumsum(p)
        cdf /= cdf[-1]
        rng = shot_rng(seed)
        idx = np.searchsorted(cdf, rng.random(shots))
        n = self.n_qubits
        bits = ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
        return bits


@dataclass
class ShotRecord:
    seed: int
    bits: dict[str, int] = field(default_factory=dict)
    herald: bool = False


def run(program: GateProgram, seed: int, precision: str = "c128",
        max_qubits: int = 30, shot: int = 0,
        forced: dict[str, int] | None = None) -> tuple[StateVector, ShotRecord]:
    """Execute a program; measurement randomness keyed by (seed, shot)."""
    program.validate()
    state = StateVector(precision=precision, max_qubits=max_qubits)
    rng = shot_rng(seed, shot)
    record = ShotRecord(seed=seed)
    _exec(program.instructions, state, rng, record, forced or {})
    return state, record


def _exec(instrs, state: StateVector, rng, record: ShotRecord,
          forced: dict[str, int]) -> None:
    for ins in instrs:
        op = ins.op
        if op == "Alloc":
            state.alloc(ins.qubits[0], ins.basis or "0")
        elif op == "H":
            state.apply_h(ins.qubits[0])
        elif op == "X":
            state.apply_x(ins.qubits[0])
        elif op == "Z":
            state.apply_z(ins.qubits[0])
        elif op == "Y":
            state.apply_y(ins.qubits[0])
        elif op == "CZ":
            state.apply_cz(*ins.qubits)
        elif op == "CNOT":
            state.apply_cnot(*ins.qubits)
        elif op == "CCZ":
            state.apply_ccz(*ins.qubits)
        elif op == "CCX":
            state.apply_ccx(*ins.qubits)
        elif op == "ZZPhase":
            state.apply_zzphase(*ins.qubits, ins.param)
        elif op == "ZZZPhase":
            state.apply_zzzphase(*ins.qubits, ins.param)
        elif op == "MeasureX":
            out = state.measure_x(ins.qubits[0], rng,
                                  force=forced.get(ins.key))
            record.bits[ins.key] = out
        elif op == "MeasureZ":
            out = state.measure_z(ins.qubits[0], rng,
                                  force=forced.get(ins.key))
            record.bits[ins.key] = out
        elif op == "Drop":
            state.drop(ins.qubits[0])
        elif op == "CondZ":
            try:
                par = 0
                for k in ins.keys:
                    par ^= (record.bits[k] == -1)
            except KeyError as e:
                raise InvalidCondition(str(e)) from None
            if par:
                state.apply_z(ins.qubits[0])
        elif op == "CondProgram":
            if ins.key not in record.bits:
                raise InvalidCondition(ins.key)
            if record.bits[ins.key] == -1:
                _exec(ins.sub, state, rng, record, forced)
        elif op == "Barrier":
            pass
        else:
            raise EngineError(f"unknown instruction {op!r}")
