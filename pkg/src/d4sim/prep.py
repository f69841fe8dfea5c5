"""Adaptive ground-state preparation.

Two program variants:

* ``naive``: all vertices and one ancilla per star live at once.  Ancillas
  start in |+>, get entangled by three-qubit phase gates on the superlattice
  faces (each decomposed into CNOT / ZZPhase / CNOT, 3 two-qubit gates), and
  are then CNOT-coupled to the six tip qubits of their star before an X-basis
  measurement.  On a 3x3 torus: 36 qubits, 108 two-qubit gates.

* ``compiled``: the CZ picture with qubit reuse.  Green and blue vertices
  start in |+>; their vertex-ancilla CZ chains are compressed by absorbing
  each second triple of CZs into one ancilla-ancilla CNOT (valid because the
  three CZs act on a fresh cluster fragment), the face gates are applied in
  up/down pairs of four two-qubit gates each, green and blue ancillas are
  measured early so red vertices can reuse their slots, and a final layer of
  Hadamards returns the data to the computational basis.  On a 3x3 torus:
  peak 30 live qubits, 42 + 36 = 78 two-qubit gates.

Ancilla outcomes of -1 mark Abelian charges; a feed-forward plan pairs them
per color and connects each pair by a Z-string along the one-color
superlattice.  Odd per-color parity is impossible noiselessly and raises the
herald flag.

Exact evaluation uses an ancilla-frame representation: the global state is
a sum over the 2^(n_anc) ancilla patterns `a` of c(a) |k(a)>|x(a)>, where
every live qubit's basis-state label is an affine function of `a` and c is an
arbitrary complex table.  All gates appearing in either variant preserve this
form, so the full 27-qubit preparation reduces to arrays of 512 amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import EngineError, GateProgram, ShotRecord, ZeroProbability, shot_rng
from .lattice import COLORS, SUPER_STEPS, Color, KagomeTorus
from .modelops import _STEP_QUBIT, logical
from .sector import SectorState

THETA = math.pi / 8

SECTOR_ORDER = (
    (Color.R, "H"), (Color.G, "H"), (Color.B, "H"),
    (Color.R, "V"), (Color.G, "V"), (Color.B, "V"),
)


class HeraldedDiscard(EngineError):
    pass


def sector_admissible(signs) -> bool:
    """Global star-product constraint on the six logical Z signs.

    In order (RH, GH, BH, RV, GV, BV): ground states exist only when the
    horizontal triple is trivial, the vertical triple is trivial, or the two
    triples coincide — 1 + 7 + 7 + 7 = 22 sectors.
    """
    h = tuple(1 if s < 0 else 0 for s in signs[:3])
    v = tuple(1 if s < 0 else 0 for s in signs[3:])
    return h == (0, 0, 0) or v == (0, 0, 0) or h == v


@dataclass
class PrepConfig:
    torus: KagomeTorus
    variant: str = "naive"
    sector: tuple[int, ...] = (1, 1, 1, 1, 1, 1)
    seed: int = 0
    shot: int = 0
    noise: object | None = None
    discard_on_odd_herald: bool = True
    error_on_herald: bool = False
    forced_outcomes: dict[int, int] | None = None   # star -> ±1


@dataclass
class CostReport:
    variant: str
    two_qubit_gates: int
    peak_register: int

    def to_dict(self) -> dict:
        return {"variant": self.variant,
                "two_qubit_gates": self.two_qubit_gates,
                "peak_register": self.peak_register}


@dataclass
class FeedForwardPlan:
    pairs: dict[Color, list[tuple[int, int]]]
    strings: list[tuple[int, ...]]          # Z-support per pair, same order
    odd_parity: dict[Color, bool]

    @property
    def herald(self) -> bool:
        return any(self.odd_parity.values())


# ------------------------------------------------------------- programs

def anc_id(torus: KagomeTorus, s: int) -> int:
    return torus.n_vertices + s


def _face_pairs(torus: KagomeTorus):
    """(up, down) face pairs sharing an edge; covers all faces once."""
    return [(torus.faces[2 * s], torus.faces[2 * s + 1])
            for s in range(torus.n_stars)]


def naive_program(torus: KagomeTorus) -> tuple[GateProgram, list[int]]:
    prog = GateProgram()
    ancillas = [anc_id(torus, s) for s in range(torus.n_stars)]
    for v in range(torus.n_vertices):
        prog.alloc(v, "0")
    for p in ancillas:
        prog.alloc(p, "+")
    for face in torus.faces:
        a, b, c = (anc_id(torus, s) for s in face.stars)
        theta = face.sign * THETA
        prog.cnot(a, b).zzphase(b, c, theta).cnot(a, b)
    for s in range(torus.n_stars):
        for v in torus.stars[s].tips:
            prog.cnot(anc_id(torus, s), v)
    prog.barrier()
    for s in range(torus.n_stars):
        prog.measure_x(anc_id(torus, s), f"a{s}").drop(anc_id(torus, s))
    return prog, ancillas


def _absorbed_chain(prog: GateProgram, torus: KagomeTorus, color: Color):
    """Vertex-ancilla CZ chain for one color, compressed to 12 gates.

    For each superlattice pair of same-color stars (lexicographic order) the
    three shared tip qubits are CZ'd onto the first ancilla; the second
    ancilla's three CZs are absorbed into a single CNOT onto the first.
    """
    stars = torus.stars_of_color(color)
    tips = {s: set(torus.stars[s].tips) for s in stars}
    from itertools import combinations
    for a, b in combinations(stars, 2):
        shared = sorted(tips[a] & tips[b])
        if not shared:
            continue
        for v in shared:
            prog.cz(v, anc_id(torus, a))
        prog.cnot(anc_id(torus, b), anc_id(torus, a))


def compiled_program(torus: KagomeTorus) -> tuple[GateProgram, list[int]]:
    prog = GateProgram()
    ancillas = [anc_id(torus, s) for s in range(torus.n_stars)]
    gb_vertices = (torus.vertices_of_color(Color.G)
                   + torus.vertices_of_color(Color.B))
    for v in sorted(gb_vertices):
        prog.alloc(v, "+")
    for p in ancillas:
        prog.alloc(p, "+")
    _absorbed_chain(prog, torus, Color.G)
    _absorbed_chain(prog, torus, Color.B)
    for up, dn in _face_pairs(torus):
        ua, ub, uc = (anc_id(torus, s) for s in up.stars)
        dd = anc_id(torus, dn.stars[2])
        # shared edge (ub, uc): conjugating one shared leg links both faces
        prog.cnot(ub, uc)
        prog.zzphase(ua, uc, THETA)
        prog.zzphase(uc, dd, -THETA)
        prog.cnot(ub, uc)
    for c in (Color.G, Color.B):
        for s in torus.stars_of_color(c):
            prog.measure_x(anc_id(torus, s), f"a{s}").drop(anc_id(torus, s))
    for v in sorted(torus.vertices_of_color(Color.R)):
        prog.alloc(v, "+")
    for s in torus.stars_of_color(Color.R):
        for v in torus.stars[s].tips:
            prog.cz(v, anc_id(torus, s))
    for s in torus.stars_of_color(Color.R):
        prog.measure_x(anc_id(torus, s), f"a{s}").drop(anc_id(torus, s))
    prog.barrier()
    for v in range(torus.n_vertices):
        prog.h(v)
    return prog, ancillas


def compile_prep(torus: KagomeTorus, variant: str = "compiled"
                 ) -> tuple[GateProgram, CostReport]:
    if variant == "naive":
        prog, _ = naive_program(torus)
    elif variant == "compiled":
        prog, _ = compiled_program(torus)
    else:
        raise ValueError("variant must be 'naive' or 'compiled'")
    return prog, CostReport(variant, prog.count_two_qubit(),
                            prog.peak_register())


# -------------------------------------------------------- feed-forward

def _superlattice_bfs(torus: KagomeTorus, start: int, goal: int
                      ) -> list[tuple[int, int]]:
    """Shortest step sequence between two same-color stars."""
    from collections import deque
    seen = {start: []}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s == goal:
            return seen[s]
        i, j = torus.star_coords(s)
        for step in SUPER_STEPS:
            nxt = torus.star_index(i + step[0], j + step[1])
            if nxt not in seen:
                seen[nxt] = seen[s] + [step]
                queue.append(nxt)
    raise AssertionError("superlattice is connected")


def z_string_between(torus: KagomeTorus, s_from: int, s_to: int
                     ) -> tuple[int, ...]:
    """Qubits whose Z-product toggles exactly the two given same-color stars."""
    if torus.stars[s_from].color != torus.stars[s_to].color:
        raise ValueError("stars must share a color")
    qubits = []
    x, y = torus.star_coords(s_from)
    for step in _superlattice_bfs(torus, s_from, s_to):
        (oi, oj), slot = _STEP_QUBIT[step]
        qubits.append(torus.vertex_index(x + oi, y + oj, slot))
        x, y = x + step[0], y + step[1]
    return tuple(qubits)


def _distance(torus: KagomeTorus, a: int, b: int) -> int:
    return len(_superlattice_bfs(torus, a, b))


def pair_anyons(outcomes: dict[int, int], torus: KagomeTorus
                ) -> FeedForwardPlan:
    """Greedy nearest pairing of -1 outcomes per color.

    Ties broken by lowest star index; any valid pairing yields the same
    repaired state, greediness is only for reproducibility.
    """
    pairs: dict[Color, list[tuple[int, int]]] = {c: [] for c in COLORS}
    strings: list[tuple[int, ...]] = []
    odd: dict[Color, bool] = {}
    for color in COLORS:
        excited = sorted(s for s in torus.stars_of_color(color)
                         if outcomes.get(s, +1) == -1)
        odd[color] = len(excited) % 2 == 1
        if odd[color]:
            excited = excited[:-1]      # leftover stays unpaired
        while excited:
            best = min(
                ((a_i, b_i) for k, a_i in enumerate(excited)
                 for b_i in excited[k + 1:]),
                key=lambda ab: (_distance(torus, *ab), ab[0], ab[1]),
            )
            pairs[color].append(best)
            strings.append(z_string_between(torus, *best))
            excited = [s for s in excited if s not in best]
    return FeedForwardPlan(pairs, strings, odd)


# --------------------------------------------------- ancilla-frame state

class FrameState:
    """Exact simulator for preparation programs.

    Supports the gate alphabet of both variants plus Pauli noise insertions
    and the post-preparation string operators (X / Z / CZ on data qubits in
    the computational basis).
    """

    def __init__(self, ancillas: list[int]):
        self.anc_index = {p: k for k, p in enumerate(ancillas)}
        n = len(ancillas)
        dim = 1 << n
        self.c = np.full(dim, dim ** -0.5, dtype=np.complex128)
        idx = np.arange(dim, dtype=np.uint64)
        self._bit = [(idx >> np.uint64(k)) & np.uint64(1) for k in range(n)]
        # affine ket label per live qubit: (const, mask over ancilla vars)
        self.anc_form: dict[int, tuple[int, int]] = {
            p: (0, 1 << k) for p, k in self.anc_index.items()}
        self.data_form: dict[int, tuple[int, int]] = {}
        self.data_basis: dict[int, str] = {}
        self.outcomes: dict[str, int] = {}

    # -- helpers ---------------------------------------------------------
    def _bits(self, form: tuple[int, int]) -> np.ndarray:
        const, mask = form
        out = np.zeros_like(self._bit[0])
        k = 0
        while mask >> k:
            if (mask >> k) & 1:
                out ^= self._bit[k]
            k += 1
        if const:
            out ^= np.uint64(1)
        return out

    def _form(self, q: int) -> tuple[int, int]:
        if q in self.anc_form:
            return self.anc_form[q]
        return self.data_form[q]

    def _xor_into(self, q: int, other: tuple[int, int]) -> None:
        const, mask = self._form(q)
        oc, om = other
        new = (const ^ oc, mask ^ om)
        if q in self.anc_form:
            self.anc_form[q] = new
        else:
            self.data_form[q] = new

    def _phase_if(self, bits: np.ndarray) -> None:
        self.c = self.c * np.where(bits == 1, -1.0, 1.0)

    # -- gates -----------------------------------------------------------
    def alloc(self, q: int, basis: str) -> None:
        if q in self.anc_form:          # pre-registered ancilla
            return
        self.data_form[q] = (0, 0)
        self.data_basis[q] = "X" if basis == "+" else "Z"

    def h(self, q: int) -> None:
        self.data_basis[q] = "X" if self.data_basis[q] == "Z" else "Z"

    def x(self, q: int) -> None:
        if q in self.anc_form or self.data_basis.get(q) == "Z":
            c0, m0 = self._form(q)
            self._set(q, (c0 ^ 1, m0))
        else:                            # diagonal in the X basis
            self._phase_if(self._bits(self._form(q)))

    def z(self, q: int) -> None:
        if q in self.anc_form or self.data_basis.get(q) == "Z":
            self._phase_if(self._bits(self._form(q)))
        else:
            c0, m0 = self._form(q)
            self._set(q, (c0 ^ 1, m0))

    def y(self, q: int) -> None:        # Y = iXZ
        self.c = self.c * 1j
        self.z(q)
        self.x(q)

    def _set(self, q: int, form: tuple[int, int]) -> None:
        if q in self.anc_form:
            self.anc_form[q] = form
        else:
            self.data_form[q] = form

    def _is_zlike(self, q: int) -> bool:
        return q in self.anc_form or self.data_basis.get(q) == "Z"

    def cz(self, a: int, b: int) -> None:
        za, zb = self._is_zlike(a), self._is_zlike(b)
        if za and zb:
            self.c = self.c * np.where(
                (self._bits(self._form(a)) & self._bits(self._form(b))) == 1,
                -1.0, 1.0)
        elif za and not zb:
            self._xor_into(b, self._form(a))
        elif zb and not za:
            self._xor_into(a, self._form(b))
        else:
            raise EngineError("CZ between two X-basis data qubits leaves "
                              "the ancilla frame")

    def cnot(self, ctrl: int, tgt: int) -> None:
        if not self._is_zlike(ctrl):
            raise EngineError("CNOT control must be Z-like in this frame")
        if self._is_zlike(tgt):
            self._xor_into(tgt, self._form(ctrl))
        else:                            # X-basis target: diagonal phase
            self.c = self.c * np.where(
                (self._bits(self._form(ctrl))
                 & self._bits(self._form(tgt))) == 1, -1.0, 1.0)

    def zzphase(self, a: int, b: int, theta: float) -> None:
        par = self._bits(self._form(a)) ^ self._bits(self._form(b))
        self.c = self.c * np.exp(1j * theta * np.where(par == 1, -1.0, 1.0))

    def zzzphase(self, a: int, b: int, c: int, theta: float) -> None:
        par = (self._bits(self._form(a)) ^ self._bits(self._form(b))
               ^ self._bits(self._form(c)))
        self.c = self.c * np.exp(1j * theta * np.where(par == 1, -1.0, 1.0))

    # -- measurement -----------------------------------------------------
    def _collapse_keys(self) -> np.ndarray:
        """Physical configuration label per ancilla pattern."""
        keys = np.zeros_like(self._bit[0])
        shift = 0
        for q in sorted(self.anc_form):
            keys = (keys << np.uint64(1)) | self._bits(self.anc_form[q])
            shift += 1
        for q in sorted(self.data_form):
            keys = (keys << np.uint64(1)) | self._bits(self.data_form[q])
        return keys

    def weight(self) -> float:
        keys = self._collapse_keys()
        order = np.argsort(keys, kind="stable")
        k, c = keys[order], self.c[order]
        boundaries = np.nonzero(np.diff(k))[0] + 1
        sums = np.add.reduceat(c, np.concatenate(([0], boundaries)))
        return float((np.abs(sums) ** 2).sum())

    def measure_x(self, q: int, key: str,
                  rng: np.random.Generator | None = None,
                  force: int | None = None) -> int:
        form = self.anc_form.pop(q)
        bits = self._bits(form)
        # branch amplitudes: c * (+-1)^{bit} / sqrt(2)
        c_plus = self.c * 2 ** -0.5
        c_minus = self.c * np.where(bits == 1, -1.0, 1.0) * 2 ** -0.5
        if force is not None:
            out = force
        else:
            self.c = c_plus
            w_plus = self.weight()   # state is normalized, so P(-1)=1-P(+1)
            r = (rng or np.random.default_rng()).random()
            out = +1 if r < w_plus else -1
        self.c = c_plus if out == +1 else c_minus
        w = self.weight()
        if w < 1e-24:
            if force is not None:
                self.outcomes[key] = out
                return out              # forced impossible branch: zero state
            raise ZeroProbability(f"outcome {out} has zero probability")
        self.c = self.c / math.sqrt(w)
        self.outcomes[key] = out
        return out

    # -- program execution -------------------------------------------------
    def execute(self, prog: GateProgram,
                rng: np.random.Generator | None = None,
                forced: dict[str, int] | None = None) -> None:
        for ins in prog.instructions:
            op = ins.op
            if op == "Alloc":
                self.alloc(ins.qubits[0], ins.basis)
            elif op == "H":
                self.h(ins.qubits[0])
            elif op == "X":
                self.x(ins.qubits[0])
            elif op == "Z":
                self.z(ins.qubits[0])
            elif op == "Y":
                self.y(ins.qubits[0])
            elif op == "CZ":
                self.cz(*ins.qubits)
            elif op == "CNOT":
                self.cnot(*ins.qubits)
            elif op == "ZZPhase":
                self.zzphase(*ins.qubits, ins.param)
            elif op == "ZZZPhase":
                self.zzzphase(*ins.qubits, ins.param)
            elif op == "MeasureX":
                f = (forced or {}).get(ins.key)
                self.measure_x(ins.qubits[0], ins.key, rng=rng, force=f)
            elif op == "CondZ":
                val = 1
                for k in ins.keys:
                    val *= self.outcomes[k]
                if val == -1:
                    self.z(ins.qubits[0])
            elif op in ("Drop", "Barrier"):
                pass
            else:
                raise EngineError(f"{op} not supported in the ancilla frame")

    def apply_factors(self, factors) -> None:
        for f in reversed(factors):
            if f[0] == "X":
                self.x(f[1])
            elif f[0] == "Z":
                self.z(f[1])
            elif f[0] == "Y":
                self.y(f[1])
            elif f[0] == "CZ":
                self.cz(f[1], f[2])
            else:
                raise EngineError(f"unsupported factor {f[0]}")

    def to_sector_state(self, torus: KagomeTorus) -> SectorState:
        """Collapse into a sparse computational-basis state on the data qubits."""
        if self.anc_form:
            raise EngineError("ancillas still live")
        if any(b != "Z" for b in self.data_basis.values()):
            raise EngineError("data qubits not in the computational basis")
        keys = np.zeros_like(self._bit[0])
        for q in sorted(self.data_form):
            bit = self._bits(self.data_form[q])
            keys = keys | (bit << np.uint64(q))
        order = np.argsort(keys, kind="stable")
        k, c = keys[order], self.c[order]
        boundaries = np.nonzero(np.diff(k))[0] + 1
        starts = np.concatenate(([0], boundaries))
        support = k[starts]
        amps = np.add.reduceat(c, starts)
        keep = np.abs(amps) > 1e-14
        return SectorState(torus, support[keep].astype(np.uint64),
                           amps[keep].astype(np.complex128))


# --------------------------------------------------------------- prepare

@dataclass
class PrepResult:
    state: SectorState
    record: ShotRecord
    plan: FeedForwardPlan
    cost: CostReport
    excited_sector: bool = False


def prepare(config: PrepConfig) -> PrepResult:
    torus = config.torus
    prog, ancillas = (naive_program(torus) if config.variant == "naive"
                      else compiled_program(torus))
    cost = CostReport(config.variant, prog.count_two_qubit(),
                      prog.peak_register())
    if config.noise is not None:
        prog = config.noise.insert(prog, shot_rng(config.seed, config.shot))
    frame = FrameState(ancillas)
    forced = None
    if config.forced_outcomes is not None:
        forced = {f"a{s}": v for s, v in config.forced_outcomes.items()}
    rng = shot_rng(config.seed, config.shot)
    frame.execute(prog, rng=rng, forced=forced)

    outcomes = {s: frame.outcomes[f"a{s}"] for s in range(torus.n_stars)}
    plan = pair_anyons(outcomes, torus)
    if plan.herald and config.error_on_herald:
        raise HeraldedDiscard("odd per-color anyon parity")
    for string in plan.strings:
        for q in string:
            frame.z(q)
    if config.variant == "naive":
        # CNOT picture leaves data in the Z basis already; the compiled
        # variant ends with explicit Hadamards inside the program.
        pass
    excited = not sector_admissible(config.sector)
    # A horizontal X string toggles the vertical Z slot of its color and
    # vice versa; when both slots of a color must flip, a single string
    # winding once around both cycles avoids the charge pair that crossed
    # strings of two different colors would leave behind. Horizontal
    # strings are applied before vertical ones.
    target = {key: config.sector[k] for k, key in enumerate(SECTOR_ORDER)}
    queues: dict[str, list[Color]] = {"H": [], "D": [], "V": []}
    for color in COLORS:
        need_h = target[color, "V"] < 0
        need_v = target[color, "H"] < 0
        if need_h and need_v:
            queues["D"].append(color)
        elif need_h:
            queues["H"].append(color)
        elif need_v:
            queues["V"].append(color)
    for direction in ("H", "D", "V"):
        for color in queues[direction]:
            frame.apply_factors(logical(torus, color, direction, "X").factors)
    state = frame.to_sector_state(torus)
    if state.norm() > 1e-12:
        state.normalize()
    record = ShotRecord(seed=config.seed,
                        bits={f"a{s}": outcomes[s]
                              for s in range(torus.n_stars)},
                        herald=plan.herald)
    return PrepResult(state, record, plan, cost, excited)
