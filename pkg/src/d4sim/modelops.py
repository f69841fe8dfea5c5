"""Model operators over a kagome torus.

Star terms, triangle terms, logical strings, decorated anyon strings and
braiding sequences, each available as a factor list (a product of X/Z/CZ
factors, first factor acting last — consumable by both the dense engine and
the sector backend) and as a GateProgram.

Conventions established here:

* A star operator is the CZ ring on the inner hexagon times X on the six
  tips; the two blocks act on disjoint qubits.
* A color-c anyon string is X on the same-color edge qubits of a star walk,
  decorated with CZ between every later-color vertex and all preceding
  earlier-color vertices along the walk.  The default color order is cyclic:
  for a color-c string the "earlier" color is c+1 and the "later" c+2
  (blue -> red -> green for blue strings).
* Logical operators follow the canonical decomposition of the torus wrap
  vector into same-color superlattice steps (1,1) and (2,-1) (and images),
  starting from the first star of the relevant color.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import GateProgram
from .lattice import COLORS, NEIGHBOR_DIRS, Color, KagomeTorus, Path
from .sector import SectorState

Factor = tuple
Factors = tuple[Factor, ...]


class BadEndpoints(ValueError):
    pass


class DanglingAnyon(ValueError):
    pass


# --------------------------------------------------------------- stabilizers

@dataclass(frozen=True)
class StabilizerExpr:
    kind: str                 # "star" | "triangle"
    index: int
    support: tuple[int, ...]
    factors: Factors


def star_op(torus: KagomeTorus, s: int) -> StabilizerExpr:
    star = torus.stars[s]
    hexagon = star.hexagon
    ring = tuple(("CZ", hexagon[k], hexagon[(k + 1) % 6]) for k in range(6))
    xs = tuple(("X", t) for t in star.tips)
    return StabilizerExpr("star", s, hexagon + star.tips, ring + xs)


def triangle_op(torus: KagomeTorus, t: int) -> StabilizerExpr:
    tri = torus.triangles[t]
    return StabilizerExpr("triangle", t, tri.vertices,
                          tuple(("Z", v) for v in tri.vertices))


def ground_state(torus: KagomeTorus) -> SectorState:
    """Exact +1 eigenstate of all stars, triangles, and Z-logicals.

    |0...0> already satisfies every triangle and Z-logical; projecting all
    star operators lands in the unique ground state of that sector.
    """
    psi = SectorState.basis_state(torus, 0)
    for s in range(torus.n_stars):
        psi.project_factors(star_op(torus, s).factors)
    return psi.normalize()


# ------------------------------------------------------------- anyon strings

def _decoration_czs(torus: KagomeTorus, path: Path,
                    color_order: tuple[Color, Color, Color]) -> Factors:
    _, earlier, later = color_order
    decos = path.decorations
    hues = [torus.vertices[d].color for d in decos]
    return tuple(("CZ", decos[i], decos[j])
                 for i in range(len(decos))
                 for j in range(i + 1, len(decos))
                 if hues[i] == earlier and hues[j] == later)


def default_color_order(color: Color) -> tuple[Color, Color, Color]:
    return (color, Color((color + 1) % 3), Color((color + 2) % 3))


def string_factors(torus: KagomeTorus, path: Path,
                   color_order: tuple[Color, Color, Color] | None = None
                   ) -> Factors:
    order = color_order or default_color_order(path.color)
    if order[0] != path.color or set(order) != set(COLORS):
        raise ValueError("color order must start with the string color")
    xs = tuple(("X", v) for v in path.x_vertices)
    return xs + _decoration_czs(torus, path, order)


def string_program(torus: KagomeTorus, path: Path,
                   color_order: tuple[Color, Color, Color] | None = None
                   ) -> GateProgram:
    prog = GateProgram()
    factors = string_factors(torus, path, color_order)
    for f in reversed(factors):  # program order: first instruction acts first
        if f[0] == "X":
            prog.x(f[1])
        else:
            prog.cz(f[1], f[2])
    return prog


@dataclass(frozen=True)
class AnyonString:
    color: Color
    t_from: int
    t_to: int
    path: Path
    factors: Factors


def anyon_string(torus: KagomeTorus, color: Color, t_i: int, t_f: int,
                 color_order: tuple[Color, Color, Color] | None = None
                 ) -> AnyonString:
    ta, tb = torus.triangles[t_i], torus.triangles[t_f]
    if ta.color != color or tb.color != color:
        raise BadEndpoints("endpoint triangles must carry the string color")
    if t_i != t_f and ta.orientation == tb.orientation:
        raise BadEndpoints("endpoint triangles must have opposite orientations")
    path = torus.string_path(color, t_i, t_f)
    return AnyonString(color, t_i, t_f, path,
                       string_factors(torus, path, color_order))


def anyon_string_program(torus: KagomeTorus, color: Color, t_i: int, t_f: int,
                         color_order=None) -> GateProgram:
    s = anyon_string(torus, color, t_i, t_f, color_order)
    return string_program(torus, s.path, color_order)


def loop_string(torus: KagomeTorus, center_star: int,
                start_dir: int = 0) -> Path:
    """Closed string of color(center) through the center's six neighbors."""
    color = torus.stars[center_star].color
    i, j = torus.star_coords(center_star)
    di, dj = NEIGHBOR_DIRS[start_dir]
    start = torus.star_index(i + di, j + dj)
    steps = [(start_dir + 2 + m) % 6 for m in range(6)]
    return torus.closed_path(color, start, steps)


# ------------------------------------------------------------------ logicals

@dataclass(frozen=True)
class LogicalExpr:
    color: Color
    direction: str            # "H" | "V"
    kind: str                 # "Z" | "X"
    support: tuple[int, ...]
    factors: Factors
    path: Path | None = None


_STEP_QUBIT = {
    # superlattice step -> (star offset, edge slot) of the crossing qubit
    (1, 1): ((1, 0), 2),
    (2, -1): ((1, -1), 1),
    (1, -2): ((0, -1), 0),
    (-1, -1): ((0, -1), 2),
    (-2, 1): ((-1, 0), 1),
    (-1, 2): ((-1, 1), 0),
}

_STEP_DIRS = {
    # superlattice step -> two star-walk direction indices
    (1, 1): (0, 1),
    (2, -1): (0, 5),
    (1, -2): (4, 5),
    (-1, -1): (4, 3),
    (-2, 1): (2, 3),
    (-1, 2): (2, 1),
}


def _wrap_steps(torus: KagomeTorus, direction: str) -> list[tuple[int, int]]:
    wraps = torus.wrap_vectors()
    if direction == "D":
        # single loop winding once around both cycles
        w = (wraps[0][0] + wraps[1][0], wraps[0][1] + wraps[1][1])
    else:
        w = wraps[0 if direction == "H" else 1]
    b, rem = divmod(w[0] - w[1], 3)
    assert rem == 0
    a = w[1] + b
    # torus wraps always give a >= 0; fold negative b into (-1,2) steps so
    # the induced star walk never backtracks (needed for X-type strings)
    if b < 0:
        a, b2 = a + b, -b
        assert a >= 0
        return [(1, 1)] * a + [(-1, 2)] * b2
    return [(1, 1)] * a + [(2, -1)] * b


def logical(torus: KagomeTorus, color: Color, direction: str, kind: str,
            base_star: int | None = None) -> LogicalExpr:
    if direction not in ("H", "V", "D") or kind not in ("Z", "X"):
        raise ValueError("direction in {H,V,D}, kind in {Z,X}")
    steps = _wrap_steps(torus, direction)
    if kind == "Z":
        if base_star is None:
            base_star = torus.stars_of_color(color)[0]
        x, y = torus.star_coords(base_star)
        qubits = []
        for dx, dy in steps:
            (oi, oj), slot = _STEP_QUBIT[(dx, dy)]
            qubits.append(torus.vertex_index(x + oi, y + oj, slot))
            x, y = x + dx, y + dy
        assert torus.star_index(x, y) == base_star
        factors = tuple(("Z", q) for q in qubits)
        return LogicalExpr(color, direction, "Z", tuple(qubits), factors)
    # X-type: star walk through the two other colors
    if base_star is None:
        base_star = torus.stars_of_color(Color((color + 1) % 3))[0]
    walk_dirs = [d for st in steps for d in _STEP_DIRS[st]]
    path = torus.closed_path(color, base_star, walk_dirs)
    factors = string_factors(torus, path)
    support = tuple(sorted(set(path.x_vertices) | set(path.decorations)))
    return LogicalExpr(color, direction, "X", support, factors, path)


# --------------------------------------------------------------- commutators

@dataclass
class CommutatorReport:
    pairs_checked: int
    full_space_noncommuting: bool
    max_subspace_residual: float


def _star_action(torus: KagomeTorus, s: int, z: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
    """A_s on basis states: returns (signs, flipped states)."""
    star = torus.stars[s]
    z2 = z ^ np.uint64(sum(1 << t for t in star.tips))
    sign = np.ones(len(z), dtype=np.int8)
    hexagon = star.hexagon
    for k in range(6):
        a, b = hexagon[k], hexagon[(k + 1) % 6]
        both = ((z2 >> np.uint64(a)) & (z2 >> np.uint64(b)) & np.uint64(1))
        sign *= np.where(both == 1, -1, 1).astype(np.int8)
    return sign, z2


def commutator_check(torus: KagomeTorus, seed: int = 7) -> CommutatorReport:
    """Adjacent star operators: do not commute generically, commute on B=+1.

    Both checks are exact: star operators map basis states to signed basis
    states, so equality of the two orderings is a per-basis-state sign
    comparison.  The full-space check samples random basis states; the
    subspace check sweeps the entire B_t=+1 basis.
    """
    from .sector import enumerate_sector_basis

    adj_pairs = []
    for s in range(torus.n_stars):
        seen = set()
        for k in range(6):
            o = torus.neighbor(s, k)
            if o > s and o not in seen:
                seen.add(o)
                adj_pairs.append((s, o))

    rng = np.random.default_rng(seed)
    randoms = rng.integers(0, 2 ** torus.n_vertices, size=4096,
                           dtype=np.uint64)
    sector = enumerate_sector_basis(torus)

    def orderings_disagree(z, s1, s2):
        g1, z1 = _star_action(torus, s2, z)
        g2, z2 = _star_action(torus, s1, z1)
        h1, w1 = _star_action(torus, s1, z)
        h2, w2 = _star_action(torus, s2, w1)
        assert np.array_equal(z2, w2)
        return (g1 * g2) != (h1 * h2)

    generic = False
    worst = 0.0
    for s1, s2 in adj_pairs:
        if orderings_disagree(randoms, s1, s2).any():
            generic = True
        bad = orderings_disagree(sector, s1, s2)
        worst = max(worst, 2.0 * float(bad.mean()))  # commutator norm bound
    return CommutatorReport(len(adj_pairs), generic, worst)


# -------------------------------------------------------------------- braids

@dataclass
class BraidStep:
    label: str
    factors: Factors
    toggles: tuple[int, ...]  # triangle indices flipped


@dataclass
class BraidSequence:
    torus: KagomeTorus
    steps: list[BraidStep] = field(default_factory=list)
    excited: set[int] = field(default_factory=set)

    def _push(self, label: str, factors: Factors, toggles=()):
        self.steps.append(BraidStep(label, factors, tuple(toggles)))
        self.excited.symmetric_difference_update(toggles)

    def create(self, color: Color, t_i: int, t_f: int, label: str = ""):
        if t_i in self.excited or t_f in self.excited:
            raise DanglingAnyon("create on an occupied triangle")
        s = anyon_string(self.torus, color, t_i, t_f)
        self._push(label or f"create-{color.letter}", s.factors, (t_i, t_f))
        return self

    def move(self, color: Color, t_from: int, t_to: int, label: str = ""):
        if t_from not in self.excited or t_to in self.excited:
            raise DanglingAnyon("move endpoints do not match excitations")
        s = anyon_string(self.torus, color, t_from, t_to)
        self._push(label or f"move-{color.letter}", s.factors, (t_from, t_to))
        return self

    def annihilate(self, color: Color, t_i: int, t_f: int, label: str = ""):
        if t_i not in self.excited or t_f not in self.excited:
            raise DanglingAnyon("annihilate requires two excited triangles")
        s = anyon_string(self.torus, color, t_i, t_f)
        self._push(label or f"annihilate-{color.letter}", s.factors, (t_i, t_f))
        return self

    def loop(self, center_star: int, start_dir: int = 0, label: str = ""):
        path = loop_string(self.torus, center_star, start_dir)
        color = self.torus.stars[center_star].color
        self._push(label or f"loop-{color.letter}",
                   string_factors(self.torus, path))
        return self

    # ------------------------------------------------------------ execution

    def run(self, psi: SectorState | None = None
            ) -> tuple[SectorState, dict[str, dict]]:
        """Apply all steps to ψ0 (or a given state); returns checkpoints.

        Each checkpoint records every star and triangle expectation after the
        corresponding step (the stabilizer-map thumbnails).
        """
        t = self.torus
        state = (psi or ground_state(t)).copy()
        checkpoints: dict[str, dict] = {}
        for n, step in enumerate(self.steps):
            state.apply_factors(step.factors)
            checkpoints[f"{n}:{step.label}"] = snapshot(t, state)
        return state, checkpoints


def snapshot(torus: KagomeTorus, state: SectorState) -> dict:
    stars = [float(np.real(state.expval(star_op(torus, s).factors)))
             for s in range(torus.n_stars)]
    tris = [float(np.real(state.expval(triangle_op(torus, t).factors)))
            for t in range(torus.n_triangles)]
    return {"stars": stars, "triangles": tris}


BORROMEAN_VARIANTS = ("rgb", "rb", "gb")


def borromean_sequence(torus: KagomeTorus, variant: str = "rgb",
                       center: int | None = None
                       ) -> list[tuple[str, Factors]]:
    """Time-ordered factor lists realizing a Borromean-ring braid.

    A red hexagon loop around a red star encircles both the left green and
    right blue triangle of that star.  The braid is the group commutator of
    the green-conjugated red loop with a blue pair string:

        B, G, R, G, B, G, R, G   (first listed acts first; every string is
                                  an involution, so each reversal is itself)

    Partner endpoints for the green and blue pairs sit one string-edge away,
    at the stars offset by (1,2) and (1,0) from the center.  On the vacuum
    this yields phase exactly -1; dropping the green strings ("rb") or the
    red loops ("gb") makes the same process topologically trivial (+1).
    """
    if variant not in BORROMEAN_VARIANTS:
        raise ValueError(f"variant must be one of {BORROMEAN_VARIANTS}")
    if center is None:
        center = torus.stars_of_color(Color.R)[0]
    if torus.stars[center].color != Color.R:
        raise ValueError("center must be a red star")
    i, j = torus.star_coords(center)
    t_g = 2 * center + 1                                  # left green
    t_b = 2 * center                                      # right blue
    p_g = 2 * torus.star_index(i + 1, j + 2)              # right green
    p_b = 2 * torus.star_index(i + 1, j) + 1              # left blue
    g = ("G", anyon_string(torus, Color.G, t_g, p_g).factors)
    b = ("B", anyon_string(torus, Color.B, t_b, p_b).factors)
    r = ("R", string_factors(torus, loop_string(torus, center)))
    if variant == "rgb":
        return [b, g, r, g, b, g, r, g]
    if variant == "rb":
        return [b, r, b, r]
    return [b, g, g, b, g, g]


def borromean_phase(torus: KagomeTorus, variant: str = "rgb",
                    center: int | None = None) -> complex:
    """Exact ground-state overlap <psi0| braid |psi0> for the given variant."""
    psi0 = ground_state(torus)
    state = psi0.copy()
    for _, factors in borromean_sequence(torus, variant, center):
        state.apply_factors(factors)
    return complex(psi0.inner(state))


def borromean_interferometry(torus: KagomeTorus, variant: str = "rgb",
                             shots: int = 2000, seed: int = 0,
                             center: int | None = None) -> dict:
    """Hadamard-test estimate of the braiding phase.

    Only the blue strings are controlled on the ancilla, so the |0> branch
    still applies the red and green strings; those extra loops are
    contractible and leave the vacuum invariant, making the measured phase
    topologically equivalent to the fully controlled braid.  The ancilla's
    exact <X> and <Y> are computed from the two branch states; shot noise is
    then sampled binomially, half the shots per basis.
    """
    from .engine import shot_rng

    psi0 = ground_state(torus)
    u1 = psi0.copy()
    u0 = psi0.copy()
    for label, factors in borromean_sequence(torus, variant, center):
        u1.apply_factors(factors)
        if label != "B":
            u0.apply_factors(factors)
    amp = complex(u0.inner(u1))
    rng = shot_rng(seed, 0)
    n_x, n_y = shots // 2, shots - shots // 2
    k_x = int(rng.binomial(n_x, min(1.0, max(0.0, (1 + amp.real) / 2))))
    k_y = int(rng.binomial(n_y, min(1.0, max(0.0, (1 + amp.imag) / 2))))
    re_hat, im_hat = 2 * k_x / n_x - 1, 2 * k_y / n_y - 1
    est = complex(re_hat, im_hat)
    return {
        "variant": variant,
        "exact_amplitude": [amp.real, amp.imag],
        "exact_phase_over_pi": float(np.angle(amp) / np.pi) if abs(amp) else 0.0,
        "shots": shots,
        "estimate_r": abs(est),
        "estimate_phase_over_pi": float(np.angle(est) / np.pi) if abs(est) else 0.0,
        "stderr_r": float(np.sqrt((1 - re_hat ** 2) / n_x
                                  + (1 - im_hat ** 2) / n_y) / 2),
    }


def fusion_braid(torus: KagomeTorus) -> BraidSequence:
    """Create a blue pair, braid a green loop around one flux, annihilate.

    The green loop encircles the blue flux sitting on a left-pointing blue
    triangle (whose center star is green), toggling both pairs' fusion
    channel; re-annihilating the blue pair leaves two red charges behind.
    """
    # left blue triangle: center star is green
    t_left = next(x for x in torus.triangles_of_color(Color.B)
                  if x.orientation == "left")
    sigma = t_left.star
    # partner: adjacent right blue triangle, one step away
    t_right = None
    for cand in torus.triangles_of_color(Color.B):
        if cand.orientation == "right":
            p = torus.string_path(Color.B, cand.index, t_left.index)
            if len(p.x_vertices) == 1:
                t_right = cand
                break
    assert t_right is not None
    seq = BraidSequence(torus)
    seq.create(Color.B, t_right.index, t_left.index, "create-blue-pair")
    seq.loop(sigma, 0, "braid-green-loop")
    seq.annihilate(Color.B, t_right.index, t_left.index, "annihilate-blue-pair")
    return seq
