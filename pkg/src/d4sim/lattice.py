"""Kagome torus geometry with a three-coloring.

Qubits live on the vertices of a kagome lattice with periodic boundary
conditions.  We index the lattice through its triangular lattice of *stars*:
star (i, j) sits at position (i + j/2, j*sqrt(3)/2) and has six neighbors in
the directions

    D = [(1,0), (0,1), (-1,1), (-1,0), (0,-1), (1,-1)]

listed counter-clockwise from 0 degrees.  A kagome vertex is the midpoint of a
star-lattice edge; the canonical vertex id is ``3*star_index + k`` for the
edge from a star to its neighbor in direction ``k in {0, 1, 2}`` (the other
three directions are the same edges seen from the far star).

Coloring.  Stars are colored by ``(i - j) mod 3`` and each vertex carries the
third color absent from its two endpoint stars.  This is the unique coloring
(up to permutation) for which every star's inner hexagon alternates the two
non-star colors and every small triangle is single-colored.  It exists on an
lx-by-ly torus iff 3 divides lx or ly; for the non-divisible period the wrap
is sheared so the coloring stays consistent (see ``_Wrap``).

Single-color triangles.  The three even-position (right-pointing) and three
odd-position (left-pointing) vertices of a star's hexagon each form one
triangle; a right triangle at a star of color kappa has color kappa+2 and a
left one kappa+1 (mod 3).  Every vertex belongs to exactly one right and one
left triangle, both of its own color.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

NEIGHBOR_DIRS: tuple[tuple[int, int], ...] = (
    (1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1),
)

#: Nearest-neighbor steps on the one-color star superlattice (sqrt(3) cell).
SUPER_STEPS: tuple[tuple[int, int], ...] = (
    (1, 1), (2, -1), (1, -2), (-1, -1), (-2, 1), (-1, 2),
)


class Color(IntEnum):
    R = 0
    G = 1
    B = 2

    @property
    def letter(self) -> str:
        return self.name


COLORS = (Color.R, Color.G, Color.B)


class LatticeError(ValueError):
    """Base class for torus construction errors."""


class SizeTooSmall(LatticeError):
    """Period of length < 2: strings would self-overlap on a 1-cycle."""


class ColoringImpossible(LatticeError):
    """No consistent three-coloring exists (neither period divisible by 3)."""


class NoPath(LatticeError):
    """String endpoints cannot be connected respecting the color order."""


@dataclass(frozen=True)
class Star:
    index: int
    i: int
    j: int
    color: Color
    hexagon: tuple[int, ...]  # 6 vertex ids, cyclic CCW from direction 0
    tips: tuple[int, ...]     # 6 vertex ids, tip k between hexagon k, k+1
    pos: tuple[float, float]


@dataclass(frozen=True)
class Vertex:
    index: int
    color: Color
    stars: tuple[int, int]    # endpoint stars of the underlying edge
    pos: tuple[float, float]


@dataclass(frozen=True)
class Triangle:
    index: int
    star: int                 # star whose hexagon inscribes this triangle
    orientation: str          # "right" (even hexagon slots) or "left" (odd)
    color: Color
    vertices: tuple[int, int, int]


@dataclass(frozen=True)
class Face:
    """Triangular-superlattice plaquette of three mutually adjacent stars.

    Hosts one three-qubit phase gate during preparation; ``sign`` is +1 for
    up-pointing and -1 for down-pointing faces.
    """

    index: int
    sign: int
    stars: tuple[int, int, int]


@dataclass(frozen=True)
class Path:
    """Support of one anyon string of a given color.

    ``stars`` is the walk through stars of the two other colors,
    ``x_vertices`` the same-color X support (one edge per step), and
    ``decorations`` the alternating-color CZ support: one vertex per visited
    star, chosen on the short hexagon arc between the entry and exit edges
    (at open ends: one slot counter-clockwise from the single string edge).
    """

    color: Color
    stars: tuple[int, ...]
    x_vertices: tuple[int, ...]
    decorations: tuple[int, ...]
    closed: bool
    wrap_parity: tuple[int, int]
    endpoints: tuple[int, int] | None = None  # triangle ids for open strings


class KagomeTorus:
    """Immutable kagome torus; see module docstring for conventions."""

    def __init__(self, lx: int, ly: int):
        if lx < 2 or ly < 2:
            raise SizeTooSmall(f"torus must be at least 2x2 stars, got {lx}x{ly}")
        if lx % 3 == 0:
            # vertical wrap sheared: (i, j + ly) ~ (i + shear_v, j)
            shear_h, shear_v = 0, ly % 3
        elif ly % 3 == 0:
            shear_h, shear_v = lx % 3, 0
        else:
            raise ColoringImpossible(
                f"a {lx}x{ly} torus admits no consistent three-coloring: "
                "one period must be divisible by 3"
            )
        self.lx = lx
        self.ly = ly
        self._shear_h = shear_h  # (i + lx, j) ~ (i, j - shear_h)
        self._shear_v = shear_v  # (i, j + ly) ~ (i - shear_v, j)
        self.n_stars = lx * ly
        self.n_vertices = 3 * self.n_stars
        self.n_triangles = 2 * self.n_stars

        self.stars: list[Star] = []
        self.vertices: list[Vertex] = []
        self.triangles: list[Triangle] = []
        self.faces: list[Face] = []
        self._build()

    # ---------------------------------------------------------------- index

    def normalize(self, i: int, j: int) -> tuple[int, int]:
        """Map arbitrary star coordinates into the fundamental domain."""
        if self._shear_v:
            # 3 | lx branch
            j0 = j % self.ly
            i -= ((j - j0) // self.ly) * self._shear_v
            return i % self.lx, j0
        i0 = i % self.lx
        j -= ((i - i0) // self.lx) * self._shear_h
        return i0, j % self.ly

    def star_index(self, i: int, j: int) -> int:
        i0, j0 = self.normalize(i, j)
        return j0 * self.lx + i0

    def star_coords(self, s: int) -> tuple[int, int]:
        return s % self.lx, s // self.lx

    def star_color(self, i: int, j: int) -> Color:
        return Color((i - j) % 3)

    def neighbor(self, s: int, direction: int) -> int:
        i, j = self.star_coords(s)
        di, dj = NEIGHBOR_DIRS[direction % 6]
        return self.star_index(i + di, j + dj)

    def vertex_index(self, i: int, j: int, k: int) -> int:
        """Vertex on the edge from star (i, j) to its direction-k neighbor."""
        if k < 3:
            return 3 * self.star_index(i, j) + k
        di, dj = NEIGHBOR_DIRS[k]
        return 3 * self.star_index(i + di, j + dj) + (k - 3)

    def edge_vertex(self, a: int, b: int) -> int:
        """Vertex between adjacent stars a and b; raises if not adjacent."""
        ai, aj = self.star_coords(a)
        for k in range(6):
            di, dj = NEIGHBOR_DIRS[k]
            if self.star_index(ai + di, aj + dj) == b:
                return self.vertex_index(ai, aj, k)
        raise LatticeError(f"stars {a} and {b} are not adjacent")

    # ---------------------------------------------------------------- build

    def _build(self) -> None:
        lx, ly = self.lx, self.ly
        vert_owner: dict[int, tuple[int, int]] = {}
        for s in range(self.n_stars):
            i, j = self.star_coords(s)
            color = self.star_color(i, j)
            hexagon = tuple(self.vertex_index(i, j, k) for k in range(6))
            tips = tuple(
                self.vertex_index(i + di, j + dj, k)
                for (di, dj), k in zip(
                    ((1, 0), (-1, 1), (-1, 0), (0, -1), (0, -1), (1, -1)),
                    (2, 0, 1, 2, 0, 1),
                )
            )
            cells = hexagon + tips
            if len(set(cells)) != 12:
                raise SizeTooSmall(
                    f"{lx}x{ly}: star neighborhoods self-overlap; "
                    "strings would be ill-defined"
                )
            pos = (i + 0.5 * j, j * math.sqrt(3) / 2)
            self.stars.append(Star(s, i, j, color, hexagon, tips, pos))
            for k in range(3):
                vert_owner[3 * s + k] = (s, k)

        for v in range(self.n_vertices):
            s, k = vert_owner[v]
            i, j = self.star_coords(s)
            di, dj = NEIGHBOR_DIRS[k]
            other = self.star_index(i + di, j + dj)
            c_pair = {int(self.stars[s].color), int(self.stars[other].color)}
            third = Color(({0, 1, 2} - c_pair).pop())
            px = i + 0.5 * j + (di + 0.5 * dj) / 2
            py = (j + dj / 2) * math.sqrt(3) / 2
            self.vertices.append(Vertex(v, third, (s, other), (px, py)))

        for s in range(self.n_stars):
            star = self.stars[s]
            hx = star.hexagon
            for bit, (orient, slots) in enumerate(
                (("right", (0, 2, 4)), ("left", (1, 3, 5)))
            ):
                verts = tuple(hx[p] for p in slots)
                color = Color((int(star.color) + 2 - bit) % 3)
                self.triangles.append(
                    Triangle(2 * s + bit, s, orient, color, verts)
                )

        idx = 0
        for s in range(self.n_stars):
            i, j = self.star_coords(s)
            up = (s, self.star_index(i + 1, j), self.star_index(i, j + 1))
            dn = (
                self.star_index(i + 1, j),
                self.star_index(i, j + 1),
                self.star_index(i + 1, j + 1),
            )
            self.faces.append(Face(idx, +1, up))
            self.faces.append(Face(idx + 1, -1, dn))
            idx += 2

    # ------------------------------------------------------------ selectors

    def stars_of_color(self, color: Color) -> list[int]:
        return [s.index for s in self.stars if s.color == color]

    def vertices_of_color(self, color: Color) -> list[int]:
        return [v.index for v in self.vertices if v.color == color]

    def triangles_of_color(self, color: Color) -> list[Triangle]:
        return [t for t in self.triangles if t.color == color]

    def triangle_at(self, star: int, orientation: str) -> Triangle:
        bit = {"right": 0, "left": 1}[orientation]
        return self.triangles[2 * star + bit]

    def vertex_triangles(self, v: int) -> tuple[int, int]:
        """The two (same-color) triangles containing vertex v."""
        return tuple(t.index for t in self.triangles if v in t.vertices)  # type: ignore[return-value]

    def wrap_vectors(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Star displacements that wrap to the identity: horizontal, vertical."""
        return (self.lx, self._shear_h), (self._shear_v, self.ly)

    def translate_star(self, s: int, di: int, dj: int) -> int:
        i, j = self.star_coords(s)
        return self.star_index(i + di, j + dj)

    def translate_vertex(self, v: int, di: int, dj: int) -> int:
        s, k = divmod(v, 3)
        i, j = self.star_coords(s)
        return 3 * self.star_index(i + di, j + dj) + k

    # ---------------------------------------------------------------- paths

    def _walk_path(
        self,
        color: Color,
        walk: list[int],
        closed: bool,
        endpoints: tuple[int, int] | None = None,
        raw_displacement: tuple[int, int] = (0, 0),
    ) -> Path:
        """Assemble X support and CZ decorations for a star walk.

        ``walk`` lists visited stars (normalized ids); consecutive stars must
        be adjacent with colors alternating over the two non-``color`` hues.
        For closed walks the first star is not repeated at the end.
        """
        n = len(walk)
        seq = walk + [walk[0]] if closed else walk
        for s in seq:
            if self.stars[s].color == color:
                raise NoPath("string walk may not visit stars of its own color")
        x_vertices = []
        out_dir: list[int] = []  # direction from seq[m] to seq[m+1]
        for a, b in zip(seq, seq[1:]):
            x_vertices.append(self.edge_vertex(a, b))
            ai, aj = self.star_coords(a)
            d = next(
                k for k in range(6)
                if self.star_index(ai + NEIGHBOR_DIRS[k][0], aj + NEIGHBOR_DIRS[k][1]) == b
            )
            out_dir.append(d)
        for v in x_vertices:
            if self.vertices[v].color != color:
                raise NoPath("string edge of the wrong color")

        decorations = []
        for m, s in enumerate(walk):
            hx = self.stars[s].hexagon
            if closed:
                p_in = (out_dir[m - 1] + 3) % 6
                p_out = out_dir[m]
                decorations.append(hx[_short_arc_mid(p_in, p_out)])
            elif m == 0:
                decorations.append(hx[(out_dir[0] + 1) % 6])
            elif m == n - 1:
                p_in = (out_dir[m - 1] + 3) % 6
                decorations.append(hx[(p_in + 1) % 6])
            else:
                p_in = (out_dir[m - 1] + 3) % 6
                decorations.append(hx[_short_arc_mid(p_in, out_dir[m])])

        wh, wv = self.wrap_vectors()
        dx, dy = raw_displacement
        det = wh[0] * wv[1] - wh[1] * wv[0]
        alpha = (dx * wv[1] - dy * wv[0]) // det
        beta = (wh[0] * dy - wh[1] * dx) // det
        return Path(
            color=color,
            stars=tuple(walk),
            x_vertices=tuple(x_vertices),
            decorations=tuple(decorations),
            closed=closed,
            wrap_parity=(alpha % 2, beta % 2),
            endpoints=endpoints,
        )

    def string_path(self, color: Color, t_from: int, t_to: int) -> Path:
        """Shortest open string of ``color`` between two triangles of it."""
        ta, tb = self.triangles[t_from], self.triangles[t_to]
        if ta.color != color or tb.color != color:
            raise NoPath("endpoint triangles must match the string color")
        if t_from == t_to:
            return Path(color, (), (), (), False, (0, 0), (t_from, t_to))
        start, goal = ta.star, tb.star
        prev: dict[int, int] = {start: -1}
        frontier = [start]
        while frontier and goal not in prev:
            nxt: list[int] = []
            for s in frontier:
                for k in range(6):
                    b = self.neighbor(s, k)
                    if b not in prev and self.stars[b].color != color:
                        prev[b] = s
                        nxt.append(b)
            frontier = nxt
        if goal not in prev:
            raise NoPath("endpoint triangles are not connectable")
        walk = [goal]
        while walk[-1] != start:
            walk.append(prev[walk[-1]])
        walk.reverse()
        return self._walk_path(color, walk, closed=False, endpoints=(t_from, t_to))

    def closed_path(self, color: Color, start_star: int, steps: list[int]) -> Path:
        """Closed string from a star walk given by neighbor directions.

        ``steps`` are direction indices; the walk must return to
        ``start_star`` (possibly after wrapping the torus).
        """
        i, j = self.star_coords(start_star)
        i0, j0 = i, j
        walk = [start_star]
        for d in steps:
            di, dj = NEIGHBOR_DIRS[d]
            i, j = i + di, j + dj
            walk.append(self.star_index(i, j))
        if walk[-1] != start_star:
            raise NoPath("direction steps do not close the walk")
        return self._walk_path(
            color, walk[:-1], closed=True, raw_displacement=(i - i0, j - j0)
        )

    # ----------------------------------------------------------------- misc

    def geometry_dict(self) -> dict:
        """JSON-ready dump of vertices, colors and adjacency (debugging)."""
        return {
            "lx": self.lx,
            "ly": self.ly,
            "vertices": [
                {"index": v.index, "color": v.color.letter,
                 "stars": list(v.stars), "pos": list(v.pos)}
                for v in self.vertices
            ],
            "stars": [
                {"index": s.index, "color": s.color.letter,
                 "hexagon": list(s.hexagon), "tips": list(s.tips),
                 "pos": list(s.pos)}
                for s in self.stars
            ],
            "triangles": [
                {"index": t.index, "color": t.color.letter,
                 "orientation": t.orientation, "vertices": list(t.vertices)}
                for t in self.triangles
            ],
            "faces": [
                {"index": f.index, "sign": f.sign, "stars": list(f.stars)}
                for f in self.faces
            ],
        }


def _short_arc_mid(p_in: int, p_out: int) -> int:
    """Hexagon slot between two string-edge slots, on the short arc."""
    d = (p_out - p_in) % 6
    if d == 2:
        return (p_in + 1) % 6
    if d == 4:
        return (p_in - 1) % 6
    raise NoPath("string walk backtracks or repeats an edge at a star")


def build_torus(lx: int, ly: int) -> KagomeTorus:
    return KagomeTorus(lx, ly)
