"""Named experiment procedures on the kagome-torus model.

Each procedure returns an :class:`ExperimentReport` with per-stabilizer
expectations, the logical six-vector, and derived scalars (energy density,
logical pinning, fidelity bounds). Exact mode evaluates everything on the
triangle-even amplitude vector and carries zero error bars; sampled mode
draws per-estimator shots so reports look like the hardware pipeline's
(mean and standard error per estimator).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .lattice import COLORS, Color, KagomeTorus
from .modelops import LogicalExpr, logical, ground_state, snapshot, star_op, triangle_op
from .sector import SectorState, enumerate_sector_basis

__all__ = [
    "ConstraintViolation",
    "ZeroNormState",
    "OutOfRange",
    "LOGICAL_KEYS",
    "SectorSpec",
    "ExperimentReport",
    "constraint_sign",
    "enumerate_sectors",
    "constraint_check",
    "all_ground_states",
    "single_anyon",
    "degeneracy_scan",
    "fidelity_bounds",
    "projector_expectations",
]

SCHEMA_VERSION = "d4sim-report/1"

# canonical order of the six logical slots: three colors horizontal, then
# three colors vertical
LOGICAL_KEYS: Tuple[Tuple[Color, str], ...] = tuple(
    (c, d) for d in ("H", "V") for c in COLORS
)


class ConstraintViolation(Exception):
    """The star/logical operator identity failed on some basis state."""


class ZeroNormState(Exception):
    """A projection annihilated the trial state."""


class OutOfRange(ValueError):
    """Expectation values outside [0, 1]."""


# ---------------------------------------------------------------------------
# Reports


@dataclass
class ExperimentReport:
    experiment: str
    size: Tuple[int, int]
    stars: List[float] = field(default_factory=list)
    star_errors: Optional[List[float]] = None
    triangles: List[float] = field(default_factory=list)
    triangle_errors: Optional[List[float]] = None
    logicals: Dict[str, float] = field(default_factory=dict)
    logical_errors: Optional[Dict[str, float]] = None
    scalars: Dict[str, float] = field(default_factory=dict)
    shots: int = 0
    discards: int = 0
    seed: Optional[int] = None
    noise: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "experiment": self.experiment,
            "size": list(self.size),
            "stars": self.stars,
            "star_errors": self.star_errors,
            "triangles": self.triangles,
            "triangle_errors": self.triangle_errors,
            "logicals": self.logicals,
            "logical_errors": self.logical_errors,
            "scalars": self.scalars,
            "shots": self.shots,
            "discards": self.discards,
            "seed": self.seed,
            "noise": self.noise,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def csv_rows(self) -> List[List[str]]:
        rows = [["kind", "index", "value", "stderr"]]
        for i, v in enumerate(self.stars):
            err = self.star_errors[i] if self.star_errors else 0.0
            rows.append(["star", str(i), f"{v:.10g}", f"{err:.4g}"])
        for i, v in enumerate(self.triangles):
            err = self.triangle_errors[i] if self.triangle_errors else 0.0
            rows.append(["triangle", str(i), f"{v:.10g}", f"{err:.4g}"])
        for key, v in self.logicals.items():
            err = self.logical_errors[key] if self.logical_errors else 0.0
            rows.append(["logical", key, f"{v:.10g}", f"{err:.4g}"])
        for key, v in sorted(self.scalars.items()):
            rows.append(["scalar", key, f"{v:.10g}", ""])
        return rows


def _logical_key(color: Color, direction: str) -> str:
    return f"{color.letter}{direction}"


# ---------------------------------------------------------------------------
# Sector census


@dataclass(frozen=True)
class SectorSpec:
    signs: Tuple[int, int, int, int, int, int]  # Z_RH, Z_GH, Z_BH, Z_RV, Z_GV, Z_BV
    admissible: bool

    @property
    def label(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)


def constraint_sign(signs: Sequence[int], color: Color) -> int:
    """Right-hand side of the star/logical constraint for one color.

    The product of all stars of ``color`` equals, on the triangle-even
    subspace, a parity built from the *other* two colors' logicals with
    crossed directions.
    """
    c1 = Color((color + 1) % 3)
    c2 = Color((color + 2) % 3)
    z = {(_c, _d): signs[i] for i, (_c, _d) in enumerate(LOGICAL_KEYS)}
    exponent = ((1 - z[c1, "H"]) // 2) * ((1 - z[c2, "V"]) // 2) + (
        (1 - z[c1, "V"]) // 2
    ) * ((1 - z[c2, "H"]) // 2)
    return -1 if exponent % 2 else 1


def enumerate_sectors() -> Tuple[SectorSpec, ...]:
    """All 64 logical sign assignments with their admissibility flags."""
    specs = []
    for signs in itertools.product((+1, -1), repeat=6):
        ok = all(constraint_sign(signs, c) == 1 for c in COLORS)
        specs.append(SectorSpec(signs, ok))
    return tuple(specs)


# ---------------------------------------------------------------------------
# Constraint identity, verified exhaustively on the triangle-even basis.


def _popcount(arr: np.ndarray) -> np.ndarray:
    return np.bitwise_count(arr).astype(np.int64)


def _z_parities(support: np.ndarray, mask: int) -> np.ndarray:
    return 1 - 2 * (_popcount(support & np.uint64(mask)) % 2)


def _mask_of(qubits: Sequence[int]) -> int:
    mask = 0
    for q in qubits:
        mask ^= 1 << q
    return mask


def _diagonal_action(support: np.ndarray, factors) -> Tuple[np.ndarray, np.ndarray]:
    """Apply a Pauli/CZ factor product to every basis state at once.

    Returns (bitstrings, signs). Factors are ordered with the first acting
    last, matching the amplitude-vector convention.
    """
    cur = support.copy()
    sign = np.ones(len(support), dtype=np.int64)
    for f in reversed(factors):
        kind = f[0]
        if kind == "X":
            cur ^= np.uint64(1 << f[1])
        elif kind == "Z":
            bit = (cur >> np.uint64(f[1])) & np.uint64(1)
            sign *= 1 - 2 * bit.astype(np.int64)
        elif kind == "CZ":
            b1 = (cur >> np.uint64(f[1])) & np.uint64(1)
            b2 = (cur >> np.uint64(f[2])) & np.uint64(1)
            sign *= 1 - 2 * (b1 & b2).astype(np.int64)
        else:  # pragma: no cover - stabilizer factors are X/Z/CZ only
            raise ValueError(f"unexpected factor {kind!r}")
    return cur, sign


def constraint_check(torus: KagomeTorus) -> ExperimentReport:
    """Exhaustively verify the star/logical constraint per color.

    For every basis state of the triangle-even subspace and every color,
    the product of that color's star operators must act diagonally with
    sign equal to the crossed-logical parity formula. Raises
    :class:`ConstraintViolation` on any mismatch.
    """
    support = enumerate_sector_basis(torus)
    zmask = {
        (c, d): _mask_of(logical(torus, c, d, "Z").support)
        for c in COLORS
        for d in ("H", "V")
    }
    checked = 0
    for color in COLORS:
        factors = []
        for s in torus.stars_of_color(color):
            factors.extend(star_op(torus, s).factors)
        cur, sign = _diagonal_action(support, factors)
        if not np.array_equal(cur, support):
            raise ConstraintViolation(
                f"star product of color {color.letter} is not diagonal"
            )
        c1 = Color((color + 1) % 3)
        c2 = Color((color + 2) % 3)
        rhs = np.ones(len(support), dtype=np.int64)
        for d1, d2 in (("H", "V"), ("V", "H")):
            z1 = _z_parities(support, zmask[c1, d1])
            z2 = _z_parities(support, zmask[c2, d2])
            rhs *= 1 - 2 * (((1 - z1) // 2) * ((1 - z2) // 2))
        if not np.array_equal(sign, rhs):
            bad = int(np.argmax(sign != rhs))
            raise ConstraintViolation(
                f"color {color.letter}, basis state {support[bad]:#x}: "
                f"star product {sign[bad]} != logical parity {rhs[bad]}"
            )
        checked += len(support)
    report = ExperimentReport("constraint_check", (torus.lx, torus.ly))
    report.scalars = {
        "basis_states": float(len(support)),
        "checks": float(checked),
        "violations": 0.0,
    }
    return report


# ---------------------------------------------------------------------------
# Expectation helpers


def _logical_translates(torus: KagomeTorus, color: Color, direction: str):
    return [
        logical(torus, color, direction, "Z", base_star=s)
        for s in torus.stars_of_color(color)
    ]


def _averaged_logical(state: SectorState, torus: KagomeTorus, color: Color, direction: str) -> float:
    vals = [
        float(np.real(state.expval(expr.factors)))
        for expr in _logical_translates(torus, color, direction)
    ]
    return float(np.mean(vals))


def _energy_density(stars: Sequence[float], triangles: Sequence[float]) -> float:
    total = sum(stars) + sum(triangles)
    return -total / (len(stars) + len(triangles))


def _pinning(logicals: Dict[str, float], signs: Sequence[int]) -> float:
    keys = [_logical_key(c, d) for c, d in LOGICAL_KEYS]
    return float(np.mean([s * logicals[k] for s, k in zip(signs, keys)]))


def _exact_report(
    name: str, torus: KagomeTorus, state: SectorState, signs: Sequence[int]
) -> ExperimentReport:
    snap = snapshot(torus, state)
    logicals = {
        _logical_key(c, d): _averaged_logical(state, torus, c, d)
        for c, d in LOGICAL_KEYS
    }
    report = ExperimentReport(name, (torus.lx, torus.ly))
    report.stars = snap["stars"]
    report.triangles = snap["triangles"]
    report.logicals = logicals
    report.scalars = {
        "energy_density": _energy_density(snap["stars"], snap["triangles"]),
        "pinning": _pinning(logicals, signs),
    }
    return report


def _sampled_report(
    exact: ExperimentReport, signs: Sequence[int], shots: int, seed: int
) -> ExperimentReport:
    """Per-estimator Born sampling of an exact report.

    Each +/-1 estimator is sampled independently with its exact marginal
    probability; cross-correlations between estimators are not modeled.
    """
    rng = np.random.default_rng(seed)

    def draw(mean: float) -> Tuple[float, float]:
        p = min(max((1.0 + mean) / 2.0, 0.0), 1.0)
        ones = rng.binomial(shots, p)
        est = (2.0 * ones - shots) / shots
        sem = float(np.sqrt(max(1.0 - est * est, 0.0) / shots))
        return float(est), sem

    out = ExperimentReport(exact.experiment, exact.size, shots=shots, seed=seed)
    out.stars, out.star_errors = map(list, zip(*(draw(v) for v in exact.stars)))
    out.triangles, out.triangle_errors = map(
        list, zip(*(draw(v) for v in exact.triangles))
    )
    out.logicals, out.logical_errors = {}, {}
    for key, v in exact.logicals.items():
        est, sem = draw(v)
        out.logicals[key] = est
        out.logical_errors[key] = sem
    out.scalars = {
        "energy_density": _energy_density(out.stars, out.triangles),
        "pinning": _pinning(out.logicals, signs),
    }
    return out


def _state_in_sector(torus: KagomeTorus, signs: Sequence[int]) -> SectorState:
    """Ground state steered into a logical sector by post-hoc loop strings.

    A horizontal X-type string of color c toggles the vertical Z slot of
    color c and vice versa. When both slots of a color must flip, a single
    string winding once around both cycles is used instead of a crossing
    pair: crossed strings of two different colors would deposit a charge
    pair of the third color. Horizontal strings are applied before
    vertical ones.
    """
    state = ground_state(torus)
    z = {(c, d): s for (c, d), s in zip(LOGICAL_KEYS, signs)}
    queues: Dict[str, List[Color]] = {"H": [], "D": [], "V": []}
    for color in COLORS:
        need_h = z[color, "V"] < 0
        need_v = z[color, "H"] < 0
        if need_h and need_v:
            queues["D"].append(color)
        elif need_h:
            queues["H"].append(color)
        elif need_v:
            queues["V"].append(color)
    for direction in ("H", "D", "V"):
        for color in queues[direction]:
            state.apply_factors(logical(torus, color, direction, "X").factors)
    state.normalize()
    return state


# ---------------------------------------------------------------------------
# Experiments


def all_ground_states(
    torus: KagomeTorus,
    mode: str = "exact",
    shots: int = 500,
    seed: int = 0,
) -> List[ExperimentReport]:
    """One report per admissible logical sector (22 of them)."""
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    reports = []
    for k, spec in enumerate(s for s in enumerate_sectors() if s.admissible):
        state = _state_in_sector(torus, spec.signs)
        exact = _exact_report("ground_state_sector", torus, state, spec.signs)
        exact.scalars["sector"] = float(
            int("".join("0" if s > 0 else "1" for s in spec.signs), 2)
        )
        if mode == "exact":
            exact.seed = seed
            reports.append(exact)
        else:
            rep = _sampled_report(exact, spec.signs, shots, seed + k)
            rep.scalars["sector"] = exact.scalars["sector"]
            reports.append(rep)
    return reports


def single_anyon(torus: KagomeTorus) -> ExperimentReport:
    """Apply the green-vertical and red-horizontal loop strings.

    The target sector violates the constraint for blue, so the resulting
    state hosts exactly one blue star excitation (an odd number of Abelian
    anyons on the torus).
    """
    state = ground_state(torus)
    state.apply_factors(logical(torus, Color.G, "V", "X").factors)
    state.apply_factors(logical(torus, Color.R, "H", "X").factors)
    state.normalize()
    # Z_GH and Z_RV are toggled by those strings
    signs = [1] * 6
    for i, (c, d) in enumerate(LOGICAL_KEYS):
        if (c, d) in ((Color.G, "H"), (Color.R, "V")):
            signs[i] = -1
    report = _exact_report("single_anyon", torus, state, signs)
    negative = [i for i, v in enumerate(report.stars) if v < -0.5]
    report.scalars["negative_stars"] = float(len(negative))
    if negative:
        report.scalars["anyon_star"] = float(negative[0])
        report.scalars["anyon_color"] = float(torus.stars[negative[0]].color)
    return report


def degeneracy_scan(
    torus: KagomeTorus,
    n_trials: int = 2200,
    seed: int = 0,
    ensemble: str = "basis",
) -> ExperimentReport:
    """Random-state estimate of the ground space's sector decomposition.

    Each trial prepares a random product state, projects it onto the
    triangle-even subspace and then onto all stars, and samples the
    six-logical outcome of the survivor; trials annihilated by a
    projection are retried and counted in ``retries``. Forbidden sectors
    receive exactly zero mass either way.

    ``ensemble="basis"`` (default) draws uniformly random computational
    basis states from the triangle-even subspace. Every admissible sector
    contains the same number of such states and the star projector
    annihilates exactly the forbidden-sector ones, so the 22 surviving
    outcomes are uniform up to multinomial shot noise. ``"haar"`` draws
    Haar-random single-qubit product states instead; their survival
    weights vary from state to state, which makes the sector histogram
    measurably non-uniform at a few thousand trials.
    """
    if ensemble not in ("basis", "haar"):
        raise ValueError(f"unknown ensemble {ensemble!r}")
    rng = np.random.default_rng(seed)
    n = torus.n_vertices
    star_factors = [star_op(torus, s).factors for s in range(torus.n_stars)]
    zmasks = [
        _mask_of(logical(torus, c, d, "Z").support) for c, d in LOGICAL_KEYS
    ]
    basis_support = enumerate_sector_basis(torus)
    counts: Dict[str, int] = {}
    retries = 0
    trial = 0
    while trial < n_trials:
        try:
            if ensemble == "basis":
                pick = int(basis_support[rng.integers(len(basis_support))])
                state = SectorState.basis_state(torus, pick)
            else:
                amps = rng.normal(size=(2, n, 2)) @ np.array([1.0, 1.0j])
                norms = np.linalg.norm(amps, axis=0)
                state = SectorState.product_state(
                    torus, amps[0] / norms, amps[1] / norms
                )
                if state.norm() < 1e-12:
                    raise ZeroNormState("triangle projection")
                state.normalize()
            for factors in star_factors:
                state.project_factors(factors, +1)
                if state.norm() < 1e-12:
                    raise ZeroNormState("star projection")
            state.normalize()
        except ZeroNormState:
            retries += 1
            continue
        probs = np.abs(state.amps) ** 2
        probs /= probs.sum()
        idx = rng.choice(len(probs), p=probs)
        z = state.support[idx : idx + 1]
        label = "".join(
            "+" if int(_z_parities(z, m)[0]) > 0 else "-" for m in zmasks
        )
        counts[label] = counts.get(label, 0) + 1
        trial += 1
    report = ExperimentReport("degeneracy_scan", (torus.lx, torus.ly), shots=n_trials, seed=seed)
    admissible = {s.label for s in enumerate_sectors() if s.admissible}
    forbidden_mass = sum(v for k, v in counts.items() if k not in admissible)
    report.scalars = {
        "trials": float(n_trials),
        "retries": float(retries),
        "distinct_sectors": float(len(counts)),
        "forbidden_mass": float(forbidden_mass),
    }
    report.logicals = {k: v / n_trials for k, v in sorted(counts.items())}
    return report


def fidelity_bounds(
    r: float, g: float, b: float, n_sites: int
) -> Dict[str, float]:
    """Ground-state fidelity window from three commuting-projector values."""
    for name, v in (("r", r), ("g", g), ("b", b)):
        if not 0.0 <= v <= 1.0:
            raise OutOfRange(f"projector expectation {name}={v} outside [0, 1]")
    if n_sites < 1:
        raise OutOfRange(f"n_sites={n_sites}")
    lower = max(0.0, r + g + b - 2.0)
    upper = min(r, g, b)
    return {
        "lower": lower,
        "upper": upper,
        "per_site_lower": lower ** (1.0 / n_sites),
        "per_site_upper": upper ** (1.0 / n_sites),
    }


def projector_expectations(
    state: SectorState,
    torus: KagomeTorus,
    omit: Tuple[int, int, int] = (0, 0, 0),
) -> Tuple[float, float, float]:
    """Expectations of the three commuting color projectors.

    The projector of color c keeps every star of color c except one (the
    ``omit[c]``-th, free by construction), the triangles inscribed in those
    stars (identically satisfied on the triangle-even subspace this state
    lives in), and pins both logical Z loops of color c+1.
    """
    values = []
    for color in COLORS:
        work = state.copy()
        stars = list(torus.stars_of_color(color))
        stars.pop(omit[color] % len(stars))
        for s in stars:
            work.project_factors(star_op(torus, s).factors, +1)
        pinned = Color((color + 1) % 3)
        for d in ("H", "V"):
            mask = _mask_of(logical(torus, pinned, d, "Z").support)
            work.project_diagonal(mask, +1)
        values.append(float(work.norm() ** 2))
    return tuple(values)  # type: ignore[return-value]
