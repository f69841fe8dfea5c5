import itertools
import json

import numpy as np
import pytest
from scipy import stats

from d4sim import experiments as ex
from d4sim import modelops as mo
from d4sim import prep
from d4sim.lattice import Color, build_torus
from d4sim.sector import SectorState


@pytest.fixture(scope="module")
def torus():
    return build_torus(3, 3)


@pytest.fixture(scope="module")
def psi0(torus):
    return mo.ground_state(torus)


class TestSectorCensus:
    def test_counts(self):
        specs = ex.enumerate_sectors()
        assert len(specs) == 64
        assert sum(s.admissible for s in specs) == 22

    def test_vacuum_admissible(self):
        assert ex.SectorSpec((1,) * 6, True) in ex.enumerate_sectors()

    def test_admissible_families(self):
        # all-horizontal-negatives, all-vertical-negatives, or matching
        for spec in ex.enumerate_sectors():
            h, v = spec.signs[:3], spec.signs[3:]
            expected = h == (1, 1, 1) or v == (1, 1, 1) or h == v
            assert spec.admissible == expected

    def test_matches_prep_admissibility(self):
        for spec in ex.enumerate_sectors():
            assert spec.admissible == prep.sector_admissible(spec.signs)

    def test_single_anyon_sector_is_forbidden(self):
        # toggling Z_GH and Z_RV leaves one blue star excited
        signs = tuple(
            -1 if (c, d) in ((Color.G, "H"), (Color.R, "V")) else 1
            for c, d in ex.LOGICAL_KEYS
        )
        assert ex.constraint_sign(signs, Color.B) == -1
        assert not prep.sector_admissible(signs)


class TestConstraintCheck:
    def test_exhaustive_no_violations(self, torus):
        report = ex.constraint_check(torus)
        assert report.scalars["violations"] == 0
        assert report.scalars["basis_states"] == 4096
        assert report.scalars["checks"] == 3 * 4096

    def test_all_zeros_state_trivially_positive(self, torus):
        # spot-check that the diagonal action on the all-zeros bitstring
        # is +1 for every color (no strings, no crossings)
        support = np.array([0], dtype=np.uint64)
        for color in (Color.R, Color.G, Color.B):
            factors = []
            for s in torus.stars_of_color(color):
                factors.extend(mo.star_op(torus, s).factors)
            cur, sign = ex._diagonal_action(support, factors)
            assert cur[0] == 0 and sign[0] == 1


class TestGroundStates:
    def test_all_22_exact(self, torus):
        reports = ex.all_ground_states(torus, mode="exact")
        assert len(reports) == 22
        for rep in reports:
            assert rep.scalars["energy_density"] == pytest.approx(-1.0, abs=1e-10)
            assert rep.scalars["pinning"] == pytest.approx(1.0, abs=1e-10)
            assert min(rep.stars) == pytest.approx(1.0, abs=1e-10)
            assert min(rep.triangles) == pytest.approx(1.0, abs=1e-10)

    def test_sectors_distinct_and_pinned(self, torus):
        reports = ex.all_ground_states(torus, mode="exact")
        specs = [s for s in ex.enumerate_sectors() if s.admissible]
        seen = set()
        for spec, rep in zip(specs, reports):
            got = tuple(
                1 if rep.logicals[f"{c.letter}{d}"] > 0 else -1
                for c, d in ex.LOGICAL_KEYS
            )
            assert got == spec.signs
            seen.add(got)
        assert len(seen) == 22

    def test_sampled_mode_close_to_exact(self, torus):
        reports = ex.all_ground_states(torus, mode="sampled", shots=500, seed=3)
        for rep in reports:
            # eigenstate: every sampled estimator is deterministic
            assert rep.scalars["energy_density"] == pytest.approx(-1.0)
            assert rep.star_errors is not None
            assert rep.shots == 500

    def test_unknown_mode(self, torus):
        with pytest.raises(ValueError):
            ex.all_ground_states(torus, mode="dense")


class TestSingleAnyon:
    def test_one_blue_star(self, torus):
        rep = ex.single_anyon(torus)
        negatives = [i for i, v in enumerate(rep.stars) if v < 0]
        assert len(negatives) == 1
        assert torus.stars[negatives[0]].color == Color.B
        assert min(rep.triangles) == pytest.approx(1.0, abs=1e-10)
        others = [v for i, v in enumerate(rep.stars) if i != negatives[0]]
        assert min(others) == pytest.approx(1.0, abs=1e-10)

    def test_undoing_strings_in_reverse_restores_ground_state(self, torus, psi0):
        # The two string operators do not commute past one another: each
        # squares to the identity on the ground state, so the inverse of
        # the pair is the same pair applied in reversed order.
        g = mo.logical(torus, Color.G, "V", "X").factors
        r = mo.logical(torus, Color.R, "H", "X").factors
        state = psi0.copy()
        for factors in (g, r, r, g):
            state.apply_factors(factors)
        state.normalize()
        assert abs(abs(state.inner(psi0)) - 1.0) < 1e-10

    def test_repeating_strings_in_same_order_does_not(self, torus, psi0):
        # Repeating the pair verbatim crosses the strings a second time and
        # deposits a charge pair instead of annihilating the first one.
        g = mo.logical(torus, Color.G, "V", "X").factors
        r = mo.logical(torus, Color.R, "H", "X").factors
        state = psi0.copy()
        for factors in (g, r, g, r):
            state.apply_factors(factors)
        state.normalize()
        stars = mo.snapshot(torus, state)["stars"]
        assert sum(1 for v in stars if v < -0.999) == 2
        assert abs(state.inner(psi0)) < 1e-10


class TestDegeneracyScan:
    def test_zero_forbidden_mass_and_uniformity(self, torus):
        rep = ex.degeneracy_scan(torus, n_trials=2200, seed=11)
        assert rep.scalars["forbidden_mass"] == 0.0
        assert rep.scalars["distinct_sectors"] == 22
        counts = np.array([v * 2200 for v in rep.logicals.values()])
        chi2 = ((counts - 100.0) ** 2 / 100.0).sum()
        p = stats.chi2.sf(chi2, df=21)
        assert p > 0.01

    def test_deterministic_given_seed(self, torus):
        a = ex.degeneracy_scan(torus, n_trials=5, seed=4)
        b = ex.degeneracy_scan(torus, n_trials=5, seed=4)
        assert a.logicals == b.logicals


class TestFidelityBounds:
    def test_paper_style_inputs(self):
        out = ex.fidelity_bounds(0.90, 0.85, 0.89, 27)
        assert out["lower"] == pytest.approx(0.64, abs=1e-12)
        assert out["upper"] == pytest.approx(0.85)
        assert out["per_site_lower"] == pytest.approx(0.984, abs=1e-3)
        assert out["per_site_upper"] == pytest.approx(0.994, abs=1e-3)

    def test_second_inputs(self):
        out = ex.fidelity_bounds(0.94, 0.89, 0.93, 27)
        assert out["lower"] == pytest.approx(0.76, abs=1e-12)
        assert out["per_site_lower"] == pytest.approx(0.990, abs=1e-3)

    def test_perfect(self):
        out = ex.fidelity_bounds(1.0, 1.0, 1.0, 27)
        assert out["lower"] == out["upper"] == 1.0

    def test_out_of_range(self):
        with pytest.raises(ex.OutOfRange):
            ex.fidelity_bounds(1.2, 0.5, 0.5, 27)
        with pytest.raises(ex.OutOfRange):
            ex.fidelity_bounds(0.5, 0.5, 0.5, 0)


class TestProjectors:
    def test_ground_state_gives_ones(self, torus, psi0):
        assert ex.projector_expectations(psi0, torus) == (1.0, 1.0, 1.0)

    def test_omission_choice_is_free(self, torus, psi0):
        assert ex.projector_expectations(psi0, torus, omit=(1, 2, 1)) == (
            1.0,
            1.0,
            1.0,
        )

    def test_projectors_commute_on_random_states(self, torus):
        rng = np.random.default_rng(9)

        def project(state, color, torus):
            work = state.copy()
            stars = list(torus.stars_of_color(color))[1:]
            for s in stars:
                work.project_factors(mo.star_op(torus, s).factors, +1)
            pinned = Color((color + 1) % 3)
            for d in ("H", "V"):
                mask = ex._mask_of(mo.logical(torus, pinned, d, "Z").support)
                work.project_diagonal(mask, +1)
            return work

        n = torus.n_vertices
        amps = rng.normal(size=(2, n, 2)) @ np.array([1.0, 1.0j])
        state = SectorState.product_state(torus, amps[0], amps[1])
        state.normalize()
        for c1, c2 in itertools.combinations((Color.R, Color.G, Color.B), 2):
            a = project(project(state, c1, torus), c2, torus)
            b = project(project(state, c2, torus), c1, torus)
            assert abs(a.inner(b) - a.norm() ** 2) < 1e-10

    def test_product_of_projectors_is_ground_state_projector(self, torus, psi0):
        rng = np.random.default_rng(5)
        n = torus.n_vertices
        amps = rng.normal(size=(2, n, 2)) @ np.array([1.0, 1.0j])
        state = SectorState.product_state(torus, amps[0], amps[1])
        state.normalize()
        work = state.copy()
        for color in (Color.R, Color.G, Color.B):
            stars = list(torus.stars_of_color(color))[1:]
            for s in stars:
                work.project_factors(mo.star_op(torus, s).factors, +1)
            pinned = Color((color + 1) % 3)
            for d in ("H", "V"):
                mask = ex._mask_of(mo.logical(torus, pinned, d, "Z").support)
                work.project_diagonal(mask, +1)
        overlap = psi0.inner(state)
        assert abs(psi0.inner(work) - overlap) < 1e-10
        assert abs(work.norm() - abs(overlap)) < 1e-10

    def test_anyon_state_kills_one_projector(self, torus):
        state = mo.ground_state(torus)
        state.apply_factors(mo.logical(torus, Color.G, "V", "X").factors)
        state.apply_factors(mo.logical(torus, Color.R, "H", "X").factors)
        state.normalize()
        r, g, b = ex.projector_expectations(state, torus)
        assert b == pytest.approx(0.0, abs=1e-10)


class TestReport:
    def test_json_round_trip_and_stability(self, torus):
        rep = ex.single_anyon(torus)
        payload = rep.to_json()
        again = ex.single_anyon(torus).to_json()
        assert payload == again
        data = json.loads(payload)
        assert data["schema"] == ex.SCHEMA_VERSION
        assert len(data["stars"]) == torus.n_stars

    def test_csv_rows(self, torus):
        rep = ex.constraint_check(torus)
        rows = rep.csv_rows()
        assert rows[0] == ["kind", "index", "value", "stderr"]
        kinds = {row[0] for row in rows[1:]}
        assert "scalar" in kinds
