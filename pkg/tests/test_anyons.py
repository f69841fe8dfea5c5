import itertools

import numpy as np
import pytest

from d4sim import anyons
from d4sim.anyons import (
    ANYONS,
    GROUP_ELEMENTS,
    IDENTITY,
    GroupElement,
    anyon,
    braid_full,
    character,
    cocycle_alpha,
    cocycle_omega,
    d4_dictionary,
    fuse,
    modular_data,
    pair_singlet,
    rep,
)

R = GroupElement.from_letters("R")
G = GroupElement.from_letters("G")
B = GroupElement.from_letters("B")

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


# Frozen oracle: 8*S and diag T in the canonical anyon order
# 1, e_R, e_G, e_B, e_RG, e_GB, e_RB, e_RGB,
# m_R, f_R, m_G, f_G, m_B, f_B, m_RG, f_RG, m_GB, f_GB, m_RB, f_RB,
# s_RGB, sbar_RGB.
EIGHT_S_ROWS = """
 1  1  1  1  1  1  1  1  2  2  2  2  2  2  2  2  2  2  2  2  2  2
 1  1  1  1  1  1  1  1 -2 -2  2  2  2  2 -2 -2  2  2 -2 -2 -2 -2
 1  1  1  1  1  1  1  1  2  2 -2 -2  2  2 -2 -2 -2 -2  2  2 -2 -2
 1  1  1  1  1  1  1  1  2  2  2  2 -2 -2  2  2 -2 -2 -2 -2 -2 -2
 1  1  1  1  1  1  1  1 -2 -2 -2 -2  2  2  2  2 -2 -2 -2 -2  2  2
 1  1  1  1  1  1  1  1  2  2 -2 -2 -2 -2 -2 -2  2  2 -2 -2  2  2
 1  1  1  1  1  1  1  1 -2 -2  2  2 -2 -2 -2 -2 -2 -2  2  2  2  2
 1  1  1  1  1  1  1  1 -2 -2 -2 -2 -2 -2  2  2  2  2  2  2 -2 -2
 2 -2  2  2 -2  2 -2 -2  4 -4  0  0  0  0  0  0  0  0  0  0  0  0
 2 -2  2  2 -2  2 -2 -2 -4  4  0  0  0  0  0  0  0  0  0  0  0  0
 2  2 -2  2 -2 -2  2 -2  0  0  4 -4  0  0  0  0  0  0  0  0  0  0
 2  2 -2  2 -2 -2  2 -2  0  0 -4  4  0  0  0  0  0  0  0  0  0  0
 2  2  2 -2  2 -2 -2 -2  0  0  0  0  4 -4  0  0  0  0  0  0  0  0
 2  2  2 -2  2 -2 -2 -2  0  0  0  0 -4  4  0  0  0  0  0  0  0  0
 2 -2 -2  2  2 -2 -2  2  0  0  0  0  0  0  4 -4  0  0  0  0  0  0
 2 -2 -2  2  2 -2 -2  2  0  0  0  0  0  0 -4  4  0  0  0  0  0  0
 2  2 -2 -2 -2  2 -2  2  0  0  0  0  0  0  0  0  4 -4  0  0  0  0
 2  2 -2 -2 -2  2 -2  2  0  0  0  0  0  0  0  0 -4  4  0  0  0  0
 2 -2  2 -2 -2 -2  2  2  0  0  0  0  0  0  0  0  0  0  4 -4  0  0
 2 -2  2 -2 -2 -2  2  2  0  0  0  0  0  0  0  0  0  0 -4  4  0  0
 2 -2 -2 -2  2  2  2 -2  0  0  0  0  0  0  0  0  0  0  0  0 -4  4
 2 -2 -2 -2  2  2  2 -2  0  0  0  0  0  0  0  0  0  0  0  0  4 -4
"""
EIGHT_S = np.array(
    [[int(x) for x in line.split()] for line in EIGHT_S_ROWS.strip().splitlines()]
)
T_DIAG = np.array(
    [1] * 8 + [1, -1] * 6 + [1j, -1j], dtype=complex
)


class TestGroup:
    def test_multiplication_is_componentwise_xor(self):
        assert R * G == GroupElement(1, 1, 0)
        assert (R * G) * B == GroupElement(1, 1, 1)
        assert R * R == IDENTITY

    def test_letters_round_trip(self):
        for el in GROUP_ELEMENTS:
            assert GroupElement.from_letters(el.letters or "1") == el

    def test_bad_letters(self):
        with pytest.raises(ValueError):
            GroupElement.from_letters("RR")
        with pytest.raises(ValueError):
            GroupElement.from_letters("Q")


class TestCocycles:
    def test_alpha_examples(self):
        assert cocycle_alpha(R, G, B) == -1
        for b, c in itertools.product(GROUP_ELEMENTS, repeat=2):
            assert cocycle_alpha(IDENTITY, b, c) == 1

    def test_omega_examples(self):
        assert cocycle_omega(R, G, B) == -1
        assert cocycle_omega(R, B, G) == 1

    def test_omega_is_slant_product_of_alpha(self):
        # omega_a(b,c) = alpha(a,b,c) alpha(b,c,a) / alpha(b,a,c)
        for a, b, c in itertools.product(GROUP_ELEMENTS, repeat=3):
            expected = (
                cocycle_alpha(a, b, c)
                * cocycle_alpha(b, c, a)
                * cocycle_alpha(b, a, c)
            )
            assert cocycle_omega(a, b, c) == expected

    def test_omega_two_cocycle_identity(self):
        for a in GROUP_ELEMENTS:
            for b, c, d in itertools.product(GROUP_ELEMENTS, repeat=3):
                lhs = cocycle_omega(a, b, c) * cocycle_omega(a, b * c, d)
                rhs = cocycle_omega(a, b, c * d) * cocycle_omega(a, c, d)
                assert lhs == rhs


class TestLabels:
    def test_twenty_two_labels(self):
        assert len(ANYONS) == 22
        assert sum(1 for l in ANYONS if l.flux.is_identity) == 8
        assert sum(1 for l in ANYONS if not l.flux.is_identity) == 14

    def test_canonical_order(self):
        names = [l.name for l in ANYONS]
        assert names[:8] == ["1", "e_R", "e_G", "e_B", "e_RG", "e_GB", "e_RB", "e_RGB"]
        assert names[8:14] == ["m_R", "f_R", "m_G", "f_G", "m_B", "f_B"]
        assert names[-2:] == ["s_RGB", "sbar_RGB"]

    def test_dims(self):
        for label in ANYONS:
            assert label.dim == (1 if label.flux.is_identity else 2)

    def test_lookup_and_unknown(self):
        assert anyon("m_RG").flux == R * G
        with pytest.raises(KeyError):
            anyon("m_Q")


class TestReps:
    def test_generator_tables(self):
        assert np.allclose(rep(anyon("m_R"))(R), I2)
        assert np.allclose(rep(anyon("f_R"))(R), -I2)
        assert np.allclose(rep(anyon("m_R"))(G), X)
        assert np.allclose(rep(anyon("m_R"))(B), Z)
        assert np.allclose(rep(anyon("m_G"))(R), Z)
        assert np.allclose(rep(anyon("m_G"))(B), X)
        assert np.allclose(rep(anyon("m_B"))(R), X)
        assert np.allclose(rep(anyon("m_B"))(G), Z)
        assert np.allclose(rep(anyon("m_RG"))(R), X)
        assert np.allclose(rep(anyon("f_RG"))(R), -X)
        assert np.allclose(rep(anyon("m_RG"))(G), X)
        assert np.allclose(rep(anyon("m_RG"))(B), Z)

    def test_charge_reps_are_group_characters(self):
        for label in ANYONS[:8]:
            for b, c in itertools.product(GROUP_ELEMENTS, repeat=2):
                prod = rep(label)(b)[0, 0] * rep(label)(c)[0, 0]
                assert prod == rep(label)(b * c)[0, 0]

    def test_projectivity_exact(self):
        # Rep(b) Rep(c) = omega_flux(b, c) Rep(bc), all labels, all 64 pairs.
        for label in ANYONS:
            r = rep(label)
            for b, c in itertools.product(GROUP_ELEMENTS, repeat=2):
                lhs = r(b) @ r(c)
                rhs = cocycle_omega(label.flux, b, c) * r(b * c)
                assert np.allclose(lhs, rhs, atol=1e-12)

    def test_projectivity_example_single_flux(self):
        r = rep(anyon("m_R"))
        assert np.allclose(r(G) @ r(B), -r(G * B))

    def test_flux_characters_supported_on_commuting_elements(self):
        # Tr Rep(b) vanishes unless Rep(b) is a multiple of the identity.
        for label in ANYONS[8:]:
            for b in GROUP_ELEMENTS:
                chi = character(label, b)
                if abs(chi):
                    assert np.allclose(
                        rep(label)(b), (chi / 2) * np.eye(2), atol=1e-12
                    )


class TestModularData:
    def test_s_matches_tabulated_matrix_entrywise(self):
        data = modular_data()
        assert np.array_equal(np.round(8 * data.s.real).astype(int), EIGHT_S)
        assert np.allclose(data.s.imag, 0)

    def test_t_matches_tabulated_diagonal(self):
        data = modular_data()
        assert np.allclose(data.t, T_DIAG)

    def test_s_unitary_symmetric_involution(self):
        s = modular_data().s
        assert np.allclose(s, s.T)
        assert np.allclose(s @ s.conj().T, np.eye(22))
        # charge conjugation is trivial for this theory: S^2 = 1
        assert np.allclose(s @ s, np.eye(22))

    def test_modular_relation(self):
        data = modular_data()
        st = data.s @ np.diag(data.t)
        assert np.allclose(np.linalg.matrix_power(st, 3), data.s @ data.s)

    def test_quantum_dimensions(self):
        data = modular_data()
        assert data.dims == (1,) * 8 + (2,) * 14
        assert sum(d * d for d in data.dims) == 64

    def test_t_entries_are_fourth_roots_of_unity(self):
        for t in modular_data().t:
            assert np.isclose(abs(t), 1)
            assert np.isclose(t**4, 1)


def _fusion_names(a, b):
    return {k.name: v for k, v in fuse(anyon(a), anyon(b)).items()}


class TestFusion:
    def test_identity_fusion(self):
        for label in ANYONS:
            assert fuse(anyon("1"), label) == {label: 1}

    def test_charge_fusion_is_group_law(self):
        assert _fusion_names("e_R", "e_G") == {"e_RG": 1}
        assert _fusion_names("e_RG", "e_RG") == {"1": 1}

    def test_charge_onto_flux(self):
        assert _fusion_names("m_R", "e_R") == {"f_R": 1}
        assert _fusion_names("m_R", "e_G") == {"m_R": 1}
        assert _fusion_names("m_R", "e_B") == {"m_R": 1}
        assert _fusion_names("m_RG", "e_R") == {"f_RG": 1}
        assert _fusion_names("m_RG", "e_G") == {"f_RG": 1}
        assert _fusion_names("m_RG", "e_RG") == {"m_RG": 1}
        assert _fusion_names("s_RGB", "e_R") == {"sbar_RGB": 1}
        assert _fusion_names("s_RGB", "e_RGB") == {"sbar_RGB": 1}
        assert _fusion_names("s_RGB", "e_RG") == {"s_RGB": 1}

    def test_flux_flux(self):
        assert _fusion_names("m_B", "m_B") == {"1": 1, "e_R": 1, "e_G": 1, "e_RG": 1}
        assert _fusion_names("m_R", "m_R") == {"1": 1, "e_G": 1, "e_B": 1, "e_GB": 1}
        assert _fusion_names("m_R", "m_G") == {"m_RG": 1, "f_RG": 1}
        assert _fusion_names("m_RG", "m_G") == {"m_R": 1, "f_R": 1}
        assert _fusion_names("m_RG", "m_B") == {"s_RGB": 1, "sbar_RGB": 1}
        assert _fusion_names("m_RG", "m_RG") == {"1": 1, "e_RG": 1, "e_B": 1, "e_RGB": 1}

    def test_fusion_with_chiral_flux(self):
        assert _fusion_names("s_RGB", "m_R") == {"m_GB": 1, "f_GB": 1}
        assert _fusion_names("s_RGB", "m_RG") == {"m_B": 1, "f_B": 1}
        assert _fusion_names("s_RGB", "s_RGB") == {
            "1": 1,
            "e_RG": 1,
            "e_GB": 1,
            "e_RB": 1,
        }

    def test_every_product_is_integral_and_dimension_consistent(self):
        for i, j in itertools.product(ANYONS, repeat=2):
            out = fuse(i, j)  # raises NonIntegerMultiplicity on any defect
            assert sum(n * k.dim for k, n in out.items()) == i.dim * j.dim
            assert all(n > 0 for n in out.values())

    def test_fusion_commutes(self):
        for i, j in itertools.combinations(ANYONS, 2):
            assert fuse(i, j) == fuse(j, i)


def _embed(op, sites, n):
    """Single- or two-site operator -> dense operator on n qubits."""
    mats = [np.eye(2, dtype=complex)] * n
    for m, s in zip(op, sites):
        mats[s] = m
    full = mats[0]
    for m in mats[1:]:
        full = np.kron(full, m)
    return full


class TestBraiding:
    def test_braid_with_vacuum_is_identity(self):
        for label in ANYONS:
            op = braid_full(label, anyon("1"))
            assert np.allclose(op, np.eye(op.shape[0]))

    def test_green_around_blue_is_x_tensor_z(self):
        op = braid_full(anyon("m_G"), anyon("m_B"))
        assert np.allclose(op, np.kron(X, Z))

    def test_dimension_mismatch(self):
        with pytest.raises(anyons.DimensionMismatch):
            braid_full(anyon("m_G"), anyon("m_B"), np.ones(3))

    def test_pair_singlets(self):
        # A green pair from the vacuum is the Bell state fixed by ZZ and XX.
        v = pair_singlet(anyon("m_G"))
        assert np.allclose(_embed([Z, Z], [0, 1], 2) @ v, v)
        assert np.allclose(_embed([X, X], [0, 1], 2) @ v, v)
        for label in ANYONS[8:]:
            w = pair_singlet(label)
            r = rep(label)
            for b in GROUP_ELEMENTS:
                assert np.allclose(np.kron(r(b), r(b).conj()) @ w, w)

    def test_braid_toggles_fusion_channels_to_red_charge(self):
        # Pairs m_G on sites (0,1) and m_B on (2,3); braid site 1 around 2.
        state = np.kron(pair_singlet(anyon("m_G")), pair_singlet(anyon("m_B")))
        braid = _embed([X, Z], [1, 2], 4)
        out = braid @ state
        # each pair is now charged under the red symmetry action
        assert np.allclose(_embed([Z, Z], [0, 1], 4) @ out, -out)
        assert np.allclose(_embed([X, X], [0, 1], 4) @ out, out)
        assert np.allclose(_embed([X, X], [2, 3], 4) @ out, -out)
        assert np.allclose(_embed([Z, Z], [2, 3], 4) @ out, out)

    def test_borromean_commutator_is_minus_one(self):
        # Pairs m_R (0,1), m_G (2,3), m_B (4,5). Braiding red around green
        # applies X1 Z3; red around blue applies Z1 X5. Their group
        # commutator is the scalar -1: the three-loop linking phase.
        n = 6
        rg = _embed([rep(anyon("m_R"))(G), rep(anyon("m_G"))(R)], [1, 3], n)
        rb = _embed([rep(anyon("m_R"))(B), rep(anyon("m_B"))(R)], [1, 5], n)
        comm = np.linalg.inv(rb) @ np.linalg.inv(rg) @ rb @ rg
        assert np.allclose(comm, -np.eye(2**n))


class TestD4Dictionary:
    def test_bijection(self):
        rows = d4_dictionary()
        assert len(rows) == 22
        assert {r.anyon_name for r in rows} == {l.name for l in ANYONS}

    def test_dims_and_spins_match_modular_data(self):
        data = modular_data()
        for row in d4_dictionary():
            idx = anyons.ANYON_INDEX[row.anyon_name]
            assert row.dim == ANYONS[idx].dim
            assert np.isclose(row.t, data.t[idx])

    def test_named_rows(self):
        rows = {(r.conjugacy_class, r.irrep): r for r in d4_dictionary()}
        assert rows[("1", "1")].anyon_name == "1"
        chiral = rows[("r", "w")]
        assert chiral.anyon_name == "s_RGB"
        assert chiral.dim == 2
        assert np.isclose(chiral.t, 1j)
        assert rows[("r^2", "2")].anyon_name == "f_B"
        assert np.isclose(rows[("r^2", "2")].t, -1)

    def test_class_sizes(self):
        rows = d4_dictionary()
        by_class = {}
        for r in rows:
            by_class.setdefault(r.conjugacy_class, []).append(r)
        assert {k: len(v) for k, v in by_class.items()} == {
            "1": 5,
            "r^2": 5,
            "r": 4,
            "s": 4,
            "rs": 4,
        }
