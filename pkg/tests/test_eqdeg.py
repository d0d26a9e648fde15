import math

import numpy as np
import pytest

from so2deg.brouwer import brouwer_degree
from so2deg.errors import BrouwerIndexError, ResonanceError, SingularHessianError
from so2deg.eqdeg import (
    RepresentationDescriptor,
    brouwer_index_degenerate,
    brouwer_index_nondegenerate,
    exclusion_set,
    index_at_infinity_sign,
    index_IV,
    linear_degree,
    linear_degree_via_product,
    operator_eigenspaces,
)
from so2deg.ring import RingElement, UNIT, scalar_mul
from so2deg.spectral import jk_table, morse_index

from conftest import random_nonsingular_hessian, random_sym

S = 1 / (2 * math.sqrt(2))
TWO_PI = 2 * math.pi
V_INF_65 = np.diag([3.5, -2.0, 0.0, -S])
H_ORIGIN_65 = np.diag([4.5, -1.0, 1.0, 1.0 - S])
H_E4_65 = np.diag([3.5 + S, -2.0 + S, S, -3 / (4 * math.sqrt(2))])


class TestLinearDegree:
    def test_negative_definite_is_unit(self):
        assert linear_degree(-np.eye(3), 1.3) == UNIT
        assert linear_degree_via_product(-np.eye(3), 1.3) == UNIT

    def test_sitnikov_hessian(self):
        assert linear_degree(np.array([[8.0]]), TWO_PI) == RingElement(-1, {1: -1, 2: -1})

    def test_e4_hessian(self):
        assert linear_degree(H_E4_65, TWO_PI) == RingElement(1, {1: 1})
        assert linear_degree_via_product(H_E4_65, TWO_PI) == RingElement(1, {1: 1})

    def test_scalar_five(self):
        # 5 exceeds the thresholds 0, 1, 4 and not 9: factors R[1,0], R[1,1], R[1,2]
        factors = [RingElement(-1), RingElement(1, {1: 1}), RingElement(1, {2: 1})]
        expect = factors[0] * factors[1] * factors[2]
        assert expect == RingElement(-1, {1: -1, 2: -1})
        assert linear_degree_via_product(np.array([[5.0]]), TWO_PI) == expect
        assert linear_degree(np.array([[5.0]]), TWO_PI) == expect

    def test_resonant_raises(self):
        with pytest.raises(ResonanceError):
            linear_degree(H_ORIGIN_65, TWO_PI)
        with pytest.raises(ResonanceError):
            linear_degree_via_product(np.diag([0.0, 1.0]), 3.0)

    @pytest.mark.parametrize("seed", range(40))
    def test_two_paths_agree(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        A, T = random_sym(rng, n), float(rng.uniform(0.3, 10))
        try:
            d1 = linear_degree(A, T)
        except ResonanceError:
            pytest.skip("resonant draw")
        assert d1 == linear_degree_via_product(A, T)

    @pytest.mark.parametrize("seed", range(10))
    def test_sign_law(self, seed):
        rng = np.random.default_rng(100 + seed)
        A = random_sym(rng, 4)
        T = float(rng.uniform(0.5, 5))
        assert linear_degree(A, T).so2 == (-1) ** jk_table(A, T)[0]

    def test_operator_eigenspaces_group_equal_values(self):
        # A = 0 on two modes: eigenvalue 1 + 0 at k=0 is not above one; nothing is collected
        assert operator_eigenspaces(np.zeros((2, 2)), 1.0) == []
        spaces = operator_eigenspaces(np.diag([3.0, 3.0]), 1.0)
        assert spaces[-1][1].pairs == ((2, 0),)


class TestRepresentation:
    def test_from_counts(self):
        rep = RepresentationDescriptor.from_counts({0: 2, 3: 1, 1: 0})
        assert rep.pairs == ((2, 0), (1, 3))
        assert rep.trivial_dim == 2

    def test_neg_identity(self):
        rep = RepresentationDescriptor(((1, 0), (2, 1), (1, 4)))
        assert rep.neg_identity_degree() == RingElement(-1, {1: -2, 4: -1})

    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            RepresentationDescriptor(((1, 3), (1, 1)))


class TestBrouwer:
    def test_worked_example_points(self):
        assert brouwer_index_nondegenerate(H_ORIGIN_65) == -1
        assert brouwer_index_nondegenerate(H_E4_65) == 1
        assert brouwer_index_nondegenerate(np.eye(2)) == 1

    def test_singular_rejected(self):
        with pytest.raises(SingularHessianError):
            brouwer_index_nondegenerate(np.diag([1.0, 0.0]))

    def test_degenerate_examples(self):
        assert brouwer_index_degenerate(lambda x: x, np.zeros(1), 0.5) == -1
        assert brouwer_index_degenerate(lambda x: x**3, np.zeros(1), 0.5) == -1
        assert brouwer_index_degenerate(lambda x: np.array([x[0] ** 2 - x[1] ** 2, 2 * x[0] * x[1]]),
                                        np.zeros(2), 1.0) == 2

    def test_zero_on_sphere(self):
        with pytest.raises(BrouwerIndexError):
            brouwer_degree(lambda x: x - np.array([1.0, 0.0]), np.zeros(2), 1.0)

    def test_dimension_limit(self):
        with pytest.raises(BrouwerIndexError):
            brouwer_degree(lambda x: x, np.zeros(4), 1.0)

    @pytest.mark.parametrize("seed", range(12))
    def test_oracle_agrees_with_sign_formula(self, seed):
        rng = np.random.default_rng(seed)
        n = 1 + seed % 3
        H = random_nonsingular_hessian(rng, n)
        grad = lambda x: H @ x
        assert brouwer_index_degenerate(grad, np.zeros(n), 1.0) == brouwer_index_nondegenerate(H)


class TestInfinity:
    def test_examples(self):
        assert index_at_infinity_sign(V_INF_65, 4) == 1
        assert index_at_infinity_sign(np.zeros((1, 1)), 1) == -1
        assert index_at_infinity_sign(-np.eye(2), 2) == 1


class TestExclusion:
    def test_gcd_closure(self):
        assert exclusion_set({2, 3}) == {1, 2, 3}
        assert exclusion_set({4, 6}) == {2, 4, 6}
        assert exclusion_set(set()) == frozenset()

    @pytest.mark.parametrize("modes", [{6, 10, 15}, {4, 8, 12}, {9}, {2, 7, 12}])
    def test_closed_under_gcd(self, modes):
        K = exclusion_set(modes)
        assert all(math.gcd(a, b) in K for a in K for b in K)


class TestIndexIV:
    def test_origin_65(self):
        ind = index_IV("origin", H_ORIGIN_65, TWO_PI)
        assert ind.brouwer == -1
        assert ind.resonant and ind.resonant_modes == {1}
        assert ind.value.coordinate(0) == -1
        assert ind.value.coordinate(1) is None
        assert ind.value.coordinate(2) == -1
        assert ind.value.coordinate(3) == 0

    def test_e4_65(self):
        ind = index_IV("+e4", H_E4_65, TWO_PI)
        assert not ind.resonant
        assert ind.value == RingElement(1, {1: 1})

    def test_two_three_resonance(self):
        # eigenvalues at the k = 2 and k = 3 thresholds for T = 2 pi
        ind = index_IV("p", np.diag([4.0, 9.0, -1.0]), TWO_PI)
        assert ind.exclusion_contrib == {1, 2, 3}
        assert ind.value.undefined == {1, 2, 3}

    def test_singular_without_brouwer(self):
        with pytest.raises(BrouwerIndexError):
            index_IV("p", np.diag([0.0, 2.0]), 1.0)

    def test_singular_with_brouwer(self):
        ind = index_IV("p", np.diag([0.0, 2.0]), 1.0, brouwer=-1, brouwer_source="test")
        assert ind.brouwer == -1 and ind.provenance["brouwer"] == "test"

    @pytest.mark.parametrize("seed", range(15))
    def test_scalar_consistency(self, seed):
        rng = np.random.default_rng(seed)
        H = random_sym(rng, 3)
        T = float(rng.uniform(0.5, 6))
        ind = index_IV("p", H, T)
        if ind.resonant or morse_index(H).degenerate:
            pytest.skip("resonant draw")
        table = jk_table(H, T)
        expect = scalar_mul(ind.brouwer, RingElement(1, {k: v for k, v in table.items() if k >= 1}))
        assert ind.value == expect
        # nondegenerate: ind = (-1)^j_0, so the index is the linear degree itself
        assert ind.value == linear_degree(H, T)

    def test_json(self):
        d = index_IV("origin", H_ORIGIN_65, TWO_PI).to_dict()
        assert d["undefined"] == [1]
        assert d["provenance"]["brouwer"]
