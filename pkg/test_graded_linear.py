"""
Tests for graded modules, maps, complexes, cohomology and mapping cones
"""
import unittest
from fractions import Fraction

import numpy as np

from src.gallery import random_complex
from src.graded_linear import (
    DOUBLE, EXACT, ChainComplex, GradedMap, GradedModule, SignKind, SignOperator,
    cohomology, compose, hom_complex, induced_map, is_acyclic, is_quasi_iso, mapping_cone,
    scalars_for, shift_complex, xi_map,
)


def two_term(d_value=1, scalars=EXACT):
    """k in degree 0 and k in degree 1 with d = d_value"""
    module = GradedModule({0: 1, 1: 1})
    d = GradedMap(module, module, 1, {0: scalars.matrix([[d_value]])}, scalars)
    return ChainComplex(module, d, scalars)


class TestGradedModule(unittest.TestCase):
    """Test graded module bookkeeping"""

    def test_shift_moves_degrees_down(self):
        """Test M[q]^k = M^{k+q}"""
        module = GradedModule({0: 2, 3: 1})
        self.assertEqual(module.shift(1).dims, {-1: 2, 2: 1})
        self.assertEqual(module.shift(1).shift(-1), module)

    def test_direct_sum_and_euler(self):
        """Test direct sum adds dimensions and Euler characteristic is additive"""
        a, b = GradedModule({0: 1, 1: 2}), GradedModule({1: 1, 2: 3})
        total = a.direct_sum(b)
        self.assertEqual(total.dims, {0: 1, 1: 3, 2: 3})
        self.assertEqual(total.euler_characteristic(), a.euler_characteristic() + b.euler_characteristic())

    def test_degree_cap(self):
        """Test degrees outside the cap are rejected"""
        with self.assertRaises(ValueError):
            GradedModule({20: 1})

    def test_dict_round_trip(self):
        """Test module JSON form"""
        module = GradedModule({-1: 2, 0: 1})
        self.assertEqual(GradedModule.from_dict(module.to_dict()), module)


class TestGradedMap(unittest.TestCase):
    """Test homogeneous maps"""

    def test_dense_round_trip(self):
        """Test to_dense/from_dense keep the degree blocks"""
        module = GradedModule({0: 1, 1: 2})
        m = GradedMap(module, module, 1, {0: EXACT.matrix([[1], [Fraction(1, 2)]])})
        back = GradedMap.from_dense(module, module, 1, m.to_dense())
        self.assertTrue(back.equals(m))

    def test_block_shape_checked(self):
        """Test a block of the wrong shape raises"""
        module = GradedModule({0: 1, 1: 2})
        with self.assertRaises(ValueError):
            GradedMap(module, module, 1, {0: EXACT.matrix([[1, 2]])})

    def test_compose_degrees_add(self):
        """Test composition adds degrees"""
        module = GradedModule({0: 1, 1: 1, 2: 1})
        up = GradedMap(module, module, 1, {0: EXACT.matrix([[1]]), 1: EXACT.matrix([[2]])})
        twice = compose(up, up)
        self.assertEqual(twice.degree, 2)
        self.assertEqual(twice.block(0)[0, 0], 2)

    def test_xi_map(self):
        """Test the alternating identity is -1 in even and +1 in odd degrees"""
        module = GradedModule({0: 1, 1: 1})
        xi = xi_map(module)
        self.assertEqual(xi.block(0)[0, 0], -1)
        self.assertEqual(xi.block(1)[0, 0], 1)

    def test_sign_operators(self):
        """Test T = J∘K and that squares are the identity"""
        j, k = SignOperator(SignKind.J), SignOperator(SignKind.K)
        t = j.then(k)
        for p in range(3):
            for e in range(-2, 3):
                self.assertEqual(t.sign(p, e), j.sign(p, e) * k.sign(p, e))
                self.assertEqual(j.then(j).sign(p, e), 1)


class TestScalars(unittest.TestCase):
    """Test exact and floating backends"""

    def test_exact_rank_and_nullspace(self):
        """Test exact rank/nullspace of a rank-1 matrix"""
        m = EXACT.matrix([[1, 2], [2, 4]])
        self.assertEqual(EXACT.rank(m), 1)
        kernel = EXACT.nullspace(m)
        self.assertTrue(EXACT.is_zero(m @ kernel))

    def test_row_reduce_rational(self):
        """Test the echelon form of a rank-deficient rational matrix"""
        m = EXACT.matrix([["1/2", "1/3", 1], [1, "2/3", 2], [0, 1, "1/4"]])
        rref, pivots = EXACT.row_reduce(m)
        self.assertEqual(pivots, [0, 1])
        expected = EXACT.matrix([[1, 0, "11/6"], [0, 1, "1/4"], [0, 0, 0]])
        self.assertTrue(np.array_equal(rref, expected))
        self.assertEqual(EXACT.rank(m), 2)
        self.assertTrue(EXACT.is_zero(m @ EXACT.nullspace(m)))

    def test_exact_solve(self):
        """Test an invertible system solves to the exact rational answer"""
        a = EXACT.matrix([[2, 1, 1], [1, 3, 2], [1, 0, 0]])
        x = EXACT.matrix([["1/2"], ["-1/3"], [2]])
        solved = EXACT.solve(a, a @ x)
        self.assertTrue(np.array_equal(solved, x))
        self.assertEqual(solved[1, 0], Fraction(-1, 3))

    def test_random_rank_matches_floating(self):
        """Test exact rank agrees with SVD rank on small integer products"""
        rng = np.random.default_rng(5)
        for _ in range(30):
            k = int(rng.integers(1, 4))
            left = rng.integers(-3, 4, size=(4, k))
            right = rng.integers(-3, 4, size=(k, 5))
            product = left @ right
            exact = EXACT.matrix(product.tolist())
            self.assertEqual(EXACT.rank(exact), np.linalg.matrix_rank(product.astype(float)))

    def test_double_rank(self):
        """Test floating rank with the default threshold"""
        m = np.array([[1.0, 2.0], [2.0, 4.0 + 1e-15]])
        self.assertEqual(DOUBLE.rank(m), 1)

    def test_inconsistent_solve(self):
        """Test solve returns None on an inconsistent system"""
        a = EXACT.matrix([[1], [1]])
        b = EXACT.matrix([[1], [2]])
        self.assertIsNone(EXACT.solve(a, b))

    def test_scalars_for(self):
        """Test backend lookup by name"""
        self.assertTrue(scalars_for('exact').exact)
        self.assertFalse(scalars_for('double').exact)


class TestCohomology(unittest.TestCase):
    """Test complexes and cohomology"""

    def test_invalid_complex_raises(self):
        """Test d∘d != 0 is rejected"""
        module = GradedModule({0: 1, 1: 1, 2: 1})
        d = GradedMap(module, module, 1, {0: EXACT.matrix([[1]]), 1: EXACT.matrix([[1]])})
        with self.assertRaises(ValueError):
            ChainComplex(module, d)

    def test_acyclic_two_term(self):
        """Test d = id on k⁰ ⊕ k¹ is acyclic"""
        self.assertTrue(is_acyclic(two_term(1)))

    def test_zero_differential(self):
        """Test zero differential keeps every dimension"""
        h = cohomology(two_term(0))
        self.assertEqual(h.dims, {0: 1, 1: 1})

    def test_random_euler_characteristic(self):
        """Test χ(H) = χ(C) on random complexes"""
        rng = np.random.default_rng(11)
        for _ in range(100):
            dims = {int(d): int(rng.integers(1, 3)) for d in range(-1, 2)}
            c = random_complex(dims, rng)
            self.assertEqual(cohomology(c).module.euler_characteristic(), c.module.euler_characteristic())

    def test_shift_preserves_cohomology(self):
        """Test shifted cohomology is reindexed cohomology"""
        c = two_term(0)
        self.assertEqual(cohomology(shift_complex(c, 2)).dims, {-2: 1, -1: 1})


class TestMappingCone(unittest.TestCase):
    """Test cones and quasi-isomorphisms"""

    def test_identity_cone_acyclic(self):
        """Test the cone of the identity is acyclic"""
        c = two_term(0)
        cone, defect = mapping_cone(GradedMap.identity(c.module), c, c)
        self.assertTrue(defect.is_zero())
        self.assertTrue(is_acyclic(cone))

    def test_zero_map_is_not_quasi_iso(self):
        """Test the zero map on a non-acyclic complex"""
        c = two_term(0)
        self.assertFalse(is_quasi_iso(GradedMap.zero(c.module, c.module, 0), c, c))

    def test_scaled_identity_is_quasi_iso(self):
        """Test 2·id is a quasi-isomorphism"""
        c = two_term(0)
        self.assertTrue(is_quasi_iso(GradedMap.identity(c.module).scale(2), c, c))

    def test_non_closed_map(self):
        """Test a map that is not closed gets no cone and is_quasi_iso raises"""
        c = two_term(1)
        phi = GradedMap(c.module, c.module, 0, {0: EXACT.matrix([[1]])})
        cone, defect = mapping_cone(phi, c, c)
        self.assertIsNone(cone)
        self.assertFalse(defect.is_zero())
        with self.assertRaises(ValueError):
            is_quasi_iso(phi, c, c)

    def test_acyclic_target(self):
        """Test the zero map into an acyclic complex from an acyclic one is a quasi-iso"""
        c = two_term(1)
        self.assertTrue(is_quasi_iso(GradedMap.zero(c.module, c.module, 0), c, c))


class TestHomComplex(unittest.TestCase):
    """Test internal Hom complexes"""

    def test_hom_square_zero(self):
        """Test d∘d = 0 on Hom between random complexes"""
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = random_complex({0: 1, 1: 2}, rng)
            b = random_complex({-1: 1, 0: 1, 1: 1}, rng)
            hom, _ = hom_complex(a, b)
            self.assertTrue(hom.is_valid())

    def test_end_of_acyclic_is_acyclic(self):
        """Test Hom(C, C) is acyclic for acyclic C"""
        c = two_term(1)
        hom, _ = hom_complex(c, c)
        self.assertTrue(is_acyclic(hom))

    def test_end_of_point(self):
        """Test H⁰(Hom(k, k)) = k"""
        module = GradedModule({0: 1})
        c = ChainComplex(module)
        hom, _ = hom_complex(c, c)
        self.assertEqual(cohomology(hom).dims, {0: 1})

    def test_induced_identity(self):
        """Test the identity induces identity matrices on cohomology"""
        c = two_term(0)
        induced = induced_map(GradedMap.identity(c.module), c, c)
        for k, m in induced.items():
            self.assertTrue(EXACT.is_zero(m - EXACT.identity(m.shape[0])))


if __name__ == '__main__':
    unittest.main()
