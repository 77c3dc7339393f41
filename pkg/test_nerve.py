"""
Tests for the dg-nerve: Maurer-Cartan check, faces, horn filling and cube coherence
"""
import unittest

import numpy as np

from src.gallery import random_element, random_nerve_simplex, three_object_category
from src.graded_linear import ChainComplex, GradedModule
from src.nerve import (
    CubeFunctor, CubePoset, NerveEngine, NerveSimplex, SmallDgCategory, chain_for_order,
    coherent_simplex, cube_poset, cube_to_coherence, horn_fill, horn_from_faces, horn_tuples,
    increasing_tuples, maximal_chain_count, mc_check_nerve, nerve_degeneracy, nerve_faces,
    permutation_sign, poset_nerve_simplices,
)


def horn_of(simplex, q):
    """Restrict a simplex to the tuples of its q-th horn"""
    present = set(horn_tuples(simplex.dim, q))
    return NerveSimplex(simplex.category, simplex.objects,
                        {t: e for t, e in simplex.components.items() if t in present})


class TestCategory(unittest.TestCase):
    """Test the matrix dg-category"""

    def setUp(self):
        self.category = three_object_category()

    def test_validates(self):
        """Test units, Leibniz rule and associativity"""
        ok, issues = self.category.validate()
        self.assertTrue(ok, issues)

    def test_dict_round_trip(self):
        """Test structure-constant JSON reproduces composition"""
        back = SmallDgCategory.from_dict(self.category.to_dict())
        rng = np.random.default_rng(4)
        a = random_element(self.category, 'y', 'z', 0, rng)
        b = random_element(self.category, 'x', 'y', 0, rng)
        self.assertTrue(back.compose(a, b).equals(self.category.compose(a, b)))

    def test_element_dimension_checked(self):
        """Test coordinates must match the hom dimension"""
        with self.assertRaises(ValueError):
            self.category.element('x', 'x', 0, [1, 2])

    def test_compose_mismatch(self):
        """Test composing non-adjacent elements raises"""
        with self.assertRaises(ValueError):
            self.category.compose(self.category.identity('x'), self.category.identity('y'))


class TestNerveSimplex(unittest.TestCase):
    """Test simplices of the nerve"""

    def setUp(self):
        self.category = three_object_category()
        self.rng = np.random.default_rng(20240601)

    def test_random_simplices_satisfy_mc(self):
        """Test random simplices built from closed edges"""
        for objects in (['x', 'y'], ['x', 'y', 'z'], ['x', 'y', 'y', 'z'], ['y', 'y', 'y', 'y']):
            simplex = random_nerve_simplex(self.category, objects, self.rng)
            ok, issues = mc_check_nerve(simplex)
            self.assertTrue(ok, issues)

    def test_component_degree_checked(self):
        """Test components must lie in C^{1-j}"""
        with self.assertRaises(ValueError):
            NerveSimplex(self.category, ['x', 'x'], {(0, 1): self.category.zero('x', 'x', 1)})

    def test_degenerate_components(self):
        """Test degenerate edges give identities and longer tuples zero"""
        simplex = random_nerve_simplex(self.category, ['y', 'y', 'y'], self.rng)
        self.assertTrue(simplex.component((1, 1)).equals(self.category.identity('y')))
        self.assertTrue(simplex.component((0, 1, 1)).is_zero())

    def test_faces_and_degeneracies(self):
        """Test faces and degeneracies of an MC simplex satisfy MC"""
        simplex = random_nerve_simplex(self.category, ['x', 'y', 'y', 'z'], self.rng)
        for q in range(4):
            self.assertTrue(mc_check_nerve(nerve_faces(simplex, q))[0])
            self.assertTrue(mc_check_nerve(nerve_degeneracy(simplex, q))[0])
        with self.assertRaises(IndexError):
            nerve_faces(simplex, 4)

    def test_dict_round_trip(self):
        """Test JSON form of a simplex"""
        simplex = random_nerve_simplex(self.category, ['x', 'y', 'z'], self.rng)
        back = NerveSimplex.from_dict(simplex.to_dict(), self.category)
        for t in increasing_tuples(2):
            self.assertTrue(back.component(t).equals(simplex.component(t)))


class TestHornFill(unittest.TestCase):
    """Test inner horn filling"""

    def setUp(self):
        self.category = three_object_category()
        self.rng = np.random.default_rng(31)

    def test_fill_reproduces_missing_face(self):
        """Test filling a random simplex's horn with its own top recovers the missing face"""
        for objects in (['x', 'y', 'z'], ['y', 'y', 'y'], ['x', 'y', 'y', 'z'], ['y', 'y', 'y', 'z']):
            simplex = random_nerve_simplex(self.category, objects, self.rng)
            k = simplex.dim
            full = tuple(range(k + 1))
            for q in range(1, k):
                filled, issues = horn_fill(horn_of(simplex, q), q, simplex.component(full))
                self.assertIsNotNone(filled, issues)
                missing = full[:q] + full[q + 1:]
                self.assertTrue(filled.component(missing).equals(simplex.component(missing)))

    def test_default_top_is_zero(self):
        """Test the default fill puts zero on the top tuple"""
        simplex = random_nerve_simplex(self.category, ['y', 'y', 'y'], self.rng)
        filled, _ = horn_fill(horn_of(simplex, 1), 1)
        self.assertTrue(filled.component((0, 1, 2)).is_zero())
        self.assertTrue(mc_check_nerve(filled)[0])

    def test_outer_horn_rejected(self):
        """Test q = 0 and q = k are refused"""
        simplex = random_nerve_simplex(self.category, ['x', 'y', 'z'], self.rng)
        for q in (0, 2):
            filled, issues = horn_fill(horn_of(simplex, q), q)
            self.assertIsNone(filled)
            self.assertIn("inner", issues[0].message)

    def test_non_closed_top_rejected(self):
        """Test a top element with nonzero differential"""
        simplex = random_nerve_simplex(self.category, ['y', 'y', 'y'], self.rng)
        top = self.category.element('y', 'y', -1, [1])
        filled, issues = horn_fill(horn_of(simplex, 1), 1, top)
        self.assertIsNone(filled)
        self.assertIn("closed", issues[0].message)

    def test_wrong_degree_top_rejected(self):
        """Test a top element of the wrong degree"""
        simplex = random_nerve_simplex(self.category, ['y', 'y', 'y'], self.rng)
        filled, _ = horn_fill(horn_of(simplex, 1), 1, self.category.identity('y'))
        self.assertIsNone(filled)

    def test_invalid_horn_rejected(self):
        """Test horn data violating MC is reported"""
        simplex = random_nerve_simplex(self.category, ['y', 'y', 'y'], self.rng)
        horn = horn_of(simplex, 1)
        horn.components[(0, 1)] = horn.component((0, 1)) + self.category.element('y', 'y', 0, [1, 0])
        filled, issues = horn_fill(horn, 1)
        self.assertIsNone(filled)
        self.assertTrue(issues)

    def test_horn_from_faces(self):
        """Test gluing the present faces gives the horn restriction"""
        simplex = random_nerve_simplex(self.category, ['x', 'y', 'y', 'z'], self.rng)
        faces = {j: nerve_faces(simplex, j) for j in (0, 1, 3)}
        horn, issues = horn_from_faces(faces, 3, 2)
        self.assertEqual(issues, [])
        self.assertEqual(horn.objects, simplex.objects)
        for t in horn_tuples(3, 2):
            self.assertTrue(horn.component(t).equals(simplex.component(t)))

    def test_horn_from_faces_missing(self):
        """Test a missing face is reported"""
        simplex = random_nerve_simplex(self.category, ['x', 'y', 'z'], self.rng)
        horn, issues = horn_from_faces({0: nerve_faces(simplex, 0)}, 2, 1)
        self.assertIsNone(horn)
        self.assertEqual([i.location for i in issues], [2])

    def test_engine_ignores_top_in_zero_gauge(self):
        """Test the engine drops a supplied top under the zero gauge"""
        simplex = random_nerve_simplex(self.category, ['y', 'y', 'y'], self.rng)
        engine = NerveEngine({'horn_fill_top': 'zero'})
        filled, _ = engine.fill(horn_of(simplex, 1), 1, self.category.identity('y'))
        self.assertIsNotNone(filled)


class TestCubes(unittest.TestCase):
    """Test cube posets and the cube-to-coherence assembly"""

    def setUp(self):
        self.category = SmallDgCategory.from_complexes({'x': ChainComplex(GradedModule({0: 1}))})

    def scalar(self, value):
        return self.category.element('x', 'x', 0, [value])

    def test_poset_sizes(self):
        """Test |P_{i,j}| = 2^{j-i-1} and (j-i-1)! maximal chains"""
        poset = CubePoset(0, 4)
        self.assertEqual(len(poset), 8)
        self.assertEqual(len(poset.maximal_chains()), maximal_chain_count(0, 4))
        self.assertEqual(maximal_chain_count(0, 4), 6)
        self.assertEqual(len(CubePoset(2, 2).maximal_chains()), 1)

    def test_poset_nerve(self):
        """Test strict chains in the square poset"""
        poset = cube_poset(0, 3)
        self.assertEqual(len(poset_nerve_simplices(poset, 0)), 4)
        self.assertEqual(len(poset_nerve_simplices(poset, 2)), 2)
        self.assertEqual(len(poset_nerve_simplices(poset, 1, include_degenerate=True)), 9)

    def test_permutation_sign(self):
        """Test inversion parity"""
        self.assertEqual(permutation_sign((1, 2, 3)), 1)
        self.assertEqual(permutation_sign((2, 1, 3)), -1)
        self.assertEqual(permutation_sign((3, 2, 1)), -1)

    def test_strict_functor_is_coherent(self):
        """Test composites on edges and zero above give an MC simplex"""
        edges = {(0, 1): 2, (1, 2): 3, (2, 3): 5}
        values = {}
        for i in range(4):
            for j in range(i + 1, 4):
                product = 1
                for l in range(i, j):
                    product *= edges[(l, l + 1)]
                values[(frozenset({i, j}),)] = self.scalar(product)
        functor = CubeFunctor(self.category, ['x'] * 4, values)
        simplex = coherent_simplex(functor)
        self.assertTrue(mc_check_nerve(simplex)[0])
        self.assertEqual(simplex.component((0, 3)).coords[0], 30)

    def test_factorization_through_union(self):
        """Test a chain through a shared vertex factors into a product"""
        functor = CubeFunctor(self.category, ['x'] * 3, {
            (frozenset({0, 1}),): self.scalar(2),
            (frozenset({1, 2}),): self.scalar(3),
        })
        value = functor.value((frozenset({0, 1, 2}),))
        self.assertEqual(value.coords[0], 6)

    def test_factorization_violation_raises(self):
        """Test a stored value contradicting the factorization"""
        functor = CubeFunctor(self.category, ['x'] * 3, {
            (frozenset({0, 1}),): self.scalar(2),
            (frozenset({1, 2}),): self.scalar(3),
            (frozenset({0, 1, 2}),): self.scalar(0),
        })
        self.assertTrue(functor.factorization_issues())
        with self.assertRaises(ValueError):
            cube_to_coherence(functor, (0, 1, 2))

    def test_coherence_sums_maximal_chains(self):
        """Test the top component is the signed sum over maximal chains"""
        category = SmallDgCategory.from_complexes({'w': ChainComplex(GradedModule({0: 1, 2: 1}))})
        chains = CubePoset(0, 3).maximal_chains()
        self.assertEqual(chain_for_order(0, 3, (2, 1)), chains[1])
        functor = CubeFunctor(category, ['w'] * 4, {
            chains[0]: category.element('w', 'w', -2, [5]),
            chains[1]: category.element('w', 'w', -2, [2]),
        })
        self.assertEqual(cube_to_coherence(functor, (0, 1, 2, 3)).coords[0], 3)


if __name__ == '__main__':
    unittest.main()
