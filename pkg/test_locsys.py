"""
Tests for ∞-local systems, their morphism complexes, cones and spectral pages
"""
import os
import shutil
import tempfile
import unittest

import numpy as np

from src.gallery import (
    circle_complex, circle_local_system, random_cone_system, random_gauge_system, random_morphism,
)
from src.graded_linear import DOUBLE, EXACT, ChainComplex, GradedMap, GradedModule
from src.locsys import (
    InfinityLocalSystem, LocalSystemEngine, LocSysMorphism, check_mc, commutator, cone_defect_block,
    cone_system, cup, delta_hat, d_comm, expected_cone_defect, hom_cohomology, hom_D,
    compose_morphisms, identity_morphism, is_homotopy_equivalence, mc_residual, page1_triangle_check,
    promote, shift_morphism, shift_system, spectral_page0, spectral_page1, total_complex,
)
from src.simplicial import SimplicialComplex
from src.utils import Logger


def point_system(dims=None):
    """Δ² with the same zero-differential complex at every vertex and identity edges"""
    base = SimplicialComplex.standard(2)
    module = GradedModule(dims or {0: 1})
    vertex_data = {v: ChainComplex(module) for v in range(3)}
    f = {e: GradedMap.identity(module) for e in [(0, 1), (1, 2), (0, 2)]}
    return InfinityLocalSystem(base, vertex_data, f)


class TestLocalSystemData(unittest.TestCase):
    """Test construction and validation of local systems"""

    def test_value_defaults(self):
        """Test absent simplices give zero and degenerate edges the identity"""
        system = point_system()
        self.assertTrue(system.value((0, 1, 2)).is_zero())
        self.assertEqual(system.value((0, 1, 2)).degree, -1)
        self.assertTrue(system.value((1, 1)).equals(GradedMap.identity(system.module(1))))

    def test_wrong_degree_rejected(self):
        """Test f on a 2-simplex must have degree -1"""
        base = SimplicialComplex.standard(2)
        module = GradedModule({0: 1, 1: 1})
        vertex_data = {v: ChainComplex(module) for v in range(3)}
        with self.assertRaises(ValueError):
            InfinityLocalSystem(base, vertex_data, {(0, 1, 2): GradedMap.zero(module, module, 0)})

    def test_missing_vertex_rejected(self):
        """Test every vertex needs a complex"""
        base = SimplicialComplex.standard(1)
        with self.assertRaises(ValueError):
            InfinityLocalSystem(base, {0: ChainComplex(GradedModule({0: 1}))})

    def test_dict_round_trip(self):
        """Test JSON form of a random system"""
        system = random_cone_system(SimplicialComplex.standard(2), np.random.default_rng(5))
        back = InfinityLocalSystem.from_dict(system.to_dict())
        for sigma, m in system.f.items():
            self.assertTrue(back.value(sigma).equals(m))


class TestMaurerCartan(unittest.TestCase):
    """Test the Maurer-Cartan equation"""

    def test_identity_system(self):
        """Test identity edges satisfy MC"""
        ok, issues = check_mc(point_system())
        self.assertTrue(ok)
        self.assertEqual(issues, [])

    def test_random_gauge_and_cone_systems(self):
        """Test seeded random gauge and cone systems satisfy MC"""
        rng = np.random.default_rng(20240601)
        base = SimplicialComplex.standard(2)
        for _ in range(60):
            ok, _ = check_mc(random_gauge_system(base, {0: 1, 1: 2}, rng))
            self.assertTrue(ok)
        for _ in range(40):
            ok, _ = check_mc(random_cone_system(base, rng))
            self.assertTrue(ok)

    def test_cone_system_on_tetrahedron(self):
        """Test cones on Δ³ carry higher values and satisfy MC"""
        rng = np.random.default_rng(9)
        system = random_cone_system(SimplicialComplex.standard(3), rng)
        self.assertTrue(check_mc(system)[0])

    def test_broken_edge_reported(self):
        """Test a triangle whose edges do not compose fails on that triangle"""
        system = point_system()
        module = system.module(0)
        system.f[(0, 2)] = GradedMap.identity(module).scale(2)
        ok, issues = check_mc(system)
        self.assertFalse(ok)
        self.assertEqual([i.location for i in issues], [(0, 1, 2)])

    def test_circle_promotion(self):
        """Test promoted ordinary local systems satisfy MC"""
        self.assertTrue(check_mc(circle_local_system(2))[0])

    def test_promote_rejects_incompatible_triangle(self):
        """Test ρ01ρ12 != ρ02 on a 2-simplex"""
        base = SimplicialComplex.standard(2)
        system, issues = promote(base, {0: 1, 1: 1, 2: 1},
                                 {(0, 1): [[2]], (1, 2): [[3]], (0, 2): [[5]]})
        self.assertIsNone(system)
        self.assertEqual(issues[0].location, (0, 1, 2))

    def test_promote_rejects_singular_edge(self):
        """Test non-invertible edge maps"""
        system, issues = promote(circle_complex(), {0: 1, 1: 1, 2: 1},
                                 {(0, 1): [[0]], (1, 2): [[1]], (0, 2): [[1]]})
        self.assertIsNone(system)
        self.assertEqual(issues[0].location, (0, 1))

    def test_promote_double_backend(self):
        """Test promotion over floating scalars"""
        base = SimplicialComplex.standard(2)
        system, issues = promote(base, {0: 1, 1: 1, 2: 1},
                                 {(0, 1): [[0.5]], (1, 2): [[4.0]], (0, 2): [[2.0]]}, DOUBLE)
        self.assertEqual(issues, [])
        self.assertTrue(check_mc(system)[0])

    def test_residual_components(self):
        """Test the residual is zero on vertices, edges and triangles of a valid system"""
        residual = mc_residual(point_system({0: 1, 1: 1}))
        self.assertTrue(residual.is_zero())


class TestMorphismComplex(unittest.TestCase):
    """Test D on Loc(F, G) and the operations it is built from"""

    def setUp(self):
        self.rng = np.random.default_rng(17)
        self.base = SimplicialComplex.standard(2)
        self.bases = {'tetrahedron': SimplicialComplex.standard(3), 'circle': circle_complex()}
        self.engine = LocalSystemEngine()

    def test_d_squared_zero(self):
        """Test D∘D = 0 between random MC systems"""
        for name, base in self.bases.items():
            for i in range(100):
                source = random_cone_system(base, self.rng)
                target = random_gauge_system(base, {-1: 1, 0: 1, 1: 1}, self.rng)
                phi = random_morphism(source, target, (-1, 0, 1)[i % 3], self.rng)
                ok, issues = self.engine.check_differential(phi)
                self.assertTrue(ok, f"{name}: {issues}")

    def test_delta_hat_squared_zero(self):
        """Test δ̂∘δ̂ = 0 on random cochains"""
        for name, base in self.bases.items():
            for i in range(100):
                system = random_cone_system(base, self.rng)
                x = random_morphism(system, system, (-1, 0, 1, 2)[i % 4], self.rng, density=1.0)
                self.assertTrue(delta_hat(delta_hat(x)).is_zero(), name)

    def test_cup_associative_and_jacobi(self):
        """Test cup associativity and the graded Jacobi identity of the commutator"""
        for name, base in self.bases.items():
            for _ in range(100):
                system = random_cone_system(base, self.rng)
                x, y, z = (random_morphism(system, system, int(self.rng.integers(-1, 2)), self.rng)
                           for _ in range(3))
                self.assertTrue(cup(cup(x, y), z).equals(cup(x, cup(y, z))), name)
                left = commutator(x, commutator(y, z))
                right = commutator(commutator(x, y), z) \
                    + commutator(y, commutator(x, z)).scale((-1) ** (x.degree * y.degree))
                self.assertTrue(left.equals(right), name)

    def test_delta_hat_skips_outer_faces(self):
        """Test δ̂ on an edge-only cochain lands on triangles via the middle face"""
        system = point_system()
        x = LocSysMorphism(system, system, 1, {(0, 2): GradedMap.identity(system.module(0))})
        out = delta_hat(x)
        self.assertEqual(list(out.components), [(0, 1, 2)])
        self.assertEqual(out.component((0, 1, 2)).block(0)[0, 0], 1)

    def test_cup_with_identity(self):
        """Test the identity is a unit for the cup product"""
        system = random_cone_system(self.base, self.rng)
        ident = identity_morphism(system)
        f = system.structure()
        self.assertTrue(cup(ident, f).equals(f))
        self.assertTrue(cup(f, ident).equals(f))

    def test_identity_is_closed(self):
        """Test D(id) = 0"""
        system = random_cone_system(self.base, self.rng)
        self.assertTrue(hom_D(identity_morphism(system)).is_zero())

    def test_composition_associative(self):
        """Test (ψ∪φ)∪χ = ψ∪(φ∪χ) and the identity is a unit"""
        for name, base in self.bases.items():
            for _ in range(10):
                a, b, c, d = (random_gauge_system(base, {0: 1, 1: 1}, self.rng) for _ in range(4))
                chi = random_morphism(a, b, 0, self.rng)
                phi = random_morphism(b, c, 1, self.rng)
                psi = random_morphism(c, d, -1, self.rng)
                left = compose_morphisms(compose_morphisms(psi, phi), chi)
                right = compose_morphisms(psi, compose_morphisms(phi, chi))
                self.assertTrue(left.equals(right), name)
                self.assertEqual(left.degree, 0)
                self.assertTrue(compose_morphisms(identity_morphism(c), phi).equals(phi), name)

    def test_leibniz_rule(self):
        """Test D(ψ∪φ) = Dψ∪φ + (-1)^{|ψ|} ψ∪Dφ between MC systems"""
        for name, base in self.bases.items():
            for _ in range(10):
                a = random_cone_system(base, self.rng)
                b, c = (random_gauge_system(base, {-1: 1, 0: 2, 1: 1}, self.rng) for _ in range(2))
                for deg_psi, deg_phi in ((0, 0), (1, 0), (-1, 1)):
                    phi = random_morphism(a, b, deg_phi, self.rng)
                    psi = random_morphism(b, c, deg_psi, self.rng)
                    left = hom_D(compose_morphisms(psi, phi))
                    right = compose_morphisms(hom_D(psi), phi) \
                        + compose_morphisms(psi, hom_D(phi)).scale((-1) ** deg_psi)
                    self.assertTrue(left.equals(right), name)

    def test_d_comm_degree(self):
        """Test the commutator raises total degree by one"""
        system = point_system({0: 1, 1: 1})
        x = identity_morphism(system)
        self.assertEqual(d_comm(x).degree, 1)


class TestShiftAndCone(unittest.TestCase):
    """Test shifts and mapping cones of local systems"""

    def setUp(self):
        self.rng = np.random.default_rng(23)
        self.base = SimplicialComplex.standard(2)

    def test_shift_keeps_mc(self):
        """Test F[q] satisfies MC"""
        system = random_cone_system(self.base, self.rng)
        for q in (-2, -1, 1, 2):
            self.assertTrue(check_mc(shift_system(system, q))[0])

    def test_shift_identity(self):
        """Test the shifted identity is the identity of F[s]"""
        system = random_cone_system(self.base, self.rng)
        for s in (-1, 1, 2):
            shifted = shift_system(system, s)
            moved = shift_morphism(identity_morphism(system), s, shifted, shifted)
            self.assertTrue(moved.equals(identity_morphism(shifted)))
            self.assertTrue(hom_D(moved).is_zero())

    def test_shift_round_trip(self):
        """Test F[q][-q] = F"""
        system = random_cone_system(self.base, self.rng)
        back = shift_system(shift_system(system, 3), -3)
        for v in range(3):
            self.assertTrue(back.differential(v).equals(system.differential(v)))
        for sigma, m in system.f.items():
            self.assertTrue(back.value(sigma).equals(m))

    def test_cone_of_closed_morphism(self):
        """Test the cone of a closed morphism satisfies MC in several degrees"""
        for degree in (-1, 0, 1):
            system = random_cone_system(self.base, self.rng, degree=degree)
            self.assertTrue(check_mc(system)[0])

    def test_cone_defect_is_d_phi(self):
        """Test the cone's lower-left MC block equals ±Dφ for non-closed φ"""
        source = random_gauge_system(self.base, {0: 1, 1: 1}, self.rng)
        target = random_gauge_system(self.base, {0: 1, 1: 1}, self.rng)
        for degree in (0, 1):
            phi = random_morphism(source, target, degree, self.rng, density=1.0)
            cone = cone_system(phi)
            for sigma in self.base.simplices():
                self.assertTrue(cone_defect_block(phi, cone, sigma).equals(
                    expected_cone_defect(phi, sigma)))


class TestHomCohomology(unittest.TestCase):
    """Test cohomology of the flattened morphism complex"""

    def test_circle_endomorphisms(self):
        """Test H(Hom(F, F)) of a rank-1 circle system is the circle's cohomology"""
        system = circle_local_system(2)
        self.assertEqual(hom_cohomology(system, system).dims, {0: 1, 1: 1})

    def test_circle_twisted(self):
        """Test a nontrivial Hom monodromy kills all cohomology"""
        self.assertEqual(hom_cohomology(circle_local_system(2), circle_local_system(1)).dims, {})

    def test_total_complex_layout(self):
        """Test the flattened complex is valid and indexes every component"""
        system = circle_local_system(3)
        complex_, layout = total_complex(system, system)
        self.assertTrue(complex_.is_valid())
        self.assertEqual(len(layout[0]), 3)
        self.assertEqual(len(layout[1]), 3)

    def test_homotopy_equivalence(self):
        """Test id and 2·id are equivalences and zero on a nonzero system is not"""
        system = circle_local_system(2)
        ident = identity_morphism(system)
        self.assertTrue(is_homotopy_equivalence(ident))
        self.assertTrue(is_homotopy_equivalence(ident.scale(2)))
        zero = LocSysMorphism(system, system, 0)
        self.assertFalse(is_homotopy_equivalence(zero))

    def test_non_closed_equivalence_raises(self):
        """Test only closed morphisms are classified"""
        system = point_system()
        phi = LocSysMorphism(system, system, 0, {(0,): GradedMap.identity(system.module(0))})
        with self.assertRaises(ValueError):
            is_homotopy_equivalence(phi)


class TestSpectralPages(unittest.TestCase):
    """Test pages 0 and 1 of the simplicial filtration"""

    def test_page0_terms(self):
        """Test E0 counts fiberwise Hom dimensions per simplex dimension"""
        system = circle_local_system(2)
        page = spectral_page0(system, system)
        self.assertEqual(page.terms, {(0, 0): 3, (1, 0): 3})
        with self.assertRaises(ValueError):
            page.transport((0, 1), EXACT.identity(1))

    def test_page1_transport(self):
        """Test conjugation by the edge maps fixes scalars"""
        system = circle_local_system(2)
        page = spectral_page1(system, system)
        self.assertEqual(page.terms, {(0, 0): 3, (1, 0): 3})
        moved = page.transport((0, 1), EXACT.identity(1))
        self.assertEqual(moved[0, 0], 1)

    def test_page1_triangles(self):
        """Test E1 edge maps compose on every 2-simplex of a gauge system"""
        rng = np.random.default_rng(2)
        base = SimplicialComplex.standard(2)
        source = random_gauge_system(base, {0: 2, 1: 1}, rng)
        target = random_gauge_system(base, {0: 1, 1: 1}, rng)
        ok, issues = page1_triangle_check(spectral_page1(source, target), base)
        self.assertTrue(ok, issues)


class TestLocalSystemEngine(unittest.TestCase):
    """Test the logging engine wrapper"""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.log_file = os.path.join(self.test_dir, 'test.log')
        self.engine = LocalSystemEngine(None, Logger(log_file=self.log_file, verbose=False))

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_check_logs_result(self):
        """Test check writes a success line to the log"""
        ok, _ = self.engine.check(circle_local_system(2))
        self.assertTrue(ok)
        with open(self.log_file, encoding='utf-8') as f:
            self.assertIn('SUCCESS', f.read())

    def test_residual_norms_keys(self):
        """Test residual norms are keyed by simplex strings"""
        norms = self.engine.residual_norms(point_system())
        self.assertIn('[0,1,2]', norms)
        self.assertEqual(max(norms.values()), 0.0)

    def test_spectral_page_selection(self):
        """Test page 0 skips the triangle check"""
        system = circle_local_system(2)
        page, issues = self.engine.spectral(system, system, 0)
        self.assertEqual(page.index, 0)
        self.assertEqual(issues, [])

    def test_hom_cohomology(self):
        """Test the engine wrapper agrees with the module function"""
        system = circle_local_system(2)
        self.assertEqual(self.engine.hom_cohomology(system, system).dims, {0: 1, 1: 1})


if __name__ == '__main__':
    unittest.main()
