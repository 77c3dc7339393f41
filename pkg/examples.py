"""
Example script demonstrating HigherHolonomy usage
"""
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

import numpy as np
from scipy.linalg import expm

from main import HigherHolonomy
from src.gallery import (
    circle_complex, circle_local_system, circle_superconnection, flat_rank2_superconnection,
    random_nerve_simplex, rotation_superconnection, standard_simplex_complex, three_object_category,
)
from src.holonomy import QuadratureScheme, StraightPath, holonomy, rh_object
from src.locsys import check_mc, hom_cohomology
from src.nerve import NerveSimplex, horn_fill, horn_tuples


def example_check_mc():
    """Promote an ordinary local system and check the Maurer-Cartan equation"""
    system = circle_local_system(monodromy=2)
    ok, issues = check_mc(system)
    print("✓ MC holds" if ok else f"✗ MC fails: {issues}")


def example_transport():
    """Rotation connection: transport along [0, 1] against the matrix exponential"""
    conn = rotation_superconnection(1)
    value = holonomy(conn, StraightPath([[0.0], [1.0]]), QuadratureScheme(16, 20))
    oracle = expm(-np.array([[0.0, -1.0], [1.0, 0.0]]))
    print(f"Transport error vs expm: {np.abs(value.matrix - oracle).max():.2e}")


def example_circle_monodromy():
    """Rank-1 circle: the edge values compose to e^{3λ} around the loop"""
    system = rh_object(circle_superconnection(0.7), circle_complex(), QuadratureScheme(16, 20))
    f01 = system.value((0, 1)).to_dense()[0, 0]
    f12 = system.value((1, 2)).to_dense()[0, 0]
    f02 = system.value((0, 2)).to_dense()[0, 0]
    print(f"Monodromy {f01 * f12 / f02:.10f}, expected {np.exp(2.1):.10f}")


def example_rh_triangle():
    """Riemann-Hilbert for the flat rank-2 superconnection on Δ²"""
    app = HigherHolonomy()
    system = app.holonomy.rh(flat_rank2_superconnection(2), standard_simplex_complex(2), nodes=8)
    print(app.locsys.residual_norms(system))


def example_hom_cohomology():
    """H(Hom(F, F)) for a rank-1 circle system"""
    system = circle_local_system(monodromy=1)
    print(f"Hom cohomology: {hom_cohomology(system, system).dims}")


def example_horn_fill():
    """Fill Λ³₁ of a random nerve simplex in the three-object dg-category"""
    category = three_object_category()
    simplex = random_nerve_simplex(category, ['x', 'y', 'y', 'z'], np.random.default_rng(7))
    present = set(horn_tuples(3, 1))
    horn = NerveSimplex(category, simplex.objects,
                        {t: e for t, e in simplex.components.items() if t in present})
    filled, issues = horn_fill(horn, 1)
    print("✓ Filled" if filled is not None else f"✗ {issues}")


if __name__ == "__main__":
    print("HigherHolonomy Examples")
    print("=" * 60)
    print("\nThese are example functions demonstrating API usage.")
    print("Uncomment the example you want to run.\n")

    # Uncomment to run:
    # example_check_mc()
    # example_transport()
    # example_circle_monodromy()
    # example_rh_triangle()
    # example_hom_cohomology()
    # example_horn_fill()
