"""
Gallery Module
Named example data, seeded random generators and the schema "v1" JSON files
"""
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
import sympy

from src.graded_linear import EXACT, ChainComplex, GradedMap, GradedModule, Scalars, compose
from src.locsys import InfinityLocalSystem, LocSysMorphism, cone_system, hom_D, promote
from src.nerve import HomElement, NerveSimplex, SmallDgCategory, horn_fill, horn_tuples, increasing_tuples
from src.simplicial import SimplicialComplex
from src.superconn import Bundle, ChartDomain, CoefficientForm, Superconnection
from src.utils import ensure_dir, save_json

SCHEMA = "v1"


def _form(chart: ChartDomain, bundle: Bundle, p: int, coeffs: Dict) -> CoefficientForm:
    return CoefficientForm(chart, bundle, bundle, p, 1 - p,
                           {index: sympy.Matrix(m) for index, m in coeffs.items()})


def trivial_superconnection(rank: int = 2, chart_dim: int = 1) -> Superconnection:
    """d on the trivial bundle of the given rank in degree 0"""
    return Superconnection(Bundle.from_dims({0: rank}), ChartDomain(chart_dim))


def rotation_superconnection(c) -> Superconnection:
    """A¹ = [[0, -c], [c, 0]] dx1 on a rank-2 bundle over the interval"""
    bundle = Bundle.from_dims({0: 2})
    chart = ChartDomain(1)
    c = sympy.nsimplify(c)
    return Superconnection(bundle, chart, {1: _form(chart, bundle, 1, {(0,): [[0, -c], [c, 0]]})})


def circle_superconnection(lam) -> Superconnection:
    """Rank-1 connection λ dx1; its monodromy around the triangle circle is e^{3λ}"""
    bundle = Bundle.from_dims({0: 1})
    chart = ChartDomain(1)
    return Superconnection(bundle, chart, {1: _form(chart, bundle, 1, {(0,): [[sympy.nsimplify(lam)]]})})


def circle_complex() -> SimplicialComplex:
    """Boundary of Δ² with every edge realized as the unit interval"""
    return SimplicialComplex(3, [(0, 1), (1, 2), (0, 2)], realizations={
        (0, 1): [[0.0], [1.0]],
        (1, 2): [[0.0], [1.0]],
        (0, 2): [[1.0], [0.0]],
    })


def standard_vertices(k: int) -> Dict[int, List[float]]:
    return {i: [1.0] * i + [0.0] * (k - i) for i in range(k + 1)}


def standard_simplex_complex(k: int) -> SimplicialComplex:
    """Δ^k realized on its own coordinates 1 >= y1 >= ... >= yk >= 0"""
    return SimplicialComplex.standard(k, standard_vertices(k))


def flat_rank2_superconnection(chart_dim: int = 2) -> Superconnection:
    """Bundle degrees (0, 1): A⁰ = [[0,0],[1,0]], A¹ = x2 dx1 ⊗ I, A² = dα ⊗ B for α = x2 dx1"""
    if chart_dim < 2:
        raise ValueError("The flat rank-2 example needs a chart of dimension >= 2")
    bundle = Bundle.from_dims({0: 1, 1: 1})
    chart = ChartDomain(chart_dim)
    x2 = chart.symbols[1]
    return Superconnection(bundle, chart, {
        0: _form(chart, bundle, 0, {(): [[0, 0], [1, 0]]}),
        1: _form(chart, bundle, 1, {(0,): [[x2, 0], [0, x2]]}),
        2: _form(chart, bundle, 2, {(0, 1): [[0, -1], [0, 0]]}),
    })


def nilpotent_superconnection(chart_dim: int = 1) -> Superconnection:
    """A¹ = dx1 ⊗ N with N² = 0; every holonomy series stops after length 1"""
    bundle = Bundle.from_dims({0: 2})
    chart = ChartDomain(chart_dim)
    return Superconnection(bundle, chart, {1: _form(chart, bundle, 1, {(0,): [[0, 1], [0, 0]]})})


def circle_local_system(monodromy: int = 2) -> InfinityLocalSystem:
    """Rank-1 ordinary local system on the triangle circle with the given monodromy"""
    system, issues = promote(circle_complex(), {0: 1, 1: 1, 2: 1},
                             {(0, 1): [[monodromy]], (1, 2): [[1]], (0, 2): [[1]]})
    if system is None:
        raise ValueError(f"Bad circle data: {issues}")
    return system


def _complex(dims: Dict[int, int], blocks: Dict[int, List[List[int]]], scalars: Scalars = EXACT) -> ChainComplex:
    module = GradedModule(dims)
    d = GradedMap(module, module, 1, {n: scalars.matrix(b) for n, b in blocks.items()}, scalars)
    return ChainComplex(module, d, scalars)


def three_object_category(scalars: Scalars = EXACT) -> SmallDgCategory:
    """Matrix dg-category on k, the acyclic k ⊕ k[-1] and the acyclic k[1] ⊕ k"""
    return SmallDgCategory.from_complexes({
        'x': _complex({0: 1}, {}, scalars),
        'y': _complex({0: 1, 1: 1}, {0: [[1]]}, scalars),
        'z': _complex({-1: 1, 0: 1}, {-1: [[1]]}, scalars),
    }, scalars)


def random_graded_map(source: GradedModule, target: GradedModule, degree: int,
                      rng: np.random.Generator, scalars: Scalars = EXACT, bound: int = 2) -> GradedMap:
    blocks = {}
    for d in source.degrees():
        rows, cols = target.dim(d + degree), source.dim(d)
        if rows and cols:
            blocks[d] = scalars.convert(rng.integers(-bound, bound + 1, size=(rows, cols)))
    return GradedMap(source, target, degree, blocks, scalars)


def random_complex(dims: Dict[int, int], rng: np.random.Generator, scalars: Scalars = EXACT) -> ChainComplex:
    """Random complex in normal form: d sends some unhit basis vectors to basis vectors"""
    module = GradedModule(dims)
    blocks, hit = {}, {}
    for n in module.degrees():
        rows, cols = module.dim(n + 1), module.dim(n)
        free = [i for i in range(cols) if i not in hit.get(n, ())]
        r = int(rng.integers(0, min(len(free), rows) + 1)) if rows else 0
        block = scalars.zeros(rows, cols)
        for i in range(r):
            block[i, free[i]] = scalars.coerce(1)
        if rows:
            blocks[n] = block
        hit[n + 1] = set(range(r))
    return ChainComplex(module, GradedMap(module, module, 1, blocks, scalars), scalars)


def random_automorphism(module: GradedModule, rng: np.random.Generator, scalars: Scalars = EXACT,
                        steps: int = 3):
    """(g, g⁻¹) of degree 0, products of elementary matrices per degree"""
    forward, backward = {}, {}
    for d, n in module.dims.items():
        g, g_inv = scalars.identity(n), scalars.identity(n)
        for _ in range(steps if n > 1 else 0):
            a, b = rng.choice(n, size=2, replace=False)
            c = scalars.coerce(int(rng.integers(-2, 3)))
            g[:, b] = g[:, b] + c * g[:, a]
            g_inv[a, :] = g_inv[a, :] - c * g_inv[b, :]
        forward[d], backward[d] = g, g_inv
    return GradedMap(module, module, 0, forward, scalars), GradedMap(module, module, 0, backward, scalars)


def random_gauge_system(base: SimplicialComplex, dims: Dict[int, int], rng: np.random.Generator,
                        scalars: Scalars = EXACT) -> InfinityLocalSystem:
    """d_v = g_v d g_v⁻¹, f(ij) = g_i g_j⁻¹ on edges, zero above"""
    core = random_complex(dims, rng, scalars)
    gauges = {v: random_automorphism(core.module, rng, scalars) for v in range(base.n_vertices)}
    vertex_data = {v: ChainComplex(core.module, compose(compose(g, core.d), g_inv), scalars)
                   for v, (g, g_inv) in gauges.items()}
    f = {tuple(e): compose(gauges[e[0]][0], gauges[e[1]][1]) for e in base.enumerate_simplices(1)}
    return InfinityLocalSystem(base, vertex_data, f, scalars)


def random_morphism(source: InfinityLocalSystem, target: InfinityLocalSystem, degree: int,
                    rng: np.random.Generator, density: float = 0.7) -> LocSysMorphism:
    comps = {}
    for sigma in source.base.simplices():
        if rng.random() > density:
            continue
        comps[tuple(sigma)] = random_graded_map(source.module(sigma[-1]), target.module(sigma[0]),
                                                degree - sigma.dim, rng, source.scalars)
    return LocSysMorphism(source, target, degree, comps)


def random_cone_system(base: SimplicialComplex, rng: np.random.Generator,
                       dims: Optional[Dict[int, int]] = None, degree: int = 0) -> InfinityLocalSystem:
    """Cone of Dψ for a random ψ between two gauge systems; carries nonzero higher values"""
    dims = dims or {0: 1, 1: 1}
    source = random_gauge_system(base, dims, rng)
    target = random_gauge_system(base, dims, rng)
    phi = hom_D(random_morphism(source, target, degree - 1, rng))
    return cone_system(phi)


def random_element(category: SmallDgCategory, source: str, target: str, degree: int,
                   rng: np.random.Generator, bound: int = 2) -> HomElement:
    n = category.hom(source, target).module.dim(degree)
    return category.element(source, target, degree, rng.integers(-bound, bound + 1, size=n).tolist())


def random_nerve_simplex(category: SmallDgCategory, objects: Sequence[str],
                         rng: np.random.Generator) -> NerveSimplex:
    """Composites of random closed edges, then an inner refill with a random exact top"""
    k = len(objects) - 1
    edges = []
    for i in range(k):
        source, target = objects[i + 1], objects[i]
        edge = category.d(random_element(category, source, target, -1, rng))
        if source == target:
            edge = edge + category.identity(source).scale(int(rng.integers(1, 3)))
        edges.append(edge)
    comps = {}
    for t in increasing_tuples(k):
        if len(t) != 2:
            continue
        value = edges[t[0]]
        for l in range(t[0] + 1, t[1]):
            value = category.compose(value, edges[l])
        comps[t] = value
    simplex = NerveSimplex(category, objects, comps)
    if k < 2:
        return simplex
    present = set(horn_tuples(k, 1))
    horn = NerveSimplex(category, objects, {t: e for t, e in comps.items() if t in present})
    top = category.d(random_element(category, objects[k], objects[0], -k, rng))
    filled, _ = horn_fill(horn, 1, top)
    return filled if filled is not None else simplex


def document(kind: str, payload: dict) -> dict:
    """Wrap a payload as a schema "v1" document"""
    return {'schema': SCHEMA, 'kind': kind, **payload}


def check_schema(data: dict, kind: Optional[str] = None) -> dict:
    """
    Raises:
        ValueError: on a missing or unknown schema tag or an unexpected kind
    """
    if data.get('schema') != SCHEMA:
        raise ValueError(f"Unsupported schema {data.get('schema')!r}, expected {SCHEMA!r}")
    if kind is not None and data.get('kind', kind) != kind:
        raise ValueError(f"Expected a {kind!r} document, got {data.get('kind')!r}")
    return data


def unwrap(data: dict, kind: str) -> dict:
    """Check the schema tag and kind; the payload is the document itself"""
    check_schema(data, kind)
    return {k: v for k, v in data.items() if k not in ('schema', 'kind')}


def gallery_documents() -> Dict[str, dict]:
    """File name -> document for every named example"""
    category = three_object_category()
    rng = np.random.default_rng(20240601)
    source = random_nerve_simplex(category, ['x', 'y', 'y', 'z'], rng)
    present = set(horn_tuples(3, 1))
    horn = NerveSimplex(category, source.objects,
                        {t: e for t, e in source.components.items() if t in present})
    unit_edge = {'points': [[0.0], [1.0]]}
    return {
        'trivial.json': document('superconnection', trivial_superconnection().to_dict()),
        'rotation.json': document('superconnection', rotation_superconnection(1).to_dict()),
        'unit_edge.json': document('path', unit_edge),
        'circle_connection.json': document('superconnection',
                                           circle_superconnection(sympy.Rational(7, 10)).to_dict()),
        'circle.json': document('complex', circle_complex().to_dict()),
        'flat_rank2.json': document('superconnection', flat_rank2_superconnection(2).to_dict()),
        'flat_rank2_3d.json': document('superconnection', flat_rank2_superconnection(3).to_dict()),
        'nilpotent.json': document('superconnection', nilpotent_superconnection(2).to_dict()),
        'delta2.json': document('complex', standard_simplex_complex(2).to_dict()),
        'delta3.json': document('complex', standard_simplex_complex(3).to_dict()),
        'promoted_circle.json': document('local_system', circle_local_system().to_dict()),
        'three_objects.json': document('dg_category', category.to_dict()),
        'three_objects_horn.json': document('nerve_simplex', {**horn.to_dict(), 'q': 1}),
    }


def write_gallery(directory: str) -> List[str]:
    """Write every named example as JSON; returns the written paths"""
    ensure_dir(directory)
    paths = []
    for name, doc in gallery_documents().items():
        path = os.path.join(directory, name)
        save_json(path, doc)
        paths.append(path)
    return paths
