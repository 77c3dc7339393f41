"""
Nerve Module
Linear simplicial nerve of a small dg-category: simplices, faces and
degeneracies, the Maurer-Cartan check, inner horn filling, cube posets
and the cube-to-coherence assembly
"""
from itertools import combinations, permutations
from math import factorial
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from src.graded_linear import EXACT, ChainComplex, GradedMap, GradedModule, Scalars, compose, hom_complex
from src.utils import Issue, LogMixin, format_rational, simplex_key, parse_simplex_key


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


class HomElement:
    """Homogeneous element of C^degree(source, target), in the hom basis"""

    def __init__(self, source: str, target: str, degree: int, coords: np.ndarray):
        self.source = source
        self.target = target
        self.degree = degree
        self.coords = np.asarray(coords)

    def _check_parallel(self, other: 'HomElement'):
        if (self.source, self.target, self.degree) != (other.source, other.target, other.degree):
            raise ValueError(f"Elements are not parallel: {self!r} vs {other!r}")

    def __add__(self, other: 'HomElement') -> 'HomElement':
        self._check_parallel(other)
        return HomElement(self.source, self.target, self.degree, self.coords + other.coords)

    def __sub__(self, other: 'HomElement') -> 'HomElement':
        return self + other.scale(-1)

    def scale(self, factor) -> 'HomElement':
        return HomElement(self.source, self.target, self.degree, self.coords * factor)

    def is_zero(self, scalars: Scalars = EXACT) -> bool:
        return scalars.is_zero(self.coords.reshape(-1, 1)) if self.coords.size else True

    def equals(self, other: 'HomElement', scalars: Scalars = EXACT) -> bool:
        return (self - other).is_zero(scalars)

    def norm(self) -> float:
        return float(np.sqrt(sum(float(v) ** 2 for v in self.coords))) if self.coords.size else 0.0

    def __repr__(self):
        return f"HomElement({self.source}->{self.target}, degree={self.degree}, {list(self.coords)})"

    def to_dict(self) -> dict:
        return {'source': self.source, 'target': self.target, 'degree': self.degree,
                'coords': [format_rational(v) for v in self.coords]}


class SmallDgCategory(LogMixin):
    """Finite dg-category given by hom complexes and composition structure constants

    structure[(x, y, z)][(p, q)] has shape (dim C^{p+q}(x,z), dim C^p(y,z),
    dim C^q(x,y)); composing a: y -> z after b: x -> y contracts it with a
    and b.
    """

    def __init__(self, objects: List[str], homs: Dict[Tuple[str, str], ChainComplex],
                 structure: Dict[Tuple[str, str, str], Dict[Tuple[int, int], np.ndarray]],
                 units: Dict[str, np.ndarray], scalars: Scalars = EXACT, logger=None):
        self.objects = list(objects)
        self.homs = dict(homs)
        self.structure = structure
        self.units = units
        self.scalars = scalars
        self.logger = logger
        for x in self.objects:
            if x not in self.units:
                raise ValueError(f"No identity given for object {x!r}")
            if self.units[x].shape != (self.hom(x, x).module.dim(0),):
                raise ValueError(f"Identity of {x!r} has the wrong length")

    def hom(self, source: str, target: str) -> ChainComplex:
        if source not in self.objects or target not in self.objects:
            raise ValueError(f"Unknown object in hom({source!r}, {target!r})")
        if (source, target) not in self.homs:
            self.homs[(source, target)] = ChainComplex(GradedModule({}), None, self.scalars)
        return self.homs[(source, target)]

    def zero(self, source: str, target: str, degree: int) -> HomElement:
        n = self.hom(source, target).module.dim(degree)
        return HomElement(source, target, degree, self.scalars.zeros(n, 1).reshape(n))

    def element(self, source: str, target: str, degree: int, coords: Sequence) -> HomElement:
        n = self.hom(source, target).module.dim(degree)
        if len(coords) != n:
            raise ValueError(f"C^{degree}({source},{target}) has dimension {n}, got {len(coords)} coordinates")
        values = np.array([self.scalars.coerce(v) for v in coords], dtype=self.scalars.dtype)
        return HomElement(source, target, degree, values.reshape(n))

    def identity(self, x: str) -> HomElement:
        return HomElement(x, x, 0, self.units[x])

    def basis(self, source: str, target: str, degree: int) -> List[HomElement]:
        n = self.hom(source, target).module.dim(degree)
        out = []
        for i in range(n):
            coords = self.scalars.zeros(n, 1).reshape(n)
            coords[i] = self.scalars.coerce(1)
            out.append(HomElement(source, target, degree, coords))
        return out

    def compose(self, a: HomElement, b: HomElement) -> HomElement:
        """a∘b for b: x -> y and a: y -> z"""
        if a.source != b.target:
            raise ValueError(f"Cannot compose {a!r} after {b!r}")
        x, y, z = b.source, b.target, a.target
        degree = a.degree + b.degree
        out = self.zero(x, z, degree)
        mu = self.structure.get((x, y, z), {}).get((a.degree, b.degree))
        if mu is None or out.coords.size == 0 or a.coords.size == 0 or b.coords.size == 0:
            return out
        partial = np.tensordot(mu, b.coords, axes=([2], [0]))
        return HomElement(x, z, degree, np.tensordot(partial, a.coords, axes=([1], [0])))

    def d(self, a: HomElement) -> HomElement:
        hom = self.hom(a.source, a.target)
        out = self.zero(a.source, a.target, a.degree + 1)
        if out.coords.size == 0 or a.coords.size == 0:
            return out
        return HomElement(a.source, a.target, a.degree + 1, hom.differential(a.degree) @ a.coords)

    def _degrees(self, x: str, y: str) -> List[int]:
        return self.hom(x, y).module.degrees()

    def validate(self) -> Tuple[bool, List[Issue]]:
        """Associativity, units and graded Leibniz on basis elements"""
        issues = []
        s = self.scalars
        for x in self.objects:
            for y in self.objects:
                for p in self._degrees(x, y):
                    for a in self.basis(x, y, p):
                        if not self.compose(self.identity(y), a).equals(a, s) or \
                                not self.compose(a, self.identity(x)).equals(a, s):
                            issues.append(Issue((x, y, p), Issue.ERROR, "Identity is not a unit"))
        for x in self.objects:
            for y in self.objects:
                for z in self.objects:
                    for q in self._degrees(x, y):
                        for p in self._degrees(y, z):
                            for a in self.basis(y, z, p):
                                for b in self.basis(x, y, q):
                                    lhs = self.d(self.compose(a, b))
                                    rhs = self.compose(self.d(a), b) + \
                                        self.compose(a, self.d(b)).scale(_sign(p))
                                    if not lhs.equals(rhs, s):
                                        issues.append(Issue((x, y, z, p, q), Issue.ERROR,
                                                            "d is not a derivation of composition"))
                    for w in self.objects:
                        issues.extend(self._associativity_issues(x, y, z, w))
        for (x, y), hom in self.homs.items():
            if not hom.is_valid():
                issues.append(Issue((x, y), Issue.ERROR, "Hom differential does not square to zero"))
        if issues:
            self._log_error(f"Category fails {len(issues)} checks")
        return len(issues) == 0, issues

    def _associativity_issues(self, x: str, y: str, z: str, w: str) -> List[Issue]:
        issues = []
        for r in self._degrees(x, y):
            for q in self._degrees(y, z):
                for p in self._degrees(z, w):
                    for a in self.basis(z, w, p):
                        for b in self.basis(y, z, q):
                            for c in self.basis(x, y, r):
                                lhs = self.compose(self.compose(a, b), c)
                                rhs = self.compose(a, self.compose(b, c))
                                if not lhs.equals(rhs, self.scalars):
                                    issues.append(Issue((x, y, z, w), Issue.ERROR,
                                                        "Composition is not associative"))
                                    return issues
        return issues

    @staticmethod
    def from_complexes(complexes: Dict[str, ChainComplex], scalars: Scalars = EXACT,
                       logger=None) -> 'SmallDgCategory':
        """The full dg-subcategory of complexes on the given objects

        C^n(x, y) is the space of degree-n graded maps x -> y with
        d(a) = d_y a - (-1)^n a d_x; composition is composition of maps.
        """
        objects = list(complexes)
        homs, layouts = {}, {}
        for x in objects:
            for y in objects:
                homs[(x, y)], layouts[(x, y)] = hom_complex(complexes[x], complexes[y])

        def as_map(x, y, n, i):
            d, r, c = layouts[(x, y)][n][i]
            src, tgt = complexes[x].module, complexes[y].module
            block = scalars.zeros(tgt.dim(d + n), src.dim(d))
            block[r, c] = scalars.coerce(1)
            return GradedMap(src, tgt, n, {d: block}, scalars)

        def coords_of(m: GradedMap, x, y) -> np.ndarray:
            entries = layouts[(x, y)].get(m.degree, [])
            out = scalars.zeros(len(entries), 1).reshape(len(entries))
            for i, (d, r, c) in enumerate(entries):
                out[i] = m.block(d)[r, c]
            return out

        structure: Dict[Tuple[str, str, str], Dict[Tuple[int, int], np.ndarray]] = {}
        for x in objects:
            for y in objects:
                for z in objects:
                    table = {}
                    for p, a_entries in layouts[(y, z)].items():
                        for q, b_entries in layouts[(x, y)].items():
                            out_dim = homs[(x, z)].module.dim(p + q)
                            if out_dim == 0:
                                continue
                            mu = scalars.zeros(out_dim, len(a_entries) * len(b_entries)).reshape(
                                out_dim, len(a_entries), len(b_entries))
                            for i in range(len(a_entries)):
                                a = as_map(y, z, p, i)
                                for j in range(len(b_entries)):
                                    mu[:, i, j] = coords_of(compose(a, as_map(x, y, q, j)), x, z)
                            table[(p, q)] = mu
                    if table:
                        structure[(x, y, z)] = table
        units = {x: coords_of(GradedMap.identity(complexes[x].module, scalars), x, x) for x in objects}
        return SmallDgCategory(objects, homs, structure, units, scalars, logger)

    def to_dict(self) -> dict:
        return {
            'objects': self.objects,
            'homs': {f"{x},{y}": c.to_dict() for (x, y), c in self.homs.items()},
            'compose': {
                f"{x},{y},{z}": {f"{p},{q}": [[[format_rational(v) for v in row] for row in plane]
                                               for plane in mu]
                                 for (p, q), mu in table.items()}
                for (x, y, z), table in self.structure.items()
            },
            'units': {x: [format_rational(v) for v in u] for x, u in self.units.items()},
        }

    @staticmethod
    def from_dict(data: dict, scalars: Scalars = EXACT, logger=None) -> 'SmallDgCategory':
        """Parse either structure-constant JSON or {"complexes": {...}}"""
        if 'complexes' in data:
            complexes = {x: ChainComplex.from_dict(c, scalars) for x, c in data['complexes'].items()}
            return SmallDgCategory.from_complexes(complexes, scalars, logger)
        if 'objects' not in data:
            raise ValueError("dg-category JSON needs 'objects' or 'complexes'")
        homs = {}
        for key, c in data.get('homs', {}).items():
            x, y = key.split(',')
            homs[(x.strip(), y.strip())] = ChainComplex.from_dict(c, scalars)
        structure = {}
        for key, table in data.get('compose', {}).items():
            x, y, z = (s.strip() for s in key.split(','))
            structure[(x, y, z)] = {}
            for pq, planes in table.items():
                p, q = (int(v) for v in pq.split(','))
                arr = np.array([[[scalars.coerce(v) for v in row] for row in plane] for plane in planes],
                               dtype=scalars.dtype)
                structure[(x, y, z)][(p, q)] = arr
        units = {x: np.array([scalars.coerce(v) for v in u], dtype=scalars.dtype)
                 for x, u in data.get('units', {}).items()}
        return SmallDgCategory(data['objects'], homs, structure, units, scalars, logger)


def increasing_tuples(l: int, min_length: int = 2) -> List[Tuple[int, ...]]:
    """All increasing tuples in [l] of length >= min_length, by length then lexicographically"""
    return [t for r in range(min_length, l + 2) for t in combinations(range(l + 1), r)]


class NerveSimplex:
    """l-simplex of the nerve: objects on [l] and F_j on increasing tuples

    F(i0 < ... < ij) lies in C^{1-j}(object(ij), object(i0)). Tuples never
    stored carry zero.
    """

    def __init__(self, category: SmallDgCategory, objects: Sequence[str],
                 components: Optional[Dict[Sequence[int], HomElement]] = None):
        self.category = category
        self.objects = list(objects)
        for x in self.objects:
            if x not in category.objects:
                raise ValueError(f"Unknown object {x!r}")
        self.components: Dict[Tuple[int, ...], HomElement] = {}
        for key, value in (components or {}).items():
            t = tuple(key)
            if len(t) < 2 or any(a >= b for a, b in zip(t, t[1:])) or t[0] < 0 or t[-1] > self.dim:
                raise ValueError(f"Bad component index {t} for a {self.dim}-simplex")
            j = len(t) - 1
            if value.degree != 1 - j or value.source != self.objects[t[-1]] \
                    or value.target != self.objects[t[0]]:
                raise ValueError(f"Component {t} is not in C^{1 - j}({self.objects[t[-1]]}, "
                                 f"{self.objects[t[0]]})")
            self.components[t] = value

    @property
    def dim(self) -> int:
        return len(self.objects) - 1

    def component(self, vertices: Sequence[int]) -> HomElement:
        """F on a tuple; degenerate tuples give the identity (length 2) or zero"""
        t = tuple(vertices)
        j = len(t) - 1
        if any(a == b for a, b in zip(t, t[1:])):
            if j == 1:
                return self.category.identity(self.objects[t[0]])
            return self.category.zero(self.objects[t[-1]], self.objects[t[0]], 1 - j)
        if t in self.components:
            return self.components[t]
        return self.category.zero(self.objects[t[-1]], self.objects[t[0]], 1 - j)

    def __repr__(self):
        return f"NerveSimplex(dim={self.dim}, objects={self.objects})"

    def to_dict(self) -> dict:
        return {
            'objects': self.objects,
            'components': {simplex_key(t): {'degree': e.degree,
                                            'coords': [format_rational(v) for v in e.coords]}
                           for t, e in self.components.items()},
        }

    @staticmethod
    def from_dict(data: dict, category: SmallDgCategory) -> 'NerveSimplex':
        objects = data['objects']
        comps = {}
        for key, value in data.get('components', {}).items():
            t = parse_simplex_key(key)
            comps[t] = category.element(objects[t[-1]], objects[t[0]], 1 - (len(t) - 1), value['coords'])
        return NerveSimplex(category, objects, comps)


def nerve_mc_residual(simplex: NerveSimplex,
                      tuples: Optional[List[Tuple[int, ...]]] = None) -> Dict[Tuple[int, ...], HomElement]:
    """dF + δ̂F + F∪F on every tuple

    δ̂F_{j-1}(i0..ij) = -Σ_{q=1}^{j-1} (-1)^q F(.., î_q, ..) and
    (F∪F)_j = Σ_{q=1}^{j-1} (-1)^q F(i0..iq)∘F(iq..ij).
    """
    cat = simplex.category
    out = {}
    for t in (tuples if tuples is not None else increasing_tuples(simplex.dim)):
        j = len(t) - 1
        total = cat.d(simplex.component(t))
        for q in range(1, j):
            face = t[:q] + t[q + 1:]
            total = total + simplex.component(face).scale(-_sign(q))
            total = total + cat.compose(simplex.component(t[:q + 1]),
                                        simplex.component(t[q:])).scale(_sign(q))
        out[t] = total
    return out


def mc_check_nerve(simplex: NerveSimplex,
                   tuples: Optional[List[Tuple[int, ...]]] = None) -> Tuple[bool, List[Issue]]:
    issues = []
    for t, value in nerve_mc_residual(simplex, tuples).items():
        if not value.is_zero(simplex.category.scalars):
            issues.append(Issue(t, Issue.ERROR, "Nerve Maurer-Cartan residual is nonzero",
                                norm=value.norm()))
    return len(issues) == 0, issues


def _restrict(simplex: NerveSimplex, objects: List[str], index_map) -> NerveSimplex:
    comps = {}
    for t in increasing_tuples(len(objects) - 1):
        value = simplex.component(tuple(index_map(i) for i in t))
        if not value.is_zero(simplex.category.scalars):
            comps[t] = value
    return NerveSimplex(simplex.category, objects, comps)


def nerve_faces(simplex: NerveSimplex, q: int) -> NerveSimplex:
    """∂_q: drop vertex q, F'(I) = F(coface_q(I))"""
    if not 0 <= q <= simplex.dim or simplex.dim == 0:
        raise IndexError(f"Face index {q} out of range for a {simplex.dim}-simplex")
    objects = simplex.objects[:q] + simplex.objects[q + 1:]
    return _restrict(simplex, objects, lambda i: i if i < q else i + 1)


def nerve_degeneracy(simplex: NerveSimplex, q: int) -> NerveSimplex:
    """s_q: repeat vertex q, F'(I) = F(codegeneracy_q(I))"""
    if not 0 <= q <= simplex.dim:
        raise IndexError(f"Degeneracy index {q} out of range for a {simplex.dim}-simplex")
    objects = simplex.objects[:q + 1] + simplex.objects[q:]
    return _restrict(simplex, objects, lambda i: i if i <= q else i - 1)


def horn_tuples(k: int, q: int) -> List[Tuple[int, ...]]:
    """Tuples of [k] lying in the horn missing face q"""
    return [t for t in increasing_tuples(k)
            if any(v not in t for v in range(k + 1) if v != q)]


def horn_from_faces(faces: Dict[int, NerveSimplex], k: int,
                    q: int) -> Tuple[Optional[NerveSimplex], List[Issue]]:
    """Glue the faces ∂_j (j != q) of a would-be k-simplex into horn data

    Returns:
        (partial simplex on [k], issues); None when faces disagree
    """
    issues = []
    expected = [j for j in range(k + 1) if j != q]
    missing = [j for j in expected if j not in faces]
    if missing:
        return None, [Issue(j, Issue.ERROR, "Face missing from horn") for j in missing]
    category = faces[expected[0]].category
    objects: List[Optional[str]] = [None] * (k + 1)
    for j in expected:
        if faces[j].dim != k - 1:
            issues.append(Issue(j, Issue.ERROR, f"Face has dimension {faces[j].dim}, expected {k - 1}"))
            continue
        for i, x in enumerate(faces[j].objects):
            v = i if i < j else i + 1
            if objects[v] is None:
                objects[v] = x
            elif objects[v] != x:
                issues.append(Issue(v, Issue.ERROR, f"Faces disagree on the object at vertex {v}"))
    if issues:
        return None, issues
    comps: Dict[Tuple[int, ...], HomElement] = {}
    source_face: Dict[Tuple[int, ...], int] = {}
    for t in horn_tuples(k, q):
        for j in expected:
            if j in t:
                continue
            local = tuple(v if v < j else v - 1 for v in t)
            value = faces[j].component(local)
            if t not in comps:
                comps[t], source_face[t] = value, j
            elif not comps[t].equals(value, category.scalars):
                issues.append(Issue(t, Issue.ERROR,
                                    f"Faces {source_face[t]} and {j} disagree on this sub-simplex"))
    if issues:
        return None, issues
    nonzero = {t: e for t, e in comps.items() if not e.is_zero(category.scalars)}
    return NerveSimplex(category, objects, nonzero), issues


def horn_fill(horn: NerveSimplex, q: int,
              top: Optional[HomElement] = None) -> Tuple[Optional[NerveSimplex], List[Issue]]:
    """Fill an inner horn: solve for the missing face, then put `top` (default 0) on [k]

    The missing face is
        S(0..q̂..k) = (-1)^{q+1} Σ_{j≠q} (-1)^j S(0..ĵ..k)
                     + (-1)^q Σ_{j=1}^{k-1} (-1)^j S(0..j)∘S(j..k)
    with j running over 1..k-1.

    Returns:
        (filled simplex, issues); None on outer horns, invalid faces or a bad top
    """
    k = horn.dim
    category = horn.category
    if not 0 < q < k:
        return None, [Issue((k, q), Issue.ERROR, "Only inner horns (0 < q < k) are filled")]
    ok, issues = mc_check_nerve(horn, horn_tuples(k, q))
    if not ok:
        return None, issues
    full = tuple(range(k + 1))
    missing = full[:q] + full[q + 1:]
    source, target = horn.objects[k], horn.objects[0]
    if top is None:
        top = category.zero(source, target, 1 - k)
    elif top.degree != 1 - k or top.source != source or top.target != target:
        return None, [Issue(full, Issue.ERROR, f"Top element must lie in C^{1 - k}({source}, {target})")]
    elif not category.d(top).is_zero(category.scalars):
        return None, [Issue(full, Issue.ERROR, "Top element is not closed")]
    value = category.zero(source, target, 2 - k)
    for j in range(1, k):
        if j == q:
            continue
        value = value + horn.component(full[:j] + full[j + 1:]).scale(_sign(q + 1 + j))
    for j in range(1, k):
        value = value + category.compose(horn.component(full[:j + 1]),
                                         horn.component(full[j:])).scale(_sign(q + j))
    present = set(horn_tuples(k, q))
    comps = {t: e for t, e in horn.components.items() if t in present}
    comps[missing] = value
    if not top.is_zero(category.scalars):
        comps[full] = top
    filled = NerveSimplex(category, horn.objects, comps)
    ok, issues = mc_check_nerve(filled)
    return (filled if ok else None), issues


class CubePoset:
    """Subsets of {i..j} containing both endpoints, ordered by inclusion"""

    def __init__(self, i: int, j: int, interior: Optional[Sequence[int]] = None):
        if i > j:
            raise ValueError(f"Cube poset needs i <= j, got {i} > {j}")
        self.i = i
        self.j = j
        self.interior = tuple(interior) if interior is not None else tuple(range(i + 1, j))
        base = {i, j}
        self.elements: List[FrozenSet[int]] = [
            frozenset(base | set(c)) for r in range(len(self.interior) + 1)
            for c in combinations(self.interior, r)]

    def __len__(self):
        return len(self.elements)

    def maximal_chains(self) -> List[Tuple[FrozenSet[int], ...]]:
        """Chains adding one interior vertex at a time: (j-i-1)! of them"""
        if self.i == self.j:
            return [(frozenset({self.i}),)]
        return [chain_for_order(self.i, self.j, order) for order in permutations(self.interior)]

    def __repr__(self):
        return f"CubePoset({self.i}, {self.j}, size={len(self)})"


def cube_poset(i: int, j: int) -> CubePoset:
    return CubePoset(i, j)


def poset_nerve_simplices(poset: CubePoset, d: int,
                          include_degenerate: bool = False) -> List[Tuple[FrozenSet[int], ...]]:
    """Chains S0 ⊆ ... ⊆ Sd; strictly increasing unless include_degenerate"""
    ordered = sorted(poset.elements, key=lambda s: (len(s), sorted(s)))
    chains: List[Tuple[FrozenSet[int], ...]] = [(s,) for s in ordered]
    for _ in range(d):
        chains = [c + (s,) for c in chains for s in ordered
                  if c[-1] <= s and (include_degenerate or c[-1] < s)]
    return chains


def chain_for_order(i: int, j: int, order: Sequence[int]) -> Tuple[FrozenSet[int], ...]:
    """{i,j} ⊂ {i,o1,j} ⊂ ... adding interior vertices in the given order"""
    current = {i, j}
    chain = [frozenset(current)]
    for v in order:
        current.add(v)
        chain.append(frozenset(current))
    return tuple(chain)


def permutation_sign(order: Sequence[int]) -> int:
    inversions = sum(1 for a in range(len(order)) for b in range(a + 1, len(order))
                     if order[a] > order[b])
    return _sign(inversions)


class CubeFunctor:
    """Values of a cube functor on chains of the cube posets over [l]

    A chain of length n carries an element of degree -n from the object at
    its upper endpoint to the object at its lower endpoint.
    """

    def __init__(self, category: SmallDgCategory, objects: Sequence[str],
                 values: Optional[Dict[Tuple[FrozenSet[int], ...], HomElement]] = None):
        self.category = category
        self.objects = list(objects)
        self.values = dict(values or {})

    def _zero(self, chain: Tuple[FrozenSet[int], ...]) -> HomElement:
        lo, hi = min(chain[0]), max(chain[0])
        return self.category.zero(self.objects[hi], self.objects[lo], 1 - len(chain))

    def _common_vertex(self, chain: Tuple[FrozenSet[int], ...]) -> Optional[int]:
        lo, hi = min(chain[0]), max(chain[0])
        shared = set.intersection(*(set(s) for s in chain)) - {lo, hi}
        return min(shared) if shared else None

    def factor(self, chain: Tuple[FrozenSet[int], ...]) -> Optional[HomElement]:
        """Product over the first shared interior vertex, or None when indecomposable

        Each half is the chain of restrictions with repeats collapsed; the
        steps of the two halves shuffle with the sign of the interleaving.
        Chains whose steps change both halves at once factor to zero.
        """
        v = self._common_vertex(chain)
        if v is None:
            return None
        left = [frozenset(x for x in s if x <= v) for s in chain]
        right = [frozenset(x for x in s if x >= v) for s in chain]
        left_steps = [n for n in range(1, len(chain)) if left[n] != left[n - 1]]
        right_steps = [n for n in range(1, len(chain)) if right[n] != right[n - 1]]
        if len(left_steps) + len(right_steps) != len(chain) - 1:
            return self._zero(chain)
        left_chain = tuple(dict.fromkeys(left))
        right_chain = tuple(dict.fromkeys(right))
        crossings = sum(1 for a in left_steps for b in right_steps if b < a)
        product = self.category.compose(self.value(left_chain), self.value(right_chain))
        return product.scale(_sign(crossings))

    def value(self, chain: Sequence[FrozenSet[int]]) -> HomElement:
        chain = tuple(frozenset(s) for s in chain)
        if chain in self.values:
            return self.values[chain]
        if len(chain) == 1 and len(chain[0]) == 1:
            return self.category.identity(self.objects[min(chain[0])])
        factored = self.factor(chain)
        return factored if factored is not None else self._zero(chain)

    def factorization_issues(self) -> List[Issue]:
        """Stored values on decomposable chains must equal their factorization"""
        issues = []
        for chain, stored in self.values.items():
            factored = self.factor(chain)
            if factored is not None and not stored.equals(factored, self.category.scalars):
                issues.append(Issue(tuple(tuple(sorted(s)) for s in chain), Issue.ERROR,
                                    "Stored value violates the union factorization"))
        return issues


def cube_to_coherence(functor: CubeFunctor, vertices: Sequence[int]) -> HomElement:
    """F(i0..ik) = Σ_perm sign(perm) H({i0,ik} ⊂ ... adding interior vertices in perm order)

    Raises:
        ValueError: when H violates the union factorization
    """
    issues = functor.factorization_issues()
    if issues:
        raise ValueError(f"Factorization violation: {issues[0]!r}")
    verts = tuple(vertices)
    i, j = verts[0], verts[-1]
    interior = verts[1:-1]
    total = functor.category.zero(functor.objects[j], functor.objects[i], 2 - len(verts))
    for order in permutations(interior):
        total = total + functor.value(chain_for_order(i, j, order)).scale(permutation_sign(order))
    return total


def coherent_simplex(functor: CubeFunctor) -> NerveSimplex:
    """Nerve simplex whose every component comes from cube_to_coherence"""
    comps = {}
    for t in increasing_tuples(len(functor.objects) - 1):
        value = cube_to_coherence(functor, t)
        if not value.is_zero(functor.category.scalars):
            comps[t] = value
    return NerveSimplex(functor.category, functor.objects, comps)


def maximal_chain_count(i: int, j: int) -> int:
    return factorial(max(j - i - 1, 0))


class NerveEngine(LogMixin):
    """Horn filling with the configured top-face gauge and logging"""

    def __init__(self, config=None, logger=None):
        self.config = config
        self.logger = logger

    def fill(self, horn: NerveSimplex, q: int,
             top: Optional[HomElement] = None) -> Tuple[Optional[NerveSimplex], List[Issue]]:
        gauge = self.config.get('horn_fill_top', 'zero') if self.config else 'zero'
        if gauge == 'zero' and top is not None:
            self._log_warning("Ignoring supplied top element: horn_fill_top is 'zero'")
            top = None
        self._log_info(f"Filling Λ^{horn.dim}_{q} over objects {horn.objects}")
        filled, issues = horn_fill(horn, q, top)
        if filled is None:
            for issue in issues:
                self._log_error(repr(issue))
        else:
            self._log_success("Filled simplex satisfies the nerve Maurer-Cartan equation")
        return filled, issues
