"""
Local Systems Module
∞-local systems on a finite ordered simplicial complex: morphism complexes,
the differential D, cup products, shift, cone, spectral pages and the
homotopy-equivalence test
"""
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.graded_linear import (
    EXACT, ChainComplex, CohomologyResult, GradedMap, GradedModule, Scalars,
    block_map, cohomology, compose, extract_block, hom_complex, induced_map,
    is_quasi_iso, shift_complex,
)
from src.simplicial import Simplex, SimplicialComplex, is_degenerate
from src.utils import Issue, LogMixin, parse_simplex_key, simplex_key


class DiffConvention(Enum):
    """Second-term sign of the commutator with the vertex differentials"""
    SIGNED = "signed"    # d∘x - (-1)^a x∘d
    PRINTED = "printed"  # d∘x - x∘d


class ValueKind(Enum):
    ENDOMORPHISM = "endomorphism"
    MORPHISM = "morphism"


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


class InfinityLocalSystem:
    """Chain complex per vertex plus a degree 1-k map per k-simplex (k >= 1)

    f[σ] maps the complex at the last vertex of σ to the one at its first
    vertex. Absent simplices carry the zero map.
    """

    def __init__(self, base: SimplicialComplex, vertex_data: Dict[int, ChainComplex],
                 f: Optional[Dict[Sequence[int], GradedMap]] = None, scalars: Scalars = EXACT):
        self.base = base
        self.scalars = scalars
        self.vertex_data = {int(v): c for v, c in vertex_data.items()}
        for v in range(base.n_vertices):
            if v not in self.vertex_data:
                raise ValueError(f"No chain complex at vertex {v}")
        self.flags: Dict[Simplex, set] = {}
        self.f: Dict[Simplex, GradedMap] = {}
        for key, m in (f or {}).items():
            sigma = Simplex(key)
            if not base.contains(sigma):
                raise ValueError(f"{sigma!r} is not a simplex of the base")
            if sigma.dim < 1:
                raise ValueError(f"Vertex values live in the vertex complexes, not in f: {sigma!r}")
            if m.degree != 1 - sigma.dim:
                raise ValueError(f"f{tuple(sigma)} has degree {m.degree}, expected {1 - sigma.dim}")
            if m.source != self.module(sigma[-1]) or m.target != self.module(sigma[0]):
                raise ValueError(f"f{tuple(sigma)} does not map F({sigma[-1]}) to F({sigma[0]})")
            self.f[sigma] = m

    def module(self, v: int) -> GradedModule:
        return self.vertex_data[v].module

    def differential(self, v: int) -> GradedMap:
        return self.vertex_data[v].d

    def value(self, vertices: Sequence[int]) -> GradedMap:
        """f on a simplex; degenerate tuples give the identity (edges) or zero"""
        verts = tuple(vertices)
        k = len(verts) - 1
        if k < 1:
            raise ValueError(f"f is defined on simplices of dimension >= 1, got {verts}")
        if is_degenerate(verts):
            if k == 1:
                return GradedMap.identity(self.module(verts[0]), self.scalars)
            return GradedMap.zero(self.module(verts[-1]), self.module(verts[0]), 1 - k, self.scalars)
        sigma = Simplex(verts)
        if sigma in self.f:
            return self.f[sigma]
        return GradedMap.zero(self.module(sigma[-1]), self.module(sigma[0]), 1 - k, self.scalars)

    def structure(self) -> 'LocSysMorphism':
        """f as a total-degree-1 endomorphism-type cochain"""
        return LocSysMorphism(self, self, 1, dict(self.f), ValueKind.ENDOMORPHISM)

    def same_base(self, other: 'InfinityLocalSystem') -> bool:
        return self.base is other.base or self.base.to_dict() == other.base.to_dict()

    def __repr__(self):
        return f"InfinityLocalSystem({self.base!r}, values={len(self.f)})"

    def to_dict(self) -> dict:
        return {
            'base': self.base.to_dict(),
            'vertices': {str(v): c.to_dict() for v, c in self.vertex_data.items()},
            'f': {simplex_key(s): m.to_dict() for s, m in self.f.items()},
        }

    @staticmethod
    def from_dict(data: dict, scalars: Scalars = EXACT) -> 'InfinityLocalSystem':
        for key in ('base', 'vertices'):
            if key not in data:
                raise ValueError(f"Local system JSON is missing '{key}'")
        base = SimplicialComplex.from_dict(data['base'])
        vertex_data = {int(v): ChainComplex.from_dict(c, scalars) for v, c in data['vertices'].items()}
        f = {}
        for key, m in data.get('f', {}).items():
            sigma = parse_simplex_key(key)
            payload = dict(m)
            payload.setdefault('degree', 1 - (len(sigma) - 1))
            f[sigma] = GradedMap.from_dict(payload, vertex_data[sigma[-1]].module,
                                           vertex_data[sigma[0]].module, scalars)
        return InfinityLocalSystem(base, vertex_data, f, scalars)


class LocSysMorphism:
    """Element of total degree q in Loc(F, G)

    components[σ] for a k-simplex has degree q - k and maps F at the last
    vertex of σ to G at its first vertex. Storage is sparse.
    """

    def __init__(self, source: InfinityLocalSystem, target: InfinityLocalSystem, degree: int,
                 components: Optional[Dict[Sequence[int], GradedMap]] = None,
                 kind: ValueKind = ValueKind.MORPHISM):
        if source is not target and not source.same_base(target):
            raise ValueError("Source and target live on different bases")
        self.source = source
        self.target = target
        self.degree = degree
        self.kind = kind
        self.components: Dict[Simplex, GradedMap] = {}
        for key, m in (components or {}).items():
            sigma = Simplex(key)
            if m.degree != degree - sigma.dim:
                raise ValueError(
                    f"Component on {tuple(sigma)} has degree {m.degree}, expected {degree - sigma.dim}")
            if m.source != source.module(sigma[-1]) or m.target != target.module(sigma[0]):
                raise ValueError(f"Component on {tuple(sigma)} has mismatched vertex data")
            self.components[sigma] = m

    @property
    def base(self) -> SimplicialComplex:
        return self.source.base

    @property
    def scalars(self) -> Scalars:
        return self.source.scalars

    def component(self, sigma: Sequence[int]) -> GradedMap:
        sigma = Simplex(sigma)
        if sigma in self.components:
            return self.components[sigma]
        return GradedMap.zero(self.source.module(sigma[-1]), self.target.module(sigma[0]),
                              self.degree - sigma.dim, self.scalars)

    def _check_parallel(self, other: 'LocSysMorphism'):
        if self.degree != other.degree:
            raise ValueError(f"Degree mismatch: {self.degree} vs {other.degree}")
        for v in range(self.base.n_vertices):
            if (self.source.module(v) != other.source.module(v)
                    or self.target.module(v) != other.target.module(v)):
                raise ValueError(f"Vertex data mismatch at vertex {v}")

    def __add__(self, other: 'LocSysMorphism') -> 'LocSysMorphism':
        self._check_parallel(other)
        out = dict(self.components)
        for sigma, m in other.components.items():
            out[sigma] = out[sigma] + m if sigma in out else m
        return LocSysMorphism(self.source, self.target, self.degree, out, self.kind)

    def __sub__(self, other: 'LocSysMorphism') -> 'LocSysMorphism':
        return self + other.scale(-1)

    def __neg__(self) -> 'LocSysMorphism':
        return self.scale(-1)

    def scale(self, factor) -> 'LocSysMorphism':
        out = {s: m.scale(factor) for s, m in self.components.items()}
        return LocSysMorphism(self.source, self.target, self.degree, out, self.kind)

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.components.values())

    def equals(self, other: 'LocSysMorphism') -> bool:
        return (self - other).is_zero()

    def norms(self) -> Dict[Simplex, float]:
        """Frobenius norm of every stored component"""
        return {s: m.norm() for s, m in sorted(self.components.items(),
                                                key=lambda kv: (len(kv[0]), tuple(kv[0])))}

    def norm(self) -> float:
        return max(self.norms().values(), default=0.0)

    def __repr__(self):
        return f"LocSysMorphism(degree={self.degree}, components={len(self.components)})"

    def to_dict(self) -> dict:
        return {
            'degree': self.degree,
            'components': {simplex_key(s): m.to_dict() for s, m in self.components.items()},
        }

    @staticmethod
    def from_dict(data: dict, source: InfinityLocalSystem,
                  target: InfinityLocalSystem) -> 'LocSysMorphism':
        q = int(data['degree'])
        comps = {}
        for key, m in data.get('components', {}).items():
            sigma = parse_simplex_key(key)
            payload = dict(m)
            payload.setdefault('degree', q - (len(sigma) - 1))
            comps[sigma] = GradedMap.from_dict(payload, source.module(sigma[-1]),
                                               target.module(sigma[0]), source.scalars)
        return LocSysMorphism(source, target, q, comps)


def d_comm(x: LocSysMorphism, convention: Optional[DiffConvention] = None) -> LocSysMorphism:
    """Commutator with the vertex differentials, componentwise

    Endomorphism-type values default to the signed form and morphism-type
    values to the printed unsigned one.
    """
    if convention is None:
        convention = DiffConvention.SIGNED if x.kind == ValueKind.ENDOMORPHISM else DiffConvention.PRINTED
    out = {}
    for sigma, c in x.components.items():
        internal = x.degree - sigma.dim
        sign = _sign(internal) if convention == DiffConvention.SIGNED else 1
        out[sigma] = (compose(x.target.differential(sigma[0]), c)
                      - compose(c, x.source.differential(sigma[-1])).scale(sign))
    return LocSysMorphism(x.source, x.target, x.degree + 1, out, x.kind)


def delta_hat(x: LocSysMorphism) -> LocSysMorphism:
    """(δ̂x)(σ) = Σ_{l=1}^{p} (-1)^{l+|x|} x(∂_l σ) over interior faces only"""
    out = {}
    for sigma in x.base.simplices():
        p = sigma.dim - 1
        if p < 1:
            continue
        total = None
        for l in range(1, p + 1):
            face = sigma.face(l)
            if face not in x.components:
                continue
            term = x.components[face].scale(_sign(l + x.degree))
            total = term if total is None else total + term
        if total is not None:
            out[sigma] = total
    return LocSysMorphism(x.source, x.target, x.degree + 1, out, x.kind)


def cup(x: LocSysMorphism, y: LocSysMorphism) -> LocSysMorphism:
    """(x∪y)(σ) = Σ_t (-1)^{t|y|} x(σ_{0..t})∘y(σ_{t..k}), vertex parts included

    Raises:
        ValueError: when the source of x is not the target of y
    """
    for v in range(x.base.n_vertices):
        if x.source.module(v) != y.target.module(v):
            raise ValueError(f"Cannot cup: vertex data differ at vertex {v}")
    kind = ValueKind.ENDOMORPHISM if (x.kind == y.kind == ValueKind.ENDOMORPHISM) else ValueKind.MORPHISM
    out = {}
    for sigma in x.base.simplices():
        k = sigma.dim
        total = None
        for t in range(k + 1):
            front, back = Simplex(sigma[:t + 1]), Simplex(sigma[t:])
            if front not in x.components or back not in y.components:
                continue
            term = compose(x.components[front], y.components[back]).scale(_sign(t * y.degree))
            total = term if total is None else total + term
        if total is not None:
            out[sigma] = total
    return LocSysMorphism(y.source, x.target, x.degree + y.degree, out, kind)


def commutator(x: LocSysMorphism, y: LocSysMorphism) -> LocSysMorphism:
    """[x, y] = x∪y - (-1)^{|x||y|} y∪x"""
    return cup(x, y) - cup(y, x).scale(_sign(x.degree * y.degree))


def mc_residual(system: InfinityLocalSystem) -> LocSysMorphism:
    """dF + δ̂F + F∪F per simplex, plus d∘d on every vertex"""
    f = system.structure()
    residual = d_comm(f, DiffConvention.SIGNED) + delta_hat(f) + cup(f, f)
    squares = {(v,): compose(system.differential(v), system.differential(v))
               for v in range(system.base.n_vertices)}
    return residual + LocSysMorphism(system, system, 2, squares, ValueKind.ENDOMORPHISM)


def check_mc(system: InfinityLocalSystem) -> Tuple[bool, List[Issue]]:
    """Accept the system iff the Maurer-Cartan residual vanishes everywhere"""
    issues = []
    for sigma, m in mc_residual(system).components.items():
        if not m.is_zero():
            issues.append(Issue(tuple(sigma), Issue.ERROR, "Maurer-Cartan residual is nonzero",
                                norm=m.norm()))
    return len(issues) == 0, issues


def promote(base: SimplicialComplex, ranks: Dict[int, int], edges: Dict[Sequence[int], object],
            scalars: Scalars = EXACT) -> Tuple[Optional[InfinityLocalSystem], List[Issue]]:
    """Ordinary local system to ∞-local system concentrated in degree 0

    Args:
        base: Simplicial complex
        ranks: Fiber dimension per vertex
        edges: ρ per edge (i, j), a matrix from the fiber at j to the fiber at i

    Returns:
        (system, issues); system is None when an edge map is not invertible or
        a 2-simplex violates ρ(01)ρ(12) = ρ(02)
    """
    issues = []
    vertex_data = {}
    for v in range(base.n_vertices):
        module = GradedModule({0: ranks.get(v, 0)})
        vertex_data[v] = ChainComplex(module, None, scalars)
    rho = {}
    for edge in base.enumerate_simplices(1):
        matrix = edges.get(tuple(edge))
        if matrix is None:
            issues.append(Issue(tuple(edge), Issue.ERROR, "No edge map given"))
            continue
        m = np.asarray(matrix)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        m = scalars.convert(m)
        if m.shape[0] != m.shape[1] or scalars.rank(m) != m.shape[0]:
            issues.append(Issue(tuple(edge), Issue.ERROR, "Edge map is not an isomorphism"))
            continue
        rho[edge] = m
    if issues:
        return None, issues
    for tri in base.enumerate_simplices(2):
        a, b, c = tri
        defect = rho[Simplex((a, b))] @ rho[Simplex((b, c))] - rho[Simplex((a, c))]
        if not scalars.is_zero(defect):
            issues.append(Issue(tuple(tri), Issue.ERROR, "Triangle compatibility fails",
                                norm=scalars.norm(defect)))
    if issues:
        return None, issues
    f = {e: GradedMap(vertex_data[e[1]].module, vertex_data[e[0]].module, 0, {0: m}, scalars)
         for e, m in rho.items()}
    return InfinityLocalSystem(base, vertex_data, f, scalars), issues


def identity_morphism(system: InfinityLocalSystem) -> LocSysMorphism:
    comps = {(v,): GradedMap.identity(system.module(v), system.scalars)
             for v in range(system.base.n_vertices)}
    return LocSysMorphism(system, system, 0, comps)


def compose_morphisms(psi: LocSysMorphism, phi: LocSysMorphism) -> LocSysMorphism:
    """Composition in the dg-category: ψ∪φ"""
    return cup(psi, phi)


def hom_D(phi: LocSysMorphism,
          convention: DiffConvention = DiffConvention.SIGNED) -> LocSysMorphism:
    """Dφ = dφ + δ̂φ + G∪φ - (-1)^{|φ|} φ∪F"""
    return (d_comm(phi, convention) + delta_hat(phi)
            + cup(phi.target.structure(), phi)
            - cup(phi, phi.source.structure()).scale(_sign(phi.degree)))


def shift_system(system: InfinityLocalSystem, q: int) -> InfinityLocalSystem:
    """F[q]: vertex complexes shifted by q, f^k scaled by (-1)^{q(1-k)}"""
    vertex_data = {v: shift_complex(c, q) for v, c in system.vertex_data.items()}
    f = {}
    for sigma, m in system.f.items():
        shifted = m.reindex(vertex_data[sigma[-1]].module, vertex_data[sigma[0]].module, q)
        f[sigma] = shifted.scale(_sign(q * (1 - sigma.dim)))
    return InfinityLocalSystem(system.base, vertex_data, f, system.scalars)


def shift_morphism(phi: LocSysMorphism, s: int, source: InfinityLocalSystem,
                   target: InfinityLocalSystem) -> LocSysMorphism:
    """φ[s] between F[s] and G[s]: component k scaled by (-1)^{sk}"""
    comps = {}
    for sigma, m in phi.components.items():
        moved = m.reindex(source.module(sigma[-1]), target.module(sigma[0]), s)
        comps[sigma] = moved.scale(_sign(s * sigma.dim))
    return LocSysMorphism(source, target, phi.degree, comps, phi.kind)


def _regrade(m: GradedMap, source: GradedModule, target: GradedModule, s: int) -> GradedMap:
    """View a map out of F as a map out of F[s] (target unchanged)"""
    blocks = {d - s: b for d, b in m.blocks.items()}
    return GradedMap(source, target, m.degree + s, blocks, m.scalars)


def cone_system(phi: LocSysMorphism) -> InfinityLocalSystem:
    """Candidate cone on F[1-q] ⊕ G

    Vertex differential [[d_F[1-q], 0], [φ⁰, d_G]]; on k-simplices
    [[f[1-q]^k, 0], [(-1)^{k(q+1)} φ^k, g^k]]. Built without validation:
    the result passes check_mc iff φ is closed.
    """
    q = phi.degree
    s = 1 - q
    fs = shift_system(phi.source, s)
    g = phi.target
    scalars = phi.scalars
    vertex_data = {}
    for v in range(phi.base.n_vertices):
        srcs = [fs.module(v), g.module(v)]
        parts = {(0, 0): fs.differential(v), (1, 1): g.differential(v)}
        if (v,) in phi.components:
            parts[(1, 0)] = _regrade(phi.component((v,)), fs.module(v), g.module(v), s)
        d = block_map(srcs, srcs, 1, parts, scalars)
        vertex_data[v] = ChainComplex(d.source, d, scalars, check=False)
    f = {}
    for sigma in phi.base.simplices():
        k = sigma.dim
        if k < 1:
            continue
        first, last = sigma[0], sigma[-1]
        parts = {(0, 0): fs.value(sigma), (1, 1): g.value(sigma)}
        if sigma in phi.components:
            parts[(1, 0)] = _regrade(phi.components[sigma], fs.module(last),
                                     g.module(first), s).scale(_sign(k * (q + 1)))
        m = block_map([fs.module(last), g.module(last)], [fs.module(first), g.module(first)],
                      1 - k, parts, scalars)
        if not m.is_zero():
            f[sigma] = m
    return InfinityLocalSystem(phi.base, vertex_data, f, scalars)


def cone_defect_block(phi: LocSysMorphism, cone: InfinityLocalSystem,
                      sigma: Sequence[int]) -> GradedMap:
    """The lower-left block of the cone's MC residual on σ"""
    sigma = Simplex(sigma)
    s = 1 - phi.degree
    fs_first = phi.source.module(sigma[0]).shift(s)
    fs_last = phi.source.module(sigma[-1]).shift(s)
    residual = mc_residual(cone).component(sigma)
    return extract_block(residual, [fs_last, phi.target.module(sigma[-1])],
                         [fs_first, phi.target.module(sigma[0])], 1, 0)


def expected_cone_defect(phi: LocSysMorphism, sigma: Sequence[int]) -> GradedMap:
    """(-1)^{k(q+1)} (Dφ)^k viewed out of F[1-q]"""
    sigma = Simplex(sigma)
    s = 1 - phi.degree
    dphi = hom_D(phi).component(sigma)
    return _regrade(dphi, phi.source.module(sigma[-1]).shift(s), phi.target.module(sigma[0]),
                    s).scale(_sign(sigma.dim * (phi.degree + 1)))


def total_complex(source: InfinityLocalSystem, target: InfinityLocalSystem,
                  show_progress: bool = False) -> Tuple[ChainComplex, Dict[int, list]]:
    """Flatten (Loc(F, G), D) into one finite complex

    Basis in total degree n: (σ, source degree, row, column) over simplices
    in lexicographic order, σ carrying Hom^{n-k}(F(σ_k), G(σ_0)).
    """
    if not source.same_base(target):
        raise ValueError("Source and target live on different bases")
    base = source.base
    scalars = source.scalars
    simplices = base.simplices()
    lo = min([min(target.module(v).degrees(), default=0) for v in range(base.n_vertices)], default=0)
    hi = max([max(target.module(v).degrees(), default=0) for v in range(base.n_vertices)], default=0)
    src_lo = min([min(source.module(v).degrees(), default=0) for v in range(base.n_vertices)], default=0)
    src_hi = max([max(source.module(v).degrees(), default=0) for v in range(base.n_vertices)], default=0)
    layout: Dict[int, list] = {}
    for n in range(lo - src_hi, hi - src_lo + base.dimension + 1):
        entries = []
        for sigma in simplices:
            a = n - sigma.dim
            s_mod, t_mod = source.module(sigma[-1]), target.module(sigma[0])
            for d in s_mod.degrees():
                for r in range(t_mod.dim(d + a)):
                    for c in range(s_mod.dim(d)):
                        entries.append((sigma, d, r, c))
        if entries:
            layout[n] = entries
    dims = {n: len(e) for n, e in layout.items()}
    cap = max([abs(n) for n in dims] + [source.module(0).degree_cap])
    module = GradedModule(dims, cap)
    blocks = {}
    items = [n for n in layout if n + 1 in layout]
    for n in tqdm(items, desc="Flattening", disable=not show_progress):
        index = {e: i for i, e in enumerate(layout[n + 1])}
        block = scalars.zeros(len(layout[n + 1]), len(layout[n]))
        for j, (sigma, d, r, c) in enumerate(layout[n]):
            a = n - sigma.dim
            s_mod, t_mod = source.module(sigma[-1]), target.module(sigma[0])
            entry = scalars.zeros(t_mod.dim(d + a), s_mod.dim(d))
            entry[r, c] = scalars.coerce(1)
            basis = LocSysMorphism(source, target, n,
                                   {sigma: GradedMap(s_mod, t_mod, a, {d: entry}, scalars)})
            for tau, m in hom_D(basis).components.items():
                for dd, b in m.blocks.items():
                    for (rr, cc), v in np.ndenumerate(b):
                        if v != 0:
                            block[index[(tau, dd, rr, cc)], j] = v
        blocks[n] = block
    d = GradedMap(module, module, 1, blocks, scalars)
    return ChainComplex(module, d, scalars), layout


def hom_cohomology(source: InfinityLocalSystem, target: InfinityLocalSystem) -> GradedModule:
    complex_, _ = total_complex(source, target)
    return cohomology(complex_).module


def is_homotopy_equivalence(phi: LocSysMorphism) -> bool:
    """True iff every vertex component φ⁰_x is a quasi-isomorphism

    Raises:
        ValueError: when φ is not closed
    """
    defect = hom_D(phi)
    if not defect.is_zero():
        raise ValueError(f"Morphism is not closed (|Dφ| = {defect.norm():.3e})")
    for v in range(phi.base.n_vertices):
        if not is_quasi_iso(phi.component((v,)), phi.source.vertex_data[v], phi.target.vertex_data[v]):
            return False
    return True


class SpectralPage:
    """Page 0 or 1 of the spectral sequence of the simplicial filtration"""

    def __init__(self, index: int, terms: Dict[Tuple[int, int], int]):
        self.index = index
        self.terms = terms  # (p, internal degree) -> dimension
        self.fibers: Dict[Simplex, object] = {}
        self.edge_maps: Dict[Simplex, Dict[str, np.ndarray]] = {}
        self.scalars: Scalars = EXACT

    def dim(self, p: int, a: int) -> int:
        return self.terms.get((p, a), 0)

    def transport(self, edge: Sequence[int], psi: np.ndarray) -> np.ndarray:
        """Hom local system transport along (i, j): ψ ↦ H(g) ψ H(f)^{-1}

        Raises:
            ValueError: on page 0, or when H(f) is not invertible
        """
        if self.index != 1:
            raise ValueError("Edge transport exists on page 1 only")
        maps = self.edge_maps[Simplex(edge)]
        hf, hg = maps['source'], maps['target']
        if hf.shape[0] != hf.shape[1] or self.scalars.rank(hf) != hf.shape[0]:
            raise ValueError(f"H(f{tuple(edge)}) is not invertible")
        inverse = self.scalars.solve(hf, self.scalars.identity(hf.shape[0]))
        return hg @ psi @ inverse

    def __repr__(self):
        return f"SpectralPage(E{self.index}, {self.terms})"

    def to_dict(self) -> dict:
        return {
            'page': self.index,
            'terms': [{'p': p, 'q': a, 'dim': n} for (p, a), n in sorted(self.terms.items())],
        }


def spectral_page0(source: InfinityLocalSystem, target: InfinityLocalSystem) -> SpectralPage:
    """E0^{p,a} = ⊕_{σ ∈ K_p} Hom^a(F(σ_p), G(σ_0)) with d0 = d_G x - (-1)^a x d_F"""
    if not source.same_base(target):
        raise ValueError("Source and target live on different bases")
    terms: Dict[Tuple[int, int], int] = {}
    page = SpectralPage(0, terms)
    page.scalars = source.scalars
    for sigma in source.base.simplices():
        hom, _ = hom_complex(source.vertex_data[sigma[-1]], target.vertex_data[sigma[0]])
        page.fibers[sigma] = hom
        for a, n in hom.module.dims.items():
            terms[(sigma.dim, a)] = terms.get((sigma.dim, a), 0) + n
    return page


def _dense_induced(blocks: Dict[int, np.ndarray], h_src: CohomologyResult,
                   h_tgt: CohomologyResult, scalars: Scalars) -> np.ndarray:
    out = scalars.zeros(h_tgt.module.total_dim, h_src.module.total_dim)
    s_off, t_off = h_src.module.offsets(), h_tgt.module.offsets()
    for k, b in blocks.items():
        out[t_off[k]:t_off[k] + b.shape[0], s_off[k]:s_off[k] + b.shape[1]] = b
    return out


def spectral_page1(source: InfinityLocalSystem, target: InfinityLocalSystem) -> SpectralPage:
    """E1 = fiberwise Hom cohomology, with H(f¹), H(g¹) on every edge"""
    page0 = spectral_page0(source, target)
    terms: Dict[Tuple[int, int], int] = {}
    page = SpectralPage(1, terms)
    scalars = source.scalars
    page.scalars = scalars
    for sigma, hom in page0.fibers.items():
        h = cohomology(hom)
        page.fibers[sigma] = h
        for a, n in h.module.dims.items():
            terms[(sigma.dim, a)] = terms.get((sigma.dim, a), 0) + n
    h_f = {v: cohomology(c) for v, c in source.vertex_data.items()}
    h_g = {v: cohomology(c) for v, c in target.vertex_data.items()}
    for edge in source.base.enumerate_simplices(1):
        i, j = edge
        maps = {}
        for label, system, h in (('source', source, h_f), ('target', target, h_g)):
            blocks = induced_map(system.value(edge), system.vertex_data[j], system.vertex_data[i],
                                 h[j], h[i])
            maps[label] = _dense_induced(blocks, h[j], h[i], scalars)
        page.edge_maps[edge] = maps
    return page


def page1_triangle_check(page: SpectralPage, base: SimplicialComplex) -> Tuple[bool, List[Issue]]:
    """H(ρ01)H(ρ12) = H(ρ02) for both systems on every 2-simplex"""
    issues = []
    s = page.scalars
    for tri in base.enumerate_simplices(2):
        a, b, c = tri
        for label in ('source', 'target'):
            m01 = page.edge_maps[Simplex((a, b))][label]
            m12 = page.edge_maps[Simplex((b, c))][label]
            m02 = page.edge_maps[Simplex((a, c))][label]
            defect = m01 @ m12 - m02
            if not s.is_zero(defect):
                issues.append(Issue(tuple(tri), Issue.ERROR,
                                    f"Page-1 {label} edge maps do not compose",
                                    norm=s.norm(defect)))
    return len(issues) == 0, issues


class LocalSystemEngine(LogMixin):
    """Runs the local-system checks with logging"""

    def __init__(self, config=None, logger=None):
        self.config = config
        self.logger = logger

    def check(self, system: InfinityLocalSystem) -> Tuple[bool, List[Issue]]:
        self._log_info(f"Checking Maurer-Cartan equation on {system.base!r}")
        ok, issues = check_mc(system)
        if ok:
            self._log_success("Maurer-Cartan residual vanishes on every simplex")
        else:
            for issue in issues:
                self._log_error(repr(issue))
        return ok, issues

    def residual_norms(self, system: InfinityLocalSystem) -> Dict[str, float]:
        return {simplex_key(s): n for s, n in mc_residual(system).norms().items()}

    def check_differential(self, phi: LocSysMorphism) -> Tuple[bool, List[Issue]]:
        """D∘D = 0 on φ"""
        issues = []
        for sigma, m in hom_D(hom_D(phi)).components.items():
            if not m.is_zero():
                issues.append(Issue(tuple(sigma), Issue.ERROR, "D∘D is nonzero", norm=m.norm()))
        if issues:
            self._log_error(f"D∘D fails on {len(issues)} simplices")
        return len(issues) == 0, issues

    def spectral(self, source: InfinityLocalSystem, target: InfinityLocalSystem,
                 page: int = 1) -> Tuple[SpectralPage, List[Issue]]:
        if page == 0:
            result = spectral_page0(source, target)
            return result, []
        result = spectral_page1(source, target)
        ok, issues = page1_triangle_check(result, source.base)
        if ok:
            self._log_success(f"E1 computed: {len(result.terms)} nonzero terms")
        else:
            self._log_warning("E1 edge maps fail to compose on some 2-simplices")
        return result, issues

    def hom_cohomology(self, source: InfinityLocalSystem,
                       target: InfinityLocalSystem) -> GradedModule:
        show = bool(self.logger and self.logger.verbose)
        complex_, _ = total_complex(source, target, show_progress=show)
        result = cohomology(complex_).module
        self._log_info(f"Hom cohomology dims: {result.dims}")
        return result
