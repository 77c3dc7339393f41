"""
Holonomy Module
Iterated integrals along path families, the holonomy series, the
cubes-to-simplices map θ and the Riemann-Hilbert construction on objects
and morphisms
"""
import math
from itertools import combinations, permutations
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from numpy.polynomial import legendre
from tqdm import tqdm

from src.graded_linear import DOUBLE, ChainComplex, GradedMap, GradedModule
from src.locsys import InfinityLocalSystem, LocSysMorphism, hom_D, mc_residual
from src.simplicial import SimplicialComplex
from src.superconn import (
    Bundle, Superconnection, SuperconnMorphism, flatness_check, morphism_d,
    morphism_to_koszul, superconn_to_koszul,
)
from src.utils import LogMixin


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


def rh_sign(k: int) -> int:
    """Normalization of the k-simplex value: (-1)^{k(k+1)/2 - 1}"""
    return _sign(k * (k + 1) // 2 - 1)


class QuadratureScheme:
    """Gauss-Legendre panels in time, tensor Gauss-Legendre on the cube, series cutoff"""

    def __init__(self, nodes: int = 8, max_word_length: int = 12, term_floor: float = 1e-12,
                 tolerance: float = 1e-8):
        if nodes < 2:
            raise ValueError(f"Quadrature needs at least 2 nodes, got {nodes}")
        if max_word_length < 1:
            raise ValueError(f"Series cutoff must be >= 1, got {max_word_length}")
        self.nodes = nodes
        self.max_word_length = max_word_length
        self.term_floor = term_floor
        self.tolerance = tolerance
        self.points, self.weights = legendre.leggauss(nodes)
        self.integration = spectral_integration_matrix(self.points)

    @staticmethod
    def from_config(config, nodes: Optional[int] = None,
                    max_word_length: Optional[int] = None) -> 'QuadratureScheme':
        return QuadratureScheme(
            nodes or config.get('quadrature.nodes', 8),
            max_word_length or config.get('quadrature.max_word_length', 12),
            config.get('quadrature.term_floor', 1e-12),
            config.get('quadrature.tolerance', 1e-8))

    def refined(self, nodes: int) -> 'QuadratureScheme':
        return QuadratureScheme(nodes, self.max_word_length, self.term_floor, self.tolerance)

    def __repr__(self):
        return f"QuadratureScheme(N={self.nodes}, L={self.max_word_length})"


def spectral_integration_matrix(x: np.ndarray) -> np.ndarray:
    """S with (S f)_i = ∫_{-1}^{x_i} p, p the interpolant of f at the nodes x"""
    n = len(x)
    vander = legendre.legvander(x, n - 1)
    antiderivatives = np.empty((n, n))
    for j in range(n):
        coeffs = np.zeros(n)
        coeffs[j] = 1.0
        antiderivatives[:, j] = legendre.legval(x, legendre.legint(coeffs, lbnd=-1))
    return antiderivatives @ np.linalg.inv(vander)


class ExteriorAlgebra:
    """Matrix-valued forms on the cube I^m, stored as (..., 2^m, rows, cols) by subset mask

    Products follow the form-first Koszul rule
    (α⊗a)(β⊗b) = (-1)^{|a||β|} αβ ⊗ ab, where |a| is read off the left
    factor's total degree.
    """

    def __init__(self, m: int):
        self.m = m
        self.size = 2 ** m
        self.degree = [bin(mask).count('1') for mask in range(self.size)]
        self.top = self.size - 1
        self.pairs = []
        for a in range(self.size):
            for b in range(self.size):
                if a & b:
                    continue
                crossings = sum(1 for i in range(m) if b >> i & 1
                                for j in range(i + 1, m) if a >> j & 1)
                self.pairs.append((a, b, a | b, _sign(crossings)))

    @staticmethod
    def mask(index: Sequence[int]) -> int:
        return sum(1 << i for i in index)

    def multiply(self, left: np.ndarray, right: np.ndarray, left_degree: int = 0) -> np.ndarray:
        shape = left.shape[:-3] + (self.size, left.shape[-2], right.shape[-1])
        out = np.zeros(shape)
        for a, b, c, sign in self.pairs:
            koszul = _sign((left_degree + self.degree[a]) * self.degree[b])
            out[..., c, :, :] += (sign * koszul) * (left[..., a, :, :] @ right[..., b, :, :])
        return out


class PathFamily:
    """h: I^m × [0, 1] -> chart, piecewise smooth in t with explicit breakpoints"""

    m = 0

    def breakpoints(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, w: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(X, ∂X/∂t, ∂X/∂w) at matching rows of w and t"""
        raise NotImplementedError

    def regions(self, scheme: QuadratureScheme) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Cube nodes and weights, split into the m! regions w_{p1} >= ... >= w_{pm}"""
        m = self.m
        if m == 0:
            return [(np.zeros((1, 0)), np.ones(1))]
        x01 = (scheme.points + 1) / 2
        w01 = scheme.weights / 2
        grids = np.meshgrid(*([x01] * m), indexing='ij')
        weights = np.meshgrid(*([w01] * m), indexing='ij')
        u = np.stack([g.ravel() for g in grids], axis=1)
        wu = np.prod(np.stack([g.ravel() for g in weights], axis=1), axis=1)
        s = np.cumprod(u, axis=1)
        jacobian = np.prod(s[:, :-1], axis=1) if m > 1 else np.ones(len(u))
        out = []
        for perm in permutations(range(m)):
            w = np.empty_like(s)
            w[:, list(perm)] = s
            out.append((w, wu * jacobian))
        return out


class StraightPath(PathFamily):
    """Polyline through the given chart points, equal time per segment"""

    def __init__(self, points: Sequence[Sequence[float]]):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        if len(self.points) < 2:
            raise ValueError("A path needs at least two points")
        self.segments = len(self.points) - 1

    def breakpoints(self, w: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.linspace(0.0, 1.0, self.segments + 1), (len(w), self.segments + 1))

    def evaluate(self, w, t):
        s = self.segments
        idx = np.minimum(np.floor(t * s).astype(int), s - 1)
        local = t * s - idx
        start, end = self.points[idx], self.points[idx + 1]
        x = start + local[:, None] * (end - start)
        tau = s * (end - start)
        return x, tau, np.zeros((len(t), self.points.shape[1], 0))


def standard_vertices(k: int) -> np.ndarray:
    """v_i = (1^i, 0^{k-i}) in coordinates 1 >= y1 >= ... >= yk >= 0"""
    return np.array([[1.0] * i + [0.0] * (k - i) for i in range(k + 1)]).reshape(k + 1, k)


class ThetaFamily(PathFamily):
    """θ = π_k∘λ for a k-simplex realized affinely on points P_0..P_k

    λ_w starts at (w, 1) and lowers x_k from 1, then x_{k-1} from w_{k-1},
    ..., then x_1 from w_1, each to 0 over a time 1/k. π_k(x)_i =
    max(x_i..x_k). Paths run from v_k to v_0.
    """

    def __init__(self, k: int, points: Optional[np.ndarray] = None):
        if k < 1:
            raise ValueError(f"θ needs k >= 1, got {k}")
        self.k = k
        self.m = k - 1
        self.points = standard_vertices(k) if points is None else np.asarray(points, dtype=float)
        if self.points.shape[0] != k + 1:
            raise ValueError(f"A {k}-simplex needs {k + 1} points, got {self.points.shape[0]}")
        self.edges = self.points[1:] - self.points[:-1]

    def _stages(self, w: np.ndarray, t: np.ndarray):
        k = self.k
        start = np.concatenate([np.asarray(w, dtype=float).reshape(len(t), self.m),
                                np.ones((len(t), 1))], axis=1)
        stage = np.minimum(np.floor(t * k).astype(int), k - 1)
        r = t * k - stage
        lowered = k - 1 - stage
        return start, stage, r, lowered

    def lam(self, w: np.ndarray, t: np.ndarray) -> np.ndarray:
        start, _, r, lowered = self._stages(w, t)
        j = np.arange(self.k)[None, :]
        low = lowered[:, None]
        return np.where(j < low, start, np.where(j == low, start * (1 - r)[:, None], 0.0))

    @staticmethod
    def pi(x: np.ndarray) -> np.ndarray:
        """Order-preserving retraction of I^k onto Δ^k"""
        x = np.atleast_2d(x)
        return np.maximum.accumulate(x[:, ::-1], axis=1)[:, ::-1]

    def point(self, w: np.ndarray, t: np.ndarray) -> np.ndarray:
        """θ_w(t) in the chart"""
        return self.points[0] + self.pi(self.lam(w, t)) @ self.edges

    def breakpoints(self, w: np.ndarray) -> np.ndarray:
        k, q = self.k, len(w)
        start = np.concatenate([np.asarray(w, dtype=float).reshape(q, self.m), np.ones((q, 1))], axis=1)
        points = [np.zeros(q)] + [np.full(q, c / k) for c in range(1, k + 1)]
        for stage in range(k):
            low = k - 1 - stage
            top = start[:, low]
            safe = np.where(top > 0, top, 1.0)
            for l in range(low):
                s = start[:, l:low].max(axis=1)
                r = np.clip(np.where(top > 0, 1 - s / safe, 1.0), 0.0, 1.0)
                points.append((stage + r) / k)
        return np.sort(np.stack(points, axis=1), axis=1)

    def evaluate(self, w, t):
        k, m = self.k, self.m
        start, _, r, lowered = self._stages(w, t)
        x = self.lam(w, t)
        j = np.arange(k)[None, :]
        dxdt = np.where(j == lowered[:, None], -k * start, 0.0)
        dxdw = np.zeros((len(t), k, m))
        for s in range(m):
            dxdw[:, s, s] = np.where(s < lowered, 1.0, np.where(s == lowered, 1 - r, 0.0))
        arg = np.empty((len(t), k), dtype=int)
        for l in range(k):
            arg[:, l] = l + np.argmax(x[:, l:], axis=1)
        y = np.take_along_axis(x, arg, axis=1)
        dydt = np.take_along_axis(dxdt, arg, axis=1)
        dydw = np.take_along_axis(dxdw, np.repeat(arg[:, :, None], m, axis=2), axis=1)
        chart = self.points[0] + y @ self.edges
        tau = dydt @ self.edges
        jac = np.einsum('qkm,kn->qnm', dydw, self.edges)
        return chart, tau, jac


def theta(k: int) -> ThetaFamily:
    """θ on the standard simplex: chart coordinates are the Δ^k coordinates"""
    return ThetaFamily(k)


def _pullback_dt(numeric: Dict[Tuple[int, ...], object], p: int, x: np.ndarray, tau: np.ndarray,
                 jac: np.ndarray, algebra: ExteriorAlgebra, rows: int, cols: int) -> np.ndarray:
    """dt-coefficient b of h*ω for h*ω = dt∧b + (terms without dt)"""
    out = np.zeros((len(x), algebra.size, rows, cols))
    if p == 0 or p - 1 > algebra.m:
        return out
    for index, fn in numeric.items():
        values = fn(x)
        for s in range(p):
            rest = list(index[:s] + index[s + 1:])
            along = _sign(s) * tau[:, index[s]]
            for cube_index in combinations(range(algebra.m), p - 1):
                if rest:
                    det = np.linalg.det(jac[:, rest][:, :, list(cube_index)])
                else:
                    det = np.ones(len(x))
                out[:, algebra.mask(cube_index)] += (along * det)[:, None, None] * values
    return out


class _FamilyGrid:
    """Time panels and geometry of one family over one cube region"""

    def __init__(self, family: PathFamily, scheme: QuadratureScheme, w: np.ndarray):
        self.n_nodes = scheme.nodes
        self.n_points = len(w)
        bps = family.breakpoints(w)
        self.halves = []
        self.geometry = []
        for j in range(bps.shape[1] - 1):
            ta, tb = bps[:, j], bps[:, j + 1]
            half = (tb - ta) / 2
            t = ta[None, :] + (scheme.points[:, None] + 1) * half[None, :]
            w_flat = np.broadcast_to(w, (scheme.nodes,) + w.shape).reshape(scheme.nodes * len(w), w.shape[1])
            self.halves.append(half)
            self.geometry.append(family.evaluate(w_flat, t.reshape(-1)))

    def coefficients(self, forms: Dict[int, Dict[Tuple[int, ...], object]], algebra: ExteriorAlgebra,
                     rows: int, cols: int) -> List[np.ndarray]:
        """Σ over the given forms of the pulled-back dt-coefficient, per panel (N, P, 2^m, r, c)"""
        out = []
        for x, tau, jac in self.geometry:
            total = np.zeros((len(x), algebra.size, rows, cols))
            for p, numeric in forms.items():
                total += _pullback_dt(numeric, p, x, tau, jac, algebra, rows, cols)
            out.append(total.reshape((self.n_nodes, self.n_points) + total.shape[1:]))
        return out


def _integrate(halves: List[np.ndarray], integrands: List[np.ndarray], start: np.ndarray,
               scheme: QuadratureScheme, sign: int) -> Tuple[List[np.ndarray], np.ndarray]:
    """Cumulative ∫_0^t of node values, panel by panel; returns (values at nodes, value at t = 1)"""
    nodes_out = []
    for half, f in zip(halves, integrands):
        tail = (1,) * (f.ndim - 2)
        cumulative = np.tensordot(scheme.integration, f, axes=([1], [0]))
        nodes_out.append(start[None] + sign * half.reshape((1, -1) + tail) * cumulative)
        start = start + sign * half.reshape((-1,) + tail) * np.tensordot(scheme.weights, f, axes=([0], [0]))
    return nodes_out, start


class _SeriesResult:
    def __init__(self, terms: List[np.ndarray], nodes_total: List[np.ndarray], truncated: bool):
        self.terms = terms
        self.nodes_total = nodes_total
        self.truncated = truncated


def _transport_series(bs: List[np.ndarray], halves: List[np.ndarray], algebra: ExteriorAlgebra,
                      scheme: QuadratureScheme, n: int) -> _SeriesResult:
    """Ψ = Σ_r Ψ_r with Ψ_0 = I and Ψ_r(t) = -∫_0^t b Ψ_{r-1}"""
    n_points = bs[0].shape[1] if bs else 1
    identity = np.zeros((n_points, algebra.size, n, n))
    identity[:, 0] = np.eye(n)
    previous = [np.broadcast_to(identity, (scheme.nodes,) + identity.shape).copy() for _ in bs]
    nodes_total = [p.copy() for p in previous]
    terms = [identity]
    truncated = True
    for _ in range(scheme.max_word_length):
        integrands = [algebra.multiply(b, p, 0) for b, p in zip(bs, previous)]
        nodes, end = _integrate(halves, integrands, np.zeros_like(identity), scheme, -1)
        size = max([float(np.max(np.abs(end), initial=0.0))]
                   + [float(np.max(np.abs(v), initial=0.0)) for v in nodes])
        if size < scheme.term_floor:
            truncated = False
            break
        terms.append(end)
        for total, v in zip(nodes_total, nodes):
            total += v
        previous = nodes
    return _SeriesResult(terms, nodes_total, truncated)


def _numeric_forms(forms) -> Dict[int, Dict[Tuple[int, ...], object]]:
    return {form.p: form.numeric() for form in forms.values() if form.p >= 1 and form.coeffs}


class HolonomyValue:
    """∫_{I^q} of the top cube coefficient, as a dense matrix of bundle degree -q"""

    def __init__(self, matrix: np.ndarray, degree: int, partial_norms: List[float],
                 flags: Set[str], terms_used: int):
        self.matrix = matrix
        self.degree = degree
        self.partial_norms = partial_norms
        self.flags = flags
        self.terms_used = terms_used

    def to_graded_map(self, source: Bundle, target: Bundle) -> GradedMap:
        return dense_to_graded(self.matrix, source, target, self.degree)

    def __repr__(self):
        return f"HolonomyValue(degree={self.degree}, terms={self.terms_used}, flags={sorted(self.flags)})"

    def to_dict(self) -> dict:
        return {
            'degree': self.degree,
            'matrix': self.matrix.tolist(),
            'partial_norms': self.partial_norms,
            'terms_used': self.terms_used,
            'flags': sorted(self.flags),
        }


def _order(bundle: Bundle) -> np.ndarray:
    return np.argsort(np.asarray(bundle.degrees), kind='stable')


def bundle_module(bundle: Bundle) -> GradedModule:
    return GradedModule(bundle.dims())


def dense_to_graded(matrix: np.ndarray, source: Bundle, target: Bundle, degree: int) -> GradedMap:
    """Bundle-ordered dense matrix to the degree-`degree` GradedMap between sorted modules"""
    ordered = np.asarray(matrix, dtype=float)[np.ix_(_order(target), _order(source))]
    return GradedMap.from_dense(bundle_module(source), bundle_module(target), degree, ordered, DOUBLE)


def _flag_refinement(value: HolonomyValue, finer: HolonomyValue, scheme: QuadratureScheme) -> HolonomyValue:
    if np.linalg.norm(finer.matrix - value.matrix) > scheme.tolerance:
        value.flags.add('unconverged')
    return value


def holonomy(conn: Superconnection, family: PathFamily, scheme: QuadratureScheme,
             check_refinement: bool = False) -> HolonomyValue:
    """Holonomy series over a path family, integrated over the cube

    For a single path (m = 0) this is parallel transport from the start
    fiber to the end fiber. With `check_refinement` the value is recomputed
    with twice the nodes and flagged `unconverged` when the two differ by
    more than `scheme.tolerance`.
    """
    if check_refinement:
        value = holonomy(conn, family, scheme)
        return _flag_refinement(value, holonomy(conn, family, scheme.refined(2 * scheme.nodes)), scheme)
    n = conn.bundle.rank
    algebra = ExteriorAlgebra(family.m)
    forms = _numeric_forms(superconn_to_koszul(conn))
    total = np.zeros((n, n))
    partial: Dict[int, np.ndarray] = {}
    flags: Set[str] = set()
    used = 0
    for w, weights in family.regions(scheme):
        grid = _FamilyGrid(family, scheme, w)
        bs = grid.coefficients(forms, algebra, n, n) if forms else \
            [np.zeros((scheme.nodes, len(w), algebra.size, n, n)) for _ in grid.halves]
        series = _transport_series(bs, grid.halves, algebra, scheme, n)
        if series.truncated:
            flags.add('truncated')
        used = max(used, len(series.terms) - 1)
        for r, term in enumerate(series.terms):
            contribution = np.einsum('p,pij->ij', weights, term[:, algebra.top])
            partial[r] = partial.get(r, np.zeros((n, n))) + contribution
            total += contribution
    norms = [float(np.linalg.norm(partial[r])) for r in sorted(partial)]
    return HolonomyValue(total, -family.m, norms, flags, used)


def iterated_integral(conn: Superconnection, family: PathFamily, word: Sequence[int],
                      scheme: QuadratureScheme, check_refinement: bool = False) -> HolonomyValue:
    """W(i1..ir)(t) = ∫_0^t b^{(i1)} W(i2..ir), integrated over the cube

    b^{(i)} is the dt-coefficient of the pulled-back ω^i; 0-forms have none,
    so words containing 0 vanish identically. The holonomy equals
    I + Σ_r (-1)^r Σ_{|word| = r} W(word).
    """
    if check_refinement:
        value = iterated_integral(conn, family, word, scheme)
        finer = iterated_integral(conn, family, word, scheme.refined(2 * scheme.nodes))
        return _flag_refinement(value, finer, scheme)
    n = conn.bundle.rank
    algebra = ExteriorAlgebra(family.m)
    omega = superconn_to_koszul(conn)
    total = np.zeros((n, n))
    for w, weights in family.regions(scheme):
        grid = _FamilyGrid(family, scheme, w)
        identity = np.zeros((len(w), algebra.size, n, n))
        identity[:, 0] = np.eye(n)
        current = [np.broadcast_to(identity, (scheme.nodes,) + identity.shape).copy() for _ in grid.halves]
        end = identity
        for letter in reversed(list(word)):
            form = omega.get(letter)
            if form is None or letter == 0 or not form.coeffs:
                bs = [np.zeros((scheme.nodes, len(w), algebra.size, n, n)) for _ in grid.halves]
            else:
                bs = grid.coefficients({letter: form.numeric()}, algebra, n, n)
            integrands = [algebra.multiply(b, c, 0) for b, c in zip(bs, current)]
            current, end = _integrate(grid.halves, integrands, np.zeros_like(identity), scheme, 1)
        total += np.einsum('p,pij->ij', weights, end[:, algebra.top])
    return HolonomyValue(total, -family.m, [float(np.linalg.norm(total))], set(), len(word))


def path_concatenation_defect(conn: Superconnection, start: Sequence[float], end: Sequence[float],
                              scheme: QuadratureScheme) -> float:
    """|Ψ(start→end) - Ψ(mid→end)Ψ(start→mid)| for the straight path split at its midpoint"""
    start, end = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    mid = (start + end) / 2
    whole = holonomy(conn, StraightPath([start, end]), scheme).matrix
    first = holonomy(conn, StraightPath([start, mid]), scheme).matrix
    second = holonomy(conn, StraightPath([mid, end]), scheme).matrix
    return float(np.linalg.norm(whole - second @ first))


def _evaluate_zero_form(conn_forms, point: np.ndarray, rows: int, cols: int) -> np.ndarray:
    form = conn_forms.get(0)
    if form is None or () not in form.coeffs:
        return np.zeros((rows, cols))
    return form.numeric()[()](np.atleast_2d(point))[0]


def stokes_residual(conn: Superconnection, points: Sequence[Sequence[float]],
                    scheme: QuadratureScheme) -> np.ndarray:
    """Left minus right side of the integrated Stokes identity on a realized k-simplex

        -(-1)^m a⁰(P_0) I(σ) + I(σ) a⁰(P_k)
            = Σ_{j=1}^{k-1} (-1)^{j-1} [(-1)^{(j-1)(k-1-j)} I(σ_{0..j}) I(σ_{j..k}) - I(∂_j σ)]

    with m = k - 1 and I the cube-integrated top holonomy coefficient.

    Raises:
        ValueError: when the superconnection is not flat
    """
    flat, _ = flatness_check(conn)
    if not flat:
        raise ValueError("Stokes identity needs a flat superconnection")
    pts = np.asarray(points, dtype=float)
    k = len(pts) - 1
    m = k - 1
    n = conn.bundle.rank
    omega = superconn_to_koszul(conn)

    def integral(sub: np.ndarray) -> np.ndarray:
        return holonomy(conn, ThetaFamily(len(sub) - 1, sub), scheme).matrix

    whole = integral(pts)
    lhs = -_sign(m) * _evaluate_zero_form(omega, pts[0], n, n) @ whole \
        + whole @ _evaluate_zero_form(omega, pts[-1], n, n)
    rhs = np.zeros((n, n))
    for j in range(1, k):
        front, back = integral(pts[:j + 1]), integral(pts[j:])
        face = integral(np.delete(pts, j, axis=0))
        rhs += _sign(j - 1) * (_sign((j - 1) * (k - 1 - j)) * front @ back - face)
    return lhs - rhs


def _vertex_point(complex_: SimplicialComplex, v: int) -> Optional[np.ndarray]:
    if v in complex_.coords:
        return complex_.coords[v]
    for sigma, pts in complex_.realizations.items():
        if v in sigma:
            return pts[list(sigma).index(v)]
    return None


def rh_object(conn: Superconnection, complex_: SimplicialComplex, scheme: QuadratureScheme,
              show_progress: bool = False) -> InfinityLocalSystem:
    """Vertex complexes (V, A⁰(x)) and f_k(σ) = (-1)^{k(k+1)/2-1} ∫ θ-family holonomy

    Per-simplex quadrature flags land in the returned system's `flags`.

    Raises:
        ValueError: when the superconnection is not flat or the complex has no realization
    """
    if not flatness_check(conn)[0]:
        raise ValueError("Riemann-Hilbert needs a flat superconnection")
    if not complex_.has_realization():
        raise ValueError("The simplicial complex carries no chart realization")
    bundle = conn.bundle
    module = bundle_module(bundle)
    omega = superconn_to_koszul(conn)
    vertex_data = {}
    for v in range(complex_.n_vertices):
        point = _vertex_point(complex_, v)
        if point is None and 0 in omega:
            raise ValueError(f"No chart point for vertex {v}")
        a0 = _evaluate_zero_form(omega, point, bundle.rank, bundle.rank) if point is not None \
            else np.zeros((bundle.rank, bundle.rank))
        d = dense_to_graded(a0, bundle, bundle, 1)
        vertex_data[v] = ChainComplex(module, d, DOUBLE)
    f, flags = {}, {}
    simplices = [s for s in complex_.simplices() if s.dim >= 1]
    for sigma in tqdm(simplices, desc="Holonomy", disable=not show_progress):
        value = holonomy(conn, ThetaFamily(sigma.dim, complex_.realization(sigma)), scheme)
        f[sigma] = dense_to_graded(value.matrix * rh_sign(sigma.dim), bundle, bundle, 1 - sigma.dim)
        flags[sigma] = value.flags
    system = InfinityLocalSystem(complex_, vertex_data, f, DOUBLE)
    system.flags = flags
    return system


def _cone_block_integral(phi: SuperconnMorphism, family: PathFamily, scheme: QuadratureScheme) -> np.ndarray:
    """∫ top coefficient of X with ∂_t X = -b₂X - cΨ₁, X(0) = 0"""
    q = phi.degree
    n1, n2 = phi.source.bundle.rank, phi.target.bundle.rank
    algebra = ExteriorAlgebra(family.m)
    omega1 = _numeric_forms(superconn_to_koszul(phi.source))
    omega2 = _numeric_forms(superconn_to_koszul(phi.target))
    tilde = _numeric_forms(morphism_to_koszul(phi))
    total = np.zeros((n2, n1))
    if not tilde:
        return total
    for w, weights in family.regions(scheme):
        grid = _FamilyGrid(family, scheme, w)
        zeros = [np.zeros((scheme.nodes, len(w), algebra.size, n1, n1)) for _ in grid.halves]
        b1 = grid.coefficients(omega1, algebra, n1, n1) if omega1 else zeros
        b2 = grid.coefficients(omega2, algebra, n2, n2) if omega2 else \
            [np.zeros((scheme.nodes, len(w), algebra.size, n2, n2)) for _ in grid.halves]
        c = grid.coefficients(tilde, algebra, n2, n1)
        psi = _transport_series(b1, grid.halves, algebra, scheme, n1).nodes_total
        integrands = [algebra.multiply(ci, pi, q - 1) for ci, pi in zip(c, psi)]
        start = np.zeros((len(w), algebra.size, n2, n1))
        nodes, end = _integrate(grid.halves, integrands, start, scheme, -1)
        x_end = end.copy()
        for _ in range(scheme.max_word_length - 1):
            integrands = [algebra.multiply(b, x, 0) for b, x in zip(b2, nodes)]
            nodes, end = _integrate(grid.halves, integrands, start, scheme, -1)
            x_end += end
            if float(np.max(np.abs(end), initial=0.0)) < scheme.term_floor:
                break
        total += np.einsum('p,pij->ij', weights, x_end[:, algebra.top])
    return total


def rh_morphism(phi: SuperconnMorphism, complex_: SimplicialComplex, scheme: QuadratureScheme,
                source: Optional[InfinityLocalSystem] = None,
                target: Optional[InfinityLocalSystem] = None) -> LocSysMorphism:
    """RH(φ)^0 = φ̃⁰ at the vertices, RH(φ)^k = (-1)^{k(k+1)/2-1+k(q+1)} ∫ top coefficient of X"""
    source = source or rh_object(phi.source, complex_, scheme)
    target = target or rh_object(phi.target, complex_, scheme)
    q = phi.degree
    b1, b2 = phi.source.bundle, phi.target.bundle
    tilde = morphism_to_koszul(phi)
    comps = {}
    if 0 in tilde:
        for v in range(complex_.n_vertices):
            point = _vertex_point(complex_, v)
            if point is None:
                raise ValueError(f"No chart point for vertex {v}")
            value = _evaluate_zero_form(tilde, point, b2.rank, b1.rank)
            comps[(v,)] = dense_to_graded(value, b1, b2, q)
    for sigma in complex_.simplices():
        k = sigma.dim
        if k < 1:
            continue
        family = ThetaFamily(k, complex_.realization(sigma))
        j = _cone_block_integral(phi, family, scheme)
        comps[sigma] = dense_to_graded(j * rh_sign(k) * _sign(k * (q + 1)), b1, b2, q - k)
    return LocSysMorphism(source, target, q, comps)


def chain_map_defect(phi: SuperconnMorphism, complex_: SimplicialComplex,
                     scheme: QuadratureScheme) -> float:
    """max over simplices of |D(RH φ) - RH(dφ)|"""
    source = rh_object(phi.source, complex_, scheme)
    target = rh_object(phi.target, complex_, scheme)
    lhs = hom_D(rh_morphism(phi, complex_, scheme, source, target))
    rhs = rh_morphism(morphism_d(phi), complex_, scheme, source, target)
    return (lhs - rhs).norm()


def max_mc_residual(system: InfinityLocalSystem) -> float:
    return mc_residual(system).norm()


class ConvergenceReport:
    """Max MC residual of the RH object per node count, with observed orders"""

    def __init__(self, nodes: List[int], residuals: List[float], floor: float, seed: Optional[int] = None):
        self.nodes = nodes
        self.residuals = residuals
        self.floor = floor
        self.seed = seed
        self.orders = observed_orders(nodes, residuals, floor)
        self.flags: Set[str] = set() if accepts_refinement(residuals, floor) else {'unconverged'}

    def rows(self) -> List[Tuple[int, float, str]]:
        return list(zip(self.nodes, self.residuals, self.orders))

    def to_csv(self) -> str:
        lines = ["N,max_mc_residual,observed_order"]
        lines += [f"{n},{r:.6e},{o}" for n, r, o in self.rows()]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [f"{'N':>4}  {'max MC residual':>16}  {'order':>10}"]
        lines += [f"{n:>4}  {r:>16.6e}  {o:>10}" for n, r, o in self.rows()]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        if self.flags:
            lines.append("Warnings:")
            lines += [f"  - {flag}" for flag in sorted(self.flags)]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            'schema': 'v1',
            'rows': [{'N': n, 'max_mc_residual': r, 'observed_order': o} for n, r, o in self.rows()],
            'flags': sorted(self.flags),
            'seed': self.seed,
        }


def observed_orders(nodes: List[int], residuals: List[float], floor: float) -> List[str]:
    """log(r_prev / r_next) / log(N_next / N_prev); "converged" below the floor"""
    out = ["-"]
    for a in range(1, len(nodes)):
        r0, r1 = residuals[a - 1], residuals[a]
        if r1 <= floor or r0 <= floor:
            out.append("converged")
        else:
            out.append(f"{math.log(r0 / r1) / math.log(nodes[a] / nodes[a - 1]):.2f}")
    return out


def accepts_refinement(residuals: List[float], floor: float) -> bool:
    """Each refinement must cut the residual at least fourfold or reach the floor"""
    return all(r1 <= max(r0 / 4, floor) for r0, r1 in zip(residuals, residuals[1:]))


def convergence_report(conn: Superconnection, complex_: SimplicialComplex, refinements: Sequence[int],
                       scheme: QuadratureScheme, floor: float = 1e-12, seed: Optional[int] = None,
                       show_progress: bool = False) -> ConvergenceReport:
    residuals = []
    for n in tqdm(list(refinements), desc="Refinement", disable=not show_progress):
        residuals.append(max_mc_residual(rh_object(conn, complex_, scheme.refined(n))))
    return ConvergenceReport(list(refinements), residuals, floor, seed)


class HolonomyEngine(LogMixin):
    """Transport, RH and convergence runs configured from Config, with logging"""

    def __init__(self, config=None, logger=None):
        self.config = config
        self.logger = logger

    def scheme(self, nodes: Optional[int] = None, max_word_length: Optional[int] = None) -> QuadratureScheme:
        if self.config is None:
            return QuadratureScheme(nodes or 8, max_word_length or 12)
        return QuadratureScheme.from_config(self.config, nodes, max_word_length)

    def transport(self, conn: Superconnection, points: Sequence[Sequence[float]],
                  nodes: Optional[int] = None) -> HolonomyValue:
        scheme = self.scheme(nodes)
        self._log_info(f"Transport along {len(points) - 1} segment(s) with {scheme!r}")
        value = holonomy(conn, StraightPath(points), scheme, check_refinement=True)
        if 'truncated' in value.flags:
            self._log_warning("Holonomy series truncated before its terms decayed")
        if 'unconverged' in value.flags:
            self._log_warning(f"Transport moved by more than {scheme.tolerance:g} at {2 * scheme.nodes} nodes")
        return value

    def rh(self, conn: Superconnection, complex_: SimplicialComplex,
           nodes: Optional[int] = None) -> InfinityLocalSystem:
        scheme = self.scheme(nodes)
        show = bool(self.logger and self.logger.verbose)
        system = rh_object(conn, complex_, scheme, show_progress=show)
        truncated = [s for s, f in system.flags.items() if 'truncated' in f]
        if truncated:
            self._log_warning(f"Series truncated on {len(truncated)} simplices")
        self._log_success(f"RH object built, max MC residual {max_mc_residual(system):.3e}")
        return system

    def report(self, conn: Superconnection, complex_: SimplicialComplex) -> ConvergenceReport:
        refinements = self.config.get('quadrature.refinements', [4, 8, 16]) if self.config else [4, 8, 16]
        floor = self.config.get('report.converged_floor', 1e-12) if self.config else 1e-12
        seed = self.config.get('random_seed') if self.config else None
        show = bool(self.logger and self.logger.verbose)
        result = convergence_report(conn, complex_, refinements, self.scheme(), floor, seed, show)
        if result.flags:
            self._log_warning("Residuals did not decrease at the expected rate")
        else:
            self._log_success("Convergence study passed")
        return result
