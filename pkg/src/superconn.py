"""
Superconnection Module
Z-graded connections on a trivialized graded bundle over a chart: polynomial
coefficient forms, composition with the alternating identity Ξ, curvature,
the flatness cascade, morphisms, shift and cone
"""
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from src.graded_linear import GradedModule
from src.utils import Issue, LogMixin


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


def wedge_index(i: Tuple[int, ...], j: Tuple[int, ...]) -> Tuple[int, Optional[Tuple[int, ...]]]:
    """dx_I ∧ dx_J = sign · dx_K for increasing multi-indices; K None when they overlap"""
    if set(i) & set(j):
        return 0, None
    merged = list(i) + list(j)
    inversions = sum(1 for a in range(len(merged)) for b in range(a + 1, len(merged))
                     if merged[a] > merged[b])
    return _sign(inversions), tuple(sorted(merged))


def format_multi_index(index: Tuple[int, ...]) -> str:
    if not index:
        return "1"
    return "^".join(f"dx{i + 1}" for i in index)


def parse_multi_index(key: str) -> Tuple[int, ...]:
    """"dx1^dx3" -> (0, 2); "1" -> ()"""
    text = key.replace(' ', '')
    if text in ('', '1'):
        return ()
    parts = [p for p in text.replace('∧', '^').split('^') if p]
    try:
        index = tuple(int(p[2:]) - 1 for p in parts if p.startswith('dx'))
    except ValueError as e:
        raise ValueError(f"Bad form index {key!r}") from e
    if len(index) != len(parts) or any(a >= b for a, b in zip(index, index[1:])) or \
            any(i < 0 for i in index):
        raise ValueError(f"Form index {key!r} must be increasing dx1^dx2^...")
    return index


class Bundle:
    """Trivial graded bundle, as the degree of every basis vector"""

    def __init__(self, degrees: Sequence[int], degree_cap: int = 4):
        self.degrees = tuple(int(d) for d in degrees)
        self.degree_cap = degree_cap
        for d in self.degrees:
            if abs(d) > degree_cap:
                raise ValueError(f"Bundle degree {d} outside [-{degree_cap}, {degree_cap}]")

    @staticmethod
    def from_dims(dims: Dict[int, int], degree_cap: int = 4) -> 'Bundle':
        return Bundle(GradedModule({int(k): int(v) for k, v in dims.items()}, degree_cap).degree_vector(),
                      degree_cap)

    @property
    def rank(self) -> int:
        return len(self.degrees)

    def xi(self) -> sympy.Matrix:
        """Ξ = diag((-1)^{deg+1})"""
        return sympy.diag(*[_sign(d + 1) for d in self.degrees]) if self.degrees else sympy.zeros(0, 0)

    def shift(self, q: int) -> 'Bundle':
        """E[q]: a vector of degree n sits in degree n - q"""
        return Bundle([d - q for d in self.degrees], self.degree_cap + abs(q))

    def direct_sum(self, other: 'Bundle') -> 'Bundle':
        return Bundle(self.degrees + other.degrees, max(self.degree_cap, other.degree_cap))

    def dims(self) -> Dict[int, int]:
        out: Dict[int, int] = {}
        for d in self.degrees:
            out[d] = out.get(d, 0) + 1
        return dict(sorted(out.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Bundle) and self.degrees == other.degrees

    def __hash__(self):
        return hash(self.degrees)

    def __repr__(self):
        return f"Bundle{self.degrees}"

    def to_dict(self) -> dict:
        if list(self.degrees) == sorted(self.degrees):
            return {str(k): v for k, v in self.dims().items()}
        return {'degrees': list(self.degrees)}

    @staticmethod
    def from_dict(data: dict, degree_cap: int = 4) -> 'Bundle':
        if 'degrees' in data:
            return Bundle(data['degrees'], degree_cap)
        return Bundle.from_dims({int(k): v for k, v in data.items()}, degree_cap)


class ChartDomain:
    """Box in R^n carrying coordinates x1..xn"""

    def __init__(self, dim: int, box: Optional[Sequence[Sequence[float]]] = None, grid: int = 5):
        if dim < 1:
            raise ValueError(f"Chart dimension must be >= 1, got {dim}")
        self.dim = dim
        self.box = [tuple(float(v) for v in b) for b in (box or [[0.0, 1.0]] * dim)]
        if len(self.box) != dim or any(lo > hi for lo, hi in self.box):
            raise ValueError(f"Chart box {self.box} does not fit dimension {dim}")
        self.grid = grid
        self.symbols = sympy.symbols(f"x1:{dim + 1}")

    def sample_points(self) -> np.ndarray:
        axes = [np.linspace(lo, hi, self.grid) for lo, hi in self.box]
        mesh = np.meshgrid(*axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, ChartDomain) and self.dim == other.dim

    def __hash__(self):
        return hash(self.dim)

    def __repr__(self):
        return f"ChartDomain(dim={self.dim})"

    def to_dict(self) -> dict:
        return {'dim': self.dim, 'box': [list(b) for b in self.box]}

    @staticmethod
    def from_dict(data: dict) -> 'ChartDomain':
        return ChartDomain(int(data['dim']), data.get('box'), int(data.get('grid', 5)))


def _is_zero_matrix(m: sympy.Matrix) -> bool:
    return all(sympy.expand(v) == 0 for v in m)


class CoefficientForm:
    """Σ_I M_I(x) dx_I with M_I homogeneous of bundle degree e from source to target"""

    def __init__(self, chart: ChartDomain, source: Bundle, target: Bundle, p: int, e: int,
                 coeffs: Optional[Dict[Tuple[int, ...], sympy.Matrix]] = None):
        self.chart = chart
        self.source = source
        self.target = target
        self.p = p
        self.e = e
        self.coeffs: Dict[Tuple[int, ...], sympy.Matrix] = {}
        for index, m in (coeffs or {}).items():
            index = tuple(index)
            if len(index) != p or any(a >= b for a, b in zip(index, index[1:])) or \
                    any(not 0 <= i < chart.dim for i in index):
                raise ValueError(f"Index {index} is not an increasing {p}-index on a {chart.dim}-chart")
            m = sympy.Matrix(m).applyfunc(sympy.expand)
            if m.shape != (target.rank, source.rank):
                raise ValueError(f"Coefficient on {format_multi_index(index)} has shape {m.shape}, "
                                 f"expected {(target.rank, source.rank)}")
            for r in range(m.rows):
                for c in range(m.cols):
                    if m[r, c] != 0 and target.degrees[r] - source.degrees[c] != e:
                        raise ValueError(f"Entry ({r},{c}) is not of bundle degree {e}")
            if not _is_zero_matrix(m):
                self.coeffs[index] = m

    @property
    def total_degree(self) -> int:
        return self.p + self.e

    @staticmethod
    def zero(chart: ChartDomain, source: Bundle, target: Bundle, p: int, e: int) -> 'CoefficientForm':
        return CoefficientForm(chart, source, target, p, e, {})

    @staticmethod
    def unit(chart: ChartDomain, bundle: Bundle) -> 'CoefficientForm':
        """Ξ ⊗ 1, the identity for form_compose"""
        return CoefficientForm(chart, bundle, bundle, 0, 0, {(): bundle.xi()})

    def coefficient(self, index: Tuple[int, ...]) -> sympy.Matrix:
        return self.coeffs.get(tuple(index), sympy.zeros(self.target.rank, self.source.rank))

    def is_zero(self) -> bool:
        return all(_is_zero_matrix(m) for m in self.coeffs.values())

    def _check_parallel(self, other: 'CoefficientForm'):
        if (self.source, self.target, self.p, self.e) != (other.source, other.target, other.p, other.e):
            raise ValueError(f"Forms are not parallel: {self!r} vs {other!r}")

    def __add__(self, other: 'CoefficientForm') -> 'CoefficientForm':
        self._check_parallel(other)
        coeffs = dict(self.coeffs)
        for index, m in other.coeffs.items():
            coeffs[index] = coeffs[index] + m if index in coeffs else m
        return CoefficientForm(self.chart, self.source, self.target, self.p, self.e, coeffs)

    def __sub__(self, other: 'CoefficientForm') -> 'CoefficientForm':
        return self + other.scale(-1)

    def __neg__(self) -> 'CoefficientForm':
        return self.scale(-1)

    def scale(self, factor) -> 'CoefficientForm':
        return CoefficientForm(self.chart, self.source, self.target, self.p, self.e,
                               {i: m * factor for i, m in self.coeffs.items()})

    def equals(self, other: 'CoefficientForm') -> bool:
        return (self - other).is_zero()

    def evaluate(self, point: Sequence[float]) -> Dict[Tuple[int, ...], np.ndarray]:
        subs = dict(zip(self.chart.symbols, point))
        return {i: np.array(m.subs(subs).evalf(), dtype=float) for i, m in self.coeffs.items()}

    def numeric(self) -> Dict[Tuple[int, ...], Callable[[np.ndarray], np.ndarray]]:
        """Vectorized evaluators: points of shape (N, n) -> array (N, rows, cols)"""
        out = {}
        for index, m in self.coeffs.items():
            entries = [(r, c, sympy.lambdify(self.chart.symbols, m[r, c], 'numpy'))
                       for r in range(m.rows) for c in range(m.cols) if m[r, c] != 0]
            rows, cols = m.shape

            def evaluate(points, entries=entries, rows=rows, cols=cols):
                points = np.atleast_2d(points)
                values = np.zeros((points.shape[0], rows, cols))
                for r, c, fn in entries:
                    values[:, r, c] = np.broadcast_to(fn(*points.T), (points.shape[0],))
                return values

            out[index] = evaluate
        return out

    def __repr__(self):
        return f"CoefficientForm(p={self.p}, e={self.e}, terms={len(self.coeffs)})"

    def to_dict(self) -> dict:
        return {
            'p': self.p,
            'e': self.e,
            'coeffs': {format_multi_index(i): [[str(v) for v in m.row(r)] for r in range(m.rows)]
                       for i, m in self.coeffs.items()},
        }

    @staticmethod
    def from_dict(data: dict, chart: ChartDomain, source: Bundle, target: Bundle,
                  e: Optional[int] = None) -> 'CoefficientForm':
        p = int(data['p'])
        e = int(data.get('e', 1 - p if e is None else e))
        local = {str(s): s for s in chart.symbols}
        coeffs = {}
        for key, rows in data.get('coeffs', {}).items():
            try:
                m = sympy.Matrix([[sympy.sympify(str(v), locals=local) for v in row] for row in rows])
            except (sympy.SympifyError, TypeError) as err:
                raise ValueError(f"Bad polynomial coefficient under {key!r}: {err}") from err
            coeffs[parse_multi_index(key)] = m
        return CoefficientForm(chart, source, target, p, e, coeffs)


def form_compose(a: CoefficientForm, b: CoefficientForm) -> CoefficientForm:
    """(f ⊗ η)∘(g ⊗ ρ) = fΞg ⊗ η∧ρ, Ξ acting on the middle bundle"""
    if a.source != b.target:
        raise ValueError(f"Cannot compose: {a.source!r} != {b.target!r}")
    if a.chart.dim != b.chart.dim:
        raise ValueError("Forms live on different charts")
    xi = a.source.xi()
    coeffs: Dict[Tuple[int, ...], sympy.Matrix] = {}
    for i, ma in a.coeffs.items():
        for j, mb in b.coeffs.items():
            sign, k = wedge_index(i, j)
            if k is None:
                continue
            term = (ma * xi * mb) * sign
            coeffs[k] = coeffs[k] + term if k in coeffs else term
    return CoefficientForm(a.chart, b.source, a.target, a.p + b.p, a.e + b.e, coeffs)


def form_d(a: CoefficientForm) -> CoefficientForm:
    """d(M dx_I) = (-1)^e Σ_j ∂_j M Ξ dx_j ∧ dx_I"""
    xi = a.source.xi()
    coeffs: Dict[Tuple[int, ...], sympy.Matrix] = {}
    for index, m in a.coeffs.items():
        for j in range(a.chart.dim):
            if j in index:
                continue
            partial = m.diff(a.chart.symbols[j])
            if _is_zero_matrix(partial):
                continue
            sign, k = wedge_index((j,), index)
            term = partial * xi * (sign * _sign(a.e))
            coeffs[k] = coeffs[k] + term if k in coeffs else term
    return CoefficientForm(a.chart, a.source, a.target, a.p + 1, a.e, coeffs)


class Superconnection:
    """𝔼 = d + A⁰ + A¹ + ... + A^m, A^i of form degree i and bundle degree 1 - i"""

    def __init__(self, bundle: Bundle, chart: ChartDomain,
                 A: Optional[Dict[int, CoefficientForm]] = None):
        self.bundle = bundle
        self.chart = chart
        self.A: Dict[int, CoefficientForm] = {}
        for i, form in (A or {}).items():
            if form.p != i or form.e != 1 - i:
                raise ValueError(f"A^{i} must have form degree {i} and bundle degree {1 - i}")
            if form.source != bundle or form.target != bundle:
                raise ValueError(f"A^{i} is not an endomorphism of {bundle!r}")
            if i > chart.dim:
                raise ValueError(f"A^{i} exceeds the chart dimension {chart.dim}")
            self.A[i] = form

    def component(self, i: int) -> CoefficientForm:
        return self.A.get(i, CoefficientForm.zero(self.chart, self.bundle, self.bundle, i, 1 - i))

    def __repr__(self):
        return f"Superconnection({self.bundle!r}, terms={sorted(self.A)})"

    def to_dict(self) -> dict:
        return {
            'bundle': self.bundle.to_dict(),
            'chart': self.chart.to_dict(),
            'A': [self.A[i].to_dict() for i in sorted(self.A)],
        }

    @staticmethod
    def from_dict(data: dict, degree_cap: int = 4) -> 'Superconnection':
        for key in ('bundle', 'chart'):
            if key not in data:
                raise ValueError(f"Superconnection JSON is missing '{key}'")
        bundle = Bundle.from_dict(data['bundle'], degree_cap)
        chart = ChartDomain.from_dict(data['chart'])
        forms = {}
        for entry in data.get('A', []):
            form = CoefficientForm.from_dict(entry, chart, bundle, bundle)
            forms[form.p] = form
        return Superconnection(bundle, chart, forms)


class FormFamily:
    """Forms of one total degree between two bundles, keyed by form degree"""

    def __init__(self, chart: ChartDomain, source: Bundle, target: Bundle, degree: int,
                 components: Optional[Dict[int, CoefficientForm]] = None):
        self.chart = chart
        self.source = source
        self.target = target
        self.degree = degree
        self.components: Dict[int, CoefficientForm] = {}
        for j, form in (components or {}).items():
            if form.p != j or form.total_degree != degree:
                raise ValueError(f"Component {j} has form degree {form.p} and total degree "
                                 f"{form.total_degree}, expected {j} and {degree}")
            if not form.is_zero():
                self.components[j] = form

    def component(self, j: int) -> CoefficientForm:
        return self.components.get(j, CoefficientForm.zero(self.chart, self.source, self.target,
                                                           j, self.degree - j))

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.components.values())

    def add_form(self, form: CoefficientForm):
        j = form.p
        merged = self.components[j] + form if j in self.components else form
        if merged.is_zero():
            self.components.pop(j, None)
        else:
            self.components[j] = merged

    def __add__(self, other: 'FormFamily') -> 'FormFamily':
        out = FormFamily(self.chart, self.source, self.target, self.degree, dict(self.components))
        for form in other.components.values():
            out.add_form(form)
        return out

    def scale(self, factor) -> 'FormFamily':
        return FormFamily(self.chart, self.source, self.target, self.degree,
                          {j: f.scale(factor) for j, f in self.components.items()})

    def equals(self, other: 'FormFamily') -> bool:
        return (self + other.scale(-1)).is_zero()

    def __repr__(self):
        return f"FormFamily(degree={self.degree}, forms={sorted(self.components)})"


def connection_form(conn: Superconnection) -> FormFamily:
    return FormFamily(conn.chart, conn.bundle, conn.bundle, 1, dict(conn.A))


def family_compose(a: FormFamily, b: FormFamily) -> FormFamily:
    out = FormFamily(a.chart, b.source, a.target, a.degree + b.degree)
    for fa in a.components.values():
        for fb in b.components.values():
            if fa.p + fb.p <= a.chart.dim:
                out.add_form(form_compose(fa, fb))
    return out


def family_d(a: FormFamily) -> FormFamily:
    out = FormFamily(a.chart, a.source, a.target, a.degree + 1)
    for form in a.components.values():
        if form.p < a.chart.dim:
            out.add_form(form_d(form))
    return out


def curvature(conn: Superconnection) -> FormFamily:
    """κ = dA + A∘A, total degree 2"""
    a = connection_form(conn)
    return family_d(a) + family_compose(a, a)


def flatness_check(conn: Superconnection) -> Tuple[bool, List[CoefficientForm]]:
    """Residuals r_q = Σ_{i+j=q} A^i∘A^j + dA^{q-1}, for q = 0..chart dim

    Returns:
        (flat, residuals) with residuals[q] of form degree q
    """
    residuals = []
    for q in range(conn.chart.dim + 1):
        total = CoefficientForm.zero(conn.chart, conn.bundle, conn.bundle, q, 2 - q)
        for i in range(q + 1):
            if i in conn.A and (q - i) in conn.A:
                total = total + form_compose(conn.A[i], conn.A[q - i])
        if q >= 1 and (q - 1) in conn.A:
            total = total + form_d(conn.A[q - 1])
        residuals.append(total)
    return all(r.is_zero() for r in residuals), residuals


class SuperconnMorphism:
    """Morphism of total degree q: components φ^j of form degree j, bundle degree q - j"""

    def __init__(self, source: Superconnection, target: Superconnection, degree: int,
                 components: Optional[Dict[int, CoefficientForm]] = None):
        if source.chart.dim != target.chart.dim:
            raise ValueError("Superconnections live on different charts")
        self.source = source
        self.target = target
        self.degree = degree
        self.family = FormFamily(source.chart, source.bundle, target.bundle, degree, components)

    @property
    def components(self) -> Dict[int, CoefficientForm]:
        return self.family.components

    def component(self, j: int) -> CoefficientForm:
        return self.family.component(j)

    @staticmethod
    def from_family(source: Superconnection, target: Superconnection,
                    family: FormFamily) -> 'SuperconnMorphism':
        return SuperconnMorphism(source, target, family.degree, dict(family.components))

    def is_zero(self) -> bool:
        return self.family.is_zero()

    def equals(self, other: 'SuperconnMorphism') -> bool:
        return self.family.equals(other.family)

    def __add__(self, other: 'SuperconnMorphism') -> 'SuperconnMorphism':
        return SuperconnMorphism.from_family(self.source, self.target, self.family + other.family)

    def scale(self, factor) -> 'SuperconnMorphism':
        return SuperconnMorphism.from_family(self.source, self.target, self.family.scale(factor))

    def __repr__(self):
        return f"SuperconnMorphism(degree={self.degree}, forms={sorted(self.components)})"

    def to_dict(self) -> dict:
        return {'degree': self.degree, 'components': [f.to_dict() for _, f in sorted(self.components.items())]}

    @staticmethod
    def from_dict(data: dict, source: Superconnection, target: Superconnection) -> 'SuperconnMorphism':
        q = int(data['degree'])
        comps = {}
        for entry in data.get('components', []):
            p = int(entry['p'])
            form = CoefficientForm.from_dict(entry, source.chart, source.bundle, target.bundle, q - p)
            comps[p] = form
        return SuperconnMorphism(source, target, q, comps)


def identity_superconn_morphism(conn: Superconnection) -> SuperconnMorphism:
    """Ξ ⊗ 1"""
    return SuperconnMorphism(conn, conn, 0, {0: CoefficientForm.unit(conn.chart, conn.bundle)})


def morphism_d(phi: SuperconnMorphism) -> SuperconnMorphism:
    """dφ = form_d φ + A₂∘φ - (-1)^q φ∘A₁"""
    f = phi.family
    result = family_d(f) + family_compose(connection_form(phi.target), f) \
        + family_compose(f, connection_form(phi.source)).scale(-_sign(phi.degree))
    return SuperconnMorphism.from_family(phi.source, phi.target, result)


def shift_superconn(conn: Superconnection, q: int) -> Superconnection:
    """E[q]: bundle re-indexed, A^i scaled by (-1)^{q(1-i)}"""
    bundle = conn.bundle.shift(q)
    forms = {i: CoefficientForm(conn.chart, bundle, bundle, i, 1 - i, form.coeffs).scale(_sign(q * (1 - i)))
             for i, form in conn.A.items()}
    return Superconnection(bundle, conn.chart, forms)


def _embed(form: CoefficientForm, source: Bundle, target: Bundle, row: int, col: int,
           e: int) -> CoefficientForm:
    coeffs = {}
    for index, m in form.coeffs.items():
        big = sympy.zeros(target.rank, source.rank)
        big[row:row + m.rows, col:col + m.cols] = m
        coeffs[index] = big
    return CoefficientForm(form.chart, source, target, form.p, e, coeffs)


def cone_candidate(phi: SuperconnMorphism) -> Superconnection:
    """D = [[A₁, 0], [φ, A₂]] on E₁[1-q] ⊕ E₂, built whether or not φ is closed"""
    q = phi.degree
    e1 = phi.source.bundle.shift(1 - q)
    e2 = phi.target.bundle
    bundle = e1.direct_sum(e2)
    chart = phi.source.chart
    forms = {}
    for i in range(chart.dim + 1):
        total = CoefficientForm.zero(chart, bundle, bundle, i, 1 - i)
        if i in phi.source.A:
            total = total + _embed(phi.source.A[i], bundle, bundle, 0, 0, 1 - i)
        if i in phi.target.A:
            total = total + _embed(phi.target.A[i], bundle, bundle, e1.rank, e1.rank, 1 - i)
        if i in phi.components:
            total = total + _embed(phi.components[i], bundle, bundle, e1.rank, 0, 1 - i)
        if not total.is_zero():
            forms[i] = total
    return Superconnection(bundle, chart, forms)


def cone_superconn(phi: SuperconnMorphism) -> Tuple[Optional[Superconnection], SuperconnMorphism]:
    """Cone of a closed morphism; (None, dφ) when φ is not closed"""
    defect = morphism_d(phi)
    if not defect.is_zero():
        return None, defect
    return cone_candidate(phi), defect


def koszul_connection_sign(i: int) -> int:
    """ω^i = (-1)^{i(i-1)/2} A^i"""
    return _sign(i * (i - 1) // 2)


def koszul_morphism_signs(q: int, j: int, source: Bundle) -> np.ndarray:
    """Per source basis vector: φ̃^j = -(-1)^{q + j(q-j) + (q-j)(q-j-1)/2 + N(q+1)} φ^j"""
    n = q - j
    base = q + j * n + n * (n - 1) // 2
    return np.array([-_sign(base + deg * (q + 1)) for deg in source.degrees], dtype=float)


def superconn_to_koszul(conn: Superconnection) -> Dict[int, CoefficientForm]:
    """Connection forms ω^i used for integration"""
    return {i: form.scale(koszul_connection_sign(i)) for i, form in conn.A.items()}


def morphism_to_koszul(phi: SuperconnMorphism) -> Dict[int, CoefficientForm]:
    """Koszul image φ̃ (columns rescaled by source degree)"""
    out = {}
    for j, form in phi.components.items():
        signs = koszul_morphism_signs(phi.degree, j, phi.source.bundle)
        column = sympy.diag(*[int(s) for s in signs]) if len(signs) else sympy.zeros(0, 0)
        out[j] = CoefficientForm(form.chart, form.source, form.target, form.p, form.e,
                                 {i: m * column for i, m in form.coeffs.items()})
    return out


def covariant_derivative(conn1: Superconnection, conn2: Superconnection,
                         psi: sympy.Matrix) -> Dict[Tuple[int, ...], sympy.Matrix]:
    """Classical ∇ψ = dψ + A₂ψ - ψA₁ for ordinary connections (plain matrices)"""
    chart = conn1.chart
    psi = sympy.Matrix(psi)
    out = {}
    a1, a2 = conn1.component(1), conn2.component(1)
    for j in range(chart.dim):
        value = psi.diff(chart.symbols[j]) + a2.coefficient((j,)) * psi - psi * a1.coefficient((j,))
        value = value.applyfunc(sympy.expand)
        if not _is_zero_matrix(value):
            out[(j,)] = value
    return out


def classical_morphism(conn1: Superconnection, conn2: Superconnection,
                       psi: sympy.Matrix) -> SuperconnMorphism:
    """Degree-0 bundle map ψ as a morphism 0-form; Ξ-unit dictionary: φ⁰ = Ξψ"""
    form = CoefficientForm(conn1.chart, conn1.bundle, conn2.bundle, 0, 0,
                           {(): conn2.bundle.xi() * sympy.Matrix(psi)})
    return SuperconnMorphism(conn1, conn2, 0, {0: form})


class SuperconnEngine(LogMixin):
    """Flatness diagnostics with logging"""

    def __init__(self, config=None, logger=None):
        self.config = config
        self.logger = logger

    def check_flat(self, conn: Superconnection) -> Tuple[bool, List[Issue]]:
        flat, residuals = flatness_check(conn)
        issues = [Issue(f"form degree {q}", Issue.ERROR, "Flatness residual is nonzero")
                  for q, r in enumerate(residuals) if not r.is_zero()]
        if flat:
            self._log_success(f"{conn!r} is flat")
        else:
            self._log_error(f"{conn!r} fails flatness in {len(issues)} form degrees")
            for issue in issues:
                self._log_error(repr(issue))
        return flat, issues

    def max_residual_on_grid(self, conn: Superconnection) -> float:
        """Largest entry of the curvature over the chart sample grid"""
        points = conn.chart.sample_points()
        worst = 0.0
        for form in curvature(conn).components.values():
            for fn in form.numeric().values():
                worst = max(worst, float(np.max(np.abs(fn(points)), initial=0.0)))
        return worst
