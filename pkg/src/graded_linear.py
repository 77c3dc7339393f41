"""
Graded Linear Algebra Module
Graded modules, homogeneous maps, chain complexes and their cohomology over
exact rationals or doubles
"""
import math
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg as sla

from src.utils import format_rational


DEFAULT_DEGREE_CAP = 16


def _integer_row(row) -> List[int]:
    """Row scaled by the lcm of its denominators"""
    values = [Fraction(v) for v in row]
    scale = math.lcm(*(v.denominator for v in values)) if values else 1
    return [int(v * scale) for v in values]


class ScalarBackend(Enum):
    """Available scalar fields"""
    EXACT = "exact"    # fractions.Fraction, zero tests are literal
    DOUBLE = "double"  # IEEE doubles, zero tests use eps_num


class Scalars:
    """Matrix arithmetic over one scalar backend"""

    def __init__(self, backend: ScalarBackend = ScalarBackend.EXACT,
                 eps_num: float = 1e-10, eps_rank: Optional[float] = None):
        self.backend = backend
        self.eps_num = eps_num
        self.eps_rank = eps_rank

    @property
    def exact(self) -> bool:
        return self.backend == ScalarBackend.EXACT

    @property
    def dtype(self):
        return object if self.exact else float

    def coerce(self, value):
        """Convert a number or a rational string ("3/2") to a backend scalar"""
        if isinstance(value, np.integer):
            value = int(value)
        elif isinstance(value, np.floating):
            value = float(value)
        if self.exact:
            if isinstance(value, float):
                return Fraction(value).limit_denominator(10 ** 12)
            return Fraction(value)
        if isinstance(value, str):
            return float(Fraction(value))
        return float(value)

    def matrix(self, rows) -> np.ndarray:
        data = [[self.coerce(v) for v in row] for row in rows]
        if not data:
            return np.zeros((0, 0), dtype=self.dtype)
        return np.array(data, dtype=self.dtype).reshape(len(data), len(data[0]))

    def convert(self, m: np.ndarray) -> np.ndarray:
        """Bring an array of any dtype onto this backend"""
        out = np.empty(m.shape, dtype=self.dtype)
        for idx, v in np.ndenumerate(m):
            out[idx] = self.coerce(v)
        return out

    def zeros(self, rows: int, cols: int) -> np.ndarray:
        if self.exact:
            out = np.empty((rows, cols), dtype=object)
            out.fill(Fraction(0))
            return out
        return np.zeros((rows, cols))

    def identity(self, n: int) -> np.ndarray:
        out = self.zeros(n, n)
        for i in range(n):
            out[i, i] = Fraction(1) if self.exact else 1.0
        return out

    def norm(self, m: np.ndarray) -> float:
        """Frobenius norm as a float"""
        if m.size == 0:
            return 0.0
        return float(np.sqrt(sum(float(v) ** 2 for v in m.flat)))

    def is_zero(self, m: np.ndarray) -> bool:
        if m.size == 0:
            return True
        if self.exact:
            return all(v == 0 for v in m.flat)
        return self.norm(m) <= self.eps_num

    def _rank_threshold(self, m: np.ndarray, singular_values: np.ndarray) -> float:
        if self.eps_rank is not None:
            return self.eps_rank
        if singular_values.size == 0:
            return 0.0
        return max(m.shape) * np.finfo(float).eps * singular_values[0]

    def row_reduce(self, m: np.ndarray) -> Tuple[np.ndarray, List[int]]:
        """Exact reduced row echelon form; returns (rref, pivot columns)

        Rows are cleared of denominators and eliminated fraction-free
        (Bareiss): every intermediate entry is an integer minor of the input.
        Fractions appear only in the final back substitution.
        """
        a = [_integer_row(row) for row in m]
        n_rows = len(a)
        n_cols = m.shape[1]
        pivots = []
        piv_r = 0
        previous = 1
        for piv_c in range(n_cols):
            if piv_r >= n_rows:
                break
            for i_row in range(piv_r, n_rows):
                if a[i_row][piv_c] != 0:
                    break
            else:
                continue
            if i_row != piv_r:
                a[piv_r], a[i_row] = a[i_row], a[piv_r]
            p = a[piv_r][piv_c]
            for r in range(piv_r + 1, n_rows):
                fr = a[r][piv_c]
                a[r] = [(p * vr - fr * vp) // previous for vr, vp in zip(a[r], a[piv_r])]
            previous = p
            pivots.append(piv_c)
            piv_r += 1
        reduced: List[List[Fraction]] = [[] for _ in pivots]
        for r in reversed(range(len(pivots))):
            row = [Fraction(v) for v in a[r]]
            for s in range(r + 1, len(pivots)):
                f = row[pivots[s]]
                if f:
                    row = [x - f * y for x, y in zip(row, reduced[s])]
            p = row[pivots[r]]
            reduced[r] = [x / p for x in row]
        out = self.zeros(n_rows, n_cols)
        for r, row in enumerate(reduced):
            for c in range(n_cols):
                out[r, c] = row[c]
        return out, pivots

    def rank(self, m: np.ndarray) -> int:
        if m.size == 0:
            return 0
        if self.exact:
            return len(self.row_reduce(m)[1])
        s = sla.svdvals(m.astype(float))
        return int(np.sum(s > self._rank_threshold(m, s)))

    def nullspace(self, m: np.ndarray) -> np.ndarray:
        """Basis of the kernel, as columns"""
        n_cols = m.shape[1]
        if m.shape[0] == 0:
            return self.identity(n_cols)
        if not self.exact:
            s = sla.svdvals(m.astype(float)) if m.size else np.zeros(0)
            rcond = self._rank_threshold(m, s) / s[0] if s.size and s[0] > 0 else None
            return sla.null_space(m.astype(float), rcond=rcond)
        rref, pivots = self.row_reduce(m)
        free = [c for c in range(n_cols) if c not in pivots]
        basis = self.zeros(n_cols, len(free))
        for j, fc in enumerate(free):
            basis[fc, j] = Fraction(1)
            for r, pc in enumerate(pivots):
                basis[pc, j] = -rref[r, fc]
        return basis

    def solve(self, a: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
        """Solve a x = b (b a column block); None when inconsistent"""
        if a.shape[1] == 0:
            return self.zeros(0, b.shape[1]) if self.is_zero(b) else None
        if not self.exact:
            x, *_ = sla.lstsq(a.astype(float), b.astype(float))
            if self.norm(a @ x - b) > self.eps_num * max(1.0, self.norm(b)):
                return None
            return x
        aug = np.concatenate([a, b], axis=1)
        rref, pivots = self.row_reduce(aug)
        n = a.shape[1]
        if any(p >= n for p in pivots):
            return None
        x = self.zeros(n, b.shape[1])
        for r, pc in enumerate(pivots):
            x[pc, :] = rref[r, n:]
        return x


EXACT = Scalars(ScalarBackend.EXACT)
DOUBLE = Scalars(ScalarBackend.DOUBLE)


def scalars_for(name: str, eps_num: float = 1e-10, eps_rank: Optional[float] = None) -> Scalars:
    """Backend lookup used by the config layer"""
    backend = ScalarBackend(name)
    if backend == ScalarBackend.EXACT:
        return EXACT
    if eps_num == DOUBLE.eps_num and eps_rank is None:
        return DOUBLE
    return Scalars(backend, eps_num, eps_rank)


class GradedModule:
    """Free finite-dimensional Z-graded module, stored as degree -> dimension"""

    def __init__(self, dims: Dict[int, int], degree_cap: int = DEFAULT_DEGREE_CAP):
        clean = {}
        for deg, dim in dims.items():
            deg, dim = int(deg), int(dim)
            if dim < 0:
                raise ValueError(f"Negative dimension {dim} in degree {deg}")
            if dim == 0:
                continue
            if abs(deg) > degree_cap:
                raise ValueError(f"Degree {deg} outside [-{degree_cap}, {degree_cap}]")
            clean[deg] = dim
        self.dims = dict(sorted(clean.items()))
        self.degree_cap = degree_cap

    def dim(self, degree: int) -> int:
        return self.dims.get(degree, 0)

    def degrees(self) -> List[int]:
        return list(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def offsets(self) -> Dict[int, int]:
        """Start index of each degree in the dense (ascending degree) layout"""
        out, pos = {}, 0
        for deg, dim in self.dims.items():
            out[deg] = pos
            pos += dim
        return out

    def degree_vector(self) -> List[int]:
        """Degree of every basis vector, dense layout"""
        return [deg for deg, dim in self.dims.items() for _ in range(dim)]

    def shift(self, q: int) -> 'GradedModule':
        """M[q] with M[q]^k = M^{k+q}"""
        return GradedModule({deg - q: dim for deg, dim in self.dims.items()}, self.degree_cap)

    def direct_sum(self, other: 'GradedModule') -> 'GradedModule':
        dims = dict(self.dims)
        for deg, dim in other.dims.items():
            dims[deg] = dims.get(deg, 0) + dim
        return GradedModule(dims, max(self.degree_cap, other.degree_cap))

    def euler_characteristic(self) -> int:
        return sum((-1) ** (deg % 2) * dim for deg, dim in self.dims.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedModule) and self.dims == other.dims

    def __hash__(self):
        return hash(tuple(self.dims.items()))

    def __repr__(self):
        return f"GradedModule({self.dims})"

    def to_dict(self) -> dict:
        return {str(deg): dim for deg, dim in self.dims.items()}

    @staticmethod
    def from_dict(data: dict, degree_cap: int = DEFAULT_DEGREE_CAP) -> 'GradedModule':
        return GradedModule({int(k): int(v) for k, v in data.items()}, degree_cap)


class GradedMap:
    """Homogeneous linear map; blocks[d] maps source degree d to target degree d + degree"""

    def __init__(self, source: GradedModule, target: GradedModule, degree: int,
                 blocks: Optional[Dict[int, np.ndarray]] = None, scalars: Scalars = EXACT):
        self.source = source
        self.target = target
        self.degree = degree
        self.scalars = scalars
        self.blocks: Dict[int, np.ndarray] = {}
        for d, block in (blocks or {}).items():
            d = int(d)
            rows, cols = target.dim(d + degree), source.dim(d)
            if rows == 0 or cols == 0:
                if np.asarray(block).size and not scalars.is_zero(np.asarray(block, dtype=scalars.dtype)):
                    raise ValueError(f"Nonzero block at source degree {d} where a module is zero")
                continue
            block = np.asarray(block)
            if block.shape != (rows, cols):
                raise ValueError(
                    f"Block at source degree {d} has shape {block.shape}, expected {(rows, cols)}")
            self.blocks[d] = block

    @staticmethod
    def zero(source: GradedModule, target: GradedModule, degree: int,
             scalars: Scalars = EXACT) -> 'GradedMap':
        return GradedMap(source, target, degree, {}, scalars)

    @staticmethod
    def identity(module: GradedModule, scalars: Scalars = EXACT) -> 'GradedMap':
        blocks = {d: scalars.identity(n) for d, n in module.dims.items()}
        return GradedMap(module, module, 0, blocks, scalars)

    def block(self, d: int) -> np.ndarray:
        if d in self.blocks:
            return self.blocks[d]
        return self.scalars.zeros(self.target.dim(d + self.degree), self.source.dim(d))

    def source_degrees(self) -> List[int]:
        """Source degrees where a block can be nonzero"""
        return [d for d in self.source.degrees() if self.target.dim(d + self.degree)]

    def _check_parallel(self, other: 'GradedMap'):
        if (self.source != other.source or self.target != other.target
                or self.degree != other.degree):
            raise ValueError(f"Maps are not parallel: {self!r} vs {other!r}")

    def __add__(self, other: 'GradedMap') -> 'GradedMap':
        self._check_parallel(other)
        blocks = {d: self.block(d) + other.block(d) for d in self.source_degrees()}
        return GradedMap(self.source, self.target, self.degree, blocks, self.scalars)

    def __sub__(self, other: 'GradedMap') -> 'GradedMap':
        return self + other.scale(-1)

    def __neg__(self) -> 'GradedMap':
        return self.scale(-1)

    def scale(self, factor) -> 'GradedMap':
        factor = self.scalars.coerce(factor)
        blocks = {d: b * factor for d, b in self.blocks.items()}
        return GradedMap(self.source, self.target, self.degree, blocks, self.scalars)

    def scale_by_degree(self, sign_of_degree) -> 'GradedMap':
        """Multiply the block at source degree d by sign_of_degree(d)"""
        blocks = {d: b * sign_of_degree(d) for d, b in self.blocks.items()}
        return GradedMap(self.source, self.target, self.degree, blocks, self.scalars)

    def is_zero(self) -> bool:
        return all(self.scalars.is_zero(b) for b in self.blocks.values())

    def norm(self) -> float:
        return float(np.sqrt(sum(self.scalars.norm(b) ** 2 for b in self.blocks.values())))

    def equals(self, other: 'GradedMap') -> bool:
        """Exact (or eps_num) equality of parallel maps"""
        self._check_parallel(other)
        return (self - other).is_zero()

    def reindex(self, source: GradedModule, target: GradedModule, q: int) -> 'GradedMap':
        """Same blocks viewed between shifted modules (source degree d -> d - q)"""
        blocks = {d - q: b for d, b in self.blocks.items()}
        return GradedMap(source, target, self.degree, blocks, self.scalars)

    def to_dense(self) -> np.ndarray:
        out = self.scalars.zeros(self.target.total_dim, self.source.total_dim)
        s_off, t_off = self.source.offsets(), self.target.offsets()
        for d, b in self.blocks.items():
            r0, c0 = t_off[d + self.degree], s_off[d]
            out[r0:r0 + b.shape[0], c0:c0 + b.shape[1]] = b
        return out

    @staticmethod
    def from_dense(source: GradedModule, target: GradedModule, degree: int,
                   dense: np.ndarray, scalars: Scalars = EXACT) -> 'GradedMap':
        """Extract the degree-`degree` blocks of a dense matrix (other entries ignored)"""
        s_off, t_off = source.offsets(), target.offsets()
        blocks = {}
        for d, cols in source.dims.items():
            rows = target.dim(d + degree)
            if rows:
                r0, c0 = t_off[d + degree], s_off[d]
                blocks[d] = dense[r0:r0 + rows, c0:c0 + cols]
        return GradedMap(source, target, degree, blocks, scalars)

    def __repr__(self):
        return f"GradedMap({self.source.dims} -> {self.target.dims}, degree={self.degree})"

    def to_dict(self) -> dict:
        return {
            'degree': self.degree,
            'blocks': {str(d): [[format_rational(v) for v in row] for row in b]
                       for d, b in self.blocks.items()},
        }

    @staticmethod
    def from_dict(data: dict, source: GradedModule, target: GradedModule,
                  scalars: Scalars = EXACT) -> 'GradedMap':
        blocks = {int(d): scalars.matrix(rows) for d, rows in data.get('blocks', {}).items()}
        return GradedMap(source, target, int(data['degree']), blocks, scalars)


def compose(a: GradedMap, b: GradedMap) -> GradedMap:
    """Plain composition a∘b; degrees add, blocks multiply"""
    if a.source != b.target:
        raise ValueError(f"Cannot compose {a!r} after {b!r}: dimension mismatch")
    blocks = {}
    for d in b.source_degrees():
        mid = d + b.degree
        if a.target.dim(mid + a.degree) and d in b.blocks and mid in a.blocks:
            blocks[d] = a.blocks[mid] @ b.blocks[d]
    return GradedMap(b.source, a.target, a.degree + b.degree, blocks, a.scalars)


class SignKind(Enum):
    """Sign operators on bigraded endomorphism-valued forms"""
    T = "total"
    J = "form"
    K = "bundle"


class SignOperator:
    """T, J, K sign operators and the alternating identity Xi"""

    def __init__(self, kind: SignKind):
        self.kind = kind

    def sign(self, form_degree: int, bundle_degree: int) -> int:
        if self.kind == SignKind.T:
            return (-1) ** ((form_degree + bundle_degree) % 2)
        if self.kind == SignKind.J:
            return (-1) ** (form_degree % 2)
        return (-1) ** (bundle_degree % 2)

    def then(self, other: 'SignOperator') -> 'SignOperator':
        """Composite operator; only T = J∘K = K∘J and squares are representable"""
        kinds = {self.kind, other.kind}
        if self.kind == other.kind:
            return IdentitySign()
        if kinds == {SignKind.J, SignKind.K}:
            return SignOperator(SignKind.T)
        if kinds == {SignKind.T, SignKind.J}:
            return SignOperator(SignKind.K)
        return SignOperator(SignKind.J)

    def __repr__(self):
        return f"SignOperator({self.kind.name})"


class IdentitySign(SignOperator):
    def __init__(self):
        self.kind = None

    def sign(self, form_degree: int, bundle_degree: int) -> int:
        return 1


def xi_sign(bundle_degree: int) -> int:
    """The alternating identity acts on bundle degree q as (-1)^(q+1)"""
    return -1 if bundle_degree % 2 == 0 else 1


def xi_map(module: GradedModule, scalars: Scalars = EXACT) -> GradedMap:
    return GradedMap.identity(module, scalars).scale_by_degree(xi_sign)


class ChainComplex:
    """Finite graded module with a degree +1 square-zero differential"""

    def __init__(self, module: GradedModule, d: Optional[GradedMap] = None,
                 scalars: Scalars = EXACT, check: bool = True):
        self.module = module
        self.scalars = scalars
        self.d = d if d is not None else GradedMap.zero(module, module, 1, scalars)
        if self.d.degree != 1 or self.d.source != module or self.d.target != module:
            raise ValueError("Differential must be a degree +1 endomorphism of the module")
        if check and not self.is_valid():
            raise ValueError(f"Invalid complex: d∘d has norm {self.square_defect().norm():.3e}")

    def square_defect(self) -> GradedMap:
        return compose(self.d, self.d)

    def is_valid(self) -> bool:
        return self.square_defect().is_zero()

    def differential(self, k: int) -> np.ndarray:
        """d_k : C^k -> C^{k+1} as a dense block (possibly empty)"""
        return self.d.block(k)

    def __repr__(self):
        return f"ChainComplex({self.module.dims})"

    def to_dict(self) -> dict:
        return {'dims': self.module.to_dict(), 'd': self.d.to_dict()['blocks']}

    @staticmethod
    def from_dict(data: dict, scalars: Scalars = EXACT,
                  degree_cap: int = DEFAULT_DEGREE_CAP) -> 'ChainComplex':
        module = GradedModule.from_dict(data.get('dims', {}), degree_cap)
        d = GradedMap.from_dict({'degree': 1, 'blocks': data.get('d', {})}, module, module, scalars)
        return ChainComplex(module, d, scalars)


class CohomologyResult:
    """Cohomology dimensions plus representative cocycles per degree"""

    def __init__(self, module: GradedModule, representatives: Dict[int, np.ndarray]):
        self.module = module
        self.representatives = representatives

    @property
    def dims(self) -> Dict[int, int]:
        return self.module.dims

    def __repr__(self):
        return f"H*({self.module.dims})"


def cohomology(c: ChainComplex) -> CohomologyResult:
    """Kernel modulo image in every degree

    Representatives are columns spanning a complement of im d_{k-1} inside
    ker d_k, picked greedily from a kernel basis.

    Raises:
        ValueError: when d∘d != 0
    """
    if not c.is_valid():
        raise ValueError("Invalid complex: d∘d != 0, cohomology undefined")
    s = c.scalars
    dims, reps = {}, {}
    for k in c.module.degrees():
        n = c.module.dim(k)
        d_k = c.differential(k)
        kernel = s.nullspace(d_k) if d_k.shape[0] else s.identity(n)
        image = c.differential(k - 1) if c.module.dim(k - 1) else s.zeros(n, 0)
        chosen = []
        current = image
        base_rank = s.rank(current) if current.shape[1] else 0
        for j in range(kernel.shape[1]):
            candidate = np.concatenate([current, kernel[:, j:j + 1]], axis=1)
            r = s.rank(candidate)
            if r > base_rank:
                chosen.append(j)
                current, base_rank = candidate, r
        if chosen:
            dims[k] = len(chosen)
            reps[k] = kernel[:, chosen]
    return CohomologyResult(GradedModule(dims, c.module.degree_cap), reps)


def class_coordinates(c: ChainComplex, h: CohomologyResult, k: int,
                      cocycle: np.ndarray) -> Optional[np.ndarray]:
    """Coordinates of the class of `cocycle` (a column block) in the basis h.representatives[k]"""
    s = c.scalars
    reps = h.representatives.get(k, s.zeros(c.module.dim(k), 0))
    image = c.differential(k - 1) if c.module.dim(k - 1) else s.zeros(c.module.dim(k), 0)
    system = np.concatenate([reps, image], axis=1)
    x = s.solve(system, cocycle)
    if x is None:
        return None
    return x[:reps.shape[1], :]


def induced_map(phi: GradedMap, source: ChainComplex, target: ChainComplex,
                h_source: Optional[CohomologyResult] = None,
                h_target: Optional[CohomologyResult] = None) -> Dict[int, np.ndarray]:
    """Matrix of H(phi) per source degree in the representative bases"""
    h_source = h_source or cohomology(source)
    h_target = h_target or cohomology(target)
    s = source.scalars
    out = {}
    for k, reps in h_source.representatives.items():
        rows = h_target.module.dim(k + phi.degree)
        if rows == 0:
            continue
        image = phi.block(k) @ reps
        coords = class_coordinates(target, h_target, k + phi.degree, image)
        if coords is None:
            raise ValueError(f"Map is not closed: image of H^{k} is not a cocycle class")
        out[k] = coords
    return out


def shift_complex(c: ChainComplex, q: int) -> ChainComplex:
    """c[q]: degrees move down by q, differential times (-1)^q"""
    module = c.module.shift(q)
    d = c.d.reindex(module, module, q).scale((-1) ** (q % 2))
    return ChainComplex(module, d, c.scalars, check=False)


def closure_defect(phi: GradedMap, source: ChainComplex, target: ChainComplex) -> GradedMap:
    """d_target∘phi - (-1)^q phi∘d_source"""
    return compose(target.d, phi) - compose(phi, source.d).scale((-1) ** (phi.degree % 2))


def mapping_cone(phi: GradedMap, source: ChainComplex,
                 target: ChainComplex) -> Tuple[Optional[ChainComplex], GradedMap]:
    """Cone on source[1-q] ⊕ target with differential [[d_s[1-q], 0], [phi, d_t]]

    Returns:
        (cone, defect); cone is None when phi is not closed
    """
    defect = closure_defect(phi, source, target)
    if not defect.is_zero():
        return None, defect
    q = phi.degree
    shifted = shift_complex(source, 1 - q)
    module = shifted.module.direct_sum(target.module)
    s = source.scalars
    blocks = {}
    for k in module.degrees():
        rows, cols = module.dim(k + 1), module.dim(k)
        if not rows:
            continue
        block = s.zeros(rows, cols)
        a_rows, a_cols = shifted.module.dim(k + 1), shifted.module.dim(k)
        if a_rows and a_cols:
            block[:a_rows, :a_cols] = shifted.differential(k)
        # source[1-q]^k is source^{k+1-q}; phi sends it to target^{k+1}
        if a_cols and target.module.dim(k + 1):
            block[a_rows:, :a_cols] = phi.block(k + 1 - q)
        if target.module.dim(k) and target.module.dim(k + 1):
            block[a_rows:, a_cols:] = target.differential(k)
        blocks[k] = block
    d = GradedMap(module, module, 1, blocks, s)
    return ChainComplex(module, d, s), defect


def is_acyclic(c: ChainComplex) -> bool:
    return cohomology(c).module.total_dim == 0


def is_quasi_iso(phi: GradedMap, source: ChainComplex, target: ChainComplex) -> bool:
    """True iff the mapping cone is acyclic

    Raises:
        ValueError: when phi is not closed
    """
    cone, defect = mapping_cone(phi, source, target)
    if cone is None:
        raise ValueError(f"Map is not closed (defect norm {defect.norm():.3e})")
    return is_acyclic(cone)


def hom_complex(source: ChainComplex,
                target: ChainComplex) -> Tuple[ChainComplex, Dict[int, List[Tuple[int, int, int]]]]:
    """Hom(source, target) with d(x) = d_t x - (-1)^n x d_s

    Each degree-n basis vector is an elementary matrix; layout[n] lists its
    (source degree, row, column) triples in basis order.
    """
    s = source.scalars
    layout = {}
    dims = {}
    for n in range(-2 * source.module.degree_cap, 2 * source.module.degree_cap + 1):
        entries = []
        for d in source.module.degrees():
            rows, cols = target.module.dim(d + n), source.module.dim(d)
            for r in range(rows):
                for col in range(cols):
                    entries.append((d, r, col))
        if entries:
            layout[n] = entries
            dims[n] = len(entries)
    cap = max([abs(n) for n in dims] + [source.module.degree_cap])
    module = GradedModule(dims, cap)
    blocks = {}
    for n, entries in layout.items():
        if n + 1 not in layout:
            continue
        out_index = {e: i for i, e in enumerate(layout[n + 1])}
        block = s.zeros(len(layout[n + 1]), len(entries))
        for j, (d, r, col) in enumerate(entries):
            x = GradedMap(source.module, target.module, n,
                          {d: _elementary(s, target.module.dim(d + n), source.module.dim(d), r, col)}, s)
            dx = compose(target.d, x) - compose(x, source.d).scale((-1) ** (n % 2))
            for dd, b in dx.blocks.items():
                for (rr, cc), v in np.ndenumerate(b):
                    if v != 0:
                        block[out_index[(dd, rr, cc)], j] = v
        blocks[n] = block
    return ChainComplex(module, GradedMap(module, module, 1, blocks, s), s, check=False), layout


def _elementary(s: Scalars, rows: int, cols: int, r: int, c: int) -> np.ndarray:
    m = s.zeros(rows, cols)
    m[r, c] = s.coerce(1)
    return m


def direct_sum(modules: List[GradedModule]) -> GradedModule:
    out = GradedModule({})
    for m in modules:
        out = out.direct_sum(m)
    return out


def block_map(sources: List[GradedModule], targets: List[GradedModule], degree: int,
              parts: Dict[Tuple[int, int], GradedMap], scalars: Scalars = EXACT) -> GradedMap:
    """Assemble a map between direct sums from its (target index, source index) parts

    In every degree the summands are stacked in list order.
    """
    source, target = direct_sum(sources), direct_sum(targets)
    blocks = {}
    for d in source.degrees():
        rows = target.dim(d + degree)
        if not rows:
            continue
        block = scalars.zeros(rows, source.dim(d))
        for (i, j), part in parts.items():
            if part.degree != degree or part.source != sources[j] or part.target != targets[i]:
                raise ValueError(f"Block ({i},{j}) does not fit: {part!r}")
            if d not in part.blocks:
                continue
            r0 = sum(t.dim(d + degree) for t in targets[:i])
            c0 = sum(s.dim(d) for s in sources[:j])
            b = part.blocks[d]
            block[r0:r0 + b.shape[0], c0:c0 + b.shape[1]] = b
        blocks[d] = block
    return GradedMap(source, target, degree, blocks, scalars)


def extract_block(m: GradedMap, sources: List[GradedModule], targets: List[GradedModule],
                  i: int, j: int) -> GradedMap:
    """The (i, j) part of a map between direct sums"""
    blocks = {}
    for d in sources[j].degrees():
        rows = targets[i].dim(d + m.degree)
        if not rows or d not in m.blocks:
            continue
        r0 = sum(t.dim(d + m.degree) for t in targets[:i])
        c0 = sum(s.dim(d) for s in sources[:j])
        blocks[d] = m.blocks[d][r0:r0 + rows, c0:c0 + sources[j].dim(d)]
    return GradedMap(sources[j], targets[i], m.degree, blocks, m.scalars)
