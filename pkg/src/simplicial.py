"""
Simplicial Module
Finite ordered simplicial complexes: faces, sub-simplices, splittings,
horns and optional chart realizations
"""
from itertools import combinations
from math import comb
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.utils import simplex_key, parse_simplex_key


class Simplex(tuple):
    """Strictly increasing vertex tuple (i0 < ... < ik)"""

    def __new__(cls, vertices: Iterable[int]):
        verts = tuple(int(v) for v in vertices)
        if not verts:
            raise ValueError("A simplex needs at least one vertex")
        if any(a >= b for a, b in zip(verts, verts[1:])):
            raise ValueError(f"Vertex tuple {verts} is not strictly increasing")
        return super().__new__(cls, verts)

    @property
    def dim(self) -> int:
        return len(self) - 1

    def face(self, l: int) -> 'Simplex':
        return face(self, l)

    def sub(self, i: int, j: int) -> 'Simplex':
        return sub_simplex(self, i, j)

    def splittings(self) -> List[Tuple['Simplex', 'Simplex']]:
        return splittings(self)

    def __repr__(self):
        return f"Simplex{tuple(self)}"


def face(sigma: Sequence[int], l: int) -> Simplex:
    """Delete the vertex at position l

    Raises:
        IndexError: unless 0 <= l <= dim
    """
    sigma = Simplex(sigma)
    if not 0 <= l <= sigma.dim:
        raise IndexError(f"Face index {l} out of range for {sigma!r}")
    if sigma.dim == 0:
        raise IndexError(f"A vertex has no faces: {sigma!r}")
    return Simplex(sigma[:l] + sigma[l + 1:])


def sub_simplex(sigma: Sequence[int], i: int, j: int) -> Simplex:
    """Vertices at positions i..j (inclusive)"""
    sigma = Simplex(sigma)
    if not 0 <= i <= j <= sigma.dim:
        raise IndexError(f"Range {i}..{j} invalid for {sigma!r}")
    return Simplex(sigma[i:j + 1])


def splittings(sigma: Sequence[int]) -> List[Tuple[Simplex, Simplex]]:
    """(front σ(0..t), back σ(t..k)) for t = 1..k-1"""
    sigma = Simplex(sigma)
    k = sigma.dim
    return [(sub_simplex(sigma, 0, t), sub_simplex(sigma, t, k)) for t in range(1, k)]


def all_splittings(sigma: Sequence[int]) -> List[Tuple[int, Simplex, Simplex]]:
    """(t, front, back) for t = 0..k, vertex parts included"""
    sigma = Simplex(sigma)
    k = sigma.dim
    return [(t, sub_simplex(sigma, 0, t), sub_simplex(sigma, t, k)) for t in range(k + 1)]


def degeneracy(vertices: Sequence[int], j: int) -> Tuple[int, ...]:
    """Repeat the vertex at position j (a degenerate tuple, never stored)"""
    verts = tuple(vertices)
    if not 0 <= j < len(verts):
        raise IndexError(f"Degeneracy index {j} out of range for {verts}")
    return verts[:j + 1] + verts[j:]


def is_degenerate(vertices: Sequence[int]) -> bool:
    return any(a == b for a, b in zip(vertices, vertices[1:]))


class Horn:
    """The horn of Δ^k missing face q: all faces ∂_j Δ^k with j != q"""

    def __init__(self, k: int, q: int):
        if k < 1 or not 0 <= q <= k:
            raise ValueError(f"No horn with k={k}, q={q}")
        self.k = k
        self.q = q

    @property
    def is_inner(self) -> bool:
        return 0 < self.q < self.k

    @property
    def top(self) -> Simplex:
        return Simplex(range(self.k + 1))

    @property
    def missing_face(self) -> Simplex:
        return face(self.top, self.q)

    def faces(self) -> List[Simplex]:
        return [face(self.top, j) for j in range(self.k + 1) if j != self.q]

    def simplices(self) -> List[Simplex]:
        """Every simplex of the horn (faces of the present faces)"""
        out = set()
        for f in self.faces():
            for r in range(1, len(f) + 1):
                out.update(Simplex(c) for c in combinations(f, r))
        return sorted(out, key=lambda s: (len(s), tuple(s)))

    def contains(self, sigma: Sequence[int]) -> bool:
        """σ lies in the horn iff it misses some vertex other than q"""
        verts = set(sigma)
        return any(v not in verts for v in range(self.k + 1) if v != self.q)

    def __repr__(self):
        return f"Horn(k={self.k}, q={self.q})"


class SimplicialComplex:
    """Face-closed set of ordered simplices on vertices 0..n-1"""

    def __init__(self, n_vertices: int, top: Iterable[Sequence[int]],
                 coords: Optional[Dict[int, Sequence[float]]] = None,
                 realizations: Optional[Dict[Tuple[int, ...], Sequence[Sequence[float]]]] = None):
        self.n_vertices = int(n_vertices)
        self.top = [Simplex(t) for t in top]
        for t in self.top:
            if t[-1] >= self.n_vertices or t[0] < 0:
                raise ValueError(f"Simplex {t!r} uses a vertex outside 0..{self.n_vertices - 1}")
        faces = {Simplex((v,)) for v in range(self.n_vertices)}
        for t in self.top:
            for r in range(1, len(t) + 1):
                faces.update(Simplex(c) for c in combinations(t, r))
        self._by_dim: Dict[int, List[Simplex]] = {}
        for f in sorted(faces):
            self._by_dim.setdefault(f.dim, []).append(f)
        self._faces = faces
        self.coords = {int(v): np.asarray(p, dtype=float) for v, p in (coords or {}).items()}
        self.realizations = {tuple(k): np.asarray(p, dtype=float)
                             for k, p in (realizations or {}).items()}

    @staticmethod
    def standard(k: int, coords: Optional[Dict[int, Sequence[float]]] = None) -> 'SimplicialComplex':
        """Δ^k"""
        return SimplicialComplex(k + 1, [tuple(range(k + 1))], coords)

    @property
    def dimension(self) -> int:
        return max(self._by_dim) if self._by_dim else -1

    def enumerate_simplices(self, dim: int) -> List[Simplex]:
        return list(self._by_dim.get(dim, []))

    def simplices(self) -> List[Simplex]:
        """All simplices, by dimension then lexicographically"""
        return [s for d in sorted(self._by_dim) for s in self._by_dim[d]]

    def face_counts(self) -> Tuple[int, ...]:
        return tuple(len(self._by_dim.get(d, [])) for d in range(self.dimension + 1))

    def contains(self, sigma: Sequence[int]) -> bool:
        try:
            return Simplex(sigma) in self._faces
        except ValueError:
            return False

    def has_realization(self) -> bool:
        return bool(self.coords) or bool(self.realizations)

    def realization(self, sigma: Sequence[int]) -> np.ndarray:
        """Chart points P_0..P_k of σ, shape (k+1, m)

        A per-simplex realization wins over vertex coordinates.
        """
        sigma = Simplex(sigma)
        if tuple(sigma) in self.realizations:
            return self.realizations[tuple(sigma)]
        try:
            return np.array([self.coords[v] for v in sigma])
        except KeyError as e:
            raise ValueError(f"No chart coordinates for vertex {e.args[0]} of {sigma!r}") from e

    def chart_dimension(self) -> int:
        for points in list(self.coords.values()) + list(self.realizations.values()):
            return int(np.asarray(points).shape[-1])
        return 0

    def to_dict(self) -> dict:
        out = {'vertices': self.n_vertices, 'top': [list(t) for t in self.top]}
        if self.coords:
            out['coords'] = {str(v): p.tolist() for v, p in self.coords.items()}
        if self.realizations:
            out['realizations'] = {simplex_key(k): p.tolist() for k, p in self.realizations.items()}
        return out

    @staticmethod
    def from_dict(data: dict) -> 'SimplicialComplex':
        if 'vertices' not in data or 'top' not in data:
            raise ValueError("Complex JSON needs 'vertices' and 'top'")
        realizations = {parse_simplex_key(k): p for k, p in data.get('realizations', {}).items()}
        return SimplicialComplex(data['vertices'], data['top'],
                                 {int(k): v for k, v in data.get('coords', {}).items()},
                                 realizations)

    def __repr__(self):
        return f"SimplicialComplex(vertices={self.n_vertices}, faces={self.face_counts()})"


def build_complex(top: Iterable[Sequence[int]], n_vertices: Optional[int] = None,
                  coords: Optional[Dict[int, Sequence[float]]] = None) -> SimplicialComplex:
    """Face closure of the given top simplices"""
    top = [Simplex(t) for t in top]
    if n_vertices is None:
        n_vertices = max((t[-1] for t in top), default=-1) + 1
    return SimplicialComplex(n_vertices, top, coords)


def expected_face_counts(k: int) -> Tuple[int, ...]:
    """Face counts of Δ^k"""
    return tuple(comb(k + 1, d + 1) for d in range(k + 1))
