"""Combinatorial layer: complexes, orientations, boundary subcomplexes, the
double D(K), gluing, doubling and standard subdivision.

Orientation of a simplex is its stored vertex order. The boundary sign of
face ``i`` (the face obtained by deleting vertex ``i``) is ``(-1)**i`` times
the parity of the permutation taking the deleted tuple to the face's own
stored order. Lower-dimensional simplices generated from facets keep the
vertex order in which they first appear.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .exceptions import ComplexError, GluingError
from .operators import Basis, LinearOperator

logger = logging.getLogger(__name__)


def permutation_sign(source, target):
    """Parity of the permutation that reorders ``source`` into ``target``."""
    perm = [source.index(v) for v in target]
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _delete(vertices, i):
    return vertices[:i] + vertices[i + 1:]


class Midpoint(NamedTuple):
    """Vertex label created by subdividing the edge ``(a, b)``."""

    a: object
    b: object


@dataclass(frozen=True)
class Simplex:
    dim: int
    index: int
    vertices: tuple

    @property
    def key(self):
        return frozenset(self.vertices)

    def __str__(self):
        return "[" + ",".join(str(v) for v in self.vertices) + "]"


class SimplicialComplex:
    """Finite simplicial complex with oriented simplices and signed incidence.

    ``levels[q]`` lists the oriented q-simplices as vertex tuples. Every face of
    every simplex must be present.
    """

    def __init__(self, levels):
        levels = [tuple(tuple(s) for s in level) for level in levels]
        while levels and not levels[-1]:
            levels.pop()
        self._levels = tuple(levels)
        self._index = {}
        for q, level in enumerate(self._levels):
            for i, vertices in enumerate(level):
                if len(vertices) != q + 1:
                    raise ComplexError(f"Simplex {vertices} listed in degree {q}")
                if len(set(vertices)) != len(vertices):
                    raise ComplexError(f"Repeated vertex in simplex {vertices}")
                key = frozenset(vertices)
                if key in self._index:
                    raise ComplexError(f"Simplex {vertices} listed twice")
                self._index[key] = (q, i)

        self._faces = [()]
        for q in range(1, len(self._levels)):
            faces_q = []
            for vertices in self._levels[q]:
                entries = []
                for k in range(q + 1):
                    face = _delete(vertices, k)
                    found = self._index.get(frozenset(face))
                    if found is None:
                        raise ComplexError(f"Face {face} of {vertices} is missing")
                    j = found[1]
                    sign = (-1) ** k * permutation_sign(face, self._levels[q - 1][j])
                    entries.append((j, sign))
                faces_q.append(tuple(entries))
            self._faces.append(tuple(faces_q))

        self._cofaces = []
        for q in range(len(self._levels)):
            cof = [[] for _ in self._levels[q]]
            if q + 1 < len(self._levels):
                for t, entries in enumerate(self._faces[q + 1]):
                    for j, sign in entries:
                        cof[j].append((t, sign))
            self._cofaces.append(tuple(tuple(c) for c in cof))

    def __repr__(self):
        return f"SimplicialComplex(counts={self.counts()})"

    @property
    def dim(self):
        return len(self._levels) - 1

    @property
    def vertices(self):
        return tuple(v[0] for v in self._levels[0]) if self._levels else ()

    def count(self, q):
        if q < 0 or q > self.dim:
            return 0
        return len(self._levels[q])

    def counts(self):
        return tuple(len(level) for level in self._levels)

    def level(self, q):
        if q < 0 or q > self.dim:
            return ()
        return self._levels[q]

    def simplex(self, q, i):
        return Simplex(q, i, self._levels[q][i])

    def simplices(self, q):
        return tuple(Simplex(q, i, v) for i, v in enumerate(self.level(q)))

    def find(self, vertices):
        return self._index.get(frozenset(vertices))

    def index(self, vertices):
        found = self.find(vertices)
        if found is None:
            raise ComplexError(f"Simplex {tuple(vertices)} is not in the complex")
        return found

    def vertex_position(self, label):
        return self.index((label,))[1]

    def faces(self, q, i):
        """``(face index, incidence sign)`` pairs in face-deletion order."""
        if q < 1:
            return ()
        return self._faces[q][i]

    def cofaces(self, q, i):
        return self._cofaces[q][i]

    def euler_characteristic(self):
        return sum((-1) ** q * n for q, n in enumerate(self.counts()))

    def boundary_matrix(self, q):
        """Signed incidence from q-chains to (q-1)-chains."""
        if q < 1 or q > self.dim:
            raise ComplexError(f"Boundary degree {q} outside 1..{self.dim}")
        matrix = np.zeros((self.count(q - 1), self.count(q)), dtype=int)
        for t, entries in enumerate(self._faces[q]):
            for j, sign in entries:
                matrix[j, t] = sign
        return LinearOperator(
            matrix,
            Basis(q, tuple(range(self.count(q)))),
            Basis(q - 1, tuple(range(self.count(q - 1)))),
            tag=f"boundary_{q}",
        )

    def vertex_graph(self):
        n = self.count(0)
        if self.dim < 1:
            return csr_matrix((n, n), dtype=int)
        rows, cols = [], []
        for vertices in self._levels[1]:
            a, b = (self._index[frozenset((v,))][1] for v in vertices)
            rows += [a, b]
            cols += [b, a]
        return csr_matrix((np.ones(len(rows), dtype=int), (rows, cols)), shape=(n, n))

    def vertex_distances(self):
        return shortest_path(self.vertex_graph(), unweighted=True, directed=False)

    def is_connected(self):
        count, _ = connected_components(self.vertex_graph(), directed=False)
        return count <= 1

    def cycle_order(self):
        """Vertices and edges of a cycle, in walking order.

        Returns ``(vertex positions, edge positions, edge signs)``; the sign is
        +1 when the stored edge orientation agrees with the walk.
        """
        if self.dim != 1 or not self.is_connected() or self.count(0) < 3:
            raise ComplexError("Complex is not a cycle")
        if any(len(self._cofaces[0][v]) != 2 for v in range(self.count(0))):
            raise ComplexError("Complex is not a cycle")
        vertex_order, edge_order, signs = [0], [], []
        previous_edge = None
        current = 0
        for _ in range(self.count(0)):
            edge = next(e for e, _ in self._cofaces[0][current] if e != previous_edge)
            tail, head = (self.vertex_position(v) for v in self._levels[1][edge])
            if tail == current:
                nxt, sign = head, 1
            else:
                nxt, sign = tail, -1
            edge_order.append(edge)
            signs.append(sign)
            previous_edge = edge
            current = nxt
            if current != 0:
                vertex_order.append(current)
        return vertex_order, edge_order, signs

    def is_cycle(self):
        try:
            self.cycle_order()
        except ComplexError:
            return False
        return True

    def subcomplex(self, vertices, max_dim=None, name=""):
        """Full subcomplex spanned by a vertex set."""
        vertices = set(vertices)
        missing = vertices - set(self.vertices)
        if missing:
            raise ComplexError(f"Unknown vertices {sorted(map(str, missing))}")
        top = self.dim if max_dim is None else min(max_dim, self.dim)
        indices = []
        for q in range(self.dim + 1):
            if q > top:
                indices.append(())
                continue
            indices.append(tuple(i for i, s in enumerate(self._levels[q]) if set(s) <= vertices))
        return Subcomplex(self, tuple(indices), name)

    def subcomplex_from(self, simplices, name=""):
        """Smallest subcomplex containing the given vertex tuples."""
        chosen = [set() for _ in range(self.dim + 1)]
        stack = [tuple(s) for s in simplices]
        while stack:
            vertices = stack.pop()
            q, i = self.index(vertices)
            if i in chosen[q]:
                continue
            chosen[q].add(i)
            stack.extend(_delete(vertices, k) for k in range(len(vertices)) if len(vertices) > 1)
        return Subcomplex(self, tuple(tuple(sorted(c)) for c in chosen), name)

    def boundary_subcomplex(self, vertices, name=""):
        sub = self.subcomplex(vertices, max_dim=self.dim - 1, name=name)
        return BoundarySubcomplex(self, sub.indices, name)

    def topological_boundary(self, name="boundary"):
        """Closure of the (n-1)-simplices that bound exactly one n-simplex."""
        n = self.dim
        if n < 1:
            return BoundarySubcomplex(self, ((),), name)
        free = [self._levels[n - 1][j] for j in range(self.count(n - 1)) if len(self._cofaces[n - 1][j]) == 1]
        sub = self.subcomplex_from(free)
        return BoundarySubcomplex(self, sub.indices, name)

    def star(self, q, i):
        return star(self, self.simplex(q, i))


@dataclass(frozen=True, eq=False)
class Subcomplex:
    parent: SimplicialComplex
    indices: tuple
    name: str = ""

    def __post_init__(self):
        indices = tuple(tuple(sorted(set(level))) for level in self.indices)
        indices = indices + ((),) * (self.parent.dim + 1 - len(indices))
        object.__setattr__(self, "indices", indices)
        for q in range(1, len(indices)):
            members = set(indices[q - 1])
            for i in indices[q]:
                for j, _ in self.parent.faces(q, i):
                    if j not in members:
                        raise ComplexError(
                            f"Subcomplex {self.name!r} is not closed under faces at "
                            f"{self.parent.simplex(q, i)}"
                        )

    def positions(self, q):
        if q < 0 or q >= len(self.indices):
            return ()
        return self.indices[q]

    @property
    def dim(self):
        populated = [q for q, level in enumerate(self.indices) if level]
        return populated[-1] if populated else -1

    @property
    def vertices(self):
        return tuple(self.parent.level(0)[i][0] for i in self.positions(0))

    def is_empty(self):
        return not any(self.indices)

    def __contains__(self, item):
        q, i = item
        return i in self.positions(q)

    def count(self, q):
        return len(self.positions(q))

    def union(self, *others, name=""):
        merged = [set(level) for level in self.indices]
        for other in others:
            if other.parent is not self.parent:
                raise ComplexError("Cannot unite subcomplexes of different complexes")
            for q, level in enumerate(other.indices):
                merged[q].update(level)
        return type(self)(self.parent, tuple(tuple(m) for m in merged), name or self.name)

    def components(self):
        """Connected components, ordered by their first vertex."""
        verts = list(self.positions(0))
        if not verts:
            return []
        local = {v: k for k, v in enumerate(verts)}
        rows, cols = [], []
        for e in self.positions(1):
            a, b = (local[self.parent.vertex_position(v)] for v in self.parent.level(1)[e])
            rows += [a, b]
            cols += [b, a]
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(verts), len(verts)))
        _, labels = connected_components(graph, directed=False)
        order = []
        for label in labels:
            if label not in order:
                order.append(label)
        parts = []
        for label in order:
            members = {verts[k] for k in range(len(verts)) if labels[k] == label}
            indices = []
            for q in range(len(self.indices)):
                level = self.parent.level(q)
                indices.append(tuple(
                    i for i in self.positions(q)
                    if self.parent.vertex_position(level[i][0]) in members
                ))
            parts.append(type(self)(self.parent, tuple(indices), self.name))
        return parts

    def as_complex(self):
        return SimplicialComplex(
            [[self.parent.level(q)[i] for i in self.positions(q)] for q in range(self.dim + 1)]
        )


class BoundarySubcomplex(Subcomplex):
    """Subcomplex of dimension at most n-1 whose (n-1)-simplices each bound
    exactly one n-simplex."""

    def __post_init__(self):
        super().__post_init__()
        n = self.parent.dim
        if self.positions(n):
            raise ComplexError(f"Boundary subcomplex {self.name!r} contains top simplices")
        if n >= 1:
            for j in self.positions(n - 1):
                if len(self.parent.cofaces(n - 1, j)) != 1:
                    raise ComplexError(
                        f"{self.parent.simplex(n - 1, j)} in {self.name!r} is not a face "
                        f"of exactly one {n}-simplex"
                    )


def build_complex(facets):
    """Complex generated by top-dimensional facets, all faces included."""
    facets = [tuple(f) for f in facets]
    if not facets:
        raise ComplexError("At least one facet is required")
    n = len(facets[0]) - 1
    for facet in facets:
        if len(facet) - 1 != n:
            raise ComplexError(f"Facet {facet} has dimension {len(facet) - 1}, expected {n}")
        if len(set(facet)) != len(facet):
            raise ComplexError(f"Repeated vertex in facet {facet}")

    levels = [[] for _ in range(n + 1)]
    seen = set()
    for facet in facets:
        for v in facet:
            if frozenset((v,)) not in seen:
                seen.add(frozenset((v,)))
                levels[0].append((v,))

    def add(simplex):
        key = frozenset(simplex)
        if key in seen:
            return
        seen.add(key)
        levels[len(simplex) - 1].append(simplex)
        if len(simplex) > 2:
            for k in range(len(simplex)):
                add(_delete(simplex, k))

    for facet in facets:
        if n > 0 and frozenset(facet) in seen:
            raise ComplexError(f"Facet {facet} listed twice")
        add(facet)
    return SimplicialComplex(levels)


def path_complex(n, start=0):
    """Path with ``n`` edges on the vertices ``start .. start + n``."""
    if n < 1:
        raise ComplexError("A path needs at least one edge")
    return build_complex([(k, k + 1) for k in range(start, start + n)])


def cycle_complex(n):
    if n < 3:
        raise ComplexError("A cycle needs at least three edges")
    return build_complex([(k, (k + 1) % n) for k in range(n)])


def boundary_matrix(K, q):
    return K.boundary_matrix(q)


def star(K, simplex):
    """Open star: the simplex and every simplex having it as a face."""
    q, i = simplex.dim, simplex.index
    if q > K.dim or i >= K.count(q) or K.level(q)[i] != simplex.vertices:
        raise ComplexError(f"{simplex} is not in the complex")
    members = {simplex}
    frontier = [(q, i)]
    while frontier:
        p, j = frontier.pop()
        for t, _ in K.cofaces(p, j):
            s = K.simplex(p + 1, t)
            if s not in members:
                members.add(s)
                frontier.append((p + 1, t))
    return frozenset(members)


def closed_star(K, simplex):
    members = set()
    for s in star(K, simplex):
        stack = [s]
        while stack:
            current = stack.pop()
            if current in members:
                continue
            members.add(current)
            stack.extend(K.simplex(current.dim - 1, j) for j, _ in K.faces(current.dim, current.index))
    return frozenset(members)


# D(K)


@dataclass(frozen=True)
class Leaf:
    """Quadrilateral (eta, tau_plus, sigma, tau_minus) of D(K); entries are ``(degree, index)``.

    ``tau_plus`` is the intermediate face whose incidence product with eta and
    sigma is +1.
    """

    eta: tuple
    tau_plus: tuple
    tau_minus: tuple
    sigma: tuple


class DoubleComplex:
    """The double D(K): one vertex per simplex of K, one edge per incidence,
    one quadrilateral per leaf."""

    def __init__(self, K):
        self.complex = K
        self.simplices = [(q, i) for q in range(K.dim + 1) for i in range(K.count(q))]
        self.centers = {s: v for v, s in enumerate(self.simplices)}
        self.edges = []
        for q in range(1, K.dim + 1):
            for t in range(K.count(q)):
                for j, _ in K.faces(q, t):
                    self.edges.append(((q, t), (q - 1, j)))
        self.leaves = []
        for q in range(2, K.dim + 1):
            for e in range(K.count(q)):
                through = {}
                for a, s1 in K.faces(q, e):
                    for c, s2 in K.faces(q - 1, a):
                        through.setdefault(c, []).append((a, s1 * s2))
                for c in sorted(through):
                    (a, sa), (b, _) = through[c]
                    plus, minus = (a, b) if sa > 0 else (b, a)
                    self.leaves.append(Leaf((q, e), (q - 1, plus), (q - 1, minus), (q - 2, c)))
        logger.debug(
            "D(K) with %d vertices, %d edges, %d leaves",
            len(self.simplices), len(self.edges), len(self.leaves),
        )

    @property
    def n_vertices(self):
        return len(self.simplices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_cells(self):
        return len(self.leaves)

    def one_skeleton(self):
        n = self.n_vertices
        rows = [self.centers[a] for a, b in self.edges] + [self.centers[b] for a, b in self.edges]
        cols = [self.centers[b] for a, b in self.edges] + [self.centers[a] for a, b in self.edges]
        return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    def shortest_path(self, source, target):
        """Shortest edge path between two simplex centers, as simplex handles."""
        _, predecessors = shortest_path(
            self.one_skeleton(), unweighted=True, directed=False,
            indices=self.centers[source], return_predecessors=True,
        )
        path = [self.centers[target]]
        while path[-1] != self.centers[source]:
            previous = predecessors[path[-1]]
            if previous < 0:
                raise ComplexError(f"No D(K) path between {source} and {target}")
            path.append(previous)
        return [self.simplices[v] for v in reversed(path)]


def double_complex(K):
    return DoubleComplex(K)


# Gluing


class GluingMap:
    """Simplicial isomorphism ``source -> target`` between disjoint subcomplexes
    of one complex, given by a vertex bijection.

    ``simplex_map[q][i] = (j, sign)``: the q-simplex ``i`` of the source goes to
    the target simplex ``j``; ``sign`` compares the image orientation with the
    target's stored orientation.
    """

    def __init__(self, source, target, vertex_map):
        if source.parent is not target.parent:
            raise GluingError("Source and target must live in the same complex")
        self.source = source
        self.target = target
        self.vertex_map = dict(vertex_map)
        parent = source.parent

        source_vertices = set(source.vertices)
        target_vertices = set(target.vertices)
        if source_vertices & target_vertices:
            raise GluingError("Source and target components are not disjoint")
        if set(self.vertex_map) != source_vertices:
            raise GluingError("Vertex map must be defined exactly on the source vertices")
        images = list(self.vertex_map.values())
        if len(set(images)) != len(images) or set(images) != target_vertices:
            raise GluingError("Vertex map is not a bijection onto the target vertices")

        self.simplex_map = []
        for q in range(parent.dim + 1):
            if source.count(q) != target.count(q):
                raise GluingError(f"Source and target differ in the number of {q}-simplices")
            mapping = {}
            for i in source.positions(q):
                image = tuple(self.vertex_map[v] for v in parent.level(q)[i])
                found = parent.find(image)
                if found is None or found[1] not in target.positions(q):
                    raise GluingError(
                        f"Image {image} of {parent.simplex(q, i)} is not a simplex of the target"
                    )
                j = found[1]
                mapping[i] = (j, permutation_sign(image, parent.level(q)[j]))
            self.simplex_map.append(mapping)

    def __repr__(self):
        return f"GluingMap({self.source.name!r} -> {self.target.name!r}, {len(self.vertex_map)} vertices)"

    def is_trivial(self):
        return not self.vertex_map

    def check_incidence(self):
        """Transported incidence signs reproduce the target's incidence signs."""
        parent = self.source.parent
        for q in range(1, parent.dim + 1):
            for i in self.source.positions(q):
                j, s_tau = self.simplex_map[q][i]
                target_faces = dict(parent.faces(q, j))
                for face, sign in parent.faces(q, i):
                    k, s_face = self.simplex_map[q - 1][face]
                    if target_faces.get(k) != sign * s_tau * s_face:
                        return False
        return True


@dataclass(frozen=True, eq=False)
class GluingProjection:
    """Quotient map K -> K_f. ``index[q][i]`` is the image of simplex ``i``;
    ``sign[q][i]`` compares orientations."""

    source: SimplicialComplex
    target: SimplicialComplex
    gluing: GluingMap
    index: tuple
    sign: tuple

    def image(self, q, i):
        return int(self.index[q][i]), int(self.sign[q][i])

    def pullback_matrix(self, q, rank=1):
        """Matrix of pi^*: q-cochains of K_f -> q-cochains of K."""
        n_source, n_target = self.source.count(q), self.target.count(q)
        matrix = np.zeros((n_source * rank, n_target * rank))
        eye = np.eye(rank)
        for i in range(n_source):
            j, sign = self.image(q, i)
            matrix[i * rank:(i + 1) * rank, j * rank:(j + 1) * rank] = sign * eye
        return matrix

    def push_subcomplex(self, sub, name=None):
        indices = [
            tuple(sorted({int(self.index[q][i]) for i in sub.positions(q)}))
            for q in range(self.target.dim + 1)
        ]
        cls = BoundarySubcomplex if isinstance(sub, BoundarySubcomplex) else Subcomplex
        return cls(self.target, tuple(indices), sub.name if name is None else name)

    def seam(self):
        """The identified locus (image of the gluing target) in K_f."""
        return self.push_subcomplex(self.gluing.target, name="seam")

    def vertex_label(self, label):
        return self.gluing.vertex_map.get(label, label)


def glue(K, f):
    """Identify ``f.source`` with ``f.target``; returns ``(K_f, projection)``.

    Simplices of K_f keep the orientation of their representative outside the
    source component.
    """
    if f.source.parent is not K:
        raise GluingError("Gluing map belongs to a different complex")
    for sub in (f.source, f.target):
        if not isinstance(sub, BoundarySubcomplex):
            raise GluingError(f"{sub.name!r} is not a boundary subcomplex")

    relabel = {v: f.vertex_map.get(v, v) for v in K.vertices}
    levels = []
    index = []
    sign = []
    for q in range(K.dim + 1):
        source_positions = set(f.source.positions(q))
        level, seen = [], {}
        idx = np.full(K.count(q), -1, dtype=int)
        sgn = np.ones(K.count(q), dtype=int)
        for i, vertices in enumerate(K.level(q)):
            if i in source_positions:
                continue
            image = tuple(relabel[v] for v in vertices)
            if len(set(image)) != len(image):
                raise GluingError(f"Gluing collapses {K.simplex(q, i)} to a degenerate simplex")
            key = frozenset(image)
            if key in seen:
                first = K.simplex(q, seen[key][1])
                raise GluingError(
                    f"Gluing identifies {K.simplex(q, i)} with {first}: "
                    "the result would contain parallel simplices"
                )
            seen[key] = (len(level), i)
            idx[i] = len(level)
            level.append(image)
        for i in source_positions:
            j, s = f.simplex_map[q][i]
            idx[i] = idx[j]
            sgn[i] = s
        levels.append(level)
        index.append(idx)
        sign.append(sgn)

    K_f = SimplicialComplex(levels)
    logger.debug("Glued %s into %s", K, K_f)
    return K_f, GluingProjection(K, K_f, f, tuple(index), tuple(sign))


def disjoint_union(*complexes):
    """Disjoint union; vertex ``v`` of the c-th complex becomes ``(c, v)``."""
    dim = max(K.dim for K in complexes)
    levels = [[] for _ in range(dim + 1)]
    for c, K in enumerate(complexes):
        for q in range(K.dim + 1):
            levels[q].extend(tuple((c, v) for v in s) for s in K.level(q))
    return SimplicialComplex(levels)


class Doubling(NamedTuple):
    complex: SimplicialComplex
    swap: tuple
    projection: GluingProjection


def closed_double(K, L):
    """Two copies of K identified along L.

    Vertices of the result are ``(copy, v)``; points of L carry copy 1. ``swap``
    holds per-degree ``(index, sign)`` arrays of the involution exchanging the
    copies.
    """
    union = disjoint_union(K, K)
    copies = []
    for c in (0, 1):
        simplices = [tuple((c, v) for v in K.level(q)[i]) for q in range(K.dim + 1) for i in L.positions(q)]
        sub = union.subcomplex_from(simplices, name=f"{L.name or 'L'}#{c}")
        copies.append(BoundarySubcomplex(union, sub.indices, sub.name))
    f = GluingMap(copies[0], copies[1], {(0, v): (1, v) for v in L.vertices})
    doubled, projection = glue(union, f)

    fixed = set(L.vertices)

    def swap_label(label):
        c, v = label
        return (1, v) if v in fixed else (1 - c, v)

    swap = []
    for q in range(doubled.dim + 1):
        idx = np.zeros(doubled.count(q), dtype=int)
        sgn = np.ones(doubled.count(q), dtype=int)
        for i, vertices in enumerate(doubled.level(q)):
            image = tuple(swap_label(v) for v in vertices)
            j = doubled.index(image)[1]
            idx[i] = j
            sgn[i] = permutation_sign(image, doubled.level(q)[j])
        swap.append((idx, sgn))
    return Doubling(doubled, tuple(swap), projection)


# Standard subdivision


@dataclass(frozen=True, eq=False)
class Subdivision:
    complex: SimplicialComplex
    parent: SimplicialComplex
    children: dict = field(repr=False)
    midpoints: dict = field(repr=False)

    def refine(self, sub):
        """Image of a parent subcomplex in the subdivided complex."""
        chosen = set()
        for q in range(len(sub.indices)):
            for i in sub.positions(q):
                chosen.update(self.children[(q, i)])
        indices = [tuple(sorted(i for p, i in chosen if p == q)) for q in range(self.complex.dim + 1)]
        cls = BoundarySubcomplex if isinstance(sub, BoundarySubcomplex) else Subcomplex
        return cls(self.complex, tuple(indices), sub.name)


def standard_subdivision(K):
    """Edge bisection in dimension 1, four-triangle midpoint split in dimension 2."""
    if K.dim > 2:
        raise ComplexError(f"Standard subdivision is implemented up to dimension 2, got {K.dim}")
    midpoints = {frozenset(e): Midpoint(*e) for e in K.level(1)}
    vertices = [(v,) for v in K.vertices] + [(m,) for m in midpoints.values()]
    edges, triangles = [], []
    for a, b in K.level(1):
        m = midpoints[frozenset((a, b))]
        edges += [(a, m), (m, b)]
    for a, b, c in K.level(2):
        m_ab = midpoints[frozenset((a, b))]
        m_bc = midpoints[frozenset((b, c))]
        m_ac = midpoints[frozenset((a, c))]
        edges += [(m_ab, m_ac), (m_ab, m_bc), (m_ac, m_bc)]
        triangles += [(a, m_ab, m_ac), (m_ab, b, m_bc), (m_ac, m_bc, c), (m_bc, m_ac, m_ab)]
    levels = [vertices, edges] + ([triangles] if K.dim == 2 else [])
    refined = SimplicialComplex(levels if K.dim >= 1 else [vertices])

    children = {}
    for i, (v,) in enumerate(K.level(0)):
        children[(0, i)] = ((0, refined.vertex_position(v)),)
    for i, (a, b) in enumerate(K.level(1)):
        m = midpoints[frozenset((a, b))]
        children[(1, i)] = (
            (0, refined.vertex_position(m)),
            refined.index((a, m)),
            refined.index((m, b)),
        )
    for i, (a, b, c) in enumerate(K.level(2)):
        m_ab = midpoints[frozenset((a, b))]
        m_bc = midpoints[frozenset((b, c))]
        m_ac = midpoints[frozenset((a, c))]
        children[(2, i)] = (
            refined.index((m_ab, m_ac)),
            refined.index((m_ab, m_bc)),
            refined.index((m_ac, m_bc)),
            refined.index((a, m_ab, m_ac)),
            refined.index((m_ab, b, m_bc)),
            refined.index((m_ac, m_bc, c)),
            refined.index((m_bc, m_ac, m_ab)),
        )
    return Subdivision(refined, K, children, midpoints)
