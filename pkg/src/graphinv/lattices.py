"""Generators for graphs that satisfy the Main Assumption, each with a height certificate.

Boundary vertices are degree-1 pendants hung below every floor vertex and above every
ceiling vertex, so each boundary vertex has a single interior neighbour.
"""

from __future__ import annotations

from .errors import InvalidDimensions
from .graph import HeightCertificate, WeightedBoundaryGraph, edge_key

KINDS = ("path", "tree", "square", "hexagonal", "triangular", "ladder")


class _Builder:
    def __init__(self):
        self.interior = []
        self.boundary = []
        self.edges = {}
        self.h = {}

    def vertex(self, label, height, boundary=False):
        (self.boundary if boundary else self.interior).append(label)
        self.h[label] = height
        return label

    def edge(self, u, v):
        self.edges[edge_key(u, v)] = 1.0

    def pendant(self, x, label, step):
        self.vertex(label, self.h[x] + step, boundary=True)
        self.edge(x, label)

    def finish(self, g=1.0, mu=1.0, q=0.0):
        verts = self.interior + self.boundary
        graph = WeightedBoundaryGraph(
            frozenset(self.interior), frozenset(self.boundary),
            {k: float(g) for k in self.edges},
            {v: float(mu) for v in verts},
            {v: float(q) for v in self.interior},
        )
        return graph, HeightCertificate(self.h)


def _dims(**kw):
    for name, value in kw.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise InvalidDimensions(f"{name} must be a positive integer, got {value!r}")


def _path(b, length):
    _dims(length=length)
    xs = [b.vertex(f"x{i}", i) for i in range(1, length + 1)]
    for u, v in zip(xs, xs[1:]):
        b.edge(u, v)
    b.pendant(xs[0], "z1", -1)
    b.pendant(xs[-1], "z2", +1)


def _tree(b, depth, branching):
    """Complete tree; internal nodes are interior, leaves are the boundary.

    Heights: the first child fills whichever unit step the parent does not already
    provide, extra children sit half a step above their parent.
    """
    _dims(depth=depth, branching=branching)
    if branching < 2:
        raise InvalidDimensions("a tree needs branching >= 2")

    def label(path):
        return "t" + "".join(str(i) for i in path) if path else "t"

    def grow(path, height, parent_step):
        node = label(path)
        leaf = len(path) == depth
        b.vertex(node, height, boundary=leaf)
        if leaf:
            return
        needed = [s for s in (+1.0, -1.0) if s != -parent_step]
        for i in range(branching):
            step = needed[i] if i < len(needed) else 0.5
            child = path + (i,)
            grow(child, height + step, step)
            b.edge(node, label(child))

    grow((), 0.0, 0.0)


def _square(b, rows, cols, prefix="x"):
    _dims(rows=rows, cols=cols)
    cell = {}
    for r in range(rows):
        for c in range(cols):
            cell[r, c] = b.vertex(f"{prefix}{r}_{c}", r)
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                b.edge(cell[r, c], cell[r, c + 1])
            if r + 1 < rows:
                b.edge(cell[r, c], cell[r + 1, c])
    for c in range(cols):
        b.pendant(cell[0, c], f"{prefix.replace('x', 'z')}f{c}", -1)
        b.pendant(cell[rows - 1, c], f"{prefix.replace('x', 'z')}c{c}", +1)
    return cell


def _hexagonal(b, rows, cols):
    """Brick-wall honeycomb: `cols` vertical chains of 2*rows+2 vertices.

    Chain c is joined to chain c+1 at heights j with (j + c) even, so every vertex has
    at most one horizontal neighbour and consecutive rungs close hexagons.
    """
    _dims(rows=rows, cols=cols)
    if cols < 2:
        raise InvalidDimensions("a hexagonal patch needs cols >= 2")
    length = 2 * rows + 2
    cell = {}
    for c in range(cols):
        for j in range(length):
            cell[c, j] = b.vertex(f"x{c}_{j}", j)
        for j in range(length - 1):
            b.edge(cell[c, j], cell[c, j + 1])
    for c in range(cols - 1):
        for j in range(length):
            if (j + c) % 2 == 0:
                b.edge(cell[c, j], cell[c + 1, j])
    for c in range(cols):
        b.pendant(cell[c, 0], f"zf{c}", -1)
        b.pendant(cell[c, length - 1], f"zc{c}", +1)


def _triangular(b, rows, cols):
    """Rhombic patch in axial coordinates with height j + i/2.

    Neighbours (i±1, j), (i, j±1), (i+1, j-1), (i-1, j+1); only (i, j±1) change the
    height by a full unit.
    """
    _dims(rows=rows, cols=cols)
    cell = {}
    for i in range(cols):
        for j in range(rows):
            cell[i, j] = b.vertex(f"x{i}_{j}", j + i / 2)
    for (i, j), v in cell.items():
        for di, dj in ((1, 0), (0, 1), (-1, 1)):
            w = cell.get((i + di, j + dj))
            if w is not None:
                b.edge(v, w)
    for i in range(cols):
        b.pendant(cell[i, 0], f"zf{i}", -1)
        b.pendant(cell[i, rows - 1], f"zc{i}", +1)


def _ladder(b, rows, cols, levels):
    """`levels` stacked square lattices joined vertex by vertex at equal height."""
    _dims(rows=rows, cols=cols, levels=levels)
    layers = [_square(b, rows, cols, prefix=f"x{k}_") for k in range(levels)]
    for lower, upper in zip(layers, layers[1:]):
        for key in lower:
            b.edge(lower[key], upper[key])


def generate_lattice(kind: str, *, g: float = 1.0, mu: float = 1.0, q: float = 0.0, **params):
    """Build (graph, HeightCertificate) for one of KINDS.

    Parameters: path(length), tree(depth, branching=2), square(rows, cols),
    hexagonal(rows, cols), triangular(rows, cols), ladder(rows, cols, levels=2).
    """
    b = _Builder()
    try:
        if kind == "path":
            _path(b, params.pop("length"))
        elif kind == "tree":
            _tree(b, params.pop("depth"), params.pop("branching", 2))
        elif kind == "square":
            _square(b, params.pop("rows"), params.pop("cols"))
        elif kind == "hexagonal":
            _hexagonal(b, params.pop("rows"), params.pop("cols"))
        elif kind == "triangular":
            _triangular(b, params.pop("rows"), params.pop("cols"))
        elif kind == "ladder":
            _ladder(b, params.pop("rows"), params.pop("cols"), params.pop("levels", 2))
        else:
            raise InvalidDimensions(f"unknown lattice kind {kind!r}; expected one of {KINDS}")
    except KeyError as exc:
        raise InvalidDimensions(f"{kind} lattice needs parameter {exc}") from None
    if params:
        raise InvalidDimensions(f"unused parameters for {kind}: {sorted(params)}")
    return b.finish(g=g, mu=mu, q=q)
