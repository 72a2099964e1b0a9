"""Half-edge representation of bicolored triangulations with a Dobrushin boundary.

Every half-edge ``h`` runs from ``origin[h]`` to ``dest[h]`` and has the face
``face[h]`` on its left; ``nxt[h]`` is the following half-edge of that face.
Face 0 is the external face. The boundary is stored by its external
half-edges: ``root`` is the external half-edge of the first plus edge, so
the root vertex (where the minus arc ends and the plus arc begins) is
``dest[root]``. Vertices are explicit integer ids.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple

PLUS, MINUS = 1, -1

EXTERNAL = "external"
INTERNAL = "internal"
HOLE = "hole"
UNEXPLORED = "unexplored"
OUTSIDE = "outside"
FACE_KINDS = (EXTERNAL, INTERNAL, HOLE, UNEXPLORED, OUTSIDE)

MAP_FORMAT = "ISING-MAP v1"


class MonochromaticBoundary(ValueError):
    """The boundary has a single spin, so there is no interface endpoint."""


@dataclass
class ColoredPlanarMap:
    twin: List[int]
    nxt: List[int]
    origin: List[int]
    dest: List[int]
    face: List[int]
    face_spin: List[int]
    face_kind: List[str]
    boundary_spin: Dict[int, int] = field(default_factory=dict)
    root: int = -1
    p: int = 0
    q: int = 0

    @property
    def n_half_edges(self) -> int:
        return len(self.twin)

    @property
    def root_vertex(self) -> Optional[int]:
        return self.dest[self.root] if self.root >= 0 else None

    def vertices(self) -> Set[int]:
        return set(self.origin) | set(self.dest)

    def n_edges(self) -> int:
        paired = sum(1 for h, t in enumerate(self.twin) if t > h)
        return paired + sum(1 for t in self.twin if t < 0)

    def faces_in_use(self) -> Set[int]:
        return set(self.face)

    def internal_faces(self) -> List[int]:
        return sorted(f for f in self.faces_in_use() if self.face_kind[f] == INTERNAL)

    def side_spin(self, h: int) -> int:
        """Spin seen on the left of ``h``: the face spin, or the boundary condition outside."""
        f = self.face[h]
        if self.face_kind[f] == INTERNAL:
            return self.face_spin[f]
        return self.boundary_spin.get(h, 0)

    def is_monochromatic(self, h: int) -> bool:
        t = self.twin[h]
        if t < 0:
            return False
        return self.side_spin(h) == self.side_spin(t) != 0

    def face_cycle(self, f: int) -> List[int]:
        start = next(h for h, g in enumerate(self.face) if g == f)
        cycle = [start]
        h = self.nxt[start]
        while h != start and h >= 0:
            cycle.append(h)
            h = self.nxt[h]
        return cycle

    def boundary_cycle(self) -> List[int]:
        """External half-edges in boundary order starting at the root (counterclockwise)."""
        if self.root < 0:
            return []
        out = [self.root]
        prev = {self.nxt[h]: h for h in range(self.n_half_edges) if self.face[h] == self.face[self.root]}
        h = prev.get(self.root, -1)
        while h >= 0 and h != self.root:
            out.append(h)
            h = prev.get(h, -1)
        return out

    def outgoing(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for h, v in enumerate(self.origin):
            out.setdefault(v, []).append(h)
        return out


class MapBuilder:
    """Mutable half-edge store used while a map is being constructed."""

    def __init__(self) -> None:
        self.twin: List[int] = []
        self.nxt: List[int] = []
        self.origin: List[int] = []
        self.dest: List[int] = []
        self.face: List[int] = []
        self.face_spin: List[int] = [0]
        self.face_kind: List[str] = [EXTERNAL]
        self.boundary_spin: Dict[int, int] = {}
        self.root = -1
        self.n_vertices = 0

    def new_vertex(self) -> int:
        self.n_vertices += 1
        return self.n_vertices - 1

    def new_face(self, spin: int, kind: str = INTERNAL) -> int:
        self.face_spin.append(spin)
        self.face_kind.append(kind)
        return len(self.face_spin) - 1

    def new_half_edge(self, origin: int, dest: int, face: int) -> int:
        self.twin.append(-1)
        self.nxt.append(-1)
        self.origin.append(origin)
        self.dest.append(dest)
        self.face.append(face)
        return len(self.twin) - 1

    def glue(self, a: int, b: int) -> None:
        if self.twin[a] >= 0 or self.twin[b] >= 0:
            raise RuntimeError(f"half-edges {a} and {b} are already paired")
        if self.origin[a] != self.dest[b] or self.dest[a] != self.origin[b]:
            raise RuntimeError(f"cannot glue {a} to {b}: endpoints differ")
        self.twin[a] = b
        self.twin[b] = a

    def polygon(self, spins: List[int]) -> List[int]:
        """External boundary of a polygon; returns its slots in counterclockwise order.

        Slot ``i`` is the external half-edge of boundary edge ``v_i -> v_(i+1)``.
        """
        L = len(spins)
        vs = [self.new_vertex() for _ in range(L)]
        slots = [self.new_half_edge(vs[(i + 1) % L], vs[i], 0) for i in range(L)]
        for i, h in enumerate(slots):
            self.nxt[h] = slots[i - 1]
            self.boundary_spin[h] = spins[i]
        self.root = slots[0]
        return slots

    def reveal(self, slot: int, spin: int, apex: Optional[int] = None) -> Tuple[int, int, int]:
        """Glues a triangle on ``slot``; returns its half-edges ``(a, b, c)``.

        ``a`` is glued to ``slot``; ``b`` and ``c`` are left open. A new
        vertex is created unless ``apex`` is given.
        """
        v0, v1 = self.origin[slot], self.dest[slot]
        f = self.new_face(spin)
        w = self.new_vertex() if apex is None else apex
        a = self.new_half_edge(v1, v0, f)
        b = self.new_half_edge(v0, w, f)
        c = self.new_half_edge(w, v1, f)
        self.nxt[a], self.nxt[b], self.nxt[c] = b, c, a
        self.glue(a, slot)
        return a, b, c

    def close(self, slots: List[int], kind: str, chain: bool = True) -> int:
        """Materializes the region behind ``slots`` as a single face of the given kind."""
        f = self.new_face(0, kind)
        hs = [self.new_half_edge(self.dest[s], self.origin[s], f) for s in slots]
        for s, h in zip(slots, hs):
            self.glue(h, s)
        for i, h in enumerate(hs):
            if chain or i + 1 < len(hs):
                self.nxt[h] = hs[(i + 1) % len(hs)]
        return f

    def freeze(self, p: int = 0, q: int = 0) -> ColoredPlanarMap:
        return ColoredPlanarMap(
            twin=list(self.twin),
            nxt=list(self.nxt),
            origin=list(self.origin),
            dest=list(self.dest),
            face=list(self.face),
            face_spin=list(self.face_spin),
            face_kind=list(self.face_kind),
            boundary_spin=dict(self.boundary_spin),
            root=self.root,
            p=p,
            q=q,
        )


def empty_map() -> ColoredPlanarMap:
    """The vertex map: no edges, only the root vertex."""
    return ColoredPlanarMap([], [], [], [], [], [0], [EXTERNAL])


# ==================== Canonical form, balls, distance ====================


def canonical_form(m: ColoredPlanarMap) -> Tuple[Any, ...]:
    """Root-preserving canonical form: breadth-first half-edge labeling from the root."""
    if m.root < 0:
        return ()
    label = {m.root: 0}
    order = [m.root]
    i = 0
    while i < len(order):
        h = order[i]
        i += 1
        for g in (m.nxt[h], m.twin[h]):
            if g >= 0 and g not in label:
                label[g] = len(order)
                order.append(g)
    return tuple(
        (
            label.get(m.nxt[h], -1),
            label.get(m.twin[h], -1),
            m.face_kind[m.face[h]],
            m.side_spin(h),
        )
        for h in order
    )


def vertex_distances(m: ColoredPlanarMap, source: int) -> Dict[int, int]:
    adj: Dict[int, List[int]] = {}
    for a, b in zip(m.origin, m.dest):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


@dataclass
class Ball:
    map: ColoredPlanarMap
    radius: int
    theta: Optional[int] = None
    thetas: Dict[int, int] = field(default_factory=dict)

    def canonical(self) -> Tuple[Any, ...]:
        return canonical_form(self.map)

    def n_faces(self) -> int:
        return len(self.map.internal_faces())


def ball(m: ColoredPlanarMap, r: int) -> Ball:
    """Internal faces adjacent to a vertex within distance ``r - 1`` of the root vertex.

    The rest of the map is merged into ``outside`` faces; external half-edges
    on the ball's border keep their boundary spins.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    if r == 0 or m.root < 0:
        return Ball(empty_map(), r)
    dist = vertex_distances(m, m.root_vertex)
    near = {v for v, d in dist.items() if d <= r - 1}
    kept_faces = {
        m.face[h]
        for h in range(m.n_half_edges)
        if m.face_kind[m.face[h]] == INTERNAL and m.origin[h] in near
    }

    def kept(h: int) -> bool:
        return h >= 0 and m.face[h] in kept_faces

    inner = [h for h in range(m.n_half_edges) if kept(h)]
    border = [m.twin[h] for h in inner if m.twin[h] >= 0 and not kept(m.twin[h])]
    keep = inner + border
    if not inner:
        return Ball(empty_map(), r)
    index = {h: i for i, h in enumerate(keep)}

    def border_next(t: int) -> int:
        g = m.nxt[t]
        for _ in range(m.n_half_edges + 1):
            if g < 0:
                return -1
            tg = m.twin[g]
            if tg < 0 or kept(tg):
                return g
            g = m.nxt[tg]
        raise RuntimeError("border walk did not close")

    face_map: Dict[int, int] = {}
    face_spin: List[int] = [0]
    face_kind: List[str] = [OUTSIDE]
    for f in sorted(kept_faces):
        face_map[f] = len(face_spin)
        face_spin.append(m.face_spin[f])
        face_kind.append(INTERNAL)
    twin, nxt, origin, dest, face = [], [], [], [], []
    boundary: Dict[int, int] = {}
    for h in keep:
        t = m.twin[h]
        twin.append(index.get(t, -1) if t >= 0 else -1)
        if kept(h):
            nxt.append(index[m.nxt[h]])
            face.append(face_map[m.face[h]])
        else:
            g = border_next(h)
            nxt.append(index.get(g, -1) if g >= 0 else -1)
            face.append(0)
            if h in m.boundary_spin:
                boundary[index[h]] = m.boundary_spin[h]
        origin.append(m.origin[h])
        dest.append(m.dest[h])
    root = index.get(m.root, -1)
    if root < 0:
        # the root edge is not kept: use any kept half-edge ending at the root vertex
        root = next(index[h] for h in keep if m.dest[h] == m.root_vertex)
    sub = ColoredPlanarMap(twin, nxt, origin, dest, face, face_spin, face_kind, boundary, root, m.p, m.q)
    return Ball(sub, r)


def local_distance(m1: ColoredPlanarMap, m2: ColoredPlanarMap, r_max: int = 64) -> Fraction:
    """``2^-R`` with ``R`` the largest radius at which the two balls agree (0 if they always do)."""
    total1, total2 = len(m1.internal_faces()), len(m2.internal_faces())
    for r in range(1, r_max + 1):
        b1, b2 = ball(m1, r), ball(m2, r)
        if b1.canonical() != b2.canonical():
            return Fraction(1, 2 ** (r - 1))
        if b1.n_faces() == total1 and b2.n_faces() == total2:
            return Fraction(0)
    return Fraction(1, 2**r_max)


# ==================== Validation ====================


def validate_map(
    m: ColoredPlanarMap, nu: Any = None, expected: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Euler formula, triangular faces, Dobrushin boundary and the weight ``nu^#mono``."""
    expected = expected or {}
    V = len(m.vertices()) if m.n_half_edges else 1
    E = m.n_edges()
    F = len(m.faces_in_use()) if m.n_half_edges else 1
    internal = m.internal_faces()
    bad_degrees = [f for f in internal if len(m.face_cycle(f)) != 3]
    unpaired = [h for h, t in enumerate(m.twin) if t < 0]

    cycle = m.boundary_cycle()
    word = [m.boundary_spin.get(h, 0) for h in cycle]
    p = sum(1 for s in word if s == PLUS)
    q = sum(1 for s in word if s == MINUS)
    dobrushin = word == [PLUS] * p + [MINUS] * q
    boundary_vertices = [m.dest[h] for h in cycle]
    simple = len(set(boundary_vertices)) == len(boundary_vertices)

    mono = sum(1 for h, t in enumerate(m.twin) if t > h and m.is_monochromatic(h))
    report: Dict[str, Any] = {
        "V": V,
        "E": E,
        "F": F,
        "euler": V - E + F == 2,
        "triangular": not bad_degrees,
        "paired": not unpaired,
        "boundary": (p, q),
        "dobrushin": dobrushin and (p, q) == (m.p, m.q),
        "simple_boundary": simple,
        "faces": len(internal),
        "monochromatic_edges": mono,
    }
    if nu is not None:
        report["weight"] = nu**mono
    checks = ["euler", "triangular", "paired", "dobrushin", "simple_boundary"]
    for key in ("p", "q"):
        if key in expected:
            report[f"expected_{key}"] = expected[key] == (p if key == "p" else q)
            checks.append(f"expected_{key}")
    if "n" in expected:
        report["expected_n"] = expected["n"] == len(internal)
        checks.append("expected_n")
    if "mono" in expected:
        report["expected_mono"] = expected["mono"] == mono
        checks.append("expected_mono")
    report["all_pass"] = all(report[c] for c in checks)
    return report


# ==================== Interfaces ====================


@dataclass
class InterfacePath:
    half_edges: List[int]
    vertices: List[int]

    @property
    def length(self) -> int:
        return len(self.half_edges)


def interface_endpoints(m: ColoredPlanarMap) -> Tuple[int, int]:
    """Root vertex and the far junction vertex where the plus arc meets the minus arc."""
    if m.p == 0 or m.q == 0:
        raise MonochromaticBoundary(f"boundary ({m.p},{m.q}) has no interface")
    cycle = m.boundary_cycle()
    return m.dest[cycle[0]], m.origin[cycle[m.p - 1]]


def trace_leftmost_interface(m: ColoredPlanarMap) -> InterfacePath:
    """Leftmost simple path of non-monochromatic edges from the root vertex to the far junction.

    At each vertex the candidate edges are tried from the sharpest left turn
    clockwise, starting from the minus boundary edge that enters the root;
    dead ends are backtracked.

    Raises:
        MonochromaticBoundary: ``p == 0`` or ``q == 0``.
    """
    start, target = interface_endpoints(m)
    cycle = m.boundary_cycle()
    arrival = m.twin[cycle[-1]]
    if arrival < 0:
        raise ValueError("the map has an open boundary edge at the root")

    def candidates(h: int) -> List[int]:
        back = m.twin[h]
        out = []
        g = m.nxt[h]
        while g >= 0 and g != back and len(out) <= m.n_half_edges:
            out.append(g)
            t = m.twin[g]
            if t < 0:
                break
            g = m.nxt[t]
        # going back is only useful at the root, where the arrival edge is a boundary edge
        if back >= 0:
            out.append(back)
        return out

    visited = {start}
    path: List[int] = []
    stack = [iter(candidates(arrival))]
    while stack:
        advanced = False
        for g in stack[-1]:
            v = m.dest[g]
            if v in visited or m.is_monochromatic(g) or m.twin[g] < 0:
                continue
            path.append(g)
            if v == target:
                return InterfacePath(path, [start] + [m.dest[h] for h in path])
            visited.add(v)
            stack.append(iter(candidates(g)))
            advanced = True
            break
        if not advanced:
            stack.pop()
            if path:
                path.pop()
    raise RuntimeError("no interface path found")


def interface_separates(m: ColoredPlanarMap, path: InterfacePath) -> bool:
    """No dual path joins the plus boundary to the minus boundary avoiding ``path``."""
    cut = set(path.half_edges) | {m.twin[h] for h in path.half_edges}
    parent: Dict[Any, Any] = {}

    def find(x: Any) -> Any:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: Any, b: Any) -> None:
        parent[find(a)] = find(b)

    def node(h: int) -> Any:
        if m.face_kind[m.face[h]] == INTERNAL:
            return ("face", m.face[h])
        return "plus" if m.boundary_spin.get(h) == PLUS else "minus"

    for h, t in enumerate(m.twin):
        if t > h and h not in cut:
            union(node(h), node(t))
    return find("plus") != find("minus")


# ==================== Serialization ====================


def map_text(m: ColoredPlanarMap, seed: Optional[int] = None) -> str:
    """Renders ``m`` in the line format ``ISING-MAP v1``.

    Header ``boundary p q faces n half_edges H root r``, an optional
    ``seed S`` line for sampled maps, then one
    ``he id twin next face origin dest bspin`` line per half-edge and one
    ``face id kind spin`` line per face.
    """
    lines = [
        MAP_FORMAT,
        f"boundary {m.p} {m.q} faces {len(m.internal_faces())} "
        f"half_edges {m.n_half_edges} root {m.root}",
    ]
    if seed is not None:
        lines.append(f"seed {int(seed)}")
    for h in range(m.n_half_edges):
        lines.append(
            f"he {h} {m.twin[h]} {m.nxt[h]} {m.face[h]} {m.origin[h]} {m.dest[h]} "
            f"{m.boundary_spin.get(h, 0)}"
        )
    for f, (kind, spin) in enumerate(zip(m.face_kind, m.face_spin)):
        lines.append(f"face {f} {kind} {spin}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def dump_map(m: ColoredPlanarMap, path: Any, seed: Optional[int] = None) -> None:
    Path(path).write_text(map_text(m, seed), encoding="utf-8")


def load_map(path: Any) -> ColoredPlanarMap:
    """Reads a map written by ``dump_map``.

    Raises:
        ValueError: Wrong header or malformed lines.
    """
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or lines[0] != MAP_FORMAT:
        raise ValueError(f"not an {MAP_FORMAT} file: {path}")
    try:
        head = lines[1].split()
        p, q, H, root = int(head[1]), int(head[2]), int(head[6]), int(head[8])
        twin, nxt, origin, dest, face = [0] * H, [0] * H, [0] * H, [0] * H, [0] * H
        boundary: Dict[int, int] = {}
        kinds: Dict[int, Tuple[str, int]] = {}
        for ln in lines[2:]:
            parts = ln.split()
            if parts[0] == "he":
                h = int(parts[1])
                twin[h], nxt[h], face[h] = int(parts[2]), int(parts[3]), int(parts[4])
                origin[h], dest[h] = int(parts[5]), int(parts[6])
                if int(parts[7]):
                    boundary[h] = int(parts[7])
            elif parts[0] == "face":
                if parts[2] not in FACE_KINDS:
                    raise ValueError(f"unknown face kind {parts[2]!r}")
                kinds[int(parts[1])] = (parts[2], int(parts[3]))
            elif parts[0] not in ("seed", "end"):
                raise ValueError(f"unexpected line {ln!r}")
    except (IndexError, ValueError) as e:
        raise ValueError(f"malformed {MAP_FORMAT} file {path}: {e}") from e
    n_faces = max(kinds) + 1 if kinds else 1
    face_kind = [kinds.get(f, (OUTSIDE, 0))[0] for f in range(n_faces)]
    face_spin = [kinds.get(f, (OUTSIDE, 0))[1] for f in range(n_faces)]
    return ColoredPlanarMap(twin, nxt, origin, dest, face, face_spin, face_kind, boundary, root, p, q)


def map_seed(path: Any) -> Optional[int]:
    """Seed recorded in a map file, or None for maps written without one."""
    for ln in Path(path).read_text(encoding="utf-8").splitlines():
        parts = ln.split()
        if len(parts) == 2 and parts[0] == "seed":
            return int(parts[1])
    return None
