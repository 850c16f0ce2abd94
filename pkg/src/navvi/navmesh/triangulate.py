"""Ear-clipping triangulation of region polygons with Delaunay refinement.

Everything here runs on integer lattice coordinates with exact predicates:
orientation and in-circle tests never see floats, so the output is fully
deterministic and the area accounting can be checked exactly.  Holes are
stitched into the outer ring through bridge edges chosen by an exact
visibility search; the doubled bridge edges later surface as ordinary
interior portals because both sides reference the same lattice points.
"""

from __future__ import annotations

from dataclasses import dataclass

from .contours import Corner, RegionPolygon


class TriangulationError(Exception):
    """A region polygon could not be triangulated consistently."""


Triangle = tuple[Corner, Corner, Corner]


def _orient(a: Corner, b: Corner, c: Corner) -> int:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _in_circle(a: Corner, b: Corner, c: Corner, d: Corner) -> int:
    """> 0 iff d lies strictly inside the circumcircle of CCW triangle abc."""
    adx, adz = a[0] - d[0], a[1] - d[1]
    bdx, bdz = b[0] - d[0], b[1] - d[1]
    cdx, cdz = c[0] - d[0], c[1] - d[1]
    ad2 = adx * adx + adz * adz
    bd2 = bdx * bdx + bdz * bdz
    cd2 = cdx * cdx + cdz * cdz
    return (
        adx * (bdz * cd2 - cdz * bd2)
        - adz * (bdx * cd2 - cdx * bd2)
        + ad2 * (bdx * cdz - cdx * bdz)
    )


def _on_segment(p: Corner, a: Corner, b: Corner) -> bool:
    """p collinear with ab assumed; True if p lies within the closed box."""
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def _segments_conflict(a: Corner, b: Corner, u: Corner, v: Corner) -> bool:
    """True if segment ab intersects uv anywhere except at a or b endpoints."""
    if {u, v} == {a, b}:
        return True
    o1 = _orient(a, b, u)
    o2 = _orient(a, b, v)
    o3 = _orient(u, v, a)
    o4 = _orient(u, v, b)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and 0 not in (o1, o2, o3, o4):
        return True
    if o1 == 0 and _on_segment(u, a, b) and u != a and u != b:
        return True
    if o2 == 0 and _on_segment(v, a, b) and v != a and v != b:
        return True
    if o3 == 0 and _on_segment(a, u, v) and a != u and a != v:
        return True
    if o4 == 0 and _on_segment(b, u, v) and b != u and b != v:
        return True
    return False


class _Node:
    __slots__ = ("coord", "prev", "next")

    def __init__(self, coord: Corner):
        self.coord = coord
        self.prev: _Node = self
        self.next: _Node = self


def _link_ring(coords: list[Corner]) -> _Node:
    head = _Node(coords[0])
    prev = head
    for c in coords[1:]:
        node = _Node(c)
        node.prev = prev
        prev.next = node
        prev = node
    prev.next = head
    head.prev = prev
    return head


def _ring_nodes(head: _Node) -> list[_Node]:
    nodes = [head]
    cur = head.next
    while cur is not head:
        nodes.append(cur)
        cur = cur.next
    return nodes


def _ring_edges(head: _Node) -> list[tuple[Corner, Corner]]:
    return [(n.coord, n.next.coord) for n in _ring_nodes(head)]


def _cone_contains(node: _Node, target: Corner) -> bool:
    """True if the direction to target lies strictly inside the interior
    cone of this ring visit (between its outgoing edge and reversed incoming
    edge, sweeping counterclockwise).  Interior sits left of travel, which
    holds for the CCW outer ring and CW hole rings alike."""
    c = node.coord
    span = _orient(c, node.next.coord, node.prev.coord)
    out_side = _orient(c, node.next.coord, target)
    in_side = _orient(c, target, node.prev.coord)
    if span > 0:
        return out_side > 0 and in_side > 0
    return out_side > 0 or in_side > 0


def _find_bridge(
    outer: _Node,
    hole: _Node,
    blocking: list[tuple[Corner, Corner]],
) -> tuple[_Node, _Node]:
    """Closest mutually visible (outer node, hole node) pair, exact test.

    Visibility alone is not enough: the composite ring pinches wherever two
    visits share a coordinate, and a bridge anchored at the visit whose
    interior cone does not contain the bridge direction interleaves the
    lobes even though no edges cross.  The cone tests keep every splice a
    clean split of one visit's cone, so the ring stays weakly simple.
    """
    outer_nodes = _ring_nodes(outer)
    hole_nodes = _ring_nodes(hole)
    candidates = []
    for b in outer_nodes:
        bx, bz = b.coord
        for m in hole_nodes:
            dx, dz = m.coord[0] - bx, m.coord[1] - bz
            candidates.append((dx * dx + dz * dz, b.coord, m.coord, b, m))
    candidates.sort(key=lambda c: c[:3])
    for d2, bc, mc, b, m in candidates:
        if d2 == 0:
            # Relinking through a shared corner nests the whole hole walk
            # inside this visit's cone, so both hole edge rays must fit.
            if _cone_contains(b, m.next.coord) and _cone_contains(b, m.prev.coord):
                return b, m
            continue
        if not (_cone_contains(b, mc) and _cone_contains(m, bc)):
            continue
        if not any(_segments_conflict(bc, mc, u, v) for u, v in blocking):
            return b, m
    raise TriangulationError("no visible bridge between hole and outer ring")


def _splice_hole(b: _Node, m: _Node) -> None:
    """Stitch the hole ring into the outer ring at bridge b-m."""
    if b.coord == m.coord:
        # Rings already touch; relink through the shared corner, no new edges.
        b_next = b.next
        b.next = m.next
        m.next.prev = b
        m.next = b_next
        b_next.prev = m
        return
    b2 = _Node(b.coord)
    m2 = _Node(m.coord)
    m_prev = m.prev
    b_next = b.next
    b.next = m
    m.prev = b
    m_prev.next = m2
    m2.prev = m_prev
    m2.next = b2
    b2.prev = m2
    b2.next = b_next
    b_next.prev = b2


def _eliminate_holes(poly: RegionPolygon) -> _Node:
    outer = _link_ring(poly.outer.vertices)
    holes = [_link_ring(h.vertices) for h in poly.holes]
    # Leftmost holes first keeps bridge choices independent of input order.
    holes.sort(key=lambda h: min(n.coord for n in _ring_nodes(h)))
    pending = list(holes)
    while pending:
        hole = pending.pop(0)
        blocking = _ring_edges(outer) + [
            e for h in pending for e in _ring_edges(h)
        ] + _ring_edges(hole)
        b, m = _find_bridge(outer, hole, blocking)
        _splice_hole(b, m)
    return outer


def _is_ear(p: _Node, c: _Node, n: _Node, nodes: list[_Node]) -> bool:
    a, b, d = p.coord, c.coord, n.coord
    if _orient(a, b, d) <= 0:
        return False
    corner_coords = (a, b, d)
    for m in nodes:
        mc = m.coord
        if m is p or m is c or m is n or mc in corner_coords:
            continue
        if (
            _orient(a, b, mc) >= 0
            and _orient(b, d, mc) >= 0
            and _orient(d, a, mc) >= 0
        ):
            return False
    # Bridged rings pinch at repeated coordinates, so the sweep above cannot
    # see a lobe slipping in through a corner duplicate.  The diagonal must
    # therefore clear every ring edge.  Touching at shared coordinates is
    # fine.  An edge coinciding with the diagonal is legal only when it runs
    # the opposite way (d, a): that closes a bridge double into a zero-width
    # channel, while a same-direction twin would double-cover another lobe.
    for m in nodes:
        u, v = m.coord, m.next.coord
        if (u, v) == (d, a):
            continue
        if _segments_conflict(a, d, u, v):
            return False
    return True


def _ring_area2(nodes: list[_Node]) -> int:
    total = 0
    for node in nodes:
        x0, z0 = node.coord
        x1, z1 = node.next.coord
        total += x0 * z1 - x1 * z0
    return total


def _earcut(head: _Node) -> list[Triangle]:
    triangles: list[Triangle] = []
    nodes = _ring_nodes(head)
    count = len(nodes)
    remaining2 = _ring_area2(nodes)
    cur = head
    since_last_clip = 0
    while count > 3:
        if remaining2 == 0:
            # Doubled bridge and pinch edges can leave a zero-width residue
            # that still has >3 visits; any "ear" cut from it would cover
            # territory some earlier triangle already owns.
            return triangles
        p, n = cur.prev, cur.next
        if _is_ear(p, cur, n, nodes):
            tri = (p.coord, cur.coord, n.coord)
            triangles.append(tri)
            remaining2 -= _orient(*tri)
            p.next = n
            n.prev = p
            nodes.remove(cur)
            count -= 1
            cur = n
            since_last_clip = 0
            continue
        cur = n
        since_last_clip += 1
        if since_last_clip > count:
            # A full lap with no ear: drop a collinear corner if one exists,
            # which changes nothing geometrically, then keep scanning.
            for cand in nodes:
                if _orient(cand.prev.coord, cand.coord, cand.next.coord) == 0:
                    cand.prev.next = cand.next
                    cand.next.prev = cand.prev
                    nodes.remove(cand)
                    count -= 1
                    cur = cand.next
                    since_last_clip = 0
                    break
            else:
                raise TriangulationError("ear search stalled")
    a, b, c = nodes[0].coord, nodes[1].coord, nodes[2].coord
    final2 = _orient(a, b, c)
    if final2 > 0:
        triangles.append((a, b, c))
    elif final2 < 0:
        raise TriangulationError("negative residual ring after ear clipping")
    return triangles


def _delaunay_flips(
    triangles: list[Triangle], constrained: set[frozenset[Corner]]
) -> list[Triangle]:
    tris: dict[int, Triangle | None] = dict(enumerate(triangles))

    edge_map: dict[frozenset[Corner], list[int]] = {}

    def register(tid: int) -> None:
        t = tris[tid]
        for i in range(3):
            key = frozenset((t[i], t[(i + 1) % 3]))
            edge_map.setdefault(key, []).append(tid)

    for tid in tris:
        register(tid)

    queue = [key for key, owners in edge_map.items() if len(owners) == 2]
    budget = 64 * max(1, len(triangles)) ** 2
    while queue:
        budget -= 1
        if budget < 0:
            raise TriangulationError("delaunay flipping did not settle")
        key = queue.pop()
        if key in constrained or len(key) != 2:
            continue
        owners = [t for t in edge_map.get(key, ()) if tris.get(t) is not None]
        if len(owners) != 2:
            continue
        t1, t2 = owners
        u, v = tuple(key)
        p = next(c for c in tris[t1] if c not in key)
        q = next(c for c in tris[t2] if c not in key)
        if p == q:
            continue
        a, b, c = tris[t1]
        if _in_circle(a, b, c, q) <= 0:
            continue
        # Flip only across a strictly convex quadrilateral.
        if _orient(u, q, p) <= 0 or _orient(q, v, p) <= 0:
            u, v = v, u
            if _orient(u, q, p) <= 0 or _orient(q, v, p) <= 0:
                continue
        new1 = (u, q, p)
        new2 = (q, v, p)
        tris[t1] = new1
        tris[t2] = new2
        for stale in (t1, t2):
            for owners_list in edge_map.values():
                while stale in owners_list:
                    owners_list.remove(stale)
        register(t1)
        register(t2)
        for t in (new1, new2):
            for i in range(3):
                k = frozenset((t[i], t[(i + 1) % 3]))
                if k != frozenset((p, q)):
                    queue.append(k)
    return [t for t in tris.values() if t is not None]


def triangulate_polygon(poly: RegionPolygon) -> list[Triangle]:
    """CCW triangles exactly covering the polygon; exact area is verified."""
    expected2 = poly.outer.area2 + sum(h.area2 for h in poly.holes)
    if len(poly.outer.vertices) == 3 and not poly.holes:
        triangles = [tuple(poly.outer.vertices)]
    else:
        head = _eliminate_holes(poly)
        triangles = _earcut(head)
    got2 = sum(_orient(a, b, c) for a, b, c in triangles)
    if got2 != expected2:
        raise TriangulationError(
            f"region {poly.region}: triangulated area {got2} != polygon {expected2}"
        )
    constrained: set[frozenset[Corner]] = set()
    for ring in (poly.outer, *poly.holes):
        verts = ring.vertices
        for i in range(len(verts)):
            constrained.add(frozenset((verts[i], verts[(i + 1) % len(verts)])))
    return _delaunay_flips(triangles, constrained)
