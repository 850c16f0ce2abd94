"""Region boundary tracing on the cell-corner lattice.

Boundaries are emitted as directed unit edges with the region on the left,
walked into closed rings, split into simple rings at pinch corners, and
simplified by merging collinear runs.  A vertex between collinear edges is
kept whenever the label across the boundary changes there, so two regions
sharing a boundary stretch always produce the same vertices along it and
their triangulations meet edge-for-edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regions import RegionMap

# Direction indices in CCW order, so a left turn is +1 mod 4.
_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))
_DIR_INDEX = {d: i for i, d in enumerate(_DIRS)}

Corner = tuple[int, int]


@dataclass
class Ring:
    """Closed lattice polygon; labels[i] is across edge v[i] -> v[i+1]."""

    vertices: list[Corner]
    labels: list[int]
    area2: int  # doubled signed area; positive = CCW = solid


@dataclass
class RegionPolygon:
    region: int
    outer: Ring  # CCW
    holes: list[Ring]  # CW, interior voids of the region


def _area2(vertices: list[Corner]) -> int:
    total = 0
    n = len(vertices)
    for i in range(n):
        x0, z0 = vertices[i]
        x1, z1 = vertices[(i + 1) % n]
        total += x0 * z1 - x1 * z0
    return total


def _collect_edges(regions: RegionMap) -> dict[int, list[tuple[Corner, Corner, int]]]:
    """Directed unit boundary edges (start, end, across-label) per region."""
    labels = regions.labels
    w, d = regions.width, regions.depth
    padded = np.zeros((w + 2, d + 2), dtype=labels.dtype)
    padded[1:-1, 1:-1] = labels

    # (dx, dz, edge start offset, edge end offset) with region on the left
    sides = (
        (0, -1, (0, 0), (1, 0)),
        (1, 0, (1, 0), (1, 1)),
        (0, 1, (1, 1), (0, 1)),
        (-1, 0, (0, 1), (0, 0)),
    )
    per_region: dict[int, list[tuple[Corner, Corner, int]]] = {}
    for dx, dz, (ax, az), (bx, bz) in sides:
        nb = padded[1 + dx : w + 1 + dx, 1 + dz : d + 1 + dz]
        edge_cells = np.nonzero((labels > 0) & (nb != labels))
        own = labels[edge_cells].tolist()
        across = nb[edge_cells].tolist()
        xs, zs = (a.tolist() for a in edge_cells)
        for ix, iz, rid, lab in zip(xs, zs, own, across):
            per_region.setdefault(rid, []).append(
                ((ix + ax, iz + az), (ix + bx, iz + bz), lab)
            )
    return per_region


def _walk_rings(edges: list[tuple[Corner, Corner, int]]) -> list[tuple[list[Corner], list[int]]]:
    """Consume directed edges into closed rings, sharpest left turn first."""
    outgoing: dict[Corner, list[tuple[Corner, int]]] = {}
    for start, end, across in sorted(edges):
        outgoing.setdefault(start, []).append((end, across))

    rings = []
    starts = sorted(outgoing)
    for origin in starts:
        while outgoing.get(origin):
            end, across = outgoing[origin].pop(0)
            verts = [origin]
            labs = [across]
            prev, cur = origin, end
            while cur != origin:
                options = outgoing[cur]
                in_dir = _DIR_INDEX[(cur[0] - prev[0], cur[1] - prev[1])]
                best = None
                for idx, (nxt, lab) in enumerate(options):
                    out_dir = _DIR_INDEX[(nxt[0] - cur[0], nxt[1] - cur[1])]
                    turn = (out_dir - in_dir - 1) % 4  # 0 = left ... 3 = back
                    if best is None or turn < best[0]:
                        best = (turn, idx)
                _, idx = best
                nxt, lab = options.pop(idx)
                verts.append(cur)
                labs.append(lab)
                prev, cur = cur, nxt
            rings.append((verts, labs))
    return rings


def _split_at_pinches(
    verts: list[Corner], labs: list[int]
) -> list[tuple[list[Corner], list[int]]]:
    """Split a closed walk into simple rings wherever a corner repeats."""
    out = []
    path: list[tuple[Corner, int]] = []
    seen: dict[Corner, int] = {}
    for v, lab in zip(verts, labs):
        if v in seen:
            i = seen[v]
            sub = path[i:]
            for u, _ in sub:
                del seen[u]
            del path[i:]
            out.append(([p for p, _ in sub], [l for _, l in sub]))
        seen[v] = len(path)
        path.append((v, lab))
    out.append(([p for p, _ in path], [l for _, l in path]))
    return [r for r in out if len(r[0]) >= 3]


def _merge_collinear(verts: list[Corner], labs: list[int]) -> tuple[list[Corner], list[int]]:
    """Drop vertices between same-direction edges with the same across-label."""
    n = len(verts)
    keep_verts = []
    keep_labs = []
    for i in range(n):
        prev = verts[(i - 1) % n]
        cur = verts[i]
        nxt = verts[(i + 1) % n]
        d_in = (cur[0] - prev[0], cur[1] - prev[1])
        d_out = (nxt[0] - cur[0], nxt[1] - cur[1])
        cross = d_in[0] * d_out[1] - d_in[1] * d_out[0]
        dot = d_in[0] * d_out[0] + d_in[1] * d_out[1]
        if cross == 0 and dot > 0 and labs[(i - 1) % n] == labs[i]:
            continue
        keep_verts.append(cur)
        keep_labs.append(labs[i])
    return keep_verts, keep_labs


def trace_contours(regions: RegionMap) -> list[RegionPolygon]:
    """Outer ring plus holes for every region, vertices on the corner lattice."""
    per_region = _collect_edges(regions)
    polygons = []
    for region in sorted(per_region):
        solids = []
        holes = []
        for verts, labs in _walk_rings(per_region[region]):
            for sub_verts, sub_labs in _split_at_pinches(verts, labs):
                sub_verts, sub_labs = _merge_collinear(sub_verts, sub_labs)
                area2 = _area2(sub_verts)
                if area2 == 0:
                    continue
                ring = Ring(sub_verts, sub_labs, area2)
                (solids if area2 > 0 else holes).append(ring)
        if not solids:
            continue
        if len(solids) == 1:
            polygons.append(RegionPolygon(region, solids[0], holes))
            continue
        # A pinched watershed region can decompose into several solids;
        # nest each hole inside the smallest solid that contains it.
        solids.sort(key=lambda r: r.area2)
        grouped: list[list[Ring]] = [[] for _ in solids]
        for hole in holes:
            (hx, hz), (wx, wz) = hole.vertices[0], hole.vertices[1]
            # Interior lies right of a hole edge; probe half a cell that way.
            ex, ez = wx - hx, wz - hz
            ux = (ex > 0) - (ex < 0)
            uz = (ez > 0) - (ez < 0)
            probe = (hx + ex * 0.5 + uz * 0.5, hz + ez * 0.5 - ux * 0.5)
            for i, solid in enumerate(solids):
                if _point_in_lattice_polygon(probe, solid.vertices):
                    grouped[i].append(hole)
                    break
        for solid, hole_group in zip(solids, grouped):
            polygons.append(RegionPolygon(region, solid, hole_group))
    return polygons


def _point_in_lattice_polygon(p: tuple[float, float], verts: list[Corner]) -> bool:
    """Ray cast for half-integer probes; never hits a lattice vertex edge-on."""
    x, z = p
    inside = False
    n = len(verts)
    for i in range(n):
        x0, z0 = verts[i]
        x1, z1 = verts[(i + 1) % n]
        if (z0 > z) != (z1 > z):
            t = (z - z0) / (z1 - z0)
            if x < x0 + t * (x1 - x0):
                inside = not inside
    return inside
