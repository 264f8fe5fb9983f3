#!/usr/bin/env python3
"""Regenerates the bundled unstructured sample meshes.

Each mesh is a Delaunay triangulation of a jittered grid on the unit
square, written in the repo's mesh JSON schema. The right side (x = 1)
is tagged Neumann, everything else DirichletZero. Deterministic: fixed
seeds, so reruns are byte-identical.
"""

import json
import pathlib

import numpy as np
from scipy.spatial import Delaunay

HERE = pathlib.Path(__file__).resolve().parent


def make_mesh(n, seed, jitter=0.22):
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    h = 1.0 / n
    interior = (pts[:, 0] > 1e-12) & (pts[:, 0] < 1 - 1e-12) & \
               (pts[:, 1] > 1e-12) & (pts[:, 1] < 1 - 1e-12)
    pts[interior] += rng.uniform(-jitter * h, jitter * h, size=(interior.sum(), 2))
    tri = Delaunay(pts)
    simplices = []
    for t in tri.simplices:
        a, b, c = pts[t]
        area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        if abs(area) < 1e-14:
            raise RuntimeError("degenerate triangle")
        simplices.append([int(t[0]), int(t[1]), int(t[2])] if area > 0
                         else [int(t[0]), int(t[2]), int(t[1])])

    edge_count = {}
    for t in simplices:
        for k in range(3):
            e = tuple(sorted((t[k], t[(k + 1) % 3])))
            edge_count[e] = edge_count.get(e, 0) + 1
    boundary = []
    for (a, b), cnt in sorted(edge_count.items()):
        if cnt != 1:
            continue
        mx = 0.5 * (pts[a, 0] + pts[b, 0])
        tag = "Neumann" if mx > 1 - 1e-9 else "DirichletZero"
        boundary.append([a, b, tag])

    return {
        "vertices": [[float(x), float(y)] for x, y in pts],
        "triangles": simplices,
        "boundary": boundary,
    }


def write(name, mesh):
    path = HERE / name
    with open(path, "w") as f:
        json.dump(mesh, f, separators=(",", ":"))
        f.write("\n")
    print(f"{name}: {len(mesh['vertices'])} vertices, "
          f"{len(mesh['triangles'])} triangles")


if __name__ == "__main__":
    # tiny sample used by the loader invariant tests (~20 triangles)
    write("unstructured_small.json", make_mesh(3, seed=7))
    # medium/large samples used by the hierarchy-statistics checks
    write("unstructured_medium.json", make_mesh(16, seed=11))
    write("unstructured_large.json", make_mesh(40, seed=13))
