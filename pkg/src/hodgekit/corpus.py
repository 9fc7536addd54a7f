"""Fixed test-mesh generators: polygonal circles, flat torus grids, spheres.

These are the only meshes the verification suite runs on; their Betti numbers
and (for circle and torus) spectra are known in closed form.
"""

from __future__ import annotations

import numpy as np

from .complexes import SimplicialComplex, build_complex
from .errors import ParameterError

__all__ = [
    "circle_complex",
    "torus_complex",
    "sphere_complex",
    "corpus_complex",
    "CORPUS_NAMES",
]

TWO_PI = 2.0 * np.pi


def circle_complex(segments: int, radius: float = 1.0) -> SimplicialComplex:
    """Unit circle as a regular polygon embedded in the plane (chord metric)."""
    if segments < 3:
        raise ParameterError("circle needs at least 3 segments")
    theta = TWO_PI * np.arange(segments) / segments
    vertices = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    edges = [(i, (i + 1) % segments) for i in range(segments)]
    return build_complex(
        vertices, edges,
        meta={"kind": "circle", "resolution": segments, "name": f"circle{segments}"},
    )


def torus_complex(resolution: int, lengths=(TWO_PI, TWO_PI)) -> SimplicialComplex:
    """Flat torus as a uniform grid triangulation in quotient coordinates.

    Each grid square is split along the (+1,+1) diagonal; all triangles are
    oriented counterclockwise. Geometry uses the flat metric with
    minimum-image wraparound, so seam triangles are handled exactly.
    """
    n = resolution
    if n < 3:
        raise ParameterError("torus grid needs resolution >= 3")
    lx, ly = float(lengths[0]), float(lengths[1])
    hx, hy = lx / n, ly / n
    vertices = np.array([[i * hx, j * hy] for i in range(n) for j in range(n)])

    def vid(i, j):
        return (i % n) * n + (j % n)

    triangles = []
    for i in range(n):
        for j in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))
    return build_complex(
        vertices, triangles, period=(lx, ly),
        meta={"kind": "torus", "resolution": n, "name": f"torus{n}"},
    )


def _octahedron():
    vertices = np.array([
        [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0], [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0], [0.0, 0.0, -1.0],
    ])
    faces = []
    for x in (0, 1):
        for y in (2, 3):
            for z in (4, 5):
                tri = (x, y, z)
                normal = np.cross(vertices[tri[1]] - vertices[tri[0]],
                                  vertices[tri[2]] - vertices[tri[0]])
                centroid = vertices[list(tri)].mean(axis=0)
                if normal @ centroid < 0:
                    tri = (x, z, y)
                faces.append(tri)
    return vertices, faces


def sphere_complex(refinements: int = 0) -> SimplicialComplex:
    """Octahedron subdivided 1-to-4 ``refinements`` times, vertices on the unit sphere."""
    if refinements < 0:
        raise ParameterError("refinements must be >= 0")
    vertices, faces = _octahedron()
    verts = [v for v in vertices]
    for _ in range(refinements):
        midpoint = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                m = 0.5 * (verts[a] + verts[b])
                m /= np.linalg.norm(m)
                midpoint[key] = len(verts)
                verts.append(m)
            return midpoint[key]

        refined = []
        for (a, b, c) in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            # children inherit the parent's orientation
            refined += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = refined
    return build_complex(
        np.array(verts), faces,
        meta={"kind": "sphere", "refinements": refinements,
              "name": f"sphere{refinements}"},
    )


_CORPUS_BUILDERS = {
    "circle4": lambda: circle_complex(4),
    "circle64": lambda: circle_complex(64),
    "torus8": lambda: torus_complex(8),
    "torus16": lambda: torus_complex(16),
    "torus32": lambda: torus_complex(32),
    "sphere0": lambda: sphere_complex(0),
    "sphere1": lambda: sphere_complex(1),
    "sphere2": lambda: sphere_complex(2),
}

CORPUS_NAMES = tuple(_CORPUS_BUILDERS)


def corpus_complex(name: str) -> SimplicialComplex:
    """Build a corpus mesh by name; see CORPUS_NAMES."""
    try:
        return _CORPUS_BUILDERS[name]()
    except KeyError:
        raise ParameterError(
            f"unknown corpus mesh {name!r}; choose from {CORPUS_NAMES}") from None
