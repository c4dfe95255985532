"""Piecewise-constant target fields with narrow circular-arc transitions.

Used by the fitting benchmarks: values are constant on each section of the
domain [-1, 1]^2 and ramp linearly across bands of constant normal width
around circular arcs.
"""

import numpy as np

TRANSITION_WIDTH = 0.04

# Single reference arc for the two simple targets: circle through the domain,
# band fully interior.  "Above" the arc means outside the circle.
ARC_CENTER = np.array([0.0, -1.5])
ARC_RADIUS = 2.0

# Arc network of the five-section target: three interior triple junctions,
# five boundary end points, seven arcs (a tree, so sections = boundary ends).
TF3_VERTICES = np.array(
    [
        [-1.0, -0.1],  # 0: left-edge end
        [-0.3, 0.2],  # 1: junction
        [0.3, 0.6],  # 2: junction
        [0.2, -0.5],  # 3: junction
        [0.4, 1.0],  # 4: top-edge end
        [1.0, 0.3],  # 5: right-edge end
        [1.0, -0.4],  # 6: right-edge end
        [0.2, -1.0],  # 7: bottom-edge end
    ]
)
TF3_ARCS = [(0, 1), (1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)]
TF3_RADII = [3.0, 2.0, 2.0, 1.5, 1.5, 1.5, 1.5]
# Side of the perpendicular bisector the circle center sits on (per arc);
# chosen so the five inside/outside section tests partition the domain
# exactly away from the junctions.
TF3_CENTER_SIDES = [-1, -1, 1, 1, 1, 1, 1]

# Sections: bounding arcs listed counterclockwise by the boundary gaps, with a
# representative interior point for the side tests and the plateau value.
TF3_SECTIONS = [
    {"arcs": (0, 2, 6), "probe": (-0.95, -0.95), "value": 0.25},
    {"arcs": (6, 5), "probe": (0.95, -0.95), "value": 0.75},
    {"arcs": (5, 2, 1, 4), "probe": (0.98, -0.05), "value": 0.5},
    {"arcs": (4, 3), "probe": (0.95, 0.95), "value": 1.0},
    {"arcs": (3, 1, 0), "probe": (-0.95, 0.95), "value": 0.0},
]


def arc_center(p, q, radius, side):
    """Center of the circle of given radius through two points.

    ``side`` (+1/-1) picks the perpendicular-bisector half-plane.
    """
    p, q = np.asarray(p, float), np.asarray(q, float)
    mid = 0.5 * (p + q)
    chord = q - p
    d = np.linalg.norm(chord)
    if radius < d / 2:
        raise ValueError("radius shorter than half the chord")
    h = np.sqrt(radius**2 - 0.25 * d**2)
    normal = np.array([-chord[1], chord[0]]) / d
    return mid + side * h * normal


def _tf3_centers():
    return np.array(
        [
            arc_center(TF3_VERTICES[i], TF3_VERTICES[j], r, s)
            for (i, j), r, s in zip(TF3_ARCS, TF3_RADII, TF3_CENTER_SIDES)
        ]
    )


def ramp(signed_distance, width=TRANSITION_WIDTH):
    """Linear ramp from -1 to +1 across a band of total width ``width``."""
    return np.clip(2.0 * signed_distance / width, -1.0, 1.0)


def _arc_h(points, center, radius, width):
    dist = np.linalg.norm(points - center, axis=-1)
    return ramp(dist - radius, width)


def tf1_eval(points, width=TRANSITION_WIDTH):
    """Unit step across the reference arc: 0 below, 1 above the band."""
    points = np.atleast_2d(np.asarray(points, float))
    h = _arc_h(points, ARC_CENTER, ARC_RADIUS, width)
    return 0.5 + 0.5 * h


def tf2_eval(points, width=TRANSITION_WIDTH):
    """Step with laterally varying amplitude above the reference arc."""
    points = np.atleast_2d(np.asarray(points, float))
    upper = np.cos(np.pi * (points[:, 0] + 1.0) / 4.0)
    return upper * tf1_eval(points, width)


def tf3_sections(points, width=TRANSITION_WIDTH):
    """Section indicator functions g_K(x): 1 inside section K, 0 outside,
    partition-of-unity ramps across the arc bands (approximate only near the
    triple junctions, an inherent defect of the product construction)."""
    points = np.atleast_2d(np.asarray(points, float))
    centers = _tf3_centers()
    hs = [
        _arc_h(points, centers[a], TF3_RADII[a], width) * _section_sign_cache()[k][a]
        for k, sec in enumerate(TF3_SECTIONS)
        for a in sec["arcs"]
    ]
    # regroup per section
    gs = []
    pos = 0
    for sec in TF3_SECTIONS:
        n = len(sec["arcs"])
        g = np.ones(points.shape[0])
        for h in hs[pos : pos + n]:
            g = g * (0.5 + 0.5 * h)
        gs.append(g)
        pos += n
    return np.stack(gs, axis=1)


_SIGN_CACHE = None


def _section_sign_cache():
    """Per-section arc side signs (+1 outside the circle, -1 inside),
    determined once from the representative interior points."""
    global _SIGN_CACHE
    if _SIGN_CACHE is None:
        centers = _tf3_centers()
        signs = []
        for sec in TF3_SECTIONS:
            probe = np.asarray(sec["probe"], float)
            row = {}
            for a in sec["arcs"]:
                dist = np.linalg.norm(probe - centers[a])
                row[a] = 1.0 if dist > TF3_RADII[a] else -1.0
            signs.append(row)
        _SIGN_CACHE = signs
    return _SIGN_CACHE


def tf3_eval(points, width=TRANSITION_WIDTH):
    """Five-plateau target: sum of section values times their indicators."""
    g = tf3_sections(points, width)
    vals = np.array([sec["value"] for sec in TF3_SECTIONS])
    return g @ vals


def tf3_junctions():
    """Triple-junction locations (indicator overlap defect neighborhoods)."""
    return TF3_VERTICES[[1, 2, 3]]


TARGETS = {"tf1": tf1_eval, "tf2": tf2_eval, "tf3": tf3_eval}
