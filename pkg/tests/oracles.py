"""Independent reference implementations used to freeze expected values.

Everything here is deliberately written from scratch against the geometric
definitions, not imported from the package, so tests compare two separate
code paths.
"""

import math


def rect_overlap_area(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1):
    """Area of the intersection of two axis-aligned rectangles."""
    w = min(ax1, bx1) - max(ax0, bx0)
    h = min(ay1, by1) - max(ay0, by0)
    return max(w, 0.0) * max(h, 0.0)


def disc_overlaps_rect(cx, cy, r, x0, y0, x1, y1):
    """Positive-area overlap of a disc and a rectangle: the rect's closest
    point must be strictly inside the disc."""
    qx = min(max(cx, x0), x1)
    qy = min(max(cy, y0), y1)
    return (qx - cx) ** 2 + (qy - cy) ** 2 < r * r


def cell_occupied(obstacle_dicts, x0, y0, x1, y1):
    """Brute-force occupancy of one cell rectangle from raw obstacle dicts
    (the world-file JSON form)."""
    for obs in obstacle_dicts:
        if obs["shape"] == "cube":
            cx, cy, _ = obs["center"]
            ex, ey, _ = obs["edge_lengths"]
            if rect_overlap_area(
                cx - ex / 2, cy - ey / 2, cx + ex / 2, cy + ey / 2, x0, y0, x1, y1
            ) > 0:
                return True
        else:
            cx, cy, _ = obs["center"]
            if disc_overlaps_rect(cx, cy, obs["radius"], x0, y0, x1, y1):
                return True
    return False


def point_segment_distance(p, a, b):
    """Minimum distance from point p to segment a-b (any dimension)."""
    n = len(p)
    ab = [b[i] - a[i] for i in range(n)]
    ap = [p[i] - a[i] for i in range(n)]
    denom = sum(v * v for v in ab)
    t = 0.0 if denom == 0 else max(0.0, min(1.0, sum(ap[i] * ab[i] for i in range(n)) / denom))
    return math.sqrt(sum((a[i] + t * ab[i] - p[i]) ** 2 for i in range(n)))


def quantum_decomposition(duration):
    """Greedy split of a duration into 3 s and 0.5 s quanta plus remainder."""
    n3 = int(duration / 3.0 + 1e-12)
    rem = duration - 3.0 * n3
    n05 = int(rem / 0.5 + 1e-12)
    return n3, n05, rem - 0.5 * n05


def round_up_half(x):
    """Smallest multiple of 0.5 that is >= x."""
    return math.ceil(x / 0.5 - 1e-12) * 0.5


def integrate_calls(start, calls):
    """Sum velocity * quantum displacements from a starting point."""
    x, y, z = start
    for velocity, quantum in calls:
        x += velocity[0] * quantum
        y += velocity[1] * quantum
        z += velocity[2] * quantum
    return (x, y, z)
