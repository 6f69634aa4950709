"""Terrain model: a height field composed from simple primitives.

The world floor is a flat plane at z = 0 with optional raised features:
curved bumps (cosine-squared domes, the "obstacle") and flower disks
(flat cylinders on a stem, the landing target).  Height queries outside
the configured bounds clamp to the boundary value.
"""

import math
from dataclasses import dataclass, field


@dataclass
class Bump:
    cx: float
    cy: float
    peak: float      # m
    radius: float    # m

    def height(self, x, y):
        r = math.hypot(x - self.cx, y - self.cy)
        if r >= self.radius:
            return 0.0
        c = math.cos(0.5 * math.pi * r / self.radius)
        return self.peak * c * c


@dataclass
class Flower:
    cx: float
    cy: float
    radius: float        # m, disk radius
    stem_height: float   # m, disk top above the floor

    def height(self, x, y):
        r = math.hypot(x - self.cx, y - self.cy)
        return self.stem_height if r <= self.radius else 0.0


@dataclass
class TerrainField:
    bumps: tuple = ()
    flowers: tuple = ()
    bounds: tuple = ((-2.0, 2.0), (-2.0, 2.0))

    def height(self, x, y) -> float:
        (x0, x1), (y0, y1) = self.bounds
        if x < x0:
            x = x0
        elif x > x1:
            x = x1
        if y < y0:
            y = y0
        elif y > y1:
            y = y1
        h = 0.0
        for b in self.bumps:
            hb = b.height(x, y)
            if hb > h:
                h = hb
        for f in self.flowers:
            hf = f.height(x, y)
            if hf > h:
                h = hf
        return h

    @property
    def max_height(self) -> float:
        h = 0.0
        for b in self.bumps:
            h = max(h, b.peak)
        for f in self.flowers:
            h = max(h, f.stem_height)
        return h

    def raycast(self, origin, direction, max_range: float = 10.0):
        """Length along ``direction`` from ``origin`` to the surface.

        Returns None when there is no intersection within max_range.
        The ray is marched in 2 mm steps (terrain features are much
        wider than that) and the first crossing is refined by bisection
        to well below 1e-12 m, so noise-free range samples equal their
        geometric ideal.
        """
        ox, oy, oz = origin
        dx, dy, dz = direction
        if dz >= 0.0:
            return None  # looking at or above the horizon: no ground hit

        def f(s):
            return oz + s * dz - self.height(ox + s * dx, oy + s * dy)

        # the ray cannot hit before clearing the tallest feature
        s = (oz - self.max_height) / (-dz)
        if s < 0.0:
            s = 0.0
        if f(s) <= 0.0:
            # already at or under the surface
            return s if s <= max_range else None

        step = 0.002
        lo = s
        s += step
        while s <= max_range + step:
            if f(s) <= 0.0:
                hi = s
                while hi - lo > 1e-14:
                    mid = 0.5 * (lo + hi)
                    if f(mid) <= 0.0:
                        hi = mid
                    else:
                        lo = mid
                return hi if hi <= max_range else None
            lo = s
            s += step
        return None


def flat_terrain() -> TerrainField:
    return TerrainField()


def mission_course() -> TerrainField:
    """The scripted-flight course: a curved obstacle then a flower.

    The bump sits mid-course and the flower disk marks the landing
    target at the far end, sized so the full traverse plus vertical
    maneuvers covers well over a meter of flight path.
    """
    return TerrainField(
        bumps=(Bump(cx=0.35, cy=0.0, peak=0.06, radius=0.15),),
        flowers=(Flower(cx=0.80, cy=0.0, radius=0.05, stem_height=0.04),),
    )
