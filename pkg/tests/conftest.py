import numpy as np
import pytest

from sreplan.scene import Building, Point3, Scene


@pytest.fixture
def square_scene():
    """One 20x20 m building (height 6) in a 100x100 bounds, BS on its roof."""
    b = Building([[40, 40], [60, 40], [60, 60], [40, 60]], height=6.0)
    return Scene(buildings=(b,), bounds=(0.0, 0.0, 100.0, 100.0),
                 bs_position=Point3(50.0, 50.0, 7.5))


@pytest.fixture
def open_scene():
    """No buildings, BS on a mast near the center."""
    return Scene(buildings=(), bounds=(0.0, 0.0, 100.0, 100.0),
                 bs_position=Point3(50.0, 50.0, 7.5))


def random_convex_building(rng, center, radius, height) -> Building:
    k = int(rng.integers(5, 9))
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=k))
    radii = rng.uniform(0.5, 1.0, size=k) * radius
    pts = np.stack([center[0] + radii * np.cos(angles),
                    center[1] + radii * np.sin(angles)], axis=1)
    from scipy.spatial import ConvexHull
    hull = ConvexHull(pts)
    return Building(pts[hull.vertices], height)
