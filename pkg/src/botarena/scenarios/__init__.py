"""Benchmark scenarios; importing this package registers all of them."""
from . import (  # noqa: F401
    arctic_transport,
    discovery,
    foraging,
    material_transport,
    navigation,
    predator_prey,
    random_waypoints,
    rware,
    warehouse,
)
