"""Kernel backend selection.

The compiled extension ``tower_thermo._core`` provides the hot loops (slow-down
flow integration with tangent frames, periodic-orbit enumeration).  When it is
missing the pure numpy twin ``_purekernels`` is used; both expose the same
functions and agree to integration/enumeration tolerance.
"""

import os

if os.environ.get("TOWER_THERMO_BACKEND", "").lower() == "python":
    from ._purekernels import BACKEND, flow_map, flow_map_tangent, periodic_logsums
else:  # pragma: no cover - branch depends on build
    try:
        from ._core import BACKEND, flow_map, flow_map_tangent, periodic_logsums
    except ImportError:
        from ._purekernels import BACKEND, flow_map, flow_map_tangent, periodic_logsums

from ._purekernels import dpsi_eval, psi_eval

__all__ = [
    "BACKEND",
    "flow_map",
    "flow_map_tangent",
    "periodic_logsums",
    "psi_eval",
    "dpsi_eval",
]
