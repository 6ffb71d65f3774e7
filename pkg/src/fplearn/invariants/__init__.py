"""Analytic topological invariants used to label and verify clusters."""

from .dclass import (
    crossing_route,
    dclass_invariants,
    dclass_overlap_product,
    half_bz_chern,
    pfaffian_sign_check,
)
from .hopf import Polyline3, linking_number, preimage_loops
from .quench import QuenchDrive, quench_construction, reference_bloch_field
from .records import (
    InvariantRecord,
    aiii_record,
    dclass_record,
    eq6_sign,
    invariant_record,
    twoda_record,
)
from .windings import (
    PontryaginResidue,
    aiii_gap_windings,
    chern_fixed_t,
    pontryagin_from_gaps,
    winding3,
    winding3_raw,
    winding_equatorial,
)

__all__ = [
    "InvariantRecord",
    "Polyline3",
    "PontryaginResidue",
    "QuenchDrive",
    "aiii_gap_windings",
    "aiii_record",
    "chern_fixed_t",
    "crossing_route",
    "dclass_invariants",
    "dclass_overlap_product",
    "dclass_record",
    "eq6_sign",
    "half_bz_chern",
    "invariant_record",
    "linking_number",
    "pfaffian_sign_check",
    "pontryagin_from_gaps",
    "preimage_loops",
    "quench_construction",
    "reference_bloch_field",
    "twoda_record",
    "winding3",
    "winding3_raw",
    "winding_equatorial",
]
