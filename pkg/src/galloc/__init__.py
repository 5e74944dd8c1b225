"""Stable allocations between workers and firms with integer intensities.

Workers rank their edges linearly and carry quotas; firms answer
through choice functions (linear or tableau based) obeying the standard
axioms.  The package computes stable assignments, the rotations that
connect them, the rotation poset encoding the whole lattice through
closed functions, and minimum-cost stable assignments, all checkable
against a brute-force enumerator on small instances.
"""

from .choice import (
    AxiomReport,
    ChoiceEvaluator,
    GaplessReport,
    LinearChoice,
    TableauChoice,
    a3_filling,
    check_axioms,
    check_gapless,
    choice_call_counts,
    evaluator_for,
    instance_gapless_report,
    revealed_prefers,
    total_choice_calls,
)
from .errors import (
    GallocError,
    GaplessnessError,
    InvariantViolation,
    LimitError,
    ValidationError,
)
from .genrand import GeneratorConfig, generate, make_ring_instance
from .lattice import (
    CapacityReductionRun,
    Route,
    RouteStep,
    build_full_route,
    route_pairs,
    route_to_target,
    solve_extremes,
    solve_xmin_by_stages,
    stage1_find_stable,
    stage2_descend_to_xmin,
    xmin_by_capacity_reduction,
)
from .model import (
    Assignment,
    CostVector,
    Edge,
    Instance,
    fraction_str,
    instance_from_dict,
    load_assignment,
    load_instance,
    solution_doc,
)
from .oracle import (
    EnumeratedLattice,
    LatticeReport,
    enumerate_stable,
    verify_lattice_properties,
)
from .poset import (
    ClosedFunction,
    MinCostResult,
    PosetElement,
    RotationPoset,
    build_poset,
    build_poset_general,
    build_poset_gapless,
    enumerate_closed_functions,
    from_closed_function,
    is_closed,
    min_cost_stable,
    to_closed_function,
)
from .rotation import (
    Event,
    Rotation,
    Tandem,
    applicable_rotations,
    apply_rotation,
    build_auxiliary,
    classify_events,
    clean,
    extract_rotations,
    linear_scan_feasible_weight,
    max_feasible_weight,
    weight_budget,
)
from .stability import StabilityReport, check_stability, compare_F, compare_W

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "AxiomReport",
    "CapacityReductionRun",
    "ChoiceEvaluator",
    "ClosedFunction",
    "CostVector",
    "Edge",
    "EnumeratedLattice",
    "Event",
    "GallocError",
    "GaplessReport",
    "GaplessnessError",
    "GeneratorConfig",
    "Instance",
    "InvariantViolation",
    "LatticeReport",
    "LimitError",
    "LinearChoice",
    "MinCostResult",
    "PosetElement",
    "Rotation",
    "RotationPoset",
    "Route",
    "RouteStep",
    "StabilityReport",
    "TableauChoice",
    "Tandem",
    "ValidationError",
    "a3_filling",
    "applicable_rotations",
    "apply_rotation",
    "build_auxiliary",
    "build_full_route",
    "build_poset",
    "build_poset_gapless",
    "build_poset_general",
    "check_axioms",
    "check_gapless",
    "check_stability",
    "choice_call_counts",
    "classify_events",
    "clean",
    "compare_F",
    "compare_W",
    "enumerate_closed_functions",
    "enumerate_stable",
    "evaluator_for",
    "extract_rotations",
    "fraction_str",
    "from_closed_function",
    "generate",
    "instance_from_dict",
    "instance_gapless_report",
    "is_closed",
    "linear_scan_feasible_weight",
    "load_assignment",
    "load_instance",
    "make_ring_instance",
    "max_feasible_weight",
    "min_cost_stable",
    "revealed_prefers",
    "route_pairs",
    "route_to_target",
    "solution_doc",
    "solve_extremes",
    "solve_xmin_by_stages",
    "stage1_find_stable",
    "stage2_descend_to_xmin",
    "to_closed_function",
    "total_choice_calls",
    "verify_lattice_properties",
    "weight_budget",
    "xmin_by_capacity_reduction",
]
