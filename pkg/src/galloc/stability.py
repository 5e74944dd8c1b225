"""Acceptability, blocking edges, stability, and the two side orders.

An assignment is acceptable when every vertex's choice function keeps
its restriction unchanged.  An edge with spare capacity is interesting
for an endpoint if one more unit there would change what that endpoint
keeps.  A blocking edge is interesting for both endpoints; a stable
assignment is acceptable and free of blocking edges.

Acceptable assignments are compared sidewise: x is below y on the firm
side when every firm, offered the union, keeps exactly its share of y.
The worker-side order is defined the same way over workers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .choice import evaluator_for, interesting_at, join
from .errors import GallocError
from .model import Assignment, Instance


def is_acceptable(inst: Instance, x: Assignment) -> bool:
    return not unacceptable_vertices(inst, x)


def unacceptable_vertices(inst: Instance, x: Assignment) -> tuple[str, ...]:
    bad = []
    for v in inst.workers + inst.firms:
        if not evaluator_for(inst, v).accepts(inst.local_values(x, v)):
            bad.append(v)
    return tuple(bad)


def is_interesting(inst: Instance, x: Assignment, v: str, eid: str) -> bool:
    """Whether vertex v would keep one more unit on edge eid.

    Saturated edges are never interesting.  The restriction of x to v
    must be accepted by v's choice function.
    """
    return interesting_at(
        evaluator_for(inst, v), inst.local_values(x, v), inst.local_pos(v, eid)
    )


def blocking_edges(inst: Instance, x: Assignment) -> tuple[str, ...]:
    """Edges interesting for both endpoints, canonical order."""
    out = []
    for e in inst.edges:
        if is_interesting(inst, x, e.worker, e.id) and is_interesting(
            inst, x, e.firm, e.id
        ):
            out.append(e.id)
    return tuple(out)


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of a stability check.

    Attributes:
        stable: acceptable and no blocking edge.
        unacceptable_vertices: vertices rejecting their restriction.
        blocking: blocking edge ids; only computed when acceptable.
    """

    stable: bool
    unacceptable_vertices: tuple[str, ...]
    blocking: tuple[str, ...]


def check_stability(inst: Instance, x: Assignment) -> StabilityReport:
    bad = unacceptable_vertices(inst, x)
    if bad:
        return StabilityReport(False, bad, ())
    blocking = blocking_edges(inst, x)
    return StabilityReport(not blocking, (), blocking)


def _side_compare(inst: Instance, x: Assignment, y: Assignment, vertices) -> str:
    below = above = False
    for v in vertices:
        zx = inst.local_values(x, v)
        zy = inst.local_values(y, v)
        if zx == zy:
            continue
        cf = evaluator_for(inst, v)
        if not cf.accepts(zx) or not cf.accepts(zy):
            raise GallocError(f"comparison needs accepted restrictions at {v}")
        j = cf(join(zx, zy))
        if j == zx:
            above = True
        elif j == zy:
            below = True
        else:
            return "incomparable"
        if below and above:
            return "incomparable"
    if below:
        return "less"
    if above:
        return "greater"
    return "equal"


def compare_F(inst: Instance, x: Assignment, y: Assignment) -> str:
    """Position of x against y in the firm-side order.

    Returns "less", "greater", "equal", or "incomparable".  Both
    assignments must be acceptable.
    """
    return _side_compare(inst, x, y, inst.firms)


def compare_W(inst: Instance, x: Assignment, y: Assignment) -> str:
    """Position of x against y in the worker-side order."""
    return _side_compare(inst, x, y, inst.workers)


def weakly_below_F(inst: Instance, x: Assignment, y: Assignment) -> bool:
    return compare_F(inst, x, y) in ("less", "equal")
