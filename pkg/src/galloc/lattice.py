"""Navigation of the stable set: extreme points and routes.

Two independent pipelines find the worker-best stable assignment (the
minimum of the firm-side lattice order):

* ``xmin_by_capacity_reduction``: alternately let workers choose from
  the current capacities and firms choose from the workers' picks,
  reducing capacities wherever a firm refused units, until a fixpoint.
* ``stage1_find_stable`` + ``stage2_descend_to_xmin``: grow any stable
  assignment by shifting along admissible paths and cycles, then walk
  down the lattice by reversing rotations found through legal cycles.

On top of stable points, routes chain rotation shifts.  A full route
runs from the minimum to the maximum using maximal weights; a targeted
route stops at a prescribed stable assignment, possibly truncating
weights along the way.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .choice import evaluator_for, single_unit_response
from .errors import GallocError, GaplessnessError, InvariantViolation
from .model import Assignment, Instance, shift
from .rotation import (
    Rotation,
    admissible_edge,
    applicable_rotations,
    apply_rotation,
    max_feasible_weight,
)
from .stability import check_stability, compare_F, is_interesting


@dataclass(frozen=True)
class CapacityReductionRun:
    """Result of the capacity-reduction pipeline.

    Attributes:
        assignment: the stable minimum.
        iterations: rounds executed before the fixpoint (at least 1).
    """

    assignment: Assignment
    iterations: int


def xmin_by_capacity_reduction(inst: Instance) -> CapacityReductionRun:
    """Worker-best stable assignment by iterated capacity reduction.

    Each round, workers choose from the reduced capacities and firms
    choose from the workers' picks; every edge where the firm kept less
    than offered has its capacity cut down to the kept amount.  The
    fixpoint is stable.  The round count is monitored against the
    |E| * b_max bound.
    """
    caps = [e.capacity for e in inst.edges]
    bound = max(1, len(inst.edges) * max(inst.b_max, 1))
    idx = inst.edge_index
    rounds = 0
    while True:
        rounds += 1
        if rounds > bound + 1:
            raise InvariantViolation(
                f"capacity reduction ran {rounds} rounds, over its bound {bound}"
            )
        x = [0] * len(inst.edges)
        for w in inst.workers:
            cf = evaluator_for(inst, w)
            picked = cf(tuple(caps[idx[eid]] for eid in inst.edges_of(w)))
            for eid, v in zip(inst.edges_of(w), picked):
                x[idx[eid]] = v
        y = list(x)
        changed = False
        for f in inst.firms:
            cf = evaluator_for(inst, f)
            kept = cf(tuple(x[idx[eid]] for eid in inst.edges_of(f)))
            for eid, v in zip(inst.edges_of(f), kept):
                if v < x[idx[eid]]:
                    y[idx[eid]] = v
                    caps[idx[eid]] = v
                    changed = True
        if not changed:
            out = Assignment(tuple(x))
            report = check_stability(inst, out)
            if not report.stable:
                raise InvariantViolation(
                    "capacity reduction fixpoint is not stable: "
                    f"unacceptable={list(report.unacceptable_vertices)} "
                    f"blocking={list(report.blocking)}"
                )
            return CapacityReductionRun(out, rounds)


def _step_monitor(inst: Instance) -> int:
    e = max(1, len(inst.edges))
    return 4 * max(1, inst.b_max) * e * e + 16


# -- Stage I -------------------------------------------------------------


def _growth_invariants_broken(inst: Instance, x: Assignment) -> str | None:
    """Check the growth-stage invariants; return a description or None.

    The assignment must sit in the box, respect worker quotas, be
    accepted by every firm, and no edge a worker prefers strictly to its
    last supported edge (or to its whole order when it holds nothing)
    may be interesting for the far firm.
    """
    for e, v in zip(inst.edges, x.values):
        if v < 0 or v > e.capacity:
            return f"edge {e.id} outside its capacity"
    for w in inst.workers:
        if inst.size_at(x, w) > inst.quota(w):
            return f"worker {w} over quota"
    for f in inst.firms:
        if not evaluator_for(inst, f).accepts(inst.local_values(x, f)):
            return f"firm {f} rejects its restriction"
    idx = inst.edge_index
    for w in inst.workers:
        order = inst.worker_orders[w]
        last = None
        for r in range(len(order) - 1, -1, -1):
            if x.values[idx[order[r]]] > 0:
                last = r
                break
        if last is None:
            continue  # holds nothing: nothing strictly above its first edge
        for eid in order[:last]:
            if is_interesting(inst, x, inst.edge(eid).firm, eid):
                return f"edge {eid} above {w}'s last supported edge is interesting"
    return None


def _admissible_path(
    inst: Instance, x: Assignment, w0: str
) -> tuple[tuple[str, ...], tuple[str, ...], bool]:
    """Follow admissible edges and displacement partners from a worker.

    Returns (added edges, subtracted edges, is_path).  When the walk
    closes a cycle only the cycle's edges are kept and is_path is False;
    otherwise the walk ended at an absorbing firm or a worker with no
    admissible edge.
    """
    seq: list[str] = []
    pos: dict[str, int] = {}
    plus: set[str] = set()
    w = w0
    cycle_from: int | None = None
    while True:
        a = admissible_edge(inst, x, w, empty_support="first")
        if a is None:
            break  # ends at a worker
        if a in pos:
            cycle_from = pos[a]
            break
        pos[a] = len(seq)
        seq.append(a)
        plus.add(a)
        f = inst.edge(a).firm
        verdict, c_pos = single_unit_response(
            evaluator_for(inst, f), inst.local_values(x, f), inst.local_pos(f, a)
        )
        if verdict == "same":
            raise InvariantViolation(f"admissible edge {a} is not interesting for {f}")
        if verdict == "absorb":
            break  # ends at a firm
        c = inst.edges_of(f)[c_pos]
        if c in pos:
            cycle_from = pos[c]
            break
        pos[c] = len(seq)
        seq.append(c)
        w = inst.edge(c).worker
    if cycle_from is not None:
        seq = seq[cycle_from:]
        if len(seq) < 2 or len(seq) % 2 != 0:
            raise InvariantViolation(f"walk closed a degenerate cycle: {seq}")
        return (
            tuple(e for e in seq if e in plus),
            tuple(e for e in seq if e not in plus),
            False,
        )
    return (
        tuple(e for e in seq if e in plus),
        tuple(e for e in seq if e not in plus),
        True,
    )


def stage1_find_stable(inst: Instance, start: Assignment | None = None) -> Assignment:
    """Grow a stable assignment from zero (or a given valid start).

    Repeatedly picks a worker under quota with an admissible edge,
    follows the unique walk of displacement pairs from it, and shifts
    the maximal weight that preserves the growth invariants.  When no
    such worker remains the assignment is stable.
    """
    x = start if start is not None else inst.zero()
    broken = _growth_invariants_broken(inst, x)
    if broken is not None:
        raise GallocError(f"start violates the growth invariants: {broken}")
    idx = inst.edge_index
    guard = _step_monitor(inst)
    steps = 0
    while True:
        chosen = None
        for w in inst.workers:
            if inst.size_at(x, w) >= inst.quota(w):
                continue
            if admissible_edge(inst, x, w, empty_support="first") is not None:
                chosen = w
                break
        if chosen is None:
            report = check_stability(inst, x)
            if not report.stable:
                raise InvariantViolation(
                    "growth stage stopped on an unstable assignment: "
                    f"unacceptable={list(report.unacceptable_vertices)} "
                    f"blocking={list(report.blocking)}"
                )
            return x
        steps += 1
        if steps > guard:
            raise InvariantViolation(f"growth stage exceeded {guard} iterations")
        plus, minus, is_path = _admissible_path(inst, x, chosen)
        nu = min(inst.edge(e).capacity - x.values[idx[e]] for e in plus)
        if minus:
            nu = min(nu, min(x.values[idx[e]] for e in minus))
        if is_path:
            nu = min(nu, inst.quota(chosen) - inst.size_at(x, chosen))

        def feasible(mu: int) -> bool:
            try:
                y = shift(inst, x, plus, minus, mu)
            except GallocError:
                return False
            return _growth_invariants_broken(inst, y) is None

        if nu < 1 or not feasible(1):
            raise InvariantViolation(
                f"unit shift along {plus}/{minus} breaks the growth invariants"
            )
        lo, hi = 1, nu
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if feasible(mid):
                lo = mid
            else:
                hi = mid - 1
        x = shift(inst, x, plus, minus, lo)


# -- Stage II ------------------------------------------------------------


@dataclass(frozen=True)
class ReversalSets:
    """Down-shift candidates at a stable assignment.

    Attributes:
        u_minus: last supported edge of each worker at quota.
        u_plus: per worker at quota, its unsaturated edges strictly
            above the last supported one.
    """

    u_minus: tuple[str, ...]
    u_plus: dict[str, tuple[str, ...]]

    @property
    def u_plus_all(self) -> tuple[str, ...]:
        return tuple(e for edges in self.u_plus.values() for e in edges)


def build_reversal_sets(inst: Instance, x: Assignment) -> ReversalSets:
    idx = inst.edge_index
    u_minus: list[str] = []
    u_plus: dict[str, tuple[str, ...]] = {}
    for w in inst.workers:
        if inst.size_at(x, w) != inst.quota(w):
            continue
        order = inst.worker_orders[w]
        last = None
        for r in range(len(order) - 1, -1, -1):
            if x.values[idx[order[r]]] > 0:
                last = r
                break
        if last is None:
            continue  # at quota zero: no supported edge to give up
        u_minus.append(order[last])
        ups = tuple(
            eid
            for eid in order[:last]
            if x.values[idx[eid]] < inst.edge(eid).capacity
        )
        if ups:
            u_plus[w] = ups
    return ReversalSets(tuple(u_minus), u_plus)


def essential_f_pairs(
    inst: Instance, x: Assignment, f: str, rs: ReversalSets
) -> tuple[tuple[str, str], ...]:
    """Essential down-swap pairs (add, drop) at one firm.

    A pair is legal when adding one unit of the worker-preferred edge
    and dropping one of the to-be-dropped edge leaves a vector the firm
    accepts; it is essential when no other incident edge that a worker
    finds interesting becomes interesting for the firm at that vector.
    Probing the reversal candidates alone is not enough: a swap down the
    firm's taste can free room for an edge of an under-quota worker, and
    such an edge blocks the shifted point just the same.
    """
    cf = evaluator_for(inst, f)
    z = inst.local_values(x, f)
    cands = [c for c in rs.u_plus_all if inst.edge(c).firm == f]
    drops = [a for a in rs.u_minus if inst.edge(a).firm == f]
    wanted = [
        d
        for d in inst.edges_of(f)
        if is_interesting(inst, x, inst.edge(d).worker, d)
    ]
    out: list[tuple[str, str]] = []
    for a in drops:
        pa = inst.local_pos(f, a)
        for c in cands:
            pc = inst.local_pos(f, c)
            trial = list(z)
            trial[pc] += 1
            trial[pa] -= 1
            if not cf.accepts(trial):
                continue
            essential = True
            for d in wanted:
                if d == c:
                    continue
                pd = inst.local_pos(f, d)
                if trial[pd] < cf.caps[pd]:
                    probe = list(trial)
                    probe[pd] += 1
                    if cf(tuple(probe)) != tuple(trial):
                        essential = False
                        break
            if essential:
                out.append((c, a))
    return tuple(out)


def _reversal_arcs(
    inst: Instance, x: Assignment, rs: ReversalSets
) -> dict[tuple[str, str], list[tuple[str, str]]]:
    """Arcs of the reversal graph; nodes are (side, edge id)."""
    arcs: dict[tuple[str, str], list[tuple[str, str]]] = {}

    def add(u: tuple[str, str], v: tuple[str, str]) -> None:
        arcs.setdefault(u, []).append(v)
        arcs.setdefault(v, [])

    for a in rs.u_minus:
        add(("F", a), ("W", a))
    for w, ups in rs.u_plus.items():
        ell = inst.worker_orders[w][
            max(
                r
                for r in range(len(inst.worker_orders[w]))
                if x.values[inst.edge_index[inst.worker_orders[w][r]]] > 0
            )
        ]
        for c in ups:
            add(("W", c), ("F", c))
            add(("W", ell), ("W", c))
    for f in inst.firms:
        for c, a in essential_f_pairs(inst, x, f, rs):
            add(("F", c), ("F", a))
    for u in arcs:
        arcs[u].sort(key=lambda n: (n[0], inst.edge_index[n[1]]))
    return arcs


def _first_cycle(
    inst: Instance, arcs: dict[tuple[str, str], list[tuple[str, str]]]
) -> list[tuple[str, str]] | None:
    """Deterministic first simple directed cycle, or None."""
    color: dict[tuple[str, str], int] = {}
    order = sorted(arcs, key=lambda n: (n[0], inst.edge_index[n[1]]))
    for root in order:
        if color.get(root):
            continue
        path: list[tuple[str, str]] = []
        stack: list[tuple[tuple[str, str], int]] = [(root, 0)]
        color[root] = 1
        path.append(root)
        while stack:
            node, i = stack.pop()
            if i < len(arcs[node]):
                stack.append((node, i + 1))
                nxt = arcs[node][i]
                c = color.get(nxt, 0)
                if c == 1:
                    return path[path.index(nxt):]
                if c == 0:
                    color[nxt] = 1
                    path.append(nxt)
                    stack.append((nxt, 0))
            else:
                color[node] = 2
                path.pop()
    return None


def _pair_legal_at(
    inst: Instance, y: Assignment, f: str, c: str, a: str
) -> bool:
    """Whether (add c, drop a) is a legal pair at assignment y."""
    rs = build_reversal_sets(inst, y)
    w = inst.edge(c).worker
    if c not in rs.u_plus.get(w, ()) or a not in rs.u_minus:
        return False
    if inst.edge(a).firm != f:
        return False
    cf = evaluator_for(inst, f)
    z = list(inst.local_values(y, f))
    z[inst.local_pos(f, c)] += 1
    z[inst.local_pos(f, a)] -= 1
    if min(z) < 0 or any(v > cap for v, cap in zip(z, cf.caps)):
        return False
    return cf.accepts(z)


def stage2_descend_to_xmin(inst: Instance, x: Assignment) -> Assignment:
    """Walk a stable assignment down to the lattice minimum.

    As long as the reversal graph has a cycle, shift the maximal weight
    along it that keeps the endpoint stable and the last unit a legal
    step; when the graph is acyclic the minimum is reached.
    """
    report = check_stability(inst, x)
    if not report.stable:
        raise GallocError("descent needs a stable assignment")
    idx = inst.edge_index
    guard = _step_monitor(inst)
    steps = 0
    while True:
        rs = build_reversal_sets(inst, x)
        cycle = _first_cycle(inst, _reversal_arcs(inst, x, rs))
        if cycle is None:
            return x
        steps += 1
        if steps > guard:
            raise InvariantViolation(f"descent exceeded {guard} iterations")
        u_plus_set = set(rs.u_plus_all)
        edges_on = []
        n = len(cycle)
        fpairs: list[tuple[str, str, str]] = []
        for i in range(n):
            u, v = cycle[i], cycle[(i + 1) % n]
            if u[1] == v[1] and u[0] != v[0]:
                edges_on.append(u[1])
            if u[0] == "F" and v[0] == "F":
                fpairs.append((inst.edge(u[1]).firm, u[1], v[1]))
        plus = tuple(e for e in edges_on if e in u_plus_set)
        minus = tuple(e for e in edges_on if e not in u_plus_set)
        if not plus or len(plus) != len(minus):
            raise InvariantViolation(f"reversal cycle is degenerate: {cycle}")
        nu = min(
            min(inst.edge(e).capacity - x.values[idx[e]] for e in plus),
            min(x.values[idx[e]] for e in minus),
        )

        def feasible(mu: int) -> bool:
            try:
                y = shift(inst, x, plus, minus, mu)
            except GallocError:
                return False
            if not check_stability(inst, y).stable:
                return False
            if mu >= 2:
                prev = shift(inst, x, plus, minus, mu - 1)
                for f, c, a in fpairs:
                    if not _pair_legal_at(inst, prev, f, c, a):
                        return False
            return True

        if nu < 1 or not feasible(1):
            raise InvariantViolation("unit reversal step is infeasible")
        lo, hi = 1, nu
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if feasible(mid):
                lo = mid
            else:
                hi = mid - 1
        y = shift(inst, x, plus, minus, lo)
        if compare_F(inst, y, x) != "less":
            raise InvariantViolation("reversal step did not move down the firm order")
        for w in inst.workers:
            zw = inst.local_values(x, w)
            zw2 = inst.local_values(y, w)
            if zw == zw2:
                continue
            diff = [b - a for a, b in zip(zw, zw2)]
            if sorted(diff) != [-lo] + [0] * (len(diff) - 2) + [lo]:
                raise InvariantViolation(
                    f"reversal step changed worker {w} by more than one swap"
                )
        x = y


def solve_xmin_by_stages(inst: Instance) -> Assignment:
    """The lattice minimum via the growth stage plus the descent stage."""
    return stage2_descend_to_xmin(inst, stage1_find_stable(inst))


# -- routes --------------------------------------------------------------


@dataclass(frozen=True)
class RouteStep:
    """One rotation shift on a route.

    ``weight`` is what was shifted; ``full_weight`` is the maximum that
    was available.  They differ only on routes truncated by a target.
    """

    rotation: Rotation
    weight: int
    full_weight: int


@dataclass(frozen=True)
class Route:
    start: Assignment
    steps: tuple[RouteStep, ...]
    end: Assignment


RoutePairMultiset = Counter


def route_pairs(route: Route) -> "Counter[tuple[tuple[str, ...], int]]":
    """Multiset of (rotation key, weight) pairs of a route."""
    return Counter((s.rotation.key, s.weight) for s in route.steps)


def build_full_route(
    inst: Instance,
    start: Assignment | None = None,
    *,
    assume_gapless: bool = False,
    rng=None,
    debug: bool = False,
) -> Route:
    """Maximal-weight route from the lattice minimum to the maximum.

    Picks the first applicable rotation in canonical key order, or a
    random one when ``rng`` (a numpy Generator) is given.  Under the
    gapless assumption a repeated rotation key aborts with
    GaplessnessError; route length is monitored either way.
    """
    x = start if start is not None else xmin_by_capacity_reduction(inst).assignment
    e2 = max(1, len(inst.edges)) ** 2
    bound = (len(inst.workers) + len(inst.firms)) * e2 if assume_gapless else max(
        1, inst.b_max
    ) * e2
    steps: list[RouteStep] = []
    seen_keys: set[tuple[str, ...]] = set()
    x0 = x
    while True:
        rotations = applicable_rotations(inst, x)
        if not rotations:
            return Route(x0, tuple(steps), x)
        if len(steps) >= bound:
            raise InvariantViolation(
                f"route exceeded its length monitor of {bound} steps"
            )
        rot = (
            rotations[int(rng.integers(len(rotations)))]
            if rng is not None
            else rotations[0]
        )
        if assume_gapless:
            if rot.key in seen_keys:
                raise GaplessnessError(
                    f"rotation {rot.key} repeated on a route; "
                    "the instance is not gapless"
                )
            seen_keys.add(rot.key)
        tau = max_feasible_weight(inst, x, rot)
        x = apply_rotation(inst, x, rot, tau, debug=debug)
        steps.append(RouteStep(rot, tau, tau))


def route_to_target(
    inst: Instance, start: Assignment, target: Assignment, *, debug: bool = False
) -> Route:
    """Route from one stable assignment up to another it sits below.

    Each step takes the first rotation whose unit shift stays weakly
    below the target, with the largest weight that still does.
    """
    rel = compare_F(inst, start, target)
    if rel not in ("less", "equal"):
        raise GallocError(f"start is not below the target (it compares {rel})")
    x = start
    steps: list[RouteStep] = []
    guard = _step_monitor(inst)
    while compare_F(inst, x, target) == "less":
        if len(steps) > guard:
            raise InvariantViolation("targeted route exceeded its length monitor")
        found = None
        for rot in applicable_rotations(inst, x):
            y = apply_rotation(inst, x, rot, 1)
            if compare_F(inst, y, target) in ("less", "equal"):
                found = rot
                break
        if found is None:
            raise InvariantViolation("no rotation moves toward the target")
        full = max_feasible_weight(inst, x, found)
        lam = 1
        while lam < full:
            y = apply_rotation(inst, x, found, lam + 1)
            if compare_F(inst, y, target) in ("less", "equal"):
                lam += 1
            else:
                break
        x = apply_rotation(inst, x, found, lam, debug=debug)
        steps.append(RouteStep(found, lam, full))
    return Route(start, tuple(steps), x)


def solve_extremes(inst: Instance) -> tuple[Assignment, Assignment]:
    """The minimum and maximum of the stable lattice (firm-side order)."""
    xmin = xmin_by_capacity_reduction(inst).assignment
    return xmin, build_full_route(inst, xmin).end
