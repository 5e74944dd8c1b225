"""The rotation poset, closed functions, and minimum-cost selection.

The stable set is encoded by a partial order on rotation occurrences:
stable assignments correspond one-to-one to closed functions on that
poset (zero outside a down-set, full weight on every strict ancestor of
a positive occurrence).  On gapless instances each rotation occurs once
and minimum-cost selection reduces to a minimum cut over the poset.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from .errors import GallocError, GaplessnessError, InvariantViolation, LimitError
from .lattice import build_full_route, route_pairs, route_to_target
from .lattice import xmin_by_capacity_reduction
from .model import Assignment, CostVector, Instance
from .rotation import applicable_rotations, apply_rotation, max_feasible_weight
from .stability import check_stability


@dataclass(frozen=True)
class PosetElement:
    """One rotation occurrence.

    ``key`` is the canonical cycle of the rotation, ``occurrence`` its
    0-based repetition index (always 0 on gapless instances), and
    ``weight`` the shift weight it carries on every full route.
    """

    key: tuple[str, ...]
    occurrence: int
    weight: int

    @property
    def plus_edges(self) -> tuple[str, ...]:
        return self.key[0::2]

    @property
    def minus_edges(self) -> tuple[str, ...]:
        return self.key[1::2]


@dataclass(frozen=True)
class RotationPoset:
    """Rotation occurrences with their immediate-precedence arcs.

    ``hasse`` holds index pairs (i, j) meaning element i immediately
    precedes element j.  ``mode`` records which construction produced
    the poset ("gapless" or "general").
    """

    elements: tuple[PosetElement, ...]
    hasse: tuple[tuple[int, int], ...]
    mode: str
    xmin: Assignment
    xmax: Assignment

    def index_of(self, key: tuple[str, ...], occurrence: int = 0) -> int:
        for i, el in enumerate(self.elements):
            if el.key == key and el.occurrence == occurrence:
                return i
        raise KeyError((key, occurrence))

    def predecessors(self, j: int) -> tuple[int, ...]:
        return tuple(a for a, b in self.hasse if b == j)

    def successors(self, i: int) -> tuple[int, ...]:
        return tuple(b for a, b in self.hasse if a == i)

    def minimal_elements(self) -> tuple[int, ...]:
        targets = {b for _, b in self.hasse}
        return tuple(i for i in range(len(self.elements)) if i not in targets)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "elements": [
                {"cycle": list(el.key), "occurrence": el.occurrence, "weight": el.weight}
                for el in self.elements
            ],
            "hasse": [list(p) for p in self.hasse],
        }


def strict_ancestors(poset: RotationPoset, i: int) -> frozenset[int]:
    """Indices of all elements strictly below element i in the order."""
    preds: dict[int, list[int]] = {k: [] for k in range(len(poset.elements))}
    for a, b in poset.hasse:
        preds[b].append(a)
    seen: set[int] = set()
    stack = list(preds[i])
    while stack:
        j = stack.pop()
        if j in seen:
            continue
        seen.add(j)
        stack.extend(preds[j])
    return frozenset(seen)


def linear_extension(poset: RotationPoset) -> tuple[int, ...]:
    """Topological order of the elements, lowest index first among ties."""
    n = len(poset.elements)
    indeg = [0] * n
    succ: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in poset.hasse:
        indeg[b] += 1
        succ[a].append(b)
    heap = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    out: list[int] = []
    while heap:
        i = heapq.heappop(heap)
        out.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, j)
    if len(out) != n:
        raise InvariantViolation("the rotation poset contains a directed cycle")
    return tuple(out)


def _check_reduction(edges: set[tuple[int, int]], n: int) -> None:
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    if not nx.is_directed_acyclic_graph(g):
        raise InvariantViolation("the rotation poset contains a directed cycle")
    reduced = set(nx.transitive_reduction(g).edges)
    if reduced != edges:
        raise InvariantViolation(
            "successor sets are not the immediate-precedence arcs: "
            f"transitive reduction drops {sorted(edges - reduced)}"
        )


def _coverage_check(
    inst: Instance,
    elements: list[PosetElement],
    xmin: Assignment,
    xmax: Assignment,
) -> None:
    delta = [0] * len(inst.edges)
    for el in elements:
        for e in el.plus_edges:
            delta[inst.edge_index[e]] += el.weight
        for e in el.minus_edges:
            delta[inst.edge_index[e]] -= el.weight
    got = tuple(a + d for a, d in zip(xmin.values, delta))
    if got != xmax.values:
        raise InvariantViolation(
            "poset weights do not carry the minimum to the maximum"
        )


def build_poset_gapless(inst: Instance) -> RotationPoset:
    """Rotation poset of a gapless instance, one element per rotation.

    For each rotation, every other applicable rotation is exhausted
    first; the rotations applicable right after it are its immediate
    successors.  A repeated key on any route raises GaplessnessError.
    """
    xmin = xmin_by_capacity_reduction(inst).assignment
    full = build_full_route(inst, xmin, assume_gapless=True)
    tau_of: dict[tuple[str, ...], int] = {}
    for step in full.steps:
        tau_of[step.rotation.key] = step.weight
    keys = sorted(tau_of)
    elements = [PosetElement(k, 0, tau_of[k]) for k in keys]
    index = {k: i for i, k in enumerate(keys)}
    edges: set[tuple[int, int]] = set()
    for key in keys:
        x = xmin
        used: set[tuple[str, ...]] = set()
        while True:
            rotations = applicable_rotations(inst, x)
            others = [r for r in rotations if r.key != key]
            if not others:
                if not rotations:
                    raise GaplessnessError(
                        f"rotation {key} vanished while being deferred; "
                        "the instance is not gapless"
                    )
                break
            rot = others[0]
            if rot.key in used or rot.key not in index:
                raise GaplessnessError(
                    f"rotation {rot.key} repeated on a route; "
                    "the instance is not gapless"
                )
            used.add(rot.key)
            x = apply_rotation(inst, x, rot, max_feasible_weight(inst, x, rot))
        target = next(r for r in applicable_rotations(inst, x) if r.key == key)
        tau = max_feasible_weight(inst, x, target)
        if tau != tau_of[key]:
            raise InvariantViolation(
                f"rotation {key} had weight {tau} after deferral "
                f"but {tau_of[key]} on the full route"
            )
        x2 = apply_rotation(inst, x, target, tau)
        for succ in applicable_rotations(inst, x2):
            if succ.key not in index:
                raise InvariantViolation(
                    f"successor rotation {succ.key} never occurred on the full route"
                )
            edges.add((index[key], index[succ.key]))
    _check_reduction(edges, len(elements))
    _coverage_check(inst, elements, xmin, full.end)
    poset = RotationPoset(tuple(elements), tuple(sorted(edges)), "gapless", xmin, full.end)
    first = {index[r.key] for r in applicable_rotations(inst, xmin)}
    if set(poset.minimal_elements()) != first:
        raise InvariantViolation(
            "minimal poset elements differ from the rotations applicable "
            "at the minimum"
        )
    return poset


def build_poset_general(inst: Instance) -> RotationPoset:
    """Rotation poset with repeated occurrences allowed.

    One full route fixes the occurrence counts and the (key, weight)
    multiset.  For each rotation a route deferring it maximally locates
    its occurrence points; the rotations applicable at each point give
    the successor occurrences, counted back from the route's tail.
    """
    xmin = xmin_by_capacity_reduction(inst).assignment
    base = build_full_route(inst, xmin)
    pair_multiset = route_pairs(base)
    counts = Counter(step.rotation.key for step in base.steps)
    keys = sorted(counts)
    e2 = max(1, len(inst.edges)) ** 2
    bound = max(1, inst.b_max) * e2

    elements: list[PosetElement] = []
    index: dict[tuple[tuple[str, ...], int], int] = {}
    per_key: dict[tuple[str, ...], list[tuple[int, Assignment]]] = {}
    traces: dict[tuple[str, ...], list[tuple[tuple[str, ...], int]]] = {}
    for key in keys:
        x = xmin
        steps: list[tuple[tuple[str, ...], int]] = []
        occs: list[tuple[int, Assignment]] = []
        while True:
            rotations = applicable_rotations(inst, x)
            if not rotations:
                break
            if len(steps) >= bound:
                raise InvariantViolation(
                    f"deferred route exceeded its length monitor of {bound} steps"
                )
            others = [r for r in rotations if r.key != key]
            rot = others[0] if others else rotations[0]
            tau = max_feasible_weight(inst, x, rot)
            x = apply_rotation(inst, x, rot, tau)
            steps.append((rot.key, tau))
            if rot.key == key:
                occs.append((len(steps) - 1, x))
        if x.values != base.end.values:
            raise InvariantViolation("a deferred route ended away from the maximum")
        if Counter(steps) != pair_multiset:
            raise InvariantViolation(
                "route weight multisets differ between full routes"
            )
        if len(occs) != counts[key]:
            raise InvariantViolation(
                f"rotation {key} occurred {len(occs)} times deferred "
                f"but {counts[key]} times on the base route"
            )
        per_key[key] = occs
        traces[key] = steps
        for i, (p, _) in enumerate(occs):
            index[(key, i)] = len(elements)
            elements.append(PosetElement(key, i, steps[p][1]))

    if Counter((el.key, el.weight) for el in elements) != pair_multiset:
        raise InvariantViolation(
            "element weights do not reproduce the route weight multiset"
        )

    edges: set[tuple[int, int]] = set()
    for key in keys:
        steps = traces[key]
        for i, (p, x_here) in enumerate(per_key[key]):
            for succ in applicable_rotations(inst, x_here):
                later = sum(1 for q in range(p + 1, len(steps)) if steps[q][0] == succ.key)
                j = counts[succ.key] - later
                if not 0 <= j < counts[succ.key]:
                    raise InvariantViolation(
                        f"successor occurrence of {succ.key} after {key} "
                        "falls outside its occurrence range"
                    )
                edges.add((index[(key, i)], index[(succ.key, j)]))
    _check_reduction(edges, len(elements))
    _coverage_check(inst, elements, xmin, base.end)
    return RotationPoset(tuple(elements), tuple(sorted(edges)), "general", xmin, base.end)


def build_poset(inst: Instance, *, general: bool = False) -> RotationPoset:
    return build_poset_general(inst) if general else build_poset_gapless(inst)


# -- closed functions ----------------------------------------------------


@dataclass(frozen=True)
class ClosedFunction:
    """Element weights of a down-set, in poset element order."""

    values: tuple[int, ...]


def closedness_problem(poset: RotationPoset, values: tuple[int, ...]) -> str | None:
    """Why the values fail to be a closed function, or None if they are."""
    if len(values) != len(poset.elements):
        return "wrong number of entries"
    for i, (v, el) in enumerate(zip(values, poset.elements)):
        if not 0 <= v <= el.weight:
            return f"entry {i} outside [0, {el.weight}]"
    for i, v in enumerate(values):
        if v <= 0:
            continue
        for j in strict_ancestors(poset, i):
            if values[j] != poset.elements[j].weight:
                return (
                    f"element {i} is positive but its predecessor {j} "
                    "is not at full weight"
                )
    return None


def is_closed(poset: RotationPoset, values: tuple[int, ...]) -> bool:
    return closedness_problem(poset, values) is None


def enumerate_closed_functions(
    poset: RotationPoset, limit: int = 10**6
) -> tuple[tuple[int, ...], ...]:
    """All closed functions, sorted lexicographically."""
    raw = 1
    for el in poset.elements:
        raw *= el.weight + 1
    if raw > limit:
        raise LimitError(
            f"closed functions range over {raw} candidates, over the limit {limit}"
        )
    topo = linear_extension(poset)
    anc = {i: strict_ancestors(poset, i) for i in topo}
    out: list[tuple[int, ...]] = []
    values = [0] * len(poset.elements)

    def rec(k: int) -> None:
        if k == len(topo):
            out.append(tuple(values))
            return
        i = topo[k]
        full = all(values[j] == poset.elements[j].weight for j in anc[i])
        choices = range(poset.elements[i].weight + 1) if full else (0,)
        for v in choices:
            values[i] = v
            rec(k + 1)
        values[i] = 0

    rec(0)
    out.sort()
    return tuple(out)


def to_closed_function(
    inst: Instance, poset: RotationPoset, x: Assignment
) -> ClosedFunction:
    """Closed function of a stable assignment (route weights to it)."""
    if not check_stability(inst, x).stable:
        raise GallocError("only stable assignments have a closed function")
    route = route_to_target(inst, poset.xmin, x)
    values = [0] * len(poset.elements)
    seen: Counter[tuple[str, ...]] = Counter()
    for step in route.steps:
        key = step.rotation.key
        try:
            i = poset.index_of(key, seen[key])
        except KeyError:
            raise InvariantViolation(
                f"route used occurrence {seen[key]} of {key}, "
                "which is not a poset element"
            ) from None
        values[i] = step.weight
        seen[key] += 1
    problem = closedness_problem(poset, tuple(values))
    if problem is not None:
        raise InvariantViolation(f"route weights are not closed: {problem}")
    return ClosedFunction(tuple(values))


def from_closed_function(
    inst: Instance, poset: RotationPoset, xi: ClosedFunction
) -> Assignment:
    """Stable assignment of a closed function (weighted shift sum)."""
    problem = closedness_problem(poset, xi.values)
    if problem is not None:
        raise GallocError(f"not a closed function: {problem}")
    vals = list(poset.xmin.values)
    for v, el in zip(xi.values, poset.elements):
        if v == 0:
            continue
        for e in el.plus_edges:
            vals[inst.edge_index[e]] += v
        for e in el.minus_edges:
            vals[inst.edge_index[e]] -= v
    for v, e in zip(vals, inst.edges):
        if v < 0 or v > e.capacity:
            raise InvariantViolation(
                f"closed function leaves edge {e.id} outside its capacity"
            )
    x = Assignment(tuple(vals))
    if not check_stability(inst, x).stable:
        raise InvariantViolation("closed function produced an unstable assignment")
    return x


# -- minimum cost --------------------------------------------------------


@dataclass(frozen=True)
class MinCostResult:
    """Cheapest stable assignment and how it was selected.

    ``ideal`` lists the poset elements taken at full weight; among all
    optima this is the inclusion-minimal down-set, so the assignment is
    the lowest optimal point of the lattice.
    """

    assignment: Assignment
    cost: Fraction
    ideal: tuple[int, ...]
    poset: RotationPoset


def min_cost_stable(inst: Instance, costs: CostVector) -> MinCostResult:
    """Minimum-cost stable assignment on a gapless instance.

    Each rotation gets weight (cost of added edges minus cost of dropped
    edges) times its shift weight; a minimum s-t cut over the poset
    (precedence arcs uncuttable) picks the optimal down-set.  The
    residual side reaching the sink is the minimal optimal down-set.
    """
    poset = build_poset_gapless(inst)
    ints, scale = costs.scaled_integers()
    weights: list[int] = []
    for el in poset.elements:
        c = sum(ints[inst.edge_index[e]] for e in el.plus_edges) - sum(
            ints[inst.edge_index[e]] for e in el.minus_edges
        )
        weights.append(c * el.weight)
    inf = 1 + sum(abs(w) for w in weights)
    g = nx.DiGraph()
    g.add_node("s")
    g.add_node("t")
    for i, w in enumerate(weights):
        g.add_node(i)
        if w > 0:
            g.add_edge("s", i, capacity=w)
        elif w < 0:
            g.add_edge(i, "t", capacity=-w)
    for a, b in poset.hasse:
        g.add_edge(a, b, capacity=inf)
    residual = edmonds_karp(g, "s", "t")
    into: dict[object, list[object]] = {n: [] for n in residual.nodes}
    for u, v in residual.edges:
        if residual[u][v]["capacity"] - residual[u][v]["flow"] > 0:
            into[v].append(u)
    reach: set[object] = set()
    stack: list[object] = ["t"]
    while stack:
        node = stack.pop()
        if node in reach:
            continue
        reach.add(node)
        stack.extend(into[node])
    ideal = tuple(sorted(i for i in range(len(poset.elements)) if i in reach))
    in_ideal = set(ideal)
    for i in ideal:
        if not strict_ancestors(poset, i) <= in_ideal:
            raise InvariantViolation("minimum cut side is not a down-set")
    values = tuple(
        poset.elements[i].weight if i in in_ideal else 0
        for i in range(len(poset.elements))
    )
    x = from_closed_function(inst, poset, ClosedFunction(values))
    return MinCostResult(x, costs.cost_of(x), ideal, poset)
