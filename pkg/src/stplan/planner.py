"""Sampling-based planner over configuration space with arrival-time cost.

A tree of configurations is grown by uniform random sampling with goal bias.
Each node stores the earliest time the robot can reach it from the start,
obtained by scheduling every tree edge through its avoidance intervals with
slowdown-aware durations. Beyond standard rewiring toward a new node, any
arrival-time improvement propagates a bounded number of levels down the
subtree, and every node near a new sample may upgrade to a better parent in
the neighborhood. Avoidance data and edge schedules are cached, including
those of rejected (suboptimal) connections, so re-evaluations are cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .edge_cost import (
    EdgeAvoidance,
    EdgeTiming,
    edge_avoidance,
    nominal_time,
    timed_edge,
)
from .intervals import first_overlap
from .occupancy import OccupancyMap
from .robot import RobotModel
from .ssm import SsmParams

_IMPROVE_EPS = 1e-12
_DUP_EPS = 1e-12


@dataclass
class PlannerConfig:
    """Planner knobs; ``child_levels`` bounds rewire propagation depth."""

    max_iterations: int = 500
    neighbor_radius: float | None = None  # optional cap on the neighbor ball
    child_levels: int = 3
    goal_tolerance: float = 1e-3
    rng_seed: int = 0
    goal_bias: float = 0.05
    max_step: float = 0.5
    dq_edge: float = 0.05  # joint-space spacing for edge voxel sweeps

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.child_levels < 0:
            raise ValueError("child_levels must be >= 0")
        if self.neighbor_radius is not None and self.neighbor_radius <= 0:
            raise ValueError("neighbor_radius must be positive when set")
        if not 0.0 <= self.goal_bias < 1.0:
            raise ValueError("goal_bias must be in [0, 1)")
        if self.max_step <= 0 or self.goal_tolerance <= 0 or self.dq_edge <= 0:
            raise ValueError("max_step, goal_tolerance, dq_edge must be positive")


@dataclass
class Node:
    q: np.ndarray
    t_arr: float
    parent: int  # -1 for the start node
    timing: EdgeTiming | None
    children: set[int] = field(default_factory=set)


class EdgeEvaluator:
    """Cached edge costs between graph nodes.

    Avoidance data and nominal times are symmetric and cached per node pair;
    schedules additionally depend on direction and departure time.
    """

    def __init__(
        self,
        occ_map: OccupancyMap,
        model: RobotModel,
        ssm: SsmParams,
        dq_edge: float,
    ):
        self.occ_map = occ_map
        self.model = model
        self.ssm = ssm.for_planning()
        self.dq_edge = dq_edge
        self._avoid: dict[tuple[int, int], EdgeAvoidance] = {}
        self._nominal: dict[tuple[int, int], float] = {}
        self._timings: dict[tuple[int, int, float], EdgeTiming | None] = {}

    def _pair(self, a: int, b: int) -> tuple[int, int]:
        return (a, b) if a <= b else (b, a)

    def avoidance(self, a: int, b: int, qa: np.ndarray, qb: np.ndarray) -> EdgeAvoidance:
        key = self._pair(a, b)
        hit = self._avoid.get(key)
        if hit is None:
            hit = edge_avoidance(self.occ_map, self.model, qa, qb, self.dq_edge)
            self._avoid[key] = hit
        return hit

    def nominal(self, a: int, b: int, qa: np.ndarray, qb: np.ndarray) -> float:
        key = self._pair(a, b)
        hit = self._nominal.get(key)
        if hit is None:
            hit = nominal_time(self.model, qa, qb)
            self._nominal[key] = hit
        return hit

    def timed(
        self, a: int, b: int, qa: np.ndarray, qb: np.ndarray, depart: float
    ) -> EdgeTiming | None:
        key = (a, b, round(depart, 9))
        if key in self._timings:
            return self._timings[key]
        avoid = self.avoidance(a, b, qa, qb)
        # The parent's own voxels (its zero-length "edge") gate any waiting.
        hold = self.avoidance(a, a, qa, qa)
        timing = timed_edge(
            self.occ_map, self.model, qa, qb, depart, avoid, self.ssm, hold_avoid=hold
        )
        self._timings[key] = timing
        return timing


class PlanGraph:
    """Planner tree: nodes with arrival times plus the shared edge cache.

    Cache entries are keyed by per-attempt uids rather than node indices so
    that evaluations done for samples that end up discarded can never alias
    a later node.
    """

    def __init__(self, start: np.ndarray, evaluator: EdgeEvaluator, capacity: int = 64):
        self.nodes: list[Node] = [Node(q=np.asarray(start, dtype=float), t_arr=0.0, parent=-1, timing=None)]
        self.evaluator = evaluator
        self.uids: list[int] = [0]
        self._next_uid = 1
        n = len(start)
        self._configs = np.zeros((max(capacity, 1), n))
        self._configs[0] = start

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def configs(self) -> np.ndarray:
        return self._configs[: len(self.nodes)]

    def alloc_uid(self) -> int:
        uid = self._next_uid
        self._next_uid += 1
        return uid

    def add_node(self, q: np.ndarray, parent: int, timing: EdgeTiming, uid: int) -> int:
        idx = len(self.nodes)
        if idx >= self._configs.shape[0]:
            grown = np.zeros((2 * self._configs.shape[0], self._configs.shape[1]))
            grown[:idx] = self._configs[:idx]
            self._configs = grown
        self._configs[idx] = q
        self.nodes.append(Node(q=np.asarray(q, dtype=float), t_arr=timing.t_c, parent=parent, timing=timing))
        self.uids.append(uid)
        self.nodes[parent].children.add(idx)
        return idx

    def reparent(self, child: int, parent: int, timing: EdgeTiming) -> None:
        node = self.nodes[child]
        self.nodes[node.parent].children.discard(child)
        node.parent = parent
        node.timing = timing
        node.t_arr = timing.t_c
        self.nodes[parent].children.add(child)

    def timed(self, a: int, b: int, depart: float) -> EdgeTiming | None:
        return self.evaluator.timed(
            self.uids[a], self.uids[b], self.nodes[a].q, self.nodes[b].q, depart
        )

    def nominal(self, a: int, b: int) -> float:
        return self.evaluator.nominal(
            self.uids[a], self.uids[b], self.nodes[a].q, self.nodes[b].q
        )

    def cached_avoidance(self, a: int, b: int) -> EdgeAvoidance | None:
        """Cached avoidance data for a node pair, if it was ever evaluated."""
        ua, ub = self.uids[a], self.uids[b]
        return self.evaluator._avoid.get((ua, ub) if ua <= ub else (ub, ua))

    def ancestry_is_acyclic(self) -> bool:
        for i in range(len(self.nodes)):
            seen = set()
            j = i
            while j != -1:
                if j in seen:
                    return False
                seen.add(j)
                j = self.nodes[j].parent
        return True


def rewire_cascade(graph: PlanGraph, root: int, levels: int) -> None:
    """Propagate an arrival-time improvement at ``root`` to its descendants.

    Children are rescheduled breadth-first from their parent's current
    arrival time, at most ``levels`` levels deep. A node is only updated
    when the fresh schedule strictly improves it, so stored arrival times
    never increase; deeper descendants keep stale (upper-bound) values.
    """
    frontier = [root]
    for _ in range(levels):
        if not frontier:
            return
        nxt: list[int] = []
        for u in frontier:
            for c in sorted(graph.nodes[u].children):
                timing = graph.timed(u, c, graph.nodes[u].t_arr)
                if timing is not None and timing.t_c < graph.nodes[c].t_arr - _IMPROVE_EPS:
                    node = graph.nodes[c]
                    node.timing = timing
                    node.t_arr = timing.t_c
                    nxt.append(c)
        frontier = nxt


@dataclass
class PathSolution:
    waypoints: list[np.ndarray]
    timings: list[EdgeTiming]
    estimated_duration: float
    cost_history: list[float]
    # True when every inter-edge gap was verified interval-free, so the
    # slow-to-arrive profile never coasts through someone else's window.
    stretch_clear: bool = True


@dataclass
class PlanResult:
    solution: PathSolution | None
    n_nodes: int
    best_goal_distance: float
    cost_history: list[float]
    graph: PlanGraph

    @property
    def feasible(self) -> bool:
        return self.solution is not None


class Planner:
    def __init__(
        self,
        occ_map: OccupancyMap,
        model: RobotModel,
        config: PlannerConfig,
        ssm: SsmParams,
    ):
        config.validate()
        ssm.validate()
        self.occ_map = occ_map
        self.model = model
        self.config = config
        self.ssm = ssm

    def plan(self, start: np.ndarray, goal: np.ndarray) -> PlanResult:
        start = np.asarray(start, dtype=float)
        goal = np.asarray(goal, dtype=float)
        self.model.check_config(start)
        self.model.check_config(goal)
        if not self.model.within_limits(start) or not self.model.within_limits(goal):
            raise ValueError("start and goal must lie within joint limits")
        if np.linalg.norm(goal - start) <= self.config.goal_tolerance:
            raise ValueError("start and goal coincide within goal tolerance")

        cfg = self.config
        rng = np.random.default_rng(cfg.rng_seed)
        limits = self.model.joint_limits
        evaluator = EdgeEvaluator(self.occ_map, self.model, self.ssm, cfg.dq_edge)
        graph = PlanGraph(start, evaluator, capacity=cfg.max_iterations + 1)
        goal_nodes: list[int] = []
        cost_history: list[float] = []

        for _ in range(cfg.max_iterations):
            if rng.random() < cfg.goal_bias:
                q_rand = goal.copy()
            else:
                q_rand = rng.uniform(limits[:, 0], limits[:, 1])
            new_idx = self._try_insert(graph, q_rand, goal)
            if new_idx is not None and (
                np.linalg.norm(graph.nodes[new_idx].q - goal) <= cfg.goal_tolerance
            ):
                goal_nodes.append(new_idx)
            best = min((graph.nodes[g].t_arr for g in goal_nodes), default=math.inf)
            cost_history.append(best)

        dists = np.linalg.norm(graph.configs - goal, axis=1)
        result = PlanResult(
            solution=None,
            n_nodes=len(graph),
            best_goal_distance=float(np.min(dists)),
            cost_history=cost_history,
            graph=graph,
        )
        if goal_nodes:
            result.solution = extract_path(graph, goal_nodes, cost_history)
        return result

    # -- single iteration -------------------------------------------------

    def _try_insert(self, graph: PlanGraph, q_rand: np.ndarray, goal: np.ndarray) -> int | None:
        cfg = self.config
        configs = graph.configs
        d_rand = np.linalg.norm(configs - q_rand, axis=1)
        nearest = int(np.argmin(d_rand))
        q_new = _steer(graph.nodes[nearest].q, q_rand, cfg.max_step)

        d_new = np.linalg.norm(configs - q_new, axis=1)
        if float(np.min(d_new)) < _DUP_EPS:
            return None  # exact duplicate (repeated goal sample)

        neighbors = _neighbor_indices(d_new, cfg.neighbor_radius)

        new_uid = graph.alloc_uid()
        parent, timing = self._best_parent(graph, neighbors, q_new, new_uid)
        if parent is None:
            return None
        new_idx = graph.add_node(q_new, parent, timing, new_uid)

        # Rewiring plus neighborhood parent upgrades: every neighbor may
        # switch to any better parent in the neighborhood (the new node
        # included); improvements propagate child_levels deep.
        hood = sorted(set(neighbors) | {new_idx})
        for v in sorted(neighbors):
            self._upgrade_parent(graph, v, hood)
        return new_idx

    def _best_parent(
        self, graph: PlanGraph, candidates: list[int], q_new: np.ndarray, new_uid: int
    ) -> tuple[int | None, EdgeTiming | None]:
        """Candidate parent minimizing arrival time at q_new.

        Candidates are tried in lower-bound order (parent arrival plus
        nominal edge time); the scan stops once no remaining bound can beat
        the best arrival found. Evaluations are cached under the uid q_new
        is about to receive, rejected candidates included.
        """
        ev = graph.evaluator
        scored = []
        for c in candidates:
            nom = ev.nominal(graph.uids[c], new_uid, graph.nodes[c].q, q_new)
            scored.append((graph.nodes[c].t_arr + nom, c))
        scored.sort()
        best: tuple[float, int, EdgeTiming] | None = None
        for bound, c in scored:
            if best is not None and bound >= best[0]:
                break
            timing = ev.timed(
                graph.uids[c], new_uid, graph.nodes[c].q, q_new, graph.nodes[c].t_arr
            )
            if timing is None:
                continue
            if best is None or timing.t_c < best[0]:
                best = (timing.t_c, c, timing)
        if best is None:
            return None, None
        return best[1], best[2]

    def _upgrade_parent(self, graph: PlanGraph, v: int, hood: list[int]) -> None:
        node = graph.nodes[v]
        if node.parent == -1:
            return  # never reparent the start node
        best_t = node.t_arr
        best: tuple[int, EdgeTiming] | None = None
        scored = []
        for w in hood:
            if w == v:
                continue
            scored.append((graph.nodes[w].t_arr + graph.nominal(w, v), w))
        scored.sort()
        for bound, w in scored:
            if bound >= best_t - _IMPROVE_EPS:
                break
            timing = graph.timed(w, v, graph.nodes[w].t_arr)
            if timing is not None and timing.t_c < best_t - _IMPROVE_EPS:
                best_t = timing.t_c
                best = (w, timing)
        if best is not None:
            graph.reparent(v, best[0], best[1])
            rewire_cascade(graph, v, self.config.child_levels)


def _steer(q_from: np.ndarray, q_to: np.ndarray, max_step: float) -> np.ndarray:
    delta = q_to - q_from
    dist = float(np.linalg.norm(delta))
    if dist <= max_step:
        return q_to.copy()
    return q_from + delta * (max_step / dist)


def _neighbor_indices(distances: np.ndarray, radius_cap: float | None) -> list[int]:
    """K-nearest neighborhood, k = ceil(e * ln N), optionally radius-capped."""
    n = len(distances)
    k = min(n, max(1, math.ceil(math.e * math.log(n + 1))))
    order = np.lexsort((np.arange(n), distances))
    chosen = list(order[:k])
    if radius_cap is not None:
        within = [i for i in chosen if distances[i] <= radius_cap]
        chosen = within if within else [int(order[0])]
    return [int(i) for i in chosen]


def extract_path(
    graph: PlanGraph, goal_nodes: list[int], cost_history: list[float] | None = None
) -> PathSolution | None:
    """Minimum-arrival-time path to the goal region, rescheduled start-first.

    Stored arrival times can be stale upper bounds beyond the rewire
    propagation depth, so the chain of the chosen goal node is recomputed
    forward; if that reschedule breaks an edge, the next-best goal node is
    tried. The earliest schedule is then relaxed backward so each edge
    departs as late as the next edge allows: waiting collapses toward the
    start node instead of smearing slow traversals across edges that were
    only cleared for their own windows.
    """
    if not goal_nodes:
        return None
    ranked = sorted(goal_nodes, key=lambda g: (graph.nodes[g].t_arr, g))
    fallback: PathSolution | None = None
    for g in ranked:
        chain = []
        idx = g
        while idx != -1:
            chain.append(idx)
            idx = graph.nodes[idx].parent
        chain.reverse()
        timings: list[EdgeTiming] = []
        t_prev = 0.0
        ok = True
        for a, b in zip(chain[:-1], chain[1:]):
            timing = graph.timed(a, b, t_prev)
            if timing is None:
                # Arriving earlier than when this edge was first scheduled can
                # invalidate it (the implied hold may cross an interval); the
                # stored schedule stays valid if the hold span at the parent
                # is clear.
                stored = graph.nodes[b].timing
                if stored is not None and stored.t_p > t_prev:
                    hold = graph.evaluator.avoidance(
                        graph.uids[a], graph.uids[a], graph.nodes[a].q, graph.nodes[a].q
                    )
                    if first_overlap(list(hold.intervals), t_prev, stored.t_p) is None:
                        timing = graph.timed(a, b, stored.t_p)
            if timing is None:
                ok = False
                break
            timings.append(timing)
            t_prev = timing.t_c
        if not ok:
            continue
        timings, clear = _depart_just_in_time(graph, chain, timings)
        solution = PathSolution(
            waypoints=[graph.nodes[i].q.copy() for i in chain],
            timings=timings,
            estimated_duration=timings[-1].t_c,
            cost_history=list(cost_history or []),
            stretch_clear=clear,
        )
        if clear:
            return solution
        if fallback is None:
            fallback = solution
    return fallback


def _depart_just_in_time(
    graph: PlanGraph, chain: list[int], earliest: list[EdgeTiming]
) -> tuple[list[EdgeTiming], bool]:
    """Backward pass: delay each edge so it arrives when its successor departs.

    Keeps the goal arrival time of the earliest schedule. Because the robot
    occupies an edge's corridor from its departure until the next edge
    departs (it slows instead of stopping), the span up to the successor's
    departure must clear the edge's avoidance intervals; edges are delayed
    as far as that allows. Returns the relaxed timings and whether every
    edge's full span was verified clear.
    """
    relaxed: list[EdgeTiming] = [None] * len(earliest)  # type: ignore[list-item]
    all_clear = True
    need = earliest[-1].t_c  # goal arrival is preserved
    for k in range(len(earliest) - 1, -1, -1):
        a, b = chain[k], chain[k + 1]
        avoid = graph.evaluator.avoidance(
            graph.uids[a], graph.uids[b], graph.nodes[a].q, graph.nodes[b].q
        )
        best = earliest[k]
        depart = need - best.duration
        for _ in range(8):
            if depart <= earliest[k].t_p + 1e-12:
                break
            timing = graph.timed(a, b, depart)
            if timing is None or timing.t_p > depart:
                break
            gap = need - timing.t_c
            if gap >= -1e-9 and timing.t_p > best.t_p:
                best = timing  # latest delay found that still arrives in time
            if abs(gap) <= 1e-9:
                break
            depart += gap  # walk toward arriving exactly when needed
        relaxed[k] = best
        if first_overlap(list(avoid.intervals), best.t_p, need) is not None:
            all_clear = False
        need = best.t_p
    return relaxed, all_clear
