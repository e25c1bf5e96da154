"""Pluggable filter/score scheduler used inside each cluster.

All plugins are pure functions over an immutable snapshot, so a scheduling
decision is fully determined by (pod, snapshot, pipeline). Ties between
equally scored nodes go to the lexicographically smallest node id, which
keeps runs replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .cluster import ClusterState, NodeSpec, PodSpec, fits, selector_matches
from .resources import ResourceVector

FilterFn = Callable[[PodSpec, NodeSpec, "SchedulingSnapshot"], bool]
ScoreFn = Callable[[PodSpec, NodeSpec, "SchedulingSnapshot"], int]


@dataclass(frozen=True)
class SchedulingSnapshot:
    """Point-in-time view of one cluster for a scheduling decision."""

    cluster_id: str
    nodes: Dict[str, NodeSpec]
    allocatable: Dict[str, ResourceVector]
    namespace_used: Dict[str, ResourceVector]
    namespace_quota: Dict[str, ResourceVector]
    namespace_allowlist: Optional[frozenset]


def snapshot_of(state: ClusterState) -> SchedulingSnapshot:
    allowlist = state.spec.namespace_allowlist
    return SchedulingSnapshot(
        cluster_id=state.cluster_id,
        nodes=dict(state.spec.nodes),
        allocatable={n: state.allocatable(n) for n in state.spec.nodes},
        namespace_used=dict(state.ns_usage),
        namespace_quota=dict(state.spec.namespace_quota),
        namespace_allowlist=None if allowlist is None else frozenset(allowlist),
    )


def resource_fit(pod: PodSpec, node: NodeSpec, snap: SchedulingSnapshot) -> bool:
    return fits(pod, node, snap.allocatable[node.node_id])


def label_selector(pod: PodSpec, node: NodeSpec, snap: SchedulingSnapshot) -> bool:
    return selector_matches(pod.node_selector, node.labels)


def namespace_policy(pod: PodSpec, node: NodeSpec, snap: SchedulingSnapshot) -> bool:
    if snap.namespace_allowlist is not None and pod.namespace not in snap.namespace_allowlist:
        return False
    quota = snap.namespace_quota.get(pod.namespace)
    if quota is None:
        return True
    used = snap.namespace_used.get(pod.namespace, ResourceVector.zero())
    return (used + pod.request).fits_within(quota)


def least_allocated_score(free_after: ResourceVector, capacity: ResourceVector) -> int:
    """round(100 * mean over dimensions of free/capacity after placement).

    Dimensions with zero capacity are excluded so CPU-only nodes do not
    divide by zero on the GPU axis. Rounding is Python's round-half-to-even.
    """
    fractions = []
    for free, cap in zip(free_after.as_tuple(), capacity.as_tuple()):
        if cap > 0:
            fractions.append(free / cap)
    if not fractions:
        return 0
    return round(100 * sum(fractions) / len(fractions))


def least_allocated(pod: PodSpec, node: NodeSpec, snap: SchedulingSnapshot) -> int:
    free_after = snap.allocatable[node.node_id].subtract(pod.request)
    return least_allocated_score(free_after, node.capacity)


def gpu_binpack(pod: PodSpec, node: NodeSpec, snap: SchedulingSnapshot) -> int:
    """Prefer the fullest GPU node after placement, to limit fragmentation."""
    cap = node.capacity.gpu_count
    if cap == 0:
        return 0
    free_after = snap.allocatable[node.node_id].gpu_count - pod.request.gpu_count
    return round(100 * (cap - free_after) / cap)


FILTER_PLUGINS: Dict[str, FilterFn] = {
    "ResourceFit": resource_fit,
    "LabelSelector": label_selector,
    "NamespacePolicy": namespace_policy,
}

SCORE_PLUGINS: Dict[str, ScoreFn] = {
    "LeastAllocated": least_allocated,
    "GpuBinpack": gpu_binpack,
}

DEFAULT_FILTERS = ("ResourceFit", "LabelSelector", "NamespacePolicy")
DEFAULT_SCORES = (("LeastAllocated", 1),)


@dataclass
class PluginPipeline:
    filters: List[Tuple[str, FilterFn]] = field(default_factory=list)
    scores: List[Tuple[str, ScoreFn, float]] = field(default_factory=list)

    def feasible(self, pod: PodSpec, node: NodeSpec, snap: SchedulingSnapshot) -> bool:
        return all(fn(pod, node, snap) for _, fn in self.filters)

    def total_score(self, pod: PodSpec, node: NodeSpec, snap: SchedulingSnapshot) -> float:
        return sum(weight * fn(pod, node, snap) for _, fn, weight in self.scores)


def builtin_pipeline(
    filter_names=DEFAULT_FILTERS,
    score_weights=DEFAULT_SCORES,
) -> PluginPipeline:
    filters = [(name, FILTER_PLUGINS[name]) for name in filter_names]
    scores = []
    for name, weight in score_weights:
        if weight < 0:
            raise ValueError(f"score weight for {name} must be >= 0")
        scores.append((name, SCORE_PLUGINS[name], weight))
    return PluginPipeline(filters=filters, scores=scores)


def schedule_one(
    pod: PodSpec, snap: SchedulingSnapshot, pipeline: PluginPipeline
) -> Optional[str]:
    """Pick the feasible node with maximal total score, or None.

    Nodes are visited in sorted id order with a strict improvement test, so
    score ties resolve to the lexicographically smallest node id.
    """
    best_node = None
    best_score = None
    for node_id in sorted(snap.nodes):
        node = snap.nodes[node_id]
        if not pipeline.feasible(pod, node, snap):
            continue
        score = pipeline.total_score(pod, node, snap)
        if best_score is None or score > best_score:
            best_node, best_score = node_id, score
    return best_node
