"""Cluster, node and pod model with strict resource accounting.

Accounting invariant: on every node, bound requests plus candidate
reservations never exceed capacity. A subtraction that would go negative
raises OvercommitError because it can only mean the simulator double-booked
a node, never as a recoverable condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional, Set

from .errors import (
    BindConflict,
    NamespaceNotAllowed,
    OvercommitError,
    PhaseTransitionError,
    QuotaExceeded,
)
from .resources import ResourceVector, sum_vectors


class NodePool(Enum):
    BATCH = "Batch"
    CONTAINER = "Container"


class NodeState(Enum):
    READY = "Ready"
    DRAINING = "Draining"
    REPURPOSING = "Repurposing"


class PodPhase(Enum):
    PENDING = "Pending"
    BOUND = "Bound"
    RUNNING = "Running"
    COMPLETED = "Completed"
    FAILED = "Failed"
    UNSCHEDULABLE = "Unschedulable"


# Legal pod phase transitions. Anything else is a simulator bug.
_PHASE_EDGES = {
    PodPhase.PENDING: {PodPhase.BOUND, PodPhase.UNSCHEDULABLE},
    PodPhase.BOUND: {PodPhase.RUNNING, PodPhase.FAILED},
    PodPhase.RUNNING: {PodPhase.COMPLETED, PodPhase.FAILED},
    PodPhase.COMPLETED: set(),
    PodPhase.FAILED: set(),
    PodPhase.UNSCHEDULABLE: set(),
}


@dataclass
class NodeSpec:
    node_id: str
    cluster_id: str
    capacity: ResourceVector
    labels: Dict[str, str] = field(default_factory=dict)
    pool: NodePool = NodePool.CONTAINER
    state: NodeState = NodeState.READY


@dataclass
class PodSpec:
    pod_id: str
    namespace: str
    request: ResourceVector
    node_selector: Dict[str, str] = field(default_factory=dict)
    federation_eligible: bool = False
    submit_time: int = 0
    duration: int = 0
    phase: PodPhase = PodPhase.PENDING
    bound_cluster: Optional[str] = None
    bound_node: Optional[str] = None

    def transition(self, to: PodPhase) -> None:
        if to not in _PHASE_EDGES[self.phase]:
            raise PhaseTransitionError(
                f"pod {self.pod_id}: illegal phase transition {self.phase.value} -> {to.value}"
            )
        self.phase = to

    def clone(self) -> "PodSpec":
        """Fresh Pending copy, used when a chaperon is created in a target."""
        return PodSpec(
            pod_id=self.pod_id,
            namespace=self.namespace,
            request=self.request,
            node_selector=dict(self.node_selector),
            federation_eligible=self.federation_eligible,
            submit_time=self.submit_time,
            duration=self.duration,
        )


@dataclass
class ClusterSpec:
    cluster_id: str
    nodes: Dict[str, NodeSpec] = field(default_factory=dict)
    # None means every namespace is admitted.
    namespace_allowlist: Optional[Set[str]] = None
    # Missing entry means unlimited quota for that namespace.
    namespace_quota: Dict[str, ResourceVector] = field(default_factory=dict)

    def add_node(self, node: NodeSpec) -> None:
        if node.node_id in self.nodes:
            raise ValueError(f"duplicate node id {node.node_id} in {self.cluster_id}")
        self.nodes[node.node_id] = node

    def admits(self, namespace: str) -> bool:
        return self.namespace_allowlist is None or namespace in self.namespace_allowlist


def node_allocatable(node: NodeSpec, bound_pods: Iterable[PodSpec]) -> ResourceVector:
    """Capacity minus the component-wise sum of bound requests.

    Raises OvercommitError if the result would be negative; an overcommitted
    node is an accounting bug, never something to clamp.
    """
    return node.capacity.subtract(sum_vectors(p.request for p in bound_pods))


def selector_matches(selector: Dict[str, str], labels: Dict[str, str]) -> bool:
    return all(labels.get(k) == v for k, v in selector.items())


def fits(pod: PodSpec, node: NodeSpec, allocatable: ResourceVector) -> bool:
    """Pure feasibility predicate for one pod on one container node."""
    if node.state is not NodeState.READY or node.pool is not NodePool.CONTAINER:
        return False
    if not selector_matches(pod.node_selector, node.labels):
        return False
    return pod.request.fits_within(allocatable)


class ClusterState:
    """Mutable accounting for one cluster inside a simulation run.

    Tracks, per node, the requests of bound pods and of candidate
    reservations, plus per-namespace totals for quota enforcement.
    Reservations count against both node capacity and namespace quota so a
    reserved candidate can always be promoted to a bind.
    """

    def __init__(self, spec: ClusterSpec):
        self.spec = spec
        self.bound: Dict[str, Dict[str, ResourceVector]] = {n: {} for n in spec.nodes}
        self.reserved: Dict[str, Dict[str, ResourceVector]] = {n: {} for n in spec.nodes}
        self.ns_usage: Dict[str, ResourceVector] = {}
        self.pods: Dict[str, PodSpec] = {}
        self._reservation_ns: Dict[str, str] = {}

    @property
    def cluster_id(self) -> str:
        return self.spec.cluster_id

    def nodes(self) -> Dict[str, NodeSpec]:
        return self.spec.nodes

    def bound_pods_on(self, node_id: str) -> Dict[str, ResourceVector]:
        return self.bound[node_id]

    def allocatable(self, node_id: str, include_reservations: bool = True) -> ResourceVector:
        node = self.spec.nodes[node_id]
        used = sum_vectors(self.bound[node_id].values())
        if include_reservations:
            used = used + sum_vectors(self.reserved[node_id].values())
        return node.capacity.subtract(used)

    def aggregate_capacity(self) -> ResourceVector:
        """Capacity summed over Ready container nodes."""
        return sum_vectors(
            n.capacity
            for n in self.spec.nodes.values()
            if n.pool is NodePool.CONTAINER and n.state is NodeState.READY
        )

    def aggregate_allocatable(self) -> ResourceVector:
        """Allocatable (net of bound pods only) over Ready container nodes.

        Reservations are deliberately excluded: they are short-lived election
        artifacts, and reporting them would double-count a pod against its
        own candidate when the proxy scores aggregates.
        """
        total = ResourceVector.zero()
        for node_id, node in self.spec.nodes.items():
            if node.pool is NodePool.CONTAINER and node.state is NodeState.READY:
                total = total + self.allocatable(node_id, include_reservations=False)
        return total

    def namespace_used(self, namespace: str) -> ResourceVector:
        return self.ns_usage.get(namespace, ResourceVector.zero())

    def within_quota(self, namespace: str, request: ResourceVector) -> bool:
        quota = self.spec.namespace_quota.get(namespace)
        if quota is None:
            return True
        return (self.namespace_used(namespace) + request).fits_within(quota)

    def _check_admission(self, pod: PodSpec) -> None:
        if not self.spec.admits(pod.namespace):
            raise NamespaceNotAllowed(
                f"namespace {pod.namespace!r} not admitted by cluster {self.cluster_id}"
            )
        if not self.within_quota(pod.namespace, pod.request):
            raise QuotaExceeded(
                f"namespace {pod.namespace!r} over quota in cluster {self.cluster_id}"
            )

    def _ns_add(self, namespace: str, request: ResourceVector) -> None:
        self.ns_usage[namespace] = self.namespace_used(namespace) + request

    def _ns_sub(self, namespace: str, request: ResourceVector) -> None:
        self.ns_usage[namespace] = self.namespace_used(namespace).subtract(request)

    def reserve(self, pod: PodSpec, node_id: str) -> None:
        """Hold node resources for a candidate until election resolves."""
        node = self.spec.nodes[node_id]
        if not fits(pod, node, self.allocatable(node_id)):
            raise BindConflict(
                f"reservation for {pod.pod_id} no longer fits node {node_id}"
            )
        self._check_admission(pod)
        self.reserved[node_id][pod.pod_id] = pod.request
        self._reservation_ns[pod.pod_id] = pod.namespace
        self._ns_add(pod.namespace, pod.request)

    def release_reservation(self, pod_id: str) -> bool:
        for node_id, holds in self.reserved.items():
            if pod_id in holds:
                request = holds.pop(pod_id)
                self._ns_sub(self._reservation_ns.pop(pod_id), request)
                return True
        return False

    def reservation_node(self, pod_id: str) -> Optional[str]:
        for node_id, holds in self.reserved.items():
            if pod_id in holds:
                return node_id
        return None

    def bind(self, pod: PodSpec, node_id: str, at: int) -> None:
        """Bind a pod to a node, re-validating feasibility at time `at`.

        Raises BindConflict / QuotaExceeded / NamespaceNotAllowed when the
        precondition no longer holds; the caller must re-queue the pod.
        A reservation held by the same pod is consumed by the bind.
        """
        node = self.spec.nodes[node_id]
        had_reservation = pod.pod_id in self.reserved[node_id]
        if had_reservation:
            # The reservation already holds the resources and quota.
            request = self.reserved[node_id].pop(pod.pod_id)
            self._reservation_ns.pop(pod.pod_id, None)
        else:
            if not fits(pod, node, self.allocatable(node_id)):
                raise BindConflict(
                    f"pod {pod.pod_id} no longer fits node {node_id} at t={at}"
                )
            self._check_admission(pod)
            request = pod.request
            self._ns_add(pod.namespace, request)
        self.bound[node_id][pod.pod_id] = request
        self.pods[pod.pod_id] = pod
        pod.transition(PodPhase.BOUND)
        pod.bound_cluster = self.cluster_id
        pod.bound_node = node_id
        self._assert_node_capacity(node_id)

    def unbind(self, pod_id: str) -> PodSpec:
        """Release a bound pod's resources (completion or failure)."""
        pod = self.pods.pop(pod_id)
        node_id = pod.bound_node
        request = self.bound[node_id].pop(pod_id)
        self._ns_sub(pod.namespace, request)
        return pod

    def _assert_node_capacity(self, node_id: str) -> None:
        node = self.spec.nodes[node_id]
        total = sum_vectors(self.bound[node_id].values()) + sum_vectors(
            self.reserved[node_id].values()
        )
        if not total.fits_within(node.capacity):
            raise OvercommitError(
                f"node {node_id} in {self.cluster_id} overcommitted: {total} > {node.capacity}"
            )
