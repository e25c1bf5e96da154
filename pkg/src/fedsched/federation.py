"""Cross-cluster scheduling protocol: proxies, chaperons, delegate election.

Lifecycle of one federated pod:

  1. fan-out: the source replaces the pod with a proxy (which never consumes
     node resources) and sends a chaperon-creation message to every target
     it has an edge to, including itself when a self-edge exists.
  2. candidate scheduling: each target runs its own filter/score pipeline
     over its real nodes. A feasible candidate reserves its chosen node and
     reports "reserved"; an infeasible one reports "unschedulable" and is
     retried whenever the target's state changes.
  3. election: once at least one reserved report is in and either every
     target has reported or the election timeout elapsed, the source picks
     the reserved target whose aggregate (virtual-node) score is highest and
     sends it a delegate-bind message. The proxy knows nothing about target
     internals beyond candidate reports and those aggregates.
  4. finalize: the delegate binds on its reserved node and confirms; the
     proxy then becomes Bound and deletion messages go to every other
     chaperon, releasing their reservations on delivery. A bind conflict
     (possible only with reservations disabled) sends the proxy back to
     re-elect among the surviving candidates.

Election retries back off exponentially; a proxy that exhausts them turns
Unschedulable and cleans up all of its chaperons.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from . import engine
from .cluster import PodPhase, PodSpec
from .errors import BindError
from .resources import ResourceVector
from .scheduling import least_allocated_score, schedule_one, snapshot_of

log = logging.getLogger("fedsched.federation")

ELECTION_LEAST_ALLOCATED = "least_allocated"
ELECTION_PREFER_LOCAL = "prefer_local"

REPORT_RESERVED = "reserved"
REPORT_UNSCHEDULABLE = "unschedulable"


class ProxyState(Enum):
    CANDIDATES_PENDING = "CandidatesPending"
    ELECTED = "Elected"
    BOUND = "Bound"
    UNSCHEDULABLE = "Unschedulable"


class ChaperonState(Enum):
    PENDING_SCHEDULE = "PendingSchedule"
    CANDIDATE_RESERVED = "CandidateReserved"
    DELEGATE = "Delegate"
    DELETED = "Deleted"


@dataclass
class FederationParams:
    election_timeout_ms: int = 5_000
    retry_backoff_ms: int = 1_000
    max_retries: int = 5
    heartbeat_ms: int = 10_000
    reservations: bool = True
    election_policy: str = ELECTION_LEAST_ALLOCATED
    hop_limit: int = 1


@dataclass
class VirtualNode:
    """A target cluster as seen from inside a source cluster.

    The aggregates are reports, not ground truth; `last_update` bounds the
    staleness (heartbeat period + edge latency).
    """

    target: str
    capacity: ResourceVector
    allocatable: ResourceVector
    last_update: int = 0

    def staleness(self, now: int) -> int:
        return now - self.last_update


@dataclass
class CandidateReport:
    target: str
    status: str
    node: Optional[str] = None
    at: int = 0


@dataclass
class ProxyPod:
    pod: PodSpec
    source: str
    targets: List[str]
    fanout_time: int
    state: ProxyState = ProxyState.CANDIDATES_PENDING
    elected_target: Optional[str] = None
    reports: Dict[str, CandidateReport] = field(default_factory=dict)
    retries: int = 0
    pending_timer: Optional[int] = None
    mirrored_phase: Optional[str] = None


@dataclass
class PodChaperon:
    pod: PodSpec  # local copy used for candidate scheduling in the target
    parent_source: str
    target: str
    state: ChaperonState = ChaperonState.PENDING_SCHEDULE
    reserved_node: Optional[str] = None
    annotations: List[dict] = field(default_factory=list)
    last_reported: Optional[str] = None


class FederationProtocol:
    """State machines for every federated pod, driven by the event loop.

    `ctx` is the simulation facade providing: now, clusters, pipelines,
    graph, params, send()/at() for messages and timers, effect() for log
    records, and mark_freed() to request scheduling retries in a cluster.
    """

    def __init__(self, ctx):
        self.ctx = ctx
        self.params: FederationParams = ctx.federation_params
        self.proxies: Dict[str, ProxyPod] = {}
        self.chaperons: Dict[Tuple[str, str], PodChaperon] = {}
        self.virtual_nodes: Dict[Tuple[str, str], VirtualNode] = {}
        self._timer_ids = 0

    # -- setup -------------------------------------------------------------

    def initialize_virtual_nodes(self) -> None:
        # Federation setup exchanges initial state, so sources start with
        # accurate aggregates instead of a cold cache.
        for (source, target) in self.ctx.graph.edges:
            state = self.ctx.clusters[target]
            self.virtual_nodes[(source, target)] = VirtualNode(
                target=target,
                capacity=state.aggregate_capacity(),
                allocatable=state.aggregate_allocatable(),
                last_update=0,
            )

    # -- fan-out -----------------------------------------------------------

    def submit(self, pod: PodSpec, source: str) -> bool:
        """Start the protocol for a federation-eligible pod.

        Returns False when the pod is not eligible (the caller schedules it
        locally). A pod with no targets at all cannot run anywhere under the
        directed-graph semantics and goes straight to Unschedulable.
        """
        if not pod.federation_eligible:
            return False
        targets = self.ctx.graph.targets_of(source)
        proxy = ProxyPod(pod=pod, source=source, targets=targets, fanout_time=self.ctx.now)
        self.proxies[pod.pod_id] = proxy
        if not targets:
            self._finish_unschedulable(proxy, reason="no_targets")
            return True
        self.ctx.effect(op="proxy", pod=pod.pod_id, state=proxy.state.value, targets=targets)
        for target in targets:
            self._send_pod_message(
                proxy, target, "fwd", engine.CHAPERON_CREATE,
                {"pod": pod.pod_id, "source": source, "target": target},
            )
        self._arm_timer(proxy, self.ctx.now + self.params.election_timeout_ms)
        return True

    def _send_pod_message(self, proxy: ProxyPod, target: str, direction: str, kind: str, payload: dict) -> None:
        edge = self.ctx.graph.edge(proxy.source, target)
        channel = ("pod", proxy.pod.pod_id, proxy.source, target, direction)
        self.ctx.send(edge, channel, kind, payload)

    def _arm_timer(self, proxy: ProxyPod, when: int) -> None:
        self._timer_ids += 1
        proxy.pending_timer = self._timer_ids
        self.ctx.at(
            when,
            engine.ELECTION_TIMEOUT,
            {"pod": proxy.pod.pod_id, "timer": self._timer_ids},
        )

    # -- target side -------------------------------------------------------

    def on_chaperon_create(self, payload: dict) -> None:
        pod_id, source, target = payload["pod"], payload["source"], payload["target"]
        proxy = self.proxies[pod_id]
        chaperon = PodChaperon(pod=proxy.pod.clone(), parent_source=source, target=target)
        chaperon.annotations.append({"at": self.ctx.now, "dir": "in", "kind": "create"})
        self.chaperons[(pod_id, target)] = chaperon
        self.ctx.effect(op="chaperon", pod=pod_id, cluster=target, state=chaperon.state.value)
        self.try_candidate_schedule(chaperon)

    def try_candidate_schedule(self, chaperon: PodChaperon) -> None:
        """Run the target's own scheduler for a pending chaperon.

        Feasible: reserve the chosen node and report. Infeasible: report
        unschedulable once, then stay silent until the status changes.
        """
        if chaperon.state is not ChaperonState.PENDING_SCHEDULE:
            return
        cluster = self.ctx.clusters[chaperon.target]
        node = schedule_one(chaperon.pod, snapshot_of(cluster), self.ctx.pipelines[chaperon.target])
        if node is not None:
            if self.params.reservations:
                cluster.reserve(chaperon.pod, node)
                self.ctx.effect(
                    op="reserve", pod=chaperon.pod.pod_id, cluster=chaperon.target,
                    node=node, req=chaperon.pod.request.as_list(),
                )
            chaperon.state = ChaperonState.CANDIDATE_RESERVED
            chaperon.reserved_node = node
            self.ctx.effect(
                op="chaperon", pod=chaperon.pod.pod_id, cluster=chaperon.target,
                state=chaperon.state.value,
            )
            self._report(chaperon, REPORT_RESERVED, node=node)
        elif chaperon.last_reported != REPORT_UNSCHEDULABLE:
            self._report(chaperon, REPORT_UNSCHEDULABLE)

    def retry_pending(self, cluster_id: str) -> None:
        """Re-run candidate scheduling after the cluster's state changed."""
        for (pod_id, target), chaperon in list(self.chaperons.items()):
            if target == cluster_id and chaperon.state is ChaperonState.PENDING_SCHEDULE:
                self.try_candidate_schedule(chaperon)

    def _report(self, chaperon: PodChaperon, status: str, node: str = None, reason: str = None) -> None:
        chaperon.last_reported = status
        chaperon.annotations.append(
            {"at": self.ctx.now, "dir": "out", "kind": "report", "status": status}
        )
        proxy = self.proxies[chaperon.pod.pod_id]
        payload = {"pod": chaperon.pod.pod_id, "target": chaperon.target, "status": status}
        if node is not None:
            payload["node"] = node
        if reason is not None:
            payload["reason"] = reason
        self._send_pod_message(proxy, chaperon.target, "rev", engine.CANDIDATE_REPORT, payload)

    # -- source side: reports and election ----------------------------------

    def on_candidate_report(self, payload: dict) -> None:
        pod_id, target, status = payload["pod"], payload["target"], payload["status"]
        proxy = self.proxies[pod_id]
        proxy.reports[target] = CandidateReport(
            target=target, status=status, node=payload.get("node"), at=self.ctx.now
        )
        if payload.get("reason") == "bind_conflict":
            self._on_bind_conflict(proxy, target)
            return
        if proxy.state is ProxyState.CANDIDATES_PENDING:
            self._maybe_elect(proxy)

    def _on_bind_conflict(self, proxy: ProxyPod, target: str) -> None:
        if proxy.state is not ProxyState.ELECTED or proxy.elected_target != target:
            return
        proxy.state = ProxyState.CANDIDATES_PENDING
        proxy.elected_target = None
        self.ctx.effect(op="proxy", pod=proxy.pod.pod_id, state=proxy.state.value)
        if not self._maybe_elect(proxy):
            self._retry_or_give_up(proxy)

    def _reserved_targets(self, proxy: ProxyPod) -> List[str]:
        return sorted(
            t for t, r in proxy.reports.items() if r.status == REPORT_RESERVED
        )

    def _maybe_elect(self, proxy: ProxyPod) -> bool:
        reserved = self._reserved_targets(proxy)
        if not reserved:
            return False
        all_reported = len(proxy.reports) == len(proxy.targets)
        timeout_elapsed = self.ctx.now >= proxy.fanout_time + self.params.election_timeout_ms
        if not (all_reported or timeout_elapsed):
            return False
        self._elect(proxy, reserved)
        return True

    def _aggregate_score(self, proxy: ProxyPod, target: str) -> int:
        vnode = self.virtual_nodes[(proxy.source, target)]
        request = proxy.pod.request
        free_after = ResourceVector(
            max(0, vnode.allocatable.cpu_millicores - request.cpu_millicores),
            max(0, vnode.allocatable.memory_bytes - request.memory_bytes),
            max(0, vnode.allocatable.gpu_count - request.gpu_count),
        )
        return least_allocated_score(free_after, vnode.capacity)

    def _elect(self, proxy: ProxyPod, reserved: List[str]) -> None:
        """Pick the delegate target among reserved candidates.

        Default policy scores virtual-node aggregates with the same
        least-allocated formula the node scheduler uses; prefer_local takes
        the self-edge whenever it is feasible, which is what makes a burst
        topology overflow only on local insufficiency.
        """
        if self.params.election_policy == ELECTION_PREFER_LOCAL and proxy.source in reserved:
            chosen = proxy.source
        else:
            chosen = None
            best = None
            for target in reserved:  # sorted: strict > keeps lexicographic ties
                score = self._aggregate_score(proxy, target)
                if best is None or score > best:
                    chosen, best = target, score
        proxy.state = ProxyState.ELECTED
        proxy.elected_target = chosen
        proxy.pending_timer = None
        log.debug("t=%d elected %s for pod %s among %s",
                  self.ctx.now, chosen, proxy.pod.pod_id, reserved)
        self.ctx.effect(
            op="proxy", pod=proxy.pod.pod_id, state=proxy.state.value, elected=chosen
        )
        self._send_pod_message(
            proxy, chosen, "fwd", engine.DELEGATE_BIND,
            {"pod": proxy.pod.pod_id, "target": chosen},
        )

    def on_election_timeout(self, payload: dict) -> None:
        proxy = self.proxies.get(payload["pod"])
        if proxy is None or proxy.pending_timer != payload["timer"]:
            return
        if proxy.state is not ProxyState.CANDIDATES_PENDING:
            return
        if not self._maybe_elect(proxy):
            self._retry_or_give_up(proxy)

    def _retry_or_give_up(self, proxy: ProxyPod) -> None:
        proxy.retries += 1
        if proxy.retries > self.params.max_retries:
            self._finish_unschedulable(proxy, reason="max_retries")
            return
        backoff = self.params.retry_backoff_ms * (2 ** (proxy.retries - 1))
        self._arm_timer(proxy, self.ctx.now + backoff)

    def _finish_unschedulable(self, proxy: ProxyPod, reason: str) -> None:
        proxy.state = ProxyState.UNSCHEDULABLE
        proxy.pending_timer = None
        proxy.pod.transition(PodPhase.UNSCHEDULABLE)
        self.ctx.effect(
            op="proxy", pod=proxy.pod.pod_id, state=proxy.state.value, reason=reason
        )
        self.ctx.effect(op="unschedulable", pod=proxy.pod.pod_id)
        self._delete_chaperons(proxy, except_target=None)

    def _delete_chaperons(self, proxy: ProxyPod, except_target: Optional[str]) -> None:
        for target in proxy.targets:
            if target == except_target:
                continue
            self._send_pod_message(
                proxy, target, "fwd", engine.CANDIDATE_DELETE,
                {"pod": proxy.pod.pod_id, "target": target},
            )

    # -- delegate bind and cleanup ------------------------------------------

    def on_delegate_bind(self, payload: dict) -> None:
        pod_id, target = payload["pod"], payload["target"]
        proxy = self.proxies[pod_id]
        chaperon = self.chaperons[(pod_id, target)]
        chaperon.annotations.append({"at": self.ctx.now, "dir": "in", "kind": "bind"})
        cluster = self.ctx.clusters[target]
        node = chaperon.reserved_node
        try:
            cluster.bind(proxy.pod, node, at=self.ctx.now)
        except BindError:
            log.debug("t=%d delegate bind conflict for pod %s in %s",
                      self.ctx.now, pod_id, target)
            chaperon.state = ChaperonState.PENDING_SCHEDULE
            chaperon.reserved_node = None
            self.ctx.effect(op="chaperon", pod=pod_id, cluster=target, state=chaperon.state.value)
            self._report(chaperon, REPORT_UNSCHEDULABLE, reason="bind_conflict")
            self.try_candidate_schedule(chaperon)
            return
        chaperon.state = ChaperonState.DELEGATE
        self.ctx.effect(
            op="chaperon", pod=pod_id, cluster=target, state=chaperon.state.value
        )
        self.ctx.bound_pod(proxy.pod, target, node, federated=True, source=proxy.source)
        self.ctx.effect(op="offload", src=proxy.source, dst=target, pod=pod_id)
        for phase in ("Bound", "Running"):
            self._send_pod_message(
                proxy, target, "rev", engine.STATUS_MIRROR,
                {"pod": pod_id, "target": target, "phase": phase},
            )

    def on_status_mirror(self, payload: dict) -> None:
        pod_id, target, phase = payload["pod"], payload["target"], payload["phase"]
        proxy = self.proxies[pod_id]
        proxy.mirrored_phase = phase
        self.ctx.effect(op="mirror", pod=pod_id, phase=phase)
        if (
            phase == "Bound"
            and proxy.state is ProxyState.ELECTED
            and proxy.elected_target == target
        ):
            proxy.state = ProxyState.BOUND
            self.ctx.effect(op="proxy", pod=pod_id, state=proxy.state.value)
            self._delete_chaperons(proxy, except_target=target)

    def on_candidate_delete(self, payload: dict) -> None:
        chaperon = self.chaperons.get((payload["pod"], payload["target"]))
        if chaperon is None or chaperon.state is ChaperonState.DELETED:
            return
        chaperon.annotations.append({"at": self.ctx.now, "dir": "in", "kind": "delete"})
        chaperon.state = ChaperonState.DELETED
        if chaperon.reserved_node is not None and self.params.reservations:
            cluster = self.ctx.clusters[chaperon.target]
            if cluster.release_reservation(chaperon.pod.pod_id):
                self.ctx.effect(
                    op="release", pod=chaperon.pod.pod_id, cluster=chaperon.target,
                    node=chaperon.reserved_node,
                )
                self.ctx.mark_freed(chaperon.target)
        chaperon.reserved_node = None
        self.ctx.effect(
            op="chaperon", pod=chaperon.pod.pod_id, cluster=chaperon.target,
            state=chaperon.state.value,
        )

    def mirror_completion(self, pod: PodSpec, target: str, phase: str) -> None:
        """Push a delegate's terminal phase back to its source proxy."""
        proxy = self.proxies.get(pod.pod_id)
        if proxy is None:
            return
        self._send_pod_message(
            proxy, target, "rev", engine.STATUS_MIRROR,
            {"pod": pod.pod_id, "target": target, "phase": phase},
        )

    # -- virtual-node aggregates ---------------------------------------------

    def broadcast_aggregates(self, target: str) -> None:
        """Send target's aggregate capacity/allocatable to all its sources."""
        state = self.ctx.clusters[target]
        capacity = state.aggregate_capacity()
        allocatable = state.aggregate_allocatable()
        for source in self.ctx.graph.sources_of(target):
            edge = self.ctx.graph.edge(source, target)
            self.ctx.send(
                edge,
                ("vnode", target, source),
                engine.HEARTBEAT_TICK,
                {
                    "phase": "report",
                    "source": source,
                    "target": target,
                    "capacity": capacity.as_list(),
                    "allocatable": allocatable.as_list(),
                },
            )

    def on_heartbeat(self, payload: dict) -> None:
        if payload.get("phase") == "report":
            key = (payload["source"], payload["target"])
            self.virtual_nodes[key] = VirtualNode(
                target=payload["target"],
                capacity=ResourceVector(*payload["capacity"]),
                allocatable=ResourceVector(*payload["allocatable"]),
                last_update=self.ctx.now,
            )
        else:
            for target in sorted(self.ctx.clusters):
                self.broadcast_aggregates(target)
