"""Simulation driver: builds the world from a RunConfig and runs the loop.

Everything mutates inside the single-threaded event loop. Handlers talk to
each other only through enqueued events (timers) and latency-delayed
messages, never by calling across clusters synchronously; the one synchronous
path is the per-cluster scheduling retry (`kick`) that runs after an event
frees resources in that cluster.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Set

from . import engine
from .cluster import ClusterState, PodPhase, PodSpec
from .config import RunConfig
from .engine import Event, EventQueue, LatencyChannels, RngStreams
from .errors import CausalityError, ConfigError
from .federation import ChaperonState, FederationProtocol
from .graph import FederationEdge
from .metascale import BatchJob, MetaScaler
from .metrics import MetricsReport, build_report, static_info_of
from .scenario import WildfireScenario, generate_trace
from .scheduling import PluginPipeline, builtin_pipeline, schedule_one, snapshot_of

log = logging.getLogger("fedsched")


class Simulation:
    def __init__(self, config: RunConfig):
        self.config = config
        self.now = 0
        self.queue = EventQueue()
        self.rngs = RngStreams(config.seed)
        self.channels = LatencyChannels(self.rngs)
        self.events: List[Event] = []
        self._current: Optional[Event] = None
        self._freed: Set[str] = set()

        self.graph = config.graph
        self.clusters: Dict[str, ClusterState] = {}
        self.pipelines: Dict[str, PluginPipeline] = {}
        for cluster_cfg in config.clusters:
            self.clusters[cluster_cfg.cluster_id] = ClusterState(cluster_cfg.build_spec())
            self.pipelines[cluster_cfg.cluster_id] = builtin_pipeline(
                cluster_cfg.filter_names, cluster_cfg.score_weights
            )

        self.federation_params = config.federation
        self.protocol = FederationProtocol(self)
        self.protocol.initialize_virtual_nodes()

        self.metascalers: Dict[str, MetaScaler] = {}
        if config.metascale.enabled:
            for cluster_id in self.clusters:
                self.metascalers[cluster_id] = MetaScaler(self, cluster_id, config.metascale)

        self.pod_objects: Dict[str, PodSpec] = {}
        self.pod_meta: Dict[str, dict] = {}
        self.pending_local: Dict[str, List[PodSpec]] = {c: [] for c in self.clusters}

        scenario_cfg = config.scenario
        self.scenario: Optional[WildfireScenario] = None
        if scenario_cfg.wildfire_enabled:
            self.scenario = WildfireScenario(
                self,
                scenario_cfg.rule(),
                scenario_cfg.namespace,
                scenario_cfg.submit_cluster,
            )
        self._schedule_initial()

    # -- setup ---------------------------------------------------------------

    def _schedule_initial(self) -> None:
        cfg = self.config
        for entry in cfg.scenario.pods:
            pod = entry.make()
            self._register_pod(pod, entry.cluster, role="workload")
            self.queue.push(
                entry.submit_time, engine.POD_SUBMIT, self._submit_payload(pod, entry.cluster)
            )
        # Fresh job objects per run: the scaler mutates them.
        self._batch_jobs = {
            job.job_id: BatchJob(
                job_id=job.job_id, cluster=job.cluster, node_count=job.node_count,
                duration=job.duration, submit_time=job.submit_time,
            )
            for job in cfg.scenario.batch_jobs
        }
        for job in self._batch_jobs.values():
            self.queue.push(
                job.submit_time, engine.BATCH_JOB_SUBMIT,
                {"job": job.job_id, "cluster": job.cluster},
            )
        trace = list(cfg.scenario.trace)
        if not trace and cfg.scenario.wildfire_enabled:
            trace = generate_trace(
                cameras=cfg.scenario.cameras,
                rate_per_hour=cfg.scenario.rate_per_hour,
                duration_ms=cfg.duration_ms,
                rng=self.rngs.stream("trace"),
                high_probability=cfg.scenario.high_probability,
                high_range=cfg.scenario.high_range,
                low_range=cfg.scenario.low_range,
            )
        for event in trace:
            self.queue.push(
                event.time, engine.SENSOR_MESSAGE,
                {"camera": event.camera_id, "probability": event.smoke_probability},
            )
        if self.graph.edges:
            self.queue.push(0, engine.HEARTBEAT_TICK, {"phase": "tick"})
        for cluster_id in sorted(self.metascalers):
            self.queue.push(
                self.config.metascale.tick_ms,
                engine.REBALANCE_TICK,
                {"phase": "tick", "cluster": cluster_id},
            )

    def _register_pod(self, pod: PodSpec, cluster: str, role: str) -> None:
        if pod.pod_id in self.pod_objects:
            raise ConfigError(f"duplicate pod id {pod.pod_id!r}")
        self.pod_objects[pod.pod_id] = pod
        self.pod_meta[pod.pod_id] = {"source": cluster, "role": role}

    def _submit_payload(self, pod: PodSpec, cluster: str) -> dict:
        return {
            "pod": pod.pod_id,
            "cluster": cluster,
            "ns": pod.namespace,
            "federated": pod.federation_eligible,
            "role": self.pod_meta[pod.pod_id]["role"],
            "req": pod.request.as_list(),
        }

    # -- facade used by protocol / metascale / scenario ------------------------

    def at(self, time: int, kind: str, payload: dict) -> None:
        if time < self.now:
            raise CausalityError(
                f"cannot enqueue {kind} at t={time} before now={self.now}"
            )
        self.queue.push(time, kind, payload)

    def send(self, edge: FederationEdge, channel: tuple, kind: str, payload: dict) -> None:
        when = self.channels.delivery_time(self.now, edge, channel)
        self.queue.push(when, kind, payload)

    def effect(self, **fields) -> None:
        if self._current is not None:
            self._current.effects.append(fields)

    def mark_freed(self, cluster_id: str) -> None:
        self._freed.add(cluster_id)

    def aggregates_changed(self, cluster_id: str) -> None:
        self.protocol.broadcast_aggregates(cluster_id)

    def pending_requests(self, cluster_id: str) -> List[PodSpec]:
        """Unmet container demand a cluster can see: its pending local pods
        plus chaperons currently waiting in it."""
        pods = list(self.pending_local[cluster_id])
        for (pod_id, target), chaperon in self.protocol.chaperons.items():
            if target == cluster_id and chaperon.state is ChaperonState.PENDING_SCHEDULE:
                pods.append(chaperon.pod)
        return pods

    def submit_pod(self, pod: PodSpec, cluster: str, role: str) -> None:
        self._register_pod(pod, cluster, role=role)
        self.at(self.now, engine.POD_SUBMIT, self._submit_payload(pod, cluster))

    def bound_pod(self, pod: PodSpec, cluster: str, node: str, federated: bool, source: str) -> None:
        """Shared post-bind path: record, start running, schedule completion."""
        meta = self.pod_meta.get(pod.pod_id, {})
        self.effect(
            op="bind", pod=pod.pod_id, cluster=cluster, node=node, ns=pod.namespace,
            req=pod.request.as_list(), federated=federated, src=source,
            role=meta.get("role", "workload"),
        )
        pod.transition(PodPhase.RUNNING)
        self.effect(op="phase", pod=pod.pod_id, phase=PodPhase.RUNNING.value)
        self.at(
            self.now + pod.duration, engine.POD_COMPLETE,
            {"pod": pod.pod_id, "cluster": cluster},
        )
        self.aggregates_changed(cluster)

    # -- loop ------------------------------------------------------------------

    def step(self) -> Event:
        event = self.queue.pop()
        assert event.time >= self.now, "event queue violated time order"
        self.now = event.time
        self._current = event
        handler = self._HANDLERS[event.kind]
        handler(self, event.payload)
        self._current = None
        while self._freed:
            cluster_id = sorted(self._freed)[0]
            self._freed.discard(cluster_id)
            self._current = event
            self._kick(cluster_id)
            self._current = None
        self.events.append(event)
        return event

    def run(self) -> MetricsReport:
        processed = 0
        while len(self.queue) and self.queue.peek_time() <= self.config.duration_ms:
            self.step()
            processed += 1
        log.info("run complete: %d events in %d ms simulated", processed, self.now)
        return build_report(self.events, static_info_of(self))

    # -- scheduling paths --------------------------------------------------------

    def _try_schedule_local(self, pod: PodSpec, cluster_id: str) -> bool:
        state = self.clusters[cluster_id]
        node = schedule_one(pod, snapshot_of(state), self.pipelines[cluster_id])
        if node is None:
            return False
        state.bind(pod, node, at=self.now)
        self.bound_pod(pod, cluster_id, node, federated=False, source=cluster_id)
        return True

    def _kick(self, cluster_id: str) -> None:
        # Local workload first, then candidate retries for waiting chaperons.
        still_pending = []
        for pod in self.pending_local[cluster_id]:
            if not self._try_schedule_local(pod, cluster_id):
                still_pending.append(pod)
        self.pending_local[cluster_id] = still_pending
        self.protocol.retry_pending(cluster_id)

    # -- handlers ------------------------------------------------------------------

    def _on_pod_submit(self, payload: dict) -> None:
        pod = self.pod_objects[payload["pod"]]
        cluster_id = payload["cluster"]
        if self.protocol.submit(pod, cluster_id):
            return
        if not self._try_schedule_local(pod, cluster_id):
            self.pending_local[cluster_id].append(pod)

    def _on_pod_complete(self, payload: dict) -> None:
        pod = self.pod_objects[payload["pod"]]
        cluster_id = payload["cluster"]
        state = self.clusters[cluster_id]
        state.unbind(pod.pod_id)
        pod.transition(PodPhase.COMPLETED)
        self.effect(
            op="unbind", pod=pod.pod_id, cluster=cluster_id, node=pod.bound_node,
            req=pod.request.as_list(),
        )
        self.effect(op="phase", pod=pod.pod_id, phase=PodPhase.COMPLETED.value)
        if self.scenario is not None:
            self.scenario.on_pod_complete(pod.pod_id)
        self.protocol.mirror_completion(pod, cluster_id, PodPhase.COMPLETED.value)
        self.aggregates_changed(cluster_id)
        self.mark_freed(cluster_id)

    def _on_batch_job_submit(self, payload: dict) -> None:
        scaler = self.metascalers.get(payload["cluster"])
        if scaler is None:
            log.warning("batch job %s targets cluster without metascale; ignored", payload["job"])
            return
        scaler.submit(self._batch_jobs[payload["job"]])

    def _on_job_complete(self, payload: dict) -> None:
        self.metascalers[payload["cluster"]].on_job_complete(payload["job"])

    def _on_rebalance(self, payload: dict) -> None:
        cluster_id = payload["cluster"]
        scaler = self.metascalers.get(cluster_id)
        if scaler is None:
            return
        if payload.get("phase") == "node_ready":
            scaler.on_node_ready(payload)
            return
        scaler.on_tick()
        nxt = self.now + self.config.metascale.tick_ms
        if nxt <= self.config.duration_ms:
            self.at(nxt, engine.REBALANCE_TICK, {"phase": "tick", "cluster": cluster_id})

    def _on_heartbeat(self, payload: dict) -> None:
        self.protocol.on_heartbeat(payload)
        if payload.get("phase") == "tick":
            nxt = self.now + self.federation_params.heartbeat_ms
            if nxt <= self.config.duration_ms:
                self.at(nxt, engine.HEARTBEAT_TICK, {"phase": "tick"})

    def _on_sensor(self, payload: dict) -> None:
        if self.scenario is not None:
            self.scenario.on_sensor(payload)

    def _on_trigger(self, payload: dict) -> None:
        if self.scenario is not None:
            self.scenario.on_trigger(payload)

    _HANDLERS = {
        engine.POD_SUBMIT: _on_pod_submit,
        engine.POD_COMPLETE: _on_pod_complete,
        engine.BATCH_JOB_SUBMIT: _on_batch_job_submit,
        engine.JOB_COMPLETE: _on_job_complete,
        engine.REBALANCE_TICK: _on_rebalance,
        engine.HEARTBEAT_TICK: _on_heartbeat,
        engine.SENSOR_MESSAGE: _on_sensor,
        engine.TRIGGER_FIRED: _on_trigger,
        engine.CHAPERON_CREATE: lambda self, p: self.protocol.on_chaperon_create(p),
        engine.CANDIDATE_REPORT: lambda self, p: self.protocol.on_candidate_report(p),
        engine.ELECTION_TIMEOUT: lambda self, p: self.protocol.on_election_timeout(p),
        engine.DELEGATE_BIND: lambda self, p: self.protocol.on_delegate_bind(p),
        engine.CANDIDATE_DELETE: lambda self, p: self.protocol.on_candidate_delete(p),
        engine.STATUS_MIRROR: lambda self, p: self.protocol.on_status_mirror(p),
    }


def run_config(config: RunConfig):
    """Convenience wrapper: build, run, and return (simulation, report)."""
    sim = Simulation(config)
    report = sim.run()
    return sim, report
