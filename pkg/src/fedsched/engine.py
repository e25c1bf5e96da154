"""Discrete-event core: event queue, seeded RNG streams, latency channels.

Events are processed in strict (time, seq) order; seq is a monotonically
increasing enqueue counter, so simultaneous events replay in the order they
were produced. All simulation times are integer milliseconds.

The two periodic timer kinds (HeartbeatTick, RebalanceTick) double as the
kind of the deliveries they cause; the payload's "phase" field separates
the periodic trigger ("tick") from a derived delivery (e.g. an aggregate
report reaching a source, or a repurposed node coming up).
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import EmptyQueue
from .graph import FederationEdge

POD_SUBMIT = "PodSubmit"
BATCH_JOB_SUBMIT = "BatchJobSubmit"
CHAPERON_CREATE = "ChaperonCreate"
CANDIDATE_REPORT = "CandidateReport"
ELECTION_TIMEOUT = "ElectionTimeout"
DELEGATE_BIND = "DelegateBind"
CANDIDATE_DELETE = "CandidateDelete"
STATUS_MIRROR = "StatusMirror"
POD_COMPLETE = "PodComplete"
JOB_COMPLETE = "JobComplete"
REBALANCE_TICK = "RebalanceTick"
HEARTBEAT_TICK = "HeartbeatTick"
SENSOR_MESSAGE = "SensorMessage"
TRIGGER_FIRED = "TriggerFired"

EVENT_KINDS = frozenset(
    {
        POD_SUBMIT,
        BATCH_JOB_SUBMIT,
        CHAPERON_CREATE,
        CANDIDATE_REPORT,
        ELECTION_TIMEOUT,
        DELEGATE_BIND,
        CANDIDATE_DELETE,
        STATUS_MIRROR,
        POD_COMPLETE,
        JOB_COMPLETE,
        REBALANCE_TICK,
        HEARTBEAT_TICK,
        SENSOR_MESSAGE,
        TRIGGER_FIRED,
    }
)


@dataclass
class Event:
    time: int
    seq: int
    kind: str
    payload: dict = field(default_factory=dict)
    # State changes produced while handling this event, for the log.
    effects: List[dict] = field(default_factory=list)


class EventQueue:
    def __init__(self):
        self._heap: List[Tuple[int, int, Event]] = []
        self._seq = 0

    def push(self, time: int, kind: str, payload: dict) -> Event:
        assert kind in EVENT_KINDS, f"unknown event kind {kind!r}"
        event = Event(time=time, seq=self._seq, kind=kind, payload=payload)
        heapq.heappush(self._heap, (time, self._seq, event))
        self._seq += 1
        return event

    def pop(self) -> Event:
        if not self._heap:
            raise EmptyQueue("event queue is empty")
        return heapq.heappop(self._heap)[2]

    def peek_time(self) -> Optional[int]:
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


class RngStreams:
    """Per-subsystem RNG streams derived from one root seed by stable labels.

    Stream seeds come from SHA-256 of "<root>/<label>", so adding a new
    subsystem (a new label) never perturbs the draws of existing ones.
    """

    def __init__(self, root_seed: int):
        self.root_seed = root_seed
        self._streams: Dict[str, random.Random] = {}

    def stream(self, label: str) -> random.Random:
        rng = self._streams.get(label)
        if rng is None:
            digest = hashlib.sha256(f"{self.root_seed}/{label}".encode()).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            self._streams[label] = rng
        return rng


class LatencyChannels:
    """FIFO ordering per logical channel on top of jittered edge latency.

    A later send on the same channel never arrives before an earlier one,
    even when the jitter draw alone would reorder them. Channels model the
    annotation message streams between a proxy and its candidates, which
    are backed by ordered API-server writes, not a lossy wire.
    """

    def __init__(self, rngs: RngStreams):
        self._rngs = rngs
        self._last_delivery: Dict[tuple, int] = {}

    def delivery_time(self, now: int, edge: FederationEdge, channel: tuple) -> int:
        jitter = 0
        if edge.latency.jitter_ms > 0:
            rng = self._rngs.stream(f"latency/{edge.source}->{edge.target}")
            jitter = rng.randint(0, edge.latency.jitter_ms)
        when = now + edge.latency.base_ms + jitter
        floor = self._last_delivery.get(channel)
        if floor is not None and when < floor:
            when = floor
        self._last_delivery[channel] = when
        return when
