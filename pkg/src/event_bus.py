"""
Diagnostics Event Bus - solver-to-consumer messaging

Publish/subscribe bus between the time stepper, the convergence driver and
whatever records their progress (CSV writers, probes, test collectors).

Why an event bus?
- The solver should not know which files are written or who is watching
- Consumers can be added per command without touching the stepping loop
- Tests subscribe a collector and assert on the emitted diagnostics

Dispatch is synchronous and in subscription order: every consumer has seen
a step before the next step starts, which keeps written outputs
deterministic.

Event types in use:
- step_completed        → diagnostics CSV, probes, energy checks
- fixed_point_iteration → debug logging
- level_completed       → convergence table progress
- run_failed            → error reporting
"""

import itertools
import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


class EventPriority(Enum):
    """Event priority levels"""
    CRITICAL = 1   # Failures
    HIGH = 2       # Step and level results
    NORMAL = 3     # Progress
    LOW = 4        # Per-iteration detail


@dataclass
class Event:
    """
    One diagnostics record on the bus

    Attributes:
        event_type: "step_completed", "level_completed", ...
        priority: Failures are CRITICAL, per-iteration detail LOW
        source_module: Publisher ("solver", "analysis")
        data: Payload, e.g. step, time, fp_iterations, energy
        timestamp: Wall-clock creation time
        event_id: Sequential number within the bus
    """
    event_type: str
    priority: EventPriority
    source_module: str
    data: Dict[str, Any]
    timestamp: datetime = field(default_factory=datetime.now)
    event_id: int = 0


@dataclass
class Subscription:
    """A consumer registered for one event type"""
    event_type: str
    callback: Callable[[Event], None]
    subscriber_id: str


class DiagnosticsBus:
    """
    Synchronous pub/sub bus for solver diagnostics

    Features:
    - Multiple subscribers per event type, called in subscription order
    - CRITICAL events are logged as warnings
    - Subscriber failures are logged and never abort the run
    """

    def __init__(self):
        self.subscriptions: Dict[str, List[Subscription]] = {}
        self._ids = itertools.count(1)

    def publish(
        self,
        event_type: str,
        source_module: str,
        data: Dict[str, Any],
        priority: EventPriority = EventPriority.NORMAL,
    ) -> int:
        """
        Publish event and notify subscribers before returning

        Returns:
            event_id: Sequential identifier for this event
        """
        event = Event(
            event_type=event_type,
            priority=priority,
            source_module=source_module,
            data=data,
            event_id=next(self._ids),
        )
        if priority == EventPriority.CRITICAL:
            logger.warning(f"CRITICAL event published: {event_type} from {source_module}")

        for subscription in list(self.subscriptions.get(event_type, [])):
            try:
                subscription.callback(event)
            except Exception as e:
                logger.error(
                    f"Subscriber {subscription.subscriber_id} callback failed: {e}",
                    exc_info=True,
                )
        return event.event_id

    def subscribe(self, event_type: str, callback: Callable[[Event], None], subscriber_id: str) -> None:
        """Subscribe to an event type"""
        self.subscriptions.setdefault(event_type, []).append(
            Subscription(event_type, callback, subscriber_id)
        )
        logger.debug(f"Subscription added: {subscriber_id} → {event_type}")

    def unsubscribe(self, event_type: str, subscriber_id: str) -> None:
        """Remove a subscriber from an event type"""
        remaining = [
            sub for sub in self.subscriptions.get(event_type, [])
            if sub.subscriber_id != subscriber_id
        ]
        if remaining:
            self.subscriptions[event_type] = remaining
        else:
            self.subscriptions.pop(event_type, None)

# Process-wide default bus
_event_bus: Optional[DiagnosticsBus] = None


def get_event_bus() -> DiagnosticsBus:
    """Get the process-wide default bus"""
    global _event_bus
    if _event_bus is None:
        _event_bus = DiagnosticsBus()
    return _event_bus


def reset_event_bus() -> DiagnosticsBus:
    """Replace the default bus with a fresh one (one per CLI command)"""
    global _event_bus
    _event_bus = DiagnosticsBus()
    return _event_bus
