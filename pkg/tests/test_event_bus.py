"""Diagnostics bus dispatch"""

import logging

from src.event_bus import DiagnosticsBus, EventPriority, get_event_bus, reset_event_bus


def test_subscribers_called_in_order():
    bus = DiagnosticsBus()
    calls = []
    bus.subscribe("step_completed", lambda e: calls.append(("a", e.data["step"])), "a")
    bus.subscribe("step_completed", lambda e: calls.append(("b", e.data["step"])), "b")
    bus.publish("step_completed", "test", {"step": 1})
    assert calls == [("a", 1), ("b", 1)]


def test_only_matching_type_is_dispatched():
    bus = DiagnosticsBus()
    seen = []
    bus.subscribe("run_failed", lambda e: seen.append(e.event_type), "failures")
    bus.publish("fixed_point_iteration", "test", {}, EventPriority.LOW)
    bus.publish("run_failed", "test", {}, EventPriority.CRITICAL)
    assert seen == ["run_failed"]


def test_critical_event_logged(caplog):
    bus = DiagnosticsBus()
    with caplog.at_level(logging.WARNING, logger="src.event_bus"):
        bus.publish("run_failed", "solver", {}, EventPriority.CRITICAL)
        bus.publish("step_completed", "solver", {}, EventPriority.HIGH)
    assert len(caplog.records) == 1
    assert "run_failed" in caplog.records[0].getMessage()


def test_failing_subscriber_does_not_stop_dispatch():
    bus = DiagnosticsBus()
    seen = []

    def broken(event):
        raise RuntimeError("boom")

    bus.subscribe("step_completed", broken, "broken")
    bus.subscribe("step_completed", lambda e: seen.append(e.event_id), "ok")
    event_id = bus.publish("step_completed", "test", {})
    assert seen == [event_id]


def test_event_ids_are_sequential():
    bus = DiagnosticsBus()
    assert [bus.publish("step_completed", "test", {"step": s}) for s in range(3)] == [1, 2, 3]


def test_unsubscribe():
    bus = DiagnosticsBus()
    seen = []
    bus.subscribe("level_completed", seen.append, "x")
    bus.unsubscribe("level_completed", "x")
    bus.publish("level_completed", "test", {})
    assert seen == []
    assert "level_completed" not in bus.subscriptions


def test_reset_replaces_default_bus():
    old = get_event_bus()
    new = reset_event_bus()
    assert new is not old
    assert get_event_bus() is new
