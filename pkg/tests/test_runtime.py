import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smforge import compile_machine
from smforge.runtime import (
    NullPlatform,
    PlatformBinding,
    RuntimeConfig,
    UnboundOperationError,
    create_context,
    load_event_script,
    run_script,
    step,
    trace_to_ndjson,
)

from conftest import analyze_ok, parse_ok


def build(src: str, machine: str = "M"):
    return compile_machine(analyze_ok(parse_ok(src)), machine)


COUNTER = """
interface I { var n: int = 0 var x: real = 0.0 event go }
machine M requires I {
  initial state A {
    entry n := 1
    during n := 2
    exit n := 3
  }
  state B {
    entry n := 4
  }
  transition A -> B on go / x := 9.0
  transition B -> A
}
"""


class Recorder(PlatformBinding):
    def __init__(self, cm, writes=None):
        self.bound_ops = frozenset(op.name for op in cm.external_ops)
        self.calls = []
        self.writes = writes or {}

    def invoke(self, name, args):
        self.calls.append((name, tuple(args)))
        return self.writes.get(name)


def test_create_context_state():
    cm = build(COUNTER)
    ctx = create_context(cm, NullPlatform(cm))
    assert ctx.state_name == "A"
    assert ctx.cycle_number == 0
    assert ctx.clock_counters == []
    # entry has not run yet
    assert ctx.get_var("n") == 0


def test_entry_runs_on_first_step_not_creation():
    cm = build(COUNTER)
    ctx = create_context(cm, NullPlatform(cm))
    rec = step(ctx, events=set())
    assert rec.cycle == 0
    assert ctx.get_var("n") == 2  # entry then during (quiescent cycle)
    assert rec.fired is None


def test_fire_order_exit_action_entry_same_cycle():
    cm = build(COUNTER)
    ctx = create_context(cm, NullPlatform(cm), RuntimeConfig(watch=("n", "x")))
    step(ctx, events=set())
    rec = step(ctx, events={"go"})
    # exit set n=3, action set x=9.0, entry set n=4, during skipped
    assert rec.fired == 0
    assert rec.state_before == "A" and rec.state_after == "B"
    assert rec.watch == {"n": 4, "x": 9.0}


def test_during_skipped_on_firing_cycle():
    cm = build(COUNTER)
    ctx = create_context(cm, NullPlatform(cm))
    rec = step(ctx, events={"go"})  # fires on the very first cycle
    assert rec.fired == 0
    assert ctx.get_var("n") == 4  # A.entry(1), A.exit(3), B.entry(4); no during


def test_quiescent_cycle_runs_during():
    cm = build(COUNTER)
    ctx = create_context(cm, NullPlatform(cm))
    step(ctx, events=set())
    rec = step(ctx, events=set())
    assert rec.fired is None
    assert rec.state_before == rec.state_after == "A"
    assert ctx.get_var("n") == 2


def test_events_valid_for_exactly_one_cycle():
    cm = build(COUNTER)
    ctx = create_context(cm, NullPlatform(cm))
    step(ctx, events={"go"})
    assert ctx.state_name == "B"
    # B -> A is eventless and fires immediately next cycle
    rec = step(ctx, events=set())
    assert rec.fired == 1 and ctx.state_name == "A"


def test_priority_first_enabled_in_table_order():
    src = """
interface I { var x: real = 5.0 event go }
machine M requires I {
  initial state A
  state B
  state C
  transition A -> B [x > 1.0]
  transition A -> C [x > 0.0]
}
"""
    cm = build(src)
    ctx = create_context(cm, NullPlatform(cm))
    rec = step(ctx, events=set())
    assert rec.fired == 0 and ctx.state_name == "B"


def test_trigger_and_guard_conjunction():
    src = """
interface I { var x: real = 0.0 event go }
machine M requires I {
  initial state A { during x := x + 1.0 }
  state B
  transition A -> B on go [x >= 2.0]
}
"""
    cm = build(src)
    ctx = create_context(cm, NullPlatform(cm))
    step(ctx, events={"go"})  # guard false
    assert ctx.state_name == "A"
    step(ctx, events=set())  # guard now true, no trigger
    assert ctx.state_name == "A"
    rec = step(ctx, events={"go"})
    assert ctx.state_name == "B" and rec.fired == 0


def test_finished_on_final_state():
    src = """
machine M {
  initial state A
  final state F
  transition A -> F
}
"""
    cm = build(src)
    ctx = create_context(cm, NullPlatform(cm))
    rec = step(ctx, events=set())
    assert rec.state_after == "F"
    assert ctx.status == "finished"
    with pytest.raises(RuntimeError):
        step(ctx, events=set())


def test_clock_counters_increment_each_cycle():
    cm = build("machine M { clock T initial state A }")
    ctx = create_context(cm, NullPlatform(cm))
    assert ctx.clock_counters == [0]
    for n in range(1, 6):
        step(ctx, events=set())
        assert ctx.clock_counters == [n]


@given(reset_at=st.integers(min_value=0, max_value=30))
@settings(max_examples=30, deadline=None)
def test_clock_law_since_after_reset(reset_at):
    """since(T) at cycle n equals (n - lastReset) x unit, exactly."""
    src = """
interface I { var s: real = -1.0 event rst }
machine M requires I {
  clock T
  initial state A { during s := since(T) }
  transition A -> A on rst / #T
}
"""
    cm = build(src)
    ctx = create_context(cm, NullPlatform(cm), RuntimeConfig(watch=("s",)))
    records = []
    for n in range(40):
        records.append(step(ctx, events={"rst"} if n == reset_at else set()))
    for n, rec in enumerate(records):
        if n == reset_at:
            continue  # firing cycle: during skipped
        last_reset = reset_at if n > reset_at else 0
        assert rec.watch["s"] == float(n - last_reset)


def test_time_unit_scaling():
    src = """
interface I { var s: real = 0.0 }
machine M requires I {
  clock T
  initial state A { during s := since(T) }
}
"""
    cm = build(src)
    cfg = RuntimeConfig(control_dt_s=0.1, time_unit_s=0.05, watch=("s",))
    ctx = create_context(cm, NullPlatform(cm), cfg)
    step(ctx, events=set())
    rec = step(ctx, events=set())
    assert rec.watch["s"] == 2.0  # one elapsed cycle = 2 time units


def test_unbound_operation_error(taxis_cm):
    class Empty(PlatformBinding):
        bound_ops = frozenset()

    with pytest.raises(UnboundOperationError) as exc:
        create_context(taxis_cm, Empty())
    assert "CheckIlluminationStatus" in str(exc.value)


def test_invalid_config_rejected(aggregation_cm):
    with pytest.raises(ValueError):
        create_context(aggregation_cm, NullPlatform(aggregation_cm), RuntimeConfig(time_unit_s=0.0))
    with pytest.raises(ValueError):
        create_context(aggregation_cm, NullPlatform(aggregation_cm), RuntimeConfig(control_dt_s=-1.0))
    with pytest.raises(ValueError):
        create_context(
            aggregation_cm, NullPlatform(aggregation_cm), RuntimeConfig(watch=("nosuch",))
        )


def test_unknown_event_rejected(aggregation_cm):
    ctx = create_context(aggregation_cm, NullPlatform(aggregation_cm))
    with pytest.raises(ValueError):
        step(ctx, events={"mystery"})


# --- operations -----------------------------------------------------------------


OPS = """
interface I {
  var acc: real = 0.0
  op External(a: real)
  op Doubler(a: real)
}
operation Doubler(a: real) pre a >= 0.0 post acc >= 0.0 {
  initial state S { entry acc := acc + a; acc := acc + a }
  final state F
  transition S -> F
}
machine M requires I {
  initial state A { entry External(1.5); Doubler(2.0) }
}
"""


def test_operation_dispatch_and_recording():
    cm = build(OPS)
    platform = Recorder(cm)
    ctx = create_context(cm, platform, RuntimeConfig(watch=("acc",)))
    rec = step(ctx, events=set())
    assert rec.ops == (("External", (1.5,)), ("Doubler", (2.0,)))
    assert platform.calls == [("External", (1.5,))]
    assert rec.watch["acc"] == 4.0  # body ran twice-add


def test_platform_writes_applied():
    cm = build(OPS)
    platform = Recorder(cm, writes={"External": {"acc": 10.0}})
    ctx = create_context(cm, platform, RuntimeConfig(watch=("acc",)))
    rec = step(ctx, events=set())
    assert rec.watch["acc"] == 14.0


def test_platform_override_of_defined_op():
    cm = build(OPS)

    class Override(Recorder):
        def __init__(self, cm):
            super().__init__(cm)
            self.bound_ops = self.bound_ops | {"Doubler"}

    platform = Override(cm)
    ctx = create_context(cm, platform, RuntimeConfig(watch=("acc",)))
    rec = step(ctx, events=set())
    # body skipped; platform invoked instead; contracts still checked
    assert rec.watch["acc"] == 0.0
    assert platform.calls == [("External", (1.5,)), ("Doubler", (2.0,))]


def test_precondition_violation_faults():
    src = OPS.replace("Doubler(2.0)", "Doubler(0.0 - 1.0)")
    cm = build(src)
    ctx = create_context(cm, Recorder(cm))
    rec = step(ctx, events=set())
    assert ctx.status == "faulted"
    assert rec.fault == "preconditionViolation Doubler"
    assert ctx.fault_reason.startswith("preconditionViolation")


def test_postcondition_violation_faults():
    src = OPS.replace("post acc >= 0.0", "post acc < 0.0")
    cm = build(src)
    ctx = create_context(cm, Recorder(cm))
    rec = step(ctx, events=set())
    assert rec.fault == "postconditionViolation Doubler"


def test_postcondition_downgrade_to_warning():
    src = OPS.replace("post acc >= 0.0", "post acc < 0.0")
    cm = build(src)
    ctx = create_context(cm, Recorder(cm), RuntimeConfig(post_violation_warns=True))
    rec = step(ctx, events=set())
    assert rec.fault is None
    assert rec.warnings == ("postconditionViolation Doubler",)
    assert ctx.status == "running"


def test_step_budget_exceeded():
    src = """
interface I { var x: real = 0.0 op Spin() }
operation Spin() {
  initial state S { during x := 0.0 }
  final state F
  transition S -> F [x > 1.0]
}
machine M requires I { initial state A { entry Spin() } }
"""
    cm = build(src)
    ctx = create_context(cm, Recorder(cm), RuntimeConfig(op_step_budget=50))
    rec = step(ctx, events=set())
    assert rec.fault == "stepBudgetExceeded Spin"


def test_recursive_operation_depth_fault():
    src = """
interface I { op Rec() }
operation Rec() {
  initial state S { entry Rec() }
  final state F
  transition S -> F
}
machine M requires I { initial state A { entry Rec() } }
"""
    cm = build(src)
    ctx = create_context(cm, Recorder(cm), RuntimeConfig(op_call_depth=8))
    rec = step(ctx, events=set())
    assert rec.fault is not None and rec.fault.startswith("stepBudgetExceeded")


def test_division_by_zero_faults():
    src = """
interface I { var x: real = 0.0 }
machine M requires I { initial state A { entry x := 1.0 / x } }
"""
    cm = build(src)
    ctx = create_context(cm, NullPlatform(cm))
    rec = step(ctx, events=set())
    assert rec.fault == "arithmetic divisionByZero"
    assert ctx.status == "faulted"


def test_zero_time_operations():
    """Operation bodies consume no cycles and no clock ticks."""
    src = """
interface I { var x: real = 0.0 op Long() }
operation Long() {
  initial state S { entry x := x + 1.0 }
  state Mid { entry x := x + 1.0 }
  final state F
  transition S -> Mid
  transition Mid -> F
}
machine M requires I { clock T initial state A { entry Long(); Long() } }
"""
    cm = build(src)
    ctx = create_context(cm, Recorder(cm), RuntimeConfig(watch=("x",)))
    rec = step(ctx, events=set())
    assert rec.watch["x"] == 4.0
    assert rec.cycle == 0 and ctx.cycle_number == 1
    assert ctx.clock_counters == [1]  # only the end-of-cycle increment


# --- run_script and serialization --------------------------------------------


def test_run_script_aggregation_example(aggregation_cm):
    script = [{"seeWall"}] * 5 + [{"seeRobot"}] * 5
    ctx = create_context(aggregation_cm, NullPlatform(aggregation_cm))
    records = run_script(ctx, script, 100)
    states = [r.state_after for r in records]
    assert states == ["S1"] * 5 + ["S2"] * 5
    assert records[5].fired == 0


def test_run_script_empty():
    cm = build(COUNTER)
    ctx = create_context(cm, NullPlatform(cm))
    assert run_script(ctx, [], 0) == []
    assert run_script(ctx, [set()], 0) == []


def test_run_script_stops_on_fault():
    src = """
interface I { var x: real = 0.0 event go }
machine M requires I {
  initial state A
  transition A -> A on go / x := 1.0 / x
}
"""
    cm = build(src)
    ctx = create_context(cm, NullPlatform(cm))
    records = run_script(ctx, [set(), {"go"}, set(), set()], 10)
    assert len(records) == 2
    assert records[-1].fault is not None


def test_trace_ndjson_shape(aggregation_cm):
    ctx = create_context(
        aggregation_cm, NullPlatform(aggregation_cm), RuntimeConfig(watch=("linearSpeed",))
    )
    records = run_script(ctx, [{"seeWall"}, {"seeRobot"}], 10)
    lines = trace_to_ndjson(records).splitlines()
    objs = [json.loads(line) for line in lines]
    assert list(objs[0]) == [
        "cycle", "state_before", "events", "fired", "state_after", "ops", "watch",
    ]
    assert objs[0]["cycle"] == 0
    assert objs[1]["fired"] == 0
    assert objs[0]["ops"][0]["name"] == "MoveClockwise"


def test_trace_determinism(taxis_cm):
    script = [set() if i % 4 else {"robotDetected"} for i in range(60)]

    def run():
        ctx = create_context(taxis_cm, NullPlatform(taxis_cm))
        return trace_to_ndjson(run_script(ctx, script, 60))

    assert run() == run()


def test_entry_exit_pairing_fuzz(aggregation_cm):
    import random

    rng = random.Random(7)
    script = [
        {rng.choice(["seeWall", "seeRobot"])} for _ in range(300)
    ]
    ctx = create_context(aggregation_cm, NullPlatform(aggregation_cm))
    records = run_script(ctx, script, 300)
    # count S2 entries and exits via state changes
    s2_in = sum(1 for r in records if r.state_before == "S1" and r.state_after == "S2")
    s2_out = sum(1 for r in records if r.state_before == "S2" and r.state_after == "S1")
    assert abs(s2_in - s2_out) <= 1


def test_load_event_script():
    text = '{"cycle": 0, "events": ["a"]}\n{"cycle": 2, "events": []}\n'
    assert load_event_script(text) == [{"a"}, set(), set()]
    with pytest.raises(ValueError):
        load_event_script('{"cycle": 0, "events": ["a"]}\n{"cycle": 0, "events": []}')
    with pytest.raises(ValueError):
        load_event_script('{"cycle": -1, "events": []}')
    assert load_event_script("") == []
