import pytest

from otpforge.scenario import ScenarioError, parse_scenario, run_scenario, delay_scenario

HEADER = ('{"seed": 3, "actors": [{"id": "alice", "key": "3132333435363738393031323334353637383930",'
          ' "phase": 0, "t0": 0, "a0": 0, "static": "pw"}]}\n')


def test_delay_boundary_aligned():
    res = run_scenario(parse_scenario(delay_scenario()))
    got = {r.delay: r.status for r in res.rows}
    assert got == {760: "reject", 600: "reject", 551: "reject", 480: "reject",
                   479: "accept", 424: "accept", 362: "accept", 306: "accept"}
    assert {r.reason for r in res.rows if r.delay in (480, 551)} == {"stale"}


def test_presses_only_zero_auth_events():
    text = HEADER + '{"t": 0, "action": "press", "actor": "alice"}\n{"t": 70, "action": "press", "actor": "alice"}\n'
    res = run_scenario(parse_scenario(text))
    assert res.summary() == {"presses": 2, "auth_events": 0, "accepted": 0, "rejected": 0}
    assert res.log_text == ""


def test_same_seed_same_log():
    text = HEADER + "".join(
        f'{{"t": {t}, "action": "forge", "actor": "alice"}}\n' for t in range(100, 400, 50))
    text += '{"t": "7:00", "action": "press", "actor": "alice", "label": "x"}\n'
    text += '{"t": "7:30+", "action": "auth", "actor": "alice", "otp_from": "x"}\n'
    a = run_scenario(parse_scenario(text))
    b = run_scenario(parse_scenario(text))
    assert a.log_text == b.log_text and a.log_text.count("\n") == 7


def test_hundred_presses_then_login():
    lines = [HEADER] + [f'{{"t": {64 + 30 * i}, "action": "press", "actor": "alice"}}\n' for i in range(100)]
    lines.append(f'{{"t": {64 + 30 * 99 + 10}, "action": "auth", "actor": "alice"}}\n')
    res = run_scenario(parse_scenario("".join(lines)))
    assert res.rows[-1].status == "accept"


@pytest.mark.parametrize("text,line", [
    ('{"t": 0, "action": "press", "actor": "a"}\n{"t": -', 2),
    ('{"t": 5, "action": "press", "actor": "a"}\n{"t": 4, "action": "press", "actor": "a"}\n', 2),
    ('{"t": 0, "action": "jump", "actor": "a"}\n', 1),
    ('{"t": 0, "action": "press"}\n', 1),
    ('{"t": "soon", "action": "press", "actor": "a"}\n', 1),
    ('{"t": 0, "action": "press", "actor": "a"}\n{"seed": 1}\n', 2),
    ('[1]\n', 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(text)
    assert exc.value.lineno == line


def test_unknown_actor_and_missing_otp():
    with pytest.raises(ScenarioError, match="unknown actor"):
        run_scenario(parse_scenario('{"t": 0, "action": "press", "actor": "ghost"}\n'))
    with pytest.raises(ScenarioError, match="no displayed OTP"):
        run_scenario(parse_scenario(HEADER + '{"t": 0, "action": "auth", "actor": "alice"}\n'))
