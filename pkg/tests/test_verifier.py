import threading

import pytest
from hypothesis import given, settings, strategies as st

from otpforge.timebase import STEP, SyncModel
from otpforge.token import Otp, new_token
from otpforge.verifier import (
    BARE, CustomerRecord, DuplicateCustomer, Reason, Registry, UnknownCustomer, VerifierConfig,
    compute_B, provision, recover_f, verify,
)


def setup(key, phase=0, a0=0, t0=0, attempts=3):
    return new_token(key, SyncModel(phase), t0, a0), provision("c", key, t0, a0, "pw", attempts)


def test_compute_B():
    assert compute_B(0, 0) == 1
    assert compute_B(63, 0) == 1
    assert compute_B(64, 0) == 2
    with pytest.raises(ValueError):
        compute_B(5, 10)


def test_recover_f_brute_force():
    # oracle: scan the 10-wide window for the matching residue
    for a0 in (0, 3, 9, 12345):
        for B in range(0, 40):
            for lead in range(10):
                cands = [f for f in range(B - 9, B + 1) if (a0 + f) % 10 == lead]
                assert recover_f(lead, a0, B) == cands[0]


def test_genuine_accept_and_recovered_counter(rfc_key):
    tok, rec = setup(rfc_key, phase=20, a0=40)
    otp, _ = tok.press(1000)
    out = verify(rec, otp, 1030)
    assert out.accepted and out.reason is Reason.OK
    assert out.recovered_a == tok.a_counter
    assert out.comparisons == 1
    assert rec.high_water == tok.a_counter


def test_replay_rejected(rfc_key):
    tok, rec = setup(rfc_key)
    otp, _ = tok.press(1000)
    assert verify(rec, otp, 1010).accepted
    out = verify(rec, otp, 1020)
    assert out.reason is Reason.REPLAY and out.comparisons == 0


def test_repeated_otp_same_step_rejected(rfc_key):
    tok, rec = setup(rfc_key, phase=0)
    a, _ = tok.press(1024)
    b, _ = tok.press(1074)  # same 64 s step, fresh generation, same combination
    assert a == b
    assert verify(rec, a, 1030).accepted
    assert verify(rec, b, 1080).reason is Reason.REPLAY


def test_older_otp_rejected_after_newer(rfc_key):
    tok, rec = setup(rfc_key)
    old, _ = tok.press(1000)
    new, _ = tok.press(1200)
    assert verify(rec, new, 1210).accepted
    assert not verify(rec, old, 1220).accepted


def test_stale_boundary_aligned(rfc_key):
    for delay, ok in ((479, True), (480, False)):
        tok, rec = setup(rfc_key, phase=0)
        otp, _ = tok.press(1024)
        out = verify(rec, otp, 1024 + delay)
        assert out.accepted is ok
        if not ok:
            assert out.reason is Reason.STALE


def test_bare_config_has_no_policy(rfc_key):
    tok, rec = setup(rfc_key)
    otp, _ = tok.press(1024)
    assert verify(rec, otp, 1024, BARE).accepted
    assert verify(rec, otp, 1030, BARE).accepted  # no replay check
    bad = Otp(otp.lead, "99999" if otp.body != "99999" else "00000")
    for _ in range(10):
        verify(rec, bad, 1030, BARE)
    assert not rec.locked and rec.failures == 0


def test_lockout_and_reset(rfc_key):
    tok, rec = setup(rfc_key, attempts=3)
    otp, _ = tok.press(1024)
    bad = Otp(otp.lead, "99999" if otp.body != "99999" else "00000")
    for i in range(3):
        assert verify(rec, bad, 1030 + i).reason is Reason.BAD_OTP
    assert rec.locked
    assert verify(rec, otp, 1040).reason is Reason.LOCKED
    rec.reset()
    assert verify(rec, otp, 1040).accepted


def test_accept_resets_failures(rfc_key):
    tok, rec = setup(rfc_key, attempts=3)
    otp, _ = tok.press(1024)
    verify(rec, Otp(otp.lead, "99999" if otp.body != "99999" else "00000"), 1030)
    assert rec.failures == 1
    assert verify(rec, otp, 1031).accepted
    assert rec.failures == 0


def test_submission_before_t0_rejected(rfc_key):
    _, rec = setup(rfc_key, t0=500)
    assert verify(rec, Otp(0, "00000"), 100).reason is Reason.BAD_OTP


@given(st.integers(0, STEP - 1), st.integers(64, 10**7), st.integers(0, 479),
       st.integers(0, 10**6))
@settings(max_examples=300, deadline=None)
def test_recovery_exact_for_any_delay(phase, t, delay, a0):
    tok, rec = setup(b"\x01" * 20, phase=phase, a0=a0)
    otp, _ = tok.press(t)
    out = verify(rec, otp, t + delay, BARE)
    assert out.recovered_a == tok.a_counter
    assert out.accepted


def test_registry_flow(rfc_key):
    reg = Registry()
    tok, _ = setup(rfc_key)
    reg.provision("alice", rfc_key, 0, 0, "pw")
    with pytest.raises(DuplicateCustomer):
        reg.provision("alice", rfc_key, 0, 0, "pw")
    with pytest.raises(UnknownCustomer):
        reg.get("bob")
    otp, _ = tok.press(1024)
    assert reg.authenticate("bob", "pw", str(otp), 1030).reason is Reason.UNKNOWN_CUSTOMER
    assert reg.authenticate("alice", "nope", str(otp), 1030).reason is Reason.BAD_STATIC
    assert reg.authenticate("alice", "pw", "12x456", 1030).reason is Reason.BAD_OTP
    assert reg.authenticate("alice", "pw", str(otp), 1030).accepted
    assert reg.records["alice"].failures == 0


def test_locked_precedes_static(rfc_key):
    reg = Registry()
    reg.provision("alice", rfc_key, 0, 0, "pw", max_attempts=1)
    reg.authenticate("alice", "wrong", "000000", 1000)
    assert reg.authenticate("alice", "wrong", "000000", 1001).reason is Reason.LOCKED


def test_snapshot_roundtrip(tmp_path, rfc_key):
    reg = Registry()
    reg.provision("a", rfc_key, 0, 5, "pw")
    reg.provision("b", b"\x02" * 16, 100, 0, "pw2", max_attempts=5)
    reg.records["b"].failures = 2
    path = tmp_path / "snap.jsonl"
    reg.save_snapshot(path)
    back = Registry.load_snapshot(path)
    assert back.state() == reg.state()
    assert isinstance(back.records["a"], CustomerRecord)


def test_snapshot_bad_line_reports_lineno(tmp_path):
    path = tmp_path / "snap.jsonl"
    path.write_text('{"id": "x"}\n')
    with pytest.raises(Exception, match=":1:"):
        Registry.load_snapshot(path)


def test_concurrent_submissions_accept_once(rfc_key):
    reg = Registry()
    reg.provision("alice", rfc_key, 0, 0, "pw")
    tok, _ = setup(rfc_key)
    otp, _ = tok.press(2048)
    results = []
    barrier = threading.Barrier(8)

    def go():
        barrier.wait()
        results.append(reg.authenticate("alice", "pw", str(otp), 2050).accepted)

    threads = [threading.Thread(target=go) for _ in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert results.count(True) == 1


def test_config_defaults():
    c = VerifierConfig()
    assert (c.max_delay, c.replay_check, c.lockout) == (480, True, True)
