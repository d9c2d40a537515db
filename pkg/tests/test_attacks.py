import json
import random

import pytest

from trigonauth import attacks, netio, wire
from trigonauth.attacks import (
    run_guessing,
    run_replay_as_bs,
    run_replay_client_as,
    run_stolen_verifier,
)
from trigonauth.core import AngleConvention

from conftest import free_port, make_tcp_stack


TRUE_PASSWORD = "hunter2kx"


def make_dictionary(true_password, size=60, seed=8):
    rng = random.Random(seed)
    words = {true_password}
    while len(words) < size:
        words.add("".join(chr(rng.randrange(97, 123))
                          for _ in range(rng.randrange(5, 10))))
    ordered = sorted(words)
    return ordered


@pytest.fixture
def victim_stack(tmp_path):
    stack = make_tcp_stack(tmp_path)
    reply = netio.request(stack.as_addr, wire.RegisterRequest("victim", TRUE_PASSWORD))
    assert isinstance(reply, wire.Registered)
    yield stack
    stack.shutdown()


class TestStolenVerifier:
    def test_single_fragments_confirm_nothing(self, victim_stack):
        dictionary = make_dictionary(TRUE_PASSWORD)
        for fragment in ("as", "bs"):
            report = run_stolen_verifier(
                fragment, dictionary, "victim",
                as_store=victim_stack.as_store,
                bs_store=victim_stack.bs_store,
            )
            assert report["confirmations"] == 0
            assert report["confirmed_passwords"] == []

    def test_both_fragments_confirm_true_password(self, victim_stack):
        dictionary = make_dictionary(TRUE_PASSWORD)
        report = run_stolen_verifier(
            "both", dictionary, "victim",
            as_store=victim_stack.as_store,
            bs_store=victim_stack.bs_store,
        )
        assert report["confirmations"] >= 1
        assert TRUE_PASSWORD in report["confirmed_passwords"]

    def test_missing_target_confirms_nothing(self, victim_stack):
        report = run_stolen_verifier(
            "both", make_dictionary(TRUE_PASSWORD), "nobody",
            as_store=victim_stack.as_store,
            bs_store=victim_stack.bs_store,
        )
        assert report["confirmations"] == 0

    def test_works_from_files_via_cli(self, victim_stack, tmp_path, capsys):
        dict_path = tmp_path / "dict.txt"
        dict_path.write_text("\n".join(make_dictionary(TRUE_PASSWORD)) + "\n")
        code = attacks.main([
            "stolen", "--fragment", "both", "--dict", str(dict_path),
            "--user", "victim",
            "--as-store", str(victim_stack.as_path),
            "--bs-store", str(victim_stack.bs_path),
        ])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert TRUE_PASSWORD in report["confirmed_passwords"]

        code = attacks.main([
            "stolen", "--fragment", "as", "--dict", str(dict_path),
            "--user", "victim", "--as-store", str(victim_stack.as_path),
        ])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["confirmations"] == 0


class TestGuessing:
    def test_online_agrees_with_offline(self, victim_stack):
        report = run_guessing(victim_stack.as_addr, "victim", trials=150, seed=5,
                              true_password=TRUE_PASSWORD)
        assert report["trials"] == 150
        assert report["online_matches_offline"] is True
        assert report["online_accepts"] == report["offline_collisions"]

    def test_zero_trials(self, victim_stack):
        report = run_guessing(victim_stack.as_addr, "victim", trials=0, seed=5,
                              true_password=TRUE_PASSWORD)
        assert report["acceptance_rate"] == 0.0

    def test_true_password_accepted(self, victim_stack):
        reply = netio.request(victim_stack.as_addr,
                              wire.LoginRequest("victim", TRUE_PASSWORD))
        assert isinstance(reply, wire.TokenIssued)


class TestReplayClientAs:
    def test_replay_mints_fresh_token(self, victim_stack):
        report = run_replay_client_as(victim_stack.as_addr, "victim", TRUE_PASSWORD)
        assert report["replay_succeeded"] is True
        assert report["fresh_token_on_replay"] is True
        assert report["limitation"].startswith("LIMITATION")
        assert report["registration"] == "already-registered"


class TestReplayAsBs:
    def test_replay_is_inert(self, tmp_path):
        proxy_port = free_port()
        proxy_addr = ("127.0.0.1", proxy_port)
        stack = make_tcp_stack(tmp_path, bs_addr_override=proxy_addr)
        try:
            report = run_replay_as_bs(stack.as_addr, stack.bs_addr, proxy_addr,
                                      "carol", "correct.horse")
            assert report["identical_a_t"] is True
            assert len(report["a_t_values"]) == 2
            assert report["store_replay_reply"] == "StoreOk"
            assert "StoreRequest" in report["captured_message_types"]
            assert "AuthRequest" in report["captured_message_types"]
            # backend store untouched by the replays
            record = stack.bs_store.get("carol")
            assert record is not None
            assert len(stack.bs_store) == 1
        finally:
            stack.shutdown()
