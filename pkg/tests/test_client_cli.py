import json

import pytest

from trigonauth import client

from conftest import free_port


def run_cli(capsys, *args):
    code = client.main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def addr_arg(stack):
    host, port = stack.as_addr
    return f"{host}:{port}"


class TestRegister:
    def test_success(self, tcp_stack, capsys):
        code, out, _ = run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                               "--user", "user1", "--password", "admin")
        assert code == 0
        assert json.loads(out) == {"registered": "user1"}

    def test_duplicate(self, tcp_stack, capsys):
        run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                "--user", "user1", "--password", "admin")
        code, out, _ = run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                               "--user", "user1", "--password", "admin")
        assert code == 1
        assert json.loads(out)["error"] == "DUPLICATE_USER"

    def test_server_down(self, capsys):
        dead = f"127.0.0.1:{free_port()}"
        code, out, _ = run_cli(capsys, "register", "--as", dead,
                               "--user", "user1", "--password", "admin")
        assert code == 2
        assert json.loads(out)["error"] == "CONNECT_FAILED"

    def test_password_prompted_when_omitted(self, tcp_stack, capsys, monkeypatch):
        monkeypatch.setattr("getpass.getpass", lambda prompt="": "prompted9")
        code, out, _ = run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                               "--user", "user7")
        assert code == 0
        assert json.loads(out) == {"registered": "user7"}


class TestLogin:
    def test_success_emits_token_line(self, tcp_stack, capsys):
        run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                "--user", "user2", "--password", "ascii")
        code, out, _ = run_cli(capsys, "login", "--as", addr_arg(tcp_stack),
                               "--user", "user2", "--password", "ascii")
        assert code == 0
        payload = json.loads(out)
        assert set(payload) == {"token", "expires_unix"}
        assert len(payload["token"]) == 32

    def test_wrong_password(self, tcp_stack, capsys):
        run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                "--user", "user2", "--password", "ascii")
        code, out, _ = run_cli(capsys, "login", "--as", addr_arg(tcp_stack),
                               "--user", "user2", "--password", "asci")
        assert code == 1
        assert "WARNING" in json.loads(out)["warning"]

    def test_unknown_user(self, tcp_stack, capsys):
        code, out, _ = run_cli(capsys, "login", "--as", addr_arg(tcp_stack),
                               "--user", "ghost", "--password", "whatever1")
        assert code == 1
        assert "warning" in json.loads(out)


class TestAccess:
    def _token(self, tcp_stack, capsys):
        run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                "--user", "user3", "--password", "test5")
        _, out, _ = run_cli(capsys, "login", "--as", addr_arg(tcp_stack),
                            "--user", "user3", "--password", "test5")
        return json.loads(out)["token"]

    def test_fresh_token_grants(self, tcp_stack, capsys):
        token = self._token(tcp_stack, capsys)
        code, out, _ = run_cli(capsys, "access", "--as", addr_arg(tcp_stack),
                               "--user", "user3", "--token", token)
        assert code == 0
        assert "resource" in json.loads(out)

    def test_mangled_token(self, tcp_stack, capsys):
        token = self._token(tcp_stack, capsys)
        bad = ("0" if token[0] != "0" else "1") + token[1:]
        code, out, _ = run_cli(capsys, "access", "--as", addr_arg(tcp_stack),
                               "--user", "user3", "--token", bad)
        assert code == 1
        assert json.loads(out)["error"] == "TOKEN_INVALID"


class TestOutputContract:
    def test_single_parseable_line(self, tcp_stack, capsys):
        code, out, err = run_cli(capsys, "register", "--as", addr_arg(tcp_stack),
                                 "--user", "user4", "--password", "test8")
        assert out.count("\n") == 1
        json.loads(out)

    def test_password_never_echoed(self, tcp_stack, capsys):
        secret = "S3kr1t-Pw."
        for args in (
            ("register", "--as", addr_arg(tcp_stack), "--user", "u1",
             "--password", secret),
            ("login", "--as", addr_arg(tcp_stack), "--user", "u1",
             "--password", secret),
            ("login", "--as", addr_arg(tcp_stack), "--user", "u1",
             "--password", secret + "x"),
        ):
            code, out, err = run_cli(capsys, *args)
            assert secret not in out
            assert secret not in err
