import json

import pytest
from fastapi.testclient import TestClient

from chopt.api import create_app
from chopt.cli import main
from chopt.runtime import ClusterSetup, Runtime
from chopt.store import SessionStore
from test_api import payload


@pytest.fixture()
def client(tmp_path):
    runtime = Runtime(
        ClusterSetup(capacity=8, headroom=0.0, seed=3, agents=2),
        SessionStore(tmp_path / "store"),
    )
    with TestClient(create_app(runtime)) as c:
        yield c


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "session.json"
    path.write_text(json.dumps(payload()))
    return path


def finished_session(client, config_file):
    sid = client.post("/sessions", content=config_file.read_bytes()).json()["id"]
    client.post("/ticks", content='{"n": 200}')
    return sid


def test_submit_prints_the_session_id(client, config_file, capsys):
    assert main(["submit", str(config_file)], client=client) == 0
    assert capsys.readouterr().out == "s0001\n"


def test_submit_missing_file_exits_2(client, capsys):
    assert main(["submit", "/no/such/file.json"], client=client) == 2
    assert "no such config file" in capsys.readouterr().err


def test_submit_invalid_config_exits_2(client, tmp_path, capsys):
    bad = payload()
    bad["order"] = "sideways"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["submit", str(path)], client=client) == 2
    assert "error:" in capsys.readouterr().err


def test_status_lists_sessions_as_a_table(client, config_file, capsys):
    main(["submit", str(config_file)], client=client)
    capsys.readouterr()
    assert main(["status"], client=client) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["ID", "STATUS", "TRIALS", "GRANT", "BEST"]
    assert lines[1].startswith("s0001")
    assert "queued" in lines[1]


def test_status_single_session_text(client, config_file, capsys):
    sid = finished_session(client, config_file)
    assert main(["status", sid], client=client) == 0
    out = capsys.readouterr().out
    assert f"id:       {sid}" in out
    assert "status:   terminated (max_session_number)" in out
    assert "best:     trial" in out


def test_status_json_round_trips(client, config_file, capsys):
    sid = finished_session(client, config_file)
    assert main(["status", sid, "--json"], client=client) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["id"] == sid
    assert record["status"] == "terminated"


def test_unknown_session_exits_3(client, capsys):
    assert main(["status", "s0404"], client=client) == 3
    assert "no such session" in capsys.readouterr().err


def test_stop_reports_the_new_status(client, config_file, capsys):
    main(["submit", str(config_file)], client=client)
    capsys.readouterr()
    assert main(["stop", "s0001"], client=client) == 0
    assert capsys.readouterr().out == "s0001 terminated\n"


def test_top_prints_k_rows(client, config_file, capsys):
    sid = finished_session(client, config_file)
    assert main(["top", sid, "-k", "2"], client=client) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split()[:2] == ["TRIAL", "METRIC"]
    assert len(lines) == 3


def test_top_json_matches_the_api(client, config_file, capsys):
    sid = finished_session(client, config_file)
    main(["top", sid, "--json", "-k", "3"], client=client)
    cli_payload = json.loads(capsys.readouterr().out)
    api_payload = client.get(f"/sessions/{sid}/top", params={"k": 3}).json()
    assert cli_payload == api_payload


def test_export_writes_csv_to_stdout(client, config_file, capsys):
    sid = finished_session(client, config_file)
    assert main(["export", sid], client=client) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "session,trial,lr,depth,metric,epochs,state"


def test_export_writes_jsonl_to_a_file(client, config_file, tmp_path, capsys):
    sid = finished_session(client, config_file)
    target = tmp_path / "trials.jsonl"
    assert main(["export", sid, "--format", "jsonl", "-o", str(target)], client=client) == 0
    rows = [json.loads(line) for line in target.read_text().splitlines()]
    assert len(rows) == 6
    assert {row["session"] for row in rows} == {sid}


def test_export_rejects_unknown_format(client, capsys):
    with pytest.raises(SystemExit) as info:
        main(["export", "s0001", "--format", "parquet"], client=client)
    assert info.value.code == 2


def test_unreachable_server_exits_4(capsys):
    assert main(["--server", "http://127.0.0.1:9", "status"]) == 4
    assert "cannot reach server" in capsys.readouterr().err
