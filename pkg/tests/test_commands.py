from __future__ import annotations

import io
import json

import pytest
from django.core.management import CommandError, call_command

from ledger.models import AttackSweep, DistinguisherReport, ProtocolRun
from quantum.graphstate import complete_graph, path_graph

SINGLE_VERTEX = {"protocol": "protocol1", "mode": "enumerate", "angles": []}
RSP_COALITION = {"protocol": "rsp", "clients": 2, "k": 1, "parties": {"C2": {"honest": False}}}


def _call(name: str, *args, **options) -> str:
    stdout = io.StringIO()
    call_command(name, *args, stdout=stdout, stderr=io.StringIO(), **options)
    return stdout.getvalue()


# --- run ---


@pytest.mark.django_db
def test_run_accepts_honest_server(write_json, tmp_path):
    config = write_json("vertex.json", SINGLE_VERTEX)
    report_file = tmp_path / "reports" / "run.json"
    output = _call("run", config=str(config), out=str(report_file))
    assert "принято" in output
    run = ProtocolRun.objects.get()
    assert run.accepted
    assert run.exit_code == 0
    assert json.loads(report_file.read_text(encoding="utf-8"))["accepted"] is True


@pytest.mark.django_db
def test_run_reports_abort_with_exit_code(write_json):
    config = write_json("attack.json", {**SINGLE_VERTEX, "attack": {"letters": {"1:1": "X"}}})
    with pytest.raises(CommandError) as exc:
        _call("run", config=str(config), as_json=True)
    assert exc.value.returncode == 3
    run = ProtocolRun.objects.get()
    assert run.exit_code == 3
    assert run.abort_probability == pytest.approx(1 / 6)


@pytest.mark.django_db
def test_run_seed_override_samples(write_json):
    config = write_json("rsp.json", {"protocol": "rsp", "theta": 2})
    output = _call("run", config=str(config), mode="sample", seed=99, as_json=True)
    report = json.loads(output)
    assert report["seed"] == 99
    assert report["accepted"] is True
    assert ProtocolRun.objects.get(pk=report["run_id"]).seed == "99"


def test_run_without_recording(write_json, tmp_path):
    config = write_json("vertex.json", SINGLE_VERTEX)
    report = json.loads(_call("run", config=str(config), as_json=True, no_record=True, out="vertex/run.json"))
    assert "run_id" not in report
    assert report["branches"] > 0
    assert (tmp_path / "reports" / "vertex" / "run.json").is_file()


@pytest.mark.parametrize(
    "payload",
    [
        {"protocol": "rsp", "mode": "sample"},
        {"protocol": "ubqc"},
        {"protocol": "rsp", "parties": {"C2": {"honest": False}}},
    ],
)
def test_run_configuration_errors(write_json, payload):
    config = write_json("bad.json", payload)
    with pytest.raises(CommandError) as exc:
        _call("run", config=str(config), no_record=True)
    assert exc.value.returncode == 1


def test_run_rejects_broken_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"protocol": }', encoding="utf-8")
    with pytest.raises(CommandError) as exc:
        _call("run", config=str(path))
    assert exc.value.returncode == 1
    assert "Строка 1, столбец 14" in str(exc.value)


# --- distinguish ---


@pytest.mark.slow
@pytest.mark.django_db
def test_distinguish_with_simulator_passes(write_json):
    config = write_json("coalition.json", RSP_COALITION)
    payload = json.loads(_call("distinguish", config=str(config), simulator="sigma1", as_json=True))
    assert payload["verdict"] == "PASS"
    assert payload["epsilon"] == pytest.approx(0.0, abs=1e-9)
    assert DistinguisherReport.objects.get(pk=payload["report_id"]).simulator == "sigma1"


@pytest.mark.slow
def test_distinguish_without_simulator_fails_strictly(write_json):
    config = write_json("coalition.json", RSP_COALITION)
    with pytest.raises(CommandError) as exc:
        _call("distinguish", config=str(config), strict=True, no_record=True)
    assert exc.value.returncode == 1


@pytest.mark.slow
def test_system_is_indistinguishable_from_itself(write_json):
    real = write_json("real.json", {"protocol": "rsp", "clients": 2, "k": 1})
    ideal = write_json("same.json", {"protocol": "rsp", "clients": 2, "k": 1, "system": "real"})
    payload = json.loads(_call("distinguish", config=str(real), ideal=str(ideal), as_json=True, no_record=True))
    assert payload["epsilon"] == pytest.approx(0.0, abs=1e-9)


def test_distinguish_rejects_unsupported_protocol(write_json):
    config = write_json("stab.json", {"protocol": "protocol3", "angles": [0, 0]})
    with pytest.raises(CommandError) as exc:
        _call("distinguish", config=str(config), no_record=True)
    assert exc.value.returncode == 1


# --- bound ---


@pytest.mark.django_db
def test_bound_identity_only(write_json):
    config = write_json("vertex.json", {"protocol": "protocol1", "angles": []})
    summary = json.loads(_call("bound", config=str(config), weight=0, as_json=True))
    assert summary["attacks"] == 1
    assert summary["verdict"] == "PASS"
    assert AttackSweep.objects.get(pk=summary["sweep_id"]).rows.count() == 1


@pytest.mark.django_db
def test_bound_weight_one_exports_reports(write_json, tmp_path):
    config = write_json("vertex.json", {"protocol": "protocol1", "angles": []})
    csv_file = tmp_path / "reports" / "sweep.csv"
    xlsx_file = tmp_path / "reports" / "sweep.xlsx"
    output = _call("bound", config=str(config), weight=1, out=str(csv_file), xlsx=str(xlsx_file))
    assert "bound 8/9: PASS" in output
    assert len(csv_file.read_text(encoding="utf-8").splitlines()) == 10
    assert xlsx_file.stat().st_size > 0
    assert not AttackSweep.objects.get().with_input


@pytest.mark.slow
@pytest.mark.django_db
def test_bound_on_single_edge_default():
    summary = json.loads(_call("bound", weight=1, as_json=True))
    assert summary["verdict"] == "PASS"
    assert summary["max_p_fail"] <= 8 / 9


def test_bound_rejects_negative_weight():
    with pytest.raises(CommandError) as exc:
        _call("bound", weight=-1, no_record=True)
    assert exc.value.returncode == 1


def test_bound_requires_path_graph(write_json):
    config = write_json("star.json", {"protocol": "protocol1", "graph": complete_graph(3).as_dict()})
    with pytest.raises(CommandError) as exc:
        _call("bound", config=str(config), weight=0, no_record=True)
    assert exc.value.returncode == 1


# --- stabcheck and selftest ---


def test_stabcheck_on_single_edge(write_json, tmp_path):
    graph = write_json("p2.json", path_graph(2).as_dict())
    report_file = tmp_path / "reports" / "stab.json"
    output = _call("stabcheck", str(graph), out=str(report_file))
    assert "Итого: 3 из 3 PASS" in output
    assert json.loads(report_file.read_text(encoding="utf-8"))["verdict"] == "PASS"


def test_stabcheck_warns_about_odd_cycle(write_json):
    graph = write_json("k3.json", complete_graph(3).as_dict())
    output = _call("stabcheck", str(graph), skip_attacks=True)
    assert "не двудольный" in output


def test_stabcheck_reports_unreadable_graph(tmp_path, write_json):
    with pytest.raises(CommandError) as exc:
        _call("stabcheck", str(tmp_path / "missing.json"))
    assert exc.value.returncode == 1
    loop = write_json("loop.json", {"vertices": ["1"], "edges": [["1", "1"]]})
    with pytest.raises(CommandError):
        _call("stabcheck", str(loop))


def test_selftest_subset_as_json():
    results = json.loads(_call("selftest", only=["stabilizers", "stab_honest"], as_json=True))
    assert [result["check"] for result in results] == ["stabilizers", "stab_honest"]
    assert {result["verdict"] for result in results} == {"PASS"}
