from __future__ import annotations

import io
import json

import pytest
from django.db import IntegrityError
from openpyxl import load_workbook

from adversary.attacks import AttackStage
from ledger.config import MAX_SEED, AttackSpec, RunConfig, RunConfigError, load_run_config, parse_json, run_config_from_payload
from ledger.models import AttackSweep, ProtocolRun, Verdict
from ledger.services import (
    EXIT_ABORT,
    EXIT_ACCEPT,
    SELFTEST_CHECKS,
    bound_instance,
    build_distinguish_system,
    check_stabilizers,
    execute_run,
    export_sweep_to_csv,
    export_sweep_to_excel,
    prepare_run,
    record_run,
    record_sweep,
    run_selftest,
    run_sweep,
    sweep_dataframe,
)
from quantum.graphstate import complete_graph, cycle_graph, path_graph
from quantum.mbqc import path_pattern
from quantum.pauli import PauliString

SINGLE_VERTEX = {"protocol": "protocol1", "mode": "enumerate", "angles": []}


# --- configuration ---


@pytest.mark.parametrize(
    ("text", "line", "column"),
    [('{\n  "protocol": \n}', 3, 1), ('{"protocol": }', 1, 14)],
)
def test_json_errors_carry_position(text, line, column):
    with pytest.raises(RunConfigError) as exc:
        parse_json(text)
    assert (exc.value.line, exc.value.column) == (line, column)
    assert str(exc.value).startswith(f"Строка {line}, столбец {column}: ")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"protocol": "qkd"},
        {"protocol": "rsp", "mode": "fast"},
        {"protocol": "rsp", "seed": -1},
        {"protocol": "rsp", "seed": MAX_SEED + 1},
        {"protocol": "rsp", "mode": "sample"},
    ],
)
def test_run_config_validation(kwargs):
    with pytest.raises(RunConfigError):
        RunConfig(**kwargs)


def test_overrides_keep_the_rest():
    config = run_config_from_payload({"protocol": "rsp", "clients": 3, "theta": 5})
    assert config.mode == ProtocolRun.Mode.ENUMERATE
    sampled = config.with_overrides(mode="sample", seed=MAX_SEED)
    assert (sampled.mode, sampled.seed) == ("sample", MAX_SEED)
    assert sampled.option("clients") == 3
    assert sampled.as_dict()["theta"] == 5


def test_payload_reads_angles_and_parties():
    config = run_config_from_payload(
        {"protocol": "ubqc", "angles": [1, 2], "parties": {"C2": {"honest": False}, "server": True}}
    )
    assert config.pattern.as_dict() == path_pattern([1, 2]).as_dict()
    assert config.dishonest() == ("C2",)
    assert not config.is_honest("C2")
    assert config.is_honest("C1")
    assert config.options == {}


@pytest.mark.parametrize(
    "payload",
    [
        [],
        {"mode": "sample"},
        {"protocol": "rsp", "seed": True},
        {"protocol": "ubqc", "angles": [True]},
        {"protocol": "ubqc", "angles": "0,1"},
        {"protocol": "rsp", "parties": {"C2": "no"}},
        {"protocol": "rsp", "parties": ["C2"]},
        {"protocol": "rsp", "graph": {"vertices": ["1"], "edges": [["1", "1"]]}},
    ],
)
def test_malformed_payloads(payload):
    with pytest.raises(RunConfigError):
        run_config_from_payload(payload)


def test_attack_spec():
    spec = AttackSpec.from_payload({"letters": {"1:1": "X"}, "stage": "after_entangling"})
    assert spec.op == PauliString.single("X", "1:1")
    assert spec.stage is AttackStage.AFTER_ENTANGLING
    assert spec.as_dict() == {"letters": {"1:1": "X"}, "stage": "after_entangling"}
    assert AttackSpec.from_payload({"letters": {"2": "z"}}).stage is AttackStage.BEFORE_ENTANGLING
    for payload in ({"letters": ["X"]}, {"letters": {"1": "Q"}}, {"letters": {"1": "X"}, "stage": "midway"}):
        with pytest.raises(RunConfigError):
            AttackSpec.from_payload(payload)


def test_referenced_graph_file(write_json):
    write_json("p3.json", path_graph(3).as_dict())
    path = write_json("run.json", {"protocol": "protocol3", "graph_file": "p3.json", "angles": [0, 0]})
    config = load_run_config(path)
    assert config.graph == path_graph(3)
    assert config.source == path
    missing = write_json("broken.json", {"protocol": "protocol3", "graph_file": "absent.json"})
    with pytest.raises(RunConfigError):
        load_run_config(missing)
    with pytest.raises(RunConfigError):
        load_run_config(path.parent / "nowhere.json")


def test_pattern_is_required():
    config = RunConfig("ubqc")
    with pytest.raises(RunConfigError):
        config.require_pattern()
    with pytest.raises(RunConfigError):
        prepare_run(config)


# --- models ---


@pytest.mark.django_db
def test_protocol_run_keeps_full_seed(protocol_run_factory):
    run = protocol_run_factory(seed=str(MAX_SEED))
    run.refresh_from_db()
    assert run.seed == str(MAX_SEED)
    assert run.seed_value == MAX_SEED
    assert run.get_protocol_display() == "Удалённое приготовление состояния"


@pytest.mark.django_db
def test_sweep_rows_are_ordered(attack_sweep_factory, attack_sweep_row_factory):
    sweep = attack_sweep_factory()
    first = attack_sweep_row_factory(sweep=sweep)
    second = attack_sweep_row_factory(sweep=sweep)
    assert (first.order, second.order) == (1, 2)
    assert list(sweep.rows.values_list("order", flat=True)) == [1, 2]


@pytest.mark.django_db
def test_sweep_row_order_is_unique(attack_sweep_factory, attack_sweep_row_factory):
    sweep = attack_sweep_factory()
    attack_sweep_row_factory(sweep=sweep, order=1)
    with pytest.raises(IntegrityError):
        attack_sweep_row_factory(sweep=sweep, order=1)


@pytest.mark.django_db
def test_add_rows_numbers_from_one(attack_sweep_factory):
    sweep = attack_sweep_factory()
    rows = [
        {"attack": "X1:0", "stage": "before_entangling", "p_accept": 1.0, "p_fail": 0.0, "bound": 1.0, "in_e": True},
        {"attack": "Z1:0", "stage": "before_entangling", "p_accept": 0.5, "p_fail": 0.0, "bound": 0.5, "in_e": True},
    ]
    sweep.add_rows(rows)
    assert list(sweep.rows.values_list("order", "attack")) == [(1, "X1:0"), (2, "Z1:0")]


@pytest.mark.django_db
def test_distinguisher_report_factory(distinguisher_report_factory):
    report = distinguisher_report_factory(verdict=Verdict.FAIL, epsilon=0.25)
    assert report.get_verdict_display() == "Не пройдено"


# --- runs ---


def test_prepare_ubqc_run_feeds_quantum_input():
    config = run_config_from_payload({"protocol": "ubqc", "angles": [3], "input": [0, 1]})
    prepared = prepare_run(config)
    (state,) = prepared.quantum_inputs.values()
    assert state.labels == ("psi0",)
    assert prepared.output == ("C", "rho")


@pytest.mark.parametrize(
    "payload",
    [
        {"protocol": "rsp", "attack": {"letters": {"1": "X"}}},
        {"protocol": "rsp", "theta": 9},
        {"protocol": "rsp", "clients": 1},
        {"protocol": "rsp", "parties": {"C2": {"honest": False}}},
        {"protocol": "ubqc", "angles": [0], "parties": {"server": {"honest": False}}},
        {"protocol": "ubqc", "angles": [0], "input": [1, 0, 0]},
        {"protocol": "ubqc", "angles": [0], "attack": {"letters": {"1": "Z"}}, "parties": {"server": True}},
    ],
)
def test_prepare_run_rejects_inconsistent_configs(payload):
    with pytest.raises(RunConfigError):
        prepare_run(run_config_from_payload(payload))


def test_enumerated_honest_trap_run_accepts():
    outcome = execute_run(run_config_from_payload(SINGLE_VERTEX))
    assert outcome.accepted
    assert outcome.exit_code == EXIT_ACCEPT
    assert outcome.abort_probability == pytest.approx(0.0, abs=1e-9)
    assert outcome.fingerprint is not None
    assert sum(row["probability"] for row in outcome.outputs) == pytest.approx(1.0)


def test_enumerated_attack_aborts_sometimes():
    payload = {**SINGLE_VERTEX, "attack": {"letters": {"1:1": "X"}}}
    outcome = execute_run(run_config_from_payload(payload))
    assert not outcome.accepted
    assert outcome.exit_code == EXIT_ABORT
    assert outcome.abort_probability == pytest.approx(1 / 6)


@pytest.mark.django_db
def test_sampled_rsp_run_is_recorded():
    config = run_config_from_payload({"protocol": "rsp", "mode": "sample", "seed": 42, "theta": 3})
    outcome = execute_run(config)
    assert outcome.accepted
    assert "rsp" in outcome.audit
    assert outcome.transcript
    run = record_run(outcome)
    run.refresh_from_db()
    assert run.protocol == ProtocolRun.Protocol.RSP
    assert run.fingerprint == outcome.fingerprint
    assert run.config["theta"] == 3
    assert run.seed_value == 42


def test_sampled_runs_are_reproducible():
    config = run_config_from_payload({"protocol": "ubqc", "mode": "sample", "seed": 7, "angles": [2, 5]})
    first, second = execute_run(config), execute_run(config)
    assert first.transcript == second.transcript
    assert first.fingerprint == second.fingerprint


# --- distinguishers ---


def test_distinguish_system_choices():
    config = run_config_from_payload({"protocol": "rsp", "clients": 2, "k": 1, "parties": {"C2": {"honest": False}}})
    assert build_distinguish_system(config, "real").name == "πRSP[n=2,k=1]"
    assert build_distinguish_system(config, "ideal", "sigma1").name == "RSP∘σD[n=2,k=1]"
    with pytest.raises(RunConfigError):
        build_distinguish_system(config, "ideal", "sigma2")
    with pytest.raises(RunConfigError):
        build_distinguish_system(config, "ideal", "sigma9")
    stranger = run_config_from_payload({"protocol": "rsp", "parties": {"C7": {"honest": False}}})
    with pytest.raises(RunConfigError):
        build_distinguish_system(stranger, "real")
    with pytest.raises(RunConfigError):
        build_distinguish_system(run_config_from_payload({"protocol": "protocol3", "angles": [0, 0]}), "real")


# --- sweeps ---


def test_bound_instance_sources():
    assert bound_instance(None, False).pattern.as_dict() == path_pattern([0]).as_dict()
    from_graph = bound_instance(run_config_from_payload({"protocol": "protocol1", "graph": path_graph(1).as_dict()}), True)
    assert from_graph.quantum_input
    assert len(from_graph.dtg.vertices) == 3
    with pytest.raises(RunConfigError):
        bound_instance(run_config_from_payload({"protocol": "protocol1", "graph": cycle_graph(3).as_dict()}), False)
    with pytest.raises(RunConfigError):
        bound_instance(run_config_from_payload({"protocol": "protocol1"}), False)


@pytest.mark.django_db
def test_sweep_is_recorded_and_exported():
    instance = bound_instance(run_config_from_payload(SINGLE_VERTEX), True)
    result = run_sweep(instance, 1, ["before_entangling"])
    sweep = record_sweep(instance, result)
    assert sweep.verdict == Verdict.PASS
    assert sweep.rows.count() == len(result.rows) == 9
    assert AttackSweep.objects.get().max_bound == pytest.approx(5 / 6)

    frame = sweep_dataframe(result)
    assert list(frame.columns) == ["attack", "stage", "p_accept", "p_fail", "bound", "in_e"]
    buffer = io.StringIO()
    export_sweep_to_csv(result, buffer)
    assert buffer.getvalue().splitlines()[0] == "attack,stage,p_accept,p_fail,bound,in_e"
    workbook_file = io.BytesIO()
    export_sweep_to_excel(result, workbook_file)
    workbook_file.seek(0)
    sheet = load_workbook(workbook_file)["attacks"]
    assert sheet.max_row == 10


# --- stabilizer checks ---


def test_stabilizer_check_of_single_edge():
    report = check_stabilizers(path_graph(2))
    assert report["verdict"] == Verdict.PASS
    assert len(report["elements"]) == 3
    assert report["two_coloring"] == {"two_colorable": True, "honest_acceptance": True}
    assert all(element["max_gap"] == pytest.approx(0.0, abs=1e-9) for element in report["elements"])


def test_stabilizer_check_reports_odd_cycle():
    report = check_stabilizers(complete_graph(3), with_attacks=False)
    assert report["two_coloring"]["two_colorable"] is False
    assert len(report["two_coloring"]["odd_cycle"]) == 3
    assert report["verdict"] == Verdict.PASS
    assert json.loads(json.dumps(report))["graph"] == complete_graph(3).as_dict()


def test_stabilizer_check_limits():
    with pytest.raises(RunConfigError):
        check_stabilizers(path_graph(9), generators_only=True)
    with pytest.raises(RunConfigError):
        check_stabilizers(path_graph(7))


def test_selftest_subset():
    results = run_selftest(["stabilizers", "protocol1_vertex"])
    assert [result["check"] for result in results] == ["stabilizers", "protocol1_vertex"]
    assert {result["verdict"] for result in results} == {Verdict.PASS}
    assert {key for key, _, _ in SELFTEST_CHECKS} >= {"stab_honest", "rsp_correctness", "rsp_simulator1"}


@pytest.mark.slow
def test_selftest_covers_simulators_and_edge_bound():
    keys = ["rsp_correctness3", "rsp_simulator2", "sigma_s", "protocol1_edge"]
    results = run_selftest(keys)
    assert [result["check"] for result in results] == keys
    assert {result["verdict"] for result in results} == {Verdict.PASS}
