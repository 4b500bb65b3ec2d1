"""Services behind the management commands: building systems, running them and exporting reports."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import partial
from typing import IO, Any, Callable, Mapping, Sequence

import numpy as np
import pandas as pd

from adversary.attacks import PauliAttack
from adversary.simulate import StabTestKind, detection_probability
from adversary.sweep import EIGHT_NINTHS, SweepResult, sweep_attacks
from composable.channels import DistinguishabilityReport, distinguishability
from composable.execution import enumerate_runs, run_system
from composable.systems import ResourceSystem, compose
from composable.transcript import plain
from protocols.network import ps_network
from protocols.rsp import rsp_ideal_system, rsp_real_system, rsp_simulated_system, rsp_unsimulated_system
from protocols.stab_ps import protocol3_stab_ps
from protocols.stabilizer import (
    coloring_test,
    halves_network,
    honest_acceptance,
    ps_reject_probability,
    ps_test_client,
    rm_reject_probability,
    round_layout,
    sigma_s_stab,
    stab_test_rm_prime,
    stab_to_ps,
)
from protocols.trap_rm import TrapRmEvaluator, TrapRmInstance, protocol1_trap_rm, trap_rm_ideal
from protocols.ubqc import ubqc_ps_system
from quantum.angles import A, Angle
from quantum.conf import simulation_limits
from quantum.graphstate import (
    Graph,
    OddCycle,
    cycle_graph,
    find_two_coloring,
    graph_state,
    path_graph,
    stabilizer_generator,
    stabilizer_group,
    star_graph,
)
from quantum.mbqc import path_pattern
from quantum.pauli import all_pauli_strings
from quantum.qstate import MixedState, PureState, fidelity, plus_vector

from .config import RunConfig, RunConfigError
from .models import AttackSweep, DistinguisherReport, ProtocolRun, Verdict

logger = logging.getLogger(__name__)

PortKey = tuple[str, str]

EXIT_ACCEPT = 0
EXIT_ERROR = 1
EXIT_ABORT = 3

SERVER = "server"
SIMULATORS = ("none", "sigma1", "sigma2")
SWEEP_COLUMNS = ("attack", "stage", "p_accept", "p_fail", "bound", "in_e")
FULL_GROUP_LIMIT = 6


def port_name(key: PortKey) -> str:
    return f"{key[0]}.{key[1]}"


# --- building systems --------------------------------------------------------


@dataclass
class PreparedRun:
    """A composed system with its open inputs fixed and a rule deciding acceptance."""

    system: ResourceSystem
    accepts: Callable[[Mapping[PortKey, Any]], bool]
    output: PortKey | None
    inputs: dict[PortKey, Any] = field(default_factory=dict)
    quantum_inputs: dict[PortKey, PureState] = field(default_factory=dict)


def _int_option(config: RunConfig, name: str, default: int, minimum: int = 0) -> int:
    value = config.option(name, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise RunConfigError(f"Параметр {name} должен быть целым числом не меньше {minimum}, получено {value!r}.")
    return value


def _amplitudes(raw: Any, qubits: int) -> np.ndarray:
    """Amplitudes from a JSON list of numbers or ``[re, im]`` pairs, normalised."""

    if raw is None:
        vector = np.zeros(2**qubits, dtype=complex)
        vector[0] = 1
        return vector
    try:
        vector = np.array([complex(*item) if isinstance(item, list) else complex(item) for item in raw], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise RunConfigError(f"Вход задаётся списком амплитуд: {exc}") from exc
    if vector.size != 2**qubits or not np.linalg.norm(vector):
        raise RunConfigError(f"Ожидалось {2**qubits} амплитуд ненулевого вектора, получено {vector.size}.")
    return vector / np.linalg.norm(vector)


def _deviation(config: RunConfig) -> PauliAttack | None:
    declared = {party.name: party.honest for party in config.parties}
    if config.attack is None:
        if declared.get(SERVER) is False:
            raise RunConfigError("Для нечестного сервера задайте атаку (поле attack).")
        return None
    if declared.get(SERVER) is True:
        raise RunConfigError("Атака задана, но сервер отмечен честным.")
    return PauliAttack(config.attack.op, config.attack.stage)


def _check_roster(config: RunConfig, allowed: Sequence[str] = (SERVER,)) -> None:
    unexpected = [name for name in config.dishonest() if name not in allowed]
    if unexpected:
        raise RunConfigError(
            f"Для запуска нечестными могут быть только {', '.join(allowed)}; получено {', '.join(unexpected)}. "
            "Коалиции клиентов проверяются командой distinguish."
        )


def trap_instance(config: RunConfig) -> TrapRmInstance:
    pattern = config.require_pattern()
    return TrapRmInstance(pattern, quantum_input=bool(config.option("quantum_input", True)))


def prepare_run(config: RunConfig) -> PreparedRun:
    """The system of ``config`` with the honest parties attached and the inputs it will be fed."""

    _check_roster(config)
    protocol = config.protocol
    if protocol == ProtocolRun.Protocol.RSP:
        if config.attack is not None:
            raise RunConfigError("Атаки Паули для RSP не поддерживаются; используйте distinguish.")
        clients = _int_option(config, "clients", 2, minimum=2)
        k = _int_option(config, "k", 1, minimum=1)
        theta = Angle(_int_option(config, "theta", 0))
        if not theta.in_half_turn:
            raise RunConfigError(f"Угол θ должен принадлежать A = {{0, …, 7}}·π/8, получено k = {theta.k}.")
        return PreparedRun(
            rsp_real_system(clients, k),
            accepts=lambda outputs: True,
            output=("S", "psi"),
            inputs={(f"C{k}", "theta"): theta},
        )
    pattern = config.require_pattern()
    deviation = _deviation(config)
    if protocol == ProtocolRun.Protocol.PROTOCOL1:
        instance = trap_instance(config)
        quantum_inputs = {}
        if instance.quantum_input:
            quantum_inputs[("C", "psi")] = PureState.from_vector(("psi",), _amplitudes(config.option("input"), 1))
        return PreparedRun(
            protocol1_trap_rm(instance, deviation),
            accepts=lambda outputs: outputs[("C", "abort")] == 0,
            output=("C", "rho"),
            quantum_inputs=quantum_inputs,
        )
    if protocol == ProtocolRun.Protocol.PROTOCOL3:
        graph = config.graph or pattern.graph
        bits = config.option("bits", dict.fromkeys(pattern.inputs, 0))
        if not isinstance(bits, Mapping):
            raise RunConfigError("Поле bits задаётся как {\"вершина\": 0|1}.")
        system = protocol3_stab_ps(graph, pattern, _int_option(config, "rounds", 1, minimum=1), bits, deviation)
        return PreparedRun(system, accepts=lambda outputs: outputs[("C", "accept")] == 1, output=None)
    measure_outputs = bool(config.option("measure_outputs", False))
    quantum_input = bool(config.option("quantum_input", True)) and bool(pattern.inputs)
    quantum_inputs = {}
    if quantum_input:
        labels = tuple(f"psi{index}" for index in range(len(pattern.inputs)))
        quantum_inputs[("C", "psi")] = PureState.from_vector(labels, _amplitudes(config.option("input"), len(labels)))
    return PreparedRun(
        ubqc_ps_system(pattern, measure_outputs, quantum_input, deviation),
        accepts=lambda outputs: True,
        output=None if measure_outputs else ("C", "rho"),
        quantum_inputs=quantum_inputs,
    )


# --- running ------------------------------------------------------------------


@dataclass
class RunOutcome:
    config: RunConfig
    accepted: bool
    fingerprint: str | None
    outputs: Any
    transcript: list[dict]
    audit: dict
    abort_probability: float | None = None
    branches: int | None = None

    @property
    def exit_code(self) -> int:
        return EXIT_ACCEPT if self.accepted else EXIT_ABORT

    def as_dict(self) -> dict:
        return {
            "protocol": self.config.protocol,
            "mode": self.config.mode,
            "seed": self.config.seed,
            "accepted": self.accepted,
            "exit_code": self.exit_code,
            "abort_probability": self.abort_probability,
            "branches": self.branches,
            "fingerprint": self.fingerprint,
            "outputs": self.outputs,
            "audit": self.audit,
            "transcript": self.transcript,
        }


def _jsonable(value: Any) -> Any:
    if hasattr(value, "as_dict"):
        return value.as_dict()
    value = plain(value)
    if isinstance(value, tuple):
        return [_jsonable(item) for item in value]
    return value


def _classical_ports(system: ResourceSystem) -> list[PortKey]:
    return [key for key, spec in system.open_outputs() if not spec.is_quantum]


def execute_run(config: RunConfig) -> RunOutcome:
    """Run ``config`` once (sample mode) or exactly over all branches (enumerate mode)."""

    prepared = prepare_run(config)
    ports = _classical_ports(prepared.system)
    if config.mode == ProtocolRun.Mode.SAMPLE:
        result = run_system(prepared.system, prepared.inputs, config.seed, prepared.quantum_inputs)
        accepted = prepared.accepts(result.outputs)
        outcome = RunOutcome(
            config=config,
            accepted=accepted,
            fingerprint=result.fingerprint(prepared.output) if prepared.output else None,
            outputs={port_name(key): _jsonable(result.outputs[key]) for key in ports},
            transcript=[entry.as_dict() for entry in result.transcript],
            audit={key: _jsonable(value) for key, value in sorted(result.audit.items())},
        )
    else:
        outcome = _enumerate(config, prepared, ports)
    if outcome.accepted:
        logger.info("Запуск %s (%s): принято", config.protocol, config.mode)
    else:
        logger.warning("Запуск %s (%s): клиент отказал", config.protocol, config.mode)
    return outcome


def _enumerate(config: RunConfig, prepared: PreparedRun, ports: Sequence[PortKey]) -> RunOutcome:
    distribution: dict[tuple, float] = defaultdict(float)
    aborted = total = 0.0
    mixture: np.ndarray | None = None
    labels: tuple[str, ...] | None = None
    count = 0
    for branch in enumerate_runs(prepared.system, prepared.inputs, prepared.quantum_inputs):
        count += 1
        probability = branch.probability
        total += probability
        distribution[tuple(plain(branch.outputs[key]) for key in ports)] += probability
        if not prepared.accepts(branch.outputs):
            aborted += probability
        if prepared.output is not None:
            state = branch.reduced_state(branch.outputs[prepared.output])
            labels = labels or state.labels
            term = probability * state.matrix
            mixture = term if mixture is None else mixture + term
    tolerance = simulation_limits().tolerance
    abort_probability = aborted / total if total else 0.0
    fingerprint = None
    if mixture is not None and labels is not None:
        fingerprint = MixedState.from_matrix(labels, mixture / total).fingerprint()
    rows = [
        {"outputs": dict(zip(map(port_name, ports), map(_jsonable, key))), "probability": probability / total}
        for key, probability in sorted(distribution.items(), key=lambda item: repr(item[0]))
    ]
    return RunOutcome(
        config=config,
        accepted=abort_probability <= tolerance,
        fingerprint=fingerprint,
        outputs=rows,
        transcript=[],
        audit={},
        abort_probability=abort_probability,
        branches=count,
    )


def record_run(outcome: RunOutcome) -> ProtocolRun:
    config = outcome.config
    return ProtocolRun.objects.create(
        protocol=config.protocol,
        mode=config.mode,
        seed="" if config.seed is None else str(config.seed),
        accepted=outcome.accepted,
        exit_code=outcome.exit_code,
        abort_probability=outcome.abort_probability,
        fingerprint=outcome.fingerprint or "",
        outputs={"values": outcome.outputs},
        transcript=outcome.transcript,
        config=config.as_dict(),
    )


# --- distinguishers -------------------------------------------------------------


def _rsp_coalition(config: RunConfig, clients: int) -> tuple[list[int], bool]:
    dishonest_clients = []
    for name in config.dishonest():
        if name == SERVER:
            continue
        if not (name.startswith("C") and name[1:].isdigit() and 1 <= int(name[1:]) <= clients):
            raise RunConfigError(f"Неизвестный участник RSP {name!r}; клиенты называются C1 … C{clients}.")
        dishonest_clients.append(int(name[1:]))
    return sorted(dishonest_clients), not config.is_honest(SERVER)


def build_distinguish_system(config: RunConfig, side: str, simulator: str = "none") -> ResourceSystem:
    """The real protocol (``side="real"``) or the ideal resource behind ``simulator``.

    The configuration field ``system`` overrides ``side``, so a system can be
    compared with itself.
    """

    if simulator not in SIMULATORS:
        raise RunConfigError(f"Неизвестный симулятор {simulator!r}; допустимы: {', '.join(SIMULATORS)}.")
    which = config.option("system", side)
    if which not in ("real", "ideal"):
        raise RunConfigError(f"Поле system принимает значения real или ideal, получено {which!r}.")
    if config.protocol == ProtocolRun.Protocol.RSP:
        clients = _int_option(config, "clients", 2, minimum=2)
        k = _int_option(config, "k", 1, minimum=1)
        dishonest_clients, dishonest_server = _rsp_coalition(config, clients)
        if which == "real":
            return rsp_real_system(clients, k, dishonest_clients, dishonest_server)
        if simulator == "sigma1":
            if dishonest_server or not dishonest_clients:
                raise RunConfigError("Симулятор sigma1 рассчитан на нечестных клиентов при честном сервере.")
            return rsp_simulated_system(clients, k, dishonest_clients)
        if simulator == "sigma2":
            if not dishonest_server:
                raise RunConfigError("Симулятор sigma2 рассчитан на нечестный сервер.")
            return rsp_simulated_system(clients, k, dishonest_clients, dishonest_server=True)
        if dishonest_server:
            raise RunConfigError("Без симулятора идеальный ресурс не предоставляет интерфейс нечестного сервера.")
        if dishonest_clients:
            return rsp_unsimulated_system(clients, k, dishonest_clients)
        return rsp_ideal_system(clients, k)
    if config.protocol == ProtocolRun.Protocol.PROTOCOL1:
        if config.dishonest() or simulator != "none":
            raise RunConfigError("Для проверки ловушками сравнение поддерживается только при честном сервере.")
        instance = trap_instance(config)
        return protocol1_trap_rm(instance) if which == "real" else trap_rm_ideal(instance)
    raise RunConfigError(f"Сравнение с идеальным ресурсом для протокола {config.protocol} не поддерживается.")


def distinguish(real: RunConfig, ideal: RunConfig, simulator: str = "none") -> tuple[DistinguishabilityReport, str, str]:
    first = build_distinguish_system(real, "real", simulator)
    second = build_distinguish_system(ideal, "ideal", simulator)
    return distinguishability(first, second), first.name, second.name


def record_distinguisher(report: DistinguishabilityReport, real_name: str, ideal_name: str, simulator: str) -> DistinguisherReport:
    return DistinguisherReport.objects.create(
        real_name=real_name,
        ideal_name=ideal_name,
        simulator="" if simulator == "none" else simulator,
        epsilon=report.epsilon,
        tolerance=report.tolerance,
        verdict=report.verdict.value,
        worst_assignment=_jsonable(report.worst_assignment) if report.worst_assignment is not None else None,
    )


# --- attack sweeps ------------------------------------------------------------


def bound_instance(config: RunConfig | None, with_input: bool) -> TrapRmInstance:
    """Trap instance for the sweep: the configured path, or a single edge by default."""

    if config is None:
        pattern = path_pattern([0])
    elif config.pattern is not None:
        pattern = config.pattern
    elif config.graph is not None:
        if not config.graph.is_path():
            raise RunConfigError("Базовый граф для перебора атак должен быть путём.")
        pattern = path_pattern([0] * (len(config.graph) - 1))
    else:
        raise RunConfigError("Задайте базовый граф (graph или graph_file) или углы пути (angles).")
    return TrapRmInstance(pattern, quantum_input=with_input)


def sweep_verdict(result: SweepResult) -> str:
    return Verdict.PASS if result.within(EIGHT_NINTHS) and not result.violations else Verdict.FAIL


def sweep_summary_line(result: SweepResult) -> str:
    return f"max p_fail = {result.max_p_fail:.6f}, bound 8/9: {sweep_verdict(result)}"


def run_sweep(instance: TrapRmInstance, max_weight: int, stages: Sequence[str]) -> SweepResult:
    return sweep_attacks(instance, max_weight, stages=stages)


def sweep_dataframe(result: SweepResult) -> pd.DataFrame:
    """Serialize sweep rows to a pandas dataframe."""

    return pd.DataFrame(result.as_records(), columns=list(SWEEP_COLUMNS))


def export_sweep_to_csv(result: SweepResult, file_obj: IO[str], *, index: bool = False) -> None:
    sweep_dataframe(result).to_csv(file_obj, index=index)


def export_sweep_to_excel(result: SweepResult, file_obj: IO[bytes], *, index: bool = False) -> None:
    """Write sweep rows to an XLSX file-like object using openpyxl."""

    sweep_dataframe(result).to_excel(file_obj, index=index, engine="openpyxl", sheet_name="attacks")


def record_sweep(instance: TrapRmInstance, result: SweepResult) -> AttackSweep:
    worst = result.worst
    sweep = AttackSweep.objects.create(
        base_graph=instance.pattern.graph.as_dict(),
        with_input=instance.quantum_input,
        max_weight=result.max_weight,
        attacks=len(result.rows),
        max_p_fail=result.max_p_fail,
        max_bound=result.max_bound,
        worst_attack=worst.attack if worst else "",
        violations=len(result.violations),
        verdict=sweep_verdict(result),
    )
    sweep.add_rows(result.as_records())
    return sweep


# --- stabilizer checks --------------------------------------------------------


@dataclass(frozen=True)
class StabilizerCheck:
    element: str
    subset: tuple[str, ...]
    fixes_state: bool
    even_y: bool
    ps_reject: float
    rm_reject: float
    max_gap: float

    @property
    def passed(self) -> bool:
        tolerance = simulation_limits().tolerance
        return (
            self.fixes_state
            and self.even_y
            and self.ps_reject <= tolerance
            and self.rm_reject <= tolerance
            and self.max_gap <= tolerance
        )

    def as_dict(self) -> dict:
        return {
            "element": self.element,
            "subset": list(self.subset),
            "fixes_state": self.fixes_state,
            "even_y": self.even_y,
            "ps_reject": self.ps_reject,
            "rm_reject": self.rm_reject,
            "max_gap": self.max_gap,
            "verdict": Verdict.PASS if self.passed else Verdict.FAIL,
        }


def check_stabilizers(graph: Graph, generators_only: bool = False, with_attacks: bool = True) -> dict:
    """Honest acceptance of every tested element and agreement of the PS and reduced RM tests under weight-1 attacks."""

    limits = simulation_limits()
    if len(graph) > limits.max_mixed_qubits:
        raise RunConfigError(f"Граф из {len(graph)} вершин больше допустимых {limits.max_mixed_qubits}.")
    if not generators_only and len(graph) > FULL_GROUP_LIMIT:
        raise RunConfigError(
            f"Полная группа стабилизаторов проверяется на графах до {FULL_GROUP_LIMIT} вершин; укажите --generators."
        )
    state = graph_state(graph)
    if generators_only:
        elements = [((vertex,), stabilizer_generator(graph, vertex)) for vertex in graph.vertices]
    else:
        elements = [(subset, element) for subset, element in stabilizer_group(graph) if subset]
    attacks = [op for op in all_pauli_strings(graph.vertices, 1) if not op.is_identity] if with_attacks else []
    checks = []
    for subset, element in elements:
        test = stab_to_ps(graph, element)
        gap = 0.0
        for attack in attacks:
            ps = detection_probability(StabTestKind.PREPARE_AND_SEND, graph, element, attack)
            reduced = detection_probability(StabTestKind.REDUCED, graph, element, attack)
            gap = max(gap, abs(ps - reduced))
        checks.append(
            StabilizerCheck(
                element=str(element),
                subset=tuple(subset),
                fixes_state=abs(state.expectation(element) - 1) <= limits.tolerance,
                even_y=element.count("Y") % 2 == 0,
                ps_reject=ps_reject_probability(test),
                rm_reject=rm_reject_probability(graph, element, state),
                max_gap=gap,
            )
        )
    coloring = _two_coloring_report(graph)
    passed = all(check.passed for check in checks) and coloring.get("honest_acceptance", True)
    logger.info("Проверка стабилизаторов: %d элементов, %s", len(checks), "PASS" if passed else "FAIL")
    return {
        "graph": graph.as_dict(),
        "generators_only": generators_only,
        "elements": [check.as_dict() for check in checks],
        "two_coloring": coloring,
        "verdict": Verdict.PASS if passed else Verdict.FAIL,
    }


def _two_coloring_report(graph: Graph) -> dict:
    coloring = find_two_coloring(graph)
    if isinstance(coloring, OddCycle):
        return {"two_colorable": False, "odd_cycle": list(coloring.vertices)}
    accepted = all(honest_acceptance(coloring_test(graph, coloring, swapped)) for swapped in (False, True))
    return {"two_colorable": True, "honest_acceptance": accepted}


# --- self-test ------------------------------------------------------------------


def _stabilizer_suite() -> bool:
    tolerance = simulation_limits().tolerance
    for graph in (path_graph(3), cycle_graph(3), star_graph(3)):
        state = graph_state(graph)
        for _, element in stabilizer_group(graph):
            if element.count("Y") % 2 or abs(state.expectation(element) - 1) > tolerance:
                return False
    return True


def _stabilizer_honest_acceptance() -> bool:
    tolerance = simulation_limits().tolerance
    graph = path_graph(3)
    state = graph_state(graph)
    for vertex in graph.vertices:
        element = stabilizer_generator(graph, vertex)
        if ps_reject_probability(stab_to_ps(graph, element)) > tolerance:
            return False
        if rm_reject_probability(graph, element, state) > tolerance:
            return False
    return True


def _rsp_correctness(clients: int = 2) -> bool:
    tolerance = simulation_limits().tolerance
    system = rsp_real_system(clients, 1)
    for theta in A:
        for branch in enumerate_runs(system, {("C1", "theta"): theta}):
            labels = branch.outputs[("S", "psi")]
            target = PureState.from_vector(labels, plus_vector(theta))
            if fidelity(target, branch.reduced_state(labels)) < 1 - tolerance:
                return False
    return True


def _rsp_simulator_equality() -> bool:
    report = distinguishability(rsp_real_system(2, 1, [2]), rsp_simulated_system(2, 1, [2]))
    return report.verdict.value == Verdict.PASS


def _trap_single_vertex() -> bool:
    tolerance = simulation_limits().tolerance
    outcome = TrapRmEvaluator(TrapRmInstance(path_pattern([]))).evaluate()
    return outcome.p_accept >= 1 - tolerance and outcome.p_fail <= tolerance


def _rsp_simulator2_equality() -> bool:
    report = distinguishability(
        rsp_real_system(2, 1, dishonest_server=True), rsp_simulated_system(2, 1, dishonest_server=True)
    )
    return report.verdict.value == Verdict.PASS


def _sigma_s_equality() -> bool:
    graph = path_graph(2)
    test = stab_to_ps(graph, stabilizer_generator(graph, "1"))
    layout = round_layout(graph)
    network = ps_network((layout,))
    halves = halves_network(graph)
    simulated = compose(
        [
            stab_test_rm_prime(halves, test, layout.finish_round),
            sigma_s_stab(halves, network.interface(f"{network.name}.S"), layout),
        ],
        halves,
    )
    report = distinguishability(compose([ps_test_client(network, test, layout)], network), simulated)
    return report.verdict.value == Verdict.PASS


def _trap_single_edge_bound() -> bool:
    return sweep_attacks(TrapRmInstance(path_pattern([Angle(3)])), 1).within(EIGHT_NINTHS)


SELFTEST_CHECKS: tuple[tuple[str, str, Callable[[], bool]], ...] = (
    ("stabilizers", "Стабилизаторы фиксируют графовые состояния", _stabilizer_suite),
    ("stab_honest", "Честный сервер проходит тесты стабилизаторов", _stabilizer_honest_acceptance),
    ("rsp_correctness", "RSP приготавливает |+^θ⟩ при n = 2", _rsp_correctness),
    ("rsp_simulator1", "RSP неотличим от идеального ресурса с симулятором 1", _rsp_simulator_equality),
    ("rsp_correctness3", "RSP приготавливает |+^θ⟩ при n = 3", partial(_rsp_correctness, 3)),
    ("rsp_simulator2", "RSP с нечестным сервером неотличим от идеала с симулятором 2", _rsp_simulator2_equality),
    ("sigma_s", "Симулятор σS сводит тест PS к приведённому клиенту RM на P2", _sigma_s_equality),
    ("protocol1_vertex", "Проверка ловушками принимает честный сервер на одной вершине", _trap_single_vertex),
    ("protocol1_edge", "Атаки веса 1 на одном ребре не превышают 8/9", _trap_single_edge_bound),
)


def run_selftest(only: Sequence[str] | None = None) -> list[dict]:
    results = []
    for key, title, check in SELFTEST_CHECKS:
        if only and key not in only:
            continue
        passed = bool(check())
        if not passed:
            logger.error("Самопроверка %s не пройдена", key)
        results.append({"check": key, "title": title, "verdict": Verdict.PASS if passed else Verdict.FAIL})
    return results
