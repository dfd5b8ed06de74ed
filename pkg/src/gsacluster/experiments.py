"""Scenario expansion, batch execution and plot-data emission.

A scenario JSON names one or more (n_sensors, n_gateways, field_side)
setups, the protocols and fitness forms to run, and the seeds. Every
(setup x protocol x fitness x seed) combination becomes one simulation;
each run writes summary.json and rounds.csv, and the scenario writes an
aggregate.csv of per-group lifetime/energy statistics. Infeasible seeds
are recorded in the aggregate, never silently dropped.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .assign import FF1, FF2, FitnessWeights
from .netmodel import RadioParams, deployment_from_json
from .sim import (GSA_EEC, GC_GSA, PROTOCOLS, WA_GSA, GsaSettings, SimConfig,
                  SimSummary, Simulation, InfeasibleDeploymentError,
                  rounds_csv_rows, run_simulation)


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class Setup:
    n_sensors: int
    n_gateways: int
    field_side: float


@dataclass
class Scenario:
    name: str
    setups: list[Setup]
    protocols: list[str]
    fitness_forms: list[str]
    seeds: list[int]
    overrides: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.setups:
            raise ScenarioError("scenario needs at least one setup")
        if not self.protocols:
            raise ScenarioError("scenario needs at least one protocol")
        for p in self.protocols:
            if p not in PROTOCOLS:
                raise ScenarioError(f"unknown protocol {p!r}")
        if not self.fitness_forms:
            raise ScenarioError("scenario needs at least one fitness form")
        for f in self.fitness_forms:
            if f not in (FF1, FF2):
                raise ScenarioError(f"unknown fitness form {f!r}")
        if not self.seeds:
            raise ScenarioError("scenario needs at least one seed")


def _as_list(value) -> list:
    return value if isinstance(value, list) else [value]


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        n_list = _as_list(doc["n_sensors"])
        m_list = _as_list(doc["n_gateways"])
        side_list = _as_list(doc["field_side"])
    except KeyError as e:
        raise ScenarioError(f"scenario missing required field {e.args[0]!r}") from None
    width = max(len(n_list), len(m_list), len(side_list))

    def pick(lst, i):
        return lst[i] if len(lst) > 1 else lst[0]

    if any(len(l) not in (1, width) for l in (n_list, m_list, side_list)):
        raise ScenarioError("n_sensors/n_gateways/field_side lists must align")
    setups = [Setup(int(pick(n_list, i)), int(pick(m_list, i)), float(pick(side_list, i)))
              for i in range(width)]
    scenario = Scenario(
        name=doc.get("name", "scenario"),
        setups=setups,
        protocols=list(doc.get("protocols", [GC_GSA])),
        fitness_forms=list(doc.get("fitness_forms", [FF1])),
        seeds=[int(s) for s in doc.get("seeds", [])],
        overrides=dict(doc.get("overrides", {})),
    )
    scenario.validate()
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def _build_config(scenario: Scenario, setup: Setup, protocol: str,
                  form: str, seed: int) -> SimConfig:
    ov = scenario.overrides
    weights = None
    wkey = "weights_ff1" if form == FF1 else "weights_ff2"
    if wkey in ov:
        weights = FitnessWeights(form=form, **ov[wkey])
    radio = RadioParams(**ov["radio"]) if "radio" in ov else RadioParams()
    gsa = GsaSettings(**ov["gsa"]) if "gsa" in ov else GsaSettings()
    deployment = None
    if "deployment_json" in ov:
        deployment = deployment_from_json(Path(ov["deployment_json"]).read_text())
    return SimConfig(
        n_sensors=setup.n_sensors,
        n_gateways=setup.n_gateways,
        field_side=setup.field_side,
        seed=seed,
        protocol=protocol,
        fitness_form=form,
        weights=weights,
        radio=radio,
        gsa=gsa,
        recluster_period=int(ov.get("recluster_period", 20)),
        max_rounds=int(ov.get("max_rounds", 20000)),
        run_until=ov.get("run_until", "first_death"),
        plateau_tol=float(ov.get("plateau_tol", 0.01)),
        sensor_energy=float(ov.get("sensor_energy", 1.0)),
        gateway_energy=float(ov.get("gateway_energy", 5.0)),
        deployment=deployment,
    )


def _run_id(setup: Setup, protocol: str, form: str, seed: int) -> str:
    return f"n{setup.n_sensors}_m{setup.n_gateways}_s{setup.field_side:g}_{protocol}_{form}_seed{seed}"


@dataclass
class RunRecord:
    run_id: str
    setup: Setup
    protocol: str
    fitness_form: str
    seed: int
    summary: Optional[SimSummary]
    error: Optional[str] = None


def run_scenario(scenario: Scenario, out_dir: str | Path, jobs: int = 1,
                 write_rounds: bool = True) -> list[RunRecord]:
    """Execute every combination and write per-run and aggregate outputs."""
    scenario.validate()
    out = Path(out_dir) / scenario.name
    out.mkdir(parents=True, exist_ok=True)
    combos = [
        (setup, protocol, form, seed)
        for setup in scenario.setups
        for protocol in scenario.protocols
        for form in scenario.fitness_forms
        for seed in scenario.seeds
    ]

    def one(combo) -> RunRecord:
        setup, protocol, form, seed = combo
        run_id = _run_id(setup, protocol, form, seed)
        cfg = _build_config(scenario, setup, protocol, form, seed)
        try:
            sim = Simulation(cfg)
            summary = sim.run()
        except InfeasibleDeploymentError as e:
            return RunRecord(run_id, setup, protocol, form, seed, None, str(e))
        run_dir = out / run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "summary.json").write_text(summary.to_json())
        if write_rounds:
            (run_dir / "rounds.csv").write_text("\n".join(rounds_csv_rows(sim.reports)) + "\n")
        return RunRecord(run_id, setup, protocol, form, seed, summary)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, combos))
    else:
        records = [one(c) for c in combos]

    _write_aggregate(records, out / "aggregate.csv")
    return records


def _write_aggregate(records: list[RunRecord], path: Path) -> None:
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        key = (rec.setup.n_sensors, rec.setup.n_gateways, rec.setup.field_side,
               rec.protocol, rec.fitness_form)
        groups.setdefault(key, []).append(rec)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_sensors", "n_gateways", "field_side", "protocol", "fitness_form",
                    "runs", "infeasible", "mean_lifetime", "std_lifetime",
                    "mean_energy_per_sensor_round", "std_energy_per_sensor_round"])
        for key in sorted(groups):
            recs = groups[key]
            ok = [r.summary for r in recs if r.summary is not None]
            infeasible = len(recs) - len(ok)
            lifetimes = [s.lifetime_rounds for s in ok]
            energies = [s.mean_energy_per_sensor_round for s in ok]
            w.writerow([
                *key, len(recs), infeasible,
                statistics.fmean(lifetimes) if lifetimes else "",
                statistics.pstdev(lifetimes) if len(lifetimes) > 1 else 0.0 if lifetimes else "",
                statistics.fmean(energies) if energies else "",
                statistics.pstdev(energies) if len(energies) > 1 else 0.0 if energies else "",
            ])


class MissingRunsError(RuntimeError):
    """A figure export needs runs that are absent from the result set."""


FIGURES = ("fig4-lifetime-vs-n", "fig5-ff-comparison", "table2-clusters")


def emit_plot_data(records: list[RunRecord], figure: str) -> list[str]:
    """Reshape run results into long-format CSV rows for one figure id."""
    ok = [r for r in records if r.summary is not None]

    def require(rows, what):
        if not rows:
            raise MissingRunsError(f"no runs available for {figure}: need {what}")
        return rows

    if figure == "fig4-lifetime-vs-n":
        rows = ["n,protocol,mean_lifetime,stddev"]
        groups: dict[tuple, list[int]] = {}
        for r in ok:
            groups.setdefault((r.setup.n_sensors, r.protocol), []).append(
                r.summary.lifetime_rounds)
        require(groups, "completed runs")
        for (n, protocol) in sorted(groups):
            vals = groups[(n, protocol)]
            std = statistics.pstdev(vals) if len(vals) > 1 else 0.0
            rows.append(f"{n},{protocol},{statistics.fmean(vals)!r},{std!r}")
        return rows

    if figure == "fig5-ff-comparison":
        rows = ["n,protocol,fitness_form,mean_energy_per_sensor_round,mean_lifetime"]
        groups: dict[tuple, list[SimSummary]] = {}
        for r in ok:
            groups.setdefault((r.setup.n_sensors, r.protocol, r.fitness_form), []).append(r.summary)
        forms = {k[2] for k in groups}
        if not {FF1, FF2} <= forms:
            raise MissingRunsError(
                f"fig5-ff-comparison needs both FF1 and FF2 runs, have {sorted(forms)}")
        for (n, protocol, form) in sorted(groups):
            ss = groups[(n, protocol, form)]
            rows.append(f"{n},{protocol},{form},"
                        f"{statistics.fmean(s.mean_energy_per_sensor_round for s in ss)!r},"
                        f"{statistics.fmean(s.lifetime_rounds for s in ss)!r}")
        return rows

    if figure == "table2-clusters":
        rows = ["n,mode,cluster_count,mean_size"]
        groups: dict[tuple, list[float]] = {}
        for r in ok:
            if r.protocol not in (GC_GSA, WA_GSA):
                continue
            # steady-state head count: epochs past the initial differentiation
            counts = [c for (_, c) in r.summary.cluster_counts[2:]] or \
                     [c for (_, c) in r.summary.cluster_counts]
            groups.setdefault((r.setup.n_sensors, r.protocol), []).append(
                statistics.fmean(counts))
        require(groups, "GC_GSA or WA_GSA runs")
        for (n, protocol) in sorted(groups):
            mean_count = statistics.fmean(groups[(n, protocol)])
            mode = "GC" if protocol == GC_GSA else "WA"
            size = n / mean_count if mean_count else math.nan
            rows.append(f"{n},{mode},{mean_count!r},{size!r}")
        return rows

    raise MissingRunsError(f"unknown figure id {figure!r}; known: {', '.join(FIGURES)}")


def records_from_out_dir(out_dir: str | Path) -> list[RunRecord]:
    """Reload run records from a previously written scenario output tree."""
    records = []
    for summary_path in sorted(Path(out_dir).glob("**/summary.json")):
        doc = json.loads(summary_path.read_text())
        run_id = summary_path.parent.name
        # run ids encode the setup: n{n}_m{m}_s{side}_{protocol}_{form}_seed{seed}
        parts = run_id.split("_")
        try:
            setup = Setup(int(parts[0][1:]), int(parts[1][1:]), float(parts[2][1:]))
        except (IndexError, ValueError):
            raise MissingRunsError(f"unrecognized run directory name {run_id!r}")
        summary = SimSummary(
            protocol=doc["protocol"], fitness_form=doc["fitness_form"],
            seed=doc["seed"], lifetime_rounds=doc["lifetime_rounds"],
            lifetime_censored=doc["lifetime_censored"], rounds_run=doc["rounds_run"],
            total_energy_spent=doc["total_energy_spent"],
            mean_energy_per_sensor_round=doc["mean_energy_per_sensor_round"],
            final_alive_sensors=doc["final_alive_sensors"],
            final_alive_gateways=doc["final_alive_gateways"],
            avg_energy_curve=[],
            cluster_counts=[tuple(t) for t in doc["cluster_counts"]],
        )
        records.append(RunRecord(run_id, setup, doc["protocol"], doc["fitness_form"],
                                 doc["seed"], summary))
    return records
