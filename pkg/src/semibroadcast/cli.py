"""Command line front end.

Subcommands: cmax-sweep, hl-bound, nogo, reconstruct, classify.
Each writes results.json (full report) and, where tabular, results.csv
(12 significant digits, '.' decimal separator) into --out.  Runs are
deterministic for a fixed config and seed; SEMIBROADCAST_THREADS caps the
worker threads used by instance sweeps.

Exit codes: 0 success, 2 config error, 3 invariant violation, 4 domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import broadcast, infotherm, interact, qcore, thermal
from .config import (
    ExperimentConfig,
    InstancesConfig,
    build_memory_array,
    build_system_state,
    build_unit_hamiltonian,
    load_config,
    parse_config,
    unit_beta,
)
from .errors import ConfigError, DegenerateOutcomeWarning, SemibroadcastError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_DOMAIN = 4

GAP_TOL = 1e-9
RW_TOL = 1e-10

SCHEMA_VERSION = 1
LN2 = math.log(2.0)


class InvariantViolation(SemibroadcastError):
    """A numerical invariant the command promises did not hold."""


def _threads() -> int:
    raw = os.environ.get("SEMIBROADCAST_THREADS", "")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"SEMIBROADCAST_THREADS={raw!r} is not an integer") from exc
        if n < 1:
            raise ConfigError(f"SEMIBROADCAST_THREADS must be >= 1, got {n}")
        return n
    return min(8, os.cpu_count() or 1)


def _write_json(out_dir: Path, payload: dict) -> None:
    path = out_dir / "results.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(out_dir: Path, header: list[str], rows: list[list]) -> None:
    path = out_dir / "results.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v:.12g}" if isinstance(v, float) else v for v in row]
            )


def _entropic(value: float, bits: bool) -> float:
    return value / LN2 if bits else value


# ----------------------------------------------------------------- commands


def cmd_cmax_sweep(cfg: ExperimentConfig, out_dir: Path, bits: bool) -> dict:
    sw = cfg.sweep
    n_values = range(sw.n_min, sw.n_max + 1, sw.n_step)
    rows = broadcast.sweep_cmax_convergence(n_values, sw.beta_omega)
    _write_csv(out_dir, ["n", "beta_omega", "c_max"], [list(r) for r in rows])
    by_bw: dict[float, list] = {}
    for n, bw, c in rows:
        by_bw.setdefault(bw, []).append((n, c))
    for bw, series in by_bw.items():
        values = [c for _, c in series]
        if any(b > a + 1e-12 for a, b in zip(values[1:], values)):
            raise InvariantViolation(f"c_max not monotone for beta_omega={bw}")
        if any(c > 1.0 + 1e-12 for c in values):
            raise InvariantViolation(f"c_max exceeds 1 for beta_omega={bw}")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "cmax-sweep",
        "beta_omega": list(sw.beta_omega),
        "n_range": [sw.n_min, sw.n_max, sw.n_step],
        "rows": [{"n": n, "beta_omega": bw, "c_max": c} for n, bw, c in rows],
    }
    _write_json(out_dir, payload)
    for bw in sorted(by_bw):
        series = by_bw[bw]
        print(
            f"beta*omega={bw:g}: c_max {series[0][1]:.9f} (n={series[0][0]}) "
            f"-> {series[-1][1]:.9f} (n={series[-1][0]})"
        )
    return payload


def _hl_single(cfg: ExperimentConfig, bits: bool) -> dict:
    rho_s = build_system_state(cfg.system)
    h = build_unit_hamiltonian(cfg.memory)
    beta = unit_beta(cfg.memory)
    tau = thermal.gibbs(h, beta)
    grouping = thermal.group_energies(h, cfg.system.d_s)
    kind = cfg.interaction.kind if cfg.interaction else "noninvasive"
    variant = cfg.interaction.variant if cfg.interaction else 0
    if kind == "noninvasive":
        u = interact.build_noninvasive_maxcorr(grouping)
    elif kind == "cycled":
        u = interact.build_cycled_variant(grouping, variant)
    else:
        u = interact.build_unbiased_swap(grouping)
    report = infotherm.thermo_report(rho_s, tau, u)
    return _report_record(report, cfg.system.d_s, h.dim, beta, kind, bits)


def _report_record(report, d_s: int, d_m: int, beta: float, kind: str, bits: bool) -> dict:
    return {
        "d_S": d_s,
        "d_M": d_m,
        "beta": beta,
        "kind": kind,
        "entropy_production": _entropic(report.sigma_prod, bits),
        "beta_heat": _entropic(report.delta_q, bits),
        "delta_s_system": _entropic(report.delta_s_system, bits),
        "delta_e_memory": report.delta_e_m,
        "delta_s_memory": _entropic(report.delta_s_m, bits),
        "beta_delta_f_memory": _entropic(report.beta_delta_f, bits),
        "mutual_info": _entropic(report.mutual_info, bits),
        "rel_entropy_to_thermal": _entropic(report.rel_entropy_to_thermal, bits),
        "chi": _entropic(report.chi, bits),
        "gap": _entropic(infotherm.holevo_landauer_gap(report), bits),
        "reeb_wolf_residual": report.reeb_wolf_residual(),
    }


def hl_instance_record(params: tuple, bits: bool = False) -> dict:
    """One random bound instance; used by the sweep and directly by tests."""
    index, d_s, max_dim, beta_lo, beta_hi, seed = params
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, max_dim // d_s + 1))
    d_m = d_s * r
    if d_m >= 2 and (d_m & (d_m - 1)) == 0 and rng.random() < 0.5:
        h = thermal.qubit_chain_hamiltonian(int(math.log2(d_m)), 1.0)
    else:
        h = thermal.MemoryHamiltonian(np.sort(rng.uniform(0.0, 3.0, d_m)))
    beta = float(rng.uniform(beta_lo, beta_hi))
    tau = thermal.gibbs(h, beta)
    grouping = thermal.group_energies(h, d_s)
    kinds = ["noninvasive", "cycled", "swap", "haar"]
    kind = kinds[index % len(kinds)]
    if kind == "noninvasive":
        u = interact.build_noninvasive_maxcorr(grouping)
    elif kind == "cycled":
        u = interact.build_cycled_variant(grouping, int(rng.integers(0, d_s - 1)))
    elif kind == "swap":
        u = interact.build_unbiased_swap(grouping)
    else:
        u = qcore.random_unitary(d_s * d_m, rng.integers(0, 2**63 - 1))
    rho_s = qcore.random_density(d_s, rng.integers(0, 2**63 - 1))
    report = infotherm.thermo_report(rho_s, tau, u)
    rec = _report_record(report, d_s, d_m, beta, kind, bits)
    rec["index"] = index
    return rec


def hl_sweep_records(inst: InstancesConfig, seed: int, bits: bool = False) -> list[dict]:
    seeds = np.random.SeedSequence(seed).spawn(inst.count)
    tasks = [
        (
            i,
            inst.d_s[i % len(inst.d_s)],
            inst.max_memory_dim,
            inst.beta_range[0],
            inst.beta_range[1],
            seeds[i],
        )
        for i in range(inst.count)
    ]
    workers = _threads()
    if workers == 1:
        records = [hl_instance_record(t, bits) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda t: hl_instance_record(t, bits), tasks))
    records.sort(key=lambda r: r["index"])
    return records


def cmd_hl_bound(cfg: ExperimentConfig, out_dir: Path, bits: bool) -> dict:
    if cfg.instances is not None:
        records = hl_sweep_records(cfg.instances, cfg.seed, bits)
    else:
        records = [{**_hl_single(cfg, bits), "index": 0}]
    min_gap = min(r["gap"] for r in records)
    max_rw = max(r["reeb_wolf_residual"] for r in records)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "hl-bound",
        "units": "bits" if bits else "nats",
        "records": records,
        "summary": {
            "instances": len(records),
            "min_gap": min_gap,
            "max_reeb_wolf_residual": max_rw,
        },
    }
    _write_json(out_dir, payload)
    header = [
        "index", "d_S", "d_M", "beta", "kind", "entropy_production", "chi",
        "beta_delta_f_memory", "gap", "reeb_wolf_residual",
    ]
    _write_csv(
        out_dir,
        header,
        [[r[k] for k in header] for r in records],
    )
    print(f"{len(records)} instance(s): min gap {min_gap:.3e}, max identity residual {max_rw:.3e}")
    gap_floor = -(GAP_TOL / LN2 if bits else GAP_TOL)
    if min_gap < gap_floor:
        raise InvariantViolation(f"bound gap {min_gap} below {gap_floor}")
    if max_rw > RW_TOL:
        raise InvariantViolation(f"decomposition residual {max_rw} above {RW_TOL}")
    return payload


def cmd_nogo(cfg: ExperimentConfig, out_dir: Path, bits: bool) -> dict:
    d_s = cfg.system.d_s
    mem = build_memory_array(cfg.memory, cfg.interaction, d_s)
    defect_rows = []
    with warnings.catch_warnings():
        # basis inputs make the unused outcomes degenerate on purpose
        warnings.simplefilter("ignore", DegenerateOutcomeWarning)
        for x in range(d_s):
            run = broadcast.run_sequential_local(qcore.basis_state(d_s, x), mem)
            defect_rows.append({"input": x, "defect": broadcast.ideal_scb_defect(run)})
    worst = max(r["defect"] for r in defect_rows)
    rho_s = build_system_state(cfg.system)
    s_rho = qcore.von_neumann_entropy(rho_s)
    h_x = qcore.shannon_entropy(rho_s.matrix.diagonal().real)
    s_m1 = qcore.von_neumann_entropy(mem.units[0].sigma)
    if s_m1 > 0.0:
        wit = broadcast.nogo_witness(s_rho, s_m1, h_x, d_s)
        witness = {
            "applicable": True,
            "s_rho_s": _entropic(s_rho, bits),
            "s_m1": _entropic(s_m1, bits),
            "h_x": _entropic(h_x, bits),
            "k": wit.k,
            "lhs": _entropic(wit.lhs, bits) if wit.lhs is not None else None,
            "rhs": _entropic(wit.rhs, bits) if wit.rhs is not None else None,
            "violated": wit.violated,
        }
    else:
        witness = {"applicable": False, "reason": "memory entropy is zero"}
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "nogo",
        "units": "bits" if bits else "nats",
        "n_components": len(mem.units),
        "memory_state": cfg.memory.state,
        "basis_defects": defect_rows,
        "worst_defect": worst,
        "witness": witness,
    }
    _write_json(out_dir, payload)
    _write_csv(
        out_dir,
        ["input", "defect"],
        [[r["input"], r["defect"]] for r in defect_rows],
    )
    if witness.get("violated"):
        print(
            f"worst statistics defect {worst:.3e}; witness at k={witness['k']}: "
            f"lhs {witness['lhs']:.5f} > rhs {witness['rhs']:.5f}"
        )
    else:
        print(f"worst statistics defect {worst:.3e}; no finite-k witness")
    if cfg.memory.state == "gibbs" and cfg.memory.beta_omega > 0 and worst <= 1e-6:
        raise InvariantViolation(
            f"thermal memories should obstruct copying, defect {worst}"
        )
    return payload


def cmd_reconstruct(cfg: ExperimentConfig, out_dir: Path, bits: bool) -> dict:
    d_s = cfg.system.d_s
    rho_s = build_system_state(cfg.system)
    p_true = qcore.prob_vector(rho_s.matrix.diagonal().real)
    mem = build_memory_array(cfg.memory, cfg.interaction, d_s, variants_per_unit=True)
    tau = thermal.gibbs(build_unit_hamiltonian(cfg.memory), unit_beta(cfg.memory))
    grouping = mem.units[0].grouping
    cmax = thermal.c_max(grouping, tau)
    run = broadcast.run_sequential_local(rho_s, mem)
    p_hat = broadcast.reconstruct_p(run.q, cmax, d_s)
    residual = float(np.max(np.abs(p_hat - p_true)))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "reconstruct",
        "d_S": d_s,
        "c_max": cmax,
        "q_variants": [list(map(float, q)) for q in run.q],
        "p_true": list(map(float, p_true)),
        "p_reconstructed": list(map(float, p_hat)),
        "max_residual": residual,
    }
    _write_json(out_dir, payload)
    rows = []
    for i, q in enumerate(run.q):
        for y, val in enumerate(q):
            rows.append([i, y, float(val)])
    _write_csv(out_dir, ["variant", "outcome", "q"], rows)
    print(f"c_max={cmax:.9f}; reconstruction residual {residual:.3e}")
    if residual > 1e-9:
        raise InvariantViolation(f"reconstruction residual {residual} above 1e-9")
    return payload


def cmd_classify(cfg: ExperimentConfig, out_dir: Path, bits: bool) -> dict:
    if cfg.system is None or cfg.memory is None:
        raise ConfigError("classify needs system and memory sections")
    d_s = cfg.system.d_s
    rho_s = build_system_state(cfg.system)
    mem = build_memory_array(cfg.memory, cfg.interaction, d_s)
    if cfg.experiment == "global":
        kind = cfg.interaction.kind if cfg.interaction else "swap"
        variant = cfg.interaction.variant if cfg.interaction else 0
        run = broadcast.run_global(rho_s, mem, kind, variant)
    else:
        run = broadcast.run_sequential_local(rho_s, mem)
    h_x = qcore.shannon_entropy(run.p_initial)
    rho_s_final = qcore.partial_trace(run.state, (0,))
    s_final = qcore.von_neumann_entropy(rho_s_final)
    s_final_diag = qcore.shannon_entropy(rho_s_final.matrix.diagonal().real)
    components = []
    for i, ens in enumerate(run.ensembles):
        lower, upper = infotherm.accessible_info_bracket(ens)
        chi = infotherm.holevo_chi(ens)
        evidence = infotherm.Table1Evidence(
            i_acc_lower=lower,
            i_acc_upper=upper,
            chi=chi,
            h_x=h_x,
            s_system_final=s_final,
            s_system_final_diag=s_final_diag,
        )
        verdict = infotherm.classify_table1(evidence)
        components.append(
            {
                "component": i,
                "class": verdict.variant,
                "i_acc_lower": _entropic(lower, bits),
                "i_acc_upper": _entropic(upper, bits),
                "chi": _entropic(chi, bits),
            }
        )
    sbs = infotherm.sbs_test(
        run.state if len(mem.units) == 1
        else qcore.partial_trace(run.state, (0, 1))
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "classify",
        "units": "bits" if bits else "nats",
        "mode": run.mode,
        "h_x": _entropic(h_x, bits),
        "s_system_final": _entropic(s_final, bits),
        "s_system_final_diag": _entropic(s_final_diag, bits),
        "statistics_defect": broadcast.ideal_scb_defect(run),
        "components": components,
        "sbs_first_component": {
            "off_diagonal_norm": sbs.off_diagonal_norm,
            "conditional_overlap": sbs.conditional_overlap,
            "is_sbs": sbs.is_sbs,
        },
    }
    _write_json(out_dir, payload)
    _write_csv(
        out_dir,
        ["component", "class", "i_acc_lower", "i_acc_upper", "chi"],
        [[c["component"], c["class"], c["i_acc_lower"], c["i_acc_upper"], c["chi"]] for c in components],
    )
    for c in components:
        print(f"component {c['component']}: {c['class']}")
    return payload


# ------------------------------------------------------------------- driver

DEFAULT_CONFIGS = {
    "cmax-sweep": {"experiment": "cmax_sweep"},
    "hl-bound": {"experiment": "sequential", "instances": {}},
    "nogo": {
        "experiment": "nogo",
        "system": {"d_S": 2, "state": 0},
        "memory": {"N": 2, "n": 1, "beta_omega": 1.0},
    },
    "reconstruct": {
        "experiment": "reconstruct",
        "system": {"d_S": 2, "state": [0.3, 0.7]},
        "memory": {"N": 1, "n": 1, "beta_omega": 1.0},
    },
    "classify": {
        "experiment": "sequential",
        "system": {"d_S": 2, "state": [0.3, 0.7]},
        "memory": {"N": 1, "n": 1, "beta_omega": 1.0},
        "interaction": {"kind": "noninvasive"},
    },
}

COMMANDS = {
    "cmax-sweep": cmd_cmax_sweep,
    "hl-bound": cmd_hl_bound,
    "nogo": cmd_nogo,
    "reconstruct": cmd_reconstruct,
    "classify": cmd_classify,
}

EXPECTED_EXPERIMENTS = {
    "cmax-sweep": ("cmax_sweep",),
    "hl-bound": ("sequential", "global"),
    "nogo": ("nogo",),
    "reconstruct": ("reconstruct",),
    "classify": ("sequential", "global"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semibroadcast",
        description="Broadcasting measurement statistics into thermal memories",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument(
            "--bits", action="store_true", help="report entropic quantities in bits"
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = load_config(args.config)
        else:
            cfg = parse_config(DEFAULT_CONFIGS[args.command])
        if cfg.experiment not in EXPECTED_EXPERIMENTS[args.command]:
            raise ConfigError(
                f"{args.command} expects experiment in "
                f"{EXPECTED_EXPERIMENTS[args.command]}, got {cfg.experiment!r}"
            )
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed must be >= 0, got {args.seed}")
            cfg = ExperimentConfig(
                cfg.experiment, args.seed, cfg.system, cfg.memory,
                cfg.interaction, cfg.sweep, cfg.instances,
            )
        out_dir = args.out
        out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out_dir, args.bits)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except SemibroadcastError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
