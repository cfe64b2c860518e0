"""Batch execution of configured audits and the gradient-step trace."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .audit import (
    AuditReport,
    VIOLATION_TOL,
    audit_fully_pairwise_and_probability,
    audit_global_ladder,
    audit_gradient_descent,
    audit_individual_score,
    audit_local_pairwise_sweep,
    gradient_step_analysis,
)
from .config import AuditSpec, ExperimentConfig, initial_theta, load_config
from .errors import PrefMonoError
from .report import audit_records, emit_report
from .solver import minimize

log = logging.getLogger(__name__)

OUT_DIR_ENV = "PREFMONO_OUT_DIR"
FIGURE1_NOTE = (
    "qualitative analog on a synthetic model of the chosen/rejected score changes "
    "observed when fine-tuning large language models; not a reproduction of that experiment"
)


def run_audit(spec: AuditSpec, cfg: ExperimentConfig, index: int = 0) -> list[AuditReport]:
    """Run one configured audit; errors become a single report with status ``error``."""
    problem, settings = cfg.problem, cfg.settings
    x, y, z = spec.triple
    rng = np.random.default_rng([cfg.seed, index])
    try:
        if spec.flavor == "local_pairwise":
            return audit_local_pairwise_sweep(problem, x, y, z, spec.mode, spec.eps, None, settings, spec.id)
        if spec.flavor == "global_ladder":
            return [audit_global_ladder(problem, x, y, z, spec.mode, spec.eps, settings, spec.id)]
        if spec.flavor in ("individual_score", "fully_pairwise"):
            theta_star = minimize(problem, None, settings).theta_star
            out = []
            for eps in spec.eps:
                if spec.flavor == "individual_score":
                    out.append(audit_individual_score(problem, x, y, z, eps, theta_star, settings, spec.id,
                                                      spec.mode or "intensification"))
                else:
                    out.append(audit_fully_pairwise_and_probability(problem, x, y, z, eps, spec.mode, theta_star,
                                                                    settings, spec.id))
            return out
        theta = initial_theta(spec.theta, problem.dim, rng)
        return [audit_gradient_descent(problem, theta, x, y, z, eps, spec.id) for eps in spec.eps]
    except (PrefMonoError, ValueError, KeyError) as exc:
        rep = AuditReport(spec.id, spec.flavor, spec.mode or "", spec.triple)
        rep.status = "error"
        rep.details["reasons"] = [f"{type(exc).__name__}: {exc}"]
        return [rep]


def run_all(cfg: ExperimentConfig, workers: int | None = None) -> list[tuple[AuditSpec, list[AuditReport]]]:
    workers = workers or cfg.workers
    jobs = list(enumerate(cfg.audits))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: run_audit(job[1], cfg, job[0]), jobs))
    else:
        results = [run_audit(spec, cfg, i) for i, spec in jobs]
    merged = sorted(zip(cfg.audits, results), key=lambda item: item[0].id)
    return merged


def resolve_out_dir(cfg: ExperimentConfig, out_dir=None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    if cfg.out_dir is not None:
        base = cfg.path.parent if cfg.path else Path(".")
        return base / cfg.out_dir
    return Path(os.environ.get(OUT_DIR_ENV, "prefmono-out"))


def _dump_json(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def run_config(path_or_cfg, out_dir=None, fmt: str | None = None, seed: int | None = None,
               workers: int | None = None) -> tuple[int, list[Path]]:
    """Execute every audit of a config and write the summary and detail files.

    Returns ``(exit_status, written_paths)``; the status is nonzero only if
    some audit errored.  Monotonicity violations are findings, not errors.
    """
    cfg = path_or_cfg if isinstance(path_or_cfg, ExperimentConfig) else load_config(path_or_cfg)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    fmt = fmt or cfg.fmt
    out = resolve_out_dir(cfg, out_dir)
    results = run_all(cfg, workers)
    records, written, errored = [], [], False
    for spec, reports in results:
        for rep in reports:
            records.extend(audit_records(rep))
            errored = errored or rep.status == "error"
        detail = {"audit": spec.id, "flavor": spec.flavor, "seed": cfg.seed,
                  "reports": [rep.to_dict() for rep in reports]}
        p = out / "details" / f"{spec.id}.json"
        _dump_json(detail, p)
        written.append(p)
    summary = out / f"summary.{fmt}"
    emit_report(records, summary, "audit", fmt)
    written.insert(0, summary)
    return (1 if errored else 0), written


def run_figure1_analog(cfg: ExperimentConfig, seed: int | None = None) -> list[dict]:
    """Sequential single-datum gradient steps over a stream of preference pairs.

    Each record holds the chosen and rejected score changes of one step with
    the predicates that would guarantee their signs.
    """
    if cfg.figure1 is None:
        raise PrefMonoError("config has no figure1 section")
    if cfg.problem.regularizer.kind != "none":
        raise PrefMonoError("the gradient-step trace assumes no regularizer")
    spec = cfg.figure1
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    model, family = cfg.problem.model, cfg.problem.family
    theta = initial_theta(spec.theta_init, model.dim, rng)
    records = []
    if not spec.pairs:
        return records
    for step in range(spec.steps):
        k = int(rng.integers(len(spec.pairs))) if spec.sampling == "random" else step % len(spec.pairs)
        x, y, z = spec.pairs[k]
        a = gradient_step_analysis(model, family, theta, x, y, z, spec.learning_rate)
        d, p = a["deltas"], a["predicates"]
        fp_ok = all(v >= -VIOLATION_TOL for v in d["fully_pairwise"].values())

        def verdict(ok):
            return "holds" if ok else "violated"

        records.append({
            "step": step,
            "x": x,
            "chosen": y,
            "rejected": z,
            "score_chosen_before": a["score_y_before"],
            "score_rejected_before": a["score_z_before"],
            "chosen_delta": d["individual_score_y"],
            "rejected_delta": d["individual_score_z"],
            "pairwise_delta": d["pairwise"],
            "alpha": a["alpha"],
            "pred_pairwise": p["pairwise"],
            "pred_individual_chosen": p["individual_score_y"],
            "pred_individual_rejected": p["individual_score_z"],
            "pred_fully_pairwise": p["fully_pairwise"],
            "verdict_pairwise": verdict(d["pairwise"] >= -VIOLATION_TOL),
            "verdict_individual_chosen": verdict(d["individual_score_y"] >= -VIOLATION_TOL),
            "verdict_individual_rejected": verdict(d["individual_score_z"] <= VIOLATION_TOL),
            "verdict_fully_pairwise": verdict(fp_ok),
            "verdict_probability": verdict(d["probability_y"] >= -VIOLATION_TOL),
        })
        theta = a["theta_new"]
    return records


def write_figure1(cfg: ExperimentConfig, out_dir=None, fmt: str | None = None, seed: int | None = None) -> Path:
    records = run_figure1_analog(cfg, seed)
    out = resolve_out_dir(cfg, out_dir)
    fmt = fmt or cfg.fmt
    return emit_report(records, out / f"figure1_trace.{fmt}", "trace", fmt, note=FIGURE1_NOTE)
