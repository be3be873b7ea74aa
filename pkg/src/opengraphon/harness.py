"""Monte Carlo experiments that compare simulations with the closed-form bounds.

An experiment is described by a JSON-compatible document (see
:meth:`ExperimentSpec.from_dict`). :func:`run` executes it and writes into
the output directory:

``summary.json``
    aggregated numbers, the matching bound and its validity flags;
``trials.csv``
    one row per trial (simulation kinds only);
``trajectories/trial_XXXXX.csv``
    per-event records, when ``write_trajectories`` is set;
``manifest.json``
    the spec echo, version, seed, timestamps and SHA-256 of every output.

Steady state is approximated by discarding the first ``burn_in`` fraction of
events of each trial, averaging the post-event disagreement over the rest,
and averaging those per-trial means across trials. The reported standard
error is the across-trial one. ``summary.json`` holds no timestamps or paths,
so rerunning a spec reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from ._errors import ContractViolation, DomainError
from ._rng import substream
from .bounds import (
    BoundReport,
    exp_mu2_bound,
    expected_n_limit,
    large_enough_for,
    open_bound,
    replacement_bound,
)
from .graphon import Graphon, expected_graph, graphon_from_dict, graphon_to_dict
from .openmas import (
    OpenSystemConfig,
    ReplacementConfig,
    Trajectory,
    simulate_open_trials,
    simulate_replacement_trials,
)
from .spectral import ExpMu2Estimate, exp_mu2, mu2

log = logging.getLogger(__name__)

KINDS = ("replacements", "open", "bound-sweep", "oracle-check")


class SummaryFormatError(ValueError):
    """A summary file does not match the expected schema."""


@dataclass(frozen=True)
class ETermOptions:
    """How the E-term fed to a bound is obtained.

    ``method`` is ``auto`` (exact when feasible, else Monte Carlo), ``exact``,
    ``monte-carlo`` or ``thm3`` (closed-form upper bound). Monte Carlo values
    are inflated to ``estimate + inflation * stderr`` so that the bound stays
    conservative.
    """

    method: str = "auto"
    trials: int = 10_000
    inflation: float = 3.0

    @classmethod
    def from_dict(cls, doc: dict | None) -> "ETermOptions":
        doc = doc or {}
        out = cls(
            doc.get("method", "auto"),
            int(doc.get("trials", 10_000)),
            float(doc.get("inflation", 3.0)),
        )
        if out.method not in ("auto", "exact", "monte-carlo", "mc", "thm3"):
            raise ContractViolation(f"unknown e_term method {out.method!r}")
        if out.trials < 1:
            raise ContractViolation("e_term trials must be >= 1")
        return out

    def to_dict(self) -> dict:
        return {"method": self.method, "trials": self.trials, "inflation": self.inflation}


@dataclass(frozen=True)
class ETerm:
    value: float | None
    source: str
    estimate: dict | None = None
    report: BoundReport | None = None


def e_term(graphon: Graphon, n: int, gamma: float, opts: ETermOptions, seed: int) -> ETerm:
    """Conservative ``E[exp(-2 gamma mu_2)]`` at size ``n``."""
    if opts.method == "thm3":
        report = exp_mu2_bound(
            mu2(expected_graph(graphon, n)), n, gamma,
            large_enough_for(graphon, n) if graphon.piecewise is not None else None,
        )
        return ETerm(report.value if report.valid else None, "thm3", None, report)
    est = exp_mu2(
        expected_graph(graphon, n), gamma,
        method=opts.method, trials=opts.trials, rng=substream(seed, n, "estimate"),
    )
    if est.method == "exact":
        return ETerm(est.estimate, "exact", est.to_dict())
    return ETerm(est.upper(opts.inflation), f"monte-carlo+{opts.inflation:g}se", est.to_dict())


def e_term_max(
    graphon: Graphon, n_min: int, n_max: int, gamma: float, opts: ETermOptions, seed: int
) -> ETerm:
    """Largest per-size E-term over ``[n_min, n_max]``; sizes below 2 are skipped."""
    terms = {n: e_term(graphon, n, gamma, opts, seed) for n in range(max(n_min, 2), n_max + 1)}
    if any(t.value is None for t in terms.values()):
        return ETerm(None, opts.method, {"per_n": {n: t.value for n, t in terms.items()}})
    n_star = max(terms, key=lambda n: terms[n].value)
    best = terms[n_star]
    return ETerm(
        best.value,
        best.source,
        {"argmax_n": n_star, "per_n": {str(n): t.value for n, t in terms.items()}},
    )


# -- experiment specs ----------------------------------------------------------------


def _get(doc: dict, key: str, kind: str):
    if key not in doc:
        raise ContractViolation(f"{kind} experiment needs field {key!r}")
    return doc[key]


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    graphon: Graphon
    params: dict
    trials: int = 100
    burn_in: float = 0.5
    seed: int = 0
    out: str = "run"
    e_term: ETermOptions = field(default_factory=ETermOptions)
    workers: int = 1
    chunk: int = 250
    write_trajectories: bool = False

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentSpec":
        """Validate a spec document.

        Common fields: ``kind``, ``graphon`` (graphon document), ``trials``,
        ``burn_in``, ``seed``, ``out``, ``e_term``, ``workers``, ``chunk``,
        ``write_trajectories``. Kind-specific fields:

        - replacements: ``n``, ``gamma``, optional ``sigma2``, ``family``,
          ``k_max``, ``initial``, ``initial_value``, ``resample_topology``;
        - open: ``n_min``, ``n_max``, ``gamma``, optional ``n0`` and the
          same optional fields;
        - oracle-check: ``n``, ``gamma``;
        - bound-sweep: ``gammas`` and either ``n`` (replacements) or
          ``n_min``/``n_max`` (arrivals/departures), optional ``sigma2``.
        """
        if not isinstance(doc, dict):
            raise ContractViolation("experiment spec must be a JSON object")
        kind = doc.get("kind")
        if kind not in KINDS:
            raise ContractViolation(f"experiment kind must be one of {KINDS}, got {kind!r}")
        graphon = graphon_from_dict(_get(doc, "graphon", kind))
        common = {
            "trials", "burn_in", "seed", "out", "e_term", "workers", "chunk",
            "write_trajectories", "kind", "graphon",
        }
        params = {k: v for k, v in doc.items() if k not in common}
        spec = cls(
            kind=kind,
            graphon=graphon,
            params=params,
            trials=int(doc.get("trials", 100)),
            burn_in=float(doc.get("burn_in", 0.5)),
            seed=int(doc.get("seed", 0)),
            out=str(doc.get("out", "run")),
            e_term=ETermOptions.from_dict(doc.get("e_term")),
            workers=int(doc.get("workers", 1)),
            chunk=int(doc.get("chunk", 250)),
            write_trajectories=bool(doc.get("write_trajectories", False)),
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.trials < 1:
            raise ContractViolation("trials must be >= 1")
        if not (0.0 <= self.burn_in < 1.0):
            raise ContractViolation("burn_in must lie in [0, 1)")
        if self.workers < 1 or self.chunk < 1:
            raise ContractViolation("workers and chunk must be >= 1")
        p = self.params
        if self.kind in ("replacements", "open"):
            self.config()
        elif self.kind == "oracle-check":
            _get(p, "n", self.kind), _get(p, "gamma", self.kind)
        elif self.kind == "bound-sweep":
            gammas = _get(p, "gammas", self.kind)
            if not gammas:
                raise ContractViolation("bound-sweep needs a nonempty 'gammas' list")
            if "n" not in p and not ("n_min" in p and "n_max" in p):
                raise ContractViolation("bound-sweep needs 'n' or 'n_min'/'n_max'")

    def config(self) -> ReplacementConfig | OpenSystemConfig:
        p = self.params
        opt = {
            k: p[k]
            for k in ("sigma2", "family", "k_max", "initial", "initial_value")
            if k in p
        }
        try:
            if self.kind == "replacements":
                return ReplacementConfig(
                    self.graphon, int(_get(p, "n", self.kind)), float(_get(p, "gamma", self.kind)),
                    seed=self.seed, resample_topology=bool(p.get("resample_topology", True)), **opt,
                )
            if self.kind == "open":
                return OpenSystemConfig(
                    self.graphon, int(_get(p, "n_min", self.kind)), int(_get(p, "n_max", self.kind)),
                    float(_get(p, "gamma", self.kind)), n0=p.get("n0"), seed=self.seed, **opt,
                )
        except DomainError as exc:
            raise ContractViolation(f"invalid {self.kind} configuration: {exc}") from exc
        raise ContractViolation(f"{self.kind} experiments have no simulation config")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "graphon": graphon_to_dict(self.graphon),
            **self.params,
            "trials": self.trials,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "out": self.out,
            "e_term": self.e_term.to_dict(),
            "workers": self.workers,
            "chunk": self.chunk,
            "write_trajectories": self.write_trajectories,
        }


@dataclass(frozen=True)
class RunManifest:
    spec: dict
    version: str
    seed: int
    started: str
    finished: str
    files: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "version": self.version,
            "seed": self.seed,
            "started": self.started,
            "finished": self.finished,
            "files": self.files,
        }


# -- trial orchestration -------------------------------------------------------------


def _run_chunk(args):
    cfg, trials = args
    if isinstance(cfg, ReplacementConfig):
        return simulate_replacement_trials(cfg, trials)
    return simulate_open_trials(cfg, trials)


def run_trials(cfg, n_trials: int, workers: int = 1, chunk: int = 250) -> list[Trajectory]:
    """Trajectories of trials ``0..n_trials-1`` in trial order.

    Trials are split into chunks and the chunks go to a process pool when
    ``workers > 1``. Every trial has its own random streams, so the result
    does not depend on how the trials are chunked or scheduled.
    """
    chunks = [list(range(s, min(s + chunk, n_trials))) for s in range(0, n_trials, chunk)]
    if workers == 1:
        parts = [_run_chunk((cfg, c)) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
    return [tr for part in parts for tr in part]


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    """Exactly rounded mean, so the result is independent of summation order."""
    v = np.asarray(values, dtype=float)
    mean = math.fsum(v) / v.size
    if v.size < 2:
        return mean, math.inf
    var = math.fsum((v - mean) ** 2) / (v.size - 1)
    return mean, math.sqrt(var / v.size)


# -- experiment kinds ------------------------------------------------------------------


def _bound_fields(report: BoundReport, mean: float | None) -> dict:
    out = {"bound": report.value, "bound_report": report.to_dict()}
    if mean is not None and report.value is not None:
        out["margin"] = report.value - mean
        out["bound_holds"] = bool(mean <= report.value)
    return out


def _replacement_bound_for(spec: ExperimentSpec, cfg: ReplacementConfig, trajs) -> tuple[BoundReport, dict]:
    if not cfg.resample_topology:
        # each trial keeps its first topology; average the per-graph bounds
        values = [
            replacement_bound(cfg.n, cfg.sigma2, cfg.gamma, math.exp(-2.0 * cfg.gamma * max(t.mu2[0], 0.0))).value
            for t in trajs
        ]
        bound = math.fsum(values) / len(values)
        report = BoundReport(
            bound, "thm1",
            {"n": cfg.n, "sigma2": cfg.sigma2, "gamma": cfg.gamma, "e_source": "fixed-topology"},
            {"denominator_positive": True},
        )
        return report, {"value": None, "source": "fixed-topology"}
    et = e_term(cfg.graphon, cfg.n, cfg.gamma, spec.e_term, spec.seed)
    info = {"value": et.value, "source": et.source, "estimate": et.estimate}
    if et.report is not None:
        info["thm3_report"] = et.report.to_dict()
    if et.value is None:
        report = BoundReport(
            None, "thm1",
            {"n": cfg.n, "sigma2": cfg.sigma2, "gamma": cfg.gamma, "e_source": et.source},
            {"e_term_valid": False},
        )
        return report, info
    return replacement_bound(cfg.n, cfg.sigma2, cfg.gamma, et.value, et.source), info


def _open_bound_for(spec: ExperimentSpec, cfg: OpenSystemConfig) -> tuple[BoundReport, dict]:
    inputs = {"n_min": cfg.n_min, "n_max": cfg.n_max, "sigma2": cfg.sigma2, "gamma": cfg.gamma}
    if cfg.n_max <= 3:
        return BoundReport(None, "thm2", inputs, {"n_max_gt_3": False}), {"value": None}
    et = e_term_max(cfg.graphon, cfg.n_min, cfg.n_max, cfg.gamma, spec.e_term, spec.seed)
    info = {"value": et.value, "source": et.source, "estimate": et.estimate}
    if et.value is None:
        return BoundReport(None, "thm2", inputs, {"e_term_valid": False}), info
    return open_bound(cfg.n_min, cfg.n_max, cfg.sigma2, cfg.gamma, et.value, et.source), info


def _simulate(spec: ExperimentSpec, out: Path) -> tuple[dict, list[Path]]:
    cfg = spec.config()
    trajs = run_trials(cfg, spec.trials, spec.workers, spec.chunk)
    steady = [t.steady_state(spec.burn_in) for t in trajs]
    sizes = [t.mean_size(spec.burn_in) for t in trajs]
    mean, se = mean_and_stderr(steady)

    files = [out / "trials.csv"]
    with open(files[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "steady_V", "mean_size", "V0"])
        for i, (s, m, t) in enumerate(zip(steady, sizes, trajs)):
            w.writerow([i, repr(s), repr(m), repr(t.v0)])
    if spec.write_trajectories:
        (out / "trajectories").mkdir(exist_ok=True)
        for i, t in enumerate(trajs):
            path = out / "trajectories" / f"trial_{i:05d}.csv"
            t.to_csv(path)
            files.append(path)

    summary = {
        "kind": spec.kind,
        "graphon": graphon_to_dict(spec.graphon),
        "gamma": cfg.gamma,
        "sigma2": cfg.sigma2,
        "trials": spec.trials,
        "k_max": cfg.k_max,
        "burn_in": spec.burn_in,
        "seed": spec.seed,
        "empirical_mean": mean,
        "stderr": se,
    }
    if isinstance(cfg, ReplacementConfig):
        report, info = _replacement_bound_for(spec, cfg, trajs)
        summary.update(formula="thm1", n=cfg.n, resample_topology=cfg.resample_topology)
    else:
        report, info = _open_bound_for(spec, cfg)
        size_mean, size_se = mean_and_stderr(sizes)
        summary.update(
            formula="thm2",
            n_min=cfg.n_min,
            n_max=cfg.n_max,
            n0=cfg.n0,
            mean_size=size_mean,
            mean_size_stderr=size_se,
            expected_size_limit=expected_n_limit(cfg.n_min, cfg.n_max),
        )
    summary["e_term"] = info
    summary.update(_bound_fields(report, mean))
    return summary, files


def _oracle_check(spec: ExperimentSpec, out: Path) -> tuple[dict, list[Path]]:
    n, gamma = int(spec.params["n"]), float(spec.params["gamma"])
    expected = expected_graph(spec.graphon, n)
    exact = exp_mu2(expected, gamma, "exact")
    mc = exp_mu2(expected, gamma, "monte-carlo", spec.trials, substream(spec.seed, 0, "estimate"))
    diff = mc.estimate - exact.estimate
    return {
        "kind": spec.kind,
        "formula": "oracle",
        "graphon": graphon_to_dict(spec.graphon),
        "n": n,
        "gamma": gamma,
        "trials": spec.trials,
        "seed": spec.seed,
        "exact": exact.to_dict(),
        "monte_carlo": mc.to_dict(),
        "diff": diff,
        "within_3se": bool(abs(diff) <= 3.0 * mc.stderr),
    }, []


def _bound_sweep(spec: ExperimentSpec, out: Path) -> tuple[dict, list[Path]]:
    p = spec.params
    sigma2 = float(p.get("sigma2", 1.0))
    rows = []
    for gamma in p["gammas"]:
        gamma = float(gamma)
        if "n" in p:
            n = int(p["n"])
            et = e_term(spec.graphon, n, gamma, spec.e_term, spec.seed)
            report = (
                replacement_bound(n, sigma2, gamma, et.value, et.source)
                if et.value is not None
                else BoundReport(None, "thm1", {"n": n, "gamma": gamma}, {"e_term_valid": False})
            )
            label = {"n": n}
            m2 = mu2(expected_graph(spec.graphon, n))
            t3 = exp_mu2_bound(m2, n, gamma, large_enough_for(spec.graphon, n))
        else:
            n_min, n_max = int(p["n_min"]), int(p["n_max"])
            et = e_term_max(spec.graphon, n_min, n_max, gamma, spec.e_term, spec.seed)
            report = (
                open_bound(n_min, n_max, sigma2, gamma, et.value, et.source)
                if et.value is not None
                else BoundReport(None, "thm2", {"n_min": n_min, "n_max": n_max}, {"e_term_valid": False})
            )
            label = {"n_min": n_min, "n_max": n_max}
            t3 = None
        rows.append({
            "gamma": gamma,
            **label,
            "e_term": et.value,
            "e_source": et.source,
            "bound": report.value,
            "valid": report.valid,
            "flags": report.flags,
            "thm3_e_term_bound": None if t3 is None else t3.value,
            "thm3_valid": None if t3 is None else t3.valid,
        })
    path = out / "sweep.csv"
    cols = ["gamma", *label, "e_term", "e_source", "bound", "valid", "thm3_e_term_bound", "thm3_valid"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([r[c] for c in cols])
    return {
        "kind": spec.kind,
        "formula": "thm1" if "n" in p else "thm2",
        "graphon": graphon_to_dict(spec.graphon),
        "sigma2": sigma2,
        "seed": spec.seed,
        "rows": rows,
    }, [path]


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _prepare_out(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ContractViolation(f"output directory {path} is not writable: {exc}") from exc


def run(spec: ExperimentSpec | dict) -> RunManifest:
    """Execute an experiment; every validation happens before any simulation."""
    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    else:
        spec.validate()
    out = Path(spec.out)
    _prepare_out(out)
    started = datetime.now(timezone.utc).isoformat()
    log.info("running %s experiment into %s", spec.kind, out)

    handler = {
        "replacements": _simulate,
        "open": _simulate,
        "oracle-check": _oracle_check,
        "bound-sweep": _bound_sweep,
    }[spec.kind]
    summary, files = handler(spec, out)
    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    files = [summary_path, *files]

    manifest = RunManifest(
        spec=spec.to_dict(),
        version=__version__,
        seed=spec.seed,
        started=started,
        finished=datetime.now(timezone.utc).isoformat(),
        files={str(f.relative_to(out)): _sha256(f) for f in files},
    )
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
    return manifest


# -- comparison ------------------------------------------------------------------------

_REQUIRED = {
    "replacements": ("formula", "gamma", "n", "empirical_mean", "stderr", "bound", "bound_report"),
    "open": ("formula", "gamma", "n_min", "n_max", "empirical_mean", "stderr", "bound", "bound_report"),
    "bound-sweep": ("formula", "rows"),
    "oracle-check": ("formula", "n", "gamma", "exact", "monte_carlo", "diff"),
}

COMPARISON_COLUMNS = (
    "file", "kind", "formula", "graphon", "gamma", "n", "n_min", "n_max",
    "empirical_mean", "stderr", "bound", "margin", "valid",
)


def _load_summary(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SummaryFormatError(f"{path}: cannot read summary ({exc})") from exc
    if not isinstance(doc, dict):
        raise SummaryFormatError(f"{path}: summary must be a JSON object")
    kind = doc.get("kind")
    if kind not in _REQUIRED:
        raise SummaryFormatError(f"{path}: field 'kind' is missing or unknown ({kind!r})")
    for key in _REQUIRED[kind]:
        if key not in doc:
            raise SummaryFormatError(f"{path}: field {key!r} is missing")
    return doc


def _rows_of(path: str, doc: dict) -> Iterable[dict]:
    base = {
        "file": str(path),
        "kind": doc["kind"],
        "formula": doc["formula"],
        "graphon": (doc.get("graphon") or {}).get("name"),
    }
    if doc["kind"] == "bound-sweep":
        for r in doc["rows"]:
            yield {**base, "gamma": r["gamma"], "n": r.get("n"), "n_min": r.get("n_min"),
                   "n_max": r.get("n_max"), "bound": r["bound"], "valid": r["valid"]}
    elif doc["kind"] == "oracle-check":
        yield {**base, "gamma": doc["gamma"], "n": doc["n"],
               "empirical_mean": doc["monte_carlo"]["estimate"],
               "stderr": doc["monte_carlo"]["stderr"], "bound": doc["exact"]["estimate"],
               "margin": -doc["diff"], "valid": doc.get("within_3se")}
    else:
        yield {**base, "gamma": doc["gamma"], "n": doc.get("n"), "n_min": doc.get("n_min"),
               "n_max": doc.get("n_max"), "empirical_mean": doc["empirical_mean"],
               "stderr": doc["stderr"], "bound": doc["bound"], "margin": doc.get("margin"),
               "valid": doc["bound_report"].get("valid")}


def compare_bounds(paths: Sequence[str | os.PathLike], out: str | os.PathLike | None = None) -> list[dict]:
    """Tabulate empirical values against bounds, grouped by formula tag.

    With ``out`` set, writes ``comparison.csv`` (one row per point) and
    ``comparison_long.csv`` (``file, formula, gamma, n, quantity, value``).
    """
    if not paths:
        raise ContractViolation("compare needs at least one summary file")
    rows = []
    for path in paths:
        rows.extend(_rows_of(str(path), _load_summary(path)))
    order = {f: i for i, f in enumerate(dict.fromkeys(r["formula"] for r in rows))}
    rows.sort(key=lambda r: order[r["formula"]])
    rows = [{c: r.get(c) for c in COMPARISON_COLUMNS} for r in rows]
    if out is not None:
        out = Path(out)
        _prepare_out(out)
        with open(out / "comparison.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=COMPARISON_COLUMNS)
            w.writeheader()
            w.writerows(rows)
        with open(out / "comparison_long.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["file", "formula", "gamma", "n", "quantity", "value"])
            for r in rows:
                size = r["n"] if r["n"] is not None else f"{r['n_min']}-{r['n_max']}"
                for q in ("empirical_mean", "bound"):
                    if r[q] is not None:
                        w.writerow([r["file"], r["formula"], r["gamma"], size, q, r[q]])
    return rows
