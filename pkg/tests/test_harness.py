import csv
import json
import math

import numpy as np
import pytest

from opengraphon import ContractViolation, replacement_bound
from opengraphon.harness import (
    ETermOptions,
    ExperimentSpec,
    SummaryFormatError,
    compare_bounds,
    e_term,
    e_term_max,
    mean_and_stderr,
    run,
)

FULL = {"kind": "constant", "p": 1.0}
SBM = {"kind": "sbm", "boundaries": [0, 0.5, 1], "P": [[0.8, 0.2], [0.2, 0.8]]}


def spec(tmp_path, name, **kw):
    doc = {"seed": 1, "out": str(tmp_path / name), **kw}
    return doc


def summary(path):
    return json.loads((path / "summary.json").read_text())


def test_oracle_check(tmp_path):
    doc = spec(tmp_path, "oracle", kind="oracle-check", graphon={"kind": "constant", "p": 0.5},
               n=4, gamma=1.0, trials=100_000)
    run(doc)
    s = summary(tmp_path / "oracle")
    assert s["exact"]["estimate"] == pytest.approx(0.7516244137834461, rel=1e-12)
    assert abs(s["diff"]) <= 3 * s["monte_carlo"]["stderr"]
    assert s["within_3se"]


def test_replacements_complete_graph(tmp_path):
    run(spec(tmp_path, "rep", kind="replacements", graphon=FULL, n=10, gamma=1.0, trials=1000, k_max=1000))
    s = summary(tmp_path / "rep")
    assert s["e_term"]["source"] == "exact"
    assert s["e_term"]["value"] == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert s["bound"] == pytest.approx(replacement_bound(10, 1.0, 1.0, math.exp(-2.0)).value)
    assert s["empirical_mean"] <= s["bound"]
    assert s["bound_holds"] and s["margin"] == pytest.approx(s["bound"] - s["empirical_mean"])
    assert s["bound_report"]["flags"] == {"denominator_positive": True}
    rows = list(csv.DictReader(open(tmp_path / "rep" / "trials.csv")))
    assert len(rows) == 1000
    mean, _ = mean_and_stderr([float(r["steady_V"]) for r in rows])
    assert mean == s["empirical_mean"]


def test_open_mean_size(tmp_path):
    run(spec(tmp_path, "open", kind="open", graphon=FULL, n_min=10, n_max=20, gamma=1.0,
             trials=1000, k_max=1000))
    s = summary(tmp_path / "open")
    assert abs(s["mean_size"] - 15) <= 0.2
    assert s["expected_size_limit"] == 15
    assert s["formula"] == "thm2" and s["bound_report"]["valid"]
    assert s["e_term"]["value"] == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_fixed_topology_summary(tmp_path):
    run(spec(tmp_path, "fixed", kind="replacements", graphon=SBM, n=8, gamma=1.0, trials=20,
             k_max=100, resample_topology=False))
    s = summary(tmp_path / "fixed")
    assert s["e_term"]["source"] == "fixed-topology"
    assert s["bound"] is not None and not s["resample_topology"]


def test_monte_carlo_e_term_is_inflated(sbm):
    opts = ETermOptions("monte-carlo", 2000, 3.0)
    et = e_term(sbm, 12, 1.0, opts, 0)
    est = et.estimate
    assert et.source == "monte-carlo+3se"
    assert et.value == pytest.approx(min(1.0, est["estimate"] + 3 * est["stderr"]))
    auto = e_term(sbm, 4, 1.0, ETermOptions(), 0)
    assert auto.source == "exact"
    top = e_term_max(sbm, 2, 5, 1.0, ETermOptions(), 0)
    per = top.estimate["per_n"]
    assert top.value == max(per.values())


def test_thm3_e_term(sbm):
    et = e_term(sbm, 500, 0.1, ETermOptions("thm3"), 0)
    assert et.report.flags["large_enough"]
    assert (et.value is not None) == et.report.valid
    big = e_term(sbm, 500, 1.0, ETermOptions("thm3"), 0)
    assert big.value is None and "below_one" in big.report.failed


def test_determinism_and_manifest(tmp_path):
    base = dict(kind="replacements", graphon=SBM, n=6, gamma=0.5, trials=30, k_max=80)
    m1 = run(spec(tmp_path, "a", **base))
    m2 = run(spec(tmp_path, "b", **base))
    assert m1.files == m2.files
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["files"] == m1.files
    assert manifest["seed"] == 1 and manifest["spec"]["n"] == 6
    again = ExperimentSpec.from_dict({**manifest["spec"], "out": str(tmp_path / "c")})
    assert run(again).files == m1.files


def test_chunking_and_workers_do_not_change_results(tmp_path):
    base = dict(kind="open", graphon=SBM, n_min=3, n_max=8, gamma=1.0, trials=24, k_max=60)
    ref = run(spec(tmp_path, "one", **base, chunk=250))
    assert run(spec(tmp_path, "small", **base, chunk=5)).files == ref.files
    assert run(spec(tmp_path, "pool", **base, chunk=7, workers=2)).files == ref.files


def test_mean_is_order_independent(rng):
    v = rng.lognormal(size=5001) * 1e3
    m1, s1 = mean_and_stderr(v)
    m2, s2 = mean_and_stderr(rng.permutation(v))
    assert m1 == m2
    assert s1 == pytest.approx(s2, rel=1e-12)


def test_trajectories_written(tmp_path):
    run(spec(tmp_path, "tr", kind="replacements", graphon=SBM, n=4, gamma=1.0, trials=3, k_max=5,
             write_trajectories=True))
    files = sorted((tmp_path / "tr" / "trajectories").iterdir())
    assert [f.name for f in files] == ["trial_00000.csv", "trial_00001.csv", "trial_00002.csv"]
    manifest = json.loads((tmp_path / "tr" / "manifest.json").read_text())
    assert "trajectories/trial_00002.csv" in manifest["files"]


def test_spec_validation_before_running(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ContractViolation, match="not writable"):
        run(spec(tmp_path, "file/sub", kind="replacements", graphon=SBM, n=4, gamma=1.0))
    bad = [
        dict(kind="nonsense", graphon=SBM),
        dict(kind="replacements", graphon=SBM, gamma=1.0),
        dict(kind="replacements", graphon=SBM, n=1, gamma=1.0),
        dict(kind="replacements", graphon=SBM, n=4, gamma=1.0, trials=0),
        dict(kind="replacements", graphon=SBM, n=4, gamma=1.0, burn_in=1.0),
        dict(kind="open", graphon=SBM, n_min=5, n_max=4, gamma=1.0),
        dict(kind="bound-sweep", graphon=SBM, gammas=[], n=5),
        dict(kind="bound-sweep", graphon=SBM, gammas=[1.0]),
        dict(kind="oracle-check", graphon=SBM, n=3),
        dict(kind="replacements", graphon=SBM, n=4, gamma=1.0, e_term={"method": "guess"}),
    ]
    for doc in bad:
        with pytest.raises(ContractViolation):
            run(spec(tmp_path, "never", **doc))
    assert not (tmp_path / "never").exists()


def test_bound_sweep_monotone_in_gamma(tmp_path):
    gammas = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
    run(spec(tmp_path, "sweep", kind="bound-sweep", graphon=FULL, n=10, gammas=gammas))
    s = summary(tmp_path / "sweep")
    bounds = [r["bound"] for r in s["rows"]]
    assert bounds[0] == pytest.approx(0.9)
    assert np.all(np.diff(bounds) < 0)
    rows = compare_bounds([tmp_path / "sweep" / "summary.json"])
    assert [r["bound"] for r in rows] == bounds


def test_compare_groups_by_formula(tmp_path):
    paths = []
    for i, doc in enumerate([
        dict(kind="replacements", graphon=SBM, n=5, gamma=1.0, trials=5, k_max=20),
        dict(kind="open", graphon=SBM, n_min=4, n_max=6, gamma=1.0, trials=5, k_max=20),
        dict(kind="replacements", graphon=FULL, n=5, gamma=2.0, trials=5, k_max=20),
    ]):
        run(spec(tmp_path, f"s{i}", **doc))
        paths.append(tmp_path / f"s{i}" / "summary.json")
    rows = compare_bounds(paths, tmp_path / "cmp")
    assert [r["formula"] for r in rows] == ["thm1", "thm1", "thm2"]
    table = list(csv.DictReader(open(tmp_path / "cmp" / "comparison.csv")))
    assert len(table) == 3
    long = list(csv.DictReader(open(tmp_path / "cmp" / "comparison_long.csv")))
    assert {r["quantity"] for r in long} == {"empirical_mean", "bound"}
    assert len(long) == 6


def test_compare_errors(tmp_path):
    with pytest.raises(ContractViolation):
        compare_bounds([])
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"kind": "replacements", "formula": "thm1", "gamma": 1.0}))
    with pytest.raises(SummaryFormatError, match="broken.json.*'n'"):
        compare_bounds([broken])
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    with pytest.raises(SummaryFormatError, match="junk.json"):
        compare_bounds([junk])
