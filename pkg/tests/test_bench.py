import csv
import io

import numpy as np
import pytest

from aapp.bench import (
    ExperimentConfig,
    ResultRecord,
    aggregate_quantiles,
    cell_seed,
    fnv1a64,
    read_records,
    run_grid,
    win_table,
    write_aggregate,
    write_records,
    write_wins,
)
from aapp.cli import main
from aapp.errors import ConfigError

from oracles import quantile_sorted


def _small(**kw):
    base = dict(synthetic=("polygon-hull", 60, 3), methods=("uniform",), k_list=(3,), iters=2, seeds=2)
    base.update(kw)
    return ExperimentConfig(**base)


def _rec(dataset, method, k, seed, value, stage="init"):
    return ResultRecord(dataset, method, k, seed, stage, value)


# -- seeding ---------------------------------------------------------------

def test_fnv1a_reference_values():
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C


def test_cell_seeds_distinct_and_stable():
    seeds = {cell_seed(0, m, k, s) for m in ("uniform", "aapp") for k in (15, 25) for s in range(10)}
    assert len(seeds) == 40
    assert cell_seed(3, "aapp", 25, 7) == cell_seed(3, "aapp", 25, 7)
    assert cell_seed(3, "aapp", 25, 7) != cell_seed(4, "aapp", 25, 7)


# -- config ----------------------------------------------------------------

@pytest.mark.parametrize(
    "kw",
    [
        dict(k_list=(0,)),
        dict(iters=-1),
        dict(seeds=0),
        dict(methods=("magic",)),
        dict(chain_fractions=(0.0,)),
        dict(data="x.csv"),
        dict(preprocess="minmax"),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        _small(**kw)


# -- run_grid --------------------------------------------------------------

def test_record_count_single_cell():
    records = run_grid(_small(iters=10, seeds=1))
    assert len(records) == 11
    assert [r.stage for r in records] == ["init"] + [f"iter-{t}" for t in range(1, 11)]
    assert all(r.mse >= 0 and np.isfinite(r.mse) for r in records)


def test_chain_fractions_give_separate_methods():
    records = run_grid(_small(methods=("aapp-mc",), chain_fractions=(0.05, 0.2), seeds=1))
    assert sorted({r.method for r in records}) == ["aapp-mc@0.05", "aapp-mc@0.2"]


def test_grid_order_and_conservation():
    config = _small(methods=("uniform", "aapp"), k_list=(2, 4), seeds=(5, 1), iters=1)
    records = run_grid(config)
    assert len(records) == 2 * 2 * 2 * 2
    keys = [(r.method, r.k, r.seed) for r in records[::2]]
    assert keys == [(m, k, s) for m in ("uniform", "aapp") for k in (2, 4) for s in (5, 1)]


def test_failed_cell_becomes_error_row():
    records = run_grid(_small(k_list=(3, 100), seeds=1, iters=1))
    errors = [r for r in records if r.is_error]
    assert len(errors) == 1 and errors[0].k == 100
    assert errors[0].flags[0].startswith("error:CardinalityError")
    assert len(records) == 2 + 1


def test_timing_columns_only_when_serial():
    plain = run_grid(_small(seeds=1))
    timed = run_grid(_small(seeds=1, serial=True))
    assert all(r.init_time is None and r.iter_time is None for r in plain)
    assert all(r.init_time >= 0 and r.iter_time >= 0 for r in timed)
    assert [r.mse for r in plain] == [r.mse for r in timed]


def test_records_file_deterministic(tmp_path):
    config = _small(methods=("uniform", "aapp", "aapp-mc"), chain_fractions=(0.1,))
    a = write_records(run_grid(config), tmp_path / "a.csv").read_bytes()
    b = write_records(run_grid(config), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_process_pool_matches_inline():
    config = _small(methods=("uniform", "kmeanspp"), seeds=3)
    inline = run_grid(config)
    pooled = run_grid(_small(methods=("uniform", "kmeanspp"), seeds=3, workers=2))
    assert inline == pooled


def test_records_round_trip(tmp_path):
    records = run_grid(_small(k_list=(3, 100), seeds=1, serial=True))
    path = write_records(records, tmp_path / "r.csv")
    back = read_records(path)
    assert [(r.method, r.k, r.seed, r.stage, r.mse, r.flags) for r in back] == [
        (r.method, r.k, r.seed, r.stage, r.mse, r.flags) for r in records
    ]
    header = path.read_text().splitlines()[0]
    assert header == "dataset,method,k,seed,stage,mse,init_time_s,iter_time_s,flags"


# -- aggregate_quantiles ---------------------------------------------------

def test_single_seed_quantiles():
    table = aggregate_quantiles([_rec("d", "aapp", 3, 0, 0.7)])
    assert table[("d", "aapp", 3, "init")] == (1, 0.7, 0.7, 0.7)


def test_median_of_three():
    table = aggregate_quantiles([_rec("d", "m", 2, s, v) for s, v in enumerate([3.0, 1.0, 2.0])])
    _, median, q25, q75 = table[("d", "m", 2, "init")]
    assert (median, q25, q75) == (2.0, 1.5, 2.5)


def test_quantiles_match_oracle():
    g = np.random.default_rng(0)
    records = []
    for m in ("a", "b"):
        for s in range(50):
            records.append(_rec("d", m, 5, s, float(g.random())))
    table = aggregate_quantiles(records)
    for m in ("a", "b"):
        values = sorted(r.mse for r in records if r.method == m)
        _, median, q25, q75 = table[("d", m, 5, "init")]
        for q, got in ((0.5, median), (0.25, q25), (0.75, q75)):
            assert got == pytest.approx(quantile_sorted(values, q), abs=1e-12)
            assert got == pytest.approx(np.percentile(values, 100 * q), abs=1e-12)


def test_aggregate_skips_errors_and_orders_stages(tmp_path):
    records = [
        _rec("d", "m", 2, 0, 1.0),
        _rec("d", "m", 2, 0, 0.5, "iter-2"),
        _rec("d", "m", 2, 0, 0.8, "iter-10"),
        ResultRecord("d", "m", 2, 1, "error", flags=("error:X",)),
    ]
    table = aggregate_quantiles(records)
    assert [key[3] for key in table] == ["init", "iter-2", "iter-10"]
    assert all(v[0] == 1 for v in table.values())
    text = write_aggregate(table, tmp_path / "agg.csv").read_text()
    assert text.splitlines()[0] == "dataset,method,k,stage,count,median,q25,q75"


# -- win_table -------------------------------------------------------------

def test_strict_winner():
    records = [_rec("d", m, 5, 0, v) for m, v in (("uniform", 2.0), ("aapp", 1.0), ("kmeanspp", 3.0))]
    wins = win_table(records, ("best", "initialization"))
    assert wins.counts == {("aapp", 5): 1, ("uniform", 5): 0, ("kmeanspp", 5): 0}
    assert wins.ties == []


def test_tie_counts_for_both():
    records = [_rec("d", m, 5, 0, v) for m, v in (("uniform", 1.0), ("aapp", 1.0 + 1e-13), ("kmeanspp", 3.0))]
    wins = win_table(records, "best-initialization")
    assert wins.counts[("uniform", 5)] == wins.counts[("aapp", 5)] == 1
    assert wins.ties == [("d", 5, ("uniform", "aapp"))]
    assert ["best-initialization", "aapp", "5", "1", "1"] in wins.rows()


def test_planted_table():
    # three datasets, two k values, three seeds; hand-computed winners
    scores = {
        # (dataset, k): {method: [init values per seed], ...}
        ("d1", 2): {"uniform": [5, 1, 9], "aapp": [2, 3, 4], "furthest-sum": [6, 6, 6]},
        ("d2", 2): {"uniform": [5, 5, 5], "aapp": [4, 8, 8], "furthest-sum": [7, 1, 7]},
        ("d3", 2): {"uniform": [3, 3, 3], "aapp": [3, 3, 3], "furthest-sum": [9, 9, 2]},
        ("d1", 4): {"uniform": [2, 2, 2], "aapp": [1, 1, 9], "furthest-sum": [3, 3, 3]},
        ("d2", 4): {"uniform": [2, 2, 2], "aapp": [1, 5, 5], "furthest-sum": [3, 3, 0]},
        ("d3", 4): {"uniform": [4, 4, 4], "aapp": [2, 2, 2], "furthest-sum": [5, 5, 5]},
    }
    records = [
        _rec(d, m, k, s, float(v)) for (d, k), group in scores.items() for m, vals in group.items()
        for s, v in enumerate(vals)
    ]
    median = win_table(records, "median-initialization").counts
    # medians: d1k2 u5 a3 f6 -> aapp; d2k2 u5 a8 f7 -> uniform; d3k2 u3 a3 f9 -> tie u,a
    # d1k4 u2 a1 f3 -> aapp; d2k4 u2 a5 f3 -> uniform; d3k4 u4 a2 f5 -> aapp
    assert median == {
        ("uniform", 2): 2, ("furthest-sum", 2): 0, ("aapp", 2): 2,
        ("uniform", 4): 1, ("furthest-sum", 4): 0, ("aapp", 4): 2,
    }
    best = win_table(records, "best-initialization").counts
    # best: d1k2 u1 a2 f6 -> uniform; d2k2 u5 a4 f1 -> fs; d3k2 u3 a3 f2 -> fs
    # d1k4 u2 a1 f3 -> aapp; d2k4 u2 a1 f0 -> fs; d3k4 u4 a2 f5 -> aapp
    assert best == {
        ("uniform", 2): 1, ("furthest-sum", 2): 2, ("aapp", 2): 0,
        ("uniform", 4): 0, ("furthest-sum", 4): 1, ("aapp", 4): 2,
    }


def test_overall_uses_best_stage():
    records = [
        _rec("d", "uniform", 3, 0, 2.0),
        _rec("d", "uniform", 3, 0, 0.5, "iter-1"),
        _rec("d", "aapp", 3, 0, 1.0),
        _rec("d", "aapp", 3, 0, 0.9, "iter-1"),
    ]
    assert win_table(records, "best-initialization").counts[("aapp", 3)] == 1
    assert win_table(records, "best-overall").counts[("uniform", 3)] == 1


def test_mc_variants_excluded():
    records = [_rec("d", "uniform", 3, 0, 2.0), _rec("d", "aapp-mc@0.05", 3, 0, 0.1)]
    assert win_table(records, "best-overall").counts == {("uniform", 3): 1}


def test_missing_coverage():
    records = [_rec("d", "uniform", 3, 0, 2.0), _rec("e", "aapp", 3, 0, 1.0), _rec("e", "uniform", 3, 0, 1.0)]
    with pytest.raises(ConfigError):
        win_table(records, "best-initialization")
    with pytest.raises(ConfigError):
        win_table(records, "worst-initialization")


def test_wins_csv(tmp_path):
    records = [_rec("d", m, 5, 0, v) for m, v in (("uniform", 2.0), ("aapp", 1.0))]
    tables = [win_table(records, m) for m in ("best-initialization", "median-overall")]
    rows = list(csv.reader(io.StringIO(write_wins(tables, tmp_path / "w.csv").read_text())))
    assert rows[0] == ["mode", "method", "k", "wins", "ties"]
    assert len(rows) == 5


# -- cli -------------------------------------------------------------------

def test_run_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "--help"])
    assert err.value.code == 0
    assert "--synthetic" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "--synthetic", "ring", "--frobnicate"])
    assert err.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_bad_method_is_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["run", "--synthetic", "ring", "--methods", "uniform,magic"])
    assert err.value.code == 1


def test_missing_data_file(tmp_path, capsys):
    missing = tmp_path / "missing.csv"
    assert main(["run", "--data", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_unparsable_data_file(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,x\n")
    assert main(["run", "--data", str(path), "--out", str(tmp_path)]) == 2
    assert "line 2, column 2" in capsys.readouterr().err


def test_demo_ring(capsys):
    assert main(["demo", "--k", "4", "--shape", "ring"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["step", "index", "x", "y", "mse"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]
    mses = [float(r[4]) for r in rows[1:]]
    assert all(b <= a + 1e-12 for a, b in zip(mses, mses[1:]))


def test_cli_pipeline(tmp_path):
    data = tmp_path / "pts.csv"
    pts = np.random.default_rng(0).normal(size=(40, 3))
    data.write_text("\n".join(",".join(map(repr, row)) for row in pts.tolist()))
    args = ["run", "--data", str(data), "--preprocess", "cms", "--methods", "uniform,aapp,aapp-mc",
            "--k", "3,5", "--seeds", "3", "--iters", "2", "--chain-fracs", "0.2", "--out", str(tmp_path)]
    assert main(args) == 0
    records = read_records(tmp_path / "records.csv")
    assert len(records) == 3 * 2 * 3 * 3
    assert {r.dataset for r in records} == {"pts"}
    assert main(["aggregate", str(tmp_path / "records.csv")]) == 0
    assert (tmp_path / "aggregate.csv").read_text().count("\n") == 1 + 3 * 2 * 3
    assert main(["wins", str(tmp_path / "records.csv"), "--mode", "median-overall"]) == 0
    assert (tmp_path / "wins.csv").read_text().count("\n") == 1 + 2 * 2


def test_aggregate_missing_records(tmp_path):
    assert main(["aggregate", str(tmp_path / "none.csv")]) == 2
