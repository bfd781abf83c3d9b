import json

import pytest

from aerolattice.data import Demonstration, free_field, read_demonstrations, write_demonstrations
from aerolattice.planner import Plan, PlannerConfig, ara_star
from aerolattice.cli import EXIT_DATA, EXIT_EXHAUSTED, EXIT_OK, EXIT_USAGE, main

SMALL = ["--set", "synth_demos=4", "--set", "heldout_demos=2", "--set", "max_expansions=3000",
         "--set", "warmup_steps=2", "--set", "window_steps=2"]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(out), *SMALL]) == EXIT_OK
    return out


def test_pipeline_and_export(synth_dir, tmp_path):
    assert {"demos.csv", "heldout.csv", "ground_truth.json", "scenarios.json"} <= {p.name for p in synth_dir.iterdir()}
    tr = tmp_path / "train"
    assert main(["train-routing", "--demos", str(synth_dir / "demos.csv"), "--checkpoints",
                 "--field", "free", "--out", str(tr), *SMALL, "--set", "checkpoint_every_steps=2"]) == EXIT_OK
    assert (tr / "routing_field.csv").exists() and (tr / "checkpoints").is_dir()
    ev = tmp_path / "eval"
    assert main(["eval", "--demos", str(synth_dir / "heldout.csv"), "--field", str(tr / "routing_field.csv"),
                 "--baseline", "--trace", str(tr / "training_trace.csv"), "--out", str(ev), *SMALL]) == EXIT_OK
    metrics = json.loads((ev / "metrics.json").read_text())
    assert {"learned", "path_length_only", "training"} <= set(metrics)
    pl = tmp_path / "plan"
    assert main(["plan", "--demos", str(synth_dir / "heldout.csv"), "--field", "free", "--out", str(pl)]) == EXIT_OK
    ex = tmp_path / "export"
    assert main(["export", "--trace", str(tr / "training_trace.csv"), "--demos", str(synth_dir / "heldout.csv"),
                 "--plans", str(pl / "plans.csv"), "--out", str(ex), *SMALL]) == EXIT_OK
    names = {p.name for p in ex.iterdir()}
    assert {"training_series.csv", "margin.png", "timeout_fraction.png", "trajectories.csv",
            "trajectories.png"} <= names
    assert (ex / "margin.png").read_bytes()[:4] == b"\x89PNG"


def test_eval_identical_inputs_zero(synth_dir, tmp_path):
    # demonstrations the free-field planner reproduces exactly from their own endpoints
    cfg = PlannerConfig(max_expansions=1500)
    demos = []
    for d in read_demonstrations(synth_dir / "heldout.csv") + read_demonstrations(synth_dir / "demos.csv"):
        if len(demos) == 2:
            break
        goal = d.sg
        for _ in range(6):
            plan = ara_star(d.s0, goal, free_field(), config=cfg)
            if not isinstance(plan, Plan):
                break
            again = ara_star(d.s0, plan.states[-1], free_field(), config=cfg)
            if isinstance(again, Plan) and [s.as_tuple() for s in again.states] == [s.as_tuple() for s in plan.states]:
                demos.append(Demonstration.from_plan(plan, d.id))
                break
            goal = plan.states[-1]
    assert demos
    write_demonstrations(demos, tmp_path / "own.csv")
    rc = main(["eval", "--demos", str(tmp_path / "own.csv"), "--field", "free", "--out", str(tmp_path),
               "--set", "max_expansions=1500"])
    assert rc == EXIT_OK
    learned = json.loads((tmp_path / "metrics.json").read_text())["learned"]
    assert learned["avg_min_path_diff"] == 0.0 and learned["avg_min_path_diff_m"] == 0.0
    assert learned["n_timeouts"] == 0 and set(learned["margin_series"]) == {0.0}


def test_usage_errors(tmp_path, capsys):
    for argv in (["frobnicate"], ["plan", "--bogus"], []):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == EXIT_USAGE
    assert main(["synth", "--out", str(tmp_path), "--set", "no_such_key=1"]) == EXIT_USAGE
    assert main(["eval", "--out", str(tmp_path)]) == EXIT_USAGE


def test_data_errors(tmp_path):
    assert main(["train-routing", "--demos", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == EXIT_DATA
    bad = tmp_path / "traces.csv"
    bad.write_text("flight_id,t_unix_s,lat_deg,lon_deg,alt_m\nf,0,47.4,-122.3,100\nf,30,47.41,-122.3,100\n")
    assert main(["ingest", str(bad), "--out", str(tmp_path)]) == EXIT_DATA


def test_exhausted(synth_dir, tmp_path):
    rc = main(["train-routing", "--demos", str(synth_dir / "demos.csv"), "--out", str(tmp_path),
               "--set", "max_expansions=1"])
    assert rc == EXIT_EXHAUSTED
