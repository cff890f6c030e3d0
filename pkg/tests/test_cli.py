import csv
import json
from pathlib import Path

import networkx as nx
import pytest

import peerex as px
from peerex.cli import main


@pytest.fixture()
def edge_file(tmp_path):
    g = nx.connected_watts_strogatz_graph(120, 6, 0.1, seed=3)
    path = tmp_path / "edges.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "target"])
        for u, v in g.edges():
            w.writerow([f"u{u}", f"u{v}"])
    return str(path)


def run(*argv):
    return main(list(argv))


def read_bytes_map(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir())}


# ---------------------------------------------------------------------------
# simulate + estimate pipeline

def test_simulate_then_estimate_with_ground_truth(tmp_path, edge_file, capsys):
    sim_dir = tmp_path / "sim"
    assert run(
        "simulate", "--network", edge_file, "-o", str(sim_dir),
        "--steps", "12", "--seed", "5", "--p0", "0.05", "--lambda-p", "0.02",
        "--q0", "0.3", "--lambda-e", "0.3", "--fire-at", "4",
    ) == 0
    assert (sim_dir / "cascade.csv").exists()
    assert (sim_dir / "labels.csv").exists()
    manifest = json.loads((sim_dir / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["seeds"] == {"rng_seed": 5}
    assert manifest["parameters"]["spikes"] == [[4.0, 0.3, 0.3]]

    est_dir = tmp_path / "est"
    assert run(
        "estimate", "--network", edge_file, "--cascade", str(sim_dir / "cascade.csv"),
        "-o", str(est_dir), "--p0", "0.05", "--lambda", "0.02", "--delta", "1",
        "--per-node", "--baseline", "--ground-truth", str(sim_dir / "labels.csv"),
    ) == 0
    stdout = capsys.readouterr().out
    assert "confusion (truth -> predicted):" in stdout
    assert "balanced accuracy:" in stdout
    for name in ("series.csv", "series.json", "per_node.csv", "baseline.csv", "manifest.json"):
        assert (est_dir / name).exists()
    with open(est_dir / "series.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["window_end", "newly_activated", "peer_count", "external_count", "mu"]
    payload = json.loads((est_dir / "series.json").read_text())
    assert payload["totals"]["newly_activated"] == sum(r["newly_activated"] for r in payload["windows"])
    with open(est_dir / "per_node.csv", newline="") as fh:
        per_node = list(csv.DictReader(fh))
    assert {r["label"] for r in per_node} <= {"peer", "external"}
    assert all(r["id"].startswith("u") for r in per_node)


def test_estimate_illustrative_flags(tmp_path, edge_file):
    sim_dir = tmp_path / "sim"
    run("simulate", "--network", edge_file, "-o", str(sim_dir), "--steps", "8", "--seed", "1")
    est_dir = tmp_path / "est"
    assert run(
        "estimate", "--network", edge_file, "--cascade", str(sim_dir / "cascade.csv"),
        "-o", str(est_dir), "--p0", "0.6", "--lambda", "0.001", "--delta", "7200",
    ) == 0
    manifest = json.loads((est_dir / "manifest.json").read_text())
    assert manifest["parameters"]["p0"] == 0.6
    assert manifest["parameters"]["lambda"] == 0.001
    assert manifest["parameters"]["delta"] == 7200.0


def test_full_activation_trivial_config(tmp_path, edge_file):
    out = tmp_path / "out"
    assert run(
        "simulate", "--network", edge_file, "-o", str(out),
        "--steps", "1", "--q0", "1", "--lambda-e", "0", "--fire-at", "1", "--p0", "0",
        "--seed", "2",
    ) == 0
    with open(out / "cascade.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 120  # everyone activated
    times = {float(r["timestamp"]) for r in rows}
    assert times <= {0.0, 1.0}


def test_simulate_same_seed_identical_files(tmp_path, edge_file):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["simulate", "--network", edge_file, "--steps", "10", "--seed", "33"]
    assert run(*args, "-o", str(a)) == 0
    assert run(*args, "-o", str(b)) == 0
    assert read_bytes_map(a) == read_bytes_map(b)


def test_simulate_config_file_with_flag_override(tmp_path, edge_file):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("steps=6\np0=0.1\nlambda_p=0.05\nspikes=2:0.5:0.1\nrng_seed=4\nseed_node=u3\n")
    out = tmp_path / "out"
    assert run(
        "simulate", "--network", edge_file, "--config", str(cfg), "-o", str(out),
        "--steps", "3",
    ) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["parameters"]["steps"] == 3  # flag wins
    assert manifest["parameters"]["p0"] == 0.1
    assert manifest["parameters"]["spikes"] == [[2.0, 0.5, 0.1]]
    assert manifest["seeds"]["rng_seed"] == 4


def test_simulate_explicit_spikes(tmp_path, edge_file):
    out = tmp_path / "out"
    assert run(
        "simulate", "--network", edge_file, "-o", str(out), "--steps", "6",
        "--spike", "2:0.4:0.2", "--spike", "4:0.1:0.0", "--seed", "0",
    ) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["parameters"]["spikes"] == [[2.0, 0.4, 0.2], [4.0, 0.1, 0.0]]


def test_simulate_unknown_seed_node_fails(tmp_path, edge_file, capsys):
    out = tmp_path / "out"
    assert run(
        "simulate", "--network", edge_file, "-o", str(out), "--seed-node", "nope",
    ) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# failure handling

def test_missing_cascade_file_leaves_no_outputs(tmp_path, edge_file, capsys):
    est_dir = tmp_path / "est"
    code = run(
        "estimate", "--network", edge_file, "--cascade", str(tmp_path / "nope.csv"),
        "-o", str(est_dir),
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err
    assert not (est_dir / "series.csv").exists()


def test_invalid_parameter_fails(tmp_path, edge_file, capsys):
    sim_dir = tmp_path / "sim"
    run("simulate", "--network", edge_file, "-o", str(sim_dir), "--steps", "4", "--seed", "1")
    code = run(
        "estimate", "--network", edge_file, "--cascade", str(sim_dir / "cascade.csv"),
        "-o", str(tmp_path / "est"), "--p0", "1.5",
    )
    assert code != 0


def test_ground_truth_failure_removes_partial_outputs(tmp_path, edge_file):
    sim_dir = tmp_path / "sim"
    run("simulate", "--network", edge_file, "-o", str(sim_dir), "--steps", "4", "--seed", "1")
    est_dir = tmp_path / "est"
    code = run(
        "estimate", "--network", edge_file, "--cascade", str(sim_dir / "cascade.csv"),
        "-o", str(est_dir), "--ground-truth", str(tmp_path / "missing.csv"),
    )
    assert code == 2
    # series.csv was written before the ground-truth read failed; it must be gone
    assert not (est_dir / "series.csv").exists()
    assert not (est_dir / "manifest.json").exists()


# ---------------------------------------------------------------------------
# rewire

def test_rewire_outputs_and_degree_preservation(tmp_path, edge_file):
    out = tmp_path / "rw"
    assert run("rewire", "--network", edge_file, "-o", str(out), "--seed", "7") == 0
    original = px.load_network(
        [tuple(r) for r in csv.reader(open(edge_file))][1:]
    )
    rewired = px.load_network(
        [tuple(r) for r in csv.reader(open(out / "edges.csv"))][1:]
    )
    assert sorted(rewired.degrees()) == sorted(original.degrees())
    with open(out / "id_map.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == original.node_count
    assert {r["original_id"] for r in rows} == set(original.original_ids)


# ---------------------------------------------------------------------------
# calibrate

def test_calibrate_writes_grid(tmp_path, edge_file, capsys):
    sim_dir = tmp_path / "sim"
    run(
        "simulate", "--network", edge_file, "-o", str(sim_dir),
        "--steps", "20", "--seed", "5", "--p0", "0.1", "--lambda-p", "0.02", "--fire-at", "",
    )
    cal_dir = tmp_path / "cal"
    assert run(
        "calibrate", "--network", edge_file, "--cascade", str(sim_dir / "cascade.csv"),
        "-o", str(cal_dir), "--lambda-grid", "0.01,0.1", "--p0-grid", "0.2,0.5,0.8",
        "--delta", "4", "--period-start", "0", "--period-length", "20",
        "--target", "0.9", "--tolerance", "0.1", "--robustness", "--curve-bin", "5",
    ) == 0
    with open(cal_dir / "grid.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert {r["selected"] for r in rows} <= {"0", "1"}
    out = capsys.readouterr().out
    assert "grid point" in out


def test_calibrate_empty_selection_reports_nearest(tmp_path, edge_file, capsys):
    sim_dir = tmp_path / "sim"
    run("simulate", "--network", edge_file, "-o", str(sim_dir), "--steps", "10", "--seed", "5")
    cal_dir = tmp_path / "cal"
    assert run(
        "calibrate", "--network", edge_file, "--cascade", str(sim_dir / "cascade.csv"),
        "-o", str(cal_dir), "--lambda-grid", "0.01", "--p0-grid", "0.0",
        "--delta", "2", "--target", "0.7",
    ) == 0
    assert "nearest" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# homophily

def test_homophily_outputs(tmp_path):
    edges = tmp_path / "edges.csv"
    edges.write_text("source,target\na,b\nb,c\na,c\n")
    attrs = tmp_path / "attrs.csv"
    attrs.write_text(
        "id,vote,age,gender,locality\n"
        "a,for,20,f,x\n"
        "b,for,25,m,x\n"
        "c,for,30,f,y\n"
    )
    out = tmp_path / "hom"
    assert run(
        "homophily", "--network", str(edges), "--attributes", str(attrs), "-o", str(out),
    ) == 0
    with open(out / "same_fraction.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert sum(int(r["count"]) for r in rows) == 3
    with open(out / "mixing_matrix.csv", newline="") as fh:
        mix = list(csv.reader(fh))
    assert mix[0] == ["category", "for"]
    assert float(mix[1][1]) == 3.0
    with open(out / "age_gaps.csv", newline="") as fh:
        gaps = list(csv.DictReader(fh))
    assert {(float(r["gap_bin_start"]), int(r["count"])) for r in gaps} == {(5.0, 2), (10.0, 1)}


# ---------------------------------------------------------------------------
# histogram

def test_histogram_with_group_subset(tmp_path, capsys):
    casc = tmp_path / "casc.csv"
    casc.write_text("id,timestamp\na,0\nb,30\nc,90\n")
    groups = tmp_path / "groups.csv"
    groups.write_text("id,group\na,g1\nb,g2\nc,g1\n")
    out = tmp_path / "hist"
    assert run(
        "histogram", "--cascade", str(casc), "-o", str(out), "--bin", "60",
        "--groups", str(groups), "--group", "g1",
    ) == 0
    with open(out / "histogram.csv", newline="") as fh:
        rows = [(float(r["bin_start"]), int(r["count"])) for r in csv.DictReader(fh)]
    assert rows == [(0.0, 1), (60.0, 1)]


def test_histogram_requires_group_with_groups(tmp_path, capsys):
    casc = tmp_path / "casc.csv"
    casc.write_text("id,timestamp\na,0\n")
    groups = tmp_path / "groups.csv"
    groups.write_text("id,group\na,g1\n")
    assert run(
        "histogram", "--cascade", str(casc), "-o", str(tmp_path / "h"),
        "--groups", str(groups),
    ) == 2


def test_histogram_iso_timestamps(tmp_path):
    casc = tmp_path / "casc.csv"
    casc.write_text("id,timestamp\na,1970-01-01T01:00:00\nb,1970-01-01T01:30:00\n")
    out = tmp_path / "hist"
    assert run(
        "histogram", "--cascade", str(casc), "-o", str(out),
        "--time-format", "iso", "--utc-offset", "0", "--bin", "3600",
    ) == 0
    with open(out / "histogram.csv", newline="") as fh:
        rows = [(float(r["bin_start"]), int(r["count"])) for r in csv.DictReader(fh)]
    assert rows == [(3600.0, 2)]


# ---------------------------------------------------------------------------
# shared flags

def test_no_header_and_giant(tmp_path):
    edges = tmp_path / "edges.csv"
    # headerless file with two components; --giant keeps the triangle
    edges.write_text("a,b\nb,c\na,c\nx,y\n")
    out = tmp_path / "rw"
    assert run(
        "rewire", "--network", str(edges), "--no-header", "--giant", "-o", str(out),
    ) == 0
    with open(out / "id_map.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["original_id"] for r in rows} == {"a", "b", "c"}


def test_estimate_time_window_clip(tmp_path, edge_file):
    casc = tmp_path / "casc.csv"
    casc.write_text("id,timestamp\nu0,1\nu1,5\nu2,9\n")
    out = tmp_path / "est"
    assert run(
        "estimate", "--network", edge_file, "--cascade", str(casc), "-o", str(out),
        "--delta", "2", "--t-start", "2", "--t-end", "8",
    ) == 0
    payload = json.loads((out / "series.json").read_text())
    assert payload["totals"]["newly_activated"] == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert "peerex" in capsys.readouterr().out
