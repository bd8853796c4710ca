"""File format round-trips."""

import numpy as np
import pytest

import dropflow as df
from dropflow import serialize
from dropflow.distance import signed_distance
from dropflow.flow import FlowConfig, evolve


def test_pgm_roundtrip_2d(tmp_path):
    g = df.make_grid(2, (12, 7), 0.125)
    rng = np.random.default_rng(2)
    m = df.mask_from_array(g, rng.random((12, 7)) < 0.5)
    paths = serialize.save_mask_pgm(m, tmp_path / "m.pgm")
    assert len(paths) == 1
    back = serialize.load_mask_pgm(paths[0])
    assert back == m
    assert back.grid == g


def test_pgm_roundtrip_3d(tmp_path):
    g = df.make_grid(3, (6, 5, 4), 0.5)
    rng = np.random.default_rng(3)
    m = df.mask_from_array(g, rng.random((6, 5, 4)) < 0.5)
    paths = serialize.save_mask_pgm(m, tmp_path / "m.pgm")
    assert len(paths) == 4
    back = serialize.load_mask_pgm(paths)
    assert back == m


def test_pgm_rejects_garbage(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        serialize.load_mask_pgm(p)
    p2 = tmp_path / "nometa.pgm"
    p2.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
    with pytest.raises(ValueError):
        serialize.load_mask_pgm(p2)


def test_field_csv_roundtrip(tmp_path):
    g = df.make_grid(2, (5, 4), 0.25)
    m = df.cap_mask(g, (0.625, 0.0), 0.6)
    field = signed_distance(m)
    p = tmp_path / "dist.csv"
    serialize.save_field_csv(field, p)
    back = serialize.load_field_csv(g, p)
    assert np.array_equal(back.values, field.values)
    header = p.read_text().splitlines()[0]
    assert header == "i,j,value"


def test_metrics_csv_layout_and_determinism(tmp_path):
    g = df.make_grid(2, (20, 16), 1.0 / 20)
    beta = df.BetaField.constant(g, 0.0, 0.25)
    e0 = df.cap_mask(g, (0.5, 0.0), 0.3)
    cfg = FlowConfig(initial=e0, beta=beta, steps=3, lam=64.0)
    out = []
    for name in ("a.csv", "b.csv"):
        traj = evolve(cfg)
        p = tmp_path / name
        serialize.save_metrics_csv(traj, p)
        out.append(p.read_bytes())
    assert out[0] == out[1]
    header = out[0].decode().splitlines()[0]
    assert header == (
        "k,t,volume,perimeter_in_omega,trace_term,capillary_total,"
        "fidelity,sym_diff_prev,max_dist_on_symdiff,dissipation_cum"
    )


def test_json_writer_handles_numpy(tmp_path):
    p = tmp_path / "r.json"
    serialize.save_json({"a": np.float64(1.5), "b": np.arange(3)}, p)
    import json

    rec = json.loads(p.read_text())
    assert rec == {"a": 1.5, "b": [0, 1, 2]}
