"""Command-line interface: orchestration, validation exit codes, determinism."""

import json

import pytest

import dropflow as df
from dropflow import serialize
from dropflow.cli import main, parse_config

BASE_CFG = """
grid.d = 2
grid.extents = 48,48
grid.h = 0.020833333333333332
beta.value = 0.0
beta.kappa = 0.25
init.kind = cap
init.center = 0.5,0.0
init.radius = 0.28
flow.dt = 0.00390625
flow.steps = 4
output.dir = out
"""


def write_cfg(tmp_path, text=BASE_CFG, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_config():
    kv = parse_config("a.b = 1\n# comment\n\n c = x y  # trailing\n")
    assert kv == {"a.b": "1", "c": "x y"}
    from dropflow.cli import ConfigError

    with pytest.raises(ConfigError):
        parse_config("not a key value line")


def test_evolve_smoke(tmp_path):
    cfg = write_cfg(tmp_path)
    with pytest.warns(RuntimeWarning):
        assert main(["evolve", str(cfg)]) == 0
    out = tmp_path / "out"
    frames = sorted(out.glob("frame_*.pgm"))
    assert len(frames) == 5
    assert (out / "metrics.csv").exists()
    assert (out / "analysis.json").exists()
    rec = json.loads((out / "analysis.json").read_text())
    assert rec["dissipation"]["capillary_nonincreasing"]


def test_evolve_deterministic(tmp_path):
    cfg = write_cfg(tmp_path)
    with pytest.warns(RuntimeWarning):
        assert main(["evolve", str(cfg), "output.dir=o1"]) == 0
        assert main(["evolve", str(cfg), "output.dir=o2"]) == 0
    m1 = (tmp_path / "o1" / "metrics.csv").read_bytes()
    m2 = (tmp_path / "o2" / "metrics.csv").read_bytes()
    assert m1 == m2
    f1 = sorted((tmp_path / "o1").glob("frame_*.pgm"))
    f2 = sorted((tmp_path / "o2").glob("frame_*.pgm"))
    for a, b in zip(f1, f2):
        assert a.read_bytes() == b.read_bytes()


def test_invalid_beta_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["evolve", str(cfg), "beta.value=1.5"]) == 2
    err = capsys.readouterr().err
    assert "beta" in err


def test_missing_config_file_exits_3(tmp_path):
    assert main(["evolve", str(tmp_path / "absent.cfg")]) == 3


def test_mask_file_init_roundtrip_and_mismatch(tmp_path):
    g = df.make_grid(2, (48, 48), 0.020833333333333332)
    m = df.cap_mask(g, (0.5, 0.0), 0.28)
    serialize.save_mask_pgm(m, tmp_path / "init.pgm")
    cfg_text = BASE_CFG.replace(
        "init.kind = cap", "init.kind = mask-file\ninit.path = init.pgm"
    )
    cfg_text = "\n".join(
        ln for ln in cfg_text.splitlines() if not ln.startswith(("init.center", "init.radius"))
    )
    cfg = write_cfg(tmp_path, cfg_text)
    with pytest.warns(RuntimeWarning):
        assert main(["evolve", str(cfg)]) == 0
    back = serialize.load_mask_pgm(tmp_path / "out" / "frame_00000.pgm")
    assert back == m
    # mismatched extents must fail validation naming the init key
    assert main(["evolve", str(cfg), "grid.extents=40,40"]) == 2


def test_exactly_one_init_source(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG + "init.path = foo.pgm\n")
    assert main(["evolve", str(cfg)]) == 2


def test_exactly_one_of_lambda_dt(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG + "flow.lambda = 256\n")
    assert main(["evolve", str(cfg)]) == 2


TINY_CFG = """
grid.d = 2
grid.extents = 5,4
grid.h = 0.5
beta.value = -0.25
init.kind = box
init.lo = 0.5,0.0
init.hi = 2.0,1.0
flow.lambda = 4
flow.stencil = axis
output.dir = cmp
"""


def test_oracle_compare_pass_and_negative_control(tmp_path):
    cfg = write_cfg(tmp_path, TINY_CFG, "tiny.cfg")
    assert main(["oracle-compare", str(cfg)]) == 0
    rec = json.loads((tmp_path / "cmp" / "oracle_compare.json").read_text())
    assert rec["verdict"] == "PASS"
    assert rec["mincut"]["exact"] and rec["relax"]["within_gap_of_oracle"]
    assert main(["oracle-compare", str(cfg), "--corrupt-unary-sign"]) == 0
    rec = json.loads((tmp_path / "cmp" / "oracle_compare.json").read_text())
    assert rec["verdict"] == "FAIL"


def test_oracle_compare_constrained_barrier(tmp_path):
    text = TINY_CFG.replace("beta.value = -0.25", "beta.value = -0.5")
    text += "oracle.objective = constrained-capillary\n"
    cfg = write_cfg(tmp_path, text, "tiny2.cfg")
    assert main(["oracle-compare", str(cfg)]) == 0
    rec = json.loads((tmp_path / "cmp" / "oracle_compare.json").read_text())
    assert rec["verdict"] == "PASS"
    e0 = df.box_mask(df.make_grid(2, (5, 4), 0.5), (0.5, 0.0), (2.0, 1.0))
    want = "".join("1" if b else "0" for b in e0.cells.ravel())
    assert rec["oracle"]["lattice_min"] == want


def test_oracle_compare_cap_exceeded(tmp_path):
    cfg = write_cfg(tmp_path, TINY_CFG, "big.cfg")
    assert main(["oracle-compare", str(cfg), "grid.extents=6,4"]) == 2


def test_minimize_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, TINY_CFG, "m.cfg")
    assert main(["minimize", str(cfg), "minimize.objective=constrained-capillary"]) == 0
    rec = json.loads((tmp_path / "cmp" / "energy.json").read_text())
    assert rec["lambda"] == 0.0
    assert (tmp_path / "cmp" / "result.pgm").exists()
    assert main(["minimize", str(cfg)]) == 0  # one-step objective


def test_analyze_subcommand(tmp_path):
    cfg = write_cfg(tmp_path)
    with pytest.warns(RuntimeWarning):
        assert main(["evolve", str(cfg)]) == 0
    metrics_before = (tmp_path / "out" / "metrics.csv").read_bytes()
    assert main(["analyze", str(cfg)]) == 0
    assert (tmp_path / "out" / "metrics.csv").read_bytes() == metrics_before
    assert main(["analyze", str(cfg), "output.dir=nowhere"]) == 3


def test_beta_from_csv(tmp_path):
    values = [0.5 - i / 48 for i in range(48)]
    (tmp_path / "beta.csv").write_text("\n".join(str(v) for v in values) + "\n")
    text = BASE_CFG.replace("beta.value = 0.0", "beta.csv = beta.csv")
    cfg = write_cfg(tmp_path, text)
    with pytest.warns(RuntimeWarning):
        assert main(["evolve", str(cfg), "flow.steps=1"]) == 0
    # out-of-range per-column values are rejected naming the beta key
    (tmp_path / "beta.csv").write_text("\n".join(["0.9"] * 48) + "\n")
    assert main(["evolve", str(cfg)]) == 2


def test_units_in_cells(tmp_path):
    text = BASE_CFG.replace("init.center = 0.5,0.0", "init.center = 24,0").replace(
        "init.radius = 0.28", "init.radius = 13.44"
    )
    cfg = write_cfg(tmp_path, "units = cells\n" + text)
    with pytest.warns(RuntimeWarning):
        assert main(["evolve", str(cfg), "flow.steps=1"]) == 0
    m = serialize.load_mask_pgm(tmp_path / "out" / "frame_00000.pgm")
    g = df.make_grid(2, (48, 48), 0.020833333333333332)
    want = df.cap_mask(g, (0.5, 0.0), 13.44 * g.h)
    assert m == want
