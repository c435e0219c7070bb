import hashlib
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpcontrol.cli import main
from gpcontrol.config import ConfigError, RunConfig
from gpcontrol.spectral import build_basis, random_state, write_state_csv

SMALL = {"dim": 1, "n_modes": 16, "sigma": 1, "T": 0.1, "dt": 0.01, "control": {"kind": "sinusoid",
         "amplitude": 0.5, "frequency": 1.0, "phase": 0.0}, "initial_state": "ground"}


def write_cfg(path, **over):
    path.write_text(json.dumps({**SMALL, **over}))
    return str(path)


controls = st.one_of(
    st.just({"kind": "zero"}),
    st.builds(lambda a, f, p: {"kind": "sinusoid", "amplitude": a, "frequency": f, "phase": p},
              st.floats(-5, 5), st.floats(0, 10), st.floats(-3, 3)),
    st.lists(st.floats(-5, 5), min_size=1, max_size=4).map(
        lambda v: {"kind": "piecewise_constant", "breakpoints": list(np.linspace(0, 1, len(v) + 1)), "values": v}),
)


@given(st.sampled_from([1, 2, 3]), st.integers(1, 16).map(lambda k: 2 * k), st.sampled_from([0, 1]),
       st.floats(0.01, 1), controls, st.integers(0, 2 ** 64 - 1), st.sampled_from(["strang", "picard"]))
def test_config_round_trip(dim, n, sigma, T, control, seed, integ):
    cfg = RunConfig(dim=dim, n_modes=n, sigma=sigma, T=1.0, dt=min(T, 0.1), control=control, seed=seed,
                    integrator=integ)
    assert RunConfig.from_dict(json.loads(cfg.dumps())) == cfg


@pytest.mark.parametrize("bad,field", [
    ({"dt": 0}, "dt"), ({"dt": -1e-3}, "dt"), ({"dim": 4}, "dim"), ({"n_modes": 7}, "n_modes"),
    ({"sigma": 2}, "sigma"), ({"integrator": "rk4"}, "integrator"), ({"seed": -1}, "seed"),
    ({"control": {"kind": "square"}}, "control"), ({"initial_state": "excited"}, "initial_state"),
    ({"initial_state": {"coeffs": [[99, 1, 0]]}}, "initial_state"), ({"colour": 1}, "colour"),
    ({"T": 2.0, "control": {"kind": "piecewise_constant", "breakpoints": [0, 1], "values": [1]}}, "control"),
])
def test_config_rejections(bad, field):
    with pytest.raises(ConfigError, match=field):
        RunConfig.from_dict({**SMALL, **bad})


def test_initial_state_forms(tmp_path):
    b = build_basis(1, 16)
    s = random_state(b, np.random.default_rng(0))
    write_state_csv(s, tmp_path / "s.csv")
    cfg = RunConfig.from_dict({**SMALL, "initial_state": {"file": str(tmp_path / "s.csv")}})
    assert np.array_equal(cfg.initial().coeffs, s.coeffs)
    cfg = RunConfig.from_dict({**SMALL, "initial_state": {"coeffs": [[0, 0.6, 0], [1, 0, 0.8]]}})
    assert np.allclose(cfg.initial().coeffs[:2], [0.6, 0.8j])
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**SMALL, "initial_state": {"file": str(tmp_path / "missing.csv")}}).initial()


def sha(p):
    return hashlib.sha256(p.read_bytes()).hexdigest()


def test_simulate_outputs_and_manifest(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", sigma=0, control={"kind": "zero"})
    assert main(["simulate", "--config", cfg, "--output-dir", str(tmp_path / "o")]) == 0
    out = tmp_path / "o"
    man = json.loads((out / "manifest.json").read_text())
    files = {str(p.relative_to(out)) for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"}
    assert set(man["files"]) == files
    assert all(man["files"][f] == sha(out / f) for f in files)
    assert man["config"]["output_dir"] == str(out) and man["wall_time_s"] >= 0
    rec = np.loadtxt(out / "record.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(rec[:, 1] - 1)) < 1e-13
    assert len(list((out / "snapshots").iterdir())) == 11


def test_determinism_double_run(tmp_path):
    cfg = write_cfg(tmp_path / "c.json")
    for name in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--output-dir", str(tmp_path / name)]) == 0
        assert main(["reach", "--config", cfg, "--output-dir", str(tmp_path / name), "--n-samples", "6",
                     "--threads", "2"]) == 0
    for p in (tmp_path / "a").rglob("*.csv"):
        assert p.read_bytes() == (tmp_path / "b" / p.relative_to(tmp_path / "a")).read_bytes()


def test_seed_flag_overrides(tmp_path):
    cfg = write_cfg(tmp_path / "c.json")
    for name, seed in (("a", "1"), ("b", "2")):
        assert main(["reach", "--config", cfg, "--output-dir", str(tmp_path / name), "--n-samples", "3",
                     "--seed", seed]) == 0
    assert (tmp_path / "a/reach.csv").read_bytes() != (tmp_path / "b/reach.csv").read_bytes()
    assert json.loads((tmp_path / "b/manifest.json").read_text())["config"]["seed"] == 2


def test_reach_zero_control_and_monotone_eps(tmp_path):
    cfg = write_cfg(tmp_path / "c.json")
    assert main(["reach", "--config", cfg, "--output-dir", str(tmp_path), "--n-samples", "1", "--radius", "0"]) == 0
    rows = (tmp_path / "reach.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].split(",")[3] == "0"
    assert main(["reach", "--config", cfg, "--output-dir", str(tmp_path), "--n-samples", "12",
                 "--eps-list", "0.8,0.4,0.2,0.1,0.05"]) == 0
    sizes = [int(line.split(",")[1]) for line in (tmp_path / "covering.csv").read_text().splitlines()[1:]]
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))
    assert main(["reach", "--config", cfg, "--n-samples", "0"]) == 1


def test_weak_limit_cli(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.json")
    assert main(["weak-limit", "--config", cfg, "--output-dir", str(tmp_path), "--n-list", "4,8,4"]) == 0
    lines = (tmp_path / "weak_limit.csv").read_text().splitlines()
    assert lines[0] == "n,eps_n,zn_linf_h1,ratio" and [r.split(",")[0] for r in lines[1:]] == ["4", "8"]
    assert "duplicate" in capsys.readouterr().err
    assert main(["weak-limit", "--config", cfg, "--output-dir", str(tmp_path), "--n-list", ""]) == 0
    assert (tmp_path / "weak_limit.csv").read_text().splitlines() == ["n,eps_n,zn_linf_h1,ratio"]


def test_exit_codes(tmp_path, capsys):
    assert main(["simulate", "--config", write_cfg(tmp_path / "c.json", dt=0)]) == 1
    assert "dt" in capsys.readouterr().err
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["simulate", "--config", str(tmp_path / "bad.json")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--threads", "-1"])
    assert exc.value.code == 1
    # a nonconvergent Picard run is a numerical failure
    cfg = write_cfg(tmp_path / "p.json", integrator="picard", dt=0.1, T=0.5, picard_max_iter=2,
                    initial_state={"coeffs": [[0, 20.0, 0]]}, control={"kind": "zero"})
    assert main(["simulate", "--config", cfg, "--output-dir", str(tmp_path / "p")]) == 2


def test_verify_and_transform_check(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.json", T=1.0, dt=1e-2)
    assert main(["transform-check", "--config", cfg]) == 0
    assert main(["verify", "--suite", "hardy", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "PASS ground state quotient" in out and "0.8164965809" in out
    assert main(["verify", "--suite", "energy_bound", "--config", cfg]) == 0
    assert main(["verify", "--suite", "energy_bound", "--config", cfg, "--inject-fault", "sign"]) == 3
    assert "FAIL energy identity" in capsys.readouterr().out
