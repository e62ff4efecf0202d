import io
import json

import numpy as np
import pytest

from linkenergy.cli import main
from linkenergy.curves import link_to_dict, projected_hopf_link


def run(args):
    out = io.StringIO()
    code = main(args, out)
    return code, out.getvalue()


def test_energy_of_hopf():
    code, text = run(["energy", "--link", "hopf"])
    rec = json.loads(text)
    assert code == 0
    assert rec["operation"] == "energy" and rec["N"] == 128
    assert abs(rec["value"] - 2 * np.pi ** 2) < 1e-9
    assert rec["residuals"]["distance_to_2pi2"] < 1e-8


def test_linking_of_torus_link():
    code, text = run(["linking", "--link", "torus-2-4", "--quad-n", "64"])
    assert code == 0 and json.loads(text)["lk"] == -2


@pytest.mark.parametrize("text", ["{oops", '{"gamma1": 3}'])
def test_malformed_input_exit_2(tmp_path, text, capsys):
    path = tmp_path / "link.json"
    path.write_text(text)
    code, _ = run(["energy", "--input", str(path)])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_unknown_config_key_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"link": "hopf", "quadrature": 64}))
    assert run(["--config", str(cfg), "energy"])[0] == 2


def test_config_supplies_defaults(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"link": "hopf", "quad-n": 64}))
    code, text = run(["--config", str(cfg), "energy"])
    assert code == 0 and json.loads(text)["N"] == 64


def test_randomized_scans_need_seed():
    assert run(["family-scan", "--link", "hopf", "--samples", "3"])[0] == 2
    assert run(["sweepout-scan", "--link", "hopf", "--samples", "3"])[0] == 2
    assert run(["energy", "--link", "perturbed-hopf"])[0] == 2


def test_intersecting_link_exit_3(tmp_path):
    link = projected_hopf_link(8)
    rec = link_to_dict(link)
    rec["gamma2"] = rec["gamma1"]
    path = tmp_path / "same.json"
    path.write_text(json.dumps(rec))
    assert run(["energy", "--input", str(path)])[0] == 3


def test_unresolved_linking_exit_4(tmp_path):
    from linkenergy.curves import Link, circle
    e = np.eye(3)
    link = Link(circle(np.zeros(3), e[0], e[1]), circle(np.array([1.98, 0, 0]), e[0], e[2]))
    path = tmp_path / "close.json"
    path.write_text(json.dumps(link_to_dict(link)))
    assert run(["linking", "--input", str(path), "--quad-n", "32"])[0] == 4


def test_singular_transform_exit_5(tmp_path):
    path = tmp_path / "map.json"
    path.write_text(json.dumps({"kind": "inversion", "v": [1, 0, 0, 0]}))
    assert run(["transform", "--link", "hopf", "--map", str(path)])[0] == 5


def test_stalled_descent_exit_7(tmp_path, monkeypatch):
    import linkenergy.cli as cli
    from linkenergy.optimizer import minimize

    # a separation floor no step can satisfy makes every line search collapse
    monkeypatch.setattr(cli, "minimize", lambda *a, **k: minimize(*a, alpha_floor=100.0, **k))
    code, _ = run(["minimize", "--link", "hopf-r3", "--max-iter", "5", "--tol", "0", "--quad-n", "32",
                   "--modes", "4", "--out", str(tmp_path / "t.csv")])
    assert code == 7


def test_transform_writes_image(tmp_path):
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps({"kind": "inversion", "v": [0.1, 0.2, 0.0, 0.3]}))
    out = tmp_path / "img.json"
    code, text = run(["transform", "--link", "hopf", "--map", str(mp), "--out", str(out)])
    assert code == 0 and out.exists()
    assert json.loads(text)["residuals"]["relative_energy_change"] < 1e-9


def test_family_scan_csv_is_reproducible(tmp_path):
    paths = [tmp_path / f"scan{i}.csv" for i in range(2)]
    for p in paths:
        code, _ = run(["family-scan", "--link", "hopf", "--samples", "6", "--seed", "3",
                       "--quad-n", "32", "--out", str(p)])
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    header = paths[0].read_text().splitlines()[0]
    assert header == "v1,v2,v3,v4,z,areaIntegral,upperIntegrand,maxJac,minContainmentMargin"


def test_sweepout_scan_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    code, text = run(["sweepout-scan", "--link", "hopf", "--samples", "8", "--seed", "2",
                      "--quad-n", "32", "--out", str(path)])
    assert code == 0
    rec = json.loads(text)
    assert rec["residuals"]["sup_minus_energy"] <= 1e-6
    assert len(path.read_text().splitlines()) == 9


def test_minimize_trace_columns(tmp_path):
    path = tmp_path / "trace.csv"
    code, _ = run(["minimize", "--link", "perturbed-hopf", "--seed", "1", "--max-iter", "5",
                   "--out", str(path)])
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,energy,alpha,step,gradnorm,lk"
    assert len(lines) == 7


def test_verify_hopf_passes():
    code, text = run(["verify", "--link", "hopf", "--quad-n", "128"])
    assert code == 0, text
    assert "FAIL" not in text and "reference-energy" in text


def test_verify_override_still_reports_measurement():
    code, text = run(["verify", "--link", "hopf", "--quad-n", "64",
                      "--tolerance", "reference-energy=-1"])
    assert code == 1
    row = next(line for line in text.splitlines() if line.startswith("reference-energy"))
    assert "FAIL" in row and len(row.split()) == 4


def test_verify_rejects_unknown_check():
    assert run(["verify", "--link", "hopf", "--tolerance", "no-such-check=1"])[0] == 2
