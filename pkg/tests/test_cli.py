import json
import subprocess
import sys

import numpy as np
import pytest

from nsft.bundled import bundled_path
from nsft.cli import main


def run(*args, capsys=None):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_validate_ok(capsys):
    code, out, _ = run("validate", str(bundled_path("golden-mean")), capsys=capsys)
    assert code == 0
    assert "# ok=true" in out


def test_validate_zero_column(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"name": "bad", "matrices": {"Z": [[1, 0], [1, 0]]}, "pattern": {"kind": "eventually-periodic", "prefix": [], "cycle": ["Z"]}}))
    code, out, err = run("validate", str(p), capsys=capsys)
    assert code == 1
    assert "reduced" in out and "column 2" in err


def test_missing_file_and_bad_json(tmp_path, capsys):
    assert run("validate", str(tmp_path / "nope.json"), capsys=capsys)[0] == 2
    p = tmp_path / "x.json"
    p.write_text("[1,")
    assert run("topent", str(p), capsys=capsys)[0] == 2


def test_usage_errors(capsys):
    assert run("topent", "golden-mean", "--horizon", "0", capsys=capsys)[0] == 2
    assert run("metent", "golden-mean", "--eps", "2", capsys=capsys)[0] == 2
    assert run("product", "golden-mean", capsys=capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_topent_csv(capsys):
    code, out, _ = run("topent", "full3", "--horizon", "10", capsys=capsys)
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == "horizon,value"
    assert len(rows) == 11
    n, v = rows[-1].split(",")
    assert n == "10" and float(v) == pytest.approx(1.1 * 1.0986122886681098)
    assert "# tail_estimate=" in out and "# window=0.5" in out
    assert "\r" not in out


def test_topent_bits(capsys):
    _, out, _ = run("topent", "full3", "--horizon", "4", "--unit", "bits", "--format", "json", capsys=capsys)
    doc = json.loads(out)
    assert doc["meta"]["unit"] == "bits"
    assert doc["rows"][0][1] == pytest.approx(2 * 1.584962500721156)


def test_parry_csv_pads_mixed_alphabets(capsys):
    code, out, _ = run("parry", "mixed23", "--horizon", "3", "--seed", "5", capsys=capsys)
    assert code == 0
    rows = data_rows(out)
    assert rows[0].split(",")[:3] == ["i", "lambda", "w_1"]
    assert rows[1].count(",") == rows[2].count(",")
    assert "# sample_path=" in out


def test_parry_rejects_reducible(tmp_path, capsys):
    p = tmp_path / "upper.json"
    p.write_text(json.dumps({"name": "upper", "matrices": {"U": [[1, 1], [0, 1]]}, "pattern": {"kind": "eventually-periodic", "prefix": [], "cycle": ["U"]}}))
    code, _, err = run("parry", str(p), "--horizon", "3", capsys=capsys)
    assert code == 1 and err


def test_metent_grid(capsys):
    code, out, _ = run("metent", "golden-mean", "--horizon", "200", "--eps-grid", "3:5", capsys=capsys)
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == "eps,tail_estimate,status"
    assert [r.split(",")[0] for r in rows[1:]] == ["0.125", "0.0625", "0.03125"]
    grid_max = float(next(l for l in out.splitlines() if l.startswith("# grid_max=")).split("=")[1])
    assert abs(grid_max - 0.4812) < 0.05


def test_metent_single_eps(capsys):
    code, out, _ = run("metent", "full3", "--horizon", "20", "--eps", "0.1", capsys=capsys)
    assert code == 0 and "# eps=0.10000000000000001" in out


def test_oracle_suite(capsys):
    code, out, _ = run("oracle", "--horizon", "6", capsys=capsys)
    assert code == 0
    assert "# mismatches=0" in out


def test_product_round_trip(tmp_path, capsys):
    out_path = tmp_path / "gg.json"
    assert run("product", "golden-mean", "golden-mean", "--out", str(out_path), capsys=capsys)[0] == 0
    doc = json.loads(out_path.read_text())
    assert len(doc["matrices"]["G*G"]) == 4
    assert run("validate", str(out_path), capsys=capsys)[0] == 0


def test_output_is_deterministic(tmp_path):
    outs = []
    for j in range(2):
        p = tmp_path / f"o{j}.csv"
        subprocess.run(
            [sys.executable, "-m", "nsft", "parry", "ab-linear", "--horizon", "15", "--seed", "3", "--out", str(p)],
            check=True,
        )
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_parry_dump_p(capsys):
    code, out, _ = run("parry", "golden-mean", "--horizon", "2", "--dump-p", capsys=capsys)
    assert code == 0
    lines = out.splitlines()
    k = lines.index("# block=P_1")
    rows = [[float(x) for x in line.split(",")] for line in lines[k + 1 : k + 3]]
    assert np.allclose(np.sum(rows, axis=1), 1.0)
    _, out, _ = run("parry", "golden-mean", "--horizon", "2", "--dump-p", "--format", "json", capsys=capsys)
    assert len(json.loads(out)["blocks"]) == 3
