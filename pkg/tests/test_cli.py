from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import subprocess
import sys

import yaml

from augindex.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def _section(text, name):
    lines = text.splitlines()
    start = lines.index(f"[{name}]")
    body = []
    for line in lines[start + 1:]:
        if line.startswith("["):
            break
        body.append(line)
    return body


def test_examples_lists_bundled_names():
    code, out, _ = run("examples")
    assert code == 0
    names = [line.split("\t")[0] for line in out.splitlines()]
    assert {"sg2", "hata", "aniso-binary", "offset-squares", "ladder-fans", "branching-chains"} <= set(names)


def test_check_reports_config_and_verdicts():
    code, out, _ = run("check", "--system", "sg2", "--depth", "5")
    assert code == 0
    head = out.splitlines()
    assert head[0].startswith("config_hash: ")
    cfg = json.loads(head[1][len("config: "):])
    assert cfg["depth"] == 5 and cfg["a"] == 0.4 and cfg["graph"] == "ai-infty"
    assert '  verdict: "holds-to-depth"' in _section(out, "departing m=1 k=1")


def test_check_finds_anisotropic_witnesses():
    code, out, _ = run("check", "--system", "aniso-binary", "--depth", "10", "--m-max", "3", "--k-max", "6")
    assert code == 0
    wit = [json.loads(line.split(": ", 1)[1]) for line in _section(out, "departing m=3 k=6")
           if line.startswith("  witnesses: ")]
    assert any(w["d_h(x,y)"] == 7 and w["x"] == "111111" and w["y"] == "212112" for w in wit)
    wit22 = [json.loads(line.split(": ", 1)[1]) for line in _section(out, "departing m=2 k=2")
             if line.startswith("  witnesses: ")]
    assert wit22[0] == {"x": "111", "y": "212", "u": "11111", "v": "21211", "d_h(x,y)": 3, "d_h(u,v)": 3}


def test_build_is_deterministic_and_cached(tmp_path):
    code, first, _ = run("build", "--system", "sg2", "--depth", "4")
    assert code == 0
    assert run("build", "--system", "sg2", "--depth", "4")[1] == first
    code, out, err = run("build", "--system", "sg2", "--depth", "4", "--out", str(tmp_path))
    path = out.strip()
    assert code == 0 and err == "cache: miss\n"
    with open(path, encoding="utf-8") as fh:
        assert fh.read() == first
    with open(path + ".sha256", encoding="utf-8") as fh:
        assert fh.read().strip() == hashlib.sha256(first.encode()).hexdigest()
    code, out2, err2 = run("build", "--system", "sg2", "--depth", "4", "--out", str(tmp_path))
    assert code == 0 and err2 == "cache: hit\n" and out2.strip() == path


def test_tampered_cache_is_rebuilt(tmp_path):
    _, out, _ = run("build", "--system", "hata", "--depth", "3", "--out", str(tmp_path))
    path = out.strip()
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("junk\n")
    _, _, err = run("build", "--system", "hata", "--depth", "3", "--out", str(tmp_path))
    assert err == "cache: miss\n"


def test_csv_report_carries_hash(tmp_path):
    code, out, _ = run("check", "--system", "branching-chains", "--depth", "5", "--format", "csv", "--out", str(tmp_path))
    assert code == 0
    path = out.strip()
    key = os.path.basename(path)[len("check-"):-len(".csv")]
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["config_hash", "section", "item", "key", "value"]
    assert {r[0] for r in rows[1:]} == {key}


def test_export_formats():
    code, dot, _ = run("export", "--system", "ladder-fans", "--depth", "3", "--format", "dot")
    assert code == 0 and dot.startswith("graph G {")
    code, edges, _ = run("export", "--system", "sg2", "--depth", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(edges)))
    assert sum(1 for r in rows if r[1] == "vertical") == 3 + 9
    assert sum(1 for r in rows if r[1] == "horizontal") == 3 + 12


def test_yaml_system_and_explicit_graph(tmp_path):
    sysfile = tmp_path / "cantor.yaml"
    sysfile.write_text(yaml.safe_dump({"arithmetic": "rational",
                                       "maps": [{"ratio": "1/3", "translation": ["0"]},
                                                {"ratio": "1/3", "translation": ["2/3"]}],
                                       "region": [["0"], ["1"]]}))
    code, out, _ = run("build", "--system", str(sysfile), "--depth", "3")
    assert code == 0 and "H\t" not in out
    graphfile = tmp_path / "path.yaml"
    graphfile.write_text(yaml.safe_dump({"graph": {"levels": [["o"], ["a", "b"]],
                                                   "parents": {"a": ["o"], "b": ["o"]},
                                                   "horizontal": [["a", "b"]]}}))
    code, out, _ = run("build", "--system", str(graphfile), "--depth", "1")
    assert code == 0 and out.count("H\t") == 1


def test_resistance_report():
    code, out, _ = run("resistance", "--system", "sg2", "--depth", "2", "--sample", "10")
    assert code == 0
    rows = [json.loads(line.split(": ", 1)[1]) for line in _section(out, "corner resistance")]
    assert [r["R"] for r in rows] == ["2/3", "2/3", "2/3"]
    gaps = [json.loads(line.split(": ", 1)[1])["gap"] for line in _section(out, "regularity")]
    assert set(gaps) == {"0"}


def test_error_blocks():
    code, _, err = run("check", "--system", "no-such-thing")
    assert code == 2
    block = json.loads(err)["error"]
    assert block["code"] == "invalid-parameter" and "no-such-thing" in block["message"]
    code, _, err = run("resistance", "--system", "hata", "--depth", "1")
    assert code == 2 and json.loads(err)["error"]["code"] == "invalid-parameter"
    code, _, err = run("check", "--system", "sg2", "--a", "-1")
    assert code == 2
    code, _, err = run("boundary")
    assert code == 2 and "--system" in json.loads(err)["error"]["message"]


def test_bad_yaml_file(tmp_path):
    f = tmp_path / "bad.yaml"
    f.write_text("just: [a list\n")
    code, _, err = run("build", "--system", str(f))
    assert code == 2
    assert json.loads(err)["error"]["code"] == "invalid-input"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "augindex", "examples"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("sg2\t")
