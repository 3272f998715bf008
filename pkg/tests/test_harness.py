import json

import numpy as np
import pytest

from fraclab.errors import UsageError
from fraclab.harness import acceptance
from fraclab.harness.cli import main
from fraclab.harness.config import CriterionResult, RunConfig, RunManifest
from fraclab.harness.emit import Table, emit, read_csv, render
from fraclab.harness.registry import make_potential, make_prox
from fraclab.harness.studies import run_convergence_study


class TestConfig:
    def test_roundtrip(self):
        cfg = RunConfig(experiment="fode-linear", alpha=0.5, lam=-1.0, x0=[1.0], T=2.0,
                        steps=[0.25, 0.125, 0.0625], seed=3)
        again = RunConfig.from_json(cfg.to_json())
        assert again == cfg
        assert again.to_json() == cfg.to_json()

    def test_unknown_key(self):
        with pytest.raises(UsageError, match="unknown config keys: bogus"):
            RunConfig.from_dict({"experiment": "x", "bogus": 1})

    def test_validation(self):
        with pytest.raises(UsageError):
            RunConfig(experiment="")
        with pytest.raises(UsageError):
            RunConfig(experiment="x", seed=-1)
        with pytest.raises(UsageError):
            RunConfig(experiment="x", schema_version=99)
        with pytest.raises(UsageError):
            RunConfig.from_json("{not json")
        with pytest.raises(UsageError):
            RunConfig(experiment="x").grid()
        assert RunConfig(experiment="x", x0=2).x0 == [2.0]
        assert RunConfig(experiment="x", T=10.0, k=5 / 2**7).grid().N == 256

    def test_manifest(self):
        m = RunManifest(config={}, version="0")
        m.add(CriterionResult("1", "first", True, {"err": np.float64(1e-3)}))
        with pytest.raises(UsageError):
            m.add(CriterionResult("1", "again", True))
        m.add(CriterionResult("2", "second", False))
        assert not m.passed
        data = json.loads(m.to_json())
        assert data["criteria"][0]["measured"]["err"] == 1e-3

    def test_line(self):
        assert CriterionResult("3", "order", True, {"order": 0.98}).line() == \
            "[PASS] criterion 3: order (order=0.98)"
        assert CriterionResult("8", "bound", False).line() == "[FAIL] criterion 8: bound"


class TestEmit:
    def test_csv(self):
        t = Table(["k", "err", "ok"], [[1, 1 / 3, True], [2, float("inf"), False]])
        text = render(t)
        assert text == "k,err,ok\n1,0.333333333333,1\n2,inf,0\n"
        assert "\r" not in text

    def test_empty_table(self):
        assert render(Table(["a", "b"])) == "a,b\n"

    def test_json(self):
        t = Table.from_columns(x=np.array([0.1, 2.0]), n=np.arange(2))
        data = json.loads(render(t, "json"))
        assert data["columns"] == ["x", "n"] and data["rows"][0] == [0.1, 0]

    def test_bad_inputs(self):
        with pytest.raises(UsageError):
            Table(["a"], [[1, 2]])
        with pytest.raises(UsageError):
            Table.from_columns(a=[1, 2], b=[1])
        with pytest.raises(UsageError):
            render(Table(["a"]), "xml")

    def test_file_roundtrip(self, tmp_path):
        t = Table.from_columns(k=[0.5, 0.25], e=[1e-3, 2.5e-4])
        p = emit(t, tmp_path / "sub" / "t.csv")
        back = read_csv(p)
        assert back.columns == ["k", "e"] and back.rows == [[0.5, 1e-3], [0.25, 2.5e-4]]
        assert p.read_bytes().count(b"\n") == 3


class TestRegistry:
    def test_lookup(self):
        assert make_potential("quartic").name == "quartic"
        assert make_potential("expr", "x**2/2").grad(np.array([[2.0]]))[0, 0] == pytest.approx(2.0)
        assert make_prox("l1").name == "l1"
        with pytest.raises(UsageError):
            make_potential("nope")
        with pytest.raises(UsageError):
            make_prox("nope")


class TestStudies:
    def test_fode(self):
        cfg = RunConfig(experiment="fode-linear", alpha=0.5, lam=-1.0,
                        steps=[2.0**-m for m in range(4, 9)])
        manifest, table = run_convergence_study(cfg)
        assert manifest.passed and len(table.rows) == 5
        assert manifest.criteria[0].measured["threshold"] == pytest.approx(0.4)

    def test_gradflow(self):
        cfg = RunConfig(experiment="gradflow-two-step", alpha=0.6, phi="quadratic",
                        steps=[2.0**-m for m in range(4, 8)])
        manifest, _ = run_convergence_study(cfg)
        assert manifest.passed

    def test_fsde(self):
        cfg = RunConfig(experiment="fsde-self", alpha=0.8, hurst=0.6, steps=[2.0**-m for m in range(3, 6)],
                        samples=100, seed=1)
        manifest, table = run_convergence_study(cfg)
        assert manifest.passed
        assert manifest.seeds == [{"master": 1, "streams": [0, 99]}]

    def test_rejections(self):
        with pytest.raises(UsageError):
            run_convergence_study(RunConfig(experiment="nope", alpha=0.5, steps=[0.5, 0.25, 0.125]))
        with pytest.raises(UsageError):
            run_convergence_study(RunConfig(experiment="fode-linear", alpha=0.5, steps=[0.5, 0.25]))
        with pytest.raises(UsageError):
            run_convergence_study(RunConfig(experiment="fode-linear", alpha=0.5, steps=[0.5, 0.3, 0.1]))


class TestCli:
    def test_coeffs(self, tmp_path, capsys):
        out = tmp_path / "c.csv"
        assert main(["coeffs", "--alpha", "0.5", "--n-max", "4", "--out", str(out)]) == 0
        t = read_csv(out)
        assert t.columns == ["n", "a", "a_inv", "c", "c_tail"] and len(t.rows) == 5
        assert t.rows[0][3] == pytest.approx(0.886226925453)

    def test_mlf_stdout(self, capsys):
        assert main(["mlf", "--alpha", "0.5", "--z=-1,0"]) == 0
        lines = capsys.readouterr().out.split()
        assert float(lines[0]) == pytest.approx(0.4275836, abs=1e-7) and float(lines[1]) == 1.0

    def test_fode_and_fbm(self, tmp_path):
        assert main(["fode", "--alpha", "0.5", "--lambda", "-1", "--n", "16",
                     "--out", str(tmp_path / "f.csv")]) == 0
        assert main(["fode", "--alpha", "0.5", "--lambda", "0", "--rhs", "cubic", "--n", "8",
                     "--out", str(tmp_path / "g.csv")]) == 0
        assert main(["fbm", "--hurst", "0.6", "--n", "8", "--seed", "2",
                     "--out", str(tmp_path / "b.csv")]) == 0
        assert read_csv(tmp_path / "b.csv").rows[0][2] == 0.0

    def test_fsde(self, tmp_path):
        prefix = str(tmp_path / "run")
        args = ["fsde", "--alpha", "0.8", "--hurst", "0.6", "--k", "0.125", "--T", "1",
                "--samples", "20", "--seed", "4", "--hist-times", "0.5,1", "--out-prefix", prefix]
        assert main(args) == 0
        first = (tmp_path / "run_meansq.csv").read_bytes()
        assert (tmp_path / "run_hist_0.5.csv").exists()
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert manifest["config"]["seed"] == 4 and manifest["config"]["noise"]["mode"] == "physical"
        assert main(args) == 0
        assert (tmp_path / "run_meansq.csv").read_bytes() == first

    def test_fsde_mode_mismatch(self, tmp_path):
        assert main(["fsde", "--alpha", "0.5", "--hurst", "0.6", "--k", "0.5", "--T", "1",
                     "--samples", "4", "--out-prefix", str(tmp_path / "x")]) == 2

    def test_gradflow(self, tmp_path):
        out = tmp_path / "g.csv"
        assert main(["gradflow", "--alpha", "0.5", "--phi", "quadratic", "--u0", "1",
                     "--n", "16", "--out", str(out)]) == 0
        t = read_csv(out)
        assert t.columns == ["n", "t", "U", "phi", "xi_norm", "decay_bound"]
        assert main(["gradflow", "--alpha", "0.5", "--phi", "l1", "--u0", "1,-2",
                     "--n", "4", "--out", str(out)]) == 0
        assert read_csv(out).columns == ["n", "t", "U0", "U1", "phi", "xi_norm"]

    def test_study(self, tmp_path):
        cfg = RunConfig(experiment="fode-linear", alpha=0.5, lam=-1.0,
                        steps=[2.0**-m for m in range(4, 8)])
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json())
        code = main(["study", "--config", str(path), "--out", str(tmp_path / "s.csv"),
                     "--manifest", str(tmp_path / "m.json")])
        assert code == 0
        assert json.loads((tmp_path / "m.json").read_text())["config"]["alpha"] == 0.5

    def test_exit_codes(self, tmp_path, capsys):
        assert main(["coeffs", "--alpha", "1.5", "--n-max", "3"]) == 2
        assert main(["mlf", "--alpha", "0.1", "--z=-50", "--method", "series"]) == 3
        assert main(["study"]) == 2
        bad = tmp_path / "bad.json"
        bad.write_text('{"experiment": "fode-linear", "typo": 1}')
        assert main(["study", "--config", str(bad)]) == 2
        assert main(["study", "--config", str(tmp_path / "missing.json")]) == 2
        with pytest.raises(SystemExit) as exc:
            main(["accept", "nonsense"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["coeffs"])
        assert exc.value.code == 2

    def test_study_gate_failure_exit(self, tmp_path, monkeypatch):
        import fraclab.harness.studies as studies
        monkeypatch.setattr(studies, "observed_order", lambda rows: -1.0)
        assert main(["study", "--experiment", "fode-linear", "--alpha", "0.5",
                     "--steps", "0.0625,0.03125,0.015625", "--out", str(tmp_path / "s.csv")]) == 1


def test_unknown_battery():
    with pytest.raises(UsageError):
        acceptance.run_acceptance("nope")


def test_compare_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    (a / "x.csv").write_text("k\n1\n")
    (b / "x.csv").write_text("k\n1\n")
    assert acceptance.compare_outputs(a, b) == []
    (b / "x.csv").write_text("k\n2\n")
    assert acceptance.compare_outputs(a, b) == ["x.csv"]
