import json

import pytest

from hopf_recenter.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, build_parser, main, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, "--json", "-", *argv)
    data = json.loads(out)
    assert data["schema"] == "hopf-recenter/1"
    return code, data


class TestTreeCommands:
    def test_parse_canonical(self, capsys):
        code, out, _ = run(capsys, "parse", "I[(0,1)](Xi) * I(Xi)")
        assert code == EXIT_OK
        assert out.splitlines() == ["# seed=0", "I(Xi) * I[(0,1)](Xi)"]

    def test_parse_error_is_input_error(self, capsys):
        code, _, err = run(capsys, "parse", "I(Xi")
        assert code == EXIT_INPUT and "position" in err

    def test_deg_shows_kappa_form(self, capsys):
        code, out, _ = run(capsys, "deg", "I(dXi)", "--variant", "1")
        assert code == EXIT_OK
        assert "deg_1(I(dXi)) = 2-1/100 = 199/100" in out

    def test_deg_json_other_preset(self, capsys):
        code, data = run_json(capsys, "--preset", "phi4-4mk", "deg", "I(dXi)")
        assert [r["degree"] for r in data["degrees"]] == ["-99/100", "201/100", "203/100"]

    def test_sym(self, capsys):
        code, data = run_json(capsys, "sym", "I(Xi) * I(Xi) * I(Xi)")
        assert data["symmetry"] == 6

    def test_dxi_rejects_dot(self, capsys):
        code, _, _ = run(capsys, "dxi", "dXi")
        assert code == EXIT_INPUT

    def test_deltahat_variant_two(self, capsys):
        code, data = run_json(capsys, "deltahat", "I(dXi)", "--variant", "2")
        terms = {(t["left"], t["right"]): t["coeff"] for t in data["terms"]}
        assert len(terms) == 4
        assert terms[("X^(0,2)", "I+[(0,2)](dXi)")] == "-1/2"

    def test_deltahat_needs_variant(self, capsys):
        code, _, _ = run(capsys, "deltahat", "I(dXi)", "--variant", "0")
        assert code == EXIT_INPUT

    def test_coproduct_and_antipode(self, capsys):
        code, data = run_json(capsys, "antipode", "X^(0,1)")
        assert data["terms"] == [{"coeff": "-1", "tree": "X^(0,1)"}]
        code, data = run_json(capsys, "coproduct", "I+[(0,0)](Xi)")
        assert code == EXIT_OK and len(data["terms"]) == 2

    def test_rules_with_assumption(self, capsys):
        code, data = run_json(capsys, "--preset", "phi4-3", "rules", "--assumption")
        assert data["count"] == 75 and data["N"] == 1 and data["assumption"]["holds"]

    def test_rules_sidecar_has_three_degrees(self, capsys):
        code, data = run_json(capsys, "--preset", "phi4-4mk", "rules")
        assert set(data["degrees"]) == set(data["trees"])
        # trees of the basis carry no dXi, so the three variants agree
        assert data["degrees"]["I(Xi)"] == ["-99/100"] * 3


class TestModelCommands:
    def test_model_value(self, capsys):
        code, data = run_json(capsys, "model", "model", "I(Xi)", "--base", "0.5,1",
                              "--at", "0.5,1")
        assert code == EXIT_OK and abs(data["value"]) < 1e-12

    def test_model_needs_base(self, capsys):
        with pytest.raises(SystemExit):
            main(["model", "model", "I(Xi)"])

    def test_dgamma(self, capsys):
        code, data = run_json(capsys, "dgamma", "I(Xi)", "--y", "1,2", "--x", "0.5,0.5")
        assert sorted(t["tree"] for t in data["terms"]) == ["1", "X^(0,1)"]

    def test_bad_point(self, capsys):
        code, _, err = run(capsys, "dgamma", "I(Xi)", "--y", "1", "--x", "0,0")
        assert code == EXIT_INPUT and "coordinates" in err


class TestConfig:
    def test_read_config(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\npreset = phi4-3\nmax-noises=2\n")
        assert read_config(str(path)) == {"preset": "phi4-3", "max_noises": "2"}

    def test_bad_config_line(self, tmp_path, capsys):
        path = tmp_path / "c.cfg"
        path.write_text("preset phi4-3\n")
        code, _, err = run(capsys, "--config", str(path), "parse", "Xi")
        assert code == EXIT_INPUT

    def test_flags_override_config(self, tmp_path, capsys):
        path = tmp_path / "c.cfg"
        path.write_text("preset = phi4-3\nvariant = 2\npairs = 2\n")
        parser = build_parser({"preset": "phi4-3", "variant": 2, "pairs": 2})
        assert parser.parse_args(["verify"]).pairs == 2
        assert parser.parse_args(["--preset", "gkpz", "deg", "Xi"]).preset == "gkpz"
        assert parser.parse_args(["deg", "Xi", "--variant", "0"]).variant == 0
        code, data = run_json(capsys, "--config", str(path), "deg", "I(dXi)")
        assert [r["variant"] for r in data["degrees"]] == [2]

    def test_json_to_file(self, tmp_path, capsys):
        target = tmp_path / "out.json"
        code, out, _ = run(capsys, "--json", str(target), "sym", "Xi")
        assert code == EXIT_OK and out.startswith("# seed=0")
        assert json.loads(target.read_text())["symmetry"] == 1


class TestVerify:
    def test_small_algebra_suite(self, capsys):
        code, data = run_json(capsys, "--max-noises", "1", "verify", "--suite", "algebra")
        assert code == EXIT_OK and data["passed"]

    def test_failing_suite_exit_code(self, capsys):
        # the edge-derivative trees of gkpz break the characterization on purpose
        code, data = run_json(capsys, "--max-noises", "1", "verify", "--suite", "recentering",
                              "--pairs", "1")
        assert code == EXIT_FAIL and not data["passed"]

    def test_example_report(self, capsys):
        code, data = run_json(capsys, "verify", "--suite", "example")
        assert code == EXIT_OK
        assert set(data["example"]) >= {"dgamma1", "dgamma2"}
