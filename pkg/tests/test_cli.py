import csv
from pathlib import Path

import pytest
import yaml

from apstat.cli import EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_OK, SCHEMAS, main
from apstat.config import parse_config
from apstat.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
COMMAND_OF = {
    "ap_ou_certify": "certify-ap", "periodic_ou_certify": "certify-ap",
    "bound_exponent_indicator": "bound", "bound_kyfan_finite_var": "bound", "bound_kyfan_ir": "bound",
    "clt_brownian": "clt", "clt_modulated": "clt", "domain_check": "domain-check", "exponent": "exponent",
    "metric_gamma": "metric", "metric_prokhorov": "metric", "simulate_ou_const": "simulate-ou",
    "simulate_ou_jumps": "simulate-ou", "triplet_transform": "triplet-transform",
}


def write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_every_config_is_covered():
    assert {p.stem for p in CONFIGS.glob("*.yaml")} == set(COMMAND_OF)


@pytest.mark.slow
@pytest.mark.parametrize("stem", sorted(COMMAND_OF))
def test_shipped_configs_run_and_match_schemas(stem, tmp_path):
    out = tmp_path / stem
    assert main([COMMAND_OF[stem], str(CONFIGS / f"{stem}.yaml"), "--out-dir", str(out)]) == EXIT_OK
    manifest = yaml.safe_load((out / "run_manifest.yaml").read_text())
    assert manifest["command"] == COMMAND_OF[stem]
    assert "threads" not in manifest["config"]
    for name in manifest["artifacts"]:
        if name.endswith(".csv"):
            assert rows(out / name)[0] == SCHEMAS[name], name


def test_unknown_key_is_a_config_error(tmp_path):
    p = write(tmp_path, "kind: kyfan_finite_var\nsigma2: 1.0\nl2_dist2: 0.1\nbogus: 3\n")
    assert main(["bound", str(p), "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG


def test_bad_types_and_yaml_are_config_errors(tmp_path):
    assert main(["bound", str(write(tmp_path, "kind: kyfan_finite_var\nsigma2: one\n")),
                 "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["bound", str(write(tmp_path, "kind: [unclosed\n", "b.yaml"))]) == EXIT_CONFIG
    assert main(["bound", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_positive_mean_is_a_hypothesis_error(tmp_path):
    p = write(tmp_path, "mu: {c0: 0.5}\ntriplet: {a: 1.0}\nt1: 1.0\n")
    assert main(["simulate-ou", str(p), "--out-dir", str(tmp_path / "o")]) == EXIT_HYPOTHESIS


def test_clt_rejects_too_few_reps(tmp_path):
    p = write(tmp_path, "h: {family: indicator}\ntriplet: {a: 1.0}\nm: 1.0\nT_list: [5]\nn_reps: 100\n")
    assert main(["clt", str(p), "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG


def test_finite_variance_bound_row(tmp_path):
    out = tmp_path / "o"
    assert main(["bound", str(CONFIGS / "bound_kyfan_finite_var.yaml"), "--out-dir", str(out)]) == EXIT_OK
    r = rows(out / "bound.csv")
    assert float(r[1][r[0].index("rhs")]) == pytest.approx(0.1)


def test_simulate_ou_is_byte_identical(tmp_path):
    cfg = str(CONFIGS / "simulate_ou_const.yaml")
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["simulate-ou", cfg, "--out-dir", str(a)]) == EXIT_OK
    assert main(["simulate-ou", cfg, "--out-dir", str(b)]) == EXIT_OK
    assert main(["simulate-ou", cfg, "--out-dir", str(c), "--threads", "3"]) == EXIT_OK
    for name in ("path.csv", "summary.csv", "run_manifest.yaml"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()
    d = tmp_path / "d"
    main(["simulate-ou", cfg, "--out-dir", str(d), "--seed", "43"])
    assert (a / "path.csv").read_bytes() != (d / "path.csv").read_bytes()


def test_certify_periodic_lists_integer_shifts(tmp_path):
    out = tmp_path / "o"
    assert main(["certify-ap", str(CONFIGS / "periodic_ou_certify.yaml"), "--out-dir", str(out)]) == EXIT_OK
    report = yaml.safe_load((out / "report.yaml").read_text())
    level = report["levels"][0]
    assert level["epsilon"] == 1e-4
    assert [round(t, 9) for t in level["representatives"]] == [0.0, 1.0, 2.0, 3.0]
    assert report["status"] == "certified at resolution"


def test_parse_config_top_level_keys():
    cfg = parse_config({"kind": "kyfan_finite_var", "seed": 4, "threads": 2, "out_dir": "x"}, "bound")
    assert (cfg.seed, cfg.threads, cfg.out_dir) == (4, 2, "x")
    with pytest.raises(ConfigError):
        parse_config({"kind": "x", "seed": -1}, "bound")
    with pytest.raises(ConfigError):
        parse_config({"command": "clt", "kind": "x"}, "bound")
