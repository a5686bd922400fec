import json
import re

import pytest

from symflow.cli import main
from symflow import numcheck


def run(argv):
    return main(argv)


def test_zero_curvature_passes(capsys):
    assert run(["zero-curvature"]) == 0
    out = capsys.readouterr().out
    assert "PASS flatness-of-linear-problem" in out


def test_verify_symmetry_family_flag(capsys):
    assert run(["verify-symmetry", "--family", "coupled-5"]) == 0
    out = capsys.readouterr().out
    assert "family-coupled-5" in out


def test_negative_control_family_is_reported_as_rejected(capsys):
    assert run(["verify-symmetry", "--family", "prolonged-6-flipped"]) == 0
    out = capsys.readouterr().out
    assert "rejected" in out


def test_symmetry_manifest_input(tmp_path, capsys):
    manifest = tmp_path / "sigma.txt"
    manifest.write_text(
        "[symmetry]\n"
        "sigma_u = phi^2\n"
        "sigma_v = psi^2\n"
        "sigma_phi = phi*f\n"
        "sigma_psi = psi*f\n"
        "sigma_f = f^2\n"
    )
    assert run(["verify-symmetry", "--manifest", str(manifest)]) == 0


def test_bad_symmetry_manifest_fails(tmp_path):
    manifest = tmp_path / "sigma.txt"
    manifest.write_text("[symmetry]\nsigma_u = u\nsigma_v = v\n")
    assert run(["verify-symmetry", "--manifest", str(manifest)]) == 1


def test_conservation_single_generator(capsys):
    assert run(["conservation", "--generator", "g3", "--numeric-points", "2"]) == 0
    out = capsys.readouterr().out
    assert "divergence-g3" in out


def test_finite_transform_grid_pipeline(tmp_path, capsys):
    grid = numcheck.make_vacuum_grid(grid_spec={"nx": 21, "nt": 11})
    src = tmp_path / "vacuum.grid"
    src.write_text(numcheck.write_grid(grid))
    dst = tmp_path / "moved.grid"
    assert run([
        "finite-transform", "--grid", str(src), "--out", str(dst),
        "--epsilon", "0.1",
    ]) == 0
    moved = numcheck.read_grid(dst.read_text())
    assert set(moved.fields) == {"u", "v", "phi", "psi", "f"}


def test_optimal_system_subcommand(capsys):
    assert run(["optimal-system", "--samples", "20"]) == 0
    out = capsys.readouterr().out
    assert "structure-table" in out and "central-elements" in out


def test_corpus_emits_reparseable_manifests(capsys):
    assert run(["corpus"]) == 0
    out = capsys.readouterr().out
    assert "[equations]" in out and "# system prolonged" in out


def test_all_pipeline_is_green(capsys):
    assert run(["all", "--numeric-points", "2"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "kernel-properties" in out and "divergence-family" in out


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as err:
        run(["no-such-command"])
    assert err.value.code == 2


def test_json_report_deterministic_modulo_timing(tmp_path, capsys):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert run(["zero-curvature", "--json", str(first)]) == 0
    assert run(["zero-curvature", "--json", str(second)]) == 0

    def normalize(path):
        payload = json.loads(path.read_text())
        for check in payload["checks"]:
            check.pop("ms")
        return payload

    a, b = normalize(first), normalize(second)
    assert a == b
    assert a["schema"] == 1
    assert all(c["status"] in ("pass", "info") for c in a["checks"])


def test_report_inputs_digest_is_stable(tmp_path):
    path = tmp_path / "r.json"
    run(["corpus", "--quiet-manifest", "--json", str(path)])
    payload = json.loads(path.read_text())
    assert re.fullmatch(r"[0-9a-f]{16}", payload["inputs"])
