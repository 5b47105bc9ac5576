import csv
import io
import json

import pytest

from corrconv import cli
from corrconv.cli import EXIT_INTERNAL, EXIT_IO, EXIT_OK, EXIT_USAGE, SWEEP_COLUMNS, fmt_number, main
from corrconv.config import OUTPUT_DIR_ENV

SHORT_SWEEP = ["--p-min", "0.5", "--p-max", "1", "--p-step", "0.25"]


@pytest.fixture(autouse=True)
def _no_output_dir(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text(encoding="utf-8"))))


def test_fmt_number():
    assert fmt_number(2 / 9) == "0.222222222222"
    assert fmt_number(-0.0) == "0"
    assert fmt_number(1.0) == "1"
    assert fmt_number(1e-20) == "1e-20"


def test_sweep_writes_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", *SHORT_SWEEP, "--out", str(out)]) == EXIT_OK
    text = out.read_text(encoding="utf-8")
    assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    rows = _rows(out)
    assert [r["p"] for r in rows] == ["0.5", "0.75", "1"]
    assert abs(float(rows[-1]["discord"])) <= 1e-9
    assert float(rows[-1]["p0"]) == 0.0


def test_sweep_is_byte_identical_across_runs(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", *SHORT_SWEEP, "--out", str(first)]) == EXIT_OK
    assert main(["sweep", *SHORT_SWEEP, "--workers", "3", "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_sweep_closed_form_peaks_at_two_ninths(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--p-step", "0.1", "--out", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert rows[0]["e_closed"] == "0.222222222222"
    assert max(float(r["e_closed"]) for r in rows) == pytest.approx(2 / 9, abs=1e-12)
    assert rows[-1]["p"] == "1"
    assert float(rows[0]["p0"]) == pytest.approx(2 / 9, abs=1e-12)


def test_sweep_json_matches_csv(tmp_path):
    csv_out, json_out = tmp_path / "s.csv", tmp_path / "s.json"
    assert main(["sweep", *SHORT_SWEEP, "--out", str(csv_out)]) == EXIT_OK
    assert main(["sweep", *SHORT_SWEEP, "--format", "json", "--out", str(json_out)]) == EXIT_OK
    doc = json.loads(json_out.read_text(encoding="utf-8"))
    assert doc["metadata"]["columns"] == list(SWEEP_COLUMNS)
    assert doc["metadata"]["inputs"]["p_step"] == 0.25
    for row_csv, row_json in zip(_rows(csv_out), doc["rows"], strict=True):
        assert {k: float(v) for k, v in row_csv.items()} == row_json


def test_sweep_rejects_bad_range(tmp_path):
    assert main(["sweep", "--p-min", "0.1", "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert main(["sweep", "--p-min", "0.9", "--p-max", "0.5", "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert main(["sweep", "--delta-in", "0.5", "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert not (tmp_path / "x.csv").exists()


@pytest.mark.parametrize("coefficients", [["--c1", "2"], ["--c1", "1", "--c2", "1", "--c3", "1"]])
def test_invalid_coefficients_are_usage_errors(tmp_path, coefficients):
    out = tmp_path / "x.csv"
    assert main(["sweep", *SHORT_SWEEP, *coefficients, "--out", str(out)]) == EXIT_USAGE
    assert not out.exists()


def test_closed_form_follows_explicit_coefficients(tmp_path):
    out = tmp_path / "sweep.csv"
    args = ["--c1", "0.2", "--c2", "-0.2", "--c3", "0.6", "--p-min", "0.5", "--p-max", "0.5"]
    assert main(["sweep", *args, "--out", str(out)]) == EXIT_OK
    (row,) = _rows(out)
    assert float(row["e_closed"]) == pytest.approx(0.1, abs=1e-12)
    assert float(row["p0"]) == pytest.approx(float(row["e_closed"]), abs=1e-12)


def test_missing_flag_decomposition_is_null_in_json(tmp_path):
    out = tmp_path / "sweep.json"
    args = ["--c1", "-0.2", "--c2", "0.2", "--c3", "0.6", "--p-min", "0.5", "--p-max", "0.5"]
    assert main(["sweep", *args, "--format", "json", "--out", str(out)]) == EXIT_OK

    def reject(token):
        raise ValueError(token)

    doc = json.loads(out.read_text(encoding="utf-8"), parse_constant=reject)
    assert doc["rows"][0]["p0"] is None
    assert doc["rows"][0]["e_closed"] == pytest.approx(0.1, abs=1e-12)


def test_unparseable_flag_is_usage_error():
    assert main(["sweep", "--p-min", "abc"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_unwritable_output_is_io_error(tmp_path):
    target = tmp_path / "missing" / "sweep.csv"
    assert main(["sweep", *SHORT_SWEEP, "--out", str(target)]) == EXIT_IO


def test_internal_failure_exit_code(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "correlation_report", broken)
    assert main(["sweep", *SHORT_SWEEP, "--out", str(tmp_path / "x.csv")]) == EXIT_INTERNAL


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "results"))
    assert main(["sweep", *SHORT_SWEEP]) == EXIT_OK
    assert (tmp_path / "results" / "sweep.csv").is_file()


def test_config_file_supplies_defaults(tmp_path):
    config = tmp_path / "config.toml"
    config.write_text('p_min = 0.5\np_max = 1.0\np_step = 0.5\nformat = "json"\n', encoding="utf-8")
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == EXIT_OK
    assert [r["p"] for r in json.loads(out.read_text(encoding="utf-8"))["rows"]] == [0.5, 1.0]


def test_missing_config_file_is_usage_error(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.toml")]) == EXIT_USAGE


def test_verify_reports_verdicts(tmp_path, capsys):
    out = tmp_path / "verify.csv"
    assert main(["verify", "--out", str(out)]) == EXIT_OK
    verdicts = {r["claim_id"]: r["verdict"] for r in _rows(out)}
    assert verdicts["pauli-capacity-zero-point"] == "confirmed"
    assert verdicts["output-eigenvalues"] == "reproduced-on-template-only"
    assert verdicts["ree-closed-vs-numeric"] == "diverges"
    assert "[verify] summary" in capsys.readouterr().err


def test_protocol_summary_is_deterministic(capsys):
    assert main(["protocol", "--n", "2000", "--seed", "5"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["protocol", "--n", "2000", "--seed", "5"]) == EXIT_OK
    assert capsys.readouterr().out == first
    fields = dict(line.split("=", 1) for line in first.splitlines())
    assert fields["n"] == "2000"
    assert fields["yield_predicted"] == "1333"
    assert float(fields["p0"]) == pytest.approx(2 / 9, abs=1e-12)
    assert fields["flag_p0"] == fields["p0"]


def test_protocol_full_noise_has_no_entangled_pairs(tmp_path, capsys):
    summary = tmp_path / "protocol.json"
    assert main(["protocol", "--n", "10", "--p", "1", "--json", str(summary)]) == EXIT_OK
    assert "flag0_count=0" in capsys.readouterr().out.splitlines()
    assert json.loads(summary.read_text(encoding="utf-8"))["flag0_count"] == 0


def test_protocol_rejects_empty_batch():
    assert main(["protocol", "--n", "0"]) == EXIT_USAGE


def test_qudit_reference_line(capsys):
    assert main(["qudit", "--d", "2", "--m", "1", "--p", "0.3333333333333333"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == (
        "tau=0.333333333333 tau_gamma=0.222222222222 threshold=0.5 entangled=false"
    )


def test_qudit_rejects_bad_schmidt():
    assert main(["qudit", "--schmidt", "0.9", "0.1"]) == EXIT_USAGE
