import numpy as np
import pytest

from gridmc import cli
from gridmc.io import (
    FormatError,
    model_hash,
    parse_network_text,
    parse_profile_text,
    read_summary,
    serialize_network,
    serialize_profile,
)

from conftest import triangle

NET = """FORMAT v1
BASE_MVA 100
AREA A 2 15
BUS 1 A   # comment
BUS 2 A
LINE L1 1 2 0.1 200 0.5 0.1 1 -
GEN G1 1 150 1 2.0 0.05
LOAD D1 2 100
PARAMS beta=1.5 xi=0.75
"""


def test_parse_network_fields_and_partial_params():
    m = parse_network_text(NET)
    assert m.lines[0].rating == 200.0 and m.lines[0].responsible_area is None
    assert m.generators[0].failure_rate == 2.0 and m.generators[0].repair_rate == 0.05
    assert m.params.beta == 1.5 and m.params.xi == 0.75
    assert m.params.eta == 0.9  # default kept


@pytest.mark.parametrize("model", [triangle(), parse_network_text(NET)])
def test_serialize_round_trip(model):
    text = serialize_network(model)
    again = parse_network_text(text)
    assert again == model
    assert serialize_network(again) == text
    assert model_hash(again) == model_hash(model)


def test_bundled_network_round_trips(rts96):
    model, _ = rts96
    assert parse_network_text(serialize_network(model)) == model


@pytest.mark.parametrize(
    "bad, message",
    [
        ("FORMAT v2\n", "unsupported format"),
        ("BUS 1\n", "expects 2 fields"),
        ("WIRE 1 2\n", "unknown record"),
        ("AREA A 2 x\n", "expected a number"),
        ("AREA A 2 15\nBUS 1 A\nBUS 1 A\n", "duplicate bus"),
        ("PARAMS gamma=3\n", "bad PARAMS"),
        ("AREA A 2 15\nBUS 1 A\nGEN G 1 10 1.5 0 1\n", "priority must be an integer"),
        ("AREA A 2 15\nBUS 1 A\nLOAD D 9 10\n", "invalid network"),
    ],
)
def test_network_errors_name_the_problem(bad, message):
    with pytest.raises(FormatError, match=message):
        parse_network_text(bad, "net.txt")


def test_network_error_reports_line_number():
    with pytest.raises(FormatError, match=r"net.txt:3"):
        parse_network_text("FORMAT v1\n\nBUS 1\n", "net.txt")


def test_profile_round_trip_and_errors():
    prof = np.array([[0.5, 1.0], [0.25, 0.125]])
    assert np.array_equal(parse_profile_text(serialize_profile(prof, ["A", "B"]), 2), prof)
    with pytest.raises(FormatError, match="expected 2 values"):
        parse_profile_text("0.5\n", 2)
    with pytest.raises(FormatError, match="outside"):
        parse_profile_text("0.5 1.2\n", 2)
    with pytest.raises(FormatError, match="names 3 areas"):
        parse_profile_text("AREAS A B C\n0.5 0.5\n", 2)
    with pytest.raises(FormatError, match="empty"):
        parse_profile_text("FORMAT v1\n", 2)


@pytest.fixture(scope="module")
def peak_profile(rts96, tmp_path_factory):
    model, profile = rts96
    peak = int(np.argmax(profile[:, 0]))
    path = tmp_path_factory.mktemp("prof") / "peak.txt"
    path.write_text(serialize_profile(profile[peak - 168 : peak + 72], [a.id for a in model.areas]))
    return str(path)


def run(tmp_path, name, peak_profile, *extra):
    out = tmp_path / name
    code = cli.main(["--profile", peak_profile, "--years", "2", "--seed", "8", "--loading-level", "1.5",
                     "--out", str(out), *extra])
    return code, out


def test_cli_is_deterministic(tmp_path, peak_profile):
    c1, a = run(tmp_path, "a", peak_profile)
    c2, b = run(tmp_path, "b", peak_profile)
    assert c1 == c2 == 0
    rows = [r for r in (a / "events.csv").read_text().splitlines() if not r.startswith("#")]
    assert len(rows) > 1  # at least one event besides the column names
    for name in ("events.csv", "freq.csv", "overloads.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c3, c = run(tmp_path, "c", peak_profile, "--workers", "2")
    assert c3 == 0 and (c / "events.csv").read_bytes() == (a / "events.csv").read_bytes()


def test_cli_header_and_summary(tmp_path, peak_profile):
    code, out = run(tmp_path, "h", peak_profile, "--no-operator", "--size-metric", "max-demand")
    assert code == 0
    head = (out / "events.csv").read_text().splitlines()
    assert head[0] == "# FORMAT v1"
    assert "# L=1.5" in head and "# operator=off" in head and "# seed=8" in head
    summary = read_summary(out / "summary.txt")
    assert summary["years_completed"] == "2"
    assert float(summary["EENS_operator_intervention_MWh_per_year"]) == 0.0
    assert "max-demand" in (out / "freq.csv").read_text()


def test_cli_loading_level_header_keeps_repr(tmp_path, peak_profile):
    out = tmp_path / "l"
    assert cli.main(["--profile", peak_profile, "--years", "1", "--loading-level", "1.37", "--out", str(out)]) == 0
    assert "# L=1.37" in (out / "summary.txt").read_text().splitlines()


def test_cli_rejects_conflicting_flags(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--no-operator", "--operator-response-min", "30", "--out", str(tmp_path)])
    assert exc.value.code != 0
    assert "cannot be combined" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [["--years", "0"], ["--workers", "0"], ["--loading-level", "-1"]])
def test_cli_rejects_bad_values(tmp_path, flags):
    with pytest.raises(SystemExit) as exc:
        cli.main([*flags, "--out", str(tmp_path)])
    assert exc.value.code != 0


def test_cli_missing_network_file(tmp_path, capsys):
    assert cli.main(["--network", str(tmp_path / "nope.net"), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_unwritable_output(tmp_path, peak_profile, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = cli.main(["--profile", peak_profile, "--years", "1", "--out", str(blocker / "sub")])
    assert code == 3
    assert "cannot write results" in capsys.readouterr().err
