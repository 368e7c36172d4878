import pytest

from gmtlab.cli import RunConfig, main

LINE_DENSITY_CFG = """
[measure]
kind = line
h = 0.001
extent = 1.0
[field]
kind = identity
[ladder]
r0 = 0.5
rho = 0.63096
count = 6
[density]
center = 0,0
m = 1
threshold = 0.05
"""

CANTOR_DENSITY_CFG = """
[measure]
kind = cantor
depth = 7
[field]
kind = identity
[ladder]
r0 = 0.25
rho = 0.5
count = 7
spacing = 6.103515625e-05
[density]
center = 0,0
m = 1
threshold = 0.05
"""

HALFLINE_PV_CFG = """
[measure]
kind = halfline
h = 0.001
extent = 1.5
[field]
kind = identity
[pv]
center = 0,0
m = 1
eps0 = 0.5
rungs = 5
R = 1.0
"""

METRIC_CFG = """
[measure]
kind = line
h = 0.01
extent = 1.0
[metric]
mode = fr
r = 1.0
"""

DMO_CFG = """
[dmo]
n = 2
radii = 0.8,0.4,0.2,0.1
probes = 16
[field]
kind = constant
matrix = 2,0,0,1
"""

BLOWUP_CFG = """
[measure]
kind = line
h = 0.01
extent = 1.0
[field]
kind = identity
[ladder]
r0 = 0.5
rho = 0.5
count = 2
[blowup]
center = 0,0
m = 1
sandwich_R = 0.5,1,2
"""

GENERATE_CFG = """
[measure]
kind = cantor
depth = 7
[generate]
manifest = {manifest}
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run_cli(args):
    return main(args)


def test_density_line_small_gap(tmp_path, capsys):
    cfg = write_cfg(tmp_path, LINE_DENSITY_CFG)
    out = tmp_path / "density.csv"
    assert run_cli(["density", "--config", cfg, "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# config_sha256=")
    assert "# verdict=small-gap" in text
    last_ratio = float(text.strip().splitlines()[-2].split(",")[-1])
    assert last_ratio <= 1.02


def test_density_cantor_large_gap(tmp_path):
    cfg = write_cfg(tmp_path, CANTOR_DENSITY_CFG)
    out = tmp_path / "cantor.csv"
    assert run_cli(["density", "--config", cfg, "--out", str(out)]) == 0
    text = out.read_text()
    assert "# verdict=large-gap" in text
    last_ratio = float(text.strip().splitlines()[-2].split(",")[-1])
    assert last_ratio >= 1.1


def test_pv_halfline_diverging(tmp_path):
    cfg = write_cfg(tmp_path, HALFLINE_PV_CFG)
    out = tmp_path / "pv.csv"
    assert run_cli(["pv", "--config", cfg, "--out", str(out)]) == 0
    assert "# verdict=diverging" in out.read_text()


def test_metric_single_line(tmp_path):
    cfg = write_cfg(tmp_path, METRIC_CFG)
    out = tmp_path / "metric.txt"
    assert run_cli(["metric", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 2  # hash comment + value
    value = float(lines[1])
    assert value == pytest.approx(1.0, abs=0.05)  # F_1(line, 0) = integral caps


def test_metric_series_and_scaling_modes(tmp_path):
    base = """
[measure]
kind = line
h = 0.01
[measure2]
kind = cross
h = 0.01
[metric]
mode = {mode}
r = 2.0
max_terms = 6
"""
    cfg = write_cfg(tmp_path, base.format(mode="series"), "series.cfg")
    out = tmp_path / "series.txt"
    assert run_cli(["metric", "--config", cfg, "--out", str(out)]) == 0
    value, tail = out.read_text().strip().splitlines()[1].split(",")
    assert 0.0 < float(value) <= 1.0
    assert float(tail) == 2.0 ** -6

    cfg = write_cfg(tmp_path, base.format(mode="scaling"), "scaling.cfg")
    out = tmp_path / "scaling.txt"
    assert run_cli(["metric", "--config", cfg, "--out", str(out)]) == 0
    assert float(out.read_text().strip().splitlines()[1]) <= 1e-7


def test_metric_dcone_mode(tmp_path):
    cfg = write_cfg(tmp_path, """
[measure]
kind = line
h = 0.001
[metric]
mode = dcone
m = 1
s = 1.0
""")
    out = tmp_path / "dcone.txt"
    assert run_cli(["metric", "--config", cfg, "--out", str(out)]) == 0
    assert float(out.read_text().strip().splitlines()[1]) <= 0.02


def test_dmo_constant_field_zeros(tmp_path):
    cfg = write_cfg(tmp_path, DMO_CFG)
    out = tmp_path / "dmo.csv"
    assert run_cli(["dmo", "--config", cfg, "--out", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines()
            if l and not l.startswith("#")][1:]
    for row in rows:
        r, omega, tau, tau_hat, kappa, warn = row.split(",")
        assert float(omega) == 0.0 and float(tau) == 0.0
        assert float(kappa) == 1.0 and float(warn) == 0.0


def test_generate_cantor_row_count(tmp_path):
    manifest = tmp_path / "manifest.txt"
    cfg = write_cfg(tmp_path, GENERATE_CFG.format(manifest=manifest))
    out = tmp_path / "cantor.csv"
    assert run_cli(["generate", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("# config_sha256=")
    data = [l for l in lines if not l.startswith("#")]
    assert len(data) == 1 + 4 ** 7  # header + one row per point
    assert "cantor" in manifest.read_text()


def test_generate_flat_row_count_and_roundtrip(tmp_path):
    cfg = write_cfg(tmp_path, """
[measure]
kind = flat
n = 2
m = 1
radius = 1.0
h = 0.001
""")
    out = tmp_path / "flat.csv"
    assert run_cli(["generate", "--config", cfg, "--out", str(out)]) == 0
    data = [l for l in out.read_text().strip().splitlines()
            if not l.startswith("#")]
    assert len(data) == 1 + 2 * 1000 + 1
    from gmtlab.measures import load_measure_csv
    back = load_measure_csv(out, dim=2)
    assert back.size == 2001


def test_dmo_checkerboard_warning_column(tmp_path):
    cfg = write_cfg(tmp_path, """
[dmo]
n = 2
radii = 0.8,0.4,0.2,0.1
probes = 16
boundary_probe = 0.5,0.25
[field]
kind = checkerboard
contrast = 2.0
cell = 0.5
""")
    out = tmp_path / "dmo.csv"
    assert run_cli(["dmo", "--config", cfg, "--out", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines()
            if l and not l.startswith("#")][1:]
    warn_col = [float(r.split(",")[-1]) for r in rows]
    assert all(w == 1.0 for w in warn_col)


def test_missing_config_exits_2(tmp_path):
    assert run_cli(["density", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_bad_config_exits_2(tmp_path):
    cfg = write_cfg(tmp_path, "[measure]\nkind = wat\n")
    assert run_cli(["density", "--config", cfg]) == 2


def test_resolution_guard_exits_3(tmp_path):
    cfg = write_cfg(tmp_path, """
[measure]
kind = line
h = 0.01
[field]
kind = identity
[ladder]
r0 = 0.05
rho = 0.5
count = 3
[density]
center = 0,0
m = 1
""")
    assert run_cli(["density", "--config", cfg]) == 3


@pytest.mark.parametrize("command,cfg_text", [
    ("density", LINE_DENSITY_CFG),
    ("pv", HALFLINE_PV_CFG),
    ("metric", METRIC_CFG),
    ("dmo", DMO_CFG),
    ("blowup", BLOWUP_CFG),
    ("generate", "[measure]\nkind = cantor\ndepth = 5\n"),
])
def test_byte_identical_across_threads(tmp_path, command, cfg_text):
    cfg = write_cfg(tmp_path, cfg_text)
    out1 = tmp_path / "a.out"
    out2 = tmp_path / "b.out"
    assert run_cli([command, "--config", cfg, "--out", str(out1),
                    "--threads", "1"]) == 0
    assert run_cli([command, "--config", cfg, "--out", str(out2),
                    "--threads", "4"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_blowup_cross_columns(tmp_path):
    cfg = write_cfg(tmp_path, """
[measure]
kind = cross
h = 0.01
extent = 1.0
[field]
kind = identity
[ladder]
r0 = 0.4
rho = 0.5
count = 2
[blowup]
center = 0,0
m = 1
""")
    out = tmp_path / "blowup.csv"
    assert run_cli(["blowup", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "r,flatness,symmetry_defect,sandwich_violation"
    rows = [l.split(",") for l in lines[2:] if l and not l.startswith("#")]
    for row in rows:
        # the cross is symmetric at 0 but never flat there
        assert float(row[2]) <= 0.02
        assert float(row[1]) >= 0.2


def test_config_hash_is_canonical():
    a = RunConfig.parse("[b]\nx = 1\n[a]\ny = 2\n")
    b = RunConfig.parse("[a]\ny = 2\n[b]\nx = 1\n")
    assert a.sha256() == b.sha256()
    c = RunConfig.parse("[a]\ny = 3\n[b]\nx = 1\n")
    assert a.sha256() != c.sha256()


def test_config_parse_errors():
    with pytest.raises(Exception):
        RunConfig.parse("key = value outside section\n")
