import json
import math

import pytest

from dichroic_qw.config import load_config, parse_angle, parse_config, spectrum_parameters
from dichroic_qw.errors import ConfigError
from dichroic_qw.walk import PlateKind


def _cfg(**kw):
    doc = {"schema_version": 1, "steps": 5}
    doc.update(kw)
    return json.dumps(doc, indent=2)


@pytest.mark.parametrize(
    "text,value",
    [("pi", math.pi), ("pi/2", math.pi / 2), ("3*pi/4", 3 * math.pi / 4), ("-pi + 1", 1 - math.pi), (1.5, 1.5)],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("bad", ["__import__('os')", "e", "pi**2", "1/0", True, None, "pi("])
def test_parse_angle_rejects(bad):
    with pytest.raises(ValueError):
        parse_angle(bad)


def test_minimal_defaults():
    cfg = parse_config(_cfg())
    proto = cfg.protocol
    assert proto.steps == 5
    assert all(p.delta == math.pi and p.eta == 0 for p in proto.displacements())
    assert cfg.outputs == {"distributions", "variance"}
    assert cfg.spectrum.grid == 257


def test_walk_protocol_forms():
    cfg = parse_config(_cfg(protocol={"delta": "pi", "eta": [0.1, 0.2, 0.3, 0.4, 0.5]}))
    assert [p.eta for p in cfg.protocol.displacements()] == [0.1, 0.2, 0.3, 0.4, 0.5]
    assert all(p.eta_prime == p.eta for p in cfg.protocol.displacements())
    cfg = parse_config(_cfg(protocol={"eta": 0.57, "eta_prime_mode": "neglect"}))
    assert all(p.eta_prime == 0 for p in cfg.protocol.displacements())
    cfg = parse_config(_cfg(protocol={"eta": 0.57, "eta_prime": 1.0}))
    assert all(p.eta_prime == 1.0 for p in cfg.protocol.displacements())


def test_plate_list_protocol():
    plates = [{"kind": "coin"}, {"kind": "displacement", "delta": "pi/2", "eta": 0.3}]
    cfg = parse_config(_cfg(protocol={"plates": plates}))
    assert [p.kind for p in cfg.protocol.plates] == [PlateKind.COIN, PlateKind.DISPLACEMENT] * 5


def test_table_protocol(tmp_path):
    cfg = parse_config(_cfg(protocol={"table": "paper-fig1c-averages", "voltage_label": "V6"}))
    assert all(p.eta == 0.13 for p in cfg.protocol.displacements())
    (tmp_path / "plates.csv").write_text("plate_id,voltage_label,delta,eta,eta_prime\ng1,A,3.0,0.2,0.2\n")
    cfg = parse_config(_cfg(protocol={"table": "plates.csv", "voltage_label": "A"}), base_dir=tmp_path)
    assert all(p.delta == 3.0 for p in cfg.protocol.displacements())


def test_input_forms():
    assert parse_config(_cfg(input="L")).input_coin.tolist() == [1, 0]
    cfg = parse_config(_cfg(input=[1, [0, 1]]))
    assert abs(cfg.input_coin[1] - 1j / math.sqrt(2)) < 1e-15


@pytest.mark.parametrize(
    "doc,key",
    [
        ({"schema_version": 2, "steps": 5}, "schema_version"),
        ({"schema_version": 1, "steps": 0}, "steps"),
        ({"schema_version": 1, "steps": 5, "bogus": 1}, "bogus"),
        ({"schema_version": 1, "steps": 5, "protocol": {"eta": -0.1}}, "eta"),
        ({"schema_version": 1, "steps": 5, "protocol": {"eta": [0.1, 0.2]}}, "eta"),
        ({"schema_version": 1, "steps": 5, "outputs": ["movies"]}, "outputs"),
        ({"schema_version": 1, "steps": 5, "spectrum": {"grid": 8}}, "grid"),
        ({"schema_version": 1, "steps": 5, "similarity_threshold": 2}, "similarity_threshold"),
        ({"schema_version": 1, "steps": 5, "input": "Q"}, "input"),
        ({"schema_version": 1, "steps": 5, "protocol": {"table": "paper-fig1c-averages", "voltage_label": "V9"}},
         "protocol"),
    ],
)
def test_validation_errors_carry_line(doc, key):
    text = json.dumps(doc, indent=2)
    with pytest.raises(ConfigError) as err:
        parse_config(text, source="exp.json")
    exc = err.value
    assert exc.line is not None and f'"{key}"' in text.splitlines()[exc.line - 1]
    assert str(exc).startswith(f"exp.json:{exc.line}:")


def test_invalid_json_line():
    with pytest.raises(ConfigError) as err:
        parse_config('{\n  "schema_version": 1,\n  "steps": \n}')
    assert err.value.line == 4


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_sweep_defaults():
    cfg = parse_config(_cfg(sweep={"parameter": "eta"}))
    assert cfg.sweep.values == (0.57, 0.48, 0.40, 0.31, 0.23, 0.13)
    cfg = parse_config(_cfg(protocol={"table": "paper-fig1c-averages", "voltage_label": "V1"},
                            sweep={"parameter": "voltage_label"}))
    assert cfg.sweep.values == ("V1", "V2", "V3", "V4", "V5", "V6")
    with pytest.raises(ConfigError):
        parse_config(_cfg(sweep={"parameter": "delta"}))


def test_sweep_eta_tracks_eta_prime():
    cfg = parse_config(_cfg(sweep={"values": [0.3]}))
    proto = cfg.protocol_source.with_value("eta", 0.3).build(2)
    assert all(p.eta_prime == 0.3 for p in proto.displacements())


def test_spectrum_parameters():
    cfg = parse_config(_cfg(protocol={"eta": 0.4, "eta_prime_mode": "neglect"}))
    assert spectrum_parameters(cfg) == (math.pi, 0.4, 0.0)
    cfg = parse_config(_cfg(spectrum={"delta": "pi/2", "eta": 0.2}))
    assert spectrum_parameters(cfg) == (math.pi / 2, 0.2, 0.2)
