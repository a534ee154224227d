import json

import jsonschema
import pytest

from conftest import ROOT

SCHEMAS = sorted((ROOT / "docs" / "schemas").glob("*.schema.json"))


@pytest.mark.parametrize("path", SCHEMAS, ids=lambda p: p.name)
def test_schema_is_valid(path):
    jsonschema.Draft202012Validator.check_schema(json.loads(path.read_text()))


@pytest.mark.parametrize(
    "argv, name",
    [
        (["params"], "params"),
        (["params", "--m", "256"], "params"),
        (["table"], "table"),
        (["simulate", "--seed", "1"], "simulate"),
        (["simulate", "--seed", "1", "--adversary", str(ROOT / "scenarios" / "tamper_share.json")], "simulate"),
        (["entropy", "--xor-sweep"], "xor_sweep"),
        (["attack-suite"], "attack_suite"),
    ],
)
def test_cli_output_validates(cli, schema, argv, name):
    jsonschema.validate(cli(*argv).json, schema(name))


def test_entropy_outputs_validate(cli, schema, tmp_path):
    d = tmp_path / "d.json"
    d.write_text("[0.5, 0.25, 0.25, 0]")
    jsonschema.validate(cli("entropy", "--dist", d, "--alpha", "inf").json, schema("entropy"))
    s = tmp_path / "s.json"
    s.write_text(json.dumps({"alphabet_size": 2, "samples": [0, 1, 1]}))
    jsonschema.validate(cli("entropy", "--samples", s).json, schema("estimate"))


def test_transcript_lines_validate(schema):
    sch = schema("transcript_entry")
    for line in (ROOT / "tests" / "golden" / "transcript_n4_seed42.jsonl").read_text().splitlines():
        jsonschema.validate(json.loads(line), sch)


@pytest.mark.parametrize("path", sorted((ROOT / "scenarios").glob("*.json")), ids=lambda p: p.name)
def test_scenarios_validate(schema, path):
    jsonschema.validate(json.loads(path.read_text()), schema("scenario"))
