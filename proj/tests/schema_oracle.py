"""Checks the shipped schema, instances and schema cases with the reference
jsonschema implementation. File names starting with valid_/invalid_ state the
expected verdict; bundled instances must all validate."""

import json
import pathlib
import sys

import jsonschema


def main(root: pathlib.Path) -> int:
    schema = json.loads((root / "docs" / "schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    cases = sorted((root / "tests" / "data" / "schema_cases").glob("*.json"))
    instances = sorted((root / "instances").glob("*.json"))
    for path in cases + instances:
        doc = json.loads(path.read_text())
        ok = validator.is_valid(doc)
        expected = not path.name.startswith("invalid_")
        status = "ok" if ok == expected else "MISMATCH"
        failures += ok != expected
        print(f"{status:8} {path.relative_to(root)} valid={ok}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(pathlib.Path(sys.argv[1])))
