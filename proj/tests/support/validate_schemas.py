"""Validate recorded API response bodies against the published schemas."""
import json
import sys

import jsonschema


def main(schema_path, bodies_path):
    schemas = json.load(open(schema_path, encoding="utf-8"))
    bodies = json.load(open(bodies_path, encoding="utf-8"))
    if not bodies:
        print("no recorded bodies")
        return 1
    failures = 0
    seen = set()
    for item in bodies:
        endpoint = item["endpoint"] if item["status"] < 400 else "error"
        ref = schemas["endpoints"][endpoint]["response"]
        schema = {"$schema": schemas["$schema"], "$defs": schemas["$defs"], "$ref": ref}
        try:
            jsonschema.Draft202012Validator(schema).validate(item["body"])
            seen.add(endpoint)
        except jsonschema.ValidationError as e:
            failures += 1
            print(f"FAIL {item['endpoint']} ({item['status']}): {e.message}")
    missing = set(schemas["endpoints"]) - seen
    for endpoint in sorted(missing):
        failures += 1
        print(f"FAIL no recorded response for {endpoint}")
    print(f"{len(bodies)} bodies checked, {failures} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
