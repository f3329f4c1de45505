#!/usr/bin/env python3
# usage: check_schemas.py SCHEMA_DIR DOC...
import glob
import json
import sys

from jsonschema import Draft202012Validator
from referencing import Registry, Resource
schemas = {}
for p in glob.glob(sys.argv[1] + "/*.schema.json"):
    s = json.load(open(p)); schemas[s["$id"]] = s
reg = Registry().with_resources([(k, Resource.from_contents(v)) for k, v in schemas.items()])
bad = 0
for p in sys.argv[2:]:
    d = json.load(open(p))
    v = Draft202012Validator(schemas["urn:simflow:schema:" + d["kind"]], registry=reg)
    errs = list(v.iter_errors(d))
    print(p, "ok" if not errs else "FAIL")
    for e in errs[:5]:
        bad += 1; print("  ", list(e.absolute_path), e.message[:200])
sys.exit(bad > 0)
