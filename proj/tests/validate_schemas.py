"""Validate every JSON document the tools emit against schemas/, and check\nthat a second run reproduces it byte for byte."""
import json
import pathlib
import subprocess
import sys
import tempfile

from jsonschema import Draft202012Validator
from referencing import Registry, Resource

cli, emitter, schema_dir = sys.argv[1], sys.argv[2], pathlib.Path(sys.argv[3])

resources = []
for path in schema_dir.glob("*.schema.json"):
    doc = json.loads(path.read_text())
    Draft202012Validator.check_schema(doc)
    resources.append((doc["$id"], Resource.from_contents(doc)))
registry = Registry().with_resources(resources)


def validator(name):
    doc = json.loads((schema_dir / f"{name}.schema.json").read_text())
    return Draft202012Validator(doc, registry=registry)


failures = 0


def check(name, text, label):
    global failures
    errors = list(validator(name).iter_errors(json.loads(text)))
    status = "ok" if not errors else "FAIL"
    print(f"{status:4} {name:18} {label}")
    for e in errors[:5]:
        print("     ", list(e.absolute_path), e.message[:200])
    failures += bool(errors)


RENORMALIZABLE = "10,-13,4,0"
DISCONNECTED = "17.36111111111111,-26.38888888888889,10.027777777777779,0"
with tempfile.TemporaryDirectory() as tmp:
    runs = [
        ("yoccoz_report", ["yoccoz", "--c", "i", "--depth", "6"], 0),
        ("yoccoz_report", ["yoccoz", "--c", "-1.75", "--depth", "8"], 0),
        ("yoccoz_report", ["yoccoz", "--c", "0"], 2),
        ("bh_report", ["bh", "--poly", RENORMALIZABLE, "--depth", "3"], 0),
        ("bh_report", ["bh", "--poly", DISCONNECTED, "--depth", "3"], 0),
        ("bh_report", ["bh", "--poly", "1,0,3,3", "--depth", "3"], 0),
        ("bh_report", ["bh", "--c", "i"], 2),
        ("tableau_report", ["tableau", "--fibonacci", "--depth", "18", "--width", "56"], 0),
        ("tableau_report", ["tableau", "--c", "-1.6", "--z", "1", "--depth", "10", "--width", "12"], 0),
        ("tableau_report", ["tableau", "--c", "-1", "--z", "0.618033988749895", "--depth", "4"], 2),
        ("render_log", ["render", "--c", "i", "--depths", "0,1", "--grid", "64", "--out", f"{tmp}/a.pgm"], 0),
        ("render_log", ["render", "--poly", RENORMALIZABLE, "--depths", "0..1", "--grid", "64", "--out", f"{tmp}/b.pgm"], 0),
    ]
    for name, args, code in runs:
        args = [cli] + args + (["--json"] if args[0] != "render" else [])
        proc = subprocess.run(args, capture_output=True, text=True)
        if proc.returncode != code:
            print(f"FAIL exit {proc.returncode} != {code}: {' '.join(args[1:])}")
            failures += 1
            continue
        check(name, proc.stdout, " ".join(args[1:]))
        # A second process must reproduce the report, and the image for renders.
        image = pathlib.Path(args[args.index("--out") + 1]).read_bytes() if "--out" in args else None
        again = subprocess.run(args, capture_output=True, text=True)
        same = again.stdout == proc.stdout
        if image is not None:
            same = same and pathlib.Path(args[args.index("--out") + 1]).read_bytes() == image
        if not same:
            print(f"FAIL nondeterministic output: {' '.join(args[1:])}")
            failures += 1

out = subprocess.run([emitter], capture_output=True, text=True, check=True).stdout
for line in out.splitlines():
    name, text = line.split(" ", 1)
    check(name, text, "library")

sys.exit(1 if failures else 0)
