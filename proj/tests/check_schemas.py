"""Runs rwe-nas and validates its JSON artifacts against schemas/."""

import json
import os
import pathlib
import random
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource

binary, schema_dir = pathlib.Path(sys.argv[1]), pathlib.Path(sys.argv[2])


def load(name):
    return json.loads((schema_dir / name).read_text())


registry = Registry().with_resource(
    "run_config.schema.json", Resource.from_contents(load("run_config.schema.json")))


def check(doc, schema_name):
    jsonschema.Draft202012Validator(load(schema_name), registry=registry).validate(doc)
    print(f"ok: {schema_name}")


def run(*args):
    return subprocess.run([str(binary), *map(str, args)], check=True, capture_output=True, text=True).stdout


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    rng = random.Random(3)

    genome = tmp / "genome.txt"
    genome.write_text("1 3 0 6 2 1 1 5 3 0 2 4 0 2 4 6 5 1 1 1 0 5 1 2 2 6 0 0 1 1 3 4 4 3 0 2 5 6 3 0\n")
    out = tmp / "flops"
    report = json.loads(run("flops", genome, "--out", out))
    check(report, "complexity.schema.json")
    check(json.loads((out / "complexity.json").read_text()), "complexity.schema.json")

    scores = tmp / "scores.csv"
    scores.write_text("id,accuracy\n" + "".join(f"g{i},{rng.random()}\n" for i in range(12)))
    check(json.loads(run("correlate", "--predictions", scores, "--truth", scores)), "correlation.schema.json")

    # random CIFAR-format archive: the search only needs well-formed records
    data = tmp / "cifar"
    data.mkdir()
    for name, records in [(f"data_batch_{i}.bin", 40) for i in range(1, 6)] + [("test_batch.bin", 10)]:
        with open(data / name, "wb") as f:
            for _ in range(records):
                f.write(bytes([rng.randrange(10)]) + os.urandom(3072))
    search_out = tmp / "search"
    run("search", "--data", data, "--out", search_out, "--pop", 4, "--generations", 1, "--layers", 2,
        "--channels", 4, "--reductions", 2, "--epochs", 1, "--classifiers", 2,
        "--set", "n_train=100", "--set", "n_val=40")
    check(json.loads((search_out / "history.json").read_text()), "history.schema.json")
