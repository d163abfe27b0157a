"""Builds the extension with cargo, imports it and runs one experiment.

Usage: python3 crates/python/python/smoke_test.py
"""

import os
import shutil
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.abspath(os.path.join(HERE, "..", "..", ".."))
FIXTURE = os.path.join(ROOT, "crates", "core", "tests", "data", "wdbc.data")


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "histoensemble-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = os.path.join(ROOT, "target", "release", "libhistoensemble_py.so")
    dest = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(dest, "histoensemble.so"))
    return dest


def main():
    sys.path.insert(0, build())
    import histoensemble as he

    ds = he.Dataset.load(FIXTURE)
    print(ds)
    print("r(radius, perimeter) = %.4f" % he.pearson(ds.column("radius"), ds.column("perimeter")))
    failing = [f for f, (_, ok) in he.normality_screen(ds).items() if not ok]
    print("normality screen failures:", failing)

    res = he.run_experiment(FIXTURE, seed=1)
    print(res["comparison"])
    print(res["rules"])
    for name, m in res["models"].items():
        print(name, m["confusion"], "overall error %.4f" % m["rates"]["overall_error"])

    bundle = he.Bundle.from_json(res["bundle"].to_json())
    _, test = ds.split(448, 1)
    assert bundle.evaluate(test)["ensemble"]["confusion"] == res["models"]["ensemble"]["confusion"]
    r = he.rates([[40, 1], [4, 76]])
    assert (round(r["overall_error"], 2), round(r["fnr_paper"], 2), round(r["fpr_paper"], 2)) == (0.04, 0.01, 0.09)
    print("smoke test ok")


if __name__ == "__main__":
    main()
