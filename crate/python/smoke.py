"""Smoke test of the formality_py extension.

Uses an installed module when available, otherwise the library built by
`cargo build -p formality-py` (release first, then debug).
"""

import importlib
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("formality_py")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libformality_py.so", "libformality_py.dylib", "formality_py.dll"):
            built = ROOT / "target" / profile / name
            if built.exists():
                tmp = pathlib.Path(tempfile.mkdtemp())
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                shutil.copy(built, tmp / ("formality_py" + suffix))
                sys.path.insert(0, str(tmp))
                return importlib.import_module("formality_py")
    sys.exit("formality_py not built: run `cargo build -p formality-py`")


def main():
    fp = load()

    assert fp.schouten(2, "d0", "x0*d1") == "(1) * d1", fp.schouten(2, "d0", "x0*d1")
    assert fp.poisson_bracket(2, "d0^d1", "x0", "x1") == "1"

    listed = json.loads(fp.graphs("halfplane", 1, 2))
    assert len(listed) == 2

    mu = json.dumps({"flavor": "disk", "n": 0, "m": 2, "stars": {"c": ["b2"]}})
    value, stderr = fp.weight(mu, 20000, 3)
    assert abs(value - 1.0) < 1e-2, (value, stderr)

    assert fp.duflo_multiplicative("so3", 4)
    print("duflo(so3, x0^2) =", fp.duflo("so3", "x0^2"))

    report = json.loads(fp.run(["--no-cache", "verify", "--suite", "symbolic", "--cases", "5"]))
    assert report["passed"] is True

    try:
        fp.schouten(2, "d0 +", "d1")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    print("formality_py smoke test passed")


if __name__ == "__main__":
    main()
