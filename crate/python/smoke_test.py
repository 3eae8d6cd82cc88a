"""Smoke test for the `sturm` extension module.

Build and install with `maturin develop -m crates/py/Cargo.toml`, then run
`python python/smoke_test.py` (or `pytest python/`).
"""

import json
import math

import sturm


def test_free_spectrum():
    t = sturm.spectrum([], [], levels=4)
    for n in range(1, 5):
        assert abs(t["mu"][n - 1] - (math.pi * n) ** 2) < 1e-7
        assert abs(t["tau"][n - 1] - (math.pi * (n - 0.5)) ** 2) < 1e-7
    assert abs(t["nu0"]) < 1e-7


def test_discriminant_of_zero_potential():
    lams = [-4.0, 1.0, 30.0]
    for lam, d in zip(lams, sturm.discriminant([], [], lams)):
        expected = math.cosh(math.sqrt(-lam)) if lam < 0 else math.cos(math.sqrt(lam))
        assert abs(d - expected) < 1e-8


def test_round_trip():
    cos, sin = [0.6, -0.2], [0.3]
    f = sturm.gap_map(cos, sin, levels=12)
    assert len(f) == 24
    c, s, report = sturm.reconstruct(f)
    assert report["converged"]
    assert abs(c[0] - 0.6) < 1e-5 and abs(c[1] + 0.2) < 1e-5 and abs(s[0] - 0.3) < 1e-5


def test_odd_ones_reflects_sine():
    c, s = sturm.involve([], [1.0], "odd-ones")
    assert abs(s[0] + 1.0) < 1e-6
    assert all(abs(x) < 1e-6 for x in c + s[1:])


def test_verify_report():
    report = json.loads(sturm.verify("t1", [2.0], [1.0], levels=12))
    assert report["passed"]


def test_oracle_agrees():
    shoot = sturm.eigenvalues([1.0], [0.5], "DD", 5)
    values, errors = sturm.fd_spectrum([1.0], [0.5], "DD", 5)
    for a, b in zip(shoot, values):
        assert abs(a - b) / max(1.0, abs(b)) < 1e-6


def test_errors():
    for call in (
        lambda: sturm.involve([1.0], [], "1,x"),
        lambda: sturm.eigenvalues([1.0], [], "XY", 3),
        lambda: sturm.reconstruct([0.1]),
        lambda: sturm.spectrum([float("nan")], []),
    ):
        try:
            call()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
