"""Smoke test for the qwres Python extension.

Build and install first:  pip install ./crates/py  (or maturin develop -m crates/py/Cargo.toml)
"""

import cmath
import math

import qwres


def main():
    free = qwres.Model("free")
    assert free.active_sites() == []
    assert abs(free.det(0.3 - 0.2j) - 1) < 1e-14

    m = qwres.Model("one-corner", eps=0.3)
    roots = m.resonances()
    assert sum(mult for _, mult, _ in roots) == 16
    expect = math.log(math.sqrt(1 - 0.3**2)) / 8
    for kappa, _, kind in roots:
        assert abs(m.det(kappa)) < 1e-8
        if kind == "resonance":
            assert abs(kappa.imag - expect) < 1e-9
    assert m.winding(0.1, 0.1 + 2 * math.pi, -1.0, 0.5) == 16

    state = m.evolve(200, start=(0, 0), chirality="up")
    norm = sum(abs(z) ** 2 for _, z in state)
    assert abs(norm - 1) < 1e-12

    lines = qwres.Model("corner").elastic_spectrum()
    assert len(lines) == 8

    clusters = qwres.barrier_spectrum(1)
    assert [n for _, n in clusters] == [10, 2, 10, 2]

    modes = qwres.corner_quantization("one-corner", eps=0.3)
    assert sum(kind == "eigenvalue" for _, _, kind in modes) == 8

    c = 0.5 * cmath.exp(0.7j)
    for k in qwres.qc2_roots(c, 8):
        assert abs(cmath.exp(-8j * k) - c) < 1e-12

    try:
        qwres.Model("one-corner", eps=2.0)
    except qwres.QwresError:
        pass
    else:
        raise AssertionError("eps = 2 should be rejected")

    print("qwres smoke test passed")


if __name__ == "__main__":
    main()
