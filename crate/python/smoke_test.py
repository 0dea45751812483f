"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    pip install -e crates/python --no-build-isolation
"""

import cmath
import math

import superres_py as sr


def main():
    f_cut = 12
    support = sr.random_support(4, 2.0 / f_cut, seed=7)
    amps = [cmath.exp(1j * 0.9 * k) for k in range(len(support))]
    truth = sr.SpikeTrain(support, amps)
    assert len(truth) == 4
    assert truth.min_separation() >= 2.0 / f_cut

    y = sr.forward_measure(truth, f_cut)
    assert len(y) == 2 * f_cut + 1

    tv = sr.recover_tv(y, f_cut)
    assert tv.converged
    assert sr.check_exact_recovery(truth, tv.estimate, f_cut)
    assert abs(tv.objective - truth.tv_norm()) <= 1e-3 * truth.tv_norm()

    corrupted = list(y)
    corrupted[3] += 1.0
    eta = 1.0 / math.sqrt(len(y))
    mix = sr.demix(corrupted, f_cut, eta)
    assert sr.check_exact_recovery(truth, mix.estimate, f_cut)
    assert mix.spike_support == [3]

    second = sr.forward_measure(sr.SpikeTrain(support, [1j * a for a in amps]), f_cut)
    group = sr.recover_gtv([y, second], f_cut)
    assert len(group.support) == 4 and len(group.amplitudes[0]) == 2

    assert abs(sr.kernel(0.0, 1000.0) - 1.0) < 1e-12

    table = sr.run_phase("tv", 8, [1.6], trials=2, seed=1, spikes=2)
    assert table["rows"][0]["fraction"] == 1.0

    report = sr.certify(tau_min=1.26, eps=1e-4)
    assert report["verdict"] in ("PASS", "FAIL", "INCONCLUSIVE")
    assert report["constants"]["schur_bound"] < 1.0

    try:
        sr.SpikeTrain([0.1, 0.2], [1.0])
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch accepted")

    print("smoke test passed:", tv.estimate, "verdict at eps=1e-4:", report["verdict"])


if __name__ == "__main__":
    main()
