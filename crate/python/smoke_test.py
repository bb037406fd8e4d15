"""Smoke test for the resetwalk extension module. Run after `maturin develop`."""

import math

import resetwalk as rw


def main():
    p = rw.Params(2.0, 1.0, 2.0, 1.0)
    ex = rw.tail_exponents(p)
    assert abs(ex["alpha_plus"] - 2.0) < 1e-12 and abs(ex["alpha_minus"] - 0.5) < 1e-12, ex
    assert abs(ex["y_critical"] - 2 ** (2 / 3)) < 1e-12

    dens, atoms = rw.stationary_density(p, [0.5, 1.0, 2.0])
    assert atoms == [] and all(d > 0 for d in dens)
    assert abs(rw.stationary_moments(p, 1) - 1.5) < 1e-12

    q = rw.Params(1.0, 1.0, 1.0, 1.0)
    t = rw.mean_exit_time(q, 1.0, 0.0)
    assert abs(t - 0.945386534897984) < 1e-12
    assert abs(rw.survival_hat(q, 1.0, 0.0, 0.0) - t) < 1e-12
    assert abs(rw.met_limit(q, 1.0, 0.0, "infinite_reset") - math.e) < 1e-12
    value, se = rw.met_estimate(q, 1.0, 0.0, 20000, 1)
    assert abs(value - t) < 4 * se, (value, se)

    d0 = rw.Params(0.0, 1.0, 1.0, 1.0)
    cont, atoms = rw.propagator(d0, [0.5, 1.5], 1.0, 0.0)
    assert len(atoms) == 1 and atoms[0][0] == 0.0
    assert abs(rw.propagator_numeric(d0, 0.5, 1.0, 0.0) - cont[0]) < 1e-6

    events = rw.simulate_events(p, 5.0, 3)
    assert events == rw.simulate_events(p, 5.0, 3)
    assert all(k in ("jump", "reset") for _, k, _ in events)

    try:
        rw.Params(1.0, 1.0, -1.0, 1.0)
    except rw.ResetwalkError:
        pass
    else:
        raise AssertionError("negative reset rate accepted")

    results = rw.run_checks(["cke", "exponents"], n=1000)
    assert all(ok for _, ok, _ in results), results
    print("smoke test passed")


if __name__ == "__main__":
    main()
