"""Smoke test for the `renyi` extension module.

Build and install it first, for example with
    pip install maturin && maturin develop -m crates/python/Cargo.toml
then run `python python/smoke_test.py`.
"""

import math

import renyi


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    mu, nu = renyi.coefficients(2.0, 1)
    assert (mu, nu) == (3.0, 3.0)

    # Barenblatt profile: analytic Fisher value and the sharp constant.
    spec = renyi.Barenblatt(2.0, 1)
    assert close(spec.fisher(), 4.0, 1e-12)
    gamma = renyi.gamma_const(2.0, 1)
    assert close(spec.upsilon(), gamma, 1e-10)

    # Quadrature on a fine grid reproduces the constant.
    grid = renyi.Grid.cartesian(4096, 3.0)
    field = renyi.DensityField.initial(grid, "barenblatt", 2.0, 1.0)
    assert close(field.mass(), 1.0, 1e-12)
    assert close(field.upsilon(2.0), gamma, 1e-4)

    # Dilation invariance of Upsilon.
    mix = renyi.DensityField.initial(renyi.Grid.cartesian(1024, 8.0), "mixture", 1.5, 0.0, seed=3)
    assert close(mix.rescale(2.0).upsilon(1.5), mix.upsilon(1.5), 1e-6)

    # A short flow from mixture data: N_p is concave, Upsilon decreases.
    run = renyi.evolve(mix, 1.5, 0.0, 0.2, 17)
    series = run.series()
    assert len(series) == 17 and len(run.fields()) == 17
    assert abs(run.mass_drift) < 1e-12
    verdicts = renyi.verify(series, 1.5, 1, ["concavity", "upsilon", "isoperimetric"])
    assert all(v.passed for v in verdicts), verdicts

    # Errors carry the module name.
    try:
        renyi.gamma_const(0.2, 3)
    except ValueError as e:
        assert "analytic_profiles" in str(e)
    else:
        raise AssertionError("invalid exponent accepted")
    try:
        renyi.verify(series[:2], 1.5, 1, ["concavity"])
    except renyi.InsufficientDataError:
        pass
    else:
        raise AssertionError("short series accepted")

    # Sharp Sobolev constant in three dimensions.
    assert close(renyi.sobolev_constant(3), 3.0 * (math.pi / 2.0) ** (4.0 / 3.0), 1e-12)
    print("smoke test passed")


if __name__ == "__main__":
    main()
