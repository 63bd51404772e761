"""Smoke test for the fgm_risk extension module.

Build and install the wheel first:

    maturin build --release -m crates/python/Cargo.toml -o target/wheels
    pip install target/wheels/fgm_risk-*.whl
    python python/smoke_test.py
"""

import math

import fgm_risk as fr


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def six_risks():
    from math import exp, lgamma, log

    def shifted(pmf, n=400):
        w = [pmf(j) for j in range(n)]
        s = sum(w)
        return [x / s for x in w]

    def poisson(lam):
        return shifted(lambda j: exp(j * log(lam) - lam - lgamma(j + 1)))

    def negbin(r, p):
        return shifted(lambda j: exp(lgamma(j + r) - lgamma(r) - lgamma(j + 1) + r * log(p) + j * log(1 - p)))

    laws = [[1.0], shifted(lambda j: 0.5 ** (j + 1)), poisson(5), negbin(2, 0.25), poisson(10), negbin(3, 0.2)]
    return [fr.Marginal.mixed_erlang(0.5, w) for w in laws]


def main():
    # exchangeable exponential sum, closed form and general engine agree
    d = 10
    scheme = fr.BernoulliScheme.epd(d)
    fast = fr.exp_iid_fast(d, 0.1, scheme)
    general = fr.aggregate(fr.Portfolio([fr.Marginal.exponential(0.1)] * d, scheme))
    close(fast.tvar(0.99) / d, 25.05, 0.005)
    close(fast.cdf(120.0), general.cdf(120.0), 1e-9)
    close(general.mean(), 100.0, 1e-8)

    # six mixed Erlang risks under END: TVaR and its allocation
    end = fr.Portfolio(six_risks(), fr.BernoulliScheme.end(6))
    alloc = fr.Allocator(end)
    contrib = alloc.tvar_allocation(0.99)
    close(sum(contrib), 153.41, 0.005)
    close(sum(alloc.cmrs(80.0)), 80.0, 1e-8)

    # moments agree across representations
    pareto = [fr.Marginal.pareto_iv(1.0, 0.4, 5.0), fr.Marginal.weibull(0.5, 1.5), fr.Marginal.exponential(1.0)]
    port = fr.Portfolio(pareto, fr.BernoulliScheme.markov(3, 0.5))
    m2 = [fr.moment(port, 2, r) for r in ("stochastic_min", "stochastic_max", "natural_a1", "natural_a2")]
    assert max(m2) - min(m2) <= 1e-9 * m2[0], m2

    # copula parameters and admissibility
    cop = fr.FgmCopula(2, [([0, 1], 0.6)])
    close(cop.cdf([0.5, 0.5]), 0.25 * (1 + 0.6 * 0.25), 1e-15)
    try:
        fr.FgmCopula(2, [([0, 1], 1.5)])
    except fr.FgmError as e:
        assert "inadmissible" in str(e)
    else:
        raise AssertionError("theta = 1.5 accepted")

    # discretization bounds bracket the lattice estimates
    trio = fr.Portfolio([fr.Marginal.lognormal_from_moments(10.0, v) for v in (20.0, 50.0, 100.0)], fr.BernoulliScheme.markov(3, 0.5))
    lo, hi = fr.tvar_bounds(trio, 0.5, 0.9)
    close(lo, 59.83, 0.01)
    close(hi, 61.33, 0.01)

    # sampling is reproducible and has the right rank correlation
    biv = fr.Portfolio([fr.Marginal.exponential(1.0), fr.Marginal.exponential(2.0)], fr.BernoulliScheme.epd(2))
    rows = fr.sample(biv, 50_000, 3)
    assert rows[:5] == fr.sample(biv, 50_000, 3)[:5]
    rho = fr.spearman_rho([r[0] for r in rows], [r[1] for r in rows])
    assert abs(rho - 1.0 / 3.0) < 0.02, rho
    assert math.isfinite(fr.covariance(biv, 0, 1))

    print("fgm_risk smoke test passed")


if __name__ == "__main__":
    main()
