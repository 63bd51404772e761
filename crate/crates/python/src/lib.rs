//! Python bindings (`import fgm_risk`).

use fgm_core::aggregate_me::{self, AggregateOptions};
use fgm_core::allocation;
use fgm_core::bernoulli;
use fgm_core::copula;
use fgm_core::discrete_agg::{self, DiscretizationSpec, Method};
use fgm_core::marginals::{self, OrderStat, Truncation};
use fgm_core::mc_oracle;
use fgm_core::moments::{self, MomentOptions, Representation};
use fgm_core::portfolio::{self, Dependence};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(fgm_risk, FgmError, PyException, "Raised for invalid input or numerical failure.");

fn err(e: fgm_core::FgmError) -> PyErr {
    FgmError::new_err(e.to_string())
}

fn trunc(eps: f64) -> Truncation {
    Truncation { eps, ..Truncation::default() }
}

fn agg_opts(eps: f64) -> AggregateOptions {
    AggregateOptions { trunc: trunc(eps), ..AggregateOptions::default() }
}

fn order_stat(which: &str) -> PyResult<OrderStat> {
    match which {
        "min" => Ok(OrderStat::Min),
        "max" => Ok(OrderStat::Max),
        other => Err(FgmError::new_err(format!("expected 'min' or 'max', got '{other}'"))),
    }
}

#[pyclass(name = "BernoulliScheme", frozen, from_py_object, module = "fgm_risk")]
#[derive(Clone)]
struct PyScheme(bernoulli::BernoulliScheme);

#[pymethods]
impl PyScheme {
    #[staticmethod]
    fn independent(d: usize) -> PyResult<Self> {
        bernoulli::BernoulliScheme::independent(d).map(Self).map_err(err)
    }

    /// Extreme positive dependence (all indicators equal).
    #[staticmethod]
    fn epd(d: usize) -> PyResult<Self> {
        bernoulli::BernoulliScheme::comonotone(d).map(Self).map_err(err)
    }

    /// Extreme negative dependence within the exchangeable family.
    #[staticmethod]
    fn end(d: usize) -> PyResult<Self> {
        bernoulli::BernoulliScheme::end(d).map(Self).map_err(err)
    }

    #[staticmethod]
    fn markov(d: usize, alpha: f64) -> PyResult<Self> {
        bernoulli::BernoulliScheme::markov(d, alpha).map(Self).map_err(err)
    }

    #[staticmethod]
    fn exchangeable(d: usize, nd_pmf: Vec<f64>) -> PyResult<Self> {
        bernoulli::BernoulliScheme::exchangeable(d, nd_pmf).map(Self).map_err(err)
    }

    /// Masses indexed by bit patterns (bit k set when I_k = 1).
    #[staticmethod]
    fn dense(d: usize, masses: Vec<f64>) -> PyResult<Self> {
        bernoulli::BernoulliScheme::dense(d, masses).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    fn pmf(&self, i: Vec<bool>) -> PyResult<f64> {
        self.0.pmf(&i).map_err(err)
    }

    /// E[prod_k g_k(I_k)] for real pairs (g_k(0), g_k(1)).
    fn expected_product(&self, g: Vec<(f64, f64)>) -> PyResult<f64> {
        self.0.expected_product(&g).map_err(err)
    }

    /// Nonzero natural parameters as (0-based subset, theta) pairs.
    fn thetas(&self) -> PyResult<Vec<(Vec<usize>, f64)>> {
        let c = copula::theta_from_scheme(&self.0, None).map_err(err)?;
        Ok(c.thetas().filter(|(_, t)| t.abs() > 1e-15).collect())
    }

    fn __repr__(&self) -> String {
        format!("BernoulliScheme({}, d={})", self.0.label(), self.0.dim())
    }
}

#[pyclass(name = "FgmCopula", frozen, from_py_object, module = "fgm_risk")]
#[derive(Clone)]
struct PyCopula(copula::FgmCopula);

#[pymethods]
impl PyCopula {
    /// `thetas` lists (0-based subset, value) pairs; inadmissible sets raise.
    #[new]
    fn new(d: usize, thetas: Vec<(Vec<usize>, f64)>) -> PyResult<Self> {
        let c = copula::FgmCopula::new(d, thetas).map_err(err)?;
        c.check_admissible().map_err(err)?;
        Ok(Self(c))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn theta(&self, subset: Vec<usize>) -> f64 {
        self.0.theta(&subset)
    }

    fn cdf(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.cdf(&u).map_err(err)
    }

    fn to_scheme(&self) -> PyResult<PyScheme> {
        self.0.to_scheme().map(PyScheme).map_err(err)
    }
}

#[pyclass(name = "Marginal", frozen, from_py_object, module = "fgm_risk")]
#[derive(Clone)]
struct PyMarginal(marginals::Marginal);

#[pymethods]
impl PyMarginal {
    #[staticmethod]
    fn exponential(rate: f64) -> PyResult<Self> {
        marginals::Marginal::exponential(rate).map(Self).map_err(err)
    }

    /// Weights for shapes 1, 2, ...
    #[staticmethod]
    fn mixed_erlang(rate: f64, weights: Vec<f64>) -> PyResult<Self> {
        let me = marginals::MixedErlang::new(rate, weights).map_err(err)?;
        Ok(Self(marginals::Marginal::MixedErlang(me)))
    }

    #[staticmethod]
    #[pyo3(signature = (scale, inequality, shape, location = 0.0))]
    fn pareto_iv(scale: f64, inequality: f64, shape: f64, location: f64) -> PyResult<Self> {
        marginals::Marginal::pareto_iv(location, scale, inequality, shape).map(Self).map_err(err)
    }

    #[staticmethod]
    fn weibull(rate: f64, shape: f64) -> PyResult<Self> {
        marginals::Marginal::weibull(rate, shape).map(Self).map_err(err)
    }

    #[staticmethod]
    fn lognormal(mu: f64, sigma: f64) -> PyResult<Self> {
        marginals::Marginal::lognormal(mu, sigma).map(Self).map_err(err)
    }

    #[staticmethod]
    fn lognormal_from_moments(mean: f64, variance: f64) -> PyResult<Self> {
        marginals::Marginal::lognormal_from_moments(mean, variance).map(Self).map_err(err)
    }

    #[staticmethod]
    fn discrete(span: f64, masses: Vec<f64>) -> PyResult<Self> {
        let d = marginals::Discrete::new(span, masses).map_err(err)?;
        Ok(Self(marginals::Marginal::Discrete(d)))
    }

    #[getter]
    fn label(&self) -> &'static str {
        self.0.label()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn sf(&self, x: f64) -> f64 {
        self.0.sf(x)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        self.0.quantile(u).map_err(err)
    }

    fn mean(&self) -> PyResult<f64> {
        self.0.mean().map_err(err)
    }

    fn variance(&self) -> PyResult<f64> {
        self.0.variance().map_err(err)
    }

    fn moment(&self, k: u32) -> PyResult<f64> {
        self.0.moment(k).map_err(err)
    }

    /// Moment of the minimum or maximum of two iid copies.
    fn os_moment(&self, which: &str, k: u32) -> PyResult<f64> {
        self.0.os_moment(order_stat(which)?, k).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Marginal({:?})", self.0)
    }
}

#[pyclass(name = "Portfolio", frozen, from_py_object, module = "fgm_risk")]
#[derive(Clone)]
struct PyPortfolio(portfolio::Portfolio);

#[pymethods]
impl PyPortfolio {
    /// `dependence` is a BernoulliScheme or an FgmCopula.
    #[new]
    fn new(marginals: Vec<PyMarginal>, dependence: &Bound<'_, PyAny>) -> PyResult<Self> {
        let dep = if let Ok(s) = dependence.extract::<PyScheme>() {
            Dependence::Scheme(s.0)
        } else if let Ok(c) = dependence.extract::<PyCopula>() {
            Dependence::Copula(c.0)
        } else {
            return Err(FgmError::new_err("dependence must be a BernoulliScheme or an FgmCopula"));
        };
        let ms = marginals.into_iter().map(|m| m.0).collect();
        portfolio::Portfolio::new(ms, dep).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn marginals(&self) -> Vec<PyMarginal> {
        self.0.marginals().iter().cloned().map(PyMarginal).collect()
    }
}

/// Aggregate law of S as a mixed Erlang distribution.
#[pyclass(name = "AggregateLaw", frozen, module = "fgm_risk")]
struct PyAggregate(aggregate_me::AggregateME);

#[pymethods]
impl PyAggregate {
    #[getter]
    fn rate(&self) -> f64 {
        self.0.rate()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn var(&self, kappa: f64) -> PyResult<f64> {
        self.0.var_risk(kappa).map_err(err)
    }

    fn tvar(&self, kappa: f64) -> PyResult<f64> {
        self.0.tvar(kappa).map_err(err)
    }
}

/// Lattice law with masses at 0, h, 2h, ...
#[pyclass(name = "LatticeLaw", frozen, module = "fgm_risk")]
struct PyLattice(marginals::Discrete);

#[pymethods]
impl PyLattice {
    #[getter]
    fn span(&self) -> f64 {
        self.0.span()
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.0.masses().to_vec()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn var(&self, kappa: f64) -> PyResult<f64> {
        self.0.var(kappa).map_err(err)
    }

    fn tvar(&self, kappa: f64) -> PyResult<f64> {
        self.0.tvar(kappa).map_err(err)
    }
}

#[pyclass(name = "Allocator", frozen, module = "fgm_risk")]
struct PyAllocator(allocation::Allocator);

#[pymethods]
impl PyAllocator {
    #[new]
    #[pyo3(signature = (portfolio, trunc_eps = 1e-12))]
    fn new(portfolio: &PyPortfolio, trunc_eps: f64) -> PyResult<Self> {
        allocation::Allocator::new(&portfolio.0, agg_opts(trunc_eps)).map(Self).map_err(err)
    }

    /// E[X_k | S = s] for every risk.
    fn cmrs(&self, s: f64) -> PyResult<Vec<f64>> {
        Ok(self.0.cmrs(s).map_err(err)?.contributions)
    }

    /// TVaR contributions at level kappa.
    fn tvar_allocation(&self, kappa: f64) -> PyResult<Vec<f64>> {
        Ok(self.0.tvar_allocation(kappa).map_err(err)?.contributions)
    }

    fn density(&self, s: f64) -> f64 {
        self.0.density(s)
    }
}

#[pyfunction]
#[pyo3(signature = (portfolio, trunc_eps = 1e-12))]
fn aggregate(portfolio: &PyPortfolio, trunc_eps: f64) -> PyResult<PyAggregate> {
    aggregate_me::aggregate(&portfolio.0, agg_opts(trunc_eps)).map(PyAggregate).map_err(err)
}

/// Sum of `d` exponentials with a common rate, through the closed form.
#[pyfunction]
#[pyo3(signature = (d, rate, scheme, trunc_eps = 1e-12))]
fn exp_iid_fast(d: usize, rate: f64, scheme: &PyScheme, trunc_eps: f64) -> PyResult<PyAggregate> {
    aggregate_me::exp_iid_fast(d, rate, &scheme.0, trunc(trunc_eps)).map(PyAggregate).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (portfolio, h, method = "lower", trunc_eps = 1e-12))]
fn aggregate_discretized(portfolio: &PyPortfolio, h: f64, method: &str, trunc_eps: f64) -> PyResult<PyLattice> {
    let spec = DiscretizationSpec { method: method.parse::<Method>().map_err(err)?, span: h };
    discrete_agg::aggregate_discretized(&portfolio.0, spec, trunc(trunc_eps)).map(PyLattice).map_err(err)
}

/// (TVaR from the upper discretization, TVaR from the lower one).
#[pyfunction]
#[pyo3(signature = (portfolio, h, kappa, trunc_eps = 1e-12))]
fn tvar_bounds(portfolio: &PyPortfolio, h: f64, kappa: f64, trunc_eps: f64) -> PyResult<(f64, f64)> {
    discrete_agg::tvar_sandwich(&portfolio.0, h, kappa, trunc(trunc_eps)).map_err(err)
}

/// Raw moment E[S^order]; `representation` is one of stochastic_min,
/// stochastic_max, natural_a1, natural_a2.
#[pyfunction]
#[pyo3(signature = (portfolio, order, representation = "stochastic_min"))]
fn moment(portfolio: &PyPortfolio, order: u32, representation: &str) -> PyResult<f64> {
    let r = match representation {
        "stochastic_min" => Representation::StochasticMin,
        "stochastic_max" => Representation::StochasticMax,
        "natural_a1" => Representation::NaturalA1,
        "natural_a2" => Representation::NaturalA2,
        other => return Err(FgmError::new_err(format!("unknown representation '{other}'"))),
    };
    moments::aggregate_moment(&portfolio.0, order, r, MomentOptions::default()).map_err(err)
}

/// Cov(X_j, X_k) with 0-based indices.
#[pyfunction]
fn covariance(portfolio: &PyPortfolio, j: usize, k: usize) -> PyResult<f64> {
    moments::covariance(&portfolio.0, j, k).map_err(err)
}

/// `n` rows of the risks, seeded and reproducible.
#[pyfunction]
fn sample(portfolio: &PyPortfolio, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let b = mc_oracle::sample_portfolio(&portfolio.0, n, seed).map_err(err)?;
    Ok(b.rows().map(<[f64]>::to_vec).collect())
}

#[pyfunction]
fn spearman_rho(x: Vec<f64>, y: Vec<f64>) -> f64 {
    mc_oracle::spearman_rho(&x, &y)
}

#[pyfunction]
fn kendall_tau(x: Vec<f64>, y: Vec<f64>) -> f64 {
    mc_oracle::kendall_tau(&x, &y)
}

#[pymodule]
fn fgm_risk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FgmError", m.py().get_type::<FgmError>())?;
    m.add_class::<PyScheme>()?;
    m.add_class::<PyCopula>()?;
    m.add_class::<PyMarginal>()?;
    m.add_class::<PyPortfolio>()?;
    m.add_class::<PyAggregate>()?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyAllocator>()?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(exp_iid_fast, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_discretized, m)?)?;
    m.add_function(wrap_pyfunction!(tvar_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(moment, m)?)?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(spearman_rho, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    Ok(())
}
