//! Python bindings for the clustercache analytics and allocators.

use clustercache::content::{hit_ratio, select_top_k, ContentCatalog};
use clustercache::effcap::{self, EffCapEngine, Quantizer};
use clustercache::energy::{self, PowerModel};
use clustercache::games::{self, ClusterInstance, InstanceSpec, NestedConfig, SuboptimalConfig};
use clustercache::{qos, simkit, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Parameter(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "RadioParams", from_py_object)]
#[derive(Clone)]
struct PyRadioParams {
    inner: effcap::RadioParams,
}

#[pymethods]
impl PyRadioParams {
    #[new]
    #[pyo3(signature = (snr=1.0, pathloss_exponent=4.0, noise=0.0, bandwidth=1e3, slot=1e-3, spectral_efficiency=1.0))]
    fn new(
        snr: f64,
        pathloss_exponent: f64,
        noise: f64,
        bandwidth: f64,
        slot: f64,
        spectral_efficiency: f64,
    ) -> PyResult<Self> {
        let inner = effcap::RadioParams {
            snr,
            pathloss_exponent,
            noise,
            bandwidth,
            slot,
            spectral_efficiency,
            ..Default::default()
        };
        inner.validate().map_err(to_py)?;
        Ok(PyRadioParams { inner })
    }

    #[getter]
    fn pathloss_exponent(&self) -> f64 {
        self.inner.pathloss_exponent
    }

    #[getter]
    fn snr(&self) -> f64 {
        self.inner.snr
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Effective capacity evaluator with a fixed SINR quantizer.
#[pyclass(name = "EffCapEngine")]
struct PyEngine {
    inner: EffCapEngine,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (params=None, intervals=65536, gamma_min=1e-12, gamma_max=1e12))]
    fn new(
        params: Option<PyRadioParams>,
        intervals: usize,
        gamma_min: f64,
        gamma_max: f64,
    ) -> PyResult<Self> {
        let params = params.map(|p| p.inner).unwrap_or_default();
        let q = Quantizer::geometric(intervals, gamma_min, gamma_max).map_err(to_py)?;
        Ok(PyEngine {
            inner: EffCapEngine::new(params, q).map_err(to_py)?,
        })
    }

    fn eff_cap_user(&self, theta: f64, d_m: f64, lambda_r: f64) -> PyResult<f64> {
        self.inner
            .eff_cap_user_value(theta, d_m, lambda_r)
            .map_err(to_py)
    }

    fn outage(&self, gamma_n: f64, d_m: f64, lambda_r: f64) -> PyResult<f64> {
        self.inner.outage(gamma_n, d_m, lambda_r).map_err(to_py)
    }

    /// Cluster-average effective capacity and caching gain with a top-K cache.
    #[pyo3(signature = (contents, zipf_exponent, cache_size, lambda_r, theta_cluster, theta_cloud))]
    fn cluster_eff_cap(
        &self,
        contents: usize,
        zipf_exponent: f64,
        cache_size: usize,
        lambda_r: f64,
        theta_cluster: f64,
        theta_cloud: f64,
    ) -> PyResult<(f64, f64, f64)> {
        let catalog = ContentCatalog::zipf(contents, zipf_exponent, 1.0).map_err(to_py)?;
        let cache = select_top_k(&catalog, cache_size).map_err(to_py)?;
        let p_hit = hit_ratio(&cache, &catalog).map_err(to_py)?;
        let profile = qos::QosProfile::uniform(contents, theta_cluster, theta_cloud, 1.0, 1.0)
            .map_err(to_py)?;
        let split: Vec<f64> = catalog.popularity().iter().map(|p| p * lambda_r).collect();
        let values =
            effcap::content_values(&self.inner, &catalog, &profile, &split, Default::default())
                .map_err(to_py)?;
        let c = effcap::ClusterEffCap::from_values(values, p_hit);
        Ok((c.value, c.gain, p_hit))
    }
}

#[pyclass(name = "Allocation", get_all)]
struct PyAllocation {
    rru: Vec<Vec<usize>>,
    rrh: Vec<Vec<Vec<usize>>>,
    welfare: f64,
    effective_capacity: f64,
    active: Vec<bool>,
    steps: usize,
}

impl From<games::Allocation> for PyAllocation {
    fn from(a: games::Allocation) -> Self {
        PyAllocation {
            rru: a.rru.coalitions().to_vec(),
            rrh: a
                .rrh
                .iter()
                .map(|p| {
                    p.coalitions
                        .iter()
                        .map(|c| c.iter().copied().collect())
                        .collect()
                })
                .collect(),
            welfare: a.welfare,
            effective_capacity: a.effective_capacity,
            active: a.active,
            steps: a.log.len(),
        }
    }
}

#[pymethods]
impl PyAllocation {
    fn __repr__(&self) -> String {
        format!(
            "Allocation(rru={:?}, welfare={:.6})",
            self.rru, self.welfare
        )
    }
}

/// A random cluster: RRHs, users, catalog and cache.
#[pyclass(name = "ClusterInstance")]
struct PyInstance {
    inner: ClusterInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (seed, rrhs=6, users=12, contents=3, cache_size=1, cost_coeff=1e-4, params=None))]
    fn new(
        seed: u64,
        rrhs: usize,
        users: usize,
        contents: usize,
        cache_size: usize,
        cost_coeff: f64,
        params: Option<PyRadioParams>,
    ) -> PyResult<Self> {
        let spec = InstanceSpec {
            rrhs,
            users,
            contents,
            cache_size,
            cost_coeff,
            ..Default::default()
        };
        let params = params.map(|p| p.inner).unwrap_or_default();
        let inner =
            ClusterInstance::random(&spec, params, PowerModel::default(), seed).map_err(to_py)?;
        Ok(PyInstance { inner })
    }

    #[getter]
    fn rrh_count(&self) -> usize {
        self.inner.rrh_count()
    }

    #[getter]
    fn content_count(&self) -> usize {
        self.inner.content_count()
    }

    fn nested(&self) -> PyResult<PyAllocation> {
        Ok(
            games::nested_allocate(&self.inner, None, NestedConfig::default())
                .map_err(to_py)?
                .into(),
        )
    }

    #[pyo3(signature = (seed=0))]
    fn suboptimal(&self, seed: u64) -> PyResult<PyAllocation> {
        let config = SuboptimalConfig { method: None, seed };
        Ok(games::suboptimal_allocate(&self.inner, None, config)
            .map_err(to_py)?
            .into())
    }

    fn orthogonal(&self) -> PyResult<PyAllocation> {
        Ok(games::orthogonal_allocate(&self.inner)
            .map_err(to_py)?
            .into())
    }

    fn full_reuse(&self) -> PyResult<PyAllocation> {
        Ok(games::full_reuse_allocate(&self.inner)
            .map_err(to_py)?
            .into())
    }

    /// Best welfare over every RRU partition (small instances only).
    fn exhaustive_optimum(&self) -> PyResult<(f64, Vec<Vec<usize>>)> {
        let (w, p) = simkit::exhaustive_optimum(&self.inner).map_err(to_py)?;
        Ok((w, p.coalitions().to_vec()))
    }

    /// Exact Shapley values per content and RRH.
    fn shapley(&self) -> PyResult<Vec<Vec<f64>>> {
        let t =
            games::shapley_values(&self.inner, games::ShapleyMethod::Exact, 0).map_err(to_py)?;
        Ok(t.values)
    }
}

#[pyfunction]
fn a_beta(beta: f64) -> PyResult<f64> {
    effcap::a_beta(beta).map_err(to_py)
}

#[pyfunction]
fn l_func_limited(gamma_n: f64, q_l: f64, beta: f64) -> PyResult<f64> {
    effcap::l_func_limited(gamma_n, q_l, beta).map_err(to_py)
}

#[pyfunction]
fn power_delta(cache_size: usize, p_hit: f64) -> f64 {
    energy::power_delta(cache_size, p_hit, &PowerModel::default())
}

#[pyfunction]
fn min_backhaul_rate(
    theta_cluster: f64,
    theta_cloud: f64,
    object_bits: f64,
    delay_budget: f64,
) -> PyResult<f64> {
    qos::min_backhaul_rate(theta_cluster, theta_cloud, object_bits, delay_budget).map_err(to_py)
}

/// Monte Carlo effective capacity: `(mean, std_error)`.
#[pyfunction]
#[pyo3(signature = (theta, d_m, lambda_r, trials, seed, params=None))]
fn mc_eff_cap(
    py: Python<'_>,
    theta: f64,
    d_m: f64,
    lambda_r: f64,
    trials: usize,
    seed: u64,
    params: Option<PyRadioParams>,
) -> PyResult<(f64, f64)> {
    let params = params.map(|p| p.inner).unwrap_or_default();
    let est = py
        .detach(|| simkit::mc_eff_cap(theta, d_m, lambda_r, &params, trials, seed))
        .map_err(to_py)?;
    Ok((est.mean, est.std_error))
}

#[pymodule]
fn clustercache_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRadioParams>()?;
    m.add_class::<PyEngine>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyAllocation>()?;
    m.add_function(wrap_pyfunction!(a_beta, m)?)?;
    m.add_function(wrap_pyfunction!(l_func_limited, m)?)?;
    m.add_function(wrap_pyfunction!(power_delta, m)?)?;
    m.add_function(wrap_pyfunction!(min_backhaul_rate, m)?)?;
    m.add_function(wrap_pyfunction!(mc_eff_cap, m)?)?;
    Ok(())
}
