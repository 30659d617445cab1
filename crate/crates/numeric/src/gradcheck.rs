//! Central finite-difference gradient verification.

use crate::graph::{Graph, Var};
use crate::params::{ParamId, ParameterStore};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Finite-difference step.
    pub h: f64,
    /// Maximum accepted relative error.
    pub tol: f64,
    /// Denominator floor so entries with near-zero gradient are compared
    /// absolutely instead of relatively.
    pub floor: f64,
    /// Check at most this many entries per parameter (evenly strided).
    pub max_entries_per_param: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            h: 1e-5,
            tol: 1e-4,
            floor: 1e-5,
            max_entries_per_param: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<(String, usize, f64, f64)>,
    pub entries_checked: usize,
    pub passed: bool,
}

/// Compares analytic gradients of the scalar built by `f` against central
/// differences `(f(θ+h) - f(θ-h)) / 2h` for every entry of `params`.
pub fn grad_check<F>(
    store: &mut ParameterStore,
    params: &[ParamId],
    cfg: &GradCheckConfig,
    f: F,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<Var>,
{
    let analytic = {
        let mut g = Graph::new(store);
        let loss = f(&mut g)?;
        g.backward(loss)?
    };
    let eval = |store: &ParameterStore| -> Result<f64> {
        let mut g = Graph::new(store);
        let loss = f(&mut g)?;
        Ok(g.value(loss).item())
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: 0,
        passed: true,
    };
    for &id in params {
        let n = store.value(id).len();
        let stride = (n / cfg.max_entries_per_param.max(1)).max(1);
        for i in (0..n).step_by(stride) {
            let orig = store.value(id).data()[i];
            store.get_mut(id).value.data_mut()[i] = orig + cfg.h;
            let plus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = orig - cfg.h;
            let minus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * cfg.h);
            let a = analytic.get(id).map_or(0.0, |g| g.data()[i]);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(cfg.floor);
            report.entries_checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((store.get(id).name.clone(), i, a, numeric));
            }
        }
    }
    report.passed = report.max_rel_error < cfg.tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;

    #[test]
    fn quadratic_at_three() {
        let mut store = ParameterStore::new();
        let x = store.add("x", Tensor::scalar(3.0), false);
        let f = |g: &mut Graph<'_>| {
            let v = g.param(x);
            let sq = g.matmul(v, v)?;
            Ok(g.sum(sq))
        };
        let analytic = {
            let mut g = Graph::new(&store);
            let l = f(&mut g).unwrap();
            g.backward(l).unwrap().get(x).unwrap().item()
        };
        assert_eq!(analytic, 6.0);
        let r = grad_check(&mut store, &[x], &GradCheckConfig::default(), f).unwrap();
        let (_, _, a, n) = r.worst.clone().unwrap();
        assert_eq!(a, 6.0);
        assert!((n - 6.0).abs() < 1e-6);
        assert!(r.passed);
    }

    #[test]
    fn constant_function_has_zero_gradients() {
        let mut store = ParameterStore::new();
        let x = store.add("x", Tensor::row_vector(vec![1.0, 2.0]), false);
        let r = grad_check(&mut store, &[x], &GradCheckConfig::default(), |g| {
            let c = g.input(Tensor::scalar(4.2));
            Ok(g.sum(c))
        })
        .unwrap();
        let (_, _, a, n) = r.worst.unwrap();
        assert_eq!((a, n), (0.0, 0.0));
        assert_eq!(r.max_rel_error, 0.0);
    }
}
