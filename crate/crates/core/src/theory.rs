//! Approximation error of label sets, the combined-label error curve
//! `Y(α) = α²·Y_pseudo + (1−α)²·Y_vanilla`, its minimizer, and Monte Carlo
//! checks of the decomposition over repeated clean-set draws.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{generate_corpus, inject_noise, NoiseSpec};
use crate::dialogue::{Corpus, Ontology};
use crate::exec::{self, Execution};
use crate::rng;
use crate::{Error, Result};

/// Label vectors for every site (sample × slot), flattened.
pub type LabelTable = Vec<Vec<f64>>;

/// Mean squared distance between label vectors and true one-hots,
/// averaged over draws and sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxError {
    pub value: f64,
}

fn sq_dist_to_one_hot(v: &[f64], t: usize) -> f64 {
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let d = x - if k == t { 1.0 } else { 0.0 };
            d * d
        })
        .sum()
}

pub fn approx_error(draws: &[LabelTable], truth: &[usize]) -> Result<ApproxError> {
    if draws.is_empty() {
        return Err(Error::Config("approx_error needs at least one draw".into()));
    }
    if truth.is_empty() {
        return Err(Error::Schema("no sites".into()));
    }
    let mut total = 0.0;
    for d in draws {
        if d.len() != truth.len() {
            return Err(Error::Schema(format!("draw covers {} sites, truth {}", d.len(), truth.len())));
        }
        for (v, &t) in d.iter().zip(truth) {
            if t >= v.len() {
                return Err(Error::Schema(format!("true index {t} outside a {}-vector", v.len())));
            }
            total += sq_dist_to_one_hot(v, t);
        }
    }
    Ok(ApproxError {
        value: total / (draws.len() * truth.len()) as f64,
    })
}

fn check_nonneg(y: f64, name: &str) -> Result<()> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::Config(format!("{name} = {y} must be a finite non-negative error")));
    }
    Ok(())
}

/// `α²·Y_pseudo + (1−α)²·Y_vanilla`.
pub fn combined_error(y_vanilla: f64, y_pseudo: f64, alpha: f64) -> Result<f64> {
    check_nonneg(y_vanilla, "Y_vanilla")?;
    check_nonneg(y_pseudo, "Y_pseudo")?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(alpha * alpha * y_pseudo + (1.0 - alpha) * (1.0 - alpha) * y_vanilla)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalAlpha {
    pub alpha: f64,
    pub y_min: f64,
    /// Both errors are zero, so every α is optimal.
    pub degenerate: bool,
}

/// `α* = Y_v/(Y_v+Y_p)`, `Y* = Y_v·Y_p/(Y_v+Y_p)`.
pub fn optimal_alpha(y_vanilla: f64, y_pseudo: f64) -> Result<OptimalAlpha> {
    check_nonneg(y_vanilla, "Y_vanilla")?;
    check_nonneg(y_pseudo, "Y_pseudo")?;
    let s = y_vanilla + y_pseudo;
    if s == 0.0 {
        return Ok(OptimalAlpha {
            alpha: 0.5,
            y_min: 0.0,
            degenerate: true,
        });
    }
    Ok(OptimalAlpha {
        alpha: y_vanilla / s,
        y_min: y_vanilla * y_pseudo / s,
        degenerate: false,
    })
}

/// Fixed sites: true and vanilla indices plus candidate counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Sites {
    pub truth: Vec<usize>,
    pub vanilla: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl Sites {
    /// One site per (dialogue, turn, slot), in corpus order.
    pub fn from_corpora(truth: &Corpus, vanilla: &Corpus) -> Result<Self> {
        if truth.dialogues.len() != vanilla.dialogues.len() {
            return Err(Error::Schema("corpora differ in dialogues".into()));
        }
        let o: &Ontology = &truth.ontology;
        let mut s = Self {
            truth: Vec::new(),
            vanilla: Vec::new(),
            sizes: Vec::new(),
        };
        for (a, b) in truth.dialogues.iter().zip(&vanilla.dialogues) {
            if a.id != b.id || a.turns.len() != b.turns.len() {
                return Err(Error::Schema(format!("dialogue {} misaligned", a.id)));
            }
            for (ta, tb) in a.turns.iter().zip(&b.turns) {
                for slot in 0..o.num_slots() {
                    s.truth.push(ta.state[slot]);
                    s.vanilla.push(tb.state[slot]);
                    s.sizes.push(o.num_candidates(slot));
                }
            }
        }
        if s.truth.is_empty() {
            return Err(Error::Schema("no sites".into()));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    /// Vanilla approximation error `mean ‖ṽ − v‖²` (2 × the disagreement rate).
    pub fn vanilla_error(&self) -> f64 {
        let wrong = self.truth.iter().zip(&self.vanilla).filter(|(a, b)| a != b).count();
        2.0 * wrong as f64 / self.len() as f64
    }
}

/// Parametric pseudo-label samplers standing in for auxiliary retraining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Proxy {
    /// `v̆ = e_t + b·(e_w − e_t) + σ·s·(e_i − e_j)` with a fixed wrong index
    /// `w` per site, a random pair `i ≠ j` and a random sign `s`. Independent
    /// of the vanilla labels; zero bias when `b = 0`.
    Independent { bias: f64, sigma: f64 },
    /// The independent sampler plus `c·(ṽ − v)` with `c ~ N(coupling, coupling_sd²)`
    /// per site and draw, so pseudo errors follow vanilla errors.
    Correlated { sigma: f64, coupling: f64, coupling_sd: f64 },
    /// One-hot labels, wrong (uniformly among the others) with probability `q`.
    Flip { q: f64 },
}

impl Proxy {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Proxy::Independent { bias, sigma } => bias >= 0.0 && sigma >= 0.0,
            Proxy::Correlated { sigma, coupling_sd, .. } => sigma >= 0.0 && coupling_sd >= 0.0,
            Proxy::Flip { q } => (0.0..=1.0).contains(&q),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid proxy {self:?}")))
        }
    }

    fn sample<R: Rng>(&self, r: &mut R, t: usize, vanilla: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; k];
        v[t] = 1.0;
        if k < 2 {
            return v;
        }
        let perturb = |v: &mut [f64], r: &mut R, sigma: f64| {
            let i = r.gen_range(0..k);
            let j = (i + r.gen_range(1..k)) % k;
            let s = if r.gen::<bool>() { sigma } else { -sigma };
            v[i] += s;
            v[j] -= s;
        };
        match *self {
            Proxy::Independent { bias, sigma } => {
                let w = (t + 1) % k;
                v[t] -= bias;
                v[w] += bias;
                perturb(&mut v, r, sigma);
            }
            Proxy::Correlated { sigma, coupling, coupling_sd } => {
                perturb(&mut v, r, sigma);
                let c = coupling + coupling_sd * r.sample::<f64, _>(StandardNormal);
                if vanilla != t {
                    v[vanilla] += c;
                    v[t] -= c;
                }
            }
            Proxy::Flip { q } => {
                if r.gen::<f64>() < q {
                    let w = (t + r.gen_range(1..k)) % k;
                    v[t] = 0.0;
                    v[w] = 1.0;
                }
            }
        }
        v
    }
}

/// Produces the pseudo-label table of draw `m` (one vector per site).
pub trait PseudoSource: Sync {
    fn draw(&self, m: usize, sites: &Sites) -> Result<LabelTable>;
}

/// A [`Proxy`] driven by per-draw random streams.
#[derive(Debug, Clone, Copy)]
pub struct ProxySource {
    pub proxy: Proxy,
    pub seed: u64,
}

impl PseudoSource for ProxySource {
    fn draw(&self, m: usize, sites: &Sites) -> Result<LabelTable> {
        let mut r = rng::stream_indexed(self.seed, "theorem-draw", m as u64);
        Ok((0..sites.len())
            .map(|i| self.proxy.sample(&mut r, sites.truth[i], sites.vanilla[i], sites.sizes[i]))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    /// Mean over draws of `Y_m(α)`, computed directly from combined vectors.
    pub empirical: f64,
    pub fitted: f64,
    /// Monte Carlo standard error of `empirical`.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub draws: usize,
    pub sites: usize,
    pub y_vanilla: f64,
    pub y_pseudo: f64,
    pub curve: Vec<CurvePoint>,
    /// Largest `|empirical − fitted|` on the grid.
    pub max_deviation: f64,
    /// Largest `|empirical − fitted| / stderr` over points with positive stderr.
    pub max_deviation_in_stderr: f64,
    /// Every point satisfies `|empirical − fitted| ≤ 3·stderr` (plus 1e-12).
    pub within_three_stderr: bool,
    pub alpha_hat: f64,
    pub alpha_star: f64,
    pub y_star: f64,
    pub degenerate: bool,
    pub grid_step: f64,
    pub argmin_within_grid_step: bool,
    pub empirical_min: f64,
    /// `min_α Y(α) < min(Y_v, Y_p)` on the empirical curve; `None` unless
    /// both errors are positive.
    pub strict_inequality: Option<bool>,
    /// `mean_sites ‖mean_draws v̆ − v‖²`.
    pub bias_sq: f64,
    /// `Y_pseudo − bias_sq`.
    pub variance: f64,
    /// Mean over draws and sites of `(ṽ − v)ᵀ(v̆ − v)`.
    pub cross_term: f64,
    pub cross_term_stderr: f64,
}

impl TheoremReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `alpha,empirical,fitted,stderr`.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("alpha,empirical,fitted,stderr\n");
        for p in &self.curve {
            out.push_str(&format!("{},{},{},{}\n", p.alpha, p.empirical, p.fitted, p.stderr));
        }
        out
    }
}

/// Per-draw sufficient statistics.
struct DrawStats {
    y_alpha: Vec<f64>,
    cross: f64,
    pseudo_sum: LabelTable,
}

fn draw_stats(sites: &Sites, pseudo: &LabelTable, grid: &[f64]) -> Result<DrawStats> {
    if pseudo.len() != sites.len() {
        return Err(Error::Schema(format!("pseudo draw covers {} of {} sites", pseudo.len(), sites.len())));
    }
    let n = sites.len() as f64;
    let mut y_alpha = vec![0.0; grid.len()];
    let mut cross = 0.0;
    for (i, p) in pseudo.iter().enumerate() {
        let (t, v, k) = (sites.truth[i], sites.vanilla[i], sites.sizes[i]);
        if p.len() != k {
            return Err(Error::Schema(format!("site {i}: pseudo vector of length {} for {k} candidates", p.len())));
        }
        for (a, y) in grid.iter().zip(y_alpha.iter_mut()) {
            let mut s = 0.0;
            for (c, &pc) in p.iter().enumerate() {
                let van = if c == v { 1.0 } else { 0.0 };
                let tru = if c == t { 1.0 } else { 0.0 };
                let d = a * pc + (1.0 - a) * van - tru;
                s += d * d;
            }
            *y += s;
        }
        if v != t {
            // (ṽ − v) has +1 at v and −1 at t.
            cross += (p[v] - 0.0) - (p[t] - 1.0);
        }
    }
    for y in &mut y_alpha {
        *y /= n;
    }
    Ok(DrawStats {
        y_alpha,
        cross: cross / n,
        pseudo_sum: pseudo.clone(),
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Monte Carlo check of the decomposition for `m_draws` draws of `source`.
/// The grid must contain 0 and 1; `Y_vanilla` is read at α = 0 and
/// `Y_pseudo` at α = 1 of the same empirical curve.
pub fn verify_with(sites: &Sites, source: &dyn PseudoSource, m_draws: usize, grid: &[f64], exec: Execution) -> Result<TheoremReport> {
    if m_draws < 2 {
        return Err(Error::Config(format!("need at least 2 draws, got {m_draws}")));
    }
    if sites.is_empty() {
        return Err(Error::Schema("no sites".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.first() != Some(&0.0) || grid.last() != Some(&1.0) || grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Config("alpha grid must lie in [0, 1] and include both ends".into()));
    }

    let mut y_alpha: Vec<Vec<f64>> = vec![Vec::with_capacity(m_draws); grid.len()];
    let mut cross = Vec::with_capacity(m_draws);
    let mut mean_pseudo: LabelTable = sites.sizes.iter().map(|&k| vec![0.0; k]).collect();
    // Bounded chunks keep at most a few pseudo tables alive at once.
    let chunk = (4 * exec::workers()).max(1);
    let draws: Vec<usize> = (0..m_draws).collect();
    for part in draws.chunks(chunk) {
        let stats = exec::map(exec, part, |&m| -> Result<DrawStats> { draw_stats(sites, &source.draw(m, sites)?, &grid) });
        for s in stats {
            let s = s?;
            for (col, y) in y_alpha.iter_mut().zip(&s.y_alpha) {
                col.push(*y);
            }
            cross.push(s.cross);
            for (acc, p) in mean_pseudo.iter_mut().zip(&s.pseudo_sum) {
                for (a, x) in acc.iter_mut().zip(p) {
                    *a += x;
                }
            }
        }
    }
    let m = m_draws as f64;
    let bias_sq = mean_pseudo
        .iter()
        .zip(&sites.truth)
        .map(|(acc, &t)| {
            let mean: Vec<f64> = acc.iter().map(|x| x / m).collect();
            sq_dist_to_one_hot(&mean, t)
        })
        .sum::<f64>()
        / sites.len() as f64;

    let stats: Vec<(f64, f64)> = y_alpha.iter().map(|col| mean_sd(col)).collect();
    let y_vanilla = stats[0].0;
    let y_pseudo = stats[grid.len() - 1].0;
    let opt = optimal_alpha(y_vanilla, y_pseudo)?;
    let mut curve = Vec::with_capacity(grid.len());
    let mut max_dev: f64 = 0.0;
    let mut max_dev_se: f64 = 0.0;
    let mut within = true;
    for (a, &(mean, sd)) in grid.iter().zip(&stats) {
        let fitted = combined_error(y_vanilla, y_pseudo, *a)?;
        let stderr = sd / m.sqrt();
        let dev = (mean - fitted).abs();
        max_dev = max_dev.max(dev);
        if stderr > 0.0 {
            max_dev_se = max_dev_se.max(dev / stderr);
        }
        within &= dev <= 3.0 * stderr + 1e-12;
        curve.push(CurvePoint {
            alpha: *a,
            empirical: mean,
            fitted,
            stderr,
        });
    }
    let (mut alpha_hat, mut empirical_min) = (grid[0], curve[0].empirical);
    for p in &curve {
        if p.empirical < empirical_min {
            empirical_min = p.empirical;
            alpha_hat = p.alpha;
        }
    }
    let grid_step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let (cross_term, cross_sd) = mean_sd(&cross);
    Ok(TheoremReport {
        draws: m_draws,
        sites: sites.len(),
        y_vanilla,
        y_pseudo,
        curve,
        max_deviation: max_dev,
        max_deviation_in_stderr: max_dev_se,
        within_three_stderr: within,
        alpha_hat,
        alpha_star: opt.alpha,
        y_star: opt.y_min,
        degenerate: opt.degenerate,
        grid_step,
        argmin_within_grid_step: (alpha_hat - opt.alpha).abs() <= grid_step + 1e-12,
        empirical_min,
        strict_inequality: (y_vanilla > 0.0 && y_pseudo > 0.0).then(|| empirical_min < y_vanilla.min(y_pseudo)),
        bias_sq,
        variance: y_pseudo - bias_sq,
        cross_term,
        cross_term_stderr: cross_sd / m.sqrt(),
    })
}

/// Simulation settings for the proxy path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremConfig {
    pub n_dialogues: usize,
    pub max_turns: usize,
    pub noise: NoiseSpec,
    pub draws: usize,
    pub proxy: Proxy,
    pub alpha_grid: Vec<f64>,
    pub seed: u64,
}

impl TheoremConfig {
    /// Zero-bias independent proxy, 200 draws, 11-point grid.
    pub fn independent(seed: u64) -> Self {
        Self {
            n_dialogues: 100,
            max_turns: 5,
            noise: NoiseSpec::high_noise(seed),
            draws: 200,
            proxy: Proxy::Independent { bias: 0.0, sigma: 0.3 },
            alpha_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            seed,
        }
    }

    pub fn correlated(seed: u64) -> Self {
        Self {
            proxy: Proxy::Correlated {
                sigma: 0.3,
                coupling: 0.5,
                coupling_sd: 0.1,
            },
            ..Self::independent(seed)
        }
    }
}

/// Proxy-path verification on a synthetic corpus with injected noise.
pub fn verify_theorem(cfg: &TheoremConfig, ontology: &Ontology, exec: Execution) -> Result<TheoremReport> {
    cfg.proxy.validate()?;
    let clean = generate_corpus(ontology, cfg.n_dialogues, cfg.max_turns, cfg.seed)?;
    let (noisy, _) = inject_noise(&clean, &cfg.noise)?;
    let sites = Sites::from_corpora(&clean, &noisy)?;
    let source = ProxySource {
        proxy: cfg.proxy,
        seed: cfg.seed,
    };
    verify_with(&sites, &source, cfg.draws, &cfg.alpha_grid, exec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let o = optimal_alpha(0.2, 0.3).unwrap();
        assert!((o.alpha - 0.4).abs() < 1e-15 && (o.y_min - 0.12).abs() < 1e-15);
        let o = optimal_alpha(0.2, 0.0).unwrap();
        assert_eq!((o.alpha, o.y_min), (1.0, 0.0));
        assert_eq!(combined_error(0.2, 0.3, 0.0).unwrap(), 0.2);
        let d = optimal_alpha(0.0, 0.0).unwrap();
        assert!(d.degenerate && d.alpha == 0.5 && d.y_min == 0.0);
        assert!(optimal_alpha(-0.1, 0.2).is_err());
        assert!(combined_error(0.1, 0.2, 1.1).is_err());
    }

    #[test]
    fn approx_error_examples() {
        let truth = vec![1, 0];
        let exact = vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]];
        assert_eq!(approx_error(&exact, &truth).unwrap().value, 0.0);
        let one = approx_error(&[vec![vec![1.0, 0.0]]], &[1]).unwrap();
        assert_eq!(one.value, 2.0);
        assert!(approx_error(&[], &truth).is_err());
        assert!(approx_error(&[vec![vec![1.0, 0.0]]], &truth).is_err());
    }

    #[test]
    fn too_few_draws() {
        let sites = Sites {
            truth: vec![0],
            vanilla: vec![1],
            sizes: vec![3],
        };
        let src = ProxySource {
            proxy: Proxy::Flip { q: 0.5 },
            seed: 1,
        };
        assert!(verify_with(&sites, &src, 1, &[0.0, 1.0], Execution::Sequential).is_err());
        assert!(verify_with(&sites, &src, 5, &[0.2, 1.0], Execution::Sequential).is_err());
    }
}
