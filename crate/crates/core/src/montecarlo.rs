//! Monte Carlo estimators and the statistical cross-checks against the
//! closed forms.
//!
//! Paths are processed in fixed chunks of [`CHUNK`] consecutive path indices;
//! chunk results are merged in index order, so every estimate depends only on
//! `(params, n, seed)` and not on the number of worker threads.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::analytics::{self, Domain, MixedDensity};
use crate::error::{Error, Result};
use crate::model::ValidatedParams;
use crate::paths::{path_rng, Simulator, StateClass, DEFAULT_EVENT_BUDGET};
use crate::quadrature::{integrate, integrate_with_breaks};

pub const CHUNK: u64 = 4096;

/// Runs `per_chunk` over `[0, n)` in chunks (in parallel) and returns the
/// chunk results in order.
fn chunked<T: Send>(n: u64, per_chunk: impl Fn(u64, u64) -> T + Sync) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            per_chunk(lo, (lo + CHUNK).min(n))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
}

impl EstimateWithError {
    /// Sample mean and standard error of the mean from running sums.
    pub fn from_sums(sum: f64, sum_sq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        EstimateWithError { value: mean, std_error: (var / nf).sqrt(), n }
    }

    /// Binomial proportion `k / n` with SE `sqrt(p (1 - p) / n)`.
    pub fn proportion(k: u64, n: u64) -> Self {
        let p = k as f64 / n as f64;
        EstimateWithError { value: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), n }
    }

    /// `|value - target| <= k SE`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }

    /// Distance to `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_error > 0.0 {
            (self.value - target) / self.std_error
        } else if self.value == target {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinScale {
    Linear,
    Log,
}

/// Histogram layout over `X` (usually linear) or `Y` (usually logarithmic).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinSpec {
    pub domain: Domain,
    pub scale: BinScale,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl BinSpec {
    pub fn linear_x(lo: f64, hi: f64, bins: usize) -> Self {
        BinSpec { domain: Domain::X, scale: BinScale::Linear, lo, hi, bins }
    }

    /// Logarithmic bins on `Y` over `[lo, hi]`, `per_decade` bins per decade.
    pub fn log_y(lo: f64, hi: f64, per_decade: usize) -> Self {
        let decades = (hi / lo).log10();
        let bins = ((decades * per_decade as f64).round() as usize).max(1);
        BinSpec { domain: Domain::Y, scale: BinScale::Log, lo, hi, bins }
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins)
            .map(|i| {
                let f = i as f64 / self.bins as f64;
                match self.scale {
                    BinScale::Linear => self.lo + f * (self.hi - self.lo),
                    BinScale::Log => self.lo * (self.hi / self.lo).powf(f),
                }
            })
            .collect()
    }

    fn index(&self, v: f64) -> Slot {
        if v < self.lo {
            return Slot::Under;
        }
        if v >= self.hi {
            return Slot::Over;
        }
        let f = match self.scale {
            BinScale::Linear => (v - self.lo) / (self.hi - self.lo),
            BinScale::Log => (v / self.lo).ln() / (self.hi / self.lo).ln(),
        };
        Slot::Bin(((f * self.bins as f64) as usize).min(self.bins - 1))
    }
}

enum Slot {
    Under,
    Bin(usize),
    Over,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomEstimate {
    /// Location in the summary's domain.
    pub location: f64,
    pub count: u64,
    pub mass: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSummary {
    pub spec: BinSpec,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// Paths sitting exactly on a propagator atom; not in `counts`.
    pub atoms: Vec<AtomEstimate>,
    pub n_paths: u64,
    pub seed: u64,
    /// Mean of `X` over all paths, atoms included.
    pub mean_x: EstimateWithError,
    /// Mean of `X^2` over all paths.
    pub mean_x2: EstimateWithError,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
struct Partial {
    counts: Vec<u64>,
    under: u64,
    over: u64,
    atom_counts: Vec<u64>,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl Partial {
    fn new(bins: usize, atoms: usize) -> Self {
        Partial {
            counts: vec![0; bins],
            under: 0,
            over: 0,
            atom_counts: vec![0; atoms],
            s1: 0.0,
            s2: 0.0,
            s3: 0.0,
            s4: 0.0,
        }
    }

    fn add_moments(&mut self, x: f64) {
        let x2 = x * x;
        self.s1 += x;
        self.s2 += x2;
        self.s3 += x2;
        self.s4 += x2 * x2;
    }

    fn add_value(&mut self, spec: &BinSpec, v: f64) {
        match spec.index(v) {
            Slot::Under => self.under += 1,
            Slot::Over => self.over += 1,
            Slot::Bin(i) => self.counts[i] += 1,
        }
    }

    fn merge(mut self, other: &Partial) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.atom_counts.iter_mut().zip(&other.atom_counts) {
            *a += b;
        }
        self.under += other.under;
        self.over += other.over;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
        self
    }
}

impl EmpiricalSummary {
    /// Histogram of plain samples (no atom detection).
    pub fn from_samples(spec: BinSpec, samples: &[f64], seed: u64) -> Self {
        let start = Instant::now();
        let mut part = Partial::new(spec.bins, 0);
        for &v in samples {
            part.add_value(&spec, v);
            part.add_moments(v);
        }
        Self::finish(spec, part, Vec::new(), samples.len() as u64, seed, start)
    }

    fn finish(spec: BinSpec, p: Partial, atom_locations: Vec<f64>, n: u64, seed: u64, start: Instant) -> Self {
        let atoms = atom_locations
            .iter()
            .zip(&p.atom_counts)
            .map(|(&location, &count)| {
                let e = EstimateWithError::proportion(count, n);
                AtomEstimate { location, count, mass: e.value, std_error: e.std_error }
            })
            .collect();
        EmpiricalSummary {
            edges: spec.edges(),
            spec,
            counts: p.counts,
            underflow: p.under,
            overflow: p.over,
            atoms,
            n_paths: n,
            seed,
            mean_x: EstimateWithError::from_sums(p.s1, p.s2, n),
            mean_x2: EstimateWithError::from_sums(p.s3, p.s4, n),
            elapsed: start.elapsed(),
        }
    }

    pub fn bin_width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Bin center: arithmetic for linear bins, geometric for log bins.
    pub fn bin_center(&self, i: usize) -> f64 {
        match self.spec.scale {
            BinScale::Linear => 0.5 * (self.edges[i] + self.edges[i + 1]),
            BinScale::Log => (self.edges[i] * self.edges[i + 1]).sqrt(),
        }
    }

    /// Density estimate `count / (n width)` and its standard error.
    pub fn density(&self, i: usize) -> EstimateWithError {
        let p = EstimateWithError::proportion(self.counts[i], self.n_paths);
        let w = self.bin_width(i);
        EstimateWithError { value: p.value / w, std_error: p.std_error / w, n: self.n_paths }
    }

    pub fn atom_at(&self, location: f64) -> Option<&AtomEstimate> {
        self.atoms.iter().find(|a| a.location == location)
    }

    /// `lo,hi,center,count,density,std_error` rows, then the atom table.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "lo,hi,center,count,density,std_error")?;
        for i in 0..self.counts.len() {
            let d = self.density(i);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                self.edges[i],
                self.edges[i + 1],
                self.bin_center(i),
                self.counts[i],
                d.value,
                d.std_error
            )?;
        }
        Ok(())
    }

    pub fn write_atoms_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "location,count,mass,std_error")?;
        for a in &self.atoms {
            writeln!(out, "{},{},{},{}", a.location, a.count, a.mass, a.std_error)?;
        }
        Ok(())
    }
}

/// Histogram of `X(tau)` (or of `Y(tau)`) over `n_paths` paths from
/// `params.x0`, with the propagator's atoms counted separately by event
/// logic: no event before `tau` puts a path on the drift front; without
/// drift, a last event that is a reset puts it at the origin.
pub fn empirical_density(
    params: &ValidatedParams,
    tau: f64,
    n_paths: u64,
    spec: BinSpec,
    seed: u64,
) -> Result<EmpiricalSummary> {
    if n_paths == 0 || !(tau > 0.0) {
        return Err(Error::DomainError("need n_paths >= 1 and tau > 0".into()));
    }
    let start = Instant::now();
    let sim = Simulator::new(params)?;
    let x0 = params.x0;
    let front = x0 + params.gamma_drift * tau;
    let with_origin = params.gamma_drift == 0.0 && params.lambda_reset > 0.0;
    let merged = with_origin && front == 0.0;
    // slot 0: front; slot 1: origin (merged into 0 when they coincide)
    let mut x_atoms = vec![front];
    if with_origin && !merged {
        x_atoms.push(0.0);
    }
    let to_domain = |x: f64| match spec.domain {
        Domain::X => x,
        Domain::Y => params.y0 * (params.observable_sign.as_f64() * x).exp(),
    };
    let n_atoms = x_atoms.len();
    let parts = chunked(n_paths, |lo, hi| {
        let mut part = Partial::new(spec.bins, n_atoms);
        for i in lo..hi {
            let s = sim.state(x0, tau, &mut path_rng(seed, i));
            part.add_moments(s.x);
            match s.class {
                StateClass::Front => part.atom_counts[0] += 1,
                StateClass::Origin => part.atom_counts[if merged { 0 } else { 1 }] += 1,
                StateClass::Continuous => part.add_value(&spec, to_domain(s.x)),
            }
        }
        part
    });
    let total = parts.iter().skip(1).fold(parts[0].clone(), |acc, p| acc.merge(p));
    let locations = x_atoms.into_iter().map(to_domain).collect();
    Ok(EmpiricalSummary::finish(spec, total, locations, n_paths, seed, start))
}

/// Per-bin comparison of a histogram with an analytic continuous density.
#[derive(Clone, Debug, PartialEq)]
pub struct BinAgreement {
    pub bins_checked: usize,
    pub max_abs_z: f64,
    /// Indices of checked bins outside `k` standard errors.
    pub outliers: Vec<usize>,
}

/// Compares every bin whose expected count is at least `min_expected` with
/// the exact bin probability of `density`'s continuous part.
pub fn bin_agreement(summary: &EmpiricalSummary, density: &MixedDensity, min_expected: f64, k: f64) -> Result<BinAgreement> {
    let n = summary.n_paths as f64;
    let mut out = BinAgreement { bins_checked: 0, max_abs_z: 0.0, outliers: Vec::new() };
    for i in 0..summary.counts.len() {
        let (a, b) = (summary.edges[i], summary.edges[i + 1]);
        let prob = integrate(|y| density.density(y), a, b, 1e-14, 1e-10)?.value;
        if prob * n < min_expected {
            continue;
        }
        out.bins_checked += 1;
        let got = summary.counts[i] as f64 / n;
        let se = (prob * (1.0 - prob) / n).sqrt();
        let z = (got - prob).abs() / se;
        out.max_abs_z = out.max_abs_z.max(z);
        if z > k {
            out.outliers.push(i);
        }
    }
    Ok(out)
}

/// Mean exit time from `[0, b]` starting at `x0`, with its standard error.
pub fn met_estimate(params: &ValidatedParams, b: f64, x0: f64, n_paths: u64, seed: u64) -> Result<EstimateWithError> {
    met_estimate_with_budget(params, b, x0, n_paths, seed, DEFAULT_EVENT_BUDGET)
}

pub fn met_estimate_with_budget(
    params: &ValidatedParams,
    b: f64,
    x0: f64,
    n_paths: u64,
    seed: u64,
    budget: u64,
) -> Result<EstimateWithError> {
    if n_paths == 0 {
        return Err(Error::DomainError("n_paths must be >= 1".into()));
    }
    let times = exit_times(params, b, x0, n_paths, seed, budget)?;
    let (s1, s2) = times.iter().fold((0.0, 0.0), |(a, q), &t| (a + t, q + t * t));
    Ok(EstimateWithError::from_sums(s1, s2, n_paths))
}

fn exit_times(params: &ValidatedParams, b: f64, x0: f64, n: u64, seed: u64, budget: u64) -> Result<Vec<f64>> {
    if !(0.0..b).contains(&x0) {
        return Err(Error::DomainError(format!("start x0 = {x0} must lie in [0, {b})")));
    }
    let sim = Simulator::new(params)?;
    let parts = chunked(n, |lo, hi| {
        let mut times = Vec::with_capacity((hi - lo) as usize);
        let mut censored = 0u64;
        for i in lo..hi {
            match sim.first_exit(b, x0, budget, &mut path_rng(seed, i)) {
                Ok(r) => times.push(r.exit_time),
                Err(_) => censored += 1,
            }
        }
        (times, censored)
    });
    let censored: u64 = parts.iter().map(|p| p.1).sum();
    if censored > 0 {
        return Err(Error::NoExitBudget { budget, censored });
    }
    Ok(parts.into_iter().flat_map(|p| p.0).collect())
}

/// Fraction of paths still inside `[0, b]` at each time of `tau_grid`.
pub fn survival_estimate(
    params: &ValidatedParams,
    b: f64,
    x0: f64,
    tau_grid: &[f64],
    n_paths: u64,
    seed: u64,
) -> Result<Vec<EstimateWithError>> {
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) || tau_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::DomainError("tau grid must be increasing and nonnegative".into()));
    }
    if n_paths == 0 {
        return Err(Error::DomainError("n_paths must be >= 1".into()));
    }
    let times = exit_times(params, b, x0, n_paths, seed, DEFAULT_EVENT_BUDGET)?;
    // alive[j] counts exits strictly after tau_grid[j]
    let mut alive = vec![0u64; tau_grid.len() + 1];
    for t in times {
        alive[tau_grid.partition_point(|&g| g < t)] += 1;
    }
    let mut out = vec![EstimateWithError { value: 0.0, std_error: 0.0, n: n_paths }; tau_grid.len()];
    let mut above = 0u64;
    for j in (0..tau_grid.len()).rev() {
        above += alive[j + 1];
        out[j] = EstimateWithError::proportion(above, n_paths);
    }
    Ok(out)
}

/// Trapezoid area under a survival curve sampled on `tau_grid`, starting
/// from the value 1 at `tau = 0`.
pub fn survival_area(tau_grid: &[f64], values: &[f64]) -> f64 {
    let mut prev = (0.0, 1.0);
    let mut area = 0.0;
    for (&t, &v) in tau_grid.iter().zip(values) {
        area += 0.5 * (t - prev.0) * (v + prev.1);
        prev = (t, v);
    }
    area
}

/// Fitted tail exponent `a` of a density `~ y^{-1-a}`.
///
/// Weighted least squares of log density against log bin center over the
/// bins inside `y_range` holding at least 100 paths, with weights equal to
/// the bin counts (the inverse Poisson variance of a log count). The
/// exponent is `-slope - 1`; its error is the slope's.
pub fn tail_fit(summary: &EmpiricalSummary, y_range: (f64, f64)) -> Result<EstimateWithError> {
    const MIN_COUNT: u64 = 100;
    const MIN_BINS: usize = 10;
    let mut pts = Vec::new();
    for i in 0..summary.counts.len() {
        let (a, b) = (summary.edges[i], summary.edges[i + 1]);
        if a >= y_range.0 && b <= y_range.1 && summary.counts[i] >= MIN_COUNT {
            let w = summary.counts[i] as f64;
            pts.push((summary.bin_center(i).ln(), summary.density(i).value.ln(), w));
        }
    }
    if pts.len() < MIN_BINS {
        return Err(Error::InsufficientTail { usable: pts.len(), needed: MIN_BINS });
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(EstimateWithError { value: -slope - 1.0, std_error: (1.0 / sxx).sqrt(), n: pts.len() as u64 })
}

fn ck_inputs(params: &ValidatedParams) -> Result<()> {
    if params.gamma_drift != 0.0 || params.jump_law.exponential_rate().is_none() {
        return Err(Error::UnsupportedRegime("Chapman-Kolmogorov check needs gamma_drift = 0 and exponential jumps".into()));
    }
    Ok(())
}

fn quad_err(e: Error) -> Error {
    match e {
        Error::QuadratureFailure(_) => e,
        other => Error::QuadratureFailure(other.to_string()),
    }
}

/// Mass sitting exactly at the origin at time `tau` from `x0`.
fn origin_mass(params: &ValidatedParams, tau: f64, x0: f64) -> f64 {
    analytics::atom_masses(params, tau, x0).iter().filter(|a| a.location == 0.0).map(|a| a.mass).sum()
}

/// Largest deviation from the semigroup identity
/// `p(x, tau1 + tau2; x0) = int p(x, tau1; y) p(y, tau2; x0) dy`
/// over the grid (continuous part at each `x > 0`, `x != x0`), and for the
/// mass at the origin. Atom-atom, atom-continuous and continuous-atom
/// products are integrated analytically; the continuous-continuous one by
/// quadrature. Drift-free, exponential jumps.
pub fn ck_check(params: &ValidatedParams, tau1: f64, tau2: f64, grid: &[f64]) -> Result<f64> {
    ck_inputs(params)?;
    let x0 = params.x0;
    let total = params.lambda_jump + params.lambda_reset;
    let c = |x: f64, t: f64, from: f64| analytics::propagator_continuous(params, x, t, from);
    let mid_atoms = analytics::atom_masses(params, tau2, x0);
    let stay = (-total * tau1).exp();
    let mut worst: f64 = 0.0;
    for &x in grid {
        if x <= 0.0 || x == x0 {
            continue;
        }
        let lhs = c(x, tau1 + tau2, x0)?;
        // continuous then continuous
        let cc = integrate_with_breaks(
            |y| c(x, tau1, y).unwrap_or(f64::NAN) * c(y, tau2, x0).unwrap_or(f64::NAN),
            0.0,
            f64::INFINITY,
            &[x, x0],
            1e-12,
            1e-10,
        )
        .map_err(quad_err)?
        .value;
        // atom at tau2, then continuous
        let mut ac = 0.0;
        for a in &mid_atoms {
            ac += a.mass * c(x, tau1, a.location)?;
        }
        // continuous at tau2, then no event during tau1
        let ca = c(x, tau2, x0)? * stay;
        worst = worst.max((lhs - cc - ac - ca).abs());
    }
    // origin: either already there and stays, or reset during tau1
    let here = origin_mass(params, tau2, x0);
    let origin_lhs = origin_mass(params, tau1 + tau2, x0);
    let origin_rhs = origin_mass(params, tau1, 1.0) + here * stay;
    Ok(worst.max((origin_lhs - origin_rhs).abs()))
}

/// Largest deviation from stationarity, `int p(x, tau; y) p(y) dy = p(x)`,
/// over the grid (continuous part) and at the origin atom.
pub fn stationary_invariance_check(params: &ValidatedParams, tau: f64, grid: &[f64]) -> Result<f64> {
    ck_inputs(params)?;
    let st = analytics::stationary_density(params, Domain::X)?;
    let atom0 = st.atom_mass();
    let total = params.lambda_jump + params.lambda_reset;
    let stay = (-total * tau).exp();
    let c = |x: f64, from: f64| analytics::propagator_continuous(params, x, tau, from);
    let mut worst: f64 = 0.0;
    for &x in grid {
        if x <= 0.0 {
            continue;
        }
        let cc = integrate_with_breaks(
            |y| c(x, y).unwrap_or(f64::NAN) * st.density(y),
            0.0,
            f64::INFINITY,
            &[x],
            1e-12,
            1e-10,
        )
        .map_err(quad_err)?
        .value;
        let rhs = cc + atom0 * c(x, 0.0)? + st.density(x) * stay;
        worst = worst.max((rhs - st.density(x)).abs());
    }
    let origin_rhs = origin_mass(params, tau, 1.0) + atom0 * stay;
    Ok(worst.max((origin_rhs - atom0).abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IrreducibilityResult {
    pub estimate: EstimateWithError,
    pub bound: f64,
    pub pass: bool,
}

/// Lower bound on the probability of visiting `[x, x + eps]` before `tau`
/// from `x0`: one jump landing there with no reset when `x0 < x`, or a reset
/// followed by such a jump when the interval lies below `x0`.
pub fn visit_lower_bound(params: &ValidatedParams, x: f64, eps: f64, x0: f64, tau: f64) -> f64 {
    let (lam, lr) = (params.lambda_jump, params.lambda_reset);
    if (x..=x + eps).contains(&x0) {
        return 1.0;
    }
    if x0 < x {
        let hit = params.jump_law.interval_probability(x - x0, x + eps - x0);
        return (-lr * tau).exp() * -(-lam * tau).exp_m1() * hit;
    }
    // a reset then a jump, both before tau: hypoexponential CDF
    let both = if (lam - lr).abs() < 1e-9 * (lam + lr) {
        1.0 - (-lam * tau).exp() * (1.0 + lam * tau)
    } else {
        lr / (lr - lam) * -(-lam * tau).exp_m1() + lam / (lam - lr) * -(-lr * tau).exp_m1()
    };
    both * params.jump_law.interval_probability(x, x + eps)
}

/// Monte Carlo probability of visiting `[x, x + eps]` before `tau`, checked
/// against [`visit_lower_bound`] (passes when `estimate + k SE >= bound`).
#[allow(clippy::too_many_arguments)]
pub fn irreducibility_check(
    params: &ValidatedParams,
    x: f64,
    eps: f64,
    x0: f64,
    tau: f64,
    n_paths: u64,
    seed: u64,
    k: f64,
) -> Result<IrreducibilityResult> {
    if !(eps > 0.0) || !(tau > 0.0) || n_paths == 0 {
        return Err(Error::DomainError("need eps > 0, tau > 0, n_paths >= 1".into()));
    }
    let sim = Simulator::new(params)?;
    let hits: u64 = chunked(n_paths, |lo, hi| {
        (lo..hi).filter(|&i| sim.visits(x0, x, x + eps, tau, &mut path_rng(seed, i))).count() as u64
    })
    .iter()
    .sum();
    let estimate = EstimateWithError::proportion(hits, n_paths);
    let bound = visit_lower_bound(params, x, eps, x0, tau);
    Ok(IrreducibilityResult { estimate, bound, pass: estimate.value + k * estimate.std_error >= bound })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Two-sample Kolmogorov-Smirnov test at level `alpha` (asymptotic critical
/// value). Ties across samples are handled by stepping over equal values.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let critical = c * ((n + m) / (n * m)).sqrt();
    KsResult { statistic: d, critical, pass: d <= critical }
}

/// Draws `X(tau)` through the reset decomposition: with probability
/// `e^{-Lambda tau}` a reset-free path from `x0` over `tau`, otherwise a
/// reset-free path from the origin over the time since the last reset,
/// which is exponential of rate `Lambda` truncated to `[0, tau]`.
pub fn mixture_samples(params: &ValidatedParams, tau: f64, n: u64, seed: u64) -> Result<Vec<f64>> {
    let lr = params.lambda_reset;
    let free = Simulator::new(&params.with_reset_rate(0.0)?)?;
    let keep = (-lr * tau).exp();
    let x0 = params.x0;
    let parts = chunked(n, |lo, hi| {
        (lo..hi)
            .map(|i| {
                let mut rng = path_rng(seed, i);
                let u: f64 = rng.random();
                if u < keep {
                    free.state(x0, tau, &mut rng).x
                } else {
                    let v: f64 = rng.random();
                    let age = -(v * (-lr * tau).exp_m1()).ln_1p() / lr;
                    free.state(0.0, age, &mut rng).x
                }
            })
            .collect::<Vec<f64>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// `X(tau)` from direct simulation.
pub fn direct_samples(params: &ValidatedParams, tau: f64, n: u64, seed: u64) -> Result<Vec<f64>> {
    let sim = Simulator::new(params)?;
    let x0 = params.x0;
    let parts = chunked(n, |lo, hi| (lo..hi).map(|i| sim.state(x0, tau, &mut path_rng(seed, i)).x).collect::<Vec<_>>());
    Ok(parts.into_iter().flatten().collect())
}

/// KS comparison of direct simulation with the reset-decomposition mixture.
pub fn mixture_check(params: &ValidatedParams, tau: f64, n: u64, seed: u64, alpha: f64) -> Result<KsResult> {
    let direct = direct_samples(params, tau, n, seed)?;
    let mixed = mixture_samples(params, tau, n, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    Ok(ks_two_sample(&direct, &mixed, alpha))
}

/// One line of the machine-readable report: `PASS name detail` or
/// `FAIL name detail`.
pub fn report_line(name: &str, pass: bool, detail: &str) -> String {
    format!("{} {name} {detail}", if pass { "PASS" } else { "FAIL" })
}
