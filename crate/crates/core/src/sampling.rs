//! Monte-Carlo measurement simulation and sample-complexity bounds.
//!
//! Two measurement protocols are compared on the same pair of observables:
//! direct projective readout of each O_j, and the single-copy Pauli-Z
//! readout behind a channel meeting the commensuration condition, whose
//! outcomes are rescaled by 1/alpha. The analytic machinery (variance
//! identities, the lambda cost ratio and its Haar average, Bernstein copy
//! counts) lives next to the samplers so every estimate can be checked
//! against a closed form.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alpha::{iterative_alpha_max, SolverOptions};
use crate::error::{Error, Result};
use crate::matrix::trace_product;
use crate::observable::{expectation, haar_state, DensityMatrix, Observable};
use crate::presets::fig3_pair;
use crate::qnn::MixedUnitaryChannel;
use crate::rng::{derive_seed, derive_seed2, rng_from_seed};
use crate::spectrum::hermitian_eig;

/// Which measurement produced a run of shots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EstimatorKind {
    Projective,
    QnnZ,
}

/// Summary statistics of one estimator run.
///
/// For `QnnZ` the mean and variance are of the scaled outcomes z/alpha, so
/// `mean` estimates tr(rho O_j) directly; `alpha` records the scale.
#[derive(Clone, Debug, Serialize)]
pub struct EstimatorStats {
    pub n: u64,
    pub mean: f64,
    /// Unbiased (n-1 denominator); 0 when n = 1.
    pub sample_variance: f64,
    pub kind: EstimatorKind,
    pub alpha: Option<f64>,
}

/// Sufficient copy counts from the Bernstein tail bound.
#[derive(Clone, Debug, Serialize)]
pub struct BernsteinBounds {
    pub epsilon: f64,
    pub delta: f64,
    pub n_o: f64,
    pub n_z: f64,
}

/// One row of the family sweep: analytic ratios next to the simulated copy
/// counts at the same family parameter p.
#[derive(Clone, Debug, Serialize)]
pub struct ComplexityReport {
    pub p: f64,
    pub alpha_max: f64,
    /// Median analytic cost ratio over the trial states.
    pub lambda: f64,
    pub lambda_haar: f64,
    /// Median over trials of n_z / n_o.
    pub lambda_exp: f64,
    pub n_z_exp: u64,
    pub n_o_exp: u64,
    pub trials: usize,
}

/// Budget for the adaptive shot schedule.
#[derive(Clone, Copy, Debug)]
pub struct ShotOptions {
    pub max_shots: u64,
}

impl Default for ShotOptions {
    fn default() -> Self {
        ShotOptions { max_shots: 1 << 20 }
    }
}

const PROB_SUM_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-10;

fn stats_of(values_mean: f64, values_m2: f64, n: u64) -> (f64, f64) {
    let var = if n > 1 { values_m2 / (n as f64 - 1.0) } else { 0.0 };
    (values_mean, var)
}

/// Welford accumulator; keeps the variance one-pass and branch-free.
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Welford { n: 0, mean: 0.0, m2: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self) -> (f64, f64) {
        stats_of(self.mean, self.m2, self.n)
    }
}

/// Outcome distribution of a projective measurement of `obs` on `rho`:
/// (eigenvalue, probability) with degenerate eigenvalues merged into one
/// projector, validated to sum to 1 and renormalized for drawing.
fn projective_distribution(
    rho: &DensityMatrix,
    obs: &Observable,
) -> Result<Vec<(f64, f64)>> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs observable dim {}",
            rho.dim(),
            obs.dim()
        )));
    }
    let eig = hermitian_eig(obs.matrix())?;
    let d = eig.dim();
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for k in 0..d {
        let v = eig.vector(k);
        let p = (v.adjoint() * rho.matrix() * &v)[(0, 0)].re;
        if p < -1e-9 {
            return Err(Error::InvalidState(format!(
                "negative Born probability {p:.3e}"
            )));
        }
        let p = p.max(0.0);
        // values are sorted, so a degenerate eigenvalue extends the last group
        match groups.last_mut() {
            Some(g) if (g.0 - eig.values[k]).abs() <= DEGENERACY_TOL => g.1 += p,
            _ => groups.push((eig.values[k], p)),
        }
    }
    let total: f64 = groups.iter().map(|g| g.1).sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidState(format!(
            "outcome probabilities sum to {total:.15} != 1"
        )));
    }
    for g in &mut groups {
        g.1 /= total;
    }
    Ok(groups)
}

fn draw_categorical(dist: &[(f64, f64)], rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(value, p) in dist {
        acc += p;
        if u < acc {
            return value;
        }
    }
    dist.last().expect("empty distribution").0
}

/// Per-shot projective outcome source for `copies_to_accuracy`.
pub fn projective_sampler(
    rho: &DensityMatrix,
    obs: &Observable,
) -> Result<impl FnMut(&mut ChaCha8Rng) -> f64> {
    let dist = projective_distribution(rho, obs)?;
    Ok(move |rng: &mut ChaCha8Rng| draw_categorical(&dist, rng))
}

/// Per-shot scaled Pauli-Z outcome source with raw mean `mean_z`.
///
/// A Z readout only ever sees the +/-1 Bernoulli marginal of the channel
/// output, so the exact marginal is drawn directly: +1 with probability
/// (1 + mean_z)/2, and the outcome is scaled by 1/alpha.
pub fn z_readout_sampler(mean_z: f64, alpha: f64) -> impl FnMut(&mut ChaCha8Rng) -> f64 {
    let p_plus = ((1.0 + mean_z) / 2.0).clamp(0.0, 1.0);
    let scale = 1.0 / alpha;
    move |rng: &mut ChaCha8Rng| {
        if rng.gen::<f64>() < p_plus {
            scale
        } else {
            -scale
        }
    }
}

/// Projective measurement of `obs` on `rho`, `n` shots.
pub fn sample_projective(
    rho: &DensityMatrix,
    obs: &Observable,
    n: u64,
    seed: u64,
) -> Result<EstimatorStats> {
    if n == 0 {
        return Err(Error::InvalidState("shot count must be >= 1".into()));
    }
    let dist = projective_distribution(rho, obs)?;
    let mut rng = rng_from_seed(seed);
    let mut acc = Welford::new();
    for _ in 0..n {
        acc.push(draw_categorical(&dist, &mut rng));
    }
    let (mean, sample_variance) = acc.finish();
    Ok(EstimatorStats {
        n,
        mean,
        sample_variance,
        kind: EstimatorKind::Projective,
        alpha: None,
    })
}

/// Pauli-Z readout of the first two qubits behind the channel, `n` shots.
///
/// Each shot draws one computational basis string from the diagonal of
/// E(rho); the two +/-1 readouts come from the same string and are scaled
/// by 1/alpha, so one copy of the state serves both estimators.
pub fn sample_qnn_z(
    channel: &MixedUnitaryChannel,
    rho: &DensityMatrix,
    alpha: f64,
    n: u64,
    seed: u64,
) -> Result<(EstimatorStats, EstimatorStats)> {
    if n == 0 {
        return Err(Error::InvalidState("shot count must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidState(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let out = channel.apply(rho)?;
    let n_qubits = out.n_qubits();
    if n_qubits < 2 {
        return Err(Error::InvalidState(
            "need at least 2 qubits for the paired readout".into(),
        ));
    }
    let dim = out.dim();
    let mut probs = Vec::with_capacity(dim);
    for i in 0..dim {
        let p = out.matrix()[(i, i)].re;
        if p < -1e-9 {
            return Err(Error::InvalidState(format!(
                "negative basis probability {p:.3e}"
            )));
        }
        probs.push(p.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidState(format!(
            "basis probabilities sum to {total:.15} != 1"
        )));
    }
    for p in &mut probs {
        *p /= total;
    }
    let scale = 1.0 / alpha;
    // qubit 0 is the most significant bit of the basis index
    let bit = |index: usize, qubit: usize| (index >> (n_qubits - 1 - qubit)) & 1;
    let mut rng = rng_from_seed(seed);
    let mut acc1 = Welford::new();
    let mut acc2 = Welford::new();
    for _ in 0..n {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut idx = dim - 1;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                idx = i;
                break;
            }
        }
        let z1 = if bit(idx, 0) == 0 { 1.0 } else { -1.0 };
        let z2 = if bit(idx, 1) == 0 { 1.0 } else { -1.0 };
        acc1.push(z1 * scale);
        acc2.push(z2 * scale);
    }
    let (m1, v1) = acc1.finish();
    let (m2, v2) = acc2.finish();
    Ok((
        EstimatorStats {
            n,
            mean: m1,
            sample_variance: v1,
            kind: EstimatorKind::QnnZ,
            alpha: Some(alpha),
        },
        EstimatorStats {
            n,
            mean: m2,
            sample_variance: v2,
            kind: EstimatorKind::QnnZ,
            alpha: Some(alpha),
        },
    ))
}

/// Closed-form variances of the two estimators of tr(rho O):
/// Var[o] = tr(rho O^2) - tr(rho O)^2 and Var[z/alpha] = 1/alpha^2 - tr(rho O)^2.
pub fn analytic_variances(
    rho: &DensityMatrix,
    obs: &Observable,
    alpha: f64,
) -> Result<(f64, f64)> {
    let e = expectation(rho, obs)?;
    let o2 = obs.matrix() * obs.matrix();
    let s = trace_product(rho.matrix(), &o2).re;
    Ok((s - e * e, 1.0 / (alpha * alpha) - e * e))
}

/// Analytic cost ratio of the Z protocol over direct projective readout:
/// (1 - alpha^2 min_j E[o_j]^2) / (alpha^2 (Var[o_1] + Var[o_2])).
pub fn lambda_ratio(
    rho: &DensityMatrix,
    o1: &Observable,
    o2: &Observable,
    alpha: f64,
) -> Result<f64> {
    let e1 = expectation(rho, o1)?;
    let e2 = expectation(rho, o2)?;
    let (v1, _) = analytic_variances(rho, o1, alpha)?;
    let (v2, _) = analytic_variances(rho, o2, alpha)?;
    let denom = alpha * alpha * (v1 + v2);
    if denom <= 1e-12 {
        return Err(Error::DegenerateDenominator);
    }
    Ok((1.0 - alpha * alpha * (e1 * e1).min(e2 * e2)) / denom)
}

/// Haar average of the cost ratio:
/// (d(d+1) - alpha^2 min_j tr(O_j^2)) / (d alpha^2 (tr(O_1^2) + tr(O_2^2))).
pub fn lambda_haar(o1: &Observable, o2: &Observable, alpha: f64) -> Result<f64> {
    if o1.dim() != o2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable dims {} vs {}",
            o1.dim(),
            o2.dim()
        )));
    }
    let d = o1.dim() as f64;
    let t1 = o1.trace_square();
    let t2 = o2.trace_square();
    let denom = d * alpha * alpha * (t1 + t2);
    if t1 + t2 <= 1e-12 || denom <= 1e-12 {
        return Err(Error::DegenerateDenominator);
    }
    Ok((d * (d + 1.0) - alpha * alpha * t1.min(t2)) / denom)
}

/// Sufficient copy counts for both protocols from the Bernstein inequality,
/// evaluated at analytic moments. `n_z` already maximizes over the two
/// readout qubits (one copy serves both).
pub fn bernstein_bounds(
    o1: &Observable,
    o2: &Observable,
    rho: &DensityMatrix,
    alpha: f64,
    epsilon: f64,
    delta: f64,
) -> Result<BernsteinBounds> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidState(format!(
            "epsilon and delta must lie in (0, 1), got ({epsilon}, {delta})"
        )));
    }
    let e1 = expectation(rho, o1)?;
    let e2 = expectation(rho, o2)?;
    let s1 = trace_product(rho.matrix(), &(o1.matrix() * o1.matrix())).re;
    let s2 = trace_product(rho.matrix(), &(o2.matrix() * o2.matrix())).re;
    let lead = 2.0 * (2.0 / delta).ln() / (epsilon * epsilon);
    let n_o = lead
        * (s1 + s2 - e1 * e1 - e2 * e2 + (2.0 / 3.0) * (e1 + e2) * epsilon);
    let n_z = lead
        * (1.0 / (alpha * alpha) - (e1 * e1).min(e2 * e2)
            + (2.0 / 3.0) * ((alpha + 1.0) / alpha) * epsilon);
    Ok(BernsteinBounds {
        epsilon,
        delta,
        n_o,
        n_z,
    })
}

/// Smallest shot count N on the schedule {64, 128, 256, ...} whose running
/// mean is within `epsilon` of `truth` at N and stays within epsilon through
/// the 2N checkpoint. The hysteresis window guards against lucky early
/// crossings; the result is deterministic per seed.
pub fn copies_to_accuracy(
    mut sampler: impl FnMut(&mut ChaCha8Rng) -> f64,
    truth: f64,
    epsilon: f64,
    seed: u64,
    opts: &ShotOptions,
) -> Result<u64> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidState("epsilon must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut sum = 0.0;
    let mut drawn: u64 = 0;
    let mut prev_pass = false;
    let mut checkpoint: u64 = 64;
    while checkpoint <= opts.max_shots {
        while drawn < checkpoint {
            sum += sampler(&mut rng);
            drawn += 1;
        }
        let pass = (sum / drawn as f64 - truth).abs() <= epsilon;
        if prev_pass && pass {
            return Ok(checkpoint / 2);
        }
        prev_pass = pass;
        checkpoint *= 2;
    }
    Err(Error::BudgetExceeded(opts.max_shots))
}

fn median_f64(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("non-finite median input"));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

fn median_u64(values: &mut [u64]) -> u64 {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

fn worker_count(trials: usize) -> usize {
    let hw = std::thread::available_parallelism().map_or(1, |p| p.get());
    let cap = std::env::var("INCOMPAT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(hw);
    cap.min(hw).min(trials.max(1))
}

struct TrialOutcome {
    n_o: u64,
    n_z: u64,
    lambda: f64,
}

fn run_trial(
    o1: &Observable,
    o2: &Observable,
    alpha: f64,
    epsilon: f64,
    trial_seed: u64,
    opts: &ShotOptions,
) -> Result<TrialOutcome> {
    let rho = haar_state(o1.n_qubits(), derive_seed(trial_seed, 0x51));
    let e1 = expectation(&rho, o1)?;
    let e2 = expectation(&rho, o2)?;
    let n_o1 = copies_to_accuracy(
        projective_sampler(&rho, o1)?,
        e1,
        epsilon,
        derive_seed(trial_seed, 0x01),
        opts,
    )?;
    let n_o2 = copies_to_accuracy(
        projective_sampler(&rho, o2)?,
        e2,
        epsilon,
        derive_seed(trial_seed, 0x02),
        opts,
    )?;
    let n_z1 = copies_to_accuracy(
        z_readout_sampler(alpha * e1, alpha),
        e1,
        epsilon,
        derive_seed(trial_seed, 0x11),
        opts,
    )?;
    let n_z2 = copies_to_accuracy(
        z_readout_sampler(alpha * e2, alpha),
        e2,
        epsilon,
        derive_seed(trial_seed, 0x12),
        opts,
    )?;
    Ok(TrialOutcome {
        n_o: n_o1 + n_o2,
        n_z: n_z1.max(n_z2),
        lambda: lambda_ratio(&rho, o1, o2, alpha)?,
    })
}

/// Sweep the interpolating family O_1(p) = (1-p) Z1Z2 + (p/2)(Z1 + Z2),
/// O_2 = X1X2 over `p_values`: per p the certified alpha, the Haar ratio,
/// and the median simulated copy ratio over `trials` fresh Haar states.
///
/// Trials are keyed by (seed, p index, trial index) and run on a small
/// scoped thread pool (capped by the INCOMPAT_THREADS environment
/// variable); aggregation is order-insensitive, so the worker count never
/// changes a reported value.
pub fn fig3_sweep(
    p_values: &[f64],
    trials: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<ComplexityReport>> {
    if trials == 0 {
        return Err(Error::InvalidState("trials must be >= 1".into()));
    }
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidState("p values must lie in [0, 1]".into()));
    }
    let opts = ShotOptions::default();
    let solver = SolverOptions::default();
    let mut reports = Vec::with_capacity(p_values.len());
    for (pi, &p) in p_values.iter().enumerate() {
        let (o1, o2) = fig3_pair(p);
        let alpha = iterative_alpha_max(&[o1.clone(), o2.clone()], &solver)?.alpha_max;
        let lam_haar = lambda_haar(&o1, &o2, alpha)?;
        let workers = worker_count(trials);
        let mut outcomes: Vec<Option<Result<TrialOutcome>>> = Vec::new();
        outcomes.resize_with(trials, || None);
        let chunk = trials.div_ceil(workers);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (w, slots) in outcomes.chunks_mut(chunk).enumerate() {
                let o1 = &o1;
                let o2 = &o2;
                let opts = &opts;
                handles.push(scope.spawn(move || {
                    for (off, slot) in slots.iter_mut().enumerate() {
                        let t = (w * chunk + off) as u64;
                        let ts = derive_seed2(seed, pi as u64, t);
                        *slot = Some(run_trial(o1, o2, alpha, epsilon, ts, opts));
                    }
                }));
            }
            for h in handles {
                h.join().expect("trial worker panicked");
            }
        });
        let mut n_os = Vec::with_capacity(trials);
        let mut n_zs = Vec::with_capacity(trials);
        let mut ratios = Vec::with_capacity(trials);
        let mut lambdas = Vec::with_capacity(trials);
        for slot in outcomes {
            let out = slot.expect("trial slot unfilled")?;
            ratios.push(out.n_z as f64 / out.n_o as f64);
            n_os.push(out.n_o);
            n_zs.push(out.n_z);
            lambdas.push(out.lambda);
        }
        reports.push(ComplexityReport {
            p,
            alpha_max: alpha,
            lambda: median_f64(&mut lambdas),
            lambda_haar: lam_haar,
            lambda_exp: median_f64(&mut ratios),
            n_z_exp: median_u64(&mut n_zs),
            n_o_exp: median_u64(&mut n_os),
            trials,
        });
    }
    Ok(reports)
}

/// CSV rows matching the sweep schema
/// `p,alpha_max,lambda_haar,lambda_exp,n_z,n_o,trials`.
pub fn write_reports_csv(reports: &[ComplexityReport], out: &mut impl std::io::Write) -> Result<()> {
    writeln!(out, "p,alpha_max,lambda_haar,lambda_exp,n_z,n_o,trials")?;
    for r in reports {
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{},{},{}",
            r.p, r.alpha_max, r.lambda_haar, r.lambda_exp, r.n_z_exp, r.n_o_exp, r.trials
        )?;
    }
    Ok(())
}

/// JSON-lines rows with the same fields as the CSV schema.
pub fn write_reports_jsonl(
    reports: &[ComplexityReport],
    out: &mut impl std::io::Write,
) -> Result<()> {
    for r in reports {
        let row = serde_json::json!({
            "p": r.p,
            "alpha_max": r.alpha_max,
            "lambda_haar": r.lambda_haar,
            "lambda_exp": r.lambda_exp,
            "n_z": r.n_z_exp,
            "n_o": r.n_o_exp,
            "trials": r.trials,
        });
        writeln!(out, "{}", serde_json::to_string(&row).expect("report row serializes"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CVector;
    use crate::observable::random_observable;
    use crate::pauli::PauliString;
    use crate::presets::z_pair;
    use num_complex::Complex64;

    fn z1_z2() -> (Observable, Observable) {
        z_pair()
    }

    fn basis_state(n: usize, index: usize) -> DensityMatrix {
        let mut v = CVector::zeros(1 << n);
        v[index] = Complex64::new(1.0, 0.0);
        DensityMatrix::pure(&v).unwrap()
    }

    #[test]
    fn projective_on_pure_eigenstate_is_deterministic() {
        let rho = basis_state(2, 0);
        let (z1, _) = z1_z2();
        let stats = sample_projective(&rho, &z1, 500, 7).unwrap();
        assert!((stats.mean - 1.0).abs() < 1e-12);
        assert_eq!(stats.sample_variance, 0.0);
        assert_eq!(stats.kind, EstimatorKind::Projective);
    }

    #[test]
    fn projective_on_mixed_state_matches_binomial() {
        let rho = DensityMatrix::maximally_mixed(2);
        let (z1, _) = z1_z2();
        let stats = sample_projective(&rho, &z1, 1_000_000, 11).unwrap();
        // binomial SE at N = 1e6 is 1e-3; 4 sigma
        assert!(stats.mean.abs() <= 0.004, "mean {}", stats.mean);
        assert!((stats.sample_variance - 1.0).abs() <= 0.01);
    }

    #[test]
    fn qnn_z_identity_channel_on_basis_state() {
        let ch = MixedUnitaryChannel::identity(2, 3);
        let rho = basis_state(2, 0);
        let (s1, s2) = sample_qnn_z(&ch, &rho, 1.0, 200, 3).unwrap();
        assert!((s1.mean - 1.0).abs() < 1e-12);
        assert!((s2.mean - 1.0).abs() < 1e-12);
        assert_eq!(s1.sample_variance, 0.0);
        assert_eq!(s2.sample_variance, 0.0);
        assert_eq!(s1.alpha, Some(1.0));
    }

    #[test]
    fn qnn_z_raw_means_stay_bounded() {
        let ch = MixedUnitaryChannel::identity(2, 2);
        let rho = haar_state(2, 99);
        let alpha = 0.5;
        let (s1, s2) = sample_qnn_z(&ch, &rho, alpha, 4000, 5).unwrap();
        for s in [&s1, &s2] {
            let raw_mean = s.mean * alpha;
            assert!((-1.0..=1.0).contains(&raw_mean));
        }
    }

    #[test]
    fn analytic_variances_on_mixed_state() {
        let rho = DensityMatrix::maximally_mixed(2);
        let (z1, _) = z1_z2();
        let (vo, vz) = analytic_variances(&rho, &z1, 1.0).unwrap();
        assert!((vo - 1.0).abs() < 1e-12);
        assert!((vz - 1.0).abs() < 1e-12);
        let (vo, vz) = analytic_variances(&rho, &z1, 0.5).unwrap();
        assert!((vo - 1.0).abs() < 1e-12);
        assert!((vz - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_ratio_on_z_pair() {
        let rho = DensityMatrix::maximally_mixed(2);
        let (z1, z2) = z1_z2();
        assert!((lambda_ratio(&rho, &z1, &z2, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((lambda_ratio(&rho, &z1, &z2, 0.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_ratio_decreases_in_alpha() {
        let rho = haar_state(2, 17);
        let o1 = random_observable(2, 21).unwrap();
        let o2 = random_observable(2, 22).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let a = k as f64 / 10.0;
            let lam = lambda_ratio(&rho, &o1, &o2, a).unwrap();
            assert!(lam < prev);
            prev = lam;
        }
    }

    #[test]
    fn lambda_haar_oracles() {
        let (o1, o2) = fig3_pair(0.0);
        assert!((lambda_haar(&o1, &o2, 1.0).unwrap() - 0.5).abs() < 1e-12);

        let xx = Observable::from_pauli_sum(&[(1.0, "XX".parse::<PauliString>().unwrap())]).unwrap();
        let zsum = Observable::from_pauli_sum(&[
            (0.5, "ZI".parse::<PauliString>().unwrap()),
            (0.5, "IZ".parse::<PauliString>().unwrap()),
        ])
        .unwrap();
        let lam = lambda_haar(&xx, &zsum, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert!((lam - 19.0 / 12.0).abs() < 1e-12, "lam {lam}");
    }

    #[test]
    fn bernstein_oracles() {
        let rho = DensityMatrix::maximally_mixed(2);
        let (z1, z2) = z1_z2();
        let delta = 2.0 / std::f64::consts::E;
        let b = bernstein_bounds(&z1, &z2, &rho, 1.0, 0.1, delta).unwrap();
        assert!((b.n_o - 400.0).abs() < 1e-9, "n_o {}", b.n_o);
        assert!((b.n_z - 200.0 * (1.0 + 2.0 / 15.0)).abs() < 1e-9, "n_z {}", b.n_z);
    }

    #[test]
    fn bernstein_ratio_approaches_lambda() {
        let rho = haar_state(2, 31);
        let o1 = random_observable(2, 32).unwrap();
        let o2 = random_observable(2, 33).unwrap();
        let alpha = 0.7;
        let b = bernstein_bounds(&o1, &o2, &rho, alpha, 1e-4, 0.05).unwrap();
        let lam = lambda_ratio(&rho, &o1, &o2, alpha).unwrap();
        assert!((b.n_z / b.n_o - lam).abs() / lam < 0.01);
    }

    #[test]
    fn copies_zero_variance_hits_first_checkpoint() {
        let n = copies_to_accuracy(|_| 0.25, 0.25, 1e-6, 1, &ShotOptions::default()).unwrap();
        assert_eq!(n, 64);
    }

    #[test]
    fn copies_budget_exceeded_is_reported() {
        // mean 0 stream asked for accuracy around 1: can never qualify
        let opts = ShotOptions { max_shots: 1 << 12 };
        let err = copies_to_accuracy(
            |rng: &mut ChaCha8Rng| if rng.gen::<bool>() { 1.0 } else { -1.0 },
            1.0,
            1e-3,
            5,
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }

    #[test]
    fn copies_track_inverse_square_scaling() {
        let rho = DensityMatrix::maximally_mixed(2);
        let (z1, _) = z1_z2();
        let eps = 0.01;
        let mut counts: Vec<u64> = (0..100)
            .map(|s| {
                copies_to_accuracy(
                    projective_sampler(&rho, &z1).unwrap(),
                    0.0,
                    eps,
                    derive_seed(s, 0xC0),
                    &ShotOptions::default(),
                )
                .unwrap()
            })
            .collect();
        let med = median_u64(&mut counts) as f64;
        let clt = 1.0 / (eps * eps); // Var = 1
        assert!(med >= clt / 4.0 && med <= clt * 4.0, "median {med}");
    }

    #[test]
    fn scaled_readout_needs_more_copies_than_projective() {
        let rho = DensityMatrix::maximally_mixed(2);
        let (z1, _) = z1_z2();
        let alpha = 0.5;
        let eps = 0.02;
        let mut d_proj = Vec::new();
        let mut d_z = Vec::new();
        for s in 0..30u64 {
            d_proj.push(
                copies_to_accuracy(
                    projective_sampler(&rho, &z1).unwrap(),
                    0.0,
                    eps,
                    derive_seed(s, 0xD0),
                    &ShotOptions::default(),
                )
                .unwrap(),
            );
            d_z.push(
                copies_to_accuracy(
                    z_readout_sampler(0.0, alpha),
                    0.0,
                    eps,
                    derive_seed(s, 0xD1),
                    &ShotOptions::default(),
                )
                .unwrap(),
            );
        }
        assert!(median_u64(&mut d_z) > median_u64(&mut d_proj));
    }

    #[test]
    fn sweep_single_point_smoke() {
        let reports = fig3_sweep(&[0.0], 5, 0.05, 42).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert!((r.alpha_max - 1.0).abs() < 1e-6);
        assert!((r.lambda_haar - 0.5).abs() < 1e-9);
        assert!(r.lambda_exp > 0.0);
        assert_eq!(r.trials, 5);
    }

    #[test]
    fn report_writers_match_schema() {
        let reports = vec![ComplexityReport {
            p: 0.1,
            alpha_max: 0.9,
            lambda: 0.6,
            lambda_haar: 0.55,
            lambda_exp: 0.62,
            n_z_exp: 4096,
            n_o_exp: 8192,
            trials: 10,
        }];
        let mut csv = Vec::new();
        write_reports_csv(&reports, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("p,alpha_max,lambda_haar,lambda_exp,n_z,n_o,trials\n"));
        assert!(text.contains("0.100000,0.900000,0.550000,0.620000,4096,8192,10"));

        let mut jsonl = Vec::new();
        write_reports_jsonl(&reports, &mut jsonl).unwrap();
        let line = String::from_utf8(jsonl).unwrap();
        let row: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        for key in ["p", "alpha_max", "lambda_haar", "lambda_exp", "n_z", "n_o", "trials"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
    }
}
