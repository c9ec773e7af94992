//! Acceptance checks against the journal citation study.
//!
//! Every criterion prints one `PASS`/`FAIL` line. Tolerances are fixed here
//! and never loosened; components that cannot meet them are listed in
//! `SHORTFALLS` with the reason, so the suite stays green only while the
//! failures are exactly the understood ones.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use tpcm_core::data::observed_preference_matrix;
use tpcm_core::{
    expected_frequencies, fit, log_likelihood, log_likelihood_gradient, preference_matrix, reg_inc_beta, BetaParams,
    Estimator, FitReport, GridSpec, ModelSpec, PairedComparisonData, Posterior, PosteriorSpec, Prior, WorthVector,
};

const NUS: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 15.0, 30.0];

/// (criterion, item) pairs known to miss their tolerance; the README has
/// the analysis. In short: the tabulated uniform modes for these ν are not
/// stationary points of the posterior, the tabulated Jeffreys means for
/// ν = 4 and 30 disagree with an independent scipy evaluation that does
/// reproduce the ν = 1 row, and the tabulated p-values were computed from
/// expected counts rounded to integers.
const SHORTFALLS: &[(u32, &str)] = &[
    (2, "nu=3"),
    (2, "nu=15"),
    (2, "nu=30"),
    (3, "jeffreys nu=4 theta_1"),
    (3, "jeffreys nu=4 theta_3"),
    (3, "jeffreys nu=30"),
    (6, "nu=3 p"),
    (6, "nu=4 p"),
];

struct Outcome {
    id: u32,
    title: &'static str,
    failures: Vec<String>,
    checked: usize,
}

impl Outcome {
    fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            failures: Vec::new(),
            checked: 0,
        }
    }

    fn close(&mut self, item: &str, got: f64, want: f64, tol: f64) {
        self.checked += 1;
        let within = (got - want).abs() <= tol;
        if !within {
            self.failures
                .push(format!("{item}: got {got:.5}, want {want:.5} (tol {tol:e})"));
        }
    }

    fn holds(&mut self, item: &str, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failures.push(item.to_string());
        }
    }

    fn finish(self) {
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {}: {} ({} checks, {} outside tolerance)",
            self.id,
            verdict,
            self.title,
            self.checked,
            self.failures.len()
        );
        for f in &self.failures {
            println!("    {f}");
        }
        let unexplained: Vec<&String> = self
            .failures
            .iter()
            .filter(|f| !SHORTFALLS.iter().any(|&(id, item)| id == self.id && f.starts_with(item)))
            .collect();
        assert!(unexplained.is_empty(), "unexplained failures: {unexplained:?}");
        for &(id, item) in SHORTFALLS.iter().filter(|(id, _)| *id == self.id) {
            assert!(
                self.failures.iter().any(|f| f.starts_with(item)),
                "criterion {id} item {item} is listed as a shortfall but now passes"
            );
        }
    }
}

struct Analysis {
    reports: Vec<(f64, Prior, FitReport)>,
    elapsed: Duration,
}

impl Analysis {
    fn get(&self, nu: f64, prior: Prior) -> &FitReport {
        &self
            .reports
            .iter()
            .find(|(n, p, _)| *n == nu && *p == prior)
            .expect("combination was fitted")
            .2
    }
}

/// The full 12-combination analysis at default grid settings, run once.
fn analysis() -> &'static Analysis {
    static CELL: OnceLock<Analysis> = OnceLock::new();
    CELL.get_or_init(|| {
        let data = PairedComparisonData::journals();
        let start = Instant::now();
        let mut reports = Vec::new();
        for prior in [Prior::Uniform, Prior::Jeffreys] {
            for nu in NUS {
                let spec = PosteriorSpec::with_defaults(prior, ModelSpec::t(nu).unwrap()).unwrap();
                let report = fit(&data, &spec, &[Estimator::Mean, Estimator::Mode]).unwrap();
                reports.push((nu, prior, report));
            }
        }
        Analysis {
            reports,
            elapsed: start.elapsed(),
        }
    })
}

fn worths(theta: [f64; 4]) -> WorthVector {
    WorthVector::centered(PairedComparisonData::journals().labels().to_vec(), theta.to_vec()).unwrap()
}

const UNIFORM_MEANS: [[f64; 4]; 6] = [
    [1.37908, -3.98254, 0.98266, 1.62080],
    [0.72445, -2.02793, 0.37334, 0.93014],
    [0.60862, -1.68375, 0.27432, 0.80081],
    [0.56167, -1.54542, 0.23708, 0.74667],
    [0.47751, -1.29895, 0.17721, 0.64423],
    [0.46338, -1.25942, 0.16802, 0.62802],
];

const UNIFORM_MODES: [[f64; 4]; 6] = [
    [1.35722, -3.91721, 0.96303, 1.59696],
    [0.72057, -2.01634, 0.37032, 0.92545],
    [0.61602, -1.72593, 0.31650, 0.79341],
    [0.56037, -1.54127, 0.23599, 0.74491],
    [0.49328, -1.38834, 0.26660, 0.62846],
    [0.47079, -1.30160, 0.21020, 0.62061],
];

const JEFFREYS_MEANS: [[f64; 4]; 6] = [
    [1.36279, -3.93377, 0.96793, 1.60305],
    [0.72135, -2.01865, 0.37092, 0.92639],
    [0.60683, -1.67871, 0.27311, 0.79878],
    [0.57200, -1.54016, 0.22195, 0.74620],
    [0.48099, -1.29688, 0.17921, 0.63668],
    [0.48840, -1.28792, 0.19643, 0.60309],
];

/// Uniform-prior preference probabilities from posterior means, rows
/// (1,2) (1,3) (1,4) (2,3) (2,4) (3,4) of the upper triangle.
const UNIFORM_PREFERENCES: [[f64; 6]; 6] = [
    [0.94130, 0.62013, 0.42450, 0.06326, 0.05621, 0.31920],
    [0.94473, 0.62048, 0.42803, 0.06917, 0.04891, 0.31683],
    [0.94714, 0.61992, 0.42993, 0.07256, 0.04445, 0.31750],
    [0.94859, 0.61912, 0.43112, 0.07462, 0.04183, 0.31858],
    [0.95203, 0.61596, 0.43491, 0.08029, 0.03550, 0.32360],
    [0.95239, 0.61512, 0.43517, 0.08189, 0.03440, 0.32442],
];

/// Uniform-prior predictive probabilities for ν = 1..4, same layout.
const UNIFORM_PREDICTIVE: [[f64; 6]; 4] = [
    [0.93766, 0.62021, 0.42657, 0.06754, 0.05961, 0.32073],
    [0.94418, 0.61833, 0.42792, 0.06969, 0.04935, 0.31868],
    [0.94722, 0.61304, 0.42825, 0.07115, 0.04423, 0.32230],
    [0.94834, 0.61901, 0.43121, 0.07496, 0.04205, 0.31882],
];

const UPPER: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[test]
fn criterion_1_observed_preferences() {
    let mut out = Outcome::new(1, "observed preference matrix");
    let m = observed_preference_matrix(&PairedComparisonData::journals());
    let table = [
        [f64::NAN, 0.95675, 0.60880, 0.43762],
        [0.04325, f64::NAN, 0.07718, 0.05802],
        [0.39119, 0.92281, f64::NAN, 0.30407],
        [0.56238, 0.94198, 0.69593, f64::NAN],
    ];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                out.close(&format!("({},{})", i + 1, j + 1), m.get(i, j).unwrap(), table[i][j], 1e-5);
            }
        }
    }
    out.finish();
}

#[test]
fn criterion_2_uniform_modes() {
    let mut out = Outcome::new(2, "uniform-prior posterior modes");
    let a = analysis();
    for (k, nu) in NUS.into_iter().enumerate() {
        let mode = &a.get(nu, Prior::Uniform).estimate(Estimator::Mode).unwrap().worths;
        for c in 0..4 {
            out.close(&format!("nu={nu} theta_{}", c + 1), mode.get(c), UNIFORM_MODES[k][c], 2e-3);
        }
    }
    out.finish();
}

#[test]
fn criterion_3_posterior_means() {
    let mut out = Outcome::new(3, "posterior means and Jeffreys-mode ranking");
    let a = analysis();
    for (k, nu) in NUS.into_iter().enumerate() {
        let tol = if nu <= 4.0 { 5e-3 } else { 1e-2 };
        let mean = &a.get(nu, Prior::Uniform).estimate(Estimator::Mean).unwrap().worths;
        for c in 0..4 {
            out.close(&format!("uniform nu={nu} theta_{}", c + 1), mean.get(c), UNIFORM_MEANS[k][c], tol);
        }
        let jeffreys = a.get(nu, Prior::Jeffreys);
        let mean = &jeffreys.estimate(Estimator::Mean).unwrap().worths;
        for c in 0..4 {
            out.close(&format!("jeffreys nu={nu} theta_{}", c + 1), mean.get(c), JEFFREYS_MEANS[k][c], 1e-2);
        }
        let mode_ranking = &jeffreys.estimate(Estimator::Mode).unwrap().ranking;
        out.holds(&format!("jeffreys nu={nu} mode ranking"), mode_ranking.indices == [3, 0, 2, 1]);
    }
    out.finish();
}

#[test]
fn criterion_4_plug_in_preferences() {
    let mut out = Outcome::new(4, "plug-in preference matrices");
    let a = analysis();
    for (k, nu) in NUS.into_iter().enumerate() {
        let model = ModelSpec::t(nu).unwrap();
        let tabulated = preference_matrix(&worths(UNIFORM_MEANS[k]), model).unwrap();
        let own = &a.get(nu, Prior::Uniform).estimate(Estimator::Mean).unwrap().preference_matrix;
        for (p, &(i, j)) in UPPER.iter().enumerate() {
            let want = UNIFORM_PREFERENCES[k][p];
            let item = format!("nu={nu} ({},{})", i + 1, j + 1);
            out.close(&format!("{item} tabulated means"), tabulated.get(i, j).unwrap(), want, 1e-4);
            out.close(&format!("{item} own means"), own.get(i, j).unwrap(), want, 5e-3);
        }
    }
    out.finish();
}

#[test]
fn criterion_5_predictive_probabilities() {
    let mut out = Outcome::new(5, "uniform-prior predictive probabilities");
    let a = analysis();
    for (k, nu) in NUS.into_iter().take(4).enumerate() {
        let eta = &a.get(nu, Prior::Uniform).predictive_matrix;
        for (p, &(i, j)) in UPPER.iter().enumerate() {
            out.close(
                &format!("nu={nu} ({},{})", i + 1, j + 1),
                eta.get(i, j).unwrap(),
                UNIFORM_PREDICTIVE[k][p],
                1e-2,
            );
            out.holds(
                &format!("nu={nu} ({},{}) complement", i + 1, j + 1),
                (eta.get(i, j).unwrap() + eta.get(j, i).unwrap() - 1.0).abs() <= 1e-9,
            );
        }
    }
    out.finish();
}

#[test]
fn criterion_6_goodness_of_fit() {
    let mut out = Outcome::new(6, "chi-square goodness of fit on uniform means");
    let a = analysis();
    let table: [(f64, f64, [[f64; 4]; 4]); 4] = [
        (7.51316, 0.05722, [[0., 718., 507., 214.], [45., 0., 56., 16.], [311., 825., 0., 149.], [291., 277., 318., 0.]]),
        (4.65684, 0.19872, [[0., 721., 508., 216.], [42., 0., 61., 14.], [310., 820., 0., 148.], [289., 279., 319., 0.]]),
        (3.75587, 0.28906, [[0., 723., 507., 217.], [40., 0., 64., 13.], [311., 817., 0., 148.], [288., 280., 319., 0.]]),
        (4.09782, 0.25109, [[0., 724., 506., 218.], [39., 0., 66., 12.], [312., 815., 0., 149.], [287., 281., 318., 0.]]),
    ];
    for (k, nu) in NUS.into_iter().take(4).enumerate() {
        let (chi, p, expected) = table[k];
        let estimate = a.get(nu, Prior::Uniform).estimate(Estimator::Mean).unwrap();
        let gof = estimate.gof.as_ref().unwrap();
        out.close(&format!("nu={nu} chi2"), gof.chi_square, chi, 0.15);
        out.close(&format!("nu={nu} p"), gof.p_value, p, 0.015);
        out.holds(&format!("nu={nu} df"), gof.df == 3);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    out.close(
                        &format!("nu={nu} expected ({},{})", i + 1, j + 1),
                        estimate.expected_frequencies.get(i, j).unwrap(),
                        expected[i][j],
                        1.0,
                    );
                }
            }
        }
    }
    out.finish();
}

#[test]
fn criterion_7_headline_ranking() {
    let mut out = Outcome::new(7, "ranking JRSS-B > Biometrika > JASA > Comm. in Stats.");
    let a = analysis();
    let want = ["JRSS-B", "Biometrika", "JASA", "Comm. in Stats."];
    for (nu, prior, report) in &a.reports {
        for e in &report.estimates {
            out.holds(&format!("nu={nu} {prior} {}", e.estimator), e.ranking.order == want);
        }
    }
    out.holds(&format!("12 combinations in {:.1?}", a.elapsed), a.elapsed < Duration::from_secs(60));
    out.finish();
}

/// Minimal xorshift so the random cases are reproducible without a seed file.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

fn small_three_object_data() -> PairedComparisonData {
    PairedComparisonData::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![vec![0, 6, 4], vec![3, 0, 5], vec![2, 4, 0]],
    )
    .unwrap()
}

/// Posterior mean and predictive (1,2) probability by a 400 x 400 trapezoid
/// rule over a box in (θ_1, θ_2), with θ_3 = -θ_1 - θ_2.
fn brute_force(data: &PairedComparisonData, spec: &PosteriorSpec, half: f64) -> ([f64; 3], f64) {
    let m = 400;
    let h = 2.0 * half / (m - 1) as f64;
    let kernel = |t: &[f64]| tpcm_core::log_posterior_kernel(data, spec, t).unwrap();
    let peak = kernel(&[0.0, 0.0, 0.0]);
    let (mut mass, mut first, mut eta) = (0.0, [0.0; 3], 0.0);
    for a in 0..m {
        for b in 0..m {
            let wa = if a == 0 || a == m - 1 { 0.5 } else { 1.0 };
            let wb = if b == 0 || b == m - 1 { 0.5 } else { 1.0 };
            let (t1, t2) = (-half + a as f64 * h, -half + b as f64 * h);
            let theta = [t1, t2, -t1 - t2];
            let w = wa * wb * (kernel(&theta) - peak).exp();
            mass += w;
            for k in 0..3 {
                first[k] += w * theta[k];
            }
            eta += w * prob(spec.model, theta[0] - theta[1]);
        }
    }
    (first.map(|f| f / mass), eta / mass)
}

fn prob(model: ModelSpec, d: f64) -> f64 {
    tpcm_core::preference_probability(model, d, 0.0).unwrap()
}

#[test]
fn criterion_8_property_suites() {
    let mut out = Outcome::new(8, "property suites");
    let mut rng = Rng(0x9e37_79b9_7f4a_7c15);

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let model = ModelSpec::t(rng.range(0.1, 100.0)).unwrap();
        let (a, b) = (rng.range(-20.0, 20.0), rng.range(-20.0, 20.0));
        let sum = tpcm_core::preference_probability(model, a, b).unwrap()
            + tpcm_core::preference_probability(model, b, a).unwrap();
        worst = worst.max((sum - 1.0).abs());
    }
    out.close("complement law", worst, 0.0, 1e-12);

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let d = rng.range(-50.0, 50.0);
        let t = prob(ModelSpec::t(1.0).unwrap(), d);
        worst = worst.max((t - (0.5 + d.atan() / std::f64::consts::PI)).abs());
    }
    out.close("nu=1 equals Cauchy", worst, 0.0, 1e-12);

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let d = rng.range(-8.0, 8.0);
        worst = worst.max((prob(ModelSpec::t(1e6).unwrap(), d) - prob(ModelSpec::Thurstone, d)).abs());
    }
    out.close("nu=1e6 approaches Thurstone", worst, 0.0, 1e-4);

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 3 + (rng.next() * 3.0) as usize;
        let wins: Vec<Vec<u64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0 } else { (rng.next() * 40.0) as u64 + 1 }).collect())
            .collect();
        let data = PairedComparisonData::new((0..n).map(|k| format!("o{k}")).collect(), wins).unwrap();
        let model = ModelSpec::t(rng.range(0.5, 40.0)).unwrap();
        let mut theta: Vec<f64> = (0..n).map(|_| rng.range(-2.0, 2.0)).collect();
        let mean = theta.iter().sum::<f64>() / n as f64;
        theta.iter_mut().for_each(|t| *t -= mean);
        let analytic = log_likelihood_gradient(&data, model, &theta).unwrap();
        for k in 0..n {
            let step = 1e-5;
            let mut up = theta.clone();
            up[k] += step;
            let mut down = theta.clone();
            down[k] -= step;
            let numeric = (log_likelihood(&data, model, &up).unwrap() - log_likelihood(&data, model, &down).unwrap())
                / (2.0 * step);
            worst = worst.max((analytic[k] - numeric).abs() / numeric.abs().max(1.0));
        }
    }
    out.close("log-likelihood gradient", worst, 0.0, 1e-6);

    let data = small_three_object_data();
    for prior in [Prior::Uniform, Prior::Jeffreys] {
        let spec = PosteriorSpec::with_defaults(prior, ModelSpec::t(4.0).unwrap()).unwrap();
        let post = Posterior::fit(&data, &spec).unwrap();
        let (mean, eta) = brute_force(&data, &spec, 8.0);
        for k in 0..3 {
            out.close(&format!("n=3 {prior} brute-force mean theta_{}", k + 1), post.mean().get(k), mean[k], 1e-4);
        }
        out.close(
            &format!("n=3 {prior} brute-force predictive (1,2)"),
            post.predictive_matrix().get(0, 1).unwrap(),
            eta,
            1e-4,
        );
    }

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let params = BetaParams::new(rng.range(0.05, 50.0), rng.range(0.05, 50.0)).unwrap();
        let swapped = BetaParams::new(params.b(), params.a()).unwrap();
        let x = rng.next();
        let sum = reg_inc_beta(x, params).unwrap() + reg_inc_beta(1.0 - x, swapped).unwrap();
        worst = worst.max((sum - 1.0).abs());
    }
    out.close("incomplete beta reflection", worst, 0.0, 1e-10);

    out.finish();
}

#[test]
fn plug_in_expected_counts_sum_to_comparisons() {
    let data = PairedComparisonData::journals();
    let e = expected_frequencies(&data, &worths(UNIFORM_MEANS[0]), ModelSpec::t(1.0).unwrap()).unwrap();
    for (i, j) in data.unordered_pairs() {
        let total = e.get(i, j).unwrap() + e.get(j, i).unwrap();
        assert!((total - data.comparisons(i, j) as f64).abs() < 1e-9);
    }
}

#[test]
fn default_grid_is_the_documented_one() {
    let grid = GridSpec::default();
    assert_eq!(grid.points_per_dim, 48);
    assert_eq!(grid.halfwidth, 10.0);
}
