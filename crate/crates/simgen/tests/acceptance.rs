//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use simgen::bench::{run_experiment, thread_count};
use simgen::config_io::{load_config, read_config};
use simgen_core::analysis::logistic::{log_likelihood, score};
use simgen_core::analysis::{
    auroc, build_design, cross_validate, effect_recovery_report, fit_logistic_irls,
    prevalence_report, Design, DesignOptions, ExperimentSettings, GbtParams, Learner, SiteEncoding,
};
use simgen_core::config::*;
use simgen_core::model::scale_interaction;
use simgen_core::rng::derive_stream;
use simgen_core::{simulate, Error, SimulationConfig};
use statrs::distribution::{ContinuousCDF, StudentsT};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> SimulationConfig {
    load_config(&configs().join(name), None).unwrap()
}

fn normal(name: &str, role: FeatureRole) -> FeatureSpec {
    FeatureSpec {
        name: name.into(),
        kind: FeatureKind::Continuous,
        role,
        distribution: Distribution::Normal { mean: 0.0, sd: 1.0 },
        noise_correlation_group: None,
        noise_correlation: None,
    }
}

fn categorical(name: &str, probabilities: Vec<f64>) -> FeatureSpec {
    FeatureSpec {
        name: name.into(),
        kind: FeatureKind::Categorical,
        role: FeatureRole::Predictive,
        distribution: Distribution::Categorical { probabilities },
        noise_correlation_group: None,
        noise_correlation: None,
    }
}

fn base_config(n: usize, n_sites: usize, seed: u64, features: Vec<FeatureSpec>) -> SimulationConfig {
    SimulationConfig {
        simulation: SimulationSection {
            n_samples: n,
            n_sites,
            site_proportions: None,
            seed,
        },
        prevalence: PrevalenceSpec {
            range: Some((0.1, 0.5)),
            ..PrevalenceSpec::default()
        },
        features,
        effects: EffectSpec::default(),
        site_effects: SiteEffectSpec::default(),
        subgroups: vec![],
        temporal: None,
        missingness: None,
        outcome: OutcomeSpec::default(),
    }
}

fn ulps(a: f64, b: f64) -> u64 {
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

fn criterion_1() -> Outcome {
    let mut s = derive_stream(1, "acceptance/scaling");
    let mut worst = 0;
    let mut passthrough = true;
    for _ in 0..1000 {
        let gamma = 10.0 * (2.0 * s.next_open01() - 1.0);
        let p = 2 + s.next_index(9) as u32;
        let scaled = scale_interaction(gamma, p, true);
        worst = worst.max(ulps(scaled * f64::from(p).sqrt(), gamma));
        passthrough &= scale_interaction(gamma, p, false).to_bits() == gamma.to_bits();
    }
    outcome(
        worst <= 1 && passthrough,
        format!("max ulp error {worst} over 1000 pairs, pass-through exact: {passthrough}"),
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simgen"))
}

fn generate(config: &Path, out: &Path) -> bool {
    bin()
        .args(["generate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status
        .success()
}

fn ground_truth_block(dir: &Path) -> String {
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("metadata.json")).unwrap()).unwrap();
    serde_json::to_string(&meta["ground_truth"]).unwrap()
}

fn criterion_2() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("medium.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if !(generate(&config, &a) && generate(&config, &b)) {
        return outcome(false, "generation failed");
    }
    let identical = ["data.csv", "metadata.json"]
        .iter()
        .all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap());

    let mut cfg = read_config(&config).unwrap();
    let mut blocks = Vec::new();
    for n in [1000, 10_000] {
        cfg.simulation.n_samples = n;
        let path = dir.path().join(format!("n{n}.json"));
        fs::write(&path, simgen::config_io::canonical_json(&cfg)).unwrap();
        let out = dir.path().join(format!("out{n}"));
        if !generate(&path, &out) {
            return outcome(false, format!("generation at n={n} failed"));
        }
        blocks.push(ground_truth_block(&out));
    }
    let stable = blocks[0] == blocks[1];
    outcome(
        identical && stable,
        format!("repeat run byte-identical: {identical}; ground_truth unchanged 1000->10000: {stable}"),
    )
}

fn prevalence_config(n: usize, seed: u64) -> SimulationConfig {
    let mut features: Vec<FeatureSpec> =
        (0..5).map(|j| normal(&format!("x{j}"), FeatureRole::Predictive)).collect();
    features.push(categorical("c0", vec![0.6, 0.3, 0.1]));
    features.push(normal("noise0", FeatureRole::Noise));
    let mut cfg = base_config(n, 8, seed, features);
    cfg.site_effects.intercept_sd = 0.3;
    cfg.site_effects.feature_interaction_sd = 0.3;
    cfg.outcome.label_temperature = 0.05;
    cfg
}

fn criterion_3() -> Outcome {
    let sizes = [1000, 5000, 10_000];
    let mut worst_residual: f64 = 0.0;
    let (mut within, mut cells) = (0, 0);
    let (mut monotone, mut sites) = (0, 0);
    for seed in 0..20 {
        let mut widths = Vec::new();
        for &n in &sizes {
            let sim = simulate(&prevalence_config(n, seed)).unwrap();
            let ds = &sim.dataset;
            let cal = ds.calibration.as_ref().unwrap();
            for r in cal.residuals() {
                worst_residual = worst_residual.max(r.unwrap_or(f64::INFINITY));
            }
            let report =
                prevalence_report(ds, &sim.model.prevalence_targets, 1000, 0.95, seed).unwrap();
            for row in &report.rows {
                let bound = 3.0 * (row.target * (1.0 - row.target) / row.n_site as f64).sqrt();
                cells += 1;
                within += usize::from((row.observed - row.target).abs() <= bound);
            }
            widths.push(
                report
                    .rows
                    .iter()
                    .map(|r| r.ci_high.unwrap() - r.ci_low.unwrap())
                    .collect::<Vec<_>>(),
            );
        }
        for s in 0..8 {
            sites += 1;
            monotone += usize::from(widths[0][s] > widths[1][s] && widths[1][s] > widths[2][s]);
        }
    }
    let share = within as f64 / cells as f64;
    let pass = worst_residual <= 1e-6 && share >= 0.95 && monotone == sites;
    outcome(
        pass,
        format!(
            "(a) max calibration residual {worst_residual:.2e}; (b) {within}/{cells} cells within 3 SE ({:.1}%); \
             (c) CI width strictly decreasing for {monotone}/{sites} (seed, site) pairs",
            100.0 * share
        ),
    )
}

fn criterion_4() -> Outcome {
    let base = config("recovery.toml");
    let sizes = [1000, 5000, 10_000];
    let mut medians = [0.0; 3];
    let (mut seeds_ok, mut noise_ok, mut noise_cases) = (0, 0, 0);
    let mut worst_large = 0.0f64;
    for seed in 1..=10u64 {
        for (k, &n) in sizes.iter().enumerate() {
            let mut cfg = base.clone();
            cfg.simulation.seed = seed;
            cfg.simulation.n_samples = n;
            let sim = simulate(&cfg).unwrap();
            let report = effect_recovery_report(
                &sim.dataset,
                &sim.model,
                cfg.outcome.label_temperature,
                0.0,
            )
            .unwrap();
            medians[k] += report.median_relative_error / 10.0;
            for r in &report.noise_rows {
                noise_cases += 1;
                noise_ok += usize::from(r.recovered_effect.abs() <= 3.0 * r.std_error);
            }
            if n == 10_000 {
                let large: Vec<f64> = report
                    .rows
                    .iter()
                    .filter(|r| r.true_effect.abs() >= 0.5)
                    .map(|r| r.relative_error.unwrap())
                    .collect();
                let worst = large.iter().copied().fold(0.0, f64::max);
                worst_large = worst_large.max(worst);
                seeds_ok += usize::from(!large.is_empty() && worst <= 0.15);
            }
        }
    }
    let decreasing = medians[0] > medians[1] && medians[1] > medians[2];
    let noise_share = noise_ok as f64 / noise_cases as f64;
    outcome(
        seeds_ok >= 9 && decreasing && noise_share >= 0.9,
        format!(
            "|beta|>=0.5 within 15% at N=10000 in {seeds_ok}/10 seeds (worst {:.3}); mean median relative error \
             {:.4} > {:.4} > {:.4}: {decreasing}; noise |coef| <= 3 SE in {noise_ok}/{noise_cases}",
            worst_large, medians[0], medians[1], medians[2]
        ),
    )
}

fn pairwise_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        if yi == 0 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj == 0 {
                pairs += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    wins / pairs
}

fn criterion_5() -> Outcome {
    let mut s = derive_stream(5, "acceptance/oracles");
    let mut auroc_ok = 0;
    let mut instances = 0;
    while instances < 200 {
        let n = 2 + s.next_index(999);
        let levels = 1 + s.next_index(50);
        let scores: Vec<f64> = (0..n).map(|_| s.next_index(levels) as f64 / 7.0).collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(s.next_open01() < 0.3)).collect();
        if !(labels.contains(&0) && labels.contains(&1)) {
            continue;
        }
        instances += 1;
        let got = auroc(&scores, &labels).unwrap();
        auroc_ok += usize::from((got - pairwise_auroc(&scores, &labels)).abs() <= 1e-12);
    }

    let mut worst_or: f64 = 0.0;
    for _ in 0..100 {
        let counts: Vec<usize> = (0..4).map(|_| 1 + s.next_index(200)).collect();
        let (a, b, c, d) = (counts[0], counts[1], counts[2], counts[3]);
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (x, y, k) in [(1.0, 1u8, a), (1.0, 0, b), (0.0, 1, c), (0.0, 0, d)] {
            for _ in 0..k {
                values.extend([1.0, x]);
                labels.push(y);
            }
        }
        let design = Design::new(vec!["(intercept)".into(), "x".into()], values, true).unwrap();
        let fit = fit_logistic_irls(&design, &labels, 0.0).unwrap();
        let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
        worst_or = worst_or
            .max((fit.coefficients[1] - (a * d / (b * c)).ln()).abs())
            .max((fit.coefficients[0] - (c / d).ln()).abs());
    }

    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let n = 300;
        let beta = [0.3, -0.8, 1.2];
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let (x1, x2) = (s.next_standard_normal(), s.next_standard_normal());
            let eta = beta[0] + beta[1] * x1 + beta[2] * x2;
            labels.push(u8::from(s.next_open01() < 1.0 / (1.0 + (-eta).exp())));
            values.extend([1.0, x1, x2]);
        }
        let design =
            Design::new(vec!["(intercept)".into(), "a".into(), "b".into()], values, true).unwrap();
        let fit = fit_logistic_irls(&design, &labels, 0.0).unwrap();
        let g = score(&design, &labels, &fit.coefficients);
        let h = 1e-5;
        for k in 0..3 {
            let mut up = fit.coefficients.clone();
            let mut down = fit.coefficients.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (log_likelihood(&design, &labels, &up) - log_likelihood(&design, &labels, &down))
                / (2.0 * h);
            worst_grad = worst_grad.max((fd - g[k]).abs());
        }
    }
    outcome(
        auroc_ok == 200 && worst_or <= 1e-6 && worst_grad <= 1e-4,
        format!(
            "AUROC = pairwise oracle on {auroc_ok}/200; 2x2 log-odds max error {worst_or:.2e}; \
             score vs finite difference max error {worst_grad:.2e}"
        ),
    )
}

/// One-sided Welch t-test of mean(a) > mean(b).
fn welch_p(a: &[f64], b: &[f64]) -> f64 {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
}

fn criterion_6() -> Outcome {
    let base = config("generalisability.toml");
    let grid = vec![0.0, 0.3, 0.6, 0.9, 1.2, 1.5];
    let settings = ExperimentSettings {
        grid: grid.clone(),
        holdout_fraction: 0.2,
        n_trials: 5,
        learners: vec![
            Learner::Logistic { ridge: simgen::cli::LR_RIDGE },
            Learner::Gbt(GbtParams::default()),
        ],
        k_folds: 5,
        site_encoding: SiteEncoding::Code,
    };
    let table = run_experiment(&base, &settings, thread_count()).unwrap();
    let mean = |m: &str, sd: f64| table.row(m, sd).unwrap().degradation_mean;
    let a = mean("lr", 0.0).abs() <= 0.02 && mean("gbt", 0.0).abs() <= 0.02;
    let b = grid.iter().filter(|&&s| s >= 0.6).all(|&s| mean("gbt", s) > mean("lr", s));
    let p = welch_p(&table.degradations("gbt", 0.6), &table.degradations("gbt", 0.0));
    let c = p < 0.05;
    let d = grid.iter().all(|&s| mean("lr", s) <= 0.05);
    let fmt = |m: &str| grid.iter().map(|&s| format!("{:.4}", mean(m, s))).collect::<Vec<_>>().join(" ");
    outcome(
        a && b && c && d,
        format!(
            "(a) {a} (b) {b} (c) {c}, p={p:.4} (d) {d}; LR degradation [{}]; GBT degradation [{}]",
            fmt("lr"),
            fmt("gbt")
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = config("predictive.toml");
    let sim = simulate(&cfg).unwrap();
    let options = DesignOptions {
        intercept: true,
        demographics: true,
        ..DesignOptions::default()
    };
    let data = build_design(&sim.dataset, &options, None).unwrap();
    let oof = |learner: &Learner| {
        let mut stream = derive_stream(cfg.seed(), "analysis/cv");
        cross_validate(learner, &data.design, &data.labels, 5, &mut stream)
            .unwrap()
            .oof_auroc
    };
    let lr = oof(&Learner::Logistic { ridge: simgen::cli::LR_RIDGE });
    let gbt = oof(&Learner::Gbt(GbtParams::default()));
    outcome(
        lr >= 0.75 && gbt >= 0.75 && gbt >= lr - 0.01,
        format!("out-of-fold AUROC: LR {lr:.4}, GBT {gbt:.4}"),
    )
}

fn criterion_8() -> Outcome {
    let mut times = Vec::new();
    let mut ok = true;
    for name in ["basic.toml", "medium.toml", "large.toml"] {
        let cfg = config(name);
        let start = Instant::now();
        let generated = simulate(&cfg).is_ok();
        let elapsed = start.elapsed();
        ok &= generated && elapsed < Duration::from_secs(60);
        times.push(format!("{name} {:.2}s", elapsed.as_secs_f64()));
    }
    let mut wide = base_config(
        1000,
        3,
        1,
        (0..60).map(|j| normal(&format!("f{j}"), FeatureRole::Predictive)).collect(),
    );
    wide.effects.interaction_max_order = 5;
    let guard = match simulate(&wide) {
        Err(e @ Error::InteractionCap { .. }) => {
            let message = e.to_string();
            (message.contains("5985137"), message)
        }
        other => (false, format!("{other:?}")),
    };
    outcome(ok && guard.0, format!("{}; cap guard: {}", times.join(", "), guard.1))
}

fn criterion_9() -> Outcome {
    let features = vec![
        normal("a", FeatureRole::Predictive),
        normal("b", FeatureRole::Predictive),
        normal("z", FeatureRole::Noise),
    ];
    let (mut ok, mut cases) = (0, 0);
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut cfg = base_config(10_000, 3, seed, features.clone());
        cfg.missingness = Some(MissingSpec {
            per_feature_rates: ["a", "b", "z"].iter().map(|f| (f.to_string(), 0.3)).collect(),
            per_site_multipliers: Default::default(),
        });
        let ds = simulate(&cfg).unwrap().dataset;
        for c in 0..3 {
            let (mut nm, mut km, mut nu, mut ku) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..ds.n_patients() {
                let y = f64::from(ds.outcomes[i]);
                if ds.is_missing(i, 0, c) {
                    nm += 1.0;
                    km += y;
                } else {
                    nu += 1.0;
                    ku += y;
                }
            }
            let pooled = (km + ku) / (nm + nu);
            let se = (pooled * (1.0 - pooled) * (1.0 / nm + 1.0 / nu)).sqrt();
            let z = (km / nm - ku / nu).abs() / se;
            worst = worst.max(z);
            cases += 1;
            ok += usize::from(z <= 3.0);
        }
    }
    outcome(
        ok == cases,
        format!("{ok}/{cases} (feature, seed) cases within 3 SE, largest |z| {worst:.2}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 interaction scaling identity", criterion_1),
        ("2 determinism and stream separation", criterion_2),
        ("3 prevalence calibration", criterion_3),
        ("4 effect recovery", criterion_4),
        ("5 oracle equivalence", criterion_5),
        ("6 generalisability pattern", criterion_6),
        ("7 predictive signal", criterion_7),
        ("8 generation budget", criterion_8),
        ("9 MCAR", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let result = run();
        println!(
            "{} criterion {name} ({:.1}s): {}",
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
