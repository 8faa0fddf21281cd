//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its runtime (run with `--nocapture` to see them).
//!
//! Two criteria are implemented as stated but are expected to stay red,
//! because the targets they encode are not reachable with valid widths
//! (details in the repository notes):
//! - criterion 3's guardrail ratio against the parametric-rate baseline
//!   sits far below the Hoeffding floor of the bound it measures;
//! - criterion 7's directional regret claim fails at the pinned horizon,
//!   where the complexity-free width exceeds the parametric rate for most
//!   rounds (the direction does hold at shorter horizons).
//! Both tests print their measured values for inspection.

use errest::bandit::falcon::{FalconConfig, FalconExperimentConfig, FalconVariant};
use errest::bandit::pipeline::{
    conformal_set, exploration_probs, max_set_size, ArmSets, Cas, PipelineConfig, RewardModel,
};
use errest::bandit::{LinearBanditEnv, LinearScorerPolicy};
use errest::concentration::{normal_quantile, ConfidenceLevel};
use errest::eecore::solver::{sup_parametric, BoxDomain, SolverConfig};
use errest::excessrisk::{fit_erm_linear, LabeledSample, RiskExperimentConfig};
use errest::inference::{CrossfitConfig, FwerConfig, WeightChoice};
use errest::means::{FiniteSimConfig, FiniteSimRow};
use errest::oracles::{exact_rademacher, quantile_oracle, FunctionTable};
use rand::Rng;
use std::time::Instant;

const ACCEPTANCE_SEED: u64 = 0xACCE97;

fn delta(d: f64) -> ConfidenceLevel {
    ConfidenceLevel::new(d).unwrap()
}

struct Criterion {
    name: &'static str,
    started: Instant,
    failures: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self { name, started: Instant::now(), failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        if !ok {
            self.failures.push(msg);
        }
    }

    fn finish(self) {
        let secs = self.started.elapsed().as_secs_f64();
        if self.failures.is_empty() {
            println!("acceptance {}: PASS ({secs:.1} s)", self.name);
        } else {
            println!(
                "acceptance {}: FAIL ({secs:.1} s) -- {}",
                self.name,
                self.failures.join("; ")
            );
            panic!("{} failed: {}", self.name, self.failures.join("; "));
        }
    }

    fn runtime_under(&mut self, limit_s: f64) {
        let secs = self.started.elapsed().as_secs_f64();
        self.check(secs < limit_s, format!("runtime {secs:.1} s exceeds {limit_s} s"));
    }
}

fn mean(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    let m = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1).max(1) as f64;
    (m, (var / n as f64).sqrt(), n)
}

fn finite_sim_rows(reps: usize, alphas: &[f64]) -> Vec<FiniteSimRow> {
    errest::means::finite_sim(&FiniteSimConfig {
        alphas: alphas.to_vec(),
        n_tasks: 500,
        reps,
        delta: delta(0.1),
        seed: ACCEPTANCE_SEED,
    })
    .unwrap()
}

#[test]
fn criterion_01_correlated_tasks_vs_union_bound() {
    let mut c = Criterion::new("criterion 1 (correlated-task simulation vs union bound)");
    let alphas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let rows = finite_sim_rows(100, &alphas);

    // union-bound column is the constant upper quantile for 500 tasks
    for r in &rows {
        c.check(
            (r.union_bound - 3.54008380).abs() <= 1e-5,
            format!("union bound {} drifted", r.union_bound),
        );
    }

    // per-alpha means of the data-driven bound
    let stats: Vec<(f64, f64)> = alphas
        .iter()
        .map(|&a| {
            let (m, se, _) =
                mean(rows.iter().filter(|r| r.alpha == a).map(|r| r.ee_bound));
            (m, se)
        })
        .collect();

    // fully correlated tasks: the bound concentrates at the one-sided
    // critical value and sits strictly below the union bound
    let (m_last, _) = stats[alphas.len() - 1];
    c.check(
        (m_last - 1.28155).abs() <= 0.15,
        format!("mean bound at full correlation {m_last:.4} vs 1.28155 +- 0.15"),
    );
    c.check(m_last < 3.54008380, format!("bound {m_last:.4} not below union bound"));

    // non-increasing in correlation, three standard errors of slack
    for w in stats.windows(2) {
        let slack = 3.0 * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt();
        c.check(
            w[1].0 <= w[0].0 + slack,
            format!("mean bound rose: {:.4} -> {:.4} (slack {slack:.4})", w[0].0, w[1].0),
        );
    }
    c.runtime_under(30.0);
    c.finish();
}

#[test]
fn criterion_02_uniform_bound_coverage() {
    let mut c = Criterion::new("criterion 2 (uniform bound coverage, 500 tasks)");
    for &alpha in &[0.0, 0.5, 1.0] {
        let rows = finite_sim_rows(1000, &[alpha]);
        let covered =
            rows.iter().filter(|r| r.ee_bound >= r.true_max).count() as f64 / rows.len() as f64;
        c.check(
            covered >= 0.87,
            format!("coverage {covered:.3} below 0.87 at correlation {alpha}"),
        );
    }
    c.runtime_under(60.0);
    c.finish();
}

#[test]
fn criterion_03_excess_risk_bound() {
    let mut c = Criterion::new("criterion 3 (excess-risk bound: coverage, monotone trace, baseline ratio)");
    let cfg = RiskExperimentConfig {
        ns: vec![100, 400, 1000],
        reps: 200,
        dim: 10,
        delta: delta(0.05),
        seed: ACCEPTANCE_SEED,
        solver_restarts: 4,
        solver_iters: 60,
    };
    let rows = errest::excessrisk::risk_experiment(&cfg).unwrap();

    for &n in &[100usize, 400] {
        let sub: Vec<_> = rows.iter().filter(|r| r.n == n).collect();
        let covered = sub.iter().filter(|r| r.bound_erm >= r.true_excess).count() as f64
            / sub.len() as f64;
        c.check(covered >= 0.93, format!("coverage {covered:.3} below 0.93 at n = {n}"));
    }
    // localization traces never increase (verified per replicate inside the
    // experiment; a violation would have produced a non-monotone flag)
    c.check(
        rows.iter().all(|r| r.trace_monotone),
        "a localization trace increased".to_string(),
    );

    // guardrail against the parametric-rate baseline at n_def = 500. The
    // bound carries a Hoeffding width of 2M sqrt(ln(1/delta)/(2n)) with
    // M = 4, which floors it at ~0.44 while 1.25x the baseline is ~0.065,
    // so this clause cannot pass; it is asserted as stated and reported.
    let sub: Vec<_> = rows.iter().filter(|r| r.n == 1000).collect();
    let (mean_bound, _, _) = mean(sub.iter().map(|r| r.bound_erm));
    let vc = sub[0].vc_bound;
    println!(
        "  criterion 3 baseline ratio: mean bound {mean_bound:.4} vs 1.25 x baseline {:.4} (ratio {:.1})",
        1.25 * vc,
        mean_bound / vc
    );
    c.check(
        mean_bound <= 1.25 * vc,
        format!(
            "mean bound {mean_bound:.4} exceeds 1.25 x baseline {:.4}; infeasible by the width floor, see notes",
            1.25 * vc
        ),
    );
    c.finish();
}

#[test]
fn criterion_04_discrepancy_vs_exact_rademacher() {
    let mut c = Criterion::new("criterion 4 (split discrepancy within twice exact Rademacher)");
    let reps = 500;
    let dev = 0.5; // deviation parameter of the tightness statement
    let mut held = 0usize;
    let mut n_min = usize::MAX;
    for rep in 0..reps {
        let mut rng = errest::rng::stream_rng(ACCEPTANCE_SEED, 40_000 + rep as u64);
        let n_fns = rng.gen_range(1..=8);
        let n = rng.gen_range(4..=10);
        n_min = n_min.min(n);
        let support = 6usize;
        // random bounded function class on a uniform finite domain
        let table: Vec<Vec<f64>> = (0..n_fns)
            .map(|_| (0..support).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<usize> {
            (0..n).map(|_| rng.gen_range(0..support)).collect()
        };
        let s_def = draw(&mut rng);
        let s_err = draw(&mut rng);
        let discrepancy = table
            .iter()
            .map(|f| {
                let a: f64 = s_def.iter().map(|&i| f[i]).sum::<f64>() / n as f64;
                let b: f64 = s_err.iter().map(|&i| f[i]).sum::<f64>() / n as f64;
                (a - b).abs()
            })
            .fold(0.0, f64::max);
        let def_table = FunctionTable::new(
            table.iter().map(|f| s_def.iter().map(|&i| f[i]).collect()).collect(),
            1.0,
        )
        .unwrap();
        let rad = exact_rademacher(&def_table);
        if discrepancy + dev <= 2.0 * rad + 2.0 * dev {
            held += 1;
        }
    }
    let freq = held as f64 / reps as f64;
    let floor = 1.0 - (-dev * dev * n_min as f64 / 4.0).exp();
    let se = (floor.max(0.01) * (1.0 - floor).max(0.01) / reps as f64).sqrt();
    c.check(
        freq >= floor - 3.0 * se,
        format!("tightness frequency {freq:.3} below {:.3}", floor - 3.0 * se),
    );
    c.runtime_under(10.0);
    c.finish();
}

struct LinearStub {
    weights: Vec<Vec<f64>>,
}

impl RewardModel for LinearStub {
    fn reward(&self, x: &[f64], arm: usize) -> f64 {
        0.5 + self.weights[arm].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

#[test]
fn criterion_05_pipeline_deterministic_invariants() {
    let mut c = Criterion::new("criterion 5 (kernel mass, sampling lower bounds, conformal coverage)");
    let states = 10_000;
    let mut rng = errest::rng::stream_rng(ACCEPTANCE_SEED, 50_000);
    for _ in 0..states {
        let arms = rng.gen_range(2..=5);
        let dim = rng.gen_range(1..=3);
        // reward model in [0.1, 0.9]: small unit-direction weights, never
        // clipped, so the model-greedy policy is exactly a linear scorer
        let weights: Vec<Vec<f64>> = (0..arms)
            .map(|_| {
                let mut w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                let scale = rng.gen_range(0.05..0.4) / norm;
                w.iter_mut().for_each(|v| *v *= scale);
                w
            })
            .collect();
        let pi_con = LinearScorerPolicy { weights: weights.clone() };
        let cas = Cas {
            arm_sets: ArmSets::keep_all(arms),
            f_hat: Box::new(LinearStub { weights }),
            pi_con,
            u_con: rng.gen_range(0.005..0.6),
        };
        let eta = rng.gen_range(1.0..=arms as f64);
        let beta_max = rng.gen_range(0.05..0.95);
        let x: Vec<f64> = {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-9);
            v.iter_mut().for_each(|a| *a /= n);
            v
        };

        let p = exploration_probs(&cas, eta, beta_max, &x);
        let mass: f64 = p.iter().sum();
        c.check((mass - 1.0).abs() <= 1e-9, format!("kernel mass {mass}"));

        // pointwise sampling lower bounds
        let kept = cas.arm_sets.set(&x);
        let c_top = conformal_set(&cas, &x, (beta_max / eta).min(1.0));
        for &a in &kept {
            let gap = cas.f_hat.reward(&x, cas.pi_con.action(&x)) - cas.f_hat.reward(&x, a);
            if c_top.contains(&a) {
                c.check(
                    p[a] >= 1.0 / kept.len() as f64 - 1e-12,
                    "conformal arm below 1/|kept|".to_string(),
                );
            } else {
                c.check(
                    p[a] >= (eta / kept.len() as f64) * (cas.u_con / gap) - 1e-12,
                    "non-conformal kept arm below its lower bound".to_string(),
                );
            }
        }

        // conformal coverage: when the probe-average gap to a reference
        // policy is within u_con, at least 1 - zeta of probe contexts keep
        // that policy's arm in the conformal set (gaps are nonnegative here
        // because the greedy policy maximizes the model pointwise)
        let probe: Vec<Vec<f64>> = (0..64)
            .map(|_| {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-9);
                v.iter_mut().for_each(|a| *a /= n);
                v
            })
            .collect();
        let reference = LinearScorerPolicy {
            weights: (0..arms)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
        };
        let gaps: Vec<f64> = probe
            .iter()
            .map(|x| {
                cas.f_hat.reward(x, cas.pi_con.action(x))
                    - cas.f_hat.reward(x, reference.action(x))
            })
            .collect();
        let avg_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        if avg_gap <= cas.u_con {
            for &zeta in &[0.1, 0.25, 0.5] {
                let kept_frac = probe
                    .iter()
                    .filter(|x| conformal_set(&cas, x, zeta).contains(&reference.action(x)))
                    .count() as f64
                    / probe.len() as f64;
                c.check(
                    kept_frac >= 1.0 - zeta - 1e-12,
                    format!("conformal coverage {kept_frac:.3} below {}", 1.0 - zeta),
                );
            }
            // cover-bound implication on the same probe sample: the average
            // inverse probability is dominated by the two deterministic
            // terms of the certificate
            let max_kept = max_set_size(&cas.arm_sets, probe.iter());
            let mut v = 0.0;
            let mut first = 0.0;
            for x in &probe {
                let a_star = reference.action(x);
                let p = exploration_probs(&cas, eta, beta_max, x);
                c.check(p[a_star] > 0.0, "optimal arm refused by the kernel".to_string());
                v += 1.0 / p[a_star];
                let kept_len = cas.arm_sets.size(x);
                let ct = conformal_set(&cas, x, (beta_max / eta).min(1.0));
                let c_len = if ct.is_empty() { kept_len } else { ct.len() } as f64;
                first += c_len / (1.0 - beta_max + beta_max * c_len / kept_len as f64);
            }
            v /= probe.len() as f64;
            first /= probe.len() as f64;
            c.check(
                v <= first + max_kept as f64 / eta + 1e-9,
                format!("cover {v:.3} exceeds certificate {:.3}", first + max_kept as f64 / eta),
            );
        }

        // boundary inclusion of the conformal threshold (dyadic values)
        let boundary_cas = Cas {
            arm_sets: ArmSets::keep_all(2),
            f_hat: Box::new(LinearStub { weights: vec![vec![0.25], vec![0.0]] }),
            pi_con: LinearScorerPolicy { weights: vec![vec![1.0], vec![-1.0]] },
            u_con: 0.125,
        };
        let set = conformal_set(&boundary_cas, &[1.0], 0.5);
        c.check(set == vec![0, 1], format!("boundary gap excluded: {set:?}"));
    }
    c.finish();
}

#[test]
fn criterion_06_pipeline_statistical_certificates() {
    let mut c = Criterion::new("criterion 6 (pipeline cover and elimination certificates)");
    let reps = 500;
    let mut pipe_cfg = PipelineConfig::new(delta(0.05));
    pipe_cfg.n_policies = 32;
    let outcomes = errest::exec::map_indexed(reps, |rep| {
        let mut env_rng = errest::rng::replicate_rng(ACCEPTANCE_SEED, rep as u64, 0);
        let env = LinearBanditEnv::random01(3, 3, 0.05, &mut env_rng);
        let run = errest::bandit::pipeline::run_pipeline(
            &env,
            512,
            &pipe_cfg,
            ACCEPTANCE_SEED ^ (rep as u64).wrapping_mul(0x9e3779b97f4a7c15),
        )
        .unwrap();
        let last = run.reports.last().expect("pipeline produced updates");
        (last.alpha_next >= last.realized_cover, last.pi_star_kept_everywhere)
    });
    let cover_ok =
        outcomes.iter().filter(|(a, _)| *a).count() as f64 / outcomes.len() as f64;
    let kept_ok =
        outcomes.iter().filter(|(_, k)| *k).count() as f64 / outcomes.len() as f64;
    let se = (0.05_f64 * 0.95 / reps as f64).sqrt();
    let floor = 0.95 - 3.0 * se;
    c.check(cover_ok >= floor, format!("cover certificate frequency {cover_ok:.3} below {floor:.3}"));
    c.check(kept_ok >= floor, format!("elimination frequency {kept_ok:.3} below {floor:.3}"));
    c.runtime_under(600.0);
    c.finish();
}

#[test]
fn criterion_07_falcon_directional_regret() {
    let mut c = Criterion::new("criterion 7 (error-estimated exploration beats theoretical)");
    let cfg = FalconExperimentConfig {
        dim: 10,
        arms: 5,
        horizon: 2000,
        trials: 10,
        noise_sd: 0.1,
        seed: ACCEPTANCE_SEED,
        falcon: FalconConfig::new(delta(0.05)),
    };
    let rows = errest::bandit::falcon::falcon_experiment(&cfg).unwrap();
    let final_regret = |variant: FalconVariant| -> f64 {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.variant == variant && r.t == cfg.horizon)
            .map(|r| r.cum_regret)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let theo = final_regret(FalconVariant::Theoretical);
    let ee = final_regret(FalconVariant::ErrorEstimated);
    println!("  criterion 7 mean final regret: error-estimated {ee:.1} vs theoretical {theo:.1}");
    c.check(
        ee <= theo,
        format!(
            "error-estimated regret {ee:.1} above theoretical {theo:.1}; the valid width floor \
             2 sqrt(ln(1/delta) t^-1) exceeds the pinned parametric rate beyond t ~ 370, see notes"
        ),
    );
    c.runtime_under(300.0);
    c.finish();
}

#[test]
fn criterion_08_dataset_switching() {
    let mut c = Criterion::new("criterion 8 (two-way switching: domination and coverage)");
    let cfg = CrossfitConfig {
        alphas: vec![0.5],
        n_tasks: 500,
        reps: 500,
        delta: delta(0.1),
        seed: ACCEPTANCE_SEED,
    };
    let rows = errest::inference::crossfit_experiment(&cfg).unwrap();
    for r in &rows {
        c.check(
            r.xi_min <= r.xi_12 && r.xi_min <= r.xi_21,
            "switched bound exceeded a directional bound".to_string(),
        );
    }
    let covered =
        rows.iter().filter(|r| r.xi_min >= r.true_max).count() as f64 / rows.len() as f64;
    let se = (0.1_f64 * 0.9 / rows.len() as f64).sqrt();
    c.check(
        covered >= 0.9 - 3.0 * se,
        format!("switched coverage {covered:.3} below {:.3}", 0.9 - 3.0 * se),
    );
    let (m_min, _, _) = mean(rows.iter().map(|r| r.xi_min));
    let (m_12, _, _) = mean(rows.iter().map(|r| r.xi_12));
    c.check(
        m_min < m_12,
        format!("mean switched bound {m_min:.4} not below single direction {m_12:.4}"),
    );
    c.finish();
}

#[test]
fn criterion_09_familywise_error_control() {
    let mut c = Criterion::new("criterion 9 (family-wise error under the global null)");
    for weights in [WeightChoice::Flat, WeightChoice::Default] {
        let cfg = FwerConfig {
            n_tasks: 200,
            n: 100,
            reps: 1000,
            delta: delta(0.05),
            weights,
            seed: ACCEPTANCE_SEED,
        };
        let rows = errest::inference::fwer_experiment(&cfg).unwrap();
        let fwer =
            rows.iter().filter(|r| r.any_rejection).count() as f64 / rows.len() as f64;
        let se = (0.05_f64 * 0.95 / rows.len() as f64).sqrt();
        c.check(
            fwer <= 0.05 + 3.0 * se,
            format!("{weights:?} family-wise error {fwer:.4} above {:.4}", 0.05 + 3.0 * se),
        );
    }

    // rescaling the weights uniformly never changes the rejection set
    let mut rng = errest::rng::stream_rng(ACCEPTANCE_SEED, 90_000);
    for _ in 0..100 {
        let mut tasks = Vec::new();
        for _ in 0..50 {
            let shift = rng.gen_range(-0.1..0.4);
            let base: Vec<f64> = (0..60)
                .map(|_| shift + rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let err: Vec<f64> = (0..60)
                .map(|_| shift + rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            tasks.push((
                errest::means::mean_stats(&base).unwrap(),
                errest::means::mean_stats(&err).unwrap(),
            ));
        }
        let def: Vec<_> = tasks.iter().map(|(d, _)| *d).collect();
        let w = errest::inference::default_weights(&def, delta(0.05));
        let r1 = errest::inference::reject_set(&tasks, &w, delta(0.05)).unwrap();
        let scaled = errest::inference::WeightPair {
            iota: w.iota.clone(),
            b: w.b.iter().map(|b| b * 11.3).collect(),
        };
        let r2 = errest::inference::reject_set(&tasks, &scaled, delta(0.05)).unwrap();
        c.check(r1.rejected == r2.rejected, "rejections changed under rescaling".to_string());
    }
    c.finish();
}

#[test]
fn criterion_10_numerics() {
    let mut c = Criterion::new("criterion 10 (quantile, supremum search, least squares)");
    // normal quantile against the bisection oracle on a 99-point grid
    for i in 1..100 {
        let p = i as f64 / 100.0;
        let q = normal_quantile(p).unwrap();
        let o = quantile_oracle(p).unwrap();
        c.check((q - o).abs() <= 1e-6, format!("quantile at {p}: |{q} - {o}|"));
    }

    // supremum search within 1e-3 of a dense-grid oracle on random
    // one-dimensional trigonometric objectives
    let mut rng = errest::rng::stream_rng(ACCEPTANCE_SEED, 100_000);
    for case in 0..20 {
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.3..1.0),
                    rng.gen_range(1.0..8.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let lo = rng.gen_range(-2.0..0.0);
        let len = rng.gen_range(1.0..4.0);
        let f = move |x: &[f64]| -> f64 {
            terms.iter().map(|(a, b, ph)| a * (b * x[0] + ph).sin()).sum()
        };
        let domain = BoxDomain::new(vec![lo], vec![lo + len]).unwrap();
        let cfg = SolverConfig { seed: case as u64, ..SolverConfig::default() };
        let sup = sup_parametric(&f, &domain, None, &cfg).unwrap().value;
        let mut oracle = f64::NEG_INFINITY;
        for i in 0..=100_000 {
            let x = lo + len * i as f64 / 100_000.0;
            oracle = oracle.max(f(&[x]));
        }
        c.check(
            (sup - oracle).abs() <= 1e-3,
            format!("case {case}: solver {sup:.6} vs grid {oracle:.6}"),
        );
    }

    // least-squares normal-equation residual
    let mut rng = errest::rng::stream_rng(ACCEPTANCE_SEED, 110_000);
    let samples: Vec<LabeledSample> = (0..80)
        .map(|_| LabeledSample {
            x: (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            y: rng.gen_range(-1.0..1.0),
        })
        .collect();
    let beta = fit_erm_linear(&samples, 0.0).unwrap();
    let dim = 10;
    let mut gram = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for s in &samples {
        for i in 0..dim {
            rhs[i] += s.x[i] * s.y;
            for j in 0..dim {
                gram[i * dim + j] += s.x[i] * s.x[j];
            }
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..dim {
        let mut r = rhs[i];
        for j in 0..dim {
            r -= gram[i * dim + j] * beta.0[j];
        }
        worst = worst.max(r.abs());
    }
    c.check(worst <= 1e-8, format!("normal-equation residual {worst:.2e}"));
    c.finish();
}
