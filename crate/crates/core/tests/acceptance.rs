//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use modent::constants::{c_n, d_n, k_const};
use modent::fit::{brute_force_fit, fit_family, fit_h_family, verdict, SearchRange};
use modent::glue::{build_phi, GlueInstance};
use modent::model::{AlphaCase, Box3, EntropyFn, SimplexGrid, SolutionFamily};
use modent::perturb::{perturb, NoiseField, NoiseMode};
use modent::residuals::{audit_chain, measure_eps, measure_eps_covering};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Exact families: measured eps1, eps2 <= 1e-9 on a 16^3 lattice, < 10 s.
fn exact_solutions() -> Outcome {
    const TOL: f64 = 1e-9;
    let start = Instant::now();
    let b = Box3::new(0.25, 4.0, 16).unwrap();
    let cases: Vec<(f64, f64)> = [-2.0, -1.0, -0.5, 0.0, 0.5, 2.0, 3.0]
        .iter()
        .flat_map(|&alpha| [-1.0, 0.0, 2.0].map(|a| (alpha, a)))
        .collect();
    let mut worst = (0.0f64, 0.0f64);
    let mut bad = Vec::new();
    for &(alpha, a) in &cases {
        let fam = SolutionFamily::closed_constant_for_box(a, alpha, &b).unwrap();
        let eps = measure_eps(&EntropyFn::exact(fam, b), alpha, &b).unwrap();
        worst = (worst.0.max(eps.eps1), worst.1.max(eps.eps2));
        if !(eps.eps1 <= TOL && eps.eps2 <= TOL) {
            bad.push(format!("alpha={alpha} a={a}: ({}, {})", eps.eps1, eps.eps2));
        }
    }
    let elapsed = start.elapsed();
    let fast = elapsed < Duration::from_secs(10);
    outcome(
        bad.is_empty() && fast,
        format!(
            "{} families, max eps1 = {:.3e}, max eps2 = {:.3e} (tol {TOL:e}), {:.2?} (limit 10 s){}",
            cases.len(),
            worst.0,
            worst.1,
            elapsed,
            if bad.is_empty() { String::new() } else { format!("; violations: {}", bad.join(", ")) }
        ),
    )
}

/// Glue construction: 50 seeded instances, dev_B <= eps and dev_A <= 2 eps.
fn glue_bounds() -> Outcome {
    const STEP: f64 = 0.125;
    const SLACK: f64 = 1e-12;
    let amplitudes = [0.0, 0.01, 0.1];
    let results: Vec<(String, bool, Duration, f64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + i);
            // lengths in lattice steps, each at most 2; V needs >= 3 steps for
            // lattice-aligned interleaved windows
            let u = rng.gen_range(1..=16) as f64 * STEP;
            let v = rng.gen_range(3..=16) as f64 * STEP;
            let w = rng.gen_range(1..=16) as f64 * STEP;
            let amp = amplitudes[(i % 3) as usize];
            let start = Instant::now();
            let inst = GlueInstance::seeded(9000 + i, amp, [u, v, w], STEP).unwrap();
            let (eps, _) = inst.measure_eps();
            let res = build_phi(&inst, eps).unwrap();
            let elapsed = start.elapsed();
            let ok = res.dev_b <= eps + SLACK && res.dev_a <= 2.0 * eps + SLACK;
            let ratio = if eps > 0.0 { (res.dev_b / eps).max(res.dev_a / (2.0 * eps)) } else { 0.0 };
            let label = format!(
                "seed {} U=[0,{u}] V=[0,{v}] W=[0,{w}] amp={amp}: eps={eps:.3e} dev_a={:.3e} dev_b={:.3e}",
                9000 + i,
                res.dev_a,
                res.dev_b
            );
            (label, ok, elapsed, ratio)
        })
        .collect();
    let violations: Vec<&String> = results.iter().filter(|r| !r.1).map(|r| &r.0).collect();
    let slow = results.iter().filter(|r| r.2 >= Duration::from_secs(1)).count();
    let slowest = results.iter().map(|r| r.2).max().unwrap_or_default();
    let worst_ratio = results.iter().map(|r| r.3).fold(0.0, f64::max);
    outcome(
        violations.is_empty() && slow == 0,
        format!(
            "{} instances, {} violations, worst max(dev_b/eps, dev_a/(2 eps)) = {worst_ratio:.4}, slowest {slowest:.2?} (limit 1 s){}",
            results.len(),
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    )
}

struct Config {
    name: &'static str,
    alpha: f64,
    n: Option<u32>,
    b: Box3,
}

fn configs() -> Vec<Config> {
    vec![
        Config {
            name: "alpha=-1 [0.25,4]^3",
            alpha: -1.0,
            n: None,
            b: Box3::new(0.25, 4.0, 16).unwrap(),
        },
        Config {
            name: "alpha=0 [0.25,4]^3",
            alpha: 0.0,
            n: None,
            b: Box3::new(0.25, 4.0, 16).unwrap(),
        },
        Config {
            name: "alpha=2 n=1 [0.05,1]^3",
            alpha: 2.0,
            n: Some(1),
            b: Box3::new(0.05, 1.0, 20).unwrap(),
        },
    ]
}

const VERDICT_AMPLITUDE: f64 = 1e-3;
const FAMILY_A: f64 = 2.0;

fn candidate(cfg: &Config, seed: u64, mode: NoiseMode) -> EntropyFn {
    let fam = SolutionFamily::closed_constant_for_box(FAMILY_A, cfg.alpha, &cfg.b).unwrap();
    let field = NoiseField::for_box(seed, VERDICT_AMPLITUDE, &cfg.b, mode).unwrap();
    perturb(fam, field, cfg.b)
}

fn runs() -> Vec<(usize, u64, NoiseMode)> {
    (0..configs().len())
        .flat_map(|c| {
            (1..=100u64).flat_map(move |seed| [NoiseMode::Symmetric, NoiseMode::General].map(|m| (c, seed, m)))
        })
        .collect()
}

/// Verdicts against the stability bounds: 100% pass rate, < 60 s.
fn verdicts() -> Outcome {
    let cfgs = configs();
    let start = Instant::now();
    let results: Vec<(usize, bool, f64)> = runs()
        .par_iter()
        .map(|&(c, seed, mode)| {
            let cfg = &cfgs[c];
            let case = AlphaCase::new(cfg.alpha).unwrap();
            let rep = verdict(&candidate(cfg, seed, mode), &case, &cfg.b, cfg.n, &SearchRange::default()).unwrap();
            (c, rep.pass, rep.sup_error / rep.bound_value)
        })
        .collect();
    let elapsed = start.elapsed();
    let mut parts = Vec::new();
    let mut all = true;
    for (c, cfg) in cfgs.iter().enumerate() {
        let mine: Vec<_> = results.iter().filter(|r| r.0 == c).collect();
        let passed = mine.iter().filter(|r| r.1).count();
        let worst = mine.iter().map(|r| r.2).fold(0.0, f64::max);
        all &= passed == mine.len();
        parts.push(format!("{}: {passed}/{} (max sup/bound {worst:.3e})", cfg.name, mine.len()));
    }
    let fast = elapsed < Duration::from_secs(60);
    let k = c_n(2.0, 1).unwrap();
    outcome(
        all && fast,
        format!(
            "{}; c_1(2) = {k}, d_1(2) = {}; {elapsed:.2?} (limit 60 s)",
            parts.join("; "),
            d_n(2.0, 1).unwrap()
        ),
    )
}

/// Chain audit: the four intermediate sups within eps1+eps2, eps1+2eps2,
/// eps1+2eps2, eps1+4eps2 for every run of the verdict criterion.
fn chain_audit() -> Outcome {
    let cfgs = configs();
    let simplex = SimplexGrid::new(20).unwrap();
    let results: Vec<(usize, NoiseMode, [f64; 4], bool)> = runs()
        .par_iter()
        .map(|&(c, seed, mode)| {
            let cfg = &cfgs[c];
            let f = candidate(cfg, seed, mode);
            let eps = measure_eps_covering(&f, cfg.alpha, &cfg.b, &simplex).unwrap();
            let audit = audit_chain(&f, cfg.alpha, eps, &cfg.b, &simplex).unwrap();
            let ratios = audit.steps().map(|(_, s)| {
                if s.holds() {
                    0.0
                } else {
                    s.measured / s.permitted
                }
            });
            (c, mode, ratios, audit.all_hold_provable())
        })
        .collect();
    let names = ["reduction", "exchange", "simplex", "fundamental"];
    let mut failing = 0;
    let mut per_step = [0usize; 4];
    let mut worst = [0.0f64; 4];
    let mut modes = BTreeSet::new();
    let provable = results.iter().filter(|r| r.3).count();
    for (_, mode, ratios, _) in &results {
        if ratios.iter().any(|r| *r > 0.0) {
            failing += 1;
            modes.insert(mode.as_str());
        }
        for k in 0..4 {
            if ratios[k] > 0.0 {
                per_step[k] += 1;
                worst[k] = worst[k].max(ratios[k]);
            }
        }
    }
    let steps: Vec<String> = (0..4)
        .map(|k| {
            if per_step[k] == 0 {
                format!("{} ok", names[k])
            } else {
                format!("{} fails {} (worst measured/permitted {:.3})", names[k], per_step[k], worst[k])
            }
        })
        .collect();
    outcome(
        failing == 0,
        format!(
            "{}/{} runs hold; {}{}; triangle-inequality bounds hold in {provable}/{} runs",
            results.len() - failing,
            results.len(),
            steps.join(", "),
            if modes.is_empty() {
                String::new()
            } else {
                format!("; failing modes: {}", modes.into_iter().collect::<Vec<_>>().join(", "))
            },
            results.len()
        ),
    )
}

/// Constants: K(2) = 2406, c_n(2) and d_n(2) increasing on 1..100, > 1e6 by n = 4.
fn constants() -> Outcome {
    let k = k_const(2.0).unwrap();
    let k_ok = ((k - 2406.0) / 2406.0).abs() <= 1e-9;
    let c: Vec<f64> = (1..=100).map(|n| c_n(2.0, n).unwrap()).collect();
    let d: Vec<f64> = (1..=100).map(|n| d_n(2.0, n).unwrap()).collect();
    let increasing = c.windows(2).all(|w| w[1] > w[0]) && d.windows(2).all(|w| w[1] > w[0]);
    let big = c[3] > 1e6 && d[3] > 1e6;
    outcome(
        k_ok && increasing && big,
        format!(
            "K(2) = {k} (want 2406, rel tol 1e-9); strictly increasing on 1..100: {increasing}; c_4(2) = {}, d_4(2) = {} (> 1e6), c_100(2) = {:.4e}",
            c[3], d[3], c[99]
        ),
    )
}

/// Every breakpoint of the piecewise-linear fit objective: crossings of the
/// lines `(r_i - r_j) - a (p_i - p_j)` over same-sum pairs.
fn breakpoints(f: &EntropyFn, alpha: f64, b: &Box3) -> Vec<f64> {
    let mut rows: Vec<(f64, f64, f64)> = b
        .points()
        .into_iter()
        .map(|[x, y, z]| (x + y + z, f.eval(x, y, z).unwrap(), x.powf(alpha) + y.powf(alpha) + z.powf(alpha)))
        .collect();
    rows.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut lines = Vec::new();
    let tol = 1e-6 * b.step();
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i != j && (rows[i].0 - rows[j].0).abs() <= tol {
                lines.push((rows[i].1 - rows[j].1, rows[i].2 - rows[j].2));
            }
        }
    }
    let mut out = Vec::new();
    for m in 0..lines.len() {
        for k in m + 1..lines.len() {
            let ds = lines[m].1 - lines[k].1;
            if ds.abs() > 1e-14 {
                out.push((lines[m].0 - lines[k].0) / ds);
            }
        }
    }
    out
}

/// Oracle equivalence for both fitters.
fn oracles() -> Outcome {
    const TOL: f64 = 1e-6;
    let alphas = [-1.0, -0.5, 0.5, 2.0, 3.0];
    let family: Vec<(u64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + i);
            let alpha = alphas[(i % 5) as usize];
            let a = rng.gen_range(-2.0..2.0);
            let b = Box3::new(0.25, 2.0, 4).unwrap();
            let fam = SolutionFamily::closed_constant_for_box(a, alpha, &b).unwrap();
            let field = NoiseField::for_box(500 + i, 0.05, &b, NoiseMode::General).unwrap();
            let f = perturb(fam, field, b);
            let fit = fit_family(&f, alpha, &b, &SearchRange::default()).unwrap();
            let mut grid: Vec<f64> = (0..=200).map(|k| a - 1.0 + k as f64 * 0.01).collect();
            grid.extend(breakpoints(&f, alpha, &b));
            let (_, oracle) = brute_force_fit(&f, alpha, &b, &grid).unwrap();
            (500 + i, (fit.sup_error - oracle).abs())
        })
        .collect();
    let worst_family = family.iter().map(|r| r.1).fold(0.0, f64::max);
    let family_ok = family.iter().all(|r| r.1 <= TOL);

    let h: Vec<(f64, f64)> = (0..20u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(700 + i);
            let alpha = alphas[(i % 5) as usize];
            let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let samples: Vec<(f64, f64)> = (1..50)
                .map(|k| {
                    let t = k as f64 / 50.0;
                    (t, a * t.powf(alpha) + b * ((1.0 - t).powf(alpha) - 1.0))
                })
                .collect();
            let fit = fit_h_family(&samples, alpha).unwrap();
            (fit.sup_error, (fit.a - a).abs().max((fit.b - b).abs()))
        })
        .collect();
    let worst_h = h.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_param = h.iter().map(|r| r.1).fold(0.0, f64::max);
    let h_ok = h.iter().all(|r| r.0 <= TOL);
    outcome(
        family_ok && h_ok,
        format!(
            "family fit vs brute force: 20 instances on 4^3, max |objective gap| = {worst_family:.3e}; \
             planted (a,b): 20 fits, max sup error = {worst_h:.3e}, max parameter error = {worst_param:.3e} (tol {TOL:e})"
        ),
    )
}

fn strip_timestamp(s: &str) -> String {
    s.lines().filter(|l| !l.starts_with("generated_at")).collect::<Vec<_>>().join("\n")
}

/// Byte-identical CLI output modulo the timestamp for repeated runs.
fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_modent");
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("verify alpha=-1 general", vec!["verify", "--alpha", "-1", "--seed", "42", "--amplitude", "1e-3"]),
        ("verify alpha=0 symmetric", vec!["verify", "--alpha", "0", "--seed", "7", "--noise-mode", "symmetric"]),
        ("verify alpha=2 n=1", vec!["verify", "--alpha", "2", "--n", "1", "--box-hi", "1", "--grid", "20"]),
        ("glue seed=3", vec!["glue", "--seed", "3", "--amplitude", "0.1"]),
        ("sweep amplitude", vec!["sweep", "--vary", "amplitude", "--values", "0,1e-4,1e-3"]),
        ("constants alpha=2", vec!["constants", "--alpha", "2", "--n", "5"]),
    ]
    .into_iter()
    .map(|(n, v)| (n, v.into_iter().map(String::from).collect()))
    .collect();
    let mut diffs = Vec::new();
    for (k, (name, args)) in runs.iter().enumerate() {
        let mut texts = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("out{k}_{rep}"));
            let table = dir.path().join(format!("table{k}_{rep}"));
            let mut cmd = Command::new(exe);
            cmd.args(args).arg("--out").arg(&out);
            if args[0] == "verify" || args[0] == "glue" {
                cmd.arg("--table-out").arg(&table);
            }
            let status = cmd.status().expect("run modent");
            let report = std::fs::read_to_string(&out).unwrap_or_default();
            let tbl = std::fs::read_to_string(&table).unwrap_or_default();
            texts.push((status.code(), strip_timestamp(&report), tbl));
        }
        if texts[0] != texts[1] || texts[0].1.is_empty() {
            diffs.push(*name);
        }
    }
    outcome(
        diffs.is_empty(),
        format!(
            "{} commands run twice, reports and tables identical modulo `generated_at`{}",
            runs.len(),
            if diffs.is_empty() { String::new() } else { format!("; differing: {}", diffs.join(", ")) }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("exact solutions have zero residuals", exact_solutions),
        ("glued sum-function bounds on noisy instances", glue_bounds),
        ("stability verdicts in all three regimes", verdicts),
        ("intermediate chain inequalities", chain_audit),
        ("stability constants and their divergence", constants),
        ("fitters agree with exhaustive oracles", oracles),
        ("repeated runs are reproducible", determinism),
    ];
    let mut failed = 0;
    println!();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {}: {} -- {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
