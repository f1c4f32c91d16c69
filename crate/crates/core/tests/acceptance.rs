//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances and timing
//! bounds are pinned below.
//!
//! Criteria in [`KNOWN_FAILURES`] still print FAIL but do not abort the
//! workspace run; the README documents why each is there. The exit status is
//! 1 when any other criterion fails, or when a known failure starts passing
//! so the list gets updated.
//!
//! Run alone with `cargo test -p synthts --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use synthts::assignment::selection_probabilities;
use synthts::bench::{self, BenchOptions};
use synthts::components::{FrequencyBand, Waveform};
use synthts::dataset::{
    expand_grid, generate_instance, generate_instance_with_workers, read_instance, write_instance,
    DatasetInstance, GridAxes, InstanceConfig, NoiseKind,
};
use synthts::metrics::{horizon_profile, mse, spectral_energy, spectrum, WindowTensor};
use synthts::prng::{RandomStream, StreamPath};
use synthts::synthesis::{mixing_weights, pearson, SnrSpec};

const MEAN_TOL: f64 = 1e-9;
const VAR_TOL: f64 = 1e-8;
const SNR_REL_TOL: f64 = 1e-8;
const MIXING_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-12;
const PARSEVAL_REL_TOL: f64 = 1e-9;
const PROB_SUM_TOL: f64 = 1e-12;
const SNR_SLACK: f64 = 0.02;
const CAPTURE_GAP: f64 = 0.2;

const GRID_CELLS: usize = 50;
const GRID_BUDGET: Duration = Duration::from_secs(120);
const DETERMINISM_BUDGET: Duration = Duration::from_secs(60);
const CAPTURE_BUDGET: Duration = Duration::from_secs(120);

const SEEDS: [u64; 3] = [0, 1, 2];

/// The pooled ridge baseline at the default lambda separates the two bands
/// by about 0.16, short of 0.2.
const KNOWN_FAILURES: &[&str] = &["capture_threshold"];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

// Plain-loop statistics, kept apart from the library's own helpers.
fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn stream(tag: &str) -> RandomStream {
    StreamPath::new(20_251_015, tag, 0).derive()
}

fn desk(seed: u64) -> InstanceConfig {
    InstanceConfig { data_seed: seed, ..InstanceConfig::desk() }
}

fn bench_mse_clean(cfg: &InstanceConfig) -> f64 {
    let inst = generate_instance(cfg).expect("generate");
    let (_, report) = bench::bench_instance(&inst, &BenchOptions::default()).expect("bench");
    report.mse_clean
}

fn generator_invariants() -> Outcome {
    let start = Instant::now();
    let cells = expand_grid(&GridAxes::reference(InstanceConfig::desk())).expect("grid");
    let mut order: Vec<usize> = (0..cells.len()).collect();
    let mut s = stream("grid_sample");
    for i in (1..order.len()).rev() {
        order.swap(i, s.index(i + 1));
    }
    let (mut worst_mean, mut worst_var, mut worst_mvar, mut worst_snr) = (0f64, 0f64, 0f64, 0f64);
    let mut bad = Vec::new();
    let mut finite = 0;
    for &i in order.iter().take(GRID_CELLS) {
        let cell = &cells[i];
        let inst = generate_instance(&cell.config).expect("generate");
        for v in 0..inst.variates() {
            let (c, m) = (inst.clean.column(v), inst.mixed.column(v));
            let (cm, cv) = (mean(c).abs(), (var(c) - 1.0).abs());
            worst_mean = worst_mean.max(cm).max(mean(m).abs());
            worst_var = worst_var.max(cv);
            let mut ok = cm < MEAN_TOL && cv <= VAR_TOL;
            match &inst.manifest.mixing[v] {
                Some(rec) => {
                    finite += 1;
                    let mv = (var(m) - 1.0).abs();
                    let resid: Vec<f64> = c.iter().zip(m).map(|(c, m)| m - rec.w_signal * c).collect();
                    let snr = rec.w_signal * rec.w_signal * var(c) / var(&resid);
                    let rel = ((snr - rec.snr) / rec.snr).abs();
                    worst_mvar = worst_mvar.max(mv);
                    worst_snr = worst_snr.max(rel);
                    ok &= mean(m).abs() < MEAN_TOL && mv <= VAR_TOL && rel <= SNR_REL_TOL;
                }
                None => ok &= c == m,
            }
            if !ok {
                bad.push(format!("{}/v{v}", cell.key));
            }
        }
    }
    let took = start.elapsed();
    Outcome::new(
        bad.is_empty() && took < GRID_BUDGET,
        format!(
            "{GRID_CELLS} of {} cells, {finite} finite-snr variates; max |mean| {worst_mean:.1e}, \
             max |var-1| clean {worst_var:.1e} mixed {worst_mvar:.1e}, max snr rel err {worst_snr:.1e}; \
             {} violations; {:.1}s (limit {}s)",
            cells.len(),
            bad.len(),
            took.as_secs_f64(),
            GRID_BUDGET.as_secs()
        ),
    )
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let mut configs = Vec::new();
    for (i, noise) in [None, Some(NoiseKind::White), Some(NoiseKind::Brownian), Some(NoiseKind::Impulse)]
        .into_iter()
        .enumerate()
    {
        let mut c = desk(100 + i as u64);
        c.noise = noise;
        c.snr = if noise.is_some() { SnrSpec::new(10.0, 2.0) } else { SnrSpec::infinite() };
        configs.push(c);
    }
    let mut c = desk(7);
    c.trend = Some(Default::default());
    c.noise = Some(NoiseKind::Trend);
    c.snr = SnrSpec::new(5.0, 0.0);
    configs.push(c);
    let mut c = desk(8);
    c.seasonal_kind = Waveform::SmoothSawtooth;
    c.noise = Some(NoiseKind::Seasonal);
    c.snr = SnrSpec::new(1.0, 0.0);
    configs.push(c);

    let tmp = tempfile::tempdir().expect("tempdir");
    let mut mismatches = Vec::new();
    for (i, cfg) in configs.iter().enumerate() {
        let one = generate_instance_with_workers(cfg, Some(1)).expect("generate");
        let eight = generate_instance_with_workers(cfg, Some(8)).expect("generate");
        let dir = tmp.path().join(i.to_string());
        write_instance(&one, &dir, false).expect("write");
        let stored = read_instance(&dir).expect("read");
        let again = generate_instance_with_workers(&stored.manifest.config, Some(8)).expect("regenerate");
        let sums = |d: &DatasetInstance| d.manifest.checksums.clone();
        if sums(&one) != sums(&eight) || sums(&one) != sums(&again) || sums(&one) != sums(&stored) {
            mismatches.push(cfg.cell_key());
        }
    }
    let took = start.elapsed();
    Outcome::new(
        mismatches.is_empty() && took < DETERMINISM_BUDGET,
        format!(
            "{} instances x (workers 1, workers 8, regenerated from stored manifest): {} checksum mismatches; \
             {:.1}s (limit {}s)",
            configs.len(),
            mismatches.len(),
            took.as_secs_f64(),
            DETERMINISM_BUDGET.as_secs()
        ),
    )
}

fn single_tone() -> Outcome {
    let mut found = Vec::new();
    let mut pass = true;
    for index in [37usize, 1000, 4379] {
        let mut cfg = desk(index as u64);
        cfg.frequency_band = FrequencyBand::single(index as f64);
        let inst = generate_instance(&cfg).expect("generate");
        for v in 0..inst.variates() {
            let spec = spectrum(inst.clean.column(v));
            let argmax = (0..spec.len()).max_by(|&a, &b| spec[a].total_cmp(&spec[b])).unwrap();
            pass &= argmax == index;
            if v == 0 {
                found.push(argmax);
            }
        }
    }
    Outcome::new(
        pass,
        format!("N=8760, V=16, indices [37, 1000, 4379]; argmax of variate 0: {found:?}; all variates exact: {pass}"),
    )
}

fn capture_threshold() -> Outcome {
    let start = Instant::now();
    let below = FrequencyBand::new(1.0, 125.0);
    let above = FrequencyBand::new(1500.0, 1625.0);
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for seed in SEEDS {
        for (band, out) in [(below, &mut lo), (above, &mut hi)] {
            let mut cfg = desk(seed);
            cfg.frequency_band = band;
            out.push(bench_mse_clean(&cfg));
        }
    }
    let gap = mean(&lo) - mean(&hi);
    let took = start.elapsed();
    Outcome::new(
        gap > CAPTURE_GAP && took < CAPTURE_BUDGET,
        format!(
            "T=96 H=96 lambda=1e-3 pooled, threshold ceil(8760/96)=92; mse_clean band {below} {lo:.4?} vs \
             band {above} {hi:.4?}; mean gap {gap:.4} (need > {CAPTURE_GAP}); {:.1}s (limit {}s)",
            took.as_secs_f64(),
            CAPTURE_BUDGET.as_secs()
        ),
    )
}

fn white_noise_cfg(seed: u64, noise: NoiseKind, snr: f64) -> InstanceConfig {
    let mut cfg = desk(seed);
    cfg.frequency_band = FrequencyBand::new(250.0, 375.0);
    cfg.noise = Some(noise);
    cfg.snr = SnrSpec::new(snr, 0.0);
    if snr.is_infinite() {
        cfg.noise = None;
    }
    cfg
}

fn snr_monotonicity() -> (Outcome, Vec<f64>) {
    let snrs = [1.0, 10.0, 100.0, 1000.0, f64::INFINITY];
    let mut pass = true;
    let mut rows = Vec::new();
    let mut at_one = Vec::new();
    for seed in SEEDS {
        let m: Vec<f64> =
            snrs.iter().map(|&s| bench_mse_clean(&white_noise_cfg(seed, NoiseKind::White, s))).collect();
        pass &= m.windows(2).all(|w| w[1] <= w[0] + SNR_SLACK);
        at_one.push(m[0]);
        rows.push(format!("seed {seed}: {m:.4?}"));
    }
    (
        Outcome::new(
            pass,
            format!("white noise, snr [1, 10, 100, 1000, inf], slack {SNR_SLACK}; {}", rows.join("; ")),
        ),
        at_one,
    )
}

fn brownian_worst(white_at_one: &[f64]) -> Outcome {
    let brown: Vec<f64> =
        SEEDS.iter().map(|&seed| bench_mse_clean(&white_noise_cfg(seed, NoiseKind::Brownian, 1.0))).collect();
    let wins = brown.iter().zip(white_at_one).filter(|(b, w)| b >= w).count();
    Outcome::new(
        wins * 2 > SEEDS.len(),
        format!(
            "snr 1: brownian {brown:.4?} vs white {white_at_one:.4?}; brownian >= white on {wins}/3 seeds"
        ),
    )
}

fn mixing_identity() -> Outcome {
    let mut s = stream("mixing");
    let (mut worst, mut checked, mut degenerate) = (0f64, 0, 0);
    for _ in 0..100_000 {
        let snr = 10f64.powf(s.uniform(-3.0, 4.0));
        let r = s.uniform(-1.0, 1.0);
        match mixing_weights(snr, r) {
            Ok((ws, wn)) => {
                worst = worst.max((ws * ws + wn * wn + 2.0 * ws * wn * r - 1.0).abs());
                checked += 1;
            }
            Err(_) => degenerate += 1,
        }
    }
    Outcome::new(
        worst <= MIXING_TOL && degenerate == 0,
        format!(
            "1e5 pairs, snr log-uniform [1e-3, 1e4], r uniform [-1, 1]: {checked} checked, {degenerate} \
             degenerate; max |w_s^2 + w_n^2 + 2 w_s w_n r - 1| = {worst:.1e} (tol {MIXING_TOL:.0e})"
        ),
    )
}

fn brute_dft(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let angle = std::f64::consts::TAU * ((k * t) % n) as f64 / n as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

fn metric_oracles() -> Outcome {
    let mut s = stream("oracle");
    let (mut e_mse, mut e_prof, mut e_pear, mut e_spec, mut e_pars) = (0f64, 0f64, 0f64, 0f64, 0f64);
    for _ in 0..200 {
        let (w, v, h) = (1 + s.index(8), 1 + s.index(4), 1 + s.index(24));
        let len = w * v * h;
        let p: Vec<f64> = (0..len).map(|_| s.gauss()).collect();
        let t: Vec<f64> = (0..len).map(|_| s.gauss()).collect();
        let pt = WindowTensor::from_vec(w, v, h, p.clone()).unwrap();
        let tt = WindowTensor::from_vec(w, v, h, t.clone()).unwrap();

        let mut sq = 0.0;
        let mut per_step = vec![0.0; h];
        for i in 0..w {
            for j in 0..v {
                for (k, acc) in per_step.iter_mut().enumerate() {
                    let idx = (i * v + j) * h + k;
                    let d = p[idx] - t[idx];
                    sq += d * d;
                    *acc += d * d / (w * v) as f64;
                }
            }
        }
        e_mse = e_mse.max((mse(&pt, &tt).unwrap() - sq / len as f64).abs());
        for (a, b) in horizon_profile(&pt, &tt).unwrap().iter().zip(&per_step) {
            e_prof = e_prof.max((a - b).abs());
        }

        let n = 2 + s.index(200);
        let (a, b) = (&p[..n.min(len)], &t[..n.min(len)]);
        if a.len() >= 2 {
            let m = a.len() as f64;
            let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
            let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let saa: f64 = a.iter().map(|x| x * x).sum();
            let sbb: f64 = b.iter().map(|y| y * y).sum();
            let oracle = (m * sab - sa * sb) / ((m * saa - sa * sa).sqrt() * (m * sbb - sb * sb).sqrt());
            if let Ok(r) = pearson(a, b) {
                e_pear = e_pear.max((r - oracle).abs());
            }
        }

        let n = 1 + s.index(257);
        let x: Vec<f64> = (0..n).map(|_| s.gauss()).collect();
        let fast = spectrum(&x);
        for (f, b) in fast.iter().zip(brute_dft(&x)) {
            e_spec = e_spec.max((f - b).abs());
        }
        let energy: f64 = x.iter().map(|v| v * v).sum();
        e_pars = e_pars.max(((spectral_energy(&fast, n) - energy) / energy).abs());
    }
    let pass = e_mse <= ORACLE_TOL
        && e_prof <= ORACLE_TOL
        && e_pear <= ORACLE_TOL
        && e_spec <= ORACLE_TOL
        && e_pars <= PARSEVAL_REL_TOL;
    Outcome::new(
        pass,
        format!(
            "200 random fixtures; max abs err mse {e_mse:.1e}, horizon_profile {e_prof:.1e}, pearson {e_pear:.1e}, \
             spectrum {e_spec:.1e} (tol {ORACLE_TOL:.0e}); parseval rel err {e_pars:.1e} (tol {PARSEVAL_REL_TOL:.0e})"
        ),
    )
}

fn assignment_law() -> Outcome {
    let mut s = stream("assignment");
    let (mut worst_sum, mut violations) = (0f64, 0);
    for _ in 0..10_000 {
        let v = 1 + s.index(64);
        let penalty = [0.0, 0.5, 1.0, 2.0, s.uniform(0.0, 4.0)][s.index(5)];
        let counts: Vec<u64> = (0..v).map(|_| s.uniform_int(0, 50)).collect();
        let p = selection_probabilities(&counts, penalty);
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        for i in 0..v {
            for j in 0..v {
                if counts[i] < counts[j] && p[i] < p[j] {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(
        worst_sum <= PROB_SUM_TOL && violations == 0,
        format!(
            "1e4 random states (V in 1..=64, counts 0..=50, penalty in [0, 4]); max |sum - 1| {worst_sum:.1e} \
             (tol {PROB_SUM_TOL:.0e}); monotonicity violations {violations}"
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let note = match (o.pass, KNOWN_FAILURES.contains(&name)) {
            (false, true) => " (known failure)",
            (true, true) => " (listed as a known failure; remove it from KNOWN_FAILURES)",
            _ => "",
        };
        println!(
            "{} {name} [{:.1}s]: {}{note}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((name, o));
    };
    run("generator_invariants", &mut generator_invariants);
    run("determinism", &mut determinism);
    run("single_tone_spectrum", &mut single_tone);
    run("capture_threshold", &mut capture_threshold);
    let mut white_at_one = Vec::new();
    run("snr_monotonicity", &mut || {
        let (o, w) = snr_monotonicity();
        white_at_one = w;
        o
    });
    run("brownian_worst_case", &mut || brownian_worst(&white_at_one));
    run("mixing_identity", &mut mixing_identity);
    run("metric_oracles", &mut metric_oracles);
    run("assignment_law", &mut assignment_law);

    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    let unexpected: Vec<&str> =
        results.iter().filter(|(n, o)| o.pass == KNOWN_FAILURES.contains(n)).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {} passed, {} failed {failed:?}, {} unexpected {unexpected:?}",
        results.len() - failed.len(),
        failed.len(),
        unexpected.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
