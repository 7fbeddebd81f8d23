//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use rfwater::dielectric::{debye_pure_water, debye_saline, SalineDebyeParams, WaterDebyeParams};
use rfwater::microstrip::{open_stub_impedance, synthesize_stub_length, MicrostripLine};
use rfwater::pipeline::{
    band_magnitude_series, band_peak_magnitude, run_pipeline, Action, Bandpass, EventClass,
    EventReport, PipelineConfig,
};
use rfwater::response::{
    default_calibration, fit_exponential, mix_concentration, steady_shift, BasinState, Injection,
    CONCENTRATION_LADDER,
};
use rfwater::simulate::{
    simulate_scenario, FrequencyTrace, ScenarioConfig, ScenarioEvent, SolidEvent,
    DEFAULT_SAMPLE_PERIOD,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome, f64);

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn ac1() -> Outcome {
    let w = WaterDebyeParams::DEFAULT;
    let collapsed = SalineDebyeParams {
        eps_inf: w.eps_inf,
        eps_static: w.eps_static,
        tau: w.tau,
        conductivity: 0.0,
    };
    let mut worst = 0.0f64;
    for k in 0..200 {
        let f = 1e8 * 100f64.powf(k as f64 / 199.0);
        let a = debye_saline(f, &collapsed).unwrap().to_complex();
        let b = debye_pure_water(f, &w).unwrap().to_complex();
        worst = worst.max((a - b).norm() / b.norm());
    }
    check(
        worst < 1e-12,
        format!("max rel err {worst:.1e} over 200 freqs"),
    )
}

fn ac2() -> Outcome {
    // independent high-precision evaluation
    const EPS_EFF: f64 = 1.869_679_944_985_296_8;
    const Z0: f64 = 50.760_550_761_130_3;
    let line = MicrostripLine::new(2.4e-3, 0.79e-3, 2.2).unwrap();
    let fixture = rel(line.eps_eff, EPS_EFF).max(rel(line.z0, Z0));

    let f = 700e6;
    let beta = line.beta(f).unwrap();
    let quarter = line.guided_wavelength(f).unwrap() / 4.0;
    let z_quarter = open_stub_impedance(line.z0, beta, quarter)
        .unwrap()
        .finite()
        .map_or(f64::INFINITY, |z| z.norm());

    // targets drawn by electrical length, away from the ends of (0, π/2)
    // where f64 cannot resolve the reactance to the tolerance
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let theta = Uniform::new(1e-6, FRAC_PI_2 - 1e-6).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = theta.sample(&mut rng).tan() / (2.0 * PI * f * line.z0);
        let len = synthesize_stub_length(c, f, &line).unwrap();
        let x = open_stub_impedance(line.z0, beta, len)
            .unwrap()
            .finite()
            .unwrap()
            .im;
        worst = worst.max(rel(x, -1.0 / (2.0 * PI * f * c)));
    }
    check(
        fixture < 1e-9 && z_quarter < 1e-9 * line.z0 && worst < 1e-8,
        format!(
            "fixture rel {fixture:.1e}; |Z(λg/4)| {z_quarter:.1e} ohm; synthesis worst {worst:.1e}"
        ),
    )
}

fn ac3() -> Outcome {
    let (a, b) = (2.5e4, 0.012);
    let volumes: Vec<f64> = (0..=100).map(|k| 2.5 * k as f64).collect();
    let clean: Vec<(f64, f64)> = volumes
        .iter()
        .map(|&v| (v, a * (1.0 - (-b * v).exp())))
        .collect();
    let fit = fit_exponential(&clean).unwrap();
    let noiseless = rel(fit.a, a).max(rel(fit.b, b));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let noisy: Vec<(f64, f64)> = clean
            .iter()
            .map(|&(v, y)| (v, y * (1.0 + noise.sample(&mut rng))))
            .collect();
        let fit = fit_exponential(&noisy).unwrap();
        worst = worst.max(rel(fit.a, a)).max(rel(fit.b, b));
    }
    check(
        noiseless < 1e-6 && worst < 0.05,
        format!(
            "noiseless rel {noiseless:.1e}; 1% noise worst {:.2}% over 100 trials",
            100.0 * worst
        ),
    )
}

fn ac4() -> Outcome {
    let dt = DEFAULT_SAMPLE_PERIOD;
    let cfg = PipelineConfig::default();
    let tone: Vec<f64> = (0..cfg.window_length)
        .map(|k| (2.0 * PI * 2.2 * k as f64 * dt).sin())
        .collect();
    let peak = band_peak_magnitude(&tone, dt, cfg.band).unwrap();
    let bin = 1.0 / (cfg.window_length as f64 * dt);
    let filter = Bandpass::design(cfg.band, dt).unwrap();
    let atten_db = -20.0 * filter.gain(0.2).log10();
    check(
        (0.85..=1.15).contains(&peak.magnitude)
            && (peak.frequency - 2.2).abs() <= bin
            && atten_db >= 20.0,
        format!(
            "magnitude {:.4} at {:.3} Hz (bin {bin:.3} Hz); 0.2 Hz down {atten_db:.1} dB",
            peak.magnitude, peak.frequency
        ),
    )
}

fn liquid(start: f64, c: f64) -> ScenarioEvent {
    ScenarioEvent::Liquid(Injection {
        concentration: c,
        total_volume: 220.0,
        rate: 17.0,
        start_time: start,
    })
}

fn scenario(duration: f64, seed: u64, events: Vec<ScenarioEvent>) -> ScenarioConfig {
    ScenarioConfig {
        duration,
        seed,
        events,
        ..Default::default()
    }
}

fn max_band(trace: &FrequencyTrace, cfg: &PipelineConfig) -> f64 {
    band_magnitude_series(trace, cfg)
        .unwrap()
        .iter()
        .map(|(_, w)| w.peak.magnitude)
        .fold(0.0, f64::max)
}

fn ac5() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let when = Uniform::new(10.0, 40.0).unwrap();
    let (mut min_solid, mut max_liquid, mut wrong) = (f64::INFINITY, 0.0f64, 0);
    for seed in 0..50 {
        let sc = scenario(
            70.0,
            seed,
            vec![ScenarioEvent::Solid(SolidEvent::at(when.sample(&mut rng)))],
        );
        let trace = simulate_scenario(&sc).unwrap();
        min_solid = min_solid.min(max_band(&trace, &cfg));
        let r = run_pipeline(trace.iter(), &cfg).unwrap();
        if !(r.len() == 1 && r[0].class == EventClass::Solid) {
            wrong += 1;
        }
    }
    for seed in 100..150 {
        let trace = simulate_scenario(&scenario(200.0, seed, vec![liquid(20.0, 0.125)])).unwrap();
        max_liquid = max_liquid.max(max_band(&trace, &cfg));
        let r = run_pipeline(trace.iter(), &cfg).unwrap();
        if !(r.len() == 1 && r[0].class == EventClass::Liquid) {
            wrong += 1;
        }
    }
    check(
        min_solid > max_liquid && wrong == 0,
        format!("min solid {min_solid:.0} Hz/s > max liquid {max_liquid:.0} Hz/s; {wrong} misclassified"),
    )
}

fn actions(r: &[EventReport]) -> Vec<Action> {
    r.iter().map(|r| r.action).collect()
}

fn ac6() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut bad = Vec::new();
    for seed in 0..10 {
        let sc = scenario(
            200.0,
            seed,
            vec![
                ScenarioEvent::Solid(SolidEvent::at(10.0)),
                liquid(30.0, 0.125),
            ],
        );
        let a = run_pipeline(simulate_scenario(&sc).unwrap().iter(), &cfg).unwrap();
        let b = run_pipeline(simulate_scenario(&sc).unwrap().iter(), &cfg).unwrap();
        if actions(&a) != [Action::Flush, Action::Analyze] || a != b {
            bad.push(format!("seed {seed}: {:?}", actions(&a)));
        }
        let only = scenario(200.0, seed, vec![liquid(30.0, 0.125)]);
        let r = run_pipeline(simulate_scenario(&only).unwrap().iter(), &cfg).unwrap();
        if r.iter().any(|r| r.action == Action::Flush) {
            bad.push(format!("liquid-only seed {seed} flushed"));
        }
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            "FLUSH then ANALYZE on 10 seeds, repeatable; liquid-only never flushes".into()
        } else {
            bad.join("; ")
        },
    )
}

fn estimate(c: f64, seed: u64, noise: f64) -> Option<f64> {
    let sc = ScenarioConfig {
        noise_sigma: noise,
        ..scenario(200.0, seed, vec![liquid(20.0, c)])
    };
    let r = run_pipeline(
        simulate_scenario(&sc).unwrap().iter(),
        &PipelineConfig::default(),
    )
    .unwrap();
    match r.as_slice() {
        [one] if one.action == Action::Analyze => one.concentration,
        _ => None,
    }
}

fn ac7() -> Outcome {
    let cal = default_calibration();
    let shifts: Vec<f64> = CONCENTRATION_LADDER
        .iter()
        .map(|&c| steady_shift(c, &cal).unwrap())
        .collect();
    let monotone = shifts.windows(2).all(|w| w[1] > w[0]) || shifts.windows(2).all(|w| w[1] < w[0]);

    let mut worst_clean = 0.0f64;
    let mut fewest = usize::MAX;
    for &c in &CONCENTRATION_LADDER {
        let truth = mix_concentration(BasinState::default(), 220.0, c)
            .unwrap()
            .concentration;
        let err = |e: Option<f64>| e.map_or(f64::INFINITY, |e| rel(e, truth));
        worst_clean = worst_clean.max(err(estimate(c, 0, 0.0)));
        let ok = (0..20)
            .filter(|&s| err(estimate(c, s, 200.0)) <= 0.10)
            .count();
        fewest = fewest.min(ok);
    }
    check(
        monotone && worst_clean < 0.02 && fewest >= 18,
        format!(
            "curve monotone: {monotone}; noiseless worst {:.2}%; noisy within 10% at least {fewest}/20 per rung",
            100.0 * worst_clean
        ),
    )
}

fn ac8() -> Outcome {
    let sc = scenario(
        600.0,
        8,
        vec![
            ScenarioEvent::Solid(SolidEvent::at(60.0)),
            liquid(200.0, 0.125),
        ],
    );
    let t0 = Instant::now();
    let trace = simulate_scenario(&sc).unwrap();
    let sim = t0.elapsed();
    let t1 = Instant::now();
    let r = run_pipeline(trace.iter(), &PipelineConfig::default()).unwrap();
    let analyze = t1.elapsed();
    let limit = Duration::from_secs(1);
    check(
        sim < limit && analyze < limit && !r.is_empty(),
        format!(
            "{} samples: simulate {:.1} ms, analyze {:.1} ms",
            trace.len(),
            sim.as_secs_f64() * 1e3,
            analyze.as_secs_f64() * 1e3
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1 debye reduction", ac1, 1.0),
        ("AC2 microstrip oracle", ac2, 1.0),
        ("AC3 fit recovery", ac3, 5.0),
        ("AC4 spectral fidelity", ac4, 1.0),
        ("AC5 classification separation", ac5, 60.0),
        ("AC6 two-stage algorithm", ac6, f64::INFINITY),
        ("AC7 concentration estimation", ac7, f64::INFINITY),
        ("AC8 performance", ac8, f64::INFINITY),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let mut o = run();
        let secs = start.elapsed().as_secs_f64();
        if secs >= budget {
            o.pass = false;
            o.detail.push_str(&format!("; over {budget} s budget"));
        }
        println!(
            "{} {name}: {} ({secs:.2} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += (!o.pass) as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
