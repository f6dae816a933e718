use crate::config::Config;
use crate::CliError;
use elastodamp::decay_lab::{compare, measure_decay, predicted_exponent, Verdict};
use elastodamp::diffusion::{build_reference, gap_decay, interior_grid};
use elastodamp::exponents::{classify_and_g, ClassifyOptions, ExponentTriple, Regime};
use elastodamp::model::{Branch, ModelParams, Zone};
use elastodamp::propagator::{verify_lyapunov_mid, ModeState, QuadratureGrid};
use elastodamp::semilinear::{picard_probe, run, save_checkpoint, PicardVerdict, RunVerdict};
use elastodamp::symbol::{asymptotic_error_order, geometric, gevrey_probe};
use elastodamp::{Error, Wide};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

/// Writes artifacts into the output directory, stamping every CSV.
pub struct Sink {
    dir: PathBuf,
    stamp: String,
}

impl Sink {
    pub fn new(dir: &Path, cfg: &Config, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        let stamp = format!(
            "# elastodamp {} config-sha256 {}\n",
            env!("CARGO_PKG_VERSION"),
            cfg.hash(seed)
        );
        Ok(Self {
            dir: dir.to_path_buf(),
            stamp,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// `body` starts with its header row.
    pub fn csv(&self, name: &str, body: &str) -> Result<(), CliError> {
        std::fs::write(self.path(&format!("{name}.csv")), format!("{}{body}", self.stamp))?;
        Ok(())
    }

    pub fn json<S: Serialize>(&self, name: &str, value: &S) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(self.path(&format!("{name}.json")), text + "\n")?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

pub fn symbol_check(cfg: &Config, sink: &Sink) -> Result<Outcome, CliError> {
    let e = &cfg.experiment.symbol_check;
    let p: ModelParams<Wide> = cfg.params()?.cast();
    let (eps, span) = (p.epsilon, Wide::from_f64(e.span));
    let two = Wide::from_f64(2.0);
    let mut csv = String::from("zone,branch,regime,order,claimed,meets_claim\n");
    let mut fits = Vec::new();
    let mut passed = true;
    let mut worst = f64::INFINITY;
    for zone in [Zone::Int, Zone::Ext] {
        let (lo, hi) = match zone {
            Zone::Int => (eps / span, eps / two),
            _ => (two / eps, span / eps),
        };
        for branch in [Branch::Transverse, Branch::Longitudinal] {
            let fit = asymptotic_error_order(&p, zone, Some(branch), &geometric(lo, hi, e.samples))?;
            let ok = fit.meets_claim(e.tolerance);
            passed &= ok;
            if zone == Zone::Int {
                worst = worst.min(fit.order);
            }
            writeln!(
                csv,
                "{zone:?},{branch:?},{:?},{},{},{ok}",
                fit.regime,
                num(fit.order),
                num(fit.claimed)
            )
            .unwrap();
            fits.push(json!({ "zone": format!("{zone:?}"), "branch": format!("{branch:?}"), "fit": fit }));
        }
    }
    sink.csv("symbol-check", &csv)?;
    sink.json(
        "symbol-check",
        &json!({ "theta": cfg.model.theta, "fits": fits, "passed": passed }),
    )?;
    Ok(Outcome {
        passed,
        summary: format!("4 fits, smallest small-zone order {worst:.3}, claims met: {passed}"),
    })
}

pub fn gevrey(cfg: &Config, sink: &Sink) -> Result<Outcome, CliError> {
    let e = &cfg.experiment.gevrey;
    let fit = gevrey_probe(&cfg.params()?, &geometric(e.xi_range.0, e.xi_range.1, e.samples))?;
    let passed = (fit.gevrey_order - fit.expected_order).abs() <= e.tolerance;
    sink.csv(
        "gevrey",
        &format!(
            "exponent,gevrey_order,expected_order\n{},{},{}\n",
            num(fit.exponent),
            num(fit.gevrey_order),
            num(fit.expected_order)
        ),
    )?;
    sink.json("gevrey", &json!({ "fit": fit, "passed": passed }))?;
    Ok(Outcome {
        passed,
        summary: format!("order {:.3}, expected {:.3}", fit.gevrey_order, fit.expected_order),
    })
}

pub fn lyapunov(cfg: &Config, sink: &Sink, seed: u64) -> Result<Outcome, CliError> {
    let e = &cfg.experiment.lyapunov;
    let p = cfg.params()?;
    let eps = p.epsilon;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("mode,xi_norm,c3,f0,max_violation,gronwall_ratio,holds\n");
    let mut failures = 0;
    for k in 0..e.modes {
        let radius = eps.powf(1.0 - 2.0 * rng.gen_range(0.0..=1.0)).clamp(eps, 1.0 / eps);
        let dir = loop {
            let v: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.1 && n <= 1.0 {
                break v.map(|x| x / n);
            }
        };
        let mut c = || Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let state = ModeState::new([c(), c(), c()], [c(), c(), c()], dir.map(|x| x * radius));
        let rep = verify_lyapunov_mid(&p, &state, e.horizon)?;
        let holds = rep.holds(e.tolerance) && rep.gronwall_ratio <= 1.0;
        if !holds {
            failures += 1;
        }
        writeln!(
            csv,
            "{k},{},{},{},{},{},{holds}",
            num(radius),
            num(rep.c3),
            num(rep.f0),
            num(rep.max_violation),
            num(rep.gronwall_ratio)
        )
        .unwrap();
    }
    sink.csv("lyapunov", &csv)?;
    sink.json(
        "lyapunov",
        &json!({ "modes": e.modes, "failures": failures, "seed": seed }),
    )?;
    Ok(Outcome {
        passed: failures == 0,
        summary: format!("{failures}/{} modes violate the bound", e.modes),
    })
}

pub fn decay_fit(cfg: &Config, sink: &Sink) -> Result<Outcome, CliError> {
    let e = &cfg.experiment.decay_fit;
    let p = cfg.params()?;
    let kind = cfg.decay_kind();
    let g = &e.grid;
    let grid = QuadratureGrid::composite(
        g.r_min,
        g.radius,
        g.panels_per_decade,
        g.per_panel,
        g.n_polar,
        g.n_azimuth,
    );
    let fit = measure_decay(&kind, &p, &cfg.profile.u0, &cfg.profile.u1, e.window, e.samples, &grid)?;
    let pred = predicted_exponent(&kind, &p)?;
    let verdict = compare(&pred, &fit, e.tolerance);
    let mut csv = String::from("t,value\n");
    for (t, v) in fit.times.iter().zip(&fit.values) {
        writeln!(csv, "{},{}", num(*t), num(*v)).unwrap();
    }
    sink.csv("decay-fit", &csv)?;
    let verdict_json = match &verdict {
        Ok(v) => json!(v),
        Err(err) => json!({ "error": err.to_string() }),
    };
    sink.json(
        "decay-fit",
        &json!({ "kind": kind, "prediction": pred, "fit": fit, "verdict": verdict_json }),
    )?;
    Ok(Outcome {
        passed: matches!(verdict, Ok(Verdict::Consistent)),
        summary: format!(
            "slope {:.4}, predicted {:.4}, r2 {:.5}",
            fit.slope, pred.exponent, fit.r2
        ),
    })
}

pub fn diffusion_gap(cfg: &Config, sink: &Sink) -> Result<Outcome, CliError> {
    let e = &cfg.experiment.diffusion_gap;
    let p = cfg.params()?;
    let reference = build_reference(&p)?;
    let grid = interior_grid(&p, e.r_min);
    let m = gap_decay(
        &reference,
        &cfg.profile.u0,
        &cfg.profile.u1,
        e.s,
        e.m,
        e.window,
        e.samples,
        &grid,
    )?;
    let passed = m.holds(e.slack);
    sink.csv("diffusion-gap", &m.to_csv())?;
    sink.json("diffusion-gap", &json!({ "measurement": m, "passed": passed }))?;
    Ok(Outcome {
        passed,
        summary: format!("gap {:.4}, predicted {:.4}", m.measured_gap, m.predicted_gap),
    })
}

pub fn exponents(cfg: &Config, sink: &Sink) -> Result<Outcome, CliError> {
    let e = &cfg.experiment.exponents;
    let theta = cfg.model.theta;
    let regime = match e.regime.or_else(|| Regime::infer(e.m, e.s, theta)) {
        Some(r) => r,
        None => {
            let msg = format!("no regime covers (m, s, theta) = ({}, {}, {theta})", e.m, e.s);
            return Err(Error::Validation(msg).into());
        }
    };
    let triple = ExponentTriple::new(e.p[0], e.p[1], e.p[2])?;
    let report = classify_and_g(&triple, e.m, e.s, theta, regime, ClassifyOptions::default())?;
    let mut csv = String::from("component,p,g\n");
    for k in 0..3 {
        writeln!(csv, "{},{},{}", k + 1, num(e.p[k]), num(report.g[k])).unwrap();
    }
    sink.csv("exponents", &csv)?;
    sink.json("exponents", &report)?;
    // A closed stdout (e.g. piped into `head`) is not an error.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(Outcome {
        passed: report.identities_hold(),
        summary: format!("{:?}, g = {:?}, {}", report.case, report.g, report.verdict),
    })
}

pub fn simulate(cfg: &Config, sink: &Sink) -> Result<Outcome, CliError> {
    let rc = cfg.run_config()?;
    let (report, state) = run(&rc)?;
    sink.csv("simulate", &report.trace.to_csv())?;
    let mut checkpoint = None;
    if cfg.experiment.semilinear.checkpoint {
        let path = sink.path("final.ckpt");
        save_checkpoint(&path, &state, report.t_final, &rc.params)?;
        checkpoint = Some(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    sink.json(
        "simulate",
        &json!({ "config": rc, "report": report, "checkpoint": checkpoint }),
    )?;
    Ok(Outcome {
        passed: report.verdict == RunVerdict::Bounded,
        summary: format!(
            "{:?} after {} steps, trust horizon {:.3}",
            report.verdict, report.steps, report.trust_horizon
        ),
    })
}

pub fn picard(cfg: &Config, sink: &Sink) -> Result<Outcome, CliError> {
    let e = &cfg.experiment.semilinear;
    let rc = cfg.run_config()?;
    let rep = picard_probe(&rc, e.picard_iterations)?;
    let mut csv = String::from("n,difference,ratio\n");
    for (i, d) in rep.differences.iter().enumerate() {
        let n = i + 1;
        let ratio = if n >= 3 {
            rep.ratios.get(n - 3).map(|r| num(*r)).unwrap_or_default()
        } else {
            String::new()
        };
        writeln!(csv, "{n},{},{ratio}", num(*d)).unwrap();
    }
    sink.csv("picard", &csv)?;
    sink.json("picard", &json!({ "config": rc, "report": rep }))?;
    Ok(Outcome {
        passed: rep.verdict == PicardVerdict::Contraction && rep.ratio < e.picard_max_ratio,
        summary: format!("{:?}, ratio {:.3e}", rep.verdict, rep.ratio),
    })
}
