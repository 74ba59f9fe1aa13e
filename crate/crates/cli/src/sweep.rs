//! Grid sweeps and the Bell-state demonstration.

use adfilter::channels::{damping_probability, two_qubit_damping};
use adfilter::filter::{apply_filter, four_outcome_measurement, PovmMode};
use adfilter::gates::{bell_pair, ms_gate, BellLabel};
use adfilter::metrics::{
    analytic_bell_filtered, analytic_filtered, analytic_unfiltered, haar_average_fidelity, state_fidelity,
};
use adfilter::pipeline::{evaluate_pipeline, noisy_gate, FilterBackend};
use adfilter::scheme_a::{LeakagePolicy, ThermalModeSpec};
use adfilter::scheme_b::{thermal_correction, ChainSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{povm_name, ExperimentConfig, Scheme};
use crate::CliError;

/// Haar samples used for the Monte Carlo line of the Bell demo.
pub const DEMO_HAAR_SAMPLES: usize = 20_000;

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub t_over_t1: f64,
    pub p: f64,
    pub nbar: f64,
    pub scheme: String,
    pub f_unfiltered: f64,
    pub f_filtered: f64,
    pub p_success: f64,
    pub f_analytic_unf: f64,
    pub f_analytic_f: f64,
    /// Effective-phase factor; only defined for scheme B rows.
    pub o_factor: Option<f64>,
}

#[derive(Clone, Copy)]
enum Realization {
    A,
    B,
}

fn record(cfg: &ExperimentConfig, t_over_t1: f64, nbar: f64, which: Realization) -> Result<SweepRecord, CliError> {
    let p = damping_probability(t_over_t1 * cfg.t1, cfg.t1)?;
    let (backend, scheme, o_factor) = match which {
        Realization::A => {
            let thermal = ThermalModeSpec::new(nbar, cfg.n_max)?;
            (FilterBackend::SchemeA { thermal, policy: LeakagePolicy::KeepInWeight }, "a", None)
        }
        Realization::B => {
            let chain = ChainSpec::uniform(nbar)?;
            let o = thermal_correction(&chain)?;
            (FilterBackend::SchemeB { chain, mode: cfg.scheme_b_mode }, "b", Some(o))
        }
    };
    let pt = evaluate_pipeline(p, p, &backend)?;
    Ok(SweepRecord {
        t_over_t1,
        p,
        nbar,
        scheme: scheme.to_string(),
        f_unfiltered: pt.f_unfiltered,
        f_filtered: pt.f_filtered,
        p_success: pt.p_success,
        f_analytic_unf: analytic_unfiltered(p),
        f_analytic_f: analytic_filtered(p),
        o_factor,
    })
}

/// Evaluates jobs in parallel and returns them in job order.
fn run_jobs(cfg: &ExperimentConfig, jobs: Vec<(f64, f64, Realization)>) -> Result<Vec<SweepRecord>, CliError> {
    jobs.into_par_iter().map(|(t, nbar, which)| record(cfg, t, nbar, which)).collect()
}

/// Cold-mode rows through both realizations for every grid point.
pub fn cmd_ideal(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>, CliError> {
    let jobs = cfg.t_over_t1_grid.iter().flat_map(|&t| [(t, 0.0, Realization::A), (t, 0.0, Realization::B)]).collect();
    run_jobs(cfg, jobs)
}

/// Scheme A rows for every `(t/T1, n̄)` pair.
pub fn cmd_scheme_a(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>, CliError> {
    let jobs =
        cfg.t_over_t1_grid.iter().flat_map(|&t| cfg.nbar_values.iter().map(move |&n| (t, n, Realization::A))).collect();
    run_jobs(cfg, jobs)
}

/// Scheme B rows for every `(t/T1, n̄)` pair, all four axial modes at `n̄`.
pub fn cmd_scheme_b(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>, CliError> {
    let jobs =
        cfg.t_over_t1_grid.iter().flat_map(|&t| cfg.nbar_values.iter().map(move |&n| (t, n, Realization::B))).collect();
    run_jobs(cfg, jobs)
}

/// Dispatches on `cfg.scheme`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>, CliError> {
    match cfg.scheme {
        Scheme::Ideal => cmd_ideal(cfg),
        Scheme::A => cmd_scheme_a(cfg),
        Scheme::B => cmd_scheme_b(cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeLine {
    pub bits: String,
    pub probability: f64,
}

/// Damping and filtering of one Bell state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellReport {
    pub state: String,
    pub p: f64,
    pub f_unfiltered: f64,
    pub f_filtered: f64,
    pub p_success: f64,
    pub f_analytic_filtered: f64,
    pub singlet_unfiltered: f64,
    pub singlet_filtered: f64,
    pub singlet_success: f64,
    pub povm: String,
    pub outcomes: Vec<OutcomeLine>,
    pub outcome_total: f64,
    pub haar_gate_fidelity: f64,
    pub haar_stderr: f64,
    pub analytic_gate_fidelity: f64,
}

pub fn cmd_bell_demo(label: BellLabel, p: f64, povm: PovmMode, seed: u64) -> Result<BellReport, CliError> {
    if !(0.0..1.0).contains(&p) {
        return Err(CliError::Config(format!("decay probability {p} must lie in [0, 1)")));
    }
    let target = bell_pair(label);
    let damped = two_qubit_damping(&target, p, p)?;
    let (filtered, p_success) = apply_filter(&damped, p, p)?;
    let outcomes: Vec<OutcomeLine> = four_outcome_measurement(&damped, p, povm)?
        .into_iter()
        .map(|o| OutcomeLine { bits: format!("{}{}", o.outcome_bits.0, o.outcome_bits.1), probability: o.probability })
        .collect();
    let outcome_total = outcomes.iter().map(|o| o.probability).sum();
    let channel = noisy_gate(p)?.then(&FilterBackend::Ideal.channel(p)?)?;
    let (haar_gate_fidelity, haar_stderr) = haar_average_fidelity(&channel, &ms_gate(), DEMO_HAAR_SAMPLES, seed)?;
    Ok(BellReport {
        state: label.to_string(),
        p,
        f_unfiltered: state_fidelity(&damped, &target)?,
        f_filtered: state_fidelity(&filtered, &target)?,
        p_success,
        f_analytic_filtered: analytic_bell_filtered(label, p),
        singlet_unfiltered: 1.0 - p,
        singlet_filtered: 1.0 / (1.0 + p),
        singlet_success: (1.0 - p).powi(2) * (1.0 + p),
        povm: povm_name(povm).to_string(),
        outcomes,
        outcome_total,
        haar_gate_fidelity,
        haar_stderr,
        analytic_gate_fidelity: analytic_filtered(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    fn small(scheme: Scheme, points: usize) -> ExperimentConfig {
        let o = Overrides { points: Some(points), tmin: Some(0.0), tmax: Some(1.0), ..Default::default() };
        ExperimentConfig::resolve(scheme, &o).unwrap()
    }

    #[test]
    fn ideal_rows() {
        let rows = cmd_ideal(&small(Scheme::Ideal, 3)).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].scheme, "a");
        assert_eq!(rows[1].scheme, "b");
        assert_eq!(rows[1].o_factor, Some(1.0));
        for r in &rows[..2] {
            assert!((r.f_unfiltered - 1.0).abs() < 1e-12 && (r.f_filtered - 1.0).abs() < 1e-12);
            assert!((r.p_success - 1.0).abs() < 1e-12);
        }
        let last = &rows[4];
        assert!((last.t_over_t1 - 1.0).abs() < 1e-15);
        assert!((last.f_analytic_unf - 0.533_06).abs() < 1e-5);
        assert!((last.f_analytic_f - 0.661_89).abs() < 1e-5);
        for r in &rows {
            assert!((r.f_filtered - r.f_analytic_f).abs() < 1e-9);
        }
    }

    #[test]
    fn scheme_a_zero_rows_match_ideal() {
        let ideal = cmd_ideal(&small(Scheme::Ideal, 4)).unwrap();
        let a = cmd_scheme_a(&small(Scheme::A, 4)).unwrap();
        let cold: Vec<_> = a.iter().filter(|r| r.nbar == 0.0).collect();
        let ideal_a: Vec<_> = ideal.iter().filter(|r| r.scheme == "a").collect();
        assert_eq!(cold.len(), ideal_a.len());
        for (x, y) in cold.iter().zip(ideal_a) {
            assert!((x.f_filtered - y.f_filtered).abs() < 1e-9);
            assert!((x.p_success - y.p_success).abs() < 1e-9);
        }
    }

    #[test]
    fn scheme_b_rows_carry_correction() {
        let rows = cmd_scheme_b(&small(Scheme::B, 2)).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].o_factor, Some(1.0));
        assert!((rows[3].o_factor.unwrap() - 0.921_584).abs() < 1e-6);
    }

    #[test]
    fn bell_demo_singlet() {
        let r = cmd_bell_demo(BellLabel::PsiMinus, 0.5, PovmMode::CircuitDerived, 3).unwrap();
        assert!((r.f_filtered - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.p_success - 0.375).abs() < 1e-12);
        assert!((r.outcome_total - 1.0).abs() < 1e-12);
        assert_eq!(r.outcomes[0].bits, "00");
        let paper = cmd_bell_demo(BellLabel::PsiMinus, 0.5, PovmMode::PovmPaper, 3).unwrap();
        assert!(paper.outcome_total > 1.0);
        assert!(cmd_bell_demo(BellLabel::PhiPlus, 1.0, PovmMode::CircuitDerived, 3).is_err());
        let clean = cmd_bell_demo(BellLabel::PhiMinus, 0.0, PovmMode::CircuitDerived, 3).unwrap();
        assert!((clean.f_unfiltered - 1.0).abs() < 1e-12 && (clean.f_filtered - 1.0).abs() < 1e-12);
    }
}
