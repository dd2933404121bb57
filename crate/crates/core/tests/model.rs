mod common;

use common::*;
use pv_uptake::analysis::{
    fit_models, run_scenario, sweep_from_irr, SweepParameter, MODEL_EXPONENTIAL, MODEL_PROSPECT,
};
use pv_uptake::cashflow::build_profile;
use pv_uptake::irr::{
    economic_potential, economic_potential_for_month, irr_density, mean_irr, mean_irr_series, DiscountGrid,
    EconomicPotentialTable,
};
use pv_uptake::sampling::{sample_population, ParameterSet};
use pv_uptake::scenario::{ScenarioConfig, ScenarioInputs};
use pv_uptake::uptake::BehavioralParams;
use pv_uptake::Error;

#[test]
fn single_sample_theta_is_a_step_at_its_irr() {
    let target = 0.062;
    let sample = annuity_sample(10_000.0, annuity_flow_for_irr(target));
    let oracle = irr_bisection(&build_profile(&sample).unwrap(), -0.1, 0.15).unwrap();
    assert!((oracle - target).abs() < 1e-10);

    let grid = DiscountGrid::default();
    let table = economic_potential(&[sample], &grid, month("2010-01")).unwrap();
    for (r, theta) in grid.rates().zip(&table.theta) {
        let expected = if r < oracle { 1.0 } else { 0.0 };
        assert_eq!(*theta, expected, "r = {r}");
    }
    let m = mean_irr(&table);
    assert!((m.mean - 0.06).abs() < 1e-12);
    assert!((m.mean - oracle).abs() <= grid.step());
    assert_eq!(m.captured_mass, 1.0);
}

#[test]
fn two_samples_split_the_mass() {
    let grid = DiscountGrid::default();
    let samples = [
        annuity_sample(10_000.0, annuity_flow_for_irr(0.0225)),
        annuity_sample(10_000.0, annuity_flow_for_irr(0.0625)),
    ];
    let table = economic_potential(&samples, &grid, month("2010-01")).unwrap();
    let density = irr_density(&table);
    let at = |r: f64| density.iter().find(|(x, _)| (x - r).abs() < 1e-9).unwrap().1;
    assert_eq!(at(0.02), 0.5);
    assert_eq!(at(0.06), 0.5);
    assert!((mean_irr(&table).mean - 0.04).abs() < 1e-12);
}

#[test]
fn mixture_of_tables_has_the_pooled_mean() {
    let grid = DiscountGrid::default();
    let m = month("2010-01");
    let low: Vec<_> = [0.01, 0.03, 0.04].iter().map(|&r| annuity_sample(10_000.0, annuity_flow_for_irr(r))).collect();
    let high: Vec<_> = [0.08, 0.11].iter().map(|&r| annuity_sample(9_000.0, annuity_flow_for_irr(r))).collect();
    let a = economic_potential(&low, &grid, m).unwrap();
    let b = economic_potential(&high, &grid, m).unwrap();
    let mixed = EconomicPotentialTable::mixture(&[(&a, low.len()), (&b, high.len())]).unwrap();
    let pooled: Vec<_> = low.iter().chain(&high).cloned().collect();
    let direct = economic_potential(&pooled, &grid, m).unwrap();
    let expected = (3.0 * mean_irr(&a).mean + 2.0 * mean_irr(&b).mean) / 5.0;
    assert!((mean_irr(&mixed).mean - expected).abs() < 1e-12);
    assert!((mean_irr(&direct).mean - expected).abs() < 1e-12);
}

#[test]
fn refined_grid_halves_the_worst_case_error() {
    let grid = DiscountGrid::default();
    let fine = grid.refined();
    assert_eq!(fine.len(), 2 * grid.len() - 1);
    for r in [0.0123, 0.0449, 0.0871, 0.1333] {
        let sample = annuity_sample(10_000.0, annuity_flow_for_irr(r));
        let oracle = irr_bisection(&build_profile(&sample).unwrap(), -0.1, 0.15).unwrap();
        let coarse = mean_irr(&economic_potential(&[sample], &grid, month("2010-01")).unwrap()).mean;
        let finer = mean_irr(&economic_potential(&[sample], &fine, month("2010-01")).unwrap()).mean;
        assert!((coarse - oracle).abs() <= grid.step());
        assert!((finer - oracle).abs() <= fine.step());
    }
}

#[test]
fn fused_tally_matches_materialised_population() {
    let inputs = step_scenario();
    let specs = ParameterSet::reference();
    let grid = DiscountGrid::default();
    let m = inputs.range.start;
    let samples = sample_population(&specs, m, &inputs.market, 3000, 9).unwrap();
    let a = economic_potential(&samples, &grid, m).unwrap();
    let b = economic_potential_for_month(&specs, &inputs.market, m, 3000, 9, &grid).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tariff_cut_lowers_mean_irr() {
    let inputs = step_scenario();
    let irr = mean_irr_series(
        &ParameterSet::reference(),
        &inputs.market,
        inputs.range,
        2000,
        1,
        &DiscountGrid::default(),
    )
    .unwrap();
    let v = irr.mean_irr.values();
    assert!(v[STEP_AT] < v[STEP_AT - 1]);
    // Common random numbers: constant inputs give identical mean IRR.
    assert!(v[..STEP_AT].iter().all(|&x| x == v[0]));
    assert!(v[STEP_AT..].iter().all(|&x| x == v[STEP_AT]));
}

#[test]
fn flat_scenario_has_undefined_correlation() {
    let tariffs = [0.3; 12];
    let observed = [500.0; 12];
    let inputs = scenario_with_tariffs(&tariffs, &observed, &BASE_LEVELS);
    let config = ScenarioConfig {
        n_samples: 500,
        ..ScenarioConfig::default()
    };
    assert!(matches!(run_scenario(&config, &inputs), Err(Error::ZeroVariance(_))));
}

#[test]
fn prospect_model_beats_exponential_around_a_cut() {
    let inputs = step_scenario();
    let config = ScenarioConfig {
        n_samples: 2000,
        ..ScenarioConfig::default()
    };
    let result = run_scenario(&config, &inputs).unwrap();
    let exp = result.report(MODEL_EXPONENTIAL).unwrap();
    let pro = result.report(MODEL_PROSPECT).unwrap();
    assert!(pro.pearson_r > exp.pearson_r, "{} vs {}", pro.pearson_r, exp.pearson_r);
    assert!((pro.total_modeled.unwrap() - pro.total_observed).abs() <= 1e-9 * pro.total_observed);
    assert!((exp.total_modeled.unwrap() - exp.total_observed).abs() <= 1e-9 * exp.total_observed);
}

#[test]
fn unit_loss_aversion_and_linear_value_leave_three_u_minus_neighbours() {
    let inputs = step_scenario();
    let irr = mean_irr_series(&ParameterSet::reference(), &inputs.market, inputs.range, 1000, 3, &DiscountGrid::default())
        .unwrap();
    let base = BehavioralParams::new(20.0, 1.0, 1.0).unwrap();
    let sweep = sweep_from_irr(&irr.mean_irr, &inputs, &base, SweepParameter::Lambda, &[1.0]).unwrap();
    let point = &sweep.points[0];
    let u = point.result.u.values();
    let big_u = point.result.utility.values();
    for t in 1..u.len() - 1 {
        let expected = 3.0 * u[t] - u[t + 1] - u[t - 1];
        assert!((big_u[t] - expected).abs() <= 1e-12 * u[t].abs().max(1.0));
    }
}

#[test]
fn sweep_at_defaults_reproduces_the_scenario() {
    let inputs = step_scenario();
    let config = ScenarioConfig {
        n_samples: 1000,
        ..ScenarioConfig::default()
    };
    let result = run_scenario(&config, &inputs).unwrap();
    let sweep = sweep_from_irr(
        &result.irr.mean_irr,
        &inputs,
        &config.params,
        SweepParameter::Lambda,
        &[1.0, 2.25, 3.0],
    )
    .unwrap();
    assert_eq!(sweep.points[1].result, result.prospect);
}

#[test]
fn sweep_rejects_unsorted_values_and_unknown_parameters() {
    let inputs = step_scenario();
    let irr = mean_irr_series(&ParameterSet::reference(), &inputs.market, inputs.range, 200, 3, &DiscountGrid::default())
        .unwrap();
    let base = BehavioralParams::default();
    assert!(sweep_from_irr(&irr.mean_irr, &inputs, &base, SweepParameter::Alpha, &[0.5, 0.5]).is_err());
    assert!(sweep_from_irr(&irr.mean_irr, &inputs, &base, SweepParameter::Lambda, &[0.5]).is_err());
    let err = "gamma".parse::<SweepParameter>().unwrap_err().to_string();
    for name in ["alpha", "lambda", "kappa"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn fit_models_is_deterministic() {
    let inputs = step_scenario();
    let run = || {
        let irr = mean_irr_series(&ParameterSet::reference(), &inputs.market, inputs.range, 500, 5, &DiscountGrid::default())
            .unwrap();
        fit_models(irr, &inputs, &BehavioralParams::default()).unwrap().reports
    };
    assert_eq!(run(), run());
}

fn parse_f64(s: &str) -> Option<f64> {
    if s.is_empty() {
        None
    } else {
        Some(s.parse().unwrap())
    }
}

fn assert_close(actual: Option<f64>, expected: Option<f64>, what: &str) {
    match (actual, expected) {
        (Some(a), Some(e)) => assert!((a - e).abs() <= 1e-12 * e.abs().max(1.0), "{what}: {a} vs {e}"),
        (a, e) => assert_eq!(a, e, "{what}"),
    }
}

/// Regression against outputs committed under `tests/golden`, produced by
/// `simulate --samples 10000 --seed 42` on the bundled dataset.
#[test]
fn bundled_dataset_matches_golden_outputs() {
    let (inputs, _) = ScenarioInputs::load(bundled_data()).unwrap();
    let config = ScenarioConfig {
        data_dir: bundled_data(),
        n_samples: 10_000,
        seed: 42,
        ..ScenarioConfig::default()
    };
    let result = run_scenario(&config, &inputs).unwrap();

    let golden = read_rows(&golden_dir().join("mean_irr.csv"));
    assert_eq!(golden.len(), result.irr.mean_irr.len());
    for (row, ((m, mean), captured)) in golden
        .iter()
        .zip(result.irr.mean_irr.iter().zip(result.irr.captured_mass.values()))
    {
        assert_eq!(row[0], m.to_string());
        assert_close(Some(mean), parse_f64(&row[1]), &format!("mean_irr {m}"));
        assert_close(Some(*captured), parse_f64(&row[2]), &format!("captured_mass {m}"));
    }

    let golden = read_rows(&golden_dir().join("fit_report.csv"));
    assert_eq!(golden.len(), result.reports.len());
    for (row, report) in golden.iter().zip(&result.reports) {
        assert_eq!(row[0], report.model);
        assert_close(report.scale, parse_f64(&row[1]), "scale");
        assert_close(Some(report.pearson_r), parse_f64(&row[2]), "pearson_r");
        assert_eq!(row[3], report.significant.to_string());
        assert_close(report.total_modeled, parse_f64(&row[4]), "total_modeled");
        assert_close(Some(report.total_observed), parse_f64(&row[5]), "total_observed");
    }
}
