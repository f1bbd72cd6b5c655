use proptest::prelude::*;
use shtk::harness::inspect::{constants_rows, corona_rows, dyadic_rows, space_rows, sparse_rows};
use shtk::harness::{
    bp_blowup_slope, emit_report, evaluate_lhs, from_csv, generate_weight, instances,
    sparse_catalog, sparse_domination_probe, summarize, to_csv, to_table, verify_theorem_1,
    verify_theorem_2, BumpSpec, ExperimentConfig, Format, Model, NormSpec, ProbeRow, SpaceSpec,
    Sweep, VerificationRow, WeightSpec, Workspace, SLOPE_RS,
};
use shtk::weights::{compose_rhs, weak_ainfty_constant, WeightPair};
use shtk::{Error, Space};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn cells(n: usize) -> SpaceSpec {
    SpaceSpec {
        model: Model::Cells,
        n,
        periodic: false,
        metric: Default::default(),
    }
}

fn constant() -> WeightSpec {
    WeightSpec::Constant { c: 1.0 }
}

fn power(a: f64) -> WeightSpec {
    WeightSpec::Power {
        a,
        x0: 0.0,
        floor: 0.0,
    }
}

/// `int_{1/2}^inf c_q t^{q' - p - 1} dt` for the complement of `t^q`.
fn complement_bp_oracle(q: f64, p: f64) -> f64 {
    let qc = q / (q - 1.0);
    let c = (1.0 / q).powf(1.0 / (q - 1.0)) * (q - 1.0) / q;
    c * 0.5f64.powf(qc - p) / (p - qc)
}

#[test]
fn generators_follow_their_formulas() {
    let s = Space::<f64>::uniform_interval(11).unwrap();
    assert!(generate_weight(&constant(), &s, 0)
        .unwrap()
        .iter()
        .all(|&v| v == 1.0));
    let w = generate_weight(&power(1.0), &s, 0).unwrap();
    for (i, v) in w.iter().enumerate() {
        assert!((v - i as f64 / 10.0).abs() < 1e-15);
    }
    let ind = generate_weight(&WeightSpec::named("indicator", &[]).unwrap(), &s, 0).unwrap();
    assert_eq!(ind, [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let two = generate_weight(
        &WeightSpec::TwoValue {
            m: 5.0,
            split: 0.25,
        },
        &s,
        0,
    )
    .unwrap();
    assert_eq!(&two[..4], &[5.0, 5.0, 5.0, 1.0]);
    let floor = generate_weight(
        &WeightSpec::Power {
            a: 2.0,
            x0: 0.5,
            floor: 0.25,
        },
        &s,
        0,
    )
    .unwrap();
    assert!((floor[5] - 0.25).abs() < 1e-15 && (floor[0] - 0.5).abs() < 1e-15);
}

#[test]
fn periodic_power_uses_wrapped_distance() {
    let s = Space::<f64>::uniform_circle(8).unwrap();
    let w = generate_weight(
        &WeightSpec::Power {
            a: 1.0,
            x0: 0.0,
            floor: 1.0,
        },
        &s,
        0,
    )
    .unwrap();
    assert!((w[7] - 1.125).abs() < 1e-15 && (w[4] - 1.5).abs() < 1e-15);
}

#[test]
fn lognormal_is_seeded() {
    let s = Space::<f64>::uniform_cells(32).unwrap();
    let spec = WeightSpec::LognormalRandom { s: 0.7 };
    let a = generate_weight(&spec, &s, 3).unwrap();
    assert_eq!(a, generate_weight(&spec, &s, 3).unwrap());
    assert_ne!(a, generate_weight(&spec, &s, 4).unwrap());
    assert!(a.iter().all(|v| *v > 0.0));
}

#[test]
fn indicator_weight_has_finite_weak_constant() {
    let s = Space::<f64>::uniform_cells(64).unwrap();
    let w = generate_weight(&WeightSpec::Indicator { lo: 0.0, hi: 0.5 }, &s, 0).unwrap();
    let v = weak_ainfty_constant(&w, 2.0, &s).unwrap().value;
    assert!(v.is_finite() && v >= 1.0 - 1e-12, "{v}");
}

#[test]
fn unknown_or_invalid_weights_are_config_errors() {
    assert!(matches!(
        WeightSpec::named("bogus", &[]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        WeightSpec::named("power", &[]),
        Err(Error::Config(_))
    ));
    let s = Space::<f64>::uniform_interval(5).unwrap();
    assert!(matches!(
        generate_weight(&power(-0.5), &s, 0),
        Err(Error::Config(_))
    ));
    let text = "[space]\nmodel = \"cells\"\nn = 8\n[w]\nkind = \"gaussian\"\n[sigma]\nkind = \"constant\"\n";
    assert!(matches!(
        ExperimentConfig::from_toml(text),
        Err(Error::Config(_))
    ));
}

#[test]
fn config_round_trips_and_validates_axes() {
    let text = r#"
seed = 5
p = 2.0
[space]
model = "cells"
n = 16
[w]
kind = "power"
a = 0.5
[sigma]
kind = "constant"
c = 1.0
[bumps]
r = 2.0
s = 3.0
[sweep]
a = [0.5, -0.5]
p = [3.0, 1.5]
"#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(cfg.bumps, BumpSpec::Powers { r: 2.0, s: 3.0 });
    assert_eq!(
        ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(),
        cfg
    );
    let ids: Vec<String> = instances(&cfg).unwrap().into_iter().map(|i| i.id).collect();
    assert_eq!(
        ids,
        ["p=1.5 a=-0.5", "p=1.5 a=0.5", "p=3 a=-0.5", "p=3 a=0.5"]
    );

    let mut bad = cfg.clone();
    bad.sweep.a = Some(vec![]);
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let mut bad = cfg.clone();
    bad.sweep.b = Some(vec![1.0]);
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let young = text.replace(
        "r = 2.0\ns = 3.0",
        "phi = { kind = \"power\", q = 0.5 }\npsi = { kind = \"power\", q = 4.0 }",
    );
    let young = young.replace("[sweep]\na = [0.5, -0.5]\np = [3.0, 1.5]", "");
    assert!(matches!(
        ExperimentConfig::from_toml(&young),
        Err(Error::Config(_))
    ));
}

#[test]
fn constant_pair_with_top_cube() {
    let cfg = ExperimentConfig::new(cells(32), constant(), constant());
    let ws = Workspace::build(&cfg).unwrap();
    let pair = WeightPair::new(&ws.space, vec![1.0; 32], vec![1.0; 32]).unwrap();
    let catalog = sparse_catalog(&pair, &ws, 0).unwrap();
    let top: Vec<_> = catalog
        .into_iter()
        .filter(|e| e.label == "t0:top")
        .collect();
    let lhs = evaluate_lhs(&pair, 2.0, &ws.space, &top, &NormSpec::default(), 0).unwrap();
    assert!(lhs.exact && rel(lhs.lo, 1.0) < 1e-12);
    let rhs = compose_rhs(1.0, 1.0, 1.0, 2.0);
    assert_eq!(rhs, 2.0);
    assert!(rel(lhs.lo / rhs, 0.5) < 1e-12);

    let rows = verify_theorem_1(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert!(rel(row.rhs, 2.0) < 1e-12 && rel(row.ap, 1.0) < 1e-12);
    assert!(row.exact && row.norm_lo >= 1.0 - 1e-12);
    assert!(row.violations().is_empty());
}

#[test]
fn zero_sigma_rows_are_degenerate() {
    let zero = WeightSpec::Constant { c: 0.0 };
    let cfg = ExperimentConfig::new(cells(16), constant(), zero);
    for row in verify_theorem_1(&cfg)
        .unwrap()
        .into_iter()
        .chain(verify_theorem_2(&cfg).unwrap())
    {
        assert!(row.degenerate && row.norm_hi == 0.0 && row.rhs == 0.0 && row.implied_hi.is_none());
    }
    let probe = sparse_domination_probe(&cfg).unwrap();
    assert_eq!(probe[0].kernel_norm, 0.0);
    assert_eq!(probe[0].sparse_norm, 0.0);
    assert!(probe[0].ratio.is_none());
}

#[test]
fn second_theorem_constant_pair() {
    let cfg = ExperimentConfig::new(cells(32), constant(), constant());
    let row = verify_theorem_2(&cfg).unwrap().remove(0);
    assert!(rel(row.bump_phi.unwrap(), 1.0) < 1e-12 && rel(row.bump_psi.unwrap(), 1.0) < 1e-12);
    let b = complement_bp_oracle(4.0, 2.0);
    assert!(rel(row.bp_phi.unwrap(), b) < 1e-12 && rel(row.bp_psi.unwrap(), b) < 1e-12);
    assert!(rel(row.rhs, 2.0 * b.sqrt()) < 1e-12);
    assert!(row.reduction.unwrap() > 0.0);
}

#[test]
fn bump_exponent_out_of_range() {
    let mut cfg = ExperimentConfig::new(cells(16), constant(), constant());
    cfg.bumps = BumpSpec::Powers { r: 1.0, s: 2.0 };
    let err = verify_theorem_2(&cfg).unwrap_err();
    assert!(matches!(err.root(), Error::Config(_)), "{err}");
}

fn fitted_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|v| v.0).sum::<f64>() / n,
        pts.iter().map(|v| v.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn bp_blowup_slope_matches_closed_form() {
    for p in [1.5, 2.0, 3.0] {
        let pc = p / (p - 1.0);
        let pts: Vec<(f64, f64)> = SLOPE_RS
            .iter()
            .map(|&r| ((r - 1.0).ln(), complement_bp_oracle(pc * r, p).ln()))
            .collect();
        let got = bp_blowup_slope(p, &SLOPE_RS).unwrap();
        assert!((got - fitted_slope(&pts)).abs() < 1e-6, "p = {p}: {got}");
    }
    // the asymptotic rate only shows much closer to r = 1
    let near: Vec<f64> = (2..6).map(|k| 1.0 + 0.5f64.powi(3 * k)).collect();
    for p in [1.5, 2.0, 3.0] {
        let got = bp_blowup_slope(p, &near).unwrap();
        assert!((got + 1.0).abs() < 0.05, "p = {p}: {got}");
    }
    assert!(bp_blowup_slope(2.0, &[1.5]).is_err());
}

#[test]
fn probe_needs_a_line() {
    let spec = SpaceSpec {
        model: Model::Lattice,
        n: 16,
        periodic: false,
        metric: Default::default(),
    };
    let cfg = ExperimentConfig::new(spec, constant(), constant());
    assert!(matches!(
        sparse_domination_probe(&cfg),
        Err(Error::Unsupported(_))
    ));
    let mut cfg = ExperimentConfig::new(cells(16), constant(), constant());
    cfg.p = 3.0;
    assert!(matches!(
        sparse_domination_probe(&cfg),
        Err(Error::Config(_))
    ));
}

#[test]
fn probe_constant_pair() {
    let cfg = ExperimentConfig::new(cells(64), constant(), constant());
    let row = sparse_domination_probe(&cfg).unwrap().remove(0);
    assert!(row.kernel_norm > 0.0 && row.sparse_norm >= 1.0 - 1e-12);
    assert!(row.ratio.unwrap().is_finite());
}

fn sweep_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(cells(32), power(0.0), power(0.0));
    cfg.w = WeightSpec::Power {
        a: 0.0,
        x0: 0.0,
        floor: 0.0,
    };
    cfg.sweep = Sweep {
        a: Some(vec![0.5, -0.5, 0.0, 0.9, -0.9]),
        ..Sweep::default()
    };
    cfg
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config();
    let rows = verify_theorem_1(&cfg).unwrap();
    assert_eq!(rows.len(), 5);
    let a: Vec<f64> = rows.iter().map(|r| r.a.unwrap()).collect();
    assert_eq!(a, [-0.9, -0.5, 0.0, 0.5, 0.9]);

    let one = emit_report(&rows[..1], Format::Csv, dir.path(), "one").unwrap();
    let text = std::fs::read_to_string(&one[0]).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("instance,theorem,p,a,b,r,s,family,"));

    let csv = to_csv(&rows).unwrap();
    let back: Vec<VerificationRow> = from_csv(&csv).unwrap();
    assert_eq!(back, rows);

    let table = to_table(&rows).unwrap();
    assert_eq!(table.lines().count(), 6);

    let files = emit_report(&rows, Format::Plotdata, dir.path(), "sweep").unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["sweep_p.dat", "sweep_a.dat"]);
    let series = std::fs::read_to_string(&files[1]).unwrap();
    let xs: Vec<f64> = series
        .lines()
        .skip(1)
        .map(|l| l.split(' ').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(xs, [-0.9, -0.5, 0.0, 0.5, 0.9]);

    assert!(emit_report::<VerificationRow>(&[], Format::Csv, dir.path(), "none").is_err());
    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    assert!(matches!(
        emit_report(&rows, Format::Csv, &blocked, "x"),
        Err(Error::Io(_))
    ));
}

#[test]
fn pipeline_is_deterministic() {
    let mut cfg = sweep_config();
    cfg.sweep.p = Some(vec![2.0, 3.0]);
    let first = to_csv(&verify_theorem_1(&cfg).unwrap()).unwrap();
    let second = to_csv(&verify_theorem_1(&cfg).unwrap()).unwrap();
    assert_eq!(first, second);
    let probe: Vec<ProbeRow> = sparse_domination_probe(&sweep_config()).unwrap();
    assert_eq!(
        to_csv(&probe).unwrap(),
        to_csv(&sparse_domination_probe(&sweep_config()).unwrap()).unwrap()
    );
}

#[test]
fn interval_rows_bracket_the_norm() {
    let mut cfg = sweep_config();
    cfg.p = 3.0;
    let rows = verify_theorem_1(&cfg).unwrap();
    let summary = summarize(&rows);
    assert!(summary.violations.is_empty(), "{:?}", summary.violations);
    assert!(summary.spread.is_none());
    for row in &rows {
        assert!(!row.exact && row.norm_lo > 0.0 && row.norm_lo <= row.norm_hi);
    }
}

#[test]
fn lower_bounds_grow_with_trials() {
    let cfg = ExperimentConfig::new(cells(32), power(-0.5), power(0.5));
    let ws = Workspace::build(&cfg).unwrap();
    let w = generate_weight(&cfg.w, &ws.space, 0).unwrap();
    let s = generate_weight(&cfg.sigma, &ws.space, 1).unwrap();
    let pair = WeightPair::new(&ws.space, w, s).unwrap();
    let catalog = sparse_catalog(&pair, &ws, 0).unwrap();
    let mut last = 0.0;
    for trials in [1, 3, 10, 30] {
        let norm = NormSpec {
            trials,
            ..NormSpec::default()
        };
        let lhs = evaluate_lhs(&pair, 2.5, &ws.space, &catalog, &norm, 9).unwrap();
        assert!(lhs.lo >= last);
        last = lhs.lo;
    }
}

#[test]
fn inspection_rows() {
    let mut cfg = sweep_config();
    cfg.sweep.a = Some(vec![-0.5, 0.5]);
    let ws = Workspace::build(&cfg).unwrap();
    assert_eq!(space_rows(&ws)[0].points, 32);
    let dy = dyadic_rows(&ws);
    assert_eq!(dy.len(), 3);
    assert!(dy.iter().all(|r| r.violations == 0));
    let c = constants_rows(&cfg, &ws).unwrap();
    assert_eq!(c.len(), 2);
    for row in &c {
        assert!(row.bump_phi >= row.ap.sqrt() * (1.0 - 1e-9));
        assert!(row.rhs.unwrap().is_finite());
    }
    let sp = sparse_rows(&cfg, &ws).unwrap();
    assert!(sp.iter().all(|r| r.t_sigma <= r.norm_hi * (1.0 + 1e-9)));
    let co = corona_rows(&cfg, &ws).unwrap();
    assert!(!co.is_empty() && co.iter().all(|r| r.principal >= 1));
}

#[test]
fn errors_carry_the_instance() {
    let mut cfg = ExperimentConfig::new(cells(16), constant(), constant());
    cfg.sweep.r = Some(vec![2.0, 0.9]);
    let err = verify_theorem_2(&cfg).unwrap_err();
    assert!(err.to_string().contains("r=0.9"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn implied_constant_is_scale_invariant(a in -0.8f64..0.8, b in -0.8f64..0.8, c in 0.01f64..100.0) {
        let cfg = ExperimentConfig::new(cells(32), power(a), power(b));
        let ws = Workspace::build(&cfg).unwrap();
        let w = generate_weight(&cfg.w, &ws.space, 0).unwrap();
        let s = generate_weight(&cfg.sigma, &ws.space, 1).unwrap();
        let implied = |w: Vec<f64>| {
            let pair = WeightPair::new(&ws.space, w, s.clone()).unwrap();
            let catalog = sparse_catalog(&pair, &ws, 0).unwrap();
            let lhs = evaluate_lhs(&pair, 2.0, &ws.space, &catalog, &NormSpec::default(), 0).unwrap();
            let ap = shtk::weights::ap_constant(&pair, 2.0, &ws.space, shtk::weights::Scope::Balls).unwrap().value;
            let ww = weak_ainfty_constant(&pair.w, ws.delta(), &ws.space).unwrap().value;
            let wsg = weak_ainfty_constant(&pair.sigma, ws.delta(), &ws.space).unwrap().value;
            lhs.lo / compose_rhs(ap, ww, wsg, 2.0)
        };
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        prop_assert!(rel(implied(scaled), implied(w)) < 1e-9);
    }
}
