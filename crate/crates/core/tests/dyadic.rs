use shtk::dyadic::{
    ball_to_cube, build_family, validate_family, Backend, BuildOptions, DyadicFamily, Violation,
};
use shtk::{Metric, Space, SpaceProfile};

fn family(space: &Space<f64>, opts: &BuildOptions<f64>) -> (DyadicFamily<f64>, SpaceProfile<f64>) {
    let profile = SpaceProfile::measure(space).unwrap();
    (build_family(space, &profile, opts).unwrap(), profile)
}

#[test]
fn euclidean_backend_reproduces_classical_intervals() {
    let s = Space::<f64>::uniform_cells(16).unwrap();
    let (f, profile) = family(&s, &BuildOptions::euclidean(1, 99));
    assert_eq!(f.backend, Backend::Euclidean);
    let sys = f.system(0);
    assert_eq!((sys.k_min, sys.k_max), (0, 4));
    for k in 0..=4 {
        let len = 0.5f64.powi(k);
        let mut expected: Vec<Vec<usize>> = (0..(1usize << k))
            .map(|j| {
                (0..16)
                    .filter(|&i| {
                        let x = s.coords(i)[0];
                        x >= j as f64 * len && x < (j + 1) as f64 * len
                    })
                    .collect()
            })
            .collect();
        expected.retain(|v| !v.is_empty());
        let mut got: Vec<Vec<usize>> = sys
            .cubes_at(k)
            .iter()
            .map(|&c| sys.cube(c).members.clone())
            .collect();
        got.sort();
        expected.sort();
        assert_eq!(got, expected, "level {k}");
    }
    let report = validate_family(&f, &s, profile.doubling());
    assert!(report.passed(), "{:?}", report.violations);
    assert_eq!(report.worst_parent_child_ratio, 2.0);
}

#[test]
fn single_point_is_a_chain_of_singletons() {
    let s = Space::<f64>::uniform_interval(1).unwrap();
    let (f, profile) = family(&s, &BuildOptions::new(1.0 / 96.0, 2, 3));
    for sys in &f.systems {
        assert!(sys.k_max > sys.k_min);
        for c in &sys.cubes {
            assert_eq!(c.members, vec![0]);
        }
    }
    assert!(validate_family(&f, &s, profile.doubling()).passed());
}

#[test]
fn random_cloud_nets_pass_validation() {
    let s = Space::<f64>::random_cloud(64, 2024, Metric::Euclidean).unwrap();
    let (f, profile) = family(&s, &BuildOptions::new(1.0 / 96.0, 3, 5));
    assert_eq!(f.backend, Backend::Nets);
    assert_eq!(f.len(), 3);
    let report = validate_family(&f, &s, profile.doubling());
    assert!(report.passed(), "{:?}", report.violations);
    assert_eq!(report.sandwich, (1.0 / 12.0, 4.0));
    assert!(report.worst_parent_child_ratio <= report.parent_child_bound);
    for sys in &f.systems {
        assert_eq!(sys.cubes_at(sys.k_min).len(), 1);
        assert!(sys
            .cubes_at(sys.k_max)
            .iter()
            .all(|&c| sys.cube(c).members.len() == 1));
    }
}

#[test]
fn squared_metric_cloud_uses_kappa_scaled_eta() {
    let s = Space::<f64>::random_cloud(48, 77, Metric::Squared).unwrap();
    let profile = SpaceProfile::measure(&s).unwrap();
    let kappa = profile.kappa();
    let eta = 1.0 / (96.0 * kappa.powi(6));
    let f = build_family(&s, &profile, &BuildOptions::new(eta, 2, 1)).unwrap();
    let report = validate_family(&f, &s, profile.doubling());
    assert!(report.passed(), "{:?}", report.violations);
}

#[test]
fn duplicated_point_is_reported_as_overlap() {
    let s = Space::<f64>::uniform_cells(16).unwrap();
    let (mut f, profile) = family(&s, &BuildOptions::euclidean(1, 0));
    let sys = &mut f.systems[0];
    let level1: Vec<usize> = sys.cubes_at(1).to_vec();
    let (a, b) = (level1[0], level1[1]);
    let p = sys.cube(a).members[0];
    let cubes = sys.cubes_mut();
    cubes[b].members.push(p);
    cubes[b].members.sort_unstable();
    let report = validate_family(&f, &s, profile.doubling());
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Overlap { point, cubes, .. } if *point == p && (*cubes == (a, b) || *cubes == (b, a)))));
}

#[test]
fn moved_point_breaks_nesting() {
    let s = Space::<f64>::uniform_cells(16).unwrap();
    let (mut f, profile) = family(&s, &BuildOptions::euclidean(1, 0));
    let sys = &mut f.systems[0];
    let level1: Vec<usize> = sys.cubes_at(1).to_vec();
    let (a, b) = (level1[0], level1[1]);
    let p = sys.cube(a).members[0];
    let cubes = sys.cubes_mut();
    cubes[a].members.retain(|&x| x != p);
    cubes[b].members.push(p);
    cubes[b].members.sort_unstable();
    let report = validate_family(&f, &s, profile.doubling());
    assert!(!report.passed());
    assert!(report.violations.iter().any(
        |v| matches!(v, Violation::NotNested { others, .. } if *others == (a.min(b), a.max(b)))
    ));
}

#[test]
fn whole_space_ball_maps_to_whole_space() {
    let s = Space::<f64>::uniform_cells(32).unwrap();
    let (f, _) = family(&s, &BuildOptions::euclidean(3, 0));
    let cover = ball_to_cube(&f, &s, 5, 10.0).unwrap();
    assert_eq!(
        f.system(cover.system).cube(cover.cube).members,
        (0..32).collect::<Vec<_>>()
    );
    assert!(cover.mandated_level < f.k_min);
}

#[test]
fn ball_lookup_matches_exhaustive_search() {
    let s = Space::<f64>::uniform_cells(16).unwrap();
    let (f, _) = family(&s, &BuildOptions::euclidean(3, 0));
    let center = (0..16)
        .min_by(|&a, &b| {
            (s.coords(a)[0] - 0.26)
                .abs()
                .total_cmp(&(s.coords(b)[0] - 0.26).abs())
        })
        .unwrap();
    let r = 0.13;
    let ball = s.ball(center, r).unwrap();
    let cover = ball_to_cube(&f, &s, center, r).unwrap();
    // exhaustive: all cubes at the level in all systems that contain the ball
    let mut candidates = Vec::new();
    for sys in &f.systems {
        for &c in sys.cubes_at(cover.level) {
            if ball.iter().all(|p| sys.cube(c).contains(*p)) {
                candidates.push((sys.index, c));
            }
        }
    }
    assert_eq!(candidates.first(), Some(&(cover.system, cover.cube)));
    let q = f.system(cover.system).cube(cover.cube);
    // 1/8 < r <= 1/4 gives k = 2, looked up three levels up at k = -1
    assert_eq!(cover.mandated_level, -1);
    assert_eq!(cover.level, (-1).clamp(f.k_min, f.k_max));
    assert_eq!(cover.mass_ratio, q.mass / (ball.len() as f64 / 16.0));
}

#[test]
fn singleton_ball_maps_to_finest_cube() {
    let s = Space::<f64>::uniform_cells(16).unwrap();
    let (f, _) = family(&s, &BuildOptions::euclidean(2, 0));
    let r = s.min_positive_distance() * 1e-6;
    let cover = ball_to_cube(&f, &s, 9, r).unwrap();
    assert_eq!(cover.level, f.k_max);
    assert_eq!(f.system(cover.system).cube(cover.cube).members, vec![9]);
}

#[test]
fn every_critical_ball_has_a_cube() {
    for s in [
        Space::<f64>::uniform_cells(128).unwrap(),
        Space::<f64>::uniform_circle(96).unwrap(),
    ] {
        let (f, profile) = family(&s, &BuildOptions::euclidean(3, 0));
        assert!(validate_family(&f, &s, profile.doubling()).passed());
        let bound = f.ball_comparability_bound(profile.doubling());
        for b in s.all_balls() {
            let cover = ball_to_cube(&f, &s, b.center, b.radius).unwrap();
            assert!(cover.mass_ratio <= bound);
        }
    }
}

#[test]
fn construction_is_deterministic_and_round_trips() {
    let s = Space::<f64>::random_cloud(40, 8, Metric::Euclidean).unwrap();
    let (a, _) = family(&s, &BuildOptions::new(1.0 / 96.0, 2, 42));
    let (b, _) = family(&s, &BuildOptions::new(1.0 / 96.0, 2, 42));
    let ta = serde_json::to_string(&a).unwrap();
    assert_eq!(ta, serde_json::to_string(&b).unwrap());
    let back: DyadicFamily<f64> = serde_json::from_str(&ta).unwrap();
    assert_eq!(back, a);
}

#[test]
fn single_precision_family_validates() {
    let s = Space::<f32>::uniform_cells(32).unwrap();
    let profile = SpaceProfile::measure(&s).unwrap();
    let f = build_family(&s, &profile, &BuildOptions::euclidean(3, 0)).unwrap();
    assert!(validate_family(&f, &s, profile.doubling()).passed());
}
