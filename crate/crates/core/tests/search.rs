use densecode::constructions::d_plus_1_state;
use densecode::search::nmax::analytic_lower_bound;
use densecode::search::region::{cell_state, lattice};
use densecode::search::threshold::min_lambda0_search;
use densecode::search::{
    capacity_lower_bound, feasible, min_entropy_for_n, min_lambda0, n_max, region_map, FeasibilityStatus,
};
use densecode::{entropy, is_orthogonal_set, Error, SchmidtVector, SearchConfig};
use proptest::prelude::*;

fn state(l: &[f64]) -> SchmidtVector {
    SchmidtVector::new(l, l.len()).unwrap()
}

fn config() -> SearchConfig {
    SearchConfig { restarts: 16, ..SearchConfig::with_seed(7) }
}

#[test]
fn feasible_examples() {
    let uniform = SchmidtVector::uniform(3).unwrap();
    let r = feasible(&uniform, 9, &config()).unwrap();
    assert_eq!(r.status, FeasibilityStatus::Feasible);
    assert!(r.analytic);
    assert_eq!(r.restarts_used, 0);

    let qubit = state(&[0.7, 0.3]);
    for restarts in [1, 16, 64] {
        let r = feasible(&qubit, 3, &SearchConfig { restarts, ..config() }).unwrap();
        assert_eq!(r.status, FeasibilityStatus::NotFound);
        assert!(r.best_residual > 0.1, "{}", r.best_residual);
        assert!(r.set.is_none());
    }

    let psi3 = d_plus_1_state(3).unwrap();
    let r = feasible(&psi3, 4, &config()).unwrap();
    assert!(r.is_feasible());
    assert_eq!(r.set.unwrap().len(), 4);
    let r = feasible(&psi3, 5, &config()).unwrap();
    assert_eq!(r.status, FeasibilityStatus::NotFound);
}

#[test]
fn feasible_rejects_sizes_outside_d_to_d_squared() {
    let s = SchmidtVector::uniform(3).unwrap();
    for n in [0, 2, 10] {
        assert!(matches!(feasible(&s, n, &config()), Err(Error::BadArguments(_))));
    }
    let bad = SearchConfig { restarts: 0, ..config() };
    assert!(matches!(feasible(&s, 4, &bad), Err(Error::BadArguments(_))));
}

#[test]
fn numerical_search_finds_sets_without_analytic_seed() {
    // no analytic construction reaches 7 here; the analytic bound is 6
    let s = state(&[0.36, 0.34, 0.3]);
    let r = feasible(&s, 7, &config()).unwrap();
    assert!(r.is_feasible());
    assert!(!r.analytic);
    let set = r.set.unwrap();
    assert_eq!(set.len(), 7);
    assert!(is_orthogonal_set(&s, set.unitaries(), 1e-9).unwrap());
}

#[test]
fn n_max_examples() {
    let r = n_max(&SchmidtVector::uniform(3).unwrap(), &config()).unwrap();
    assert_eq!(r.n_max, 9);
    assert_eq!(r.evidence.failed_n, None);

    for l0 in [0.55, 0.7, 0.9] {
        let r = n_max(&state(&[l0, 1.0 - l0]), &config()).unwrap();
        assert_eq!(r.n_max, 2);
        assert_eq!(r.evidence.failed_n, Some(3));
        assert_eq!(r.evidence.failed_residuals.len(), 2);
    }

    let r = n_max(&state(&[0.6, 0.4, 0.0]), &config()).unwrap();
    assert_eq!(r.n_max, 5);
    assert_eq!(r.evidence.failed_n, Some(6));
    assert!(r.evidence.failed_residuals.iter().all(|&x| x > 1e-6));
}

#[test]
fn analytic_lower_bounds() {
    assert_eq!(analytic_lower_bound(&SchmidtVector::uniform(3).unwrap()), 9);
    assert_eq!(analytic_lower_bound(&state(&[0.5, 0.3, 0.2])), 6);
    assert_eq!(analytic_lower_bound(&d_plus_1_state(3).unwrap()), 4);
    assert_eq!(analytic_lower_bound(&state(&[0.7, 0.2, 0.1])), 3);
    assert_eq!(analytic_lower_bound(&d_plus_1_state(5).unwrap()), 6);
}

#[test]
fn region_map_examples_at_resolution_10() {
    let map = region_map(10, &config()).unwrap();
    assert_eq!(map.cells.len(), 66);
    for c in &map.cells {
        assert!((3..=9).contains(&c.n_max), "{c:?}");
        assert!(c.lambda1 <= c.lambda0 + 1e-12 && c.lambda0 + c.lambda1 <= 1.0 + 1e-12);
        assert!(c.lambda1 >= (1.0 - c.lambda0) / 2.0 - 1e-12);
        assert_eq!(c.witness.len(), c.n_max);
    }
    assert_eq!(map.value_at(0, 0), Some(9));
    assert!(map.cells.iter().filter(|c| (c.i, c.j) != (0, 0)).all(|c| c.n_max < 9));
    assert!(map.cells.iter().all(|c| c.n_max != 8));
    // (0.45, 0.45) lies on the A-B edge at i = 7
    let c = map.cells.iter().find(|c| (c.i, c.j) == (7, 0)).unwrap();
    assert!((c.lambda0 - 0.45).abs() < 1e-12 && (c.lambda1 - 0.45).abs() < 1e-12);
    assert!(c.n_max >= 6);
    // the product state corner only allows the d shifts
    assert_eq!(map.value_at(0, 10), Some(3));
}

#[test]
fn region_map_does_not_depend_on_worker_count() {
    let one = region_map(8, &config()).unwrap();
    let two = region_map(8, &SearchConfig { parallelism: 2, ..config() }).unwrap();
    assert_eq!(one.cells, two.cells);
}

#[test]
fn lattice_cells_are_valid_states() {
    for (_, _, l0, l1) in lattice(24) {
        let s = cell_state(l0, l1).unwrap();
        assert!((s.lambda0() - l0).abs() < 1e-15);
    }
}

#[test]
fn min_lambda0_examples() {
    let c = SearchConfig::with_seed(3);
    for (n, d, expected) in [(4, 3, 2.0 / 3.0), (5, 4, 0.75), (6, 3, 0.5)] {
        let search = min_lambda0_search(n, d, &c).unwrap();
        assert!((search.lambda0 - expected).abs() <= 1e-3, "N={n} d={d}: {}", search.lambda0);
        assert!(search.hi - search.lo <= 1e-3);
        assert_eq!(search.scan.len(), 16);
        assert_eq!(search.witness.len(), n);
        assert_eq!(search.witness.state().lambda0(), search.lo);
    }
    assert!(matches!(min_lambda0(3, 3, &c), Err(Error::BadArguments(_))));
    assert!(matches!(min_lambda0(7, 3, &c), Err(Error::BadArguments(_))));
}

#[test]
fn min_entropy_examples() {
    let c = SearchConfig::with_seed(3);
    let s6 = min_entropy_for_n(6, 3, &c).unwrap();
    assert!((s6 - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
    assert!(s6 >= capacity_lower_bound(6, 3) - 1e-9);
    assert!((min_entropy_for_n(4, 3, &c).unwrap() - 0.5794).abs() < 2e-3);
    assert!((min_entropy_for_n(5, 3, &c).unwrap() - 0.6126).abs() < 2e-3);
}

#[test]
fn search_is_deterministic() {
    let s = state(&[0.36, 0.34, 0.3]);
    let a = feasible(&s, 7, &config()).unwrap();
    assert!(a.is_feasible());
    let b = feasible(&s, 7, &config()).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.best_residual.to_bits(), b.best_residual.to_bits());
    assert_eq!(a.set, b.set);
    let wide = feasible(&s, 7, &SearchConfig { parallelism: 3, ..config() }).unwrap();
    assert_eq!(a.set, wide.set);
    // a NotFound outcome is reproducible too
    let far = state(&[0.45, 0.45, 0.1]);
    let c = SearchConfig { restarts: 4, ..config() };
    let x = feasible(&far, 7, &c).unwrap();
    let y = feasible(&far, 7, &SearchConfig { parallelism: 2, ..c.clone() }).unwrap();
    assert_eq!(x.status, FeasibilityStatus::NotFound);
    assert_eq!(x.best_residual.to_bits(), y.best_residual.to_bits());
}

fn qutrit() -> impl Strategy<Value = SchmidtVector> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c)| {
        let s = a + b + c + 1e-9;
        SchmidtVector::normalized(&[a / s, b / s, c / s], 3).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn found_sets_are_sound_and_respect_the_capacity_bound(s in qutrit(), n in 3usize..=7, seed in 0u64..1000) {
        let cfg = SearchConfig { restarts: 4, ..SearchConfig::with_seed(seed) };
        let r = feasible(&s, n, &cfg).unwrap();
        if let Some(set) = &r.set {
            prop_assert_eq!(r.status, FeasibilityStatus::Feasible);
            prop_assert!(r.best_residual <= cfg.ortho_tol);
            prop_assert!(is_orthogonal_set(&s, set.unitaries(), cfg.ortho_tol).unwrap());
            prop_assert!(entropy(&s, 3.0) >= capacity_lower_bound(n, 3) - 1e-9);
            // subsets of orthogonal sets are orthogonal
            if n > 3 {
                let smaller = set.truncated(n - 1).unwrap();
                prop_assert!(is_orthogonal_set(&s, smaller.unitaries(), cfg.ortho_tol).unwrap());
                prop_assert!(feasible(&s, n - 1, &cfg).unwrap().is_feasible());
            }
        } else {
            prop_assert_eq!(r.status, FeasibilityStatus::NotFound);
        }
    }

    #[test]
    fn analytic_seeds_cover_their_preconditions(s in qutrit(), k in 1usize..=3) {
        if s.lambda0() <= 1.0 / k as f64 {
            let r = feasible(&s, 3 * k, &SearchConfig { restarts: 1, ..SearchConfig::default() }).unwrap();
            prop_assert!(r.is_feasible());
            prop_assert!(r.analytic);
        }
    }
}
