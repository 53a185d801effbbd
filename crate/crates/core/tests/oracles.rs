use afista::oracles::{CountingOracle, FeasibleSet, SparsityValue};
use afista::reference;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn column(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

fn small_vector() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=6).prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n))
}

proptest! {
    #[test]
    fn simplex_projection_matches_enumeration(x in small_vector()) {
        let set = FeasibleSet::<f64>::simplex(x.len()).unwrap();
        let fast = set.exact_project(&column(&x)).unwrap();
        let slow = reference::simplex_projection(&x);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-10, "{fast} vs {slow:?}");
        }
    }

    #[test]
    fn simplex_sparse_projection_matches_brute_force(x in small_vector(), r in 0usize..4) {
        let n = x.len();
        let r = r.min(n - 1);
        let set = FeasibleSet::<f64>::simplex(n).unwrap();
        let fast = set.sparse_project(&column(&x), SparsityValue(r)).unwrap();
        let slow = reference::sparse_simplex_projection(&x, r);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        prop_assert!(set.sp_measure(&fast).unwrap().0 <= r);
    }

    #[test]
    fn l1_projection_is_a_projection(x in small_vector()) {
        let set = FeasibleSet::<f64>::l1_ball(x.len()).unwrap();
        let p = set.exact_project(&column(&x)).unwrap();
        prop_assert!(set.contains(&p, 1e-12));
        prop_assert!(reference::projection_residual(&set, &column(&x), &p) <= 1e-12);
        let again = set.exact_project(&p).unwrap();
        prop_assert!((again - &p).amax() <= 1e-14);
    }

    #[test]
    fn polytope_loo_beats_every_vertex(g in prop::collection::vec(-1.0f64..1.0, 5)) {
        let g = column(&g);
        for set in [FeasibleSet::<f64>::simplex(5).unwrap(), FeasibleSet::l1_ball(5).unwrap()] {
            let v = set.loo(&g).unwrap();
            let id = set.loo_vertex(&g).unwrap();
            prop_assert_eq!(&v, &set.vertex(id));
            for k in 0..set.num_vertices().unwrap() {
                prop_assert!(g.dot(&v) <= g.dot(&set.vertex(k)) + 1e-15);
            }
        }
    }

    #[test]
    fn decomposition_reconstructs_simplex_points(w in prop::collection::vec(0.0f64..1.0, 6)) {
        prop_assume!(w.iter().sum::<f64>() > 1e-3);
        let total: f64 = w.iter().sum();
        let x = column(&w.iter().map(|v| v / total).collect::<Vec<_>>());
        let set = FeasibleSet::<f64>::simplex(6).unwrap();
        let parts = set.decompose(&x).unwrap();
        let mut back = DMatrix::zeros(6, 1);
        for (id, weight) in parts {
            set.add_vertex(id, weight, &mut back);
        }
        prop_assert!((back - x).amax() <= 1e-11);
    }
}

#[test]
fn spectrahedron_projection_matches_dykstra() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let set = FeasibleSet::<f64>::spectrahedron(4).unwrap();
    for _ in 0..50 {
        let x = reference::random_symmetric(4, 2.0, &mut rng);
        let fast = set.exact_project(&x).unwrap();
        let slow = reference::spectrahedron_projection(&x, 1e-15, 1_000_000);
        assert!((&fast - slow).amax() <= 1e-7);
        assert!(set.contains(&fast, 1e-10));
    }
}

#[test]
fn matrix_sparse_projections_respect_rank() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let spectra = FeasibleSet::<f64>::spectrahedron(5).unwrap();
    let nuc = FeasibleSet::<f64>::nuclear_ball(4, 6).unwrap();
    for r in 1..=4 {
        let x = reference::random_symmetric(5, 1.0, &mut rng);
        let p = spectra.sparse_project(&x, SparsityValue(r)).unwrap();
        assert!(spectra.contains(&p, 1e-10));
        assert!(spectra.sp_measure(&p).unwrap().0 <= r);
        let x = reference::random_nuclear_point(4, 6, &mut rng) * 5.0;
        let p = nuc.sparse_project(&x, SparsityValue(r)).unwrap();
        assert!(nuc.contains(&p, 1e-10));
        assert!(nuc.sp_measure(&p).unwrap().0 <= r);
    }
}

#[test]
fn out_of_range_sparsity_is_rejected() {
    let set = FeasibleSet::<f64>::simplex(4).unwrap();
    assert!(set.sparse_project(&column(&[0.1, 0.2, 0.3, 0.4]), SparsityValue(4)).is_err());
    let spectra = FeasibleSet::<f64>::spectrahedron(3).unwrap();
    assert!(spectra.sparse_project(&DMatrix::identity(3, 3), SparsityValue(0)).is_err());
}

#[test]
fn counting_oracle_tallies_each_family() {
    let set = FeasibleSet::<f64>::simplex(3).unwrap();
    let oracle = CountingOracle::new(&set);
    let g = column(&[0.3, -0.1, 0.2]);
    oracle.loo(&g).unwrap();
    oracle.loo_vertex(&g).unwrap();
    oracle.sparse_project(&g, SparsityValue(1)).unwrap();
    oracle.exact_project(&g).unwrap();
    oracle.record_fo();
    let c = oracle.counts();
    assert_eq!((c.fo, c.loo, c.sparse_proj, c.exact_proj), (1, 2, 1, 1));
    assert_eq!(c.loo_equivalents(3), 5);
}

#[test]
fn f32_oracles_agree_with_f64() {
    let x = [0.7, -0.2, 0.4, 0.1];
    let p64 = FeasibleSet::<f64>::simplex(4).unwrap().exact_project(&column(&x)).unwrap();
    let x32 = DMatrix::from_iterator(4, 1, x.iter().map(|&v| v as f32));
    let p32 = FeasibleSet::<f32>::simplex(4).unwrap().exact_project(&x32).unwrap();
    for (a, b) in p64.iter().zip(p32.iter()) {
        assert!((a - *b as f64).abs() < 1e-6);
    }
}
