use proptest::prelude::*;

use schwarz_ocp::fdm::StencilOperator;
use schwarz_ocp::metrics::{
    check_lemma_inequality, extract_rates, max_norm, merit_vector, state_merit, MeritNorm, Verdict,
};
use schwarz_ocp::model::{
    sample_function, AnalyticTag, Decomposition, Grid, GridFunction, OverlapConvention, ProblemKind, ProblemSpec,
};
use schwarz_ocp::saddle::{solve_elliptic, CoupledFactor};
use schwarz_ocp::schwarz::run;

fn convention() -> impl Strategy<Value = OverlapConvention> {
    prop_oneof![Just(OverlapConvention::ExtendBoth), Just(OverlapConvention::HalfOverlap)]
}

fn alpha() -> impl Strategy<Value = f64> {
    (-6.0f64..1.0).prop_map(|e| 10f64.powf(e))
}

/// Random field with interior values in `[-1, 1)`.
fn signed(grid: Grid, seed: u64) -> GridFunction {
    sample_function(grid, AnalyticTag::Random { seed }).map(|v| 2.0 * v - 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interior_and_boundary_partition_the_grid(dim in 1usize..=2, half in 1usize..20) {
        let n = 2 * half;
        let g = Grid::new(dim, n).unwrap();
        let interior = g.interior_indices().count();
        let boundary = g.boundary_indices().count();
        prop_assert_eq!(interior + boundary, (n + 1).pow(dim as u32));
        if dim == 2 {
            prop_assert_eq!(interior, (n - 1) * (n - 1));
        }
    }

    #[test]
    fn decompositions_cover_and_overlap(dim in 1usize..=2, half in 2usize..20, d in 1usize..20, conv in convention()) {
        let n = 2 * half;
        let g = Grid::new(dim, n).unwrap();
        let delta = 1 + d % (half - 1);
        let dec = Decomposition::new(g, delta, conv).unwrap();
        let (l, r) = (dec.left.region(), dec.right.region());
        for k in 0..g.len() {
            let (i, j) = g.coords(k);
            prop_assert!(l.contains(i, j) || r.contains(i, j));
        }
        prop_assert!(dec.overlap() >= 1);
        prop_assert!(r.x_lo() < l.x_hi());
        for sub in [&dec.left, &dec.right] {
            prop_assert!(!sub.artificial_boundary().is_empty());
            prop_assert!(sub.artificial_boundary().iter().all(|&k| !g.is_boundary(k)));
        }
    }

    #[test]
    fn solve_then_apply_reproduces_rhs(dim in 1usize..=2, half in 2usize..10, seed in 0u64..500, shift in 0.0f64..2000.0) {
        let g = Grid::new(dim, 2 * half).unwrap();
        let op = StencilOperator::new(g, shift).unwrap();
        let rhs = signed(g, seed);
        let boundary = signed(g, seed + 1);
        for region in [g.full_region(), *Decomposition::new(g, 1, OverlapConvention::ExtendBoth).unwrap().right.region()] {
            let w = solve_elliptic(&op, &region, &rhs, &boundary).unwrap();
            let lw = op.apply_on_region(&w, &region).unwrap();
            let scale = op.diagonal() * w.max_abs().max(1.0);
            for (i, j) in region.interior_points() {
                prop_assert!((lw.at(i, j) - rhs.at(i, j)).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn coupled_solves_satisfy_the_lemma(dim in 1usize..=2, half in 2usize..9, seed in 0u64..500, a in alpha(), right in any::<bool>()) {
        let g = Grid::new(dim, 2 * half).unwrap();
        let op = StencilOperator::laplacian(g);
        let dec = Decomposition::new(g, 1, OverlapConvention::ExtendBoth).unwrap();
        let region = if right { *dec.right.region() } else { *dec.left.region() };
        let mut y = signed(g, seed);
        let mut p = signed(g, seed ^ 0xABCD);
        CoupledFactor::new(&op, a, &region).unwrap().solve_into(None, &mut y, &mut p).unwrap();
        let verdict = check_lemma_inequality(&op, &y, &p, 1.0 / a, &region).unwrap();
        prop_assert_eq!(verdict, Verdict::Pass);
    }

    #[test]
    fn merit_vector_is_nonnegative(seed in 0u64..1000, a in alpha()) {
        let g = Grid::new(2, 8).unwrap();
        let (ey, ep) = (signed(g, seed), signed(g, seed + 7));
        let m = merit_vector(&ey, &ep, a).unwrap();
        prop_assert!(m.values().iter().all(|&v| v >= 0.0));
        prop_assert_eq!(max_norm(&m), state_merit(ProblemKind::Ocp, &ey, Some(&ep), a, MeritNorm::Pointwise));
        prop_assert!(max_norm(&m) <= state_merit(ProblemKind::Ocp, &ey, Some(&ep), a, MeritNorm::Split));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn control_rate_below_laplace_rate(half in 4usize..12, d in 1usize..4, a in alpha()) {
        let g = Grid::new(2, 2 * half).unwrap();
        let delta = 1 + d % (half - 2);
        let dec = Decomposition::new(g, delta, OverlapConvention::ExtendBoth).unwrap();
        let rates = |kind| {
            let spec = ProblemSpec::benchmark(kind, a, dec.clone()).unwrap();
            extract_rates(&run(&spec).unwrap(), MeritNorm::Split)
        };
        let (ocp, ell) = (rates(ProblemKind::Ocp), rates(ProblemKind::Elliptic));
        for k in 2..=5 {
            let (c, e) = (ocp.entry(k).unwrap().rate.unwrap(), ell.entry(k).unwrap().rate.unwrap());
            prop_assert!(c <= e + 1e-6, "k={} rho_c={} rho_e={}", k, c, e);
        }
    }
}

#[test]
fn laplace_rates_settle_by_the_last_sweep() {
    let g = Grid::new(2, 64).unwrap();
    for delta in 1..=4 {
        let dec = Decomposition::new(g, delta, OverlapConvention::ExtendBoth).unwrap();
        let spec = ProblemSpec::benchmark(ProblemKind::Elliptic, 1.0, dec).unwrap();
        let rec = extract_rates(&run(&spec).unwrap(), MeritNorm::Split);
        let r: Vec<f64> = (2..=5).map(|k| rec.entry(k).unwrap().rate.unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] <= w[0]), "delta={delta}: {r:?}");
        let drift = (r[2] - r[3]).abs() / r[3];
        assert!(drift <= 0.02, "delta={delta}: last drift {drift}");
    }
}
