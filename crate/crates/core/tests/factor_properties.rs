use cyclefactor::factor::{
    to_path_factor, to_tour, to_undirected_cycle_factor, verify_path_factor, verify_tour,
};
use cyclefactor::sampler::Sampler;
use cyclefactor::{gen_family, gen_random_regular_graph, Backend, Family, Graph, SamplerConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tour_length_bound(seed in any::<u64>(), n in 4usize..=60, d in 2usize..=6, exact in any::<bool>()) {
        prop_assume!(d < n && (n * d) % 2 == 0);
        let g = gen_random_regular_graph(n, d, seed).unwrap();
        prop_assume!(g.is_connected());
        let backend = if exact && n <= 20 { Backend::Exact } else { Backend::Mcmc };
        let cfg = SamplerConfig { backend, mcmc_steps: Some(20 * (n * n) as u64), ..SamplerConfig::with_seed(seed) };
        let cf = Sampler::new(&g.double(), &cfg).unwrap().draw(&mut cfg.rng_for(0)).unwrap();
        let cycles = to_undirected_cycle_factor(&cf, &g).unwrap();
        let c = cycles.len();

        let pf = to_path_factor(&cycles);
        prop_assert_eq!(pf.len(), c);
        prop_assert!(verify_path_factor(&pf, &g).is_valid());

        let tour = to_tour(&cycles, &g).unwrap();
        prop_assert!(verify_tour(&tour, &g).is_valid());
        prop_assert!(tour.length <= n + 2 * (c - 1));
    }
}

#[test]
fn petersen_tours() {
    let Graph::Undirected(g) = gen_family(Family::Petersen, 10, 3).unwrap() else {
        unreachable!()
    };
    for seed in 0..50 {
        let cfg = SamplerConfig::with_seed(seed);
        let cf = Sampler::new(&g.double(), &cfg)
            .unwrap()
            .draw(&mut cfg.rng_for(0))
            .unwrap();
        let cycles = to_undirected_cycle_factor(&cf, &g).unwrap();
        let t = to_tour(&cycles, &g).unwrap();
        assert!(verify_tour(&t, &g).is_valid());
        assert!(t.length <= 10 + 2 * (cycles.len() - 1));
    }
}

#[test]
fn clique_unions_need_many_paths() {
    for (n, d) in [(8, 3), (12, 2), (15, 4), (20, 4)] {
        let Graph::Undirected(g) = gen_family(Family::CliqueUnion, n, d).unwrap() else {
            unreachable!()
        };
        let cfg = SamplerConfig::with_seed(n as u64);
        let cf = Sampler::new(&g.double(), &cfg)
            .unwrap()
            .draw(&mut cfg.rng_for(0))
            .unwrap();
        let cycles = to_undirected_cycle_factor(&cf, &g).unwrap();
        assert!(to_tour(&cycles, &g).is_err());
        let pf = to_path_factor(&cycles);
        assert!(verify_path_factor(&pf, &g).is_valid());
        assert!(pf.len() * (d + 1) >= n);
    }
}
