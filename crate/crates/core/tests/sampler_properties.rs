use std::collections::HashMap;

use cyclefactor::oracle::enumerate_cycle_factors;
use cyclefactor::sampler::{ExactSampler, NearPerfectChain, Sampler};
use cyclefactor::stats::{chi_square_uniform, mean_var};
use cyclefactor::{
    exact_expected_cycles, gen_random_regular_digraph, Backend, CycleFactor, RegularDigraph,
    SamplerConfig,
};
use num_traits::ToPrimitive;

fn index_of(g: &RegularDigraph) -> HashMap<Vec<usize>, usize> {
    enumerate_cycle_factors(g)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, cf)| (cf.into_sigma(), i))
        .collect()
}

#[test]
fn exact_sampler_chi_square_small_instances() {
    let mut tested = 0;
    for seed in 0..40u64 {
        let n = 4 + seed as usize % 3;
        let g = gen_random_regular_digraph(n, 2 + seed as usize % 2, seed, true).unwrap();
        let idx = index_of(&g);
        if idx.len() > 120 || idx.len() < 2 {
            continue;
        }
        let s = ExactSampler::new(&g).unwrap();
        let mut rng = SamplerConfig::with_seed(seed).rng_for(0);
        let mut counts = vec![0u64; idx.len()];
        for _ in 0..20_000 {
            let sigma = s.sample_sigma(&mut rng);
            counts[idx[&sigma]] += 1;
        }
        assert!(
            chi_square_uniform(&counts).passes(1e-3),
            "seed {seed}: {counts:?}"
        );
        tested += 1;
    }
    assert!(tested >= 10);
}

#[test]
fn mcmc_mean_matches_oracle_on_6_3() {
    let g = gen_random_regular_digraph(6, 3, 2024, true).unwrap();
    let exact = exact_expected_cycles(&g).unwrap().to_f64().unwrap();
    let cfg = SamplerConfig {
        backend: Backend::Mcmc,
        ..SamplerConfig::with_seed(1)
    };
    let sampler = Sampler::new(&g, &cfg).unwrap();
    let draws = 10_000;
    let xs: Vec<f64> = (0..draws)
        .map(|t| sampler.draw(&mut cfg.rng_for(t)).unwrap().cycle_count() as f64)
        .collect();
    let (mean, var) = mean_var(&xs);
    let se = (var / draws as f64).sqrt();
    assert!(
        (mean - exact).abs() <= 3.0 * se,
        "mean {mean} vs {exact} (se {se})"
    );
}

#[test]
fn sampled_factors_are_valid() {
    for seed in 0..30u64 {
        let n = 5 + seed as usize;
        let d = 1 + seed as usize % 5;
        let g = gen_random_regular_digraph(n, d, seed, seed % 2 == 0).unwrap();
        for backend in [Backend::Exact, Backend::Mcmc] {
            if backend == Backend::Exact && n > 20 {
                continue;
            }
            let cfg = SamplerConfig {
                backend,
                mcmc_steps: Some(2_000),
                ..SamplerConfig::with_seed(seed)
            };
            let cf = Sampler::new(&g, &cfg)
                .unwrap()
                .draw(&mut cfg.rng_for(0))
                .unwrap();
            CycleFactor::new(&g, cf.sigma().to_vec()).unwrap();
        }
    }
}

#[test]
fn draws_replay_by_seed_and_index() {
    let g = gen_random_regular_digraph(30, 4, 3, false).unwrap();
    let cfg = SamplerConfig {
        backend: Backend::Mcmc,
        mcmc_steps: Some(5_000),
        ..SamplerConfig::with_seed(42)
    };
    let chain = NearPerfectChain::new(&g).unwrap();
    let a = chain.sample_sigma(5_000, &mut cfg.rng_for(7)).unwrap();
    let b = chain.sample_sigma(5_000, &mut cfg.rng_for(7)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exact_sampler_mean_within_four_sigma() {
    for seed in 0..12u64 {
        let g = gen_random_regular_digraph(7, 2 + seed as usize % 4, seed, true).unwrap();
        let exact = exact_expected_cycles(&g).unwrap().to_f64().unwrap();
        let s = ExactSampler::new(&g).unwrap();
        let mut rng = SamplerConfig::with_seed(seed).rng_for(0);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| s.sample(&mut rng).cycle_count() as f64)
            .collect();
        let (mean, var) = mean_var(&xs);
        let se = (var / xs.len() as f64).sqrt();
        assert!((mean - exact).abs() <= 4.0 * se.max(1e-12), "seed {seed}");
    }
}
