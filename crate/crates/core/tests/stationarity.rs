//! Frozen-weight MH on a one-dimensional Gaussian split into two energy
//! regions: the region occupation must match the tilted masses.

use popsamc_core::meanfield::{mean_field, occupation, MassSource, MassVector};
use popsamc_core::rng::chain_rng;
use popsamc_core::stats::batch_means_std_err;
use popsamc_core::{
    ChainState, DesiredDist, EnergyPartition, MhKernel, MixtureDensity, RwProposal,
};

/// P(|Z| <= 1) for a standard normal.
const INNER_MASS: f64 = 0.682_689_492_137_085_9;

fn setup() -> (MixtureDensity, EnergyPartition, MassVector) {
    let target = MixtureDensity::equal_weights(&[vec![0.0]], 1.0).unwrap();
    // U(x) = log(2 pi) / 2 + x^2 / 2, so the cut is at |x| = 1.
    let cut = 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5;
    let partition = EnergyPartition::new(vec![cut]).unwrap();
    let w = MassVector::new(vec![INNER_MASS, 1.0 - INNER_MASS], MassSource::Analytic).unwrap();
    (target, partition, w)
}

fn occupation_series(theta: &[f64], steps: usize, seed: u64) -> Vec<f64> {
    let (target, partition, _) = setup();
    let kernel = MhKernel::new(&target, &partition, RwProposal::new(4.0).unwrap());
    let mut rng = chain_rng(seed, 0);
    let mut chain = ChainState::new(&target, &partition, vec![0.3]).unwrap();
    let mut scratch = Vec::new();
    (0..steps)
        .map(|_| {
            kernel.step(&mut chain, theta, &mut rng, &mut scratch);
            (chain.region == 0) as u8 as f64
        })
        .collect()
}

#[test]
fn frozen_weights_give_tilted_masses() {
    let (_, _, w) = setup();
    for (k, theta) in [[0.0, 0.0], [0.7, -0.4], [-1.2, 0.9]].iter().enumerate() {
        let xs = occupation_series(theta, 1_000_000, 11 + k as u64);
        let freq = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = batch_means_std_err(&xs, 100);
        let expected = occupation(theta, &w)[0];
        assert!(
            (freq - expected).abs() < 3.0 * se,
            "theta {theta:?}: {freq} vs {expected} (se {se})"
        );
    }
}

#[test]
fn mean_field_matches_simulated_update_direction() {
    let (_, _, w) = setup();
    let pi = DesiredDist::new(vec![0.3, 0.7]).unwrap();
    let theta = [0.5, -0.5];
    let xs = occupation_series(&theta, 400_000, 99);
    let freq = xs.iter().sum::<f64>() / xs.len() as f64;
    let se = batch_means_std_err(&xs, 100);
    let h = mean_field(&theta, &w, &pi).unwrap();
    // Average of H(theta, x) = 1{J(x) = 1} - pi_1 along the chain.
    assert!((freq - 0.3 - h[0]).abs() < 4.0 * se);
}
