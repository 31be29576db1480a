//! Shipped desk-scale demo worlds and families, plus small generators for
//! randomized suites. The demo configs under `configs/` describe the same
//! objects in JSON.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::finite_info::{Alphabet, Channel, FiniteDistribution, Variable};
use crate::posterior::VariationalFamily;
use crate::world::World;

/// Binary world: phi in {lo, hi} with uniform prior, Bernoulli emissions
/// (0.8, 0.2) and (0.2, 0.8), split M = 2, V = 1, F = 1.
pub fn bernoulli_world() -> World {
    bernoulli_world_with_splits(2, 1, 1)
}

/// The same world with V = 0.
pub fn bernoulli_world_no_validation() -> World {
    bernoulli_world_with_splits(2, 0, 1)
}

pub fn bernoulli_world_with_splits(m: usize, v: usize, f: usize) -> World {
    let phi = Alphabet::new("phi", vec!["lo".into(), "hi".into()]).unwrap();
    let x = Alphabet::new("x", vec!["0".into(), "1".into()]).unwrap();
    let prior = FiniteDistribution::uniform(phi.clone());
    let emission = Channel::new(
        vec![Variable::new("phi", phi)],
        x.clone(),
        vec![
            FiniteDistribution::new(x.clone(), vec![0.8, 0.2]).unwrap(),
            FiniteDistribution::new(x, vec![0.2, 0.8]).unwrap(),
        ],
    )
    .unwrap();
    World::new(prior, emission, m, v, f).unwrap()
}

/// Single-process fair-coin world (M = 1, V = 0, F = 1); its sampled
/// training symbols form the shipped coin-flip corpus.
pub fn coin_world() -> World {
    let phi = Alphabet::new("phi", vec!["fair".into()]).unwrap();
    let x = Alphabet::new("x", vec!["0".into(), "1".into()]).unwrap();
    let prior = FiniteDistribution::point_mass(phi.clone(), 0);
    let emission = Channel::new(
        vec![Variable::new("phi", phi)],
        x.clone(),
        vec![FiniteDistribution::uniform(x)],
    )
    .unwrap();
    World::new(prior, emission, 1, 0, 1).unwrap()
}

/// Two-point family over the demo world: theta in {t03, t07} with uniform
/// q(theta) and Bernoulli likelihoods 0.3 / 0.7; the validation likelihood
/// ignores x_p.
pub fn bernoulli_family(w: &World) -> VariationalFamily {
    let theta = Alphabet::new("theta", vec!["t03".into(), "t07".into()]).unwrap();
    let x = w.x_alphabet().clone();
    let q_theta = FiniteDistribution::uniform(theta.clone());
    let q_lik = Channel::new(
        vec![Variable::new("theta", theta)],
        x.clone(),
        vec![
            FiniteDistribution::new(x.clone(), vec![0.7, 0.3]).unwrap(),
            FiniteDistribution::new(x, vec![0.3, 0.7]).unwrap(),
        ],
    )
    .unwrap();
    VariationalFamily::factorized_for(w, q_theta, q_lik).unwrap()
}

/// Strictly positive random distribution (every entry at least `floor`
/// before normalization).
pub fn random_distribution(
    alphabet: Alphabet,
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> FiniteDistribution {
    let weights: Vec<f64> = (0..alphabet.size())
        .map(|_| rng.random::<f64>() + floor)
        .collect();
    FiniteDistribution::normalized(alphabet, weights).unwrap()
}

/// Strictly positive random family with `theta_size` parameter points,
/// including a validation likelihood that genuinely depends on x_p.
pub fn random_family(w: &World, theta_size: usize, rng: &mut ChaCha8Rng) -> VariationalFamily {
    let theta = Alphabet::indexed("theta", theta_size).unwrap();
    let x = w.x_alphabet().clone();
    let q_theta = random_distribution(theta.clone(), 0.05, rng);
    let lik_rows: Vec<FiniteDistribution> = (0..theta_size)
        .map(|_| random_distribution(x.clone(), 0.05, rng))
        .collect();
    let q_lik = Channel::new(
        vec![Variable::new("theta", theta.clone())],
        x.clone(),
        lik_rows,
    )
    .unwrap();
    let xp_alpha = w.xp_alphabet();
    let mut val_rows = Vec::with_capacity(xp_alpha.size() * theta_size);
    for _a in 0..xp_alpha.size() {
        for _t in 0..theta_size {
            val_rows.push(random_distribution(x.clone(), 0.05, rng));
        }
    }
    let q_val_lik = Channel::new(
        vec![
            Variable::new(crate::world::VAR_XP, xp_alpha),
            Variable::new("theta", theta),
        ],
        x,
        val_rows,
    )
    .unwrap();
    VariationalFamily::new(q_theta, q_lik, q_val_lik).unwrap()
}

/// Strictly positive random channel over the world's data tuples.
pub fn random_channel(w: &World, theta_size: usize, rng: &mut ChaCha8Rng) -> Channel {
    let theta = Alphabet::indexed("theta", theta_size).unwrap();
    let xp_alpha = w.xp_alphabet();
    let xv_alpha = w.xv_alphabet();
    let rows: Vec<FiniteDistribution> = (0..xp_alpha.size() * xv_alpha.size())
        .map(|_| random_distribution(theta.clone(), 0.05, rng))
        .collect();
    Channel::new(
        vec![
            Variable::new(crate::world::VAR_XP, xp_alpha),
            Variable::new(crate::world::VAR_XV, xv_alpha),
        ],
        theta,
        rows,
    )
    .unwrap()
}

/// Mixes every row of `c` with an independent random distribution:
/// `(1 - amount) * row + amount * noise`.
pub fn perturb_channel(c: &Channel, amount: f64, rng: &mut ChaCha8Rng) -> Channel {
    let rows: Vec<FiniteDistribution> = c
        .rows()
        .iter()
        .map(|row| {
            let noise = random_distribution(c.output().clone(), 0.0, rng);
            let probs: Vec<f64> = row
                .probs()
                .iter()
                .zip(noise.probs())
                .map(|(&p, &n)| (1.0 - amount) * p + amount * n)
                .collect();
            FiniteDistribution::normalized(c.output().clone(), probs).unwrap()
        })
        .collect();
    Channel::new(c.inputs().to_vec(), c.output().clone(), rows).unwrap()
}

/// Small random world: alphabet sizes in 2..=3, M in 1..=2, V in 0..=1,
/// F = 1, strictly positive prior and emissions.
pub fn random_world(rng: &mut ChaCha8Rng) -> World {
    let phi_size = 2 + rng.random_range(0..2usize);
    let x_size = 2 + rng.random_range(0..2usize);
    let phi = Alphabet::indexed("phi", phi_size).unwrap();
    let x = Alphabet::indexed("x", x_size).unwrap();
    let prior = random_distribution(phi.clone(), 0.05, rng);
    let rows: Vec<FiniteDistribution> = (0..phi_size)
        .map(|_| random_distribution(x.clone(), 0.05, rng))
        .collect();
    let emission = Channel::new(vec![Variable::new("phi", phi)], x, rows).unwrap();
    let m = 1 + rng.random_range(0..2usize);
    let v = rng.random_range(0..2usize);
    World::new(prior, emission, m, v, 1).unwrap()
}
