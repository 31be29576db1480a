//! Sampled estimates converge to the exact quantities computed by
//! enumeration: the plug-in entropy and the mean train log-likelihood over
//! 100k replicate draws must sit within three standard errors of the exact
//! values entering the train-information lower bound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piblab::bounds::lower_bound_mi_train;
use piblab::demo;
use piblab::finite_info::entropy_of;
use piblab::posterior::posterior_channel;
use piblab::world::{build_joint, encode_tuple, sample_dataset, VAR_XP};

fn draw_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[test]
fn sampled_entropy_and_loglik_match_exact_bound_terms() {
    let w = demo::bernoulli_world();
    let f = demo::bernoulli_family(&w);
    let chan = posterior_channel(&f, &w, 1.0, 1.0).unwrap();
    let fj = build_joint(&w, &chan).unwrap();

    // Exact values entering the train-information lower bound.
    let h_xp_exact = entropy_of(fj.joint(), &[VAR_XP]).unwrap();
    let train = lower_bound_mi_train(&fj, &f).unwrap();
    let e_loglik_exact = train.bound_value - h_xp_exact;
    // The bound itself holds on the exact side.
    assert!(train.exact_value >= train.bound_value - 1e-10);

    // 100k replicates; theta drawn from the channel row per replicate.
    let n = 100_000usize;
    let xs = w.x_alphabet().size();
    let replicates = sample_dataset(&w, 31337, n);
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    let mut tuple_counts = vec![0usize; w.xp_alphabet().size()];
    let mut logliks = Vec::with_capacity(n);
    for r in &replicates {
        let a = encode_tuple(&r.x_p, xs);
        let b = encode_tuple(&r.x_v, xs);
        tuple_counts[a] += 1;
        let theta = draw_index(&mut rng, chan.row_for(&[a, b]).probs());
        let ll: f64 = r
            .x_p
            .iter()
            .map(|&x| f.q_lik().row_for(&[theta]).prob(x).ln())
            .sum();
        logliks.push(ll);
    }

    // Plug-in tuple entropy with a delta-method standard error from the
    // sampled surprisals.
    let nf = n as f64;
    let mut h_hat = 0.0;
    let mut surprisal_sq = 0.0;
    for &count in &tuple_counts {
        if count > 0 {
            let p = count as f64 / nf;
            h_hat -= p * p.ln();
            surprisal_sq += p * p.ln() * p.ln();
        }
    }
    let h_se = ((surprisal_sq - h_hat * h_hat).max(0.0) / nf).sqrt();
    assert!(
        (h_hat - h_xp_exact).abs() <= 3.0 * h_se,
        "entropy: sampled {h_hat}, exact {h_xp_exact}, se {h_se}"
    );

    let l_hat: f64 = logliks.iter().sum::<f64>() / nf;
    let l_var: f64 = logliks
        .iter()
        .map(|&v| (v - l_hat) * (v - l_hat))
        .sum::<f64>()
        / (nf - 1.0);
    let l_se = (l_var / nf).sqrt();
    assert!(
        (l_hat - e_loglik_exact).abs() <= 3.0 * l_se,
        "loglik: sampled {l_hat}, exact {e_loglik_exact}, se {l_se}"
    );
}
