use dufs_core::data::preprocess;
use dufs_core::dufs::{train, TrainConfig};
use dufs_core::synth::{gen_two_moons, TwoMoonsConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let d_nuisance: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(8);
    let epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(5000);
    let seeds: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(3);

    for seed in 0..seeds {
        let ds = gen_two_moons(&TwoMoonsConfig {
            n: 100,
            d_nuisance,
            seed,
            ..TwoMoonsConfig::default()
        })
        .unwrap();
        let x = preprocess(&ds.data).unwrap();
        let cfg = TrainConfig {
            epochs,
            seed: 1000 + seed,
            ..TrainConfig::default()
        };
        let t0 = Instant::now();
        let out = train(&x, &cfg, Some(&ds.informative)).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let last = out.trace.records.last().unwrap();
        let mu = &out.params.mu;
        let p = &out.selection.open_probabilities;
        let max_nuis_mu = (2..mu.len()).map(|i| mu[i]).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "d={} seed={seed}: {:.1}s  loss={:.4}  sum_p={:.3}  prec={:?}  rec={:?}  mu01=({:.3},{:.3})  max_nuis_mu={:.3}  p01=({:.10},{:.10})  rec_exact_1={}",
            d_nuisance + 2,
            dt,
            last.loss,
            last.sum_open_prob,
            last.precision,
            last.recall,
            mu[0],
            mu[1],
            max_nuis_mu,
            p[0],
            p[1],
            last.recall == Some(1.0)
        );
        // trajectory of informative mu
        for &e in &[0usize, 100, 500, 1000, 2000, 3000, 4000, epochs - 1] {
            if e < out.trace.records.len() {
                let r = &out.trace.records[e];
                println!(
                    "   epoch {:5}: loss={:+.5} sum_p={:.3} prec={:.4} rec={:.6}",
                    r.epoch,
                    r.loss,
                    r.sum_open_prob,
                    r.precision.unwrap(),
                    r.recall.unwrap()
                );
            }
        }
    }
}
