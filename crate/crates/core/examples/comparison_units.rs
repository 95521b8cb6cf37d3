//! DRn / DRp comparison units and the RBP3 output mixture, computed by hand.
//!
//! cargo run --example comparison_units

use rbp::rbp::{
    drn_layer, drp_aggregate, drp_out_targets, drp_tokens, rbp1_augment_input, rbp3_mix, rbp3_offsets, DrConfig,
    EarlyFusion,
};

fn one_hot(t: usize, k: usize) -> Vec<f64> {
    (0..k).map(|i| if i == t { 1.0 } else { 0.0 }).collect()
}

fn main() -> rbp::Result<()> {
    let k = 4;
    let cfg = DrConfig::new(k, 3)?;
    println!("vocabulary {k}, context 3: pairs {:?}", cfg.pairs());
    println!("{} DRn units, {} DRp units", cfg.drn_units(), cfg.drp_units());

    let tokens = [2, 0, 2];
    let hots: Vec<Vec<f64>> = tokens.iter().map(|&t| one_hot(t, k)).collect();
    let drn = drn_layer(&hots, k)?;
    let drp = drp_aggregate(&drn, k)?;
    println!("tokens {tokens:?}");
    println!("  DRn {drn:?}");
    println!("  DRp {drp:?} (same as {:?})", drp_tokens(&tokens));

    let base: Vec<f64> = hots.concat();
    let input = rbp1_augment_input(&base, &tokens, k, EarlyFusion::P)?;
    println!("  RBP1p input width {} = {} + {}", input.len(), base.len(), drp.len());

    // next token repeats the first context token
    let context = [1, 3];
    let truth = drp_out_targets(&context, Some(1))?;
    let offsets = rbp3_offsets(&truth, &context, k)?;
    let p = vec![0.4, 0.2, 0.2, 0.2];
    let mixed = rbp3_mix(&p, &offsets, 0.5, 0.5)?;
    println!("context {context:?}, next 1: DRp out {truth:?}");
    println!("  offsets {offsets:?}");
    println!("  base {p:?} -> mixed {:?}", mixed.probs);
    Ok(())
}
