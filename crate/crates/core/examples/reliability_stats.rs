//! Run-to-run consistency and validity statistics on a small hand-made
//! score matrix: 8 subjects, 3 inference runs, the third run shifted up.

use screeneval::stats::{friedman, icc_3_1, paired_agreement, spearman, wilcoxon_signed_rank};

fn main() {
    let truth = [3.0, 7.0, 12.0, 5.0, 15.0, 9.0, 1.0, 18.0];
    let runs: Vec<Vec<f64>> = truth
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let wobble = if i % 3 == 0 { 1.0 } else { 0.0 };
            vec![t + wobble, *t, t + 2.0]
        })
        .collect();

    let icc = icc_3_1(&runs).expect("icc");
    println!("ICC(3,1) = {:.3} ({:?})", icc.icc, icc.reliability_band);
    let fr = friedman(&runs).expect("friedman");
    println!("Friedman chi2 = {:.2}, p = {:.4} ({:?})", fr.chi2, fr.p_value, fr.method);

    let means: Vec<f64> = runs.iter().map(|r| r.iter().sum::<f64>() / 3.0).collect();
    let rho = spearman(&means, &truth).expect("spearman");
    println!("Spearman rho vs ground truth = {:.3}, p = {:.2e}", rho.rho, rho.p_value);
    let w = wilcoxon_signed_rank(&means, &truth).expect("wilcoxon");
    println!("Wilcoxon W = {}, p = {:.4} ({:?})", w.w_statistic, w.p_value, w.method);

    let run1: Vec<f64> = runs.iter().map(|r| r[0]).collect();
    let run3: Vec<f64> = runs.iter().map(|r| r[2]).collect();
    let agree = paired_agreement(&run1, &run3).expect("agreement");
    println!("run 1 vs run 3: MAE {:.2}, {:.0}% within 1 point", agree.mae, agree.pct_within_1);
}
