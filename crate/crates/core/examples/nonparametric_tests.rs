//! Rank tests on small worked examples.

use fingerlab::stats::{friedman, kruskal_wallis, wilcoxon_rank_sum, wilcoxon_signed_rank, Tail};

fn main() -> fingerlab::Result<()> {
    let sr = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], Tail::Greater)?;
    println!("signed rank W = {}, p = {:.4} (exact: {})", sr.statistic, sr.p_value, sr.exact);

    let rs = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0], Tail::Less)?;
    println!("rank sum p = {:.4}", rs.p_value);

    let kw = kruskal_wallis(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]])?;
    println!("Kruskal-Wallis H = {:.4}, df {:?}, p = {:.4}", kw.statistic, kw.df, kw.p_value);

    let blocks: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64 + 1.0, i as f64 + 2.0]).collect();
    let fr = friedman(&blocks)?;
    println!("Friedman chi2 = {:.2}, p = {:.2e}", fr.statistic, fr.p_value);
    Ok(())
}
