//! Normalized mutual information between two partitions.

use crate::error::{Error, Result};
use crate::partition::Partition;

fn entropy(sizes: &[usize], n: f64) -> f64 {
    -sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// `2 I(X, Y) / (H(X) + H(Y))` with natural logarithms and `p(x) = |x| / n`.
///
/// Two single-community partitions are identical, so their NMI is 1.
pub fn nmi(x: &Partition, y: &Partition) -> Result<f64> {
    if x.node_count() != y.node_count() {
        return Err(Error::NodeCountMismatch {
            graph: x.node_count(),
            partition: y.node_count(),
        });
    }
    let n = x.node_count();
    if n == 0 {
        return Err(Error::InvalidPartition("NMI of empty partitions".into()));
    }
    let (kx, ky) = (x.community_count(), y.community_count());
    let mut joint = vec![0usize; kx * ky];
    for (&a, &b) in x.labels().iter().zip(y.labels()) {
        joint[a * ky + b] += 1;
    }
    let (sx, sy) = (x.sizes(), y.sizes());
    let nf = n as f64;
    let hx = entropy(&sx, nf);
    let hy = entropy(&sy, nf);
    if hx + hy == 0.0 {
        return Ok(1.0);
    }
    let mut mutual = 0.0;
    for a in 0..kx {
        for b in 0..ky {
            let c = joint[a * ky + b];
            if c == 0 {
                continue;
            }
            // p(x,y) / (p(x) p(y)) = c n / (|x| |y|)
            let ratio = (c as f64 * nf) / (sx[a] as f64 * sy[b] as f64);
            mutual += c as f64 / nf * ratio.ln();
        }
    }
    Ok((2.0 * mutual / (hx + hy)).clamp(0.0, 1.0))
}

/// Pairs estimated layers with reference layers so that the total NMI is
/// maximal, and returns, for each reference layer, the index of its
/// estimate and their NMI (`None` when there are fewer estimates).
pub fn match_layers(
    estimates: &[Partition],
    references: &[Partition],
) -> Result<Vec<Option<(usize, f64)>>> {
    let mut table = Vec::with_capacity(references.len());
    for r in references {
        let row = estimates
            .iter()
            .map(|e| nmi(e, r))
            .collect::<Result<Vec<_>>>()?;
        table.push(row);
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut chosen = Vec::with_capacity(references.len());
    let mut used = vec![false; estimates.len()];
    assign(&table, 0, &mut used, &mut chosen, 0.0, &mut best);
    Ok(best
        .1
        .into_iter()
        .enumerate()
        .map(|(r, e): (usize, Option<usize>)| e.map(|e| (e, table[r][e])))
        .collect())
}

fn assign(
    table: &[Vec<f64>],
    row: usize,
    used: &mut [bool],
    chosen: &mut Vec<Option<usize>>,
    score: f64,
    best: &mut (f64, Vec<Option<usize>>),
) {
    if row == table.len() {
        if score > best.0 {
            *best = (score, chosen.clone());
        }
        return;
    }
    let free = used.iter().filter(|u| !**u).count();
    let rows_left = table.len() - row;
    for e in 0..used.len() {
        if used[e] {
            continue;
        }
        used[e] = true;
        chosen.push(Some(e));
        assign(table, row + 1, used, chosen, score + table[row][e], best);
        chosen.pop();
        used[e] = false;
    }
    if free < rows_left {
        chosen.push(None);
        assign(table, row + 1, used, chosen, score, best);
        chosen.pop();
    }
}
