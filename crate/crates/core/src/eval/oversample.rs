use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random duplication of minority rows, drawn with replacement, until every
/// present class matches the largest one. Original rows come first, followed
/// by the duplicates class by class.
pub fn oversample(x: &Array2<f64>, labels: &[usize], n_classes: usize, seed: u64) -> Result<(Array2<f64>, Vec<usize>)> {
    if x.nrows() != labels.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::invalid("label out of range"));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let target = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..labels.len()).collect();
    for members in by_class.iter().filter(|m| !m.is_empty()) {
        for _ in members.len()..target {
            rows.push(members[rng.gen_range(0..members.len())]);
        }
    }
    let y = rows.iter().map(|&i| labels[i]).collect();
    Ok((x.select(Axis(0), &rows), y))
}
