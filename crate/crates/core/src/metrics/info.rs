//! Plug-in entropy, mutual information and context independence, all in
//! bits with 0·log 0 = 0.

/// Shannon entropy of a count vector.
pub fn entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Joint counts over a `rows × cols` grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointCounts {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
}

impl JointCounts {
    pub fn new(rows: usize, cols: usize) -> JointCounts {
        JointCounts { rows, cols, counts: vec![0; rows * cols] }
    }

    pub fn add(&mut self, a: usize, b: usize) {
        self.counts[a * self.cols + b] += 1;
    }

    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.cols + b]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_marginal(&self) -> Vec<u64> {
        (0..self.rows).map(|a| (0..self.cols).map(|b| self.get(a, b)).sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<u64> {
        (0..self.cols).map(|b| (0..self.rows).map(|a| self.get(a, b)).sum()).collect()
    }

    /// Entropy of the joint distribution over all cells.
    pub fn joint_entropy(&self) -> f64 {
        entropy(&self.counts)
    }

    /// Plug-in mutual information between row and column variables.
    pub fn mutual_information(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let n = total as f64;
        let pa = self.row_marginal();
        let pb = self.col_marginal();
        let mut mi = 0.0;
        for a in 0..self.rows {
            for b in 0..self.cols {
                let c = self.get(a, b);
                if c == 0 {
                    continue;
                }
                // p(a,b) / (p(a) p(b)) = c·n / (n_a·n_b)
                mi += c as f64 / n * ((c as f64 * n) / (pa[a] as f64 * pb[b] as f64)).log2();
            }
        }
        mi.max(0.0)
    }

    pub fn distinct_rows(&self) -> usize {
        self.row_marginal().iter().filter(|&&c| c > 0).count()
    }
}

/// Context independence from per-concept message counts.
///
/// `concept_counts[c][m]` is the number of decision points where concept `c`
/// held and message `m` was sent; `message_totals[m]` counts all decision
/// points with message `m`. For each concept the most likely message is
/// m^c = argmax_m n(c, m) (lowest id on ties), and the concept scores
/// p(m^c | c) · p(c | m^c) = n(c,m^c)/n(c) · n(c,m^c)/n(m^c). Concepts that
/// never hold are dropped. Returns the mean score and how many concepts
/// were dropped; `None` when every concept was dropped.
pub fn context_independence(concept_counts: &[Vec<u64>], message_totals: &[u64]) -> Option<(f64, usize)> {
    let mut sum = 0.0;
    let mut used = 0usize;
    for row in concept_counts {
        let n_c: u64 = row.iter().sum();
        if n_c == 0 {
            continue;
        }
        let (m, &n_cm) = row
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
            .expect("non-empty row");
        sum += (n_cm as f64 / n_c as f64) * (n_cm as f64 / message_totals[m] as f64);
        used += 1;
    }
    (used > 0).then(|| (sum / used as f64, concept_counts.len() - used))
}
