//! Shared feature formulas for (gray level × size) count matrices: run
//! lengths, zone sizes and dependence counts.

/// Count matrix with rows indexed by gray level (level `i` at row `i - 1`)
/// and columns by size (size `j` at column `j - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SizeMatrix {
    pub levels: usize,
    pub max_size: usize,
    pub counts: Vec<f64>,
}

impl SizeMatrix {
    pub fn zeros(levels: usize, max_size: usize) -> Self {
        SizeMatrix {
            levels,
            max_size,
            counts: vec![0.0; levels * max_size],
        }
    }

    pub fn add(&mut self, level: u8, size: usize) {
        self.counts[(level as usize - 1) * self.max_size + size - 1] += 1.0;
    }

    pub fn get(&self, level: usize, size: usize) -> f64 {
        self.counts[(level - 1) * self.max_size + size - 1]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Non-zero entries as (level, size, count).
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0.0).map(move |(k, &c)| {
            ((k / self.max_size + 1) as f64, (k % self.max_size + 1) as f64, c)
        })
    }

    fn level_sums(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|i| self.counts[i * self.max_size..(i + 1) * self.max_size].iter().sum())
            .collect()
    }

    fn size_sums(&self) -> Vec<f64> {
        (0..self.max_size)
            .map(|j| (0..self.levels).map(|i| self.counts[i * self.max_size + j]).sum())
            .collect()
    }
}

/// Emphasis and non-uniformity statistics shared by the three families.
pub(crate) struct SizeStats {
    pub small: f64,
    pub large: f64,
    pub gln: f64,
    pub glnn: f64,
    pub sn: f64,
    pub snn: f64,
    pub glv: f64,
    pub sv: f64,
    pub entropy: f64,
    pub low: f64,
    pub high: f64,
    pub small_low: f64,
    pub small_high: f64,
    pub large_low: f64,
    pub large_high: f64,
    pub total: f64,
}

pub(crate) fn size_stats(m: &SizeMatrix) -> SizeStats {
    let n = m.total();
    let mut s = SizeStats {
        small: 0.0,
        large: 0.0,
        gln: 0.0,
        glnn: 0.0,
        sn: 0.0,
        snn: 0.0,
        glv: 0.0,
        sv: 0.0,
        entropy: 0.0,
        low: 0.0,
        high: 0.0,
        small_low: 0.0,
        small_high: 0.0,
        large_low: 0.0,
        large_high: 0.0,
        total: n,
    };
    if n == 0.0 {
        return s;
    }
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for (i, j, c) in m.entries() {
        let p = c / n;
        let (i2, j2) = (i * i, j * j);
        s.small += p / j2;
        s.large += p * j2;
        s.low += p / i2;
        s.high += p * i2;
        s.small_low += p / (i2 * j2);
        s.small_high += p * i2 / j2;
        s.large_low += p * j2 / i2;
        s.large_high += p * i2 * j2;
        s.entropy -= p * p.log2();
        mu_i += p * i;
        mu_j += p * j;
    }
    for (i, j, c) in m.entries() {
        let p = c / n;
        s.glv += p * (i - mu_i).powi(2);
        s.sv += p * (j - mu_j).powi(2);
    }
    let gl: f64 = m.level_sums().iter().map(|v| v * v).sum();
    let sz: f64 = m.size_sums().iter().map(|v| v * v).sum();
    s.gln = gl / n;
    s.glnn = gl / (n * n);
    s.sn = sz / n;
    s.snn = sz / (n * n);
    s
}
