use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// LVEDP above this counts as pulmonary congestion, mmHg.
pub const CONGESTION_THRESHOLD: f64 = 15.0;
/// LVEDP below this counts as a suction risk, mmHg.
pub const SUCTION_THRESHOLD: f64 = 3.0;
/// Largest n for which the signed-rank null distribution is enumerated.
pub const EXACT_MAX_N: usize = 12;

/// Sum of absolute tracking error.
pub fn sae(desired: &[f64], measured: &[f64]) -> Result<f64> {
    if desired.len() != measured.len() {
        return Err(Error::LengthMismatch(desired.len(), measured.len()));
    }
    Ok(desired.iter().zip(measured).map(|(d, m)| (d - m).abs()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SafetyFlags {
    pub congestion: bool,
    /// Time spent above the congestion threshold, s.
    pub congestion_duration: f64,
    pub suction: bool,
    pub suction_duration: f64,
}

pub fn safety_flags(lvedp: &[f64], fs: f64) -> Result<SafetyFlags> {
    if lvedp.is_empty() {
        return Err(Error::NotEnoughSamples("safety flags need at least one sample".into()));
    }
    let above = lvedp.iter().filter(|&&v| v > CONGESTION_THRESHOLD).count();
    let below = lvedp.iter().filter(|&&v| v < SUCTION_THRESHOLD).count();
    Ok(SafetyFlags {
        congestion: above > 0,
        congestion_duration: above as f64 / fs,
        suction: below > 0,
        suction_duration: below as f64 / fs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Non-zero differences used.
    pub n: usize,
    /// Rank sum of positive differences `a − b`.
    pub w_plus: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
    /// Every difference was zero.
    pub degenerate: bool,
}

/// Average ranks (1-based) of `|d|`, and the tie-group sizes.
fn signed_ranks(diffs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..diffs.len()).collect();
    idx.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && diffs[idx[j + 1]].abs() == diffs[idx[i]].abs() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Paired two-sided Wilcoxon signed-rank test on `a − b`.
///
/// Zero differences are dropped. Up to [`EXACT_MAX_N`] pairs the p-value comes
/// from enumerating every sign assignment of the (tie-averaged) ranks; beyond
/// that a normal approximation with tie and continuity corrections is used.
pub fn wilcoxon_paired(a: &[f64], b: &[f64]) -> Result<Wilcoxon> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter { name: "wilcoxon input".into(), reason: "non-finite value".into() });
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(Wilcoxon { n: 0, w_plus: 0.0, p_value: 1.0, exact: true, degenerate: true });
    }
    if n < 5 {
        return Err(Error::NotEnoughSamples(format!("{n} non-zero paired differences (need >= 5)")));
    }
    let (ranks, ties) = signed_ranks(&diffs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    if n <= EXACT_MAX_N {
        // Doubled ranks are integers even with ties.
        let r2: Vec<i64> = ranks.iter().map(|r| (2.0 * r).round() as i64).collect();
        let total: i64 = r2.iter().sum();
        let observed = (2 * (2.0 * w_plus).round() as i64 - total).abs();
        let extreme = (0u32..1 << n)
            .filter(|mask| {
                let s: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r2[i]).sum();
                (2 * s - total).abs() >= observed
            })
            .count();
        let p_value = extreme as f64 / (1u64 << n) as f64;
        return Ok(Wilcoxon { n, w_plus, p_value, exact: true, degenerate: false });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    let p_value = (2.0 * normal.sf(z)).min(1.0);
    Ok(Wilcoxon { n, w_plus, p_value, exact: false, degenerate: false })
}

/// Descriptive statistics and Tukey box-plot elements (1.5·IQR fences).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (mean, std) = crate::detector::mean_std(&v);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || v.iter().copied().filter(|x| (lo_fence..=hi_fence).contains(x));
    Some(BoxStats {
        n: v.len(),
        mean,
        std,
        median,
        q1,
        q3,
        whisker_low: inside().fold(f64::INFINITY, f64::min),
        whisker_high: inside().fold(f64::NEG_INFINITY, f64::max),
        outliers: v.iter().copied().filter(|x| !(lo_fence..=hi_fence).contains(x)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sae_examples() {
        assert_eq!(sae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(sae(&[3.0, 1.0], &[1.0, 2.0]).unwrap(), 3.0);
        assert!(matches!(sae(&[1.0], &[]), Err(Error::LengthMismatch(1, 0))));
    }

    #[test]
    fn safety_examples() {
        let f = safety_flags(&[5.0, 14.9], 200.0).unwrap();
        assert!(!f.congestion && !f.suction);
        let f = safety_flags(&[5.0, 16.0, 5.0], 200.0).unwrap();
        assert!(f.congestion);
        assert_eq!(f.congestion_duration, 0.005);
        assert!(safety_flags(&[2.5, 4.0], 200.0).unwrap().suction);
        assert!(safety_flags(&[], 200.0).is_err());
    }

    #[test]
    fn wilcoxon_examples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let w = wilcoxon_paired(&a, &a).unwrap();
        assert!(w.degenerate);
        assert_eq!(w.p_value, 1.0);

        let b: Vec<f64> = a.iter().map(|x| x - 0.5).collect();
        let w = wilcoxon_paired(&a, &b).unwrap();
        assert_eq!(w.p_value, 0.0078125);
        assert!(w.exact);
        assert_eq!(w.w_plus, 36.0);
    }

    #[test]
    fn wilcoxon_needs_five_pairs() {
        assert!(wilcoxon_paired(&[1.0, 2.0, 3.0], &[0.0; 3]).is_err());
        assert!(wilcoxon_paired(&[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn wilcoxon_normal_branch() {
        // 20 positive differences: tiny p, far below the exact range.
        let a: Vec<f64> = (1..=20).map(f64::from).collect();
        let b = vec![0.0; 20];
        let w = wilcoxon_paired(&a, &b).unwrap();
        assert!(!w.exact);
        assert!(w.p_value < 1e-3);
        // Symmetric differences give p = 1.
        let a: Vec<f64> = (1..=20).map(|i| if i % 2 == 0 { i as f64 } else { -(i as f64) }).collect();
        let mut a2 = a.clone();
        a2.iter_mut().for_each(|x| *x = -*x);
        let w1 = wilcoxon_paired(&a, &b).unwrap();
        let w2 = wilcoxon_paired(&a2, &b).unwrap();
        assert!((w1.p_value - w2.p_value).abs() < 1e-15);
    }

    #[test]
    fn box_examples() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 4.0));
        let b = box_stats(&[7.5]).unwrap();
        assert_eq!((b.mean, b.std, b.median), (7.5, 0.0, 7.5));
        assert!(box_stats(&[]).is_none());
    }
}
