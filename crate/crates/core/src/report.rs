//! Deterministic text output: 12-significant-digit numbers, LF line endings.

use serde::{Deserialize, Serialize};

pub const SIG_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

/// Rounds to 12 significant digits so JSON output is stable across
/// platforms' last-bit noise.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Fixed-width histogram of fidelity-like values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bins` equal bins over `[min(values), max(upper, max(values))]`.
    /// Identical values collapse to a single zero-width bin.
    pub fn new(values: &[f64], bins: usize, upper: f64) -> Self {
        if values.is_empty() || bins == 0 {
            return Histogram { lower: vec![], upper: vec![], counts: vec![] };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_obs = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi_obs {
            return Histogram { lower: vec![lo], upper: vec![lo], counts: vec![values.len()] };
        }
        let hi = upper.max(hi_obs);
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram {
            lower: (0..bins).map(|k| lo + k as f64 * width).collect(),
            upper: (0..bins).map(|k| if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width }).collect(),
            counts,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lower,bin_upper,count\n");
        for k in 0..self.counts.len() {
            out.push_str(&format!("{},{},{}\n", fmt_sig(self.lower[k]), fmt_sig(self.upper[k]), self.counts[k]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.99483338024927), "0.994833380249");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(8e9), "8000000000");
        assert_eq!(fmt_sig(1.2345e-7), "1.2345e-7");
        assert_eq!(fmt_sig(3.0e15), "3e15");
        assert_eq!(fmt_sig(0.0), "0");
    }

    #[test]
    fn round_sig_is_idempotent() {
        let x = round_sig(std::f64::consts::PI);
        assert_eq!(round_sig(x), x);
        assert_eq!(fmt_sig(x), "3.14159265359");
    }

    #[test]
    fn histogram_counts_sum() {
        let v: Vec<f64> = (0..1000).map(|k| 0.99 + 0.01 * (k as f64 / 1000.0)).collect();
        let h = Histogram::new(&v, 50, 1.0);
        assert_eq!(h.counts.len(), 50);
        assert_eq!(h.total(), 1000);
        assert_eq!(h.lower[0], 0.99);
        assert_eq!(*h.upper.last().unwrap(), 1.0);
    }

    #[test]
    fn degenerate_histogram_is_one_bin() {
        let h = Histogram::new(&[0.9948; 7], 50, 1.0);
        assert_eq!(h.counts, vec![7]);
        assert!(h.to_csv().ends_with("0.9948,0.9948,7\n"));
    }
}
