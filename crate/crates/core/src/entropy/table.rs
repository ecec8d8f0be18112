//! Symbol strings, probability tables over them, and sorted orbit-code
//! histograms from which tables and entropies at every length are read off.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{rational_to_real, Rational, Real};

/// Largest string count stored in a table.
pub const MAX_STRINGS: u128 = 1 << 62;

/// A string `i₀ i₁ … i_{n−1}` over the alphabet `{0, …, D−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolString(pub Vec<u8>);

impl SymbolString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    /// Base-`D` code with `i₀` most significant.
    pub fn pack(&self, d: u32) -> u64 {
        self.0.iter().fold(0u64, |acc, &s| acc * d as u64 + s as u64)
    }

    pub fn unpack(mut code: u64, n: u32, d: u32) -> Self {
        let mut out = vec![0u8; n as usize];
        for slot in out.iter_mut().rev() {
            *slot = (code % d as u64) as u8;
            code /= d as u64;
        }
        Self(out)
    }
}

impl std::fmt::Display for SymbolString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

pub(crate) fn checked_strings(d: u32, n: u32) -> Result<u64> {
    let total = (d as u128).checked_pow(n).filter(|&t| t <= MAX_STRINGS);
    total.map(|t| t as u64).ok_or(Error::CapacityExceeded {
        what: "symbol strings",
        requested: (d as f64).powi(n as i32) as u128,
        limit: MAX_STRINGS,
    })
}

/// Probabilities of length-`n` strings; absent strings have probability 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable<P> {
    n: u32,
    d: u32,
    entries: BTreeMap<u64, P>,
}

impl<P: Clone> ProbabilityTable<P> {
    pub fn from_entries(n: u32, d: u32, entries: BTreeMap<u64, P>) -> Result<Self> {
        let total = checked_strings(d, n)?;
        if let Some((&last, _)) = entries.iter().next_back() {
            if last >= total {
                return Err(Error::DimensionMismatch(format!("code {last} outside {d}^{n}")));
            }
        }
        Ok(Self { n, d, entries })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Non-zero entries keyed by packed code, in code order.
    pub fn entries(&self) -> &BTreeMap<u64, P> {
        &self.entries
    }

    pub fn get(&self, s: &SymbolString) -> Option<&P> {
        self.entries.get(&s.pack(self.d))
    }

    /// Table of `i ↦ p_î`.
    pub fn reversed(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&c, p)| (SymbolString::unpack(c, self.n, self.d).reversed().pack(self.d), p.clone()))
            .collect();
        Self { n: self.n, d: self.d, entries }
    }

    pub fn map<Q>(&self, f: impl Fn(&P) -> Q) -> ProbabilityTable<Q> {
        ProbabilityTable { n: self.n, d: self.d, entries: self.entries.iter().map(|(&c, p)| (c, f(p))).collect() }
    }

    /// Rows `string,probability`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()>
    where
        P: std::fmt::Display,
    {
        writeln!(w, "string,probability")?;
        for (&c, p) in &self.entries {
            writeln!(w, "{},{}", SymbolString::unpack(c, self.n, self.d), p)?;
        }
        Ok(())
    }
}

impl ProbabilityTable<Rational> {
    pub fn sum(&self) -> Rational {
        self.entries.values().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.sum().is_one()
    }

    pub fn to_real<R: Real>(&self) -> ProbabilityTable<R> {
        self.map(rational_to_real)
    }

    /// `−Σ p log p`, taking logs of numerator and denominator separately.
    pub fn entropy<R: Real>(&self) -> R {
        let mut acc = R::zero();
        for p in self.entries.values() {
            if p.is_zero() {
                continue;
            }
            let num = R::from_i128(*p.numer()).expect("fits");
            let den = R::from_i128(*p.denom()).expect("fits");
            acc = acc - rational_to_real::<R>(p) * (num.ln() - den.ln());
        }
        acc
    }
}

impl<R: Real> ProbabilityTable<R> {
    pub fn sum(&self) -> R {
        self.entries.values().copied().fold(R::zero(), |a, b| a + b)
    }

    pub fn is_normalized(&self, tol: R) -> bool {
        (self.sum() - R::one()).abs() <= tol
    }

    /// `Σ_i |p_i − q_i|` over the union of supports.
    pub fn l1_distance(&self, other: &Self) -> Result<R> {
        same_shape(self, other)?;
        Ok(merge_abs_diff(self.entries.iter().map(|(&c, &p)| (c, p)), other.entries.iter().map(|(&c, &p)| (c, p))).0)
    }

    /// `max_i |p_i − q_i|`.
    pub fn max_distance(&self, other: &Self) -> Result<R> {
        same_shape(self, other)?;
        Ok(merge_abs_diff(self.entries.iter().map(|(&c, &p)| (c, p)), other.entries.iter().map(|(&c, &p)| (c, p))).1)
    }
}

fn same_shape<P: Clone, Q: Clone>(a: &ProbabilityTable<P>, b: &ProbabilityTable<Q>) -> Result<()> {
    if a.n != b.n || a.d != b.d {
        return Err(Error::DimensionMismatch(format!(
            "tables over {}^{} and {}^{} strings",
            a.d, a.n, b.d, b.n
        )));
    }
    Ok(())
}

/// `(Σ |p − q|, max |p − q|)` of two code-sorted sparse sequences.
pub(crate) fn merge_abs_diff<R: Real>(
    a: impl IntoIterator<Item = (u64, R)>,
    b: impl IntoIterator<Item = (u64, R)>,
) -> (R, R) {
    let mut a = a.into_iter().peekable();
    let mut b = b.into_iter().peekable();
    let (mut sum, mut max) = (R::zero(), R::zero());
    loop {
        let d = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(&(_, p)), None) => {
                a.next();
                p
            }
            (None, Some(&(_, q))) => {
                b.next();
                q
            }
            (Some(&(ca, p)), Some(&(cb, q))) => match ca.cmp(&cb) {
                std::cmp::Ordering::Less => {
                    a.next();
                    p
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                    q
                }
                std::cmp::Ordering::Equal => {
                    a.next();
                    b.next();
                    (p - q).abs()
                }
            },
        };
        sum = sum + d;
        max = max.max(d);
    }
    (sum, max)
}

/// `−Σ p log p` with `0 log 0 = 0`.
pub fn shannon_entropy<R: Real>(tbl: &ProbabilityTable<R>) -> R {
    tbl.entries
        .values()
        .filter(|p| **p > R::zero())
        .fold(R::zero(), |acc, &p| acc - p * p.ln())
}

/// Sorted base-`D` codes of sampled orbits of length `n_max`, first symbol
/// most significant. Prefix codes of every shorter length stay sorted, so
/// the histogram of any `n ≤ n_max` is one linear pass.
#[derive(Debug, Clone)]
pub struct OrbitCodes {
    d: u32,
    n_max: u32,
    codes: Vec<u64>,
}

impl OrbitCodes {
    pub fn new(d: u32, n_max: u32, mut codes: Vec<u64>) -> Result<Self> {
        checked_strings(d, n_max)?;
        codes.sort_unstable();
        Ok(Self { d, n_max, codes })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn samples(&self) -> usize {
        self.codes.len()
    }

    /// `(prefix code, count)` pairs for strings of length `n`, in code order.
    pub fn counts(&self, n: u32) -> Vec<(u64, u64)> {
        assert!(n >= 1 && n <= self.n_max, "length {n} outside 1..={}", self.n_max);
        let shift = (self.d as u64).pow(self.n_max - n);
        let mut out: Vec<(u64, u64)> = Vec::new();
        for &c in &self.codes {
            let prefix = c / shift;
            match out.last_mut() {
                Some((p, k)) if *p == prefix => *k += 1,
                _ => out.push((prefix, 1)),
            }
        }
        out
    }

    /// Plug-in entropy of the length-`n` histogram.
    pub fn entropy<R: Real>(&self, n: u32) -> R {
        let total = R::count(self.codes.len());
        let ln_total = total.ln();
        // −Σ (k/M) log(k/M) = log M − (1/M) Σ k log k
        let s = self
            .counts(n)
            .into_iter()
            .fold(R::zero(), |acc, (_, k)| {
                let k = R::from_u64(k).expect("fits");
                acc + k * k.ln()
            });
        ln_total - s / total
    }

    pub fn table<R: Real>(&self, n: u32) -> ProbabilityTable<R> {
        let total = R::count(self.codes.len());
        let entries = self.counts(n).into_iter().map(|(c, k)| (c, R::from_u64(k).expect("fits") / total)).collect();
        ProbabilityTable { n, d: self.d, entries }
    }

    pub fn exact_table(&self, n: u32) -> ProbabilityTable<Rational> {
        let total = self.codes.len() as i128;
        let entries = self.counts(n).into_iter().map(|(c, k)| (c, Rational::new(k as i128, total))).collect();
        ProbabilityTable { n, d: self.d, entries }
    }
}
