//! Cover-free families: the non-adaptive test-design backbone.
//!
//! An (n, a, b) family is a set of n-bit vectors such that for any disjoint
//! index sets S1, S2 with |S1| = a and |S2| = b, some vector is all-zero on
//! S1 and all-one on S2. Families here are built probabilistically: each bit
//! is set independently with probability b/(a+b), and the family size is the
//! union-bound count that makes the property hold with probability at least
//! 1 - delta.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Installation;

/// Cap on family sizes we are willing to materialize.
const MAX_FAMILY_SIZE: usize = 20_000_000;
/// Cap on pairs enumerated by exhaustive verification.
const MAX_VERIFY_PAIRS: f64 = 1e7;

#[derive(Debug, Clone)]
pub struct CoverFreeFamily {
    n: usize,
    a: usize,
    b: usize,
    vectors: Vec<Installation>,
    seed: u64,
    failure_prob: f64,
}

/// Outcome of exhaustive verification. A counterexample names the first
/// uncovered pair in lexicographic order: no vector is zero on every
/// `excluded` index while one on every `included` index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CffCheck {
    Holds,
    Counterexample {
        excluded: Vec<usize>,
        included: Vec<usize>,
    },
}

impl CoverFreeFamily {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn failure_prob(&self) -> f64 {
        self.failure_prob
    }

    pub fn realized_size(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Installation] {
        &self.vectors
    }

    /// Exhaustively checks the cover-free property. Refuses when the pair
    /// count C(n,a) * C(n-a,b) exceeds the enumeration guard.
    pub fn verify(&self) -> Result<CffCheck> {
        verify_family(self.n, self.a, self.b, &self.vectors)
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut acc = 0.0f64;
    for i in 1..=k {
        acc += ((n - k + i) as f64).ln() - (i as f64).ln();
    }
    acc
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    ln_binomial(n, k).exp()
}

fn check_params(n: usize, a: usize, b: usize, delta: f64) -> Result<()> {
    if a + b > n {
        return Err(Error::param(format!(
            "cover-free family needs a + b <= n, got a={a}, b={b}, n={n}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Union-bound family size: the number of random vectors that makes every
/// (S1, S2) pair covered with probability at least 1 - delta. Degenerate
/// parameters (a = 0 or b = 0) need exactly one vector.
pub fn randomized_family_size(n: usize, a: usize, b: usize, delta: f64) -> Result<usize> {
    check_params(n, a, b, delta)?;
    if a == 0 || b == 0 {
        return Ok(1);
    }
    let p = b as f64 / (a + b) as f64;
    let p_cov = p.powi(b as i32) * (1.0 - p).powi(a as i32);
    let ln_pairs = ln_binomial(n, a) + ln_binomial(n - a, b);
    let m = ((ln_pairs - delta.ln()) / p_cov).ceil();
    if !m.is_finite() || m < 0.0 || m > MAX_FAMILY_SIZE as f64 {
        return Err(Error::guard(format!(
            "family size {m} for (n={n}, a={a}, b={b}) exceeds the build cap"
        )));
    }
    Ok((m as usize).max(1))
}

/// Builds a randomized (n, a, b) cover-free family. Each bit of each vector
/// is 1 independently with probability b/(a+b); with a = 0 the single
/// all-ones vector suffices, with b = 0 (including a = b = 0) the single
/// all-zeros vector.
pub fn build_randomized_cff(
    n: usize,
    a: usize,
    b: usize,
    delta: f64,
    seed: u64,
) -> Result<CoverFreeFamily> {
    check_params(n, a, b, delta)?;
    let vectors = if a == 0 && b == 0 {
        vec![Installation::empty(n)]
    } else if a == 0 {
        vec![Installation::full(n)]
    } else if b == 0 {
        vec![Installation::empty(n)]
    } else {
        let size = randomized_family_size(n, a, b, delta)?;
        let p = b as f64 / (a + b) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..size)
            .map(|_| {
                let mut v = Installation::empty(n);
                for i in 0..n {
                    if rng.random_bool(p) {
                        v.insert(i);
                    }
                }
                v
            })
            .collect()
    };
    Ok(CoverFreeFamily {
        n,
        a,
        b,
        vectors,
        seed,
        failure_prob: delta,
    })
}

/// Checks an arbitrary vector set against the (n, a, b) property; used both
/// by [`CoverFreeFamily::verify`] and by files loaded from disk.
pub fn verify_family(n: usize, a: usize, b: usize, vectors: &[Installation]) -> Result<CffCheck> {
    if a + b > n {
        return Err(Error::param(format!(
            "cover-free property needs a + b <= n, got a={a}, b={b}, n={n}"
        )));
    }
    for v in vectors {
        if v.width() != n {
            return Err(Error::WidthMismatch {
                expected: n,
                got: v.width(),
            });
        }
    }
    if a == 0 && b == 0 {
        return Ok(CffCheck::Holds);
    }
    let pairs = binomial_f64(n, a) * binomial_f64(n - a, b);
    if pairs > MAX_VERIFY_PAIRS {
        return Err(Error::guard(format!(
            "verification would enumerate {pairs:.3e} pairs (limit {MAX_VERIFY_PAIRS:.0e})"
        )));
    }

    let universe: Vec<usize> = (0..n).collect();
    let mut found: Option<(Vec<usize>, Vec<usize>)> = None;
    for_each_combination(&universe, a, &mut |s1| {
        if found.is_some() {
            return;
        }
        let complement: Vec<usize> = universe
            .iter()
            .copied()
            .filter(|i| !s1.contains(i))
            .collect();
        for_each_combination(&complement, b, &mut |s2| {
            if found.is_some() {
                return;
            }
            let covered = vectors.iter().any(|v| {
                s1.iter().all(|&i| !v.contains(i)) && s2.iter().all(|&i| v.contains(i))
            });
            if !covered {
                found = Some((s1.to_vec(), s2.to_vec()));
            }
        });
    });

    Ok(match found {
        None => CffCheck::Holds,
        Some((excluded, included)) => CffCheck::Counterexample { excluded, included },
    })
}

/// Visits every k-subset of `items` in lexicographic order.
fn for_each_combination(items: &[usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k > items.len() {
        return;
    }
    let mut picked = vec![0usize; k];
    fn rec(
        items: &[usize],
        k: usize,
        start: usize,
        depth: usize,
        picked: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == k {
            visit(picked);
            return;
        }
        for i in start..=items.len() - (k - depth) {
            picked[depth] = items[i];
            rec(items, k, i + 1, depth + 1, picked, visit);
        }
    }
    if k == 0 {
        visit(&[]);
        return;
    }
    rec(items, k, 0, 0, &mut picked, visit);
}

/// Compares the layered test-design size against the single-family size for
/// full learning with unknown dependencies. Pure arithmetic over the
/// union-bound formula; the layered budget splits delta evenly across the
/// u + 1 layers.
pub fn cff_union_size_estimate(
    n: usize,
    d: usize,
    u: usize,
    c: usize,
    delta: f64,
) -> Result<(usize, usize)> {
    let mut layered_total = 0usize;
    for i in 0..=u {
        let layer = randomized_family_size(n, d + c + (u - i) + 1, i + 2, delta / (u + 1) as f64)?;
        layered_total = layered_total
            .checked_add(layer)
            .ok_or_else(|| Error::guard("layered total overflows".to_string()))?;
    }
    let single_size = randomized_family_size(n, d + c + u + 1, u + 2, delta)?;
    Ok((layered_total, single_size))
}

/// On-disk representation: rows are hex strings, byte j holding packages
/// 8j..8j+7 with package index growing from the least significant bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CffJson {
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub seed: u64,
    pub delta: f64,
    pub vectors: Vec<String>,
}

impl CffJson {
    pub fn from_family(f: &CoverFreeFamily) -> Self {
        CffJson {
            n: f.n,
            a: f.a,
            b: f.b,
            seed: f.seed,
            delta: f.failure_prob,
            vectors: f.vectors.iter().map(encode_hex_row).collect(),
        }
    }

    pub fn into_family(self) -> Result<CoverFreeFamily> {
        let vectors = self
            .vectors
            .iter()
            .map(|row| decode_hex_row(self.n, row))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoverFreeFamily {
            n: self.n,
            a: self.a,
            b: self.b,
            vectors,
            seed: self.seed,
            failure_prob: self.delta,
        })
    }
}

fn encode_hex_row(v: &Installation) -> String {
    let n = v.width();
    let mut bytes = vec![0u8; n.div_ceil(8)];
    for i in v.ones() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    let mut out = String::with_capacity(bytes.len() * 2);
    for byte in bytes {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn decode_hex_row(n: usize, row: &str) -> Result<Installation> {
    let expected_len = n.div_ceil(8) * 2;
    if row.len() != expected_len || !row.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::param(format!(
            "bad hex row {row:?} for width {n} (want {expected_len} hex digits)"
        )));
    }
    let mut inst = Installation::empty(n);
    for (j, chunk) in row.as_bytes().chunks(2).enumerate() {
        let byte = u8::from_str_radix(std::str::from_utf8(chunk).unwrap(), 16).unwrap();
        for bit in 0..8 {
            if byte >> bit & 1 == 1 {
                let idx = j * 8 + bit;
                if idx >= n {
                    return Err(Error::param(format!(
                        "hex row {row:?} sets bit {idx} beyond width {n}"
                    )));
                }
                inst.insert(idx);
            }
        }
    }
    Ok(inst)
}
