//! Holographic Reduced Representation algebra.
//!
//! Real-valued hypervectors with circular-convolution binding, additive
//! bundling, and cosine similarity. Vectors are sampled from a zero-mean
//! Gaussian with variance `1/d`, so a fresh vector has expected unit norm and
//! independently drawn vectors are nearly orthogonal at useful dimensions.

use std::cell::RefCell;
use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors from hypervector algebra.
#[derive(Debug, Error, PartialEq)]
pub enum HdcError {
    #[error("dimension {dim} is invalid, need at least 2")]
    InvalidDimension { dim: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("bundle of zero vectors is undefined")]
    EmptyBundle,
    #[error("bundle weight {weight} is negative")]
    NegativeWeight { weight: f64 },
    #[error("cosine with a zero vector is undefined")]
    ZeroVector,
    #[error("symbol {symbol:?} is not in the codebook")]
    UnknownSymbol { symbol: String },
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
}

/// A fixed-dimension real vector carrying symbolic content.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypervector {
    values: Vec<f64>,
}

impl Hypervector {
    /// Wraps raw values. The caller is responsible for dimension consistency.
    pub fn from_values(values: Vec<f64>) -> Self {
        Hypervector { values }
    }

    /// The binding identity: `(1, 0, ..., 0)`.
    pub fn unit_impulse(dim: usize) -> Self {
        let mut values = vec![0.0; dim];
        values[0] = 1.0;
        Hypervector { values }
    }

    /// All-zero vector (the bundling identity).
    pub fn zeros(dim: usize) -> Self {
        Hypervector { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Hypervector) -> Result<f64, HdcError> {
        check_dims(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Scales every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Hypervector {
        Hypervector {
            values: self.values.iter().map(|x| x * factor).collect(),
        }
    }

    /// Unit-norm copy. Normalization is never applied implicitly by the
    /// algebra; callers invoke it explicitly where they want it.
    pub fn normalized(&self) -> Result<Hypervector, HdcError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(HdcError::ZeroVector);
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

fn check_dims(a: &Hypervector, b: &Hypervector) -> Result<(), HdcError> {
    if a.dim() != b.dim() {
        return Err(HdcError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// Derives a per-symbol RNG seed from the master seed so adding symbols never
/// perturbs existing vectors.
fn stream_seed(seed: u64, symbol: &str, dim: usize) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((symbol.len() as u64).to_le_bytes());
    hasher.update(symbol.as_bytes());
    hasher.update((dim as u64).to_le_bytes());
    hasher.finalize().into()
}

/// Draws the hypervector for `symbol`: i.i.d. Gaussian entries with mean 0 and
/// variance `1/dim`. Deterministic in `(seed, symbol, dim)`.
pub fn random_vector(seed: u64, symbol: &str, dim: usize) -> Result<Hypervector, HdcError> {
    if dim < 2 {
        return Err(HdcError::InvalidDimension { dim });
    }
    let mut rng = ChaCha12Rng::from_seed(stream_seed(seed, symbol, dim));
    let scale = (1.0 / dim as f64).sqrt();
    let values = (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(Hypervector { values })
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Operands with at most this many nonzeros take the exact sparse path.
/// Convolving against the unit impulse must reproduce the other operand
/// bit-for-bit, which an FFT round trip cannot guarantee.
const SPARSE_NNZ_MAX: usize = 4;

fn nonzeros_upto(v: &Hypervector, cap: usize) -> usize {
    let mut n = 0;
    for &x in &v.values {
        if x != 0.0 {
            n += 1;
            if n >= cap {
                break;
            }
        }
    }
    n
}

fn sparse_convolve(sparse: &Hypervector, dense: &Hypervector) -> Hypervector {
    let d = sparse.dim();
    let mut out = vec![0.0; d];
    for (i, &s) in sparse.values.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        for (j, &x) in dense.values.iter().enumerate() {
            let k = i + j;
            let k = if k >= d { k - d } else { k };
            out[k] += s * x;
        }
    }
    Hypervector { values: out }
}

fn fft_convolve(a: &Hypervector, b: &Hypervector) -> Hypervector {
    let d = a.dim();
    let (mut fa, fb) = PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = planner.plan_fft_forward(d);
        let mut fa: Vec<Complex<f64>> =
            a.values.iter().map(|&x| Complex::new(x, 0.0)).collect();
        let mut fb: Vec<Complex<f64>> =
            b.values.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fft.process(&mut fa);
        fft.process(&mut fb);
        (fa, fb)
    });
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    PLANNER.with(|p| {
        let ifft = p.borrow_mut().plan_fft_inverse(d);
        ifft.process(&mut fa);
    });
    let scale = 1.0 / d as f64;
    Hypervector {
        values: fa.iter().map(|c| c.re * scale).collect(),
    }
}

/// Binding: circular convolution `c[k] = sum_j a[j] * b[(k - j) mod d]`.
///
/// Dense operands go through the FFT (`O(d log d)`); an operand with very few
/// nonzeros (notably the unit impulse) is convolved directly, which keeps
/// `bind(a, impulse) == a` exact.
pub fn bind(a: &Hypervector, b: &Hypervector) -> Result<Hypervector, HdcError> {
    check_dims(a, b)?;
    let na = nonzeros_upto(a, SPARSE_NNZ_MAX + 1);
    let nb = nonzeros_upto(b, SPARSE_NNZ_MAX + 1);
    if na.min(nb) <= SPARSE_NNZ_MAX {
        if na <= nb {
            Ok(sparse_convolve(a, b))
        } else {
            Ok(sparse_convolve(b, a))
        }
    } else {
        Ok(fft_convolve(a, b))
    }
}

/// Index-reversed involution used by the approximate inverse: `a*[0] = a[0]`,
/// `a*[i] = a[d - i]`.
pub fn involution(a: &Hypervector) -> Hypervector {
    let d = a.dim();
    let mut out = Vec::with_capacity(d);
    out.push(a.values[0]);
    for i in 1..d {
        out.push(a.values[d - i]);
    }
    Hypervector { values: out }
}

/// Unbinding by circular correlation: `unbind(bind(a, b), a)` approximates `b`.
pub fn unbind(c: &Hypervector, a: &Hypervector) -> Result<Hypervector, HdcError> {
    check_dims(c, a)?;
    bind(c, &involution(a))
}

/// Bundling: element-wise sum, taken in iteration order. Callers wanting
/// order-independent bit-exact results sort their inputs on a stable key
/// before bundling.
pub fn bundle<'a, I>(vectors: I) -> Result<Hypervector, HdcError>
where
    I: IntoIterator<Item = &'a Hypervector>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(HdcError::EmptyBundle)?;
    let mut acc = first.values.clone();
    for v in iter {
        if v.dim() != acc.len() {
            return Err(HdcError::DimensionMismatch {
                left: acc.len(),
                right: v.dim(),
            });
        }
        for (x, y) in acc.iter_mut().zip(&v.values) {
            *x += y;
        }
    }
    Ok(Hypervector { values: acc })
}

/// Weighted bundling: `sum_i w_i * v_i` with nonnegative weights, summed in
/// iteration order (same ordering contract as [`bundle`]).
pub fn weighted_bundle<'a, I>(pairs: I) -> Result<Hypervector, HdcError>
where
    I: IntoIterator<Item = (&'a Hypervector, f64)>,
{
    let mut acc: Option<Vec<f64>> = None;
    for (v, w) in pairs {
        if w < 0.0 {
            return Err(HdcError::NegativeWeight { weight: w });
        }
        match acc.as_mut() {
            None => acc = Some(v.values.iter().map(|x| x * w).collect()),
            Some(sum) => {
                if v.dim() != sum.len() {
                    return Err(HdcError::DimensionMismatch {
                        left: sum.len(),
                        right: v.dim(),
                    });
                }
                for (x, y) in sum.iter_mut().zip(&v.values) {
                    *x += y * w;
                }
            }
        }
    }
    acc.map(|values| Hypervector { values })
        .ok_or(HdcError::EmptyBundle)
}

/// Cosine similarity in `[-1, 1]`. Errors on a zero operand.
pub fn cosine(a: &Hypervector, b: &Hypervector) -> Result<f64, HdcError> {
    check_dims(a, b)?;
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(HdcError::ZeroVector);
    }
    Ok((a.dot(b)? / (na * nb)).clamp(-1.0, 1.0))
}

/// Immutable symbol table. Every entry is re-derivable from `(seed, name,
/// dim)`, so serialization stores names only, never vectors.
#[derive(Debug, Clone)]
pub struct Codebook {
    dim: usize,
    seed: u64,
    entries: BTreeMap<String, Hypervector>,
}

#[derive(Serialize, Deserialize)]
struct CodebookManifest {
    dim: usize,
    seed: u64,
    symbols: Vec<String>,
}

impl Codebook {
    pub fn new<I, S>(seed: u64, dim: usize, symbols: I) -> Result<Self, HdcError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if dim < 2 {
            return Err(HdcError::InvalidDimension { dim });
        }
        let mut entries = BTreeMap::new();
        for s in symbols {
            let name = s.into();
            let v = random_vector(seed, &name, dim)?;
            entries.insert(name, v);
        }
        Ok(Codebook { dim, seed, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, symbol: &str) -> Option<&Hypervector> {
        self.entries.get(symbol)
    }

    pub fn require(&self, symbol: &str) -> Result<&Hypervector, HdcError> {
        self.entries.get(symbol).ok_or_else(|| HdcError::UnknownSymbol {
            symbol: symbol.to_string(),
        })
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.entries.contains_key(symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `{"dim": d, "seed": s, "symbols": [...]}` — vectors are re-derived on
    /// import, never serialized.
    pub fn to_json(&self) -> String {
        let manifest = CodebookManifest {
            dim: self.dim,
            seed: self.seed,
            symbols: self.entries.keys().cloned().collect(),
        };
        serde_json::to_string(&manifest).expect("codebook manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HdcError> {
        let manifest: CodebookManifest = serde_json::from_str(text)
            .map_err(|e| HdcError::InvalidCodebook(e.to_string()))?;
        Codebook::new(manifest.seed, manifest.dim, manifest.symbols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// O(d^2) reference convolution kept as the correctness oracle for the
    /// FFT path.
    fn direct_convolve(a: &Hypervector, b: &Hypervector) -> Hypervector {
        let d = a.dim();
        let mut out = vec![0.0; d];
        for k in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += a.values()[j] * b.values()[(k + d - j) % d];
            }
            out[k] = acc;
        }
        Hypervector::from_values(out)
    }

    fn max_abs_diff(a: &Hypervector, b: &Hypervector) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn random_vector_norm_near_one() {
        let v = random_vector(7, "pedestrian", 2048).unwrap();
        assert!((v.norm() - 1.0).abs() < 0.1, "norm {}", v.norm());
    }

    #[test]
    fn random_vector_deterministic() {
        let a = random_vector(7, "pedestrian", 2048).unwrap();
        let b = random_vector(7, "pedestrian", 2048).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_vector_distinct_symbols_nearly_orthogonal() {
        let a = random_vector(7, "pedestrian", 2048).unwrap();
        let b = random_vector(7, "vehicle", 2048).unwrap();
        assert!(cosine(&a, &b).unwrap().abs() < 0.12);
    }

    #[test]
    fn random_vector_rejects_small_dims() {
        assert_eq!(
            random_vector(1, "x", 1).unwrap_err(),
            HdcError::InvalidDimension { dim: 1 }
        );
    }

    #[test]
    fn bind_impulse_is_identity_bit_exact() {
        let a = random_vector(3, "a", 512).unwrap();
        let imp = Hypervector::unit_impulse(512);
        assert_eq!(bind(&a, &imp).unwrap(), a);
        assert_eq!(bind(&imp, &a).unwrap(), a);
    }

    #[test]
    fn bind_matches_direct_convolution() {
        for &d in &[16usize, 64, 128, 256] {
            let a = random_vector(11, "a", d).unwrap();
            let b = random_vector(11, "b", d).unwrap();
            let fast = bind(&a, &b).unwrap();
            let slow = direct_convolve(&a, &b);
            assert!(max_abs_diff(&fast, &slow) < 1e-9, "d = {d}");
        }
    }

    #[test]
    fn bind_dissimilar_to_operands() {
        let a = random_vector(5, "a", 2048).unwrap();
        let b = random_vector(5, "b", 2048).unwrap();
        let c = bind(&a, &b).unwrap();
        assert!(cosine(&c, &a).unwrap().abs() < 0.12);
        assert!(cosine(&c, &b).unwrap().abs() < 0.12);
    }

    #[test]
    fn bind_dimension_mismatch() {
        let a = random_vector(1, "a", 16).unwrap();
        let b = random_vector(1, "b", 32).unwrap();
        assert!(matches!(
            bind(&a, &b),
            Err(HdcError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unbind_recovers_bound_operand() {
        let a = random_vector(9, "a", 2048).unwrap();
        let b = random_vector(9, "b", 2048).unwrap();
        let c = bind(&a, &b).unwrap();
        let recovered = unbind(&c, &a).unwrap();
        assert!(cosine(&recovered, &b).unwrap() >= 0.5);
    }

    #[test]
    fn unbind_impulse_is_identity() {
        let a = random_vector(2, "a", 256).unwrap();
        let imp = Hypervector::unit_impulse(256);
        assert_eq!(unbind(&a, &imp).unwrap(), a);
    }

    #[test]
    fn unbind_dimension_mismatch() {
        let a = random_vector(2, "a", 16).unwrap();
        let b = random_vector(2, "b", 8).unwrap();
        assert!(unbind(&a, &b).is_err());
    }

    #[test]
    fn bundle_singleton_and_doubling() {
        let v = random_vector(4, "v", 64).unwrap();
        assert_eq!(bundle([&v]).unwrap(), v);
        assert_eq!(bundle([&v, &v]).unwrap(), v.scaled(2.0));
    }

    #[test]
    fn bundle_rejects_empty() {
        assert_eq!(bundle([]).unwrap_err(), HdcError::EmptyBundle);
    }

    #[test]
    fn bundle_member_recovery() {
        // 10 members out of a 100-symbol codebook; every member must rank
        // above every non-member by cosine to the bundle.
        let names: Vec<String> = (0..100).map(|i| format!("sym{i:03}")).collect();
        let cb = Codebook::new(21, 2048, names.iter().cloned()).unwrap();
        let members: Vec<&Hypervector> =
            names[..10].iter().map(|n| cb.get(n).unwrap()).collect();
        let b = bundle(members.iter().copied()).unwrap();
        let min_member = names[..10]
            .iter()
            .map(|n| cosine(&b, cb.get(n).unwrap()).unwrap())
            .fold(f64::INFINITY, f64::min);
        let max_other = names[10..]
            .iter()
            .map(|n| cosine(&b, cb.get(n).unwrap()).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_member > max_other, "{min_member} vs {max_other}");
    }

    #[test]
    fn weighted_bundle_examples() {
        let v = random_vector(6, "v", 128).unwrap();
        let w = random_vector(6, "w", 128).unwrap();
        assert_eq!(weighted_bundle([(&v, 2.0)]).unwrap(), v.scaled(2.0));
        assert_eq!(weighted_bundle([(&v, 1.0), (&w, 0.0)]).unwrap(), v);
        assert!(matches!(
            weighted_bundle([(&v, -0.1)]),
            Err(HdcError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn weighted_bundle_grid_occupancy_ordering() {
        // Mirrors the 0.96-covered-cell weighting: the heavier constituent
        // stays closer to the bundle.
        let g1 = random_vector(8, "grid_9_8", 2048).unwrap();
        let g2 = random_vector(8, "grid_9_9", 2048).unwrap();
        let s = weighted_bundle([(&g1, 0.96), (&g2, 0.2)]).unwrap();
        assert!(cosine(&s, &g1).unwrap() > cosine(&s, &g2).unwrap());
    }

    #[test]
    fn cosine_identities() {
        let a = random_vector(10, "a", 256).unwrap();
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&a, &a.scaled(-1.0)).unwrap() + 1.0).abs() < 1e-12);
        let z = Hypervector::zeros(256);
        assert_eq!(cosine(&a, &z).unwrap_err(), HdcError::ZeroVector);
    }

    #[test]
    fn random_pair_cosine_statistics() {
        let mut max_abs: f64 = 0.0;
        let mut sum_abs = 0.0;
        for i in 0..1000 {
            let a = random_vector(100, &format!("left{i}"), 2048).unwrap();
            let b = random_vector(100, &format!("right{i}"), 2048).unwrap();
            let c = cosine(&a, &b).unwrap().abs();
            max_abs = max_abs.max(c);
            sum_abs += c;
        }
        assert!(sum_abs / 1000.0 < 0.05);
        assert!(max_abs < 0.12);
    }

    #[test]
    fn codebook_json_round_trip_rederives_vectors() {
        let cb = Codebook::new(42, 64, ["pedestrian", "vehicle"]).unwrap();
        let restored = Codebook::from_json(&cb.to_json()).unwrap();
        assert_eq!(restored.dim(), 64);
        assert_eq!(
            restored.get("pedestrian").unwrap(),
            cb.get("pedestrian").unwrap()
        );
        assert!(restored.get("truck").is_none());
    }

    #[test]
    fn codebook_missing_symbol_errors() {
        let cb = Codebook::new(1, 32, ["a"]).unwrap();
        assert_eq!(
            cb.require("b").unwrap_err(),
            HdcError::UnknownSymbol { symbol: "b".into() }
        );
    }

    proptest! {
        #[test]
        fn bind_commutes(seed in 0u64..500) {
            let a = random_vector(seed, "pa", 128).unwrap();
            let b = random_vector(seed, "pb", 128).unwrap();
            let ab = bind(&a, &b).unwrap();
            let ba = bind(&b, &a).unwrap();
            prop_assert!(max_abs_diff(&ab, &ba) < 1e-12);
        }

        #[test]
        fn bind_associates_within_tolerance(seed in 0u64..200) {
            let a = random_vector(seed, "qa", 128).unwrap();
            let b = random_vector(seed, "qb", 128).unwrap();
            let c = random_vector(seed, "qc", 128).unwrap();
            let left = bind(&bind(&a, &b).unwrap(), &c).unwrap();
            let right = bind(&a, &bind(&b, &c).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&left, &right) < 1e-9);
        }

        #[test]
        fn bind_distributes_over_bundle(seed in 0u64..200) {
            let a = random_vector(seed, "ra", 128).unwrap();
            let b = random_vector(seed, "rb", 128).unwrap();
            let c = random_vector(seed, "rc", 128).unwrap();
            let left = bind(&a, &bundle([&b, &c]).unwrap()).unwrap();
            let right = bundle([
                &bind(&a, &b).unwrap(),
                &bind(&a, &c).unwrap(),
            ])
            .unwrap();
            prop_assert!(max_abs_diff(&left, &right) < 1e-9);
        }

        #[test]
        fn bundle_is_permutation_invariant_after_sort(perm in proptest::sample::subsequence(vec![0usize, 1, 2, 3, 4], 5)) {
            // Fixing the summation order by a stable key makes the sum
            // bit-exact regardless of arrival order.
            let vs: Vec<(String, Hypervector)> = (0..5)
                .map(|i| (format!("s{i}"), random_vector(13, &format!("s{i}"), 64).unwrap()))
                .collect();
            let mut shuffled: Vec<&(String, Hypervector)> = perm.iter().map(|&i| &vs[i]).collect();
            for item in vs.iter() {
                if !shuffled.iter().any(|x| x.0 == item.0) {
                    shuffled.push(item);
                }
            }
            shuffled.sort_by(|a, b| a.0.cmp(&b.0));
            let sorted_sum = bundle(shuffled.iter().map(|x| &x.1)).unwrap();
            let reference = bundle(vs.iter().map(|x| &x.1)).unwrap();
            prop_assert_eq!(sorted_sum, reference);
        }
    }
}
