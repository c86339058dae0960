//! Predictor subsets as bitmasks and complete p-value tables over the power set.
//!
//! A subset of `m` predictors is stored as a `u32` with bit `i` set when predictor
//! `i` (0-based) belongs to the set. Tables are indexed directly by that mask, so
//! index 0 is the empty set and index `2^m - 1` is the full set. Everything the
//! user sees is 1-based.

use std::fmt;
use std::io::{Read, Write};

use serde_json::{Map, Value};

use crate::error::{IcpError, Result};

/// Largest supported number of predictors.
pub const MAX_PREDICTORS: usize = 30;

const BINARY_MAGIC: &[u8; 8] = b"ICPPTBL1";

pub(crate) fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > MAX_PREDICTORS {
        return Err(IcpError::Config(format!("number of predictors must be in 1..={MAX_PREDICTORS}, got {m}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    bits: u32,
    m: u8,
}

impl SubsetMask {
    pub fn new(bits: u32, m: usize) -> Result<Self> {
        check_m(m)?;
        if (bits as u64) >> m != 0 {
            return Err(IcpError::Config(format!("mask {bits:#b} has bits beyond predictor count {m}")));
        }
        Ok(Self { bits, m: m as u8 })
    }

    pub fn empty(m: usize) -> Result<Self> {
        Self::new(0, m)
    }

    pub fn full(m: usize) -> Result<Self> {
        check_m(m)?;
        Ok(Self { bits: full_bits(m), m: m as u8 })
    }

    /// Builds a mask from 0-based predictor indices. Duplicates are ignored.
    pub fn from_indices(indices: &[usize], m: usize) -> Result<Self> {
        check_m(m)?;
        let mut bits = 0u32;
        for &i in indices {
            if i >= m {
                return Err(IcpError::Config(format!("predictor index {} out of range 1..={m}", i + 1)));
            }
            bits |= 1 << i;
        }
        Ok(Self { bits, m: m as u8 })
    }

    /// Builds a mask from 1-based indices as written by users.
    pub fn from_one_based(indices: &[usize], m: usize) -> Result<Self> {
        let zero_based = indices
            .iter()
            .map(|&i| i.checked_sub(1).ok_or_else(|| IcpError::Config("predictor indices are 1-based".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(&zero_based, m)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn m(self) -> usize {
        self.m as usize
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < self.m() && self.bits & (1 << i) != 0
    }

    /// Sorted 0-based indices.
    pub fn indices(self) -> Vec<usize> {
        (0..self.m()).filter(|&i| self.contains(i)).collect()
    }

    pub fn one_based(self) -> Vec<usize> {
        self.indices().into_iter().map(|i| i + 1).collect()
    }

    pub fn complement(self) -> Self {
        Self { bits: !self.bits & full_bits(self.m()), m: self.m }
    }

    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.m, other.m);
        Self { bits: self.bits | other.bits, m: self.m }
    }

    pub fn intersection(self, other: Self) -> Self {
        debug_assert_eq!(self.m, other.m);
        Self { bits: self.bits & other.bits, m: self.m }
    }

    pub fn difference(self, other: Self) -> Self {
        debug_assert_eq!(self.m, other.m);
        Self { bits: self.bits & !other.bits, m: self.m }
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Key used in the JSON table format, e.g. `"[1,3]"` or `"[]"`.
    pub fn key(self) -> String {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        format!("[{}]", parts.join(","))
    }

    pub fn parse_key(key: &str, m: usize) -> Result<Self> {
        let inner = key
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| IcpError::InvalidTable(format!("malformed set key `{key}`")))?;
        let mut idx = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let i: usize = part.parse().map_err(|_| IcpError::InvalidTable(format!("malformed set key `{key}`")))?;
            idx.push(i);
        }
        Self::from_one_based(&idx, m)
    }

    /// Display names of the members, using `names[i]` for predictor `i`.
    pub fn names(self, names: &[String]) -> Vec<&str> {
        self.indices().into_iter().map(|i| names[i].as_str()).collect()
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

pub(crate) fn full_bits(m: usize) -> u32 {
    ((1u64 << m) - 1) as u32
}

/// All `2^m` subsets in increasing mask order.
pub fn enumerate_subsets(m: usize) -> Result<impl Iterator<Item = SubsetMask>> {
    check_m(m)?;
    let m8 = m as u8;
    Ok((0..=full_bits(m)).map(move |bits| SubsetMask { bits, m: m8 }))
}

/// Iterates every submask of `mask`, including `mask` itself and 0.
pub(crate) fn submasks(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}

/// Invariance p-values `p_S` for every subset `S` of `m` predictors.
#[derive(Clone, Debug, PartialEq)]
pub struct PValueTable {
    m: usize,
    p: Vec<f64>,
}

impl PValueTable {
    pub fn new(m: usize, p: Vec<f64>) -> Result<Self> {
        check_m(m)?;
        if p.len() != 1usize << m {
            return Err(IcpError::InvalidTable(format!(
                "expected {} entries for m = {m}, got {}",
                1usize << m,
                p.len()
            )));
        }
        if let Some((mask, v)) = p.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(IcpError::InvalidTable(format!("p-value {v} for mask {mask} is outside [0, 1]")));
        }
        Ok(Self { m, p })
    }

    /// Table with every entry equal to `value`.
    pub fn constant(m: usize, value: f64) -> Result<Self> {
        check_m(m)?;
        Self::new(m, vec![value; 1 << m])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, s: SubsetMask) -> f64 {
        self.p[s.bits() as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn max(&self) -> f64 {
        self.p.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_json(&self, alpha: Option<f64>) -> Value {
        let mut p = Map::new();
        for (bits, &v) in self.p.iter().enumerate() {
            let s = SubsetMask { bits: bits as u32, m: self.m as u8 };
            p.insert(s.key(), Value::from(v));
        }
        let mut obj = Map::new();
        obj.insert("m".into(), Value::from(self.m));
        if let Some(a) = alpha {
            obj.insert("alpha".into(), Value::from(a));
        }
        obj.insert("p".into(), Value::Object(p));
        Value::Object(obj)
    }

    /// Parses the JSON table format, returning the table and the stored alpha if any.
    pub fn from_json(value: &Value) -> Result<(Self, Option<f64>)> {
        let bad = |msg: &str| IcpError::InvalidTable(msg.to_string());
        let m = value.get("m").and_then(Value::as_u64).ok_or_else(|| bad("missing integer field `m`"))? as usize;
        check_m(m)?;
        let alpha = value.get("alpha").and_then(Value::as_f64);
        let entries = value.get("p").and_then(Value::as_object).ok_or_else(|| bad("missing object field `p`"))?;
        let mut p = vec![f64::NAN; 1 << m];
        for (key, v) in entries {
            let s = SubsetMask::parse_key(key, m)?;
            let v = v.as_f64().ok_or_else(|| IcpError::InvalidTable(format!("entry `{key}` is not a number")))?;
            let slot = &mut p[s.bits() as usize];
            if !slot.is_nan() {
                return Err(IcpError::InvalidTable(format!("duplicate entry for set {key}")));
            }
            *slot = v;
        }
        if let Some(missing) = p.iter().position(|v| v.is_nan()) {
            let s = SubsetMask { bits: missing as u32, m: m as u8 };
            return Err(IcpError::InvalidTable(format!("no entry for set {}", s.key())));
        }
        Ok((Self::new(m, p)?, alpha))
    }

    /// Writes the compact binary format: magic, little-endian `u32` m, then
    /// `2^m` little-endian `f64` values in mask order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.m as u32).to_le_bytes())?;
        for v in &self.p {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(IcpError::InvalidTable("bad magic in binary table".into()));
        }
        let mut m_bytes = [0u8; 4];
        r.read_exact(&mut m_bytes)?;
        let m = u32::from_le_bytes(m_bytes) as usize;
        check_m(m)?;
        let mut buf = vec![0u8; 8 << m];
        r.read_exact(&mut buf)?;
        let p = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        Self::new(m, p)
    }
}

/// `c[T] = max_{I ⊆ T} p[I]` for every mask `T`, in `O(m 2^m)`.
pub fn subset_max_transform(table: &PValueTable) -> Vec<f64> {
    let mut c = table.p.clone();
    subset_max_in_place(&mut c, table.m);
    c
}

/// Sum-over-subsets style sweep with `max`: one pass per bit.
pub(crate) fn subset_max_in_place<T: Copy + PartialOrd>(c: &mut [T], m: usize) {
    debug_assert_eq!(c.len(), 1 << m);
    for i in 0..m {
        let bit = 1usize << i;
        for mask in 0..c.len() {
            if mask & bit != 0 && c[mask ^ bit] > c[mask] {
                c[mask] = c[mask ^ bit];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(p: &[f64]) -> Vec<f64> {
        (0..p.len())
            .map(|t| (0..p.len()).filter(|i| i & !t == 0).map(|i| p[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    #[test]
    fn enumerates_in_mask_order() {
        let one: Vec<_> = enumerate_subsets(1).unwrap().map(|s| s.one_based()).collect();
        assert_eq!(one, vec![vec![], vec![1]]);
        let two: Vec<_> = enumerate_subsets(2).unwrap().map(|s| s.one_based()).collect();
        assert_eq!(two, vec![vec![], vec![1], vec![2], vec![1, 2]]);
        assert_eq!(enumerate_subsets(9).unwrap().count(), 512);
    }

    #[test]
    fn rejects_bad_m() {
        assert!(enumerate_subsets(0).is_err());
        assert!(enumerate_subsets(31).is_err());
        assert!(SubsetMask::new(0b100, 2).is_err());
        assert!(SubsetMask::from_indices(&[3], 3).is_err());
    }

    #[test]
    fn transform_small_tables() {
        let t = PValueTable::new(1, vec![0.3, 0.1]).unwrap();
        assert_eq!(subset_max_transform(&t), vec![0.3, 0.3]);
        let t = PValueTable::new(2, vec![0.01, 0.30, 0.01, 0.40]).unwrap();
        assert_eq!(subset_max_transform(&t)[3], 0.40);
    }

    #[test]
    fn transform_matches_brute_force_m10() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let p: Vec<f64> = (0..1 << 10).map(|_| rng.random::<f64>()).collect();
        let t = PValueTable::new(10, p.clone()).unwrap();
        assert_eq!(subset_max_transform(&t), brute_force(&p));
    }

    #[test]
    fn submask_enumeration_is_complete() {
        let mut subs: Vec<u32> = submasks(0b1011).collect();
        subs.sort();
        assert_eq!(subs, vec![0, 1, 2, 3, 8, 9, 10, 11]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn table_validation() {
        assert!(PValueTable::new(2, vec![0.0; 3]).is_err());
        assert!(PValueTable::new(1, vec![0.5, 1.5]).is_err());
        assert!(PValueTable::new(1, vec![0.5, f64::NAN]).is_err());
    }

    #[test]
    fn json_format_keys() {
        let t = PValueTable::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let j = t.to_json(Some(0.05));
        assert_eq!(j["p"]["[]"], 0.1);
        assert_eq!(j["p"]["[1,2]"], 0.4);
        assert_eq!(j["alpha"], 0.05);
        let (back, alpha) = PValueTable::from_json(&j).unwrap();
        assert_eq!(back, t);
        assert_eq!(alpha, Some(0.05));
    }

    #[test]
    fn json_missing_entry_is_an_error() {
        let j: Value = serde_json::json!({"m": 1, "p": {"[]": 0.5}});
        assert!(PValueTable::from_json(&j).is_err());
    }

    #[test]
    fn binary_header_layout() {
        let t = PValueTable::new(1, vec![0.25, 1.0]).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"ICPPTBL1");
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..20], &0.25f64.to_le_bytes());
        assert_eq!(buf.len(), 12 + 16);
        assert_eq!(PValueTable::read_binary(&buf[..]).unwrap(), t);
        assert!(PValueTable::read_binary(&buf[..20]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn transform_agrees_with_brute_force(m in 1usize..=12, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p: Vec<f64> = (0..1usize << m).map(|_| rng.random::<f64>()).collect();
            let t = PValueTable::new(m, p.clone()).unwrap();
            let c = subset_max_transform(&t);
            prop_assert_eq!(&c, &brute_force(&p));
            for mask in 0..c.len() {
                prop_assert!(c[mask] >= p[mask]);
                for i in 0..m {
                    prop_assert!(c[mask] <= c[mask | (1 << i)]);
                }
            }
        }

        #[test]
        fn index_list_round_trip(m in 1usize..=30, bits in any::<u32>()) {
            let s = SubsetMask::new(bits & full_bits(m), m).unwrap();
            let back = SubsetMask::from_indices(&s.indices(), m).unwrap();
            prop_assert_eq!(s, back);
            prop_assert_eq!(SubsetMask::parse_key(&s.key(), m).unwrap(), s);
            prop_assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
        }
    }
}
