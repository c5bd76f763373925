//! Bit-packed node sets.
//!
//! A [`Realization`] marks the nodes that were ever infected before the
//! observation threshold. The same type doubles as an observation mask.
//! Bits beyond `len` in the last word are always zero.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::NodeId;

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Realization {
    len: usize,
    words: Vec<u64>,
}

#[inline]
pub(crate) fn word_count(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Mask of valid bits in the final word of a `len`-bit vector.
#[inline]
pub(crate) fn tail_mask(len: usize) -> u64 {
    match len % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Set-bit count of one word.
#[inline]
pub fn popcount(word: u64) -> u32 {
    word.count_ones()
}

impl Realization {
    pub fn empty(len: usize) -> Self {
        Realization {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut r = Realization {
            len,
            words: vec![u64::MAX; word_count(len)],
        };
        r.clear_tail();
        r
    }

    pub fn from_nodes(len: usize, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut r = Self::empty(len);
        for v in nodes {
            if v >= len {
                return Err(Error::Index { index: v, len });
            }
            r.set(v);
        }
        Ok(r)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut r = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                r.set(i);
            }
        }
        r
    }

    /// Wraps raw words, rejecting stray bits past `len`.
    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != word_count(len) {
            return Err(Error::Format(format!(
                "{} words cannot hold exactly {len} bits",
                words.len()
            )));
        }
        if let Some(&last) = words.last() {
            if last & !tail_mask(len) != 0 {
                return Err(Error::Format("bits set beyond the node count".into()));
            }
        }
        Ok(Realization { len, words })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: NodeId) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: NodeId) {
        debug_assert!(i < self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[inline]
    pub fn clear_all(&mut self) {
        self.words.fill(0);
    }

    fn clear_tail(&mut self) {
        let mask = tail_mask(self.len);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|&w| popcount(w) as usize).sum()
    }

    /// Ascending indices of set bits.
    pub fn ones(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + bit)
            })
        })
    }

    pub(crate) fn check_same_len(&self, other: &Realization) -> Result<()> {
        if self.len == other.len {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.len,
                found: other.len,
            })
        }
    }

    pub fn and(&self, other: &Realization) -> Result<Realization> {
        self.check_same_len(other)?;
        Ok(Realization {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        })
    }

    /// True when every bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Realization) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Text form: one `'0'`/`'1'` character per node in id order.
    pub fn to_text(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let text = text.trim_end_matches(['\n', '\r']);
        let mut r = Self::empty(text.len());
        for (i, c) in text.bytes().enumerate() {
            match c {
                b'1' => r.set(i),
                b'0' => {}
                other => {
                    return Err(Error::Format(format!(
                        "invalid character {:?} at position {i} in realization",
                        other as char
                    )))
                }
            }
        }
        Ok(r)
    }

    /// Binary form: node count as little-endian u64, then the packed words
    /// as little-endian u64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * (1 + self.words.len()));
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let read = |chunk: &[u8]| u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        if bytes.len() < 8 || !bytes.len().is_multiple_of(8) {
            return Err(Error::Format(format!(
                "binary realization has {} bytes, not a multiple of 8",
                bytes.len()
            )));
        }
        let len = usize::try_from(read(&bytes[..8]))
            .map_err(|_| Error::Format("node count does not fit in memory".into()))?;
        let words = bytes[8..].chunks_exact(8).map(read).collect();
        Self::from_words(len, words)
    }
}

impl fmt::Debug for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Realization({})", self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_bits_stay_clear() {
        let r = Realization::full(70);
        assert_eq!(r.count_ones(), 70);
        assert_eq!(r.words()[1], (1 << 6) - 1);
        assert_eq!(Realization::full(128).count_ones(), 128);
    }

    #[test]
    fn ones_in_order() {
        let r = Realization::from_nodes(200, [199, 3, 64, 0]).unwrap();
        assert_eq!(r.ones().collect::<Vec<_>>(), vec![0, 3, 64, 199]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Realization::from_text("0102").is_err());
        assert!(Realization::from_words(3, vec![0b1000]).is_err());
        assert!(Realization::from_bytes(&[1, 2, 3]).is_err());
        let mut bytes = 5u64.to_le_bytes().to_vec();
        bytes.extend_from_slice(&[0; 16]);
        assert!(Realization::from_bytes(&bytes).is_err());
        assert!(matches!(
            Realization::from_nodes(3, [3]),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn popcount_matches_bit_loop() {
        fn kernighan(mut w: u64) -> u32 {
            let mut c = 0;
            while w != 0 {
                w &= w - 1;
                c += 1;
            }
            c
        }
        let mut x = 0x0123_4567_89AB_CDEFu64;
        for _ in 0..10_000 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let naive: u32 = (0..64).map(|b| ((x >> b) & 1) as u32).sum();
            assert_eq!(popcount(x), naive);
            assert_eq!(kernighan(x), naive);
        }
    }

    proptest! {
        #[test]
        fn text_and_binary_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let r = Realization::from_bools(&bits);
            prop_assert_eq!(&Realization::from_text(&r.to_text()).unwrap(), &r);
            prop_assert_eq!(&Realization::from_bytes(&r.to_bytes()).unwrap(), &r);
            prop_assert_eq!(r.count_ones(), bits.iter().filter(|&&b| b).count());
        }
    }
}
