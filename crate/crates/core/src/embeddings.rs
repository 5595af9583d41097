//! Pretrained word vectors and token similarity.
//!
//! Vectors are read from the usual whitespace-separated text layout (a token
//! followed by `dim` numbers per line) or from a binary cache written by
//! [`write_embedding_cache`]. The first occurrence of a duplicated token wins.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const CACHE_MAGIC: &[u8; 8] = b"AGKEMBED";
const CACHE_VERSION: u32 = 1;

/// Immutable token → vector map of fixed dimension.
#[derive(Clone, Debug)]
pub struct EmbeddingTable<T> {
    dim: usize,
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    data: Vec<T>,
    lowercase_lookup: bool,
    digest: String,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Builds a table from `(token, vector)` pairs. Duplicates keep the first vector.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<T>)>,
    {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "embedding dimension must be positive".into(),
            ));
        }
        let mut table = Self::empty(dim);
        for (n, (token, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    line: n + 1,
                    expected: dim,
                    found: vector.len(),
                });
            }
            table.push(token, &vector);
        }
        table.finish();
        Ok(table)
    }

    fn empty(dim: usize) -> Self {
        Self {
            dim,
            index: HashMap::new(),
            tokens: Vec::new(),
            data: Vec::new(),
            lowercase_lookup: true,
            digest: String::new(),
        }
    }

    fn push(&mut self, token: String, vector: &[T]) {
        if self.index.contains_key(&token) {
            return;
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(vector);
    }

    fn finish(&mut self) {
        let mut hasher = Sha256::new();
        hasher.update((self.dim as u64).to_le_bytes());
        for (row, token) in self.tokens.iter().enumerate() {
            hasher.update(token.as_bytes());
            hasher.update([0u8]);
            for v in self.row(row) {
                hasher.update(v.as_f64().to_le_bytes());
            }
        }
        self.digest = hex::encode(hasher.finalize());
    }

    /// Whether lookups lowercase the query token first (default `true`).
    pub fn with_lowercase_lookup(mut self, lowercase: bool) -> Self {
        self.lowercase_lookup = lowercase;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lowercase_lookup(&self) -> bool {
        self.lowercase_lookup
    }

    /// SHA-256 over the dimension and all entries in file order.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Exact-key access to a stored vector, ignoring the lookup policy.
    pub fn get(&self, token: &str) -> Option<&[T]> {
        self.index.get(token).map(|&r| self.row(r))
    }

    /// Vector used for similarity: applies lowercasing and treats zero-norm
    /// vectors as missing.
    pub fn lookup(&self, token: &str) -> Option<&[T]> {
        let key: Cow<'_, str> = if self.lowercase_lookup {
            if token.chars().any(char::is_uppercase) {
                Cow::Owned(token.to_lowercase())
            } else {
                Cow::Borrowed(token)
            }
        } else {
            Cow::Borrowed(token)
        };
        self.get(&key).filter(|v| v.iter().any(|x| !x.is_zero()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[T])> {
        self.tokens
            .iter()
            .enumerate()
            .map(move |(r, t)| (t.as_str(), self.row(r)))
    }
}

/// Loads a text or binary-cache embedding file; the format is detected from
/// the leading magic bytes.
pub fn load_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable<T>> {
    let path = path.as_ref();
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let is_cache = file
        .fill_buf()
        .map_err(|e| Error::io(path, e))?
        .starts_with(CACHE_MAGIC);
    let table = if is_cache {
        read_embedding_cache(file)?
    } else {
        read_embeddings_text(file)?
    };
    match expected_dim {
        Some(d) if d != table.dim => Err(Error::DimensionMismatch {
            line: 1,
            expected: d,
            found: table.dim,
        }),
        _ => Ok(table),
    }
}

pub fn read_embeddings_text<T: Scalar, R: Read>(reader: R) -> Result<EmbeddingTable<T>> {
    let reader = BufReader::new(reader);
    let mut table: Option<EmbeddingTable<T>> = None;
    let mut values = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        values.clear();
        for f in fields {
            let v = f
                .parse::<T>()
                .map_err(|_| Error::parse(lineno, format!("unparseable number {f:?}")))?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::parse(
                lineno,
                format!("token {token:?} has no vector"),
            ));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::empty(values.len()));
        if values.len() != table.dim {
            return Err(Error::DimensionMismatch {
                line: lineno,
                expected: table.dim,
                found: values.len(),
            });
        }
        table.push(token.to_owned(), &values);
    }
    let mut table =
        table.ok_or_else(|| Error::InvalidInput("embedding file contains no vectors".into()))?;
    table.finish();
    Ok(table)
}

/// Writes the binary cache: magic, version, dim, count, then per entry a
/// length-prefixed UTF-8 token and `dim` little-endian `f64`s.
pub fn write_embedding_cache<T: Scalar, W: Write>(
    writer: W,
    table: &EmbeddingTable<T>,
) -> Result<()> {
    let mut w = BufWriter::new(writer);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(table.dim as u64).to_le_bytes())?;
    w.write_all(&(table.len() as u64).to_le_bytes())?;
    for (token, vector) in table.iter() {
        w.write_all(&(token.len() as u32).to_le_bytes())?;
        w.write_all(token.as_bytes())?;
        for v in vector {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_embedding_cache<T: Scalar, R: Read>(reader: R) -> Result<EmbeddingTable<T>> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::format("embedding cache", "bad magic bytes"));
    }
    let version = read_u32(&mut r)?;
    if version != CACHE_VERSION {
        return Err(Error::format(
            "embedding cache",
            format!("unsupported version {version}"),
        ));
    }
    let dim = read_u64(&mut r)? as usize;
    let count = read_u64(&mut r)? as usize;
    if dim == 0 {
        return Err(Error::format("embedding cache", "zero dimension"));
    }
    let mut table = EmbeddingTable::empty(dim);
    let mut vector = vec![T::zero(); dim];
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        let token = String::from_utf8(buf)
            .map_err(|_| Error::format("embedding cache", "token is not UTF-8"))?;
        for v in vector.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = T::lit(f64::from_le_bytes(b));
        }
        table.push(token, &vector);
    }
    table.finish();
    Ok(table)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[inline]
pub(crate) fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

#[inline]
pub(crate) fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Cosine over vectors with precomputed norms, clamped to `[-1, 1]`.
#[inline]
pub(crate) fn cosine_with_norms<T: Scalar>(u: &[T], v: &[T], nu: T, nv: T) -> T {
    let c = dot(u, v) / (nu * nv);
    c.max(-T::one()).min(T::one())
}

/// `dot(u, v) / (|u| |v|)`, or `None` when either vector has zero norm.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Option<T> {
    assert_eq!(u.len(), v.len(), "cosine over vectors of different length");
    let (nu, nv) = (norm(u), norm(v));
    if nu.is_zero() || nv.is_zero() {
        return None;
    }
    Some(cosine_with_norms(u, v, nu, nv))
}

/// Appends a 1 (aspect term) or 0 component, growing `d` to `d + 1`.
pub fn augment_aspect_flag<T: Scalar>(vector: &[T], is_aspect: bool) -> Vec<T> {
    let mut out = Vec::with_capacity(vector.len() + 1);
    out.extend_from_slice(vector);
    out.push(if is_aspect { T::one() } else { T::zero() });
    out
}

/// A token occurrence as seen by a similarity function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TokenRef<'a> {
    pub text: &'a str,
    pub aspect: bool,
}

impl<'a> TokenRef<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            text,
            aspect: false,
        }
    }

    pub fn aspect(text: &'a str) -> Self {
        Self { text, aspect: true }
    }
}

/// Symmetric similarity between two items.
pub trait Similarity<K: ?Sized, T> {
    fn similarity(&self, a: &K, b: &K) -> T;
}

impl<K: ?Sized, T, F> Similarity<K, T> for F
where
    F: Fn(&K, &K) -> T,
{
    fn similarity(&self, a: &K, b: &K) -> T {
        self(a, b)
    }
}

/// Cosine similarity over an [`EmbeddingTable`] with string-match fallback
/// for tokens that have no usable vector.
#[derive(Clone, Copy, Debug)]
pub struct CosineSim<'a, T> {
    pub table: &'a EmbeddingTable<T>,
    /// Append the aspect flag to every vector before comparing.
    pub aspect_aware: bool,
}

impl<'a, T: Scalar> CosineSim<'a, T> {
    pub fn new(table: &'a EmbeddingTable<T>, aspect_aware: bool) -> Self {
        Self {
            table,
            aspect_aware,
        }
    }

    fn same_surface(&self, a: &TokenRef<'_>, b: &TokenRef<'_>) -> bool {
        a.text == b.text && (!self.aspect_aware || a.aspect == b.aspect)
    }
}

impl<T: Scalar> Similarity<TokenRef<'_>, T> for CosineSim<'_, T> {
    fn similarity(&self, a: &TokenRef<'_>, b: &TokenRef<'_>) -> T {
        token_sim(*a, *b, self.table, self.aspect_aware)
    }
}

/// Similarity of two token occurrences.
///
/// Identical surface forms (including the aspect flag when `aspect_aware`)
/// score exactly 1. Otherwise the cosine of the (flag-augmented) vectors is
/// used; if either token has no vector the score is 0.
pub fn token_sim<T: Scalar>(
    a: TokenRef<'_>,
    b: TokenRef<'_>,
    table: &EmbeddingTable<T>,
    aspect_aware: bool,
) -> T {
    let sim = CosineSim {
        table,
        aspect_aware,
    };
    if sim.same_surface(&a, &b) {
        return T::one();
    }
    let (Some(u), Some(v)) = (table.lookup(a.text), table.lookup(b.text)) else {
        return T::zero();
    };
    if aspect_aware {
        let (u, v) = (
            augment_aspect_flag(u, a.aspect),
            augment_aspect_flag(v, b.aspect),
        );
        cosine(&u, &v).unwrap_or_else(T::zero)
    } else {
        cosine(u, v).unwrap_or_else(T::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(text: &str) -> EmbeddingTable<f64> {
        read_embeddings_text(text.as_bytes()).unwrap()
    }

    #[test]
    fn reads_text_vectors() {
        let t = table("a 1 0\nb 0 1\n");
        assert_eq!(t.dim(), 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b"), Some(&[0.0, 1.0][..]));
    }

    #[test]
    fn inconsistent_dimension_is_an_error() {
        let err = read_embeddings_text::<f64, _>("a 1 0\nb 0 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                line: 2,
                expected: 2,
                found: 3
            }
        ));
        let err = read_embeddings_text::<f64, _>("a 1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn first_duplicate_wins() {
        let t = table("a 1 0\na 9 9\n");
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn expected_dim_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "a 1 0\n").unwrap();
        assert!(load_embeddings::<f64>(&path, Some(2)).is_ok());
        assert!(matches!(
            load_embeddings::<f64>(&path, Some(300)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_values() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]), Some(1.0));
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), Some(0.0));
        let c = cosine(&[1.0_f64, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), None);
    }

    #[test]
    fn aspect_flag_augmentation() {
        assert_eq!(
            augment_aspect_flag(&[0.5, -0.2], true),
            vec![0.5, -0.2, 1.0]
        );
        assert_eq!(
            augment_aspect_flag(&[0.5, -0.2], false),
            vec![0.5, -0.2, 0.0]
        );
        let c = cosine(&[1.0_f64, 0.0, 1.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn token_sim_oov_policy() {
        let t = table("service 0.3 0.4\nfood 0.4 0.3\nzero 0 0\n");
        let s = |a: &str, b: &str| token_sim(TokenRef::new(a), TokenRef::new(b), &t, false);
        assert_eq!(s("service", "service"), 1.0);
        assert_eq!(s("zzqx", "zzqx"), 1.0);
        assert_eq!(s("zzqx", "service"), 0.0);
        assert_eq!(s("zero", "service"), 0.0);
        assert!((s("service", "food") - 0.96).abs() < 1e-12);
        // lowercased lookup, surface fallback keeps case
        assert!((s("Service", "food") - 0.96).abs() < 1e-12);
        assert_eq!(s("Zzqx", "zzqx"), 0.0);
    }

    #[test]
    fn token_sim_with_aspect_flag() {
        let t = table("service 1 0\n");
        let plain = TokenRef::new("service");
        let aspect = TokenRef::aspect("service");
        let c: f64 = token_sim(plain, aspect, &t, true);
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(token_sim::<f64>(plain, aspect, &t, false), 1.0);
        assert_eq!(token_sim::<f64>(aspect, aspect, &t, true), 1.0);
        // OOV with differing flags is a surface mismatch
        assert_eq!(
            token_sim::<f64>(TokenRef::new("x"), TokenRef::aspect("x"), &t, true),
            0.0
        );
    }

    #[test]
    fn cache_round_trip() {
        let t = table("a 1 0.25\nb -3.5 1e-7\n");
        let mut buf = Vec::new();
        write_embedding_cache(&mut buf, &t).unwrap();
        let back: EmbeddingTable<f64> = read_embedding_cache(buf.as_slice()).unwrap();
        assert_eq!(back.digest(), t.digest());
        assert_eq!(back.get("b"), t.get("b"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.bin");
        std::fs::write(&path, &buf).unwrap();
        let loaded: EmbeddingTable<f64> = load_embeddings(&path, Some(2)).unwrap();
        assert_eq!(loaded.digest(), t.digest());
    }

    proptest! {
        #[test]
        fn token_sim_symmetric_and_bounded(
            vecs in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..6),
            a in 0usize..8, b in 0usize..8, fa in any::<bool>(), fb in any::<bool>(),
        ) {
            let entries = vecs.iter().enumerate().map(|(i, v)| (format!("w{i}"), v.clone()));
            let t = EmbeddingTable::from_entries(4, entries).unwrap();
            let (na, nb) = (format!("w{a}"), format!("w{b}"));
            let ta = TokenRef { text: &na, aspect: fa };
            let tb = TokenRef { text: &nb, aspect: fb };
            for aware in [false, true] {
                let ab: f64 = token_sim(ta, tb, &t, aware);
                let ba: f64 = token_sim(tb, ta, &t, aware);
                prop_assert_eq!(ab.to_bits(), ba.to_bits());
                prop_assert!(ab.abs() <= 1.0 + 1e-12);
                prop_assert_eq!(token_sim::<f64>(ta, ta, &t, aware), 1.0);
            }
        }

        #[test]
        fn augmentation_preserves_prefix(v in prop::collection::vec(any::<f64>(), 0..10), flag in any::<bool>()) {
            let out = augment_aspect_flag(&v, flag);
            prop_assert_eq!(out.len(), v.len() + 1);
            for (x, y) in v.iter().zip(&out) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
