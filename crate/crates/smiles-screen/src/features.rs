//! Featurization of SMILES text: lossless tokenization, token n-gram sets
//! and bags, and integer-coded 2-character symbol sequences with one-hot
//! semantics for the sequence models.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;
use thiserror::Error;

use crate::smiles::lexer::{lex, LexemeData};
use crate::smiles::ParseDiagnostic;
use crate::util::fnv1a64;

/// Reserved index for out-of-vocabulary symbols.
pub const UNK: u32 = 0;
/// Reserved index for padding.
pub const PAD: u32 = 1;
/// Sequence models never see more than this many symbols per molecule.
pub const MAX_SEQUENCE_SYMBOLS: usize = 250;
/// Pads the final window when a 2-char symbol would run past the string.
pub const SENTINEL_CHAR: char = '_';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("n-gram range ({0}, {1}) is invalid: need 1 <= lo <= hi")]
    BadRange(usize, usize),
    #[error("feature index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: u32, size: usize },
    #[error("inputs come from different vocabularies ({0} vs {1})")]
    VocabularyMismatch(u64, u64),
    #[error("vocabulary file is malformed: {0}")]
    BadVocabularyFile(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Atom,
    BracketAtom,
    Bond,
    RingClosure,
    BranchOpen,
    BranchClose,
}

/// One lexical token. Concatenating `text` over a token list reproduces the
/// input byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub kind: TokenKind,
    pub offset: usize,
}

/// Splits a SMILES string into tokens using the parser's lexer, so `[Na+]`,
/// two-letter elements, and `%nn` ring closures each come back as one token.
pub fn tokenize(text: &str) -> Result<Vec<Token<'_>>, ParseDiagnostic> {
    let trimmed = text.trim();
    let base = text.len() - text.trim_start().len();
    let lexemes = lex(trimmed).map_err(|d| d.offset_by(base))?;
    Ok(lexemes
        .into_iter()
        .map(|l| {
            let kind = match &l.data {
                LexemeData::Atom(a) if a.bracket => TokenKind::BracketAtom,
                LexemeData::Atom(_) => TokenKind::Atom,
                LexemeData::Bond(_) => TokenKind::Bond,
                LexemeData::Ring(_) => TokenKind::RingClosure,
                LexemeData::BranchOpen => TokenKind::BranchOpen,
                LexemeData::BranchClose => TokenKind::BranchClose,
            };
            Token {
                text: l.text,
                kind,
                offset: l.offset + base,
            }
        })
        .collect())
}

static NEXT_VOCAB_ID: AtomicU64 = AtomicU64::new(1);

/// A symbol-to-index mapping with UNK and PAD reserved at 0 and 1. While
/// unfrozen it grows on demand (fitting); once frozen, unknown symbols map
/// to UNK and the table never changes again.
#[derive(Debug)]
pub struct Vocabulary {
    index: HashMap<String, u32>,
    symbols: Vec<String>,
    frozen: bool,
    id: u64,
}

impl Clone for Vocabulary {
    fn clone(&self) -> Self {
        // A clone is the same logical vocabulary; it keeps the identity so
        // features built against either compare as compatible.
        Vocabulary {
            index: self.index.clone(),
            symbols: self.symbols.clone(),
            frozen: self.frozen,
            id: self.id,
        }
    }
}

impl Vocabulary {
    pub fn new() -> Vocabulary {
        let mut v = Vocabulary {
            index: HashMap::new(),
            symbols: Vec::new(),
            frozen: false,
            id: NEXT_VOCAB_ID.fetch_add(1, Ordering::Relaxed),
        };
        v.push_symbol("<unk>");
        v.push_symbol("<pad>");
        v
    }

    fn push_symbol(&mut self, s: &str) -> u32 {
        let idx = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.index.insert(s.to_string(), idx);
        idx
    }

    /// Index of `symbol`, adding it first when unfrozen. Frozen vocabularies
    /// reject additions by mapping unseen symbols to UNK.
    pub fn encode(&mut self, symbol: &str) -> u32 {
        if let Some(&idx) = self.index.get(symbol) {
            return idx;
        }
        if self.frozen {
            UNK
        } else {
            self.push_symbol(symbol)
        }
    }

    /// Read-only lookup with UNK fallback.
    pub fn lookup(&self, symbol: &str) -> u32 {
        self.index.get(symbol).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    pub fn symbol(&self, index: u32) -> Option<&str> {
        self.symbols.get(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false // UNK and PAD are always present
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Identity of this vocabulary instance (clones included); features
    /// remember it so cross-vocabulary mixing is caught early.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Stable content fingerprint, independent of process or instance.
    pub fn content_hash(&self) -> u64 {
        let mut buf = String::new();
        for (i, s) in self.symbols.iter().enumerate() {
            buf.push_str(s);
            buf.push('\t');
            buf.push_str(&i.to_string());
            buf.push('\n');
        }
        fnv1a64(buf.as_bytes())
    }

    /// Writes `symbol<TAB>index` lines sorted by index.
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let mut file =
            std::fs::File::create(path).map_err(|e| FeatureError::Io(e.to_string()))?;
        for (i, s) in self.symbols.iter().enumerate() {
            writeln!(file, "{}\t{}", s, i).map_err(|e| FeatureError::Io(e.to_string()))?;
        }
        Ok(())
    }

    /// Loads a table saved by [`Vocabulary::save`]; the result is frozen.
    pub fn load(path: &Path) -> Result<Vocabulary, FeatureError> {
        let file = std::fs::File::open(path).map_err(|e| FeatureError::Io(e.to_string()))?;
        let mut entries: Vec<(String, u32)> = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| FeatureError::Io(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (symbol, index) = line.rsplit_once('\t').ok_or_else(|| {
                FeatureError::BadVocabularyFile(format!("line {}: missing tab", lineno + 1))
            })?;
            let index: u32 = index.parse().map_err(|_| {
                FeatureError::BadVocabularyFile(format!("line {}: bad index", lineno + 1))
            })?;
            entries.push((symbol.to_string(), index));
        }
        entries.sort_by_key(|&(_, i)| i);
        for (expect, &(_, got)) in entries.iter().enumerate() {
            if got as usize != expect {
                return Err(FeatureError::BadVocabularyFile(format!(
                    "indices are not contiguous at {}",
                    got
                )));
            }
        }
        if entries.len() < 2 || entries[0].0 != "<unk>" || entries[1].0 != "<pad>" {
            return Err(FeatureError::BadVocabularyFile(
                "reserved <unk>/<pad> entries missing".into(),
            ));
        }
        let mut vocab = Vocabulary::new();
        for (symbol, _) in entries.iter().skip(2) {
            vocab.push_symbol(symbol);
        }
        vocab.freeze();
        Ok(vocab)
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}

/// Binary (set) or count (bag) features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMode {
    Set,
    Count,
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Set => "set",
            FeatureMode::Count => "count",
        })
    }
}

/// Inclusive n-gram length range plus the mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NGramConfig {
    pub lo: usize,
    pub hi: usize,
    pub mode: FeatureMode,
}

impl NGramConfig {
    pub fn new(lo: usize, hi: usize, mode: FeatureMode) -> Result<Self, FeatureError> {
        if lo < 1 || hi < lo {
            return Err(FeatureError::BadRange(lo, hi));
        }
        Ok(NGramConfig { lo, hi, mode })
    }

    /// The default used throughout: token 1- to 4-grams.
    pub fn default_range(mode: FeatureMode) -> Self {
        NGramConfig { lo: 1, hi: 4, mode }
    }
}

/// Sparse n-gram features of one molecule: sorted vocabulary indices with
/// parallel counts (all 1 in set mode).
#[derive(Debug, Clone, PartialEq)]
pub struct NGramSet {
    indices: Vec<u32>,
    counts: Vec<u32>,
    mode: FeatureMode,
    vocab_id: u64,
}

impl NGramSet {
    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn vocab_id(&self) -> u64 {
        self.vocab_id
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn count(&self, index: u32) -> u32 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.counts[pos],
            Err(_) => 0,
        }
    }

    pub fn contains(&self, index: u32) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Test/serialization constructor; indices need not be presorted.
    pub fn from_parts(
        pairs: impl IntoIterator<Item = (u32, u32)>,
        mode: FeatureMode,
        vocab_id: u64,
    ) -> NGramSet {
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        for (idx, cnt) in pairs {
            *map.entry(idx).or_insert(0) += cnt;
        }
        let (indices, counts) = map
            .into_iter()
            .map(|(i, c)| match mode {
                FeatureMode::Set => (i, 1),
                FeatureMode::Count => (i, c),
            })
            .unzip();
        NGramSet {
            indices,
            counts,
            mode,
            vocab_id,
        }
    }
}

/// The gram key for a token window: token texts joined by spaces (tokens
/// never contain spaces, so the join is unambiguous).
fn gram_key(tokens: &[Token<'_>]) -> String {
    let mut key = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            key.push(' ');
        }
        key.push_str(t.text);
    }
    key
}

/// All contiguous token n-grams for n in the configured range. While the
/// vocabulary is unfrozen, unseen grams are added (fitting); afterwards they
/// collapse to UNK (transforming). An empty token list yields an empty set.
pub fn ngram_featurize(
    tokens: &[Token<'_>],
    cfg: &NGramConfig,
    vocab: &mut Vocabulary,
) -> NGramSet {
    let mut acc: BTreeMap<u32, u32> = BTreeMap::new();
    for n in cfg.lo..=cfg.hi {
        if n > tokens.len() {
            break;
        }
        for window in tokens.windows(n) {
            let idx = vocab.encode(&gram_key(window));
            *acc.entry(idx).or_insert(0) += 1;
        }
    }
    let (indices, counts): (Vec<u32>, Vec<u32>) = acc
        .into_iter()
        .map(|(i, c)| match cfg.mode {
            FeatureMode::Set => (i, 1),
            FeatureMode::Count => (i, c),
        })
        .unzip();
    NGramSet {
        indices,
        counts,
        mode: cfg.mode,
        vocab_id: vocab.id(),
    }
}

/// Transform-only featurization against a shared (frozen) vocabulary.
pub fn ngram_transform(tokens: &[Token<'_>], cfg: &NGramConfig, vocab: &Vocabulary) -> NGramSet {
    let mut acc: BTreeMap<u32, u32> = BTreeMap::new();
    for n in cfg.lo..=cfg.hi {
        if n > tokens.len() {
            break;
        }
        for window in tokens.windows(n) {
            let idx = vocab.lookup(&gram_key(window));
            *acc.entry(idx).or_insert(0) += 1;
        }
    }
    let (indices, counts): (Vec<u32>, Vec<u32>) = acc
        .into_iter()
        .map(|(i, c)| match cfg.mode {
            FeatureMode::Set => (i, 1),
            FeatureMode::Count => (i, c),
        })
        .unzip();
    NGramSet {
        indices,
        counts,
        mode: cfg.mode,
        vocab_id: vocab.id(),
    }
}

/// Window stride for 2-char symbols: overlapping (1) or disjoint (2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolStride {
    One,
    Two,
}

/// A SMILES string as integer-coded 2-character symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeq {
    pub symbols: Vec<u32>,
}

impl SymbolSeq {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// The raw 2-char windows of a string at the given stride, before any
/// vocabulary lookup. A final odd character (and a length-1 input) is padded
/// with [`SENTINEL_CHAR`].
fn symbol_windows(text: &str, stride: SymbolStride) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let step = match stride {
        SymbolStride::One => 1,
        SymbolStride::Two => 2,
    };
    let mut windows = Vec::new();
    if chars.is_empty() {
        return windows;
    }
    if chars.len() == 1 {
        windows.push([chars[0], SENTINEL_CHAR].iter().collect());
        return windows;
    }
    let mut start = 0;
    while start < chars.len() {
        if start + 1 == chars.len() {
            if step == 2 {
                windows.push([chars[start], SENTINEL_CHAR].iter().collect());
            }
            break;
        }
        windows.push(chars[start..start + 2].iter().collect());
        start += step;
    }
    windows
}

/// Encodes raw text as 2-char windows at the given stride; unfrozen
/// vocabularies grow, frozen ones map unseen symbols to UNK.
pub fn symbol_encode(text: &str, stride: SymbolStride, vocab: &mut Vocabulary) -> SymbolSeq {
    SymbolSeq {
        symbols: symbol_windows(text, stride)
            .iter()
            .map(|w| vocab.encode(w))
            .collect(),
    }
}

/// Transform-only variant for shared (frozen) vocabularies.
pub fn symbol_transform(text: &str, stride: SymbolStride, vocab: &Vocabulary) -> SymbolSeq {
    SymbolSeq {
        symbols: symbol_windows(text, stride)
            .iter()
            .map(|w| vocab.lookup(w))
            .collect(),
    }
}

/// Debug export of a feature matrix as sparse triplets:
/// `row,col,value` lines with a header, one line per stored entry.
pub fn export_sparse_triplets(sets: &[NGramSet]) -> String {
    let mut out = String::from("row,col,value\n");
    for (row, set) in sets.iter().enumerate() {
        for (&col, &value) in set.indices().iter().zip(set.counts()) {
            out.push_str(&format!("{},{},{}\n", row, col, value));
        }
    }
    out
}

/// Materializes the one-hot matrix of a sequence: row `i` has a single 1 in
/// column `symbols[i]`; PAD rows are all zero.
pub fn one_hot(seq: &SymbolSeq, vocab_size: usize) -> Result<Array2<f64>, FeatureError> {
    let mut matrix = Array2::zeros((seq.symbols.len(), vocab_size));
    for (row, &sym) in seq.symbols.iter().enumerate() {
        if sym as usize >= vocab_size {
            return Err(FeatureError::IndexOutOfRange {
                index: sym,
                size: vocab_size,
            });
        }
        if sym != PAD {
            matrix[(row, sym as usize)] = 1.0;
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Token<'_>> {
        tokenize(s).unwrap()
    }

    #[test]
    fn bracket_atom_is_one_token() {
        let t = toks("[Na+]");
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].kind, TokenKind::BracketAtom);
        assert_eq!(t[0].text, "[Na+]");
    }

    #[test]
    fn two_letter_elements_tokenize_whole() {
        let texts: Vec<&str> = toks("CCCl").iter().map(|t| t.text).collect();
        assert_eq!(texts, vec!["C", "C", "Cl"]);
    }

    #[test]
    fn figure_example_token_stream() {
        let texts: Vec<&str> = toks("N(c1)ccc1N").iter().map(|t| t.text).collect();
        assert_eq!(texts, vec!["N", "(", "c", "1", ")", "c", "c", "c", "1", "N"]);
    }

    #[test]
    fn lexing_is_lossless() {
        for s in ["N(c1)ccc1N", "[13CH3+]C%12CC%12", "C/C=C\\C", "c1ccc(cc1)[O-]"] {
            let joined: String = toks(s).iter().map(|t| t.text).collect();
            assert_eq!(joined, s);
        }
    }

    #[test]
    fn ngram_set_and_count_modes() {
        let mut vocab = Vocabulary::new();
        let t = toks("CCO");
        let unigrams = ngram_featurize(&t, &NGramConfig::new(1, 1, FeatureMode::Set).unwrap(), &mut vocab);
        let names: Vec<&str> = unigrams
            .indices()
            .iter()
            .map(|&i| vocab.symbol(i).unwrap())
            .collect();
        assert_eq!(names, vec!["C", "O"]);
        assert!(unigrams.counts().iter().all(|&c| c == 1));

        let bigrams = ngram_featurize(&t, &NGramConfig::new(2, 2, FeatureMode::Set).unwrap(), &mut vocab);
        let names: Vec<&str> = bigrams
            .indices()
            .iter()
            .map(|&i| vocab.symbol(i).unwrap())
            .collect();
        assert_eq!(names, vec!["C C", "C O"]);

        let counts = ngram_featurize(
            &t,
            &NGramConfig::new(1, 1, FeatureMode::Count).unwrap(),
            &mut vocab,
        );
        assert_eq!(counts.count(vocab.lookup("C")), 2);
        assert_eq!(counts.count(vocab.lookup("O")), 1);
    }

    #[test]
    fn frozen_vocabulary_maps_unseen_to_unk() {
        let mut vocab = Vocabulary::new();
        let t = toks("CCO");
        ngram_featurize(&t, &NGramConfig::default_range(FeatureMode::Set), &mut vocab);
        vocab.freeze();
        let size = vocab.len();
        let t2 = toks("c1ccccc1");
        let set = ngram_featurize(&t2, &NGramConfig::default_range(FeatureMode::Set), &mut vocab);
        assert_eq!(vocab.len(), size, "transform must not grow the vocabulary");
        assert!(set.contains(UNK));
    }

    #[test]
    fn symbol_windows_stride_one_and_two() {
        let mut vocab = Vocabulary::new();
        let seq = symbol_encode("CCO", SymbolStride::One, &mut vocab);
        let names: Vec<&str> = seq.symbols.iter().map(|&i| vocab.symbol(i).unwrap()).collect();
        assert_eq!(names, vec!["CC", "CO"]);

        let seq = symbol_encode("CC", SymbolStride::Two, &mut vocab);
        let names: Vec<&str> = seq.symbols.iter().map(|&i| vocab.symbol(i).unwrap()).collect();
        assert_eq!(names, vec!["CC"]);

        let seq = symbol_encode("C", SymbolStride::One, &mut vocab);
        let names: Vec<&str> = seq.symbols.iter().map(|&i| vocab.symbol(i).unwrap()).collect();
        assert_eq!(names, vec!["C_"]);

        let seq = symbol_encode("CCO", SymbolStride::Two, &mut vocab);
        let names: Vec<&str> = seq.symbols.iter().map(|&i| vocab.symbol(i).unwrap()).collect();
        assert_eq!(names, vec!["CC", "O_"]);
    }

    #[test]
    fn one_hot_layout() {
        let seq = SymbolSeq { symbols: vec![2] };
        let m = one_hot(&seq, 4).unwrap();
        assert_eq!(m.shape(), &[1, 4]);
        assert_eq!(m.row(0).to_vec(), vec![0.0, 0.0, 1.0, 0.0]);

        let seq = SymbolSeq {
            symbols: vec![2, PAD, 3],
        };
        let m = one_hot(&seq, 5).unwrap();
        assert_eq!(m.shape(), &[3, 5]);
        let sums: Vec<f64> = (0..3).map(|r| m.row(r).sum()).collect();
        assert_eq!(sums, vec![1.0, 0.0, 1.0]);

        let seq = SymbolSeq { symbols: vec![9] };
        assert!(matches!(
            one_hot(&seq, 4),
            Err(FeatureError::IndexOutOfRange { index: 9, size: 4 })
        ));
    }

    #[test]
    fn vocabulary_round_trips_through_disk() {
        let mut vocab = Vocabulary::new();
        for s in ["C", "C C", "c1", "[Na+]"] {
            vocab.encode(s);
        }
        vocab.freeze();
        let dir = std::env::temp_dir().join(format!("vocab-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("vocab.tsv");
        vocab.save(&path).unwrap();
        let loaded = Vocabulary::load(&path).unwrap();
        assert_eq!(loaded.len(), vocab.len());
        assert!(loaded.is_frozen());
        for s in ["C", "C C", "c1", "[Na+]"] {
            assert_eq!(loaded.lookup(s), vocab.lookup(s));
        }
        assert_eq!(loaded.content_hash(), vocab.content_hash());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empty_tokens_empty_features() {
        let mut vocab = Vocabulary::new();
        let set = ngram_featurize(&[], &NGramConfig::default_range(FeatureMode::Set), &mut vocab);
        assert!(set.is_empty());
    }

    #[test]
    fn sparse_triplet_export() {
        let mut vocab = Vocabulary::new();
        let cfg = NGramConfig::new(1, 1, FeatureMode::Count).unwrap();
        let sets = vec![
            ngram_featurize(&toks("CCO"), &cfg, &mut vocab),
            ngram_featurize(&toks("OO"), &cfg, &mut vocab),
        ];
        let csv = export_sparse_triplets(&sets);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "row,col,value");
        assert!(lines.contains(&"0,2,2")); // two C's in row 0
        assert!(lines.contains(&"1,3,2")); // two O's in row 1
    }
}
