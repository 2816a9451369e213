//! In-context learning as Bayesian selection over example pairs.
//!
//! A [`TokenCorpus`] holds few-shot `(q, a)` pairs, each with explicit
//! links from query tokens `t` to answer tokens `s`. A new query is
//! normalized against the corpus, greedily decomposed into blocks each
//! covered by one pair, and the answer is assembled from the links of the
//! covered tokens.
//!
//! Answer tokens are `key:value` strings; a DSL answer such as
//! `{'orderby': ['runs'], 'type': ['team']}` is the token set
//! `{orderby:runs, type:team}`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::conjugate::DirichletParams;
use crate::embedding::{EmbeddingAnchor, EmbeddingMap, Metric};
use crate::error::{Error, Result};
use crate::sequence::{ln_generative_probability, AlphaTotal, TokenSet};

/// Bundled English stopword list.
pub const DEFAULT_STOPWORDS: &str = include_str!("../fixtures/stopwords-en.txt");

/// Symmetric prior concentration used when nothing else is configured.
pub const DEFAULT_ALPHA: f64 = 0.3;

const PAD_TOKEN: &str = "<pad>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub t: String,
    pub s: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDoc {
    pub q: String,
    pub a: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub links: Vec<Link>,
}

/// On-disk corpus layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub pairs: Vec<PairDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<Vec<String>>,
    #[serde(default)]
    pub synonyms: BTreeMap<String, String>,
    /// Query to run when none is given explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pair {
    pub query: String,
    /// Distinct query tokens in order of appearance.
    pub tokens: Vec<String>,
    /// Answer tokens in canonical order.
    pub answer: Vec<String>,
    pub links: Vec<Link>,
}

impl Pair {
    fn links_for<'a>(&'a self, t: &'a str) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.iter().filter(move |l| l.t == t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenCorpus {
    doc: CorpusDoc,
    pairs: Vec<Pair>,
    stopwords: BTreeSet<String>,
    synonyms: BTreeMap<String, String>,
    /// Lowercased word sequence -> canonical token.
    inventory: BTreeMap<Vec<String>, String>,
    max_compound: usize,
    /// Lowercased query-set token -> canonical form.
    query_set: BTreeMap<String, String>,
}

fn split_words(text: &str) -> Vec<&str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .collect()
}

fn lower_words(text: &str) -> Vec<String> {
    split_words(text).iter().map(|w| w.to_lowercase()).collect()
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Splits `key:value` at the first colon.
pub fn split_answer_token(s: &str) -> Option<(&str, &str)> {
    s.split_once(':')
}

fn answer_tokens(a: &BTreeMap<String, Vec<String>>) -> Vec<String> {
    let mut out = Vec::new();
    for (k, vs) in a {
        let vs: BTreeSet<&String> = vs.iter().collect();
        for v in vs {
            out.push(format!("{k}:{v}"));
        }
    }
    out
}

/// Renders answer tokens as a DSL dictionary with sorted keys and values.
pub fn canonical_dsl<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    let mut groups: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for tok in tokens {
        let (k, v) = split_answer_token(tok).unwrap_or((tok, ""));
        groups.entry(k).or_default().insert(v);
    }
    let body: Vec<String> = groups
        .iter()
        .map(|(k, vs)| {
            let vals: Vec<String> = vs.iter().map(|v| format!("'{v}'")).collect();
            format!("'{k}': [{}]", vals.join(", "))
        })
        .collect();
    format!("{{{}}}", body.join(", "))
}

impl TokenCorpus {
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: CorpusDoc =
            serde_json::from_str(s).map_err(|e| Error::InvalidCorpus(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: CorpusDoc) -> Result<Self> {
        if doc.pairs.is_empty() {
            return Err(Error::InvalidCorpus("corpus has no pairs".into()));
        }
        let stopwords = match &doc.stopwords {
            Some(list) => list.iter().map(|w| w.trim().to_lowercase()).collect(),
            None => parse_stopwords(DEFAULT_STOPWORDS),
        };
        let synonyms: BTreeMap<String, String> = doc
            .synonyms
            .iter()
            .map(|(k, v)| (lower_words(k).join(" "), v.clone()))
            .collect();

        let mut inventory = BTreeMap::new();
        let entries = doc
            .pairs
            .iter()
            .flat_map(|p| p.links.iter().map(|l| l.t.as_str()))
            .chain(doc.synonyms.keys().map(String::as_str));
        for t in entries {
            let words = lower_words(t);
            if words.is_empty() {
                return Err(Error::InvalidCorpus(format!("empty link token {t:?}")));
            }
            inventory.entry(words).or_insert_with(|| t.to_string());
        }
        let max_compound = inventory.keys().map(Vec::len).max().unwrap_or(1);

        let mut corpus = Self {
            doc: doc.clone(),
            pairs: Vec::new(),
            stopwords,
            synonyms,
            inventory,
            max_compound,
            query_set: BTreeMap::new(),
        };

        for (i, p) in doc.pairs.iter().enumerate() {
            let tokens = dedup(corpus.tokenize(&p.q));
            if tokens.is_empty() {
                return Err(Error::InvalidCorpus(format!("pair {i} has an empty query")));
            }
            let answer = answer_tokens(&p.a);
            if answer.is_empty() {
                return Err(Error::InvalidCorpus(format!(
                    "pair {i} has an empty answer"
                )));
            }
            for l in &p.links {
                if !tokens.contains(&l.t) {
                    return Err(Error::InvalidCorpus(format!(
                        "pair {i}: link token {:?} is not a token of {:?}",
                        l.t, p.q
                    )));
                }
                if !answer.contains(&l.s) {
                    return Err(Error::InvalidCorpus(format!(
                        "pair {i}: link target {:?} is not in the answer",
                        l.s
                    )));
                }
            }
            corpus.pairs.push(Pair {
                query: p.q.clone(),
                tokens,
                answer,
                links: p.links.clone(),
            });
        }
        for p in &corpus.pairs {
            for t in &p.tokens {
                corpus
                    .query_set
                    .entry(t.to_lowercase())
                    .or_insert_with(|| t.clone());
            }
        }
        Ok(corpus)
    }

    pub fn doc(&self) -> &CorpusDoc {
        &self.doc
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn default_query(&self) -> Option<&str> {
        self.doc.query.as_deref()
    }

    /// Copy of the corpus with pair `index` dropped.
    pub fn without_pair(&self, index: usize) -> Result<Self> {
        if index >= self.pairs.len() {
            return Err(Error::param(format!(
                "pair index {index} out of range for {} pairs",
                self.pairs.len()
            )));
        }
        let mut doc = self.doc.clone();
        doc.pairs.remove(index);
        Self::from_doc(doc)
    }

    /// The query token set: every token of every example query.
    pub fn query_set(&self) -> BTreeSet<String> {
        self.query_set.values().cloned().collect()
    }

    pub fn in_query_set(&self, token: &str) -> bool {
        self.query_set.contains_key(&token.to_lowercase())
    }

    fn canonical_in_query_set(&self, token: &str) -> Option<&String> {
        self.query_set.get(&token.to_lowercase())
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(&token.to_lowercase())
    }

    /// Longest-match compound tokenization with stopwords removed.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let words = split_words(text);
        let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let longest = self.max_compound.min(words.len() - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|len| self.inventory.get(&lower[i..i + len]).map(|t| (len, t)));
            match hit {
                Some((len, t)) => {
                    out.push(t.clone());
                    i += len;
                }
                None => {
                    out.push(words[i].to_string());
                    i += 1;
                }
            }
        }
        out.retain(|t| !self.is_stopword(t));
        out
    }
}

fn dedup(tokens: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokens
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// How a query token was mapped into the corpus vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Exact,
    Synonym,
    /// Nearest lexical match: a compound of the query set containing the word.
    Fallback,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryToken {
    pub original: String,
    pub token: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedQuery {
    pub entries: Vec<QueryToken>,
}

impl NormalizedQuery {
    /// Distinct normalized tokens in order of appearance.
    pub fn tokens(&self) -> Vec<String> {
        dedup(self.entries.iter().map(|e| e.token.clone()).collect())
    }

    pub fn substitutions(&self) -> impl Iterator<Item = &QueryToken> {
        self.entries
            .iter()
            .filter(|e| matches!(e.origin, Origin::Synonym | Origin::Fallback))
    }

    pub fn unresolved(&self) -> impl Iterator<Item = &QueryToken> {
        self.entries
            .iter()
            .filter(|e| e.origin == Origin::Unresolved)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub lexical_fallback: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            lexical_fallback: true,
        }
    }
}

pub fn normalize_query(query: &str, corpus: &TokenCorpus) -> NormalizedQuery {
    normalize_query_with(query, corpus, NormalizeOptions::default())
}

pub fn normalize_query_with(
    query: &str,
    corpus: &TokenCorpus,
    opts: NormalizeOptions,
) -> NormalizedQuery {
    let entries = corpus
        .tokenize(query)
        .into_iter()
        .map(|original| resolve(&original, corpus, opts))
        .collect();
    NormalizedQuery { entries }
}

fn resolve(original: &str, corpus: &TokenCorpus, opts: NormalizeOptions) -> QueryToken {
    let entry = |token: &str, origin| QueryToken {
        original: original.to_string(),
        token: token.to_string(),
        origin,
    };
    if let Some(t) = corpus.canonical_in_query_set(original) {
        return entry(t, Origin::Exact);
    }
    let key = lower_words(original).join(" ");
    if let Some(target) = corpus.synonyms.get(&key) {
        if let Some(t) = corpus.canonical_in_query_set(target) {
            return entry(t, Origin::Synonym);
        }
    }
    if opts.lexical_fallback {
        let words = lower_words(original);
        let nearest = corpus
            .query_set
            .values()
            .filter(|t| {
                let tw = lower_words(t);
                words.iter().all(|w| tw.contains(w))
            })
            .min_by_key(|t| (lower_words(t).len(), t.to_lowercase()));
        if let Some(t) = nearest {
            return entry(t, Origin::Fallback);
        }
    }
    entry(original, Origin::Unresolved)
}

/// Per-token Dirichlet concentrations: a default plus explicit overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenPrior {
    pub default: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl Default for TokenPrior {
    fn default() -> Self {
        Self::symmetric(DEFAULT_ALPHA)
    }
}

impl TokenPrior {
    pub fn symmetric(alpha: f64) -> Self {
        Self {
            default: alpha,
            overrides: BTreeMap::new(),
        }
    }

    pub fn dirichlet(&self, vocab: &Vocabulary) -> Result<DirichletParams> {
        DirichletParams::new(
            vocab
                .tokens
                .iter()
                .map(|t| *self.overrides.get(t).unwrap_or(&self.default))
                .collect(),
        )
    }
}

/// Token index space for one decomposition: the query set of the corpus
/// followed by normalized query tokens outside it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vocabulary {
    pub tokens: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn build(corpus: &TokenCorpus, query: &[String]) -> Self {
        let mut tokens: Vec<String> = corpus.query_set().into_iter().collect();
        let extra: BTreeSet<&String> = query.iter().filter(|t| !tokens.contains(t)).collect();
        tokens.extend(extra.into_iter().cloned());
        if tokens.len() < 2 {
            tokens.push(PAD_TOKEN.to_string());
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    fn set<'a>(&self, tokens: impl IntoIterator<Item = &'a String>) -> TokenSet {
        tokens
            .into_iter()
            .map(|t| self.index[t])
            .collect::<BTreeSet<usize>>()
            .into()
    }

    fn indicator<'a>(&self, tokens: impl IntoIterator<Item = &'a String>) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        for t in tokens {
            v[self.index[t]] = 1.0;
        }
        v
    }
}

/// How candidate pairs are ranked against the residual query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scorer {
    /// `ln P(q_i | residual)` under the Dirichlet prior.
    #[default]
    Generative,
    /// Interpolated weight of pair `i` from a cosine embedding map whose
    /// anchors are the bag-of-token vectors of the example queries.
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub pair: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub pair: usize,
    pub tokens: Vec<String>,
    pub score: f64,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub scorer: Scorer,
    pub blocks: Vec<Block>,
    pub residual: Vec<String>,
}

impl Decomposition {
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Greedy decomposition: repeatedly pick the best-scoring pair overlapping
/// the residual, carve off the overlap, and stop when the residual is empty
/// or no pair overlaps it. Ties go to the lowest pair index.
pub fn decompose(
    query: &[String],
    corpus: &TokenCorpus,
    prior: &TokenPrior,
    scorer: Scorer,
) -> Result<Decomposition> {
    let query = dedup(query.to_vec());
    let vocab = Vocabulary::build(corpus, &query);
    let params = prior.dirichlet(&vocab)?;
    let pairs = corpus.pairs();
    let embedding = match scorer {
        Scorer::Embedding => Some(pair_embedding_map(corpus, &vocab)?),
        Scorer::Generative => None,
    };

    let mut residual = query.clone();
    let mut blocks = Vec::new();
    while !residual.is_empty() {
        let overlapping: Vec<usize> = (0..pairs.len())
            .filter(|&i| pairs[i].tokens.iter().any(|t| residual.contains(t)))
            .collect();
        if overlapping.is_empty() {
            break;
        }
        let candidates: Vec<Candidate> = match &embedding {
            None => {
                let t = vocab.set(&residual);
                overlapping
                    .iter()
                    .map(|&i| {
                        let tstar = vocab.set(&pairs[i].tokens);
                        ln_generative_probability(&params, &tstar, &t, AlphaTotal::FullVocabulary)
                            .map(|score| Candidate { pair: i, score })
                    })
                    .collect::<Result<_>>()?
            }
            Some(map) => {
                let weights = map.interpolate(&vocab.indicator(&residual), pairs.len())?;
                overlapping
                    .iter()
                    .map(|&i| Candidate {
                        pair: i,
                        score: weights[i],
                    })
                    .collect()
            }
        };
        let best = candidates
            .iter()
            .fold(None::<&Candidate>, |acc, c| match acc {
                Some(b) if b.score >= c.score => Some(b),
                _ => Some(c),
            })
            .expect("at least one candidate");
        let pair = &pairs[best.pair];
        let (covered, rest): (Vec<String>, Vec<String>) =
            residual.into_iter().partition(|t| pair.tokens.contains(t));
        blocks.push(Block {
            pair: best.pair,
            tokens: covered,
            score: best.score,
            candidates: candidates.clone(),
        });
        residual = rest;
    }

    let d = Decomposition {
        scorer,
        blocks,
        residual,
    };
    assert_partition(&d, &query);
    Ok(d)
}

fn pair_embedding_map(corpus: &TokenCorpus, vocab: &Vocabulary) -> Result<EmbeddingMap> {
    let k = corpus.pairs().len();
    let anchors = corpus
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d = vec![0.0; k];
            d[i] = 1.0;
            EmbeddingAnchor::new(vocab.indicator(&p.tokens), d)
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingMap::new(anchors, Metric::Cosine)
}

fn assert_partition(d: &Decomposition, query: &[String]) {
    let mut seen = BTreeSet::new();
    for t in d.blocks.iter().flat_map(|b| &b.tokens).chain(&d.residual) {
        assert!(seen.insert(t), "token {t:?} appears in two blocks");
    }
    let q: BTreeSet<&String> = query.iter().collect();
    assert_eq!(seen, q, "blocks and residual do not cover the query");
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerItem {
    pub s: String,
    pub pair: usize,
    pub t: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct AssembledAnswer {
    pub items: Vec<AnswerItem>,
}

impl AssembledAnswer {
    pub fn tokens(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.s.as_str()).collect()
    }

    pub fn token_set(&self) -> BTreeSet<String> {
        self.items.iter().map(|i| i.s.clone()).collect()
    }

    pub fn dsl(&self) -> String {
        canonical_dsl(self.tokens())
    }
}

/// Collects, block by block, the answer tokens of the selected pair that are
/// linked from a covered query token.
pub fn construct_answer(d: &Decomposition, corpus: &TokenCorpus) -> Result<AssembledAnswer> {
    let mut items: Vec<AnswerItem> = Vec::new();
    for block in &d.blocks {
        let pair = corpus
            .pairs()
            .get(block.pair)
            .ok_or_else(|| Error::param(format!("pair {} not in corpus", block.pair)))?;
        for t in &block.tokens {
            if pair.links_for(t).next().is_none() {
                return Err(Error::IncompleteCorrespondence {
                    token: t.clone(),
                    pair: block.pair,
                });
            }
        }
        for s in &pair.answer {
            if items.iter().any(|i| &i.s == s) {
                continue;
            }
            let link = pair
                .links
                .iter()
                .find(|l| &l.s == s && block.tokens.contains(&l.t));
            if let Some(l) = link {
                items.push(AnswerItem {
                    s: s.clone(),
                    pair: block.pair,
                    t: l.t.clone(),
                });
            }
        }
    }
    Ok(AssembledAnswer { items })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A query token that is not in the example query set; `resolved_as` is
    /// the lexical stand-in, if one was picked.
    OutsideQuerySet {
        token: String,
        resolved_as: Option<String>,
    },
    /// A token that no example pair links to an answer token.
    NoCorrespondence { token: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumption1Report {
    pub satisfied: bool,
    pub violations: Vec<Violation>,
}

/// Every normalized query token must come from the example queries
/// (directly or via a declared synonym) and be linked in some pair.
pub fn check_assumption1(query: &NormalizedQuery, corpus: &TokenCorpus) -> Assumption1Report {
    let mut violations = Vec::new();
    let mut flagged = BTreeSet::new();
    for e in &query.entries {
        match e.origin {
            Origin::Exact | Origin::Synonym => {}
            Origin::Fallback | Origin::Unresolved => {
                if flagged.insert(e.original.clone()) {
                    violations.push(Violation::OutsideQuerySet {
                        token: e.original.clone(),
                        resolved_as: (e.origin == Origin::Fallback).then(|| e.token.clone()),
                    });
                }
            }
        }
    }
    for t in query.tokens() {
        let linked = corpus
            .pairs()
            .iter()
            .any(|p| p.links_for(&t).next().is_some());
        if !linked && corpus.in_query_set(&t) {
            violations.push(Violation::NoCorrespondence { token: t });
        }
    }
    Assumption1Report {
        satisfied: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IclReport {
    pub query: String,
    pub normalized: NormalizedQuery,
    pub vocabulary_size: usize,
    pub decomposition: Decomposition,
    pub answer: AssembledAnswer,
    pub dsl: String,
    pub assumption1: Assumption1Report,
    /// True when the answer was assembled despite Assumption 1 failing.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IclOptions {
    pub prior: TokenPrior,
    pub scorer: Scorer,
    pub normalize: NormalizeOptions,
}

/// Normalize, check, decompose and assemble in one call.
pub fn run_icl(query: &str, corpus: &TokenCorpus, opts: &IclOptions) -> Result<IclReport> {
    let normalized = normalize_query_with(query, corpus, opts.normalize);
    let assumption1 = check_assumption1(&normalized, corpus);
    let tokens = normalized.tokens();
    let vocabulary_size = Vocabulary::build(corpus, &tokens).len();
    let decomposition = decompose(&tokens, corpus, &opts.prior, opts.scorer)?;
    let answer = construct_answer(&decomposition, corpus)?;
    Ok(IclReport {
        query: query.to_string(),
        dsl: answer.dsl(),
        degraded: !assumption1.satisfied,
        normalized,
        vocabulary_size,
        decomposition,
        answer,
        assumption1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = include_str!("../fixtures/cricket-dsl-small.json");
    const QUERY: &str = "highest losing team total in Tournament0";

    fn small() -> TokenCorpus {
        TokenCorpus::from_json(SMALL).unwrap()
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn expected_completion() -> BTreeSet<String> {
        [
            "groupby:innings",
            "orderby:runs",
            "result:loss",
            "tournament:Tournament0",
            "type:team",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    #[test]
    fn compound_tokens_and_stopwords() {
        let c = small();
        assert_eq!(
            c.pairs()[0].tokens,
            strings(&[
                "Tournament0",
                "team",
                "best win loss record",
                "losing the toss"
            ])
        );
        assert_eq!(
            c.pairs()[2].tokens,
            strings(&["biggest", "Tournament0", "total", "defeat"])
        );
        assert_eq!(c.tokenize("the of in with"), Vec::<String>::new());
    }

    #[test]
    fn stopword_list_keeps_content_words() {
        let sw = parse_stopwords(DEFAULT_STOPWORDS);
        for w in ["with", "after", "the", "in", "by", "of"] {
            assert!(sw.contains(w), "{w}");
        }
        for w in ["against", "lowest", "highest", "most", "each", "all"] {
            assert!(!sw.contains(w), "{w}");
        }
    }

    #[test]
    fn normalize_default_query() {
        let c = small();
        let n = normalize_query(QUERY, &c);
        assert_eq!(
            n.tokens(),
            strings(&["highest", "defeat", "team", "total", "Tournament0"])
        );
        let subs: Vec<_> = n.substitutions().collect();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].original, "losing");
        assert_eq!(subs[0].origin, Origin::Synonym);
        assert_eq!(n.unresolved().count(), 0);
        let q3: BTreeSet<&String> = c.pairs()[2].tokens.iter().collect();
        assert!(n.tokens().iter().any(|t| q3.contains(t)));
    }

    #[test]
    fn normalize_trivial_cases() {
        let c = small();
        let n = normalize_query("the in of", &c);
        assert!(n.entries.is_empty());
        let n = normalize_query("lowest team total", &c);
        assert_eq!(n.tokens(), c.pairs()[1].tokens);
        assert_eq!(n.substitutions().count(), 0);
    }

    #[test]
    fn generative_first_pick_matches_hand_scores() {
        let c = small();
        let q = normalize_query(QUERY, &c).tokens();
        let d = decompose(&q, &c, &TokenPrior::default(), Scorer::Generative).unwrap();
        // 11 query-set tokens, alpha* = 3.3, |residual| = 5
        let denom = |k: usize| (0..k).map(|j| 8.3 + j as f64).product::<f64>();
        let expected = [
            1.3f64.powi(2) * 0.3f64.powi(2) / denom(4),
            1.3f64.powi(2) * 0.3 / denom(3),
            1.3f64.powi(3) * 0.3 / denom(4),
            1.3 * 0.3f64.powi(2) / denom(3),
        ];
        let first = &d.blocks[0];
        for c in &first.candidates {
            assert!((c.score.exp() - expected[c.pair]).abs() < 1e-15);
        }
        assert_eq!(first.pair, 1);
        let order: Vec<usize> = d.blocks.iter().map(|b| b.pair).collect();
        assert_eq!(order, vec![1, 3, 2]);
        assert!(d.residual.is_empty());
    }

    #[test]
    fn embedding_scorer_selects_rephrased_pair_first() {
        let c = small();
        let q = normalize_query(QUERY, &c).tokens();
        let d = decompose(&q, &c, &TokenPrior::default(), Scorer::Embedding).unwrap();
        assert_eq!(d.blocks[0].pair, 2);
        let a = construct_answer(&d, &c).unwrap();
        assert_eq!(a.token_set(), expected_completion());
    }

    #[test]
    fn cricket_completion_is_assembled() {
        let c = small();
        let r = run_icl(QUERY, &c, &IclOptions::default()).unwrap();
        assert!(r.assumption1.satisfied);
        assert!(!r.degraded);
        assert_eq!(r.answer.token_set(), expected_completion());
        assert_eq!(
            r.dsl,
            "{'groupby': ['innings'], 'orderby': ['runs'], 'result': ['loss'], \
             'tournament': ['Tournament0'], 'type': ['team']}"
        );
    }

    #[test]
    fn removing_rephrased_pair_breaks_assumption() {
        let c = small().without_pair(2).unwrap();
        let r = run_icl(QUERY, &c, &IclOptions::default()).unwrap();
        assert!(!r.assumption1.satisfied);
        assert!(r.degraded);
        assert!(r
            .assumption1
            .violations
            .contains(&Violation::OutsideQuerySet {
                token: "losing".into(),
                resolved_as: Some("losing the toss".into()),
            }));
        let set = r.answer.token_set();
        assert!(set.contains("toss:lost"));
        assert!(!set.contains("result:loss"));
        let toss = r.answer.items.iter().find(|i| i.s == "toss:lost").unwrap();
        assert_eq!((toss.pair, toss.t.as_str()), (0, "losing the toss"));
    }

    #[test]
    fn without_fallback_token_stays_in_residual() {
        let c = small().without_pair(2).unwrap();
        let opts = IclOptions {
            normalize: NormalizeOptions {
                lexical_fallback: false,
            },
            ..Default::default()
        };
        let r = run_icl(QUERY, &c, &opts).unwrap();
        assert_eq!(r.decomposition.residual, strings(&["losing"]));
        assert!(!r.assumption1.satisfied);
    }

    #[test]
    fn verbatim_pair_query() {
        let c = small();
        for (i, p) in c.pairs().iter().enumerate() {
            let r = run_icl(&p.query, &c, &IclOptions::default()).unwrap();
            assert_eq!(r.decomposition.blocks.len(), 1, "pair {i}");
            assert_eq!(r.decomposition.blocks[0].pair, i);
            assert!(r.decomposition.residual.is_empty());
            let a: BTreeSet<String> = p.answer.iter().cloned().collect();
            assert_eq!(r.answer.token_set(), a);
        }
    }

    #[test]
    fn empty_query() {
        let c = small();
        let d = decompose(&[], &c, &TokenPrior::default(), Scorer::Generative).unwrap();
        assert!(d.is_empty() && d.residual.is_empty());
        assert!(construct_answer(&d, &c).unwrap().items.is_empty());
        let n = normalize_query("", &c);
        assert!(check_assumption1(&n, &c).satisfied);
    }

    fn disjoint_corpus() -> TokenCorpus {
        TokenCorpus::from_json(
            r#"{"pairs":[
                {"q":"red apple","a":{"colour":["red"],"fruit":["apple"]},
                 "links":[{"t":"red","s":"colour:red"},{"t":"apple","s":"fruit:apple"}]},
                {"q":"tall green tree","a":{"colour":["green"],"plant":["tree"],"size":["tall"]},
                 "links":[{"t":"tall","s":"size:tall"},{"t":"green","s":"colour:green"},{"t":"tree","s":"plant:tree"}]}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn disjoint_pairs_order_by_score() {
        let c = disjoint_corpus();
        let q = strings(&["red", "apple", "tall", "green", "tree"]);
        let prior = TokenPrior::default();
        let d = decompose(&q, &c, &prior, Scorer::Generative).unwrap();
        assert_eq!(d.blocks.len(), 2);
        // brute force over both orders from the closed form
        let vocab = Vocabulary::build(&c, &q);
        let params = prior.dirichlet(&vocab).unwrap();
        let score = |pair: usize, residual: &[String]| {
            ln_generative_probability(
                &params,
                &vocab.set(&c.pairs()[pair].tokens),
                &vocab.set(residual),
                AlphaTotal::FullVocabulary,
            )
            .unwrap()
        };
        let first = if score(0, &q) >= score(1, &q) { 0 } else { 1 };
        assert_eq!(d.blocks[0].pair, first);
        assert_eq!(d.blocks[1].pair, 1 - first);
    }

    #[test]
    fn stops_when_nothing_overlaps() {
        let c = disjoint_corpus();
        let q = strings(&["red", "banana"]);
        let d = decompose(&q, &c, &TokenPrior::default(), Scorer::Generative).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.residual, strings(&["banana"]));
    }

    #[test]
    fn missing_link_is_an_error() {
        let c = TokenCorpus::from_json(
            r#"{"pairs":[{"q":"red apple","a":{"colour":["red"]},
                "links":[{"t":"red","s":"colour:red"}]}]}"#,
        )
        .unwrap();
        let q = strings(&["red", "apple"]);
        let d = decompose(&q, &c, &TokenPrior::default(), Scorer::Generative).unwrap();
        assert_eq!(
            construct_answer(&d, &c).unwrap_err(),
            Error::IncompleteCorrespondence {
                token: "apple".into(),
                pair: 0
            }
        );
        let n = normalize_query("red apple", &c);
        let r = check_assumption1(&n, &c);
        assert_eq!(
            r.violations,
            vec![Violation::NoCorrespondence {
                token: "apple".into()
            }]
        );
    }

    #[test]
    fn corpus_validation() {
        let bad_link =
            r#"{"pairs":[{"q":"red","a":{"c":["red"]},"links":[{"t":"blue","s":"c:red"}]}]}"#;
        assert!(matches!(
            TokenCorpus::from_json(bad_link),
            Err(Error::InvalidCorpus(_))
        ));
        let bad_target =
            r#"{"pairs":[{"q":"red","a":{"c":["red"]},"links":[{"t":"red","s":"c:blue"}]}]}"#;
        assert!(TokenCorpus::from_json(bad_target).is_err());
        let empty_a = r#"{"pairs":[{"q":"red","a":{},"links":[]}]}"#;
        assert!(TokenCorpus::from_json(empty_a).is_err());
        assert!(TokenCorpus::from_json(r#"{"pairs":[]}"#).is_err());
        assert!(TokenCorpus::from_json("{").is_err());
    }

    #[test]
    fn canonical_dsl_sorts_keys_and_values() {
        assert_eq!(
            canonical_dsl([
                "type:team",
                "season:Season1",
                "season:Season0",
                "event:All Out"
            ]),
            "{'event': ['All Out'], 'season': ['Season0', 'Season1'], 'type': ['team']}"
        );
        assert_eq!(canonical_dsl([]), "{}");
    }

    #[test]
    fn large_fixture_loads_and_reports_unseen_tournament() {
        let c = TokenCorpus::from_json(include_str!("../fixtures/cricket-dsl-large.json")).unwrap();
        assert_eq!(c.pairs().len(), 8);
        let r = run_icl(c.default_query().unwrap(), &c, &IclOptions::default()).unwrap();
        assert!(r
            .normalized
            .unresolved()
            .any(|e| e.original == "Tournament1"));
        assert!(!r.assumption1.satisfied);
        assert_eq!(r.decomposition.residual, strings(&["Tournament1"]));
        let set = r.answer.token_set();
        for s in [
            "batsman:Person0",
            "overs_type:powerplay",
            "tournament:Tournament0",
        ] {
            assert!(set.contains(s), "{s}");
        }
    }

    #[test]
    fn prior_overrides() {
        let c = small();
        let q = strings(&["team"]);
        let vocab = Vocabulary::build(&c, &q);
        let mut prior = TokenPrior::symmetric(0.5);
        prior.overrides.insert("team".into(), 2.0);
        let p = prior.dirichlet(&vocab).unwrap();
        assert_eq!(p.alphas()[vocab.index_of("team").unwrap()], 2.0);
        assert!((p.total() - (0.5 * (vocab.len() - 1) as f64 + 2.0)).abs() < 1e-12);
        assert!(TokenPrior::symmetric(0.0).dirichlet(&vocab).is_err());
    }
}
