//! Two-stage text knowledge extraction.
//!
//! 1. Coarse filtration: canonical folding of the page text, then key-term
//!    matching against a [`Lexicon`] to cut short n-gram [`Candidate`]s.
//! 2. Label classification: each candidate n-gram is scored against every
//!    label of its entity type through a [`ClassifierPort`].
//!
//! A candidate whose key term is the label's own name yields a coarse
//! relation with the fixed coarse weight; the classifier's best label yields
//! a classifier relation with its score. Relations for the same
//! (manufacturer, label) keep the maximum score.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{canonical_id, canonical_name, Edge, Graph, GraphError, Node, NodeLabel, RelationType};
use crate::http::JsonClient;
use crate::metrics::{self, ConfusionCounts, Curves, Rates};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("classifier unavailable: {0}")]
    ClassifierUnavailable(String),
    #[error("gold set is empty")]
    EmptyGold,
    #[error("label list is empty")]
    EmptyLabels,
    #[error("lexicon conflict: {0}")]
    LexiconConflict(String),
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Service,
    Certification,
    Location,
}

impl EntityType {
    pub const ALL: [EntityType; 3] = [EntityType::Service, EntityType::Certification, EntityType::Location];

    pub fn node_label(self) -> NodeLabel {
        match self {
            EntityType::Service => NodeLabel::Service,
            EntityType::Certification => NodeLabel::Certification,
            EntityType::Location => NodeLabel::Location,
        }
    }

    pub fn relation(self) -> RelationType {
        match self {
            EntityType::Service => RelationType::Provides,
            EntityType::Certification => RelationType::CertifiedWith,
            EntityType::Location => RelationType::LocatedIn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Service => "service",
            EntityType::Certification => "certification",
            EntityType::Location => "location",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "service" => Ok(EntityType::Service),
            "certification" => Ok(EntityType::Certification),
            "location" => Ok(EntityType::Location),
            other => Err(format!("unknown entity type `{other}`")),
        }
    }
}

/// Canonical folding: lowercase; whitespace, `_` and `-` become a single
/// space; any other non-alphanumeric character is dropped.
pub fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() || c == '_' || c == '-' {
            pending_space = true;
            continue;
        }
        for lc in c.to_lowercase() {
            if lc.is_alphanumeric() {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(lc);
            }
        }
    }
    out
}

/// Classifier-side tokens: folded words split at letter/digit boundaries
/// with `-ing` / `-ment` removed.
pub fn stem_tokens(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for word in fold(text).split(' ').filter(|w| !w.is_empty()) {
        let mut piece = String::new();
        let mut last_digit: Option<bool> = None;
        for c in word.chars() {
            let digit = c.is_ascii_digit();
            if last_digit.is_some_and(|d| d != digit) {
                out.insert(stem(&piece));
                piece.clear();
            }
            piece.push(c);
            last_digit = Some(digit);
        }
        if !piece.is_empty() {
            out.insert(stem(&piece));
        }
    }
    out
}

fn stem(word: &str) -> String {
    for suffix in ["ing", "ment"] {
        if let Some(base) = word.strip_suffix(suffix) {
            if base.chars().count() >= 3 {
                return base.to_string();
            }
        }
    }
    word.to_string()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    /// Folded key-term tokens.
    pub tokens: Vec<String>,
    pub label: String,
    /// True when the term is the label's own folded name.
    pub exact: bool,
}

/// Key terms and labels per entity type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    terms: BTreeMap<EntityType, Vec<Term>>,
    labels: BTreeMap<EntityType, Vec<String>>,
    aliases: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a label with its alias spellings. Fails if any folded term is
    /// already bound to a different label of the same type.
    pub fn add_label(&mut self, entity: EntityType, label: &str, aliases: &[&str]) -> Result<(), ExtractError> {
        let label = label.trim().to_string();
        if fold(&label).is_empty() {
            return Err(ExtractError::LexiconConflict(format!("empty label for {entity}")));
        }
        let terms = self.terms.entry(entity).or_default();
        let mut new_terms = Vec::new();
        for (i, raw) in std::iter::once(label.as_str()).chain(aliases.iter().copied()).enumerate() {
            let folded = fold(raw);
            if folded.is_empty() {
                continue;
            }
            let tokens: Vec<String> = folded.split(' ').map(String::from).collect();
            if let Some(t) = terms.iter().chain(new_terms.iter()).find(|t: &&Term| t.tokens == tokens) {
                if t.label != label {
                    return Err(ExtractError::LexiconConflict(format!(
                        "`{raw}` maps to both `{}` and `{label}`",
                        t.label
                    )));
                }
                continue;
            }
            new_terms.push(Term {
                tokens,
                label: label.clone(),
                exact: i == 0,
            });
        }
        terms.extend(new_terms);
        let labels = self.labels.entry(entity).or_default();
        if !labels.contains(&label) {
            labels.push(label.clone());
        }
        let al = self.aliases.entry(alias_key(entity, &label)).or_default();
        for a in aliases {
            if !al.iter().any(|x| x == a) {
                al.push(a.to_string());
            }
        }
        Ok(())
    }

    /// Vocabulary shipped with the crate.
    pub fn builtin() -> Self {
        let mut lx = Lexicon::new();
        for (name, _, aliases) in crate::vocab::SERVICES {
            lx.add_label(EntityType::Service, name, aliases).expect("builtin lexicon");
        }
        for (name, aliases) in crate::vocab::CERTIFICATIONS {
            lx.add_label(EntityType::Certification, name, aliases).expect("builtin lexicon");
        }
        for (name, aliases) in crate::vocab::LOCATIONS {
            lx.add_label(EntityType::Location, name, aliases).expect("builtin lexicon");
        }
        lx
    }

    /// Labels from the graph's service/certification/location nodes, with
    /// built-in aliases attached where the names are known.
    pub fn from_graph(graph: &Graph) -> Result<Self, ExtractError> {
        let mut lx = Lexicon::new();
        for entity in EntityType::ALL {
            for n in graph.nodes_with_label(entity.node_label()) {
                let aliases = crate::vocab::aliases_for(n.label, &n.id);
                lx.add_label(entity, &n.name, aliases)?;
            }
        }
        Ok(lx)
    }

    pub fn labels(&self, entity: EntityType) -> &[String] {
        self.labels.get(&entity).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self, entity: EntityType) -> &[Term] {
        self.terms.get(&entity).map_or(&[], Vec::as_slice)
    }

    pub fn aliases(&self, entity: EntityType, label: &str) -> &[String] {
        self.aliases.get(&alias_key(entity, label)).map_or(&[], Vec::as_slice)
    }

    pub fn contains_label(&self, entity: EntityType, label: &str) -> bool {
        self.labels(entity).iter().any(|l| l == label)
    }
}

fn alias_key(entity: EntityType, label: &str) -> String {
    format!("{}\u{1f}{}", entity.as_str(), label)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub service_cutoff: f64,
    pub certification_cutoff: f64,
    pub location_cutoff: f64,
    pub coarse_weight: f64,
    /// Score given to never-extracted pairs when drawing evaluation curves.
    pub absent_score: f64,
    pub max_ngram: usize,
    /// Tokens of context kept on each side of a key-term match.
    pub context_tokens: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            service_cutoff: 0.40,
            certification_cutoff: 0.25,
            location_cutoff: 0.40,
            coarse_weight: 0.8,
            absent_score: 0.2,
            max_ngram: 9,
            context_tokens: 1,
        }
    }
}

impl ExtractionConfig {
    pub fn cutoff(&self, entity: EntityType) -> f64 {
        match entity {
            EntityType::Service => self.service_cutoff,
            EntityType::Certification => self.certification_cutoff,
            EntityType::Location => self.location_cutoff,
        }
    }

    pub fn with_cutoffs(mut self, service: f64, certification: f64, location: f64) -> Self {
        self.service_cutoff = service;
        self.certification_cutoff = certification;
        self.location_cutoff = location;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub source: String,
    pub entity: EntityType,
    pub ngram: String,
    pub term: String,
    pub label: String,
    /// Token offset of the key-term match in the folded text.
    pub position: usize,
    pub exact: bool,
}

/// Key-term matches over the folded text, ordered by position. A match
/// nested inside a longer match of the same entity type is dropped.
pub fn coarse_filter(source: &str, text: &str, lexicon: &Lexicon, config: &ExtractionConfig) -> Vec<Candidate> {
    let folded = fold(text);
    let tokens: Vec<&str> = folded.split(' ').filter(|t| !t.is_empty()).collect();
    let max_n = config.max_ngram.max(1);
    let mut out = Vec::new();
    for entity in EntityType::ALL {
        let terms = lexicon.terms(entity);
        let mut by_first: HashMap<&str, Vec<&Term>> = HashMap::new();
        for t in terms.iter().filter(|t| t.tokens.len() <= max_n) {
            by_first.entry(t.tokens[0].as_str()).or_default().push(t);
        }
        let mut spans: Vec<(usize, usize, &Term)> = Vec::new();
        for i in 0..tokens.len() {
            if let Some(cands) = by_first.get(tokens[i]) {
                for t in cands {
                    let end = i + t.tokens.len();
                    if end <= tokens.len() && t.tokens.iter().zip(&tokens[i..end]).all(|(a, b)| a == b) {
                        spans.push((i, end, t));
                    }
                }
            }
        }
        let kept: Vec<&(usize, usize, &Term)> = spans
            .iter()
            .filter(|(s, e, _)| {
                !spans
                    .iter()
                    .any(|(s2, e2, _)| s2 <= s && e <= e2 && (e2 - s2) > (e - s))
            })
            .collect();
        for &&(start, end, term) in &kept {
            let room = max_n.saturating_sub(end - start);
            let ctx = config.context_tokens.min(room / 2);
            let lo = start.saturating_sub(ctx);
            let hi = (end + ctx).min(tokens.len());
            out.push(Candidate {
                source: source.to_string(),
                entity,
                ngram: tokens[lo..hi].join(" "),
                term: term.tokens.join(" "),
                label: term.label.clone(),
                position: start,
                exact: term.exact,
            });
        }
    }
    out.sort_by(|a, b| {
        a.position
            .cmp(&b.position)
            .then(a.entity.cmp(&b.entity))
            .then(b.term.len().cmp(&a.term.len()))
    });
    out
}

/// Scores a text against candidate labels; one score in [0, 1] per label.
pub trait ClassifierPort: Send + Sync {
    fn scores(&self, text: &str, labels: &[String]) -> Result<Vec<f64>, ExtractError>;

    fn name(&self) -> &str;
}

/// Deterministic fallback: max token-set Jaccard between the text and any
/// spelling of the label.
#[derive(Debug, Clone)]
pub struct LexicalClassifier {
    spellings: HashMap<String, Vec<BTreeSet<String>>>,
}

impl LexicalClassifier {
    pub fn new(lexicon: &Lexicon) -> Self {
        let mut spellings: HashMap<String, Vec<BTreeSet<String>>> = HashMap::new();
        for entity in EntityType::ALL {
            for label in lexicon.labels(entity) {
                let entry = spellings.entry(label.clone()).or_default();
                entry.push(stem_tokens(label));
                for a in lexicon.aliases(entity, label) {
                    entry.push(stem_tokens(a));
                }
            }
        }
        LexicalClassifier { spellings }
    }

    fn score_one(&self, text: &BTreeSet<String>, label: &str) -> f64 {
        let own = [stem_tokens(label)];
        let spellings = self.spellings.get(label).map_or(&own[..], Vec::as_slice);
        spellings.iter().map(|s| jaccard(text, s)).fold(0.0, f64::max)
    }
}

impl ClassifierPort for LexicalClassifier {
    fn scores(&self, text: &str, labels: &[String]) -> Result<Vec<f64>, ExtractError> {
        let toks = stem_tokens(text);
        Ok(labels.iter().map(|l| self.score_one(&toks, l)).collect())
    }

    fn name(&self) -> &str {
        "lexical"
    }
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    text: &'a str,
    labels: &'a [String],
}

#[derive(Deserialize)]
struct ClassifyResponse {
    scores: Vec<f64>,
}

/// Client for an external zero-shot classification service:
/// `POST {text, labels[]}` → `{scores[]}` aligned to `labels`.
#[derive(Debug)]
pub struct HttpClassifier {
    client: JsonClient,
}

impl HttpClassifier {
    pub fn new(url: &str, timeout: Duration, max_retries: u32, max_in_flight: usize) -> Self {
        HttpClassifier {
            client: JsonClient::new(url, timeout, max_retries, max_in_flight),
        }
    }
}

impl ClassifierPort for HttpClassifier {
    fn scores(&self, text: &str, labels: &[String]) -> Result<Vec<f64>, ExtractError> {
        let resp: ClassifyResponse = self
            .client
            .post(&ClassifyRequest { text, labels })
            .map_err(ExtractError::ClassifierUnavailable)?;
        if resp.scores.len() != labels.len() {
            return Err(ExtractError::ClassifierUnavailable(format!(
                "{} scores for {} labels",
                resp.scores.len(),
                labels.len()
            )));
        }
        if let Some(bad) = resp.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(ExtractError::ClassifierUnavailable(format!("score {bad} outside [0, 1]")));
        }
        Ok(resp.scores)
    }

    fn name(&self) -> &str {
        self.client.url()
    }
}

/// Scores one candidate's n-gram against `labels`, in label order.
pub fn classify(
    candidate: &Candidate,
    labels: &[String],
    classifier: &dyn ClassifierPort,
) -> Result<Vec<(String, f64)>, ExtractError> {
    if labels.is_empty() {
        return Err(ExtractError::EmptyLabels);
    }
    let scores = classifier.scores(&candidate.ngram, labels)?;
    Ok(labels.iter().cloned().zip(scores).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Coarse,
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRelation {
    pub manufacturer: String,
    pub entity: EntityType,
    pub label: String,
    pub score: f64,
    pub provenance: Provenance,
}

/// Coarse and classifier scores for every candidate, merged to the maximum
/// per (manufacturer, entity type, label) and kept in first-seen order. No
/// cutoff is applied.
pub fn score_candidates(
    candidates: &[Candidate],
    lexicon: &Lexicon,
    classifier: &dyn ClassifierPort,
    fallback: Option<&dyn ClassifierPort>,
    config: &ExtractionConfig,
) -> Result<Vec<ScoredRelation>, ExtractError> {
    let mut out: Vec<ScoredRelation> = Vec::new();
    let mut slot: HashMap<(String, EntityType, String), usize> = HashMap::new();
    let mut offer = |rel: ScoredRelation| {
        let key = (rel.manufacturer.clone(), rel.entity, rel.label.clone());
        match slot.get(&key) {
            Some(&i) if out[i].score >= rel.score => {}
            Some(&i) => out[i] = rel,
            None => {
                slot.insert(key, out.len());
                out.push(rel);
            }
        }
    };
    for c in candidates {
        let manufacturer = canonical_id(NodeLabel::Manufacturer, &c.source);
        if c.exact {
            offer(ScoredRelation {
                manufacturer: manufacturer.clone(),
                entity: c.entity,
                label: c.label.clone(),
                score: config.coarse_weight,
                provenance: Provenance::Coarse,
            });
        }
        let labels = lexicon.labels(c.entity);
        let scored = match classify(c, labels, classifier) {
            Ok(s) => s,
            Err(ExtractError::ClassifierUnavailable(e)) => match fallback {
                Some(f) => classify(c, labels, f)?,
                None => return Err(ExtractError::ClassifierUnavailable(e)),
            },
            Err(e) => return Err(e),
        };
        let best = scored
            .into_iter()
            .fold(None::<(String, f64)>, |acc, (l, s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((l, s)),
            });
        if let Some((label, score)) = best {
            if score > 0.0 {
                offer(ScoredRelation {
                    manufacturer,
                    entity: c.entity,
                    label,
                    score,
                    provenance: Provenance::Classifier,
                });
            }
        }
    }
    Ok(out)
}

/// Keeps relations whose score reaches the cutoff for their entity type.
pub fn apply_cutoffs(scored: &[ScoredRelation], config: &ExtractionConfig) -> Vec<ScoredRelation> {
    scored
        .iter()
        .filter(|r| r.score >= config.cutoff(r.entity))
        .cloned()
        .collect()
}

pub fn build_relations(
    candidates: &[Candidate],
    lexicon: &Lexicon,
    classifier: &dyn ClassifierPort,
    fallback: Option<&dyn ClassifierPort>,
    config: &ExtractionConfig,
) -> Result<Vec<ScoredRelation>, ExtractError> {
    let raw = score_candidates(candidates, lexicon, classifier, fallback, config)?;
    Ok(apply_cutoffs(&raw, config))
}

/// A directory of `<manufacturer-id>.txt` pages plus an optional `gold.tsv`.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    /// `(manufacturer id, page text)`, sorted by id.
    pub documents: Vec<(String, String)>,
    pub gold: BTreeSet<GoldPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoldPair {
    pub manufacturer: String,
    pub entity: EntityType,
    /// Canonical (lowercased) label name.
    pub label: String,
}

impl GoldPair {
    pub fn new(manufacturer: &str, entity: EntityType, label: &str) -> Self {
        GoldPair {
            manufacturer: canonical_id(NodeLabel::Manufacturer, manufacturer),
            entity,
            label: canonical_name(label),
        }
    }
}

pub fn parse_gold(text: &str) -> Result<BTreeSet<GoldPair>, ExtractError> {
    let mut gold = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("manufacturer")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [m, e, l] = cols[..] else {
            return Err(ExtractError::Corpus(format!("gold.tsv line {}: expected 3 columns", i + 1)));
        };
        let entity = e
            .parse()
            .map_err(|err| ExtractError::Corpus(format!("gold.tsv line {}: {err}", i + 1)))?;
        gold.insert(GoldPair::new(m, entity, l));
    }
    Ok(gold)
}

pub fn load_corpus(dir: &Path) -> Result<Corpus, ExtractError> {
    let mut documents = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| ExtractError::Corpus(format!("bad file name {}", path.display())))?;
        documents.push((canonical_id(NodeLabel::Manufacturer, stem), std::fs::read_to_string(&path)?));
    }
    documents.sort();
    let gold_path = dir.join("gold.tsv");
    let gold = if gold_path.exists() {
        parse_gold(&std::fs::read_to_string(gold_path)?)?
    } else {
        BTreeSet::new()
    };
    Ok(Corpus { documents, gold })
}

/// Extracts every document independently and concatenates the raw scored
/// relations in document order (no cutoff).
pub fn extract_corpus(
    corpus: &Corpus,
    lexicon: &Lexicon,
    classifier: &dyn ClassifierPort,
    fallback: Option<&dyn ClassifierPort>,
    config: &ExtractionConfig,
) -> Result<Vec<ScoredRelation>, ExtractError> {
    let per_doc: Vec<Result<Vec<ScoredRelation>, ExtractError>> = corpus
        .documents
        .par_iter()
        .map(|(id, text)| {
            let cands = coarse_filter(id, text, lexicon, config);
            score_candidates(&cands, lexicon, classifier, fallback, config)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_doc {
        out.extend(r?);
    }
    Ok(out)
}

/// Adds manufacturers and weighted edges for kept relations; labels must
/// resolve to existing nodes.
pub fn merge_into_graph(graph: &mut Graph, relations: &[ScoredRelation]) -> Result<usize, ExtractError> {
    let mut added = 0;
    for r in relations {
        let m = graph.add_node(Node::new(NodeLabel::Manufacturer, &r.manufacturer))?;
        let target = graph
            .find_by_name(r.entity.node_label(), &r.label)
            .map(|n| n.id.clone())
            .ok_or_else(|| GraphError::MissingEndpoint(r.label.clone()))?;
        let before = graph.edge_count();
        graph.add_edge(Edge::new(m, target, r.entity.relation(), r.score.clamp(0.0, 1.0)))?;
        added += graph.edge_count() - before;
    }
    Ok(added)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeEval {
    pub entity: Option<EntityType>,
    pub pairs: usize,
    pub counts: ConfusionCounts,
    pub rates: Rates,
    pub curves: Option<Curves>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub per_type: Vec<TypeEval>,
    pub overall: TypeEval,
}

/// Compares scored relations against gold pairs. The evaluated universe is
/// gold ∪ scored; unscored pairs take the absent score. A pair is predicted
/// positive when its score reaches the entity type's cutoff.
pub fn evaluate_extraction(
    scored: &[ScoredRelation],
    gold: &BTreeSet<GoldPair>,
    config: &ExtractionConfig,
) -> Result<ExtractionReport, ExtractError> {
    if gold.is_empty() {
        return Err(ExtractError::EmptyGold);
    }
    let mut universe: BTreeMap<GoldPair, f64> = BTreeMap::new();
    for g in gold {
        universe.insert(g.clone(), config.absent_score);
    }
    for r in scored {
        let key = GoldPair::new(&r.manufacturer, r.entity, &r.label);
        let slot = universe.entry(key).or_insert(r.score);
        *slot = slot.max(r.score);
    }
    let eval = |entity: Option<EntityType>| {
        let rows: Vec<(f64, bool, f64)> = universe
            .iter()
            .filter(|(k, _)| entity.is_none_or(|e| k.entity == e))
            .map(|(k, &s)| (s, gold.contains(k), config.cutoff(k.entity)))
            .collect();
        let mut counts = ConfusionCounts::default();
        for &(s, y, cut) in &rows {
            counts.record(s >= cut, y);
        }
        let pairs: Vec<(f64, bool)> = rows.iter().map(|&(s, y, _)| (s, y)).collect();
        TypeEval {
            entity,
            pairs: rows.len(),
            counts,
            rates: metrics::rates(counts),
            curves: metrics::roc_pr(&pairs).ok(),
        }
    };
    Ok(ExtractionReport {
        per_type: EntityType::ALL.iter().map(|&e| eval(Some(e))).collect(),
        overall: eval(None),
    })
}
