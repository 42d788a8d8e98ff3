use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::embed::Method;
use crate::extract::{coarse_filter, fold, EntityType, ExtractionConfig, Lexicon};
use crate::graph::{canonical_manufacturer_id, canonical_name, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentKind {
    GraphQuery,
    SimilarityRecommendation,
    MultiLabelTagging,
    Unsupported,
}

impl IntentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IntentKind::GraphQuery => "graph_query",
            IntentKind::SimilarityRecommendation => "similarity_recommendation",
            IntentKind::MultiLabelTagging => "multi_label_tagging",
            IntentKind::Unsupported => "unsupported",
        }
    }
}

impl std::fmt::Display for IntentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A vocabulary term found in a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub entity: EntityType,
    /// Display label from the lexicon.
    pub label: String,
    /// Canonical node id.
    pub id: String,
    pub negated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slots {
    /// Question order.
    pub mentions: Vec<Mention>,
    pub manufacturers: Vec<String>,
    pub k: Option<usize>,
    pub method: Option<Method>,
}

impl Slots {
    pub fn of(&self, entity: EntityType, negated: bool) -> impl Iterator<Item = &Mention> {
        self.mentions
            .iter()
            .filter(move |m| m.entity == entity && m.negated == negated)
    }

    pub fn manufacturer(&self) -> Option<&str> {
        self.manufacturers.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub kind: IntentKind,
    pub slots: Slots,
}

/// Question shapes the template engine can translate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    /// The question is already MSQL.
    Raw,
    ListManufacturers,
    CountManufacturers,
    CountByLocation,
    CountByService,
    SameServices,
    ManufacturerLocations,
    ManufacturerCertifications,
    ManufacturerHasCertification,
    ManufacturerServices,
}

impl Template {
    pub fn id(self) -> &'static str {
        match self {
            Template::Raw => "raw",
            Template::ListManufacturers => "list_manufacturers",
            Template::CountManufacturers => "count_manufacturers",
            Template::CountByLocation => "count_by_location",
            Template::CountByService => "count_by_service",
            Template::SameServices => "same_services",
            Template::ManufacturerLocations => "manufacturer_locations",
            Template::ManufacturerCertifications => "manufacturer_certifications",
            Template::ManufacturerHasCertification => "manufacturer_has_certification",
            Template::ManufacturerServices => "manufacturer_services",
        }
    }
}

const NEGATORS: &[&str] = &["not", "without", "no", "excluding", "except", "lacking"];

/// Rule-based router over a term lexicon.
#[derive(Debug, Clone)]
pub struct Router {
    lexicon: Lexicon,
    config: ExtractionConfig,
}

impl Default for Router {
    fn default() -> Self {
        Router::new(Lexicon::builtin())
    }
}

impl Router {
    pub fn new(lexicon: Lexicon) -> Self {
        Router {
            lexicon,
            config: ExtractionConfig {
                max_ngram: 16,
                ..Default::default()
            },
        }
    }

    /// Terms from the graph's own nodes, with built-in aliases.
    pub fn from_graph(graph: &Graph) -> Self {
        Lexicon::from_graph(graph).map(Router::new).unwrap_or_default()
    }

    pub fn slots(&self, question: &str) -> Slots {
        let folded = fold(question);
        let tokens: Vec<&str> = folded.split(' ').filter(|t| !t.is_empty()).collect();
        let mut manufacturers = manufacturer_ids(question);
        manufacturers.dedup();
        let man_tokens: BTreeSet<String> = manufacturers
            .iter()
            .flat_map(|m| fold(m).split(' ').map(String::from).collect::<Vec<_>>())
            .collect();

        let cands = coarse_filter("question", question, &self.lexicon, &self.config);
        let spans: Vec<(usize, usize)> = cands
            .iter()
            .map(|c| (c.position, c.position + c.term.split(' ').count()))
            .collect();
        let mut mentions = Vec::new();
        let mut claimed: Vec<(usize, usize)> = Vec::new();
        for (i, c) in cands.iter().enumerate() {
            let (s, e) = spans[i];
            // nested in a longer term of any type, or part of a domain name
            if spans.iter().any(|&(s2, e2)| s2 <= s && e <= e2 && e2 - s2 > e - s) {
                continue;
            }
            if tokens[s..e].iter().all(|t| man_tokens.contains(*t)) {
                continue;
            }
            let id = canonical_name(&c.label);
            if mentions.iter().any(|m: &Mention| m.entity == c.entity && m.id == id) {
                continue;
            }
            let mut negated = false;
            for j in (s.saturating_sub(3)..s).rev() {
                if claimed.iter().any(|&(_, ce)| ce == j + 1) || matches!(tokens[j], "and" | "but" | "or") {
                    break;
                }
                if NEGATORS.contains(&tokens[j]) {
                    negated = true;
                    break;
                }
            }
            claimed.push((s, e));
            mentions.push(Mention {
                entity: c.entity,
                label: c.label.clone(),
                id,
                negated,
            });
        }
        let k = tokens.iter().enumerate().find_map(|(i, t)| {
            let inside = claimed.iter().any(|&(s, e)| s <= i && i < e);
            (!inside && !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()))
                .then(|| t.parse::<usize>().ok())
                .flatten()
        });
        let method = if tokens.contains(&"graphsage") {
            Some(Method::GraphSage)
        } else if tokens.contains(&"node2vec") {
            Some(Method::Node2Vec)
        } else {
            None
        };
        Slots {
            mentions,
            manufacturers,
            k,
            method,
        }
    }

    /// Deterministic and total: every question gets exactly one intent.
    pub fn route(&self, question: &str) -> Intent {
        let slots = self.slots(question);
        let kind = classify_intent(question, &slots);
        Intent { kind, slots }
    }
}

fn classify_intent(question: &str, slots: &Slots) -> IntentKind {
    let f = fold(question);
    let words: Vec<&str> = f.split(' ').collect();
    let has = |w: &str| words.contains(&w);
    if slots.manufacturer().is_some() {
        if (has("label") || has("tag") || has("tags") || has("categories") || has("categorize"))
            && !has("located")
        {
            return IntentKind::MultiLabelTagging;
        }
        if has("similar") || f.contains("similar to") {
            return IntentKind::SimilarityRecommendation;
        }
    }
    if select_template(question, slots).is_some() {
        IntentKind::GraphQuery
    } else {
        IntentKind::Unsupported
    }
}

fn is_raw_query(question: &str) -> bool {
    question
        .trim_start()
        .get(..6)
        .is_some_and(|p| p.eq_ignore_ascii_case("match ") || p.eq_ignore_ascii_case("match("))
}

/// Picks the template for a graph-query question, if any fits.
pub fn select_template(question: &str, slots: &Slots) -> Option<Template> {
    if is_raw_query(question) {
        return Some(Template::Raw);
    }
    let f = fold(question);
    let words: Vec<&str> = f.split(' ').collect();
    let has = |w: &str| words.contains(&w);
    let has_phrase = |p: &str| format!(" {f} ").contains(&format!(" {p} "));
    let any_filter = !slots.mentions.is_empty();

    if slots.manufacturer().is_some() {
        if has_phrase("same service") || has_phrase("same services") {
            return Some(Template::SameServices);
        }
        if has("located") || has("locations") || has("location") || has("where") {
            return Some(Template::ManufacturerLocations);
        }
        if has("certified") || has("certifications") || has("certification") {
            return Some(if slots.of(EntityType::Certification, false).next().is_some() {
                Template::ManufacturerHasCertification
            } else {
                Template::ManufacturerCertifications
            });
        }
        if has("services") || has("service") || has("provide") || has("provides") {
            return Some(Template::ManufacturerServices);
        }
        return None;
    }
    let service_word = has("service") || has("services");
    let state_word = has("state") || has("states") || has("province") || has("provinces") || has("location") || has("locations");
    if service_word && !state_word {
        return Some(Template::CountByService);
    }
    if state_word && (has("each") || has("per") || has("which") || has("top") || has("most") || has("biggest")) {
        return Some(Template::CountByLocation);
    }
    if !any_filter {
        return None;
    }
    if has_phrase("how many") || has_phrase("number of") || has("count") {
        return Some(Template::CountManufacturers);
    }
    if has("list") || has("give") || has("show") || has("find") || has("which") || has("names") || has("who") {
        return Some(Template::ListManufacturers);
    }
    None
}

/// Limit for grouped answers: an explicit count, or 1 for "which …" /
/// "what … the most" questions, else unlimited.
pub(crate) fn group_limit(question: &str, slots: &Slots) -> Option<usize> {
    if slots.k.is_some() {
        return slots.k;
    }
    let f = fold(question);
    let words: Vec<&str> = f.split(' ').collect();
    let singular = words.contains(&"which") || words.contains(&"what");
    let superlative = words.contains(&"most") || words.contains(&"biggest") || words.contains(&"largest");
    let plural = words.contains(&"states") || words.contains(&"services") || words.contains(&"each");
    (singular && superlative && !plural).then_some(1)
}

/// Domain-like tokens (`name.tld`), canonicalized.
pub fn manufacturer_ids(question: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in question.split_whitespace() {
        let t = raw.trim_matches(|c: char| !c.is_ascii_alphanumeric());
        let Some(dot) = t.rfind('.') else { continue };
        let tld = &t[dot + 1..];
        let ok_chars = t
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '/' | ':'));
        if tld.len() >= 2 && tld.chars().all(|c| c.is_ascii_alphabetic()) && ok_chars && dot > 0 {
            out.push(canonical_manufacturer_id(t));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_extraction() {
        let r = Router::default();
        let s = r.slots("How many manufacturers located in Michigan, provide welding but not certified with AWS?");
        let ids: Vec<(&str, bool)> = s.mentions.iter().map(|m| (m.id.as_str(), m.negated)).collect();
        assert_eq!(ids, vec![("michigan", false), ("welding", false), ("aws", true)]);
        let s = r.slots("List 30 manufacturers certified with ITAR and ISO 9001.");
        assert_eq!(s.k, Some(30));
        assert!(s.mentions.iter().any(|m| m.id == "iso9001"));
        let s = r.slots("List 50 manufacturers which provide welding as well as certified with American Welding Society (AWS).");
        let svc: Vec<_> = s.of(EntityType::Service, false).map(|m| m.id.as_str()).collect();
        assert_eq!(svc, vec!["welding"]);
        assert_eq!(s.of(EntityType::Certification, false).count(), 1);
    }

    #[test]
    fn domain_tokens() {
        assert_eq!(manufacturer_ids("similar to 110metalworks.com based"), vec!["110metalworks.com"]);
        assert_eq!(manufacturer_ids("Label \"3d-cam.com\" with"), vec!["3d-cam.com"]);
        assert_eq!(manufacturer_ids("Is \"www.klsteven.com\" ok? e.g. no"), vec!["klsteven.com"]);
        assert!(manufacturer_ids("ISO 9001. Done.").is_empty());
    }
}
