//! Built-in domain vocabulary: the service hierarchy, certifications and
//! North American states/provinces.
//!
//! These lists seed a base graph (service/certification/location nodes plus
//! `subclass_of` edges) and the extraction lexicon when no dataset is loaded.

use crate::graph::{Edge, Graph, GraphError, Node, NodeLabel, RelationType};

/// `(service name, parent service names, extraction aliases)`.
pub type ServiceEntry = (&'static str, &'static [&'static str], &'static [&'static str]);

/// `(display name, extraction aliases)`.
pub type TermEntry = (&'static str, &'static [&'static str]);

/// 77 services; 76 `subclass_of` edges in total.
pub const SERVICES: &[ServiceEntry] = &[
    ("machining", &[], &["machine shop"]),
    ("assembly", &[], &["assemblies"]),
    ("joining", &[], &[]),
    ("inspection", &[], &["inspections"]),
    ("forming", &[], &["metal forming"]),
    ("molding", &[], &["moulding"]),
    ("casting", &[], &["castings"]),
    ("additive manufacturing", &[], &["additively manufactured"]),
    ("heat treatment", &[], &["heat treating", "heat treat"]),
    ("milling", &["machining"], &["cnc milling"]),
    ("turning", &["machining"], &["cnc turning", "lathe work"]),
    ("drilling", &["machining"], &[]),
    ("grinding", &["machining"], &[]),
    ("boring", &["machining"], &[]),
    ("cnc machining", &["machining"], &["cnc machined"]),
    ("electrical discharge machining", &["machining"], &["edm", "wire edm"]),
    ("honing", &["grinding", "machining"], &[]),
    ("lapping", &["grinding"], &[]),
    ("broaching", &["machining"], &[]),
    ("tapping", &["drilling"], &[]),
    ("reaming", &["drilling"], &[]),
    ("swiss machining", &["turning", "cnc machining"], &["swiss turning", "swiss screw machining"]),
    ("5-axis machining", &["milling", "cnc machining"], &["5 axis milling", "five axis machining"]),
    ("laser cutting", &["machining", "sheet metal fabrication"], &["laser cut"]),
    ("waterjet cutting", &["machining"], &["water jet cutting", "waterjet"]),
    ("plasma cutting", &["machining"], &[]),
    ("deburring", &["machining", "finishing"], &[]),
    ("electronic assembly", &["assembly"], &["pcb assembly", "electronics assembly"]),
    ("mechanical assembly", &["assembly"], &[]),
    ("box build", &["assembly"], &["box build assembly"]),
    ("cable assembly", &["assembly"], &["wire harness", "cable assemblies"]),
    ("welding", &["joining"], &["welder", "welded"]),
    ("brazing", &["joining"], &[]),
    ("soldering", &["joining"], &[]),
    ("riveting", &["joining"], &[]),
    ("adhesive bonding", &["joining"], &[]),
    ("tig welding", &["welding"], &[]),
    ("mig welding", &["welding"], &[]),
    ("fabrication", &["joining", "forming"], &["metal fabrication", "fabricating"]),
    ("coordinate measuring", &["inspection"], &["cmm inspection", "coordinate measuring machine"]),
    ("non-destructive testing", &["inspection"], &["ndt"]),
    ("quality control", &["inspection"], &[]),
    ("stamping", &["forming"], &["metal stamping"]),
    ("bending", &["forming"], &["press brake"]),
    ("forging", &["forming"], &["forgings"]),
    ("extrusion", &["forming"], &["extrusions"]),
    ("sheet metal fabrication", &["forming", "fabrication"], &["sheet metal"]),
    ("roll forming", &["forming"], &[]),
    ("deep drawing", &["forming"], &["deep drawn"]),
    ("metal spinning", &["forming"], &[]),
    ("injection molding", &["molding"], &["injection moulding", "plastic injection"]),
    ("blow molding", &["molding"], &["blow moulding"]),
    ("compression molding", &["molding"], &[]),
    ("rotational molding", &["molding"], &["rotomolding"]),
    ("thermoforming", &["molding"], &["vacuum forming"]),
    ("insert molding", &["injection molding", "molding"], &[]),
    ("die casting", &["casting"], &[]),
    ("sand casting", &["casting"], &[]),
    ("investment casting", &["casting"], &["lost wax casting"]),
    ("3d printing", &["additive manufacturing"], &["3d printed", "3-d printing"]),
    ("selective laser sintering", &["additive manufacturing"], &["sls"]),
    ("stereolithography", &["additive manufacturing"], &["sla printing"]),
    ("fused deposition modeling", &["additive manufacturing"], &["fdm"]),
    ("direct metal laser sintering", &["additive manufacturing"], &["dmls", "metal 3d printing"]),
    ("rapid prototyping", &["additive manufacturing", "engineering"], &["prototyping"]),
    ("annealing", &["heat treatment"], &[]),
    ("hardening", &["heat treatment"], &["induction hardening"]),
    ("tempering", &["heat treatment"], &[]),
    ("carburizing", &["hardening"], &[]),
    ("nitriding", &["hardening"], &[]),
    ("finishing", &[], &["metal finishing", "surface finishing"]),
    ("painting", &["finishing"], &["wet painting"]),
    ("powder coating", &["finishing", "painting"], &["powder coat"]),
    ("anodizing", &["finishing"], &["anodize"]),
    ("plating", &["finishing"], &["electroplating"]),
    ("engineering", &[], &["engineering services"]),
    ("design", &["engineering"], &["product design"]),
];

pub const CERTIFICATIONS: &[TermEntry] = &[
    ("ISO9001", &["iso 9001", "iso 9001 2015"]),
    ("AS9100", &["as 9100", "as9100d", "as 9100d"]),
    ("ITAR", &["itar registered", "international traffic in arms regulations"]),
    ("ISO13485", &["iso 13485"]),
    ("ISO14001", &["iso 14001"]),
    ("IATF16949", &["iatf 16949", "ts 16949"]),
    ("AWS", &["american welding society", "aws certified"]),
    ("NADCAP", &["nadcap accredited"]),
    ("CMMI", &[]),
    ("ISO45001", &["iso 45001"]),
    ("UL", &["ul listed", "underwriters laboratories"]),
    ("RoHS", &["rohs compliant"]),
    ("ISO17025", &["iso 17025", "iso iec 17025"]),
    ("OHSAS18001", &["ohsas 18001"]),
    ("ISO27001", &["iso 27001"]),
];

pub const LOCATIONS: &[TermEntry] = &[
    ("Alabama", &[]),
    ("Alaska", &[]),
    ("Arizona", &[]),
    ("Arkansas", &[]),
    ("California", &[]),
    ("Colorado", &[]),
    ("Connecticut", &[]),
    ("Delaware", &[]),
    ("Florida", &[]),
    ("Georgia", &[]),
    ("Hawaii", &[]),
    ("Idaho", &[]),
    ("Illinois", &[]),
    ("Indiana", &[]),
    ("Iowa", &[]),
    ("Kansas", &[]),
    ("Kentucky", &[]),
    ("Louisiana", &[]),
    ("Maine", &[]),
    ("Maryland", &[]),
    ("Massachusetts", &[]),
    ("Michigan", &[]),
    ("Minnesota", &[]),
    ("Mississippi", &[]),
    ("Missouri", &[]),
    ("Montana", &[]),
    ("Nebraska", &[]),
    ("Nevada", &[]),
    ("New Hampshire", &[]),
    ("New Jersey", &[]),
    ("New Mexico", &[]),
    ("New York", &[]),
    ("North Carolina", &[]),
    ("North Dakota", &[]),
    ("Ohio", &[]),
    ("Oklahoma", &[]),
    ("Oregon", &[]),
    ("Pennsylvania", &[]),
    ("Rhode Island", &[]),
    ("South Carolina", &[]),
    ("South Dakota", &[]),
    ("Tennessee", &[]),
    ("Texas", &[]),
    ("Utah", &[]),
    ("Vermont", &[]),
    ("Virginia", &[]),
    ("Washington", &[]),
    ("West Virginia", &[]),
    ("Wisconsin", &[]),
    ("Wyoming", &[]),
    ("Alberta", &[]),
    ("British Columbia", &[]),
    ("Manitoba", &[]),
    ("New Brunswick", &[]),
    ("Newfoundland and Labrador", &["newfoundland"]),
    ("Nova Scotia", &[]),
    ("Ontario", &[]),
    ("Prince Edward Island", &[]),
    ("Quebec", &[]),
    ("Saskatchewan", &[]),
    ("Northwest Territories", &[]),
    ("Nunavut", &[]),
    ("Yukon", &[]),
];

/// Extraction aliases for a node, looked up by entity label and canonical id.
pub fn aliases_for(label: NodeLabel, id: &str) -> &'static [&'static str] {
    let hit = match label {
        NodeLabel::Service => SERVICES
            .iter()
            .find(|(name, _, _)| crate::graph::canonical_name(name) == id)
            .map(|(_, _, a)| *a),
        NodeLabel::Certification => CERTIFICATIONS
            .iter()
            .find(|(name, _)| crate::graph::canonical_name(name) == id)
            .map(|(_, a)| *a),
        NodeLabel::Location => LOCATIONS
            .iter()
            .find(|(name, _)| crate::graph::canonical_name(name) == id)
            .map(|(_, a)| *a),
        NodeLabel::Manufacturer => None,
    };
    hit.unwrap_or(&[])
}

/// Graph holding every vocabulary node and the service hierarchy (weight 1.0).
/// The graph is left unfrozen so manufacturers can be added.
pub fn base_graph() -> Result<Graph, GraphError> {
    let mut g = Graph::new();
    for (name, _, _) in SERVICES {
        g.add_node(Node::new(NodeLabel::Service, name))?;
    }
    for (name, _) in CERTIFICATIONS {
        g.add_node(Node::new(NodeLabel::Certification, name))?;
    }
    for (name, _) in LOCATIONS {
        g.add_node(Node::new(NodeLabel::Location, name))?;
    }
    for (name, parents, _) in SERVICES {
        let child = crate::graph::canonical_name(name);
        for parent in parents.iter() {
            g.add_edge(Edge::new(
                child.clone(),
                crate::graph::canonical_name(parent),
                RelationType::SubclassOf,
                1.0,
            ))?;
        }
    }
    Ok(g)
}
