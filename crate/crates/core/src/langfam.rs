//! Language-family clustering and intermediary language selection.
//!
//! Languages are read from a tab-separated database, grouped into a tree by
//! their family path, and one representative per top-level family is chosen
//! by native-speaker count. The top `k` representatives become the
//! intermediary languages for backtranslation.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

/// The language database shipped with the crate.
pub const BUNDLED_DB: &str = include_str!("../data/languages.tsv");

pub const DB_HEADER: &str = "code\tname\tfamily_path\tl1_speakers_millions";

const PATH_SEPARATOR: char = '>';

#[derive(Debug, Error, PartialEq)]
pub enum LangFamError {
    #[error("language database is missing the header line `{DB_HEADER}`")]
    MissingHeader,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: language `{code}` has no speaker count")]
    MissingSpeakers { line: usize, code: String },
    #[error("line {line}: duplicate language code `{code}`")]
    DuplicateCode { line: usize, code: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Language {
    pub code: String,
    pub name: String,
    /// Family names from root to leaf. An isolate carries its own name.
    pub family_path: Vec<String>,
    pub l1_speakers_millions: f64,
}

impl Language {
    pub fn top_family(&self) -> &str {
        &self.family_path[0]
    }
}

/// Ranking used by representative selection and top-k: more native speakers
/// first, then the lexicographically greater code first.
pub fn rank_order(a: &Language, b: &Language) -> Ordering {
    b.l1_speakers_millions
        .total_cmp(&a.l1_speakers_millions)
        .then_with(|| b.code.cmp(&a.code))
}

pub fn parse_language_db(raw: &str) -> Result<Vec<Language>, LangFamError> {
    let mut languages = Vec::new();
    let mut seen = HashSet::new();
    let mut header_seen = false;

    for (idx, raw_line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.join("\t") != DB_HEADER {
                return Err(LangFamError::MissingHeader);
            }
            header_seen = true;
            continue;
        }
        let lang = parse_row(line, line_no)?;
        if !seen.insert(lang.code.clone()) {
            return Err(LangFamError::DuplicateCode {
                line: line_no,
                code: lang.code,
            });
        }
        languages.push(lang);
    }

    if !header_seen {
        return Err(LangFamError::MissingHeader);
    }
    Ok(languages)
}

fn parse_row(line: &str, line_no: usize) -> Result<Language, LangFamError> {
    let malformed = |reason: String| LangFamError::Malformed { line: line_no, reason };
    let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
    if cols.len() != 4 {
        return Err(malformed(format!("expected 4 columns, found {}", cols.len())));
    }
    let (code, name, path, speakers) = (cols[0], cols[1], cols[2], cols[3]);
    if code.is_empty() {
        return Err(malformed("empty language code".into()));
    }
    if name.is_empty() {
        return Err(malformed(format!("language `{code}` has an empty name")));
    }
    let family_path: Vec<String> = path.split(PATH_SEPARATOR).map(|s| s.trim().to_string()).collect();
    if family_path.iter().any(String::is_empty) {
        return Err(malformed(format!("language `{code}` has an empty family path element")));
    }
    if speakers.is_empty() {
        return Err(LangFamError::MissingSpeakers {
            line: line_no,
            code: code.to_string(),
        });
    }
    let l1: f64 = speakers
        .parse()
        .map_err(|_| malformed(format!("speaker count `{speakers}` is not a number")))?;
    if !l1.is_finite() || l1 < 0.0 {
        return Err(malformed(format!(
            "speaker count `{speakers}` must be a non-negative number"
        )));
    }
    Ok(Language {
        code: code.to_string(),
        name: name.to_string(),
        family_path,
        l1_speakers_millions: l1,
    })
}

/// Renders languages in the database format, header included. Comments and
/// blank lines of the original file are not preserved.
pub fn write_language_db(languages: &[Language]) -> String {
    let mut out = String::from(DB_HEADER);
    out.push('\n');
    for lang in languages {
        let path = lang.family_path.join(&PATH_SEPARATOR.to_string());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            lang.code, lang.name, path, lang.l1_speakers_millions
        );
    }
    out
}

pub fn bundled_languages() -> Vec<Language> {
    parse_language_db(BUNDLED_DB).expect("bundled language database is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyNode {
    pub family_name: String,
    pub children: Vec<FamilyNode>,
    /// Languages whose family path ends at this node.
    pub members: Vec<Language>,
}

impl FamilyNode {
    fn new(name: &str) -> Self {
        Self {
            family_name: name.to_string(),
            children: Vec::new(),
            members: Vec::new(),
        }
    }

    pub fn child(&self, name: &str) -> Option<&FamilyNode> {
        self.children.iter().find(|c| c.family_name == name)
    }

    /// All languages in this subtree, members before descendants.
    pub fn languages(&self) -> Vec<&Language> {
        let mut out: Vec<&Language> = self.members.iter().collect();
        for child in &self.children {
            out.extend(child.languages());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(FamilyNode::node_count).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FamilyTree {
    pub roots: Vec<FamilyNode>,
}

impl FamilyTree {
    pub fn root(&self, name: &str) -> Option<&FamilyNode> {
        self.roots.iter().find(|r| r.family_name == name)
    }

    pub fn node_count(&self) -> usize {
        self.roots.iter().map(FamilyNode::node_count).sum()
    }

    pub fn languages(&self) -> Vec<&Language> {
        self.roots.iter().flat_map(FamilyNode::languages).collect()
    }
}

/// Builds the family tree. Roots and children keep first-appearance order.
pub fn build_family_tree(languages: &[Language]) -> Result<FamilyTree, LangFamError> {
    if languages.is_empty() {
        return Err(LangFamError::InvalidArgument(
            "cannot build a family tree from zero languages".into(),
        ));
    }
    let mut seen = HashSet::new();
    let mut tree = FamilyTree::default();
    for lang in languages {
        if !seen.insert(lang.code.as_str()) {
            return Err(LangFamError::InvalidArgument(format!(
                "duplicate language code `{}`",
                lang.code
            )));
        }
        if lang.family_path.is_empty() {
            return Err(LangFamError::InvalidArgument(format!(
                "language `{}` has an empty family path",
                lang.code
            )));
        }
        let mut level = &mut tree.roots;
        let last = lang.family_path.len() - 1;
        for (depth, family) in lang.family_path.iter().enumerate() {
            let pos = match level.iter().position(|n| &n.family_name == family) {
                Some(pos) => pos,
                None => {
                    level.push(FamilyNode::new(family));
                    level.len() - 1
                }
            };
            if depth == last {
                level[pos].members.push(lang.clone());
                break;
            }
            level = &mut level[pos].children;
        }
    }
    Ok(tree)
}

/// One language per top-level family, the one ranked first by
/// [`rank_order`]. Output follows root order.
pub fn select_representatives(tree: &FamilyTree) -> Vec<Language> {
    tree.roots
        .iter()
        .filter_map(|root| root.languages().into_iter().min_by(|a, b| rank_order(a, b)).cloned())
        .collect()
}

pub fn top_k_languages(representatives: &[Language], k: usize) -> Result<Vec<Language>, LangFamError> {
    if k == 0 {
        return Err(LangFamError::InvalidArgument("k must be positive".into()));
    }
    if representatives.is_empty() {
        return Err(LangFamError::InvalidArgument("no representatives to rank".into()));
    }
    let mut ranked = representatives.to_vec();
    ranked.sort_by(rank_order);
    ranked.truncate(k);
    Ok(ranked)
}

/// Parses a database and runs the full selection.
pub fn select_intermediaries(raw_db: &str, k: usize) -> Result<Vec<Language>, LangFamError> {
    let languages = parse_language_db(raw_db)?;
    let tree = build_family_tree(&languages)?;
    top_k_languages(&select_representatives(&tree), k)
}
