//! Posts, institution metadata and harassment labels.
//!
//! Everything downstream works off a [`Corpus`], which is built once from a
//! line-delimited post stream and never mutated afterwards.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no valid records in input ({malformed} malformed lines)")]
    EmptyCorpus { malformed: usize },
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("duplicate label for post {0}")]
    DuplicateLabel(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    pub institution_id: String,
    pub timestamp: i64,
    pub text: String,
}

/// A line that was skipped during ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineWarning {
    /// 1-based line number in the source.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Ordered posts plus a user index.
///
/// A corpus fresh out of [`ingest_posts`] may still hold duplicate post ids;
/// [`dedup`] establishes uniqueness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    posts: Vec<Post>,
    user_index: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn new(posts: Vec<Post>) -> Self {
        let mut user_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in posts.iter().enumerate() {
            user_index.entry(p.user_id.clone()).or_default().push(i);
        }
        Corpus { posts, user_index }
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn user_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.user_index
    }

    pub fn posts_by_user(&self, user_id: &str) -> impl Iterator<Item = &Post> {
        self.user_index
            .get(user_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.posts[i])
    }

    pub fn unique_users(&self) -> usize {
        self.user_index.len()
    }

    pub fn get(&self, post_id: &str) -> Option<&Post> {
        self.posts.iter().find(|p| p.post_id == post_id)
    }

    /// Number of distinct users per institution.
    pub fn users_per_institution(&self) -> BTreeMap<String, usize> {
        let mut sets: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
        for p in &self.posts {
            sets.entry(&p.institution_id).or_default().insert(&p.user_id);
        }
        sets.into_iter()
            .map(|(k, v)| (k.to_string(), v.len()))
            .collect()
    }

    /// Writes the corpus back out in the ingestion format.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.posts {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub warnings: Vec<LineWarning>,
}

#[derive(Deserialize)]
struct RawPost {
    post_id: String,
    user_id: String,
    institution_id: String,
    timestamp: i64,
    text: String,
}

/// Reads one JSON object per line. Malformed lines become warnings; only a
/// stream with zero usable records is an error.
pub fn ingest_posts<R: BufRead>(source: R) -> Result<Ingested, CorpusError> {
    let mut posts = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawPost>(&line) {
            Ok(raw) => {
                if raw.post_id.is_empty() {
                    warnings.push(LineWarning {
                        line: lineno,
                        message: "empty post_id".into(),
                    });
                } else if raw.text.trim().is_empty() {
                    warnings.push(LineWarning {
                        line: lineno,
                        message: "empty text".into(),
                    });
                } else {
                    posts.push(Post {
                        post_id: raw.post_id,
                        user_id: raw.user_id,
                        institution_id: raw.institution_id,
                        timestamp: raw.timestamp,
                        text: raw.text,
                    });
                }
            }
            Err(e) => warnings.push(LineWarning {
                line: lineno,
                message: e.to_string(),
            }),
        }
    }
    if posts.is_empty() {
        return Err(CorpusError::EmptyCorpus {
            malformed: warnings.len(),
        });
    }
    Ok(Ingested {
        corpus: Corpus::new(posts),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DedupConfig {
    /// Also collapse identical texts posted by different users.
    pub collapse_cross_user: bool,
}

/// Casefolds and collapses whitespace runs.
pub fn normalize_for_dedup(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keeps one post per post id and one per (user, normalized text), the
/// earliest by timestamp with ties going to the smaller post id. Survivors
/// keep their input order.
pub fn dedup(corpus: &Corpus, config: DedupConfig) -> Corpus {
    let posts = corpus.posts();
    let mut order: Vec<usize> = (0..posts.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&posts[a], &posts[b]);
        (pa.timestamp, &pa.post_id, &pa.user_id, &pa.text, &pa.institution_id)
            .cmp(&(pb.timestamp, &pb.post_id, &pb.user_id, &pb.text, &pb.institution_id))
            .then(a.cmp(&b))
    });

    let mut seen_ids: HashSet<&str> = HashSet::new();
    let mut seen_text: HashSet<(Option<&str>, String)> = HashSet::new();
    let mut keep = vec![false; posts.len()];
    for i in order {
        let p = &posts[i];
        if seen_ids.contains(p.post_id.as_str()) {
            continue;
        }
        let owner = (!config.collapse_cross_user).then_some(p.user_id.as_str());
        let key = (owner, normalize_for_dedup(&p.text));
        if seen_text.contains(&key) {
            continue;
        }
        seen_ids.insert(&p.post_id);
        seen_text.insert(key);
        keep[i] = true;
    }

    Corpus::new(
        posts
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(p, _)| p.clone())
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Northeast,
    South,
    West,
    Midwest,
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "northeast" => Ok(Region::Northeast),
            "south" => Ok(Region::South),
            "west" => Ok(Region::West),
            "midwest" => Ok(Region::Midwest),
            other => Err(format!("unknown region {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstitutionRecord {
    pub institution_id: String,
    pub enrollment: u64,
    /// Male/female ratio.
    pub mf_ratio: f64,
    pub is_private: bool,
    pub region: Region,
    /// Official reported cases per year.
    pub reported_cases: u64,
}

#[derive(Deserialize)]
struct RawInstitution {
    institution_id: String,
    enrollment: String,
    mf_ratio: String,
    sector: String,
    region: String,
    reported_cases: String,
}

/// Reads the comma-delimited institution table. Any bad row is fatal; the
/// reported row number counts the header as row 1.
pub fn ingest_institutions<R: Read>(source: R) -> Result<Vec<InstitutionRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<RawInstitution>().enumerate() {
        let row = i + 2;
        let bad = |message: String| CorpusError::BadRow { row, message };
        let raw = rec.map_err(|e| bad(e.to_string()))?;
        let enrollment: i64 = raw
            .enrollment
            .parse()
            .map_err(|_| bad(format!("invalid enrollment {:?}", raw.enrollment)))?;
        if enrollment < 1 {
            return Err(bad(format!("enrollment must be positive, got {enrollment}")));
        }
        let mf_ratio: f64 = raw
            .mf_ratio
            .parse()
            .map_err(|_| bad(format!("invalid mf_ratio {:?}", raw.mf_ratio)))?;
        if !(mf_ratio >= 0.0 && mf_ratio.is_finite()) {
            return Err(bad(format!("mf_ratio must be nonnegative, got {mf_ratio}")));
        }
        let is_private = match raw.sector.to_ascii_lowercase().as_str() {
            "private" => true,
            "public" => false,
            other => return Err(bad(format!("unknown sector {other:?}"))),
        };
        let region: Region = raw.region.parse().map_err(bad)?;
        let reported_cases: u64 = raw
            .reported_cases
            .parse()
            .map_err(|_| bad(format!("invalid reported_cases {:?}", raw.reported_cases)))?;
        out.push(InstitutionRecord {
            institution_id: raw.institution_id,
            enrollment: enrollment as u64,
            mf_ratio,
            is_private,
            region,
            reported_cases,
        });
    }
    Ok(out)
}

pub fn total_reported_cases(institutions: &[InstitutionRecord]) -> u64 {
    institutions.iter().map(|r| r.reported_cases).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HarassmentType {
    Physical,
    Verbal,
    Visual,
}

impl HarassmentType {
    pub const ALL: [HarassmentType; 3] = [Self::Physical, Self::Verbal, Self::Visual];

    pub fn label(self) -> &'static str {
        match self {
            Self::Physical => "Physical",
            Self::Verbal => "Verbal",
            Self::Visual => "Visual",
        }
    }
}

impl FromStr for HarassmentType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "physical" => Ok(Self::Physical),
            "verbal" => Ok(Self::Verbal),
            "visual" => Ok(Self::Visual),
            other => Err(format!("unknown harassment type {other:?}")),
        }
    }
}

/// Who the harassment involved. Declaration order is the report row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Participant {
    ThirdParty,
    Faculty,
    Peer,
}

impl Participant {
    pub const ALL: [Participant; 3] = [Self::ThirdParty, Self::Faculty, Self::Peer];

    pub fn label(self) -> &'static str {
        match self {
            Self::ThirdParty => "3rd-Party",
            Self::Faculty => "Faculty",
            Self::Peer => "Peer",
        }
    }
}

impl FromStr for Participant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match norm.as_str() {
            "peer" => Ok(Self::Peer),
            "faculty" => Ok(Self::Faculty),
            "thirdparty" | "3rdparty" => Ok(Self::ThirdParty),
            _ => Err(format!("unknown participant {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarassmentLabel {
    pub post_id: String,
    pub harassment_type: HarassmentType,
    pub participant: Participant,
}

#[derive(Deserialize)]
struct RawLabel {
    post_id: String,
    harassment_type: String,
    participant: String,
}

pub fn ingest_labels<R: Read>(source: R) -> Result<Vec<HarassmentLabel>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<RawLabel>().enumerate() {
        let row = i + 2;
        let bad = |message: String| CorpusError::BadRow { row, message };
        let raw = rec.map_err(|e| bad(e.to_string()))?;
        out.push(HarassmentLabel {
            post_id: raw.post_id,
            harassment_type: raw.harassment_type.parse().map_err(bad)?,
            participant: raw.participant.parse().map_err(bad)?,
        });
    }
    Ok(out)
}

/// Posts joined with their labels, in corpus order.
#[derive(Debug, Clone)]
pub struct LabeledView<'a> {
    pub entries: Vec<(&'a Post, HarassmentLabel)>,
    /// Label post ids that matched no post.
    pub unresolved: Vec<String>,
}

pub fn attach_labels<'a>(
    corpus: &'a Corpus,
    labels: &[HarassmentLabel],
) -> Result<LabeledView<'a>, CorpusError> {
    let mut by_id: HashMap<&str, &HarassmentLabel> = HashMap::new();
    for l in labels {
        if by_id.insert(&l.post_id, l).is_some() {
            return Err(CorpusError::DuplicateLabel(l.post_id.clone()));
        }
    }
    let present: HashSet<&str> = corpus.posts().iter().map(|p| p.post_id.as_str()).collect();
    let unresolved = labels
        .iter()
        .filter(|l| !present.contains(l.post_id.as_str()))
        .map(|l| l.post_id.clone())
        .collect();
    let entries = corpus
        .posts()
        .iter()
        .filter_map(|p| by_id.get(p.post_id.as_str()).map(|l| (p, (*l).clone())))
        .collect();
    Ok(LabeledView { entries, unresolved })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, user: &str, ts: i64, text: &str) -> Post {
        Post {
            post_id: id.into(),
            user_id: user.into(),
            institution_id: "u1".into(),
            timestamp: ts,
            text: text.into(),
        }
    }

    fn line(id: &str, user: &str, ts: i64, text: &str) -> String {
        serde_json::to_string(&post(id, user, ts, text)).unwrap()
    }

    #[test]
    fn ingests_well_formed_lines() {
        let src = [line("1", "a", 1, "x"), line("2", "b", 2, "y"), line("3", "c", 3, "z")].join("\n");
        let got = ingest_posts(src.as_bytes()).unwrap();
        assert_eq!(got.corpus.len(), 3);
        assert!(got.warnings.is_empty());
        assert_eq!(got.corpus.posts()[1].post_id, "2");
    }

    #[test]
    fn missing_field_is_a_warning() {
        let src = format!(
            "{}\n{}\n{}\n",
            line("1", "a", 1, "x"),
            r#"{"post_id":"2","user_id":"b","institution_id":"u1","timestamp":2}"#,
            line("3", "c", 3, "z")
        );
        let got = ingest_posts(src.as_bytes()).unwrap();
        assert_eq!(got.corpus.len(), 2);
        assert_eq!(got.warnings.len(), 1);
        assert_eq!(got.warnings[0].line, 2);
        assert!(got.warnings[0].message.contains("text"));
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(matches!(
            ingest_posts("".as_bytes()),
            Err(CorpusError::EmptyCorpus { malformed: 0 })
        ));
        assert!(matches!(
            ingest_posts("garbage\n".as_bytes()),
            Err(CorpusError::EmptyCorpus { malformed: 1 })
        ));
    }

    #[test]
    fn duplicate_post_id_keeps_earliest() {
        let c = Corpus::new(vec![post("1", "a", 20, "late"), post("1", "a", 10, "early")]);
        let d = dedup(&c, DedupConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d.posts()[0].text, "early");
    }

    #[test]
    fn same_user_case_variants_collapse() {
        let c = Corpus::new(vec![
            post("1", "a", 1, "Me  Too"),
            post("2", "a", 2, "me too"),
        ]);
        let d = dedup(&c, DedupConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d.posts()[0].post_id, "1");
    }

    #[test]
    fn cross_user_retweets_kept_unless_configured() {
        let c = Corpus::new(vec![post("1", "a", 1, "RT same"), post("2", "b", 2, "RT same")]);
        assert_eq!(dedup(&c, DedupConfig::default()).len(), 2);
        let collapsed = dedup(&c, DedupConfig { collapse_cross_user: true });
        assert_eq!(collapsed.len(), 1);
    }

    #[test]
    fn equal_timestamps_tie_on_post_id() {
        let c = Corpus::new(vec![post("b", "u", 5, "hi"), post("a", "u", 5, "HI")]);
        let d = dedup(&c, DedupConfig::default());
        assert_eq!(d.posts()[0].post_id, "a");
    }

    #[test]
    fn user_index_is_consistent() {
        let c = Corpus::new(vec![post("1", "a", 1, "x"), post("2", "b", 1, "y"), post("3", "a", 1, "z")]);
        assert_eq!(c.user_index()["a"], vec![0, 2]);
        assert_eq!(c.posts_by_user("a").count(), 2);
        assert_eq!(c.unique_users(), 2);
    }

    const HEADER: &str = "institution_id,enrollment,mf_ratio,sector,region,reported_cases\n";

    #[test]
    fn institution_region_canonicalized() {
        let src = format!("{HEADER}u1,5000,0.9,private,northeast,12\n");
        let recs = ingest_institutions(src.as_bytes()).unwrap();
        assert_eq!(
            recs[0],
            InstitutionRecord {
                institution_id: "u1".into(),
                enrollment: 5000,
                mf_ratio: 0.9,
                is_private: true,
                region: Region::Northeast,
                reported_cases: 12,
            }
        );
    }

    #[test]
    fn unknown_region_names_row() {
        let src = format!("{HEADER}u1,5000,0.9,public,West,1\nu2,10,1.0,public,east,1\n");
        match ingest_institutions(src.as_bytes()) {
            Err(CorpusError::BadRow { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("east"));
            }
            other => panic!("expected BadRow, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_enrollment_rejected() {
        let src = format!("{HEADER}u1,0,0.9,public,West,1\n");
        assert!(matches!(
            ingest_institutions(src.as_bytes()),
            Err(CorpusError::BadRow { row: 2, .. })
        ));
    }

    #[test]
    fn case_total_over_two_hundred_rows() {
        // 139 rows with 15 cases and 61 with 14 cases: 2085 + 854 = 2939.
        let mut src = HEADER.to_string();
        for i in 0..200 {
            let cases = if i < 139 { 15 } else { 14 };
            src.push_str(&format!("c{i},1000,1.0,public,south,{cases}\n"));
        }
        let recs = ingest_institutions(src.as_bytes()).unwrap();
        assert_eq!(recs.len(), 200);
        assert_eq!(total_reported_cases(&recs), 2939);
    }

    fn label(id: &str, t: HarassmentType, p: Participant) -> HarassmentLabel {
        HarassmentLabel {
            post_id: id.into(),
            harassment_type: t,
            participant: p,
        }
    }

    #[test]
    fn labels_join_and_report_unresolved() {
        let c = Corpus::new(vec![post("1", "a", 1, "x"), post("2", "b", 1, "y"), post("3", "c", 1, "z")]);
        let labels = vec![
            label("1", HarassmentType::Physical, Participant::Peer),
            label("3", HarassmentType::Verbal, Participant::Faculty),
            label("9", HarassmentType::Visual, Participant::ThirdParty),
        ];
        let view = attach_labels(&c, &labels).unwrap();
        assert_eq!(view.entries.len(), 2);
        assert_eq!(view.unresolved, vec!["9".to_string()]);
    }

    #[test]
    fn conflicting_labels_are_fatal() {
        let c = Corpus::new(vec![post("1", "a", 1, "x")]);
        let labels = vec![
            label("1", HarassmentType::Physical, Participant::Peer),
            label("1", HarassmentType::Verbal, Participant::Peer),
        ];
        assert!(matches!(attach_labels(&c, &labels), Err(CorpusError::DuplicateLabel(_))));
    }

    #[test]
    fn label_file_parses_enum_spellings() {
        let src = "post_id,harassment_type,participant\n1,physical,3rd-Party\n2,Verbal,third_party\n3,visual,peer\n";
        let labels = ingest_labels(src.as_bytes()).unwrap();
        assert_eq!(labels[0].participant, Participant::ThirdParty);
        assert_eq!(labels[1].participant, Participant::ThirdParty);
        assert_eq!(labels[2].harassment_type, HarassmentType::Visual);
        let bad = "post_id,harassment_type,participant\n1,emotional,peer\n";
        assert!(ingest_labels(bad.as_bytes()).is_err());
    }
}
