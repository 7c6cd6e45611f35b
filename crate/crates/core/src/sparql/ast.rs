//! Abstract syntax for the Wikidata query subset.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// The closed set of Wikidata prefixes a query may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prefix {
    /// Item (`wd:Q…`).
    Wd,
    /// Direct ("truthy") property (`wdt:P…`).
    Wdt,
    /// Property to statement node (`p:P…`).
    P,
    /// Statement node to main value (`ps:P…`).
    Ps,
    /// Statement node to qualifier value (`pq:P…`).
    Pq,
}

impl Prefix {
    pub const ALL: [Prefix; 5] = [Prefix::Wd, Prefix::Wdt, Prefix::P, Prefix::Ps, Prefix::Pq];

    pub fn as_str(self) -> &'static str {
        match self {
            Prefix::Wd => "wd",
            Prefix::Wdt => "wdt",
            Prefix::P => "p",
            Prefix::Ps => "ps",
            Prefix::Pq => "pq",
        }
    }

    pub fn from_name(name: &str) -> Option<Prefix> {
        Prefix::ALL.into_iter().find(|p| p.as_str() == name)
    }

    /// The id letter this prefix accepts: `Q` for items, `P` for properties.
    pub fn id_letter(self) -> char {
        match self {
            Prefix::Wd => 'Q',
            _ => 'P',
        }
    }

    pub fn is_property(self) -> bool {
        self != Prefix::Wd
    }

    /// Default expansion used when serialising to full IRIs.
    pub fn default_namespace(self) -> &'static str {
        match self {
            Prefix::Wd => "http://www.wikidata.org/entity/",
            Prefix::Wdt => "http://www.wikidata.org/prop/direct/",
            Prefix::P => "http://www.wikidata.org/prop/",
            Prefix::Ps => "http://www.wikidata.org/prop/statement/",
            Prefix::Pq => "http://www.wikidata.org/prop/qualifier/",
        }
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IriError {
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
    #[error("malformed id `{local}` for prefix `{prefix}`")]
    MalformedId { prefix: Prefix, local: String },
    #[error("`{0}` is not a prefixed name")]
    NotPrefixed(String),
}

/// A prefixed Wikidata IRI such as `wd:Q42` or `pq:P580`.
///
/// Construction validates the id against the prefix, so every value is
/// well-formed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri {
    prefix: Prefix,
    local: String,
}

impl Iri {
    pub fn new(prefix: Prefix, local: impl Into<String>) -> Result<Iri, IriError> {
        let local = local.into();
        let mut chars = local.chars();
        let ok = chars.next() == Some(prefix.id_letter())
            && !local[1..].is_empty()
            && local[1..].bytes().all(|b| b.is_ascii_digit());
        if ok {
            Ok(Iri { prefix, local })
        } else {
            Err(IriError::MalformedId { prefix, local })
        }
    }

    pub fn prefix(&self) -> Prefix {
        self.prefix
    }

    pub fn local_id(&self) -> &str {
        &self.local
    }

    pub fn is_entity(&self) -> bool {
        self.prefix == Prefix::Wd
    }

    pub fn is_relation(&self) -> bool {
        self.prefix.is_property()
    }

    /// Full IRI under the given prefix table.
    pub fn expand(&self, table: &PrefixTable) -> String {
        format!("{}{}", table.namespace(self.prefix), self.local)
    }
}

impl std::str::FromStr for Iri {
    type Err = IriError;

    fn from_str(s: &str) -> Result<Iri, IriError> {
        let (prefix, local) = s
            .split_once(':')
            .ok_or_else(|| IriError::NotPrefixed(s.to_string()))?;
        let prefix = Prefix::from_name(prefix).ok_or_else(|| IriError::UnknownPrefix(prefix.to_string()))?;
        Iri::new(prefix, local)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.prefix, self.local)
    }
}

impl serde::Serialize for Iri {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Iri {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Iri, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Prefix → namespace URL mapping used for full-IRI serialisation.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PrefixTable {
    #[serde(flatten)]
    overrides: BTreeMap<String, String>,
}

impl PrefixTable {
    pub fn from_json(text: &str) -> Result<PrefixTable, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn namespace(&self, prefix: Prefix) -> &str {
        self.overrides
            .get(prefix.as_str())
            .map(String::as_str)
            .unwrap_or_else(|| prefix.default_namespace())
    }
}

/// A query variable, stored without the leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Variable {
        Variable(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LiteralTag {
    /// Plain string.
    None,
    /// Language-tagged string, tag stored lowercase as written.
    Lang(String),
    /// Bare numeric token such as `42` or `-3.5`.
    Numeric,
    /// `"YYYY-MM-DD"^^date`.
    Date,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub tag: LiteralTag,
}

impl Literal {
    pub fn string(s: impl Into<String>) -> Literal {
        Literal {
            lexical: s.into(),
            tag: LiteralTag::None,
        }
    }

    pub fn lang(s: impl Into<String>, lang: impl Into<String>) -> Literal {
        Literal {
            lexical: s.into(),
            tag: LiteralTag::Lang(lang.into()),
        }
    }

    pub fn number(s: impl Into<String>) -> Literal {
        Literal {
            lexical: s.into(),
            tag: LiteralTag::Numeric,
        }
    }

    pub fn date(s: impl Into<String>) -> Literal {
        Literal {
            lexical: s.into(),
            tag: LiteralTag::Date,
        }
    }

    pub fn is_stringy(&self) -> bool {
        matches!(self.tag, LiteralTag::None | LiteralTag::Lang(_))
    }

    pub fn as_number(&self) -> Option<f64> {
        match self.tag {
            LiteralTag::Numeric => self.lexical.parse().ok(),
            _ => None,
        }
    }

    /// `(year, month, day)` of a date literal. Month and day default to 1
    /// when the lexical form only carries a year.
    pub fn as_date(&self) -> Option<(i64, u32, u32)> {
        if self.tag != LiteralTag::Date {
            return None;
        }
        parse_date(&self.lexical)
    }
}

/// Parses `[-]YYYY[-MM[-DD]][T…]`.
pub fn parse_date(s: &str) -> Option<(i64, u32, u32)> {
    let s = s.split('T').next()?;
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut parts = body.split('-');
    let year_str = parts.next()?;
    if year_str.is_empty() || !year_str.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut year: i64 = year_str.parse().ok()?;
    if neg {
        year = -year;
    }
    let mut field = |max: u32| -> Option<u32> {
        match parts.next() {
            None => Some(1),
            Some(p) if !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()) => {
                let v: u32 = p.parse().ok()?;
                (v <= max).then_some(v)
            }
            Some(_) => None,
        }
    };
    let month = field(12)?;
    let day = field(31)?;
    if parts.next().is_some() {
        return None;
    }
    Some((year, month, day))
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.tag {
            LiteralTag::Numeric => f.write_str(&self.lexical),
            LiteralTag::None => write_quoted(f, &self.lexical),
            LiteralTag::Lang(lang) => {
                write_quoted(f, &self.lexical)?;
                write!(f, "@{lang}")
            }
            LiteralTag::Date => {
                write_quoted(f, &self.lexical)?;
                f.write_str("^^date")
            }
        }
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Variable(Variable),
    Literal(Literal),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Variable(Variable::new(name))
    }

    pub fn as_variable(&self) -> Option<&Variable> {
        match self {
            Term::Variable(v) => Some(v),
            _ => None,
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Term {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Term {
        Term::Literal(lit)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => i.fmt(f),
            Term::Variable(v) => v.fmt(f),
            Term::Literal(l) => l.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: impl Into<Term>, predicate: impl Into<Term>, object: impl Into<Term>) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterOp {
    Contains,
    StrStarts,
    LangEquals,
    YearCompare,
    NumericCompare,
}

impl FilterOp {
    pub fn name(self) -> &'static str {
        match self {
            FilterOp::Contains => "CONTAINS",
            FilterOp::StrStarts => "STRSTARTS",
            FilterOp::LangEquals => "LANG",
            FilterOp::YearCompare => "YEAR",
            FilterOp::NumericCompare => "COMPARE",
        }
    }

    pub fn needs_comparator(self) -> bool {
        matches!(self, FilterOp::YearCompare | FilterOp::NumericCompare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comparator {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Comparator {
    pub const ALL: [Comparator; 5] = [
        Comparator::Eq,
        Comparator::Lt,
        Comparator::Gt,
        Comparator::Le,
        Comparator::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Comparator::Eq => ord == Equal,
            Comparator::Lt => ord == Less,
            Comparator::Gt => ord == Greater,
            Comparator::Le => ord != Greater,
            Comparator::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FilterExpr {
    pub op: FilterOp,
    pub args: Vec<Term>,
    pub comparator: Option<Comparator>,
}

impl FilterExpr {
    pub fn contains(haystack: Term, needle: Term) -> Self {
        FilterExpr {
            op: FilterOp::Contains,
            args: vec![haystack, needle],
            comparator: None,
        }
    }

    pub fn str_starts(haystack: Term, prefix: Term) -> Self {
        FilterExpr {
            op: FilterOp::StrStarts,
            args: vec![haystack, prefix],
            comparator: None,
        }
    }

    pub fn lang_equals(term: Term, lang: Term) -> Self {
        FilterExpr {
            op: FilterOp::LangEquals,
            args: vec![term, lang],
            comparator: None,
        }
    }

    pub fn year(term: Term, cmp: Comparator, year: Term) -> Self {
        FilterExpr {
            op: FilterOp::YearCompare,
            args: vec![term, year],
            comparator: Some(cmp),
        }
    }

    pub fn compare(lhs: Term, cmp: Comparator, rhs: Term) -> Self {
        FilterExpr {
            op: FilterOp::NumericCompare,
            args: vec![lhs, rhs],
            comparator: Some(cmp),
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.args.iter().filter_map(Term::as_variable)
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |i: usize| self.args.get(i).map(|t| t.to_string()).unwrap_or_default();
        let cmp = self.comparator.map(Comparator::symbol).unwrap_or("=");
        match self.op {
            FilterOp::Contains => write!(f, "FILTER(CONTAINS({}, {}))", arg(0), arg(1)),
            FilterOp::StrStarts => write!(f, "FILTER(STRSTARTS({}, {}))", arg(0), arg(1)),
            FilterOp::LangEquals => write!(f, "FILTER(LANG({}) = {})", arg(0), arg(1)),
            FilterOp::YearCompare => write!(f, "FILTER(YEAR({}) {} {})", arg(0), cmp, arg(1)),
            FilterOp::NumericCompare => write!(f, "FILTER({} {} {})", arg(0), cmp, arg(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderBy {
    pub variable: Variable,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryForm {
    Ask,
    Select {
        projection: Vec<Variable>,
        distinct: bool,
        count: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub form: QueryForm,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

/// The eleven keyword constructs of the query subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Keyword {
    Select,
    Count,
    Ask,
    Distinct,
    Filter,
    Contains,
    Year,
    StrStarts,
    Limit,
    OrderBy,
    Lang,
}

impl Keyword {
    pub const ALL: [Keyword; 11] = [
        Keyword::Select,
        Keyword::Count,
        Keyword::Ask,
        Keyword::Distinct,
        Keyword::Filter,
        Keyword::Contains,
        Keyword::Year,
        Keyword::StrStarts,
        Keyword::Limit,
        Keyword::OrderBy,
        Keyword::Lang,
    ];
}

impl Query {
    pub fn ask(patterns: Vec<TriplePattern>) -> Query {
        Query {
            form: QueryForm::Ask,
            patterns,
            filters: Vec::new(),
            order_by: None,
            limit: None,
        }
    }

    pub fn select(projection: Vec<Variable>, patterns: Vec<TriplePattern>) -> Query {
        Query {
            form: QueryForm::Select {
                projection,
                distinct: false,
                count: false,
            },
            patterns,
            filters: Vec::new(),
            order_by: None,
            limit: None,
        }
    }

    pub fn is_ask(&self) -> bool {
        matches!(self.form, QueryForm::Ask)
    }

    pub fn projection(&self) -> &[Variable] {
        match &self.form {
            QueryForm::Ask => &[],
            QueryForm::Select { projection, .. } => projection,
        }
    }

    pub fn is_distinct(&self) -> bool {
        matches!(self.form, QueryForm::Select { distinct: true, .. })
    }

    pub fn is_count(&self) -> bool {
        matches!(self.form, QueryForm::Select { count: true, .. })
    }

    /// Variables bound by the triple patterns, in order of first appearance.
    pub fn pattern_variables(&self) -> Vec<&Variable> {
        let mut seen = Vec::new();
        for p in &self.patterns {
            for t in p.terms() {
                if let Term::Variable(v) = t {
                    if !seen.contains(&v) {
                        seen.push(v);
                    }
                }
            }
        }
        seen
    }

    /// Every IRI mentioned anywhere in the query, in order of appearance.
    pub fn iris(&self) -> Vec<&Iri> {
        let pattern_terms = self.patterns.iter().flat_map(|p| p.terms());
        let filter_terms = self.filters.iter().flat_map(|f| f.args.iter());
        pattern_terms
            .chain(filter_terms)
            .filter_map(|t| match t {
                Term::Iri(i) => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        let pattern_terms = self.patterns.iter().flat_map(|p| p.terms());
        let filter_terms = self.filters.iter().flat_map(|f| f.args.iter());
        pattern_terms.chain(filter_terms).filter_map(|t| match t {
            Term::Literal(l) => Some(l),
            _ => None,
        })
    }

    /// Keyword constructs this query exercises.
    pub fn keywords(&self) -> std::collections::BTreeSet<Keyword> {
        let mut out = std::collections::BTreeSet::new();
        match &self.form {
            QueryForm::Ask => {
                out.insert(Keyword::Ask);
            }
            QueryForm::Select { distinct, count, .. } => {
                out.insert(Keyword::Select);
                if *distinct {
                    out.insert(Keyword::Distinct);
                }
                if *count {
                    out.insert(Keyword::Count);
                }
            }
        }
        for f in &self.filters {
            out.insert(Keyword::Filter);
            match f.op {
                FilterOp::Contains => {
                    out.insert(Keyword::Contains);
                }
                FilterOp::StrStarts => {
                    out.insert(Keyword::StrStarts);
                }
                FilterOp::LangEquals => {
                    out.insert(Keyword::Lang);
                }
                FilterOp::YearCompare => {
                    out.insert(Keyword::Year);
                }
                FilterOp::NumericCompare => {}
            }
        }
        if self.order_by.is_some() {
            out.insert(Keyword::OrderBy);
        }
        if self.limit.is_some() {
            out.insert(Keyword::Limit);
        }
        out
    }

    /// Applies `rename` to every variable occurrence.
    pub fn map_variables(&self, mut rename: impl FnMut(&Variable) -> Variable) -> Query {
        let mut map_term = |t: &Term| match t {
            Term::Variable(v) => Term::Variable(rename(v)),
            other => other.clone(),
        };
        let form = match &self.form {
            QueryForm::Ask => QueryForm::Ask,
            QueryForm::Select {
                projection,
                distinct,
                count,
            } => QueryForm::Select {
                projection: projection
                    .iter()
                    .map(|v| match map_term(&Term::Variable(v.clone())) {
                        Term::Variable(v) => v,
                        _ => unreachable!(),
                    })
                    .collect(),
                distinct: *distinct,
                count: *count,
            },
        };
        let patterns = self
            .patterns
            .iter()
            .map(|p| TriplePattern {
                subject: map_term(&p.subject),
                predicate: map_term(&p.predicate),
                object: map_term(&p.object),
            })
            .collect();
        let filters = self
            .filters
            .iter()
            .map(|f| FilterExpr {
                op: f.op,
                args: f.args.iter().map(&mut map_term).collect(),
                comparator: f.comparator,
            })
            .collect();
        let order_by = self.order_by.as_ref().map(|o| OrderBy {
            variable: match map_term(&Term::Variable(o.variable.clone())) {
                Term::Variable(v) => v,
                _ => unreachable!(),
            },
            direction: o.direction,
        });
        Query {
            form,
            patterns,
            filters,
            order_by,
            limit: self.limit,
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            QueryForm::Ask => f.write_str("ASK")?,
            QueryForm::Select {
                projection,
                distinct,
                count,
            } => {
                f.write_str("SELECT")?;
                if *count {
                    f.write_str(" (COUNT(")?;
                    if *distinct {
                        f.write_str("DISTINCT ")?;
                    }
                    for (i, v) in projection.iter().enumerate() {
                        if i > 0 {
                            f.write_str(" ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    f.write_str(") AS ?count)")?;
                } else {
                    if *distinct {
                        f.write_str(" DISTINCT")?;
                    }
                    for v in projection {
                        write!(f, " {v}")?;
                    }
                }
            }
        }
        f.write_str(" WHERE {")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(" .")?;
            }
            write!(f, " {p}")?;
        }
        for filter in &self.filters {
            write!(f, " {filter}")?;
        }
        f.write_str(" }")?;
        if let Some(o) = &self.order_by {
            let dir = match o.direction {
                Direction::Ascending => "ASC",
                Direction::Descending => "DESC",
            };
            write!(f, " ORDER BY {dir}({})", o.variable)?;
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_rejects_wrong_letter() {
        assert!(Iri::new(Prefix::Wd, "P31").is_err());
        assert!(Iri::new(Prefix::Wdt, "Q5").is_err());
        assert!(Iri::new(Prefix::Pq, "P").is_err());
        assert!(Iri::new(Prefix::Pq, "P580").is_ok());
        assert_eq!("wd:Q42".parse::<Iri>().unwrap().to_string(), "wd:Q42");
        assert!(matches!("rdfs:label".parse::<Iri>(), Err(IriError::UnknownPrefix(_))));
    }

    #[test]
    fn dates() {
        assert_eq!(parse_date("1073-04-22"), Some((1073, 4, 22)));
        assert_eq!(parse_date("1073-04-22T00:00:00Z"), Some((1073, 4, 22)));
        assert_eq!(parse_date("-500"), Some((-500, 1, 1)));
        assert_eq!(parse_date("1073-13-01"), None);
        assert_eq!(parse_date("abc"), None);
    }

    #[test]
    fn prefix_table_overrides() {
        let t = PrefixTable::from_json(r#"{"wd": "https://example.org/e/"}"#).unwrap();
        let iri: Iri = "wd:Q1".parse().unwrap();
        assert_eq!(iri.expand(&t), "https://example.org/e/Q1");
        let p: Iri = "wdt:P31".parse().unwrap();
        assert_eq!(p.expand(&t), "http://www.wikidata.org/prop/direct/P31");
    }
}
