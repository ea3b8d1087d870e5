//! Deterministic keyword and pattern parser.
//!
//! Works clause by clause. Numbers become range predicates, schema values
//! become equality predicates (or disliked phrases when negated), and what
//! is left after a preference cue becomes a liked or disliked phrase.

use std::collections::BTreeMap;

use crate::catalog::{AttributeKind, FilterSet, Predicate};

use super::{pending_question, ParseError, ParsedTurn, ParserAdapter, Patience, SchemaSummary, Turn};

const SKIP_PHRASES: &[&str] = &[
    "just show me",
    "show me what you have",
    "show me what you've got",
    "skip",
    "whatever",
    "stop asking",
    "enough questions",
    "just recommend",
    "get on with it",
];

/// Explicit "no preference" answers: informative, so not impatient.
const DECLINE_PHRASES: &[&str] = &[
    "no preference",
    "no particular preference",
    "don't care",
    "dont care",
    "do not care",
    "doesn't matter",
    "does not matter",
    "not picky",
    "any is fine",
    "either is fine",
    "anything is fine",
    "no idea",
    "not sure",
];

const ALIASES: &[(&str, &str)] = &[
    ("gas", "gasoline"),
    ("petrol", "gasoline"),
    ("ev", "electric"),
    ("evs", "electric"),
    ("auto", "automatic"),
    ("stick", "manual"),
    ("truck", "pickup"),
    ("trucks", "pickup"),
    ("preowned", "used"),
    ("pre-owned", "used"),
    ("secondhand", "used"),
    ("chevy", "chevrolet"),
    ("vw", "volkswagen"),
    ("merc", "mercedes-benz"),
    ("mercedes", "mercedes-benz"),
];

const NEGATIONS: &[&str] = &[
    "no", "not", "avoid", "without", "hate", "don't", "dont", "never", "except", "dislike", "nothing",
];

const HI_BEFORE: &[&[&str]] = &[
    &["no", "more", "than"],
    &["less", "than"],
    &["up", "to"],
    &["at", "most"],
    &["cheaper", "than"],
    &["fewer", "than"],
    &["under"],
    &["below"],
    &["max"],
    &["maximum"],
    &["within"],
    &["before"],
    &["budget"],
    &["budget", "is"],
    &["budget", "of"],
    &["around"],
    &["about"],
];

const LO_BEFORE: &[&[&str]] = &[
    &["more", "than"],
    &["at", "least"],
    &["newer", "than"],
    &["over"],
    &["above"],
    &["min"],
    &["minimum"],
    &["after"],
    &["since"],
];

const HI_AFTER: &[&[&str]] = &[
    &["or", "less"],
    &["or", "under"],
    &["or", "below"],
    &["or", "cheaper"],
    &["or", "older"],
    &["max"],
    &["tops"],
    &["maximum"],
];

const LO_AFTER: &[&[&str]] = &[
    &["or", "newer"],
    &["or", "later"],
    &["or", "more"],
    &["or", "above"],
    &["and", "up"],
    &["and", "newer"],
    &["and", "above"],
];

const DISLIKE_CUES: &[&[&str]] = &[
    &["don't", "want"],
    &["dont", "want"],
    &["do", "not", "want"],
    &["don't", "like"],
    &["dont", "like"],
    &["do", "not", "like"],
    &["can't", "stand"],
    &["cant", "stand"],
    &["worried", "about"],
    &["concerned", "about"],
    &["tired", "of"],
    &["hate"],
    &["avoid"],
    &["dislike"],
    &["no"],
    &["without"],
    &["not"],
    &["never"],
];

const LIKE_CUES: &[&[&str]] = &[
    &["looking", "for"],
    &["must", "have"],
    &["care", "about"],
    &["would", "like"],
    &["love"],
    &["want"],
    &["need"],
    &["like"],
    &["prefer"],
    &["enjoy"],
    &["with"],
];

/// Dropped from preference phrases.
const FILLER: &[&str] = &[
    "a", "an", "the", "some", "my", "our", "i", "i'm", "im", "we", "to", "have", "has", "get",
    "buy", "find", "car", "cars", "vehicle", "vehicles", "something", "one", "it", "that", "which",
    "is", "are", "be", "really", "very", "also", "just", "please", "too", "lots", "of", "plenty",
    "me", "would", "like", "for", "something", "any", "thing", "things", "lot",
];

const CURRENCY_WORDS: &[&str] = &["budget", "price", "cost", "spend", "dollars", "bucks", "usd", "cheap", "afford"];

#[derive(Debug, Clone)]
struct Token {
    word: String,
    consumed: bool,
}

/// The default [`ParserAdapter`]: stateless and deterministic.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleParser;

impl ParserAdapter for RuleParser {
    fn parse(&self, text: &str, schema: &SchemaSummary, history: &[Turn]) -> Result<ParsedTurn, ParseError> {
        Ok(parse_turn_rule_based(text, schema, history))
    }
}

fn normalize(text: &str) -> String {
    text.to_lowercase()
        .replace(['\u{2019}', '\u{2018}'], "'")
        .replace(['\u{2013}', '\u{2014}'], "-")
}

fn contains_phrase(text: &str, phrase: &str) -> bool {
    let words: Vec<&str> = text
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .collect();
    let target: Vec<&str> = phrase.split_whitespace().collect();
    words.windows(target.len()).any(|w| w == target.as_slice())
}

/// Splits on sentence punctuation, on commas that are not digit separators
/// and on the word "but".
fn clauses(text: &str) -> Vec<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut parts = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let next_digit = chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        let boundary = match c {
            ';' | '!' | '?' | '\n' => true,
            ',' | '.' => !next_digit,
            _ => false,
        };
        if boundary {
            parts.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    parts.push(cur);

    let mut out = Vec::new();
    for part in parts {
        let mut clause = Vec::new();
        for raw in part.split_whitespace() {
            let word = raw
                .trim_matches(|c: char| !(c.is_alphanumeric() || c == '$' || c == '+' || c == '\''))
                .trim_matches('\'')
                .to_string();
            if word.is_empty() {
                continue;
            }
            if word == "but" {
                if !clause.is_empty() {
                    out.push(std::mem::take(&mut clause));
                }
                continue;
            }
            clause.push(Token { word, consumed: false });
        }
        if !clause.is_empty() {
            out.push(clause);
        }
    }
    out
}

fn matches_at(tokens: &[Token], at: usize, pattern: &[&str]) -> bool {
    at + pattern.len() <= tokens.len()
        && pattern
            .iter()
            .enumerate()
            .all(|(j, p)| !tokens[at + j].consumed && tokens[at + j].word == *p)
}

/// Longest cue from `cues` ending right before `at`, as its start index.
fn cue_before(tokens: &[Token], at: usize, cues: &[&[&str]]) -> Option<usize> {
    cues.iter()
        .filter(|c| c.len() <= at && matches_at(tokens, at - c.len(), c))
        .max_by_key(|c| c.len())
        .map(|c| at - c.len())
}

fn cue_after(tokens: &[Token], at: usize, cues: &[&[&str]]) -> Option<usize> {
    cues.iter()
        .filter(|c| matches_at(tokens, at, c))
        .map(|c| at + c.len())
        .max()
}

#[derive(Debug, Clone, Copy)]
struct Amount {
    lo: f64,
    hi: Option<f64>,
    currency: bool,
    plus: bool,
}

fn parse_scalar(s: &str) -> Option<(f64, bool, bool)> {
    let currency = s.starts_with('$');
    let s = s.trim_start_matches('$').replace(',', "");
    let (s, k) = match s.strip_suffix('k') {
        Some(rest) => (rest.to_string(), true),
        None => (s, false),
    };
    if s.is_empty() || !s.chars().next()?.is_ascii_digit() {
        return None;
    }
    let v: f64 = s.parse().ok()?;
    Some((if k { v * 1000.0 } else { v }, currency, k))
}

fn parse_amount(word: &str) -> Option<Amount> {
    let (word, plus) = match word.strip_suffix('+') {
        Some(w) => (w, true),
        None => (word, false),
    };
    if let Some((a, b)) = word.split_once('-') {
        let (lo, c1, k1) = parse_scalar(a)?;
        let (hi, c2, k2) = parse_scalar(b)?;
        // "20-30k" means 20k to 30k.
        let lo = if k2 && !k1 && lo < 1000.0 { lo * 1000.0 } else { lo };
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        return Some(Amount { lo, hi: Some(hi), currency: c1 || c2 || k1 || k2, plus });
    }
    let (v, c, k) = parse_scalar(word)?;
    Some(Amount { lo: v, hi: None, currency: c || k, plus })
}

fn unit_words(unit: &str) -> Vec<String> {
    let u = unit.to_lowercase();
    let mut words = vec![u.clone()];
    if let Some(s) = u.strip_suffix('s') {
        words.push(s.to_string());
    } else {
        words.push(format!("{u}s"));
    }
    if u == "miles" {
        words.push("mi".into());
    }
    words
}

struct Dims<'a> {
    schema: &'a SchemaSummary,
    currency: Option<&'a str>,
    year: Option<&'a str>,
}

impl<'a> Dims<'a> {
    fn new(schema: &'a SchemaSummary) -> Self {
        let continuous = || schema.dimensions.iter().filter(|d| d.kind == AttributeKind::Continuous);
        let currency = continuous()
            .find(|d| d.unit.as_deref().is_some_and(crate::catalog::is_currency_unit))
            .map(|d| d.name.as_str());
        let year = continuous()
            .find(|d| d.name.to_lowercase().contains("year"))
            .map(|d| d.name.as_str());
        Self { schema, currency, year }
    }

    fn is_continuous(&self, dim: &str) -> bool {
        self.schema
            .dimension(dim)
            .is_some_and(|d| d.kind == AttributeKind::Continuous)
    }

    /// Continuous dimension whose unit is `word`.
    fn by_unit(&self, word: &str) -> Option<&'a str> {
        self.schema
            .dimensions
            .iter()
            .filter(|d| d.kind == AttributeKind::Continuous && Some(d.name.as_str()) != self.currency)
            .find(|d| d.unit.as_deref().is_some_and(|u| unit_words(u).iter().any(|w| w == word)))
            .map(|d| d.name.as_str())
    }

    /// Continuous dimension named by `word` (its name or a label word).
    fn by_keyword(&self, word: &str) -> Option<&'a str> {
        if CURRENCY_WORDS.contains(&word) {
            return self.currency;
        }
        self.schema
            .dimensions
            .iter()
            .filter(|d| d.kind == AttributeKind::Continuous)
            .find(|d| {
                d.name.to_lowercase() == word
                    || d.label.to_lowercase().split_whitespace().any(|w| w == word && w.len() > 3)
            })
            .map(|d| d.name.as_str())
    }
}

#[derive(Default)]
struct Bounds {
    lo: Option<f64>,
    hi: Option<f64>,
}

fn extract_numbers(
    clause: &mut [Token],
    dims: &Dims,
    pending: Option<&str>,
    ranges: &mut BTreeMap<String, Bounds>,
) {
    let mut i = 0;
    while i < clause.len() {
        if clause[i].consumed {
            i += 1;
            continue;
        }
        let Some(mut amount) = parse_amount(&clause[i].word) else {
            i += 1;
            continue;
        };
        let start = i;
        let mut end = i + 1;
        if end < clause.len() && matches!(clause[end].word.as_str(), "k" | "thousand" | "grand") {
            amount.lo *= 1000.0;
            amount.hi = amount.hi.map(|h| h * 1000.0);
            amount.currency = true;
            end += 1;
        }
        // "between X and Y" / "from X to Y"
        let mut second = None;
        if amount.hi.is_none()
            && end + 1 < clause.len()
            && matches!(clause[end].word.as_str(), "and" | "to" | "-")
        {
            if let Some(b) = parse_amount(&clause[end + 1].word) {
                if b.hi.is_none() {
                    second = Some(b);
                }
            }
        }
        let mut range_start = start;
        if let Some(mut b) = second {
            let mut stop = end + 2;
            if stop < clause.len() && matches!(clause[stop].word.as_str(), "k" | "thousand" | "grand") {
                b.lo *= 1000.0;
                b.currency = true;
                stop += 1;
            }
            if b.currency && !amount.currency && amount.lo < 1000.0 {
                amount.lo *= 1000.0;
            }
            let (lo, hi) = if amount.lo <= b.lo { (amount.lo, b.lo) } else { (b.lo, amount.lo) };
            amount = Amount { lo, hi: Some(hi), currency: amount.currency || b.currency, plus: false };
            end = stop;
            if start > 0 && matches!(clause[start - 1].word.as_str(), "between" | "from") {
                range_start = start - 1;
            }
        }

        let mut dim: Option<&str> = None;
        let mut unit_end = end;
        if end < clause.len() {
            let w = clause[end].word.as_str();
            if let Some(d) = dims.by_unit(w) {
                dim = Some(d);
                unit_end = end + 1;
            } else if matches!(w, "dollars" | "bucks" | "usd") {
                dim = dims.currency;
                unit_end = end + 1;
            }
        }
        if dim.is_none() && amount.currency {
            dim = dims.currency;
        }
        let integral_year = |v: f64| v.fract() == 0.0 && (1900.0..=2100.0).contains(&v);
        if dim.is_none() && !amount.currency && integral_year(amount.lo) && amount.hi.is_none_or(integral_year) {
            dim = dims.year;
        }
        if dim.is_none() {
            let lookback = range_start.saturating_sub(4);
            dim = (lookback..range_start)
                .rev()
                .find_map(|j| dims.by_keyword(&clause[j].word));
        }
        if dim.is_none() {
            dim = pending.filter(|p| dims.is_continuous(p));
        }
        let Some(dim) = dim else {
            i = end;
            continue;
        };

        let mut consumed_from = range_start;
        let mut consumed_to = unit_end;
        let bounds = ranges.entry(dim.to_string()).or_default();
        if let Some(hi) = amount.hi {
            bounds.lo = Some(amount.lo);
            bounds.hi = Some(hi);
        } else {
            let v = amount.lo;
            let hi_b = cue_before(clause, range_start, HI_BEFORE);
            let lo_b = cue_before(clause, range_start, LO_BEFORE);
            let hi_a = cue_after(clause, unit_end, HI_AFTER);
            let lo_a = cue_after(clause, unit_end, LO_AFTER);
            let lower = if amount.plus || lo_a.is_some() {
                true
            } else if hi_a.is_some() {
                false
            } else {
                match (lo_b, hi_b) {
                    // Longer cue wins: "no more than" beats "more than".
                    (Some(l), Some(h)) => l < h,
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (None, None) => Some(dim) == dims.year,
                }
            };
            if let Some(s) = if lower { lo_b } else { hi_b } {
                consumed_from = consumed_from.min(s);
            }
            if let Some(e) = if lower { lo_a } else { hi_a } {
                consumed_to = consumed_to.max(e);
            }
            if lower {
                bounds.lo = Some(v);
            } else {
                bounds.hi = Some(v);
            }
        }
        for t in &mut clause[consumed_from..consumed_to] {
            t.consumed = true;
        }
        i = consumed_to;
    }
}

struct Vocabulary<'a> {
    /// lowercase value tokens → (dimension, canonical value)
    entries: Vec<(Vec<String>, &'a str, &'a str)>,
}

impl<'a> Vocabulary<'a> {
    fn new(schema: &'a SchemaSummary) -> Self {
        let mut entries = Vec::new();
        for d in schema.dimensions.iter().filter(|d| d.kind == AttributeKind::Categorical) {
            for v in &d.values {
                let toks: Vec<String> = normalize(v).split_whitespace().map(str::to_string).collect();
                if !toks.is_empty() {
                    entries.push((toks, d.name.as_str(), v.as_str()));
                }
            }
        }
        // Longest values first so "mercedes-benz" style and multiword values win.
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
        Self { entries }
    }

    fn word_matches(value_word: &str, word: &str) -> bool {
        if value_word == word {
            return true;
        }
        if let Some(stem) = word.strip_suffix("es").filter(|s| *s == value_word) {
            return !stem.is_empty();
        }
        if word.strip_suffix('s') == Some(value_word) {
            return true;
        }
        ALIASES
            .iter()
            .any(|(alias, canon)| *alias == word && *canon == value_word)
    }

    /// All (dimension, value, length) matches starting at `at`.
    fn matches_at(&self, tokens: &[Token], at: usize) -> Vec<(&'a str, &'a str, usize)> {
        let mut found: Vec<(&str, &str, usize)> = Vec::new();
        for (toks, dim, value) in &self.entries {
            let n = toks.len();
            if at + n > tokens.len() {
                continue;
            }
            let hit = (0..n).all(|j| !tokens[at + j].consumed && Self::word_matches(&toks[j], &tokens[at + j].word));
            if hit && found.first().is_none_or(|f| f.2 == n) {
                found.push((dim, value, n));
            }
        }
        found
    }
}

fn dimension_hint<'a>(clause: &[Token], dims: &'a SchemaSummary, options: &[&'a str]) -> Option<&'a str> {
    dims.dimensions
        .iter()
        .filter(|d| options.contains(&d.name.as_str()))
        .find(|d| {
            let mut words: Vec<String> = d.name.to_lowercase().split('_').map(str::to_string).collect();
            words.extend(d.label.to_lowercase().split_whitespace().map(str::to_string));
            clause.iter().any(|t| words.iter().any(|w| w.len() > 3 && *w == t.word))
        })
        .map(|d| d.name.as_str())
}

fn extract_values(
    clause: &mut [Token],
    schema: &SchemaSummary,
    vocab: &Vocabulary,
    pending: Option<&str>,
    values: &mut BTreeMap<String, Vec<String>>,
    disliked: &mut Vec<String>,
) {
    let mut i = 0;
    while i < clause.len() {
        let found = vocab.matches_at(clause, i);
        if found.is_empty() {
            i += 1;
            continue;
        }
        let n = found[0].2;
        let chosen = if found.len() == 1 {
            Some((found[0].0, found[0].1))
        } else {
            let options: Vec<&str> = found.iter().map(|f| f.0).collect();
            dimension_hint(clause, schema, &options)
                .or_else(|| pending.filter(|p| options.contains(p)))
                .and_then(|d| found.iter().find(|f| f.0 == d).map(|f| (f.0, f.1)))
        };
        let Some((dim, value)) = chosen else {
            i += n;
            continue;
        };
        let negated = (i.saturating_sub(3)..i).any(|j| NEGATIONS.contains(&clause[j].word.as_str()));
        if negated {
            let phrase = clause[i..i + n].iter().map(|t| t.word.as_str()).collect::<Vec<_>>().join(" ");
            if !disliked.contains(&phrase) {
                disliked.push(phrase);
            }
        } else {
            let entry = values.entry(dim.to_string()).or_default();
            if !entry.iter().any(|v| v == value) {
                entry.push(value.to_string());
            }
        }
        for t in &mut clause[i..i + n] {
            t.consumed = true;
        }
        i += n;
    }
}

fn finish_phrase(tokens: &[Token], out: &mut Vec<String>) {
    let mut part: Vec<&str> = Vec::new();
    let mut flush = |part: &mut Vec<&str>| {
        // Filler is trimmed from the edges only: "value for money" stays whole.
        let keep = |w: &&str| !FILLER.contains(w) && w.chars().any(|c| c.is_alphabetic());
        let start = part.iter().position(keep).unwrap_or(part.len());
        let end = part.iter().rposition(keep).map_or(start, |e| e + 1);
        let kept = &part[start..end];
        if !kept.is_empty() {
            let phrase = kept.join(" ");
            if !out.contains(&phrase) {
                out.push(phrase);
            }
        }
        part.clear();
    };
    for t in tokens {
        if t.consumed {
            // Consumed spans separate phrases.
            flush(&mut part);
        } else if matches!(t.word.as_str(), "and" | "or" | "&" | "plus") {
            flush(&mut part);
        } else {
            part.push(&t.word);
        }
    }
    flush(&mut part);
}

fn extract_phrases(clause: &mut [Token], liked: &mut Vec<String>, disliked: &mut Vec<String>) {
    // (start, end, is_like) of every cue, longest match at each position.
    let mut cues: Vec<(usize, usize, bool)> = Vec::new();
    let mut i = 0;
    while i < clause.len() {
        let d = DISLIKE_CUES.iter().filter(|c| matches_at(clause, i, c)).map(|c| c.len()).max();
        let l = LIKE_CUES.iter().filter(|c| matches_at(clause, i, c)).map(|c| c.len()).max();
        match (d, l) {
            (Some(dn), Some(ln)) if ln > dn => {
                cues.push((i, i + ln, true));
                i += ln;
            }
            (Some(dn), _) => {
                cues.push((i, i + dn, false));
                i += dn;
            }
            (None, Some(ln)) => {
                cues.push((i, i + ln, true));
                i += ln;
            }
            (None, None) => i += 1,
        }
    }
    for (n, &(_, end, like)) in cues.iter().enumerate() {
        let stop = cues.get(n + 1).map_or(clause.len(), |c| c.0);
        let target = if like { &mut *liked } else { &mut *disliked };
        finish_phrase(&clause[end..stop], target);
    }
}

/// Parses one user message. Never fails; unrecognized text gives an empty
/// delta and a patient signal.
pub fn parse_turn_rule_based(text: &str, schema: &SchemaSummary, history: &[Turn]) -> ParsedTurn {
    let norm = normalize(text);
    let pending = pending_question(history);
    let dims = Dims::new(schema);
    let vocab = Vocabulary::new(schema);

    let skipped = SKIP_PHRASES.iter().any(|p| contains_phrase(&norm, p));
    let declined = DECLINE_PHRASES.iter().any(|p| contains_phrase(&norm, p));

    let mut cls = clauses(&norm);
    // Skip and decline phrases carry no preference content.
    for clause in &mut cls {
        for phrases in [SKIP_PHRASES, DECLINE_PHRASES] {
            for p in phrases {
                let pat: Vec<&str> = p.split_whitespace().collect();
                for at in 0..clause.len() {
                    if matches_at(clause, at, &pat) {
                        for t in &mut clause[at..at + pat.len()] {
                            t.consumed = true;
                        }
                    }
                }
            }
        }
    }

    let mut ranges: BTreeMap<String, Bounds> = BTreeMap::new();
    let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut liked = Vec::new();
    let mut disliked = Vec::new();
    for clause in &mut cls {
        extract_numbers(clause, &dims, pending, &mut ranges);
        extract_values(clause, schema, &vocab, pending, &mut values, &mut disliked);
        extract_phrases(clause, &mut liked, &mut disliked);
    }

    let mut delta = FilterSet::new();
    for (dim, b) in ranges {
        if b.lo.is_some() || b.hi.is_some() {
            delta.insert(&dim, Predicate::range(b.lo, b.hi));
        }
    }
    for (dim, vals) in values {
        let pred = if vals.len() == 1 {
            Predicate::equals(vals[0].clone())
        } else {
            Predicate::one_of(vals)
        };
        delta.insert(&dim, pred);
    }

    let word_count = norm.split_whitespace().count();
    let mut parsed = ParsedTurn {
        filter_delta: delta,
        liked,
        disliked,
        patience: Patience::Patient,
    };
    let terse = pending.is_some() && word_count <= 2 && parsed.is_empty() && !declined;
    if skipped || terse {
        parsed.patience = Patience::Impatient;
    }
    parsed
}
