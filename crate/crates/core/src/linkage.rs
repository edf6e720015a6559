//! Exact one-to-one linkage between voter rows and social accounts on
//! normalized (first, last, city, state) keys.
//!
//! A key participates only if it occurs exactly once in each roster; every
//! ambiguous key is dropped on both sides.

use std::collections::HashMap;

use serde::Serialize;

use crate::roster::{SocialAccount, VoterRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub strip_punctuation: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            strip_punctuation: true,
        }
    }
}

/// Lowercase, optionally drop punctuation, collapse runs of whitespace.
pub fn normalize(text: &str, opts: NormalizeOptions) -> String {
    let lowered = text.to_lowercase();
    let kept: String = if opts.strip_punctuation {
        lowered
            .chars()
            .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
            .collect()
    } else {
        lowered
    };
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkKey {
    pub first: String,
    pub last: String,
    pub city: String,
    pub state: String,
}

impl LinkKey {
    /// `None` when any component is empty after normalization.
    pub fn new(first: &str, last: &str, city: &str, state: &str, opts: NormalizeOptions) -> Option<Self> {
        let key = LinkKey {
            first: normalize(first, opts),
            last: normalize(last, opts),
            city: normalize(city, opts),
            state: normalize(state, opts),
        };
        let complete = [&key.first, &key.last, &key.city, &key.state]
            .iter()
            .all(|s| !s.is_empty());
        complete.then_some(key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkedPair {
    pub voter_id: String,
    pub account_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LinkReport {
    pub voters_total: usize,
    pub accounts_total: usize,
    pub voters_missing_key: usize,
    pub accounts_missing_key: usize,
    /// Rows whose key appears more than once within their own roster.
    pub voters_duplicate_key: usize,
    pub accounts_duplicate_key: usize,
    pub pairs: usize,
}

struct KeyCount<'a> {
    count: usize,
    id: &'a str,
}

fn index_keys<'a, I>(rows: I, opts: NormalizeOptions) -> (HashMap<LinkKey, KeyCount<'a>>, usize)
where
    I: Iterator<Item = (&'a str, [&'a str; 4])>,
{
    let mut map: HashMap<LinkKey, KeyCount<'a>> = HashMap::new();
    let mut missing = 0;
    for (id, [f, l, c, s]) in rows {
        match LinkKey::new(f, l, c, s, opts) {
            Some(k) => map.entry(k).or_insert(KeyCount { count: 0, id }).count += 1,
            None => missing += 1,
        }
    }
    (map, missing)
}

pub fn link(voters: &[VoterRecord], accounts: &[SocialAccount], opts: NormalizeOptions) -> (Vec<LinkedPair>, LinkReport) {
    let (vmap, vmiss) = index_keys(
        voters
            .iter()
            .map(|v| (v.voter_id.as_str(), [v.first.as_str(), &v.last, &v.city, &v.state])),
        opts,
    );
    let (amap, amiss) = index_keys(
        accounts
            .iter()
            .map(|a| (a.account_id.as_str(), [a.first.as_str(), &a.last, &a.city, &a.state])),
        opts,
    );
    let dup = |m: &HashMap<LinkKey, KeyCount<'_>>| m.values().filter(|c| c.count > 1).map(|c| c.count).sum();
    let mut pairs: Vec<LinkedPair> = vmap
        .iter()
        .filter(|(_, c)| c.count == 1)
        .filter_map(|(k, v)| {
            let a = amap.get(k).filter(|a| a.count == 1)?;
            Some(LinkedPair {
                voter_id: v.id.to_string(),
                account_id: a.id.to_string(),
            })
        })
        .collect();
    pairs.sort();
    let report = LinkReport {
        voters_total: voters.len(),
        accounts_total: accounts.len(),
        voters_missing_key: vmiss,
        accounts_missing_key: amiss,
        voters_duplicate_key: dup(&vmap),
        accounts_duplicate_key: dup(&amap),
        pairs: pairs.len(),
    };
    (pairs, report)
}
