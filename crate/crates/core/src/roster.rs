//! Input records and their delimiter-separated file schemas.
//!
//! Every file is UTF-8 CSV with a header row. Missing values are empty
//! fields. Parse failures name the file, the 1-based line (header = 1) and
//! the column.

use std::collections::{HashMap, HashSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::partisan::{AgeGroup, DemoKey, DemographicLikelihoodTable, Demographics, PrecinctRow};

pub const VOTER_COLUMNS: &[&str] = &[
    "voter_id",
    "first",
    "last",
    "city",
    "state",
    "lat",
    "lon",
    "party_label",
    "age",
    "gender",
    "race",
    "precinct_id",
];
pub const ACCOUNT_COLUMNS: &[&str] = &["account_id", "first", "last", "city", "state"];
pub const EDGE_COLUMNS: &[&str] = &["src_account_id", "dst_account_id"];
pub const ELITE_COLUMNS: &[&str] = &["account_id", "anchor_side"];
pub const PRECINCT_COLUMNS: &[&str] = &["precinct_id", "state", "share_dem", "share_rep", "total_votes"];
pub const LIKELIHOOD_COLUMNS: &[&str] = &["age_group", "gender", "race", "p_dem", "p_rep", "p_ind"];
pub const STATE_RESULT_COLUMNS: &[&str] = &["state", "share_dem", "share_rep"];

/// Marker used in all three demographic columns of the likelihood table for
/// the marginal fallback row.
pub const WILDCARD: &str = "*";

#[derive(Debug, Clone, PartialEq)]
pub struct VoterRecord {
    pub voter_id: String,
    pub first: String,
    pub last: String,
    pub city: String,
    pub state: String,
    pub location: Option<GeoPoint>,
    pub party_label: Option<String>,
    pub demographics: Demographics,
    pub precinct_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialAccount {
    pub account_id: String,
    pub first: String,
    pub last: String,
    pub city: String,
    pub state: String,
}

/// `src` follows `dst`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FollowEdge {
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorSide {
    Conservative,
    Liberal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elite {
    pub account_id: String,
    pub anchor: Option<AnchorSide>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateResult {
    pub state: String,
    pub share_dem: f64,
    pub share_rep: f64,
}

/// A parsed CSV file with named-column access.
pub struct CsvTable {
    file: String,
    columns: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

pub struct Row<'a> {
    table: &'a CsvTable,
    line: u64,
    record: &'a csv::StringRecord,
}

impl CsvTable {
    pub fn read(path: &Path, required: &[&str]) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &bytes, required)
    }

    pub fn parse(file: &str, bytes: &[u8], required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let headers = reader
            .headers()
            .map_err(|e| Error::schema(file, 1, "", e.to_string()))?
            .clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::schema(file, 1, "", "missing header row"));
        }
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        for col in required {
            if !columns.contains_key(*col) {
                return Err(Error::schema(file, 1, *col, "required column missing from header"));
            }
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::schema(file, line, "", e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(CsvTable {
            file: file.to_string(),
            columns,
            rows,
        })
    }

    pub fn file(&self) -> &str {
        &self.file
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn require_rows(&self) -> Result<()> {
        if self.rows.is_empty() {
            Err(Error::schema(&self.file, 1, "", "file has no data rows"))
        } else {
            Ok(())
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.rows.iter().map(|(line, record)| Row {
            table: self,
            line: *line,
            record,
        })
    }
}

impl<'a> Row<'a> {
    pub fn line(&self) -> u64 {
        self.line
    }

    pub fn error(&self, column: &str, message: impl Into<String>) -> Error {
        Error::schema(&self.table.file, self.line, column, message)
    }

    /// Trimmed value, `None` when empty or when the column is absent.
    pub fn opt(&self, column: &str) -> Option<&'a str> {
        let idx = *self.table.columns.get(column)?;
        let v = self.record.get(idx)?.trim();
        (!v.is_empty()).then_some(v)
    }

    pub fn req(&self, column: &str) -> Result<&'a str> {
        self.opt(column)
            .ok_or_else(|| self.error(column, "required value is empty"))
    }

    pub fn parse_opt<T>(&self, column: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.opt(column) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| self.error(column, format!("cannot parse `{v}`: {e}"))),
        }
    }

    pub fn parse_req<T>(&self, column: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.parse_opt(column)?
            .ok_or_else(|| self.error(column, "required value is empty"))
    }

    pub fn f64_req(&self, column: &str) -> Result<f64> {
        let v: f64 = self.parse_req(column)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(column, "value must be finite"))
        }
    }
}

fn check_unique<'a>(seen: &mut HashSet<&'a str>, row: &Row<'a>, column: &str) -> Result<&'a str> {
    let id = row.req(column)?;
    if !seen.insert(id) {
        return Err(row.error(column, format!("duplicate id `{id}`")));
    }
    Ok(id)
}

pub fn parse_voters(table: &CsvTable) -> Result<Vec<VoterRecord>> {
    table.require_rows()?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(table.len());
    for row in table.rows() {
        let voter_id = check_unique(&mut seen, &row, "voter_id")?.to_string();
        let lat: Option<f64> = row.parse_opt("lat")?;
        let lon: Option<f64> = row.parse_opt("lon")?;
        let location = match (lat, lon) {
            (Some(lat), Some(lon)) => {
                Some(GeoPoint::new(lat, lon).map_err(|e| row.error("lat", e.to_string()))?)
            }
            (None, None) => None,
            (Some(_), None) => return Err(row.error("lon", "lat given without lon")),
            (None, Some(_)) => return Err(row.error("lat", "lon given without lat")),
        };
        out.push(VoterRecord {
            voter_id,
            first: row.opt("first").unwrap_or("").to_string(),
            last: row.opt("last").unwrap_or("").to_string(),
            city: row.opt("city").unwrap_or("").to_string(),
            state: row.req("state")?.to_string(),
            location,
            party_label: row.opt("party_label").map(str::to_string),
            demographics: Demographics {
                age: row.parse_opt("age")?,
                gender: row.opt("gender").map(str::to_string),
                race: row.opt("race").map(str::to_string),
            },
            precinct_id: row.opt("precinct_id").map(str::to_string),
        });
    }
    Ok(out)
}

pub fn read_voters(path: &Path) -> Result<Vec<VoterRecord>> {
    parse_voters(&CsvTable::read(path, VOTER_COLUMNS)?)
}

pub fn read_accounts(path: &Path) -> Result<Vec<SocialAccount>> {
    let table = CsvTable::read(path, ACCOUNT_COLUMNS)?;
    let mut seen = HashSet::new();
    table
        .rows()
        .map(|row| {
            Ok(SocialAccount {
                account_id: check_unique(&mut seen, &row, "account_id")?.to_string(),
                first: row.opt("first").unwrap_or("").to_string(),
                last: row.opt("last").unwrap_or("").to_string(),
                city: row.opt("city").unwrap_or("").to_string(),
                state: row.opt("state").unwrap_or("").to_string(),
            })
        })
        .collect()
}

pub fn read_edges(path: &Path) -> Result<Vec<FollowEdge>> {
    let table = CsvTable::read(path, EDGE_COLUMNS)?;
    table
        .rows()
        .map(|row| {
            Ok(FollowEdge {
                src: row.req("src_account_id")?.to_string(),
                dst: row.req("dst_account_id")?.to_string(),
            })
        })
        .collect()
}

pub fn read_elites(path: &Path) -> Result<Vec<Elite>> {
    let table = CsvTable::read(path, ELITE_COLUMNS)?;
    table.require_rows()?;
    let mut seen = HashSet::new();
    table
        .rows()
        .map(|row| {
            let account_id = check_unique(&mut seen, &row, "account_id")?.to_string();
            let anchor = match row.opt("anchor_side").map(str::to_lowercase).as_deref() {
                None => None,
                Some("conservative") => Some(AnchorSide::Conservative),
                Some("liberal") => Some(AnchorSide::Liberal),
                Some(other) => {
                    return Err(row.error(
                        "anchor_side",
                        format!("expected `conservative`, `liberal` or empty, got `{other}`"),
                    ))
                }
            };
            Ok(Elite { account_id, anchor })
        })
        .collect()
}

pub fn read_precinct_priors(path: &Path) -> Result<Vec<PrecinctRow>> {
    let table = CsvTable::read(path, &PRECINCT_COLUMNS[..4])?;
    table.require_rows()?;
    table
        .rows()
        .map(|row| {
            let share_dem = row.f64_req("share_dem")?;
            let share_rep = row.f64_req("share_rep")?;
            if share_dem < 0.0 || share_rep < 0.0 || share_dem + share_rep > 1.0 + 1e-9 {
                return Err(row.error("share_dem", "shares must be non-negative and sum to at most 1"));
            }
            Ok(PrecinctRow {
                precinct_id: row.req("precinct_id")?.to_string(),
                state: row.req("state")?.to_string(),
                share_dem,
                share_rep,
                total_votes: row.parse_opt("total_votes")?,
            })
        })
        .collect()
}

pub fn read_likelihood_table(path: &Path) -> Result<DemographicLikelihoodTable> {
    let table = CsvTable::read(path, LIKELIHOOD_COLUMNS)?;
    table.require_rows()?;
    let mut out = DemographicLikelihoodTable::default();
    for row in table.rows() {
        let lik = [row.f64_req("p_dem")?, row.f64_req("p_rep")?, row.f64_req("p_ind")?];
        let (age, gender, race) = (row.req("age_group")?, row.req("gender")?, row.req("race")?);
        let res = if [age, gender, race].iter().all(|v| *v == WILDCARD) {
            out.set_fallback(lik)
        } else {
            let group = AgeGroup::from_label(age)
                .ok_or_else(|| row.error("age_group", format!("unknown age group `{age}`")))?;
            out.insert(DemoKey::new(group, gender, race), lik)
        };
        res.map_err(|e| row.error("p_dem", e.to_string()))?;
    }
    Ok(out)
}

pub fn read_state_results(path: &Path) -> Result<Vec<StateResult>> {
    let table = CsvTable::read(path, STATE_RESULT_COLUMNS)?;
    let mut seen = HashSet::new();
    table
        .rows()
        .map(|row| {
            Ok(StateResult {
                state: check_unique(&mut seen, &row, "state")?.to_string(),
                share_dem: row.f64_req("share_dem")?,
                share_rep: row.f64_req("share_rep")?,
            })
        })
        .collect()
}

/// Serializes rows into CSV bytes with the given header.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    w.write_record(header).expect("in-memory csv write");
    for r in rows {
        w.write_record(r).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn voters_csv(voters: &[VoterRecord]) -> Vec<u8> {
    csv_bytes(
        VOTER_COLUMNS,
        voters.iter().map(|v| {
            vec![
                v.voter_id.clone(),
                v.first.clone(),
                v.last.clone(),
                v.city.clone(),
                v.state.clone(),
                opt_str(&v.location.map(|p| p.lat())),
                opt_str(&v.location.map(|p| p.lon())),
                opt_str(&v.party_label),
                opt_str(&v.demographics.age),
                opt_str(&v.demographics.gender),
                opt_str(&v.demographics.race),
                opt_str(&v.precinct_id),
            ]
        }),
    )
}

pub fn accounts_csv(accounts: &[SocialAccount]) -> Vec<u8> {
    csv_bytes(
        ACCOUNT_COLUMNS,
        accounts
            .iter()
            .map(|a| [&a.account_id, &a.first, &a.last, &a.city, &a.state]),
    )
}

pub fn edges_csv(edges: &[FollowEdge]) -> Vec<u8> {
    csv_bytes(EDGE_COLUMNS, edges.iter().map(|e| [&e.src, &e.dst]))
}

pub fn elites_csv(elites: &[Elite]) -> Vec<u8> {
    csv_bytes(
        ELITE_COLUMNS,
        elites.iter().map(|e| {
            let side = match e.anchor {
                Some(AnchorSide::Conservative) => "conservative",
                Some(AnchorSide::Liberal) => "liberal",
                None => "",
            };
            [e.account_id.as_str(), side]
        }),
    )
}

pub fn precinct_priors_csv(rows: &[PrecinctRow]) -> Vec<u8> {
    csv_bytes(
        PRECINCT_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.precinct_id.clone(),
                r.state.clone(),
                r.share_dem.to_string(),
                r.share_rep.to_string(),
                opt_str(&r.total_votes),
            ]
        }),
    )
}

pub fn likelihood_table_csv(table: &DemographicLikelihoodTable) -> Vec<u8> {
    let mut rows: Vec<Vec<String>> = table
        .rows()
        .map(|(k, l)| {
            vec![
                k.age_group.label().to_string(),
                k.gender.clone(),
                k.race.clone(),
                l[0].to_string(),
                l[1].to_string(),
                l[2].to_string(),
            ]
        })
        .collect();
    if let Some(f) = table.fallback() {
        let mut row = vec![WILDCARD.to_string(); 3];
        row.extend(f.iter().map(|x| x.to_string()));
        rows.push(row);
    }
    csv_bytes(LIKELIHOOD_COLUMNS, rows)
}

pub fn state_results_csv(rows: &[StateResult]) -> Vec<u8> {
    csv_bytes(
        STATE_RESULT_COLUMNS,
        rows.iter()
            .map(|r| vec![r.state.clone(), r.share_dem.to_string(), r.share_rep.to_string()]),
    )
}
