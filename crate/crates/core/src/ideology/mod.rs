//! Ideology scaling by correspondence analysis of a user x elite follow
//! matrix.
//!
//! The fit diagonalizes the column Gram matrix of the standardized
//! residuals, which is elites x elites and small even when the training set
//! is large. Row coordinates are recovered through the transition formula,
//! the same path used to project supplementary users, so a training row
//! projected again lands exactly on its fitted coordinate.

mod model_file;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partisan::Party;
use crate::roster::{AnchorSide, Elite, FollowEdge};
use crate::stats::{percentile_sorted, sorted_copy};

pub use model_file::{read_model, write_model, MODEL_HEADER};

pub const DEFAULT_DIMS: usize = 3;
pub const DEFAULT_TRAINING_SIZE: usize = 50_000;
pub const DEFAULT_MIN_TRAINING_ELITES: usize = 10;
pub const DEFAULT_MIN_PROJECTION_ELITES: usize = 3;
pub const DEFAULT_MIN_POOL: usize = 100;
pub const MIN_CALIBRATION_USERS: usize = 10;

/// Relative eigenvalue floor below which a dimension counts as absent.
const RANK_TOL: f64 = 1e-10;

/// Sparse binary matrix. `rows[i]` holds sorted, distinct column indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub rows: Vec<Vec<u32>>,
}

impl FollowMatrix {
    /// Builds from per-row column ids. Unknown column ids are an error.
    pub fn from_named_rows(col_ids: Vec<String>, rows: Vec<(String, Vec<String>)>) -> Result<Self> {
        let index: HashMap<&str, u32> = col_ids
            .iter()
            .enumerate()
            .map(|(j, c)| (c.as_str(), j as u32))
            .collect();
        if index.len() != col_ids.len() {
            return Err(Error::DuplicateId("duplicate column id in follow matrix".into()));
        }
        let mut seen = HashSet::new();
        let mut row_ids = Vec::with_capacity(rows.len());
        let mut cells = Vec::with_capacity(rows.len());
        for (id, cols) in rows {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id));
            }
            let mut js: Vec<u32> = cols
                .iter()
                .map(|c| index.get(c.as_str()).copied().ok_or_else(|| Error::NotFound(format!("column `{c}`"))))
                .collect::<Result<_>>()?;
            js.sort_unstable();
            js.dedup();
            row_ids.push(id);
            cells.push(js);
        }
        Ok(FollowMatrix {
            row_ids,
            col_ids,
            rows: cells,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Drops empty rows and columns until none remain.
    pub fn prune(mut self) -> Self {
        loop {
            let before = (self.n_rows(), self.n_cols());
            let keep_row: Vec<bool> = self.rows.iter().map(|r| !r.is_empty()).collect();
            let (ids, rows): (Vec<String>, Vec<Vec<u32>>) = self
                .row_ids
                .into_iter()
                .zip(self.rows)
                .zip(keep_row)
                .filter_map(|(pair, keep)| keep.then_some(pair))
                .unzip();
            self.row_ids = ids;
            self.rows = rows;

            let mut used = vec![false; self.col_ids.len()];
            for &j in self.rows.iter().flatten() {
                used[j as usize] = true;
            }
            let mut remap = vec![u32::MAX; used.len()];
            let mut next = 0u32;
            for (j, &u) in used.iter().enumerate() {
                if u {
                    remap[j] = next;
                    next += 1;
                }
            }
            self.col_ids = self
                .col_ids
                .into_iter()
                .zip(&used)
                .filter_map(|(c, &u)| u.then_some(c))
                .collect();
            for row in &mut self.rows {
                for j in row.iter_mut() {
                    *j = remap[*j as usize];
                }
            }
            if (self.n_rows(), self.n_cols()) == before {
                return self;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows(), self.n_cols());
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                m[(i, j as usize)] = 1.0;
            }
        }
        m
    }
}

/// Elite follows per account, restricted to the elite roster.
pub fn elite_follows<'a>(edges: &'a [FollowEdge], elites: &[Elite]) -> BTreeMap<&'a str, BTreeSet<&'a str>> {
    let elite_ids: HashSet<&str> = elites.iter().map(|e| e.account_id.as_str()).collect();
    let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in edges {
        if elite_ids.contains(e.dst.as_str()) && e.src != e.dst {
            out.entry(e.src.as_str()).or_default().insert(e.dst.as_str());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingConfig {
    pub min_elites: usize,
    pub size: usize,
    pub min_pool: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            min_elites: DEFAULT_MIN_TRAINING_ELITES,
            size: DEFAULT_TRAINING_SIZE,
            min_pool: DEFAULT_MIN_POOL,
            seed: 0,
        }
    }
}

/// Seeded uniform sample of users following at least `min_elites` elites,
/// capped at `size`. Rows come out ordered by user id.
pub fn select_training(edges: &[FollowEdge], elites: &[Elite], cfg: &TrainingConfig) -> Result<FollowMatrix> {
    let follows = elite_follows(edges, elites);
    let pool: Vec<(&str, &BTreeSet<&str>)> = follows
        .iter()
        .filter(|(_, f)| f.len() >= cfg.min_elites)
        .map(|(u, f)| (*u, f))
        .collect();
    if pool.len() < cfg.min_pool {
        return Err(Error::InsufficientTraining {
            found: pool.len(),
            required: cfg.min_pool,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picked = if pool.len() <= cfg.size {
        (0..pool.len()).collect::<Vec<_>>()
    } else {
        rand::seq::index::sample(&mut rng, pool.len(), cfg.size).into_vec()
    };
    picked.sort_unstable();

    let mut col_ids: Vec<String> = elites.iter().map(|e| e.account_id.clone()).collect();
    col_ids.sort();
    col_ids.dedup();
    let rows = picked
        .into_iter()
        .map(|i| {
            let (u, f) = pool[i];
            (u.to_string(), f.iter().map(|s| s.to_string()).collect())
        })
        .collect();
    Ok(FollowMatrix::from_named_rows(col_ids, rows)?.prune())
}

/// Everything needed to score new users, without the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CaModel {
    pub col_ids: Vec<String>,
    pub col_masses: Vec<f64>,
    /// Standard column coordinates, `col_ids.len()` x `dims`.
    pub std_col_coords: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Mean and population sd of oriented dim-1 training row coordinates.
    pub mean: f64,
    pub sd: f64,
    /// Applied to dim 1 after the per-dimension canonical sign.
    pub orientation_sign: f64,
    pub training_rows: usize,
    col_index: HashMap<String, usize>,
}

impl CaModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        col_ids: Vec<String>,
        col_masses: Vec<f64>,
        std_col_coords: DMatrix<f64>,
        singular_values: Vec<f64>,
        mean: f64,
        sd: f64,
        orientation_sign: f64,
        training_rows: usize,
    ) -> Result<Self> {
        if std_col_coords.nrows() != col_ids.len() || col_masses.len() != col_ids.len() {
            return Err(Error::LengthMismatch {
                left: col_ids.len(),
                right: std_col_coords.nrows(),
            });
        }
        if std_col_coords.ncols() != singular_values.len() || singular_values.is_empty() {
            return Err(Error::DegenerateModel("dimension count mismatch".into()));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::DegenerateModel(format!("dim-1 sd {sd}")));
        }
        let col_index: HashMap<String, usize> = col_ids.iter().enumerate().map(|(j, c)| (c.clone(), j)).collect();
        if col_index.len() != col_ids.len() {
            return Err(Error::DuplicateId("duplicate elite in model".into()));
        }
        Ok(CaModel {
            col_ids,
            col_masses,
            std_col_coords,
            singular_values,
            mean,
            sd,
            orientation_sign,
            training_rows,
            col_index,
        })
    }

    pub fn dims(&self) -> usize {
        self.singular_values.len()
    }

    pub fn col(&self, elite_id: &str) -> Option<usize> {
        self.col_index.get(elite_id).copied()
    }

    /// Principal column coordinate of elite `j` on dimension `d`.
    pub fn principal_col(&self, j: usize, d: usize) -> f64 {
        self.std_col_coords[(j, d)] * self.singular_values[d]
    }

    /// Principal row coordinates, all dims, of a row following `cols`.
    pub fn raw_coords(&self, cols: &[usize]) -> Vec<f64> {
        let inv = 1.0 / cols.len() as f64;
        (0..self.dims())
            .map(|d| cols.iter().map(|&j| self.std_col_coords[(j, d)]).sum::<f64>() * inv)
            .collect()
    }

    pub fn standardize(&self, dim1: f64) -> f64 {
        (dim1 - self.mean) / self.sd
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaFit {
    pub model: CaModel,
    pub row_ids: Vec<String>,
    pub row_masses: Vec<f64>,
    /// Oriented principal row coordinates, rows x dims.
    pub row_coords: DMatrix<f64>,
    /// Standardized dim-1 scores, aligned with `row_ids`.
    pub theta: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Fits CA on a pruned matrix. `conservative` and `liberal` anchor ids fix
/// the dim-1 sign; anchors missing from the matrix are ignored.
pub fn fit_ca(m: &FollowMatrix, dims: usize, anchors: &[Elite]) -> Result<CaFit> {
    if dims == 0 {
        return Err(Error::Config("ca dims must be at least 1".into()));
    }
    if m.n_rows() < dims + 1 || m.n_cols() < dims + 1 {
        return Err(Error::InsufficientData(format!(
            "ca needs at least {} rows and columns, got {}x{}",
            dims + 1,
            m.n_rows(),
            m.n_cols()
        )));
    }
    if m.rows.iter().any(Vec::is_empty) {
        return Err(Error::DegenerateModel("empty row in follow matrix".into()));
    }

    // Canonical row order so results do not depend on input order.
    let mut order: Vec<usize> = (0..m.n_rows()).collect();
    order.sort_by(|&a, &b| m.row_ids[a].cmp(&m.row_ids[b]));

    let n_cols = m.n_cols();
    let mut col_counts = vec![0usize; n_cols];
    for &j in m.rows.iter().flatten() {
        col_counts[j as usize] += 1;
    }
    if col_counts.contains(&0) {
        return Err(Error::DegenerateModel("empty column in follow matrix".into()));
    }
    let total = m.nnz() as f64;
    let col_masses: Vec<f64> = col_counts.iter().map(|&c| c as f64 / total).collect();

    // G = A'^T A' - t t^T with A' = D_n^{-1/2} A D_m^{-1/2}, t = sqrt(c).
    let mut g = DMatrix::<f64>::zeros(n_cols, n_cols);
    for &i in &order {
        let row = &m.rows[i];
        let w = 1.0 / row.len() as f64;
        for &a in row {
            for &b in row {
                g[(a as usize, b as usize)] += w;
            }
        }
    }
    let t: Vec<f64> = col_masses.iter().map(|c| c.sqrt()).collect();
    for a in 0..n_cols {
        for b in 0..n_cols {
            g[(a, b)] = g[(a, b)] / ((col_counts[a] * col_counts[b]) as f64).sqrt() - t[a] * t[b];
        }
    }
    let g = (&g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g);

    let mut by_value: Vec<usize> = (0..n_cols).collect();
    by_value.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[by_value[0]].max(0.0);
    let floor = RANK_TOL * top.max(f64::MIN_POSITIVE);
    let kept: Vec<usize> = by_value
        .iter()
        .copied()
        .take(dims)
        .filter(|&k| eig.eigenvalues[k] > floor && top > 0.0)
        .collect();
    if kept.is_empty() {
        return Err(Error::DegenerateModel("residual matrix has rank 0".into()));
    }
    let mut warnings = Vec::new();
    if kept.len() < dims {
        warnings.push(format!("rank {} below requested {dims} dims; keeping {}", kept.len(), kept.len()));
    }
    let d = kept.len();

    let mut std_cols = DMatrix::<f64>::zeros(n_cols, d);
    let mut singular_values = Vec::with_capacity(d);
    for (dd, &k) in kept.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = (0..n_cols)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n_cols {
            std_cols[(j, dd)] = sign * v[j] / t[j];
        }
        singular_values.push(eig.eigenvalues[k].sqrt());
    }

    let orientation_sign = orientation(&m.col_ids, &std_cols, anchors);
    for j in 0..n_cols {
        std_cols[(j, 0)] *= orientation_sign;
    }

    let mut row_coords = DMatrix::<f64>::zeros(m.n_rows(), d);
    let row_masses: Vec<f64> = m.rows.iter().map(|r| r.len() as f64 / total).collect();
    for (i, row) in m.rows.iter().enumerate() {
        let inv = 1.0 / row.len() as f64;
        for dd in 0..d {
            row_coords[(i, dd)] = row.iter().map(|&j| std_cols[(j as usize, dd)]).sum::<f64>() * inv;
        }
    }

    let dim1: Vec<f64> = order.iter().map(|&i| row_coords[(i, 0)]).collect();
    let (mean, sd) = mean_sd(&dim1);
    let model = CaModel::new(
        m.col_ids.clone(),
        col_masses,
        std_cols,
        singular_values,
        mean,
        sd,
        orientation_sign,
        m.n_rows(),
    )?;
    let theta = (0..m.n_rows()).map(|i| model.standardize(row_coords[(i, 0)])).collect();
    Ok(CaFit {
        model,
        row_ids: m.row_ids.clone(),
        row_masses,
        row_coords,
        theta,
        warnings,
    })
}

fn orientation(col_ids: &[String], std_cols: &DMatrix<f64>, anchors: &[Elite]) -> f64 {
    let side_mean = |side: AnchorSide| {
        let wanted: HashSet<&str> = anchors
            .iter()
            .filter(|e| e.anchor == Some(side))
            .map(|e| e.account_id.as_str())
            .collect();
        let vals: Vec<f64> = col_ids
            .iter()
            .enumerate()
            .filter(|(_, c)| wanted.contains(c.as_str()))
            .map(|(j, _)| std_cols[(j, 0)])
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    match (side_mean(AnchorSide::Conservative), side_mean(AnchorSide::Liberal)) {
        (Some(c), _) if c != 0.0 => c.signum(),
        (_, Some(l)) if l != 0.0 => -l.signum(),
        _ => 1.0,
    }
}

/// Mean and population standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Rescales raw dim-1 scores with stored parameters.
pub fn standardize(model: &CaModel, scores: &[f64]) -> Result<Vec<f64>> {
    if !(model.sd > 0.0) {
        return Err(Error::DegenerateModel("sd is zero".into()));
    }
    Ok(scores.iter().map(|&s| model.standardize(s)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Fitted,
    Projected,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Fitted => "fitted",
            Provenance::Projected => "projected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdeologyScore {
    pub account_id: String,
    pub theta: f64,
    pub n_elites_followed: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BelowThreshold {
    pub n_elites_followed: usize,
}

/// Supplementary projection of one user. Elites outside the model are
/// ignored; duplicates count once.
pub fn project(
    model: &CaModel,
    account_id: &str,
    elite_ids: &[&str],
    min_elites: usize,
) -> std::result::Result<IdeologyScore, BelowThreshold> {
    let mut cols: Vec<usize> = elite_ids.iter().filter_map(|e| model.col(e)).collect();
    cols.sort_unstable();
    cols.dedup();
    if cols.len() < min_elites.max(1) {
        return Err(BelowThreshold {
            n_elites_followed: cols.len(),
        });
    }
    let raw = model.raw_coords(&cols);
    Ok(IdeologyScore {
        account_id: account_id.to_string(),
        theta: model.standardize(raw[0]),
        n_elites_followed: cols.len(),
        provenance: Provenance::Projected,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredAccounts {
    /// Ordered by account id.
    pub scores: Vec<IdeologyScore>,
    pub below_threshold: usize,
}

/// Scores every account with at least one elite follow: training rows keep
/// their fitted score, the rest are projected.
pub fn score_accounts(fit: &CaFit, edges: &[FollowEdge], elites: &[Elite], min_elites: usize) -> ScoredAccounts {
    let fitted: HashMap<&str, usize> = fit.row_ids.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let follows = elite_follows(edges, elites);
    let mut out = ScoredAccounts::default();
    for (account, set) in follows {
        let known = set.iter().filter(|e| fit.model.col(e).is_some()).count();
        if let Some(&i) = fitted.get(account) {
            out.scores.push(IdeologyScore {
                account_id: account.to_string(),
                theta: fit.theta[i],
                n_elites_followed: known,
                provenance: Provenance::Fitted,
            });
            continue;
        }
        let ids: Vec<&str> = set.into_iter().collect();
        match project(&fit.model, account, &ids, min_elites) {
            Ok(s) => out.scores.push(s),
            Err(_) => out.below_threshold += 1,
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartisanCutoffs {
    pub dem_max: f64,
    pub rep_min: f64,
}

impl PartisanCutoffs {
    /// Calibration reported for the original study's data.
    pub const REFERENCE: PartisanCutoffs = PartisanCutoffs {
        dem_max: -0.35,
        rep_min: 0.04,
    };

    pub fn new(dem_max: f64, rep_min: f64) -> Result<Self> {
        if !(dem_max < rep_min) {
            return Err(Error::Calibration { dem_max, rep_min });
        }
        Ok(PartisanCutoffs { dem_max, rep_min })
    }
}

/// 90th percentile of Democrats and 10th percentile of Republicans.
pub fn derive_cutoffs(dem_scores: &[f64], rep_scores: &[f64]) -> Result<PartisanCutoffs> {
    for (name, s) in [("Dem", dem_scores), ("Rep", rep_scores)] {
        if s.len() < MIN_CALIBRATION_USERS {
            return Err(Error::InsufficientData(format!(
                "cutoff calibration needs {MIN_CALIBRATION_USERS} scored {name} users, got {}",
                s.len()
            )));
        }
    }
    let dem_max = percentile_sorted(&sorted_copy(dem_scores), 90.0);
    let rep_min = percentile_sorted(&sorted_copy(rep_scores), 10.0);
    PartisanCutoffs::new(dem_max, rep_min)
}

pub fn classify(theta: f64, cutoffs: &PartisanCutoffs) -> Party {
    if theta <= cutoffs.dem_max {
        Party::Dem
    } else if theta >= cutoffs.rep_min {
        Party::Rep
    } else {
        Party::Ind
    }
}
