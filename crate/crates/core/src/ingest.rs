//! Data loading, preprocessing, and synthetic instance generation.
//!
//! Supported file formats:
//!
//! * **Matrix Market coordinate** (`%%MatrixMarket matrix coordinate real
//!   general` header, 1-based `row col value` triplets).
//! * **Dense CSV** — one matrix row per line, comma-separated; rows are type-1
//!   objects (features), columns are type-2 objects (samples).
//! * **Labeled CSV** — one *sample* per line: feature values followed by an
//!   integer class label in the last column. The matrix is transposed on load
//!   so samples end up in columns.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::RelationalData;

/// On-disk matrix formats understood by [`load_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    DenseCsv,
    LabeledCsv,
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix-market" | "mtx" => Ok(MatrixFormat::MatrixMarket),
            "dense-csv" | "csv" => Ok(MatrixFormat::DenseCsv),
            "labeled-csv" => Ok(MatrixFormat::LabeledCsv),
            other => Err(Error::Config(format!("unknown matrix format '{other}'"))),
        }
    }
}

/// A loaded data set: the relational block plus optional ground-truth labels.
#[derive(Debug, Clone)]
pub struct Dataset<T: Scalar> {
    pub data: RelationalData<T>,
    /// Class label per type-2 object (sample), when known.
    pub truth: Option<Vec<usize>>,
    /// Class label per type-1 object (feature), when known (synthetic data).
    pub feature_truth: Option<Vec<usize>>,
    pub name: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(data: RelationalData<T>, name: impl Into<String>) -> Self {
        Self {
            data,
            truth: None,
            feature_truth: None,
            name: name.into(),
        }
    }

    pub fn with_truth(mut self, truth: Vec<usize>) -> Result<Self> {
        if truth.len() != self.data.n2() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} samples",
                truth.len(),
                self.data.n2()
            )));
        }
        self.truth = Some(truth);
        Ok(self)
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn parse_value<T: Scalar>(tok: &str, path: &Path, line: usize) -> Result<T> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid number '{tok}'")))?;
    T::from_f64(v).ok_or_else(|| parse_err(path, line, format!("unrepresentable number '{tok}'")))
}

fn load_matrix_market<T: Scalar>(path: &Path) -> Result<Array2<T>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut matrix: Option<Array2<T>> = None;
    let mut seen_header = false;
    let mut entries = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with("%%MatrixMarket") {
            if !trimmed.contains("coordinate") {
                return Err(parse_err(path, lineno, "only coordinate format is supported"));
            }
            seen_header = true;
            continue;
        }
        if trimmed.starts_with('%') {
            continue;
        }
        if !seen_header {
            return Err(parse_err(path, lineno, "missing %%MatrixMarket header"));
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if dims.is_none() {
            if toks.len() != 3 {
                return Err(parse_err(path, lineno, "expected 'rows cols nnz'"));
            }
            let rows: usize = toks[0]
                .parse()
                .map_err(|_| parse_err(path, lineno, "invalid row count"))?;
            let cols: usize = toks[1]
                .parse()
                .map_err(|_| parse_err(path, lineno, "invalid column count"))?;
            let nnz: usize = toks[2]
                .parse()
                .map_err(|_| parse_err(path, lineno, "invalid entry count"))?;
            dims = Some((rows, cols, nnz));
            matrix = Some(Array2::zeros((rows, cols)));
            continue;
        }
        let (rows, cols, nnz) = dims.unwrap();
        if toks.len() != 3 {
            return Err(parse_err(path, lineno, "expected 'row col value'"));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, "invalid row index"))?;
        let j: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, "invalid column index"))?;
        if i == 0 || i > rows || j == 0 || j > cols {
            return Err(parse_err(
                path,
                lineno,
                format!("index ({i}, {j}) outside {rows}x{cols} (indices are 1-based)"),
            ));
        }
        let v = parse_value::<T>(toks[2], path, lineno)?;
        matrix.as_mut().unwrap()[[i - 1, j - 1]] = v;
        entries += 1;
        if entries > nnz {
            return Err(parse_err(path, lineno, format!("more than {nnz} declared entries")));
        }
    }
    matrix.ok_or_else(|| parse_err(path, 0, "no size line found"))
}

fn load_csv_rows<T: Scalar>(path: &Path) -> Result<Vec<Vec<T>>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row: Result<Vec<T>> = trimmed
            .split(',')
            .map(|tok| parse_value::<T>(tok, path, lineno))
            .collect();
        let row = row?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "file holds no data rows"));
    }
    Ok(rows)
}

/// Loads a data set from `path` in the declared format. Negative entries are
/// rejected with the offending position named.
pub fn load_matrix<T: Scalar>(path: impl AsRef<Path>, format: MatrixFormat) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    match format {
        MatrixFormat::MatrixMarket => {
            let m = load_matrix_market::<T>(path)?;
            Ok(Dataset::new(RelationalData::new(m)?, name))
        }
        MatrixFormat::DenseCsv => {
            let rows = load_csv_rows::<T>(path)?;
            let n1 = rows.len();
            let n2 = rows[0].len();
            let m = Array2::from_shape_fn((n1, n2), |(i, j)| rows[i][j]);
            Ok(Dataset::new(RelationalData::new(m)?, name))
        }
        MatrixFormat::LabeledCsv => {
            let rows = load_csv_rows::<T>(path)?;
            if rows[0].len() < 2 {
                return Err(parse_err(path, 1, "labeled rows need at least one feature"));
            }
            let n_samples = rows.len();
            let n_features = rows[0].len() - 1;
            let mut labels = Vec::with_capacity(n_samples);
            for (i, row) in rows.iter().enumerate() {
                let raw = row[n_features].to_f64().unwrap_or(f64::NAN);
                let label = raw.round();
                if !raw.is_finite() || (raw - label).abs() > 1e-9 || label < 0.0 {
                    return Err(parse_err(
                        path,
                        i + 1,
                        format!("last column must be a nonnegative integer class, found {raw}"),
                    ));
                }
                labels.push(label as usize);
            }
            // Samples arrive in rows; the relational block stores them in columns.
            let m = Array2::from_shape_fn((n_features, n_samples), |(i, j)| rows[j][i]);
            Dataset::new(RelationalData::new(m)?, name).with_truth(labels)
        }
    }
}

/// Writes the relational block as a Matrix Market coordinate file. Zero
/// entries are skipped; values are printed in shortest round-trip form, so a
/// save/load cycle is bit-exact.
pub fn save_matrix_market<T: Scalar>(path: impl AsRef<Path>, r: &RelationalData<T>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let m = r.r12();
    let nnz = m.iter().filter(|&&v| v != T::zero()).count();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", r.n1(), r.n2(), nnz)?;
    for ((i, j), &v) in m.indexed_iter() {
        if v != T::zero() {
            writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

/// Axis selector for unit-length normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeAxis {
    /// Normalize each sample (column of the relational block).
    Samples,
    /// Normalize each feature (row of the relational block).
    Features,
}

/// Scales each vector along the chosen axis to unit Euclidean length.
/// All-zero vectors are left as zero with a warning.
pub fn unit_normalize<T: Scalar>(d: &Dataset<T>, axis: NormalizeAxis) -> Dataset<T> {
    let mut m = d.data.r12().clone();
    let ax = match axis {
        NormalizeAxis::Samples => Axis(1),
        NormalizeAxis::Features => Axis(0),
    };
    let mut zeros = 0usize;
    for mut lane in m.axis_iter_mut(ax) {
        let norm = lane.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm == T::zero() {
            zeros += 1;
            continue;
        }
        lane.mapv_inplace(|x| x / norm);
    }
    if zeros > 0 {
        log::warn!("{zeros} zero vectors left unnormalized");
    }
    Dataset {
        data: RelationalData::new(m).expect("normalization preserves validity"),
        truth: d.truth.clone(),
        feature_truth: d.feature_truth.clone(),
        name: d.name.clone(),
    }
}

/// Per-word contribution to the word-document mutual information, computed
/// from the joint count distribution.
fn word_mi_contributions<T: Scalar>(m: &Array2<T>) -> Vec<f64> {
    let total: f64 = m.iter().map(|v| v.to_f64().unwrap()).sum();
    let n1 = m.nrows();
    let n2 = m.ncols();
    if total <= 0.0 {
        return vec![0.0; n1];
    }
    let row_sums: Vec<f64> = (0..n1)
        .map(|i| m.row(i).iter().map(|v| v.to_f64().unwrap()).sum())
        .collect();
    let col_sums: Vec<f64> = (0..n2)
        .map(|j| m.column(j).iter().map(|v| v.to_f64().unwrap()).sum())
        .collect();
    (0..n1)
        .map(|i| {
            let mut c = 0.0;
            for j in 0..n2 {
                let joint = m[[i, j]].to_f64().unwrap() / total;
                if joint > 0.0 {
                    let pw = row_sums[i] / total;
                    let pd = col_sums[j] / total;
                    c += joint * (joint / (pw * pd)).ln();
                }
            }
            c
        })
        .collect()
}

/// Keeps the `m` feature rows with the largest contribution to the
/// word-document mutual information. Ties break toward the lower row index;
/// kept rows stay in their original order.
pub fn select_words_by_mi<T: Scalar>(d: &Dataset<T>, m: usize) -> Result<Dataset<T>> {
    let n1 = d.data.n1();
    if m == 0 || m > n1 {
        return Err(Error::Config(format!("cannot keep {m} of {n1} feature rows")));
    }
    if m == n1 {
        return Ok(d.clone());
    }
    let contributions = word_mi_contributions(d.data.r12());
    let mut order: Vec<usize> = (0..n1).collect();
    order.sort_by(|&a, &b| {
        contributions[b]
            .partial_cmp(&contributions[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut keep: Vec<usize> = order.into_iter().take(m).collect();
    keep.sort_unstable();
    let src = d.data.r12();
    let out = Array2::from_shape_fn((m, d.data.n2()), |(i, j)| src[[keep[i], j]]);
    Ok(Dataset {
        data: RelationalData::new(out)?,
        truth: d.truth.clone(),
        feature_truth: d
            .feature_truth
            .as_ref()
            .map(|ft| keep.iter().map(|&i| ft[i]).collect()),
        name: d.name.clone(),
    })
}

/// How the two variation criteria of [`GenePreprocessSpec`] combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationRule {
    /// Keep a gene only if it passes both thresholds.
    Both,
    /// Keep a gene if it passes either threshold.
    Either,
}

/// Clamp-and-filter recipe for gene-expression rows.
#[derive(Debug, Clone)]
pub struct GenePreprocessSpec<T> {
    pub floor: T,
    pub ceiling: T,
    pub max_min_ratio: T,
    pub max_minus_min: T,
    pub rule: VariationRule,
}

impl<T: Scalar> GenePreprocessSpec<T> {
    pub fn new(floor: T, ceiling: T, max_min_ratio: T, max_minus_min: T) -> Result<Self> {
        if !(floor < ceiling) {
            return Err(Error::Config(format!("floor {floor} must be below ceiling {ceiling}")));
        }
        Ok(Self {
            floor,
            ceiling,
            max_min_ratio,
            max_minus_min,
            rule: VariationRule::Both,
        })
    }
}

/// Clamps every value into `[floor, ceiling]`, then drops gene rows that vary
/// too little across samples: a gene is kept only when `max/min >
/// max_min_ratio` and `max - min > max_minus_min` (rule switchable to either).
pub fn gene_preprocess<T: Scalar>(
    d: &Dataset<T>,
    spec: &GenePreprocessSpec<T>,
) -> Result<Dataset<T>> {
    let clamped = d.data.r12().mapv(|v| v.max(spec.floor).min(spec.ceiling));
    let keep: Vec<usize> = (0..clamped.nrows())
        .filter(|&i| {
            let row = clamped.row(i);
            let mut min = T::infinity();
            let mut max = T::neg_infinity();
            for &v in row.iter() {
                min = min.min(v);
                max = max.max(v);
            }
            let ratio_ok = min > T::zero() && max / min > spec.max_min_ratio;
            let range_ok = max - min > spec.max_minus_min;
            match spec.rule {
                VariationRule::Both => ratio_ok && range_ok,
                VariationRule::Either => ratio_ok || range_ok,
            }
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::Validation("every gene was filtered out".into()));
    }
    let out = Array2::from_shape_fn((keep.len(), clamped.ncols()), |(i, j)| clamped[[keep[i], j]]);
    Ok(Dataset {
        data: RelationalData::new(out)?,
        truth: d.truth.clone(),
        feature_truth: d
            .feature_truth
            .as_ref()
            .map(|ft| keep.iter().map(|&i| ft[i]).collect()),
        name: d.name.clone(),
    })
}

/// Noise model for planted co-cluster instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Flip each cell between its block value and the opposite with the given
    /// probability.
    Bernoulli { p: f64 },
    /// Add centered Gaussian noise with the given standard deviation, clamped
    /// at zero.
    Gaussian { sigma: f64 },
}

/// Parameters for [`planted_coclusters`].
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub n1: usize,
    pub n2: usize,
    pub c1: usize,
    pub c2: usize,
    pub noise: NoiseKind,
    pub seed: u64,
}

/// Generates a planted co-cluster instance: cell (i, j) is high exactly when
/// the feature block of i is associated with the sample block of j (block k
/// with block k), corrupted by the chosen noise. Truth labels are attached
/// for both object types.
pub fn planted_coclusters<T: Scalar>(cfg: &PlantedConfig) -> Result<Dataset<T>> {
    if cfg.c1 == 0 || cfg.c2 == 0 || cfg.n1 < cfg.c1 || cfg.n2 < cfg.c2 {
        return Err(Error::Config("planted blocks need n >= c >= 1 per type".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f_label: Vec<usize> = (0..cfg.n1).map(|i| i * cfg.c1 / cfg.n1).collect();
    let s_label: Vec<usize> = (0..cfg.n2).map(|j| j * cfg.c2 / cfg.n2).collect();
    let blocks = cfg.c1.min(cfg.c2);
    let m = Array2::from_shape_fn((cfg.n1, cfg.n2), |(i, j)| {
        let on = f_label[i] % blocks == s_label[j] % blocks;
        let base = match cfg.noise {
            NoiseKind::Bernoulli { p } => {
                let flipped = rng.random::<f64>() < p;
                if on != flipped {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseKind::Gaussian { sigma } => {
                // Box-Muller keeps the generator dependency-light.
                let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.random();
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                let v = if on { 1.0 } else { 0.0 } + sigma * z;
                v.max(0.0)
            }
        };
        T::real(base)
    });
    let mut d = Dataset::new(RelationalData::new(m)?, format!("planted-{}", cfg.seed));
    d.feature_truth = Some(f_label);
    d.truth = Some(s_label);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn tmp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("rmc-core-test-{}-{}", std::process::id(), name));
        p
    }

    #[test]
    fn dense_csv_round_trip() {
        let path = tmp_path("dense.csv");
        std::fs::write(&path, "1,2\n3,4\n").unwrap();
        let d: Dataset<f64> = load_matrix(&path, MatrixFormat::DenseCsv).unwrap();
        assert_eq!(d.data.r12(), &array![[1.0, 2.0], [3.0, 4.0]]);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn negative_entry_names_position() {
        let path = tmp_path("neg.csv");
        std::fs::write(&path, "1,2\n3,-1\n").unwrap();
        let err = load_matrix::<f64>(&path, MatrixFormat::DenseCsv).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn matrix_market_round_trip_is_bit_exact() {
        let m = array![
            [0.0_f64, 1.5, 0.0],
            [0.25, 0.0, std::f64::consts::PI],
        ];
        let r = RelationalData::new(m).unwrap();
        let path = tmp_path("roundtrip.mtx");
        save_matrix_market(&path, &r).unwrap();
        let loaded: Dataset<f64> = load_matrix(&path, MatrixFormat::MatrixMarket).unwrap();
        assert_eq!(loaded.data.r12(), r.r12());
        // Re-saving produces the identical byte stream.
        let first = std::fs::read(&path).unwrap();
        save_matrix_market(&path, &loaded.data).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn matrix_market_reports_line_numbers() {
        let path = tmp_path("bad.mtx");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "%%MatrixMarket matrix coordinate real general").unwrap();
        writeln!(f, "2 2 1").unwrap();
        writeln!(f, "3 1 5.0").unwrap();
        drop(f);
        let err = load_matrix::<f64>(&path, MatrixFormat::MatrixMarket).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn labeled_csv_transposes_and_extracts_labels() {
        let path = tmp_path("labeled.csv");
        std::fs::write(&path, "1,2,0\n3,4,1\n5,6,1\n").unwrap();
        let d: Dataset<f64> = load_matrix(&path, MatrixFormat::LabeledCsv).unwrap();
        assert_eq!(d.data.n1(), 2, "two features");
        assert_eq!(d.data.n2(), 3, "three samples");
        assert_eq!(d.truth.as_deref(), Some(&[0usize, 1, 1][..]));
        assert_eq!(d.data.r12(), &array![[1.0, 3.0, 5.0], [2.0, 4.0, 6.0]]);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn labeled_csv_rejects_non_integer_or_negative_classes() {
        for (tag, body) in [("frac", "1,2,0.5\n"), ("neg", "1,2,-1\n")] {
            let path = tmp_path(&format!("badlabel-{tag}.csv"));
            std::fs::write(&path, body).unwrap();
            let err = load_matrix::<f64>(&path, MatrixFormat::LabeledCsv).unwrap_err();
            assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
            std::fs::remove_file(&path).ok();
        }
    }

    #[test]
    fn unit_normalize_columns() {
        let d = Dataset::new(
            RelationalData::new(array![[3.0_f64, 0.0], [4.0, 0.0]]).unwrap(),
            "t",
        );
        let n = unit_normalize(&d, NormalizeAxis::Samples);
        assert_abs_diff_eq!(n.data.r12()[[0, 0]], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(n.data.r12()[[1, 0]], 0.8, epsilon = 1e-12);
        // Zero column preserved.
        assert_eq!(n.data.r12()[[0, 1]], 0.0);
        // Idempotent on already-unit vectors.
        let again = unit_normalize(&n, NormalizeAxis::Samples);
        assert_abs_diff_eq!(again.data.r12()[[0, 0]], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn mi_selection_ranks_discriminating_word_first() {
        // Equal column sums so a uniform word carries zero information.
        // w0 discriminates the first two documents, w2 is uniform.
        let counts = array![
            [2.0_f64, 2.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 2.0],
            [1.0, 1.0, 1.0, 1.0],
        ];
        let d = Dataset::new(RelationalData::new(counts).unwrap(), "toy");
        let contributions = word_mi_contributions(d.data.r12());
        assert!(contributions[0] > contributions[2]);
        assert_abs_diff_eq!(contributions[2], 0.0, epsilon = 1e-12);
        // Keeping one word keeps w0 (ties toward lower index do not bite here).
        let top = select_words_by_mi(&d, 1).unwrap();
        assert_eq!(top.data.r12().row(0).to_vec(), vec![2.0, 2.0, 0.0, 0.0]);
        // m = n1 is the identity.
        let all = select_words_by_mi(&d, 3).unwrap();
        assert_eq!(all.data.r12(), d.data.r12());
        assert!(select_words_by_mi(&d, 4).is_err());
    }

    #[test]
    fn mi_selection_tie_breaks_toward_lower_index() {
        let counts = array![
            [2.0_f64, 2.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 2.0],
        ];
        let d = Dataset::new(RelationalData::new(counts).unwrap(), "tie");
        let top = select_words_by_mi(&d, 1).unwrap();
        assert_eq!(top.data.r12().row(0).to_vec(), vec![2.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn gene_preprocess_leukemia_style_rules() {
        let spec = GenePreprocessSpec::new(100.0_f64, 16000.0, 25.0, 500.0).unwrap();
        // Row 0: value 50 clamps to the floor 100, then ratio 160 > 25 and
        // range 15900 > 500 -> kept under both rules.
        // Row 1: constant after clamping -> dropped always.
        // Row 2: ratio 7 <= 25 fails but range 600 > 500 passes -> dropped
        // under Both, kept under Either.
        let m = array![
            [50.0_f64, 16000.0],
            [200.0, 200.0],
            [100.0, 700.0],
        ];
        let d = Dataset::new(RelationalData::new(m).unwrap(), "genes");
        let out = gene_preprocess(&d, &spec).unwrap();
        assert_eq!(out.data.n1(), 1);
        // Clamped floor applied before filtering.
        assert_eq!(out.data.r12()[[0, 0]], 100.0);
        assert_eq!(out.data.r12()[[0, 1]], 16000.0);

        let mut either = spec.clone();
        either.rule = VariationRule::Either;
        let out = gene_preprocess(&d, &either).unwrap();
        assert_eq!(out.data.n1(), 2, "range-only row survives under Either");
    }

    #[test]
    fn gene_preprocess_all_filtered_is_error() {
        let spec = GenePreprocessSpec::new(0.0_f64, 10.0, 100.0, 100.0).unwrap();
        let d = Dataset::new(
            RelationalData::new(array![[1.0_f64, 1.0], [2.0, 2.0]]).unwrap(),
            "flat",
        );
        assert!(gene_preprocess(&d, &spec).is_err());
    }

    #[test]
    fn planted_instance_has_block_structure_and_labels() {
        let cfg = PlantedConfig {
            n1: 12,
            n2: 9,
            c1: 3,
            c2: 3,
            noise: NoiseKind::Bernoulli { p: 0.0 },
            seed: 1,
        };
        let d: Dataset<f64> = planted_coclusters(&cfg).unwrap();
        let truth = d.truth.as_ref().unwrap();
        let ftruth = d.feature_truth.as_ref().unwrap();
        assert_eq!(truth.len(), 9);
        assert_eq!(ftruth.len(), 12);
        for (i, &fl) in ftruth.iter().enumerate() {
            for (j, &sl) in truth.iter().enumerate() {
                let expect = if fl == sl { 1.0 } else { 0.0 };
                assert_eq!(d.data.r12()[[i, j]], expect);
            }
        }
        // Deterministic under the same seed.
        let again: Dataset<f64> = planted_coclusters(&cfg).unwrap();
        assert_eq!(again.data.r12(), d.data.r12());
    }

    #[test]
    fn planted_gaussian_noise_stays_nonnegative() {
        let cfg = PlantedConfig {
            n1: 20,
            n2: 15,
            c1: 2,
            c2: 2,
            noise: NoiseKind::Gaussian { sigma: 0.4 },
            seed: 9,
        };
        let d: Dataset<f64> = planted_coclusters(&cfg).unwrap();
        assert!(d.data.r12().iter().all(|&v| v >= 0.0));
    }
}
