//! Resonance tables and the `m0c²/Γ = a + C/Γ` fit.
//!
//! Tables are CSV with the header `name,class,mass_mev,width_mev` and an
//! optional `source` column. Extra columns are ignored.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::numerics::fit_line;

/// `ħ` in MeV·s.
pub const HBAR_MEV_S: f64 = 6.582_119_569e-22;

const REQUIRED: [&str; 4] = ["name", "class", "mass_mev", "width_mev"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonanceClass {
    Meson,
    Baryon,
}

impl ResonanceClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResonanceClass::Meson => "meson",
            ResonanceClass::Baryon => "baryon",
        }
    }
}

impl std::str::FromStr for ResonanceClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "meson" => Ok(ResonanceClass::Meson),
            "baryon" => Ok(ResonanceClass::Baryon),
            other => Err(format!("unknown class {other:?} (expected meson or baryon)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceRecord {
    pub name: String,
    pub class: ResonanceClass,
    /// `m0c²` in MeV.
    pub mass_mev: f64,
    /// `Γ` in MeV.
    pub width_mev: f64,
    pub source: Option<String>,
}

impl ResonanceRecord {
    pub fn new(name: impl Into<String>, class: ResonanceClass, mass_mev: f64, width_mev: f64) -> Result<Self> {
        let name = name.into();
        if !(mass_mev > 0.0 && mass_mev.is_finite()) {
            return Err(Error::domain(format!("{name}: mass must be positive, got {mass_mev}")));
        }
        if !(width_mev > 0.0 && width_mev.is_finite()) {
            return Err(Error::domain(format!("{name}: width must be positive, got {width_mev}")));
        }
        Ok(Self {
            name,
            class,
            mass_mev,
            width_mev,
            source: None,
        })
    }

    /// `m0c²/Γ`.
    pub fn ratio(&self) -> f64 {
        self.mass_mev / self.width_mev
    }
}

/// Valid records plus the rows skipped in non-strict mode.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedTable {
    pub records: Vec<ResonanceRecord>,
    pub row_errors: Vec<RowError>,
}

pub fn load_table(path: impl AsRef<Path>, strict: bool) -> Result<LoadedTable> {
    read_table(File::open(path)?, strict)
}

/// Parses a table. In strict mode any bad row rejects the whole input with
/// every row error listed; otherwise bad rows are skipped and reported.
pub fn read_table<R: Read>(reader: R, strict: bool) -> Result<LoadedTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|n| col(n).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::Table(vec![RowError {
            line: 1,
            message: format!("missing columns: {}", missing.join(", ")),
        }]));
    }
    let idx: Vec<usize> = REQUIRED.iter().map(|n| col(n).expect("checked")).collect();
    let source_col = col("source");

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row, &idx, source_col) {
            Ok(r) => records.push(r),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if strict && !errors.is_empty() {
        return Err(Error::Table(errors));
    }
    if records.is_empty() {
        errors.push(RowError {
            line: 0,
            message: "no records".into(),
        });
        return Err(Error::Table(errors));
    }
    Ok(LoadedTable {
        records,
        row_errors: errors,
    })
}

fn parse_row(row: &csv::StringRecord, idx: &[usize], source_col: Option<usize>) -> std::result::Result<ResonanceRecord, String> {
    let field = |i: usize, name: &str| row.get(idx[i]).ok_or_else(|| format!("missing field {name}"));
    let name = field(0, "name")?;
    if name.is_empty() {
        return Err("empty name".into());
    }
    let class = field(1, "class")?.parse::<ResonanceClass>()?;
    let number = |i: usize, label: &str| -> std::result::Result<f64, String> {
        let raw = field(i, label)?;
        let v: f64 = raw.parse().map_err(|_| format!("{label}: {raw:?} is not a number"))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("{label} must be positive, got {raw}"));
        }
        Ok(v)
    };
    let mass_mev = number(2, "mass_mev")?;
    let width_mev = number(3, "width_mev")?;
    let source = source_col.and_then(|c| row.get(c)).filter(|s| !s.is_empty()).map(str::to_owned);
    Ok(ResonanceRecord {
        name: name.to_owned(),
        class,
        mass_mev,
        width_mev,
        source,
    })
}

pub fn save_table(path: impl AsRef<Path>, records: &[ResonanceRecord]) -> Result<()> {
    write_table(File::create(path)?, records)
}

/// Writes records with shortest round-trip float formatting; the `source`
/// column is included when any record carries one.
pub fn write_table<W: Write>(w: W, records: &[ResonanceRecord]) -> Result<()> {
    let with_source = records.iter().any(|r| r.source.is_some());
    let mut wr = csv::Writer::from_writer(w);
    let mut header = REQUIRED.to_vec();
    if with_source {
        header.push("source");
    }
    wr.write_record(&header)?;
    for r in records {
        let mut fields = vec![
            r.name.clone(),
            r.class.as_str().to_owned(),
            r.mass_mev.to_string(),
            r.width_mev.to_string(),
        ];
        if with_source {
            fields.push(r.source.clone().unwrap_or_default());
        }
        wr.write_record(&fields)?;
    }
    wr.flush()?;
    Ok(())
}

/// OLS fit `ratio = a + C/Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "rms")]
    pub rms_residual: f64,
    #[serde(rename = "n")]
    pub n_points: usize,
    #[serde(skip)]
    pub a_std_err: f64,
    #[serde(skip)]
    pub c_std_err: f64,
}

pub fn fit_inverse_width(records: &[ResonanceRecord], class_filter: Option<ResonanceClass>) -> Result<FitResult> {
    let chosen: Vec<&ResonanceRecord> = records
        .iter()
        .filter(|r| class_filter.is_none_or(|c| r.class == c))
        .collect();
    if chosen.len() < 2 {
        return Err(Error::domain(format!("fit needs at least 2 records, got {}", chosen.len())));
    }
    let first = chosen[0].width_mev;
    if chosen.iter().all(|r| r.width_mev == first) {
        return Err(Error::domain("degenerate design: all widths are identical"));
    }
    let x: Vec<f64> = chosen.iter().map(|r| 1.0 / r.width_mev).collect();
    let y: Vec<f64> = chosen.iter().map(|r| r.ratio()).collect();
    let fit = fit_line(&x, &y)?;
    Ok(FitResult {
        a: fit.intercept,
        c: fit.slope,
        rms_residual: fit.rms_residual(),
        n_points: fit.n,
        a_std_err: fit.intercept_std_err,
        c_std_err: fit.slope_std_err,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifetimeEntry {
    pub name: String,
    pub ratio: f64,
    /// `τ_L = ħ/Γ` in seconds.
    pub lifetime_s: f64,
    /// `ratio ≥ 2`, i.e. `τ_L ≥ 2ħ/m0c²`.
    pub bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifetimeReport {
    pub entries: Vec<LifetimeEntry>,
    /// Fraction of entries satisfying the bound; `None` for an empty list.
    pub fraction_ok: Option<f64>,
}

pub fn lifetime_bound_check(records: &[ResonanceRecord], hbar_mev_s: f64) -> LifetimeReport {
    let entries: Vec<LifetimeEntry> = records
        .iter()
        .map(|r| LifetimeEntry {
            name: r.name.clone(),
            ratio: r.ratio(),
            lifetime_s: hbar_mev_s / r.width_mev,
            bound_ok: r.ratio() >= 2.0,
        })
        .collect();
    let fraction_ok = if entries.is_empty() {
        None
    } else {
        Some(entries.iter().filter(|e| e.bound_ok).count() as f64 / entries.len() as f64)
    };
    LifetimeReport { entries, fraction_ok }
}

/// Writes `name,ratio,bound_ok` rows.
pub fn write_lifetime_csv<W: Write>(w: W, report: &LifetimeReport) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["name", "ratio", "bound_ok"])?;
    for e in &report.entries {
        wr.write_record([e.name.clone(), e.ratio.to_string(), e.bound_ok.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// Quantity perturbed by the multiplicative noise of [`synthetic_table`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    /// Measured width `Γ(1 + noise·ξ)` with the exact mass `aΓ + C`.
    #[default]
    Width,
    /// Ratio `(a + C/Γ)(1 + noise·ξ)` at the exact width.
    Ratio,
}

/// Records on `m0c²/Γ = a + C/Γ` with multiplicative Gaussian noise on the
/// chosen target, `ξ ~ N(0, 1)` drawn from ChaCha8 seeded with `seed`.
pub fn synthetic_table(
    a: f64,
    c: f64,
    widths: &[f64],
    noise: f64,
    target: NoiseTarget,
    seed: u64,
    class: ResonanceClass,
) -> Result<Vec<ResonanceRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    widths
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let mass = a * w + c;
            let (mass, width) = match target {
                NoiseTarget::Width => (mass, w * (1.0 + noise * xi)),
                NoiseTarget::Ratio => (mass * (1.0 + noise * xi), *w),
            };
            ResonanceRecord::new(format!("{}{i}", class.as_str()), class, mass, width)
        })
        .collect()
}

/// `Γ ∈ {10, 50, 100, 150, …, 500}` MeV.
pub fn standard_widths() -> Vec<f64> {
    std::iter::once(10.0).chain((1..=10).map(|k| 50.0 * k as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_row() {
        let t = read_table("name,class,mass_mev,width_mev\nrho770,meson,775.26,149.1\n".as_bytes(), true).unwrap();
        let r = &t.records[0];
        assert_eq!(r.class, ResonanceClass::Meson);
        assert!((r.ratio() - 5.2).abs() < 0.01);
        let rep = lifetime_bound_check(&t.records, HBAR_MEV_S);
        assert!(rep.entries[0].bound_ok);
    }

    #[test]
    fn zero_width_row() {
        let text = "name,class,mass_mev,width_mev\na,meson,100,10\nb,meson,100,0\n";
        match read_table(text.as_bytes(), true).unwrap_err() {
            Error::Table(rows) => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].line, 3);
            }
            e => panic!("{e}"),
        }
        let t = read_table(text.as_bytes(), false).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.row_errors.len(), 1);
    }

    #[test]
    fn empty_and_malformed_input() {
        let err = read_table("name,class,mass_mev,width_mev\n".as_bytes(), false).unwrap_err();
        assert!(err.to_string().contains("no records"));
        let err = read_table("name,mass_mev\nx,1\n".as_bytes(), false).unwrap_err();
        assert!(err.to_string().contains("class, width_mev"));
        let text = "name,class,mass_mev,width_mev\na,lepton,1,1\nb,meson,x,1\nc,baryon,-3,1\n";
        match read_table(text.as_bytes(), true).unwrap_err() {
            Error::Table(rows) => assert_eq!(rows.iter().map(|r| r.line).collect::<Vec<_>>(), vec![2, 3, 4]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn fit_examples() {
        let w = standard_widths();
        for (a, c) in [(2.1, 1222.0), (2.1, 1487.0)] {
            let recs = synthetic_table(a, c, &w, 0.0, NoiseTarget::Width, 0, ResonanceClass::Meson).unwrap();
            let f = fit_inverse_width(&recs, None).unwrap();
            assert!((f.a - a).abs() <= 1e-9 && (f.c - c).abs() <= 1e-9, "{f:?}");
        }
        let two = synthetic_table(1.0, 3.0, &[1.0, 2.0], 0.3, NoiseTarget::Ratio, 9, ResonanceClass::Baryon).unwrap();
        assert!(fit_inverse_width(&two, None).unwrap().rms_residual < 1e-12);
        let same = synthetic_table(1.0, 3.0, &[5.0, 5.0, 5.0], 0.0, NoiseTarget::Width, 1, ResonanceClass::Baryon).unwrap();
        assert!(fit_inverse_width(&same, None).is_err());
        assert!(fit_inverse_width(&same, Some(ResonanceClass::Meson)).is_err());
    }

    #[test]
    fn lifetime_flags() {
        let low = ResonanceRecord::new("x", ResonanceClass::Baryon, 150.0, 100.0).unwrap();
        let rep = lifetime_bound_check(&[low], HBAR_MEV_S);
        assert!(!rep.entries[0].bound_ok);
        assert_eq!(rep.fraction_ok, Some(0.0));
        assert_eq!(lifetime_bound_check(&[], HBAR_MEV_S).fraction_ok, None);
    }
}
