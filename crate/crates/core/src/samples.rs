//! CSV interchange for sample sets. All fields are plain numeric or family
//! tokens, written with shortest round-trip float formatting so values
//! survive a write/read cycle bit-exactly.

use crate::error::{CoreError, Result};
use crate::walk::{Family, RunRecord};

pub const RUN_HEADER: &str = "family,lambda,n,seed,tau,jumps";
pub const RUN_RESCALED_HEADER: &str = "family,lambda,n,seed,tau,jumps,rescaled";
pub const LADDER_HEADER: &str = "family,lambda,n,level,seed,tau,rescaled";

/// Run records as CSV, optionally with a rescaled column appended.
pub fn run_records_to_csv(records: &[RunRecord], rescaled: Option<&[f64]>) -> String {
    if let Some(r) = rescaled {
        assert_eq!(r.len(), records.len());
    }
    let mut out = String::new();
    out.push_str(if rescaled.is_some() { RUN_RESCALED_HEADER } else { RUN_HEADER });
    out.push('\n');
    for (i, rec) in records.iter().enumerate() {
        out.push_str(rec.family.text());
        out.push(',');
        push_f64(&mut out, rec.lambda);
        out.push(',');
        out.push_str(&rec.n.to_string());
        out.push(',');
        out.push_str(&rec.seed.to_string());
        out.push(',');
        push_f64(&mut out, rec.tau);
        out.push(',');
        out.push_str(&rec.jumps.to_string());
        if let Some(r) = rescaled {
            out.push(',');
            push_f64(&mut out, r[i]);
        }
        out.push('\n');
    }
    out
}

/// Ladder samples as CSV: one row per (sample, level).
pub fn ladder_to_csv(
    lambda: f64,
    n: u32,
    seed: u64,
    levels: &[u32],
    taus: &[Vec<f64>],
) -> String {
    let mut out = String::new();
    out.push_str(LADDER_HEADER);
    out.push('\n');
    for path in taus {
        for (level, tau) in levels.iter().zip(path) {
            out.push_str(Family::Tilde.text());
            out.push(',');
            push_f64(&mut out, lambda);
            out.push(',');
            out.push_str(&n.to_string());
            out.push(',');
            out.push_str(&level.to_string());
            out.push(',');
            out.push_str(&seed.to_string());
            out.push(',');
            push_f64(&mut out, *tau);
            out.push(',');
            push_f64(&mut out, *tau);
            out.push('\n');
        }
    }
    out
}

fn push_f64(out: &mut String, v: f64) {
    // `{}` prints the shortest string that parses back to the same f64.
    out.push_str(&format!("{v}"));
}

/// A parsed CSV table; the schema is whatever the header line says.
#[derive(Clone, Debug)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Result<CsvTable> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (no, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(CoreError::Parse(format!(
                    "row {} has {} fields, header has {}",
                    no + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CoreError::Parse("CSV has a header but no rows".into()));
        }
        Ok(CsvTable { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CoreError::Parse(format!("no column {name:?} in {:?}", self.header)))
    }

    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[idx]
                    .parse::<f64>()
                    .map_err(|e| CoreError::Parse(format!("bad f64 {:?}: {e}", r[idx])))
            })
            .collect()
    }

    /// The comparison column: `rescaled` when present, else `tau`.
    pub fn sample_column(&self) -> Result<Vec<f64>> {
        if self.column_index("rescaled").is_ok() {
            self.f64_column("rescaled")
        } else {
            self.f64_column("tau")
        }
    }

    pub fn run_records(&self) -> Result<Vec<RunRecord>> {
        let fam = self.column_index("family")?;
        let lambda = self.column_index("lambda")?;
        let n = self.column_index("n")?;
        let seed = self.column_index("seed")?;
        let tau = self.column_index("tau")?;
        let jumps = self.column_index("jumps")?;
        let parse_err = |what: &str, v: &str| CoreError::Parse(format!("bad {what}: {v:?}"));
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(RunRecord {
                    family: Family::parse(&r[fam])?,
                    lambda: r[lambda].parse().map_err(|_| parse_err("lambda", &r[lambda]))?,
                    n: r[n].parse().map_err(|_| parse_err("n", &r[n]))?,
                    seed: r[seed].parse().map_err(|_| parse_err("seed", &r[seed]))?,
                    stream: i as u64,
                    tau: r[tau].parse().map_err(|_| parse_err("tau", &r[tau]))?,
                    jumps: r[jumps].parse().map_err(|_| parse_err("jumps", &r[jumps]))?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(tau: f64) -> RunRecord {
        RunRecord {
            family: Family::Raw,
            lambda: 0.5,
            n: 3,
            seed: 99,
            stream: 0,
            tau,
            jumps: 17,
        }
    }

    #[test]
    fn run_csv_round_trip_is_bit_exact() {
        let records = vec![rec(5.123456789012345), rec(1.0 / 3.0), rec(7.25e-12)];
        let text = run_records_to_csv(&records, None);
        assert!(text.starts_with(RUN_HEADER));
        let table = CsvTable::parse(&text).unwrap();
        let back = table.run_records().unwrap();
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.tau.to_bits(), b.tau.to_bits());
            assert_eq!(a.jumps, b.jumps);
            assert_eq!(a.family, b.family);
        }
    }

    #[test]
    fn rescaled_column_preferred() {
        let records = vec![rec(4.0), rec(8.0)];
        let text = run_records_to_csv(&records, Some(&[1.0, 2.0]));
        let table = CsvTable::parse(&text).unwrap();
        assert_eq!(table.sample_column().unwrap(), vec![1.0, 2.0]);
        let plain = CsvTable::parse(&run_records_to_csv(&records, None)).unwrap();
        assert_eq!(plain.sample_column().unwrap(), vec![4.0, 8.0]);
    }

    #[test]
    fn ladder_csv_shape() {
        let taus = vec![vec![0.5, 1.5], vec![0.25, 2.0]];
        let text = ladder_to_csv(0.5, 6, 11, &[4, 6], &taus);
        let table = CsvTable::parse(&text).unwrap();
        assert_eq!(table.header.join(","), LADDER_HEADER);
        assert_eq!(table.rows.len(), 4);
        assert_eq!(table.f64_column("tau").unwrap(), vec![0.5, 1.5, 0.25, 2.0]);
    }

    #[test]
    fn parse_rejects_ragged_and_empty() {
        assert!(CsvTable::parse("").is_err());
        assert!(CsvTable::parse("a,b\n1\n").is_err());
        assert!(CsvTable::parse("a,b\n").is_err());
    }

    proptest! {
        #[test]
        fn f64_formatting_round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let mut s = String::new();
            push_f64(&mut s, v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
