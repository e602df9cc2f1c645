//! CSV and key-value writers. Numbers use the shortest representation that
//! round-trips; magnitudes below 1e-4 (and absurdly large ones) switch to
//! scientific notation.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ultrafast_core::{Grid, RunRecord};

pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if !x.is_finite() {
        if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Comma-separated table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    body: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), body: String::new() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        s.push_str(&self.body);
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, num(value))
    }

    pub fn opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.put(key, "none"),
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, &self.text)
    }
}

/// `t,F,gap,I,chi2,c,C,mass,dt`, one row per recorded time.
pub fn trajectory_table(rec: &RunRecord) -> Table {
    let mut t = Table::new(&["t", "F", "gap", "I", "chi2", "c", "C", "mass", "dt"]);
    for i in 0..rec.len() {
        t.row(&[
            num(rec.times[i]),
            num(rec.free_energy[i]),
            num(rec.gap[i]),
            num(rec.dissipation[i]),
            num(rec.chi2[i]),
            num(rec.lower[i]),
            num(rec.upper[i]),
            num(rec.mass[i]),
            num(rec.dt[i]),
        ]);
    }
    t
}

/// Per-cell values against cell centres: `x,<names..>` in 1-D, `x,y,<names..>` in 2-D.
pub fn field_table(grid: &Grid, names: &[&str], columns: &[&[f64]]) -> Table {
    let mut header = vec!["x"];
    if grid.dim() == 2 {
        header.push("y");
    }
    header.extend_from_slice(names);
    let mut t = Table::new(&header);
    for i in 0..grid.n_cells() {
        let c = grid.center(i);
        let mut row = vec![num(c[0])];
        if grid.dim() == 2 {
            row.push(num(c[1]));
        }
        row.extend(columns.iter().map(|col| num(col[i])));
        t.row(&row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(-3.0), "-3");
        assert_eq!(num(1e-4), "0.0001");
        assert_eq!(num(2.5e-5), "2.5e-5");
        assert_eq!(num(-1e-12), "-1e-12");
        assert_eq!(num(1e20), "1e20");
        assert_eq!(num(f64::NAN), "nan");
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&[num(1.0), num(1e-9)]);
        assert_eq!(t.render(), "a,b\n1,1e-9\n");
        let mut s = Summary::default();
        s.num("gamma", 0.5).put("ok", true).opt("fit", None);
        assert_eq!(s.text(), "gamma = 0.5\nok = true\nfit = none\n");
    }
}
