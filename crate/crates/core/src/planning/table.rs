use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonKind {
    Infinite,
    Finite(u32),
}

/// Whittle index values keyed by `(s, u)` for `u in 1..=window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexTable {
    horizon: HorizonKind,
    window: u32,
    values: Vec<f64>,
}

impl IndexTable {
    pub fn new(horizon: HorizonKind, window: u32, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 2 * window as usize, "one value per (s, u)");
        assert!(values.iter().all(|v| v.is_finite()), "index values must be finite");
        Self { horizon, window, values }
    }

    pub fn horizon(&self) -> HorizonKind {
        self.horizon
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index at `(s, u)`; elapsed counts past the window read the last entry.
    pub fn get(&self, s: usize, u: u32) -> f64 {
        self.values[s * self.window as usize + (u.clamp(1, self.window) - 1) as usize]
    }
}

pub const INDEX_CSV_HEADER: &str = "arm_id,s,u,horizon,index";

/// Writes `arm_id,s,u,horizon,index` rows (nine decimals); horizon is `inf`
/// or the residual length.
pub fn write_index_csv<W: Write>(mut w: W, tables: &[IndexTable]) -> Result<()> {
    writeln!(w, "{INDEX_CSV_HEADER}")?;
    for (arm, t) in tables.iter().enumerate() {
        let horizon = match t.horizon {
            HorizonKind::Infinite => "inf".to_string(),
            HorizonKind::Finite(n) => n.to_string(),
        };
        for s in 0..2 {
            for u in 1..=t.window {
                writeln!(w, "{arm},{s},{u},{horizon},{:.9}", t.get(s, u))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_csv() {
        let t = IndexTable::new(HorizonKind::Finite(3), 2, vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(t.get(0, 1), 0.1);
        assert_eq!(t.get(1, 2), 0.4);
        assert_eq!(t.get(1, 50), 0.4);
        let mut buf = Vec::new();
        write_index_csv(&mut buf, &[t]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some(INDEX_CSV_HEADER));
        assert_eq!(text.lines().nth(4), Some("0,1,2,3,0.400000000"));
    }

    #[test]
    #[should_panic]
    fn non_finite_rejected() {
        IndexTable::new(HorizonKind::Infinite, 1, vec![0.0, f64::NAN]);
    }
}
