//! Angle and grid syntax shared by the subcommands.

use std::f64::consts::PI;

/// Parses `0.18pi`, `pi`, `-0.5pi` or a plain number of radians.
pub fn angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let value = match t.strip_suffix("pi") {
        Some("") => PI,
        Some("-") => -PI,
        Some(k) => {
            k.parse::<f64>()
                .map_err(|_| format!("invalid angle '{s}'"))?
                * PI
        }
        None => t
            .parse::<f64>()
            .map_err(|_| format!("invalid angle '{s}'"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("invalid angle '{s}'"))
    }
}

/// `start:stop:count`, with angle syntax for both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, String> {
        weakval_core::analysis::linspace(self.start, self.stop, self.count)
            .map_err(|e| e.to_string())
    }
}

pub fn grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(format!("invalid grid '{s}', expected start:stop:count"));
    };
    let count = count
        .trim()
        .parse::<usize>()
        .map_err(|_| format!("invalid point count in grid '{s}'"))?;
    if count == 0 {
        return Err(format!("grid '{s}' has no points"));
    }
    Ok(GridSpec {
        start: angle(start)?,
        stop: angle(stop)?,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(angle("pi").unwrap(), PI);
        assert!((angle("0.18pi").unwrap() - 0.18 * PI).abs() < 1e-15);
        assert_eq!(angle("-0.5pi").unwrap(), -0.5 * PI);
        assert_eq!(angle("0.21").unwrap(), 0.21);
        assert!(angle("abc").is_err());
        assert!(angle("xpi").is_err());
        assert!(angle("inf").is_err());
    }

    #[test]
    fn grids() {
        let g = grid("0:0.7pi:13").unwrap();
        assert_eq!(g.count, 13);
        assert!((g.stop - 0.7 * PI).abs() < 1e-15);
        assert_eq!(g.points().unwrap().len(), 13);
        assert!(grid("0:1").is_err());
        assert!(grid("0:1:0").is_err());
        assert!(grid("1:0:3").unwrap().points().is_err());
    }
}
