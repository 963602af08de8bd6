//! Parameter grids such as `0.05:1:0.05` or `0.001,0.05:1:0.05`.

use crate::ArgError;

/// Grid values are rounded to this many decimals to drop accumulation noise.
const DECIMALS: i32 = 12;

fn round(x: f64) -> f64 {
    let scale = 10f64.powi(DECIMALS);
    (x * scale).round() / scale
}

/// Parses comma-separated segments, each a number or `start:stop:step`.
///
/// A range includes `stop` when it lies within half a step of the last point.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, ArgError> {
    let mut values = Vec::new();
    for segment in text.split(',') {
        let segment = segment.trim();
        let parts: Vec<&str> = segment.split(':').collect();
        match parts.as_slice() {
            [single] => values.push(number(single, text)?),
            [start, stop, step] => {
                let (start, stop, step) = (
                    number(start, text)?,
                    number(stop, text)?,
                    number(step, text)?,
                );
                if !(step > 0.0) {
                    return Err(ArgError(format!("grid step must be positive in '{text}'")));
                }
                if stop < start {
                    return Err(ArgError(format!("grid stop below start in '{text}'")));
                }
                let count = ((stop - start) / step + 0.5).floor() as u64;
                values.extend((0..=count).map(|k| round(start + k as f64 * step)));
            }
            _ => return Err(ArgError(format!("cannot parse grid segment '{segment}'"))),
        }
    }
    Ok(values)
}

fn number(s: &str, whole: &str) -> Result<f64, ArgError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ArgError(format!("'{s}' is not a number in grid '{whole}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_stop() {
        let g = parse_grid("0:1:0.05").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[3], 0.15);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(parse_grid("0.05:1:0.05").unwrap().len(), 20);
        // 0.98 is within half a step of 1
        assert_eq!(parse_grid("0:0.98:0.05").unwrap().len(), 21);
        assert_eq!(parse_grid("0:0.97:0.05").unwrap().len(), 20);
    }

    #[test]
    fn segments_and_singles() {
        let g = parse_grid("0.001,0.05:1:0.05").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.001);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("1:1:0.1").unwrap(), vec![1.0]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "a",
            "0:1",
            "0:1:0",
            "1:0:0.1",
            "0:1:-1",
            "0:1:0.1:2",
            "nan",
        ] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
