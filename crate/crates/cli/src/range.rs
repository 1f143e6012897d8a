/// Parses `start:step:end` (inclusive), `a,b,c` or a single number into a
/// list of positive SNR values.
pub fn parse_snr_list(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {s:?} in SNR list {text:?}"))
    };
    let values = match text.split(':').collect::<Vec<_>>()[..] {
        [start, step, end] => {
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if !(step > 0.0) || !(end >= start) {
                return Err(format!("SNR range {text:?} needs a positive step and end >= start"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(format!("SNR range {text:?} has too many points"));
            }
            // integer multiples avoid accumulating rounding
            (0..count).map(|k| start + k as f64 * step).collect()
        }
        [_] => text.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("SNR list {text:?} must be start:step:end or comma separated")),
    };
    if values.is_empty() || values.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(format!("SNR values in {text:?} must be positive"));
    }
    Ok(values)
}

/// Parses `temperature:moves,...`; an empty string means no annealing.
pub fn parse_schedule(text: &str) -> Result<Vec<(f64, usize)>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|stage| {
            let (t, m) = stage
                .split_once(':')
                .ok_or_else(|| format!("anneal stage {stage:?} must be temperature:moves"))?;
            let t: f64 = t.trim().parse().map_err(|_| format!("bad temperature in {stage:?}"))?;
            let m: usize = m.trim().parse().map_err(|_| format!("bad move count in {stage:?}"))?;
            Ok((t, m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_snr_list("2:0.5:3").unwrap(), vec![2.0, 2.5, 3.0]);
        assert_eq!(parse_snr_list("1:0.1:1.3").unwrap().len(), 4);
        assert_eq!(parse_snr_list("2.5").unwrap(), vec![2.5]);
        assert_eq!(parse_snr_list("1,4").unwrap(), vec![1.0, 4.0]);
        for bad in ["", "3:1:2", "1:0:2", "0", "-1,2", "a:b:c", "1:2"] {
            assert!(parse_snr_list(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(parse_schedule("0.3:10,0:10").unwrap(), vec![(0.3, 10), (0.0, 10)]);
        assert!(parse_schedule("").unwrap().is_empty());
        assert!(parse_schedule("1").is_err());
    }
}
