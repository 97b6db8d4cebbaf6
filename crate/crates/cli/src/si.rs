//! Numbers with SI suffixes: `75M`, `37.5meg`, `650k`, `1.3e6`, `20m` (milli).

pub fn parse_f64(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let split = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphabetic() || *c == 'µ')
        .last()
        .map_or(s.len(), |(i, _)| i);
    let (num, suffix) = s.split_at(split);
    let exp: i32 = match suffix {
        "" => 0,
        "p" => -12,
        "n" => -9,
        "u" | "µ" => -6,
        "m" => -3,
        "k" | "K" => 3,
        "M" | "meg" => 6,
        "G" => 9,
        "T" => 12,
        _ => return Err(format!("unknown SI suffix `{suffix}` in `{s}`")),
    };
    let invalid = || format!("invalid number `{s}`");
    // Shifting the decimal exponent keeps `12.7p` equal to the literal 12.7e-12.
    let out = if num.contains(['e', 'E']) {
        num.parse::<f64>().map_err(|_| invalid())? * 10f64.powi(exp)
    } else {
        format!("{num}e{exp}").parse::<f64>().map_err(|_| invalid())?
    };
    if !out.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(out)
}

pub fn parse_u64(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    let v = parse_f64(s)?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(v as u64)
}

pub fn parse_usize(s: &str) -> Result<usize, String> {
    parse_u64(s).map(|v| v as usize)
}
