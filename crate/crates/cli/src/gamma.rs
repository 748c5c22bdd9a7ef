/// Parses `0.8` or a fraction such as `7/9`.
pub fn parse_gamma(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad gamma {text:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad gamma {text:?}"))?;
            a / b
        }
        None => text.parse().map_err(|_| format!("bad gamma {text:?}"))?,
    };
    if !value.is_finite() {
        return Err(format!("bad gamma {text:?}"));
    }
    Ok(value)
}
