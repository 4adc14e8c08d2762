//! Fixed CSV and JSON encodings.

use serde::Serialize;

/// Shortest round-trip decimal, exponent form outside `[1e-5, 1e16)`;
/// `-0` prints as `0`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Pretty JSON with map keys in sorted order.
pub fn json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(1.1672334986109684e-15), "1.1672334986109684e-15");
        assert_eq!(num(1e-8), "1e-8");
        assert_eq!(num(-2.5e20), "-2.5e20");
        for x in [1e-300, 3.3e-7, 0.123456789, 12345.678, 9.99e15] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn json_keys_sorted() {
        #[derive(Serialize)]
        struct Row {
            zeta: u8,
            alpha: u8,
        }
        assert_eq!(json(&Row { zeta: 1, alpha: 2 }), "{\n  \"alpha\": 2,\n  \"zeta\": 1\n}\n");
    }
}
