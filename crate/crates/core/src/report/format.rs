//! Fixed-precision number formatting for the report tables.

/// Rounds `x` to `dp` decimals, ties to even, on the shortest decimal
/// representation of `x` (so 0.8975 counts as a tie even though the
/// nearest binary double is slightly below it).
pub fn round_half_even(x: f64, dp: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).map(|b| b - b'0').collect();
    let int_len = int_part.len();
    let keep = int_len + dp;
    if digits.len() < keep {
        digits.resize(keep, 0);
    } else if digits.len() > keep {
        let first = digits[keep];
        let rest_nonzero = digits[keep + 1..].iter().any(|d| *d != 0);
        let last_odd = keep > 0 && digits[keep - 1] % 2 == 1;
        digits.truncate(keep);
        if first > 5 || (first == 5 && (rest_nonzero || last_odd)) {
            let mut i = keep;
            loop {
                if i == 0 {
                    digits.insert(0, 1);
                    break;
                }
                i -= 1;
                if digits[i] == 9 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
    }
    let int_len = digits.len() - dp;
    let mut s = String::new();
    let negative = x < 0.0 && digits.iter().any(|d| *d != 0);
    if negative {
        s.push('-');
    }
    if int_len == 0 {
        s.push('0');
    }
    s.extend(digits[..int_len].iter().map(|d| char::from(b'0' + d)));
    if dp > 0 {
        s.push('.');
        s.extend(digits[int_len..].iter().map(|d| char::from(b'0' + d)));
    }
    s
}

/// Like [`round_half_even`] but without the leading zero of values in
/// (-1, 1): `.898`, `-.120`.
pub fn no_leading_zero(x: f64, dp: usize) -> String {
    let s = round_half_even(x, dp);
    if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else {
        s
    }
}

pub const DAGGER: &str = "\u{2020}";
pub const SIGNIFICANCE: f64 = 0.05;

/// Two-decimal p-value without leading zero, daggered below 0.05. Values
/// that would print as `.00` are shown as `<.01`.
pub fn p_value(p: f64) -> String {
    let mut s = no_leading_zero(p, 2);
    if s == ".00" && p > 0.0 {
        s = "<.01".into();
    }
    if p < SIGNIFICANCE {
        s.push_str(DAGGER);
    }
    s
}

pub fn bold(s: &str) -> String {
    format!("**{s}**")
}
