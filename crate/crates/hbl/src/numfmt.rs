//! Number formatting for data files.
//!
//! JSON carries 17 significant digits, which round-trips every `f64`; CSV
//! carries 12. Magnitudes below `1e-4` (and very large ones) switch to
//! scientific notation. Non-finite values become `null` in JSON and `nan`,
//! `inf` or `-inf` in CSV.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub const JSON_DIGITS: usize = 17;
pub const CSV_DIGITS: usize = 12;

/// `x` with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs();
    if !(1e-4..1e15).contains(&mag) {
        return format!("{:.*e}", digits - 1, x);
    }
    let exponent = mag.log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exponent).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // rounding may carry into a new leading digit, e.g. 9.99… → 10.0…
    let leading = s.trim_start_matches('-').split('.').next().map_or(0, |p| p.trim_start_matches('0').len());
    if leading > 0 && leading + decimals > digits && decimals > 0 {
        format!("{:.*}", decimals - 1, x)
    } else {
        s
    }
}

pub fn csv(x: f64) -> String {
    fmt_sig(x, CSV_DIGITS)
}

/// Pretty JSON with fixed-precision floats.
struct SigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_sig(value, JSON_DIGITS).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serialises `value` as pretty JSON with 17-digit floats and a trailing
/// newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFormatter { inner: PrettyFormatter::new() });
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(3.121_444_615_919_457, 12), "3.12144461592");
        assert_eq!(fmt_sig(-1.0, 12), "-1.00000000000");
        assert_eq!(fmt_sig(0.5, 3), "0.500");
        assert_eq!(fmt_sig(123.456, 4), "123.5");
        assert_eq!(fmt_sig(9.9996, 4), "10.00");
        assert_eq!(fmt_sig(2.5e-5, 3), "2.50e-5");
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(f64::NAN, 12), "nan");
    }

    #[test]
    fn json_round_trips() {
        for x in [0.1, 1.0 / 3.0, 3.121_444_615_919_457, -1.387_425_886_722_793, 1.234e-9, 6.02e23, 1e-4] {
            let s = to_json(&x).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back, x, "{s}");
        }
        assert_eq!(to_json(&f64::NAN).unwrap().trim(), "null");
    }
}
