//! GTFS time-of-day and date text formats.

use chrono::NaiveDate;

use super::GtfsError;

/// Parses `H:MM:SS` or `HH:MM:SS` into seconds after midnight. Hours may
/// exceed 23 for service running past midnight.
pub fn parse_time(text: &str) -> Result<u32, GtfsError> {
    let bad = || GtfsError::BadTime(text.to_string());
    let t = text.trim();
    let mut parts = t.split(':');
    let (h, m, s) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(h), Some(m), Some(s), None) => (h, m, s),
        _ => return Err(bad()),
    };
    if h.is_empty() || h.len() > 3 || m.len() != 2 || s.len() != 2 {
        return Err(bad());
    }
    let digits = |p: &str| -> Result<u32, GtfsError> {
        if p.bytes().all(|b| b.is_ascii_digit()) {
            p.parse().map_err(|_| bad())
        } else {
            Err(bad())
        }
    };
    let (h, m, s) = (digits(h)?, digits(m)?, digits(s)?);
    if m >= 60 || s >= 60 {
        return Err(bad());
    }
    Ok(h * 3600 + m * 60 + s)
}

/// Formats seconds as `HH:MM:SS`, with hours past 23 kept as-is.
pub fn format_time(secs: u32) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, (secs / 60) % 60, secs % 60)
}

/// Parses a `start-end` window such as `07:00-09:00`. Seconds are optional
/// on both sides.
pub fn parse_window(text: &str) -> Result<(u32, u32), GtfsError> {
    let (a, b) = text.split_once('-').ok_or_else(|| GtfsError::BadTime(text.to_string()))?;
    Ok((parse_clock(a)?, parse_clock(b)?))
}

/// Like [`parse_time`] but also accepts `HH:MM`.
pub fn parse_clock(text: &str) -> Result<u32, GtfsError> {
    let t = text.trim();
    if t.matches(':').count() == 1 {
        parse_time(&format!("{t}:00")).map_err(|_| GtfsError::BadTime(text.to_string()))
    } else {
        parse_time(t)
    }
}

pub fn parse_date(text: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(text.trim(), "%Y%m%d").map_err(|e| format!("bad date `{text}`: {e}"))
}

pub fn format_date(date: NaiveDate) -> String {
    date.format("%Y%m%d").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn after_midnight_hours() {
        assert_eq!(parse_time("25:10:00").unwrap(), 90600);
        assert_eq!(parse_time("7:05:09").unwrap(), 7 * 3600 + 5 * 60 + 9);
        assert_eq!(format_time(90600), "25:10:00");
    }

    #[test]
    fn rejects_malformed() {
        for t in ["", "12:00", "12:60:00", "1a:00:00", "12:00:00:00", "-1:00:00", "12:5:00"] {
            assert!(matches!(parse_time(t), Err(GtfsError::BadTime(_))), "{t}");
        }
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("07:00-09:00").unwrap(), (25200, 32400));
        assert_eq!(parse_window("06:00:30-22:00").unwrap(), (21630, 79200));
        assert!(parse_window("0700").is_err());
    }

    #[test]
    fn dates() {
        let d = parse_date("20210411").unwrap();
        assert_eq!(format_date(d), "20210411");
        assert!(parse_date("2021-04-11").is_err());
    }

    proptest::proptest! {
        #[test]
        fn time_text_round_trip(s in 0u32..172_800) {
            proptest::prop_assert_eq!(parse_time(&format_time(s)).unwrap(), s);
        }
    }
}
