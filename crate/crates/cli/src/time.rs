//! UTC time parsing and formatting.

use crate::error::UsageError;
use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

/// Accepts RFC 3339, `YYYY-MM-DDTHH:MM[Z]`, `YYYY-MM-DD HH:MM`, a bare date
/// or epoch seconds. Times without an offset are UTC.
pub fn parse_time(text: &str) -> Result<i64, UsageError> {
    let s = text.trim();
    if let Ok(secs) = s.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.timestamp());
    }
    let bare = s.strip_suffix('Z').unwrap_or(s);
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(bare, fmt) {
            return Ok(t.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(bare, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp());
    }
    Err(UsageError::new(format!("cannot parse time `{text}`")))
}

fn utc(ts: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(ts, 0).unwrap_or_default()
}

/// `2022-05-05T12:00Z`.
pub fn format_time(ts: i64) -> String {
    utc(ts).format("%Y-%m-%dT%H:%MZ").to_string()
}

/// `20220505T12`, for file names.
pub fn file_stamp(ts: i64) -> String {
    utc(ts).format("%Y%m%dT%H").to_string()
}

/// `05 May`, for axis ticks.
pub fn day_label(ts: i64) -> String {
    utc(ts).format("%d %b").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_forms() {
        let t = 1_651_752_000;
        for s in ["2022-05-05T12:00Z", "2022-05-05T12:00:00Z", "2022-05-05T12:00", "2022-05-05 12:00", "1651752000", "2022-05-05T14:00:00+02:00"] {
            assert_eq!(parse_time(s).unwrap(), t, "{s}");
        }
        assert_eq!(parse_time("2022-05-05").unwrap(), t - 12 * 3600);
        assert!(parse_time("May 5th").is_err());
        assert_eq!(format_time(t), "2022-05-05T12:00Z");
        assert_eq!(file_stamp(t), "20220505T12");
        assert_eq!(day_label(t), "05 May");
    }
}
