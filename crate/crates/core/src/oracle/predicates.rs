//! String grammars behind the format oracles.
//!
//! Every pattern is restricted to ASCII classes and anchors so that it has the
//! same meaning for the `regex` crate and for JavaScript `RegExp` without
//! flags; the assertion emitter embeds these exact patterns in test scripts.

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Absolute URI: a scheme, then either an authority introduced by `//` or a
/// non-empty path. Only RFC 3986 characters and well-formed percent escapes.
pub const URL_PATTERN: &str = concat!(
    r"^[A-Za-z][A-Za-z0-9+.\-]*:",
    r"(?://(?:[A-Za-z0-9\-._~!$&'()*+,;=:@\[\]]|%[0-9A-Fa-f]{2})+",
    r"(?:[A-Za-z0-9\-._~!$&'()*+,;=:@\[\]/?#]|%[0-9A-Fa-f]{2})*",
    r"|(?:[A-Za-z0-9\-._~!$&'()*+,;=:@\[\]?#]|%[0-9A-Fa-f]{2})",
    r"(?:[A-Za-z0-9\-._~!$&'()*+,;=:@\[\]/?#]|%[0-9A-Fa-f]{2})*",
    r"|/(?:[A-Za-z0-9\-._~!$&'()*+,;=:@\[\]?#]|%[0-9A-Fa-f]{2})",
    r"(?:[A-Za-z0-9\-._~!$&'()*+,;=:@\[\]/?#]|%[0-9A-Fa-f]{2})*)$"
);

/// `local@domain` where the domain has at least one dot.
pub const EMAIL_PATTERN: &str = concat!(
    r"^[A-Za-z0-9.!#$%&'*+/=?^_`{|}~\-]+@",
    r"[A-Za-z0-9](?:[A-Za-z0-9\-]*[A-Za-z0-9])?",
    r"(?:\.[A-Za-z0-9](?:[A-Za-z0-9\-]*[A-Za-z0-9])?)+$"
);

/// ISO 8601 calendar date, `YYYY-MM-DD`.
pub const ISO_DATE_PATTERN: &str = r"^[0-9]{4}-(?:0[1-9]|1[0-2])-(?:0[1-9]|[12][0-9]|3[01])$";

/// 24-hour `HH:MM` or `HH:MM:SS`.
pub const TIME_PATTERN: &str = r"^(?:[01][0-9]|2[0-3]):[0-5][0-9](?::[0-5][0-9])?$";

/// Optionally signed decimal with an optional fraction.
pub const NUMERIC_PATTERN: &str = r"^[+-]?[0-9]+(?:\.[0-9]+)?$";

/// Tunables for oracle checking, shared by the native evaluator and the
/// assertion emitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CheckConfig {
    /// Accepted date formats as regular expressions; a string is a date if
    /// any of them matches. Patterns must also be valid JavaScript regexes.
    pub date_formats: Vec<String>,
    /// Absolute tolerance for numeric bounds and numeric value sets.
    pub epsilon: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { date_formats: vec![ISO_DATE_PATTERN.to_string()], epsilon: 0.0 }
    }
}

/// Compiled predicates for one [`CheckConfig`].
#[derive(Debug, Clone)]
pub struct Checker {
    config: CheckConfig,
    url: Regex,
    email: Regex,
    numeric: Regex,
    time: Regex,
    dates: Vec<Regex>,
}

impl Checker {
    pub fn new(config: CheckConfig) -> Result<Self, regex::Error> {
        let dates = config.date_formats.iter().map(|p| Regex::new(p)).collect::<Result<_, _>>()?;
        Ok(Self {
            url: Regex::new(URL_PATTERN)?,
            email: Regex::new(EMAIL_PATTERN)?,
            numeric: Regex::new(NUMERIC_PATTERN)?,
            time: Regex::new(TIME_PATTERN)?,
            dates,
            config,
        })
    }

    pub fn config(&self) -> &CheckConfig {
        &self.config
    }

    pub fn is_url(&self, s: &str) -> bool {
        self.url.is_match(s)
    }

    pub fn is_email(&self, s: &str) -> bool {
        self.email.is_match(s)
    }

    pub fn is_numeric(&self, s: &str) -> bool {
        self.numeric.is_match(s)
    }

    pub fn is_time(&self, s: &str) -> bool {
        self.time.is_match(s)
    }

    pub fn is_date(&self, s: &str) -> bool {
        self.dates.iter().any(|re| re.is_match(s))
    }
}

impl Default for Checker {
    fn default() -> Self {
        Self::new(CheckConfig::default()).expect("built-in patterns compile")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_grammar() {
        let c = Checker::default();
        for ok in [
            "https://s3-media1.fl.yelpcdn.com/bphoto/zrG.jpg",
            "http://localhost:8080/a?b=c#d",
            "mailto:someone@example.com",
            "urn:isbn:0451450523",
            "ftp://[::1]/pub",
            "https://example.com/a%20b",
        ] {
            assert!(c.is_url(ok), "{ok}");
        }
        for bad in [
            "https://a b.com/x",
            "https://example.com/a b",
            "www.example.com",
            "/relative/path",
            "http://",
            "https://example.com/%zz",
            "1http://x",
            "",
            "http://é.com",
            "http://example.com\n",
        ] {
            assert!(!c.is_url(bad), "{bad:?}");
        }
    }

    #[test]
    fn email_grammar() {
        let c = Checker::default();
        assert!(c.is_email("sales@example.com"));
        assert!(c.is_email("first.last+tag@sub.example.co.uk"));
        assert!(!c.is_email("no-at-sign.example.com"));
        assert!(!c.is_email("user@localhost"));
        assert!(!c.is_email("user name@example.com"));
        assert!(!c.is_email("a@b@c.com"));
        assert!(!c.is_email("user@-bad.com"));
    }

    #[test]
    fn date_time_numeric_grammars() {
        let c = Checker::default();
        assert!(c.is_date("2024-03-15"));
        assert!(!c.is_date("2024-13-01"));
        assert!(!c.is_date("2024-3-15"));
        assert!(!c.is_date("2024-03-15T10:00:00Z"));
        assert!(c.is_time("09:30"));
        assert!(c.is_time("23:59:59"));
        assert!(!c.is_time("24:00"));
        assert!(!c.is_time("9:30"));
        assert!(c.is_numeric("-12.50"));
        assert!(c.is_numeric("+7"));
        assert!(!c.is_numeric("1e5"));
        assert!(!c.is_numeric(".5"));
        assert!(!c.is_numeric("١٢"));
    }

    #[test]
    fn date_registry_extends_accepted_formats() {
        let c = Checker::new(CheckConfig {
            date_formats: vec![ISO_DATE_PATTERN.into(), r"^[0-9]{2}/[0-9]{2}/[0-9]{4}$".into()],
            epsilon: 0.0,
        })
        .unwrap();
        assert!(c.is_date("15/03/2024"));
        assert!(c.is_date("2024-03-15"));
        assert!(Checker::new(CheckConfig { date_formats: vec!["(".into()], epsilon: 0.0 }).is_err());
    }
}
