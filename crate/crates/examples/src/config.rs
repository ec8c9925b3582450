//! Location map files: one `<location> <host> <port>` per line, `#` comments.

use std::path::Path;

use choreo::{Error, HttpConfig};

pub fn parse_config(text: &str) -> Result<HttpConfig, Error> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [loc, host, port] = fields[..] else {
            return Err(Error::Config(format!(
                "line {}: expected `<location> <host> <port>`, got `{line}`",
                n + 1
            )));
        };
        let port: u16 = port
            .parse()
            .map_err(|_| Error::Config(format!("line {}: invalid port `{port}`", n + 1)))?;
        entries.push((loc.to_string(), host.to_string(), port));
    }
    HttpConfig::new(entries)
}

pub fn load_config(path: &Path) -> Result<HttpConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use choreo::{Backend, LocationId};

    #[test]
    fn parses_entries_and_comments() {
        let cfg = parse_config(
            "# deployment\nbuyer  buyer.example.com 3000\n\n  seller shop.example.org 4000 # the shop\n",
        )
        .unwrap();
        assert_eq!(
            cfg.locations(),
            vec![LocationId::from("buyer"), "seller".into()]
        );
        assert_eq!(cfg.address(&"seller".into()).unwrap().port, 4000);
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in [
            "buyer host",
            "buyer host 3000 extra",
            "buyer host port",
            "buyer host 70000",
            "",
            "# only",
        ] {
            assert!(
                matches!(parse_config(bad), Err(Error::Config(_))),
                "{bad:?}"
            );
        }
        assert!(parse_config("a h 1\na h 2").is_err());
    }
}
