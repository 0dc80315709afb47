//! Method specifications as they appear on the command line, e.g.
//! `persistence`, `ar(3)`, `ls_mar(3)`, `cst_uniform(3)`, `cst_nonuniform`.

use windcast_core::design::BlockLayout;
use windcast_core::forecast::Method;

use crate::errors::{CliError, CliResult};

const DEFAULT_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MethodSpec {
    Persistence,
    Ar(usize),
    LsMar(usize),
    CstUniform(usize),
    /// Layout chosen later from correlation analysis (or tuning).
    CstNonuniform,
}

impl MethodSpec {
    pub fn parse(raw: &str) -> CliResult<Self> {
        let raw = raw.trim();
        let (name, arg) = match raw.find('(') {
            Some(open) => {
                if !raw.ends_with(')') {
                    return Err(CliError::usage(format!("malformed method '{raw}'")));
                }
                let inner = &raw[open + 1..raw.len() - 1];
                let order: usize = inner.trim().parse().map_err(|_| {
                    CliError::usage(format!("method '{raw}': bad order '{inner}'"))
                })?;
                if order == 0 {
                    return Err(CliError::usage(format!("method '{raw}': order must be >= 1")));
                }
                (&raw[..open], Some(order))
            }
            None => (raw, None),
        };
        match (name, arg) {
            ("persistence", None) => Ok(MethodSpec::Persistence),
            ("ar", order) => Ok(MethodSpec::Ar(order.unwrap_or(DEFAULT_ORDER))),
            ("ls_mar", order) => Ok(MethodSpec::LsMar(order.unwrap_or(DEFAULT_ORDER))),
            ("cst_uniform", order) => Ok(MethodSpec::CstUniform(order.unwrap_or(DEFAULT_ORDER))),
            ("cst_nonuniform", None) => Ok(MethodSpec::CstNonuniform),
            _ => Err(CliError::usage(format!(
                "unknown method '{raw}' (expected persistence, ar(p), ls_mar(n), cst_uniform(n), cst_nonuniform)"
            ))),
        }
    }

    pub fn parse_list(raw: &[String]) -> CliResult<Vec<Self>> {
        let mut specs = Vec::with_capacity(raw.len());
        for item in raw {
            specs.push(MethodSpec::parse(item)?);
        }
        if specs.is_empty() {
            return Err(CliError::usage("no methods requested"));
        }
        Ok(specs)
    }

    /// Turns the spec into an engine method; nonuniform needs its layout.
    pub fn to_method(&self, nonuniform_layout: Option<&BlockLayout>) -> CliResult<Method> {
        Ok(match self {
            MethodSpec::Persistence => Method::Persistence,
            MethodSpec::Ar(order) => Method::Ar { order: *order },
            MethodSpec::LsMar(order) => Method::LsMar { order: *order },
            MethodSpec::CstUniform(order) => Method::CstUniform { order: *order },
            MethodSpec::CstNonuniform => Method::CstNonuniform {
                layout: nonuniform_layout
                    .ok_or_else(|| CliError::usage("cst_nonuniform needs a resolved layout"))?
                    .clone(),
            },
        })
    }

    pub fn label(&self) -> String {
        match self {
            MethodSpec::Persistence => "persistence".into(),
            MethodSpec::Ar(order) => format!("ar({order})"),
            MethodSpec::LsMar(order) => format!("ls_mar({order})"),
            MethodSpec::CstUniform(order) => format!("cst_uniform({order})"),
            MethodSpec::CstNonuniform => "cst_nonuniform".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_method_family() {
        assert_eq!(MethodSpec::parse("persistence").unwrap(), MethodSpec::Persistence);
        assert_eq!(MethodSpec::parse("ar(3)").unwrap(), MethodSpec::Ar(3));
        assert_eq!(MethodSpec::parse("ls_mar(2)").unwrap(), MethodSpec::LsMar(2));
        assert_eq!(MethodSpec::parse("cst_uniform(4)").unwrap(), MethodSpec::CstUniform(4));
        assert_eq!(MethodSpec::parse("cst_nonuniform").unwrap(), MethodSpec::CstNonuniform);
        assert_eq!(MethodSpec::parse("ar").unwrap(), MethodSpec::Ar(3));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(MethodSpec::parse("arima(2)").is_err());
        assert!(MethodSpec::parse("ar(").is_err());
        assert!(MethodSpec::parse("ar(x)").is_err());
        assert!(MethodSpec::parse("ar(0)").is_err());
        assert!(MethodSpec::parse("persistence(2)").is_err());
        assert!(MethodSpec::parse("cst_nonuniform(2)").is_err());
    }
}
