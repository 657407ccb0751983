use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use medley_core::catalog::Intent;
use medley_core::dataset::{load_csv, CsvOptions};
use medley_core::engine::UserInput;
use medley_core::session::Session;

use crate::api::{recommendations_body, RecommendationsResponse};
use crate::config::ServerConfig;

#[derive(Debug, Parser)]
#[command(name = "medley", version, about = "Dashboard collection recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rank collections for one CSV file and write them as JSON.
    Recommend(RecommendArgs),
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated attribute names.
    #[arg(long, value_delimiter = ',')]
    pub attrs: Vec<String>,
    /// Comma-separated intents: measure, change, category, distribution.
    #[arg(long, value_delimiter = ',')]
    pub intents: Vec<IntentArg>,
    /// Keep only the first N collections.
    #[arg(long)]
    pub top: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include a Vega-Lite spec for every view.
    #[arg(long)]
    pub charts: bool,
    /// Engine parameters and catalog path, as for `serve`.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntentArg(pub Intent);

impl FromStr for IntentArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        Intent::ALL
            .into_iter()
            .find(|i| {
                let full = format!("{i:?}").to_lowercase();
                full == norm || full.strip_suffix("analysis") == Some(norm.as_str())
            })
            .map(IntentArg)
            .ok_or_else(|| format!("unknown intent `{s}` (expected measure, change, category or distribution)"))
    }
}

pub fn load_config(path: Option<&PathBuf>) -> anyhow::Result<ServerConfig> {
    Ok(match path {
        Some(p) => ServerConfig::load(p)?,
        None => ServerConfig::default(),
    })
}

/// The batch `recommend` command: same engine and response shape as
/// `GET /sessions/{id}/recommendations`.
pub fn recommend(args: &RecommendArgs) -> anyhow::Result<RecommendationsResponse> {
    let cfg = load_config(args.config.as_ref())?;
    let catalog = cfg.load_catalog()?;
    let bytes = std::fs::read(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let ds = load_csv(&bytes, CsvOptions::default()).with_context(|| format!("loading {}", args.data.display()))?;
    let mut session = Session::new("batch", Arc::new(ds), Arc::new(catalog), cfg.engine);
    let intents: Vec<Intent> = args.intents.iter().map(|i| i.0).collect();
    session.update_input(UserInput {
        explicit_attrs: args.attrs.clone(),
        intents,
    })?;
    let recs = session.refresh_recommendations()?;
    let mut body = recommendations_body(&session, &recs, false, args.charts).map_err(|e| anyhow::anyhow!(e.message))?;
    if let Some(n) = args.top {
        body.collections.truncate(n);
    }
    Ok(body)
}

pub fn run_recommend(args: &RecommendArgs) -> anyhow::Result<()> {
    let body = recommend(args)?;
    let text = serde_json::to_string_pretty(&body)?;
    match &args.out {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intents_accept_short_and_full_names() {
        for (s, i) in [
            ("change", Intent::ChangeAnalysis),
            ("ChangeAnalysis", Intent::ChangeAnalysis),
            ("measure-analysis", Intent::MeasureAnalysis),
            ("Distribution", Intent::DistributionAnalysis),
            ("category", Intent::CategoryAnalysis),
        ] {
            assert_eq!(s.parse::<IntentArg>().unwrap().0, i);
        }
        assert!("trend".parse::<IntentArg>().is_err());
    }

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from([
            "medley", "recommend", "--data", "x.csv", "--attrs", "Profit,Region", "--intents", "change", "--top", "2",
        ])
        .unwrap();
        let Command::Recommend(a) = cli.command else { panic!("expected recommend") };
        assert_eq!(a.attrs, ["Profit", "Region"]);
        assert_eq!(a.intents, [IntentArg(Intent::ChangeAnalysis)]);
        assert_eq!(a.top, Some(2));
        assert!(Cli::try_parse_from(["medley", "recommend", "--data", "x.csv", "--intents", "nope"]).is_err());
    }
}
