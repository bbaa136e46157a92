//! News dataset ingestion, cleaning, tokenization and labeling.

mod filter;
mod proxy;
mod record;
mod tokenize;
mod vocab;

pub use filter::{clean_filter, FilterRules, FilterStats};
pub use proxy::{
    assign_worthiness_proxy, is_known_tag, ProxyPolicy, ProxyRule, ProxyStats, REGIONS, SECTORS, TOP20_COMPANIES,
};
pub use record::{
    format_timestamp, ingest_news, parse_record_line, parse_timestamp, record_to_json, write_news_jsonl,
    write_rejections_csv, Ingested, NewsRecord, Rejection,
};
pub use tokenize::{tokenize, tokenize_text, TokenizedDoc};
pub use vocab::{build_vocabulary, most_frequent, Vocabulary};
