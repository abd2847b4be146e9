pub mod export;
pub mod fixture;
pub mod images;
pub mod ingest;
pub mod layout;
pub mod menustat;
pub mod model;
pub mod pipeline;
pub mod query;
pub mod sanitize;
pub mod scrape;
pub mod table;
