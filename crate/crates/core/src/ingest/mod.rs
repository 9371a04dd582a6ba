//! Loading and calendar alignment of price and news data.

mod align;
pub mod fetch;
mod news;
mod panel;
mod prices;

pub use align::{
    align_panel, AlignPolicy, AlignReport, Alignment, CalendarRule, DroppedSeries, LabeledSeries,
};
pub use news::{load_news, read_news, write_news, NewsDocument, NewsLoad};
pub use panel::{AlignedPanel, PanelKind};
pub(crate) use prices::csv_io;
pub use prices::{load_prices, read_prices, write_prices, PriceSeries};
