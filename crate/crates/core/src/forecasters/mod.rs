//! Base forecasters and the scores built on them.

pub mod garch;
pub mod ols;
pub mod panel;
pub mod scores;
pub mod simplex;

pub use garch::{
    garch_fit, garch_nll, garch_simulate, garch_simulate_with, garch_variance_path, rolling_garch_forecasts,
    GarchFit, GarchFitOptions, GarchParams, GarchPath, RollingForecasts,
};
pub use ols::{rolling_ols_fit, rolling_ols_fit_with_layout, LagFeature, OlsModel};
pub use panel::{panel_forecasts, simulate_panel, PanelModelSpec, PanelRow, PanelSeries};
pub use scores::{conformity_score, panel_score, volatility_score};
