use thiserror::Error;

use crate::harness::CampaignReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("NotHermitian: max |M - M^dagger| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("TraceNotOne: trace = {re} + {im}i, |Tr - 1| exceeds {tol:e}")]
    TraceNotOne { re: f64, im: f64, tol: f64 },

    #[error("NotPositive: min eigenvalue = {min_eigenvalue:e} is below -{tol:e}")]
    NotPositive { min_eigenvalue: f64, tol: f64 },

    #[error("FanoOutOfBounds: {0}")]
    FanoOutOfBounds(String),

    #[error("InvalidCoefficients: {0}")]
    InvalidCoefficients(String),

    #[error("NotXState: entry ({row},{col}) has magnitude {magnitude:e} > tol {tol:e}")]
    NotXState {
        row: usize,
        col: usize,
        magnitude: f64,
        tol: f64,
    },

    #[error("InvalidXState: {0}")]
    InvalidXState(String),

    #[error("SpectrumNotReal: eigenvalue {re} + {im}i of rho * rho_tilde is outside tolerance")]
    SpectrumNotReal { re: f64, im: f64 },

    #[error("Unphysical: {0}")]
    Unphysical(String),

    #[error("DomainError: {0}")]
    Domain(String),

    #[error("SettingConstraintViolated: {0}")]
    SettingConstraintViolated(String),

    #[error("InvalidFunctionalForScenario: {0}")]
    InvalidFunctionalForScenario(String),

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("TightnessViolation: {functional} found {found} exceeds closed form {closed} by {excess:e}")]
    TightnessViolation {
        functional: String,
        found: f64,
        closed: f64,
        excess: f64,
    },

    #[error("ExhaustedRejection: no accepted sample after {attempts} attempts")]
    ExhaustedRejection { attempts: usize },

    #[error("CampaignFailed: {} ({} failures); first counterexample: {}", .0.campaign, .0.failures, .0.counterexample_json())]
    CampaignFailed(Box<CampaignReport>),

    #[error("InvalidDocument: {0}")]
    InvalidDocument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed property.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::CampaignFailed(_)
                | Error::TightnessViolation { .. }
                | Error::SpectrumNotReal { .. }
                | Error::ExhaustedRejection { .. }
        )
    }
}
