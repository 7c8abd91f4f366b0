use serde::Serialize;
use spraylab::expmap::ExpError;
use spraylab::expr::EvalError;
use spraylab::geometry::GeometryError;
use spraylab::integrator::IntegrationError;
use spraylab::probes::ProbeError;
use spraylab::torsion::TorsionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Input,
    Numerical,
}

/// An error reported as JSON on standard error.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// Character offset inside the offending expression.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl CliError {
    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            position: None,
            component: None,
            line: None,
            column: None,
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Input, message)
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Numerical, message)
    }

    pub fn at_line(mut self, line: usize, column: usize) -> Self {
        self.line = Some(line);
        self.column = Some(column);
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        let mut err = match &e {
            GeometryError::Eval(_) => CliError::numerical(e.to_string()),
            _ => CliError::input(e.to_string()),
        };
        if let GeometryError::Parse { component, source } = &e {
            err.position = Some(source.position());
            err.component = Some(component.clone());
        }
        err
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::numerical(e.to_string())
    }
}

impl From<IntegrationError> for CliError {
    fn from(e: IntegrationError) -> Self {
        match e {
            IntegrationError::Geometry(g) => g.into(),
            IntegrationError::OutsideChart { .. } | IntegrationError::InvalidInput(_) => CliError::input(e.to_string()),
            IntegrationError::Domain { .. } | IntegrationError::MaxSteps { .. } => CliError::numerical(e.to_string()),
        }
    }
}

impl From<ExpError> for CliError {
    fn from(e: ExpError) -> Self {
        match e {
            ExpError::Integration(i) => i.into(),
            ExpError::ZeroEpsilon => CliError::input(e.to_string()),
            _ => CliError::numerical(e.to_string()),
        }
    }
}

impl From<TorsionError> for CliError {
    fn from(e: TorsionError) -> Self {
        match e {
            TorsionError::Geometry(g) => g.into(),
            TorsionError::Eval(g) => g.into(),
            TorsionError::Integration(g) => g.into(),
            TorsionError::Exp(g) => g.into(),
            _ => CliError::numerical(e.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Geometry(g) => g.into(),
            ProbeError::Integration(g) => g.into(),
            ProbeError::Exp(g) => g.into(),
            ProbeError::InvalidInput(_) => CliError::input(e.to_string()),
            _ => CliError::numerical(e.to_string()),
        }
    }
}
