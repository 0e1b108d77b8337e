use std::fmt::Display;

/// Usage problems (bad flags, unreadable inputs, invalid configs) exit
/// with 2; everything that goes wrong while processing exits with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Processing(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn processing(msg: impl Display) -> Self {
        Failure::Processing(anyhow::anyhow!("{msg}"))
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Processing(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Processing(e) => e,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Processing(e.into())
    }
}

pub trait UsageExt<T> {
    /// Reclassifies an error as a usage error.
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageExt<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}
