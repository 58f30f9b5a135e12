// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.


use std::process::ExitCode;

use circfid::baseline::BaselineError;
use circfid::circuit::ParseError;
use circfid::dataset::DatasetError;
use circfid::layout::LayoutError;
use circfid::nn::NnError;
use circfid::pipeline::PipelineError;
use circfid::report::ReportError;
use circfid::sim::SimError;
use circfid::tokenizer::TokenizeError;
use circfid::transpile::TranspileError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        })
    }

    /// Prefixes the message with the file or item it concerns.
    pub fn context(self, what: impl std::fmt::Display) -> CliError {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{what}: {m}")),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TranspileError> for CliError {
    fn from(e: TranspileError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TokenizeError> for CliError {
    fn from(e: TokenizeError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let m = e.to_string();
        match e {
            DatasetError::Config(_) | DatasetError::Empty(_) | DatasetError::DegenerateSplit(..) | DatasetError::Rb(_) => {
                CliError::Config(m)
            }
            DatasetError::Io(_) => CliError::Io(m),
            DatasetError::Metric(_) => CliError::Numerical(m),
            _ => CliError::Input(m),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        let m = e.to_string();
        match e {
            NnError::Config(_) | NnError::TrainConfig(_) | NnError::ConfigMismatch => CliError::Config(m),
            NnError::Diverged { .. } => CliError::Numerical(m),
            NnError::Io(_) => CliError::Io(m),
            _ => CliError::Input(m),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Dataset(e) => e.into(),
            PipelineError::Tokenize(e) => e.into(),
            PipelineError::Nn(e) => e.into(),
            PipelineError::Transpile(e) => e.into(),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Pipeline(e) => e.into(),
            ReportError::Baseline(e) => e.into(),
            ReportError::Dataset(e) => e.into(),
            ReportError::Layout(e) => e.into(),
            ReportError::Transpile(e) => e.into(),
            ReportError::Io(e) => e.into(),
            ReportError::Empty => CliError::Config(ReportError::Empty.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(e: impl Into<CliError>) -> ExitCode {
        e.into().exit_code()
    }

    #[test]
    fn errors_map_to_documented_exit_codes() {
        assert_eq!(code(NnError::Diverged { epoch: 3, loss: f64::NAN }), ExitCode::from(4));
        assert_eq!(code(NnError::ConfigMismatch), ExitCode::from(2));
        assert_eq!(code(NnError::Checkpoint("bad magic".into())), ExitCode::from(3));
        assert_eq!(code(DatasetError::Empty(500)), ExitCode::from(2));
        assert_eq!(code(PipelineError::Nn(NnError::Diverged { epoch: 0, loss: f64::INFINITY })), ExitCode::from(4));
        assert_eq!(code(ReportError::Empty), ExitCode::from(2));
        assert_eq!(code(TokenizeError::UnknownLabel("cx06".into())), ExitCode::from(3));
    }
}
