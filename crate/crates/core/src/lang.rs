//! Subject languages and the five syntax-element categories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the four subject languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Cpp,
    Java,
    Python,
    Csharp,
}

impl Language {
    pub const ALL: [Language; 4] = [
        Language::Cpp,
        Language::Java,
        Language::Python,
        Language::Csharp,
    ];

    /// Stable lowercase id used in file names, case ids and CLI flags.
    pub fn id(self) -> &'static str {
        match self {
            Language::Cpp => "cpp",
            Language::Java => "java",
            Language::Python => "python",
            Language::Csharp => "csharp",
        }
    }

    /// Human-facing name used in report table headers.
    pub fn display_name(self) -> &'static str {
        match self {
            Language::Cpp => "C++",
            Language::Java => "Ja",
            Language::Python => "Py",
            Language::Csharp => "C#",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cpp" | "c++" | "cxx" => Ok(Language::Cpp),
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            "csharp" | "c#" | "cs" => Ok(Language::Csharp),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

/// Roll-up category for a syntax element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    VariableConstant,
    Datatype,
    DataStructure,
    Operator,
    LoopBranch,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::VariableConstant,
        Category::Datatype,
        Category::DataStructure,
        Category::Operator,
        Category::LoopBranch,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Category::VariableConstant => "VariableConstant",
            Category::Datatype => "Datatype",
            Category::DataStructure => "DataStructure",
            Category::Operator => "Operator",
            Category::LoopBranch => "LoopBranch",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "VariableConstant" => Ok(Category::VariableConstant),
            "Datatype" => Ok(Category::Datatype),
            "DataStructure" => Ok(Category::DataStructure),
            "Operator" => Ok(Category::Operator),
            "LoopBranch" => Ok(Category::LoopBranch),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_round_trips_through_serde() {
        for lang in Language::ALL {
            let json = serde_json::to_string(&lang).unwrap();
            assert_eq!(json, format!("\"{}\"", lang.id()));
            let back: Language = serde_json::from_str(&json).unwrap();
            assert_eq!(back, lang);
        }
    }

    #[test]
    fn category_parses_exact_names_only() {
        assert!(Category::from_str("Operator").is_ok());
        assert!(Category::from_str("operator").is_err());
    }
}
