//! Per-language toolchain commands: discovery, config file overrides, and
//! version capture.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::exec::ExecError;
use crate::lang::Language;

/// Env var naming a toolchain config JSON file.
pub const TOOLCHAINS_ENV: &str = "SYNTAXPROBE_TOOLCHAINS";

/// Argv templates for one language. Placeholders `{src}`, `{out}` and
/// `{workdir}` are substituted per execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolchainCommands {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile_cmd: Option<Vec<String>>,
    pub run_cmd: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version_cmd: Option<Vec<String>>,
}

impl ToolchainCommands {
    /// Every binary this toolchain needs must resolve on PATH.
    pub fn available(&self) -> bool {
        self.binaries().iter().all(|b| resolve_binary(b).is_some())
    }

    fn binaries(&self) -> Vec<&str> {
        let mut bins = Vec::new();
        if let Some(cmd) = &self.compile_cmd {
            if let Some(first) = cmd.first() {
                bins.push(first.as_str());
            }
        }
        if let Some(first) = self.run_cmd.first() {
            // `{out}` as argv[0] means "run the artifact we just built".
            if !first.starts_with('{') {
                bins.push(first.as_str());
            }
        }
        bins
    }

    pub fn version(&self) -> Option<String> {
        let cmd = self.version_cmd.as_ref()?;
        let (bin, args) = cmd.split_first()?;
        let output = Command::new(bin).args(args).output().ok()?;
        let text = if output.stdout.is_empty() {
            String::from_utf8_lossy(&output.stderr).to_string()
        } else {
            String::from_utf8_lossy(&output.stdout).to_string()
        };
        Some(text.lines().next().unwrap_or("").trim().to_string())
    }
}

fn resolve_binary(name: &str) -> Option<PathBuf> {
    let candidate = Path::new(name);
    if candidate.components().count() > 1 {
        return candidate.is_file().then(|| candidate.to_path_buf());
    }
    let path_var = env::var_os("PATH")?;
    env::split_paths(&path_var)
        .map(|dir| dir.join(name))
        .find(|p| p.is_file())
}

/// The set of toolchains used by a run. Built-in defaults, overridable per
/// language from a JSON config file.
#[derive(Debug, Clone)]
pub struct ToolchainSet {
    configured: BTreeMap<Language, Vec<ToolchainCommands>>,
}

impl Default for ToolchainSet {
    fn default() -> Self {
        let mut configured = BTreeMap::new();
        configured.insert(
            Language::Cpp,
            vec![ToolchainCommands {
                compile_cmd: Some(strs(&["g++", "-O0", "-std=c++17", "{src}", "-o", "{out}"])),
                run_cmd: strs(&["{out}"]),
                version_cmd: Some(strs(&["g++", "--version"])),
            }],
        );
        configured.insert(
            Language::Java,
            vec![ToolchainCommands {
                compile_cmd: Some(strs(&["javac", "-d", "{workdir}", "{src}"])),
                run_cmd: strs(&["java", "-cp", "{workdir}", "Main"]),
                version_cmd: Some(strs(&["javac", "-version"])),
            }],
        );
        configured.insert(
            Language::Python,
            vec![ToolchainCommands {
                compile_cmd: None,
                run_cmd: strs(&["python3", "{src}"]),
                version_cmd: Some(strs(&["python3", "--version"])),
            }],
        );
        configured.insert(
            Language::Csharp,
            vec![
                ToolchainCommands {
                    compile_cmd: Some(strs(&["csc", "-nologo", "-out:{out}", "{src}"])),
                    run_cmd: strs(&["mono", "{out}"]),
                    version_cmd: Some(strs(&["csc", "-version"])),
                },
                ToolchainCommands {
                    compile_cmd: Some(strs(&["mcs", "-out:{out}", "{src}"])),
                    run_cmd: strs(&["mono", "{out}"]),
                    version_cmd: Some(strs(&["mcs", "--version"])),
                },
            ],
        );
        ToolchainSet { configured }
    }
}

fn strs(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl ToolchainSet {
    /// Defaults overridden by `SYNTAXPROBE_TOOLCHAINS` if set.
    pub fn from_env() -> Result<Self, ExecError> {
        match env::var(TOOLCHAINS_ENV) {
            Ok(path) if !path.trim().is_empty() => Self::load(Path::new(&path)),
            _ => Ok(ToolchainSet::default()),
        }
    }

    /// Load per-language overrides from a JSON config file; languages not
    /// present in the file keep their defaults.
    pub fn load(path: &Path) -> Result<Self, ExecError> {
        let text = fs::read_to_string(path)?;
        let overrides: BTreeMap<Language, ToolchainCommands> = serde_json::from_str(&text)
            .map_err(|e| ExecError::BadSuiteFile {
                reason: format!("toolchain config {}: {e}", path.display()),
            })?;
        let mut set = ToolchainSet::default();
        for (lang, commands) in overrides {
            set.configured.insert(lang, vec![commands]);
        }
        Ok(set)
    }

    /// First configured candidate whose binaries all resolve.
    pub fn resolve(&self, language: Language) -> Result<&ToolchainCommands, ExecError> {
        self.configured
            .get(&language)
            .into_iter()
            .flatten()
            .find(|c| c.available())
            .ok_or(ExecError::ToolchainMissing(language))
    }

    pub fn is_available(&self, language: Language) -> bool {
        self.resolve(language).is_ok()
    }

    /// Languages from `wanted` with no usable toolchain.
    pub fn missing(&self, wanted: &[Language]) -> Vec<Language> {
        let mut missing: Vec<Language> = wanted
            .iter()
            .copied()
            .filter(|&l| !self.is_available(l))
            .collect();
        missing.sort();
        missing.dedup();
        missing
    }

    /// Version strings of resolvable toolchains among `wanted`.
    pub fn versions(&self, wanted: &[Language]) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for &lang in wanted {
            if let Ok(commands) = self.resolve(lang) {
                if let Some(version) = commands.version() {
                    out.insert(lang.id().to_string(), version);
                }
            }
        }
        out
    }
}

/// Substitute `{src}`, `{out}`, `{workdir}` in an argv template.
pub(crate) fn substitute(template: &[String], src: &Path, out: &Path, workdir: &Path) -> Vec<String> {
    template
        .iter()
        .map(|arg| {
            arg.replace("{src}", &src.display().to_string())
                .replace("{out}", &out.display().to_string())
                .replace("{workdir}", &workdir.display().to_string())
        })
        .collect()
}
