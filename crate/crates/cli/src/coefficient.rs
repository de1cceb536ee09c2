//! `const:`, `expr:` and `field:` coefficient specifications.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use formfem::assembler::CoefficientSource;
use formfem::dofmap::DofMap;
use formfem::element::{Constant, FiniteElement, PhysicalFunction};
use formfem::linalg::{read_matrix_market, read_plain_vector, MatrixMarket};
use formfem::mesh::Mesh;

use crate::error::CliError;
use crate::expr::{parse_expr, ExprFunction};

#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Const(Vec<f64>),
    Expr(ExprFunction),
    Field(PathBuf),
}

/// `name=source`, as given to `assemble --coefficient`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSpec {
    pub name: String,
    pub source: SourceSpec,
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl FromStr for SourceSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (kind, body) =
            s.split_once(':').ok_or_else(|| CliError::Parse(format!("'{s}': expected const:, expr: or field:")))?;
        match kind {
            "const" => split_top_level(body)
                .into_iter()
                .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Parse(format!("'{t}' is not a number"))))
                .collect::<Result<_, _>>()
                .map(SourceSpec::Const),
            "expr" => split_top_level(body)
                .into_iter()
                .map(|t| parse_expr(t).map_err(|e| CliError::Parse(format!("expression '{t}': {e}"))))
                .collect::<Result<_, _>>()
                .map(|v| SourceSpec::Expr(ExprFunction(v))),
            "field" => Ok(SourceSpec::Field(PathBuf::from(body))),
            _ => Err(CliError::Parse(format!("unknown coefficient source '{kind}'"))),
        }
    }
}

impl FromStr for CoefficientSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, source) =
            s.split_once('=').ok_or_else(|| CliError::Usage(format!("'{s}': expected name=source")))?;
        Ok(Self { name: name.trim().to_string(), source: source.parse()? })
    }
}

/// Reads a dof vector: MatrixMarket array or one value per line.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut first = String::new();
    BufReader::new(File::open(path).map_err(|e| CliError::input(path, e))?)
        .read_line(&mut first)
        .map_err(|e| CliError::input(path, e))?;
    let file = File::open(path).map_err(|e| CliError::input(path, e))?;
    if first.starts_with("%%MatrixMarket") {
        match read_matrix_market(file).map_err(|e| CliError::input(path, e))? {
            MatrixMarket::Vector(v) => Ok(v),
            MatrixMarket::Matrix(_) => Err(CliError::input(path, "expected a vector, found a matrix")),
        }
    } else {
        read_plain_vector(file).map_err(|e| CliError::input(path, e))
    }
}

impl SourceSpec {
    /// Source for a coefficient living in `element` on `mesh`.
    pub fn resolve(&self, element: &FiniteElement, mesh: &Mesh) -> Result<CoefficientSource, CliError> {
        match self {
            SourceSpec::Const(values) => {
                if values.len() != element.value_size() {
                    return Err(CliError::Usage(format!(
                        "constant has {} components, element {} has {}",
                        values.len(),
                        element.signature(),
                        element.value_size()
                    )));
                }
                Ok(CoefficientSource::analytic(Constant(values.clone())))
            }
            SourceSpec::Expr(f) => {
                if f.value_size() != element.value_size() {
                    return Err(CliError::Usage(format!(
                        "expression has {} components, element {} has {}",
                        f.value_size(),
                        element.signature(),
                        element.value_size()
                    )));
                }
                if let Some(i) = f.0.iter().filter_map(|e| e.max_coordinate()).max() {
                    if i >= mesh.gdim() {
                        return Err(CliError::Usage(format!("x[{i}] used on a mesh of dimension {}", mesh.gdim())));
                    }
                }
                Ok(CoefficientSource::analytic(f.clone()))
            }
            SourceSpec::Field(path) => {
                let values = read_vector(path)?;
                let dofmap = DofMap::for_mesh(mesh, element).map_err(|e| CliError::Usage(e.to_string()))?;
                if values.len() != dofmap.global_dimension() {
                    return Err(CliError::Usage(format!(
                        "{}: {} values, {} needs {}",
                        path.display(),
                        values.len(),
                        element.signature(),
                        dofmap.global_dimension()
                    )));
                }
                Ok(CoefficientSource::discrete(dofmap, values))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        let c: CoefficientSpec = "f=const:100".parse().unwrap();
        assert_eq!(c.name, "f");
        assert_eq!(c.source, SourceSpec::Const(vec![100.0]));
        assert_eq!("const:1, 2".parse::<SourceSpec>().unwrap(), SourceSpec::Const(vec![1.0, 2.0]));
        match "expr:sin(x[0]),x[1]^2".parse::<SourceSpec>().unwrap() {
            SourceSpec::Expr(f) => assert_eq!(f.value_size(), 2),
            other => panic!("{other:?}"),
        }
        assert_eq!("field:u.txt".parse::<SourceSpec>().unwrap(), SourceSpec::Field("u.txt".into()));
        assert!("f".parse::<CoefficientSpec>().is_err());
        assert!("f=nope:1".parse::<CoefficientSpec>().is_err());
        assert!("const:a".parse::<SourceSpec>().is_err());
    }
}
