use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CategoryKind, Project, WorkflowError, GENERIC_CATEGORY_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = WorkflowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(WorkflowError::UnknownFormat(s.to_string())),
        }
    }
}

/// A code with its words, label and categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table2Row {
    pub topic_number: String,
    pub words: String,
    pub label: String,
    pub categories: String,
}

/// A category with its member codes and aggregate dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table3Row {
    pub topic_numbers: String,
    pub category: String,
    pub aggregate_dimension: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tables {
    pub table2: Vec<Table2Row>,
    pub table3: Vec<Table3Row>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Export {
    Json(String),
    Csv { table2: String, table3: String },
}

pub const TABLE2_HEADER: [&str; 4] = ["topic_number", "words", "label", "categories"];
pub const TABLE3_HEADER: [&str; 3] = ["topic_numbers", "category", "aggregate_dimension"];

/// Builds both tables. Table 2 lists ACTIVE codes by topic id; Table 3 lists
/// categories by category id.
pub fn tables(project: &Project) -> Tables {
    let table2 = project
        .active_codes()
        .map(|code| Table2Row {
            topic_number: format!("topic_{}", code.topic_id),
            words: code.top_words.join(" "),
            label: code.aggregate_label.clone().unwrap_or_default(),
            categories: project
                .categories_of(code.topic_id)
                .iter()
                .map(|c| c.name.as_str())
                .collect::<Vec<_>>()
                .join("; "),
        })
        .collect();
    let table3 = project
        .categories()
        .iter()
        .map(|category| {
            let aggregate_dimension = match project.dimension_of(category.category_id) {
                Some(d) => d.name.clone(),
                None if category.kind == CategoryKind::Generic => GENERIC_CATEGORY_LABEL.to_string(),
                None => String::new(),
            };
            Table3Row {
                topic_numbers: category
                    .member_codes
                    .iter()
                    .map(|t| format!("topic_{t}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                category: category.name.clone(),
                aggregate_dimension,
            }
        })
        .collect();
    Tables { table2, table3 }
}

fn to_csv<R: Serialize>(header: &[&str], rows: &[R]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .has_headers(false)
        .from_writer(Vec::new());
    writer.write_record(header).expect("write to memory");
    for row in rows {
        writer.serialize(row).expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 csv")
}

pub fn export_tables(project: &Project, format: ExportFormat) -> Export {
    let tables = tables(project);
    match format {
        ExportFormat::Json => {
            Export::Json(serde_json::to_string_pretty(&tables).expect("tables serialize"))
        }
        ExportFormat::Csv => Export::Csv {
            table2: to_csv(&TABLE2_HEADER, &tables.table2),
            table3: to_csv(&TABLE3_HEADER, &tables.table3),
        },
    }
}
