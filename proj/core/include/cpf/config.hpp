#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cpf/model.hpp"

namespace cpf {

/// Parses a model document:
///
///   { "domain": {"kind": "box" | "under_curve" | "indicator", ...},
///     "marks":  {"d2": n, "mean": {"family", "params"}, "cov": {"family", "params"},
///                "noise": "gaussian" | "rademacher" | "uniform"},
///     "nu": intensity }
///
/// Coordinates referenced by families ("coord") are 1-based. Unknown keys are
/// rejected; `extra_top_level` names top-level keys owned by other readers.
/// Throws InvalidArgument with the JSON path of the offending value.
ModelSpec parse_model_spec(const nlohmann::json& doc,
                           std::initializer_list<std::string_view> extra_top_level = {});

// Parses JSON text, reporting syntax errors as "<source>:<line>:<column>: ...".
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace cpf
