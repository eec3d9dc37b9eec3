#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "cpf/oracle.hpp"
#include "cpf/ordering.hpp"
#include "cpf/sampler.hpp"
#include "cpf/verify.hpp"

namespace cpf {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

// Writes the whole file; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

// rep,i,x1..xd1,y1..yd2 (i is 1-based within the replication).
std::string samples_csv(std::span<const MarkedSample> samples);

// rep,ordering,t,component,value; one path per replication.
std::string paths_csv(std::span<const PartialSumPath> paths);
nlohmann::json paths_sidecar(const PartialSumPath& path);
// rep,t,component,value for one series of each path.
std::string series_csv(std::span<const PartialSumPath> paths, std::size_t series);

// rep,corner_id,component,value; corner ids are 1-based.
std::string field_csv(std::span<const FieldEvaluation> fields);
nlohmann::json field_sidecar(const FieldEvaluation& field);

// block,t1,t2,row,col,value,err_estimate. For the corner field t1/t2 are corner ids.
std::string oracle_csv(const CovarianceBlock& block);
nlohmann::json oracle_metadata(const CovarianceBlock& block, const ModelSpec& spec);

nlohmann::json report_json(const ComparisonReport& report);
// One line per covariance entry with its bound and verdict.
std::string report_csv(const ComparisonReport& report);

// nu,max_abs_deviation,se_at_max,max_rel_deviation,pass
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace cpf
