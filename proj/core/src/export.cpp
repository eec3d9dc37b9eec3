#include "cpf/export.hpp"

#include <charconv>
#include <fstream>

namespace cpf {
namespace {

std::string block_label(const CovarianceBlock& block, std::size_t a, std::size_t b) {
  if (block.target == Target::theorem1) {
    return "11";
  }
  return std::to_string(block.points[a].series + 1) + std::to_string(block.points[b].series + 1);
}

nlohmann::json grid_json(std::span<const GridPoint> points) {
  auto out = nlohmann::json::array();
  for (const auto& p : points) {
    out.push_back({{"series", p.series + 1}, {"coords", p.coords}});
  }
  return out;
}

nlohmann::json matrix_json(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (value == 0.0) {
    return "0";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << text;
  out.flush();
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

std::string samples_csv(std::span<const MarkedSample> samples) {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  for (const auto& s : samples) {
    d1 = std::max(d1, static_cast<std::size_t>(s.points.cols()));
    d2 = std::max(d2, static_cast<std::size_t>(s.marks.cols()));
  }
  std::string out = "rep,i";
  for (std::size_t k = 1; k <= d1; ++k) out += ",x" + std::to_string(k);
  for (std::size_t k = 1; k <= d2; ++k) out += ",y" + std::to_string(k);
  out += '\n';
  for (const auto& s : samples) {
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
      out += std::to_string(s.replication) + ',' + std::to_string(i + 1);
      for (Eigen::Index k = 0; k < s.points.cols(); ++k) out += ',' + format_double(s.points(i, k));
      for (Eigen::Index k = 0; k < s.marks.cols(); ++k) out += ',' + format_double(s.marks(i, k));
      out += '\n';
    }
  }
  return out;
}

std::string paths_csv(std::span<const PartialSumPath> paths) {
  std::string out = "rep,ordering,t,component,value\n";
  for (std::size_t r = 0; r < paths.size(); ++r) {
    const auto& p = paths[r];
    for (std::size_t s = 0; s < p.orderings.size(); ++s) {
      const std::string label = p.orderings[s].label();
      for (std::size_t g = 0; g < p.grid.size(); ++g) {
        for (std::size_t c = 0; c < p.mark_dim; ++c) {
          out += std::to_string(r) + ',' + label + ',' + format_double(p.grid[g]) + ',' +
                 std::to_string(c + 1) + ',' +
                 format_double(p.values[g](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c))) + '\n';
        }
      }
    }
  }
  return out;
}

nlohmann::json paths_sidecar(const PartialSumPath& path) {
  auto orderings = nlohmann::json::array();
  for (const auto& o : path.orderings) orderings.push_back(o.label());
  return {{"grid", path.grid},
          {"orderings", orderings},
          {"mark_dim", path.mark_dim},
          {"centering", path.centering == Centering::none ? "none" : "per_term_mean"},
          {"normalization", "partial sum over the first floor(eta t) ordered points divided by sqrt(eta)"}};
}

std::string series_csv(std::span<const PartialSumPath> paths, std::size_t series) {
  std::string out = "rep,t,component,value\n";
  for (std::size_t r = 0; r < paths.size(); ++r) {
    const auto& p = paths[r];
    if (series >= p.orderings.size()) {
      throw InvalidArgument("series_csv: series index out of range");
    }
    for (std::size_t g = 0; g < p.grid.size(); ++g) {
      for (std::size_t c = 0; c < p.mark_dim; ++c) {
        out += std::to_string(r) + ',' + format_double(p.grid[g]) + ',' + std::to_string(c + 1) + ',' +
               format_double(p.values[g](static_cast<Eigen::Index>(series), static_cast<Eigen::Index>(c))) +
               '\n';
      }
    }
  }
  return out;
}

std::string field_csv(std::span<const FieldEvaluation> fields) {
  std::string out = "rep,corner_id,component,value\n";
  for (std::size_t r = 0; r < fields.size(); ++r) {
    const auto& f = fields[r];
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      for (Eigen::Index c = 0; c < f.values[k].size(); ++c) {
        out += std::to_string(r) + ',' + std::to_string(k + 1) + ',' + std::to_string(c + 1) + ',' +
               format_double(f.values[k](c)) + '\n';
      }
    }
  }
  return out;
}

nlohmann::json field_sidecar(const FieldEvaluation& field) {
  auto corners = nlohmann::json::array();
  for (std::size_t k = 0; k < field.corners.size(); ++k) {
    std::vector<double> c(field.centering[k].data(), field.centering[k].data() + field.centering[k].size());
    corners.push_back({{"corner_id", k + 1}, {"u", field.corners[k]}, {"centering", c}});
  }
  return {{"corners", corners},
          {"normalization", "(Q(u) - eta c(u)) / sqrt(eta)"}};
}

std::string oracle_csv(const CovarianceBlock& block) {
  std::string out = "block,t1,t2,row,col,value,err_estimate\n";
  for (std::size_t a = 0; a < block.size(); ++a) {
    for (std::size_t b = 0; b < block.size(); ++b) {
      const auto& e = block.at(a, b);
      std::string t1;
      std::string t2;
      if (block.target == Target::theorem1) {
        t1 = std::to_string(a + 1);
        t2 = std::to_string(b + 1);
      } else {
        t1 = format_double(block.points[a].coords[0]);
        t2 = format_double(block.points[b].coords[0]);
      }
      const std::string prefix = block_label(block, a, b) + ',' + t1 + ',' + t2 + ',';
      for (Eigen::Index i = 0; i < e.value.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.value.cols(); ++j) {
          out += prefix + std::to_string(i + 1) + ',' + std::to_string(j + 1) + ',' + format_double(e.value(i, j)) +
                 ',' + format_double(e.error) + '\n';
        }
      }
    }
  }
  return out;
}

nlohmann::json oracle_metadata(const CovarianceBlock& block, const ModelSpec& spec) {
  double worst_error = 0.0;
  for (const auto& e : block.entries) worst_error = std::max(worst_error, e.error);
  nlohmann::json corners = nlohmann::json::array();
  if (block.target == Target::theorem1) {
    for (std::size_t k = 0; k < block.size(); ++k) {
      corners.push_back({{"corner_id", k + 1}, {"u", block.points[k].coords}});
    }
  }
  return {{"target", to_string(block.target)},
          {"mode", to_string(block.mode)},
          {"region_kind", to_string(spec.domain.kind())},
          {"region_measure", spec.domain.measure()},
          {"mark_dim", block.mark_dim},
          {"grid", grid_json(block.points)},
          {"corners", corners},
          {"tolerances",
           {{"integration_tol", block.options.tol},
            {"base_level", block.options.base_level},
            {"max_refinements", block.options.max_refinements},
            {"qmc_points", block.options.qmc_points},
            {"qmc_shifts", block.options.qmc_shifts}}},
          {"max_error_estimate", worst_error},
          {"max_cross_check_ratio", block.max_cross_check_ratio()},
          {"min_eigenvalue", block.min_eigenvalue()},
          {"warnings", block.warnings}};
}

nlohmann::json report_json(const ComparisonReport& report) {
  auto ks = nlohmann::json::array();
  for (const auto& k : report.ks) {
    std::vector<double> dir(k.direction.data(), k.direction.data() + k.direction.size());
    ks.push_back({{"point", k.point + 1},
                  {"direction", dir},
                  {"n", k.n},
                  {"distance", k.distance},
                  {"critical", k.critical},
                  {"alpha", k.alpha},
                  {"reject", k.reject}});
  }
  return {{"target", to_string(report.target)},
          {"mode", to_string(report.mode)},
          {"pass", report.pass},
          {"replications", report.replications},
          {"degenerate", report.degenerate},
          {"nu", report.intensity},
          {"seed", report.seed},
          {"tolerance", {{"absolute", report.tolerance.absolute}, {"relative", report.tolerance.relative},
                         {"se_multiplier", 4.0}}},
          {"mark_dim", report.mark_dim},
          {"grid", grid_json(report.points)},
          {"max_abs_deviation", report.max_abs_deviation},
          {"se_at_max", report.se_at_max},
          {"max_rel_deviation", report.max_rel_deviation},
          {"worst_entry", {report.worst_row + 1, report.worst_col + 1}},
          {"failing_entries", report.failing_entries},
          {"empirical", matrix_json(report.empirical)},
          {"oracle", matrix_json(report.oracle)},
          {"standard_error", matrix_json(report.standard_error)},
          {"deviation", matrix_json(report.deviation)},
          {"ks", ks}};
}

std::string report_csv(const ComparisonReport& report) {
  std::string out = "row,col,empirical,oracle,deviation,se,bound,pass\n";
  for (Eigen::Index i = 0; i < report.empirical.rows(); ++i) {
    for (Eigen::Index j = 0; j < report.empirical.cols(); ++j) {
      const double bound = report.tolerance.bound(report.oracle(i, j), report.standard_error(i, j));
      out += std::to_string(i + 1) + ',' + std::to_string(j + 1) + ',' + format_double(report.empirical(i, j)) +
             ',' + format_double(report.oracle(i, j)) + ',' + format_double(report.deviation(i, j)) + ',' +
             format_double(report.standard_error(i, j)) + ',' + format_double(bound) + ',' +
             (std::abs(report.deviation(i, j)) <= bound ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "nu,max_abs_deviation,se_at_max,max_rel_deviation,pass\n";
  for (const auto& r : rows) {
    out += format_double(r.intensity) + ',' + format_double(r.max_abs_deviation) + ',' +
           format_double(r.se_at_max) + ',' + format_double(r.max_rel_deviation) + ',' + (r.pass ? "1" : "0") +
           '\n';
  }
  return out;
}

}  // namespace cpf
