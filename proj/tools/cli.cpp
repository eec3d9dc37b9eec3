#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>

#include "cpf/config.hpp"
#include "cpf/export.hpp"
#include "cpf/oracle.hpp"
#include "cpf/ordering.hpp"
#include "cpf/sampler.hpp"
#include "cpf/verify.hpp"

namespace cpf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunSettings {
  std::optional<Target> target;
  OracleMode mode = OracleMode::quantile_normalized;
  std::optional<std::vector<double>> grid;
  std::vector<std::size_t> coords;  // 0-based
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  double tol = 0.05;
  double rel_tol = 0.0;
  std::vector<double> nu_list;
  std::size_t threads = 0;
  double integration_tol = 1e-5;
  FieldRoute route = FieldRoute::rejection;
  std::size_t path_points = 101;
  std::size_t path_reps = 10;
};

// Raw flag values; empty optionals mean "not given".
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> reps;
  std::optional<double> nu;
  std::optional<double> tol;
  std::optional<std::string> mode;
  std::optional<std::string> grid;
  std::optional<std::string> nu_list;
  std::optional<std::string> target;
  std::optional<std::string> route;
  std::optional<std::size_t> threads;
  bool corrupt_oracle = false;
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t stop = std::min(text.find(',', start), text.size());
    std::string item = text.substr(start, stop - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double value = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw InvalidArgument(what + ": cannot parse '" + item + "' as a number");
    }
    out.push_back(value);
    start = stop + 1;
  }
  return out;
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) {
    throw InvalidArgument(path + ": expected a non-empty array of numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw InvalidArgument(path + ": expected a non-empty array of numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) {
    throw InvalidArgument(path + ": expected a number");
  }
  return v.get<double>();
}

std::size_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InvalidArgument(path + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

FieldRoute parse_route(const std::string& name) {
  if (name == "rejection") return FieldRoute::rejection;
  if (name == "thinning") return FieldRoute::thinning;
  throw InvalidArgument("unknown route '" + name + "' (expected rejection or thinning)");
}

RunSettings parse_run(const json& doc) {
  RunSettings run;
  if (!doc.contains("run")) {
    return run;
  }
  const json& r = doc.at("run");
  if (!r.is_object()) {
    throw InvalidArgument("run: expected an object");
  }
  static const std::set<std::string> known = {"target", "mode",  "grid",    "coords",          "reps",
                                              "seed",   "tol",   "rel_tol", "nu_list",         "threads",
                                              "route",  "path_points", "path_reps", "integration_tol"};
  for (const auto& [key, value] : r.items()) {
    if (!known.count(key)) {
      throw InvalidArgument("run." + key + ": unknown field");
    }
    const std::string path = "run." + key;
    if (key == "target") {
      run.target = parse_target(value.get<std::string>());
    } else if (key == "mode") {
      run.mode = parse_mode(value.get<std::string>());
    } else if (key == "grid") {
      run.grid = number_list(value, path);
    } else if (key == "coords") {
      for (double c : number_list(value, path)) {
        if (c < 1.0 || c != std::floor(c)) {
          throw InvalidArgument(path + ": coordinates are 1-based integers");
        }
        run.coords.push_back(static_cast<std::size_t>(c) - 1);
      }
    } else if (key == "reps") {
      run.reps = count(value, path);
    } else if (key == "seed") {
      run.seed = value.get<std::uint64_t>();
    } else if (key == "tol") {
      run.tol = number(value, path);
    } else if (key == "rel_tol") {
      run.rel_tol = number(value, path);
    } else if (key == "nu_list") {
      run.nu_list = number_list(value, path);
    } else if (key == "threads") {
      run.threads = count(value, path);
    } else if (key == "route") {
      run.route = parse_route(value.get<std::string>());
    } else if (key == "path_points") {
      run.path_points = count(value, path);
    } else if (key == "path_reps") {
      run.path_reps = count(value, path);
    } else if (key == "integration_tol") {
      run.integration_tol = number(value, path);
    }
  }
  return run;
}

struct Context {
  ModelSpec spec;
  RunSettings run;
  fs::path out_dir;
};

Context load(const Flags& flags) {
  const json doc = read_json_file(flags.config);
  if (!doc.is_object()) {
    throw InvalidArgument(flags.config + ": expected a JSON object");
  }
  ModelSpec spec = parse_model_spec(doc, {"run"});
  RunSettings run;
  try {
    run = parse_run(doc);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("run: ") + e.what());
  }
  if (flags.seed) run.seed = *flags.seed;
  if (flags.reps) run.reps = *flags.reps;
  if (flags.tol) run.tol = *flags.tol;
  if (flags.mode) run.mode = parse_mode(*flags.mode);
  if (flags.grid) run.grid = parse_list(*flags.grid, "--grid");
  if (flags.nu_list) run.nu_list = parse_list(*flags.nu_list, "--nu-list");
  if (flags.target) run.target = parse_target(*flags.target);
  if (flags.route) run.route = parse_route(*flags.route);
  if (flags.threads) run.threads = *flags.threads;
  if (flags.nu) spec = spec.with_intensity(*flags.nu);
  if (!(run.tol >= 0.0) || !(run.rel_tol >= 0.0)) {
    throw InvalidArgument("tolerances must be non-negative");
  }
  if (!(run.integration_tol > 0.0)) {
    throw InvalidArgument("run.integration_tol: must be positive");
  }

  fs::path out_dir = "cpf_out";
  if (flags.out) {
    out_dir = *flags.out;
  } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
    out_dir = env;
  }
  return {std::move(spec), std::move(run), std::move(out_dir)};
}

Target default_target(const ModelSpec& spec) {
  if (spec.domain.kind() == DomainKind::under_curve && spec.supports_time_intensity()) {
    return Target::theorem3;
  }
  return spec.marks.mean().is_zero() ? Target::theorem2 : Target::theorem1;
}

std::vector<GridPoint> build_grid(const Context& ctx, Target target) {
  const auto& run = ctx.run;
  std::vector<double> values;
  if (run.grid) {
    values = *run.grid;
  } else if (target == Target::theorem1) {
    values = {0.25, 0.5, 0.75, 1.0};
  } else {
    values = {0.25, 0.5, 0.75};
  }
  for (double g : values) {
    if (target != Target::theorem3 || run.mode == OracleMode::quantile_normalized) {
      if (!(g >= 0.0 && g <= 1.0)) {
        throw InvalidArgument("grid values must lie in [0, 1]");
      }
    }
  }
  switch (target) {
    case Target::theorem1: {
      const Box& box = ctx.spec.domain.bounding_box();
      std::vector<std::vector<double>> corners = product_corners(values, box.dim());
      for (auto& u : corners) {
        for (std::size_t k = 0; k < u.size(); ++k) {
          u[k] = box.lower[k] + u[k] * (box.upper[k] - box.lower[k]);
        }
      }
      return theorem1_grid(corners);
    }
    case Target::theorem2: {
      std::vector<std::size_t> coords = run.coords;
      if (coords.empty()) {
        for (std::size_t k = 0; k < ctx.spec.domain.dim(); ++k) coords.push_back(k);
      }
      for (std::size_t c : coords) {
        if (c >= ctx.spec.domain.dim()) {
          throw InvalidArgument("run.coords: coordinate " + std::to_string(c + 1) + " out of range");
        }
      }
      return theorem2_grid(coords, values);
    }
    case Target::theorem3:
      return theorem3_grid(values);
  }
  return {};
}

IntegrationOptions integration_options(const RunSettings& run) {
  IntegrationOptions options;
  options.tol = run.integration_tol;
  return options;
}

ReplicationOptions replication_options(const RunSettings& run) {
  ReplicationOptions options;
  options.threads = run.threads;
  options.route = run.route;
  options.integration = integration_options(run);
  return options;
}

void write_oracle(const fs::path& dir, const CovarianceBlock& block, const ModelSpec& spec) {
  write_text_file(dir / "oracle.csv", oracle_csv(block));
  write_json_file(dir / "oracle.json", oracle_metadata(block, spec));
}

// Long-format statistics of a batch, with the matching sidecar.
void write_statistics(const fs::path& dir, const ReplicationBatch& batch, const ModelSpec& spec,
                      const ReplicationOptions& options) {
  const auto d = static_cast<Eigen::Index>(batch.mark_dim);
  if (batch.target == Target::theorem1) {
    std::vector<FieldEvaluation> fields(batch.replications());
    std::vector<Vector> centerings;
    std::vector<std::vector<double>> corners;
    for (const auto& p : batch.points) {
      corners.push_back(p.coords);
      centerings.push_back(centering(spec, p.coords, options.integration));
    }
    for (std::size_t r = 0; r < batch.replications(); ++r) {
      auto& f = fields[r];
      f.corners = corners;
      f.centering = centerings;
      f.degenerate = batch.degenerate[r] != 0;
      for (std::size_t a = 0; a < batch.points.size(); ++a) {
        f.values.push_back(batch.stats[r].segment(static_cast<Eigen::Index>(a) * d, d));
      }
    }
    write_text_file(dir / "field.csv", field_csv(fields));
    write_json_file(dir / "field.json", field_sidecar(fields.front()));
    return;
  }
  std::vector<std::size_t> series;
  std::vector<double> grid;
  for (const auto& p : batch.points) {
    series.push_back(p.series);
    grid.push_back(p.coords[0]);
  }
  std::sort(series.begin(), series.end());
  series.erase(std::unique(series.begin(), series.end()), series.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<OrderingKey> keys;
  for (std::size_t s : series) {
    if (batch.target == Target::theorem3) {
      keys.push_back(s == 0 ? OrderingKey::time() : OrderingKey::intensity());
    } else {
      keys.push_back(OrderingKey::coordinate(s));
    }
  }
  std::vector<PartialSumPath> paths(batch.replications());
  for (std::size_t r = 0; r < batch.replications(); ++r) {
    auto& p = paths[r];
    p.grid = grid;
    p.orderings = keys;
    p.mark_dim = batch.mark_dim;
    p.centering = batch.target == Target::theorem3 ? Centering::per_term_mean : Centering::none;
    p.degenerate = batch.degenerate[r] != 0;
    p.values.assign(grid.size(), Matrix::Zero(static_cast<Eigen::Index>(keys.size()), d));
    for (std::size_t a = 0; a < batch.points.size(); ++a) {
      const auto g = static_cast<std::size_t>(
          std::lower_bound(grid.begin(), grid.end(), batch.points[a].coords[0]) - grid.begin());
      const auto s = std::lower_bound(series.begin(), series.end(), batch.points[a].series) - series.begin();
      p.values[g].row(s) = batch.stats[r].segment(static_cast<Eigen::Index>(a) * d, d).transpose();
    }
  }
  write_text_file(dir / "paths.csv", paths_csv(paths));
  write_json_file(dir / "paths.json", paths_sidecar(paths.front()));
}

void add_ks(ComparisonReport& report, const ReplicationBatch& batch, const CovarianceBlock& block) {
  for (std::size_t a = 0; a < block.size(); ++a) {
    for (std::size_t c = 0; c < block.mark_dim; ++c) {
      std::vector<double> dir(block.mark_dim, 0.0);
      dir[c] = 1.0;
      if (block.at(a, a).value(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) <= 0.0) {
        continue;
      }
      report.ks.push_back(ks_normality(batch, block, a, dir));
    }
  }
}

void print_report(std::ostream& out, const std::string& name, const ComparisonReport& r) {
  out << name << ": " << (r.pass ? "PASS" : "FAIL") << " max_abs_deviation=" << format_double(r.max_abs_deviation)
      << " se_at_max=" << format_double(r.se_at_max) << " failing_entries=" << r.failing_entries
      << " replications=" << r.replications << " degenerate=" << r.degenerate << '\n';
}

CovarianceBlock compute_oracle(const Context& ctx, Target target, const std::vector<GridPoint>& grid,
                               std::ostream& err) {
  CovarianceBlock block = oracle_block(ctx.spec, target, grid, ctx.run.mode, integration_options(ctx.run));
  for (const auto& w : block.warnings) {
    err << "warning: " << w << '\n';
  }
  return block;
}

// ---------------------------------------------------------------------------

int cmd_sample(const Flags& flags, std::ostream& out) {
  const Context ctx = load(flags);
  const std::size_t reps = flags.reps.value_or(1);
  if (reps < 1) {
    throw InvalidArgument("--reps must be at least 1");
  }
  std::vector<MarkedSample> samples;
  for (std::size_t r = 0; r < reps; ++r) {
    samples.push_back(sample_field(ctx.spec, ctx.run.seed, r, ctx.run.route));
  }
  write_text_file(ctx.out_dir / "samples.csv", samples_csv(samples));
  std::size_t total = 0;
  for (const auto& s : samples) total += s.count();
  out << "wrote " << (ctx.out_dir / "samples.csv").string() << " (" << reps << " replications, " << total
      << " points)\n";
  return kPass;
}

int cmd_oracle(const Flags& flags, std::ostream& out, std::ostream& err) {
  const Context ctx = load(flags);
  const Target target = ctx.run.target.value_or(default_target(ctx.spec));
  const auto grid = build_grid(ctx, target);
  const CovarianceBlock block = compute_oracle(ctx, target, grid, err);
  write_oracle(ctx.out_dir, block, ctx.spec);
  out << "wrote " << (ctx.out_dir / "oracle.csv").string() << " (" << to_string(target) << ", "
      << to_string(block.mode) << ", " << block.size() << " grid points)\n";
  return kPass;
}

int verify_target(const Flags& flags, std::optional<Target> forced, std::ostream& out, std::ostream& err) {
  const Context ctx = load(flags);
  const Target target = forced.value_or(ctx.run.target.value_or(default_target(ctx.spec)));
  if (ctx.run.reps < 2) {
    throw InvalidArgument("--reps must be at least 2");
  }
  const auto grid = build_grid(ctx, target);
  CovarianceBlock block = compute_oracle(ctx, target, grid, err);
  if (flags.corrupt_oracle) {
    for (auto& e : block.entries) {
      e.value.array() += 1.0;
    }
  }
  const ReplicationOptions options = replication_options(ctx.run);
  const auto batch = run_replications(ctx.spec, target, grid, ctx.run.reps, ctx.run.seed, options);
  ComparisonReport report = compare_to_oracle(batch, block, {ctx.run.tol, ctx.run.rel_tol});
  add_ks(report, batch, block);

  write_oracle(ctx.out_dir, block, ctx.spec);
  write_statistics(ctx.out_dir, batch, ctx.spec, options);
  write_json_file(ctx.out_dir / "report.json", report_json(report));
  write_text_file(ctx.out_dir / "report.csv", report_csv(report));

  if (target == Target::theorem3) {
    const std::size_t points = std::max<std::size_t>(ctx.run.path_points, 2);
    std::vector<double> fine(points);
    for (std::size_t k = 0; k < points; ++k) {
      fine[k] = static_cast<double>(k) / static_cast<double>(points - 1);
    }
    std::vector<PartialSumPath> paths;
    for (std::size_t r = 0; r < std::min(ctx.run.path_reps, ctx.run.reps); ++r) {
      const MarkedSample sample = sample_field(ctx.spec, ctx.run.seed, r, ctx.run.route);
      RngStream ties(ctx.run.seed, r, Purpose::ties);
      paths.push_back(theorem3_process(sample, ctx.spec, fine, ties));
    }
    if (!paths.empty()) {
      write_text_file(ctx.out_dir / "v1_paths.csv", series_csv(paths, 0));
      write_text_file(ctx.out_dir / "v2_paths.csv", series_csv(paths, 1));
      write_json_file(ctx.out_dir / "v_paths.json", paths_sidecar(paths.front()));
    }
  }
  print_report(out, to_string(target), report);
  return report.pass ? kPass : kStatisticalFail;
}

int cmd_theorem3(const Flags& flags, std::ostream& out, std::ostream& err) {
  {
    const json doc = read_json_file(flags.config);
    const ModelSpec spec = parse_model_spec(doc, {"run"});
    if (spec.domain.kind() != DomainKind::under_curve) {
      throw InvalidArgument("theorem3: the domain must be of kind under_curve");
    }
  }
  return verify_target(flags, Target::theorem3, out, err);
}

int cmd_sweep(const Flags& flags, std::ostream& out, std::ostream& err) {
  const Context ctx = load(flags);
  if (ctx.run.nu_list.size() < 2) {
    throw InvalidArgument("sweep: need at least two intensities (--nu-list)");
  }
  if (ctx.run.reps < 2) {
    throw InvalidArgument("--reps must be at least 2");
  }
  const Target target = ctx.run.target.value_or(default_target(ctx.spec));
  const auto grid = build_grid(ctx, target);
  const CovarianceBlock block = compute_oracle(ctx, target, grid, err);
  const auto rows = convergence_sweep(ctx.spec, block, ctx.run.nu_list, ctx.run.reps, ctx.run.seed,
                                      {ctx.run.tol, ctx.run.rel_tol}, replication_options(ctx.run));
  write_text_file(ctx.out_dir / "sweep.csv", sweep_csv(rows));
  for (const auto& r : rows) {
    out << "nu=" << format_double(r.intensity) << " max_abs_deviation=" << format_double(r.max_abs_deviation)
        << " se_at_max=" << format_double(r.se_at_max) << (r.pass ? " PASS" : " FAIL") << '\n';
  }
  const bool trend = sweep_non_increasing(rows);
  out << "trend: " << (trend ? "non-increasing within 2 SE" : "increasing beyond 2 SE") << '\n';
  return trend ? kPass : kStatisticalFail;
}

void add_common(CLI::App* sub, Flags& flags) {
  sub->add_option("config", flags.config, "Model and run configuration (JSON)")->required();
  sub->add_option("--seed", flags.seed, "Root seed");
  sub->add_option("--out", flags.out, std::string("Output directory (default: $") + kOutDirEnv + " or cpf_out)");
  sub->add_option("--nu", flags.nu, "Override the intensity");
  sub->add_option("--route", flags.route, "Under-curve sampling route: rejection or thinning");
  sub->add_option("--threads", flags.threads, "Maximum worker threads (0: all cores)");
}

void add_oracle_flags(CLI::App* sub, Flags& flags) {
  sub->add_option("--mode", flags.mode, "quantile_normalized (default) or paper_literal");
  sub->add_option("--grid", flags.grid,
                  "Comma-separated grid; corner fractions of the bounding box for theorem1");
  sub->add_option("--target", flags.target, "theorem1, theorem2 or theorem3");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compound Poisson field sampler, covariance oracle and verification harness", "cpf"};
  app.require_subcommand(1);
  Flags flags;

  auto* sample = app.add_subcommand("sample", "Sample marked fields and write samples.csv");
  add_common(sample, flags);
  sample->add_option("--reps", flags.reps, "Number of replications (default 1)");

  auto* oracle = app.add_subcommand("oracle", "Compute the limiting covariance on a grid");
  add_common(oracle, flags);
  add_oracle_flags(oracle, flags);

  auto* verify = app.add_subcommand("verify", "Compare Monte Carlo covariances with the oracle");
  add_common(verify, flags);
  add_oracle_flags(verify, flags);
  verify->add_option("--reps", flags.reps, "Number of replications (at least 2)");
  verify->add_option("--tol", flags.tol, "Absolute tolerance before the 4 SE allowance");
  verify->add_flag("--corrupt-oracle", flags.corrupt_oracle)->group("");

  auto* theorem3 = app.add_subcommand("theorem3", "Time and intensity orderings: paths and covariance report");
  add_common(theorem3, flags);
  theorem3->add_option("--mode", flags.mode, "quantile_normalized (default) or paper_literal");
  theorem3->add_option("--grid", flags.grid, "Comma-separated grid");
  theorem3->add_option("--reps", flags.reps, "Number of replications (at least 2)");
  theorem3->add_option("--tol", flags.tol, "Absolute tolerance before the 4 SE allowance");
  theorem3->add_flag("--corrupt-oracle", flags.corrupt_oracle)->group("");

  auto* sweep = app.add_subcommand("sweep", "Deviation from the oracle across intensities");
  add_common(sweep, flags);
  add_oracle_flags(sweep, flags);
  sweep->add_option("--nu-list", flags.nu_list, "Comma-separated ascending intensities");
  sweep->add_option("--reps", flags.reps, "Replications per intensity");
  sweep->add_option("--tol", flags.tol, "Absolute tolerance before the 4 SE allowance");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kConfigError;
  }

  if (sample->parsed()) return cmd_sample(flags, out);
  if (oracle->parsed()) return cmd_oracle(flags, out, err);
  if (verify->parsed()) return verify_target(flags, std::nullopt, out, err);
  if (theorem3->parsed()) return cmd_theorem3(flags, out, err);
  return cmd_sweep(flags, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace cpf::cli
