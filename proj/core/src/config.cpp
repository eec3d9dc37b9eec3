#include "cpf/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cpf {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw InvalidArgument(path + ": " + message);
}

void allow_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> allowed,
                std::initializer_list<std::string_view> extra = {}) {
  if (!obj.is_object()) {
    fail(path, "expected an object");
  }
  for (const auto& item : obj.items()) {
    const auto& key = item.key();
    const bool known = std::find(allowed.begin(), allowed.end(), key) != allowed.end() ||
                       std::find(extra.begin(), extra.end(), key) != extra.end();
    if (!known) {
      fail(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

const json& field(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    fail(path, std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) {
    fail(path, "expected a number");
  }
  return v.get<double>();
}

double number_at(const json& obj, const std::string& path, const char* key) {
  return number(field(obj, path, key), join(path, key));
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) {
    fail(path, "expected an array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Vector vector_of(const json& v, const std::string& path) {
  const auto xs = numbers(v, path);
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

Matrix matrix_of(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) {
    fail(path, "expected a non-empty array of rows");
  }
  const auto first = numbers(v[0], path + "[0]");
  Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = numbers(v[r], path + "[" + std::to_string(r) + "]");
    if (row.size() != first.size()) {
      fail(path, "rows must have equal length");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return m;
}

std::size_t coord_of(const json& obj, const std::string& path) {
  const json& v = field(obj, path, "coord");
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    fail(join(path, "coord"), "expected a 1-based coordinate index");
  }
  return static_cast<std::size_t>(v.get<long long>() - 1);
}

std::string family_of(const json& obj, const std::string& path) {
  const json& v = field(obj, path, "family");
  if (!v.is_string()) {
    fail(join(path, "family"), "expected a string");
  }
  return v.get<std::string>();
}

const json& params_of(const json& obj) {
  static const json empty = json::object();
  auto it = obj.find("params");
  return it == obj.end() ? empty : *it;
}

ScalarFunction parse_scalar(const json& obj, const std::string& path) {
  allow_keys(obj, path, {"family", "params"});
  const std::string family = family_of(obj, path);
  const json& p = params_of(obj);
  const std::string pp = join(path, "params");
  if (family == "constant") {
    allow_keys(p, pp, {"value"});
    return ScalarFunction(ConstantFn{number_at(p, pp, "value")});
  }
  if (family == "affine") {
    allow_keys(p, pp, {"intercept", "slope"});
    return ScalarFunction(AffineFn{number_at(p, pp, "intercept"), number_at(p, pp, "slope")});
  }
  if (family == "piecewise_constant") {
    allow_keys(p, pp, {"breaks", "values"});
    return ScalarFunction(PiecewiseConstantFn{numbers(field(p, pp, "breaks"), join(pp, "breaks")),
                                              numbers(field(p, pp, "values"), join(pp, "values"))});
  }
  if (family == "polynomial") {
    allow_keys(p, pp, {"coeffs"});
    return ScalarFunction(PolynomialFn{numbers(field(p, pp, "coeffs"), join(pp, "coeffs"))});
  }
  fail(join(path, "family"), "unknown family '" + family + "'");
}

std::optional<double> optional_number(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    return std::nullopt;
  }
  return number(*it, join(path, key));
}

DomainRegion parse_domain(const json& obj, const std::string& path) {
  if (!obj.is_object()) {
    fail(path, "expected an object");
  }
  const json& kind_v = field(obj, path, "kind");
  if (!kind_v.is_string()) {
    fail(join(path, "kind"), "expected a string");
  }
  const std::string kind = kind_v.get<std::string>();
  if (kind == "box") {
    allow_keys(obj, path, {"kind", "lower", "upper", "measure_hint"});
    return DomainRegion::box(numbers(field(obj, path, "lower"), join(path, "lower")),
                             numbers(field(obj, path, "upper"), join(path, "upper")),
                             optional_number(obj, path, "measure_hint"));
  }
  if (kind == "under_curve") {
    allow_keys(obj, path, {"kind", "T", "rate", "lambda_max", "measure_hint"});
    return DomainRegion::under_curve(number_at(obj, path, "T"),
                                     parse_scalar(field(obj, path, "rate"), join(path, "rate")),
                                     optional_number(obj, path, "lambda_max"),
                                     optional_number(obj, path, "measure_hint"));
  }
  if (kind == "indicator") {
    allow_keys(obj, path, {"kind", "lower", "upper", "predicate", "measure_hint"});
    Box box{numbers(field(obj, path, "lower"), join(path, "lower")),
            numbers(field(obj, path, "upper"), join(path, "upper"))};
    const std::string pp = join(path, "predicate");
    const json& pred = field(obj, path, "predicate");
    if (!pred.is_object() || !pred.contains("type") || !pred["type"].is_string()) {
      fail(pp, "expected an object with a string 'type'");
    }
    const std::string type = pred["type"].get<std::string>();
    Predicate predicate;
    if (type == "ball") {
      allow_keys(pred, pp, {"type", "center", "radius"});
      predicate = Ball{numbers(field(pred, pp, "center"), join(pp, "center")),
                       number_at(pred, pp, "radius")};
    } else if (type == "halfspaces") {
      allow_keys(pred, pp, {"type", "normals", "offsets"});
      Halfspaces h;
      const json& normals = field(pred, pp, "normals");
      if (!normals.is_array()) {
        fail(join(pp, "normals"), "expected an array of vectors");
      }
      for (std::size_t i = 0; i < normals.size(); ++i) {
        h.normals.push_back(numbers(normals[i], join(pp, "normals") + "[" + std::to_string(i) + "]"));
      }
      h.offsets = numbers(field(pred, pp, "offsets"), join(pp, "offsets"));
      predicate = std::move(h);
    } else {
      fail(join(pp, "type"), "unknown predicate '" + type + "'");
    }
    return DomainRegion::indicator(std::move(box), std::move(predicate),
                                   optional_number(obj, path, "measure_hint"));
  }
  fail(join(path, "kind"), "unknown domain kind '" + kind + "'");
}

MeanFunction parse_mean(const json& obj, const std::string& path, std::size_t d2) {
  allow_keys(obj, path, {"family", "params"});
  const std::string family = family_of(obj, path);
  const json& p = params_of(obj);
  const std::string pp = join(path, "params");
  if (family == "zero") {
    allow_keys(p, pp, {});
    return MeanFunction(d2, ZeroMean{});
  }
  if (family == "constant") {
    allow_keys(p, pp, {"value"});
    return MeanFunction(d2, ConstantMean{vector_of(field(p, pp, "value"), join(pp, "value"))});
  }
  if (family == "affine") {
    allow_keys(p, pp, {"offset", "matrix"});
    return MeanFunction(d2, AffineMean{vector_of(field(p, pp, "offset"), join(pp, "offset")),
                                       matrix_of(field(p, pp, "matrix"), join(pp, "matrix"))});
  }
  if (family == "piecewise_constant") {
    allow_keys(p, pp, {"coord", "breaks", "values"});
    PiecewiseConstantMean f{coord_of(p, pp), numbers(field(p, pp, "breaks"), join(pp, "breaks")), {}};
    const json& values = field(p, pp, "values");
    if (!values.is_array()) {
      fail(join(pp, "values"), "expected an array of vectors");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      f.values.push_back(vector_of(values[i], join(pp, "values") + "[" + std::to_string(i) + "]"));
    }
    return MeanFunction(d2, std::move(f));
  }
  if (family == "polynomial") {
    allow_keys(p, pp, {"coord", "coeffs"});
    PolynomialMean f{coord_of(p, pp), {}};
    const json& coeffs = field(p, pp, "coeffs");
    if (!coeffs.is_array()) {
      fail(join(pp, "coeffs"), "expected an array of vectors");
    }
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      f.coeffs.push_back(vector_of(coeffs[i], join(pp, "coeffs") + "[" + std::to_string(i) + "]"));
    }
    return MeanFunction(d2, std::move(f));
  }
  fail(join(path, "family"), "unknown mean family '" + family + "'");
}

CovarianceFunction parse_cov(const json& obj, const std::string& path) {
  allow_keys(obj, path, {"family", "params"});
  const std::string family = family_of(obj, path);
  const json& p = params_of(obj);
  const std::string pp = join(path, "params");
  if (family == "constant") {
    allow_keys(p, pp, {"matrix"});
    return CovarianceFunction(ConstantCov{matrix_of(field(p, pp, "matrix"), join(pp, "matrix"))});
  }
  if (family == "piecewise_constant") {
    allow_keys(p, pp, {"coord", "breaks", "matrices"});
    PiecewiseConstantCov f{coord_of(p, pp), numbers(field(p, pp, "breaks"), join(pp, "breaks")), {}};
    const json& ms = field(p, pp, "matrices");
    if (!ms.is_array() || ms.empty()) {
      fail(join(pp, "matrices"), "expected a non-empty array of matrices");
    }
    for (std::size_t i = 0; i < ms.size(); ++i) {
      f.matrices.push_back(matrix_of(ms[i], join(pp, "matrices") + "[" + std::to_string(i) + "]"));
    }
    return CovarianceFunction(std::move(f));
  }
  if (family == "affine") {
    allow_keys(p, pp, {"coord", "intercept", "slope", "matrix"});
    return CovarianceFunction(
        ScaledCov{coord_of(p, pp),
                  ScalarFunction(AffineFn{number_at(p, pp, "intercept"), number_at(p, pp, "slope")}),
                  matrix_of(field(p, pp, "matrix"), join(pp, "matrix"))});
  }
  if (family == "polynomial") {
    allow_keys(p, pp, {"coord", "coeffs", "matrix"});
    return CovarianceFunction(
        ScaledCov{coord_of(p, pp),
                  ScalarFunction(PolynomialFn{numbers(field(p, pp, "coeffs"), join(pp, "coeffs"))}),
                  matrix_of(field(p, pp, "matrix"), join(pp, "matrix"))});
  }
  fail(join(path, "family"), "unknown covariance family '" + family + "'");
}

NoiseFamily parse_noise(const json& obj, const std::string& path) {
  auto it = obj.find("noise");
  if (it == obj.end()) {
    return NoiseFamily::gaussian;
  }
  if (!it->is_string()) {
    fail(join(path, "noise"), "expected a string");
  }
  const std::string name = it->get<std::string>();
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "rademacher") return NoiseFamily::rademacher;
  if (name == "uniform") return NoiseFamily::uniform;
  fail(join(path, "noise"), "unknown noise family '" + name + "'");
}

MarkModel parse_marks(const json& obj, const std::string& path) {
  allow_keys(obj, path, {"d2", "mean", "cov", "noise"});
  const json& d2v = field(obj, path, "d2");
  if (!d2v.is_number_integer() || d2v.get<long long>() < 1) {
    fail(join(path, "d2"), "expected a positive integer");
  }
  const auto d2 = static_cast<std::size_t>(d2v.get<long long>());
  MeanFunction mean = parse_mean(field(obj, path, "mean"), join(path, "mean"), d2);
  CovarianceFunction cov = parse_cov(field(obj, path, "cov"), join(path, "cov"));
  if (cov.mark_dim() != d2) {
    fail(join(path, "cov"), "matrix dimension must equal d2");
  }
  return MarkModel(std::move(mean), std::move(cov), parse_noise(obj, path));
}

}  // namespace

ModelSpec parse_model_spec(const json& doc, std::initializer_list<std::string_view> extra_top_level) {
  allow_keys(doc, "", {"domain", "marks", "nu"}, extra_top_level);
  DomainRegion domain = parse_domain(field(doc, "", "domain"), "domain");
  MarkModel marks = parse_marks(field(doc, "", "marks"), "marks");
  const double nu = number_at(doc, "", "nu");
  return ModelSpec(std::move(domain), std::move(marks), nu);
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw InvalidArgument(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": malformed JSON (" + e.what() + ")");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path.string());
}

}  // namespace cpf
