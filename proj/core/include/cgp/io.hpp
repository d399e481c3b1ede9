#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cgp/apps.hpp"
#include "cgp/model.hpp"

namespace cgp::io {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct PermanentSpec {
  MatrixXd M;
};

struct CapacityMaxSpec {
  NonnegMatrixFamily family;
};

struct RobustGpSpec {
  VectorXd objective;
  std::vector<RobustConstraint> constraints;
};

struct HittingTimeSpec {
  LinearSystemSpec system;
  double t_max = 1e3;
};

struct QCapacitySpec {
  QuantumChannel channel;
  std::vector<VectorXd> states;
  std::string mode = "cq";  // "cq" | "induced" | "fixed_rho"
  std::optional<MatrixXd> rho;
};

struct EntropyMaxSpec {
  int side = 0;
  double trace = 1.0;
  std::vector<std::pair<MatrixXd, double>> constraints;
};

using ParsedPayload = std::variant<CgpProblem, EntropyProblem, PermanentSpec,
                                   CapacityMaxSpec, RobustGpSpec, HittingTimeSpec,
                                   QCapacitySpec, EntropyMaxSpec>;

struct ParsedProblem {
  std::string kind;
  ParsedPayload payload;
};

/// Strict parse: schema-validated, unknown keys rejected. Throws ParseError
/// with an itemized message.
ParsedProblem parse_problem_text(const std::string& json_text);

/// Validation-only entry point; returns the itemized report instead of
/// throwing (empty report means clean).
std::vector<std::string> check_problem_text(const std::string& json_text);

/// Deterministic JSON writer: fixed key order (insertion), floats rendered
/// with 17 significant digits.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& name);
  JsonWriter& value(double v);
  JsonWriter& value(int v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& value(const VectorXd& v);
  JsonWriter& value(const MatrixXd& m);
  std::string str() const { return out_; }

 private:
  void separator();
  std::string out_;
  std::vector<bool> needs_comma_;
  bool pending_key_ = false;
};

std::string format_double(double v);  // %.17g with inf/nan mapped to strings

/// RFC-4180 CSV: quotes fields containing separators, doubles embedded
/// quotes, emits CRLF row endings.
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace cgp::io
