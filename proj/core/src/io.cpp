#include "cgp/io.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

namespace cgp::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) fail(where + ": expected an object");
  for (const auto& k : required)
    if (!obj.contains(k)) fail(where + ": missing key \"" + k + "\"");
  for (const auto& [k, v] : obj.items())
    if (!required.count(k) && !optional.count(k))
      fail(where + ": unknown key \"" + k + "\"");
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + ": expected a number");
  return j.get<double>();
}

VectorXd as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v(static_cast<int>(i)) = as_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

MatrixXd as_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of rows");
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return MatrixXd(0, 0);
  if (!j[0].is_array()) fail(where + ": expected nested arrays (row-major)");
  const int cols = static_cast<int>(j[0].size());
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const std::string wr = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      fail(wr + ": ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = as_number(j[r][c], wr);
  }
  return m;
}

ConeSpec as_cone(const json& j, const std::string& where) {
  require_keys(j, where, {"type"}, {"dim", "side", "factors"});
  const std::string type = j.at("type").get<std::string>();
  auto need_dim = [&]() {
    if (!j.contains("dim")) fail(where + ": cone \"" + type + "\" needs \"dim\"");
    return static_cast<int>(as_number(j["dim"], where + ".dim"));
  };
  if (type == "free") return ConeSpec::free(need_dim());
  if (type == "zero") return ConeSpec::zero(need_dim());
  if (type == "orthant") return ConeSpec::orthant(need_dim());
  if (type == "soc") return ConeSpec::second_order(need_dim());
  if (type == "psd") {
    if (!j.contains("side")) fail(where + ": psd cone needs \"side\"");
    return ConeSpec::psd(static_cast<int>(as_number(j["side"], where + ".side")));
  }
  if (type == "product") {
    if (!j.contains("factors")) fail(where + ": product cone needs \"factors\"");
    std::vector<ConeSpec> factors;
    for (size_t i = 0; i < j["factors"].size(); ++i)
      factors.push_back(as_cone(j["factors"][i],
                                where + ".factors[" + std::to_string(i) + "]"));
    return ConeSpec::product(std::move(factors));
  }
  fail(where + ": unknown cone type \"" + type + "\"");
}

ConicSetDesc as_conic_set(const json& j, const std::string& where) {
  require_keys(j, where, {"dim", "g", "F", "cone"}, {"nonneg"});
  ConicSetDesc d;
  d.dim = static_cast<int>(as_number(j["dim"], where + ".dim"));
  d.nonneg = j.contains("nonneg") && j["nonneg"].get<bool>();
  d.g = as_vector(j["g"], where + ".g");
  d.F = as_matrix(j["F"], where + ".F");
  d.cone = as_cone(j["cone"], where + ".cone");
  if (d.F.rows() != d.g.size()) fail(where + ": F rows must match g length");
  if (d.F.cols() != d.dim) fail(where + ": F columns must match dim");
  if (d.cone.dim() != d.g.size()) fail(where + ": cone dim must match g length");
  return d;
}

CgpProblem parse_cgp(const json& j) {
  require_keys(j, "cgp", {"kind", "p", "cone"}, {"exp_block", "S", "w"});
  CgpProblem P;
  P.p = as_vector(j["p"], "cgp.p");
  P.n = static_cast<int>(P.p.size());
  P.cone = as_cone(j["cone"], "cgp.cone");
  if (j.contains("exp_block")) {
    const auto& eb = j["exp_block"];
    require_keys(eb, "cgp.exp_block", {"Q", "R", "u", "v"});
    P.block.Q = as_matrix(eb["Q"], "cgp.exp_block.Q");
    P.block.R = as_matrix(eb["R"], "cgp.exp_block.R");
    P.block.u = as_vector(eb["u"], "cgp.exp_block.u");
    P.block.v = as_vector(eb["v"], "cgp.exp_block.v");
  } else {
    P.block = ExpAffineBlock::empty(P.n);
  }
  if (j.contains("S") != j.contains("w")) fail("cgp: S and w must appear together");
  if (j.contains("S")) {
    P.S = as_matrix(j["S"], "cgp.S");
    P.w = as_vector(j["w"], "cgp.w");
  } else {
    P.S = MatrixXd::Zero(P.n, 0);
    P.w = VectorXd::Zero(0);
  }
  const auto violations = validate(P);
  if (!violations.empty()) fail("cgp: " + violations.front());
  return P;
}

EntropyProblem parse_entropy(const json& j) {
  require_keys(j, "entropy", {"kind", "u", "w", "Q", "S", "p", "cone"},
               {"v", "R", "c0", "fixed_second_arg"});
  EntropyProblem E;
  E.u = as_vector(j["u"], "entropy.u");
  E.k = static_cast<int>(E.u.size());
  E.w = as_vector(j["w"], "entropy.w");
  E.m = static_cast<int>(E.w.size());
  E.Q = as_matrix(j["Q"], "entropy.Q");
  E.S = as_matrix(j["S"], "entropy.S");
  E.p = as_vector(j["p"], "entropy.p");
  E.cone = as_cone(j["cone"], "entropy.cone");
  E.c0 = j.contains("c0") ? as_number(j["c0"], "entropy.c0") : 0.0;
  if (j.contains("fixed_second_arg")) {
    E.second_arg_fixed = true;
    E.fixed_second_arg = as_vector(j["fixed_second_arg"], "entropy.fixed_second_arg");
    E.v = VectorXd::Zero(E.k);
    E.R = MatrixXd::Zero(E.p.size(), E.k);
  } else {
    if (!j.contains("v") || !j.contains("R"))
      fail("entropy: either fixed_second_arg or both v and R are required");
    E.v = as_vector(j["v"], "entropy.v");
    E.R = as_matrix(j["R"], "entropy.R");
  }
  const auto violations = validate(E);
  if (!violations.empty()) fail("entropy: " + violations.front());
  return E;
}

RobustGpSpec parse_robust_gp(const json& j) {
  require_keys(j, "robust_gp", {"kind", "objective", "constraints"});
  RobustGpSpec spec;
  spec.objective = as_vector(j["objective"], "robust_gp.objective");
  if (!j["constraints"].is_array()) fail("robust_gp.constraints: expected an array");
  for (size_t i = 0; i < j["constraints"].size(); ++i) {
    const std::string where = "robust_gp.constraints[" + std::to_string(i) + "]";
    const auto& c = j["constraints"][i];
    require_keys(c, where, {"C", "Q_sets"}, {"bound"});
    RobustConstraint rc;
    rc.C = as_conic_set(c["C"], where + ".C");
    for (size_t q = 0; q < c["Q_sets"].size(); ++q)
      rc.Qsets.push_back(as_conic_set(c["Q_sets"][q],
                                      where + ".Q_sets[" + std::to_string(q) + "]"));
    rc.bound = c.contains("bound") ? as_number(c["bound"], where + ".bound") : 1.0;
    spec.constraints.push_back(std::move(rc));
  }
  return spec;
}

HittingTimeSpec parse_hitting_time(const json& j) {
  require_keys(j, "hitting_time", {"kind", "modes", "x_init", "targets"}, {"t_max"});
  HittingTimeSpec spec;
  const MatrixXd modes = as_matrix(j["modes"], "hitting_time.modes");
  if (modes.cols() != 2) fail("hitting_time.modes: expected rows of [lo, hi]");
  spec.system.mode_lo = modes.col(0);
  spec.system.mode_hi = modes.col(1);
  spec.system.x_init = as_conic_set(j["x_init"], "hitting_time.x_init");
  if (!j["targets"].is_array()) fail("hitting_time.targets: expected an array");
  const int n = static_cast<int>(modes.rows());
  spec.system.target_C = MatrixXd::Zero(static_cast<int>(j["targets"].size()), n);
  spec.system.target_d = VectorXd::Zero(static_cast<int>(j["targets"].size()));
  for (size_t i = 0; i < j["targets"].size(); ++i) {
    const std::string where = "hitting_time.targets[" + std::to_string(i) + "]";
    require_keys(j["targets"][i], where, {"c", "d"});
    const VectorXd c = as_vector(j["targets"][i]["c"], where + ".c");
    if (c.size() != n) fail(where + ".c: length must match the mode count");
    spec.system.target_C.row(static_cast<int>(i)) = c.transpose();
    spec.system.target_d(static_cast<int>(i)) = as_number(j["targets"][i]["d"], where + ".d");
  }
  if (j.contains("t_max")) spec.t_max = as_number(j["t_max"], "hitting_time.t_max");
  const auto violations = validate(spec.system);
  if (!violations.empty()) fail("hitting_time: " + violations.front());
  return spec;
}

QCapacitySpec parse_qcapacity(const json& j) {
  require_keys(j, "qcapacity", {"kind", "kraus"}, {"states", "mode", "rho"});
  QCapacitySpec spec;
  if (!j["kraus"].is_array() || j["kraus"].empty())
    fail("qcapacity.kraus: expected a nonempty array of matrices");
  for (size_t i = 0; i < j["kraus"].size(); ++i)
    spec.channel.kraus.push_back(
        as_matrix(j["kraus"][i], "qcapacity.kraus[" + std::to_string(i) + "]"));
  if (j.contains("states"))
    for (size_t i = 0; i < j["states"].size(); ++i)
      spec.states.push_back(
          as_vector(j["states"][i], "qcapacity.states[" + std::to_string(i) + "]"));
  if (j.contains("mode")) {
    spec.mode = j["mode"].get<std::string>();
    if (spec.mode != "cq" && spec.mode != "induced" && spec.mode != "fixed_rho")
      fail("qcapacity.mode: expected cq, induced, or fixed_rho");
  }
  if (j.contains("rho")) spec.rho = as_matrix(j["rho"], "qcapacity.rho");
  if (spec.mode == "fixed_rho" && !spec.rho) fail("qcapacity: fixed_rho mode needs rho");
  if (spec.mode != "induced" && spec.states.empty())
    fail("qcapacity: states are required outside induced mode");
  if (spec.channel.validation_error() > 1e-8)
    fail("qcapacity.kraus: operators do not satisfy trace preservation");
  return spec;
}

EntropyMaxSpec parse_entropy_max(const json& j) {
  require_keys(j, "entropy_max", {"kind", "side"}, {"trace", "constraints"});
  EntropyMaxSpec spec;
  spec.side = static_cast<int>(as_number(j["side"], "entropy_max.side"));
  if (spec.side < 1) fail("entropy_max.side: must be positive");
  if (j.contains("trace")) spec.trace = as_number(j["trace"], "entropy_max.trace");
  if (j.contains("constraints")) {
    for (size_t i = 0; i < j["constraints"].size(); ++i) {
      const std::string where = "entropy_max.constraints[" + std::to_string(i) + "]";
      require_keys(j["constraints"][i], where, {"A", "b"});
      spec.constraints.emplace_back(as_matrix(j["constraints"][i]["A"], where + ".A"),
                                    as_number(j["constraints"][i]["b"], where + ".b"));
    }
  }
  return spec;
}

PermanentSpec parse_permanent(const json& j) {
  require_keys(j, "permanent", {"kind", "M"});
  PermanentSpec spec;
  spec.M = as_matrix(j["M"], "permanent.M");
  if (spec.M.rows() != spec.M.cols()) fail("permanent.M: matrix must be square");
  if (spec.M.size() > 0 && spec.M.minCoeff() < 0)
    fail("permanent.M: entries must be nonnegative");
  return spec;
}

CapacityMaxSpec parse_capacity_max(const json& j) {
  require_keys(j, "capacity_max", {"kind", "side", "family"});
  CapacityMaxSpec spec;
  spec.family.side = static_cast<int>(as_number(j["side"], "capacity_max.side"));
  spec.family.set = as_conic_set(j["family"], "capacity_max.family");
  if (spec.family.set.dim != spec.family.side * spec.family.side)
    fail("capacity_max.family: dim must equal side^2");
  if (!spec.family.set.nonneg) fail("capacity_max.family: nonneg flag is required");
  return spec;
}

}  // namespace

ParsedProblem parse_problem_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind")) fail("top level: missing \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  ParsedProblem out;
  out.kind = kind;
  if (kind == "cgp")
    out.payload = parse_cgp(j);
  else if (kind == "entropy")
    out.payload = parse_entropy(j);
  else if (kind == "permanent")
    out.payload = parse_permanent(j);
  else if (kind == "capacity_max")
    out.payload = parse_capacity_max(j);
  else if (kind == "robust_gp")
    out.payload = parse_robust_gp(j);
  else if (kind == "hitting_time")
    out.payload = parse_hitting_time(j);
  else if (kind == "qcapacity")
    out.payload = parse_qcapacity(j);
  else if (kind == "entropy_max")
    out.payload = parse_entropy_max(j);
  else
    fail("top level: unknown kind \"" + kind + "\"");
  return out;
}

std::vector<std::string> check_problem_text(const std::string& json_text) {
  try {
    parse_problem_text(json_text);
    return {};
  } catch (const ParseError& e) {
    return {e.what()};
  }
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void JsonWriter::separator() {
  if (pending_key_) {
    pending_key_ = false;
    return;
  }
  if (!needs_comma_.empty()) {
    if (needs_comma_.back()) out_ += ",";
    needs_comma_.back() = true;
  }
}

JsonWriter& JsonWriter::begin_object() {
  separator();
  out_ += "{";
  needs_comma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  out_ += "}";
  needs_comma_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  separator();
  out_ += "[";
  needs_comma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  out_ += "]";
  needs_comma_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& name) {
  separator();
  out_ += "\"" + name + "\":";
  pending_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  separator();
  out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(int v) {
  separator();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  separator();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  separator();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  separator();
  out_ += "\"";
  for (char c : v) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      case '\r': out_ += "\\r"; break;
      default: out_ += c;
    }
  }
  out_ += "\"";
  return *this;
}

JsonWriter& JsonWriter::value(const VectorXd& v) {
  begin_array();
  for (int i = 0; i < v.size(); ++i) value(v(i));
  return end_array();
}

JsonWriter& JsonWriter::value(const MatrixXd& m) {
  begin_array();
  for (int r = 0; r < m.rows(); ++r) {
    begin_array();
    for (int c = 0; c < m.cols(); ++c) value(m(r, c));
    end_array();
  }
  return end_array();
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ",";
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") != std::string::npos) {
      out += "\"";
      for (char c : f) {
        out += c;
        if (c == '"') out += '"';
      }
      out += "\"";
    } else {
      out += f;
    }
  }
  out += "\r\n";
  return out;
}

}  // namespace cgp::io
