#include "lyacert/record.hpp"

#include <cmath>
#include <limits>
#include <string_view>

#include <fmt/format.h>

#include "lyacert/error.hpp"

namespace lyacert {

using nlohmann::json;

namespace {

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double as_number(const json& v, std::string_view key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw InputError(fmt::format("record field '{}' is not a number", key));
}

double read_number(const json& doc, const char* key) {
  if (!doc.contains(key)) throw InputError(fmt::format("record is missing '{}'", key));
  return as_number(doc.at(key), key);
}

std::vector<double> as_numbers(const json& v, std::string_view key) {
  if (!v.is_array()) throw InputError(fmt::format("record field '{}' must be an array", key));
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& x : v) out.push_back(as_number(x, key));
  return out;
}

std::vector<double> read_numbers(const json& doc, const char* key) {
  if (!doc.contains(key)) throw InputError(fmt::format("record is missing '{}'", key));
  return as_numbers(doc.at(key), key);
}

json numbers(const auto& values) {
  json out = json::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

template <class T>
T read(const json& doc, const char* key) {
  if (!doc.contains(key)) throw InputError(fmt::format("record is missing '{}'", key));
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(fmt::format("record field '{}' has the wrong type", key));
  }
}

json matrix_json(const Matrix& q) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < q.cols(); ++j) row.push_back(number(q(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix read_matrix(const json& doc) {
  if (!doc.is_array()) throw InputError("record field 'Q' must be an array of rows");
  const auto n = static_cast<Eigen::Index>(doc.size());
  Matrix q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto values = as_numbers(doc[static_cast<std::size_t>(i)], "Q");
    if (static_cast<Eigen::Index>(values.size()) != n) throw InputError("record field 'Q' is not square");
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) = values[static_cast<std::size_t>(j)];
  }
  return q;
}

json params_json(const ModelParams& params) {
  if (const auto* c = std::get_if<CholeskyParams>(&params)) {
    return {{"kind", "cholesky"}, {"n", c->n}, {"theta", numbers(c->theta)}};
  }
  const auto& mlp = std::get<MlpParams>(params);
  return {{"kind", "mlp"}, {"layers", mlp.layers}, {"flat", numbers(mlp.flatten())}};
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ModelParams read_params(const json& doc) {
  const auto kind = read<std::string>(doc, "kind");
  if (kind == "cholesky") {
    CholeskyParams c;
    c.n = read<std::size_t>(doc, "n");
    c.theta = to_vector(read_numbers(doc, "theta"));
    if (static_cast<std::size_t>(c.theta.size()) != CholeskyParams::size(c.n)) {
      throw InputError("record params: theta has the wrong length");
    }
    return c;
  }
  if (kind == "mlp") {
    MlpParams mlp;
    mlp.layers = read<std::vector<std::size_t>>(doc, "layers");
    if (mlp.layers.size() < 2) throw InputError("record params: an mlp needs at least two layers");
    for (std::size_t l = 0; l + 1 < mlp.layers.size(); ++l) {
      const auto rows = static_cast<Eigen::Index>(mlp.layers[l + 1]);
      const auto cols = static_cast<Eigen::Index>(mlp.layers[l]);
      mlp.weights.push_back(Matrix::Zero(rows, cols));
      mlp.biases.push_back(Vector::Zero(rows));
    }
    mlp.validate();
    const Vector flat = to_vector(read_numbers(doc, "flat"));
    if (static_cast<std::size_t>(flat.size()) != mlp.parameter_count()) {
      throw InputError("record params: flat vector has the wrong length");
    }
    mlp.assign(flat);
    return mlp;
  }
  throw InputError(fmt::format("record params: unknown kind '{}'", kind));
}

}  // namespace

json config_to_json(const CertifyConfig& config) {
  const TrainConfig& t = config.train;
  return {
      {"dt", number(config.dt)},
      {"smoothing_window", config.smoothing_window},
      {"eps_max", number(config.eps_max)},
      {"holdout_fraction", number(config.holdout_fraction)},
      {"nonconstancy_tol", number(config.nonconstancy_tol)},
      {"gamma", number(t.gamma)},
      {"learning_rate", number(t.learning_rate)},
      {"epochs", t.epochs},
      {"seed", t.seed},
      {"theta_max", number(t.theta_max)},
      {"tol_loss", number(t.tol_loss)},
      {"mode", to_string(t.mode)},
      {"hidden", t.hidden},
  };
}

CertifyConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("record field 'config' must be an object");
  CertifyConfig c;
  c.dt = read_number(doc, "dt");
  c.smoothing_window = read<std::size_t>(doc, "smoothing_window");
  c.eps_max = read_number(doc, "eps_max");
  c.holdout_fraction = read_number(doc, "holdout_fraction");
  c.nonconstancy_tol = read_number(doc, "nonconstancy_tol");
  c.train.gamma = read_number(doc, "gamma");
  c.train.learning_rate = read_number(doc, "learning_rate");
  c.train.epochs = read<std::size_t>(doc, "epochs");
  c.train.seed = read<std::uint64_t>(doc, "seed");
  c.train.theta_max = read_number(doc, "theta_max");
  c.train.tol_loss = read_number(doc, "tol_loss");
  c.train.mode = mode_from_string(read<std::string>(doc, "mode"));
  c.train.hidden = read<std::vector<std::size_t>>(doc, "hidden");
  return c;
}

json to_json(const CertificateRecord& record) {
  const TrainOutcome& outcome = outcome_of(record.verdict);
  const QuadraticCertificate* cert = nullptr;
  std::string reason;
  if (const auto* c = std::get_if<Certified>(&record.verdict)) {
    cert = &c->certificate;
  } else if (const auto* n = std::get_if<NotFound>(&record.verdict)) {
    if (n->candidate) cert = &*n->candidate;
    reason = n->reason;
  } else {
    reason = std::get<Diverged>(record.verdict).reason;
  }
  return {
      {"mode", to_string(record.config.train.mode)},
      {"m", record.m},
      {"dt", number(record.config.dt)},
      {"gamma", number(record.config.train.gamma)},
      {"Q", cert ? matrix_json(cert->q.matrix()) : json(nullptr)},
      {"epsilon", cert ? number(cert->epsilon) : json(nullptr)},
      {"termination", to_string(outcome.termination)},
      {"loss_final", number(outcome.final_loss())},
      {"seed", record.config.train.seed},
      {"config", config_to_json(record.config)},
      {"verdict", verdict_name(record.verdict)},
      {"reason", reason},
      {"loss_history", numbers(outcome.loss_history)},
      {"param_norm_history", numbers(outcome.param_norm_history)},
      {"params", params_json(outcome.final_params)},
  };
}

CertificateRecord record_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("record must be a JSON object");
  if (!doc.contains("config")) throw InputError("record is missing 'config'");
  CertifyConfig config = config_from_json(doc.at("config"));
  const auto m = read<std::size_t>(doc, "m");

  TrainOutcome outcome;
  outcome.termination = termination_from_string(read<std::string>(doc, "termination"));
  outcome.loss_history = read_numbers(doc, "loss_history");
  outcome.param_norm_history = read_numbers(doc, "param_norm_history");
  if (!doc.contains("params")) throw InputError("record is missing 'params'");
  outcome.final_params = read_params(doc.at("params"));

  std::optional<QuadraticCertificate> cert;
  if (doc.contains("Q") && !doc.at("Q").is_null()) {
    cert = QuadraticCertificate{QuadraticForm(read_matrix(doc.at("Q"))),
                                config.train.gamma, read_number(doc, "epsilon")};
  }
  const auto verdict = read<std::string>(doc, "verdict");
  auto reason = read<std::string>(doc, "reason");
  if (verdict == "certified") {
    if (!cert) throw InputError("certified record has no Q");
    return {std::move(config), m, Certified{std::move(*cert), std::move(outcome)}};
  }
  if (verdict == "not_found") {
    return {std::move(config), m, NotFound{std::move(reason), std::move(outcome), std::move(cert)}};
  }
  if (verdict == "diverged") return {std::move(config), m, Diverged{std::move(reason), std::move(outcome)}};
  throw InputError(fmt::format("unknown verdict '{}'", verdict));
}

std::string serialize(const CertificateRecord& record) { return to_json(record).dump(2) + "\n"; }

CertificateRecord deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("record is not valid JSON: {}", e.what()));
  }
  return record_from_json(doc);
}

}  // namespace lyacert
