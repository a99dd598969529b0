#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lyacert/certifier.hpp"

namespace lyacert {

/// Everything needed to reproduce and re-check a verdict without the data:
/// the configuration, the error dimension m and the verdict itself.
///
/// JSON layout (field names are stable):
///   mode, m, dt, gamma, Q (row-major, null without a candidate), epsilon,
///   termination, loss_final, seed, config, verdict, reason, loss_history,
///   param_norm_history, params.
/// Non-finite numbers are written as the strings "inf", "-inf" and "nan".
struct CertificateRecord {
  CertifyConfig config;
  std::size_t m = 0;
  Verdict verdict;
};

nlohmann::json to_json(const CertificateRecord& record);
/// Throws InputError on a missing or mistyped field.
CertificateRecord record_from_json(const nlohmann::json& doc);

std::string serialize(const CertificateRecord& record);
CertificateRecord deserialize(std::string_view text);

nlohmann::json config_to_json(const CertifyConfig& config);
CertifyConfig config_from_json(const nlohmann::json& doc);

}  // namespace lyacert
