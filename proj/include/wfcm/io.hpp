#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wfcm/estimator.hpp"
#include "wfcm/inference.hpp"
#include "wfcm/model_select.hpp"
#include "wfcm/proposal_gmm.hpp"
#include "wfcm/synth_sampler.hpp"
#include "wfcm/types.hpp"

namespace wfcm {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Headered numeric CSV. Parse failures raise "csv-parse" naming the line.
Dataset parse_csv(std::string_view text);
Dataset read_csv(const std::filesystem::path& path);
std::string to_csv(const Dataset& data);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// n rows of u_1..u_k plus the 1-based max-membership label.
std::string memberships_csv(const MembershipMatrix& u);
std::string trace_csv(const std::vector<TraceRecord>& trace);

Json to_json(const ModelParams& params);
ModelParams params_from_json(const Json& j);
Json to_json(const ProposalModel& model);
Json to_json(const IsEstimate& est);
Json to_json(const FitResult& fit);
Json to_json(const ChainDiagnostics& diag);
Json to_json(const EllipsoidRegion& region);
Json to_json(const BootstrapReport& report);
Json to_json(const LrtReport& report);
Json to_json(const ValidityGrid& grid);

/// Parameter, Mean ± Std., 95% CI (the level follows the report's α).
std::string ci_table_csv(const BootstrapReport& report);
/// k, m, xbi, flags.
std::string validity_grid_csv(const ValidityGrid& grid);

std::string sha256_hex(std::string_view bytes);

}  // namespace wfcm
