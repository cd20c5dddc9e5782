#include "wfcm/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace wfcm {
namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Error csv_error(int line, const std::string& what) {
  return Error("csv-parse", "line " + std::to_string(line) + ": " + what, ErrorKind::validation);
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

Dataset parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw csv_error(line_no, "missing header row");
  for (auto& h : split_line(line)) header.push_back(trim(h));
  const std::size_t d = header.size();

  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != d) {
      throw csv_error(line_no, "expected " + std::to_string(d) + " fields, found " + std::to_string(cells.size()));
    }
    for (const auto& raw : cells) {
      const std::string cell = trim(raw);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw csv_error(line_no, "not a finite number: '" + cell + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw csv_error(line_no, "no data rows");
  RowMatrix m = Eigen::Map<RowMatrix>(values.data(), rows, static_cast<Eigen::Index>(d));
  return Dataset(std::move(m), std::move(header));
}

Dataset read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

std::string to_csv(const Dataset& data) {
  std::string out;
  for (int c = 0; c < data.dim(); ++c) {
    if (c) out += ',';
    out += data.column_names().empty() ? "x" + std::to_string(c + 1) : data.column_names()[c];
  }
  out += '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int c = 0; c < data.dim(); ++c) {
      if (c) out += ',';
      out += format_double(data.values()(i, c));
    }
    out += '\n';
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open " + path.string(), ErrorKind::validation);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path.string(), ErrorKind::validation);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string memberships_csv(const MembershipMatrix& u) {
  std::string out;
  for (int j = 0; j < u.k(); ++j) out += "u" + std::to_string(j + 1) + ",";
  out += "label\n";
  const auto labels = u.hard_labels();
  for (int i = 0; i < u.n(); ++i) {
    for (int j = 0; j < u.k(); ++j) out += format_double(u(i, j)) + ",";
    out += std::to_string(labels[i] + 1) + "\n";
  }
  return out;
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out =
      "iteration,surrogate_before_membership,surrogate_after_membership,surrogate_after_centroid,"
      "nll_before_scale,nll_after_scale,wfcm_loss,nll,param_change,starved,weak_step\n";
  for (const auto& t : trace) {
    out += std::to_string(t.iteration);
    for (double v : {t.surrogate_before_membership, t.surrogate_after_membership, t.surrogate_after_centroid,
                     t.nll_before_scale, t.nll_after_scale, t.wfcm_loss, t.nll, t.param_change}) {
      out += "," + format_double(v);
    }
    out += std::string(",") + (t.starved ? "1" : "0") + "," + (t.weak_step ? "1" : "0") + "\n";
  }
  return out;
}

Json to_json(const ModelParams& params) {
  return Json{{"sigma", params.sigma()},
              {"m", params.fuzziness()},
              {"weights", vector_json(params.weights())},
              {"centers", matrix_json(params.centers())},
              {"weight_floor", params.weight_floor()}};
}

ModelParams params_from_json(const Json& j) {
  try {
    const auto centers = j.at("centers").get<std::vector<std::vector<double>>>();
    const auto weights = j.at("weights").get<std::vector<double>>();
    if (centers.empty()) throw validation_error("params.centers must not be empty");
    RowMatrix v(static_cast<Eigen::Index>(centers.size()), static_cast<Eigen::Index>(centers[0].size()));
    for (std::size_t r = 0; r < centers.size(); ++r) {
      if (centers[r].size() != centers[0].size()) throw validation_error("params.centers rows differ in length");
      for (std::size_t c = 0; c < centers[r].size(); ++c) v(r, c) = centers[r][c];
    }
    if (weights.size() != centers.size()) throw validation_error("params.weights must have one entry per center");
    Vector w = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return ModelParams(j.at("sigma").get<double>(), std::move(v), std::move(w), j.value("m", 2.0),
                       j.value("weight_floor", kDefaultWeightFloor));
  } catch (const Json::exception& e) {
    throw Error("config-invalid", std::string("params: ") + e.what(), ErrorKind::validation);
  }
}

Json to_json(const ProposalModel& model) {
  Json comps = Json::array();
  for (int g = 0; g < model.components(); ++g) {
    comps.push_back({{"weight", model.mix_weights()[g]},
                     {"mean", vector_json(model.means().row(g).transpose())},
                     {"covariance", matrix_json(model.covariances()[static_cast<std::size_t>(g)])}});
  }
  return Json{{"components", std::move(comps)}};
}

Json to_json(const IsEstimate& est) {
  return Json{{"log_c", number(est.log_c)}, {"log_z", number(est.log_z)},   {"ess", number(est.ess)},
              {"samples", est.m_samples},   {"std_error", number(est.std_error)}, {"low_ess", est.low_ess}};
}

Json to_json(const FitResult& fit) {
  Json grid = Json::array();
  for (const auto& e : fit.m_grid_table) {
    grid.push_back({{"m", e.m}, {"nll", number(e.nll)}, {"ok", e.ok}, {"error", e.error}});
  }
  return Json{{"params", to_json(fit.params)},
              {"nll", number(fit.nll)},
              {"mm_nll", number(fit.mm_nll)},
              {"log_c", to_json(fit.log_c)},
              {"converged", fit.converged},
              {"reason", fit.reason},
              {"mm_iterations", fit.trace.size()},
              {"proposal_components", fit.proposal_components},
              {"m_grid", std::move(grid)},
              {"flags", fit.flags}};
}

Json to_json(const ChainDiagnostics& diag) {
  return Json{{"acceptance_rate", diag.acceptance_rate},
              {"chain_means", vector_json(diag.chain_means)},
              {"iterations", diag.iterations},
              {"burn_in", diag.burn_in},
              {"thinning", diag.thinning},
              {"jump_scale", diag.jump_scale},
              {"seed", diag.seed},
              {"warnings", diag.warnings}};
}

Json to_json(const EllipsoidRegion& region) {
  return Json{{"center", vector_json(region.center)},
              {"replicate_mean", vector_json(region.replicate_mean)},
              {"covariance", matrix_json(region.covariance)},
              {"rank", region.rank},
              {"threshold", number(region.threshold)},
              {"pseudoinverse", region.pseudoinverse}};
}

Json to_json(const BootstrapReport& report) {
  Json cis = Json::array();
  for (const auto& c : report.scalar_cis) {
    cis.push_back({{"parameter", c.name},
                   {"estimate", number(c.estimate)},
                   {"mean", number(c.mean)},
                   {"sd", number(c.sd)},
                   {"lower", number(c.lower)},
                   {"upper", number(c.upper)}});
  }
  Json centers = Json::array();
  for (const auto& r : report.center_regions) centers.push_back(to_json(r));
  Json reps = Json::array();
  for (const auto& p : report.replicates) reps.push_back(to_json(p));
  return Json{{"alpha", report.alpha},
              {"B", report.requested},
              {"failures", report.failures},
              {"failure_codes", report.failure_codes},
              {"flags", report.flags},
              {"reference", to_json(report.reference)},
              {"scalar_cis", std::move(cis)},
              {"center_regions", std::move(centers)},
              {"weight_region", to_json(report.weight_region)},
              {"replicates", std::move(reps)}};
}

Json to_json(const LrtReport& report) {
  return Json{{"pair", {report.pair.first + 1, report.pair.second + 1}},
              {"lambda", report.lambda},
              {"raw_lambda", report.raw_lambda},
              {"df", report.df},
              {"p_value", report.p_value},
              {"flags", report.flags},
              {"unrestricted", to_json(report.unrestricted)},
              {"restricted", to_json(report.restricted)}};
}

Json to_json(const ValidityGrid& grid) {
  Json cells = Json::array();
  for (const auto& c : grid.cells) {
    cells.push_back({{"k", c.k}, {"m", c.m}, {"xbi", number(c.xbi)}, {"ok", c.ok}, {"error", c.error}, {"flags", c.flags}});
  }
  Json out{{"k_values", grid.k_values}, {"m_values", grid.m_values}, {"best_k", grid.best_k},
           {"best_m", grid.best_m},     {"cells", std::move(cells)}};
  out["elbow_k"] = grid.elbow_k ? Json(*grid.elbow_k) : Json(nullptr);
  return out;
}

std::string ci_table_csv(const BootstrapReport& report) {
  std::ostringstream level;
  level << std::setprecision(6) << 100.0 * (1.0 - report.alpha);
  std::string out = "Parameter,Mean ± Std.,\"" + level.str() + "% CI\"\n";
  auto fixed = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };
  for (const auto& c : report.scalar_cis) {
    out += c.name + "," + fixed(c.mean) + " ± " + fixed(c.sd) + ",\"(" + fixed(c.lower) + ", " + fixed(c.upper) + ")\"\n";
  }
  return out;
}

std::string validity_grid_csv(const ValidityGrid& grid) {
  std::string out = "k,m,xbi,flags\n";
  for (const auto& c : grid.cells) {
    std::string flags = c.error;
    for (const auto& f : c.flags) flags += (flags.empty() ? "" : ";") + f;
    out += std::to_string(c.k) + "," + format_double(c.m) + "," + format_double(c.xbi) + "," + flags + "\n";
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("digest-failed", "SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

}  // namespace wfcm
