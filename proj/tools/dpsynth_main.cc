//
// Copyright 2026 The dpsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// dpsynth: exact marginals, differentially private synthetic data, range
// queries, DP audits and ledger reports from the command line.

#include <openssl/evp.h>
#include <unistd.h>

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpsynth/dpsynth.h"

#ifdef DPSYNTH_HAVE_CURL
#include <curl/curl.h>
#endif

namespace fs = std::filesystem;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIngestion = 3,
  kBudget = 4,
  kCapacity = 5,
  kAuditFail = 6,
  kNetwork = 7,
  kValidation = 8,
};

// SHA-256 of the normalized adult.data (32561 rows) written by fetch-adult.
constexpr std::string_view kAdultCsvSha256 =
    "04887b5f5f0639e04d7145a4e980774ca04a9096205fde54168702264fbbd124";

struct RunConfig {
  std::string schema_path;
  std::string input_path;
  std::vector<std::string> marginals;
  std::optional<double> epsilon;
  std::size_t rows = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::uint64_t trials = 1'000'000;
  double slack = 0.2;
  bool exact = false;
  char delimiter = ',';
  std::size_t cell_cap = dpsynth::kDefaultCellCap;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FetchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to a sibling temp file and renames, so readers never observe a
// partially written file.
void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw dpsynth::IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw dpsynth::IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw dpsynth::IoError("cannot move output into '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dpsynth::IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

dpsynth::TabularDataset load_dataset(const RunConfig& cfg, const dpsynth::Schema& schema,
                                     const std::string& path) {
  auto result = dpsynth::ingest_csv_file(path, schema, {cfg.delimiter});
  if (result.rejected_rows > 0) {
    std::cerr << "note: rejected " << result.rejected_rows
              << " rows with missing or out-of-domain cells from " << path << "\n";
  }
  return std::move(result.dataset);
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw UsageError("--seed is required for randomized commands");
  return *cfg.seed;
}

dpsynth::Epsilon require_epsilon(const RunConfig& cfg) {
  if (!cfg.epsilon) throw UsageError("--epsilon is required");
  return dpsynth::Epsilon(*cfg.epsilon);
}

std::string table_csv(const dpsynth::ContingencyTable& table) {
  std::ostringstream out;
  auto header = table.spec().columns;
  header.push_back("count");
  dpsynth::write_csv_row(out, header);
  for (std::size_t i = 0; i < table.counts().size(); ++i) {
    auto fields = table.grid().cell_labels(i);
    fields.push_back(std::to_string(table.counts()[i]));
    dpsynth::write_csv_row(out, fields);
  }
  return out.str();
}

int cmd_marginal(const RunConfig& cfg) {
  if (cfg.marginals.size() != 1) throw UsageError("marginal takes exactly one --marginal");
  const auto schema = dpsynth::load_schema(cfg.schema_path);
  const auto data = load_dataset(cfg, schema, cfg.input_path);
  const auto table = dpsynth::build_marginal(
      data, dpsynth::MarginalSpec::parse(cfg.marginals.front()), cfg.cell_cap);
  const auto csv = table_csv(table);
  if (cfg.out.empty()) {
    std::cout << csv;
  } else {
    write_atomically(cfg.out, csv);
  }
  return kOk;
}

std::string file_stem_for(const dpsynth::MarginalSpec& spec) {
  std::string stem = "synthetic";
  for (const auto& c : spec.columns) {
    stem += '_';
    for (char ch : c) stem += (std::isalnum(static_cast<unsigned char>(ch)) ? ch : '-');
  }
  return stem;
}

int cmd_synth(const RunConfig& cfg) {
  if (cfg.marginals.empty()) throw UsageError("synth needs at least one --marginal");
  if (cfg.out.empty()) throw UsageError("synth needs --out <directory>");
  const auto seed = require_seed(cfg);
  const auto epsilon = require_epsilon(cfg);
  const auto schema = dpsynth::load_schema(cfg.schema_path);
  const auto data = load_dataset(cfg, schema, cfg.input_path);
  std::vector<dpsynth::MarginalSpec> specs;
  for (const auto& m : cfg.marginals) specs.push_back(dpsynth::MarginalSpec::parse(m));

  const auto result = dpsynth::generate(data, specs, epsilon, cfg.rows, seed, cfg.cell_cap);

  // Everything is rendered before the first file is touched.
  std::vector<std::pair<fs::path, std::string>> files;
  const fs::path dir(cfg.out);
  for (const auto& s : result.synthetic) {
    std::ostringstream csv;
    dpsynth::write_csv(csv, s.data);
    files.emplace_back(dir / (file_stem_for(s.provenance.specs.front()) + ".csv"), csv.str());
  }
  files.emplace_back(dir / "report.txt", result.report.to_text());
  files.emplace_back(dir / "report.json", result.report.to_json().dump(2) + "\n");
  files.emplace_back(dir / "ledger.json", result.accountant.to_json().dump(2) + "\n");
  for (const auto& [path, content] : files) write_atomically(path, content);
  std::cout << result.report.to_text();
  return kOk;
}

int cmd_query(const RunConfig& cfg, const std::string& column, std::int64_t lo, std::int64_t hi,
              const std::string& ledger_path, std::optional<double> budget) {
  const auto schema = dpsynth::load_schema(cfg.schema_path);
  const auto data = load_dataset(cfg, schema, cfg.input_path);
  const auto exact = dpsynth::range_query(data, column, lo, hi);
  if (cfg.exact || !cfg.epsilon) {
    std::cout << exact << "\n";
    return kOk;
  }
  const auto epsilon = require_epsilon(cfg);
  const auto seed = require_seed(cfg);
  if (ledger_path.empty()) throw UsageError("noised queries need --ledger <file>");
  std::optional<dpsynth::PrivacyAccountant> accountant;
  if (fs::exists(ledger_path)) {
    accountant = dpsynth::PrivacyAccountant::from_json(
        nlohmann::json::parse(read_file(ledger_path), nullptr, false));
  } else {
    if (!budget) throw UsageError("new ledger: --budget is required");
    accountant.emplace(dpsynth::Epsilon(*budget));
  }
  const std::string description = "range(" + column + ",[" + std::to_string(lo) + "," +
                                   std::to_string(hi) + "])";
  if (!accountant->can_charge(epsilon)) accountant->charge(description, epsilon);  // throws
  // A fresh stream per ledger position: repeated runs are reproducible, and
  // successive queries do not reuse noise.
  auto gen = dpsynth::derive_rng(seed, accountant->ledger().size());
  const double answer = dpsynth::laplace_mech(static_cast<double>(exact), 1.0, epsilon, gen);
  accountant->charge(description, epsilon);
  write_atomically(ledger_path, accountant->to_json().dump(2) + "\n");
  std::cout << std::setprecision(17) << answer << "\n";
  return kOk;
}

int cmd_audit(const RunConfig& cfg, const std::string& neighbor_path,
              const std::vector<double>& thresholds, double sensitivity, bool json) {
  if (cfg.marginals.size() != 1) throw UsageError("audit takes exactly one --marginal");
  const auto seed = require_seed(cfg);
  const auto epsilon = require_epsilon(cfg);
  const auto schema = dpsynth::load_schema(cfg.schema_path);
  const auto d = load_dataset(cfg, schema, cfg.input_path);
  if (neighbor_path.empty() && d.empty()) {
    throw UsageError("cannot derive a neighbor of an empty dataset");
  }
  const auto d_prime = neighbor_path.empty() ? d.without_row(d.num_rows() - 1)
                                             : load_dataset(cfg, schema, neighbor_path);
  const auto spec = dpsynth::MarginalSpec::parse(cfg.marginals.front());
  const auto events = dpsynth::tail_events(dpsynth::build_marginal(d, spec, cfg.cell_cap),
                                           dpsynth::build_marginal(d_prime, spec, cfg.cell_cap),
                                           thresholds);
  dpsynth::LaplaceMarginalMechanism mech{spec, epsilon, sensitivity};
  auto gen = dpsynth::make_rng(seed);
  const auto report =
      dpsynth::audit_dp(mech, d, d_prime, events, epsilon, cfg.trials, cfg.slack, gen);
  std::cout << (json ? report.to_json().dump(2) + "\n" : report.to_text());
  return report.pass ? kOk : kAuditFail;
}

fs::path default_cache_dir() {
  if (const char* dir = std::getenv("DPSYNTH_CACHE_DIR"); dir && *dir) return dir;
  if (const char* home = std::getenv("HOME"); home && *home) {
    return fs::path(home) / ".cache" / "dpsynth";
  }
  return fs::current_path() / ".dpsynth-cache";
}

#ifdef DPSYNTH_HAVE_CURL
size_t append_body(char* data, size_t size, size_t nmemb, void* user) {
  static_cast<std::string*>(user)->append(data, size * nmemb);
  return size * nmemb;
}
#endif

std::string download(const std::string& url) {
#ifdef DPSYNTH_HAVE_CURL
  std::string body;
  CURL* curl = curl_easy_init();
  if (curl == nullptr) throw FetchError("libcurl initialisation failed");
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 20L);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, 300L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK) {
    throw FetchError(std::string("download of ") + url + " failed: " + curl_easy_strerror(rc));
  }
  return body;
#else
  throw FetchError("built without libcurl; cannot download " + url);
#endif
}

int cmd_fetch_adult(std::string target, const std::string& from, const std::string& url,
                    bool force) {
  const fs::path path = target.empty() ? default_cache_dir() / "adult.csv" : fs::path(target);
  if (fs::exists(path) && !force) {
    const auto existing = read_file(path);
    if (sha256_hex(existing) == kAdultCsvSha256) {
      std::cout << "up to date: " << path.string() << " (checksum match)\n";
      return kOk;
    }
    std::istringstream in(existing);
    const auto v = dpsynth::adult::validate(in);
    if (v.ok) {
      std::cout << "present: " << path.string() << " (" << v.rows
                << " rows, validated; checksum differs from the reference file)\n";
      return kOk;
    }
    std::cerr << "existing file " << path.string() << " failed check '" << v.failed_check
              << "': " << v.detail << "; re-acquiring\n";
  }

  std::string raw;
  if (!from.empty()) {
    raw = read_file(from);
  } else {
    try {
      raw = download(url);
    } catch (const FetchError& e) {
      throw FetchError(std::string(e.what()) +
                       "\nhint: retry later, or download adult.data manually and pass "
                       "--from <file>");
    }
  }
  std::istringstream raw_in(raw);
  const auto normalized = dpsynth::adult::normalize(raw_in);
  std::istringstream check_in(normalized);
  const auto v = dpsynth::adult::validate(check_in);
  if (!v.ok) {
    throw ValidationError("census data failed check '" + v.failed_check + "': " + v.detail);
  }
  write_atomically(path, normalized);
  std::cout << "wrote " << path.string() << " (" << v.rows << " rows, sha256 "
            << sha256_hex(normalized) << ")\n";
  return kOk;
}

int cmd_report(const std::string& ledger_path, bool json) {
  const auto doc = nlohmann::json::parse(read_file(ledger_path), nullptr, false);
  const auto accountant = dpsynth::PrivacyAccountant::from_json(doc);
  std::cout << (json ? accountant.to_json().dump(2) + "\n" : accountant.to_text());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private synthetic data from noisy marginals"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string delimiter = ",";

  auto add_data_flags = [&](CLI::App* sub) {
    sub->add_option("--schema", cfg.schema_path, "Schema JSON file")->required();
    sub->add_option("--input", cfg.input_path, "Input CSV with header row")->required();
    sub->add_option("--delimiter", delimiter, "Single-character field delimiter");
    sub->add_option("--cell-cap", cfg.cell_cap, "Maximum cells of a dense marginal");
  };

  auto* marginal = app.add_subcommand("marginal", "Exact contingency table as CSV");
  add_data_flags(marginal);
  marginal->add_option("--marginal", cfg.marginals, "Comma-joined columns")->required();
  marginal->add_option("--out", cfg.out, "Output CSV (default stdout)");

  auto* synth = app.add_subcommand("synth", "Noisy-marginal synthetic data");
  add_data_flags(synth);
  synth->add_option("--marginal", cfg.marginals, "Comma-joined columns (repeatable)")->required();
  synth->add_option("--epsilon", cfg.epsilon, "Total privacy budget")->required();
  synth->add_option("--rows", cfg.rows, "Rows to sample per marginal")->required();
  synth->add_option("--seed", cfg.seed, "Master seed")->required();
  synth->add_option("--out", cfg.out, "Output directory")->required();

  std::string column, ledger_path;
  std::int64_t lo = 0, hi = 0;
  std::optional<double> budget;
  auto* query = app.add_subcommand("query", "Range count, exact or Laplace-noised");
  add_data_flags(query);
  query->add_option("--column", column, "Bounded-integer column")->required();
  query->add_option("--lo", lo, "Inclusive lower bound")->required();
  query->add_option("--hi", hi, "Inclusive upper bound")->required();
  query->add_option("--epsilon", cfg.epsilon, "Noise the answer at this epsilon");
  query->add_option("--seed", cfg.seed, "Seed for the noise");
  query->add_option("--ledger", ledger_path, "Ledger file charged for noised answers");
  query->add_option("--budget", budget, "Total budget when creating a new ledger");
  query->add_flag("--exact", cfg.exact, "Answer exactly, spending nothing");

  std::string neighbor_path;
  std::vector<double> thresholds;
  double sensitivity = 1.0;
  bool audit_json = false;
  auto* audit = app.add_subcommand("audit", "Monte-Carlo audit of the epsilon-DP inequality");
  add_data_flags(audit);
  audit->add_option("--neighbor", neighbor_path,
                    "Neighboring CSV (default: input minus its last row)");
  audit->add_option("--marginal", cfg.marginals, "Comma-joined columns")->required();
  audit->add_option("--epsilon", cfg.epsilon, "Epsilon under test")->required();
  audit->add_option("--seed", cfg.seed, "Seed")->required();
  audit->add_option("--trials", cfg.trials, "Trials per dataset");
  audit->add_option("--slack", cfg.slack, "Relative slack on e^epsilon, in (0, 0.5]");
  audit->add_option("--thresholds", thresholds, "Left-tail event thresholds")->delimiter(',');
  audit->add_option("--sensitivity", sensitivity,
                    "Sensitivity assumed by the mechanism (below 1 breaks DP)");
  audit->add_flag("--json", audit_json, "Emit JSON");

  std::string fetch_out, fetch_from, fetch_url(dpsynth::adult::kSourceUrl);
  bool force = false;
  auto* fetch = app.add_subcommand("fetch-adult", "Fetch and validate the UCI Adult census file");
  fetch->add_option("--out", fetch_out, "Target CSV (default $DPSYNTH_CACHE_DIR/adult.csv)");
  fetch->add_option("--from", fetch_from, "Use a pre-downloaded adult.data instead of the network");
  fetch->add_option("--url", fetch_url, "Download URL");
  fetch->add_flag("--force", force, "Re-acquire even if the target is valid");

  std::string report_ledger;
  bool report_json = false;
  auto* report = app.add_subcommand("report", "Print a privacy ledger");
  report->add_option("--ledger", report_ledger, "Ledger JSON file")->required();
  report->add_flag("--json", report_json, "Emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    cfg.delimiter = delimiter.front();
    if (*marginal) return cmd_marginal(cfg);
    if (*synth) return cmd_synth(cfg);
    if (*query) return cmd_query(cfg, column, lo, hi, ledger_path, budget);
    if (*audit) return cmd_audit(cfg, neighbor_path, thresholds, sensitivity, audit_json);
    if (*fetch) return cmd_fetch_adult(fetch_out, fetch_from, fetch_url, force);
    if (*report) return cmd_report(report_ledger, report_json);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const dpsynth::BudgetExceededError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kBudget;
  } catch (const dpsynth::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kCapacity;
  } catch (const dpsynth::ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const dpsynth::UnsupportedQueryError& e) {
    std::cerr << "unsupported query: " << e.what() << "\n";
    return kUsage;
  } catch (const dpsynth::IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << "\n";
    return kIngestion;
  } catch (const dpsynth::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIngestion;
  } catch (const FetchError& e) {
    std::cerr << "fetch failed: " << e.what() << "\n";
    return kNetwork;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
