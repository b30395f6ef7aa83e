#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmm/datagen.hpp"
#include "bmm/matrix.hpp"
#include "bmm/plan.hpp"

namespace bmm::bench {

/// Invalid experiment configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimated memory above the configured cap (CLI exit code 2).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SweepVar { kC, kK, kC0 };

std::string_view sweep_name(SweepVar v);
SweepVar parse_sweep(std::string_view name);

struct ExperimentConfig {
  DataCase data_case = DataCase::kII;
  std::vector<Method> methods = all_methods();
  std::size_t m = 26;
  std::size_t n = 20000;
  std::size_t p = 28;
  /// At most one of K, c, c0 may hold more than one value.
  std::vector<std::size_t> K{10};
  std::vector<std::size_t> c{2000};
  std::vector<std::size_t> c0{200};
  std::size_t reps = 20;
  std::uint64_t seed = 1;
  std::string out;
  /// SSM block draws; defaults to round(c K / n).
  std::optional<std::size_t> ssm_draws;
  bool cap_to_block_size = true;
  bool unit_location = true;
  /// When false the timing columns are written as 0 so the raw CSV is reproducible byte for byte.
  bool record_timing = true;
  /// 0 means one worker per hardware thread.
  std::size_t threads = 0;
  std::size_t memory_cap_mb = 4096;
};

/// Reads the JSON config document. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Throws ConfigError on an invalid config and returns the swept variable
/// (c when nothing is swept).
SweepVar validate_config(const ExperimentConfig& cfg);

std::size_t estimated_memory_bytes(const ExperimentConfig& cfg);

struct RawRow {
  DataCase data_case = DataCase::kII;
  Method method = Method::kOPL;
  SweepVar sweep_var = SweepVar::kC;
  std::size_t sweep_value = 0;
  std::size_t rep = 0;
  double rel_error = 0.0;
  double plan_time_s = 0.0;
  double sample_time_s = 0.0;
};

struct ResultTable {
  std::vector<RawRow> rows;
};

struct MethodRun {
  DenseMatrix product;
  double plan_seconds = 0.0;
  double sample_seconds = 0.0;
};

struct MethodParams {
  std::size_t c = 0;
  std::size_t c0 = 0;
  std::optional<std::size_t> ssm_draws;
  AllocationOptions allocation;
  bool record_timing = true;
};

/// One full run of a method: plan construction, sampling, and combination.
/// Times are thread CPU seconds.
MethodRun run_method(Method method, MatrixView m, MatrixView n, const BlockPartition& part,
                     const MethodParams& params, std::uint64_t seed);

/// Generates the instance from the config and runs every sweep point, method and replication.
ResultTable run(const ExperimentConfig& cfg);
ResultTable run(const ExperimentConfig& cfg, const Instance& instance);

struct SummaryRow {
  DataCase data_case = DataCase::kII;
  Method method = Method::kOPL;
  SweepVar sweep_var = SweepVar::kC;
  std::size_t sweep_value = 0;
  std::size_t reps = 0;
  double rel_error_mean = 0.0;
  double rel_error_median = 0.0;
  double rel_error_std = 0.0;
  double plan_time_mean = 0.0;
  double sample_time_mean = 0.0;
  double total_time_median = 0.0;
};

/// Per (case, method, sweep point) aggregates, in first-appearance order.
/// Throws ConfigError on an empty table.
std::vector<SummaryRow> summarize(const ResultTable& table);

void write_raw_csv(std::ostream& out, const ResultTable& table);
ResultTable read_raw_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace bmm::bench
