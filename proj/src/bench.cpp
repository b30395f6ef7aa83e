#include "bmm/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ctime>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "bmm/analysis.hpp"
#include "bmm/estimators.hpp"
#include "bmm/rng.hpp"

namespace bmm::bench {
namespace {

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

class PhaseTimer {
 public:
  explicit PhaseTimer(bool enabled) : enabled_(enabled), start_(enabled ? thread_cpu_seconds() : 0.0) {}
  double lap() {
    if (!enabled_) return 0.0;
    const double now = thread_cpu_seconds();
    const double d = now - start_;
    start_ = now;
    return d;
  }

 private:
  bool enabled_;
  double start_;
};

void append_number(std::ostream& out, double x) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  out.write(buf.data(), res.ptr - buf.data());
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "case", "methods", "m", "n", "p", "K", "c", "c0", "reps", "seed", "out", "ssm_draws",
      "cap_to_block_size", "unit_location", "record_timing", "threads", "memory_cap_mb"};
  return keys;
}

std::vector<std::size_t> counts_from(const nlohmann::json& v, const char* key) {
  if (v.is_number_unsigned()) return {v.get<std::size_t>()};
  if (v.is_array()) {
    std::vector<std::size_t> out;
    for (const auto& x : v) {
      if (!x.is_number_unsigned()) throw ConfigError(std::string(key) + " must hold non-negative integers");
      out.push_back(x.get<std::size_t>());
    }
    return out;
  }
  throw ConfigError(std::string(key) + " must be an integer or a list of integers");
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ConfigError("bad number in CSV: '" + s + "'");
  return v;
}

}  // namespace

std::string_view sweep_name(SweepVar v) {
  switch (v) {
    case SweepVar::kC: return "c";
    case SweepVar::kK: return "K";
    case SweepVar::kC0: return "c0";
  }
  return "c";
}

SweepVar parse_sweep(std::string_view name) {
  if (name == "c") return SweepVar::kC;
  if (name == "K") return SweepVar::kK;
  if (name == "c0") return SweepVar::kC0;
  throw ConfigError("unknown sweep variable '" + std::string(name) + "'");
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  ExperimentConfig cfg;
  try {
    if (doc.contains("case")) cfg.data_case = parse_case(doc["case"].get<std::string>());
    if (doc.contains("methods")) {
      cfg.methods.clear();
      const auto& ms = doc["methods"];
      if (ms.is_string()) {
        cfg.methods.push_back(parse_method(ms.get<std::string>()));
      } else {
        for (const auto& x : ms) cfg.methods.push_back(parse_method(x.get<std::string>()));
      }
    }
    if (doc.contains("m")) cfg.m = doc["m"].get<std::size_t>();
    if (doc.contains("n")) cfg.n = doc["n"].get<std::size_t>();
    if (doc.contains("p")) cfg.p = doc["p"].get<std::size_t>();
    if (doc.contains("K")) cfg.K = counts_from(doc["K"], "K");
    if (doc.contains("c")) cfg.c = counts_from(doc["c"], "c");
    if (doc.contains("c0")) cfg.c0 = counts_from(doc["c0"], "c0");
    if (doc.contains("reps")) cfg.reps = doc["reps"].get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("out")) cfg.out = doc["out"].get<std::string>();
    if (doc.contains("ssm_draws") && !doc["ssm_draws"].is_null()) cfg.ssm_draws = doc["ssm_draws"].get<std::size_t>();
    if (doc.contains("cap_to_block_size")) cfg.cap_to_block_size = doc["cap_to_block_size"].get<bool>();
    if (doc.contains("unit_location")) cfg.unit_location = doc["unit_location"].get<bool>();
    if (doc.contains("record_timing")) cfg.record_timing = doc["record_timing"].get<bool>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<std::size_t>();
    if (doc.contains("memory_cap_mb")) cfg.memory_cap_mb = doc["memory_cap_mb"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json doc;
  doc["case"] = case_name(cfg.data_case);
  doc["methods"] = nlohmann::json::array();
  for (Method m : cfg.methods) doc["methods"].push_back(method_name(m));
  doc["m"] = cfg.m;
  doc["n"] = cfg.n;
  doc["p"] = cfg.p;
  doc["K"] = cfg.K;
  doc["c"] = cfg.c;
  doc["c0"] = cfg.c0;
  doc["reps"] = cfg.reps;
  doc["seed"] = cfg.seed;
  doc["out"] = cfg.out;
  doc["ssm_draws"] = cfg.ssm_draws ? nlohmann::json(*cfg.ssm_draws) : nlohmann::json(nullptr);
  doc["cap_to_block_size"] = cfg.cap_to_block_size;
  doc["unit_location"] = cfg.unit_location;
  doc["record_timing"] = cfg.record_timing;
  doc["threads"] = cfg.threads;
  doc["memory_cap_mb"] = cfg.memory_cap_mb;
  return doc;
}

std::size_t estimated_memory_bytes(const ExperimentConfig& cfg) {
  const std::size_t cmax = *std::max_element(cfg.c.begin(), cfg.c.end());
  const std::size_t c0max = *std::max_element(cfg.c0.begin(), cfg.c0.end());
  const std::size_t width = std::max({cmax, c0max, cfg.n});
  const std::size_t workers = std::max<std::size_t>(1, cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads);
  // Instance, exact product, and per worker one sketch pair plus products.
  const std::size_t doubles = cfg.m * cfg.n + cfg.n * cfg.p + cfg.m * cfg.p +
                              workers * (width * (cfg.m + cfg.p) + 4 * cfg.m * cfg.p + 2 * cfg.n);
  return doubles * sizeof(double);
}

SweepVar validate_config(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw ConfigError("method list is empty");
  if (cfg.m == 0 || cfg.n == 0 || cfg.p == 0) throw ConfigError("m, n and p must be >= 1");
  if (cfg.reps == 0) throw ConfigError("reps must be >= 1");
  if (cfg.K.empty() || cfg.c.empty() || cfg.c0.empty()) throw ConfigError("K, c and c0 need at least one value");
  int swept = 0;
  SweepVar var = SweepVar::kC;
  if (cfg.c.size() > 1) ++swept, var = SweepVar::kC;
  if (cfg.K.size() > 1) ++swept, var = SweepVar::kK;
  if (cfg.c0.size() > 1) ++swept, var = SweepVar::kC0;
  if (swept > 1) throw ConfigError("only one of K, c, c0 may be swept per run");
  for (std::size_t k : cfg.K) {
    if (k == 0 || cfg.n % k != 0) {
      throw ConfigError("n = " + std::to_string(cfg.n) + " is not divisible by K = " + std::to_string(k));
    }
  }
  const bool two_step = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                    [](Method m) { return m == Method::kONU || m == Method::kONMCNR; });
  for (std::size_t k : cfg.K) {
    for (std::size_t c : cfg.c) {
      if (c < k) throw ConfigError("c = " + std::to_string(c) + " is below K = " + std::to_string(k));
      if (cfg.cap_to_block_size && c > cfg.n) {
        throw ConfigError("c = " + std::to_string(c) + " exceeds n with the block-size cap enabled");
      }
    }
    if (two_step) {
      for (std::size_t c0 : cfg.c0) {
        if (c0 < k) throw ConfigError("c0 = " + std::to_string(c0) + " is below K = " + std::to_string(k));
      }
    }
  }
  if (cfg.ssm_draws && *cfg.ssm_draws == 0) throw ConfigError("ssm_draws must be >= 1");
  const std::size_t cap = cfg.memory_cap_mb * std::size_t{1024} * 1024;
  if (estimated_memory_bytes(cfg) > cap) {
    throw ResourceError("estimated memory " + std::to_string(estimated_memory_bytes(cfg) >> 20) +
                        " MiB exceeds the cap of " + std::to_string(cfg.memory_cap_mb) + " MiB");
  }
  return var;
}

MethodRun run_method(Method method, MatrixView m, MatrixView n, const BlockPartition& part,
                     const MethodParams& params, std::uint64_t seed) {
  MethodRun out;
  PhaseTimer timer(params.record_timing);
  switch (method) {
    case Method::kOPL:
    case Method::kONC:
    case Method::kUU: {
      const SamplingPlan plan = method == Method::kOPL   ? allocate_opl(m, n, part, params.c, params.allocation)
                                : method == Method::kONC ? allocate_onc(m, n, part, params.c, params.allocation)
                                                         : allocate_uniform(part, params.c, params.allocation);
      out.plan_seconds = timer.lap();
      out.product = sabmm(m, n, plan, seed).product;
      out.sample_seconds = timer.lap();
      break;
    }
    case Method::kONU:
    case Method::kONMCNR: {
      const BlockProbabilities pilot =
          method == Method::kONU ? uniform_probabilities(part) : optimal_probabilities(m, n, part);
      const SamplingPlan plan = allocate_twostep(m, n, part, params.c, params.c0, pilot, seed, params.allocation);
      out.plan_seconds = timer.lap();
      out.product = sabmm(m, n, plan, seed).product;
      out.sample_seconds = timer.lap();
      break;
    }
    case Method::kSSM: {
      const auto q = ssm_block_probabilities(m, n, part);
      out.plan_seconds = timer.lap();
      const std::size_t b = params.ssm_draws.value_or(ssm_matched_draws(params.c, part));
      out.product = ssm_estimate(m, n, part, q, b, seed).product;
      out.sample_seconds = timer.lap();
      break;
    }
  }
  return out;
}

ResultTable run(const ExperimentConfig& cfg) {
  validate_config(cfg);
  CaseOptions opts;
  opts.unit_location = cfg.unit_location;
  const Instance inst = generate(cfg.data_case, cfg.m, cfg.n, cfg.p, derive_seed(cfg.seed, Stream::kData), opts);
  return run(cfg, inst);
}

ResultTable run(const ExperimentConfig& cfg, const Instance& instance) {
  const SweepVar var = validate_config(cfg);
  if (instance.M.rows() != cfg.m || instance.M.cols() != cfg.n || instance.N.rows() != cfg.n ||
      instance.N.cols() != cfg.p) {
    throw ConfigError("instance shape does not match the config");
  }
  const DenseMatrix exact = multiply_exact(instance.M, instance.N);
  if (!(frobenius_norm(exact) > 0.0)) throw ConfigError("exact product is zero; relative error undefined");

  const std::vector<std::size_t>& points = var == SweepVar::kC ? cfg.c : var == SweepVar::kK ? cfg.K : cfg.c0;
  struct Task {
    std::size_t point;
    std::size_t method;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  for (std::size_t pt = 0; pt < points.size(); ++pt) {
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      for (std::size_t r = 0; r < cfg.reps; ++r) tasks.push_back({pt, mi, r});
    }
  }

  std::vector<BlockPartition> partitions;
  for (std::size_t pt = 0; pt < points.size(); ++pt) {
    const std::size_t K = var == SweepVar::kK ? points[pt] : cfg.K.front();
    partitions.push_back(BlockPartition::equal(cfg.n, K));
  }

  ResultTable table;
  table.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      try {
        MethodParams params;
        params.c = var == SweepVar::kC ? points[task.point] : cfg.c.front();
        params.c0 = var == SweepVar::kC0 ? points[task.point] : cfg.c0.front();
        params.ssm_draws = cfg.ssm_draws;
        params.allocation.cap_to_block_size = cfg.cap_to_block_size;
        params.record_timing = cfg.record_timing;
        const std::uint64_t seed = derive_seed(cfg.seed, Stream::kReplication, {task.point, task.rep});
        const Method method = cfg.methods[task.method];
        const MethodRun res = run_method(method, instance.M, instance.N, partitions[task.point], params, seed);
        RawRow& row = table.rows[t];
        row.data_case = cfg.data_case;
        row.method = method;
        row.sweep_var = var;
        row.sweep_value = points[task.point];
        row.rep = task.rep;
        row.rel_error = relative_error(res.product, exact);
        row.plan_time_s = res.plan_seconds;
        row.sample_time_s = res.sample_seconds;
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };

  std::size_t nthreads = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
  nthreads = std::clamp<std::size_t>(nthreads, 1, std::max<std::size_t>(1, tasks.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return table;
}

std::vector<SummaryRow> summarize(const ResultTable& table) {
  if (table.rows.empty()) throw ConfigError("cannot summarize an empty result table");
  using Key = std::tuple<int, int, int, std::size_t>;
  std::map<Key, std::size_t> index;
  std::vector<std::vector<const RawRow*>> groups;
  for (const auto& r : table.rows) {
    const Key key{static_cast<int>(r.data_case), static_cast<int>(r.method), static_cast<int>(r.sweep_var),
                  r.sweep_value};
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&r);
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    SummaryRow s;
    s.data_case = g.front()->data_case;
    s.method = g.front()->method;
    s.sweep_var = g.front()->sweep_var;
    s.sweep_value = g.front()->sweep_value;
    s.reps = g.size();
    std::vector<double> errs;
    std::vector<double> totals;
    for (const RawRow* r : g) {
      errs.push_back(r->rel_error);
      totals.push_back(r->plan_time_s + r->sample_time_s);
      s.plan_time_mean += r->plan_time_s;
      s.sample_time_mean += r->sample_time_s;
    }
    const double cnt = static_cast<double>(g.size());
    s.plan_time_mean /= cnt;
    s.sample_time_mean /= cnt;
    s.rel_error_mean = std::accumulate(errs.begin(), errs.end(), 0.0) / cnt;
    double ss = 0.0;
    for (double e : errs) ss += (e - s.rel_error_mean) * (e - s.rel_error_mean);
    s.rel_error_std = g.size() > 1 ? std::sqrt(ss / (cnt - 1.0)) : 0.0;
    s.rel_error_median = median_of(errs);
    s.total_time_median = median_of(totals);
    out.push_back(s);
  }
  return out;
}

void write_raw_csv(std::ostream& out, const ResultTable& table) {
  out << "case,method,sweep_var,sweep_value,rep,rel_error,plan_time_s,sample_time_s\n";
  for (const auto& r : table.rows) {
    out << case_name(r.data_case) << ',' << method_name(r.method) << ',' << sweep_name(r.sweep_var) << ','
        << r.sweep_value << ',' << r.rep << ',';
    append_number(out, r.rel_error);
    out << ',';
    append_number(out, r.plan_time_s);
    out << ',';
    append_number(out, r.sample_time_s);
    out << '\n';
  }
}

ResultTable read_raw_csv(std::istream& in) {
  ResultTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("raw CSV is empty");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 8) throw ConfigError("raw CSV line " + std::to_string(lineno) + " has the wrong column count");
    RawRow r;
    try {
      r.data_case = parse_case(cells[0]);
      r.method = parse_method(cells[1]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    r.sweep_var = parse_sweep(cells[2]);
    r.sweep_value = parse_number<std::size_t>(cells[3]);
    r.rep = parse_number<std::size_t>(cells[4]);
    r.rel_error = parse_number<double>(cells[5]);
    r.plan_time_s = parse_number<double>(cells[6]);
    r.sample_time_s = parse_number<double>(cells[7]);
    table.rows.push_back(r);
  }
  return table;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "case,method,sweep_var,sweep_value,reps,rel_error_mean,rel_error_median,rel_error_std,"
         "plan_time_mean_s,sample_time_mean_s,total_time_median_s\n";
  for (const auto& s : rows) {
    out << case_name(s.data_case) << ',' << method_name(s.method) << ',' << sweep_name(s.sweep_var) << ','
        << s.sweep_value << ',' << s.reps;
    for (double x : {s.rel_error_mean, s.rel_error_median, s.rel_error_std, s.plan_time_mean, s.sample_time_mean,
                     s.total_time_median}) {
      out << ',';
      append_number(out, x);
    }
    out << '\n';
  }
}

}  // namespace bmm::bench
