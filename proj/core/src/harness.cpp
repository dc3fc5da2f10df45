#include "argoskit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace argoskit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "infinite") return kInfinity;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ParseError("bad SNR value '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError("bad boolean '" + s + "'");
}

long long parse_int(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw ParseError("bad integer '" + s + "'");
  return v;
}

std::string snr_label(double snr_db) {
  if (std::isinf(snr_db)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", snr_db);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

const char* kCellHeader = "trial,seed,success,runtime_seconds,ic_attempts,error";

}  // namespace

void ExperimentConfig::validate() const {
  builtin_system(system);
  if (trials < 1) throw Error("experiment: trials must be >= 1");
  if (n_grid.empty() || snr_grid.empty()) throw Error("experiment: grids must be nonempty");
  for (int n : n_grid) {
    if (n < 13) throw Error("experiment: every n must be >= 13");
  }
  if (degree < 1) throw Error("experiment: degree must be >= 1");
  if (dt && !(*dt > 0.0)) throw Error("experiment: dt must be positive");
  bayes.validate();
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "system") {
        cfg.system = value;
      } else if (key == "n_grid") {
        cfg.n_grid.clear();
        for (const auto& v : split(value, ',')) cfg.n_grid.push_back(static_cast<int>(parse_int(v)));
      } else if (key == "snr_grid") {
        cfg.snr_grid.clear();
        for (const auto& v : split(value, ',')) cfg.snr_grid.push_back(parse_snr(v));
      } else if (key == "trials") {
        cfg.trials = static_cast<int>(parse_int(value));
      } else if (key == "degree") {
        cfg.degree = static_cast<int>(parse_int(value));
      } else if (key == "trig") {
        cfg.trig = parse_bool(value);
      } else if (key == "master_seed") {
        cfg.master_seed = std::stoull(value);
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else if (key == "dt") {
        cfg.dt = std::stod(value);
      } else if (key == "chains") {
        cfg.bayes.chains = static_cast<int>(parse_int(value));
      } else if (key == "iters") {
        cfg.bayes.iters = static_cast<int>(parse_int(value));
      } else if (key == "warmup") {
        cfg.bayes.warmup = static_cast<int>(parse_int(value));
      } else if (key == "ci_level") {
        cfg.bayes.ci_level = std::stod(value);
      } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_int(value));
      } else {
        throw ParseError("unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ParseError("config line " + std::to_string(lineno) + ": bad value for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig read_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_experiment_config(in);
}

std::uint64_t trial_seed(std::uint64_t master, int n, double snr_db, int trial) {
  std::uint64_t s = derive_seed(master, streams::kTrial, static_cast<std::uint64_t>(n));
  s = derive_seed(s, streams::kTrial, std::bit_cast<std::uint64_t>(snr_db));
  return derive_seed(s, streams::kTrial, static_cast<std::uint64_t>(trial));
}

TrialOutcome run_trial(const DynamicalSystem& sys, int n, double snr_db, std::uint64_t seed,
                       const ExperimentConfig& cfg, DiscoveredModel* model) {
  constexpr int kMaxIcAttempts = 20;
  TrialOutcome out;
  out.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const double dt = cfg.dt.value_or(sys.default_dt);
    std::optional<Trajectory> clean;
    for (int attempt = 0; attempt < kMaxIcAttempts && !clean; ++attempt) {
      out.ic_attempts = attempt + 1;
      const Vector ic = sample_initial_condition(
          sys, derive_seed(seed, streams::kInitialCondition, static_cast<std::uint64_t>(attempt)));
      try {
        clean = simulate(sys, ic, dt, n);
      } catch (const IntegrationError&) {
      }
    }
    if (!clean) throw IntegrationError("every sampled initial condition diverged");
    const Trajectory noisy = add_noise(*clean, {snr_db, derive_seed(seed, streams::kNoise)});
    DiscoverOptions opts;
    opts.degree = cfg.degree;
    opts.trig = cfg.trig;
    opts.bayes = cfg.bayes;
    opts.seed = seed;
    opts.snr_db = snr_db;
    DiscoveredModel found = discover(noisy, opts);
    out.success = compare_truth(found, sys);
    for (const auto& eq : found.equations) {
      if (eq.error && out.error.empty()) out.error = *eq.error;
    }
    if (model) *model = std::move(found);
  } catch (const std::exception& e) {
    out.success = false;
    out.error = e.what();
  }
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

int worker_count(const ExperimentConfig& cfg) {
  int workers = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ARGOSKIT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) workers = workers > 0 ? std::min(workers, cap) : cap;
  }
  return std::max(1, workers);
}

std::string cell_file_name(const std::string& system, int n, double snr_db) {
  return system + "_n" + std::to_string(n) + "_snr" + snr_label(snr_db) + ".csv";
}

std::vector<TrialOutcome> read_cell_csv(const std::string& path) {
  std::vector<TrialOutcome> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    // A row cut short by an interrupted write is ignored and rerun.
    if (f.size() < 6) continue;
    try {
      TrialOutcome t;
      t.trial = static_cast<int>(parse_int(f[0]));
      t.seed = std::stoull(f[1]);
      t.success = f[2] == "1";
      t.runtime_seconds = std::stod(f[3]);
      t.ic_attempts = static_cast<int>(parse_int(f[4]));
      t.error = f[5];
      out.push_back(t);
    } catch (const std::exception&) {
    }
  }
  return out;
}

SuccessTable run_experiment(const ExperimentConfig& cfg, const TrialCallback& on_trial) {
  cfg.validate();
  const DynamicalSystem sys = builtin_system(cfg.system);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw Error("cannot create " + cfg.out_dir + ": " + ec.message());

  struct Cell {
    int n;
    double snr;
    std::string path;
    std::map<int, TrialOutcome> done;
  };
  std::vector<Cell> cells;
  struct Task {
    std::size_t cell;
    int trial;
  };
  std::vector<Task> tasks;
  for (int n : cfg.n_grid) {
    for (double snr : cfg.snr_grid) {
      Cell c{n, snr, (fs::path(cfg.out_dir) / cell_file_name(cfg.system, n, snr)).string(), {}};
      for (auto& t : read_cell_csv(c.path)) {
        if (t.trial >= 0 && t.trial < cfg.trials) c.done[t.trial] = t;
      }
      if (!fs::exists(c.path)) {
        std::ofstream header(c.path);
        if (!header) throw Error("cannot write " + c.path);
        header << kCellHeader << '\n';
      }
      for (int t = 0; t < cfg.trials; ++t) {
        if (!c.done.count(t)) tasks.push_back({cells.size(), t});
      }
      cells.push_back(std::move(c));
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task task = tasks[i];
      Cell& cell = cells[task.cell];
      TrialOutcome r = run_trial(sys, cell.n, cell.snr,
                                 trial_seed(cfg.master_seed, cell.n, cell.snr, task.trial), cfg);
      r.trial = task.trial;
      std::lock_guard lock(mu);
      std::ofstream out(cell.path, std::ios::app);
      out << r.trial << ',' << r.seed << ',' << (r.success ? 1 : 0) << ','
          << format_double(r.runtime_seconds) << ',' << r.ic_attempts << ',' << sanitize(r.error)
          << '\n';
      if (!out) {
        if (!failure) failure = std::make_exception_ptr(Error("write failed: " + cell.path));
        next = tasks.size();
        return;
      }
      cell.done[r.trial] = r;
      if (on_trial) on_trial(cell.n, cell.snr, r);
    }
  };
  const int workers = std::min<int>(worker_count(cfg), static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SuccessTable table;
  for (const auto& c : cells) {
    SuccessRow row;
    row.n = c.n;
    row.snr_db = c.snr;
    row.trials = static_cast<int>(c.done.size());
    double runtime = 0.0;
    for (const auto& [_, t] : c.done) {
      row.successes += t.success ? 1 : 0;
      runtime += t.runtime_seconds;
    }
    row.success_rate = row.trials ? static_cast<double>(row.successes) / row.trials : 0.0;
    row.mean_runtime_seconds = row.trials ? runtime / row.trials : 0.0;
    table.rows.push_back(row);
  }
  std::ofstream summary(fs::path(cfg.out_dir) / "success_table.csv");
  write_success_table_csv(summary, table);
  return table;
}

void write_success_table_csv(std::ostream& out, const SuccessTable& table) {
  out << "n,snr_db,successes,trials,success_rate,mean_runtime_seconds\n";
  for (const auto& r : table.rows) {
    out << r.n << ',' << format_double(r.snr_db) << ',' << r.successes << ',' << r.trials << ','
        << format_double(r.success_rate) << ',' << format_double(r.mean_runtime_seconds) << '\n';
  }
}

void emit_plot_data(const SuccessTable& table, const std::string& path,
                    const std::string& method) {
  if (table.rows.empty()) throw Error("emit_plot_data: empty table");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "n,snr_db,success_rate,method\n";
  for (const auto& r : table.rows) {
    out << r.n << ',' << (std::isinf(r.snr_db) ? "inf" : format_double(r.snr_db)) << ','
        << format_double(r.success_rate) << ',' << method << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

std::vector<PlotRow> read_plot_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (trim(line) != "n,snr_db,success_rate,method") throw ParseError(path + ": unexpected header");
  std::vector<PlotRow> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw ParseError(path + ": expected 4 fields");
    try {
      out.push_back({static_cast<int>(parse_int(f[0])), parse_snr(f[1]), std::stod(f[2]), f[3]});
    } catch (const std::logic_error&) {
      throw ParseError(path + ": bad row '" + line + "'");
    }
  }
  return out;
}

}  // namespace argoskit
