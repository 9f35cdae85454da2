#include "learnq/harness.hpp"

#include "learnq/admission.hpp"
#include "learnq/balance.hpp"
#include "learnq/blackwell.hpp"
#include "learnq/lindley.hpp"
#include "learnq/parallel.hpp"
#include "learnq/regret.hpp"
#include "learnq/switched_network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace learnq::harness {

SummaryStats summarize(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("summarize: empty sample");
  SummaryStats s;
  s.count = static_cast<long>(samples.size());
  for (const double v : samples) s.mean += v;
  s.mean /= static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (const double v : samples) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.count - 1));
    s.se = sd / std::sqrt(static_cast<double>(s.count));
  }
  s.ci95 = 1.96 * s.se;
  return s;
}

// ---------------------------------------------------------------- parameters

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw UsageError("parameter '" + key + "': not a number: '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw UsageError("parameter '" + key + "': not an integer: '" + v + "'");
  }
}

}  // namespace

void ParamMap::merge(const ParamMap& over) {
  for (const auto& [k, v] : over.values_) values_[k] = v;
}

std::string ParamMap::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ParamMap::get_double(const std::string& key, double fallback) const {
  return has(key) ? to_double(key, values_.at(key)) : fallback;
}

long ParamMap::get_long(const std::string& key, long fallback) const {
  return has(key) ? to_long(key, values_.at(key)) : fallback;
}

std::vector<double> ParamMap::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& part : split(values_.at(key), ',')) out.push_back(to_double(key, part));
  if (out.empty()) throw UsageError("parameter '" + key + "': empty list");
  return out;
}

std::vector<long> ParamMap::get_longs(const std::string& key, const std::vector<long>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<long> out;
  for (const auto& part : split(values_.at(key), ',')) out.push_back(to_long(key, part));
  if (out.empty()) throw UsageError("parameter '" + key + "': empty list");
  return out;
}

std::vector<std::string> ParamMap::get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  auto out = split(values_.at(key), ',');
  if (out.empty()) throw UsageError("parameter '" + key + "': empty list");
  return out;
}

void ParamMap::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : values_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw UsageError("unknown parameter '" + k + "'");
    }
  }
}

ParamMap parse_config(const std::string& text) {
  ParamMap m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    m.set(key, trim(line.substr(eq + 1)));
  }
  return m;
}

ParamMap read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ----------------------------------------------------------------------- CSV

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void CsvWriter::header(const std::vector<std::string>& names) {
  for (const auto& n : names) field(n);
  end_row();
}

CsvWriter& CsvWriter::field(const std::string& s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }

CsvWriter& CsvWriter::field(long v) { return field(std::to_string(v)); }

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

std::string summary_path(const std::string& out) {
  const std::filesystem::path p(out);
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  return (p.parent_path() / (p.stem().string() + "_summary" + ext)).string();
}

// ------------------------------------------------------------------- drivers

namespace {

using Summary = std::vector<std::pair<std::string, SummaryStats>>;
using Driver = std::function<Summary(const ExperimentSpec&, CsvWriter&)>;

template <typename T>
std::vector<T> parallel_reps(long reps, const std::function<T(long)>& body) {
  std::vector<T> out(static_cast<std::size_t>(reps));
  parallel_for(reps, [&](long k) { out[static_cast<std::size_t>(k)] = body(k); });
  return out;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(to_double(path, tok));
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw UsageError("empty matrix file: " + path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw UsageError("ragged matrix file: " + path);
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// Tensor file: a header line "p q n", then p*q lines of n numbers in (i, j) row-major order.
PayoffTensor read_tensor(const std::string& path) {
  const auto rows = read_rows(path);
  if (rows.empty() || rows.front().size() != 3) throw UsageError("tensor file needs a 'p q n' header: " + path);
  const auto p = static_cast<Eigen::Index>(rows[0][0]);
  const auto q = static_cast<Eigen::Index>(rows[0][1]);
  const auto n = static_cast<Eigen::Index>(rows[0][2]);
  if (p < 1 || q < 1 || n < 1 || static_cast<Eigen::Index>(rows.size()) != p * q + 1) {
    throw UsageError("tensor file: expected p*q entry lines after the header: " + path);
  }
  std::vector<Eigen::VectorXd> entries;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (static_cast<Eigen::Index>(rows[k].size()) != n) throw UsageError("tensor file: entry of wrong length");
    entries.push_back(Eigen::Map<const Eigen::VectorXd>(rows[k].data(), n));
  }
  return PayoffTensor(p, q, entries);
}

Eigen::VectorXd to_vector(const std::string& key, const std::string& csv) {
  std::vector<double> v;
  for (const auto& part : split(csv, ',')) v.push_back(to_double(key, part));
  if (v.empty()) throw UsageError("parameter '" + key + "': empty vector");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// value | orthant | singleton:x,.. | halfspace:n,..;v | box:lo,..;hi,..
TargetSetd parse_target(const std::string& spec, const PayoffTensor& r) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "value") {
    if (r.dim() != 1) throw UsageError("target 'value' needs a one-dimensional payoff");
    const double v = solve_matrix_game(r.contract(Eigen::VectorXd::Ones(1))).value;
    return TargetSetd::half_space(Eigen::VectorXd::Ones(1), v);
  }
  if (kind == "orthant") return TargetSetd::nonpositive_orthant(r.dim());
  if (kind == "singleton") return TargetSetd::singleton(to_vector("target", body));
  const auto parts = split(body, ';');
  if (kind == "halfspace" && parts.size() == 2) {
    return TargetSetd::half_space(to_vector("target", parts[0]), to_double("target", parts[1]));
  }
  if (kind == "box" && parts.size() == 2) {
    return TargetSetd::box(to_vector("target", parts[0]), to_vector("target", parts[1]));
  }
  throw UsageError("unrecognised target: " + spec);
}

// uniform | fixed:j | weights:w,..
AdversaryRule parse_adversary_rule(const std::string& spec, Eigen::Index q) {
  if (spec == "uniform") {
    const MixedAction a = MixedAction::uniform(q);
    return [a](const GameHistory&, Rng&) { return a; };
  }
  if (spec.rfind("fixed:", 0) == 0) {
    const long j = to_long("adversary", spec.substr(6));
    if (j < 0 || j >= q) throw UsageError("adversary column out of range");
    const MixedAction a = MixedAction::pure(q, j);
    return [a](const GameHistory&, Rng&) { return a; };
  }
  if (spec.rfind("weights:", 0) == 0) {
    Eigen::VectorXd w = to_vector("adversary", spec.substr(8));
    if (w.size() != q) throw UsageError("adversary weights: wrong length");
    const MixedAction a = MixedAction::from_weights(w / w.sum());
    return [a](const GameHistory&, Rng&) { return a; };
  }
  throw UsageError("unrecognised adversary: " + spec);
}

Summary blackwell_driver(const ExperimentSpec& spec, CsvWriter& csv) {
  const ParamMap& p = spec.params;
  const long rounds = p.get_long("rounds", 1000);
  if (rounds < 1) throw UsageError("rounds must be >= 1");
  const std::string preset = p.get("preset", "scalar");
  std::optional<PayoffTensor> tensor;
  std::optional<TargetSetd> target;
  AdversaryRule adversary;
  if (p.has("tensor")) {
    tensor = read_tensor(p.get("tensor", ""));
    target = parse_target(p.get("target", tensor->dim() == 1 ? "value" : "orthant"), *tensor);
    adversary = parse_adversary_rule(p.get("adversary", "uniform"), tensor->adversary_actions());
  } else if (preset == "scalar") {
    Eigen::MatrixXd m(2, 2);
    m << 3, 0, 1, 2;
    tensor = PayoffTensor::from_scalar(m);
    target = parse_target(p.get("target", "value"), *tensor);
    adversary = parse_adversary_rule(p.get("adversary", "uniform"), 2);
  } else if (preset == "crossbar") {
    const auto s = switching::crossbar();
    auto e = switching::embed_as_game(s, 1);
    tensor = e.tensor;
    target = e.target;
    // Schedules sorted as (0,0), (0,1), (1,0): mean arrivals (0.4, 0.4).
    adversary = switching::embedded_adversary(s, to_vector("weights", p.get("weights", "0.2,0.4,0.4")));
  } else {
    throw UsageError("unknown preset: " + preset);
  }
  if (target->dim() != tensor->dim()) throw UsageError("target dimension does not match the payoff");

  const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(tensor->dim());
  const auto runs = parallel_reps<std::vector<double>>(spec.replications, [&](long k) {
    return run_game(*tensor, *target, blackwell_rule(), adversary, rounds,
                    derive_seed(spec.seed, static_cast<std::uint64_t>(k)), q0)
        .distance;
  });
  const DistanceEstimate est = aggregate_distances(runs, tensor->r_max());
  csv.header({"t", "distance_estimate", "bound"});
  for (long t = 1; t <= rounds; ++t) {
    const auto i = static_cast<std::size_t>(t - 1);
    csv.field(t).field(est.rms_distance[i]).field(est.bound[i]).end_row();
  }
  std::vector<double> finals;
  for (const auto& r : runs) finals.push_back(r.back());
  return {{"final_distance", summarize(finals)},
          {"final_rms_distance", summarize({est.rms_distance.back()})},
          {"final_bound", summarize({est.bound.back()})}};
}

Summary regret_driver(const ExperimentSpec& spec, CsvWriter& csv) {
  const ParamMap& p = spec.params;
  Eigen::MatrixXd r;
  if (p.has("rewards")) {
    r = read_matrix(p.get("rewards", ""));
  } else {
    r.resize(3, 3);
    r << 0, -1, 1, 1, 0, -1, -1, 1, 0;
  }
  const ScalarGame game(r);
  const long rounds = p.get_long("rounds", 1000);
  if (rounds < 1) throw UsageError("rounds must be >= 1");
  const auto adversary = make_adversary(p.get("adversary", "cyclic"), p.get_long("column", 0));
  const auto traces = parallel_reps<RegretTrace>(spec.replications, [&](long k) {
    return hg_play(game, adversary, rounds, derive_seed(spec.seed, static_cast<std::uint64_t>(k)));
  });
  const double T = static_cast<double>(rounds);
  csv.header({"replication", "T", "realized_regret", "expected_regret", "bound"});
  std::vector<double> realized, expected;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    realized.push_back(regret(traces[k]) / T);
    expected.push_back(expected_regret(traces[k]) / T);
    csv.field(static_cast<long>(k)).field(rounds).field(realized.back()).field(expected.back());
    csv.field(blackwell_bound(traces[k].r_max, rounds)).end_row();
  }
  return {{"realized_regret_per_round", summarize(realized)}, {"expected_regret_per_round", summarize(expected)}};
}

switching::ArrivalModel parse_arrivals(const std::string& spec, Eigen::Index q) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "bernoulli") {
    const Eigen::VectorXd rates = to_vector("arrivals", body);
    if (rates.size() != q) throw UsageError("arrivals: expected one rate per queue");
    return switching::ArrivalModel::bernoulli(rates);
  }
  if (kind == "sequence") {
    std::vector<Eigen::VectorXi> seq;
    for (const auto& vec : split(body, ';')) {
      const Eigen::VectorXd v = to_vector("arrivals", vec);
      if (v.size() != q) throw UsageError("arrivals: sequence vector of wrong length");
      seq.push_back(v.cast<int>());
    }
    return switching::ArrivalModel::sequence(std::move(seq));
  }
  throw UsageError("unrecognised arrivals: " + spec);
}

Summary maxweight_driver(const ExperimentSpec& spec, CsvWriter& csv) {
  const ParamMap& p = spec.params;
  const switching::ScheduleSet s =
      p.has("schedules") ? switching::read_schedule_set(p.get("schedules", "")) : switching::crossbar();
  std::string default_rates;
  for (Eigen::Index j = 0; j < s.queues(); ++j) default_rates += (j ? "," : "") + std::string("0.4");
  const auto arrivals = parse_arrivals(p.get("arrivals", "bernoulli:" + default_rates), s.queues());
  switching::Policy policy;
  policy.kind = switching::parse_policy(p.get("policy", "mw"));
  if (p.has("mu")) policy.mu = to_vector("mu", p.get("mu", ""));
  const long rounds = p.get_long("rounds", 10000);
  const long stride = p.get_long("stride", 1);
  if (rounds < 1 || stride < 1) throw UsageError("rounds and stride must be >= 1");

  const auto traces = parallel_reps<switching::SwitchTrace>(spec.replications, [&](long k) {
    return switching::simulate(s, arrivals, policy, rounds, derive_seed(spec.seed, static_cast<std::uint64_t>(k)), k == 0);
  });
  std::vector<std::string> cols{"t"};
  for (Eigen::Index j = 0; j < s.queues(); ++j) cols.push_back("Q_" + std::to_string(j + 1));
  cols.insert(cols.end(), {"total", "drift"});
  csv.header(cols);
  const auto& path = traces.front().queue;
  for (std::size_t t = 0; t < path.size(); t += static_cast<std::size_t>(stride)) {
    csv.field(static_cast<long>(t));
    for (Eigen::Index j = 0; j < s.queues(); ++j) csv.field(path[t](j));
    csv.field(static_cast<long>(path[t].sum()));
    const double drift = t == 0 ? 0.0 : path[t].cast<double>().squaredNorm() - path[t - 1].cast<double>().squaredNorm();
    csv.field(drift).end_row();
  }
  const double eps = switching::interior_margin(arrivals.mean(1), s);
  std::vector<double> avg, c, bound, growth;
  for (const auto& tr : traces) {
    avg.push_back(tr.time_avg_total);
    c.push_back(tr.c_estimate);
    bound.push_back(switching::drift_bound(tr.c_estimate, eps));
    growth.push_back(static_cast<double>(tr.final_queue.sum()) / static_cast<double>(rounds));
  }
  return {{"time_avg_total", summarize(avg)},
          {"c_estimate", summarize(c)},
          {"interior_margin", summarize({eps})},
          {"drift_bound", summarize(bound)},
          {"final_total_per_slot", summarize(growth)}};
}

Summary lindley_driver(const ExperimentSpec& spec, CsvWriter& csv) {
  const ParamMap& p = spec.params;
  lindley::SeparableModel m;
  m.dim = p.get_long("dim", 2);
  m.D = p.get_double("D", 1.0);
  m.w_norm = p.get_double("wnorm", 2.0);
  m.tau_star = p.get_double("tau_star", 1.0);
  m.tau_zero = p.get_double("tau0", 2.0);
  const double rate = p.get_double("rate", 0.8);
  const long customers = p.get_long("customers", 1000);
  const double alpha = p.get_double("alpha", 1.0);
  if (customers < 1 || m.dim < 1) throw UsageError("customers and dim must be >= 1");

  const auto runs = parallel_reps<lindley::QueueRun>(spec.replications, [&](long k) {
    Rng rng(derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(k)), 7));
    const Eigen::VectorXd w_star = lindley::draw_truth(m, rng);
    const auto stream = lindley::separable_stream(m, w_star, customers, rng);
    return lindley::run_queue_with_perceptron(m, stream, w_star, rate,
                                              derive_seed(spec.seed, static_cast<std::uint64_t>(k)), alpha);
  });
  csv.header({"t", "W_pi", "W_star", "gap", "regret", "mistakes"});
  const auto& r0 = runs.front();
  long mistakes = 0;
  double regret = 0.0;
  std::size_t next_mistake = 0;
  for (long t = 0; t <= r0.trace.customers(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    csv.field(t).field(r0.trace.w_pi[i]).field(r0.trace.w_star[i]).field(r0.trace.w_pi[i] - r0.trace.w_star[i]);
    csv.field(regret).field(mistakes).end_row();
    if (t < r0.trace.customers()) {
      regret += r0.trace.tau_pi[i] - r0.trace.tau_star;
      if (next_mistake < r0.learner.mistake_rounds.size() && r0.learner.mistake_rounds[next_mistake] == t) {
        ++mistakes;
        ++next_mistake;
      }
    }
  }
  std::vector<double> mist, bound, gap, gap_bound, coupled;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    double excess = 0.0;
    for (std::size_t t = 0; t < r.gap.gap.size(); ++t) {
      excess = std::max(excess, r.gap.gap[t] - r.gap.regret_window[t]);
    }
    // Inputs here are not lattice-valued, so allow rounding in the pathwise sum.
    if (excess > 1e-9) throw AssertionFailure("waiting-gap inequality violated in replication " + std::to_string(k));
    if (static_cast<double>(r.learner.mistakes) > r.learner.bound) {
      throw AssertionFailure("mistake bound exceeded in replication " + std::to_string(k));
    }
    if (!r.gap_within_bound || !r.coupled_after_t_prime) {
      throw AssertionFailure("waiting-time coupling failed in replication " + std::to_string(k));
    }
    mist.push_back(static_cast<double>(r.learner.mistakes));
    bound.push_back(r.learner.bound);
    gap.push_back(r.max_gap);
    gap_bound.push_back(r.gap_bound);
    coupled.push_back(static_cast<double>(r.t_prime));
  }
  return {{"mistakes", summarize(mist)},
          {"mistake_bound", summarize(bound)},
          {"max_wait_gap", summarize(gap)},
          {"wait_gap_bound", summarize(gap_bound)},
          {"coupling_index", summarize(coupled)}};
}

Summary admission_driver(const ExperimentSpec& spec, CsvWriter& csv) {
  const ParamMap& p = spec.params;
  const double budget = p.get_double("p", 0.3);
  std::vector<double> lambdas = p.get_doubles("lambda", {});
  for (const double lt : p.get_doubles("lambda_tilde", {})) lambdas.push_back(admission::lambda_from_tilde(lt, budget));
  if (lambdas.empty()) lambdas.push_back(0.8);
  const auto policies = p.get_strings("policy", {"threshold", "greedy-empty"});
  const double horizon = p.get_double("horizon", 1e5);
  const bool scaled_window = p.has("window_scale");
  const double L = p.get_double("L", 0.0);

  struct Job {
    double lambda;
    admission::Policy policy;
  };
  std::vector<Job> jobs;
  for (const double lam : lambdas)
    for (const auto& name : policies) jobs.push_back({lam, admission::parse_policy(name)});

  const long reps = spec.replications;
  const auto results = parallel_reps<admission::SimTrace>(static_cast<long>(jobs.size()) * reps, [&](long idx) {
    const Job& job = jobs[static_cast<std::size_t>(idx / reps)];
    admission::AdmissionConfig c;
    c.lambda = job.lambda;
    c.p = budget;
    c.horizon = horizon;
    c.slack = p.get_double("slack", 0.05);
    c.budget_grace = p.get_double("budget_grace", 100.0);
    c.L = scaled_window ? p.get_double("window_scale", 5.0) *
                              std::log(1.0 / (1.0 - admission::tilde_from_lambda(job.lambda, budget)))
                        : L;
    c.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(idx % reps));
    c.validate();
    switch (job.policy) {
      case admission::Policy::Threshold:
        return admission::threshold_run(c, p.get_long("k", admission::min_feasible_threshold(c.lambda, c.p)));
      case admission::Policy::GreedyEmpty: return admission::greedy_empty_run(c);
      case admission::Policy::Windowed: return admission::windowed_run(c);
    }
    throw std::logic_error("unreachable");
  });

  csv.header({"lambda", "policy", "EQ", "EQ_ci", "diversion_rate"});
  Summary summary;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    std::vector<double> eq, div;
    for (long k = 0; k < reps; ++k) {
      const auto& tr = results[j * static_cast<std::size_t>(reps) + static_cast<std::size_t>(k)];
      if (jobs[j].policy == admission::Policy::GreedyEmpty && tr.rejected_nonempty != 0) {
        throw AssertionFailure("greedy-empty diverted an arrival at a nonempty queue");
      }
      eq.push_back(tr.mean_queue);
      div.push_back(tr.diversion_rate);
    }
    const auto s_eq = summarize(eq);
    const auto s_div = summarize(div);
    const std::string name = admission::policy_name(jobs[j].policy);
    csv.field(jobs[j].lambda).field(name).field(s_eq.mean).field(s_eq.ci95).field(s_div.mean).end_row();
    const std::string tag = "[lambda=" + format_double(jobs[j].lambda) + ";policy=" + name + "]";
    summary.push_back({"EQ" + tag, s_eq});
    summary.push_back({"diversion_rate" + tag, s_div});
  }
  return summary;
}

Summary balance_driver(const ExperimentSpec& spec, CsvWriter& csv) {
  const ParamMap& p = spec.params;
  const bool regime_mode = p.has("regime");
  const std::vector<long> sizes = p.get_longs("n", regime_mode ? std::vector<long>{10, 50, 100, 500} : std::vector<long>{10});
  balance::RegimeParams rp;
  rp.lambda = p.get_double("lambda", rp.lambda);
  rp.message_ratio = p.get_double("message_ratio", rp.message_ratio);
  rp.high_message_c = p.get_long("c", rp.high_message_c);
  rp.constrained_c = rp.high_message_c;
  rp.constrained_r = p.get_double("r", rp.constrained_r);
  const double horizon = p.get_double("horizon", 2000.0);

  csv.header({"n", "r", "c", "mean_delay", "ci", "mem_hit_fraction"});
  Summary summary;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    balance::ClusterConfig c;
    if (regime_mode) {
      c = balance::regime_config(balance::parse_regime(p.get("regime", "")), sizes[i], rp);
    } else {
      c.n = sizes[i];
      c.lambda = rp.lambda;
      c.r = p.get_double("r", 1.0);
      c.c = p.get_long("c", 2);
    }
    c.horizon = horizon;
    c.burn_in = p.get_double("burn_in", 0.2);
    const auto runs = parallel_reps<balance::DelayStats>(spec.replications, [&](long k) {
      balance::ClusterConfig ck = c;
      ck.seed = derive_seed(derive_seed(spec.seed, i), static_cast<std::uint64_t>(k));
      return balance::simulate_cluster(ck);
    });
    std::vector<double> delay, hit;
    for (const auto& r : runs) {
      if (r.memory_overflows || r.busy_messages || r.idle_departures || r.negative_waits) {
        throw AssertionFailure("cluster audit failed at n = " + std::to_string(c.n));
      }
      delay.push_back(r.mean_wait);
      hit.push_back(r.memory_hit_fraction);
    }
    const auto sd = summarize(delay);
    const auto sh = summarize(hit);
    csv.field(c.n).field(c.r).field(c.c).field(sd.mean).field(sd.ci95).field(sh.mean).end_row();
    summary.push_back({"mean_delay[n=" + std::to_string(c.n) + "]", sd});
    summary.push_back({"mem_hit_fraction[n=" + std::to_string(c.n) + "]", sh});
  }
  return summary;
}

const std::map<std::string, std::pair<Driver, std::vector<std::string>>>& registry() {
  static const std::map<std::string, std::pair<Driver, std::vector<std::string>>> r{
      {"blackwell", {blackwell_driver, {"tensor", "target", "preset", "adversary", "weights", "rounds"}}},
      {"regret", {regret_driver, {"rewards", "adversary", "column", "rounds"}}},
      {"maxweight", {maxweight_driver, {"schedules", "arrivals", "policy", "mu", "rounds", "stride"}}},
      {"lindley", {lindley_driver, {"dim", "D", "wnorm", "tau_star", "tau0", "rate", "customers", "alpha"}}},
      {"admission",
       {admission_driver, {"lambda", "lambda_tilde", "p", "L", "window_scale", "slack", "budget_grace", "policy", "horizon", "k"}}},
      {"balance", {balance_driver, {"n", "lambda", "r", "c", "regime", "message_ratio", "horizon", "burn_in"}}},
  };
  return r;
}

}  // namespace

std::vector<std::string> subcommands() {
  std::vector<std::string> out;
  for (const auto& [name, entry] : registry()) out.push_back(name);
  return out;
}

std::vector<std::string> known_keys(const std::string& subcommand) {
  const auto it = registry().find(subcommand);
  if (it == registry().end()) throw UsageError("unknown subcommand: " + subcommand);
  return it->second.second;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const auto it = registry().find(spec.subcommand);
  if (it == registry().end()) throw UsageError("unknown subcommand: " + spec.subcommand);
  if (spec.replications < 1) throw UsageError("--reps must be >= 1");
  spec.params.require_known(it->second.second);

  ExperimentResult res;
  res.csv_path = spec.out.empty() ? spec.subcommand + ".csv" : spec.out;
  res.summary_path = summary_path(res.csv_path);
  std::ostringstream body;
  CsvWriter csv(body);
  try {
    res.summary = it->second.first(spec, csv);
  } catch (const UsageError&) {
    throw;
  } catch (const AssertionFailure&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto dir = std::filesystem::path(res.csv_path).parent_path();
  std::error_code ec;
  if (!dir.empty()) std::filesystem::create_directories(dir, ec);
  std::ofstream out(res.csv_path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + res.csv_path);
  out << body.str();
  std::ofstream sum(res.summary_path, std::ios::binary);
  if (!sum) throw UsageError("cannot write " + res.summary_path);
  CsvWriter sw(sum);
  sw.header({"metric", "count", "mean", "se", "ci95"});
  for (const auto& [name, s] : res.summary) sw.field(name).field(s.count).field(s.mean).field(s.se).field(s.ci95).end_row();
  return res;
}

}  // namespace learnq::harness
