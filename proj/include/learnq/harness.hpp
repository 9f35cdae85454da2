#pragma once

// Experiment plumbing shared by the command-line tool and the tests.

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace learnq::harness {

/// Bad flags, unknown keys or malformed values. Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulation audit or bound check failed. Exit code 3.
class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SummaryStats {
  double mean = 0.0;
  double se = 0.0;    // sample sd / sqrt(count); 0 for one sample
  double ci95 = 0.0;  // 1.96 se
  long count = 0;
};

/// Throws std::invalid_argument on an empty sample.
SummaryStats summarize(const std::vector<double>& samples);

/// key=value pairs. Later assignments win.
class ParamMap {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  /// Copies every entry of `over` on top of this map.
  void merge(const ParamMap& over);

  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<long> get_longs(const std::string& key, const std::vector<long>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Throws UsageError naming the first key outside `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Lines of key=value; blank lines and '#' comments are skipped.
ParamMap read_config(const std::string& path);
ParamMap parse_config(const std::string& text);

/// Fixed-format CSV emission so identical inputs give identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& names);
  CsvWriter& field(const std::string& s);
  CsvWriter& field(double v);
  CsvWriter& field(long v);
  CsvWriter& field(int v) { return field(static_cast<long>(v)); }
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

std::string format_double(double v);

struct ExperimentSpec {
  std::string subcommand;
  ParamMap params;
  long replications = 1;
  std::uint64_t seed = 1;
  std::string out;  // main CSV path; summary goes next to it
};

/// out = "dir/name.csv" -> "dir/name_summary.csv"; no extension gets ".csv"
std::string summary_path(const std::string& out);

struct ExperimentResult {
  std::string csv_path;
  std::string summary_path;
  std::vector<std::pair<std::string, SummaryStats>> summary;
};

/// Keys each subcommand accepts (besides the common flags).
std::vector<std::string> subcommands();
std::vector<std::string> known_keys(const std::string& subcommand);

/// Runs the named driver over all replications and writes both files.
ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace learnq::harness
