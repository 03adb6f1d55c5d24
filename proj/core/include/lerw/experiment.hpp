#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lerw/estimators.hpp"

namespace lerw {

inline constexpr const char* kVersion = "0.1.0";

// Experiment configuration: a name plus a key -> value-list map. Two
// on-disk formats parse to the same thing:
//   flat text: one key=value per line, '#' comments, repeated keys append
//   JSON: one object, scalars or arrays of scalars per key
// The canonical serialization (sorted keys, one value per line) feeds the
// config hash, so the two formats of the same config hash identically.
class Config {
 public:
  static Config from_text(const std::string& text);
  static Config from_json_text(const std::string& text);
  // dispatches on extension: .json -> JSON, anything else -> flat text
  static Config from_file(const std::string& path);

  const std::string& experiment() const { return experiment_; }

  bool has(const std::string& key) const;
  // replaces any existing values (CLI overrides)
  void set(const std::string& key, const std::string& value);

  // typed accessors; all failures raise InvalidParams naming the parameter
  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64_or(const std::string& key,
                           std::uint64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<std::int64_t> get_int_list_or(
      const std::string& key, const std::vector<std::int64_t>& fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<double> get_double_list_or(
      const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::vector<std::string>>& params() const {
    return params_;
  }

  // sorted key=value lines, experiment first; identical configs hash equal
  std::string canonical() const;
  std::uint64_t hash() const;  // FNV-1a 64 over canonical()

 private:
  const std::vector<std::string>& values_for(const std::string& key) const;

  std::string experiment_;
  std::map<std::string, std::vector<std::string>> params_;
};

struct RunManifest {
  std::string experiment;
  std::string version;
  std::uint64_t config_hash = 0;
  std::uint64_t master_seed = 0;
  int workers = 1;
  // every trial t in [0, trials_total) ran on RngStream(master_seed, t)
  std::uint64_t trials_total = 0;
  double wall_seconds = 0;  // the only time-dependent output field
  std::vector<std::string> outputs;
};

std::vector<std::string> experiment_names();

// Runs the named experiment and writes results.csv, summary.json and
// manifest.json into out_dir (created if missing). All numeric output is
// deterministic in (config, seed); wall_seconds lives only in the manifest.
// Unknown experiment name -> UnknownExperiment; parameter problems ->
// InvalidParams naming the parameter; write failures -> IoFailure.
RunManifest run_experiment(const Config& cfg, const std::string& out_dir);

// Turns a results.csv produced by run_experiment into x,y,yerr columns for
// plotting, applying the experiment's own transforms (log2 where the fit is
// log-scale). `kind` must equal the experiment tag embedded in the file;
// anything else, or a file whose columns do not match the kind's schema,
// raises SchemaMismatch. One output row per input data row.
void plot_data(const std::string& results_csv, const std::string& kind,
               std::ostream& os);

}  // namespace lerw
