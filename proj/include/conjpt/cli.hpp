#pragma once

// Batch front end: a JSON config selects a problem and the numerics, a command
// runs one analysis and writes result.json plus CSV tables to an output directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "conjpt/conjugate.hpp"
#include "conjpt/cov.hpp"
#include "conjpt/oracle.hpp"
#include "conjpt/problem.hpp"

namespace conjpt::cli {

inline constexpr int kSchemaVersion = 1;

/// Bad config content. `pointer` is the JSON pointer of the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : std::runtime_error("config error at " + (pointer.empty() ? std::string("/") : pointer) + ": " + what),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

struct Numerics {
  int steps = 400;
  double box_radius = 5.0;
  int resolution = 41;
  double fd_step = 1e-2;
  double newton_tolerance = 1e-12;
  double singular_ratio = 1e-6;
  double coarse_ratio = 1e-3;
  double refine_tolerance = 1e-10;
  DetMethod det_method = DetMethod::pontryagin;
  std::uint64_t seed = 1;
};

struct CandidateInput {
  Vec z;
  Vec v;
};

struct RunConfig {
  std::string problem_name;
  ProblemSpec spec;
  std::optional<CovProblem> cov;
  Numerics numerics;

  // solve / sens
  std::optional<Vec> point;
  std::optional<Vec> direction;
  // scan box; kappa and oracle scan it when no explicit candidates are given
  ScanBox scan_box;
  std::vector<CandidateInput> candidates;
  // hmodel
  double p_radius = 2.0;
  int p_resolution = 5;
  // omega / boxcount
  OmegaOptions omega;
  bool trace = false;
  double trace_step = 0.02;
  // perturb
  GenericityOptions genericity;
  // boxcount
  std::vector<double> epsilons = {0.2, 0.1, 0.05};

  std::string text;
  std::uint64_t hash = 0;

  ConjugateOptions conjugate_options() const;
  OracleOptions oracle_options() const;
};

/// Parses config text. Throws ConfigError naming the JSON pointer at fault.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& bytes);

/// One double in the CSV number format: 17 significant digits, '.' decimal point.
std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(const std::vector<double>& values);
  /// Rows with text cells (labels, verdicts).
  void add_row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

struct Marker {
  Vec z;
  bool highlighted = false;
};

/// Filled sign map of det over the grid, its zero contour by marching squares,
/// and optional point markers. The grid must be two-dimensional.
std::string det_contour_svg(const DetGrid& grid, const std::vector<Marker>& markers);

struct RunFlags {
  bool plot = false;
  std::optional<int> threads;
};

std::vector<std::string> command_names();

/// Runs `command` and returns the process exit code: 0 success, 1 config error,
/// 2 numerical failure, 3 internal invariant violation. Diagnostics go to `err`.
int run(const std::string& command, const std::filesystem::path& config_path,
        const std::filesystem::path& output_dir, const RunFlags& flags, std::ostream& err);

}  // namespace conjpt::cli
