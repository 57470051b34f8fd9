#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qtraj/config.hpp"
#include "qtraj/ensemble.hpp"

namespace qtraj {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 17 significant digits, general notation.
std::string format_number(double v);

/// Writes `tau,<observable>,stderr` rows in ascending tau.
void emit_csv(const EnsembleStats& stats, const std::string& observable, const std::filesystem::path& path);

/// One CSV per observable, named <prefix>_<observable>.csv. Returns the paths.
std::vector<std::filesystem::path> emit_all_csv(const EnsembleStats& stats, const std::filesystem::path& dir,
                                                const std::string& prefix);

/// Key-value text accompanying every output set.
struct RunManifest {
  std::vector<Setting> entries;

  void add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) { add(std::move(key), format_number(value)); }
  void write(const std::filesystem::path& path) const;
};

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> err;  // optional; drawn as a +-err band
  bool dashed = false;
};

/// Minimal SVG line plot with axes and a legend.
void write_svg_plot(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                    const std::vector<PlotSeries>& series);

}  // namespace qtraj
