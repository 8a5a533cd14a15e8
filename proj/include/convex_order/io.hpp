#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convex_order/arbitrage.hpp"
#include "convex_order/fgp.hpp"
#include "convex_order/measures.hpp"

namespace convex_order::io {

/// Sample file: `dim=<d>` then one point per row, optionally followed by a
/// weight. Histogram file: rows of (grid_point, mass). Call sheet:
/// `maturity=<label>` then rows of (strike, price). Blank lines and lines
/// starting with '#' are skipped everywhere.
enum class InputFormat { kSamples, kHistogram, kCallSheet };

std::string_view to_string(InputFormat f) noexcept;

/// Decided by the first significant line. Throws kMalformedInput if the
/// file cannot be opened.
InputFormat detect_format(const std::filesystem::path& path);

DiscreteMeasure parse_samples(std::string_view text);
DiscreteMeasure parse_histogram(std::string_view text);
CallSheet parse_call_sheet(std::string_view text);
/// Header `time,pi_1,...,pi_d` (optional), then rows of time and weights.
MarketPath parse_path(std::string_view text);

std::string read_file(const std::filesystem::path& path);
DiscreteMeasure read_samples(const std::filesystem::path& path);
DiscreteMeasure read_histogram(const std::filesystem::path& path);
CallSheet read_call_sheet(const std::filesystem::path& path);
MarketPath read_path(const std::filesystem::path& path);

/// Samples or histogram, whichever the file holds; call sheets are refused.
struct LoadedMeasure {
  DiscreteMeasure measure;
  InputFormat format;
};
LoadedMeasure read_measure(const std::filesystem::path& path);

/// Shortest round-trip text for a double ("{:.17g}").
std::string number(double x);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string csv() const;
};

/// Samples layout with an explicit weight column; parse_samples reads it back.
std::string samples_csv(const DiscreteMeasure& m);
std::string path_csv(const MarketPath& p);

/// Text document of `key: value` lines followed by named CSV blocks, each
/// preceded by a blank line and introduced by `[name]`.
class Report {
 public:
  void add(std::string key, std::string value);
  void add(std::string key, double value) { add(std::move(key), number(value)); }
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }
  void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
  void add(std::string key, int value) { add(std::move(key), std::to_string(value)); }
  void add_block(std::string name, Table table);

  std::string render() const;

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
  std::vector<std::pair<std::string, Table>> blocks_;
};

/// Creates parent directories; throws kMalformedInput when writing fails.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace convex_order::io
