#include "convex_order/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "convex_order/error.hpp"

namespace convex_order::io {

namespace {

struct Line {
  int number;
  std::string_view text;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Non-blank, non-comment lines with their 1-based numbers.
std::vector<Line> significant_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    const std::string_view t = trim(raw);
    if (!t.empty() && t.front() != '#') out.push_back({number, t});
  }
  return out;
}

[[noreturn]] void malformed(const Line& line, const std::string& what) {
  fail(ErrorCode::kMalformedInput, fmt::format("line {}: {}", line.number, what));
}

double parse_number(std::string_view field, const Line& line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double x = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty())
    malformed(line, fmt::format("'{}' is not a number", field));
  if (!std::isfinite(x)) malformed(line, "non-finite value");
  return x;
}

std::vector<double> parse_row(const Line& line) {
  std::vector<double> out;
  std::string_view rest = line.text;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(parse_number(rest.substr(0, comma), line));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

// Value of a `key=value` header line, or nullopt when the line is not one.
std::optional<std::string_view> header_value(const Line& line, std::string_view key) {
  if (line.text.substr(0, key.size()) != key) return std::nullopt;
  std::string_view rest = trim(line.text.substr(key.size()));
  if (rest.empty() || rest.front() != '=') return std::nullopt;
  return trim(rest.substr(1));
}

std::vector<Line> nonempty(std::string_view text, std::string_view what) {
  auto lines = significant_lines(text);
  if (lines.empty()) fail(ErrorCode::kMalformedInput, fmt::format("empty {} file", what));
  return lines;
}

template <class F>
auto with_path(const std::filesystem::path& path, F&& parse) {
  const std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMalformedInput) throw;
    std::string_view what = e.what();
    what.remove_prefix(std::min(what.size(), to_string(e.code()).size() + 2));
    fail(ErrorCode::kMalformedInput, fmt::format("{}: {}", path.string(), what));
  }
}

}  // namespace

std::string_view to_string(InputFormat f) noexcept {
  switch (f) {
    case InputFormat::kSamples: return "samples";
    case InputFormat::kHistogram: return "histogram";
    case InputFormat::kCallSheet: return "call-sheet";
  }
  return "unknown";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMalformedInput, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

InputFormat detect_format(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = significant_lines(text);
  if (lines.empty()) fail(ErrorCode::kMalformedInput, fmt::format("'{}' is empty", path.string()));
  if (header_value(lines.front(), "dim")) return InputFormat::kSamples;
  if (header_value(lines.front(), "maturity")) return InputFormat::kCallSheet;
  return InputFormat::kHistogram;
}

DiscreteMeasure parse_samples(std::string_view text) {
  const auto lines = nonempty(text, "sample");
  const auto dim_text = header_value(lines.front(), "dim");
  if (!dim_text) malformed(lines.front(), "expected header dim=<d>");
  const double dim_value = parse_number(*dim_text, lines.front());
  if (dim_value < 1 || dim_value != std::floor(dim_value) || dim_value > 64)
    malformed(lines.front(), "dim must be a positive integer");
  const auto dim = static_cast<Eigen::Index>(dim_value);
  if (lines.size() < 2) fail(ErrorCode::kMalformedInput, "sample file has no points");

  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  PointMatrix points(n, dim);
  Eigen::VectorXd weights(n);
  std::optional<bool> weighted;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Line& line = lines[static_cast<std::size_t>(i) + 1];
    const auto row = parse_row(line);
    const auto cols = static_cast<Eigen::Index>(row.size());
    if (cols != dim && cols != dim + 1) malformed(line, fmt::format("expected {} or {} fields", dim, dim + 1));
    const bool has_weight = cols == dim + 1;
    if (weighted && *weighted != has_weight) malformed(line, "weight column present on some rows only");
    weighted = has_weight;
    for (Eigen::Index j = 0; j < dim; ++j) points(i, j) = row[static_cast<std::size_t>(j)];
    weights[i] = has_weight ? row.back() : 1.0;
    if (weights[i] < 0.0) malformed(line, "negative weight");
  }
  if (!(weights.sum() > 0.0)) fail(ErrorCode::kMalformedInput, "weights sum to zero");
  return DiscreteMeasure(std::move(points), weights / weights.sum());
}

DiscreteMeasure parse_histogram(std::string_view text) {
  const auto lines = nonempty(text, "histogram");
  std::vector<double> x, m;
  for (const Line& line : lines) {
    const auto row = parse_row(line);
    if (row.size() != 2) malformed(line, "expected grid_point,mass");
    if (row[1] < 0.0) malformed(line, "negative mass");
    x.push_back(row[0]);
    m.push_back(row[1]);
  }
  double total = 0.0;
  for (double v : m) total += v;
  if (!(total > 0.0)) fail(ErrorCode::kMalformedInput, "histogram has no mass");
  for (double& v : m) v /= total;
  return DiscreteMeasure::on_line(x, m);
}

CallSheet parse_call_sheet(std::string_view text) {
  const auto lines = nonempty(text, "call sheet");
  const auto label = header_value(lines.front(), "maturity");
  if (!label) malformed(lines.front(), "expected header maturity=<label>");
  CallSheet s;
  s.maturity = std::string(*label);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = parse_row(lines[i]);
    if (row.size() != 2) malformed(lines[i], "expected strike,price");
    s.strikes.push_back(row[0]);
    s.prices.push_back(row[1]);
  }
  return s;
}

MarketPath parse_path(std::string_view text) {
  auto lines = nonempty(text, "path");
  if (lines.front().text.substr(0, 4) == "time") lines.erase(lines.begin());
  if (lines.empty()) fail(ErrorCode::kMalformedInput, "path file has no rows");
  std::vector<std::vector<double>> rows;
  for (const Line& line : lines) {
    rows.push_back(parse_row(line));
    if (rows.back().size() < 3) malformed(line, "expected time and at least two weights");
    if (rows.back().size() != rows.front().size()) malformed(line, "row length differs from the first row");
  }
  MarketPath p;
  p.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size() - 1));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    p.times.push_back(rows[t][0]);
    for (std::size_t j = 1; j < rows[t].size(); ++j)
      p.weights(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j - 1)) = rows[t][j];
  }
  return p;
}

DiscreteMeasure read_samples(const std::filesystem::path& path) {
  return with_path(path, [](std::string_view t) { return parse_samples(t); });
}
DiscreteMeasure read_histogram(const std::filesystem::path& path) {
  return with_path(path, [](std::string_view t) { return parse_histogram(t); });
}
CallSheet read_call_sheet(const std::filesystem::path& path) {
  return with_path(path, [](std::string_view t) { return parse_call_sheet(t); });
}
MarketPath read_path(const std::filesystem::path& path) {
  return with_path(path, [](std::string_view t) { return parse_path(t); });
}

LoadedMeasure read_measure(const std::filesystem::path& path) {
  switch (detect_format(path)) {
    case InputFormat::kSamples: return {read_samples(path), InputFormat::kSamples};
    case InputFormat::kHistogram: return {read_histogram(path), InputFormat::kHistogram};
    case InputFormat::kCallSheet: break;
  }
  fail(ErrorCode::kMalformedInput, fmt::format("'{}' is a call sheet, expected samples or a histogram", path.string()));
}

std::string number(double x) { return fmt::format("{:.17g}", x == 0.0 ? 0.0 : x); }

std::string Table::csv() const {
  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += number(row[j]);
    }
    out += '\n';
  }
  return out;
}

std::string samples_csv(const DiscreteMeasure& m) {
  std::string out = fmt::format("dim={}\n", m.dim());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    for (Eigen::Index j = 0; j < m.dim(); ++j) out += number(m.points()(i, j)) + ',';
    out += number(m.weight(i)) + '\n';
  }
  return out;
}

std::string path_csv(const MarketPath& p) {
  Table t;
  t.header.push_back("time");
  for (int j = 0; j < p.dim(); ++j) t.header.push_back(fmt::format("pi_{}", j + 1));
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::vector<double> row{p.times[i]};
    for (int j = 0; j < p.dim(); ++j) row.push_back(p.weights(static_cast<Eigen::Index>(i), j));
    t.rows.push_back(std::move(row));
  }
  return t.csv();
}

void Report::add(std::string key, std::string value) { fields_.emplace_back(std::move(key), std::move(value)); }

void Report::add_block(std::string name, Table table) { blocks_.emplace_back(std::move(name), std::move(table)); }

std::string Report::render() const {
  std::string out;
  for (const auto& [k, v] : fields_) out += fmt::format("{}: {}\n", k, v);
  for (const auto& [name, table] : blocks_) out += fmt::format("\n[{}]\n{}", name, table.csv());
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kMalformedInput, fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::kMalformedInput, fmt::format("failed writing '{}'", path.string()));
}

}  // namespace convex_order::io
