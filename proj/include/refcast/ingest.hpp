#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <vector>

#include "refcast/json.hpp"

#include "refcast/core_model.hpp"
#include "refcast/csv.hpp"
#include "refcast/error.hpp"

namespace refcast {

enum class FileFormat { Csv, Json };

inline std::optional<FileFormat> parse_format(std::string_view text) {
  if (text == "csv") return FileFormat::Csv;
  if (text == "json") return FileFormat::Json;
  return std::nullopt;
}

/// Guess from the file extension; defaults to CSV.
inline FileFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".json" ? FileFormat::Json : FileFormat::Csv;
}

struct Issue {
  std::string record_id;
  std::string field;
  std::string message;

  friend bool operator==(const Issue&, const Issue&) = default;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool accepted() const noexcept { return errors.empty(); }
};

struct Dataset {
  std::vector<ProjectRecord> records;
  std::string source;
  int schema_version = 1;

  /// Structural equality; the source path is provenance, not content.
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.schema_version == b.schema_version && a.records == b.records;
  }
};

/// A dataset is only present when the report carries no errors.
struct LoadResult {
  std::optional<Dataset> dataset;
  ValidationReport report;

  bool ok() const noexcept { return dataset.has_value(); }
};

inline constexpr int kSchemaVersion = 1;

inline constexpr std::array<std::string_view, 15> kCsvColumns = {
    "id",           "project_type",     "stage",
    "year",         "currency",         "price_basis",
    "base_year",    "forecast_cost",    "actual_cost",
    "benefit_unit", "forecast_benefit", "actual_benefit",
    "forecast_duration_days", "actual_duration_days", "regime_tags"};

/// Overruns beyond this multiple of the forecast are flagged, not rejected.
inline constexpr double kSuspiciousOverrun = 20.0;

namespace detail {

inline std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) return std::nullopt;
  }
  return value;
}

using Fields = std::map<std::string, std::string, std::less<>>;

inline bool is_schema_column(std::string_view name) {
  return std::find(kCsvColumns.begin(), kCsvColumns.end(), name) !=
         kCsvColumns.end();
}

/// Turns one row of text cells into a record, appending to the report.
/// Returns nullopt when any error was recorded for the row.
inline std::optional<ProjectRecord> record_from_fields(const Fields& fields,
                                                       std::size_t row_index,
                                                       ValidationReport& report) {
  auto get = [&](std::string_view key) -> std::string_view {
    auto it = fields.find(key);
    return it == fields.end() ? std::string_view{} : std::string_view(it->second);
  };
  std::string id(get("id"));
  const std::string label = id.empty() ? "row " + std::to_string(row_index) : id;
  const std::size_t errors_before = report.errors.size();
  auto error = [&](std::string field, std::string message) {
    report.errors.push_back({label, std::move(field), std::move(message)});
  };
  auto warn = [&](std::string field, std::string message) {
    report.warnings.push_back({label, std::move(field), std::move(message)});
  };

  auto optional_double = [&](std::string_view key) -> std::optional<double> {
    auto text = get(key);
    if (text.empty()) return std::nullopt;
    auto value = parse_number<double>(text);
    if (!value) error(std::string(key), "not a number: '" + std::string(text) + "'");
    return value;
  };
  auto optional_int = [&](std::string_view key) -> std::optional<int> {
    auto text = get(key);
    if (text.empty()) return std::nullopt;
    auto value = parse_number<int>(text);
    if (!value) error(std::string(key), "not an integer: '" + std::string(text) + "'");
    return value;
  };

  if (id.empty()) error("id", "missing id");
  std::string project_type(get("project_type"));
  if (project_type.empty()) error("project_type", "missing project type");

  auto stage = parse_stage(get("stage"));
  if (!stage) error("stage", "unknown stage '" + std::string(get("stage")) + "'");

  auto year = optional_int("year");
  if (get("year").empty()) error("year", "missing year");

  std::string currency(get("currency"));
  if (currency.empty()) error("currency", "missing currency");
  auto basis = parse_price_basis(get("price_basis"));
  if (!basis) {
    error("price_basis", "price basis must be 'constant' or 'nominal'");
  }
  auto base_year = optional_int("base_year");
  if (basis == PriceBasis::Constant && get("base_year").empty()) {
    error("base_year", "constant prices require a base year");
  }
  if (basis == PriceBasis::Nominal && base_year) {
    error("base_year", "nominal prices carry no base year");
  }

  auto forecast_cost = optional_double("forecast_cost");
  if (get("forecast_cost").empty()) {
    error("forecast_cost", "missing forecast cost");
  } else if (forecast_cost && *forecast_cost < 0.0) {
    error("forecast_cost", "negative cost");
  } else if (forecast_cost && *forecast_cost == 0.0) {
    error("forecast_cost", "forecast cost must be positive");
  }
  auto actual_cost = optional_double("actual_cost");
  if (actual_cost && *actual_cost < 0.0) error("actual_cost", "negative cost");

  std::string benefit_unit(get("benefit_unit"));
  auto forecast_benefit = optional_double("forecast_benefit");
  auto actual_benefit = optional_double("actual_benefit");
  if (forecast_benefit && *forecast_benefit < 0.0) {
    error("forecast_benefit", "negative benefit");
  }
  if (actual_benefit && *actual_benefit < 0.0) error("actual_benefit", "negative benefit");
  if ((forecast_benefit || actual_benefit) && benefit_unit.empty()) {
    error("benefit_unit", "benefit values require a benefit unit");
  }
  if (forecast_benefit && *forecast_benefit == 0.0) {
    warn("forecast_benefit", "zero forecast benefit; shortfall undefined");
  }

  auto forecast_days = optional_int("forecast_duration_days");
  auto actual_days = optional_int("actual_duration_days");
  if (forecast_days && *forecast_days <= 0) {
    error("forecast_duration_days", "duration must be positive");
  }
  if (actual_days && *actual_days <= 0) {
    error("actual_duration_days", "duration must be positive");
  }

  std::set<std::string> tags;
  {
    std::string_view text = get("regime_tags");
    while (!text.empty()) {
      auto pos = text.find(';');
      auto tag = text.substr(0, pos);
      if (!tag.empty()) tags.emplace(tag);
      if (pos == std::string_view::npos) break;
      text.remove_prefix(pos + 1);
    }
  }

  if (report.errors.size() != errors_before) return std::nullopt;

  auto money = [&](double amount) {
    return Money(amount, currency, *basis,
                 *basis == PriceBasis::Constant ? base_year : std::nullopt);
  };
  ProjectRecord record{
      .id = id,
      .project_type = project_type,
      .stage = *stage,
      .year = *year,
      .forecast_cost = money(*forecast_cost),
      .actual_cost = actual_cost ? std::optional<Money>(money(*actual_cost))
                                 : std::nullopt,
      .benefit_unit = benefit_unit,
      .forecast_benefit = forecast_benefit,
      .actual_benefit = actual_benefit,
      .forecast_duration_days = forecast_days,
      .actual_duration_days = actual_days,
      .regime_tags = std::move(tags),
      .attributes = {},
  };
  for (const auto& [key, value] : fields) {
    if (!is_schema_column(key) && !value.empty()) record.attributes[key] = value;
  }
  if (record.actual_cost &&
      relative_deviation(record.forecast_cost.amount(),
                         record.actual_cost->amount()) > kSuspiciousOverrun) {
    warn("actual_cost", "cost overrun exceeds 20x the forecast");
  }
  return record;
}

/// Dataset-level checks: unique ids and a single currency/price basis.
inline void check_dataset(const std::vector<ProjectRecord>& records,
                          ValidationReport& report) {
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) {
      report.errors.push_back({r.id, "id", "duplicate id"});
    }
    if (!r.forecast_cost.same_unit(records.front().forecast_cost)) {
      report.errors.push_back(
          {r.id, "price_basis",
           "mixed basis: " + r.forecast_cost.unit_label() + " vs " +
               records.front().forecast_cost.unit_label()});
    }
  }
}

inline LoadResult finish(std::vector<std::optional<ProjectRecord>> parsed,
                         ValidationReport report, std::string source,
                         int schema_version) {
  std::vector<ProjectRecord> records;
  for (auto& r : parsed) {
    if (r) records.push_back(std::move(*r));
  }
  // Duplicate ids are detectable even when other rows failed.
  if (!records.empty()) check_dataset(records, report);
  if (parsed.empty()) report.warnings.push_back({"", "", "empty dataset"});
  LoadResult result{std::nullopt, std::move(report)};
  if (result.report.accepted()) {
    result.dataset = Dataset{std::move(records), std::move(source), schema_version};
  }
  return result;
}

inline int parse_schema_comment(const std::vector<std::string>& comments) {
  for (const auto& c : comments) {
    std::string_view text(c);
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    constexpr std::string_view key = "schema_version=";
    if (text.starts_with(key)) {
      auto v = parse_number<int>(text.substr(key.size()));
      if (!v) throw Error(ErrorCode::ParseError, "bad schema_version comment");
      return *v;
    }
  }
  return kSchemaVersion;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace detail

inline LoadResult parse_csv_dataset(std::string_view text, std::string source = {}) {
  auto doc = csv::parse(text);
  const int schema_version = detail::parse_schema_comment(doc.comments);
  if (doc.rows.empty()) {
    throw Error(ErrorCode::ParseError, "missing CSV header row");
  }
  const auto& header = doc.rows.front();
  for (auto required : {"id", "project_type", "stage", "year", "currency",
                        "price_basis", "forecast_cost"}) {
    if (std::find(header.begin(), header.end(), required) == header.end()) {
      throw Error(ErrorCode::ParseError,
                  std::string("CSV header lacks column '") + required + "'");
    }
  }
  std::vector<std::optional<ProjectRecord>> parsed;
  ValidationReport report;
  for (std::size_t i = 1; i < doc.rows.size(); ++i) {
    const auto& row = doc.rows[i];
    if (row.size() != header.size()) {
      throw Error(ErrorCode::ParseError,
                  "row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    detail::Fields fields;
    for (std::size_t c = 0; c < header.size(); ++c) fields[header[c]] = row[c];
    parsed.push_back(detail::record_from_fields(fields, i, report));
  }
  return detail::finish(std::move(parsed), std::move(report), std::move(source),
                        schema_version);
}

inline LoadResult parse_json_dataset(std::string_view text, std::string source = {}) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  int schema_version = kSchemaVersion;
  const Json* records = &doc;
  if (doc.is_object()) {
    if (doc.contains("schema_version")) {
      if (!doc["schema_version"].is_number_integer()) {
        throw Error(ErrorCode::ParseError, "schema_version must be an integer");
      }
      schema_version = doc["schema_version"].get<int>();
    }
    if (!doc.contains("records")) {
      throw Error(ErrorCode::ParseError, "JSON dataset lacks a 'records' array");
    }
    records = &doc["records"];
  }
  if (!records->is_array()) {
    throw Error(ErrorCode::ParseError, "JSON records must be an array");
  }
  std::vector<std::optional<ProjectRecord>> parsed;
  ValidationReport report;
  std::size_t index = 0;
  for (const auto& item : *records) {
    ++index;
    if (!item.is_object()) {
      throw Error(ErrorCode::ParseError,
                  "record " + std::to_string(index) + " is not an object");
    }
    detail::Fields fields;
    for (const auto& [key, value] : item.items()) {
      if (value.is_null()) continue;
      if (value.is_string()) {
        fields[key] = value.get<std::string>();
      } else if (value.is_number_float()) {
        fields[key] = detail::format_number(value.get<double>());
      } else if (key == "regime_tags" && value.is_array()) {
        std::string joined;
        for (const auto& tag : value) {
          if (!tag.is_string()) {
            throw Error(ErrorCode::ParseError, "regime_tags must hold strings");
          }
          auto t = tag.get<std::string>();
          if (t.find(';') != std::string::npos) {
            report.errors.push_back({item.value("id", ""), "regime_tags",
                                     "tag contains ';'"});
          }
          if (!joined.empty()) joined += ';';
          joined += t;
        }
        fields[key] = joined;
      } else {
        fields[key] = value.dump();
      }
    }
    parsed.push_back(detail::record_from_fields(fields, index, report));
  }
  return detail::finish(std::move(parsed), std::move(report), std::move(source),
                        schema_version);
}

inline LoadResult load_dataset(const std::filesystem::path& path, FileFormat format) {
  auto text = detail::read_file(path);
  return format == FileFormat::Csv ? parse_csv_dataset(text, path.string())
                                   : parse_json_dataset(text, path.string());
}

namespace detail {

inline std::string join_tags(const std::set<std::string>& tags) {
  std::string out;
  for (const auto& t : tags) {
    if (!out.empty()) out += ';';
    out += t;
  }
  return out;
}

inline std::vector<std::string> attribute_columns(const Dataset& d) {
  std::set<std::string> keys;
  for (const auto& r : d.records) {
    for (const auto& [k, v] : r.attributes) keys.insert(k);
  }
  return {keys.begin(), keys.end()};
}

}  // namespace detail

inline std::string to_csv(const Dataset& dataset) {
  std::string out = "# schema_version=" + std::to_string(dataset.schema_version) + "\n";
  const auto extra = detail::attribute_columns(dataset);
  csv::Row header(kCsvColumns.begin(), kCsvColumns.end());
  header.insert(header.end(), extra.begin(), extra.end());
  out += csv::format_row(header);

  auto num = [](const auto& opt) -> std::string {
    if (!opt) return {};
    if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, double>) {
      return detail::format_number(*opt);
    } else {
      return std::to_string(*opt);
    }
  };
  for (const auto& r : dataset.records) {
    const auto& fc = r.forecast_cost;
    csv::Row row = {
        r.id,
        r.project_type,
        std::string(to_string(r.stage)),
        std::to_string(r.year),
        fc.currency(),
        std::string(to_string(fc.basis())),
        num(fc.base_year()),
        detail::format_number(fc.amount()),
        r.actual_cost ? detail::format_number(r.actual_cost->amount()) : "",
        r.benefit_unit,
        num(r.forecast_benefit),
        num(r.actual_benefit),
        num(r.forecast_duration_days),
        num(r.actual_duration_days),
        detail::join_tags(r.regime_tags),
    };
    for (const auto& key : extra) {
      auto it = r.attributes.find(key);
      row.push_back(it == r.attributes.end() ? "" : it->second);
    }
    out += csv::format_row(row);
  }
  return out;
}

inline Json record_to_json(const ProjectRecord& r) {
  Json j;
  const auto& fc = r.forecast_cost;
  j["id"] = r.id;
  j["project_type"] = r.project_type;
  j["stage"] = to_string(r.stage);
  j["year"] = r.year;
  j["currency"] = fc.currency();
  j["price_basis"] = to_string(fc.basis());
  if (fc.base_year()) j["base_year"] = *fc.base_year();
  j["forecast_cost"] = fc.amount();
  if (r.actual_cost) j["actual_cost"] = r.actual_cost->amount();
  if (!r.benefit_unit.empty()) j["benefit_unit"] = r.benefit_unit;
  if (r.forecast_benefit) j["forecast_benefit"] = *r.forecast_benefit;
  if (r.actual_benefit) j["actual_benefit"] = *r.actual_benefit;
  if (r.forecast_duration_days) j["forecast_duration_days"] = *r.forecast_duration_days;
  if (r.actual_duration_days) j["actual_duration_days"] = *r.actual_duration_days;
  j["regime_tags"] = r.regime_tags;
  for (const auto& [k, v] : r.attributes) j[k] = v;
  return j;
}

inline std::string to_json_text(const Dataset& dataset) {
  Json doc;
  doc["schema_version"] = dataset.schema_version;
  auto records = Json::array();
  for (const auto& r : dataset.records) records.push_back(record_to_json(r));
  doc["records"] = std::move(records);
  return doc.dump(2) + "\n";
}

/// Concurrent saves to the same path are a caller error.
inline void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                         FileFormat format) {
  detail::write_file(path, format == FileFormat::Csv ? to_csv(dataset)
                                                     : to_json_text(dataset));
}

}  // namespace refcast
