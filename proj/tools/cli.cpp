#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "refcast/refcast.hpp"

namespace refcast::cli {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Output helpers

std::string format_scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "-";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
  return buf;
}

bool is_money(const Json& v) {
  return v.is_object() && v.contains("amount") && v.contains("currency") &&
         v.contains("basis");
}

std::string format_money(const Json& v) {
  std::string s = v.at("currency").get<std::string>() + " " + format_scalar(v.at("amount")) +
                  " [" + v.at("basis").get<std::string>();
  if (v.contains("base_year") && !v.at("base_year").is_null()) {
    s += " " + format_scalar(v.at("base_year"));
  }
  return s + "]";
}

std::string bold(const std::string& s, bool styled) {
  return styled ? "\033[1m" + s + "\033[0m" : s;
}

void render_value(std::ostringstream& os, const std::string& key, const Json& v, int indent,
                  bool styled);

void render_object(std::ostringstream& os, const Json& obj, int indent, bool styled) {
  for (const auto& [key, value] : obj.items()) {
    if (indent == 0 && key == "command") continue;
    render_value(os, key, value, indent, styled);
  }
}

std::string inline_object(const Json& obj) {
  std::string line;
  for (const auto& [k, v] : obj.items()) {
    if (!line.empty()) line += ", ";
    line += k + "=";
    if (is_money(v)) {
      line += format_money(v);
    } else if (v.is_structured()) {
      line += v.dump();
    } else {
      line += format_scalar(v);
    }
  }
  return line;
}

void render_value(std::ostringstream& os, const std::string& key, const Json& v, int indent,
                  bool styled) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (is_money(v)) {
    os << pad << bold(key, styled) << ": " << format_money(v) << "\n";
  } else if (v.is_object()) {
    os << pad << bold(key, styled) << ":\n";
    render_object(os, v, indent + 1, styled);
  } else if (v.is_array()) {
    const bool scalars =
        std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_primitive(); });
    if (v.empty()) {
      os << pad << bold(key, styled) << ": (none)\n";
    } else if (scalars) {
      std::string line;
      for (const auto& e : v) {
        if (!line.empty()) line += ", ";
        line += format_scalar(e);
      }
      os << pad << bold(key, styled) << ": " << line << "\n";
    } else {
      os << pad << bold(key, styled) << ":\n";
      for (const auto& e : v) {
        std::string line;
        if (e.is_object()) {
          line = inline_object(e);
        } else {
          for (const auto& x : e) line += (line.empty() ? "" : "  ") + format_scalar(x);
        }
        os << pad << "  - " << line << "\n";
      }
    }
  } else {
    os << pad << bold(key, styled) << ": " << format_scalar(v) << "\n";
  }
}

std::string render_report(const Json& r, bool styled) {
  std::ostringstream os;
  const auto& s1 = r.at("reference_class");
  const auto& s2 = r.at("distribution");
  const auto& s3 = r.at("intuitive_estimate");
  const auto& s4 = r.at("reliability");
  const auto& s5 = r.at("corrected_forecast");
  os << bold("Reference class forecast", styled) << "\n\n";
  os << bold("1. Reference class", styled) << "\n";
  os << "   class: " << format_scalar(s1.at("name")) << " (" << format_scalar(s1.at("members"))
     << " members, metric " << format_scalar(s1.at("metric")) << ")\n";
  for (const auto& w : s1.at("warnings")) os << "   warning: " << format_scalar(w) << "\n";
  os << "\n" << bold("2. Distribution of outcomes", styled) << "\n";
  for (auto key : {"n", "mean", "median", "min", "max", "stdev"}) {
    os << "   " << key << ": " << format_scalar(s2.at(key)) << "\n";
  }
  os << "\n" << bold("3. Intuitive estimate", styled) << "\n";
  os << "   " << format_scalar(s3.at("variable")) << ": " << format_scalar(s3.at("value"))
     << "\n";
  os << "\n" << bold("4. Reliability of the estimate", styled) << "\n";
  os << "   rho: " << format_scalar(s4.at("rho")) << " (" << format_scalar(s4.at("source"));
  if (s4.contains("n_pairs")) os << ", " << format_scalar(s4.at("n_pairs")) << " pairs";
  os << ")\n";
  for (const auto& w : s4.at("warnings")) os << "   warning: " << format_scalar(w) << "\n";
  os << "\n" << bold("5. Corrected estimate", styled) << "\n";
  os << "   class mean + rho x (intuitive - class mean) = " << format_scalar(s5.at("corrected"))
     << "\n";
  if (s5.contains("corrected_cost")) {
    os << "   corrected cost: " << format_money(s5.at("corrected_cost")) << "\n";
  }
  if (r.contains("budget")) {
    const auto& b = r.at("budget");
    os << "\n" << bold("Uplifted budget", styled) << "\n";
    os << "   acceptable overrun risk: " << format_scalar(b.at("risk")) << " ("
       << format_scalar(b.at("percentile")) << ")\n";
    os << "   base estimate: " << format_money(b.at("base")) << "\n";
    os << "   uplift: " << format_scalar(b.at("uplift")) << "\n";
    os << "   budget: " << format_money(b.at("budget")) << "\n";
    os << "   risk allowance: " << format_money(b.at("risk_allowance")) << "\n";
    for (const auto& w : b.at("warnings")) os << "   warning: " << format_scalar(w) << "\n";
  }
  return os.str();
}

Json money_json(const Money& m) {
  Json j{{"amount", m.amount()},
         {"currency", m.currency()},
         {"basis", std::string(to_string(m.basis()))}};
  j["base_year"] = m.base_year() ? Json(*m.base_year()) : Json(nullptr);
  return j;
}

std::string percentile_label(double risk) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%.10g", 100.0 * (1.0 - risk));
  return buf;
}

// ---------------------------------------------------------------------------
// Input helpers

Json read_json(const std::string& path) {
  const auto text = refcast::detail::read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

Dataset load_or_fail(const std::string& path, std::optional<FileFormat> format,
                     std::ostream& err) {
  auto result = load_dataset(path, format.value_or(format_from_path(path)));
  for (const auto& w : result.report.warnings) {
    err << "refcast: warning: " << (w.record_id.empty() ? "" : w.record_id + " ")
        << (w.field.empty() ? "" : w.field + ": ") << w.message << "\n";
  }
  if (!result.ok()) {
    for (const auto& e : result.report.errors) {
      err << "refcast: error[" << code_name(ErrorCode::ValidationFailed) << "]: " << e.record_id
          << " " << e.field << ": " << e.message << "\n";
    }
    throw Error(ErrorCode::ValidationFailed,
                std::to_string(result.report.errors.size()) + " validation error(s) in " + path);
  }
  return std::move(*result.dataset);
}

ReferenceClass load_class(const std::string& path) {
  return reference_class_from_json(read_json(path));
}

std::vector<std::pair<double, double>> read_pairs(const std::string& path) {
  auto doc = csv::parse(refcast::detail::read_file(path));
  if (doc.rows.empty()) throw Error(ErrorCode::ParseError, path + ": empty pairs file");
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 1; i < doc.rows.size(); ++i) {
    const auto& row = doc.rows[i];
    if (row.size() != 2) throw Error(ErrorCode::ParseError, path + ": expected two columns");
    auto p = refcast::detail::parse_number<double>(row[0]);
    auto o = refcast::detail::parse_number<double>(row[1]);
    if (!p || !o) throw Error(ErrorCode::ParseError, path + ": non-numeric pair");
    pairs.emplace_back(*p, *o);
  }
  return pairs;
}

std::vector<Cashflow> read_cashflows(const std::string& path) {
  std::vector<Cashflow> flows;
  if (format_from_path(path) == FileFormat::Json) {
    for (const auto& item : read_json(path)) {
      flows.push_back({item.at("period").get<int>(), item.at("amount").get<double>()});
    }
    return flows;
  }
  auto doc = csv::parse(refcast::detail::read_file(path));
  for (std::size_t i = 1; i < doc.rows.size(); ++i) {
    const auto& row = doc.rows[i];
    if (row.size() != 2) throw Error(ErrorCode::ParseError, path + ": expected period,amount");
    auto t = refcast::detail::parse_number<int>(row[0]);
    auto a = refcast::detail::parse_number<double>(row[1]);
    if (!t || !a) throw Error(ErrorCode::ParseError, path + ": bad cashflow row");
    flows.push_back({*t, *a});
  }
  return flows;
}

struct UnitFlags {
  std::string currency;
  std::string basis;
  std::optional<int> base_year;

  void add(CLI::App* cmd) {
    cmd->add_option("--currency", currency, "Currency code (default: from the class, else GBP)");
    cmd->add_option("--basis", basis, "Price basis: constant or nominal")
        ->check(CLI::IsMember({"constant", "nominal"}));
    cmd->add_option("--base-year", base_year, "Base year for constant prices");
  }

  /// Builds money in the flagged unit, falling back to `fallback`'s unit.
  Money money(double amount, const std::optional<Money>& fallback = std::nullopt) const {
    std::string cur = currency;
    PriceBasis pb = PriceBasis::Constant;
    std::optional<int> year = base_year;
    if (fallback) {
      if (cur.empty()) cur = fallback->currency();
      if (basis.empty()) pb = fallback->basis();
      if (!year) year = fallback->base_year();
    }
    if (cur.empty()) cur = "GBP";
    if (!basis.empty()) pb = *parse_price_basis(basis);
    if (pb == PriceBasis::Constant && !year) {
      if (basis.empty() && !fallback) {
        pb = PriceBasis::Nominal;
      } else {
        throw Error(ErrorCode::InvalidArgument, "constant prices need --base-year");
      }
    }
    return Money(amount, cur, pb, pb == PriceBasis::Constant ? year : std::nullopt);
  }
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoMatch:
    case ErrorCode::ClassTooSmall:
    case ErrorCode::InsufficientPairs:
      return kInsufficientData;
    case ErrorCode::IoError:
      return kIoError;
    default:
      return kDomainError;
  }
}

Json uplift_json(const Uplift& u, double risk, std::size_t n) {
  return Json{{"risk", risk},
              {"percentile", percentile_label(risk)},
              {"uplift", u.fraction},
              {"raw_uplift", u.raw},
              {"rank", u.rank},
              {"n", n},
              {"clamped", u.clamped},
              {"warnings", u.warnings}};
}

}  // namespace

std::string render_text(const Json& result, bool styled) {
  if (result.value("command", "") == "report") return render_report(result, styled);
  std::ostringstream os;
  render_object(os, result, 0, styled);
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        RunOptions options) {
  CLI::App app{"Reference class forecasting, optimism-bias uplifts and governance checks",
               "refcast"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  bool as_json = false;
  std::string out_path;
  std::string format_text;
  auto common = [&](CLI::App* cmd) {
    cmd->add_flag("--json", as_json, "Emit the result as JSON");
  };
  auto format_flag = [&](CLI::App* cmd) {
    cmd->add_option("--format", format_text, "Input file format (default: from extension)")
        ->check(CLI::IsMember({"csv", "json"}));
  };
  auto input_format = [&]() -> std::optional<FileFormat> {
    if (format_text.empty()) return std::nullopt;
    return parse_format(format_text);
  };

  Json result;
  std::function<void()> action;

  // ingest
  std::string data_path;
  auto* ingest = app.add_subcommand("ingest", "Validate a project dataset and optionally re-save it");
  ingest->add_option("data", data_path, "Dataset file (CSV or JSON)")->required();
  format_flag(ingest);
  ingest->add_option("--out", out_path, "Write the normalised dataset here (format from extension)");
  common(ingest);
  ingest->callback([&] {
    action = [&] {
      auto ds = load_or_fail(data_path, input_format(), err);
      if (!out_path.empty()) save_dataset(ds, out_path, format_from_path(out_path));
      result = {{"command", "ingest"},
                {"source", ds.source},
                {"schema_version", ds.schema_version},
                {"records", ds.records.size()}};
      if (!out_path.empty()) result["written"] = out_path;
    };
  });

  // class-build
  std::string filter_path;
  auto* class_build = app.add_subcommand("class-build", "Select a reference class from a dataset");
  class_build->add_option("--filter", filter_path, "Class filter JSON")->required();
  class_build->add_option("data", data_path, "Dataset file (CSV or JSON)")->required();
  format_flag(class_build);
  class_build->add_option("--out", out_path, "Write the reference class JSON here");
  common(class_build);
  class_build->callback([&] {
    action = [&] {
      auto filter = read_json(filter_path).get<ClassFilter>();
      auto ds = load_or_fail(data_path, input_format(), err);
      auto rc = build_class(ds, filter);
      if (!out_path.empty()) {
        refcast::detail::write_file(out_path, to_json_value(rc).dump(2) + "\n");
      }
      std::vector<std::string> ids;
      for (const auto& m : rc.members()) ids.push_back(m.id);
      result = {{"command", "class-build"},
                {"name", rc.filter().name},
                {"metric", std::string(to_string(rc.metric()))},
                {"members", rc.size()},
                {"member_ids", ids},
                {"warnings", rc.warnings()}};
      for (const auto& w : rc.warnings()) err << "refcast: warning: " << w << "\n";
    };
  });

  // class-test
  std::string class_a, class_b;
  double alpha = 0.05;
  auto* class_test = app.add_subcommand("class-test", "Two-sample KS comparability test of two classes");
  class_test->add_option("class_a", class_a, "First reference class JSON")->required();
  class_test->add_option("class_b", class_b, "Second reference class JSON")->required();
  class_test->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  common(class_test);
  class_test->callback([&] {
    action = [&] {
      auto c = comparability_test(load_class(class_a), load_class(class_b), alpha);
      result = {{"command", "class-test"},
                {"statistic", c.statistic},
                {"p_value", c.p_value},
                {"alpha", c.alpha},
                {"comparable", c.comparable},
                {"method", c.exact ? "exact" : "asymptotic"}};
    };
  });

  // summarize
  std::string class_path;
  auto* summarize_cmd = app.add_subcommand("summarize", "Distribution of a reference class");
  summarize_cmd->add_option("--class", class_path, "Reference class JSON")->required();
  summarize_cmd->add_option("--out", out_path, "Write ECDF points as CSV here");
  common(summarize_cmd);
  summarize_cmd->callback([&] {
    action = [&] {
      auto rc = load_class(class_path);
      auto s = summarize(rc);
      if (!out_path.empty()) refcast::detail::write_file(out_path, ecdf_csv(s));
      result = {{"command", "summarize"},
                {"name", rc.filter().name},
                {"metric", std::string(to_string(rc.metric()))}};
      result.update(to_json_value(s));
    };
  });

  // uplift
  double risk = 0.5;
  bool clamp = false;
  auto* uplift_cmd = app.add_subcommand("uplift", "Optimism-bias uplift at an acceptable overrun risk");
  uplift_cmd->add_option("--class", class_path, "Reference class JSON")->required();
  uplift_cmd->add_option("--risk", risk, "Acceptable overrun risk p in (0,1); 0.2 gives P80")
      ->required();
  uplift_cmd->add_flag("--clamp-nonnegative", clamp, "Clamp negative uplifts to zero");
  common(uplift_cmd);
  uplift_cmd->callback([&] {
    action = [&] {
      auto rc = load_class(class_path);
      auto u = uplift(rc, UpliftQuery(risk), clamp);
      result = {{"command", "uplift"}};
      result.update(uplift_json(u, risk, rc.size()));
      for (const auto& w : u.warnings) err << "refcast: warning: " << w << "\n";
    };
  });

  // forecast
  double base = 0.0;
  UnitFlags units;
  auto* forecast_cmd = app.add_subcommand("forecast", "Uplifted budget and risk allowance for a base estimate");
  forecast_cmd->add_option("--class", class_path, "Reference class JSON (cost_overrun)")->required();
  forecast_cmd->add_option("--base", base, "Base capital cost estimate")->required();
  forecast_cmd->add_option("--risk", risk, "Acceptable overrun risk p in (0,1)")->required();
  forecast_cmd->add_flag("--clamp-nonnegative", clamp, "Clamp negative uplifts to zero");
  units.add(forecast_cmd);
  common(forecast_cmd);
  forecast_cmd->callback([&] {
    action = [&] {
      auto rc = load_class(class_path);
      auto b = forecast_with_uplift(units.money(base, rc.members().front().forecast_cost), rc,
                                    UpliftQuery(risk), clamp);
      result = {{"command", "forecast"},
                {"risk", risk},
                {"percentile", percentile_label(risk)},
                {"base", money_json(b.base)},
                {"uplift", b.uplift.fraction},
                {"uplift_amount", money_json(b.allowance.uplift_amount)},
                {"budget", money_json(b.budget)},
                {"risk_allowance", money_json(b.allowance.allowance_amount)},
                {"warnings", b.uplift.warnings}};
    };
  });

  // allowance
  double uplift_amount = 0.0;
  auto* allowance_cmd = app.add_subcommand("allowance", "Risk allowance for an uplift amount");
  allowance_cmd->add_option("--uplift-amount", uplift_amount, "Optimism-bias uplift in currency")
      ->required();
  units.add(allowance_cmd);
  common(allowance_cmd);
  allowance_cmd->callback([&] {
    action = [&] {
      auto a = risk_allowance(units.money(uplift_amount));
      result = {{"command", "allowance"},
                {"uplift_amount", money_json(a.uplift_amount)},
                {"risk_allowance", money_json(a.allowance_amount)}};
    };
  });

  // regress
  std::optional<double> mean_opt, rho_opt;
  double intuitive = 0.0;
  std::string pairs_path;
  std::string variable_text = "total_cost";
  auto* regress_cmd = app.add_subcommand("regress", "Regress an intuitive estimate toward the class mean");
  regress_cmd->add_option("--mean", mean_opt, "Class mean in the estimate's variable");
  regress_cmd->add_option("--class", class_path,
                          "Take the mean from a class (deviation_fraction variable)");
  regress_cmd->add_option("--intuitive", intuitive, "Intuitive (inside-view) estimate")->required();
  regress_cmd->add_option("--rho", rho_opt, "Subjective reliability in [0,1]");
  regress_cmd->add_option("--pairs", pairs_path, "CSV of past prediction,outcome pairs");
  regress_cmd->add_option("--variable", variable_text, "Outcome variable")
      ->capture_default_str()
      ->check(CLI::IsMember({"total_cost", "deviation_fraction", "duration_days", "benefit"}));
  common(regress_cmd);
  regress_cmd->callback([&] {
    action = [&] {
      if (mean_opt.has_value() == !class_path.empty()) {
        throw CLI::ValidationError("regress", "give exactly one of --mean or --class");
      }
      if (rho_opt.has_value() == !pairs_path.empty()) {
        throw CLI::ValidationError("regress", "give exactly one of --rho or --pairs");
      }
      ClassMean mean{0.0, *parse_variable(variable_text), ""};
      if (mean_opt) {
        mean.value = *mean_opt;
      } else {
        auto rc = load_class(class_path);
        mean = class_mean(summarize(rc), rc.filter().name);
        if (regress_cmd->count("--variable") == 0) variable_text = "deviation_fraction";
      }
      auto rel = rho_opt ? ReliabilityEstimate::subjective(*rho_opt)
                         : estimate_reliability(read_pairs(pairs_path));
      auto f = regress(mean, IntuitiveEstimate(intuitive, *parse_variable(variable_text)), rel);
      result = {{"command", "regress"},
                {"variable", std::string(to_string(f.variable))},
                {"class_mean", f.class_mean},
                {"intuitive", f.intuitive},
                {"rho", f.rho},
                {"rho_source", std::string(to_string(f.rho_source))},
                {"corrected", f.corrected},
                {"warnings", rel.warnings}};
      if (rel.source == RhoSource::Historical) result["n_pairs"] = rel.n_pairs;
    };
  });

  // diagnose
  std::string profile_path;
  Thresholds thresholds;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Delusion/deception quadrant of one or more profiles");
  diagnose_cmd->add_option("--profile", profile_path, "Profile JSON (object or {\"profiles\": [...]})")
      ->required();
  diagnose_cmd->add_option("--learning-threshold", thresholds.learning, "Learning cut-off")->capture_default_str();
  diagnose_cmd->add_option("--alignment-threshold", thresholds.alignment, "Alignment cut-off")->capture_default_str();
  common(diagnose_cmd);
  diagnose_cmd->callback([&] {
    action = [&] {
      auto doc = read_json(profile_path);
      std::vector<DiagnosticProfile> profiles;
      if (doc.contains("profiles")) {
        for (const auto& p : doc.at("profiles")) profiles.push_back(p.get<DiagnosticProfile>());
      } else {
        profiles.push_back(doc.get<DiagnosticProfile>());
      }
      auto rows = Json::array();
      for (const auto& p : profiles) {
        rows.push_back({{"name", p.name},
                        {"learning", p.learning_score()},
                        {"alignment", p.alignment_score()},
                        {"quadrant", std::string(to_string(classify(p, thresholds)))}});
      }
      result = {{"command", "diagnose"},
                {"learning_threshold", thresholds.learning},
                {"alignment_threshold", thresholds.alignment},
                {"profiles", rows}};
    };
  });

  // check-funding
  std::string structure_path;
  auto* funding_cmd = app.add_subcommand("check-funding", "Check a funding structure against the cost-sharing rules");
  funding_cmd->add_option("--structure", structure_path, "Funding structure JSON")->required();
  common(funding_cmd);
  funding_cmd->callback([&] {
    action = [&] {
      auto findings = check_funding(funding_from_json(read_json(structure_path)));
      result = {{"command", "check-funding"},
                {"all_pass", all_pass(findings)},
                {"findings", to_json_value(findings)}};
    };
  });

  // apportion
  double increase = 0.0, prior = 0.0, allowance_total = 0.0;
  auto* apportion_cmd = app.add_subcommand("apportion", "Split a cost increase between local authority and funder");
  apportion_cmd->add_option("--amount", increase, "Cost increase")->required();
  apportion_cmd->add_option("--prior", prior, "Cumulative earlier increases")->capture_default_str();
  apportion_cmd->add_option("--allowance", allowance_total, "Risk allowance")->required();
  units.add(apportion_cmd);
  common(apportion_cmd);
  apportion_cmd->callback([&] {
    action = [&] {
      auto share = apportion_cost_increase(
          {units.money(increase), units.money(prior), units.money(allowance_total)});
      result = {{"command", "apportion"},
                {"local_share", money_json(share.local_share)},
                {"funder_share", money_json(share.funder_share)},
                {"within_allowance", money_json(share.within_allowance)},
                {"excess", money_json(share.excess)},
                {"requires_new_approval", share.requires_new_approval}};
    };
  });

  // risk-register
  std::string register_path;
  auto* register_cmd = app.add_subcommand("risk-register", "Validate a risk register");
  register_cmd->add_option("--register", register_path, "Risk register JSON")->required();
  common(register_cmd);
  register_cmd->callback([&] {
    action = [&] {
      auto doc = read_json(register_path);
      const auto& items = doc.contains("entries") ? doc.at("entries") : doc;
      std::vector<RiskRegisterEntry> entries;
      for (const auto& e : items) entries.push_back(risk_entry_from_json(e));
      auto findings = validate_risk_register(entries);
      result = {{"command", "risk-register"},
                {"entries", entries.size()},
                {"all_pass", all_pass(findings)},
                {"findings", to_json_value(findings)}};
    };
  });

  // appraise
  std::string cashflow_path;
  std::optional<double> rate;
  auto* appraise_cmd = app.add_subcommand("appraise", "Ex-post NPV and IRR of a cashflow series");
  appraise_cmd->add_option("--cashflows", cashflow_path, "CSV (period,amount) or JSON cashflows")
      ->required();
  appraise_cmd->add_option("--rate", rate, "Discount rate for NPV");
  common(appraise_cmd);
  appraise_cmd->callback([&] {
    action = [&] {
      auto flows = read_cashflows(cashflow_path);
      result = {{"command", "appraise"}, {"periods", flows.size()}};
      if (rate) {
        result["rate"] = *rate;
        result["npv"] = npv(flows, *rate);
      }
      auto r = irr(flows);
      result["irr"] = r.rate;
      result["multiple_roots"] = r.multiple_roots;
      result["roots"] = r.roots;
    };
  });

  // simulate
  std::string config_path, calibration_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo check that uplifts recover calibrated budgets");
  simulate_cmd->add_option("--config", config_path, "Simulation config JSON")->required();
  simulate_cmd->add_option("--seed", seed, "Override the config seed");
  simulate_cmd->add_option("--trials", trials, "Override the number of trials");
  simulate_cmd->add_option("--threads", threads, "Worker threads (results do not depend on it)");
  simulate_cmd->add_option("--out", out_path, "Write the full result JSON here");
  simulate_cmd->add_option("--calibration-csv", calibration_path, "Write calibration rows as CSV here");
  common(simulate_cmd);
  simulate_cmd->callback([&] {
    action = [&] {
      auto cfg = read_json(config_path).get<sim::SimConfig>();
      if (seed) cfg.seed = *seed;
      if (trials) cfg.trials = *trials;
      if (threads) cfg.threads = *threads;
      cfg.validate();
      auto r = sim::simulate(cfg);
      if (!out_path.empty()) {
        Json full{{"config", cfg}, {"result", sim::to_json_value(r)}};
        refcast::detail::write_file(out_path, full.dump(2) + "\n");
      }
      if (!calibration_path.empty()) {
        refcast::detail::write_file(calibration_path, sim::calibration_csv(r));
      }
      auto rows = [](const std::vector<sim::CalibrationRow>& cal) {
        auto arr = Json::array();
        for (const auto& c : cal) {
          arr.push_back({{"p", c.p},
                         {"target", c.target},
                         {"empirical", c.empirical},
                         {"tolerance", c.tolerance},
                         {"within_tolerance", c.within_tolerance}});
        }
        return arr;
      };
      result = {{"command", "simulate"},
                {"seed", cfg.seed},
                {"trials", r.trials},
                {"reference_size", r.reference_size},
                {"holdout_size", r.holdout_size},
                {"mean_realized_overrun", r.mean_realized_overrun},
                {"regression_error", r.regression_error},
                {"raw_forecast_error", r.raw_forecast_error},
                {"calibration", rows(sim::calibration_report(r, true))},
                {"undebiased_calibration", rows(sim::calibration_report(r, false))}};
    };
  });

  // report
  auto* report_cmd = app.add_subcommand("report", "Five-step reference class forecast with uplifted budget");
  report_cmd->add_option("--class", class_path, "Reference class JSON")->required();
  report_cmd->add_option("--intuitive", intuitive,
                         "Intuitive estimate of the project's deviation (e.g. 0.1 for 10% over)")
      ->required();
  report_cmd->add_option("--rho", rho_opt, "Subjective reliability in [0,1]");
  report_cmd->add_option("--pairs", pairs_path, "CSV of past prediction,outcome pairs");
  report_cmd->add_option("--base", base, "Base cost estimate; adds corrected cost and budget");
  report_cmd->add_option("--risk", risk, "Acceptable overrun risk for the budget")->capture_default_str();
  report_cmd->add_flag("--clamp-nonnegative", clamp, "Clamp negative uplifts to zero");
  units.add(report_cmd);
  common(report_cmd);
  report_cmd->callback([&] {
    action = [&] {
      if (rho_opt.has_value() == !pairs_path.empty()) {
        throw CLI::ValidationError("report", "give exactly one of --rho or --pairs");
      }
      auto rc = load_class(class_path);
      auto s = summarize(rc);
      auto rel = rho_opt ? ReliabilityEstimate::subjective(*rho_opt)
                         : estimate_reliability(read_pairs(pairs_path));
      auto f = regress(class_mean(s, rc.filter().name),
                       IntuitiveEstimate(intuitive, OutcomeVariable::DeviationFraction), rel);
      Json reliability{{"rho", rel.rho},
                       {"source", std::string(to_string(rel.source))},
                       {"warnings", rel.warnings}};
      if (rel.source == RhoSource::Historical) reliability["n_pairs"] = rel.n_pairs;
      result = {{"command", "report"},
                {"reference_class",
                 {{"name", rc.filter().name},
                  {"members", rc.size()},
                  {"metric", std::string(to_string(rc.metric()))},
                  {"filter", rc.filter()},
                  {"warnings", rc.warnings()}}},
                {"distribution",
                 {{"n", s.n},
                  {"mean", s.mean},
                  {"median", s.median},
                  {"min", s.min},
                  {"max", s.max},
                  {"stdev", s.stdev}}},
                {"intuitive_estimate",
                 {{"variable", std::string(to_string(f.variable))}, {"value", f.intuitive}}},
                {"reliability", reliability},
                {"corrected_forecast",
                 {{"class_mean", f.class_mean}, {"rho", f.rho}, {"corrected", f.corrected}}}};
      if (report_cmd->count("--base") > 0) {
        const Money base_money = units.money(base, rc.members().front().forecast_cost);
        const double corrected_cost = base_money.amount() * (1.0 + f.corrected);
        if (corrected_cost >= 0.0) {
          result["corrected_forecast"]["corrected_cost"] =
              money_json(base_money.with_amount(corrected_cost));
        }
        auto b = forecast_with_uplift(base_money, rc, UpliftQuery(risk), clamp);
        result["budget"] = {{"risk", risk},
                            {"percentile", percentile_label(risk)},
                            {"base", money_json(b.base)},
                            {"uplift", b.uplift.fraction},
                            {"budget", money_json(b.budget)},
                            {"risk_allowance", money_json(b.allowance.allowance_amount)},
                            {"warnings", b.uplift.warnings}};
      }
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "refcast: error[USAGE]: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    action();
  } catch (const CLI::ValidationError& e) {
    err << "refcast: error[USAGE]: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "refcast: error[" << code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    err << "refcast: error[" << code_name(ErrorCode::ParseError) << "]: " << e.what() << "\n";
    return kDomainError;
  }

  if (as_json) {
    out << result.dump(2) << "\n";
  } else {
    out << render_text(result, options.styled);
  }
  return kOk;
}

}  // namespace refcast::cli
