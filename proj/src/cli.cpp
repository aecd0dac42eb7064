#include "countdiag/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "countdiag/diagnostics.hpp"
#include "countdiag/error.hpp"
#include "countdiag/svg.hpp"

namespace countdiag {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::parse: return "parse";
    case ErrorCode::data: return "data";
    case ErrorCode::fit: return "fit";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

namespace {

struct CommandInfo {
  Command command;
  const char* description;
};

const std::map<std::string, CommandInfo> command_names{
    {"fit", {Command::fit, "fit a model and print its coefficient report"}},
    {"rootogram", {Command::rootogram, "hanging, standing or suspended rootogram"}},
    {"qq", {Command::qq, "Q-Q plot of randomized quantile residuals"}},
    {"pearson", {Command::pearson, "Pearson residuals against fitted means"}},
    {"bootstrap", {Command::bootstrap, "parametric bootstrap band for a hanging rootogram"}},
    {"compare", {Command::compare, "information criteria for several families"}},
    {"simulate", {Command::simulate, "draw counts from a Poisson or negative binomial"}},
};

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------- loading

DataTable load_table(const RunConfig& c) {
  if (c.data_path.empty()) throw ConfigError("--data is required");
  std::string schema = c.schema_path;
  if (schema.empty()) {
    const std::string sidecar =
        std::filesystem::path(c.data_path).replace_extension(".schema.json").string();
    if (std::filesystem::exists(sidecar)) schema = sidecar;
  }
  return read_table(c.data_path, schema.empty() ? TableSchema{} : read_schema(schema));
}

ModelSpec make_spec(const RunConfig& c, const std::string& family) {
  if (c.formula.empty()) throw ConfigError("--formula is required");
  ModelSpec s;
  s.kind = parse_model_kind(family);
  s.formula = parse_formula(c.formula);
  s.K = c.K;
  s.restarts = c.restarts;
  s.seed = c.seed;
  if (s.K < 1) throw ConfigError("--K must be at least 1");
  if (s.restarts < 1) throw ConfigError("--restarts must be at least 1");
  return s;
}

bool posterior_weights(const RunConfig& c) { return c.weights.rfind("posterior:", 0) == 0; }

Eigen::VectorXd fit_weights(const RunConfig& c, const DataTable& t) {
  if (c.weights.empty() || posterior_weights(c)) return {};
  const auto& v = t.numeric(c.weights);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Model fit_single(const RunConfig& c, const DataTable& t) {
  if (c.families.size() != 1) {
    throw ConfigError("this command takes exactly one --family, got " +
                      std::to_string(c.families.size()));
  }
  return Model::fit(make_spec(c, c.families.front()), t, fit_weights(c, t));
}

// Rootogram weights: the fit weights, or one column of mixture posteriors.
Eigen::VectorXd display_weights(const RunConfig& c, const Model& m) {
  if (!posterior_weights(c)) return m.weights();
  const auto* mix = std::get_if<MixtureFit>(&m.result());
  if (!mix) throw ConfigError("--weights posterior:k needs a mixture-negbin model");
  const std::string k_text = c.weights.substr(std::string("posterior:").size());
  int k = 0;
  try {
    std::size_t used = 0;
    k = std::stoi(k_text, &used);
    if (used != k_text.size()) throw std::invalid_argument(k_text);
  } catch (const std::exception&) {
    throw ConfigError("bad component in --weights '" + c.weights + "'");
  }
  if (k < 1 || k > mix->K) {
    throw ConfigError("--weights posterior:" + std::to_string(k) + " but the mixture has " +
                      std::to_string(mix->K) + " components");
  }
  return m.weights().cwiseProduct(mix->posteriors.col(k - 1));
}

BreakSpec breaks_for(const RunConfig& c, const Model& m) {
  long top = c.max_count ? *c.max_count : static_cast<long>(m.response().maxCoeff());
  if (top < 0) throw ConfigError("--max-count must be nonnegative");
  return integer_breaks(top, c.open_tail);
}

std::span<const double> span_of(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

OutputFormat format_or(const RunConfig& c, OutputFormat fallback,
                       std::initializer_list<OutputFormat> allowed) {
  const OutputFormat f = c.format.value_or(fallback);
  if (std::find(allowed.begin(), allowed.end(), f) == allowed.end()) {
    throw ConfigError("output format not supported by this command");
  }
  return f;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- reports

struct Part {
  std::string label;
  const FittedModel* model;
};

std::vector<Part> parts_of(const Model& m) {
  std::vector<Part> parts;
  if (const auto* g = std::get_if<FittedModel>(&m.result())) {
    parts.push_back({"", g});
  } else if (const auto* h = std::get_if<HurdleFit>(&m.result())) {
    parts.push_back({"count", &h->count_part});
    parts.push_back({"zero", &h->zero_part});
  } else {
    const auto& mix = std::get<MixtureFit>(m.result());
    for (int k = 0; k < mix.K; ++k) {
      parts.push_back({"component " + std::to_string(k + 1), &mix.components[static_cast<std::size_t>(k)]});
    }
  }
  return parts;
}

nlohmann::json report_json(const Model& m, const std::string& formula) {
  const auto ic = m.criteria();
  nlohmann::json j = {
      {"schema", "model-report/v1"},
      {"model", m.name()},
      {"formula", formula},
      {"n", m.n_obs()},
      {"loglik", m.loglik()},
      {"df", m.df()},
      {"aic", ic.aic},
      {"bic", ic.bic},
  };
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : parts_of(m)) {
    const auto se = p.model->standard_errors();
    nlohmann::json coefs = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p.model->coefficients.size(); ++k) {
      coefs.push_back({{"name", p.model->coefficient_names[static_cast<std::size_t>(k)]},
                       {"estimate", p.model->coefficients[k]},
                       {"se", se.size() ? nlohmann::json(se[k]) : nlohmann::json()}});
    }
    nlohmann::json part = {
        {"name", p.label.empty() ? "model" : p.label},
        {"family", family_name(p.model->family)},
        {"coefficients", coefs},
        {"loglik", p.model->loglik},
        {"df", p.model->df},
    };
    if (p.model->log_theta) {
      const auto last = p.model->coefficients.size();
      part["log_theta"] = {{"estimate", *p.model->log_theta},
                           {"se", se.size() ? nlohmann::json(se[last]) : nlohmann::json()},
                           {"at_bound", p.model->theta_at_bound}};
    }
    parts.push_back(part);
  }
  j["parts"] = parts;
  if (const auto* mix = std::get_if<MixtureFit>(&m.result())) {
    j["mixture"] = {
        {"mixing_weights", std::vector<double>(mix->mixing_weights.data(),
                                               mix->mixing_weights.data() + mix->K)},
        {"posterior_sums", std::vector<double>(mix->posterior_sums.data(),
                                               mix->posterior_sums.data() + mix->K)},
        {"iterations", mix->iterations},
        {"converged", mix->converged},
        {"restart", mix->restart},
        {"restarts_failed", mix->restarts_failed},
    };
  }
  return j;
}

std::string report_text(const Model& m, const std::string& formula) {
  std::ostringstream out;
  const auto ic = m.criteria();
  out << "model:   " << m.name() << "\nformula: " << formula << "\nN:       " << fmt(m.n_obs(), 1)
      << "\n";
  for (const auto& p : parts_of(m)) {
    out << "\n" << (p.label.empty() ? std::string("coefficients") : p.label) << " ("
        << family_name(p.model->family) << ")\n";
    const auto se = p.model->standard_errors();
    auto row = [&](const std::string& name, double est, Eigen::Index k) {
      char line[160];
      const std::string s = se.size() ? "(" + fmt(se[k], 4) + ")" : "";
      std::snprintf(line, sizeof line, "  %-28s %10s %10s\n", name.c_str(), fmt(est, 4).c_str(),
                    s.c_str());
      out << line;
    };
    for (Eigen::Index k = 0; k < p.model->coefficients.size(); ++k) {
      row(p.model->coefficient_names[static_cast<std::size_t>(k)], p.model->coefficients[k], k);
    }
    if (p.model->log_theta) {
      row(p.model->theta_at_bound ? "Log(theta) [at bound]" : "Log(theta)", *p.model->log_theta,
          p.model->coefficients.size());
    }
  }
  if (const auto* mix = std::get_if<MixtureFit>(&m.result())) {
    out << "\nposterior sums:";
    for (int k = 0; k < mix->K; ++k) out << ' ' << fmt(mix->posterior_sums[k], 1);
    out << "\nEM iterations: " << mix->iterations << (mix->converged ? "" : " (not converged)")
        << ", best restart " << mix->restart << "\n";
  }
  out << "\nlog-likelihood: " << fmt(m.loglik(), 3) << "  df: " << m.df()
      << "  AIC: " << fmt(ic.aic, 2) << "  BIC: " << fmt(ic.bic, 2) << "\n";
  return out.str();
}

// ---------------------------------------------------------------- commands

std::string cmd_fit(const RunConfig& c) {
  const auto table = load_table(c);
  const Model m = fit_single(c, table);
  if (format_or(c, OutputFormat::text, {OutputFormat::text, OutputFormat::json}) ==
      OutputFormat::json) {
    return dump(report_json(m, c.formula));
  }
  return report_text(m, c.formula);
}

std::string cmd_rootogram(const RunConfig& c) {
  const auto table = load_table(c);
  const Model m = fit_single(c, table);
  const Eigen::VectorXd w = display_weights(c, m);
  const auto freqs =
      frequency_table(span_of(m.response()), span_of(w), m.distributions(), breaks_for(c, m));
  const auto coords = layout_rootogram(freqs, c.style, c.scale);
  if (format_or(c, OutputFormat::svg, {OutputFormat::svg, OutputFormat::json}) ==
      OutputFormat::json) {
    nlohmann::json j = to_json(coords);
    j["model"] = m.name();
    j["frequencies"] = to_json(freqs);
    return dump(j);
  }
  return render_svg(coords, {m.name() + " (" + std::string(style_name(c.style)) + ")"});
}

std::string cmd_qq(const RunConfig& c) {
  const auto table = load_table(c);
  const Model m = fit_single(c, table);
  if (m.response().size() < 2) throw DataError("insufficient observations for a Q-Q plot");
  const auto res = quantile_residuals(m.distributions(), span_of(m.response()), c.seed);
  const auto qq = qq_coordinates(res, c.envelope_draws, derive_seed(c.seed, 0x7171));
  if (format_or(c, OutputFormat::svg, {OutputFormat::svg, OutputFormat::json}) ==
      OutputFormat::json) {
    nlohmann::json j = to_json(qq);
    j["model"] = m.name();
    j["residuals"] = to_json(res);
    return dump(j);
  }
  return render_svg(qq, {m.name() + ": randomized quantile residuals"});
}

std::string cmd_pearson(const RunConfig& c) {
  const auto table = load_table(c);
  const Model m = fit_single(c, table);
  const auto res = pearson_residuals(m.distributions(), span_of(m.response()));
  if (format_or(c, OutputFormat::svg, {OutputFormat::svg, OutputFormat::json}) ==
      OutputFormat::json) {
    nlohmann::json j = to_json(res);
    j["model"] = m.name();
    return dump(j);
  }
  return render_svg(res, {m.name() + ": Pearson residuals"});
}

std::string cmd_bootstrap(const RunConfig& c) {
  if (c.B < 1) throw ConfigError("--B must be at least 1");
  if (posterior_weights(c)) throw ConfigError("bootstrap does not support posterior weights");
  const auto table = load_table(c);
  const Model m = fit_single(c, table);
  const auto breaks = breaks_for(c, m);
  const auto freqs =
      frequency_table(span_of(m.response()), span_of(m.weights()), m.distributions(), breaks);
  const auto coords = layout_rootogram(freqs, Style::hanging, Scale::sqrt);
  const auto band = bootstrap_band(m, breaks, c.B, {0.025, 0.975}, c.seed);
  if (format_or(c, OutputFormat::svg, {OutputFormat::svg, OutputFormat::json}) ==
      OutputFormat::json) {
    const auto [wl, wu] = warning_limits();
    nlohmann::json j = {
        {"schema", "bootstrap-rootogram/v1"},
        {"model", m.name()},
        {"rootogram", to_json(coords)},
        {"band", to_json(band)},
        {"overlays",
         {{{"name", "warning_limits"}, {"line", "dashed"}, {"values", {wl, wu}}},
          {{"name", "bootstrap_band"}, {"line", "solid"}, {"lower", band.lower},
           {"upper", band.upper}}}},
    };
    return dump(j);
  }
  return render_svg(coords,
                    {m.name() + ": bootstrap band (B = " + std::to_string(band.replications) +
                     ", failed " + std::to_string(band.failed) + ")"},
                    &band);
}

std::string cmd_compare(const RunConfig& c) {
  if (c.families.size() < 2) throw ConfigError("compare needs at least two --family values");
  const auto table = load_table(c);
  struct Row {
    std::string name;
    int df;
    double loglik, aic, bic;
  };
  std::vector<Row> rows;
  for (const auto& f : c.families) {
    const Model m = Model::fit(make_spec(c, f), table, fit_weights(c, table));
    const auto ic = m.criteria();
    rows.push_back({m.name(), m.df(), m.loglik(), ic.aic, ic.bic});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.bic != b.bic ? a.bic < b.bic : a.name < b.name;
  });
  if (format_or(c, OutputFormat::text, {OutputFormat::text, OutputFormat::json}) ==
      OutputFormat::json) {
    nlohmann::json j = {{"schema", "compare/v1"}, {"formula", c.formula}, {"models", nlohmann::json::array()}};
    for (const auto& r : rows) {
      j["models"].push_back(
          {{"model", r.name}, {"df", r.df}, {"loglik", r.loglik}, {"aic", r.aic}, {"bic", r.bic}});
    }
    return dump(j);
  }
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %4s %12s %10s %10s\n", "model", "df", "loglik", "AIC",
                "BIC");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %4d %12.3f %10.2f %10.2f\n", r.name.c_str(), r.df,
                  r.loglik, r.aic, r.bic);
    out << line;
  }
  return out.str();
}

std::string cmd_simulate(const RunConfig& c) {
  if (c.n < 1) throw ConfigError("--n must be at least 1");
  if (c.families.size() != 1) throw ConfigError("simulate takes exactly one --family");
  FamilySpec f;
  if (c.families.front() == "poisson") {
    f = FamilySpec::poisson(c.mu);
  } else if (c.families.front() == "negbin") {
    if (!c.theta) throw ConfigError("simulate --family negbin needs --theta");
    f = FamilySpec::negbin(c.mu, *c.theta);
  } else {
    throw ConfigError("simulate supports --family poisson or negbin");
  }
  f.validate();
  format_or(c, OutputFormat::text, {OutputFormat::text});
  Rng rng(c.seed);
  std::ostringstream out;
  out << "y\n";
  for (long i = 0; i < c.n; ++i) out << count_sample(f, rng) << "\n";
  return out.str();
}

}  // namespace

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  RunConfig c;
  CLI::App app{"Count regression fits and rootogram diagnostics", "countdiag"};
  app.require_subcommand(1);
  std::string style = "hanging", scale = "sqrt", format;
  std::optional<long> max_count;
  std::optional<double> theta;

  for (const auto& [name, info] : command_names) {
    auto* sub = app.add_subcommand(name, info.description);
    sub->add_option("--data", c.data_path, "CSV file with a header row");
    sub->add_option("--schema", c.schema_path,
                    "JSON column hints (default: <data>.schema.json if present)");
    sub->add_option("--formula", c.formula, "e.g. 'y ~ x1 + x2 | z1'");
    sub->add_option("--family", c.families,
                    "poisson, negbin, hurdle-poisson, hurdle-negbin, mixture-negbin");
    sub->add_option("--style", style, "hanging, standing or suspended");
    sub->add_option("--scale", scale, "sqrt or raw");
    sub->add_option("--max-count", max_count, "largest count shown (default max(y))");
    sub->add_flag("--open-tail", c.open_tail, "last bin absorbs counts above --max-count");
    sub->add_option("--weights", c.weights, "weight column, or posterior:k for mixtures");
    sub->add_option("--K", c.K, "mixture components");
    sub->add_option("--restarts", c.restarts, "EM restarts");
    sub->add_option("--B", c.B, "bootstrap replications");
    sub->add_option("--envelope-draws", c.envelope_draws, "Q-Q envelope re-randomizations");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--out", c.out, "output file (default standard output)");
    sub->add_option("--format", format, "svg, json or text");
    sub->add_option("--n", c.n, "simulate: number of draws");
    sub->add_option("--mu", c.mu, "simulate: mean");
    sub->add_option("--theta", theta, "simulate: negbin theta");
    sub->callback([&c, cmd = info.command] { c.command = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  c.style = parse_style(style);
  c.scale = parse_scale(scale);
  c.max_count = max_count;
  c.theta = theta;
  if (!format.empty()) {
    if (format == "svg") c.format = OutputFormat::svg;
    else if (format == "json") c.format = OutputFormat::json;
    else if (format == "text") c.format = OutputFormat::text;
    else throw ConfigError("unknown --format '" + format + "' (expected svg, json or text)");
  }
  if (c.families.empty()) c.families.push_back("poisson");
  return c;
}

std::string execute(const RunConfig& c) {
  switch (c.command) {
    case Command::fit: return cmd_fit(c);
    case Command::rootogram: return cmd_rootogram(c);
    case Command::qq: return cmd_qq(c);
    case Command::pearson: return cmd_pearson(c);
    case Command::bootstrap: return cmd_bootstrap(c);
    case Command::compare: return cmd_compare(c);
    case Command::simulate: return cmd_simulate(c);
  }
  throw ConfigError("unknown command");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const auto config = parse_args(argc, argv, out);
    if (!config) return 0;
    const std::string doc = execute(*config);
    if (config->out.empty()) {
      out << doc;
    } else {
      std::ofstream f(config->out, std::ios::binary);
      if (!f) throw IoError("cannot open '" + config->out + "' for writing");
      f << doc;
      if (!f) throw IoError("failed writing '" + config->out + "'");
    }
    return 0;
  } catch (const Error& e) {
    err << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::config ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace countdiag
