// enfp: expected-number-of-false-positives toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.

#include "enfp/bayes.hpp"
#include "enfp/bounds.hpp"
#include "enfp/error.hpp"
#include "enfp/gmodel.hpp"
#include "enfp/ledger.hpp"
#include "enfp/posterior.hpp"
#include "enfp/records_io.hpp"
#include "enfp/simulator.hpp"
#include "enfp/synth.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

using namespace enfp;

namespace {

enum Exit
{
  exit_ok = 0,
  exit_usage = 1,
  exit_data = 2,
  exit_nonconvergence = 3
};

std::string g6(double x)
{
  return fmt::format("{:.6g}", x);
}

void write_text(const std::string& path, const std::string& text)
{
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::data, fmt::format("cannot write '{}'", path));
  out << text;
}

// "name=value" pairs from repeated flags.
std::map<std::string, std::string> parse_pairs(const std::vector<std::string>& items,
                                               const char* flag)
{
  std::map<std::string, std::string> out;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    require(eq != std::string::npos && eq > 0,
            ErrorKind::invalid_argument,
            fmt::format("{} expects name=value, got '{}'", flag, s));
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

double parse_number(const std::string& s, const char* what)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size())
      return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::invalid_argument, fmt::format("{}: '{}' is not a number", what, s));
}

struct FitFlags
{
  FitConfig cfg;
  int bootstrap = 0;
};

void add_fit_flags(CLI::App* app, FitFlags& f)
{
  app->add_option("--grid-low", f.cfg.grid_low, "Lowest theta grid point")->capture_default_str();
  app->add_option("--grid-high", f.cfg.grid_high, "Highest theta grid point")
    ->capture_default_str();
  app->add_option("--grid-step", f.cfg.grid_step, "Theta grid spacing")->capture_default_str();
  app->add_option("--df", f.cfg.basis_df, "Natural spline degrees of freedom")
    ->capture_default_str();
  app->add_option("--c0", f.cfg.penalty_c0, "Penalty on the coefficient norm")
    ->capture_default_str();
  app->add_option("--max-iterations", f.cfg.max_iterations, "Optimizer iteration limit")
    ->capture_default_str();
  app->add_option("--tolerance", f.cfg.gradient_tolerance, "Gradient-norm convergence tolerance")
    ->capture_default_str();
  app->add_option("--min-observations", f.cfg.min_observations, "Smallest sample that is fitted")
    ->capture_default_str();
  app->add_option("--seed", f.cfg.seed, "Bootstrap seed")->capture_default_str();
  app->add_option("--threads", f.cfg.threads, "Worker threads (0: all cores)")
    ->capture_default_str();
  app->add_option("--bootstrap", f.bootstrap, "Bootstrap replicates (0: none, else >= 2)")
    ->capture_default_str();
}

// ---------------------------------------------------------------- synth

int run_synth(const SynthConfig& cfg, const std::string& out)
{
  const auto corpus = make_synthetic_corpus(cfg);
  write_records_file(out, corpus.records);
  std::size_t positives = 0;
  for (const auto& r : corpus.records)
    positives += r.outcome == Outcome::positive;
  std::cout << fmt::format("wrote {} trials ({} exact, {} censored, {} positive) to {}\n",
                           corpus.records.size(), cfg.exact, cfg.censored, positives, out);
  return exit_ok;
}

// ---------------------------------------------------------------- fit

int run_fit(const std::string& records_path, const std::string& out, FitFlags& f)
{
  const auto records = read_records_file(records_path);
  const auto obs = ObservationSet::from_records(records);
  const PriorModel model = fit_g(obs, f.cfg);

  std::optional<BootstrapResult> boot;
  if (f.bootstrap > 0 && model.converged)
    boot = bootstrap(obs, f.cfg, f.bootstrap, default_z_grid());
  save_model(out, model, boot ? &*boot : nullptr);

  std::cout << fmt::format("observations    {} ({} exact, {} censored)\n", obs.size(),
                           obs.exact_z.size(), obs.censored.size());
  std::cout << fmt::format("converged       {} ({} iterations, gradient norm {:.3g})\n",
                           model.converged ? "yes" : "no", model.iterations,
                           model.gradient_norm);
  std::cout << fmt::format("diagnostic      {}\n", model.diagnostic);
  std::cout << fmt::format("log-likelihood  {}\n", g6(model.log_likelihood));
  std::cout << fmt::format("rho_hat         {}\n", g6(rho_from_g(model)));
  if (boot) {
    std::cout << fmt::format("rho_hat 95% CI  [{}, {}]  ({} replicates, {} failed)\n",
                             g6(boot->rho_ci_low), g6(boot->rho_ci_high), boot->replicates,
                             boot->failed);
  }
  std::cout << fmt::format("h(1.65)         {}\n", g6(h_probability(model, 1.65)));
  std::cout << fmt::format("h(1.96)         {}\n", g6(h_probability(model, 1.96)));
  std::cout << fmt::format("model written   {} (id {})\n", out, model.id());
  if (!model.converged) {
    std::cerr << "error: g-model fit did not converge: " << model.diagnostic << '\n';
    return exit_nonconvergence;
  }
  return exit_ok;
}

// ---------------------------------------------------------------- hcurve

struct HcurveFlags
{
  std::string model;
  double from = -1.0;
  double to = 6.0;
  double step = 0.01;
  std::optional<double> at;
  std::string csv;
  std::string svg;
  bool no_bands = false;
};

int run_hcurve(const HcurveFlags& f)
{
  std::optional<BootstrapResult> boot;
  const PriorModel model = load_model(f.model, &boot);
  if (f.at) {
    const auto v = h_evaluate(model, *f.at);
    std::cout << fmt::format("h({}) = {}{}\n", g6(*f.at), g6(v.h),
                             v.saturated ? " (saturated)" : "");
    if (boot && !f.no_bands) {
      const auto c = h_curve(model, { *f.at }, &*boot);
      std::cout << fmt::format("95% CI [{}, {}]\n", g6((*c.ci_low)[0]), g6((*c.ci_high)[0]));
    }
    if (f.csv.empty() && f.svg.empty())
      return exit_ok;
  }
  const auto grid = make_z_grid(f.from, f.to, f.step);
  const auto curve = h_curve(model, grid, boot && !f.no_bands ? &*boot : nullptr);
  if (!f.csv.empty()) {
    std::ofstream out(f.csv);
    require(static_cast<bool>(out), ErrorKind::data, fmt::format("cannot write '{}'", f.csv));
    write_hcurve_csv(out, curve);
  }
  if (!f.svg.empty())
    write_text(f.svg, hcurve_svg(curve));
  if (f.csv.empty() && f.svg.empty() && !f.at)
    write_hcurve_csv(std::cout, curve);
  if (curve.saturated_points > 0)
    std::cerr << fmt::format("note: h saturated to 0 or 1 at {} grid points\n",
                             curve.saturated_points);
  return exit_ok;
}

// ---------------------------------------------------------------- bounds

struct BoundsFlags
{
  std::string records;
  std::string ledger;
  std::optional<double> rho;
  std::vector<std::string> stratum_rho;
  std::string model;
  std::vector<std::string> stratum_model;
  std::string selection = "first";
};

void print_breakdown(const std::map<std::string, double>& parts, double total, const char* name)
{
  if (parts.size() > 1 || (parts.size() == 1 && !parts.begin()->first.empty()))
    for (const auto& [stratum, v] : parts)
      std::cout << fmt::format("{} [{}] = {}\n", name, stratum.empty() ? "(none)" : stratum,
                               g6(v));
  std::cout << fmt::format("{} total = {}\n", name, g6(total));
}

int run_bounds_frequentist(const BoundsFlags& f)
{
  if (!f.ledger.empty()) {
    require(f.records.empty(), ErrorKind::invalid_argument, "give --records or --ledger, not both");
    const Ledger ledger = Ledger::open(f.ledger);
    require(ledger.config().mode == LedgerMode::frequentist,
            ErrorKind::wrong_mode,
            "ledger is not a frequentist ledger");
    std::map<std::string, double> parts;
    double total = 0.0;
    for (const auto& s : ledger.status().strata) {
      parts[s.stratum] = s.spent;
      total += s.spent;
    }
    print_breakdown(parts, total, "tau_hat");
    return exit_ok;
  }
  require(!f.records.empty(), ErrorKind::invalid_argument, "need --records or --ledger");
  const auto records = read_records_file(f.records);
  std::vector<FreqTrial> trials;
  for (const auto& r : records)
    trials.push_back(freq_trial_from_record(r));

  std::map<std::string, double> rho_by_stratum;
  for (const auto& [k, v] : parse_pairs(f.stratum_rho, "--stratum-rho"))
    rho_by_stratum[k] = parse_number(v, "--stratum-rho");
  if (rho_by_stratum.empty()) {
    require(f.rho.has_value(), ErrorKind::invalid_argument, "need --rho or --stratum-rho");
    for (auto& t : trials)
      t.stratum.clear();
    rho_by_stratum[""] = *f.rho;
  } else if (f.rho) {
    rho_by_stratum.emplace("", *f.rho);
  }
  const auto b = tau_hat_stratified(trials, rho_by_stratum);
  std::cout << fmt::format("trials = {}\n", trials.size());
  print_breakdown(b.per_stratum, b.total, "tau_hat");
  return exit_ok;
}

std::vector<PositiveTrialResult> positives_from_records(const std::vector<TrialRecord>& records,
                                                        const PriorModel& model)
{
  std::vector<PositiveTrialResult> out;
  for (const auto& r : records) {
    Outcome o;
    if (r.policy) {
      o = classify_with_intervals(resolve_h_policy(r, model));
      if (r.outcome)
        require(*r.outcome == o,
                ErrorKind::data,
                fmt::format("trial '{}' is recorded as {} but its z values classify it as {}",
                            r.trial_id, to_string(*r.outcome), to_string(o)));
    } else {
      require(r.outcome.has_value(),
              ErrorKind::cannot_classify,
              fmt::format("trial '{}' has neither a policy nor an outcome", r.trial_id));
      o = *r.outcome;
    }
    if (o != Outcome::positive)
      continue;
    PositiveTrialResult p;
    p.trial_id = r.trial_id;
    p.m = r.m;
    p.failure_type = r.failure_type;
    p.stratum = r.stratum.value_or("");
    for (const auto& e : r.measures) {
      require(e.z.has_value(),
              ErrorKind::cannot_classify,
              fmt::format("positive trial '{}' has a censored endpoint", r.trial_id));
      p.z_values.push_back(*e.z);
      p.h_values.push_back(h_probability(model, *e.z));
    }
    out.push_back(std::move(p));
  }
  return out;
}

int run_bounds_bayes(const BoundsFlags& f)
{
  const auto selection = parse_endpoint_selection(f.selection);
  if (!f.ledger.empty()) {
    require(f.records.empty(), ErrorKind::invalid_argument, "give --records or --ledger, not both");
    const Ledger ledger = Ledger::open(f.ledger);
    require(ledger.config().mode == LedgerMode::bayes,
            ErrorKind::wrong_mode,
            "ledger is not a bayes ledger");
    std::map<std::string, double> parts;
    double total = 0.0;
    for (const auto& s : ledger.status().strata) {
      parts[s.stratum] = s.spent;
      total += s.spent;
    }
    print_breakdown(parts, total, "omega_hat");
    return exit_ok;
  }
  require(!f.records.empty(), ErrorKind::invalid_argument, "need --records or --ledger");
  const auto records = read_records_file(f.records);

  std::map<std::string, PriorModel> models;
  for (const auto& [k, v] : parse_pairs(f.stratum_model, "--stratum-model"))
    models.emplace(k, load_model(v));
  if (!f.model.empty())
    models.emplace("", load_model(f.model));
  require(!models.empty(), ErrorKind::invalid_argument, "need --model or --stratum-model");

  const bool pooled = models.size() == 1 && models.count("");
  std::vector<PositiveTrialResult> positives;
  for (const auto& r : records) {
    const std::string stratum = pooled ? "" : r.stratum.value_or("");
    const auto it = models.find(stratum);
    require(it != models.end(),
            ErrorKind::missing_stratum,
            fmt::format("no prior model for stratum '{}'", stratum));
    auto p = positives_from_records({ r }, it->second);
    for (auto& x : p) {
      x.stratum = stratum;
      positives.push_back(std::move(x));
    }
  }
  const auto b = omega_hat_stratified(positives, models, selection);
  std::cout << fmt::format("positive trials = {}\n", positives.size());
  if (selection == EndpointSelection::tightest)
    std::cout << "type A endpoint: largest z (tightest)\n";
  print_breakdown(b.per_stratum, b.total, "omega_hat");
  return exit_ok;
}

// ---------------------------------------------------------------- ledger

void print_status(const LedgerStatus& s)
{
  std::cout << fmt::format("mode = {}\n", to_string(s.mode));
  for (const auto& st : s.strata) {
    const std::string label = st.stratum.empty() ? "" : fmt::format(" [{}]", st.stratum);
    std::cout << fmt::format("budget{} = {}\n", label, g6(st.budget));
    std::cout << fmt::format("spent{} = {}\n", label, g6(st.spent));
    std::cout << fmt::format("remaining{} = {}\n", label, g6(st.remaining));
    std::cout << fmt::format("{}{} = {}\n",
                             s.mode == LedgerMode::frequentist ? "trials" : "positives", label,
                             st.n_trials);
    std::cout << fmt::format("entries{} = {}\n", label, st.entries);
    if (s.mode == LedgerMode::bayes)
      std::cout << fmt::format("adjustment_fraction{} = {}\n", label, g6(st.adjustment_fraction));
    if (st.remaining_total_error)
      std::cout << fmt::format("remaining_total_error{} = {}\n", label,
                               g6(*st.remaining_total_error));
    if (st.over_budget)
      std::cout << fmt::format("over_budget{} = yes\n", label);
  }
  if (s.strata.size() > 1)
    std::cout << fmt::format("spent total = {}\n", g6(s.spent));
}

nlohmann::json status_json(const LedgerStatus& s)
{
  nlohmann::json strata = nlohmann::json::array();
  for (const auto& st : s.strata) {
    nlohmann::json j{ { "stratum", st.stratum },
                      { "budget", st.budget },
                      { "spent", st.spent },
                      { "remaining", st.remaining },
                      { "n_trials", st.n_trials },
                      { "entries", st.entries },
                      { "adjustments", st.adjustments },
                      { "adjustment_fraction", st.adjustment_fraction },
                      { "over_budget", st.over_budget } };
    if (st.remaining_total_error)
      j["remaining_total_error"] = *st.remaining_total_error;
    strata.push_back(j);
  }
  return { { "mode", std::string(to_string(s.mode)) },
           { "budget", s.budget },
           { "spent", s.spent },
           { "remaining", s.remaining },
           { "n_trials", s.n_trials },
           { "entries", s.entries },
           { "adjustment_fraction", s.adjustment_fraction },
           { "over_budget", s.over_budget },
           { "strata", strata } };
}

struct LedgerFlags
{
  std::string path;
  // init
  std::string mode = "frequentist";
  double budget = 0.0;
  std::optional<double> rho;
  std::string model;
  std::vector<std::string> strata;
  std::string selection = "first";
  // propose
  std::string trial_id;
  int m = 1;
  std::string type = "B";
  double alpha = 0.0;
  std::string stratum;
  // record / adjust
  std::string records;
  std::string note;
  bool json = false;
};

int run_ledger_init(const LedgerFlags& f)
{
  LedgerConfig cfg;
  cfg.mode = parse_ledger_mode(f.mode);
  cfg.selection = parse_endpoint_selection(f.selection);
  cfg.base.budget = f.budget;
  std::string base_model_id;
  if (cfg.mode == LedgerMode::frequentist) {
    require(f.model.empty(), ErrorKind::invalid_argument, "--model is for bayes ledgers");
    cfg.base.rho_hat = f.rho;
  } else {
    require(!f.rho, ErrorKind::invalid_argument, "--rho is for frequentist ledgers");
    require(!f.model.empty(), ErrorKind::invalid_argument, "bayes ledgers need --model");
    cfg.base.model_id = load_model(f.model).id();
  }
  // name:budget:rho-or-model-path
  for (const auto& s : f.strata) {
    const auto a = s.find(':');
    const auto b = a == std::string::npos ? a : s.find(':', a + 1);
    require(b != std::string::npos,
            ErrorKind::invalid_argument,
            fmt::format("--stratum expects name:budget:rho (or name:budget:model.json), got '{}'",
                        s));
    StratumConfig sc;
    sc.budget = parse_number(s.substr(a + 1, b - a - 1), "--stratum budget");
    const std::string last = s.substr(b + 1);
    if (cfg.mode == LedgerMode::frequentist)
      sc.rho_hat = parse_number(last, "--stratum rho");
    else
      sc.model_id = load_model(last).id();
    cfg.strata[s.substr(0, a)] = sc;
  }
  const Ledger ledger = Ledger::create(f.path, cfg);
  std::cout << fmt::format("created {} ledger {}\n", to_string(cfg.mode), f.path);
  print_status(ledger.status());
  return exit_ok;
}

int run_ledger_propose(const LedgerFlags& f)
{
  Ledger ledger = Ledger::open(f.path);
  const auto d =
    ledger.propose(f.trial_id, f.m, parse_failure_type(f.type), f.alpha, f.stratum);
  std::cout << fmt::format("{} {} (projected tau_hat {} vs budget {})\n",
                           d.accepted ? "accepted" : "rejected", f.trial_id,
                           g6(d.projected_spent), g6(d.budget));
  print_status(ledger.status());
  return exit_ok;
}

std::vector<TrialRecord> select_records(const std::string& path, const std::string& trial_id)
{
  auto records = read_records_file(path);
  if (trial_id.empty())
    return records;
  for (auto& r : records)
    if (r.trial_id == trial_id)
      return { r };
  fail(ErrorKind::data, fmt::format("trial '{}' is not in {}", trial_id, path));
}

int run_ledger_record(const LedgerFlags& f)
{
  Ledger ledger = Ledger::open(f.path);
  std::optional<PriorModel> model;
  if (!f.model.empty())
    model = load_model(f.model);
  for (const auto& r : select_records(f.records, f.trial_id)) {
    const double g = ledger.record_outcome(r, model ? &*model : nullptr);
    const auto& e = ledger.entries().back();
    std::cout << fmt::format("recorded {} {} (spend {})\n", r.trial_id,
                             e.payload.at("outcome").get<std::string>(), g6(g));
  }
  print_status(ledger.status());
  return exit_ok;
}

int run_ledger_adjust(const LedgerFlags& f)
{
  require(!f.trial_id.empty(), ErrorKind::invalid_argument, "adjust needs --trial-id");
  require(!f.model.empty(), ErrorKind::invalid_argument, "adjust needs --model");
  Ledger ledger = Ledger::open(f.path);
  const PriorModel model = load_model(f.model);
  const auto records = select_records(f.records, f.trial_id);
  const double g = ledger.record_adjustment(records.front(), model, f.note);
  std::cout << fmt::format("adjusted {} (spend {})\n", f.trial_id, g6(g));
  print_status(ledger.status());
  return exit_ok;
}

int run_ledger_status(const LedgerFlags& f)
{
  const Ledger ledger = Ledger::open(f.path);
  if (f.json)
    std::cout << status_json(ledger.status()).dump(2) << '\n';
  else
    print_status(ledger.status());
  return exit_ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags
{
  std::string scenario;
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
  std::optional<double> rho;
  std::string model;
  std::string out;
};

int run_simulate(const SimulateFlags& f)
{
  ScenarioConfig cfg = load_scenario(f.scenario);
  if (f.replicates)
    cfg.replicates = *f.replicates;
  if (f.seed)
    cfg.seed = *f.seed;
  if (f.trials)
    cfg.n_trials = *f.trials;
  if (f.threads)
    cfg.threads = *f.threads;
  std::optional<PriorModel> model;
  if (!f.model.empty())
    model = load_model(f.model);
  const auto report = validate_bounds(cfg, f.rho, model ? &*model : nullptr);
  std::cout << report_table(report);
  if (!f.out.empty())
    write_text(f.out, report_to_json(report).dump(2) + "\n");
  return exit_ok;
}

int exit_code_for(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::invalid_argument:
      return exit_usage;
    case ErrorKind::non_convergence:
      return exit_nonconvergence;
    default:
      return exit_data;
  }
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Expected number of false positives (ENFP) toolkit for populations of trials" };
  app.require_subcommand(1);
  app.set_version_flag("--version", "enfp 1.0.0");

  SynthConfig synth;
  std::string synth_out;
  auto* cmd_synth = app.add_subcommand("synth", "Write a synthetic single-endpoint corpus");
  cmd_synth->add_option("--out,-o", synth_out, "Output records file (.csv or .json)")->required();
  cmd_synth->add_option("--exact", synth.exact, "Trials with reported p-values")
    ->capture_default_str();
  cmd_synth->add_option("--censored", synth.censored, "Trials known only to have p >= p0")
    ->capture_default_str();
  cmd_synth->add_option("--rho", synth.rho, "Null fraction of the generating prior")
    ->capture_default_str();
  cmd_synth->add_option("--alt-mean", synth.alt_mean, "Mean of the non-null effect sizes")
    ->capture_default_str();
  cmd_synth->add_option("--alt-sd", synth.alt_sd, "SD of the non-null effect sizes")
    ->capture_default_str();
  cmd_synth->add_option("--p0", synth.p0, "Censoring threshold")->capture_default_str();
  cmd_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  FitFlags fit;
  std::string fit_records, fit_out;
  auto* cmd_fit = app.add_subcommand("fit", "Estimate the effect-size prior g(theta)");
  cmd_fit->add_option("--records,-r", fit_records, "Trial records (.csv or .json)")->required();
  cmd_fit->add_option("--out,-o", fit_out, "Model JSON to write")->required();
  add_fit_flags(cmd_fit, fit);

  HcurveFlags hc;
  auto* cmd_h = app.add_subcommand("hcurve", "Tabulate or plot h(z) = Pr[theta > 0 | z]");
  cmd_h->add_option("--model,-m", hc.model, "Model JSON")->required();
  cmd_h->add_option("--from", hc.from, "First z")->capture_default_str();
  cmd_h->add_option("--to", hc.to, "Last z")->capture_default_str();
  cmd_h->add_option("--step", hc.step, "z spacing")->capture_default_str();
  cmd_h->add_option("--at", hc.at, "Print h at a single z");
  cmd_h->add_option("--csv", hc.csv, "Write z,h,ci_low,ci_high");
  cmd_h->add_option("--svg", hc.svg, "Write an SVG plot");
  cmd_h->add_flag("--no-bands", hc.no_bands, "Omit bootstrap bands");

  BoundsFlags bf;
  auto* cmd_bounds = app.add_subcommand("bounds", "Compute tau_hat or omega_hat");
  cmd_bounds->require_subcommand(1);
  auto* cmd_bf = cmd_bounds->add_subcommand("frequentist", "tau_hat from records or a ledger");
  cmd_bf->add_option("--records,-r", bf.records, "Trial records with alpha policies");
  cmd_bf->add_option("--ledger,-l", bf.ledger, "Frequentist ledger");
  cmd_bf->add_option("--rho", bf.rho, "Null fraction rho_hat");
  cmd_bf->add_option("--stratum-rho", bf.stratum_rho, "Per-stratum rho, name=value");
  auto* cmd_bb = cmd_bounds->add_subcommand("bayes", "omega_hat from records or a ledger");
  cmd_bb->add_option("--records,-r", bf.records, "Trial records");
  cmd_bb->add_option("--ledger,-l", bf.ledger, "Bayes ledger");
  cmd_bb->add_option("--model,-m", bf.model, "Prior model JSON");
  cmd_bb->add_option("--stratum-model", bf.stratum_model, "Per-stratum model, name=path");
  cmd_bb->add_option("--selection", bf.selection, "Type A endpoint: first or tightest")
    ->capture_default_str();

  LedgerFlags lf;
  auto* cmd_ledger = app.add_subcommand("ledger", "Error-spending ledger");
  cmd_ledger->require_subcommand(1);
  auto* l_init = cmd_ledger->add_subcommand("init", "Create a ledger");
  l_init->add_option("--ledger,-l", lf.path, "Ledger file to create")->required();
  l_init->add_option("--mode", lf.mode, "frequentist or bayes")->capture_default_str();
  l_init->add_option("--budget", lf.budget, "tau0 or omega0")->required();
  l_init->add_option("--rho", lf.rho, "rho_hat (frequentist)");
  l_init->add_option("--model,-m", lf.model, "Prior model JSON (bayes)");
  l_init->add_option("--stratum", lf.strata, "Extra stratum name:budget:rho or name:budget:model");
  l_init->add_option("--selection", lf.selection, "Type A endpoint: first or tightest")
    ->capture_default_str();
  auto* l_propose = cmd_ledger->add_subcommand("propose", "Propose a trial (frequentist)");
  l_propose->add_option("--ledger,-l", lf.path, "Ledger file")->required();
  l_propose->add_option("--trial-id", lf.trial_id, "Trial identifier")->required();
  l_propose->add_option("--m", lf.m, "Number of endpoints")->capture_default_str();
  l_propose->add_option("--type,-t", lf.type, "Failure region type A or B")
    ->capture_default_str();
  l_propose->add_option("--alpha", lf.alpha, "Trial-level one-sided alpha")->required();
  l_propose->add_option("--stratum", lf.stratum, "Stratum name");
  auto* l_record = cmd_ledger->add_subcommand("record", "Record trial outcomes");
  l_record->add_option("--ledger,-l", lf.path, "Ledger file")->required();
  l_record->add_option("--records,-r", lf.records, "Trial records")->required();
  l_record->add_option("--trial-id", lf.trial_id, "Record only this trial");
  l_record->add_option("--model,-m", lf.model, "Prior model JSON");
  auto* l_adjust = cmd_ledger->add_subcommand("adjust", "Charge a trial declared positive");
  l_adjust->add_option("--ledger,-l", lf.path, "Ledger file")->required();
  l_adjust->add_option("--records,-r", lf.records, "Trial records")->required();
  l_adjust->add_option("--trial-id", lf.trial_id, "Trial to adjust")->required();
  l_adjust->add_option("--model,-m", lf.model, "Prior model JSON")->required();
  l_adjust->add_option("--note", lf.note, "Justification")->required();
  auto* l_status = cmd_ledger->add_subcommand("status", "Show spend and remaining budget");
  l_status->add_option("--ledger,-l", lf.path, "Ledger file")->required();
  l_status->add_flag("--json", lf.json, "Print JSON");

  SimulateFlags sf;
  auto* cmd_sim = app.add_subcommand("simulate", "Check bounds against a Monte Carlo oracle");
  cmd_sim->add_option("--scenario,-s", sf.scenario, "Scenario JSON")->required();
  cmd_sim->add_option("--replicates", sf.replicates, "Override replicates");
  cmd_sim->add_option("--seed", sf.seed, "Override seed");
  cmd_sim->add_option("--trials", sf.trials, "Override trials per replicate");
  cmd_sim->add_option("--threads", sf.threads, "Worker threads (0: all cores)");
  cmd_sim->add_option("--rho", sf.rho, "rho for tau_hat (default: true null mass)");
  cmd_sim->add_option("--model,-m", sf.model, "Prior for omega_hat (default: true prior)");
  cmd_sim->add_option("--out,-o", sf.out, "Write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try {
    if (cmd_synth->parsed())
      return run_synth(synth, synth_out);
    if (cmd_fit->parsed())
      return run_fit(fit_records, fit_out, fit);
    if (cmd_h->parsed())
      return run_hcurve(hc);
    if (cmd_bf->parsed())
      return run_bounds_frequentist(bf);
    if (cmd_bb->parsed())
      return run_bounds_bayes(bf);
    if (l_init->parsed())
      return run_ledger_init(lf);
    if (l_propose->parsed())
      return run_ledger_propose(lf);
    if (l_record->parsed())
      return run_ledger_record(lf);
    if (l_adjust->parsed())
      return run_ledger_adjust(lf);
    if (l_status->parsed())
      return run_ledger_status(lf);
    if (cmd_sim->parsed())
      return run_simulate(sf);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_data;
  }
  return exit_usage;
}
