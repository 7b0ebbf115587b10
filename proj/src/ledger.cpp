#include "enfp/ledger.hpp"

#include "enfp/bounds.hpp"
#include "enfp/error.hpp"
#include "enfp/posterior.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fcntl.h>
#include <fmt/format.h>
#include <fstream>
#include <unistd.h>

namespace enfp {

namespace {

std::string utc_now()
{
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void append_line(const std::string& path, const std::string& line, bool create)
{
  const int flags = O_WRONLY | O_APPEND | (create ? O_CREAT | O_EXCL : 0);
  const int fd = ::open(path.c_str(), flags, 0644);
  require(fd >= 0,
          ErrorKind::data,
          fmt::format("cannot open ledger '{}': {}", path, std::strerror(errno)));
  const std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0 && errno == EINTR)
      continue;
    if (n < 0) {
      const int err = errno;
      ::close(fd);
      fail(ErrorKind::data, fmt::format("write to '{}' failed: {}", path, std::strerror(err)));
    }
    done += static_cast<std::size_t>(n);
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  require(rc == 0, ErrorKind::data, fmt::format("fsync of '{}' failed", path));
}

nlohmann::json stratum_to_json(const StratumConfig& s)
{
  nlohmann::json j{ { "budget", s.budget } };
  if (s.rho_hat)
    j["rho_hat"] = *s.rho_hat;
  if (s.model_id)
    j["model_id"] = *s.model_id;
  return j;
}

StratumConfig stratum_from_json(const nlohmann::json& j)
{
  StratumConfig s;
  s.budget = j.at("budget").get<double>();
  if (j.contains("rho_hat"))
    s.rho_hat = j.at("rho_hat").get<double>();
  if (j.contains("model_id"))
    s.model_id = j.at("model_id").get<std::string>();
  return s;
}

// Contribution of a payload carrying z and frozen h values.
double payload_contribution(const nlohmann::json& p, EndpointSelection selection)
{
  PositiveTrialResult r;
  r.m = p.at("m").get<int>();
  r.failure_type = parse_failure_type(p.at("failure_type").get<std::string>());
  r.z_values = p.at("z").get<std::vector<double>>();
  r.h_values = p.at("h").get<std::vector<double>>();
  return trial_contribution(r, selection);
}

nlohmann::json trial_payload(const TrialRecord& t)
{
  return { { "m", t.m }, { "failure_type", std::string(to_string(t.failure_type)) } };
}

std::vector<double> exact_z(const TrialRecord& trial)
{
  std::vector<double> z;
  for (const auto& e : trial.measures) {
    require(e.z.has_value(),
            ErrorKind::cannot_classify,
            fmt::format("trial '{}' has a censored endpoint", trial.trial_id));
    z.push_back(*e.z);
  }
  return z;
}

} // namespace

std::string_view to_string(LedgerMode mode)
{
  return mode == LedgerMode::frequentist ? "frequentist" : "bayes";
}

std::string_view to_string(EntryKind kind)
{
  switch (kind) {
    case EntryKind::proposal:
      return "proposal";
    case EntryKind::outcome:
      return "outcome";
    case EntryKind::adjustment:
      return "adjustment";
  }
  return "?";
}

LedgerMode parse_ledger_mode(std::string_view s)
{
  if (s == "frequentist")
    return LedgerMode::frequentist;
  if (s == "bayes")
    return LedgerMode::bayes;
  fail(ErrorKind::invalid_argument, fmt::format("unknown ledger mode '{}'", s));
}

EntryKind parse_entry_kind(std::string_view s)
{
  if (s == "proposal")
    return EntryKind::proposal;
  if (s == "outcome")
    return EntryKind::outcome;
  if (s == "adjustment")
    return EntryKind::adjustment;
  fail(ErrorKind::invalid_argument, fmt::format("unknown entry kind '{}'", s));
}

void LedgerConfig::validate() const
{
  auto check = [&](const std::string& name, const StratumConfig& s) {
    const std::string label = name.empty() ? "ledger" : fmt::format("stratum '{}'", name);
    require(s.budget > 0.0 && std::isfinite(s.budget),
            ErrorKind::invalid_argument,
            fmt::format("{}: budget must be > 0", label));
    if (mode == LedgerMode::frequentist)
      require(s.rho_hat && *s.rho_hat >= 0.0 && *s.rho_hat <= 1.0,
              ErrorKind::invalid_argument,
              fmt::format("{}: frequentist ledger needs rho_hat in [0, 1]", label));
    else
      require(s.model_id && !s.model_id->empty(),
              ErrorKind::invalid_argument,
              fmt::format("{}: bayes ledger needs a prior model", label));
  };
  check("", base);
  for (const auto& [name, s] : strata) {
    require(!name.empty(), ErrorKind::invalid_argument, "stratum names must be nonempty");
    check(name, s);
  }
}

double projected_tau(const Account& acc, int m, FailureType t, double alpha)
{
  require(alpha > 0.0 && alpha < 1.0,
          ErrorKind::invalid_argument,
          fmt::format("alpha must lie in (0, 1), got {}", alpha));
  const double rho = acc.config.rho_hat.value_or(0.0);
  return tau_from_sums(rho,
                       static_cast<std::size_t>(acc.n_trials + 1),
                       acc.sum_delta + delta(rho, m, t),
                       acc.sum_alpha + alpha,
                       acc.all_single_b && m == 1 && t == FailureType::B);
}

Ledger::Ledger(LedgerConfig config, Clock clock)
  : config_(std::move(config))
  , clock_(std::move(clock))
{
  config_.validate();
  if (config_.created.empty())
    config_.created = now();
  accounts_[""].config = config_.base;
  for (const auto& [name, s] : config_.strata)
    accounts_[name].config = s;
}

std::string Ledger::now() const
{
  return clock_ ? clock_() : utc_now();
}

Ledger Ledger::create(const std::string& path, LedgerConfig config, Clock clock)
{
  Ledger ledger(std::move(config), std::move(clock));
  append_line(path, ledger.header_line(), true);
  ledger.path_ = path;
  return ledger;
}

Ledger Ledger::open(const std::string& path, Clock clock)
{
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::data, fmt::format("cannot open ledger '{}'", path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty())
      lines.push_back(line);
  Ledger ledger = replay(lines, std::move(clock));
  ledger.path_ = path;
  return ledger;
}

Ledger Ledger::replay(const std::vector<std::string>& lines, Clock clock)
{
  require(!lines.empty(), ErrorKind::corrupt_ledger, "ledger has no header line");
  LedgerConfig cfg;
  try {
    const auto h = nlohmann::json::parse(lines.front());
    require(h.value("format", std::string()) == ledger_format,
            ErrorKind::corrupt_ledger,
            fmt::format("unsupported ledger format (expected '{}')", ledger_format));
    cfg.mode = parse_ledger_mode(h.at("mode").get<std::string>());
    cfg.base = stratum_from_json(h);
    if (h.contains("strata"))
      for (const auto& [name, s] : h.at("strata").items())
        cfg.strata[name] = stratum_from_json(s);
    cfg.selection = parse_endpoint_selection(h.value("selection", std::string("first")));
    cfg.created = h.value("created", std::string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corrupt_ledger, fmt::format("bad ledger header: {}", e.what()));
  } catch (const Error& e) {
    fail(ErrorKind::corrupt_ledger, fmt::format("bad ledger header: {}", e.what()));
  }

  Ledger ledger(std::move(cfg), std::move(clock));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      LedgerEntry e;
      e.sequence = j.at("seq").get<long long>();
      e.trial_id = j.at("trial_id").get<std::string>();
      e.kind = parse_entry_kind(j.at("kind").get<std::string>());
      e.stratum = j.value("stratum", std::string());
      e.payload = j.at("payload");
      e.spend_delta = j.at("spend_delta").get<double>();
      e.spent_after = j.at("spent_after").get<double>();
      e.timestamp = j.value("timestamp", std::string());
      e.note = j.value("note", std::string());
      ledger.apply(std::move(e), true);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::corrupt_ledger, fmt::format("line {}: {}", i + 1, e.what()));
    } catch (const Error& e) {
      fail(ErrorKind::corrupt_ledger, fmt::format("line {}: {}", i + 1, e.what()));
    }
  }
  return ledger;
}

Account& Ledger::account(const std::string& stratum)
{
  const auto it = accounts_.find(stratum);
  require(it != accounts_.end(),
          ErrorKind::missing_stratum,
          fmt::format("ledger has no stratum '{}'", stratum));
  return it->second;
}

const PriorModel& Ledger::check_model(const Account& acc, const PriorModel* model) const
{
  require(model != nullptr, ErrorKind::invalid_argument, "bayes ledger needs a prior model");
  require(model->id() == acc.config.model_id.value_or(""),
          ErrorKind::invalid_argument,
          fmt::format("model {} is not the model {} pinned by the ledger",
                      model->id(), acc.config.model_id.value_or("")));
  return *model;
}

// Applies a fully populated entry, verifying every recorded number against
// the recomputation. Live mutations go through the same path.
void Ledger::apply(LedgerEntry e, bool replaying)
{
  const auto expected = static_cast<long long>(entries_.size()) + 1;
  require(e.sequence == expected,
          ErrorKind::corrupt_ledger,
          fmt::format("sequence {} where {} was expected", e.sequence, expected));
  Account& acc = account(e.stratum);
  Account next = acc;
  double spend = 0.0;

  switch (e.kind) {
    case EntryKind::proposal: {
      require(config_.mode == LedgerMode::frequentist,
              ErrorKind::corrupt_ledger,
              "proposal entry in a bayes ledger");
      const int m = e.payload.at("m").get<int>();
      const auto t = parse_failure_type(e.payload.at("failure_type").get<std::string>());
      const double alpha = e.payload.at("alpha").get<double>();
      const double projected = projected_tau(acc, m, t, alpha);
      require(projected <= acc.config.budget,
              ErrorKind::corrupt_ledger,
              fmt::format("accepted proposal projects {} over budget {}", projected,
                          acc.config.budget));
      next.n_trials += 1;
      next.sum_delta += delta(acc.config.rho_hat.value_or(0.0), m, t);
      next.sum_alpha += alpha;
      next.all_single_b = acc.all_single_b && m == 1 && t == FailureType::B;
      next.spent = projected;
      spend = projected - acc.spent;
      break;
    }
    case EntryKind::outcome: {
      const auto outcome = parse_outcome(e.payload.at("outcome").get<std::string>());
      if (config_.mode == LedgerMode::bayes && outcome == Outcome::positive) {
        spend = payload_contribution(e.payload, config_.selection);
        next.spent = acc.spent + spend;
        next.positives += 1;
      }
      break;
    }
    case EntryKind::adjustment: {
      require(config_.mode == LedgerMode::bayes,
              ErrorKind::corrupt_ledger,
              "adjustment entry in a frequentist ledger");
      require(!e.note.empty(), ErrorKind::corrupt_ledger, "adjustment without a note");
      spend = payload_contribution(e.payload, config_.selection);
      next.spent = acc.spent + spend;
      next.adjustments += 1;
      break;
    }
  }
  next.entries += 1;
  if (config_.mode == LedgerMode::bayes && next.spent > next.config.budget)
    next.over_budget = true;

  if (replaying) {
    require(e.spend_delta == spend && e.spent_after == next.spent,
            ErrorKind::corrupt_ledger,
            fmt::format("entry {} records spend {} (total {}) but replay gives {} "
                        "(total {})",
                        e.sequence, e.spend_delta, e.spent_after, spend, next.spent));
  } else {
    e.spend_delta = spend;
    e.spent_after = next.spent;
    persist(e);
  }
  acc = next;
  entries_.push_back(std::move(e));
}

void Ledger::persist(const LedgerEntry& e)
{
  if (path_)
    append_line(*path_, entry_line(e), false);
}

ProposalDecision Ledger::propose(const std::string& trial_id,
                                 int m,
                                 FailureType t,
                                 double alpha,
                                 const std::string& stratum)
{
  require(config_.mode == LedgerMode::frequentist,
          ErrorKind::wrong_mode,
          "proposals are only accepted by frequentist ledgers");
  require(m >= 1, ErrorKind::invalid_argument, "m must be >= 1");
  const Account& acc = account(stratum);
  ProposalDecision d;
  d.budget = acc.config.budget;
  d.projected_spent = projected_tau(acc, m, t, alpha);
  d.accepted = d.projected_spent <= acc.config.budget;
  if (!d.accepted)
    return d;

  LedgerEntry e;
  e.sequence = static_cast<long long>(entries_.size()) + 1;
  e.trial_id = trial_id;
  e.kind = EntryKind::proposal;
  e.stratum = stratum;
  e.payload = { { "m", m },
                { "failure_type", std::string(to_string(t)) },
                { "alpha", alpha } };
  e.timestamp = now();
  apply(std::move(e), false);
  return d;
}

double Ledger::record_outcome(const TrialRecord& trial, const PriorModel* model)
{
  trial.validate();
  const std::string stratum = trial.stratum.value_or("");
  const Account& acc = account(stratum);
  if (config_.mode == LedgerMode::bayes)
    check_model(acc, model);

  const TrialRecord resolved = model ? resolve_h_policy(trial, *model) : trial;
  const Outcome outcome = classify_with_intervals(resolved);
  if (trial.outcome)
    require(*trial.outcome == outcome,
            ErrorKind::data,
            fmt::format("trial '{}' is recorded as {} but its z values classify it as {}",
                        trial.trial_id, to_string(*trial.outcome), to_string(outcome)));

  LedgerEntry e;
  e.sequence = static_cast<long long>(entries_.size()) + 1;
  e.trial_id = trial.trial_id;
  e.kind = EntryKind::outcome;
  e.stratum = stratum;
  e.payload = trial_payload(trial);
  e.payload["outcome"] = std::string(to_string(outcome));
  if (outcome == Outcome::positive)
    exact_z(trial);
  // Censored endpoints of negative trials are logged as null.
  nlohmann::json z = nlohmann::json::array();
  nlohmann::json h = nlohmann::json::array();
  for (const auto& m : trial.measures) {
    z.push_back(m.z ? nlohmann::json(*m.z) : nlohmann::json());
    h.push_back(m.z && model ? nlohmann::json(h_probability(*model, *m.z)) : nlohmann::json());
  }
  e.payload["z"] = z;
  if (model)
    e.payload["h"] = h;
  e.timestamp = now();
  const auto before = entries_.size();
  apply(std::move(e), false);
  return entries_.size() > before ? entries_.back().spend_delta : 0.0;
}

double Ledger::record_adjustment(const TrialRecord& trial,
                                 const PriorModel& model,
                                 const std::string& note)
{
  require(config_.mode == LedgerMode::bayes,
          ErrorKind::wrong_mode,
          "adjustments are only recorded by bayes ledgers");
  require(!note.empty(), ErrorKind::invalid_argument, "an adjustment requires a note");
  trial.validate();
  const std::string stratum = trial.stratum.value_or("");
  check_model(account(stratum), &model);

  LedgerEntry e;
  e.sequence = static_cast<long long>(entries_.size()) + 1;
  e.trial_id = trial.trial_id;
  e.kind = EntryKind::adjustment;
  e.stratum = stratum;
  e.payload = trial_payload(trial);
  const auto z = exact_z(trial);
  std::vector<double> h;
  for (double v : z)
    h.push_back(h_probability(model, v));
  e.payload["z"] = z;
  e.payload["h"] = h;
  e.note = note;
  e.timestamp = now();
  apply(std::move(e), false);
  return entries_.back().spend_delta;
}

LedgerStatus Ledger::status() const
{
  LedgerStatus s;
  s.mode = config_.mode;
  long long adjustments = 0;
  for (const auto& [name, acc] : accounts_) {
    StratumStatus st;
    st.stratum = name;
    st.budget = acc.config.budget;
    st.spent = acc.spent;
    st.remaining = acc.config.budget - acc.spent;
    st.n_trials = config_.mode == LedgerMode::frequentist ? acc.n_trials : acc.positives;
    st.entries = acc.entries;
    st.adjustments = acc.adjustments;
    st.adjustment_fraction =
      acc.entries > 0 ? static_cast<double>(acc.adjustments) / static_cast<double>(acc.entries)
                      : 0.0;
    st.over_budget = acc.over_budget;
    if (config_.mode == LedgerMode::frequentist) {
      const double rho = acc.config.rho_hat.value_or(0.0);
      if (acc.n_trials > 0 && acc.sum_delta > 0.0)
        st.remaining_total_error =
          acc.config.budget * static_cast<double>(acc.n_trials) / acc.sum_delta - acc.sum_alpha;
      else if (acc.n_trials == 0 && rho > 0.0)
        st.remaining_total_error = acc.config.budget / rho;
    }
    // The default stratum is reported only when it is the whole ledger or
    // has activity.
    if (name.empty() && !accounts_.empty() && accounts_.size() > 1 && acc.entries == 0)
      continue;
    s.budget += st.budget;
    s.spent += st.spent;
    s.n_trials += st.n_trials;
    s.entries += st.entries;
    adjustments += st.adjustments;
    s.over_budget = s.over_budget || st.over_budget;
    s.strata.push_back(std::move(st));
  }
  s.remaining = s.budget - s.spent;
  s.adjustment_fraction =
    s.entries > 0 ? static_cast<double>(adjustments) / static_cast<double>(s.entries) : 0.0;
  return s;
}

std::string Ledger::header_line() const
{
  nlohmann::json h = stratum_to_json(config_.base);
  h["format"] = ledger_format;
  h["mode"] = std::string(to_string(config_.mode));
  h["selection"] = std::string(to_string(config_.selection));
  if (!config_.strata.empty()) {
    h["strata"] = nlohmann::json::object();
    for (const auto& [name, s] : config_.strata)
      h["strata"][name] = stratum_to_json(s);
  }
  h["created"] = config_.created;
  return h.dump();
}

std::string Ledger::entry_line(const LedgerEntry& e)
{
  nlohmann::json j{ { "seq", e.sequence },
                    { "trial_id", e.trial_id },
                    { "kind", std::string(to_string(e.kind)) },
                    { "stratum", e.stratum },
                    { "payload", e.payload },
                    { "spend_delta", e.spend_delta },
                    { "spent_after", e.spent_after },
                    { "timestamp", e.timestamp },
                    { "note", e.note } };
  return j.dump();
}

} // namespace enfp
