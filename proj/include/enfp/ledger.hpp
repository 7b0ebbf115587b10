#pragma once

// Accumulative error-spending ledger.
//
// Frequentist mode charges tau_hat when a trial is proposed and blocks
// proposals that would exceed the budget. Bayes mode charges omega_hat
// contributions when positive outcomes (or noted adjustments) are recorded;
// it never blocks, but raises an over-budget flag once spending exceeds the
// budget.
//
// On disk a ledger is JSON lines: a header line followed by one line per
// entry. Every append is fsync'ed. Opening a ledger replays all entries and
// rejects the file if any recorded spend disagrees with the recomputation.
// A ledger file has a single writer; concurrent writers are not coordinated.

#include "enfp/bayes.hpp"
#include "enfp/gmodel.hpp"
#include "enfp/trial.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace enfp {

enum class LedgerMode
{
  frequentist,
  bayes
};

enum class EntryKind
{
  proposal,
  outcome,
  adjustment
};

std::string_view to_string(LedgerMode mode);
std::string_view to_string(EntryKind kind);
LedgerMode parse_ledger_mode(std::string_view s);
EntryKind parse_entry_kind(std::string_view s);

inline constexpr const char* ledger_format = "enfp-ledger/1";

struct StratumConfig
{
  double budget = 0.0;
  // Frequentist mode.
  std::optional<double> rho_hat;
  // Bayes mode: id() of the prior model that outcomes must be scored with.
  std::optional<std::string> model_id;

  bool operator==(const StratumConfig&) const = default;
};

struct LedgerConfig
{
  LedgerMode mode = LedgerMode::frequentist;
  // The unnamed default stratum "".
  StratumConfig base;
  std::map<std::string, StratumConfig> strata;
  EndpointSelection selection = EndpointSelection::first;
  std::string created;

  void validate() const;
  bool operator==(const LedgerConfig&) const = default;
};

struct LedgerEntry
{
  long long sequence = 0;
  std::string trial_id;
  EntryKind kind = EntryKind::proposal;
  std::string stratum;
  nlohmann::json payload;
  double spend_delta = 0.0;
  // Stratum spend after this entry.
  double spent_after = 0.0;
  std::string timestamp;
  std::string note;
};

struct Account
{
  StratumConfig config;
  long long n_trials = 0;
  double sum_delta = 0.0;
  double sum_alpha = 0.0;
  bool all_single_b = true;
  double spent = 0.0;
  long long entries = 0;
  long long positives = 0;
  long long adjustments = 0;
  bool over_budget = false;

  bool operator==(const Account&) const = default;
};

struct StratumStatus
{
  std::string stratum;
  double budget = 0.0;
  double spent = 0.0;
  double remaining = 0.0;
  long long n_trials = 0;
  long long entries = 0;
  long long adjustments = 0;
  double adjustment_fraction = 0.0;
  bool over_budget = false;
  // Frequentist: alpha that may still be spent on further trials whose
  // delta matches the current average, tau0 * N / sum_delta - sum_alpha
  // (tau0 / rho for an empty ledger).
  std::optional<double> remaining_total_error;
};

struct LedgerStatus
{
  LedgerMode mode = LedgerMode::frequentist;
  double budget = 0.0;
  double spent = 0.0;
  double remaining = 0.0;
  long long n_trials = 0;
  long long entries = 0;
  double adjustment_fraction = 0.0;
  bool over_budget = false;
  std::vector<StratumStatus> strata;
};

struct ProposalDecision
{
  bool accepted = false;
  double projected_spent = 0.0;
  double budget = 0.0;
};

class Ledger
{
public:
  using Clock = std::function<std::string()>;

  // Empty ledger with no backing file.
  explicit Ledger(LedgerConfig config, Clock clock = {});

  // Writes the header to a new file; fails if the file already exists.
  static Ledger create(const std::string& path, LedgerConfig config, Clock clock = {});
  // Replays an existing file. Throws corrupt_ledger on any inconsistency.
  static Ledger open(const std::string& path, Clock clock = {});
  // Replays in-memory lines (header first).
  static Ledger replay(const std::vector<std::string>& lines, Clock clock = {});

  ProposalDecision propose(const std::string& trial_id,
                           int m,
                           FailureType t,
                           double alpha,
                           const std::string& stratum = "");

  // Classifies the trial. Bayes mode: a positive outcome is charged its
  // contribution under `model`, which must be the model pinned for the
  // stratum. Frequentist mode: logged with zero spend; `model` is only
  // needed to resolve h-threshold policies. Returns the spend charged.
  double record_outcome(const TrialRecord& trial, const PriorModel* model);

  // Bayes mode: charge a trial that is declared positive after the fact.
  double record_adjustment(const TrialRecord& trial,
                           const PriorModel& model,
                           const std::string& note);

  LedgerStatus status() const;

  const LedgerConfig& config() const { return config_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const std::map<std::string, Account>& accounts() const { return accounts_; }
  const std::optional<std::string>& path() const { return path_; }

  std::string header_line() const;
  static std::string entry_line(const LedgerEntry& e);

private:
  Account& account(const std::string& stratum);
  const PriorModel& check_model(const Account& acc, const PriorModel* model) const;
  void apply(LedgerEntry entry, bool replaying);
  void persist(const LedgerEntry& e);
  std::string now() const;

  LedgerConfig config_;
  std::map<std::string, Account> accounts_;
  std::vector<LedgerEntry> entries_;
  std::optional<std::string> path_;
  Clock clock_;
};

// Spend of a frequentist account with one more trial, from its sums.
double projected_tau(const Account& acc, int m, FailureType t, double alpha);

} // namespace enfp
