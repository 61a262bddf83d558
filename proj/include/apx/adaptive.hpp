#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "apx/quasi_interp.hpp"
#include "apx/smoothness.hpp"

namespace apx {

class AdaptiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Which finite element space to attach to a partition.
struct SpaceSpec {
  SpaceKind kind = SpaceKind::continuous;
  int degree = 1;
  FeSpace make(const Partition& P) const {
    return kind == SpaceKind::continuous ? FeSpace::continuous(P, degree) : FeSpace::discontinuous(P, degree);
  }
};

enum class DistanceKind { energy_h1, lp, weighted_lp, total_error };

// rho(u, v, P). The total error is supplied by the elliptic solver through
// the two callbacks; the other kinds are evaluated here.
struct DistanceFunction {
  DistanceKind kind = DistanceKind::lp;
  double p = 2;
  double theta = 0;
  std::function<double(const Field&, const FeFunction&)> custom_eval;
  std::function<BestApprox(const Field&, const FeSpace&)> custom_best;

  static DistanceFunction energy() { return {DistanceKind::energy_h1, 2, 0, {}, {}}; }
  static DistanceFunction lp(double p) { return {DistanceKind::lp, p, 0, {}, {}}; }
  static DistanceFunction weighted_lp(double p, double theta) { return {DistanceKind::weighted_lp, p, theta, {}, {}}; }
  std::string tag() const;
};

// rho(u, v, P) with P the partition of v's space; +inf is a value, not a failure.
double eval_distance(const DistanceFunction& rho, const Field& u, const FeFunction& v);
// E(u, S_P)_rho through the matching (near-)best member.
BestApprox best_error(const DistanceFunction& rho, const Field& u, const FeSpace& V);

// Local seminorm backend: e = |tau|^{p delta} |u|^p_{A^alpha_{q,q}(tau^)} (|tau|^delta |u| for p = inf).
// |tau| enters with the extra weight |tau|^{theta p / 2} for weighted distances.
struct SeminormIndicatorParams {
  double alpha = 1;
  double q = 2;
  double p = 2;
  double delta = 0.5;
  double theta = 0;
  SpaceSpec space;
  int depth = 3;  // uniform sub-chain depth on the patch
  double p0 = -1;
};

// Interpolation backend: e = |tau|^{theta p / 2} ||u - Q~u||^p_{L^p(tau)} (Pi_tau for broken spaces).
struct InterpIndicatorParams {
  double p = 2;
  double theta = 0;
  SpaceSpec space;
  double p0 = -1;
};

class Indicator {
 public:
  static Indicator local_seminorm(Field u, SeminormIndicatorParams s);
  static Indicator interp_error(Field u, InterpIndicatorParams s);

  // Values for every element of P, in partition order.
  std::vector<double> evaluate(const Partition& P) const;
  // Local seminorm |u|_{A^alpha_{q,q}(tau^)} of element e (seminorm backend only).
  double local_seminorm_of(const Partition& P, int e) const;
  std::string backend() const;
  std::size_t cache_size() const;

 private:
  struct State;
  std::shared_ptr<State> s_;
};

struct GreedyResult {
  Partition partition;
  CompletionLedger ledger;
  int iterations = 0;
  double max_indicator = 0;  // re-evaluated on the output
};

// Thrown when the iteration cap is hit; carries the partial run.
class GreedyCapError : public AdaptiveError {
 public:
  GreedyCapError(const std::string& what, GreedyResult partial) : AdaptiveError(what), partial_(std::move(partial)) {}
  const GreedyResult& partial() const { return partial_; }

 private:
  GreedyResult partial_;
};

// R_k = {tau : e(tau, P_k) > eps}, P_{k+1} = refine(P_k, R_k), until R_k is empty.
GreedyResult greedy_partition(const Indicator& ind, double eps, const Partition& P0, int max_iterations = 60);

struct BudgetSample {
  std::size_t N = 0;
  double error = 0;
  double epsilon = 0;
  bool surrogate = false;
  std::size_t marked_total = 0;  // sum of #R_m of the run
};

struct BudgetCurve {
  std::vector<BudgetSample> samples;
  std::vector<std::pair<std::size_t, double>> envelope;  // nonincreasing in N
  std::size_t N0 = 0;
  std::string backend;
};

struct EpsSchedule {
  double eps0 = -1;  // <= 0: max indicator on P0
  double factor = 0.5;
  int steps = 12;
  int max_iterations = 60;
  std::size_t max_cells = 0;  // > 0: stop before evaluating a partition larger than this
};

// Lower envelope over samples sorted by N: env(N_i) = min_{N_j <= N_i} E_j.
std::vector<std::pair<std::size_t, double>> lower_envelope(std::span<const BudgetSample> s);

BudgetCurve budget_curve(const Field& u, const DistanceFunction& rho, const Indicator& ind, const SpaceSpec& space,
                         const Partition& P0, const EpsSchedule& sched = {});

struct RateReport {
  double s = 0;
  double N_lo = 0, N_hi = 0;
  double rms = 0;
  std::size_t points = 0;
  bool surrogate = false;
  std::string backend;
};

// Least-squares slope of log y against log x over points with x in [lo, hi]; s = -slope.
RateReport fit_loglog(std::span<const double> x, std::span<const double> y, double lo = 0,
                      double hi = std::numeric_limits<double>::infinity());
RateReport fit_rate(const BudgetCurve& c, double N_lo = 0, double N_hi = std::numeric_limits<double>::infinity());

// l^q aggregate of 2^{ks} E_k, E_k read off the envelope at budget N = 2^k N0.
double approx_class_seminorm(const BudgetCurve& c, double s, double q);

void write_budget_csv(std::ostream& os, const BudgetCurve& c);
void write_rate_csv(std::ostream& os, std::span<const RateReport> r);
std::string format_double(double v);

}  // namespace apx
