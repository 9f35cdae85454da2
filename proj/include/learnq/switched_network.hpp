#pragma once

// Single-hop switched queueing network in discrete time, the MaxWeight
// family of schedulers, stability diagnostics and the approachability
// embedding of MaxWeight.

#include "learnq/blackwell.hpp"
#include "learnq/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace learnq::switching {

using Schedule = Eigen::VectorXi;

/// Raised by transience_check when the mean arrival vector is inside the hull.
class NotSupercritical : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite monotone set of schedules, sorted lexicographically. Index 0 is
/// always the zero schedule.
class ScheduleSet {
 public:
  Eigen::Index queues() const { return q_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(schedules_.size()); }
  int d_max() const { return d_max_; }
  const Schedule& operator[](Eigen::Index k) const { return schedules_[static_cast<std::size_t>(k)]; }
  const std::vector<Schedule>& schedules() const { return schedules_; }
  /// q x |S| matrix with one schedule per column.
  const Eigen::MatrixXd& as_matrix() const { return matrix_; }
  bool contains(const Schedule& s) const;

  friend ScheduleSet monotone_closure(const std::vector<Schedule>& raw);

 private:
  Eigen::Index q_ = 0;
  int d_max_ = 0;
  std::vector<Schedule> schedules_;
  Eigen::MatrixXd matrix_;
};

/// Smallest monotone superset. Rejects empty input, negative entries, ragged
/// dimensions, and sets that never serve some queue.
ScheduleSet monotone_closure(const std::vector<Schedule>& raw);

/// closure{e_1, ..., e_q}: one queue served per slot.
ScheduleSet exclusive(Eigen::Index q);
/// Two queues sharing one server, closure{(1,0), (0,1)}.
inline ScheduleSet crossbar() { return exclusive(2); }

/// Reads one schedule per line, whitespace or comma separated; '#' comments.
ScheduleSet read_schedule_set(const std::string& path);

/// Largest eps with abar + eps 1 dominated by a point of <S>, i.e.
/// min over the simplex of n of max_sigma n . (sigma - abar). Negative when abar is outside.
double interior_margin(const Eigen::VectorXd& abar, const ScheduleSet& s);

struct Separation {
  Eigen::VectorXd normal;  // nonnegative, max-norm 1
  double eps_hat = 0.0;    // normal . (sigma - abar) <= -eps_hat for all sigma in S
};

/// Throws NotSupercritical when interior_margin(abar, S) >= 0.
Separation transience_check(const Eigen::VectorXd& abar, const ScheduleSet& s);

/// argmax of sum_j w_j sigma_j over sigma in S with sigma <= Q, smallest
/// lexicographic maximiser on ties.
const Schedule& maxweight(const Eigen::VectorXi& queue, const ScheduleSet& s);
const Schedule& weighted_maxweight(const Eigen::VectorXi& queue, const ScheduleSet& s, const Eigen::VectorXd& mu);
const Schedule& f_maxweight(const Eigen::VectorXi& queue, const ScheduleSet& s, const std::function<double(int)>& f);

/// Q' = Q + a - min(sigma, Q).
Eigen::VectorXi step(const Eigen::VectorXi& queue, const Eigen::VectorXi& arrivals, const Schedule& sigma);

/// Arrival vectors drawn i.i.d. from a finite distribution.
struct IidArrivals {
  std::vector<Eigen::VectorXi> support;
  Eigen::VectorXd probs;
};

/// Deterministic sequence, repeated cyclically.
struct ArrivalSequence {
  std::vector<Eigen::VectorXi> vectors;
};

/// Phase k is in force from starts[k] (starts[0] = 0, increasing).
struct TimeVaryingArrivals {
  std::vector<long> starts;
  std::vector<IidArrivals> phases;
};

class ArrivalModel {
 public:
  static ArrivalModel iid(std::vector<Eigen::VectorXi> support, Eigen::VectorXd probs);
  /// Independent Bernoulli(rates_j) arrivals per queue.
  static ArrivalModel bernoulli(const Eigen::VectorXd& rates);
  static ArrivalModel sequence(std::vector<Eigen::VectorXi> vectors);
  static ArrivalModel time_varying(std::vector<long> starts, std::vector<IidArrivals> phases);

  Eigen::Index queues() const { return q_; }
  int a_max() const { return a_max_; }
  /// Arrivals of slot t (t = 1, 2, ...).
  Eigen::VectorXi sample(long t, Rng& rng) const;
  /// Expected arrivals of slot t.
  Eigen::VectorXd mean(long t) const;

 private:
  std::variant<IidArrivals, ArrivalSequence, TimeVaryingArrivals> model_;
  Eigen::Index q_ = 0;
  int a_max_ = 0;
};

enum class PolicyKind { MaxWeight, WeightedMaxWeight, FSquare, FLog, Random };

PolicyKind parse_policy(const std::string& name);
std::string policy_name(PolicyKind kind);

struct Policy {
  PolicyKind kind = PolicyKind::MaxWeight;
  /// Service rates. When set, each served job departs with probability mu_j;
  /// weighted MaxWeight also uses them as weights. Empty means mu = 1.
  Eigen::VectorXd mu;
};

struct SwitchTrace {
  /// queue[t] = Q(t) for t = 0..T when recorded, otherwise empty.
  std::vector<Eigen::VectorXi> queue;
  Eigen::VectorXi final_queue;
  long horizon = 0;
  double time_avg_total = 0.0;  // (1/T) sum_{t=0}^{T-1} Q^Sigma(t)
  double mean_sq_increment = 0.0;  // mean of ||Q(t+1)||^2 - ||Q(t)||^2
  double mean_cross = 0.0;         // mean of Q(t) . (a(t+1) - d(t+1))
  double c_estimate = 0.0;         // mean of ||a(t+1) - d(t+1)||^2
};

SwitchTrace simulate(const ScheduleSet& s, const ArrivalModel& arrivals, const Policy& policy, long horizon,
                     std::uint64_t seed, bool record = false);

/// c / (2 eps_hat); infinite when eps_hat <= 0.
double drift_bound(double c, double eps_hat);

/// MaxWeight as Blackwell's policy: the player picks a schedule sigma_i, the
/// adversary an arrival vector s_j from S, and the payoff is s_j - sigma_i.
struct Embedding {
  PayoffTensor tensor;
  TargetSetd target;
  /// The 2q x 2q matrices diag(delta_k, -delta_k), so d'^T R^k a' = a_k - d_k.
  std::vector<Eigen::MatrixXd> lifted;
};

Embedding embed_as_game(const ScheduleSet& s, int a_max);

/// d'^T R^k a' for every k, with d' = [1, d] and a' = [a, 1].
Eigen::VectorXd lifted_payoff(const Embedding& e, const Eigen::VectorXi& d, const Eigen::VectorXi& a);

/// Adversary that draws arrival vectors from S with the given weights each round.
AdversaryRule embedded_adversary(const ScheduleSet& s, const Eigen::VectorXd& weights);

struct EquivalenceReport {
  long states = 0;
  long agreements = 0;
  bool all_agree() const { return states == agreements; }
};

/// For each state Q, solves Blackwell's step on the embedding with
/// normal Q and checks that every schedule in its support attains
/// max_{sigma in S} Q . sigma.
EquivalenceReport verify_equivalence(const ScheduleSet& s, const std::vector<Eigen::VectorXi>& states);

}  // namespace learnq::switching
