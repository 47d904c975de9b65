#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "clickseq/common.hpp"
#include "clickseq/ingest.hpp"

namespace clickseq {

/// Dense per-category click counts of one session.
using CountVector = std::vector<int>;
/// One student's sessions in time order.
using CountSequence = std::vector<CountVector>;

struct FitConfig {
  int num_states = 10;
  int max_iter = 200;
  double tol = 1e-6;  // relative log-likelihood change
  std::uint64_t seed = 0;
  double epsilon = 1e-8;  // smoothing floor for every probability
  int threads = 1;
  int max_restarts = 3;
  /// A state whose expected mass falls below this fraction of N is re-seeded.
  double empty_state_fraction = 1e-6;
};

struct FitTrace {
  std::vector<double> loglik;  // one entry per E-step, parameters before the update
  std::vector<int> restart_iterations;  // iterations whose M-step re-seeded a state
  int iterations = 0;
  bool converged = false;
};

struct MmmParams {
  Vector prior;  // K
  Matrix theta;  // K x C
};

struct HmmParams {
  Vector initial;     // K
  Matrix transition;  // K x K
  Matrix emission;    // K x C
};

struct MmmFit {
  MmmParams params;
  FitTrace trace;
};

struct HmmFit {
  HmmParams params;
  FitTrace trace;
};

/// sum_c counts[c] * log(row[c]); the multinomial coefficient is omitted.
double emission_loglik(std::span<const int> counts, std::span<const double> row);

MmmFit mmm_fit(std::span<const CountVector> sessions, const FitConfig& cfg);

/// Most likely component: argmax_k log prior_k + emission_loglik(counts, theta_k),
/// lowest index on ties.
int mmm_assign(std::span<const int> counts, const MmmParams& params);

/// Baum-Welch over many independent sequences with log-space forward-backward.
HmmFit hmm_fit(std::span<const CountSequence> sequences, const FitConfig& cfg);

double hmm_forward_loglik(std::span<const CountVector> sequence, const HmmParams& params);

struct ViterbiResult {
  std::vector<int> path;
  double log_prob = 0.0;
};

ViterbiResult hmm_viterbi(std::span<const CountVector> sequence, const HmmParams& params);

/// Posterior quantities from one forward-backward pass; used by the fitter and
/// exposed for checking against hand computation.
struct ForwardBackward {
  double loglik = 0.0;
  Matrix gamma;  // T x K state posteriors
  Matrix xi;     // K x K expected transition counts summed over t
};

ForwardBackward hmm_forward_backward(std::span<const CountVector> sequence, const HmmParams& params);

/// One EM update of a given model; exposed so single steps can be verified.
MmmParams mmm_em_step(std::span<const CountVector> sessions, const MmmParams& params, double epsilon,
                      Matrix* responsibilities = nullptr);
HmmParams hmm_em_step(std::span<const CountSequence> sequences, const HmmParams& params, double epsilon);

/// Checks row sums and the floor; throws Error(numeric) on violation.
void validate(const MmmParams& params, double epsilon, double sum_tol = 1e-9);
void validate(const HmmParams& params, double epsilon, double sum_tol = 1e-9);

/// Returns an equivalent HMM with states relabeled: new state i is old state perm[i].
HmmParams permute_states(const HmmParams& params, std::span<const int> perm);

/// K x 5 matrix: each emission row aggregated by super group.
Matrix summarize_behaviors(const Matrix& emission, const CategoryMap& map);

struct TransitionReport {
  Vector initial;
  Matrix transition;
  /// Per state, up to three (target, probability) pairs in descending order.
  std::vector<std::vector<std::pair<int, double>>> top;
};

TransitionReport transition_report(const HmmParams& params);

void write_behavior_csv(std::ostream& out, const Matrix& summary);
void write_transition_csv(std::ostream& out, const TransitionReport& report);

/// A fitted behavior model with the metadata written to model files.
struct BehaviorModel {
  std::variant<MmmParams, HmmParams> params;
  std::vector<std::string> category_names;
  std::uint64_t seed = 0;
  double final_loglik = 0.0;

  bool is_hmm() const { return std::holds_alternative<HmmParams>(params); }
  int num_states() const;
  std::size_t num_categories() const { return category_names.size(); }
  std::string_view kind() const { return is_hmm() ? "hmm" : "mmm"; }
};

/// Session states of one student: per-session MLE for MMM, Viterbi for HMM.
std::vector<int> decode_states(const BehaviorModel& model, std::span<const Session> sessions);

void save_behavior_model(const BehaviorModel& model, const std::filesystem::path& path);
BehaviorModel load_behavior_model(const std::filesystem::path& path);
std::string behavior_model_json(const BehaviorModel& model);
BehaviorModel parse_behavior_model(std::string_view json_text);

}  // namespace clickseq
