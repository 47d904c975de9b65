#include "clickseq/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace clickseq {
namespace {

constexpr std::size_t kChunk = 128;

using SparseCounts = std::vector<std::pair<int, int>>;

SparseCounts to_sparse(std::span<const int> counts, std::size_t num_categories) {
  if (counts.size() != num_categories) {
    throw Error(ErrorKind::invalid_argument, "count vector has the wrong number of categories");
  }
  SparseCounts out;
  long total = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 0) throw Error(ErrorKind::invalid_argument, "negative click count");
    if (counts[c] > 0) out.emplace_back(static_cast<int>(c), counts[c]);
    total += counts[c];
  }
  if (total == 0) throw Error(ErrorKind::invalid_argument, "empty session (all-zero counts)");
  return out;
}

Matrix log_of(const Matrix& m) { return m.array().log().matrix(); }

double sparse_loglik(const SparseCounts& counts, const double* log_row) {
  double s = 0.0;
  for (const auto& [c, n] : counts) s += n * log_row[c];
  return s;
}

std::vector<double> global_distribution(const std::vector<const SparseCounts*>& all, std::size_t c) {
  std::vector<double> g(c, 0.0);
  for (const auto* s : all) {
    for (const auto& [cat, n] : *s) g[static_cast<std::size_t>(cat)] += n;
  }
  const double total = std::accumulate(g.begin(), g.end(), 0.0);
  for (double& v : g) v /= total;
  return g;
}

/// Emission row drawn from a Dirichlet centred on the global distribution.
std::vector<double> perturbed_global(const std::vector<double>& global, double concentration, double eps,
                                     Rng& rng) {
  std::vector<double> alpha(global.size());
  for (std::size_t c = 0; c < global.size(); ++c) alpha[c] = std::max(concentration * global[c], 1e-3);
  const auto draw = sample_dirichlet(alpha, rng);
  return floored_normalize(draw, eps);
}

void set_row(Matrix& m, Eigen::Index row, const std::vector<double>& values) {
  for (std::size_t c = 0; c < values.size(); ++c) m(row, static_cast<Eigen::Index>(c)) = values[c];
}

std::vector<double> row_vector(const Matrix& m, Eigen::Index row) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(row, c);
  return v;
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_eigen(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

void check_config(const FitConfig& cfg) {
  if (cfg.num_states < 1) throw Error(ErrorKind::invalid_argument, "number of states must be >= 1");
  if (!(cfg.tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tol must be positive");
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be positive");
  if (cfg.max_iter < 1) throw Error(ErrorKind::invalid_argument, "max_iter must be >= 1");
}

bool has_converged(const FitTrace& trace, double tol) {
  const auto n = trace.loglik.size();
  if (n < 2) return false;
  const double cur = trace.loglik[n - 1];
  const double prev = trace.loglik[n - 2];
  return std::abs(cur - prev) / std::max(std::abs(cur), 1e-300) < tol;
}

// ---------------------------------------------------------------- MMM

struct MmmAccum {
  long double loglik = 0.0L;
  std::vector<double> mass;  // K
  Matrix weighted;           // K x C
};

MmmAccum mmm_estep(const std::vector<SparseCounts>& sessions, const MmmParams& p, int threads,
                   Matrix* responsibilities) {
  const auto k = static_cast<std::size_t>(p.theta.rows());
  const auto c = p.theta.cols();
  const Matrix log_theta = log_of(p.theta);
  const Vector log_prior = p.prior.array().log().matrix();
  const std::size_t n = sessions.size();
  std::vector<MmmAccum> parts(chunk_count(n, kChunk));
  if (responsibilities) responsibilities->resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));

  parallel_chunks(n, kChunk, threads, [&](std::size_t b, std::size_t e, std::size_t ci) {
    MmmAccum acc;
    acc.mass.assign(k, 0.0);
    acc.weighted = Matrix::Zero(static_cast<Eigen::Index>(k), c);
    std::vector<double> lp(k);
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        lp[j] = log_prior(static_cast<Eigen::Index>(j)) +
                sparse_loglik(sessions[i], log_theta.row(static_cast<Eigen::Index>(j)).data());
      }
      const double lse = logsumexp(lp);
      acc.loglik += lse;
      for (std::size_t j = 0; j < k; ++j) {
        const double r = std::exp(lp[j] - lse);
        acc.mass[j] += r;
        for (const auto& [cat, cnt] : sessions[i]) acc.weighted(static_cast<Eigen::Index>(j), cat) += r * cnt;
        if (responsibilities) (*responsibilities)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
      }
    }
    parts[ci] = std::move(acc);
  });

  MmmAccum total;
  total.mass.assign(k, 0.0);
  total.weighted = Matrix::Zero(static_cast<Eigen::Index>(k), c);
  for (const auto& part : parts) {
    total.loglik += part.loglik;
    for (std::size_t j = 0; j < k; ++j) total.mass[j] += part.mass[j];
    total.weighted += part.weighted;
  }
  return total;
}

MmmParams mmm_mstep(const MmmAccum& acc, double eps) {
  const auto k = static_cast<Eigen::Index>(acc.mass.size());
  MmmParams out;
  out.prior = to_eigen(floored_normalize(acc.mass, eps));
  out.theta.resize(k, acc.weighted.cols());
  for (Eigen::Index j = 0; j < k; ++j) set_row(out.theta, j, floored_normalize(row_vector(acc.weighted, j), eps));
  return out;
}

std::vector<SparseCounts> sparse_sessions(std::span<const CountVector> sessions, std::size_t c) {
  std::vector<SparseCounts> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(to_sparse(s, c));
  return out;
}

// ---------------------------------------------------------------- HMM

struct HmmAccum {
  long double loglik = 0.0L;
  std::vector<double> initial;  // K
  Matrix transitions;           // K x K
  Matrix weighted;              // K x C
  std::vector<double> mass;     // K
};

struct Workspace {
  Matrix log_em, log_alpha, log_beta;
  std::vector<double> e, f;
};

/// Forward-backward on one sequence. Accumulates into `acc` when given and
/// optionally returns gamma. Recursions stay in log space; each step shifts
/// by the running maximum before touching the linear-domain transition matrix.
double forward_backward(const std::vector<SparseCounts>& seq, const HmmParams& p, const Vector& log_init,
                        const Matrix& log_b, Workspace& ws, HmmAccum* acc, Matrix* gamma_out,
                        Matrix* xi_out) {
  const auto t_len = static_cast<Eigen::Index>(seq.size());
  const auto k = p.transition.rows();
  const Matrix& a = p.transition;
  ws.log_em.resize(t_len, k);
  ws.log_alpha.resize(t_len, k);
  ws.log_beta.resize(t_len, k);
  ws.e.resize(static_cast<std::size_t>(k));
  ws.f.resize(static_cast<std::size_t>(k));
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      ws.log_em(t, j) = sparse_loglik(seq[static_cast<std::size_t>(t)], log_b.row(j).data());
    }
  }
  for (Eigen::Index j = 0; j < k; ++j) ws.log_alpha(0, j) = log_init(j) + ws.log_em(0, j);
  for (Eigen::Index t = 1; t < t_len; ++t) {
    const double m = ws.log_alpha.row(t - 1).maxCoeff();
    for (Eigen::Index j = 0; j < k; ++j) ws.e[static_cast<std::size_t>(j)] = std::exp(ws.log_alpha(t - 1, j) - m);
    for (Eigen::Index j = 0; j < k; ++j) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) s += ws.e[static_cast<std::size_t>(i)] * a(i, j);
      ws.log_alpha(t, j) = m + std::log(s) + ws.log_em(t, j);
    }
  }
  std::vector<double> last(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) last[static_cast<std::size_t>(j)] = ws.log_alpha(t_len - 1, j);
  const double ll = logsumexp(last);
  if (!acc && !gamma_out && !xi_out) return ll;

  ws.log_beta.row(t_len - 1).setZero();
  for (Eigen::Index t = t_len - 2; t >= 0; --t) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j) m = std::max(m, ws.log_em(t + 1, j) + ws.log_beta(t + 1, j));
    for (Eigen::Index j = 0; j < k; ++j) {
      ws.f[static_cast<std::size_t>(j)] = std::exp(ws.log_em(t + 1, j) + ws.log_beta(t + 1, j) - m);
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) s += a(i, j) * ws.f[static_cast<std::size_t>(j)];
      ws.log_beta(t, i) = m + std::log(s);
    }
  }

  if (gamma_out) gamma_out->resize(t_len, k);
  if (xi_out) *xi_out = Matrix::Zero(k, k);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double g = std::exp(ws.log_alpha(t, j) + ws.log_beta(t, j) - ll);
      if (gamma_out) (*gamma_out)(t, j) = g;
      if (acc) {
        acc->mass[static_cast<std::size_t>(j)] += g;
        if (t == 0) acc->initial[static_cast<std::size_t>(j)] += g;
        for (const auto& [cat, cnt] : seq[static_cast<std::size_t>(t)]) acc->weighted(j, cat) += g * cnt;
      }
    }
    if (t + 1 == t_len) continue;
    const double ma = ws.log_alpha.row(t).maxCoeff();
    double mb = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j) mb = std::max(mb, ws.log_em(t + 1, j) + ws.log_beta(t + 1, j));
    for (Eigen::Index j = 0; j < k; ++j) {
      ws.e[static_cast<std::size_t>(j)] = std::exp(ws.log_alpha(t, j) - ma);
      ws.f[static_cast<std::size_t>(j)] = std::exp(ws.log_em(t + 1, j) + ws.log_beta(t + 1, j) - mb);
    }
    const double scale = std::exp(ma + mb - ll);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double ei = ws.e[static_cast<std::size_t>(i)] * scale;
      for (Eigen::Index j = 0; j < k; ++j) {
        const double x = ei * a(i, j) * ws.f[static_cast<std::size_t>(j)];
        if (acc) acc->transitions(i, j) += x;
        if (xi_out) (*xi_out)(i, j) += x;
      }
    }
  }
  return ll;
}

HmmAccum empty_hmm_accum(Eigen::Index k, Eigen::Index c) {
  HmmAccum acc;
  acc.initial.assign(static_cast<std::size_t>(k), 0.0);
  acc.mass.assign(static_cast<std::size_t>(k), 0.0);
  acc.transitions = Matrix::Zero(k, k);
  acc.weighted = Matrix::Zero(k, c);
  return acc;
}

HmmAccum hmm_estep(const std::vector<std::vector<SparseCounts>>& seqs, const HmmParams& p, int threads) {
  const auto k = p.transition.rows();
  const auto c = p.emission.cols();
  const Vector log_init = p.initial.array().log().matrix();
  const Matrix log_b = log_of(p.emission);
  const std::size_t n = seqs.size();
  std::vector<HmmAccum> parts(chunk_count(n, kChunk));
  parallel_chunks(n, kChunk, threads, [&](std::size_t b, std::size_t e, std::size_t ci) {
    HmmAccum acc = empty_hmm_accum(k, c);
    Workspace ws;
    for (std::size_t i = b; i < e; ++i) {
      acc.loglik += forward_backward(seqs[i], p, log_init, log_b, ws, &acc, nullptr, nullptr);
    }
    parts[ci] = std::move(acc);
  });
  HmmAccum total = empty_hmm_accum(k, c);
  for (const auto& part : parts) {
    total.loglik += part.loglik;
    for (Eigen::Index j = 0; j < k; ++j) {
      total.initial[static_cast<std::size_t>(j)] += part.initial[static_cast<std::size_t>(j)];
      total.mass[static_cast<std::size_t>(j)] += part.mass[static_cast<std::size_t>(j)];
    }
    total.transitions += part.transitions;
    total.weighted += part.weighted;
  }
  return total;
}

HmmParams hmm_mstep(const HmmAccum& acc, double eps) {
  const auto k = acc.transitions.rows();
  HmmParams out;
  out.initial = to_eigen(floored_normalize(acc.initial, eps));
  out.transition.resize(k, k);
  out.emission.resize(k, acc.weighted.cols());
  for (Eigen::Index j = 0; j < k; ++j) {
    set_row(out.transition, j, floored_normalize(row_vector(acc.transitions, j), eps));
    set_row(out.emission, j, floored_normalize(row_vector(acc.weighted, j), eps));
  }
  return out;
}

std::vector<std::vector<SparseCounts>> sparse_sequences(std::span<const CountSequence> seqs, std::size_t c) {
  std::vector<std::vector<SparseCounts>> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    if (s.empty()) throw Error(ErrorKind::invalid_argument, "empty session sequence");
    out.push_back(sparse_sessions(s, c));
  }
  return out;
}

std::size_t categories_of(std::span<const CountSequence> seqs) {
  if (seqs.empty() || seqs.front().empty()) throw Error(ErrorKind::invalid_argument, "no sequences to fit");
  return seqs.front().front().size();
}

}  // namespace

double emission_loglik(std::span<const int> counts, std::span<const double> row) {
  if (counts.size() != row.size()) throw Error(ErrorKind::invalid_argument, "counts and row differ in length");
  double s = 0.0;
  long total = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 0) throw Error(ErrorKind::invalid_argument, "negative click count");
    if (counts[c] == 0) continue;
    if (!(row[c] > 0.0)) throw Error(ErrorKind::numeric, "emission probability is not positive");
    s += counts[c] * std::log(row[c]);
    total += counts[c];
  }
  if (total == 0) throw Error(ErrorKind::invalid_argument, "empty session (all-zero counts)");
  return s;
}

MmmParams mmm_em_step(std::span<const CountVector> sessions, const MmmParams& params, double epsilon,
                      Matrix* responsibilities) {
  const auto sparse = sparse_sessions(sessions, static_cast<std::size_t>(params.theta.cols()));
  return mmm_mstep(mmm_estep(sparse, params, 1, responsibilities), epsilon);
}

MmmFit mmm_fit(std::span<const CountVector> sessions, const FitConfig& cfg) {
  check_config(cfg);
  if (sessions.empty()) throw Error(ErrorKind::invalid_argument, "no sessions to fit");
  const std::size_t c = sessions.front().size();
  const auto k = static_cast<std::size_t>(cfg.num_states);
  if (c < 2) throw Error(ErrorKind::invalid_argument, "need at least two categories");
  if (sessions.size() < k) throw Error(ErrorKind::invalid_argument, "fewer sessions than components");
  const auto sparse = sparse_sessions(sessions, c);

  std::vector<const SparseCounts*> all;
  for (const auto& s : sparse) all.push_back(&s);
  const auto global = global_distribution(all, c);

  Rng rng(cfg.seed);
  MmmFit fit;
  auto& p = fit.params;
  p.prior = to_eigen(floored_normalize(sample_dirichlet(std::vector<double>(k, 1.0), rng), cfg.epsilon));
  p.theta.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
  for (std::size_t j = 0; j < k; ++j) {
    set_row(p.theta, static_cast<Eigen::Index>(j), perturbed_global(global, 10.0, cfg.epsilon, rng));
  }

  int restarts = 0;
  const double n = static_cast<double>(sessions.size());
  for (int it = 0; it < cfg.max_iter; ++it) {
    const auto acc = mmm_estep(sparse, p, cfg.threads, nullptr);
    fit.trace.loglik.push_back(static_cast<double>(acc.loglik));
    fit.trace.iterations = it + 1;
    if (has_converged(fit.trace, cfg.tol)) {
      fit.trace.converged = true;
      break;
    }
    if (it + 1 == cfg.max_iter) break;
    p = mmm_mstep(acc, cfg.epsilon);
    bool restarted = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (acc.mass[j] < cfg.empty_state_fraction * n && restarts < cfg.max_restarts) {
        set_row(p.theta, static_cast<Eigen::Index>(j), perturbed_global(global, 10.0, cfg.epsilon, rng));
        p.prior(static_cast<Eigen::Index>(j)) = 1.0 / static_cast<double>(k);
        restarted = true;
      }
    }
    if (restarted) {
      ++restarts;
      p.prior = to_eigen(floored_normalize(to_std(p.prior), cfg.epsilon));
      fit.trace.restart_iterations.push_back(it);
    }
  }
  return fit;
}

int mmm_assign(std::span<const int> counts, const MmmParams& params) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < params.theta.rows(); ++k) {
    const auto row = params.theta.row(k);
    const double score = std::log(params.prior(k)) +
                         emission_loglik(counts, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(k);
    }
  }
  return best;
}

HmmParams hmm_em_step(std::span<const CountSequence> sequences, const HmmParams& params, double epsilon) {
  const auto seqs = sparse_sequences(sequences, static_cast<std::size_t>(params.emission.cols()));
  return hmm_mstep(hmm_estep(seqs, params, 1), epsilon);
}

HmmFit hmm_fit(std::span<const CountSequence> sequences, const FitConfig& cfg) {
  check_config(cfg);
  const std::size_t c = categories_of(sequences);
  const auto k = static_cast<std::size_t>(cfg.num_states);
  if (c < 2) throw Error(ErrorKind::invalid_argument, "need at least two categories");
  const auto seqs = sparse_sequences(sequences, c);

  std::vector<const SparseCounts*> all;
  std::size_t total_sessions = 0;
  for (const auto& s : seqs) {
    for (const auto& x : s) all.push_back(&x);
    total_sessions += s.size();
  }
  const auto global = global_distribution(all, c);

  Rng rng(cfg.seed);
  HmmFit fit;
  auto& p = fit.params;
  const auto kk = static_cast<Eigen::Index>(k);
  const std::vector<double> flat(k, 1.0);
  p.initial = to_eigen(floored_normalize(sample_dirichlet(flat, rng), cfg.epsilon));
  p.transition.resize(kk, kk);
  for (Eigen::Index j = 0; j < kk; ++j) {
    set_row(p.transition, j, floored_normalize(sample_dirichlet(flat, rng), cfg.epsilon));
  }
  p.emission.resize(kk, static_cast<Eigen::Index>(c));
  for (Eigen::Index j = 0; j < kk; ++j) set_row(p.emission, j, perturbed_global(global, 10.0, cfg.epsilon, rng));

  int restarts = 0;
  const double n = static_cast<double>(total_sessions);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const auto acc = hmm_estep(seqs, p, cfg.threads);
    fit.trace.loglik.push_back(static_cast<double>(acc.loglik));
    fit.trace.iterations = it + 1;
    if (has_converged(fit.trace, cfg.tol)) {
      fit.trace.converged = true;
      break;
    }
    if (it + 1 == cfg.max_iter) break;
    p = hmm_mstep(acc, cfg.epsilon);
    bool restarted = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (acc.mass[j] < cfg.empty_state_fraction * n && restarts < cfg.max_restarts) {
        const auto jj = static_cast<Eigen::Index>(j);
        set_row(p.emission, jj, perturbed_global(global, 10.0, cfg.epsilon, rng));
        set_row(p.transition, jj, floored_normalize(sample_dirichlet(flat, rng), cfg.epsilon));
        restarted = true;
      }
    }
    if (restarted) {
      ++restarts;
      fit.trace.restart_iterations.push_back(it);
    }
  }
  return fit;
}

ForwardBackward hmm_forward_backward(std::span<const CountVector> sequence, const HmmParams& params) {
  if (sequence.empty()) throw Error(ErrorKind::invalid_argument, "empty session sequence");
  const auto seq = sparse_sessions(sequence, static_cast<std::size_t>(params.emission.cols()));
  const Vector log_init = params.initial.array().log().matrix();
  const Matrix log_b = log_of(params.emission);
  Workspace ws;
  ForwardBackward out;
  out.loglik = forward_backward(seq, params, log_init, log_b, ws, nullptr, &out.gamma, &out.xi);
  return out;
}

double hmm_forward_loglik(std::span<const CountVector> sequence, const HmmParams& params) {
  if (sequence.empty()) throw Error(ErrorKind::invalid_argument, "empty session sequence");
  const auto seq = sparse_sessions(sequence, static_cast<std::size_t>(params.emission.cols()));
  const Vector log_init = params.initial.array().log().matrix();
  const Matrix log_b = log_of(params.emission);
  Workspace ws;
  return forward_backward(seq, params, log_init, log_b, ws, nullptr, nullptr, nullptr);
}

ViterbiResult hmm_viterbi(std::span<const CountVector> sequence, const HmmParams& params) {
  if (sequence.empty()) throw Error(ErrorKind::invalid_argument, "empty session sequence");
  const auto seq = sparse_sessions(sequence, static_cast<std::size_t>(params.emission.cols()));
  const auto k = params.transition.rows();
  const auto t_len = static_cast<Eigen::Index>(seq.size());
  const Matrix log_a = log_of(params.transition);
  const Matrix log_b = log_of(params.emission);
  Matrix delta(t_len, k);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> back(t_len, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    delta(0, j) = std::log(params.initial(j)) + sparse_loglik(seq[0], log_b.row(j).data());
  }
  for (Eigen::Index t = 1; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index i = 0; i < k; ++i) {
        const double v = delta(t - 1, i) + log_a(i, j);
        if (v > best) {
          best = v;
          arg = static_cast<int>(i);
        }
      }
      delta(t, j) = best + sparse_loglik(seq[static_cast<std::size_t>(t)], log_b.row(j).data());
      back(t, j) = arg;
    }
  }
  ViterbiResult out;
  out.path.resize(static_cast<std::size_t>(t_len));
  int state = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (delta(t_len - 1, j) > best) {
      best = delta(t_len - 1, j);
      state = static_cast<int>(j);
    }
  }
  out.log_prob = best;
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    out.path[static_cast<std::size_t>(t)] = state;
    if (t > 0) state = back(t, state);
  }
  return out;
}

namespace {

void validate_row(const double* row, Eigen::Index n, double eps, double tol, const char* what) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(row[i] >= eps * (1.0 - 1e-9))) throw Error(ErrorKind::numeric, std::string(what) + " entry below floor");
    s += row[i];
  }
  if (std::abs(s - 1.0) > tol) throw Error(ErrorKind::numeric, std::string(what) + " row does not sum to one");
}

}  // namespace

void validate(const MmmParams& p, double eps, double tol) {
  if (p.prior.size() != p.theta.rows()) throw Error(ErrorKind::schema, "prior/theta shape mismatch");
  validate_row(p.prior.data(), p.prior.size(), eps, tol, "prior");
  for (Eigen::Index k = 0; k < p.theta.rows(); ++k) validate_row(p.theta.row(k).data(), p.theta.cols(), eps, tol, "theta");
}

void validate(const HmmParams& p, double eps, double tol) {
  const auto k = p.initial.size();
  if (p.transition.rows() != k || p.transition.cols() != k || p.emission.rows() != k) {
    throw Error(ErrorKind::schema, "HMM parameter shapes are inconsistent");
  }
  validate_row(p.initial.data(), k, eps, tol, "initial");
  for (Eigen::Index i = 0; i < k; ++i) {
    validate_row(p.transition.row(i).data(), k, eps, tol, "transition");
    validate_row(p.emission.row(i).data(), p.emission.cols(), eps, tol, "emission");
  }
}

HmmParams permute_states(const HmmParams& params, std::span<const int> perm) {
  const auto k = params.initial.size();
  if (static_cast<Eigen::Index>(perm.size()) != k) throw Error(ErrorKind::invalid_argument, "permutation size");
  HmmParams out;
  out.initial.resize(k);
  out.transition.resize(k, k);
  out.emission.resize(k, params.emission.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto pi = perm[static_cast<std::size_t>(i)];
    out.initial(i) = params.initial(pi);
    out.emission.row(i) = params.emission.row(pi);
    for (Eigen::Index j = 0; j < k; ++j) out.transition(i, j) = params.transition(pi, perm[static_cast<std::size_t>(j)]);
  }
  return out;
}

Matrix summarize_behaviors(const Matrix& emission, const CategoryMap& map) {
  if (static_cast<std::size_t>(emission.cols()) != map.size()) {
    throw Error(ErrorKind::schema, "emission width does not match the category map");
  }
  Matrix out = Matrix::Zero(emission.rows(), kNumSuperGroups);
  for (Eigen::Index k = 0; k < emission.rows(); ++k) {
    for (Eigen::Index c = 0; c < emission.cols(); ++c) {
      out(k, static_cast<int>(map.super_group(static_cast<int>(c)))) += emission(k, c);
    }
  }
  return out;
}

TransitionReport transition_report(const HmmParams& params) {
  TransitionReport r;
  r.initial = params.initial;
  r.transition = params.transition;
  const auto k = params.transition.rows();
  for (Eigen::Index i = 0; i < k; ++i) {
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return params.transition(i, a) > params.transition(i, b); });
    std::vector<std::pair<int, double>> top;
    for (std::size_t j = 0; j < std::min<std::size_t>(3, order.size()); ++j) {
      top.emplace_back(order[j], params.transition(i, order[j]));
    }
    r.top.push_back(std::move(top));
  }
  return r;
}

void write_behavior_csv(std::ostream& out, const Matrix& summary) {
  out << "state,lecture,quiz,forum,class,wiki\n";
  for (Eigen::Index k = 0; k < summary.rows(); ++k) {
    out << k;
    for (Eigen::Index g = 0; g < summary.cols(); ++g) out << ',' << format_double(summary(k, g));
    out << '\n';
  }
}

void write_transition_csv(std::ostream& out, const TransitionReport& report) {
  const auto k = report.transition.rows();
  out << "state,initial";
  for (Eigen::Index j = 0; j < k; ++j) out << ",to_" << j;
  out << ",top1,top1_p,top2,top2_p,top3,top3_p\n";
  for (Eigen::Index i = 0; i < k; ++i) {
    out << i << ',' << format_double(report.initial(i));
    for (Eigen::Index j = 0; j < k; ++j) out << ',' << format_double(report.transition(i, j));
    const auto& top = report.top[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < 3; ++j) {
      if (j < top.size()) out << ',' << top[j].first << ',' << format_double(top[j].second);
      else out << ",,";
    }
    out << '\n';
  }
}

int BehaviorModel::num_states() const {
  if (const auto* h = std::get_if<HmmParams>(&params)) return static_cast<int>(h->initial.size());
  return static_cast<int>(std::get<MmmParams>(params).prior.size());
}

std::vector<int> decode_states(const BehaviorModel& model, std::span<const Session> sessions) {
  if (sessions.empty()) return {};
  CountSequence seq;
  seq.reserve(sessions.size());
  for (const auto& s : sessions) {
    if (s.counts.size() != model.num_categories()) {
      throw Error(ErrorKind::schema, "category dimension mismatch between sessions and behavior model");
    }
    seq.push_back(s.counts);
  }
  if (const auto* h = std::get_if<HmmParams>(&model.params)) return hmm_viterbi(seq, *h).path;
  const auto& m = std::get<MmmParams>(model.params);
  std::vector<int> out;
  out.reserve(seq.size());
  for (const auto& counts : seq) out.push_back(mmm_assign(counts, m));
  return out;
}

}  // namespace clickseq
