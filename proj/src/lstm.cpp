#include "clickseq/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clickseq {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// BCE from the logit, stable for large |z|.
double bce_from_logit(double z, int label) {
  return std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
}

struct Blocks {
  MatrixMap emb, w, u;
  VectorMap b, out;
  double* out_bias;

  Blocks(double* data, int v, int e, int h)
      : emb(data, v, e),
        w(data + static_cast<Eigen::Index>(v) * e, 4 * h, e),
        u(w.data() + 4L * h * e, 4 * h, h),
        b(u.data() + 4L * h * h, 4 * h),
        out(b.data() + 4L * h, h),
        out_bias(out.data() + h) {}
};

struct Tape {
  Matrix gates;   // T x 4H, activated
  Matrix cell;    // (T+1) x H, row 0 is the initial state
  Matrix hidden;  // (T+1) x H
  Matrix tanh_cell;  // T x H
  Vector pooled;
  Vector mask;
  double logit = 0.0;
};

void check_tokens(std::span<const int> tokens, const LstmParams& p) {
  if (tokens.empty()) throw Error(ErrorKind::invalid_argument, "LSTM input sequence is empty");
  for (int t : tokens) {
    if (t < 0 || t >= p.vocab_size()) throw Error(ErrorKind::invalid_argument, "token id outside the LSTM vocabulary");
  }
}

void run_forward(std::span<const int> tokens, const LstmParams& p, double dropout_p, Rng* rng, Tape& tape) {
  check_tokens(tokens, p);
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw Error(ErrorKind::invalid_argument, "dropout must be in [0,1)");
  if (dropout_p > 0.0 && rng == nullptr) throw Error(ErrorKind::invalid_argument, "dropout requires an Rng");
  const int h = p.hidden_dim();
  const auto t_len = static_cast<Eigen::Index>(tokens.size());
  tape.gates.resize(t_len, 4 * h);
  tape.cell.resize(t_len + 1, h);
  tape.hidden.resize(t_len + 1, h);
  tape.tanh_cell.resize(t_len, h);
  tape.cell.row(0).setZero();
  tape.hidden.row(0).setZero();

  const auto emb = p.embedding();
  const auto w = p.input_weights();
  const auto u = p.recurrent_weights();
  const auto b = p.gate_bias();
  Vector z(4 * h);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    z.noalias() = w * emb.row(tokens[static_cast<std::size_t>(t)]).transpose();
    z.noalias() += u * tape.hidden.row(t).transpose();
    z += b;
    auto g = tape.gates.row(t);
    for (int j = 0; j < 3 * h; ++j) g(j) = sigmoid(z(j));
    for (int j = 3 * h; j < 4 * h; ++j) g(j) = std::tanh(z(j));
    for (int j = 0; j < h; ++j) {
      const double c = g(h + j) * tape.cell(t, j) + g(j) * g(3 * h + j);
      tape.cell(t + 1, j) = c;
      tape.tanh_cell(t, j) = std::tanh(c);
      tape.hidden(t + 1, j) = g(2 * h + j) * tape.tanh_cell(t, j);
    }
  }
  tape.pooled = tape.hidden.bottomRows(t_len).colwise().mean().transpose();
  tape.mask = Vector::Ones(h);
  if (dropout_p > 0.0) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double keep = 1.0 - dropout_p;
    for (int j = 0; j < h; ++j) tape.mask(j) = unif(*rng) < keep ? 1.0 / keep : 0.0;
  }
  tape.logit = p.output_weights().dot(tape.pooled.cwiseProduct(tape.mask)) + p.output_bias();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "learning_rate must be positive");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw Error(ErrorKind::invalid_argument, "dropout must be in [0,1)");
  if (epochs < 1 || batch_size < 1) throw Error(ErrorKind::invalid_argument, "epochs and batch_size must be >= 1");
  if (embed_dim < 1 || hidden_dim < 1) throw Error(ErrorKind::invalid_argument, "embed_dim and hidden_dim must be >= 1");
  if (max_seq_len < 1) throw Error(ErrorKind::invalid_argument, "max_seq_len must be >= 1");
}

LstmParams::LstmParams(int vocab_size, int embed_dim, int hidden_dim)
    : vocab_(vocab_size), embed_(embed_dim), hidden_(hidden_dim) {
  if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1) throw Error(ErrorKind::invalid_argument, "bad LSTM shape");
  const Eigen::Index n = static_cast<Eigen::Index>(vocab_size) * embed_dim + 4L * hidden_dim * embed_dim +
                         4L * hidden_dim * hidden_dim + 4L * hidden_dim + hidden_dim + 1;
  flat_ = Vector::Zero(n);
}

LstmParams LstmParams::random(int vocab_size, int embed_dim, int hidden_dim, Rng& rng) {
  LstmParams p(vocab_size, embed_dim, hidden_dim);
  auto fill = [&rng](auto&& m, double scale) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = unif(rng);
  };
  fill(p.embedding(), 0.1);
  fill(p.input_weights(), 1.0 / std::sqrt(static_cast<double>(embed_dim)));
  fill(p.recurrent_weights(), 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
  p.gate_bias().segment(hidden_dim, hidden_dim).setOnes();
  fill(p.output_weights(), 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
  return p;
}

double lstm_forward(std::span<const int> tokens, const LstmParams& params, double dropout_p, Rng* rng) {
  Tape tape;
  run_forward(tokens, params, dropout_p, rng, tape);
  return sigmoid(tape.logit);
}

double lstm_loss_and_grad(std::span<const int> tokens, int label, const LstmParams& params, Vector& grad,
                          double dropout_p, Rng* rng, double* prob_out) {
  if (label != 0 && label != 1) throw Error(ErrorKind::invalid_argument, "label must be 0 or 1");
  if (grad.size() != params.size()) throw Error(ErrorKind::invalid_argument, "gradient buffer has the wrong size");
  Tape tape;
  run_forward(tokens, params, dropout_p, rng, tape);
  const double prob = sigmoid(tape.logit);
  if (prob_out) *prob_out = prob;
  const double loss = bce_from_logit(tape.logit, label);

  const int h = params.hidden_dim();
  const auto t_len = static_cast<Eigen::Index>(tokens.size());
  Blocks g(grad.data(), params.vocab_size(), params.embed_dim(), h);
  const auto emb = params.embedding();
  const auto w = params.input_weights();
  const auto u = params.recurrent_weights();

  const double dlogit = prob - label;
  const Vector dropped = tape.pooled.cwiseProduct(tape.mask);
  g.out += dlogit * dropped;
  *g.out_bias += dlogit;
  const Vector dh_pool = (dlogit / static_cast<double>(t_len)) * params.output_weights().cwiseProduct(tape.mask);

  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  Vector da(4 * h);
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const auto gates = tape.gates.row(t);
    for (int j = 0; j < h; ++j) {
      const double dh = dh_pool(j) + dh_next(j);
      const double ig = gates(j), fg = gates(h + j), og = gates(2 * h + j), cg = gates(3 * h + j);
      const double tc = tape.tanh_cell(t, j);
      const double dc = dc_next(j) + dh * og * (1.0 - tc * tc);
      da(j) = dc * cg * ig * (1.0 - ig);
      da(h + j) = dc * tape.cell(t, j) * fg * (1.0 - fg);
      da(2 * h + j) = dh * tc * og * (1.0 - og);
      da(3 * h + j) = dc * ig * (1.0 - cg * cg);
      dc_next(j) = dc * fg;
    }
    const int tok = tokens[static_cast<std::size_t>(t)];
    g.w.noalias() += da * emb.row(tok);
    g.u.noalias() += da * tape.hidden.row(t);
    g.b += da;
    g.emb.row(tok).noalias() += (w.transpose() * da).transpose();
    dh_next.noalias() = u.transpose() * da;
  }
  return loss;
}

double lstm_batch_loss(std::span<const std::vector<int>> seqs, std::span<const int> labels, const LstmParams& params,
                       Vector* grad) {
  if (seqs.size() != labels.size() || seqs.empty()) throw Error(ErrorKind::invalid_argument, "bad batch");
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(seqs.size());
  Vector scratch;
  if (grad) *grad = Vector::Zero(params.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (grad) {
      scratch = Vector::Zero(params.size());
      total += lstm_loss_and_grad(seqs[i], labels[i], params, scratch);
      *grad += scratch;
    } else {
      Tape tape;
      run_forward(seqs[i], params, 0.0, nullptr, tape);
      total += bce_from_logit(tape.logit, labels[i]);
    }
  }
  if (grad) *grad *= inv;
  return total * inv;
}

LstmTrainResult lstm_train(std::span<const std::vector<int>> seqs, std::span<const int> labels, int vocab_size,
                           const TrainConfig& cfg, const ValidationSet* validation) {
  cfg.validate();
  if (seqs.size() != labels.size()) throw Error(ErrorKind::invalid_argument, "sequences and labels differ in length");
  if (seqs.size() < 2) throw Error(ErrorKind::invalid_argument, "need at least two training sequences");
  const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
  const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!has0 || !has1) throw Error(ErrorKind::invalid_argument, "training data has a single class");

  auto clip = [&cfg](const std::vector<int>& s) {
    return std::span<const int>(s.data(), std::min(s.size(), cfg.max_seq_len));
  };

  Rng init_rng(derive_seed(cfg.seed, 0x15));
  LstmTrainResult result{LstmParams::random(vocab_size, cfg.embed_dim, cfg.hidden_dim, init_rng), {}};
  auto& params = result.params;
  Adam adam(params.size(), cfg.adam());

  const std::size_t n = seqs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  Vector total_grad(params.size());
  std::vector<Vector> member_grads(cfg.threads > 1 ? batch : 1, Vector(params.size()));
  std::vector<double> member_loss(batch), member_prob(batch);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5000 + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      total_grad.setZero();
      auto member = [&](std::size_t j, Vector& g) {
        const std::size_t idx = order[start + j];
        Rng drop_rng(derive_seed(cfg.seed, (static_cast<std::uint64_t>(epoch) << 32) ^ (start + j)));
        g.setZero();
        member_loss[j] = lstm_loss_and_grad(clip(seqs[idx]), labels[idx], params, g, cfg.dropout_p, &drop_rng,
                                            &member_prob[j]);
      };
      if (cfg.threads > 1) {
        parallel_chunks(m, 1, cfg.threads, [&](std::size_t b, std::size_t, std::size_t) { member(b, member_grads[b]); });
        for (std::size_t j = 0; j < m; ++j) total_grad += member_grads[j];
      } else {
        for (std::size_t j = 0; j < m; ++j) {
          member(j, member_grads[0]);
          total_grad += member_grads[0];
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        loss_sum += member_loss[j];
        const int pred = member_prob[j] >= 0.5 ? 1 : 0;
        if (pred == labels[order[start + j]]) ++correct;
      }
      total_grad /= static_cast<double>(m);
      if (!total_grad.allFinite()) {
        throw Error(ErrorKind::numeric, "LSTM training diverged (non-finite gradient) in epoch " + std::to_string(epoch));
      }
      adam.step(params.flat(), total_grad);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(n);
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    if (!std::isfinite(stats.mean_loss)) {
      throw Error(ErrorKind::numeric, "LSTM training diverged (NaN loss) in epoch " + std::to_string(epoch));
    }
    if (validation && !validation->seqs.empty()) {
      std::size_t ok = 0;
      for (std::size_t i = 0; i < validation->seqs.size(); ++i) {
        const int pred = lstm_forward(clip(validation->seqs[i]), params) >= 0.5 ? 1 : 0;
        if (pred == validation->labels[i]) ++ok;
      }
      stats.val_acc = static_cast<double>(ok) / static_cast<double>(validation->seqs.size());
    }
    result.trace.push_back(stats);
  }
  return result;
}

double relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

GradientCheckResult check_gradient(const Vector& params, const Vector& analytic,
                                   const std::function<double(const Vector&)>& loss, double h) {
  GradientCheckResult r;
  r.analytic = analytic;
  r.numeric = Vector::Zero(params.size());
  Vector probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    // Fourth-order central stencil: truncation error O(h^4) allows a larger h,
    // which keeps rounding noise well below tiny gradient entries.
    auto at = [&](double offset) {
      probe(i) = params(i) + offset;
      return loss(probe);
    };
    const double f2 = at(2.0 * h), f1 = at(h), b1 = at(-h), b2 = at(-2.0 * h);
    probe(i) = params(i);
    r.numeric(i) = (-f2 + 8.0 * f1 - 8.0 * b1 + b2) / (12.0 * h);
    const double e = relative_error(analytic(i), r.numeric(i));
    if (e > r.max_rel_error || r.worst_index < 0) {
      r.max_rel_error = e;
      r.worst_index = i;
    }
  }
  return r;
}

GradientCheckResult gradient_check(const LstmParams& params, std::span<const std::vector<int>> seqs,
                                   std::span<const int> labels, double h) {
  Vector analytic;
  lstm_batch_loss(seqs, labels, params, &analytic);
  LstmParams probe = params;
  return check_gradient(params.flat(), analytic,
                        [&](const Vector& x) {
                          probe.flat() = x;
                          return lstm_batch_loss(seqs, labels, probe, nullptr);
                        },
                        h);
}

}  // namespace clickseq
