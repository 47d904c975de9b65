#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "clickseq/adam.hpp"
#include "clickseq/baselines.hpp"
#include "clickseq/classifier.hpp"
#include "clickseq/lstm.hpp"

using namespace clickseq;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Scalar reference forward pass, gates stacked input, forget, output, cell.
double reference_forward(const std::vector<int>& tokens, const LstmParams& p) {
  const int h = p.hidden_dim(), e = p.embed_dim();
  std::vector<double> hid(static_cast<std::size_t>(h), 0.0), cell(static_cast<std::size_t>(h), 0.0),
      pooled(static_cast<std::size_t>(h), 0.0);
  for (int tok : tokens) {
    std::vector<double> z(static_cast<std::size_t>(4 * h));
    for (int r = 0; r < 4 * h; ++r) {
      double s = p.gate_bias()(r);
      for (int k = 0; k < e; ++k) s += p.input_weights()(r, k) * p.embedding()(tok, k);
      for (int k = 0; k < h; ++k) s += p.recurrent_weights()(r, k) * hid[static_cast<std::size_t>(k)];
      z[static_cast<std::size_t>(r)] = s;
    }
    for (int j = 0; j < h; ++j) {
      const auto u = static_cast<std::size_t>(j);
      const double ig = sig(z[u]), fg = sig(z[u + static_cast<std::size_t>(h)]),
                   og = sig(z[u + 2 * static_cast<std::size_t>(h)]), g = std::tanh(z[u + 3 * static_cast<std::size_t>(h)]);
      cell[u] = fg * cell[u] + ig * g;
      hid[u] = og * std::tanh(cell[u]);
      pooled[u] += hid[u] / static_cast<double>(tokens.size());
    }
  }
  double logit = p.output_bias();
  for (int j = 0; j < h; ++j) logit += p.output_weights()(j) * pooled[static_cast<std::size_t>(j)];
  return sig(logit);
}

LstmParams patterned(int v, int e, int h) {
  LstmParams p(v, e, h);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.flat()(i) = 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);
  return p;
}

SequenceSample seq_sample(std::vector<int> tokens, int label, FeatureSet fs = FeatureSet::category) {
  SequenceSample s;
  s.feature_set = fs;
  s.tokens = std::move(tokens);
  s.token_ts.assign(s.tokens.size(), 0);
  s.label = label;
  return s;
}

}  // namespace

TEST_CASE("lstm: zero network outputs one half") {
  LstmParams p(5, 3, 4);
  CHECK(lstm_forward(std::vector<int>{1, 2, 3}, p) == 0.5);
  CHECK(lstm_forward(std::vector<int>{0}, p) == 0.5);
}

TEST_CASE("lstm: length-1 fixture with H=2, E=2 matches hand arithmetic") {
  const auto p = patterned(2, 2, 2);
  // Unrolled by hand: c0 = h0 = 0, so only the input, output and cell gates matter.
  const auto emb = p.embedding();
  const auto w = p.input_weights();
  const auto b = p.gate_bias();
  double z[8];
  for (int r = 0; r < 8; ++r) z[r] = w(r, 0) * emb(1, 0) + w(r, 1) * emb(1, 1) + b(r);
  const double c1a = sig(z[0]) * std::tanh(z[6]);
  const double c1b = sig(z[1]) * std::tanh(z[7]);
  const double h1a = sig(z[4]) * std::tanh(c1a);
  const double h1b = sig(z[5]) * std::tanh(c1b);
  // Pooling over one step is the identity.
  const double out = sig(p.output_weights()(0) * h1a + p.output_weights()(1) * h1b + p.output_bias());
  CHECK(std::abs(lstm_forward(std::vector<int>{1}, p) - out) < 1e-9);
}

TEST_CASE("lstm: forward matches a scalar reference on random sequences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Rng r(trial);
    const auto p = LstmParams::random(6, 3, 5, r);
    std::vector<int> tokens(1 + rng() % 12);
    for (auto& t : tokens) t = static_cast<int>(rng() % 6);
    const double got = lstm_forward(tokens, p);
    CHECK(std::abs(got - reference_forward(tokens, p)) < 1e-12);
    CHECK(got > 0.0);
    CHECK(got < 1.0);
    CHECK(lstm_forward(tokens, p) == got);  // pure without dropout
  }
}

TEST_CASE("lstm: order matters for the network, not for counts") {
  Rng r(3);
  const auto p = LstmParams::random(4, 3, 4, r);
  const std::vector<int> a{0, 0, 1, 2, 3}, b{3, 2, 1, 0, 0};
  CHECK(lstm_forward(a, p) != lstm_forward(b, p));
  CHECK(count_vector(seq_sample(a, 0), 4) == count_vector(seq_sample(b, 0), 4));
}

TEST_CASE("lstm: analytic gradient matches central differences") {
  std::mt19937_64 rng(5);
  Rng r(5);
  const auto p = LstmParams::random(5, 3, 4, r);
  std::vector<std::vector<int>> seqs;
  std::vector<int> labels{0, 1, 1};
  for (int i = 0; i < 3; ++i) {
    std::vector<int> s(1 + rng() % 6);
    for (auto& t : s) t = static_cast<int>(rng() % 4);  // token 4 never appears
    seqs.push_back(s);
  }
  const auto res = gradient_check(p, seqs, labels);
  CHECK(res.max_rel_error < 1e-4);
  // Embedding row 4 is unused, so its gradient is exactly zero.
  for (int k = 0; k < 3; ++k) CHECK(res.analytic(4 * 3 + k) == 0.0);
}

TEST_CASE("relative error and generic gradient check") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  const auto loss = [](const Vector& v) { return v.squaredNorm() + v(0) * v(1); };
  Vector grad(3);
  grad << 2 * x(0) + x(1), 2 * x(1) + x(0), 2 * x(2);
  CHECK(check_gradient(x, grad, loss, 1e-5).max_rel_error < 1e-8);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Adam adam(4, {});
  Vector p(4);
  p << 1, 2, 3, 4;
  const Vector before = p;
  for (int i = 0; i < 5; ++i) adam.step(p, Vector::Zero(4));
  CHECK(p == before);
  CHECK(adam.steps() == 5);
}

TEST_CASE("adam: first step moves each coordinate by the learning rate") {
  Adam adam(2, {0.1, 0.9, 0.999, 1e-8});
  Vector p = Vector::Zero(2);
  Vector g(2);
  g << 3.0, -0.01;
  adam.step(p, g);
  CHECK(p(0) == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p(1) == doctest::Approx(0.1).epsilon(1e-4));
}

TEST_CASE("lstm: memorizes two one-token sequences") {
  const std::vector<std::vector<int>> seqs{{0}, {1}};
  const std::vector<int> labels{0, 1};
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.dropout_p = 0.0;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 4;
  cfg.learning_rate = 0.01;
  const auto res = lstm_train(seqs, labels, 2, cfg);
  CHECK(label_from_probability(lstm_forward(seqs[0], res.params)) == 0);
  CHECK(label_from_probability(lstm_forward(seqs[1], res.params)) == 1);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i].mean_loss <= res.trace[i - 1].mean_loss);
  CHECK(res.trace.back().mean_loss < res.trace.front().mean_loss);
}

TEST_CASE("lstm: training is reproducible under a seed") {
  std::vector<std::vector<int>> seqs;
  std::vector<int> labels;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 40; ++i) {
    std::vector<int> s(2 + rng() % 8);
    for (auto& t : s) t = static_cast<int>(rng() % 5);
    seqs.push_back(s);
    labels.push_back(static_cast<int>(i % 2));
  }
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 6;
  cfg.batch_size = 8;
  cfg.seed = 17;
  const auto a = lstm_train(seqs, labels, 5, cfg);
  const auto b = lstm_train(seqs, labels, 5, cfg);
  CHECK(a.params.flat() == b.params.flat());
  cfg.threads = 3;
  const auto c = lstm_train(seqs, labels, 5, cfg);
  CHECK(a.params.flat() == c.params.flat());
  cfg.seed = 18;
  const auto d = lstm_train(seqs, labels, 5, cfg);
  CHECK(a.params.flat() != d.params.flat());
  std::vector<int> one_class(40, 1);
  CHECK_THROWS_AS(lstm_train(seqs, one_class, 5, cfg), Error);
}

TEST_CASE("standardizer centers and scales, constant columns stay finite") {
  Matrix x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const auto s = Standardizer::fit(x);
  const Matrix z = s.apply(x);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.col(1).allFinite());
  CHECK(z(0, 1) == 0.0);
}

TEST_CASE("svm: separable lengths and an indicator token") {
  Matrix len(20, 1);
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    len(i, 0) = i % 2 ? 1000 : 10;
    labels.push_back(i % 2);
  }
  const auto m = linear_svm_train(len, labels, LinearFeature::length, {});
  const Vector margins = m.margins(len);
  for (int i = 0; i < 20; ++i) CHECK(label_from_margin(margins(i)) == labels[static_cast<std::size_t>(i)]);

  std::mt19937_64 rng(1);
  Matrix counts = Matrix::Zero(40, 6);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    for (int c = 0; c < 5; ++c) counts(i, c) = static_cast<double>(rng() % 4);
    counts(i, 5) = i % 2 ? 1 + static_cast<double>(rng() % 3) : 0.0;
    y.push_back(i % 2);
  }
  const auto mc = linear_svm_train(counts, y, LinearFeature::counts, {});
  const Vector mm = mc.margins(counts);
  for (int i = 0; i < 40; ++i) CHECK(label_from_margin(mm(i)) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("svm: objective within 1% of a long subgradient reference") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  const int n = 60, d = 4;
  Matrix x(n, d);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    y.push_back(static_cast<int>(i % 2));
    for (int j = 0; j < d; ++j) x(i, j) = nd(rng) + (y.back() ? 0.6 : -0.6) * (j < 2);
  }
  SvmConfig cfg;
  cfg.lambda = 0.05;
  cfg.epochs = 200;
  const auto model = linear_svm_train(x, y, LinearFeature::counts, cfg);
  const Matrix z = model.scaler.apply(x);
  const double got = svm_objective(model.w, model.b, z, y, cfg.lambda);

  // Full-batch subgradient descent, step 1/(lambda t), best iterate kept.
  Vector w = Vector::Zero(d);
  double b = 0.0, best = svm_objective(w, b, z, y, cfg.lambda);
  for (int t = 1; t <= 200000; ++t) {
    Vector gw = cfg.lambda * w;
    double gb = 0.0;
    for (int i = 0; i < n; ++i) {
      const double yi = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
      if (yi * (z.row(i).dot(w) + b) < 1.0) {
        gw -= yi * z.row(i).transpose() / n;
        gb -= yi / n;
      }
    }
    const double eta = 1.0 / (cfg.lambda * (t + 100));
    w -= eta * gw;
    b -= eta * gb;
    best = std::min(best, svm_objective(w, b, z, y, cfg.lambda));
  }
  CHECK(got <= best * 1.01);
}

TEST_CASE("mlp: gradient check and XOR capacity") {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> y{0, 1, 1, 0};
  MlpConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 3000;
  cfg.learning_rate = 0.01;
  const auto m = mlp_train(x, y, cfg);
  const Vector p = m.predict_proba(x);
  for (int i = 0; i < 4; ++i) CHECK(label_from_probability(p(i)) == y[static_cast<std::size_t>(i)]);

  // Training parks hidden units on the rectifier kink where finite differences
  // are meaningless, so the gradient is checked at random weights instead.
  MlpParams fresh(2, 16);
  std::mt19937_64 init(1);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < fresh.flat().size(); ++i) fresh.flat()(i) = 0.5 * nd(init);
  CHECK(mlp_gradient_check(fresh, m.scaler.apply(x), y).max_rel_error < 1e-4);

  Matrix sep(10, 3);
  std::vector<int> ys;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    ys.push_back(i % 2);
    for (int j = 0; j < 3; ++j) sep(i, j) = static_cast<double>(rng() % 5) + 10.0 * ys.back() * (j == 0);
  }
  cfg.epochs = 300;
  const auto ms = mlp_train(sep, ys, cfg);
  const Vector ps = ms.predict_proba(sep);
  for (int i = 0; i < 10; ++i) CHECK(label_from_probability(ps(i)) == ys[static_cast<std::size_t>(i)]);
}

TEST_CASE("decision rules at the threshold") {
  CHECK(label_from_probability(0.5) == 1);
  CHECK(label_from_probability(0.4999999) == 0);
  CHECK(label_from_margin(3.2) == 1);
  CHECK(label_from_margin(-0.1) == 0);
  CHECK(label_from_margin(0.0) == 1);
}

TEST_CASE("classifiers: batch prediction and json round trip agree with single prediction") {
  std::mt19937_64 rng(3);
  std::vector<SequenceSample> train;
  for (int i = 0; i < 60; ++i) {
    std::vector<int> t(3 + rng() % 10);
    for (auto& x : t) x = static_cast<int>(rng() % 6);
    const int label = static_cast<int>(i % 2);
    if (label) t.push_back(5);
    train.push_back(seq_sample(t, label));
  }
  ClassifierConfig cfg;
  cfg.lstm.epochs = 2;
  cfg.lstm.embed_dim = 4;
  cfg.lstm.hidden_dim = 4;
  cfg.mlp.epochs = 5;
  cfg.mlp.hidden = 8;
  for (auto kind : {ModelKind::lstm, ModelKind::svm_l, ModelKind::svm_c, ModelKind::mlp}) {
    CAPTURE(to_string(kind));
    const auto model = train_classifier(kind, train, 6, 42, cfg);
    CHECK(model.kind == kind);
    const auto batch = predict_labels(model, train);
    for (std::size_t i = 0; i < train.size(); ++i) CHECK(batch[i] == predict_label(model, train[i]));
    const auto back = parse_classifier(classifier_json(model));
    CHECK(back.vocab_hash == 42);
    CHECK(back.vocab_size == 6);
    for (std::size_t i = 0; i < train.size(); ++i) {
      CHECK(classifier_score(back, train[i]) == classifier_score(model, train[i]));
    }
    CHECK(classifier_json(back) == classifier_json(model));
  }
  CHECK(parse_model_kind("svm_c") == ModelKind::svm_c);
  CHECK_THROWS_AS(parse_model_kind("rbf"), Error);
  CHECK_THROWS_AS(parse_classifier("{}"), Error);
}

TEST_CASE("count baselines cannot tell order-permuted sequences apart") {
  std::vector<SequenceSample> train;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 40; ++i) {
    std::vector<int> t(5 + rng() % 5);
    for (auto& x : t) x = static_cast<int>(rng() % 4);
    train.push_back(seq_sample(t, static_cast<int>(i % 2)));
  }
  const auto svm = train_classifier(ModelKind::svm_c, train, 4, 0, {});
  for (const auto& s : train) {
    auto shuffled = s;
    std::shuffle(shuffled.tokens.begin(), shuffled.tokens.end(), rng);
    CHECK(classifier_score(svm, shuffled) == classifier_score(svm, s));
  }
}

TEST_CASE("training log csv") {
  std::vector<EpochStats> trace{{1, 0.7, 0.5, 0.55}, {2, 0.6, 0.6, std::nullopt}};
  std::ostringstream out;
  write_training_log(out, trace);
  CHECK(out.str().rfind("epoch,mean_loss,train_acc,val_acc\n1,0.7,0.5,0.55\n2,0.6,0.6,", 0) == 0);
}
