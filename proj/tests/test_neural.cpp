#include <doctest.h>

#include <cmath>
#include <random>

#include "levyforge/error.hpp"
#include "levyforge/neural.hpp"
#include "levyforge/rng.hpp"
#include "support/oracles.hpp"

using namespace levyforge;
using namespace levyforge::neural;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("dense forward") {
  SUBCASE("rectified identity") {
    auto net = DenseNet::zeros({2, 2, 1});
    net.mutable_weights(0) = RowMatrix::Identity(2, 2);
    const std::vector<double> x{1.0, -2.0};
    const auto f = dense_forward(net, x);
    CHECK(f.cache.activations[1][0] == 1.0);
    CHECK(f.cache.activations[1][1] == 0.0);
  }
  SUBCASE("bias passthrough") {
    auto net = DenseNet::zeros({3, 4, 4, 1});
    net.mutable_biases(2)[0] = 3.0;
    for (std::uint64_t s = 0; s < 5; ++s) CHECK(dense_forward(net, random_vector(3, s, 10.0)).output[0] == 3.0);
  }
  SUBCASE("hand-set 2-3-1") {
    auto net = DenseNet::zeros({2, 3, 1});
    auto W1 = net.mutable_weights(0);
    W1 << 0.5, -1.0, 2.0, 0.25, -0.75, 0.1;
    net.mutable_biases(0) << 0.1, -0.2, 0.3;
    net.mutable_weights(1) << 1.5, -2.0, 0.7;
    net.mutable_biases(1) << -0.05;
    const std::vector<double> x{0.8, -0.4};
    const double h0 = std::max(0.0, 0.5 * 0.8 - 1.0 * -0.4 + 0.1);
    const double h1 = std::max(0.0, 2.0 * 0.8 + 0.25 * -0.4 - 0.2);
    const double h2 = std::max(0.0, -0.75 * 0.8 + 0.1 * -0.4 + 0.3);
    const double y = 1.5 * h0 - 2.0 * h1 + 0.7 * h2 - 0.05;
    CHECK(std::abs(dense_forward(net, x).output[0] - y) < 1e-12);
  }
  SUBCASE("shape mismatch") {
    const DenseNet net({3, 4, 1}, 1);
    try {
      dense_forward(net, std::vector<double>{1.0, 2.0});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::shape);
    }
  }
  SUBCASE("initialization bounds and determinism") {
    const DenseNet a({4, 8, 3}, 7), b({4, 8, 3}, 7), c({4, 8, 3}, 8);
    CHECK(std::vector<double>(a.parameters().begin(), a.parameters().end()) ==
          std::vector<double>(b.parameters().begin(), b.parameters().end()));
    CHECK_FALSE(std::vector<double>(a.parameters().begin(), a.parameters().end()) ==
                std::vector<double>(c.parameters().begin(), c.parameters().end()));
    const auto W = a.weights(1);
    for (Eigen::Index k = 0; k < W.size(); ++k) CHECK(std::abs(W.data()[k]) <= 1.0 / std::sqrt(8.0));
    const auto x = random_vector(4, 1);
    CHECK(dense_forward(a, x).output == dense_forward(b, x).output);
  }
}

TEST_CASE("dense backward") {
  SUBCASE("linear 1-1 closed form") {
    auto net = DenseNet::zeros({1, 1});
    net.mutable_weights(0)(0, 0) = 1.7;
    net.mutable_biases(0)[0] = -0.3;
    const double x = 0.9, t = 0.2;
    const auto f = dense_forward(net, std::vector<double>{x});
    const double y = f.output[0];
    const auto g = dense_backward(net, f.cache, std::vector<double>{2.0 * (y - t)});
    CHECK(g[0] == doctest::Approx(2.0 * (y - t) * x).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(2.0 * (y - t)).epsilon(1e-14));
  }
  SUBCASE("dead unit has zero gradient") {
    auto net = DenseNet::zeros({1, 2, 1});
    net.mutable_weights(0) << 1.0, -1.0;
    net.mutable_weights(1) << 1.0, 1.0;
    const auto f = dense_forward(net, std::vector<double>{2.0});  // unit 1 pre-activation is -2
    const auto g = dense_backward(net, f.cache, std::vector<double>{1.0});
    CHECK(g[1] == 0.0);  // W^(0)[1,0]
    CHECK(g[3] == 0.0);  // b^(0)[1]
    CHECK(g[0] == 2.0);
  }
  SUBCASE("stale cache") {
    DenseNet net({2, 3, 1}, 3);
    const auto f = dense_forward(net, std::vector<double>{0.1, 0.2});
    net.mutable_parameters()[0] += 0.5;
    try {
      dense_backward(net, f.cache, std::vector<double>{1.0});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::contract);
    }
  }
  SUBCASE("finite differences, 20 random 4-8-8-3 nets") {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      DenseNet net({4, 8, 8, 3}, 100 + s);
      const auto x = random_vector(4, 200 + s);
      const auto target = random_vector(3, 300 + s);
      auto loss = [&](std::span<const double> theta) {
        DenseNet probe = net;
        auto p = probe.mutable_parameters();
        std::copy(theta.begin(), theta.end(), p.begin());
        const auto y = dense_forward(probe, x).output;
        double l = 0.0;
        for (int k = 0; k < 3; ++k) l += 0.5 * (y[k] - target[k]) * (y[k] - target[k]);
        return l;
      };
      const auto f = dense_forward(net, x);
      std::vector<double> dl(3);
      for (int k = 0; k < 3; ++k) dl[k] = f.output[k] - target[k];
      const auto g = dense_backward(net, f.cache, dl);
      const auto n = oracle::numeric_gradient(loss, {net.parameters().begin(), net.parameters().end()});
      worst = std::max(worst, oracle::max_relative_error(g, n));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient is the identity") {
    AdamState st(3, 0.1);
    std::vector<double> p{1.0, -2.0, 3.0};
    const auto before = p;
    adam_step(st, p, std::vector<double>(3, 0.0));
    CHECK(p == before);
    CHECK(st.t == 1);
  }
  SUBCASE("first step is lr times the gradient sign") {
    AdamState st(1, 0.1);
    std::vector<double> w{0.0};
    adam_step(st, w, std::vector<double>{1.0});
    // m_hat = 1, v_hat = 1 after bias correction.
    CHECK(w[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-14));
  }
  SUBCASE("determinism") {
    AdamState a(2, 0.01), b(2, 0.01);
    std::vector<double> p{0.3, 0.4}, q{0.3, 0.4};
    for (int k = 0; k < 10; ++k) {
      adam_step(a, p, std::vector<double>{0.1 * k, -0.2});
      adam_step(b, q, std::vector<double>{0.1 * k, -0.2});
    }
    CHECK(p == q);
    CHECK(a.m == b.m);
    CHECK(a.v == b.v);
  }
  SUBCASE("beta = 0 reduces to scaled sign descent") {
    AdamState st(2, 0.05);
    st.beta1 = st.beta2 = 0.0;
    st.epsilon = 0.0;
    std::vector<double> p{1.0, 1.0};
    adam_step(st, p, std::vector<double>{3.0, -0.5});
    CHECK(p[0] == doctest::Approx(0.95));
    CHECK(p[1] == doctest::Approx(1.05));
  }
  SUBCASE("sgd") {
    std::vector<double> p{1.0};
    sgd_step(p, std::vector<double>{2.0}, 0.25);
    CHECK(p[0] == 0.5);
  }
  SUBCASE("shape mismatch") {
    AdamState st(2, 0.1);
    std::vector<double> p{1.0};
    CHECK_THROWS_AS(adam_step(st, p, std::vector<double>{1.0}), Error);
  }
}

TEST_CASE("lstm forward") {
  SUBCASE("zero dynamics") {
    auto w = LstmWeights::zeros(1, 3);
    w.set_head_bias(0.42);
    const auto tr = lstm_forward(w, std::vector<double>{1.0, -2.0, 5.0});
    for (const auto& s : tr.steps) CHECK(s.h.isZero());
    CHECK(tr.prediction == 0.42);
  }
  SUBCASE("saturated forget gate keeps the cell") {
    auto w = LstmWeights::zeros(1, 2);
    w.mutable_gate_bias(Gate::forget).setConstant(10.0);
    w.mutable_gate_bias(Gate::input).setConstant(10.0);
    w.mutable_gate(Gate::candidate)(0, 0) = 1.0;  // writes only at the first step
    const auto tr = lstm_forward(w, std::vector<double>{1.0, 0.0, 0.0, 0.0});
    for (std::size_t t = 2; t < tr.steps.size(); ++t) {
      CHECK(tr.steps[t].c[0] == doctest::Approx(tr.steps[t - 1].c[0]).epsilon(1e-4));
    }
  }
  SUBCASE("hand-computed single step") {
    auto w = LstmWeights::zeros(1, 1);
    const double wf = 0.3, wi = -0.6, wc = 0.9, wo = 1.2, bf = 0.1, bi = 0.2, bc = -0.3, bo = 0.05;
    w.mutable_gate(Gate::forget)(0, 0) = wf;
    w.mutable_gate(Gate::input)(0, 0) = wi;
    w.mutable_gate(Gate::candidate)(0, 0) = wc;
    w.mutable_gate(Gate::output)(0, 0) = wo;
    w.mutable_gate_bias(Gate::forget)[0] = bf;
    w.mutable_gate_bias(Gate::input)[0] = bi;
    w.mutable_gate_bias(Gate::candidate)[0] = bc;
    w.mutable_gate_bias(Gate::output)[0] = bo;
    w.mutable_head_weights()[0] = 2.0;
    w.set_head_bias(-0.5);
    const double x = 0.7;
    const double i = sigmoid(wi * x + bi), g = std::tanh(wc * x + bc), o = sigmoid(wo * x + bo);
    const double c = i * g;  // C_0 = 0 so the forget gate does not contribute
    (void)wf;
    (void)bf;
    const double h = o * std::tanh(c);
    const auto tr = lstm_forward(w, std::vector<double>{x});
    CHECK(std::abs(tr.steps[0].c[0] - c) < 1e-12);
    CHECK(std::abs(tr.steps[0].h[0] - h) < 1e-12);
    CHECK(std::abs(tr.prediction - (2.0 * h - 0.5)) < 1e-12);
    CHECK(std::abs(tr.steps[0].f[0] - sigmoid(wf * x + bf)) < 1e-12);
  }
  SUBCASE("gate ranges") {
    const LstmWeights w(2, 5, 9);
    const auto seq = random_vector(2 * 12, 10, 3.0);
    const auto tr = lstm_forward(w, seq);
    for (const auto& s : tr.steps) {
      for (Eigen::Index k = 0; k < 5; ++k) {
        CHECK((s.f[k] > 0.0 && s.f[k] < 1.0));
        CHECK((s.i[k] > 0.0 && s.i[k] < 1.0));
        CHECK((s.o[k] > 0.0 && s.o[k] < 1.0));
        CHECK(std::abs(s.c_tilde[k]) < 1.0);
        CHECK(std::abs(s.h[k]) < 1.0);
      }
    }
    CHECK(lstm_forward(w, seq).prediction == tr.prediction);
  }
  SUBCASE("shape errors") {
    const LstmWeights w(2, 3, 1);
    CHECK_THROWS_AS(lstm_forward(w, std::vector<double>{1.0, 2.0, 3.0}), Error);
    CHECK_THROWS_AS(lstm_forward(w, std::vector<double>{}), Error);
  }
}

TEST_CASE("lstm bptt") {
  SUBCASE("head bias gradient on a zero path") {
    auto w = LstmWeights::zeros(1, 4);
    w.set_head_bias(0.3);
    const auto g = lstm_bptt(w, std::vector<double>{1.0, 2.0}, 1.0);
    CHECK(g.back() == doctest::Approx(2.0 * (0.3 - 1.0)));
  }
  SUBCASE("3-step hidden-4 finite differences") {
    const LstmWeights w(1, 4, 21);
    const std::vector<double> seq{0.3, -0.8, 0.5};
    const auto g = lstm_bptt(w, seq, 0.25);
    auto loss = [&](std::span<const double> theta) {
      LstmWeights probe = w;
      std::copy(theta.begin(), theta.end(), probe.mutable_parameters().begin());
      const double e = lstm_forward(probe, seq).prediction - 0.25;
      return e * e;
    };
    const auto n = oracle::numeric_gradient(loss, {w.parameters().begin(), w.parameters().end()});
    CHECK(oracle::max_relative_error(g, n) < 1e-5);
  }
  SUBCASE("linearity in the loss scale") {
    const LstmWeights w(1, 3, 5);
    const auto tr = lstm_forward(w, std::vector<double>{0.1, 0.2, 0.3});
    const auto a = lstm_backward(w, tr, 0.7);
    const auto b = lstm_backward(w, tr, 1.4);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(2.0 * a[k]).epsilon(1e-14));
  }
  SUBCASE("dropout mask enters the gradient") {
    const LstmWeights w(1, 3, 6);
    const std::vector<double> seq{0.4, -0.1};
    const std::vector<double> mask{2.0, 0.0, 2.0};
    const auto tr = lstm_forward(w, seq, mask);
    const auto g = lstm_backward(w, tr, 1.0);
    auto pred = [&](std::span<const double> theta) {
      LstmWeights probe = w;
      std::copy(theta.begin(), theta.end(), probe.mutable_parameters().begin());
      return lstm_forward(probe, seq, mask).prediction;
    };
    const auto n = oracle::numeric_gradient(pred, {w.parameters().begin(), w.parameters().end()});
    CHECK(oracle::max_relative_error(g, n) < 1e-5);
  }
}

TEST_CASE("lstm training") {
  SUBCASE("constant target") {
    data::WindowedDataset ds;
    ds.lookback = 3;
    ds.horizon = 1;
    // windows of a constant series
    for (int k = 0; k < 20; ++k) {
      ds.inputs.push_back({0.5, 0.5, 0.5});
      ds.targets.push_back({0.6});
    }
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto fit = train_lstm(ds, {8, 0.05, 200, seed});
      CHECK(lstm_mse(fit.weights, ds) < 1e-6);
    }
    const auto r = train_lstm(ds, {8, 0.05, 200, 3});
    CHECK(r.loss_trace.size() == 200);
    const auto again = train_lstm(ds, {8, 0.05, 200, 3});
    CHECK(again.loss_trace == r.loss_trace);
    CHECK(again.weights == r.weights);
  }
  SUBCASE("noiseless AR(1), lookback 2") {
    data::WindowedDataset train, valid;
    Rng rng(77);
    std::uniform_real_distribution<double> start(-1.0, 1.0);
    for (int k = 0; k < 60; ++k) {
      std::vector<double> x{start(rng)};
      for (int t = 0; t < 7; ++t) x.push_back(0.8 * x.back());
      data::append(k < 48 ? train : valid, data::make_windows(x, 2, 1));
    }
    const auto r = train_lstm(train, {12, 0.02, 400, 1});
    CHECK(lstm_mse(r.weights, valid) < 1e-4);
  }
  SUBCASE("divergence names the epoch") {
    data::WindowedDataset ds;
    ds.lookback = 1;
    ds.horizon = 1;
    ds.inputs.push_back({1.0});
    ds.targets.push_back({std::numeric_limits<double>::infinity()});
    try {
      train_lstm(ds, {4, 0.01, 5, 0});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::training);
      CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
  }
  SUBCASE("mini-batch, dropout and decay stay finite") {
    data::WindowedDataset ds;
    ds.lookback = 2;
    ds.horizon = 1;
    for (int k = 0; k < 30; ++k) {
      ds.inputs.push_back({std::sin(0.3 * k), std::sin(0.3 * k + 0.3)});
      ds.targets.push_back({std::sin(0.3 * k + 0.6)});
    }
    LstmHyper h{6, 0.02, 30, 4};
    h.batch_size = 8;
    h.dropout = 0.2;
    h.weight_decay = 1e-4;
    const auto r = train_lstm(ds, h);
    for (double l : r.loss_trace) CHECK(std::isfinite(l));
    CHECK(r.loss_trace.back() < r.loss_trace.front());
    CHECK(train_lstm(ds, h).loss_trace == r.loss_trace);
  }
}
