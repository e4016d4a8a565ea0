/*
 * Copyright (c) 2026, The tfcw Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tfcw/error.hpp"
#include "tfcw/memory_bank.hpp"

using namespace tfcw;

namespace {

Matrix rows_of(std::initializer_list<std::vector<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::copy(row.begin(), row.end(), m.row(r).begin());
    ++r;
  }
  return m;
}

// Eq-style logits from the definition: sum over bank rows of
// exp(-gamma (1 - cos)) into the row's class.
std::vector<double> logits_oracle(const Matrix& bank, const std::vector<int>& labels, std::size_t nc,
                                  std::span<const double> q, double gamma) {
  std::vector<double> out(nc, 0.0);
  double qn = 0.0;
  for (double v : q) qn += v * v;
  qn = std::sqrt(qn);
  for (std::size_t i = 0; i < bank.rows(); ++i) {
    double dotp = 0.0, bn = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) {
      dotp += bank(i, c) * q[c];
      bn += bank(i, c) * bank(i, c);
    }
    out[labels[i]] += std::exp(-gamma * (1.0 - dotp / (qn * std::sqrt(bn))));
  }
  return out;
}

}  // namespace

TEST_CASE("bank construction") {
  const Matrix f = rows_of({{3.0, 4.0}});
  const std::vector<int> l{0};
  const MemoryBank b = build_bank(f, l, 1, 1.0);
  CHECK(b.features()(0, 0) == 0.6);
  CHECK(b.features()(0, 1) == 0.8);

  const Matrix one = rows_of({{1.0, 0.0, 0.0}});
  const std::vector<int> two{2};
  const MemoryBank c = build_bank(one, two, 4, 1.0);
  const Matrix oh = c.labels_onehot();
  CHECK(oh(0, 0) == 0.0);
  CHECK(oh(0, 2) == 1.0);
  CHECK(oh(0, 3) == 0.0);

  std::mt19937_64 rng(41);
  Matrix pre = oracle::random_matrix(20, 9, rng);
  for (std::size_t i = 0; i < 20; ++i) {
    double n = 0.0;
    for (double v : pre.row(i)) n += v * v;
    for (double& v : pre.row(i)) v /= std::sqrt(n);
  }
  const std::vector<int> labels(20, 0);
  CHECK(build_bank(pre, labels, 1, 5.0).features() == pre);

  CHECK_THROWS_AS(build_bank(rows_of({{0.0, 0.0}}), l, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(build_bank(f, std::vector<int>{1}, 1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(build_bank(Matrix(0, 2), std::vector<int>{}, 1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(build_bank(f, l, 1, -1.0), InvalidArgument);
}

TEST_CASE("predict closed forms") {
  const Matrix bank = rows_of({{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<int> labels{0, 1};
  const Prediction p = predict(build_bank(bank, labels, 2, 1.0), rows_of({{1.0, 0.0}}));
  CHECK(p.logits(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.logits(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(p.labels[0] == 0);

  const Prediction self = predict(build_bank(rows_of({{0.2, 0.5}}), std::vector<int>{1}, 3, 50.0),
                                  rows_of({{0.2, 0.5}}));
  CHECK(self.logits(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(self.logits(0, 0) == 0.0);
  CHECK(self.labels[0] == 1);

  const Matrix three = rows_of({{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}});
  const Prediction flat = predict(build_bank(three, std::vector<int>{0, 1, 1}, 2, 0.0), rows_of({{-1.0, 0.3}}));
  CHECK(flat.logits(0, 0) == 1.0);
  CHECK(flat.logits(0, 1) == 2.0);

  CHECK_THROWS_AS(predict(build_bank(bank, labels, 2, 1.0), rows_of({{1.0, 0.0, 0.0}})), InvalidArgument);
}

TEST_CASE("predict matches the definition on random banks") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 5 + rng() % 50, f = 2 + rng() % 20, nc = 1 + rng() % 5;
    const Matrix feats = oracle::random_matrix(m, f, rng);
    std::vector<int> labels(m);
    for (auto& l : labels) l = int(rng() % nc);
    const double gamma = double(rng() % 20);
    const MemoryBank bank = build_bank(feats, labels, nc, gamma);
    const Matrix test = oracle::random_matrix(7, f, rng);
    const Prediction p = predict(bank, test);
    for (std::size_t t = 0; t < 7; ++t) {
      const auto want = logits_oracle(feats, labels, nc, test.row(t), gamma);
      for (std::size_t c = 0; c < nc; ++c) CHECK(p.logits(t, c) == doctest::Approx(want[c]).epsilon(1e-9));
      CHECK(p.labels[t] == argmax(p.logits.row(t)));
    }
    // Batch independence.
    const Prediction single = predict(bank, rows_of({std::vector<double>(test.row(4).begin(), test.row(4).end())}));
    CHECK(std::equal(single.logits.row(0).begin(), single.logits.row(0).end(), p.logits.row(4).begin()));
  }
}

TEST_CASE("logit monotonicity and scale-free argmax") {
  const Matrix bank = rows_of({{1.0, 0.0}, {0.6, 0.8}});
  const std::vector<int> labels{0, 1};
  const Matrix closer = rows_of({{1.0, 0.0}, {0.8, 0.6}});
  const Matrix q = rows_of({{1.0, 0.1}});
  const double before = predict(build_bank(bank, labels, 2, 3.0), q).logits(0, 1);
  const double after = predict(build_bank(closer, labels, 2, 3.0), q).logits(0, 1);
  CHECK(after >= before);

  std::vector<double> v{0.1, 0.7, 0.7, 0.2};
  CHECK(argmax(v) == 1);
  for (double& x : v) x *= 123.0;
  CHECK(argmax(v) == 1);
}

TEST_CASE("pointwise prediction") {
  const Matrix bank = rows_of({{1.0, 0.0}, {0.9, 0.1}, {0.0, 1.0}, {0.1, 0.9}});
  const std::vector<int> labels{0, 0, 1, 1};
  const MemoryBank b = build_bank(bank, labels, 2, 10.0);
  const auto same = predict_pointwise(b, rows_of({{0.0, 1.0}, {0.0, 1.0}}));
  CHECK(same == std::vector<int>{1, 1});
  const auto near = predict_pointwise(b, rows_of({{0.8, 0.3}, {0.2, 0.7}}));
  CHECK(near == std::vector<int>{0, 1});
  // Orthogonal to everything: still a valid label.
  const MemoryBank ortho = build_bank(rows_of({{1.0, 0.0, 0.0}}), std::vector<int>{0}, 2, 1000.0);
  const auto lone = predict_pointwise(ortho, rows_of({{0.0, 0.0, 1.0}}));
  CHECK(lone[0] >= 0);
  CHECK(lone[0] < 2);
}

TEST_CASE("metrics") {
  const std::vector<int> truth{0, 0, 1, 1};
  const auto perfect = compute_metrics(truth, truth, Task::PartSegmentation, 2);
  CHECK(perfect.overall_accuracy == 1.0);
  CHECK(perfect.miou == 1.0);

  // Half of each part flipped: IoU = 1 / (1 + 1 + 1) per part.
  const std::vector<int> half{0, 1, 1, 0};
  CHECK(compute_metrics(half, truth, Task::PartSegmentation, 2).miou == doctest::Approx(1.0 / 3.0));
  // Everything assigned to part 0: IoU_0 = 1/2, IoU_1 = 0.
  const std::vector<int> all0{0, 0, 0, 0};
  CHECK(compute_metrics(all0, truth, Task::PartSegmentation, 2).miou == doctest::Approx(0.25));

  const std::vector<int> wrong{1, 1, 0, 0};
  const auto w = compute_metrics(wrong, truth, Task::Classification, 2);
  CHECK(w.overall_accuracy == 0.0);
  CHECK(w.per_class_accuracy == std::vector<double>{0.0, 0.0});
  CHECK(w.class_support == std::vector<std::size_t>{2, 2});

  // Two shapes, parts absent from a shape are skipped.
  const std::vector<int> p2{0, 0, 2, 2, 2};
  const std::vector<int> t2{0, 0, 2, 2, 1};
  const std::vector<std::size_t> sizes{2, 3};
  const auto m2 = compute_metrics(p2, t2, Task::PartSegmentation, 3, sizes);
  CHECK(m2.miou == doctest::Approx((1.0 + (0.0 + 2.0 / 3.0) / 2.0) / 2.0));

  CHECK_THROWS_AS(compute_metrics(p2, truth, Task::Classification, 2), InvalidArgument);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{3}, std::vector<int>{0}, Task::Classification, 2),
                  InvalidArgument);
}

TEST_CASE("gamma sweep") {
  const Matrix bank = rows_of({{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<int> labels{0, 1};
  const std::vector<double> one{7.0};
  CHECK(sweep_gamma(bank, labels, bank, labels, 2, one) == 7.0);
  const std::vector<double> grid{100.0, 1.0, 10.0};
  CHECK(sweep_gamma(bank, labels, bank, labels, 2, grid) == 1.0);
  CHECK_THROWS_AS(sweep_gamma(bank, labels, bank, labels, 2, std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(sweep_gamma(bank, labels, bank, labels, 2, std::vector<double>{0.0}), InvalidArgument);
}

TEST_CASE("gamma sweep matches exhaustive evaluation") {
  // Many class-0 rows loosely aligned with the query, one class-1 row close
  // to it: small gamma lets the crowd win, large gamma the close row.
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix bank(11, 2);
    std::vector<int> labels(11, 0);
    for (std::size_t i = 0; i < 10; ++i) {
      const double a = 0.6 + 0.05 * double(rng() % 10);
      bank(i, 0) = std::cos(a);
      bank(i, 1) = std::sin(a);
    }
    bank(10, 0) = 1.0;
    bank(10, 1) = 0.02;
    labels[10] = 1;
    const Matrix val = rows_of({{1.0, 0.0}, {0.0, 1.0}});
    const std::vector<int> val_labels{1, 0};
    const std::vector<double> grid{0.5, 1.0, 10.0, 100.0, 1000.0};
    double best = 0.0, best_acc = -1.0;
    for (double g : grid) {
      const auto pred = predict(build_bank(bank, labels, 2, g), val).labels;
      const double acc = double((pred[0] == 1) + (pred[1] == 0)) / 2.0;
      if (acc > best_acc) {
        best_acc = acc;
        best = g;
      }
    }
    CHECK(sweep_gamma(bank, labels, val, val_labels, 2, grid) == best);
  }
}
