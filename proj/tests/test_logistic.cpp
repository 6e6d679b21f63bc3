#include "invlab/logistic.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace invlab;

namespace {

const LogisticParams kTruth{0.13, 1e6, 1e4, 0.0};

LogisticDataset clean(int m = 401) {
  return generate_logistic_data(kTruth, 0, 200, m, NoiseSpec{}, 1);
}

}  // namespace

TEST_CASE("closed form satisfies the ODE") {
  const LogisticParams p{0.3, 50, 2, 1.0};
  CHECK(logistic_exact(1.0, p) == doctest::Approx(2.0));
  for (double t : {1.5, 4.0, 9.0, 20.0}) {
    const double h = 1e-5;
    const double d = (logistic_exact(t + h, p) - logistic_exact(t - h, p)) / (2 * h);
    CHECK(d == doctest::Approx(logistic_rhs(t, logistic_exact(t, p), p)).epsilon(1e-7));
  }
  CHECK(logistic_exact(200.0, p) == doctest::Approx(50.0));
}

TEST_CASE("analytic rates invert the closed form") {
  const auto data = generate_logistic_data(kTruth, 1, 75, 75, NoiseSpec{}, 0);
  const TimeSeries rates = analytic_r_series(data.series, kTruth.K, kTruth.p0, kTruth.t0);
  CHECK(rates.size() == 75);
  for (Eigen::Index i = 0; i < rates.size(); ++i) {
    CHECK(rates.values(i) == doctest::Approx(0.13).epsilon(1e-12));
  }
  CHECK(analytic_r_reconstruction_error(data.series, rates, kTruth.K, kTruth.p0, kTruth.t0) <
        1e-12);
}

TEST_CASE("parameter vectors round-trip in every mode") {
  for (FitMode m : {FitMode::r_only, FitMode::r_and_K, FitMode::r_and_logK}) {
    const LogisticParams back = params_from_vector(vector_from_params(kTruth, m), m, kTruth);
    CHECK(back.r == doctest::Approx(kTruth.r));
    CHECK(back.K == doctest::Approx(kTruth.K));
  }
}

TEST_CASE("loss vanishes at the truth and its derivatives match finite differences") {
  const auto data = clean();
  CHECK(normalized_loss(Vector::Constant(1, 0.13), data, FitMode::r_only, kTruth) < 1e-28);
  Rng rng(2);
  std::uniform_real_distribution<double> ur(0.05, 0.3);
  for (int i = 0; i < 10; ++i) {
    for (FitMode m : {FitMode::r_only, FitMode::r_and_logK}) {
      Vector th = vector_from_params(kTruth, m);
      th(0) = ur(rng);
      const auto f = [&](const Vector& x) { return normalized_loss(x, data, m, kTruth); };
      const Vector g = normalized_loss_gradient(th, data, m, kTruth);
      Vector fd(th.size());
      for (Eigen::Index j = 0; j < th.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(th(j)));
        Vector a = th, b = th;
        a(j) += h;
        b(j) -= h;
        fd(j) = (f(a) - f(b)) / (2 * h);
      }
      CHECK((g - fd).norm() <= 1e-5 * std::max(g.norm(), 1e-8));
      const Matrix hs = normalized_loss_hessian(th, data, m, kTruth);
      CHECK((hs - hs.transpose()).norm() <= 1e-10 * hs.norm());
    }
  }
}

TEST_CASE("noise is seeded") {
  NoiseSpec n;
  n.kind = NoiseKind::gaussian_pct_of_max;
  const auto a = generate_logistic_data(kTruth, 0, 200, 101, n, 7);
  const auto b = generate_logistic_data(kTruth, 0, 200, 101, n, 7);
  const auto c = generate_logistic_data(kTruth, 0, 200, 101, n, 8);
  CHECK(a.series.values == b.series.values);
  CHECK(a.series.values != c.series.values);
  // 3% of max: the residual spread sits near 0.03 * K.
  const Vector d = a.series.values - clean(101).series.values;
  const double sd = std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
  CHECK(sd == doctest::Approx(0.03 * 1e6).epsilon(0.25));
}

TEST_CASE("train/test split") {
  auto d = clean(11);
  d.train_fraction = 0.5;
  CHECK(d.train().size() + d.test().size() == 11);
  CHECK(d.train().times(d.train().size() - 1) < d.test().times(0));
}

TEST_CASE("csv round trip") {
  const auto path = std::filesystem::temp_directory_path() / "invlab_logistic_rt.csv";
  const auto d = clean(21);
  write_logistic_csv(path.string(), d.series);
  const TimeSeries back = read_logistic_csv(path.string());
  CHECK(back.times == d.series.times);
  CHECK(back.values == d.series.values);
  std::filesystem::remove(path);
}

TEST_CASE("fit_logistic recovers r and reports a consistent feval") {
  const auto data = clean();
  FitOptions o;
  o.truth = kTruth;
  for (FitMethod m : {FitMethod::bfgs, FitMethod::box, FitMethod::newton, FitMethod::secant}) {
    const auto rep = fit_logistic(data, FitMode::r_only, m, Vector::Constant(1, 0.117), kTruth, o);
    CAPTURE(to_string(m));
    CHECK(rep.converged);
    CHECK(rep.rel_errors(0) < 1e-6);
    const double again = normalized_loss(rep.params_hat, data, FitMode::r_only, kTruth);
    CHECK(std::abs(rep.feval - again) <= 1e-12 * std::max(std::abs(again), 1e-300));
  }
}

TEST_CASE("string conversions reject unknown names") {
  CHECK(fit_method_from_string("bfgs") == FitMethod::bfgs);
  CHECK(to_string(FitMode::r_and_logK) == "r_and_logK");
  CHECK_THROWS_AS(fit_method_from_string("lm"), DomainError);
}

TEST_CASE("closed form is monotone toward K") {
  // Times stay below r t = 20 so the curve has not saturated to K in double precision.
  Rng rng(11);
  std::uniform_real_distribution<double> ur(0.01, 2.0), uk(1.0, 1e6), uf(0.01, 3.0), u01(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double K = uk(rng);
    double f = uf(rng);
    if (std::abs(f - 1.0) < 1e-3) f = 0.5;
    const LogisticParams p{ur(rng), K, f * K, 0.0};
    const double horizon = 20.0 / p.r;
    const double t1 = 0.5 * horizon * u01(rng), t2 = t1 + 0.5 * horizon * (0.01 + u01(rng));
    const double a = logistic_exact(t1, p), b = logistic_exact(t2, p);
    if (p.p0 < K) {
      CHECK(a < b);
      CHECK(b < K);
    } else {
      CHECK(a > b);
      CHECK(b > K);
    }
  }
}

TEST_CASE("log-K and K parameterizations agree") {
  const auto data = clean();
  Rng rng(12);
  std::uniform_real_distribution<double> ur(0.01, 1.0), ulk(std::log(1e5), std::log(1e7));
  for (int i = 0; i < 200; ++i) {
    const double r = ur(rng), lk = ulk(rng);
    const double a = normalized_loss(Vector{{r, lk}}, data, FitMode::r_and_logK, kTruth);
    const double b = normalized_loss(Vector{{r, std::exp(lk)}}, data, FitMode::r_and_K, kTruth);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  FitOptions o;
  const auto ra = fit_logistic(data, FitMode::r_and_logK, FitMethod::bfgs,
                               Vector{{0.117, std::log(1e6)}}, kTruth, o);
  const auto rb = fit_logistic(data, FitMode::r_only, FitMethod::bfgs, Vector::Constant(1, 0.117),
                               kTruth, o);
  CHECK(std::abs(ra.params_hat(0) - rb.params_hat(0)) <= 1e-6 * rb.params_hat(0));
}

TEST_CASE("non-finite models hit the sentinel") {
  const auto data = clean(11);
  CHECK(normalized_loss(Vector::Constant(1, std::nan("")), data, FitMode::r_only, kTruth) ==
        kDivergenceSentinel);
  CHECK(normalized_loss(Vector{{0.1, 0.0}}, data, FitMode::r_and_K, kTruth) ==
        kDivergenceSentinel);
}
